//! Reproducible Monte Carlo experiments on the largest eigenvalue.
//!
//! Replication `r` draws its noise from a ChaCha8 generator keyed by the
//! master seed and positioned on stream `r`, so results do not depend on
//! the number of worker threads or the order replications finish in.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::EdgeParams;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::wishart::{gram_eigenvalues, sample_data_matrix, CovarianceFactor, EntryLaw};

/// TW2 quantiles and probabilities, to two decimals, used as the default grid.
pub const TW_TABLE_GRID: [(f64, f64); 9] = [
    (-3.73, 0.01),
    (-3.20, 0.05),
    (-2.90, 0.10),
    (-2.27, 0.30),
    (-1.81, 0.50),
    (-1.33, 0.70),
    (-0.60, 0.90),
    (-0.23, 0.95),
    (0.48, 0.99),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub s: f64,
    pub target: f64,
}

pub fn default_grid() -> Vec<GridPoint> {
    TW_TABLE_GRID
        .iter()
        .map(|&(s, target)| GridPoint { s, target })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub model: ModelSpec,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_grid")]
    pub quantile_grid: Vec<GridPoint>,
    #[serde(default)]
    pub entry_law: EntryLaw,
    #[serde(default = "one")]
    pub top_k: usize,
    /// Worker threads; `None` uses the global rayon pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(model: ModelSpec, n: usize, replications: usize, master_seed: u64) -> Self {
        Self {
            n,
            p: model.p(),
            model,
            replications,
            master_seed,
            quantile_grid: default_grid(),
            entry_law: EntryLaw::ComplexGaussian,
            top_k: 1,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::domain("n and p must be positive"));
        }
        if self.model.p() != self.p {
            return Err(Error::domain(format!(
                "model dimension {} does not match p = {}",
                self.model.p(),
                self.p
            )));
        }
        if self.replications == 0 {
            return Err(Error::domain("at least one replication is required"));
        }
        if self.top_k == 0 || self.top_k > self.p {
            return Err(Error::domain(format!(
                "top_k = {} must be in 1..={}",
                self.top_k, self.p
            )));
        }
        if self.quantile_grid.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return Err(Error::domain("quantile grid must be strictly increasing in s"));
        }
        if self.threads == Some(0) {
            return Err(Error::domain("threads must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub s: f64,
    pub target: f64,
    pub f_hat: f64,
    /// `2 sqrt(F_hat (1 - F_hat) / R)`
    pub two_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub edge: EdgeParams,
    pub rows: Vec<ReportRow>,
    /// Mean and standard deviation of `(l_1 - n mu) / (sigma n^{1/3})`.
    pub mean: f64,
    pub sd: f64,
    /// Rescaled largest eigenvalue per replication, in replication order.
    pub samples: Vec<f64>,
    /// Rescaled `top_k` eigenvalues per replication when `top_k > 1`.
    pub top_k_samples: Option<Vec<Vec<f64>>>,
    /// Largest `|sum_i l_i - ||X||_F^2| / ||X||_F^2` seen.
    pub max_trace_error: f64,
    pub rng: String,
    pub wall_time_secs: f64,
}

impl SimReport {
    /// `s,target,F_hat,two_se` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,target,F_hat,two_se")?;
        for r in &self.rows {
            writeln!(out, "{:.2},{:.2},{:.4},{:.4}", r.s, r.target, r.f_hat, r.two_se)?;
        }
        Ok(())
    }

    pub fn csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

pub(crate) fn replication_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

struct Draw {
    top: Vec<f64>,
    trace_error: f64,
}

struct Batch<'a> {
    n: usize,
    factor: &'a CovarianceFactor,
    law: EntryLaw,
    top_k: usize,
    master_seed: u64,
    stream_base: u64,
}

impl Batch<'_> {
    fn draw(&self, r: usize) -> Draw {
        let mut rng = replication_rng(self.master_seed, self.stream_base + r as u64);
        let x = sample_data_matrix(self.n, self.factor, self.law, &mut rng);
        let eigs = gram_eigenvalues(&x);
        let frob: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let trace: f64 = eigs.iter().sum();
        Draw {
            top: eigs[..self.top_k].to_vec(),
            trace_error: (trace - frob).abs() / frob.max(f64::MIN_POSITIVE),
        }
    }

    fn run(&self, replications: usize, threads: Option<usize>) -> Result<Vec<Draw>> {
        let work = || {
            (0..replications)
                .into_par_iter()
                .map(|r| self.draw(r))
                .collect::<Vec<_>>()
        };
        match threads {
            None => Ok(work()),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
                Ok(pool.install(work))
            }
        }
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Empirical distribution of the rescaled largest eigenvalue at the grid points.
pub fn run_edge_monte_carlo(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let start = Instant::now();
    let h = config.model.measure()?;
    let edge = EdgeParams::solve(&h, config.n, config.p)?;
    let factor = CovarianceFactor::from_model(&config.model)?;
    let batch = Batch {
        n: config.n,
        factor: &factor,
        law: config.entry_law,
        top_k: config.top_k,
        master_seed: config.master_seed,
        stream_base: 0,
    };
    let draws = batch.run(config.replications, config.threads)?;

    let samples: Vec<f64> = draws.iter().map(|d| edge.rescale(d.top[0])).collect();
    let r = samples.len() as f64;
    let rows = config
        .quantile_grid
        .iter()
        .map(|g| {
            let f_hat = samples.iter().filter(|&&t| t <= g.s).count() as f64 / r;
            ReportRow {
                s: g.s,
                target: g.target,
                f_hat,
                two_se: 2.0 * (f_hat * (1.0 - f_hat) / r).sqrt(),
            }
        })
        .collect();
    let (mean, sd) = mean_sd(&samples);
    let top_k_samples = (config.top_k > 1).then(|| {
        draws
            .iter()
            .map(|d| d.top.iter().map(|&l| edge.rescale(l)).collect())
            .collect()
    });
    let max_trace_error = draws.iter().map(|d| d.trace_error).fold(0.0, f64::max);

    Ok(SimReport {
        config: config.clone(),
        edge,
        rows,
        mean,
        sd,
        samples,
        top_k_samples,
        max_trace_error,
        rng: "chacha8, stream = replication index".into(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityConfig {
    pub model: ModelSpec,
    /// Fixed `n / p` along the ladder.
    pub ratio: f64,
    pub ladder: Vec<usize>,
    pub entry_law: EntryLaw,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalityRung {
    pub n: usize,
    pub p: usize,
    pub mu: f64,
    pub sigma: f64,
    pub mean_l1_over_n: f64,
    /// `mean(l_1 / n) - mu`
    pub drift: f64,
    /// Standard error of `drift`.
    pub drift_se: f64,
    /// `sigma n^{-2/3}`, the fluctuation scale of `l_1 / n`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub rungs: Vec<UniversalityRung>,
    /// `|drift|` strictly decreases along the ladder.
    pub decreasing: bool,
    /// Final `|drift| < 5 sigma n^{-2/3}`.
    pub final_within: bool,
}

impl UniversalityReport {
    pub fn passed(&self) -> bool {
        self.decreasing && self.final_within
    }
}

/// Tracks `mean(l_1/n) - mu` along a ladder of dimensions at fixed `n/p`.
pub fn run_universality(config: &UniversalityConfig) -> Result<UniversalityReport> {
    if config.ladder.is_empty() || config.replications < 2 {
        return Err(Error::domain("need a nonempty ladder and at least two replications"));
    }
    if !(config.ratio >= 1.0) {
        return Err(Error::domain(format!("n/p = {} must be at least 1", config.ratio)));
    }
    let mut rungs = Vec::with_capacity(config.ladder.len());
    for (idx, &p) in config.ladder.iter().enumerate() {
        let model = config.model.with_dimension(p)?;
        let n = (config.ratio * p as f64).round() as usize;
        let edge = EdgeParams::solve(&model.measure()?, n, p)?;
        let factor = CovarianceFactor::from_model(&model)?;
        let batch = Batch {
            n,
            factor: &factor,
            law: config.entry_law,
            top_k: 1,
            master_seed: config.master_seed,
            stream_base: (idx as u64) << 32,
        };
        let draws = batch.run(config.replications, config.threads)?;
        let scaled: Vec<f64> = draws.iter().map(|d| d.top[0] / n as f64).collect();
        let (mean, sd) = mean_sd(&scaled);
        rungs.push(UniversalityRung {
            n,
            p,
            mu: edge.mu,
            sigma: edge.sigma,
            mean_l1_over_n: mean,
            drift: mean - edge.mu,
            drift_se: sd / (scaled.len() as f64).sqrt(),
            scale: edge.sigma * (n as f64).powf(-2.0 / 3.0),
        });
    }
    let decreasing = rungs.windows(2).all(|w| w[1].drift.abs() < w[0].drift.abs());
    let last = rungs.last().expect("nonempty ladder");
    let final_within = last.drift.abs() < 5.0 * last.scale;
    Ok(UniversalityReport {
        rungs,
        decreasing,
        final_within,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub radius: f64,
    /// Empirical `P(|s_1 - m| > r)`.
    pub empirical: f64,
    pub se: f64,
    /// `2 exp(-n r^2 / lambda_1)`
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Empirical median of `s_1 = sqrt(l_1 / n)`.
    pub median: f64,
    pub lambda1: f64,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub const CONCENTRATION_MIN_REPLICATIONS: usize = 1000;

/// Compares the spread of `s_1 = sqrt(l_1/n)` around its empirical median
/// with the Gaussian concentration bound `2 exp(-n r^2 / lambda_1)`.
pub fn run_concentration(config: &SimConfig, radii: &[f64]) -> Result<ConcentrationReport> {
    config.validate()?;
    if config.replications < CONCENTRATION_MIN_REPLICATIONS {
        return Err(Error::domain(format!(
            "concentration check needs at least {CONCENTRATION_MIN_REPLICATIONS} replications"
        )));
    }
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::domain("radii must be non-negative"));
    }
    let h = config.model.measure()?;
    let lambda1 = h.lambda_max();
    let factor = CovarianceFactor::from_model(&config.model)?;
    let batch = Batch {
        n: config.n,
        factor: &factor,
        law: config.entry_law,
        top_k: 1,
        master_seed: config.master_seed,
        stream_base: 0,
    };
    let draws = batch.run(config.replications, config.threads)?;
    let n = config.n as f64;
    let mut s1: Vec<f64> = draws.iter().map(|d| (d.top[0] / n).sqrt()).collect();
    s1.sort_by(f64::total_cmp);
    let m = s1.len();
    let median = if m % 2 == 1 {
        s1[m / 2]
    } else {
        0.5 * (s1[m / 2 - 1] + s1[m / 2])
    };
    let rows = radii
        .iter()
        .map(|&radius| {
            let empirical = s1.iter().filter(|&&s| (s - median).abs() > radius).count() as f64 / m as f64;
            let se = (empirical * (1.0 - empirical) / m as f64).sqrt();
            let bound = 2.0 * (-n * radius * radius / lambda1).exp();
            ConcentrationRow {
                radius,
                empirical,
                se,
                bound,
                pass: empirical <= bound + 3.0 * se,
            }
        })
        .collect();
    Ok(ConcentrationReport { median, lambda1, rows })
}
