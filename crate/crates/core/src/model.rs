//! Population covariance models and their text format.
//!
//! A model file is a flat list of `key = value` lines. `#` starts a comment;
//! blank lines are ignored. Lists are comma separated.
//!
//! ```text
//! # Toeplitz(1, 0.2, 0.3) in dimension 50
//! kind = toeplitz
//! coefficients = 1, 0.2, 0.3
//! p = 50
//! ```
//!
//! | kind          | required keys             | optional |
//! |---------------|---------------------------|----------|
//! | `eigenvalues` | `values`                  | `p` (must equal the count) |
//! | `atoms`       | `values`, `masses`, `p`   |          |
//! | `toeplitz`    | `coefficients`, `p`       |          |
//! | `interval`    | `zeta`, `xi`, `p`         |          |
//!
//! Any other key, a key that the kind does not use, or a repeated key is an error.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{IntervalSpec, SpectralMeasure, ToeplitzSpec};

const KEYS: [&str; 7] = ["kind", "values", "masses", "coefficients", "p", "zeta", "xi"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Eigenvalues {
        values: Vec<f64>,
    },
    Atoms {
        values: Vec<f64>,
        masses: Vec<f64>,
        p: usize,
    },
    Toeplitz(ToeplitzSpec),
    Interval(IntervalSpec),
}

impl ModelSpec {
    pub fn identity(p: usize) -> Self {
        ModelSpec::Atoms {
            values: vec![1.0],
            masses: vec![1.0],
            p,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            ModelSpec::Eigenvalues { values } => values.len(),
            ModelSpec::Atoms { p, .. } => *p,
            ModelSpec::Toeplitz(t) => t.p(),
            ModelSpec::Interval(i) => i.p(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Eigenvalues { .. } => "eigenvalues",
            ModelSpec::Atoms { .. } => "atoms",
            ModelSpec::Toeplitz(_) => "toeplitz",
            ModelSpec::Interval(_) => "interval",
        }
    }

    /// Population spectral distribution of the model.
    pub fn measure(&self) -> Result<SpectralMeasure> {
        match self {
            ModelSpec::Eigenvalues { values } => SpectralMeasure::from_eigenvalues(values),
            ModelSpec::Atoms { values, masses, p } => SpectralMeasure::from_atoms(values, masses, *p),
            ModelSpec::Toeplitz(t) => t.eigenvalues(),
            ModelSpec::Interval(i) => i.measure(),
        }
    }

    /// The same model family in dimension `p`.
    pub fn with_dimension(&self, p: usize) -> Result<Self> {
        Ok(match self {
            ModelSpec::Eigenvalues { values } if values.len() == p => self.clone(),
            ModelSpec::Eigenvalues { values } => {
                return Err(Error::domain(format!(
                    "an explicit list of {} eigenvalues cannot be resized to p = {p}",
                    values.len()
                )))
            }
            ModelSpec::Atoms { values, masses, .. } => ModelSpec::Atoms {
                values: values.clone(),
                masses: masses.clone(),
                p,
            },
            ModelSpec::Toeplitz(t) => ModelSpec::Toeplitz(ToeplitzSpec::new(t.coefficients().to_vec(), p)?),
            ModelSpec::Interval(i) => ModelSpec::Interval(IntervalSpec::new(i.zeta(), i.xi(), p)?),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown key `{key}`"),
                });
            }
            if entries.insert(key, (line_no, value.trim())).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }

        let (kind_line, kind) = *entries.get("kind").ok_or(Error::Parse {
            line: 0,
            msg: "missing `kind`".into(),
        })?;
        let allowed: &[&str] = match kind {
            "eigenvalues" => &["kind", "values", "p"],
            "atoms" => &["kind", "values", "masses", "p"],
            "toeplitz" => &["kind", "coefficients", "p"],
            "interval" => &["kind", "zeta", "xi", "p"],
            other => {
                return Err(Error::Parse {
                    line: kind_line,
                    msg: format!("unknown kind `{other}` (expected eigenvalues, atoms, toeplitz or interval)"),
                })
            }
        };
        if let Some((key, (line, _))) = entries.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::Parse {
                line: *line,
                msg: format!("key `{key}` is not used by kind `{kind}`"),
            });
        }

        let get = |key: &str| -> Result<(usize, &str)> {
            entries.get(key).copied().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("kind `{kind}` requires `{key}`"),
            })
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            let (line, value) = get(key)?;
            parse_list(value).map_err(|msg| Error::Parse { line, msg })
        };
        let real = |key: &str| -> Result<f64> {
            let (line, value) = get(key)?;
            value.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{key}` is not a number: `{value}`"),
            })
        };
        let dim = |key: &str| -> Result<usize> {
            let (line, value) = get(key)?;
            value.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{key}` is not a positive integer: `{value}`"),
            })
        };
        // Domain errors from constructors are reported against the kind line.
        let at_kind = |e: Error| match e {
            Error::Domain(msg) => Error::Parse { line: kind_line, msg },
            other => other,
        };

        let spec = match kind {
            "eigenvalues" => {
                let values = list("values")?;
                if entries.contains_key("p") && dim("p")? != values.len() {
                    let line = entries["p"].0;
                    return Err(Error::Parse {
                        line,
                        msg: format!("p does not match the {} values", values.len()),
                    });
                }
                SpectralMeasure::from_eigenvalues(&values).map_err(at_kind)?;
                ModelSpec::Eigenvalues { values }
            }
            "atoms" => {
                let (values, masses, p) = (list("values")?, list("masses")?, dim("p")?);
                SpectralMeasure::from_atoms(&values, &masses, p).map_err(at_kind)?;
                ModelSpec::Atoms { values, masses, p }
            }
            "toeplitz" => ModelSpec::Toeplitz(ToeplitzSpec::new(list("coefficients")?, dim("p")?).map_err(at_kind)?),
            _ => ModelSpec::Interval(IntervalSpec::new(real("zeta")?, real("xi")?, dim("p")?).map_err(at_kind)?),
        };
        Ok(spec)
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|s| s.trim())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind = {}", self.kind())?;
        match self {
            ModelSpec::Eigenvalues { values } => writeln!(f, "values = {}", join(values)),
            ModelSpec::Atoms { values, masses, p } => {
                writeln!(f, "values = {}", join(values))?;
                writeln!(f, "masses = {}", join(masses))?;
                writeln!(f, "p = {p}")
            }
            ModelSpec::Toeplitz(t) => {
                writeln!(f, "coefficients = {}", join(t.coefficients()))?;
                writeln!(f, "p = {}", t.p())
            }
            ModelSpec::Interval(i) => {
                writeln!(f, "zeta = {:?}", i.zeta())?;
                writeln!(f, "xi = {:?}", i.xi())?;
                writeln!(f, "p = {}", i.p())
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_each_kind() {
        let t: ModelSpec = "# table one\nkind = toeplitz\ncoefficients = 1, 0.2, 0.3\np = 50\n"
            .parse()
            .unwrap();
        assert_eq!(
            t,
            ModelSpec::Toeplitz(ToeplitzSpec::new(vec![1.0, 0.2, 0.3], 50).unwrap())
        );

        let a: ModelSpec = "kind = atoms\nvalues = 10, 1\nmasses = 0.3, 0.7 # thirty spikes\np = 100"
            .parse()
            .unwrap();
        assert_eq!(a.p(), 100);
        assert_eq!(a.measure().unwrap().lambda_max(), 10.0);

        let e: ModelSpec = "kind = eigenvalues\nvalues = 3, 2, 1".parse().unwrap();
        assert_eq!(e.p(), 3);

        let i: ModelSpec = "kind=interval\nzeta=0.5\nxi=2\np=20".parse().unwrap();
        assert_eq!(i.measure().unwrap().atoms().len(), 20);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            ("kind = toeplitz\ncoefficients = 1\np = 5\nwidth = 3", 4),
            ("kind = toeplitz\ncoefficients = 1\ncoefficients = 2\np = 5", 3),
            ("kind = toeplitz\ncoefficients = 1, x\np = 5", 2),
            ("kind = toeplitz\ncoefficients = 1\np = 5\nzeta = 1", 4),
            ("kind = circulant\np = 5", 1),
            ("kind = atoms\nvalues = 1, 2\nmasses = 0.5\np = 2", 1),
            ("kind toeplitz", 1),
            ("kind = eigenvalues\nvalues = 1, 2\np = 3", 3),
            ("kind = eigenvalues\nvalues = 1, -2", 1),
        ];
        for (text, line) in cases {
            match ModelSpec::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
        assert!(ModelSpec::parse("kind = toeplitz\np = 5").is_err());
        assert!(ModelSpec::parse("").is_err());
    }

    #[test]
    fn resizes() {
        let t = ModelSpec::Toeplitz(ToeplitzSpec::new(vec![1.0, 0.2], 10).unwrap());
        assert_eq!(t.with_dimension(40).unwrap().p(), 40);
        assert_eq!(ModelSpec::identity(5).with_dimension(7).unwrap().p(), 7);
        let e = ModelSpec::Eigenvalues { values: vec![1.0, 2.0] };
        assert!(e.with_dimension(3).is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
        prop_oneof![
            prop::collection::vec(0.01f64..1e3, 1..8).prop_map(|values| ModelSpec::Eigenvalues { values }),
            (prop::collection::vec(-0.3f64..0.3, 0..4), 5usize..60).prop_map(|(mut c, p)| {
                c.insert(0, 1.0);
                ModelSpec::Toeplitz(ToeplitzSpec::new(c, p).unwrap())
            }),
            (0.01f64..5.0, 0.01f64..5.0, 1usize..100)
                .prop_map(|(z, w, p)| ModelSpec::Interval(IntervalSpec::new(z, z + w, p).unwrap())),
        ]
    }

    proptest! {
        #[test]
        fn text_round_trip(spec in spec_strategy()) {
            let back: ModelSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
