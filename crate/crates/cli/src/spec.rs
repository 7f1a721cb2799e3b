//! Fixture specifications for `generate`, written in TOML:
//!
//! ```toml
//! fixture = "atomic"      # atomic | exponential | lognormal | example
//! degree = 4
//! dim = 1                 # atomic only
//! atoms = [[0.5, 1], [0.5, 2]]   # weight then coordinates
//! # k = 2                 # example only: K = {x2 - x1^k >= 0, x1 >= 0}
//! ```

use serde::Deserialize;
use stieltjes::oracle::{self, ExampleFixture};
use stieltjes::{Atom, AtomicMeasure, MomentSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Atomic,
    Exponential,
    Lognormal,
    Example,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn get(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(x) => x,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub fixture: FixtureKind,
    pub degree: usize,
    pub dim: Option<usize>,
    atoms: Option<Vec<Vec<Number>>>,
    pub k: Option<u32>,
}

/// Generated data: the moments plus, for the curve example, its presentation.
pub struct Generated {
    pub moments: MomentSequence,
    pub example: Option<ExampleFixture>,
}

impl FixtureSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    fn measure(&self, dim: usize) -> Result<AtomicMeasure, String> {
        let rows = self
            .atoms
            .as_ref()
            .ok_or("`atoms` is required for this fixture")?;
        let atoms = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != dim + 1 {
                    return Err(format!("atom {i}: expected weight and {dim} coordinates"));
                }
                Ok(Atom {
                    weight: row[0].get(),
                    point: row[1..].iter().map(|x| x.get()).collect(),
                })
            })
            .collect::<Result<_, _>>()?;
        AtomicMeasure::new(dim, atoms).map_err(|e| e.to_string())
    }

    pub fn generate(&self) -> Result<Generated, String> {
        let only = |field: &str, present: bool| {
            if present {
                Err(format!("`{field}` does not apply to this fixture"))
            } else {
                Ok(())
            }
        };
        match self.fixture {
            FixtureKind::Atomic => {
                only("k", self.k.is_some())?;
                let dim = self.dim.ok_or("`dim` is required for atomic fixtures")?;
                let rho = self.measure(dim)?;
                Ok(Generated {
                    moments: oracle::moments_of_atomic(&rho, self.degree),
                    example: None,
                })
            }
            FixtureKind::Exponential | FixtureKind::Lognormal => {
                only("atoms", self.atoms.is_some())?;
                only("k", self.k.is_some())?;
                if self.dim.is_some_and(|d| d != 1) {
                    return Err("density fixtures are one-dimensional".into());
                }
                let moments = if self.fixture == FixtureKind::Exponential {
                    oracle::moments_exponential(self.degree)
                } else {
                    oracle::moments_lognormal(self.degree)
                };
                Ok(Generated {
                    moments,
                    example: None,
                })
            }
            FixtureKind::Example => {
                let k = self.k.ok_or("`k` is required for the example fixture")?;
                if k == 0 {
                    return Err("`k` must be at least 1".into());
                }
                if self.dim.is_some_and(|d| d != 2) {
                    return Err("the example fixture is two-dimensional".into());
                }
                let rho = self.measure(2)?;
                let fx =
                    oracle::example_fixture(k, &rho, self.degree).map_err(|e| e.to_string())?;
                Ok(Generated {
                    moments: fx.moments.clone(),
                    example: Some(fx),
                })
            }
        }
    }
}
