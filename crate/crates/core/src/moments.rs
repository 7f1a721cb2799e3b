//! Truncated moment sequences, atomic measures and the Riesz functional.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{monomials_up_to, MultiIndex, Polynomial};
use crate::rational;

/// One entry `s_α`.
///
/// `value` is always present (saturated to `f64::MAX` when only the log is
/// meaningful). `log` carries `ln s_α` for entries generated in the log
/// domain; `exact` carries the exact rational when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub log: Option<f64>,
    pub exact: Option<BigRational>,
}

impl Moment {
    pub fn float(value: f64) -> Self {
        Moment {
            value,
            log: None,
            exact: None,
        }
    }

    pub fn exact(r: BigRational) -> Self {
        Moment {
            value: rational::to_f64(&r),
            log: None,
            exact: Some(r),
        }
    }

    /// Entry known by its logarithm; the double is clamped to the finite range.
    pub fn from_log(log: f64) -> Self {
        let value = if log > f64::MAX.ln() {
            f64::MAX
        } else {
            log.exp()
        };
        Moment {
            value,
            log: Some(log),
            exact: None,
        }
    }

    /// `ln s_α`: `-inf` for a zero moment, `None` for a negative one.
    pub fn ln(&self) -> Option<f64> {
        if let Some(l) = self.log {
            return Some(l);
        }
        if let Some(r) = &self.exact {
            if r.is_zero() {
                return Some(f64::NEG_INFINITY);
            }
            return rational::ln_positive(r);
        }
        if self.value > 0.0 {
            Some(self.value.ln())
        } else if self.value == 0.0 {
            Some(f64::NEG_INFINITY)
        } else {
            None
        }
    }
}

impl Moment {
    /// `(sign, ln |s_α|)`; the log is `-inf` for a zero entry.
    pub fn signed_ln(&self) -> (f64, f64) {
        match self.ln() {
            Some(l) => (1.0, l),
            None => {
                let mag = match &self.exact {
                    Some(r) => rational::ln_positive(&-r.clone()).unwrap_or(f64::NEG_INFINITY),
                    None => (-self.value).ln(),
                };
                (-1.0, mag)
            }
        }
    }
}

/// Real `d`-sequence `(s_α)` complete up to total degree `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    dim: usize,
    degree: usize,
    entries: BTreeMap<MultiIndex, Moment>,
}

impl MomentSequence {
    /// Validate completeness: every `|α| ≤ D` present exactly once.
    pub fn new(dim: usize, degree: usize, entries: BTreeMap<MultiIndex, Moment>) -> Result<Self> {
        for alpha in entries.keys() {
            if alpha.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: alpha.dim(),
                });
            }
            if alpha.degree() > degree {
                return Err(Error::UnexpectedMoment(alpha.clone()));
            }
        }
        for alpha in monomials_up_to(dim, degree) {
            if !entries.contains_key(&alpha) {
                return Err(Error::MissingMoment(alpha));
            }
        }
        let s0 = &entries[&MultiIndex::zero(dim)];
        if !s0.value.is_finite() {
            return Err(Error::NonFiniteMass);
        }
        Ok(MomentSequence {
            dim,
            degree,
            entries,
        })
    }

    pub fn from_fn<F>(dim: usize, degree: usize, f: F) -> Self
    where
        F: Fn(&MultiIndex) -> Moment,
    {
        let entries = monomials_up_to(dim, degree)
            .into_iter()
            .map(|a| {
                let m = f(&a);
                (a, m)
            })
            .collect();
        MomentSequence::new(dim, degree, entries).expect("from_fn covers every multi-index")
    }

    /// One-dimensional sequence from plain values `s_0..s_D`.
    pub fn from_values_1d(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty moment list".into()));
        }
        Ok(Self::from_fn(1, values.len() - 1, |a| {
            Moment::float(values[a.degree()])
        }))
    }

    /// Values in ascending graded order; for `d = 1` this is `s_0..s_D`.
    pub fn values_1d(&self) -> Vec<f64> {
        self.entries.values().map(|m| m.value).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &Moment)> {
        self.entries.iter()
    }

    pub fn moment(&self, alpha: &MultiIndex) -> Result<&Moment> {
        if alpha.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: alpha.dim(),
            });
        }
        if alpha.degree() > self.degree {
            return Err(Error::DegreeOverflow {
                required: alpha.degree(),
                available: self.degree,
            });
        }
        self.entries
            .get(alpha)
            .ok_or_else(|| Error::MissingMoment(alpha.clone()))
    }

    pub fn value(&self, alpha: &MultiIndex) -> Result<f64> {
        self.moment(alpha).map(|m| m.value)
    }

    pub fn mass(&self) -> f64 {
        self.entries[&MultiIndex::zero(self.dim)].value
    }

    /// True when every entry carries an exact rational.
    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|m| m.exact.is_some())
    }

    /// The same data truncated to degree `e ≤ D`.
    pub fn truncate(&self, e: usize) -> Result<MomentSequence> {
        if e > self.degree {
            return Err(Error::DegreeOverflow {
                required: e,
                available: self.degree,
            });
        }
        let entries = self
            .entries
            .iter()
            .filter(|(a, _)| a.degree() <= e)
            .map(|(a, m)| (a.clone(), m.clone()))
            .collect();
        MomentSequence::new(self.dim, e, entries)
    }

    /// One-dimensional marginal `(s_{n e_j})_{n ≤ D}`, keeping log and exact data.
    pub fn axis_marginal(&self, j: usize) -> Result<MomentSequence> {
        if j >= self.dim {
            return Err(Error::InvalidInput(format!(
                "axis {j} out of range for dim {}",
                self.dim
            )));
        }
        let entries = (0..=self.degree)
            .map(|n| {
                let m = self.entries[&MultiIndex::axis(self.dim, j, n as u32)].clone();
                (MultiIndex::new(vec![n as u32]), m)
            })
            .collect();
        MomentSequence::new(1, self.degree, entries)
    }

    /// Multiply every entry by `c > 0` (logs shift by `ln c`).
    pub fn scaled(&self, c: f64) -> MomentSequence {
        let exact_c = rational::from_f64_decimal(c);
        let entries = self
            .entries
            .iter()
            .map(|(a, m)| {
                let scaled = Moment {
                    value: m.value * c,
                    log: m.log.map(|l| l + c.ln()),
                    exact: match (&m.exact, &exact_c) {
                        (Some(r), Some(q)) => Some(r * q),
                        _ => None,
                    },
                };
                (a.clone(), scaled)
            })
            .collect();
        MomentSequence {
            dim: self.dim,
            degree: self.degree,
            entries,
        }
    }

    pub(crate) fn map_entries<F>(&self, f: F) -> MomentSequence
    where
        F: Fn(&MultiIndex, &Moment) -> Moment,
    {
        let entries = self
            .entries
            .iter()
            .map(|(a, m)| (a.clone(), f(a, m)))
            .collect();
        MomentSequence {
            dim: self.dim,
            degree: self.degree,
            entries,
        }
    }
}

/// `L_s(p) = Σ p_α s_α`.
pub fn riesz_eval(s: &MomentSequence, p: &Polynomial) -> Result<f64> {
    check_poly(s, p)?;
    let mut acc = 0.0;
    for (alpha, c) in p.terms() {
        acc += rational::to_f64(c) * s.value(alpha)?;
    }
    Ok(acc)
}

/// Exact `L_s(p)`; `Ok(None)` when some needed entry has no exact value.
pub fn riesz_eval_exact(s: &MomentSequence, p: &Polynomial) -> Result<Option<BigRational>> {
    check_poly(s, p)?;
    let mut acc = BigRational::zero();
    for (alpha, c) in p.terms() {
        match &s.moment(alpha)?.exact {
            Some(r) => acc += c * r,
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

fn check_poly(s: &MomentSequence, p: &Polynomial) -> Result<()> {
    if p.dim() != s.dim() {
        return Err(Error::DimMismatch {
            expected: s.dim(),
            found: p.dim(),
        });
    }
    let deg = p.degree_or_zero();
    if deg > s.degree() {
        return Err(Error::DegreeOverflow {
            required: deg,
            available: s.degree(),
        });
    }
    Ok(())
}

/// Default separation below which two atoms count as the same point.
pub const TOL_ATOM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Finite positive combination of point masses on `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if a.point.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: a.point.len(),
                });
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has weight {}",
                    a.weight
                )));
            }
            if a.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "atom {i} has a non-finite coordinate"
                )));
            }
        }
        for i in 0..atoms.len() {
            for j in 0..i {
                if sup_distance(&atoms[i].point, &atoms[j].point) <= TOL_ATOM {
                    return Err(Error::InvalidInput(format!("atoms {j} and {i} coincide")));
                }
            }
        }
        Ok(AtomicMeasure { dim, atoms })
    }

    /// Convenience constructor from `(weight, point)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, &[f64])]) -> Result<Self> {
        Self::new(
            dim,
            pairs
                .iter()
                .map(|(w, x)| Atom {
                    point: x.to_vec(),
                    weight: *w,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ p dρ`.
    pub fn integrate(&self, p: &Polynomial) -> Result<f64> {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.weight * p.eval(&a.point)?;
        }
        Ok(acc)
    }

    /// Atoms sorted by point (lexicographic), for order-free comparisons.
    pub fn sorted(&self) -> AtomicMeasure {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| {
            a.point
                .iter()
                .zip(&b.point)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        AtomicMeasure {
            dim: self.dim,
            atoms,
        }
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Hausdorff distance (sup-norm on points) between the supports.
pub fn hausdorff_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
    let directed = |p: &AtomicMeasure, q: &AtomicMeasure| {
        p.atoms
            .iter()
            .map(|x| {
                q.atoms
                    .iter()
                    .map(|y| sup_distance(&x.point, &y.point))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    directed(a, b).max(directed(b, a))
}

/// Largest `|s_α − ∫ x^α dρ| / max(1, |s_α|)` over `|α| ≤ max_degree`.
pub fn moment_residual(s: &MomentSequence, rho: &AtomicMeasure, max_degree: usize) -> Result<f64> {
    if rho.dim() != s.dim() {
        return Err(Error::DimMismatch {
            expected: s.dim(),
            found: rho.dim(),
        });
    }
    let mut worst: f64 = 0.0;
    for (alpha, m) in s.entries().filter(|(a, _)| a.degree() <= max_degree) {
        let fitted: f64 = rho
            .atoms()
            .iter()
            .map(|a| a.weight * alpha.eval(&a.point))
            .sum();
        let target = m.value;
        worst = worst.max((fitted - target).abs() / target.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn x1sq_plus_1() -> Polynomial {
        Polynomial::from_int_terms(1, &[(&[2], 1), (&[0], 1)])
    }

    #[test]
    fn riesz_on_all_ones() {
        let s = MomentSequence::from_values_1d(&[1.0; 5]).unwrap();
        assert_eq!(riesz_eval(&s, &x1sq_plus_1()).unwrap(), 2.0);
    }

    #[test]
    fn riesz_on_two_atoms() {
        // moments of 0.5δ_1 + 0.5δ_4
        let s = MomentSequence::from_values_1d(&[1.0, 2.5, 8.5]).unwrap();
        let p = Polynomial::from_int_terms(1, &[(&[2], 1), (&[1], -1)]);
        assert_eq!(riesz_eval(&s, &p).unwrap(), 6.0);
    }

    #[test]
    fn riesz_of_zero_is_zero() {
        let s = MomentSequence::from_values_1d(&[3.0, -1.0, 7.0]).unwrap();
        assert_eq!(riesz_eval(&s, &Polynomial::zero(1)).unwrap(), 0.0);
    }

    #[test]
    fn riesz_errors() {
        let s = MomentSequence::from_values_1d(&[1.0, 1.0]).unwrap();
        assert_eq!(
            riesz_eval(&s, &x1sq_plus_1()).unwrap_err(),
            Error::DegreeOverflow {
                required: 2,
                available: 1
            }
        );
        assert!(matches!(
            riesz_eval(&s, &Polynomial::var(2, 0)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn missing_entries_are_rejected() {
        let mut entries = BTreeMap::new();
        entries.insert(MultiIndex::new(vec![0, 0]), Moment::float(1.0));
        entries.insert(MultiIndex::new(vec![1, 0]), Moment::float(1.0));
        let err = MomentSequence::new(2, 1, entries).unwrap_err();
        assert_eq!(err, Error::MissingMoment(MultiIndex::new(vec![0, 1])));
    }

    #[test]
    fn exact_riesz() {
        let s = MomentSequence::from_fn(1, 2, |a| {
            Moment::exact(BigRational::from_integer(BigInt::from(
                a.degree() as i64 + 1,
            )))
        });
        let v = riesz_eval_exact(&s, &x1sq_plus_1()).unwrap().unwrap();
        assert_eq!(v, BigRational::from_integer(BigInt::from(4)));
        let f = MomentSequence::from_values_1d(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(riesz_eval_exact(&f, &x1sq_plus_1()).unwrap(), None);
    }

    #[test]
    fn log_moments_clamp() {
        let m = Moment::from_log(800.0);
        assert_eq!(m.value, f64::MAX);
        assert_eq!(m.ln(), Some(800.0));
        assert_eq!(Moment::float(0.0).ln(), Some(f64::NEG_INFINITY));
        assert_eq!(Moment::float(-1.0).ln(), None);
    }

    #[test]
    fn atomic_measure_validation() {
        assert!(AtomicMeasure::from_pairs(1, &[(0.0, &[1.0])]).is_err());
        assert!(AtomicMeasure::from_pairs(1, &[(0.5, &[1.0]), (0.5, &[1.0])]).is_err());
        assert!(AtomicMeasure::from_pairs(2, &[(0.5, &[1.0])]).is_err());
        assert!(AtomicMeasure::new(2, vec![]).unwrap().is_empty());
    }
}
