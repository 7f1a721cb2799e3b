//! Moment and localizing matrices and the numerical PSD test.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moments::MomentSequence;
use crate::poly::{monomials_up_to, MultiIndex, Polynomial};
use crate::rational;

/// Default relative PSD tolerance.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Dense symmetric matrix whose rows and columns are labelled by monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrixWithBasis {
    pub basis: Vec<MultiIndex>,
    pub entries: DMatrix<f64>,
}

impl SymmetricMatrixWithBasis {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub tolerance_used: f64,
}

/// `M_n(s)` with entry `(α, β) = s_{α+β}` over the basis `|α| ≤ n`.
pub fn moment_matrix(s: &MomentSequence, n: usize) -> Result<SymmetricMatrixWithBasis> {
    localizing_matrix(s, &Polynomial::one(s.dim()), n)
}

/// `M_n(f s)` with entry `(α, β) = Σ_γ f_γ s_{α+β+γ}`.
pub fn localizing_matrix(
    s: &MomentSequence,
    f: &Polynomial,
    n: usize,
) -> Result<SymmetricMatrixWithBasis> {
    if f.dim() != s.dim() {
        return Err(Error::DimMismatch {
            expected: s.dim(),
            found: f.dim(),
        });
    }
    let required = 2 * n + f.degree_or_zero();
    if required > s.degree() {
        return Err(Error::DegreeOverflow {
            required,
            available: s.degree(),
        });
    }
    let basis = monomials_up_to(s.dim(), n);
    // entries depend on α+β only
    let mut shifted: HashMap<MultiIndex, f64> = HashMap::new();
    for delta in monomials_up_to(s.dim(), 2 * n) {
        let v = shifted_functional(s, f, &delta)?;
        shifted.insert(delta, v);
    }
    let size = basis.len();
    let entries = DMatrix::from_fn(size, size, |i, j| shifted[&basis[i].add(&basis[j])]);
    Ok(SymmetricMatrixWithBasis { basis, entries })
}

/// `L(f · x^δ)`, exact when the sequence carries exact values.
fn shifted_functional(s: &MomentSequence, f: &Polynomial, delta: &MultiIndex) -> Result<f64> {
    let mut exact = Some(BigRational::zero());
    let mut float = 0.0;
    for (gamma, c) in f.terms() {
        let m = s.moment(&gamma.add(delta))?;
        float += rational::to_f64(c) * m.value;
        exact = match (exact, &m.exact) {
            (Some(acc), Some(r)) => Some(acc + c * r),
            _ => None,
        };
    }
    Ok(match exact {
        Some(r) => rational::to_f64(&r),
        None => float,
    })
}

pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::EigenFailure)
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Maximum absolute row sum.
pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `λ_min ≥ −tol_rel · max(1, ‖M‖_∞)` after symmetrization.
pub fn psd_check(m: &SymmetricMatrixWithBasis, tol_rel: f64) -> Result<PsdVerdict> {
    psd_check_matrix(&m.entries, tol_rel)
}

pub fn psd_check_matrix(m: &DMatrix<f64>, tol_rel: f64) -> Result<PsdVerdict> {
    let sym = symmetrized(m);
    let tolerance_used = tol_rel * inf_norm(&sym).max(1.0);
    if sym.nrows() == 0 {
        return Ok(PsdVerdict {
            is_psd: true,
            min_eigenvalue: 0.0,
            tolerance_used,
        });
    }
    let eig = symmetric_eigen(&sym)?;
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(PsdVerdict {
        is_psd: min_eigenvalue >= -tolerance_used,
        min_eigenvalue,
        tolerance_used,
    })
}

/// Number of singular values `≥ tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&v| v >= tol * max).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizingVerdict {
    pub generator: String,
    pub verdict: PsdVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub level: usize,
    pub moment: PsdVerdict,
    pub localizing: Vec<LocalizingVerdict>,
    pub pass: bool,
}

/// PSD test of `M_n(s)` and every `M_n(f_j s)`. With `fs` the coordinate
/// functions this is the Stieltjes positivity test on `ℝ₊^d`.
pub fn check_hypotheses(
    s: &MomentSequence,
    fs: &[Polynomial],
    n: usize,
    tol_rel: f64,
) -> Result<HypothesisReport> {
    check_hypotheses_with(s, fs, n, tol_rel, Execution::default())
}

pub fn check_hypotheses_with(
    s: &MomentSequence,
    fs: &[Polynomial],
    n: usize,
    tol_rel: f64,
    exec: Execution,
) -> Result<HypothesisReport> {
    let moment = psd_check(&moment_matrix(s, n)?, tol_rel)?;
    let localizing = exec.try_map(fs, |f| {
        let verdict = psd_check(&localizing_matrix(s, f, n)?, tol_rel)?;
        Ok::<_, Error>(LocalizingVerdict {
            generator: f.to_string(),
            verdict,
        })
    })?;
    let pass = moment.is_psd && localizing.iter().all(|l| l.verdict.is_psd);
    Ok(HypothesisReport {
        level: n,
        moment,
        localizing,
        pass,
    })
}

/// Largest `n` with `2n + max_j deg f_j ≤ D`.
pub fn max_level(degree: usize, fs: &[Polynomial]) -> Option<usize> {
    let top = fs.iter().map(Polynomial::degree_or_zero).max().unwrap_or(0);
    degree.checked_sub(top).map(|r| r / 2)
}

/// The coordinate functions `x_1, …, x_d`.
pub fn coordinate_generators(dim: usize) -> Vec<Polynomial> {
    (0..dim).map(|i| Polynomial::var(dim, i)).collect()
}

/// Hankel matrix `(m_{k+l+shift})_{k,l ≤ level}` of a one-dimensional
/// sequence, congruence-scaled by `diag(m_{2k+shift}^{-1/2})`.
///
/// The scaling is computed in the log domain so sequences such as
/// `e^{n²/2}` stay finite; congruence preserves the PSD property.
pub fn equilibrated_hankel(s: &MomentSequence, shift: usize, level: usize) -> Result<DMatrix<f64>> {
    if s.dim() != 1 {
        return Err(Error::DimMismatch {
            expected: 1,
            found: s.dim(),
        });
    }
    let required = 2 * level + shift;
    if required > s.degree() {
        return Err(Error::DegreeOverflow {
            required,
            available: s.degree(),
        });
    }
    let logs: Vec<(f64, f64)> = (0..=required)
        .map(|k| Ok(s.moment(&MultiIndex::new(vec![k as u32]))?.signed_ln()))
        .collect::<Result<_>>()?;
    let half_scale: Vec<f64> = (0..=level)
        .map(|k| {
            let (sign, l) = logs[2 * k + shift];
            if sign > 0.0 && l.is_finite() {
                -0.5 * l
            } else {
                0.0
            }
        })
        .collect();
    let h = DMatrix::from_fn(level + 1, level + 1, |k, l| {
        let (sign, lv) = logs[k + l + shift];
        if lv == f64::NEG_INFINITY {
            0.0
        } else {
            sign * (lv + half_scale[k] + half_scale[l]).exp()
        }
    });
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::AtomicMeasure;
    use crate::oracle;

    fn dm(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
    }

    fn example_generators(k: u32) -> Vec<Polynomial> {
        vec![
            Polynomial::from_int_terms(2, &[(&[0, 1], 1), (&[k, 0], -1)]),
            Polynomial::var(2, 0),
        ]
    }

    #[test]
    fn moment_matrix_examples() {
        let ones = MomentSequence::from_values_1d(&[1.0; 3]).unwrap();
        assert_eq!(
            moment_matrix(&ones, 1).unwrap().entries,
            dm(&[&[1., 1.], &[1., 1.]])
        );

        let fact = MomentSequence::from_values_1d(&[1., 1., 2., 6., 24.]).unwrap();
        assert_eq!(
            moment_matrix(&fact, 2).unwrap().entries,
            dm(&[&[1., 1., 2.], &[1., 2., 6.], &[2., 6., 24.]])
        );

        let delta0 = oracle::moments_of_atomic(
            &AtomicMeasure::from_pairs(2, &[(1.0, &[0.0, 0.0])]).unwrap(),
            2,
        );
        let m = moment_matrix(&delta0, 1).unwrap();
        assert_eq!(m.entry(0, 0), 1.0);
        assert_eq!(m.entries.iter().filter(|v| **v != 0.0).count(), 1);

        assert_eq!(
            moment_matrix(&fact, 3).unwrap_err(),
            Error::DegreeOverflow {
                required: 6,
                available: 4
            }
        );
    }

    #[test]
    fn localizing_examples() {
        let ones = MomentSequence::from_values_1d(&[1.0; 4]).unwrap();
        let l = localizing_matrix(&ones, &Polynomial::var(1, 0), 1).unwrap();
        assert_eq!(l.entries, dm(&[&[1., 1.], &[1., 1.]]));

        let s = oracle::moments_of_atomic(
            &AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 3.0])]).unwrap(),
            4,
        );
        let f1 = &example_generators(2)[0];
        let l = localizing_matrix(&s, f1, 1).unwrap();
        for i in 0..l.size() {
            for j in 0..l.size() {
                let g = l.basis[i].add(&l.basis[j]);
                let e = g.exponents();
                let expected = 2.0 * 3f64.powi(e[1] as i32);
                assert_eq!(l.entry(i, j), expected);
            }
        }

        let z = localizing_matrix(&s, &Polynomial::zero(2), 1).unwrap();
        assert!(z.entries.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn psd_examples() {
        let v = psd_check_matrix(&dm(&[&[1., 1.], &[1., 1.]]), 1e-12).unwrap();
        assert!(v.is_psd);
        assert!(v.min_eigenvalue.abs() < 1e-15);

        let v = psd_check_matrix(&dm(&[&[1., 2.], &[2., 1.]]), 1e-12).unwrap();
        assert!(!v.is_psd);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-14);

        let fact = oracle::moments_exponential(6);
        let v = psd_check(&moment_matrix(&fact, 3).unwrap(), DEFAULT_PSD_TOL).unwrap();
        assert!(v.is_psd);
        assert!(v.min_eigenvalue > 0.0);
    }

    #[test]
    fn psd_rejects_non_finite() {
        let m = dm(&[&[f64::INFINITY, 0.], &[0., 1.]]);
        assert_eq!(psd_check_matrix(&m, 1e-8).unwrap_err(), Error::EigenFailure);
    }

    #[test]
    fn hypotheses_examples() {
        let fs = example_generators(2);
        let on = oracle::moments_of_atomic(
            &AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 3.0])]).unwrap(),
            4,
        );
        assert!(check_hypotheses(&on, &fs, 1, DEFAULT_PSD_TOL).unwrap().pass);

        let off = oracle::moments_of_atomic(
            &AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 0.0])]).unwrap(),
            4,
        );
        let r = check_hypotheses(&off, &fs, 1, DEFAULT_PSD_TOL).unwrap();
        assert!(!r.pass);
        assert!(r.moment.is_psd);
        assert!(!r.localizing[0].verdict.is_psd);
        assert!(r.localizing[1].verdict.is_psd);
        let l0 = localizing_matrix(&off, &fs[0], 0).unwrap();
        assert_eq!(l0.entry(0, 0), -1.0);

        let delta0 = MomentSequence::from_values_1d(&[1., 0., 0., 0., 0.]).unwrap();
        for n in 0..=1 {
            let r =
                check_hypotheses(&delta0, &coordinate_generators(1), n, DEFAULT_PSD_TOL).unwrap();
            assert!(r.pass);
            assert!(r.localizing[0].verdict.min_eigenvalue.abs() < 1e-15);
        }
    }

    #[test]
    fn leading_principal_submatrix() {
        let rho = AtomicMeasure::from_pairs(2, &[(0.3, &[1.0, 2.0]), (0.7, &[0.5, 0.0])]).unwrap();
        let s = oracle::moments_of_atomic(&rho, 6);
        let big = moment_matrix(&s, 3).unwrap();
        let small = moment_matrix(&s, 2).unwrap();
        let k = small.size();
        assert_eq!(big.basis[..k], small.basis[..]);
        assert_eq!(big.entries.view((0, 0), (k, k)), small.entries);
    }

    #[test]
    fn default_level() {
        let fs = example_generators(3);
        assert_eq!(max_level(10, &fs), Some(3));
        assert_eq!(max_level(2, &fs), None);
        assert_eq!(max_level(4, &[]), Some(2));
    }

    #[test]
    fn equilibrated_hankel_is_congruent() {
        let s = oracle::moments_exponential(6);
        let h = equilibrated_hankel(&s, 0, 3).unwrap();
        let raw = moment_matrix(&s, 3).unwrap().entries;
        for k in 0..4 {
            for l in 0..4 {
                let d = (raw[(k, k)] * raw[(l, l)]).sqrt();
                assert!((h[(k, l)] - raw[(k, l)] / d).abs() < 1e-14);
            }
        }
        let ln = oracle::moments_lognormal(60);
        let g = equilibrated_hankel(&ln, 1, 29).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        assert!(psd_check_matrix(&g, DEFAULT_PSD_TOL).unwrap().is_psd);
    }
}
