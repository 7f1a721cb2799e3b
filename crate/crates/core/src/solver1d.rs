//! Atomic representing measures for one-dimensional truncated moment data.
//!
//! The orthonormal polynomials of the Hankel inner product satisfy a
//! three-term recurrence whose coefficients form a Jacobi matrix; its
//! eigenvalues are the nodes and the squared first eigenvector components
//! (times `s_0`) the weights of the Gaussian quadrature.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::{numerical_rank, psd_check_matrix, symmetric_eigen};
use crate::moments::{moment_residual, Atom, AtomicMeasure, Moment, MomentSequence};
use crate::poly::MultiIndex;
use crate::rational;

/// Symmetric tridiagonal matrix with `diagonal.len() = off_diagonal.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl JacobiMatrix {
    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for (i, a) in self.diagonal.iter().enumerate() {
            m[(i, i)] = *a;
        }
        for (i, b) in self.off_diagonal.iter().enumerate() {
            m[(i, i + 1)] = *b;
            m[(i + 1, i)] = *b;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Relative singular-value cutoff for the rank decision.
    pub rank_tol: f64,
    /// Relative moment-reproduction tolerance.
    pub validation_tol: f64,
    /// Nodes in `[-node_tol, 0)` are clamped to zero.
    pub node_tol: f64,
    pub psd_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rank_tol: 1e-10,
            validation_tol: 1e-8,
            node_tol: 1e-6,
            psd_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quadrature1d {
    pub measure: AtomicMeasure,
    pub jacobi: JacobiMatrix,
    /// Numerical rank of the moment matrix.
    pub rank: usize,
    pub stieltjes_supported: bool,
    /// Indices of nodes that were clamped from slightly negative to zero.
    pub clamped: Vec<usize>,
    pub max_residual: f64,
}

/// Sequence recentred, rescaled to unit mass and unit coordinate scale.
pub(crate) struct Equilibrated {
    pub moments: MomentSequence,
    /// `x_j = centers[j] + scales[j] · x̂_j`.
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    pub mass: f64,
}

impl Equilibrated {
    pub fn restore(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.centers)
            .zip(&self.scales)
            .map(|((x, a), c)| a + c * x)
            .collect()
    }
}

/// Exact moments of `x − a` with `a` a short dyadic near the mean. Without
/// this, clusters far from the origin lose most of their digits.
fn center_exact(s: &MomentSequence) -> Option<(MomentSequence, Vec<f64>)> {
    if !s.is_exact() || s.degree() == 0 {
        return None;
    }
    let dim = s.dim();
    let degree = s.degree();
    let mut cur: BTreeMap<MultiIndex, BigRational> = s
        .entries()
        .map(|(a, m)| Some((a.clone(), m.exact.clone()?)))
        .collect::<Option<_>>()?;
    let zero = cur.get(&MultiIndex::zero(dim))?.clone();
    let mut centers = Vec::with_capacity(dim);
    for j in 0..dim {
        let mean = rational::to_f64(&(cur.get(&MultiIndex::axis(dim, j, 1))? / &zero));
        let a = BigRational::new(
            BigInt::from_f64((mean * 1024.0).round())?,
            BigInt::from(1024),
        );
        centers.push(rational::to_f64(&a));
        if a.is_zero() {
            continue;
        }
        // rows[k][i] = C(k, i) (−a)^(k−i)
        let b = -a;
        let mut rows: Vec<Vec<BigRational>> = vec![vec![BigRational::one()]];
        for k in 1..=degree {
            let prev = &rows[k - 1];
            let row = (0..=k)
                .map(|i| {
                    let mut v = BigRational::zero();
                    if i > 0 {
                        v += &prev[i - 1];
                    }
                    if i < k {
                        v += &prev[i] * &b;
                    }
                    v
                })
                .collect();
            rows.push(row);
        }
        cur = cur
            .keys()
            .map(|alpha| {
                let e = alpha.exponents();
                let mut beta = e.to_vec();
                let mut total = BigRational::zero();
                for (i, c) in rows[e[j] as usize].iter().enumerate() {
                    beta[j] = i as u32;
                    total += c * &cur[&MultiIndex::new(beta.clone())];
                }
                (alpha.clone(), total)
            })
            .collect();
    }
    let moved = s.map_entries(|alpha, _| Moment::exact(cur[alpha].clone()));
    Some((moved, centers))
}

/// `t_α = s_α / (s_0 · c^α)` with `c_j = (s_{2n e_j} / s_0)^{1/(2n)}`, after
/// recentring when the data is exact.
pub(crate) fn equilibrate(s: &MomentSequence, level: usize) -> Result<Equilibrated> {
    let dim = s.dim();
    let zero = s.moment(&MultiIndex::zero(dim))?.clone();
    let positive = match &zero.exact {
        Some(r) => r.is_positive(),
        None => zero.value > 0.0,
    };
    if !positive {
        let vanishes = match &zero.exact {
            Some(r) => r.is_zero(),
            None => zero.value == 0.0,
        };
        return Err(if vanishes {
            Error::TrivialFunctional
        } else {
            Error::NotPositive(zero.value)
        });
    }
    let (centered, centers) = match center_exact(s) {
        Some((c, a)) => (Some(c), a),
        None => (None, vec![0.0; dim]),
    };
    let s = centered.as_ref().unwrap_or(s);
    let ln0 = zero.ln().expect("positive mass");
    let top = (2 * level).min(s.degree());
    let mut ln_scales = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut ln_c = 0.0;
        if top > 0 {
            let (sign, l) = s.moment(&MultiIndex::axis(dim, j, top as u32))?.signed_ln();
            if sign > 0.0 && l.is_finite() {
                ln_c = (l - ln0) / top as f64;
            }
        }
        ln_scales.push(ln_c);
    }
    let scales: Vec<f64> = ln_scales.iter().map(|l| l.exp()).collect();
    let moments = s.map_entries(|alpha, m| {
        let shift: f64 = alpha
            .exponents()
            .iter()
            .zip(&ln_scales)
            .map(|(&e, l)| e as f64 * l)
            .sum();
        let direct = match (&m.exact, &zero.exact) {
            (Some(r), Some(r0)) => Some(rational::to_f64(&(r / r0))),
            _ if m.log.is_none() && m.value.is_finite() => Some(m.value / zero.value),
            _ => None,
        };
        let value = match direct {
            Some(v) if v.is_finite() && v.abs() < f64::MAX => {
                let denom: f64 = alpha
                    .exponents()
                    .iter()
                    .zip(&scales)
                    .map(|(&e, c)| c.powi(e as i32))
                    .product();
                if denom.is_finite() && denom > 0.0 {
                    v / denom
                } else {
                    let (sign, l) = m.signed_ln();
                    sign * (l - ln0 - shift).exp()
                }
            }
            _ => {
                let (sign, l) = m.signed_ln();
                sign * (l - ln0 - shift).exp()
            }
        };
        Moment::float(value)
    });
    Ok(Equilibrated {
        moments,
        centers,
        scales,
        mass: zero.value,
    })
}

/// Gaussian quadrature with `rank` nodes reproducing `s_0..s_{2·rank−1}`.
pub fn stieltjes_solve_1d(s: &MomentSequence, tol: f64) -> Result<Quadrature1d> {
    stieltjes_solve_1d_with(
        s,
        &SolveOptions {
            rank_tol: tol,
            ..SolveOptions::default()
        },
    )
}

pub fn stieltjes_solve_1d_with(s: &MomentSequence, opts: &SolveOptions) -> Result<Quadrature1d> {
    if s.dim() != 1 {
        return Err(Error::DimMismatch {
            expected: 1,
            found: s.dim(),
        });
    }
    let degree = s.degree();
    let n = degree / 2;
    let eq = equilibrate(s, n)?;
    let t: Vec<f64> = eq.moments.entries().map(|(_, m)| m.value).collect();
    let (a, c) = (eq.centers[0], eq.scales[0]);

    let hankel = DMatrix::from_fn(n + 1, n + 1, |i, j| t[i + j]);
    let verdict = psd_check_matrix(&hankel, opts.psd_tol)?;
    if !verdict.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: verdict.min_eigenvalue,
            tolerance: verdict.tolerance_used,
        });
    }
    let rank = numerical_rank(&hankel, opts.rank_tol);
    if rank == 0 {
        return Err(Error::RankCollapse);
    }
    let mut r = rank.min(degree.div_ceil(2)).max(1);

    // first r rows of the upper Cholesky factor of (t_{i+j}), columns 0..=r
    let mut chol = DMatrix::<f64>::zeros(r, r + 1);
    for k in 0..r {
        let d = t[2 * k] - (0..k).map(|i| chol[(i, k)].powi(2)).sum::<f64>();
        if !(d > 0.0) {
            r = k;
            break;
        }
        chol[(k, k)] = d.sqrt();
        for j in (k + 1)..=r {
            if k + j > degree {
                break;
            }
            let v = t[k + j] - (0..k).map(|i| chol[(i, k)] * chol[(i, j)]).sum::<f64>();
            chol[(k, j)] = v / chol[(k, k)];
        }
    }
    if r == 0 {
        return Err(Error::RankCollapse);
    }
    let mut diagonal = Vec::with_capacity(r);
    let mut off_diagonal = Vec::with_capacity(r.saturating_sub(1));
    for k in 0..r {
        let here = chol[(k, k + 1)] / chol[(k, k)];
        let prev = if k == 0 {
            0.0
        } else {
            chol[(k - 1, k)] / chol[(k - 1, k - 1)]
        };
        diagonal.push(a + (here - prev) * c);
        if k > 0 {
            off_diagonal.push(chol[(k, k)] / chol[(k - 1, k - 1)] * c);
        }
    }
    let jacobi = JacobiMatrix {
        diagonal,
        off_diagonal,
    };
    let eig = symmetric_eigen(&jacobi.to_matrix())?;

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut nodes: Vec<f64> = order
        .iter()
        .map(|&i| (eig.eigenvalues[i] - a) / c)
        .collect();
    let mut weights: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvectors[(0, i)].powi(2))
        .collect();
    polish(&t[..2 * r], &mut nodes, &mut weights);

    let mut atoms = Vec::with_capacity(r);
    let mut clamped = Vec::new();
    let mut stieltjes_supported = true;
    for (pos, (u, w)) in nodes.iter().zip(&weights).enumerate() {
        let mut node = a + u * c;
        if node < -opts.node_tol {
            stieltjes_supported = false;
        } else if node < 0.0 {
            node = 0.0;
            clamped.push(pos);
        }
        atoms.push(Atom {
            point: vec![node],
            weight: eq.mass * w,
        });
    }
    let measure = AtomicMeasure::new(1, atoms)?;
    let max_residual = moment_residual(s, &measure, (2 * r - 1).min(degree))?;
    if !(max_residual <= opts.validation_tol) {
        return Err(Error::ReproductionFailure {
            residual: max_residual,
            tolerance: opts.validation_tol,
        });
    }
    Ok(Quadrature1d {
        measure,
        jacobi,
        rank,
        stieltjes_supported,
        clamped,
        max_residual,
    })
}

/// Newton steps on `Σ_i w_i u_i^k = t_k`, `k < 2r`; a step is kept only if
/// it lowers the residual.
fn polish(t: &[f64], nodes: &mut [f64], weights: &mut [f64]) {
    let r = nodes.len();
    let residual = |u: &[f64], w: &[f64]| -> DVector<f64> {
        DVector::from_fn(2 * r, |k, _| {
            u.iter()
                .zip(w)
                .map(|(x, wi)| wi * x.powi(k as i32))
                .sum::<f64>()
                - t[k]
        })
    };
    let mut f = residual(nodes, weights);
    for _ in 0..3 {
        let jac = DMatrix::from_fn(2 * r, 2 * r, |k, col| {
            let i = col % r;
            if col < r {
                nodes[i].powi(k as i32)
            } else if k == 0 {
                0.0
            } else {
                k as f64 * weights[i] * nodes[i].powi(k as i32 - 1)
            }
        });
        let Some(step) = jac.lu().solve(&f) else {
            return;
        };
        let u: Vec<f64> = (0..r).map(|i| nodes[i] - step[r + i]).collect();
        let w: Vec<f64> = (0..r).map(|i| weights[i] - step[i]).collect();
        let g = residual(&u, &w);
        if !(g.norm() < f.norm()) || w.iter().any(|x| !(*x > 0.0)) {
            return;
        }
        nodes.copy_from_slice(&u);
        weights.copy_from_slice(&w);
        f = g;
    }
}
