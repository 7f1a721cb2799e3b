//! Atom extraction from flat multivariate moment data.
//!
//! When `rank M_n = rank M_{n−1} = r`, the data come from an `r`-atomic
//! measure. Compressing multiplication by `x_j` onto the column space of
//! `M_{n−1}` gives commuting symmetric `r × r` matrices `N_j` whose joint
//! eigenvalues are the atoms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::{
    inf_norm, localizing_matrix, moment_matrix, numerical_rank, psd_check, symmetric_eigen,
};
use crate::moments::{moment_residual, Atom, AtomicMeasure, MomentSequence};
use crate::poly::{monomials_up_to, Polynomial};
use crate::solver1d::equilibrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlatRank {
    pub rank: usize,
    pub previous_rank: usize,
    pub is_flat: bool,
}

/// Numerical ranks of `M_n` and `M_{n−1}` (on coordinate-rescaled data).
pub fn flat_rank(s: &MomentSequence, n: usize, tol: f64) -> Result<FlatRank> {
    if n == 0 {
        return Err(Error::InvalidInput("flat_rank needs n ≥ 1".into()));
    }
    if 2 * n > s.degree() {
        return Err(Error::DegreeOverflow {
            required: 2 * n,
            available: s.degree(),
        });
    }
    let eq = equilibrate(s, n)?;
    let rank = numerical_rank(&moment_matrix(&eq.moments, n)?.entries, tol);
    let previous_rank = numerical_rank(&moment_matrix(&eq.moments, n - 1)?.entries, tol);
    Ok(FlatRank {
        rank,
        previous_rank,
        is_flat: rank == previous_rank,
    })
}

/// Smallest `n ≥ 1` with `2n ≤ D` at which the data are flat.
pub fn smallest_flat_level(s: &MomentSequence, tol: f64) -> Result<Option<usize>> {
    for n in 1..=s.degree() / 2 {
        if flat_rank(s, n, tol)?.is_flat {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtractOptions {
    pub rank_tol: f64,
    pub validation_tol: f64,
    pub psd_tol: f64,
    /// Seed for the random combination `Σ c_j N_j`.
    pub seed: u64,
    /// Redraws of the combination when its eigenvalues nearly coincide.
    pub max_retries: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            rank_tol: 1e-10,
            validation_tol: 1e-8,
            psd_tol: 1e-8,
            seed: 0,
            max_retries: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub measure: AtomicMeasure,
    pub level: usize,
    pub rank: usize,
    /// `max_{j<k} ‖N_j N_k − N_k N_j‖∞ / max(1, ‖N_j‖∞ ‖N_k‖∞)`.
    pub commutator: f64,
    pub combination: Vec<f64>,
    /// Smallest eigenvalue gap of the combined matrix (rescaled units).
    pub eigen_gap: f64,
    pub max_residual: f64,
    #[serde(skip)]
    pub multiplication: Vec<DMatrix<f64>>,
}

pub fn extract_atoms(s: &MomentSequence, n: usize, tol: f64, seed: u64) -> Result<Extraction> {
    extract_atoms_with(
        s,
        n,
        &ExtractOptions {
            rank_tol: tol,
            seed,
            ..ExtractOptions::default()
        },
    )
}

pub fn extract_atoms_with(
    s: &MomentSequence,
    n: usize,
    opts: &ExtractOptions,
) -> Result<Extraction> {
    let flat = flat_rank(s, n, opts.rank_tol)?;
    if !flat.is_flat {
        return Err(Error::NotFlat {
            level: n,
            rank: flat.rank,
            previous_rank: flat.previous_rank,
        });
    }
    let r = flat.rank;
    if r == 0 {
        return Err(Error::RankCollapse);
    }
    let dim = s.dim();
    let eq = equilibrate(s, n)?;
    let t = &eq.moments;

    let verdict = psd_check(&moment_matrix(t, n)?, opts.psd_tol)?;
    if !verdict.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: verdict.min_eigenvalue,
            tolerance: verdict.tolerance_used,
        });
    }

    // orthonormal basis of the column space of M_{n−1}, whitened
    let base = moment_matrix(t, n - 1)?.entries;
    let eig = symmetric_eigen(&base)?;
    let mut order: Vec<usize> = (0..base.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let b = base.nrows();
    let mut whiten = DMatrix::<f64>::zeros(b, r);
    for (col, &i) in order.iter().take(r).enumerate() {
        let lambda = eig.eigenvalues[i];
        if !(lambda > 0.0) {
            return Err(Error::RankCollapse);
        }
        whiten.set_column(col, &(eig.eigenvectors.column(i) / lambda.sqrt()));
    }

    let mut mult = Vec::with_capacity(dim);
    for j in 0..dim {
        let shifted = localizing_matrix(t, &Polynomial::var(dim, j), n - 1)?.entries;
        let nj = whiten.transpose() * shifted * &whiten;
        mult.push((&nj + nj.transpose()) * 0.5);
    }

    let mut commutator: f64 = 0.0;
    for j in 0..dim {
        for k in (j + 1)..dim {
            let c = &mult[j] * &mult[k] - &mult[k] * &mult[j];
            let scale = (inf_norm(&mult[j]) * inf_norm(&mult[k])).max(1.0);
            commutator = commutator.max(inf_norm(&c) / scale);
        }
    }
    if commutator > opts.validation_tol {
        return Err(Error::CommutatorTooLarge {
            norm: commutator,
            bound: opts.validation_tol,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<f64>, DMatrix<f64>)> = None;
    for _ in 0..=opts.max_retries {
        let mut c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = c
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        c.iter_mut().for_each(|v| *v /= norm);
        let combined = mult
            .iter()
            .zip(&c)
            .fold(DMatrix::zeros(r, r), |acc, (m, w)| acc + m * *w);
        let ce = symmetric_eigen(&combined)?;
        let mut ev: Vec<f64> = ce.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let gap = ev
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let better = best.as_ref().is_none_or(|(g, _, _)| gap > *g);
        if better {
            best = Some((gap, c, ce.eigenvectors));
        }
        let scale = inf_norm(&combined).max(1.0);
        if gap > 1e-6 * scale {
            break;
        }
    }
    let (eigen_gap, combination, vectors) = best.expect("at least one draw");

    let mut points: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let q = vectors.column(i);
            (0..dim).map(|j| q.dot(&(&mult[j] * q))).collect()
        })
        .collect();
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let weights = solve_weights(t, &points, 2 * n - 1)?;
    let atoms = points
        .into_iter()
        .zip(weights)
        .map(|(p, w)| Atom {
            point: eq.restore(&p),
            weight: w * eq.mass,
        })
        .collect();
    let measure = AtomicMeasure::new(dim, atoms)?;
    let max_residual = moment_residual(s, &measure, 2 * n - 1)?;
    if !(max_residual <= opts.validation_tol) {
        return Err(Error::ReproductionFailure {
            residual: max_residual,
            tolerance: opts.validation_tol,
        });
    }
    Ok(Extraction {
        measure,
        level: n,
        rank: r,
        commutator,
        combination,
        eigen_gap,
        max_residual,
        multiplication: mult,
    })
}

/// Least-squares weights from `Σ_i w_i x_i^α = t_α`, `|α| ≤ max_degree`.
fn solve_weights(t: &MomentSequence, points: &[Vec<f64>], max_degree: usize) -> Result<Vec<f64>> {
    let alphas = monomials_up_to(t.dim(), max_degree);
    let vander = DMatrix::from_fn(alphas.len(), points.len(), |i, j| {
        alphas[i].eval(&points[j])
    });
    let rhs = DVector::from_iterator(
        alphas.len(),
        alphas
            .iter()
            .map(|a| t.value(a).expect("degree within range")),
    );
    let svd = vander.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::IllConditionedWeights(format!(
            "Vandermonde condition number {:e}",
            smax / smin
        )));
    }
    let w = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditionedWeights(e.to_string()))?;
    if let Some(i) = w.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::IllConditionedWeights(format!(
            "weight {i} is {:e}",
            w[i]
        )));
    }
    Ok(w.iter().copied().collect())
}
