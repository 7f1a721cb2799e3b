//! Reduction of a moment problem on `K(f) = {x : f_1(x) ≥ 0, …, f_m(x) ≥ 0}`
//! to a Stieltjes problem on `ℝ₊^m`.
//!
//! The substitution homomorphism `θ: y_j ↦ f_j` moves functionals forward
//! (`L̃(p) = L(θ(p))`), and atoms of a measure on the image are pulled back
//! along `τ(x) = (f_1(x), …, f_m(x))`.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moments::{
    riesz_eval, riesz_eval_exact, sup_distance, Atom, AtomicMeasure, Moment, MomentSequence,
};
use crate::poly::{monomials_up_to, MultiIndex, Polynomial};
use crate::rational;

/// Generators `f_1..f_m` in `d` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAlgebraicPresentation {
    dim: usize,
    generators: Vec<Polynomial>,
}

impl SemiAlgebraicPresentation {
    pub fn new(dim: usize, generators: Vec<Polynomial>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput(
                "a presentation needs at least one generator".into(),
            ));
        }
        for g in &generators {
            if g.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: g.dim(),
                });
            }
        }
        Ok(SemiAlgebraicPresentation { dim, generators })
    }

    /// `{x_1, …, x_d}`, whose `K(f)` is the closed positive orthant.
    pub fn identity(dim: usize) -> Self {
        Self::new(dim, (0..dim).map(|i| Polynomial::var(dim, i)).collect())
            .expect("identity presentation is well formed")
    }

    /// `{x2 − x1^k, x1}`: the region above `x2 = x1^k` in the positive quadrant.
    pub fn curve_example(k: u32) -> Self {
        let f1 = Polynomial::from_int_terms(2, &[(&[0, 1], 1), (&[k, 0], -1)]);
        Self::new(2, vec![f1, Polynomial::var(2, 0)]).expect("example presentation is well formed")
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Image dimension `m`.
    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn max_degree(&self) -> usize {
        self.generators
            .iter()
            .map(Polynomial::degree_or_zero)
            .max()
            .unwrap_or(0)
    }

    /// Membership in `K(f)` with slack: every `f_j(x) ≥ −tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        for f in &self.generators {
            if f.eval(x)? < -tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// How to invert `τ` on atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseMap {
    /// `x_i = g_i(y)` with `g_i` polynomials in `m` variables.
    Explicit(Vec<Polynomial>),
    /// Multi-start Newton on `τ(x) = y`.
    Numeric,
}

/// `θ(p) = p(f_1, …, f_m)`, exact.
pub fn theta_substitute(p: &Polynomial, k: &SemiAlgebraicPresentation) -> Result<Polynomial> {
    let m = k.num_generators();
    if p.dim() != m {
        return Err(Error::DimMismatch {
            expected: m,
            found: p.dim(),
        });
    }
    let mut max_pow = vec![0usize; m];
    for (alpha, _) in p.terms() {
        for (j, &e) in alpha.exponents().iter().enumerate() {
            max_pow[j] = max_pow[j].max(e as usize);
        }
    }
    let powers: Vec<Vec<Polynomial>> = k
        .generators
        .iter()
        .zip(&max_pow)
        .map(|(f, &top)| {
            let mut acc = vec![Polynomial::one(k.dim)];
            for i in 1..=top {
                let next = &acc[i - 1] * f;
                acc.push(next);
            }
            acc
        })
        .collect();
    let mut out = Polynomial::zero(k.dim);
    for (alpha, c) in p.terms() {
        let mut term = Polynomial::constant(k.dim, c.clone());
        for (j, &e) in alpha.exponents().iter().enumerate() {
            if e > 0 {
                term = &term * &powers[j][e as usize];
            }
        }
        out = &out + &term;
    }
    Ok(out)
}

/// `θ(y^α)`.
pub fn theta_monomial(alpha: &MultiIndex, k: &SemiAlgebraicPresentation) -> Result<Polynomial> {
    theta_substitute(&Polynomial::monomial(alpha.clone(), BigRational::one()), k)
}

/// `s̃_α = L_s(θ(y^α))` for `|α| ≤ e`.
pub fn pushforward_moments(
    s: &MomentSequence,
    k: &SemiAlgebraicPresentation,
    e: usize,
) -> Result<MomentSequence> {
    pushforward_moments_with(s, k, e, Execution::default())
}

pub fn pushforward_moments_with(
    s: &MomentSequence,
    k: &SemiAlgebraicPresentation,
    e: usize,
    exec: Execution,
) -> Result<MomentSequence> {
    if s.dim() != k.dim() {
        return Err(Error::DimMismatch {
            expected: k.dim(),
            found: s.dim(),
        });
    }
    let required = e * k.max_degree();
    if required > s.degree() {
        return Err(Error::DegreeOverflow {
            required,
            available: s.degree(),
        });
    }
    let alphas = monomials_up_to(k.num_generators(), e);
    let values = exec.try_map(&alphas, |alpha| -> Result<Moment> {
        let q = theta_monomial(alpha, k)?;
        if let Some(beta) = q.as_unit_monomial() {
            return Ok(s.moment(beta)?.clone());
        }
        Ok(match riesz_eval_exact(s, &q)? {
            Some(r) => Moment::exact(r),
            None => Moment::float(riesz_eval(s, &q)?),
        })
    })?;
    MomentSequence::new(
        k.num_generators(),
        e,
        alphas.into_iter().zip(values).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationCheck {
    pub generated: bool,
    pub budget: usize,
    /// `w_i` with `θ(w_i) = x_i`, present when `generated`.
    pub witnesses: Option<Vec<Polynomial>>,
}

/// Decide whether every `x_i` lies in the span of `{θ(y^α) : |α| ≤ budget}`.
pub fn check_generates(k: &SemiAlgebraicPresentation, budget: usize) -> Result<GenerationCheck> {
    let m = k.num_generators();
    let alphas = monomials_up_to(m, budget);
    let images: Vec<Polynomial> = alphas
        .iter()
        .map(|a| theta_monomial(a, k))
        .collect::<Result<_>>()?;

    let mut rows: Vec<MultiIndex> = images
        .iter()
        .flat_map(|p| p.terms().map(|(a, _)| a.clone()))
        .chain((0..k.dim).map(|i| MultiIndex::axis(k.dim, i, 1)))
        .collect();
    rows.sort();
    rows.dedup();

    let ncols = alphas.len();
    let ntargets = k.dim;
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| {
            let mut row: Vec<BigRational> = images.iter().map(|p| p.coeff(r)).collect();
            for i in 0..ntargets {
                row.push(if *r == MultiIndex::axis(k.dim, i, 1) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
            }
            row
        })
        .collect();

    let pivots = row_reduce(&mut a, ncols);
    let mut witnesses = Vec::with_capacity(ntargets);
    for t in 0..ntargets {
        let col = ncols + t;
        let consistent = a[pivots.len()..].iter().all(|row| row[col].is_zero());
        if !consistent {
            return Ok(GenerationCheck {
                generated: false,
                budget,
                witnesses: None,
            });
        }
        let mut w = Polynomial::zero(m);
        for (r, &pc) in pivots.iter().enumerate() {
            let c = a[r][col].clone();
            if !c.is_zero() {
                w = &w + &Polynomial::monomial(alphas[pc].clone(), c);
            }
        }
        debug_assert_eq!(theta_substitute(&w, k)?, Polynomial::var(k.dim, t));
        witnesses.push(w);
    }
    Ok(GenerationCheck {
        generated: true,
        budget,
        witnesses: Some(witnesses),
    })
}

/// Reduced row echelon form over the first `ncols` columns; returns the
/// pivot column of each leading row.
fn row_reduce(a: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = BigRational::one() / a[r][c].clone();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    pivots
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauImage {
    pub point: Vec<f64>,
    /// Whether the source point lies in `K(f)` (all `f_j ≥ 0`).
    pub in_k: bool,
}

/// `τ(x) = (f_1(x), …, f_m(x))`.
pub fn tau_eval(k: &SemiAlgebraicPresentation, x: &[f64]) -> Result<TauImage> {
    let point: Vec<f64> = k
        .generators
        .iter()
        .map(|f| f.eval(x))
        .collect::<Result<_>>()?;
    let in_k = point.iter().all(|v| *v >= 0.0);
    Ok(TauImage { point, in_k })
}

/// Newton settings for [`InverseMap::Numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_starts: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub iterations: usize,
    pub residual_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_starts: 50,
            box_lo: 0.0,
            box_hi: 10.0,
            iterations: 40,
            residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullBack {
    pub measure: AtomicMeasure,
    /// Largest `‖τ(x) − y‖∞` over the atoms.
    pub max_residual: f64,
    /// Atoms for which Newton found several distinct preimages in `K(f)`.
    pub ambiguous: Vec<usize>,
}

/// Pull the atoms of `nu` (a measure on the image space) back along `τ`.
pub fn pull_back_atoms(
    nu: &AtomicMeasure,
    k: &SemiAlgebraicPresentation,
    inv: &InverseMap,
    tol: f64,
) -> Result<PullBack> {
    pull_back_atoms_with(
        nu,
        k,
        inv,
        tol,
        &NewtonOptions::default(),
        Execution::default(),
    )
}

pub fn pull_back_atoms_with(
    nu: &AtomicMeasure,
    k: &SemiAlgebraicPresentation,
    inv: &InverseMap,
    tol: f64,
    newton: &NewtonOptions,
    exec: Execution,
) -> Result<PullBack> {
    let m = k.num_generators();
    if nu.dim() != m {
        return Err(Error::DimMismatch {
            expected: m,
            found: nu.dim(),
        });
    }
    if let InverseMap::Explicit(g) = inv {
        if g.len() != k.dim {
            return Err(Error::DimMismatch {
                expected: k.dim,
                found: g.len(),
            });
        }
        if let Some(bad) = g.iter().find(|p| p.dim() != m) {
            return Err(Error::DimMismatch {
                expected: m,
                found: bad.dim(),
            });
        }
    }
    let tau = FloatMap::new(k.generators());
    let indexed: Vec<(usize, &Atom)> = nu.atoms().iter().enumerate().collect();

    enum Outcome {
        Found {
            x: Vec<f64>,
            residual: f64,
            ambiguous: bool,
        },
        Outside,
    }

    let outcomes = exec.try_map(&indexed, |&(i, atom)| -> Result<Outcome> {
        let y = &atom.point;
        let scale = y.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        match inv {
            InverseMap::Explicit(g) => {
                let x: Vec<f64> = g.iter().map(|gi| gi.eval(y)).collect::<Result<_>>()?;
                let residual = sup_distance(&tau.eval(&x), y);
                if residual > tol * scale {
                    return Err(Error::NoPreimage { atom: i });
                }
                if !k.contains(&x, tol)? {
                    return Ok(Outcome::Outside);
                }
                Ok(Outcome::Found {
                    x,
                    residual,
                    ambiguous: false,
                })
            }
            InverseMap::Numeric => {
                let roots = newton_preimages(&tau, y, newton, exec);
                if roots.is_empty() {
                    return Err(Error::NoPreimage { atom: i });
                }
                let inside: Vec<Vec<f64>> = roots
                    .into_iter()
                    .filter(|x| k.contains(x, tol).unwrap_or(false))
                    .collect();
                match inside.first() {
                    None => Ok(Outcome::Outside),
                    Some(x) => Ok(Outcome::Found {
                        residual: sup_distance(&tau.eval(x), y),
                        x: x.clone(),
                        ambiguous: inside.len() > 1,
                    }),
                }
            }
        }
    })?;

    let outside: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o, Outcome::Outside))
        .map(|(i, _)| i)
        .collect();
    if !outside.is_empty() {
        return Err(Error::MembershipViolation(outside));
    }
    let mut atoms = Vec::with_capacity(outcomes.len());
    let mut ambiguous = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (i, o) in outcomes.into_iter().enumerate() {
        if let Outcome::Found {
            x,
            residual,
            ambiguous: amb,
        } = o
        {
            if amb {
                ambiguous.push(i);
            }
            max_residual = max_residual.max(residual);
            atoms.push(Atom {
                point: x,
                weight: nu.atoms()[i].weight,
            });
        }
    }
    let measure = AtomicMeasure::new(k.dim, atoms)?;
    Ok(PullBack {
        measure,
        max_residual,
        ambiguous,
    })
}

/// Polynomial map with coefficients rounded to doubles, for fast evaluation.
struct FloatMap {
    dim: usize,
    components: Vec<Vec<(Vec<u32>, f64)>>,
}

impl FloatMap {
    fn new(ps: &[Polynomial]) -> Self {
        let dim = ps.first().map(Polynomial::dim).unwrap_or(0);
        let components = ps
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(a, c)| (a.exponents().to_vec(), rational::to_f64(c)))
                    .collect()
            })
            .collect();
        FloatMap { dim, components }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(e, c)| {
                        c * e
                            .iter()
                            .zip(x)
                            .map(|(&k, &xi)| xi.powi(k as i32))
                            .product::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.components.len(), self.dim);
        let mut xp = x.to_vec();
        for i in 0..self.dim {
            let h = 1e-7 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = self.eval(&xp);
            xp[i] = x[i] - h;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            for r in 0..fp.len() {
                jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        jac
    }
}

/// Start points on a regular grid in `[lo, hi]^d`, at most `max_starts`.
fn grid_starts(dim: usize, opts: &NewtonOptions) -> Vec<Vec<f64>> {
    let per_axis = ((opts.max_starts as f64).powf(1.0 / dim as f64) + 1e-9)
        .floor()
        .max(2.0) as usize;
    let step = (opts.box_hi - opts.box_lo) / (per_axis - 1) as f64;
    let mut starts = vec![Vec::new()];
    for _ in 0..dim {
        starts = starts
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                (0..per_axis).map(move |i| {
                    let mut q = p.clone();
                    q.push(opts.box_lo + step * i as f64);
                    q
                })
            })
            .collect();
    }
    starts.truncate(opts.max_starts);
    starts
}

/// Distinct converged solutions of `τ(x) = y` from all grid starts.
/// Gauss–Newton with a pseudo-inverse step covers square and
/// overdetermined systems alike.
fn newton_preimages(
    tau: &FloatMap,
    y: &[f64],
    opts: &NewtonOptions,
    exec: Execution,
) -> Vec<Vec<f64>> {
    let scale = y.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let target = opts.residual_tol * scale;
    let starts = grid_starts(tau.dim, opts);
    let runs = exec.map(&starts, |start| {
        let mut x = start.clone();
        for _ in 0..opts.iterations {
            let r: Vec<f64> = tau.eval(&x).iter().zip(y).map(|(a, b)| a - b).collect();
            let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !norm.is_finite() {
                return None;
            }
            if norm <= target {
                return Some(x);
            }
            let jac = tau.jacobian(&x);
            let rhs = -DVector::from_vec(r);
            let step = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
            for (xi, d) in x.iter_mut().zip(step.iter()) {
                *xi += d;
            }
        }
        let r = sup_distance(&tau.eval(&x), y);
        (r <= target).then_some(x)
    });
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for x in runs.into_iter().flatten() {
        if !roots.iter().any(|r| sup_distance(r, &x) <= 1e-6 * scale) {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}
