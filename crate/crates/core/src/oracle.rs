//! Ground-truth moment data: atomic measures, the exponential density
//! (`s_n = n!`), the lognormal density (`s_n = e^{n²/2}`), and atoms on the
//! region above the curve `x2 = x1^k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moments::{Atom, AtomicMeasure, Moment, MomentSequence};
use crate::poly::{monomials_up_to, Polynomial};
use crate::rational;
use crate::reduction::{InverseMap, SemiAlgebraicPresentation};

/// Moments of `ρ` up to degree `D`, exact.
///
/// Coordinates and weights are read as the decimals they print as, so
/// `0.1` contributes exactly `1/10`; the double in each entry is the
/// correctly rounded exact moment.
pub fn moments_of_atomic(rho: &AtomicMeasure, degree: usize) -> MomentSequence {
    moments_of_atomic_with(rho, degree, Execution::default())
}

pub fn moments_of_atomic_with(
    rho: &AtomicMeasure,
    degree: usize,
    exec: Execution,
) -> MomentSequence {
    let dim = rho.dim();
    let to_q = |v: f64| rational::from_f64_decimal(v).expect("atom data is finite");
    // powers[i][j][e] = (x_i)_j^e
    let atoms: Vec<(BigRational, Vec<Vec<BigRational>>)> = rho
        .atoms()
        .iter()
        .map(|a| {
            let pows = a
                .point
                .iter()
                .map(|&x| {
                    let q = to_q(x);
                    let mut p = vec![BigRational::one()];
                    for e in 1..=degree {
                        let next = &p[e - 1] * &q;
                        p.push(next);
                    }
                    p
                })
                .collect();
            (to_q(a.weight), pows)
        })
        .collect();
    let alphas = monomials_up_to(dim, degree);
    let values = exec.map(&alphas, |alpha| {
        let mut acc = BigRational::zero();
        for (w, pows) in &atoms {
            let mut term = w.clone();
            for (j, &e) in alpha.exponents().iter().enumerate() {
                if e > 0 {
                    term *= &pows[j][e as usize];
                }
            }
            acc += term;
        }
        Moment::exact(acc)
    });
    MomentSequence::new(dim, degree, alphas.into_iter().zip(values).collect())
        .expect("every multi-index is generated")
}

/// Plain double-precision moments `Σ w_i x_i^α`.
pub fn moments_of_atomic_float_with(
    rho: &AtomicMeasure,
    degree: usize,
    exec: Execution,
) -> MomentSequence {
    let alphas = monomials_up_to(rho.dim(), degree);
    let values = exec.map(&alphas, |alpha| {
        Moment::float(
            rho.atoms()
                .iter()
                .map(|a| a.weight * alpha.eval(&a.point))
                .sum(),
        )
    });
    MomentSequence::new(rho.dim(), degree, alphas.into_iter().zip(values).collect())
        .expect("every multi-index is generated")
}

/// `s_n = n!` (moments of `e^{-x}` on `ℝ₊`), exact with log values attached.
pub fn moments_exponential(degree: usize) -> MomentSequence {
    let mut fact = vec![BigInt::one()];
    for n in 1..=degree {
        let next = &fact[n - 1] * BigInt::from(n);
        fact.push(next);
    }
    MomentSequence::from_fn(1, degree, |a| {
        let r = BigRational::from_integer(fact[a.degree()].clone());
        let log = rational::ln_positive(&r);
        let mut m = Moment::exact(r);
        m.value = m.value.min(f64::MAX);
        m.log = log;
        m
    })
}

/// `s_n = e^{n²/2}` (moments of the standard lognormal), carried as logs.
pub fn moments_lognormal(degree: usize) -> MomentSequence {
    MomentSequence::from_fn(1, degree, |a| {
        let n = a.degree() as f64;
        Moment::from_log(n * n / 2.0)
    })
}

/// Moments, presentation `{x2 − x1^k, x1}` and explicit inverse
/// `(y2, y1 + y2^k)` for atoms above the curve `x2 = x1^k`.
#[derive(Debug, Clone)]
pub struct ExampleFixture {
    pub moments: MomentSequence,
    pub presentation: SemiAlgebraicPresentation,
    pub inverse: InverseMap,
}

pub fn example_fixture(k: u32, atoms: &AtomicMeasure, degree: usize) -> Result<ExampleFixture> {
    if atoms.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: atoms.dim(),
        });
    }
    let offenders: Vec<usize> = atoms
        .atoms()
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            let x1 = rational::from_f64_decimal(a.point[0]).expect("finite");
            let x2 = rational::from_f64_decimal(a.point[1]).expect("finite");
            x1.is_negative() || x2 < num_traits::pow(x1, k as usize)
        })
        .map(|(i, _)| i)
        .collect();
    if !offenders.is_empty() {
        return Err(Error::MembershipViolation(offenders));
    }
    let y1 = Polynomial::var(2, 0);
    let y2 = Polynomial::var(2, 1);
    Ok(ExampleFixture {
        moments: moments_of_atomic(atoms, degree),
        presentation: SemiAlgebraicPresentation::curve_example(k),
        inverse: InverseMap::Explicit(vec![y2.clone(), &y1 + &y2.pow(k as usize)]),
    })
}

/// Random atomic measure for fixtures: `n` atoms on the `1/100` grid of
/// `[lo, hi]^dim`, pairwise sup-distance at least `min_sep`, weights on the
/// `1/100` grid of `[0.1, 1]`.
pub fn random_atomic<R: Rng>(
    rng: &mut R,
    dim: usize,
    n: usize,
    lo: f64,
    hi: f64,
    min_sep: f64,
) -> AtomicMeasure {
    let grid = |rng: &mut R, a: f64, b: f64| {
        let steps = ((b - a) * 100.0).round() as i64;
        (a * 100.0 + rng.random_range(0..=steps) as f64).round() / 100.0
    };
    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    while atoms.len() < n {
        let point: Vec<f64> = (0..dim).map(|_| grid(rng, lo, hi)).collect();
        let far = atoms.iter().all(|a| {
            a.point
                .iter()
                .zip(&point)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
                >= min_sep
        });
        if far {
            atoms.push(Atom {
                point,
                weight: grid(rng, 0.1, 1.0),
            });
        }
    }
    AtomicMeasure::new(dim, atoms).expect("generated atoms are separated")
}
