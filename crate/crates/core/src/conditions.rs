//! Growth-series diagnostics on marginal moments.
//!
//! A finite prefix cannot decide whether `Σ a_n` diverges, so each report
//! carries a heuristic classification of the tail:
//!
//! * geometric decay (median ratio `a_{n+1}/a_n ≤ 0.95`) → convergence-consistent;
//! * power-law decay no faster than `c/n` (log–log slope `≥ −1.05` with small
//!   residual) → divergence-consistent;
//! * anything else → inconclusive.
//!
//! All terms are computed from `ln m_n`, so sequences such as `e^{n²/2}` that
//! overflow doubles are handled without loss.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrices::{equilibrated_hankel, psd_check_matrix, PsdVerdict};
use crate::moments::{Moment, MomentSequence};
use crate::poly::MultiIndex;

pub const GEOMETRIC_RATIO: f64 = 0.95;
pub const HARMONIC_SLOPE: f64 = -1.05;
pub const FIT_RESIDUAL: f64 = 0.1;
/// Relative slack in the lemma checks.
pub const LEMMA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DivergenceConsistent,
    ConvergenceConsistent,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::DivergenceConsistent => "divergence-consistent",
            Classification::ConvergenceConsistent => "convergence-consistent",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "series")]
pub enum SeriesKind {
    /// `a_n = m_n^{-1/(2n)}`
    Stieltjes,
    /// `a_n = m_{2n}^{-1/(2n)}`
    Carleman,
    /// `a_n = m_{nm}^{-1/(2nm)}`
    Subsequence { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDetails {
    pub tail_start: usize,
    pub tail_end: usize,
    pub median_ratio: Option<f64>,
    pub slope: Option<f64>,
    pub residual_rms: Option<f64>,
    /// `min n·a_n` over the tail.
    pub harmonic_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub kind: SeriesKind,
    pub axis: usize,
    /// `terms[n-1] = a_n`.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub classification: Classification,
    pub fit_details: FitDetails,
    /// Set when some marginal moment vanishes (term is `+∞`).
    pub degenerate: bool,
}

/// Divide by `s_0` so that `L(1) = 1`.
pub fn normalize(s: &MomentSequence) -> Result<MomentSequence> {
    let s0 = s.moment(&MultiIndex::zero(s.dim()))?.clone();
    let positive = match &s0.exact {
        Some(r) => num_traits::Signed::is_positive(r),
        None => s0.value > 0.0,
    };
    if !positive {
        let zero = match &s0.exact {
            Some(r) => num_traits::Zero::is_zero(r),
            None => s0.value == 0.0,
        };
        return Err(if zero {
            Error::TrivialFunctional
        } else {
            Error::NotPositive(s0.value)
        });
    }
    let unit = match &s0.exact {
        Some(r) => num_traits::One::is_one(r),
        None => s0.value == 1.0,
    };
    if unit {
        return Ok(s.clone());
    }
    let ln0 = s0.value.ln();
    Ok(s.map_entries(|_, m| match (&m.exact, &s0.exact) {
        (Some(r), Some(r0)) => {
            let q = r / r0;
            let mut out = Moment::exact(q);
            out.log = m.log.map(|l| l - ln0);
            out
        }
        _ => Moment {
            value: m.value / s0.value,
            log: m.log.map(|l| l - ln0),
            exact: None,
        },
    }))
}

fn check_normalized(s: &MomentSequence) -> Result<()> {
    let s0 = s.mass();
    if (s0 - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(s0));
    }
    Ok(())
}

/// `ln m_k` for the `k`-th power of axis `j`; `-inf` for a zero moment.
fn marginal_ln(s: &MomentSequence, j: usize, k: usize) -> Result<f64> {
    if j >= s.dim() {
        return Err(Error::InvalidInput(format!(
            "axis {j} out of range for dim {}",
            s.dim()
        )));
    }
    let m = s.moment(&MultiIndex::axis(s.dim(), j, k as u32))?;
    m.ln().ok_or(Error::NegativeMoment {
        index: k,
        value: m.value,
    })
}

fn series(
    s: &MomentSequence,
    j: usize,
    count: usize,
    kind: SeriesKind,
) -> Result<DiagnosticReport> {
    check_normalized(s)?;
    let (step, mult) = match kind {
        SeriesKind::Stieltjes => (1, 1),
        SeriesKind::Carleman => (2, 1),
        SeriesKind::Subsequence { m } => {
            if m == 0 {
                return Err(Error::InvalidInput("subsequence step must be ≥ 1".into()));
            }
            (m, m)
        }
    };
    let required = count * step;
    if required > s.degree() {
        return Err(Error::DegreeOverflow {
            required,
            available: s.degree(),
        });
    }
    let mut terms = Vec::with_capacity(count);
    let mut degenerate = false;
    for n in 1..=count {
        let ln = marginal_ln(s, j, n * step)?;
        if ln == f64::NEG_INFINITY {
            degenerate = true;
            terms.push(f64::INFINITY);
        } else {
            terms.push((-ln / (2.0 * (n * mult) as f64)).exp());
        }
    }
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let (classification, fit_details) = classify(&terms, degenerate);
    Ok(DiagnosticReport {
        kind,
        axis: j,
        terms,
        partial_sums,
        classification,
        fit_details,
        degenerate,
    })
}

/// `a_n = m_n^{-1/(2n)}`, `n = 1..N`, on axis `j`.
pub fn stieltjes_terms(s: &MomentSequence, j: usize, n: usize) -> Result<DiagnosticReport> {
    series(s, j, n, SeriesKind::Stieltjes)
}

/// `a_n = m_{2n}^{-1/(2n)}`, `n = 1..N`; needs `2N ≤ D`.
pub fn carleman_terms(s: &MomentSequence, j: usize, n: usize) -> Result<DiagnosticReport> {
    series(s, j, n, SeriesKind::Carleman)
}

/// `a_n = m_{nm}^{-1/(2nm)}`, `n = 1..N`; needs `N·m ≤ D`.
pub fn subsequence_terms(
    s: &MomentSequence,
    j: usize,
    m: usize,
    n: usize,
) -> Result<DiagnosticReport> {
    series(s, j, n, SeriesKind::Subsequence { m })
}

fn classify(terms: &[f64], degenerate: bool) -> (Classification, FitDetails) {
    let n_total = terms.len();
    let tail_start = n_total.div_ceil(2).max(1);
    let mut details = FitDetails {
        tail_start,
        tail_end: n_total,
        median_ratio: None,
        slope: None,
        residual_rms: None,
        harmonic_constant: None,
    };
    if degenerate {
        return (Classification::DivergenceConsistent, details);
    }
    if n_total < tail_start || n_total + 1 - tail_start < 3 {
        return (Classification::Inconclusive, details);
    }
    let tail: Vec<(f64, f64)> = (tail_start..=n_total)
        .map(|n| (n as f64, terms[n - 1]))
        .collect();

    let mut ratios: Vec<f64> = tail.windows(2).map(|w| w[1].1 / w[0].1).collect();
    ratios.sort_by(f64::total_cmp);
    let median = if ratios.len() % 2 == 1 {
        ratios[ratios.len() / 2]
    } else {
        0.5 * (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2])
    };
    details.median_ratio = Some(median);

    let xs: Vec<f64> = tail.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, a)| a.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    details.slope = Some(slope);
    details.residual_rms = Some(rms);
    details.harmonic_constant = Some(
        tail.iter()
            .map(|(n, a)| n * a)
            .fold(f64::INFINITY, f64::min),
    );

    let class = if median <= GEOMETRIC_RATIO {
        Classification::ConvergenceConsistent
    } else if slope >= HARMONIC_SLOPE && rms <= FIT_RESIDUAL {
        Classification::DivergenceConsistent
    } else {
        Classification::Inconclusive
    };
    (class, details)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    /// Smallest relative margin; negative beyond the slack means failure.
    pub worst_margin: f64,
    pub comparisons: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub axis: usize,
    pub m: usize,
    pub n_max: usize,
    /// PSD verdicts for `(m_{k+l})` and the shifted `(m_{k+l+1})`.
    pub hankel: PsdVerdict,
    pub shifted_hankel: PsdVerdict,
    pub monotonicity: CheckOutcome,
    pub termwise: CheckOutcome,
    pub finite_sum: CheckOutcome,
    pub pass: bool,
}

/// Finite checks behind the equivalence `Σ m_n^{-1/(2n)} = ∞ ⇔ Σ m_{nm}^{-1/(2nm)} = ∞`:
///
/// 1. `m_k^{1/k} ≤ m_l^{1/l}` for `1 ≤ k < l ≤ N`;
/// 2. `a_{nm+l} ≤ a_{nm}` for `0 ≤ l < m`, `nm + l ≤ N`;
/// 3. `Σ_{n=m}^{N} a_n ≤ m · Σ_{n=1}^{U} a_{nm}` with `U = min(⌊N/m⌋ + 1, ⌊D/m⌋)`.
///
/// The Hankel matrices of the marginal and its shift must pass the PSD test
/// first; otherwise `HypothesisFailure` is returned.
pub fn lemma2_checks(s: &MomentSequence, j: usize, m: usize, n: usize) -> Result<Lemma2Report> {
    lemma2_checks_with(
        s,
        j,
        m,
        n,
        crate::matrices::DEFAULT_PSD_TOL,
        Execution::default(),
    )
}

pub fn lemma2_checks_with(
    s: &MomentSequence,
    j: usize,
    m: usize,
    n_max: usize,
    psd_tol: f64,
    exec: Execution,
) -> Result<Lemma2Report> {
    check_normalized(s)?;
    if m == 0 {
        return Err(Error::InvalidInput("m must be ≥ 1".into()));
    }
    if n_max > s.degree() {
        return Err(Error::DegreeOverflow {
            required: n_max,
            available: s.degree(),
        });
    }
    let marginal = s.axis_marginal(j)?;
    let d = marginal.degree();
    let hankel = psd_check_matrix(&equilibrated_hankel(&marginal, 0, d / 2)?, psd_tol)?;
    let shifted_hankel = if d >= 1 {
        psd_check_matrix(&equilibrated_hankel(&marginal, 1, (d - 1) / 2)?, psd_tol)?
    } else {
        PsdVerdict {
            is_psd: true,
            min_eigenvalue: 0.0,
            tolerance_used: psd_tol,
        }
    };
    if !hankel.is_psd || !shifted_hankel.is_psd {
        return Err(Error::HypothesisFailure(format!(
            "Hankel PSD: {} (λ_min {:e}), shifted Hankel PSD: {} (λ_min {:e})",
            hankel.is_psd,
            hankel.min_eigenvalue,
            shifted_hankel.is_psd,
            shifted_hankel.min_eigenvalue
        )));
    }

    let ln: Vec<f64> = (0..=d)
        .map(|k| marginal_ln(s, j, k))
        .collect::<Result<_>>()?;
    // ln m_k^{1/k} and ln a_k = -ln m_k / (2k)
    let root = |k: usize| ln[k] / k as f64;
    let ln_term = |k: usize| -ln[k] / (2.0 * k as f64);
    let term = |k: usize| ln_term(k).exp();
    let log_gap = |hi: f64, lo: f64| if hi == lo { 0.0 } else { hi - lo };

    let ks: Vec<usize> = (1..=n_max).collect();
    let per_k = exec.map(&ks, |&k| {
        ((k + 1)..=n_max)
            .map(|l| log_gap(root(l), root(k)))
            .fold(f64::INFINITY, f64::min)
    });
    let comparisons = n_max * n_max.saturating_sub(1) / 2;
    let worst = per_k.into_iter().fold(f64::INFINITY, f64::min);
    let monotonicity = outcome(worst, comparisons);

    let mut worst = f64::INFINITY;
    let mut count = 0;
    for block in 1..=(n_max / m) {
        for l in 0..m {
            let k = block * m + l;
            if k > n_max {
                break;
            }
            worst = worst.min(log_gap(ln_term(block * m), ln_term(k)));
            count += 1;
        }
    }
    let termwise = outcome(worst, count);

    let upper = (n_max / m + 1).min(d / m);
    let lhs: f64 = (m..=n_max).map(term).sum();
    let rhs: f64 = m as f64 * (1..=upper).map(|b| term(b * m)).sum::<f64>();
    let sum_margin = if lhs == rhs {
        0.0
    } else if rhs.is_infinite() {
        f64::INFINITY
    } else {
        (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE)
    };
    let finite_sum = outcome(sum_margin, 1);

    let pass = monotonicity.pass && termwise.pass && finite_sum.pass;
    Ok(Lemma2Report {
        axis: j,
        m,
        n_max,
        hankel,
        shifted_hankel,
        monotonicity,
        termwise,
        finite_sum,
        pass,
    })
}

fn outcome(worst: f64, comparisons: usize) -> CheckOutcome {
    let worst_margin = if comparisons == 0 { 0.0 } else { worst };
    CheckOutcome {
        pass: !(worst_margin < -LEMMA_SLACK),
        worst_margin,
        comparisons,
    }
}

/// `(L(f^n))_{n ≤ N}` as a one-dimensional sequence, exact when possible.
/// For `f = x^β` the entries (including log values) are copied from `s`.
pub fn generator_marginal(
    s: &MomentSequence,
    f: &crate::poly::Polynomial,
    n: usize,
) -> Result<MomentSequence> {
    let deg = f.degree_or_zero();
    let required = n * deg;
    if required > s.degree() {
        return Err(Error::DegreeOverflow {
            required,
            available: s.degree(),
        });
    }
    let mut entries = std::collections::BTreeMap::new();
    let mut power = crate::poly::Polynomial::one(s.dim());
    for k in 0..=n {
        if k > 0 {
            power = &power * f;
        }
        let m = match power.as_unit_monomial() {
            Some(beta) => s.moment(beta)?.clone(),
            None => match crate::moments::riesz_eval_exact(s, &power)? {
                Some(r) => Moment::exact(r),
                None => Moment::float(crate::moments::riesz_eval(s, &power)?),
            },
        };
        entries.insert(MultiIndex::new(vec![k as u32]), m);
    }
    MomentSequence::new(1, n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::AtomicMeasure;
    use crate::oracle;

    fn ones(degree: usize) -> MomentSequence {
        MomentSequence::from_values_1d(&vec![1.0; degree + 1]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = MomentSequence::from_values_1d(&[4.0, 8.0]).unwrap();
        let n = normalize(&s).unwrap();
        assert_eq!(n.values_1d(), vec![1.0, 2.0]);

        let again = normalize(&n).unwrap();
        assert_eq!(again, n);

        let zero = MomentSequence::from_values_1d(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(normalize(&zero), Err(Error::TrivialFunctional));
        let neg = MomentSequence::from_values_1d(&[-1.0, 0.0]).unwrap();
        assert!(matches!(normalize(&neg), Err(Error::NotPositive(_))));
    }

    #[test]
    fn dirac_at_one() {
        let s = ones(40);
        let r = stieltjes_terms(&s, 0, 40).unwrap();
        assert!(r.terms.iter().all(|&a| a == 1.0));
        assert_eq!(r.classification, Classification::DivergenceConsistent);
        let c = carleman_terms(&s, 0, 20).unwrap();
        assert!(c.terms.iter().all(|&a| a == 1.0));
        assert_eq!(c.classification, Classification::DivergenceConsistent);
        let q = subsequence_terms(&s, 0, 4, 10).unwrap();
        assert!(q.terms.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn factorial_moments() {
        let s = oracle::moments_exponential(120);
        let r = stieltjes_terms(&s, 0, 60).unwrap();
        assert!((r.terms[1] - 2f64.powf(-0.25)).abs() < 1e-15);
        assert_eq!(r.classification, Classification::DivergenceConsistent);
        let c = carleman_terms(&s, 0, 60).unwrap();
        // ((2n)!)^{-1/(2n)} at n = 3 is 720^{-1/6}
        assert!((c.terms[2] - 720f64.powf(-1.0 / 6.0)).abs() < 1e-14);
        assert_eq!(c.classification, Classification::DivergenceConsistent);
        let q = subsequence_terms(&s, 0, 2, 1).unwrap();
        assert!((q.terms[0] - 2f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn lognormal_moments() {
        let s = oracle::moments_lognormal(200);
        let r = stieltjes_terms(&s, 0, 200).unwrap();
        for (i, a) in r.terms.iter().enumerate() {
            let want = (-((i + 1) as f64) / 4.0).exp();
            assert!((a - want).abs() <= 1e-14 * want);
        }
        let limit = 1.0 / (0.25f64.exp() - 1.0);
        assert!((r.partial_sums.last().unwrap() - limit).abs() < 1e-10);
        assert_eq!(r.classification, Classification::ConvergenceConsistent);
        let c = carleman_terms(&s, 0, 100).unwrap();
        assert!((c.terms[4] - (-5f64).exp()).abs() < 1e-15);
        assert_eq!(c.classification, Classification::ConvergenceConsistent);
    }

    #[test]
    fn subsequence_with_step_one_matches() {
        let s = oracle::moments_exponential(30);
        let a = stieltjes_terms(&s, 0, 30).unwrap();
        let b = subsequence_terms(&s, 0, 1, 30).unwrap();
        assert_eq!(a.terms, b.terms);
        assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn zero_moment_is_degenerate() {
        let s = oracle::moments_of_atomic(
            &AtomicMeasure::from_pairs(2, &[(1.0, &[0.0, 2.0])]).unwrap(),
            10,
        );
        let r = stieltjes_terms(&s, 0, 10).unwrap();
        assert!(r.degenerate);
        assert!(r.terms.iter().all(|a| a.is_infinite()));
        assert_eq!(r.classification, Classification::DivergenceConsistent);
    }

    #[test]
    fn errors() {
        let s = MomentSequence::from_values_1d(&[2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            stieltjes_terms(&s, 0, 2),
            Err(Error::NotNormalized(_))
        ));
        let s = MomentSequence::from_values_1d(&[1.0, -1.0, 1.0]).unwrap();
        assert!(matches!(
            stieltjes_terms(&s, 0, 2),
            Err(Error::NegativeMoment { index: 1, .. })
        ));
        assert!(matches!(
            carleman_terms(&ones(5), 0, 3),
            Err(Error::DegreeOverflow { .. })
        ));
        assert!(matches!(
            stieltjes_terms(&ones(5), 1, 3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn short_series_is_inconclusive() {
        let r = stieltjes_terms(&oracle::moments_exponential(3), 0, 3).unwrap();
        assert_eq!(r.classification, Classification::Inconclusive);
    }

    #[test]
    fn lemma_on_dirac_is_tight() {
        let r = lemma2_checks(&ones(30), 0, 3, 30).unwrap();
        assert!(r.pass);
        assert_eq!(r.monotonicity.worst_margin, 0.0);
        assert_eq!(r.termwise.worst_margin, 0.0);
    }

    #[test]
    fn lemma_on_oracles() {
        let s = oracle::moments_exponential(64);
        assert!(lemma2_checks(&s, 0, 2, 40).unwrap().pass);
        let s = oracle::moments_lognormal(64);
        for m in 2..=4 {
            assert!(lemma2_checks(&s, 0, m, 60).unwrap().pass);
        }
    }

    #[test]
    fn lemma_rejects_non_moment_data() {
        let s = MomentSequence::from_values_1d(&[1.0, 2.0, 1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            lemma2_checks(&s, 0, 2, 4),
            Err(Error::HypothesisFailure(_))
        ));
    }

    #[test]
    fn generator_marginal_curve() {
        let rho = AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 3.0])]).unwrap();
        let s = oracle::moments_of_atomic(&rho, 6);
        let f = crate::poly::Polynomial::from_int_terms(2, &[(&[0, 1], 1), (&[2, 0], -1)]);
        let g = generator_marginal(&s, &f, 3).unwrap();
        assert_eq!(g.values_1d(), vec![1.0, 2.0, 4.0, 8.0]);
    }
}
