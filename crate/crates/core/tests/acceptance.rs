//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stieltjes::conditions::{
    carleman_terms, lemma2_checks, normalize, stieltjes_terms, Classification,
};
use stieltjes::matrices::{
    check_hypotheses, coordinate_generators, localizing_matrix, max_level, psd_check,
};
use stieltjes::moments::hausdorff_distance;
use stieltjes::oracle;
use stieltjes::pipeline::{run_pipeline, PipelineOptions};
use stieltjes::poly::monomials_up_to;
use stieltjes::reduction::{
    check_generates, pushforward_moments, theta_substitute, SemiAlgebraicPresentation,
};
use stieltjes::solver1d::stieltjes_solve_1d;
use stieltjes::solvermd::{extract_atoms, smallest_flat_level};
use stieltjes::{
    riesz_eval, riesz_eval_exact, Atom, AtomicMeasure, MomentSequence, MultiIndex, Polynomial,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("atomic round-trip", atomic_round_trip),
        ("lemma finite checks", lemma_checks),
        ("determinacy contrast", determinacy_contrast),
        ("curve example pipeline", curve_pipeline),
        ("negative controls", negative_controls),
        ("homomorphism and adjunction", homomorphism_and_adjunction),
        ("commutation echo", commutation_echo),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS  {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL  {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Worst position and weight error after pairing each true atom with its
/// nearest recovered atom.
fn matched(got: &AtomicMeasure, want: &AtomicMeasure) -> (f64, f64) {
    if got.len() != want.len() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let dist = |a: &Atom, b: &Atom| {
        a.point
            .iter()
            .zip(&b.point)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    want.atoms().iter().fold((0.0f64, 0.0f64), |(p, q), b| {
        let a = got
            .atoms()
            .iter()
            .min_by(|a, c| dist(a, b).total_cmp(&dist(c, b)))
            .expect("non-empty");
        (p.max(dist(a, b)), q.max((a.weight - b.weight).abs()))
    })
}

fn atomic_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_pos, mut worst_w, mut slowest) = (0.0f64, 0.0f64, Duration::ZERO);
    for case in 0..100 {
        let dim = 1 + case % 3;
        let atoms = rng.random_range(1..=4);
        let rho = oracle::random_atomic(&mut rng, dim, atoms, 0.0, 10.0, 0.5);
        let start = Instant::now();
        let degree = 2 * (atoms + 2);
        let s = oracle::moments_of_atomic(&rho, degree);
        let hyp = check_hypotheses(&s, &coordinate_generators(dim), (degree - 1) / 2, 1e-8)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure(hyp.pass, || format!("case {case}: hypotheses fail"))?;
        let got = if dim == 1 {
            stieltjes_solve_1d(&s, 1e-10).map(|q| q.measure)
        } else {
            let n = smallest_flat_level(&s, 1e-10)
                .map_err(|e| format!("case {case}: {e}"))?
                .ok_or_else(|| format!("case {case}: never flat"))?;
            extract_atoms(&s, n, 1e-10, case as u64).map(|x| x.measure)
        }
        .map_err(|e| format!("case {case}: {e}"))?;
        slowest = slowest.max(start.elapsed());
        let (p, w) = matched(&got, &rho);
        worst_pos = worst_pos.max(p);
        worst_w = worst_w.max(w);
    }
    let detail = format!(
        "100 cases, max position error {worst_pos:.1e}, max weight error {worst_w:.1e}, slowest {:.3}s",
        slowest.as_secs_f64()
    );
    ensure(
        worst_pos <= 1e-6 && worst_w <= 1e-8 && slowest < Duration::from_secs(1),
        || detail.clone(),
    )?;
    Ok(detail)
}

fn lemma_checks() -> Outcome {
    let degree = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut fixtures = vec![
        (
            "all-ones",
            MomentSequence::from_values_1d(&[1.0; 65]).map_err(|e| e.to_string())?,
        ),
        ("factorial", oracle::moments_exponential(degree)),
        ("lognormal", oracle::moments_lognormal(degree)),
    ];
    for _ in 0..3 {
        let rho = oracle::random_atomic(&mut rng, 1, 3, 0.0, 10.0, 0.5);
        fixtures.push((
            "3-atom",
            normalize(&oracle::moments_of_atomic(&rho, degree)).map_err(|e| e.to_string())?,
        ));
    }
    let start = Instant::now();
    let mut runs = 0;
    for (name, s) in &fixtures {
        for m in 2..=4 {
            let r = lemma2_checks(s, 0, m, 60).map_err(|e| format!("{name}, m = {m}: {e}"))?;
            ensure(r.pass, || {
                format!(
                    "{name}, m = {m}: monotonicity {}, termwise {}, finite sum {}",
                    r.monotonicity.worst_margin, r.termwise.worst_margin, r.finite_sum.worst_margin
                )
            })?;
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{runs} fixture/m pairs to index 60, {:.4}s",
        elapsed.as_secs_f64()
    );
    ensure(elapsed < Duration::from_millis(100), || detail.clone())?;
    Ok(detail)
}

fn determinacy_contrast() -> Outcome {
    let e = oracle::moments_exponential(120);
    let st = stieltjes_terms(&e, 0, 60).map_err(|e| e.to_string())?;
    let ca = carleman_terms(&e, 0, 60).map_err(|e| e.to_string())?;
    ensure(
        st.classification == Classification::DivergenceConsistent
            && ca.classification == Classification::DivergenceConsistent,
        || {
            format!(
                "exponential: stieltjes {}, carleman {}",
                st.classification, ca.classification
            )
        },
    )?;

    let l = oracle::moments_lognormal(200);
    let r = stieltjes_terms(&l, 0, 200).map_err(|e| e.to_string())?;
    let worst_term = r
        .terms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let want = (-((i + 1) as f64) / 4.0).exp();
            (a - want).abs() / want
        })
        .fold(0.0, f64::max);
    let limit = 1.0 / (0.25f64.exp() - 1.0);
    let sum_gap = (r.partial_sums[199] - limit).abs();
    let detail = format!(
        "exponential divergence-consistent twice; lognormal term error {worst_term:.1e}, sum gap {sum_gap:.1e}, {}",
        r.classification
    );
    ensure(
        worst_term <= 1e-14
            && sum_gap <= 1e-10
            && r.classification == Classification::ConvergenceConsistent,
        || detail.clone(),
    )?;
    Ok(detail)
}

/// Atom with `x1 = i/100`, `x2 = x1^k + j/100`, read back from its exact decimal.
fn curve_atom(k: u32, i: u64, j: u64, weight: f64) -> Atom {
    let scale = 10u64.pow(2 * k);
    let num = i.pow(k) + j * scale / 100;
    let x2: f64 = format!("{num}e-{}", 2 * k).parse().expect("decimal");
    Atom {
        point: vec![i as f64 / 100.0, x2],
        weight,
    }
}

fn curve_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut slowest, mut cases) = (0.0f64, Duration::ZERO, 0);
    for k in 1..=3u32 {
        let presentation = SemiAlgebraicPresentation::curve_example(k);
        for set in 0..20 {
            let n = rng.random_range(1..=3);
            let mut atoms: Vec<Atom> = Vec::new();
            while atoms.len() < n {
                let (i, j) = (rng.random_range(0..=300u64), rng.random_range(0..=300u64));
                let w = rng.random_range(10..=100) as f64 / 100.0;
                let a = curve_atom(k, i, j, w);
                let y = [j as f64 / 100.0, i as f64 / 100.0];
                let far = atoms.iter().all(|b| {
                    let yb = [b.point[1] - b.point[0].powi(k as i32), b.point[0]];
                    (y[0] - yb[0]).abs().max((y[1] - yb[1]).abs()) >= 0.25
                });
                if far {
                    atoms.push(a);
                }
            }
            let rho = AtomicMeasure::new(2, atoms).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let fx = oracle::example_fixture(k, &rho, 6 * k as usize)
                .map_err(|e| format!("k = {k}, set {set}: {e}"))?;

            let g =
                check_generates(&fx.presentation, k.max(2) as usize).map_err(|e| e.to_string())?;
            let exact = g.witnesses.as_ref().is_some_and(|ws| {
                ws.iter().enumerate().all(|(i, w)| {
                    theta_substitute(w, &presentation).ok() == Some(Polynomial::var(2, i))
                })
            });
            ensure(g.generated && exact, || {
                format!("k = {k}, set {set}: generation check failed")
            })?;

            let gens = presentation.generators();
            let level = max_level(fx.moments.degree(), gens).unwrap_or(0);
            let hyp =
                check_hypotheses(&fx.moments, gens, level, 1e-8).map_err(|e| e.to_string())?;
            ensure(hyp.localizing.iter().all(|l| l.verdict.is_psd), || {
                format!("k = {k}, set {set}: localizing matrices fail at level {level}")
            })?;

            let report = run_pipeline(&fx.moments, &fx.presentation, &PipelineOptions::default());
            let got = report
                .measure
                .as_ref()
                .filter(|_| report.succeeded())
                .ok_or_else(|| format!("k = {k}, set {set}: {:?}", report.failure))?;
            slowest = slowest.max(start.elapsed());
            let (p, _) = matched(got, &rho);
            worst = worst.max(p);
            cases += 1;
        }
    }
    let detail = format!(
        "{cases} atom sets, max position error {worst:.1e}, slowest {:.3}s",
        slowest.as_secs_f64()
    );
    ensure(worst <= 1e-6 && slowest < Duration::from_secs(1), || {
        detail.clone()
    })?;
    Ok(detail)
}

fn negative_controls() -> Outcome {
    let rho = AtomicMeasure::from_pairs(2, &[(0.75, &[2.0, 1.0])]).map_err(|e| e.to_string())?;
    let s = oracle::moments_of_atomic(&rho, 4);
    let k = SemiAlgebraicPresentation::curve_example(2);
    let l = localizing_matrix(&s, &k.generators()[0], 0).map_err(|e| e.to_string())?;
    let entry = l.entry(0, 0);
    let verdict = psd_check(&l, 1e-8).map_err(|e| e.to_string())?;
    ensure(entry == -3.0 * 0.75 && !verdict.is_psd, || {
        format!("level-0 entry {entry}, psd {}", verdict.is_psd)
    })?;

    let square = SemiAlgebraicPresentation::new(1, vec![Polynomial::var(1, 0).pow(2)])
        .map_err(|e| e.to_string())?;
    for budget in 0..=6 {
        let g = check_generates(&square, budget).map_err(|e| e.to_string())?;
        ensure(!g.generated, || {
            format!("{{x1^2}} generates at budget {budget}")
        })?;
    }
    Ok(format!(
        "level-0 entry {entry} = f1(atom)·weight; {{x1^2}} fails at budgets 0..=6"
    ))
}

fn random_poly(rng: &mut ChaCha8Rng, dim: usize, max_degree: usize) -> Polynomial {
    let basis = monomials_up_to(dim, max_degree);
    let terms = rng.random_range(1..=5);
    (0..terms).fold(Polynomial::zero(dim), |acc, _| {
        let alpha: MultiIndex = basis[rng.random_range(0..basis.len())].clone();
        let c = BigRational::new(
            BigInt::from(rng.random_range(-9..=9)),
            BigInt::from(rng.random_range(1..=4)),
        );
        &acc + &Polynomial::monomial(alpha, c)
    })
}

fn homomorphism_and_adjunction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pair in 0..200 {
        let m = rng.random_range(1..=3);
        let d = rng.random_range(1..=3);
        let gens = (0..m).map(|_| random_poly(&mut rng, d, 2)).collect();
        let k = SemiAlgebraicPresentation::new(d, gens).map_err(|e| e.to_string())?;
        let p = random_poly(&mut rng, m, 4);
        let q = random_poly(&mut rng, m, 4);
        let th = |x: &Polynomial| theta_substitute(x, &k).map_err(|e| e.to_string());
        ensure(th(&(&p * &q))? == &th(&p)? * &th(&q)?, || {
            format!("pair {pair}: θ(pq) ≠ θ(p)θ(q)")
        })?;
        ensure(th(&(&p + &q))? == &th(&p)? + &th(&q)?, || {
            format!("pair {pair}: θ(p+q) ≠ θ(p)+θ(q)")
        })?;
    }

    let mut fixtures: Vec<(String, MomentSequence, SemiAlgebraicPresentation, usize)> = Vec::new();
    for k in 1..=3u32 {
        let rho = AtomicMeasure::new(
            2,
            vec![curve_atom(k, 150, 40, 0.5), curve_atom(k, 20, 210, 0.25)],
        )
        .map_err(|e| e.to_string())?;
        let fx = oracle::example_fixture(k, &rho, 6 * k as usize).map_err(|e| e.to_string())?;
        fixtures.push((format!("curve k = {k}"), fx.moments, fx.presentation, 6));
    }
    let exp = oracle::moments_exponential(12);
    let quad = SemiAlgebraicPresentation::new(
        1,
        vec![Polynomial::from_int_terms(1, &[(&[2], 1), (&[1], 1)])],
    )
    .map_err(|e| e.to_string())?;
    fixtures.push(("exponential".into(), exp, quad, 6));
    fixtures.push((
        "lognormal".into(),
        oracle::moments_lognormal(12),
        SemiAlgebraicPresentation::identity(1),
        12,
    ));
    let mut checked = 0;
    for (name, s, k, e) in &fixtures {
        let pushed = pushforward_moments(s, k, *e).map_err(|err| err.to_string())?;
        for alpha in monomials_up_to(k.num_generators(), *e) {
            let p = Polynomial::monomial(alpha.clone(), BigRational::from_integer(1.into()));
            let tp = theta_substitute(&p, k).map_err(|err| err.to_string())?;
            let equal = match riesz_eval_exact(s, &tp).map_err(|err| err.to_string())? {
                Some(lhs) => {
                    Some(lhs) == riesz_eval_exact(&pushed, &p).map_err(|err| err.to_string())?
                }
                None => riesz_eval(s, &tp).ok() == riesz_eval(&pushed, &p).ok(),
            };
            ensure(equal, || format!("{name}: adjunction fails at {alpha:?}"))?;
            checked += 1;
        }
    }
    Ok(format!(
        "200 random pairs exact; adjunction exact on {} fixtures ({checked} monomials)",
        fixtures.len()
    ))
}

fn commutation_echo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_comm, mut worst_gap, mut cases) = (0.0f64, 0.0f64, 0);
    for case in 0..30 {
        let dim = 2 + case % 2;
        let atoms = rng.random_range(1..=5);
        let rho = oracle::random_atomic(&mut rng, dim, atoms, 0.0, 10.0, 0.5);
        let s = oracle::moments_of_atomic(&rho, 2 * (atoms + 1));
        let n = smallest_flat_level(&s, 1e-10)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("case {case}: never flat"))?;
        let a = extract_atoms(&s, n, 1e-10, 2 * case as u64)
            .map_err(|e| format!("case {case}: {e}"))?;
        let b = extract_atoms(&s, n, 1e-10, 2 * case as u64 + 1)
            .map_err(|e| format!("case {case}: {e}"))?;
        worst_comm = worst_comm.max(a.commutator).max(b.commutator);
        worst_gap = worst_gap.max(hausdorff_distance(&a.measure, &b.measure));
        cases += 1;
    }
    let detail = format!("{cases} flat fixtures, max scaled commutator {worst_comm:.1e}, seed disagreement {worst_gap:.1e}");
    ensure(worst_comm <= 1e-8 && worst_gap <= 1e-8, || detail.clone())?;
    Ok(detail)
}
