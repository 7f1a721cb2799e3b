//! End-to-end reduction for a moment problem on `K(f)`: generation check,
//! pushforward to the image space, Stieltjes solve there, pull-back along
//! `τ`, and a final moment comparison against the input.

use serde::Serialize;

use crate::error::Error;
use crate::matrices::{check_hypotheses, coordinate_generators, HypothesisReport};
use crate::moments::{moment_residual, AtomicMeasure, MomentSequence};
use crate::reduction::{
    check_generates, pull_back_atoms, pushforward_moments, InverseMap, SemiAlgebraicPresentation,
};
use crate::solver1d::{stieltjes_solve_1d_with, SolveOptions};
use crate::solvermd::{extract_atoms_with, smallest_flat_level, ExtractOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generation,
    Pushforward,
    Solve,
    PullBack,
    Verify,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Generation => "generation",
            Stage::Pushforward => "pushforward",
            Stage::Solve => "solve",
            Stage::PullBack => "pull-back",
            Stage::Verify => "verify",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Generation budget; defaults to `max(2, max_j deg f_j)`.
    pub budget: Option<usize>,
    /// Pushforward degree; defaults to `⌊D / max_j deg f_j⌋`.
    pub degree: Option<usize>,
    /// Explicit inverse; defaults to the generation witnesses.
    pub inverse: Option<InverseMap>,
    pub solve: SolveOptions,
    pub seed: u64,
    pub pull_back_tol: f64,
    pub verify_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            budget: None,
            degree: None,
            inverse: None,
            solve: SolveOptions::default(),
            seed: 0,
            pull_back_tol: 1e-6,
            verify_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub generated: bool,
    pub budget: usize,
    pub witnesses: Option<Vec<String>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushforwardSummary {
    pub degree: usize,
    pub hypotheses: HypothesisReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub mode: &'static str,
    pub level: usize,
    pub rank: usize,
    pub max_residual: f64,
    pub image_measure: AtomicMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullBackSummary {
    pub inverse: &'static str,
    pub max_residual: f64,
    pub ambiguous: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub generation: Option<GenerationSummary>,
    pub pushforward: Option<PushforwardSummary>,
    pub solve: Option<SolveSummary>,
    pub pull_back: Option<PullBackSummary>,
    pub verify_residual: Option<f64>,
    pub measure: Option<AtomicMeasure>,
    pub failure: Option<Failure>,
}

impl PipelineReport {
    fn fail(mut self, stage: Stage, err: impl std::fmt::Display) -> Self {
        self.failure = Some(Failure {
            stage,
            message: err.to_string(),
        });
        self
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.measure.is_some()
    }
}

pub fn run_pipeline(
    s: &MomentSequence,
    k: &SemiAlgebraicPresentation,
    opts: &PipelineOptions,
) -> PipelineReport {
    let mut report = PipelineReport {
        generation: None,
        pushforward: None,
        solve: None,
        pull_back: None,
        verify_residual: None,
        measure: None,
        failure: None,
    };
    if s.dim() != k.dim() {
        let err = Error::DimMismatch {
            expected: k.dim(),
            found: s.dim(),
        };
        return report.fail(Stage::Generation, err);
    }

    let budget = opts.budget.unwrap_or_else(|| k.max_degree().max(2));
    let generation = match check_generates(k, budget) {
        Ok(g) => g,
        Err(e) => return report.fail(Stage::Generation, e),
    };
    report.generation = Some(GenerationSummary {
        generated: generation.generated,
        budget,
        witnesses: generation
            .witnesses
            .as_ref()
            .map(|w| w.iter().map(|p| p.to_string_with_var("y")).collect()),
        note: (!generation.generated).then(|| {
            "generators do not reach every coordinate within the budget; a representing \
             measure is only guaranteed on the subalgebra generated by f"
                .to_string()
        }),
    });
    let inverse = match (&opts.inverse, generation.witnesses) {
        (Some(inv), _) => inv.clone(),
        (None, Some(w)) => InverseMap::Explicit(w),
        (None, None) => return report.fail(
            Stage::Generation,
            "generation check failed; representation holds only on the subalgebra generated by f",
        ),
    };

    let top = k.max_degree().max(1);
    let degree = opts.degree.unwrap_or(s.degree() / top);
    let pushed = match pushforward_moments(s, k, degree) {
        Ok(p) => p,
        Err(e) => return report.fail(Stage::Pushforward, e),
    };
    let level = degree.saturating_sub(1) / 2;
    let hypotheses = match check_hypotheses(
        &pushed,
        &coordinate_generators(k.num_generators()),
        level,
        opts.solve.psd_tol,
    ) {
        Ok(h) => h,
        Err(e) => return report.fail(Stage::Pushforward, e),
    };
    let pass = hypotheses.pass;
    report.pushforward = Some(PushforwardSummary { degree, hypotheses });
    if !pass {
        return report.fail(
            Stage::Pushforward,
            "pushed-forward moments fail the positivity test on ℝ₊^m",
        );
    }

    let nu = if k.num_generators() == 1 {
        match stieltjes_solve_1d_with(&pushed, &opts.solve) {
            Ok(q) => {
                report.solve = Some(SolveSummary {
                    mode: "1d",
                    level: degree / 2,
                    rank: q.measure.len(),
                    max_residual: q.max_residual,
                    image_measure: q.measure.clone(),
                });
                q.measure
            }
            Err(e) => return report.fail(Stage::Solve, e),
        }
    } else {
        let level = match smallest_flat_level(&pushed, opts.solve.rank_tol) {
            Ok(Some(n)) => n,
            Ok(None) => {
                return report.fail(Stage::Solve, "pushed-forward data is not flat at any level")
            }
            Err(e) => return report.fail(Stage::Solve, e),
        };
        let eo = ExtractOptions {
            rank_tol: opts.solve.rank_tol,
            validation_tol: opts.solve.validation_tol,
            psd_tol: opts.solve.psd_tol,
            seed: opts.seed,
            ..ExtractOptions::default()
        };
        match extract_atoms_with(&pushed, level, &eo) {
            Ok(x) => {
                report.solve = Some(SolveSummary {
                    mode: "md",
                    level,
                    rank: x.rank,
                    max_residual: x.max_residual,
                    image_measure: x.measure.clone(),
                });
                x.measure
            }
            Err(e) => return report.fail(Stage::Solve, e),
        }
    };

    let pulled = match pull_back_atoms(&nu, k, &inverse, opts.pull_back_tol) {
        Ok(p) => p,
        Err(e) => return report.fail(Stage::PullBack, e),
    };
    report.pull_back = Some(PullBackSummary {
        inverse: match inverse {
            InverseMap::Explicit(_) => "explicit",
            InverseMap::Numeric => "numeric",
        },
        max_residual: pulled.max_residual,
        ambiguous: pulled.ambiguous.clone(),
    });

    let residual = match moment_residual(s, &pulled.measure, s.degree()) {
        Ok(r) => r,
        Err(e) => return report.fail(Stage::Verify, e),
    };
    report.verify_residual = Some(residual);
    report.measure = Some(pulled.measure);
    if !(residual <= opts.verify_tol) {
        let err = Error::ReproductionFailure {
            residual,
            tolerance: opts.verify_tol,
        };
        return report.fail(Stage::Verify, err);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::hausdorff_distance;
    use crate::oracle;
    use crate::poly::Polynomial;

    #[test]
    fn curve_example_single_atom() {
        let rho = AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 3.0])]).unwrap();
        let fx = oracle::example_fixture(2, &rho, 8).unwrap();
        let r = run_pipeline(&fx.moments, &fx.presentation, &PipelineOptions::default());
        assert!(r.succeeded(), "{:?}", r.failure);
        assert!(hausdorff_distance(r.measure.as_ref().unwrap(), &rho) < 1e-9);
        let w = r.generation.unwrap().witnesses.unwrap();
        assert_eq!(w, vec!["y2".to_string(), "y2^2 + y1".to_string()]);
    }

    #[test]
    fn identity_generators_reduce_to_solve() {
        let rho = AtomicMeasure::from_pairs(2, &[(0.4, &[1.0, 2.0]), (0.6, &[3.0, 0.5])]).unwrap();
        let s = oracle::moments_of_atomic(&rho, 6);
        let r = run_pipeline(
            &s,
            &SemiAlgebraicPresentation::identity(2),
            &PipelineOptions::default(),
        );
        assert!(r.succeeded(), "{:?}", r.failure);
        assert!(hausdorff_distance(r.measure.as_ref().unwrap(), &rho) < 1e-8);
        let solve = r.solve.unwrap();
        assert!(hausdorff_distance(&solve.image_measure, &rho) < 1e-8);
    }

    #[test]
    fn even_generator_stops_at_generation() {
        let s =
            oracle::moments_of_atomic(&AtomicMeasure::from_pairs(1, &[(1.0, &[2.0])]).unwrap(), 8);
        let k = SemiAlgebraicPresentation::new(1, vec![Polynomial::var(1, 0).pow(2)]).unwrap();
        let r = run_pipeline(&s, &k, &PipelineOptions::default());
        assert_eq!(r.failure.as_ref().unwrap().stage, Stage::Generation);
        let g = r.generation.unwrap();
        assert!(!g.generated);
        assert!(g.note.unwrap().contains("subalgebra"));
    }

    #[test]
    fn atoms_outside_k_fail_positivity() {
        let rho = AtomicMeasure::from_pairs(2, &[(1.0, &[1.0, 0.0])]).unwrap();
        let s = oracle::moments_of_atomic(&rho, 8);
        let r = run_pipeline(
            &s,
            &SemiAlgebraicPresentation::curve_example(2),
            &PipelineOptions::default(),
        );
        assert_eq!(r.failure.unwrap().stage, Stage::Pushforward);
    }
}
