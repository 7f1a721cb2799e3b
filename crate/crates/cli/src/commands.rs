//! Subcommand bodies. Each returns a JSON report and an exit code; file
//! outputs are written by the caller-supplied paths.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use stieltjes::conditions::{
    carleman_terms, generator_marginal, lemma2_checks, normalize, stieltjes_terms,
    subsequence_terms, Classification, DiagnosticReport,
};
use stieltjes::matrices::{check_hypotheses, coordinate_generators, max_level, HypothesisReport};
use stieltjes::pipeline::{run_pipeline, PipelineOptions, Stage};
use stieltjes::reduction::{
    check_generates, pushforward_moments, InverseMap, SemiAlgebraicPresentation,
};
use stieltjes::solver1d::{stieltjes_solve_1d_with, SolveOptions};
use stieltjes::solvermd::{
    extract_atoms_with, flat_rank, smallest_flat_level, ExtractOptions, FlatRank,
};
use stieltjes::{Error, MomentSequence, Polynomial};

use crate::format::{self, FormatError};
use crate::spec::FixtureSpec;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CHECK_FAIL: u8 = 3;
pub const EXIT_INCONCLUSIVE: u8 = 4;
pub const EXIT_SOLVE: u8 = 5;
pub const EXIT_PULL_BACK: u8 = 6;

/// Malformed input, unreadable files or invalid flags; always exit 2.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Invalid(String),
}

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError::Invalid(e.to_string())
    }
}

pub struct Outcome {
    pub report: Value,
    pub exit: u8,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn read_file(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.into(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|source| InputError::Io {
        path: path.into(),
        source,
    })
}

pub fn load_moments(path: &Path) -> Result<MomentSequence, InputError> {
    format::read_moments(&read_file(path)?).map_err(|source| InputError::Format {
        path: path.into(),
        source,
    })
}

pub fn load_generators(path: &Path, dim: usize) -> Result<SemiAlgebraicPresentation, InputError> {
    let gens = format::read_polynomials(&read_file(path)?, 'x', dim).map_err(|source| {
        InputError::Format {
            path: path.into(),
            source,
        }
    })?;
    Ok(SemiAlgebraicPresentation::new(dim, gens)?)
}

pub fn load_inverse(path: &Path, m: usize, dim: usize) -> Result<InverseMap, InputError> {
    let polys = format::read_polynomials(&read_file(path)?, 'y', m).map_err(|source| {
        InputError::Format {
            path: path.into(),
            source,
        }
    })?;
    if polys.len() != dim {
        return Err(InputError::Invalid(format!(
            "{}: inverse needs {dim} polynomials, found {}",
            path.display(),
            polys.len()
        )));
    }
    Ok(InverseMap::Explicit(polys))
}

/// Generated files: the moment file and, for the curve example, its
/// generators and inverse.
pub struct GenerateOutput {
    pub moments: String,
    pub generators: Option<String>,
    pub inverse: Option<String>,
    pub entries: usize,
}

pub fn generate(spec_text: &str) -> Result<GenerateOutput, InputError> {
    let spec = FixtureSpec::parse(spec_text).map_err(InputError::Invalid)?;
    let g = spec.generate().map_err(InputError::Invalid)?;
    let (generators, inverse) = match &g.example {
        Some(fx) => {
            let inv = match &fx.inverse {
                InverseMap::Explicit(ps) => Some(format::write_polynomials(ps, "y")),
                InverseMap::Numeric => None,
            };
            (
                Some(format::write_polynomials(fx.presentation.generators(), "x")),
                inv,
            )
        }
        None => (None, None),
    };
    Ok(GenerateOutput {
        entries: g.moments.len(),
        moments: format::write_moments(&g.moments),
        generators,
        inverse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Serialize)]
struct MarginalDiagnostic {
    generator: String,
    terms: usize,
    classification: Option<Classification>,
    partial_sum: Option<f64>,
    median_ratio: Option<f64>,
    slope: Option<f64>,
    degenerate: bool,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    dim: usize,
    degree: usize,
    mass: f64,
    level: usize,
    tolerance: f64,
    generators: Vec<String>,
    hypotheses: HypothesisReport,
    diagnostics: Vec<MarginalDiagnostic>,
    verdict: Verdict,
}

pub struct CheckArgs<'a> {
    pub generators: Option<&'a SemiAlgebraicPresentation>,
    pub level: Option<usize>,
    pub tol: f64,
    pub terms: Option<usize>,
}

pub fn check(s: &MomentSequence, args: &CheckArgs) -> Result<Outcome, InputError> {
    let mass = s.mass();
    let normalized = normalize(s)?;
    let fs: Vec<Polynomial> = match args.generators {
        Some(k) => k.generators().to_vec(),
        None => coordinate_generators(s.dim()),
    };
    let level = match args.level {
        Some(n) => n,
        None => max_level(s.degree(), &fs)
            .ok_or_else(|| InputError::Invalid("degree too small for the generators".into()))?,
    };
    let hypotheses = check_hypotheses(&normalized, &fs, level, args.tol)?;

    let diagnostics: Vec<MarginalDiagnostic> = fs
        .iter()
        .map(|f| {
            let deg = f.degree_or_zero().max(1);
            let n = args.terms.unwrap_or(s.degree() / deg).min(s.degree() / deg);
            let result =
                generator_marginal(&normalized, f, n).and_then(|m| stieltjes_terms(&m, 0, n));
            marginal_summary(f, n, result)
        })
        .collect();

    let verdict = if !hypotheses.pass || diagnostics.iter().any(|d| d.error.is_some()) {
        Verdict::Fail
    } else if diagnostics
        .iter()
        .all(|d| d.classification == Some(Classification::DivergenceConsistent))
    {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let exit = match verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_CHECK_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let report = CheckReport {
        dim: s.dim(),
        degree: s.degree(),
        mass,
        level,
        tolerance: args.tol,
        generators: fs.iter().map(|f| f.to_string()).collect(),
        hypotheses,
        diagnostics,
        verdict,
    };
    Ok(Outcome {
        report: to_value(&report),
        exit,
    })
}

fn marginal_summary(
    f: &Polynomial,
    n: usize,
    r: stieltjes::Result<DiagnosticReport>,
) -> MarginalDiagnostic {
    match r {
        Ok(d) => MarginalDiagnostic {
            generator: f.to_string(),
            terms: n,
            classification: Some(d.classification),
            partial_sum: d.partial_sums.last().copied(),
            median_ratio: d.fit_details.median_ratio,
            slope: d.fit_details.slope,
            degenerate: d.degenerate,
            error: None,
        },
        Err(e) => MarginalDiagnostic {
            generator: f.to_string(),
            terms: n,
            classification: None,
            partial_sum: None,
            median_ratio: None,
            slope: None,
            degenerate: false,
            error: Some(e.to_string()),
        },
    }
}

pub struct DiagnoseArgs {
    pub axis: usize,
    pub terms: Option<usize>,
    pub m: Option<usize>,
}

pub fn diagnose(s: &MomentSequence, args: &DiagnoseArgs) -> Result<Outcome, InputError> {
    let s = normalize(s)?;
    let d = s.degree();
    let n = args.terms.unwrap_or(d).min(d);
    let stieltjes = stieltjes_terms(&s, args.axis, n)?;
    let carleman = carleman_terms(&s, args.axis, n.min(d / 2))?;
    let mut report = json!({
        "axis": args.axis,
        "stieltjes": to_value(&stieltjes),
        "carleman": to_value(&carleman),
    });
    if let Some(m) = args.m {
        let sub = subsequence_terms(&s, args.axis, m, (n / m.max(1)).max(1))?;
        report["subsequence"] = to_value(&sub);
        report["lemma"] = match lemma2_checks(&s, args.axis, m, n) {
            Ok(r) => to_value(&r),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    Ok(Outcome {
        report,
        exit: EXIT_OK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    #[value(name = "1d")]
    OneD,
    #[value(name = "md")]
    MultiD,
}

pub struct SolveArgs {
    pub mode: Option<Mode>,
    pub level: Option<usize>,
    pub seed: u64,
    pub options: SolveOptions,
}

/// Returns the report and, on success, the measure file.
pub fn solve(
    s: &MomentSequence,
    args: &SolveArgs,
) -> Result<(Outcome, Option<String>), InputError> {
    let mode = args.mode.unwrap_or(if s.dim() == 1 {
        Mode::OneD
    } else {
        Mode::MultiD
    });
    let failure = |err: Error, payload: Value| Outcome {
        report: json!({ "stage": "solve", "error": err.to_string(), "diagnostics": payload }),
        exit: EXIT_SOLVE,
    };
    match mode {
        Mode::OneD => {
            if s.dim() != 1 {
                return Err(InputError::Invalid(format!(
                    "--mode 1d needs dim=1 data, found dim={}",
                    s.dim()
                )));
            }
            match stieltjes_solve_1d_with(s, &args.options) {
                Ok(q) => {
                    let file = format::write_measure(&q.measure);
                    let report = json!({ "mode": "1d", "result": to_value(&q) });
                    Ok((
                        Outcome {
                            report,
                            exit: EXIT_OK,
                        },
                        Some(file),
                    ))
                }
                Err(e) => Ok((failure(e, Value::Null), None)),
            }
        }
        Mode::MultiD => {
            let ranks: Vec<FlatRank> = (1..=s.degree() / 2)
                .filter_map(|n| flat_rank(s, n, args.options.rank_tol).ok())
                .collect();
            let level = match args.level {
                Some(n) => n,
                None => match smallest_flat_level(s, args.options.rank_tol)? {
                    Some(n) => n,
                    None => {
                        let err = ranks
                            .last()
                            .map_or(Error::RankCollapse, |r| Error::NotFlat {
                                level: s.degree() / 2,
                                rank: r.rank,
                                previous_rank: r.previous_rank,
                            });
                        return Ok((failure(err, json!({ "ranks": to_value(&ranks) })), None));
                    }
                },
            };
            let opts = ExtractOptions {
                rank_tol: args.options.rank_tol,
                validation_tol: args.options.validation_tol,
                psd_tol: args.options.psd_tol,
                seed: args.seed,
                ..ExtractOptions::default()
            };
            match extract_atoms_with(s, level, &opts) {
                Ok(x) => {
                    let file = format::write_measure(&x.measure);
                    let report = json!({ "mode": "md", "result": to_value(&x) });
                    Ok((
                        Outcome {
                            report,
                            exit: EXIT_OK,
                        },
                        Some(file),
                    ))
                }
                Err(Error::DegreeOverflow {
                    required,
                    available,
                }) => Err(InputError::Invalid(format!(
                    "level {level} needs degree {required}, data has {available}"
                ))),
                Err(e) => Ok((failure(e, json!({ "ranks": to_value(&ranks) })), None)),
            }
        }
    }
}

pub struct ReduceArgs<'a> {
    pub generators: &'a SemiAlgebraicPresentation,
    pub degree: Option<usize>,
    pub budget: Option<usize>,
}

/// Pushed-forward moment file plus a generation summary.
pub fn reduce(s: &MomentSequence, args: &ReduceArgs) -> Result<(Outcome, String), InputError> {
    let k = args.generators;
    let budget = args.budget.unwrap_or_else(|| k.max_degree().max(2));
    let g = check_generates(k, budget)?;
    let e = args.degree.unwrap_or(s.degree() / k.max_degree().max(1));
    let pushed = pushforward_moments(s, k, e)?;
    let report = json!({
        "degree": e,
        "generated": g.generated,
        "budget": budget,
        "witnesses": g.witnesses.map(|ws| ws.iter().map(|w| w.to_string_with_var("y")).collect::<Vec<_>>()),
    });
    Ok((
        Outcome {
            report,
            exit: EXIT_OK,
        },
        format::write_moments(&pushed),
    ))
}

pub fn stage_exit(stage: Stage) -> u8 {
    match stage {
        Stage::Generation => EXIT_CHECK_FAIL,
        Stage::Pushforward => EXIT_INCONCLUSIVE,
        Stage::Solve => EXIT_SOLVE,
        Stage::PullBack | Stage::Verify => EXIT_PULL_BACK,
    }
}

/// Pipeline report and, on success, the recovered measure file.
pub fn pipeline(
    s: &MomentSequence,
    k: &SemiAlgebraicPresentation,
    opts: &PipelineOptions,
) -> (Outcome, Option<String>) {
    let r = run_pipeline(s, k, opts);
    let exit = r.failure.as_ref().map_or(EXIT_OK, |f| stage_exit(f.stage));
    let file = r
        .succeeded()
        .then(|| format::write_measure(r.measure.as_ref().expect("succeeded")));
    (
        Outcome {
            report: to_value(&r),
            exit,
        },
        file,
    )
}
