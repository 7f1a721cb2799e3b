use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stieltjes::pipeline::PipelineOptions;
use stieltjes::reduction::InverseMap;
use stieltjes::solver1d::SolveOptions;

use stieltjes_cli::commands::{
    self, CheckArgs, DiagnoseArgs, InputError, Mode, Outcome, ReduceArgs, SolveArgs,
};
use stieltjes_cli::render::render_text;

#[derive(Parser)]
#[command(
    name = "stieltjes",
    version,
    about = "Truncated Stieltjes moment problems: checks, diagnostics, atom recovery"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Tolerances {
    /// Relative PSD tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Singular-value threshold for rank decisions, relative to the largest.
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Moment-reproduction tolerance for recovered measures.
    #[arg(long, default_value_t = 1e-8)]
    validation_tol: f64,
    /// Nodes in [-node_tol, 0) are clamped to 0.
    #[arg(long, default_value_t = 1e-6)]
    node_tol: f64,
}

impl Tolerances {
    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rank_tol: self.rank_tol,
            validation_tol: self.validation_tol,
            node_tol: self.node_tol,
            psd_tol: self.tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the moment file of a fixture described by a TOML spec.
    Generate {
        spec: PathBuf,
        /// Moment file to write (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// For the curve example: write its generators here.
        #[arg(long)]
        generators: Option<PathBuf>,
        /// For the curve example: write its explicit inverse here.
        #[arg(long)]
        inverse: Option<PathBuf>,
    },
    /// Positivity and growth checks. Exit 0 pass, 3 fail, 4 inconclusive.
    Check {
        moments: PathBuf,
        /// Generators of K, one per line (default: the coordinates).
        #[arg(long)]
        generators: Option<PathBuf>,
        /// Truncation level (default: largest n with 2n + max deg f <= D).
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Series terms per generator marginal.
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Stieltjes and Carleman series for one axis.
    Diagnose {
        moments: PathBuf,
        #[arg(long, default_value_t = 1)]
        axis: usize,
        #[arg(long)]
        terms: Option<usize>,
        /// Subsequence step; also runs the finite monotonicity/sum checks.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Recover an atomic measure. Exit 5 if the data cannot be solved.
    Solve {
        moments: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Level for --mode md (default: smallest flat level).
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tolerances: Tolerances,
        /// Measure file to write.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Push moments forward along the generators.
    Reduce {
        moments: PathBuf,
        #[arg(long)]
        generators: PathBuf,
        /// Degree of the pushed-forward data (default: floor(D / max deg f)).
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        /// Moment file to write (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generation check, pushforward, solve, pull-back and verification.
    /// Exit 3 generation, 4 positivity, 5 solve, 6 pull-back or verification.
    Pipeline {
        moments: PathBuf,
        #[arg(long)]
        generators: PathBuf,
        /// Explicit inverse over y1..ym (default: generation witnesses).
        #[arg(long, conflicts_with = "numeric_inverse")]
        inverse: Option<PathBuf>,
        /// Pull back by multi-start Newton instead of an explicit inverse.
        #[arg(long)]
        numeric_inverse: bool,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tolerances: Tolerances,
        #[arg(long, default_value_t = 1e-6)]
        pullback_tol: f64,
        /// Relative tolerance of the final moment comparison.
        #[arg(long, default_value_t = 1e-6)]
        verify_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn emit(outcome: &Outcome, format: Format) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&outcome.report).expect("json")
        ),
        Format::Text => print!("{}", render_text(&outcome.report)),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), InputError> {
    match path {
        Some(p) => commands::write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, InputError> {
    let format = cli.format;
    match cli.command {
        Command::Generate {
            spec,
            output,
            generators,
            inverse,
        } => {
            let out = commands::generate(&commands::read_file(&spec)?)?;
            for (flag, path, text) in [
                ("--generators", &generators, &out.generators),
                ("--inverse", &inverse, &out.inverse),
            ] {
                match (path, text) {
                    (Some(p), Some(t)) => commands::write_file(p, t)?,
                    (Some(_), None) => {
                        return Err(InputError::Invalid(format!(
                            "{flag} only applies to the example fixture"
                        )))
                    }
                    _ => {}
                }
            }
            write_or_print(output.as_deref(), &out.moments)?;
            Ok(commands::EXIT_OK)
        }
        Command::Check {
            moments,
            generators,
            level,
            tol,
            terms,
        } => {
            let s = commands::load_moments(&moments)?;
            let k = generators
                .map(|g| commands::load_generators(&g, s.dim()))
                .transpose()?;
            let outcome = commands::check(
                &s,
                &CheckArgs {
                    generators: k.as_ref(),
                    level,
                    tol,
                    terms,
                },
            )?;
            emit(&outcome, format);
            Ok(outcome.exit)
        }
        Command::Diagnose {
            moments,
            axis,
            terms,
            m,
        } => {
            let s = commands::load_moments(&moments)?;
            if axis == 0 || axis > s.dim() {
                return Err(InputError::Invalid(format!(
                    "--axis must be in 1..={}",
                    s.dim()
                )));
            }
            let outcome = commands::diagnose(
                &s,
                &DiagnoseArgs {
                    axis: axis - 1,
                    terms,
                    m,
                },
            )?;
            emit(&outcome, format);
            Ok(outcome.exit)
        }
        Command::Solve {
            moments,
            mode,
            level,
            seed,
            tolerances,
            output,
        } => {
            let s = commands::load_moments(&moments)?;
            let args = SolveArgs {
                mode,
                level,
                seed,
                options: tolerances.solve_options(),
            };
            let (outcome, file) = commands::solve(&s, &args)?;
            if let (Some(p), Some(f)) = (&output, &file) {
                commands::write_file(p, f)?;
            }
            emit(&outcome, format);
            Ok(outcome.exit)
        }
        Command::Reduce {
            moments,
            generators,
            degree,
            budget,
            output,
        } => {
            let s = commands::load_moments(&moments)?;
            let k = commands::load_generators(&generators, s.dim())?;
            let (outcome, file) = commands::reduce(
                &s,
                &ReduceArgs {
                    generators: &k,
                    degree,
                    budget,
                },
            )?;
            match &output {
                Some(p) => {
                    commands::write_file(p, &file)?;
                    emit(&outcome, format);
                }
                None => print!("{file}"),
            }
            Ok(outcome.exit)
        }
        Command::Pipeline {
            moments,
            generators,
            inverse,
            numeric_inverse,
            budget,
            degree,
            seed,
            tolerances,
            pullback_tol,
            verify_tol,
            output,
        } => {
            let s = commands::load_moments(&moments)?;
            let k = commands::load_generators(&generators, s.dim())?;
            let inverse = if numeric_inverse {
                Some(InverseMap::Numeric)
            } else {
                inverse
                    .map(|p| commands::load_inverse(&p, k.num_generators(), s.dim()))
                    .transpose()?
            };
            let opts = PipelineOptions {
                budget,
                degree,
                inverse,
                solve: tolerances.solve_options(),
                seed,
                pull_back_tol: pullback_tol,
                verify_tol,
            };
            let (outcome, file) = commands::pipeline(&s, &k, &opts);
            if let (Some(p), Some(f)) = (&output, &file) {
                commands::write_file(p, f)?;
            }
            emit(&outcome, format);
            Ok(outcome.exit)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::EXIT_INPUT)
        }
    }
}
