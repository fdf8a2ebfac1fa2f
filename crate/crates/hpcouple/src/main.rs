use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hpcouple::config::{ConfigError, StudyConfig};
use hpcouple::core::analysis::DofRoot;
use hpcouple::core::problem::{assemble_problem, SolveOptions};
use hpcouple::core::system::Factorization;
use hpcouple::study::{self, StepResult};
use hpcouple::summary::{summarize, Expectations};
use hpcouple::{meshio, parallel, verify};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "hpcouple", version, about = "hp FEM/BEM coupling with a Nitsche interface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one step of a sweep and print its errors.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Step of the sweep (0-based).
        #[arg(long, default_value_t = 0)]
        step: u32,
        /// Write the meshes as text.
        #[arg(long)]
        dump_mesh: Option<PathBuf>,
        /// Write the reduced dense system as text.
        #[arg(long)]
        dump_system: Option<PathBuf>,
    },
    /// Run a convergence sweep and write CSV.
    Study {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Fit rates to a study CSV.
    Summarize {
        csv: PathBuf,
        /// Admissible algebraic rate, `lo:hi`.
        #[arg(long)]
        expect_rate: Option<String>,
        #[arg(long)]
        min_corr: Option<f64>,
        /// Root of N the hp expectation applies to: sqrt or cbrt.
        #[arg(long)]
        root: Option<String>,
    },
    /// Quick self-checks of the discretization.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eta0: Option<String>,
    /// Grading factor on both sides.
    #[arg(long)]
    sigma: Option<String>,
    /// Degree slope on both sides.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    /// CSV destination (study) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other `key=value` setting; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<StudyConfig, ConfigError> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            cfg.apply(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        }
        let flags = [
            ("example", &self.example),
            ("mode", &self.mode),
            ("eta0", &self.eta0),
            ("sigma", &self.sigma),
            ("mu", &self.mu),
            ("max_layers", &self.layers),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("--set expects key=value, got '{kv}'")))?;
            cfg.set(k, v)?;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<hpcouple::core::Error> for Failure {
    fn from(e: hpcouple::core::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn warn_step(r: &StepResult) {
    if r.factorization == Factorization::PivotedLu {
        eprintln!("warning: step {}: Cholesky failed, used pivoted LU", r.record.step);
    }
    if r.below_theory {
        eprintln!("warning: step {}: stabilization below the coercivity threshold", r.record.step);
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            cfg,
            step,
            dump_mesh,
            dump_system,
        } => {
            let cfg = cfg.load()?;
            let setup = study::step_setup(&cfg, step)?;
            if let Some(p) = dump_mesh {
                meshio::write_meshes(BufWriter::new(File::create(p)?), &setup)?;
            }
            if let Some(p) = dump_system {
                let opts = SolveOptions {
                    eta0: cfg.eta0,
                    bem_scale: cfg.bem_scale,
                };
                let asm = assemble_problem(&setup, &opts)?;
                meshio::write_system(BufWriter::new(File::create(p)?), &asm.reduced)?;
            }
            let r = study::solve_step(&cfg, &setup, step as usize)?;
            warn_step(&r);
            let e = &r.record.errors;
            println!("N_FE {}  N_BE {}  h_max {:.4}  p_max {}", r.record.n_fe, r.record.n_be, r.record.h_max, r.record.p_max);
            println!("err_total {:.6e}  err_fe {:.6e}  err_be {:.6e}  err_jump {:.6e}", e.total, e.fe_energy, e.be_energy, e.jump);
            println!("residual {:.2e}  asymmetry {:.2e}  factorization {:?}", r.residual, r.asymmetry, r.factorization);
        }
        Command::Study { cfg } => {
            let cfg = cfg.load()?;
            let threads = parallel::init_threads().map_err(Failure::Config)?;
            eprintln!("{} {} sweep, {} threads", cfg.example, cfg.mode, threads);
            let results = study::run_study(&cfg, |r| {
                warn_step(r);
                eprintln!(
                    "step {:>2}  N {:>6}  err {:.4e}  ({:.2}s)",
                    r.record.step,
                    r.record.n(),
                    r.record.errors.total,
                    r.record.wall_time
                );
            })?;
            let records: Vec<_> = results.into_iter().map(|r| r.record).collect();
            let mut w = output(&cfg.out)?;
            study::write_csv(&mut w, cfg.mode, study::dof_root(cfg.example), &records)
                .map_err(|e| Failure::Config(e.to_string()))?;
            w.flush()?;
        }
        Command::Summarize {
            csv,
            expect_rate,
            min_corr,
            root,
        } => {
            let file = File::open(&csv).map_err(|e| Failure::Config(format!("{}: {e}", csv.display())))?;
            let records =
                study::read_csv(file).map_err(|e| Failure::Config(format!("{}: {e}", csv.display())))?;
            let rate = match expect_rate {
                Some(s) => {
                    let (lo, hi) = s
                        .split_once(':')
                        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                        .ok_or_else(|| Failure::Config(format!("--expect-rate expects lo:hi, got '{s}'")))?;
                    Some((lo, hi))
                }
                None => None,
            };
            let root = match root.as_deref() {
                None => None,
                Some("sqrt") => Some(DofRoot::Square),
                Some("cbrt") => Some(DofRoot::Cube),
                Some(s) => return Err(Failure::Config(format!("--root expects sqrt or cbrt, got '{s}'"))),
            };
            let expect = Expectations {
                rate,
                min_correlation: min_corr,
                root,
            };
            let s = summarize(&records, &expect).map_err(|e| Failure::Config(e.to_string()))?;
            print!("{}", s.render());
            if s.passed == Some(false) {
                return Err(Failure::Numeric("expectations not met".into()));
            }
        }
        Command::Verify { seed } => {
            let checks = verify::quick_checks(seed)?;
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Failure::Numeric("some checks failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
