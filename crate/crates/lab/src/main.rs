use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sofic_core::entropy::EstimateMode;
use sofic_lab::commands;
use sofic_lab::config::Experiment;
use sofic_lab::report::to_json;
use sofic_lab::run::resolve_workers;
use sofic_lab::LabError;

#[derive(Parser)]
#[command(name = "sofic-lab", version, about = "Sofic entropy experiments on finite models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(short, long, env = "SOFIC_WORKERS")]
    workers: Option<usize>,
    /// Output directory (defaults to the config's `output.dir`).
    #[arg(short, long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Top,
    Avg,
    Measure,
    Mp,
    #[value(name = "relA")]
    RelA,
}

impl From<Mode> for EstimateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Top => EstimateMode::Top,
            Mode::Avg => EstimateMode::Avg,
            Mode::Measure => EstimateMode::Measure,
            Mode::Mp => EstimateMode::Mp,
            Mode::RelA => EstimateMode::RelA,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print model sizes, volumes and sofic quality per radius.
    BuildModel {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate an entropy and write JSON, CSV and manifest files.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(short, long, value_enum)]
        mode: Mode,
    },
    /// Run the invariant suite; exits 1 on any failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the topological estimate with measure estimates over a grid.
    ScanVariational {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(Experiment, usize, PathBuf), LabError> {
    let mut exp = Experiment::load(&common.config)?;
    if let Some(s) = common.seed {
        exp.seed = s;
    }
    let workers = resolve_workers(common.workers);
    let out = common.out_dir.clone().unwrap_or_else(|| PathBuf::from(&exp.output_dir));
    Ok((exp, workers, out))
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::BuildModel { common } => {
            let (exp, _, _) = load(&common)?;
            print!("{}", to_json(&commands::build_model(&exp)?));
        }
        Command::Estimate { common, mode } => {
            let (exp, workers, out) = load(&common)?;
            let res = commands::estimate(&exp, mode.into(), workers, &out)?;
            for f in &res.report.finals {
                let v = f
                    .estimate
                    .finite()
                    .map_or("-inf (empty)".to_string(), |v| format!("{v:.6}"));
                println!("{} engine: {v}", f.engine.name());
            }
            for p in &res.files {
                println!("wrote {}", p.display());
            }
            if res.report.diagnostics.oracle_failures > 0 {
                return Err(LabError::Invariant("oracle cross-check disagreed".into()));
            }
        }
        Command::Verify { common } => {
            let (exp, _, _) = load(&common)?;
            let rows = commands::verify(&exp);
            print!("{}", commands::format_checks(&rows));
            let failed = rows.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(LabError::Invariant(format!("{failed} check(s) failed")));
            }
        }
        Command::ScanVariational { common } => {
            let (exp, workers, out) = load(&common)?;
            let res = commands::scan_variational(&exp, workers, &out)?;
            let s = &res.scan;
            println!(
                "sup {:?} at {:?}, topological {:?}, gap {:?}",
                s.sup.finite(),
                s.argmax,
                s.topological.finite(),
                s.gap
            );
            for p in &res.files {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sofic-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
