use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pulsedd_cli::figures::{reproduce, FigureId};
use pulsedd_cli::oracle_report::{run_oracle, OracleKind};
use pulsedd_cli::run::simulate;
use pulsedd_cli::{CliError, ConfigError, ScenarioConfig, EXIT_CONFIG, EXIT_FAILURE};

#[derive(Parser, Debug)]
#[command(name = "pulsedd", version, about = "Qubit decoherence under bang-bang and bounded pulse sequences")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative tolerance of the frequency quadrature.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    /// RK4 steps per inter-pulse interval (power of two, at least 4).
    #[arg(long, global = true)]
    steps_per_interval: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file and write one CSV per pulse spacing.
    Simulate {
        config: PathBuf,
        /// Output path when the config has no `output` key (default: config path with .csv).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recompute the curves of one figure panel (1a, 1b, 2a, 2b, 2c, 3a, 3b).
    Reproduce {
        figure: FigureId,
        outdir: PathBuf,
        /// Shorten the runs (units of tau_c).
        #[arg(long)]
        t_max_over_tauc: Option<f64>,
    },
    /// Compare the engine against an independent reference: dephasing, golden_rule or few_mode.
    Oracle { kind: OracleKind, config: PathBuf },
}

impl Cli {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if let Some(tol) = self.quad_tol {
            cfg.rel_tol = tol;
        }
        if let Some(n) = self.steps_per_interval {
            cfg.steps_per_interval = n;
        }
        cfg.validate()
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(ConfigError::Value {
                key: "--jobs".into(),
                reason: "must be at least 1".into(),
            }
            .into());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match &cli.command {
        Command::Simulate { config, output } => {
            let mut cfg = ScenarioConfig::load(config)?;
            cli.apply(&mut cfg)?;
            let default = output.clone().unwrap_or_else(|| config.with_extension("csv"));
            for path in simulate(&cfg, &default)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Reproduce {
            figure,
            outdir,
            t_max_over_tauc,
        } => {
            let mut cfg = ScenarioConfig::default();
            if let Some(t) = t_max_over_tauc {
                cfg.t_max_over_tauc = *t;
            }
            cli.apply(&mut cfg)?;
            for path in reproduce(*figure, outdir, &cfg)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Oracle { kind, config } => {
            let mut cfg = ScenarioConfig::load(config)?;
            cli.apply(&mut cfg)?;
            let report = run_oracle(*kind, &cfg)?;
            println!("{report}");
            Ok(if report.pass { 0 } else { EXIT_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
