use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torus_mhd_cli::commands::{self, AuditOptions};
use torus_mhd_cli::{CliError, RunConfig};

macro_rules! overrides {
    ($($key:ident),* $(,)?) => {
        /// Per-key overrides of the configuration file.
        #[derive(Args, Debug, Default)]
        struct Overrides {
            $(
                #[arg(long, value_name = "VALUE", help_heading = "Configuration keys")]
                $key: Option<String>,
            )*
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$key {
                        out.push((stringify!($key), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

overrides!(
    grid_size,
    scheme,
    dt,
    dt_safety,
    cfl_advective,
    cfl_viscous,
    t_end,
    snapshot_every,
    project_b_every,
    epsilon,
    seed,
    preset,
    band,
    n,
    r,
    lattice_radius,
    gamma_ad,
    mu,
    lambda,
    c0,
    gamma,
    norm_orders,
    fit_t0,
    fit_t1,
    out_dir,
    csv_name,
    snapshots,
);

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(self.overrides.pairs())?;
        Ok(cfg)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "torus-mhd",
    version,
    about = "Compressible non-resistive MHD on the unit torus around a Diophantine background field"
)]
struct Cli {
    /// Worker threads for snapshot audits. Runs are single-threaded and
    /// bitwise reproducible whatever the value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan the lattice ball |k| ≤ K for the smallest |n·k|·|k|^r and print a JSON report.
    Certify(ConfigArgs),
    /// Integrate to t_end, writing snapshots and the diagnostics CSV.
    Run(ConfigArgs),
    /// Recompute diagnostics from snapshots and compare with the CSV.
    Audit {
        /// Directory holding snap_*.bin files.
        dir: PathBuf,
        /// Diagnostics CSV (default: DIR/diagnostics.csv).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Recompute with another Lyapunov weight; CSV values are mapped through the affine γ law.
        #[arg(long)]
        gamma: Option<f64>,
        /// Largest accepted relative deviation.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Fit C(1+t)^(-α) to one column of a diagnostics CSV.
    DecayFit {
        csv: PathBuf,
        #[arg(long, default_value = "norm_h7")]
        column: String,
        /// Window start (default 5).
        #[arg(long)]
        t0: Option<f64>,
        /// Window end (default: last time in the file).
        #[arg(long)]
        t1: Option<f64>,
    },
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify(args) => {
            let report = commands::certify(&args.load()?)?;
            println!("{}", json(&report));
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let outcome = commands::run(&cfg)?;
            println!(
                "wrote {} rows to {} and {} snapshots",
                outcome.records.len(),
                outcome.csv_path.display(),
                outcome.snapshot_paths.len()
            );
            println!("{}", outcome.summary.line());
        }
        Command::Audit {
            dir,
            csv,
            gamma,
            tolerance,
        } => {
            let opts = AuditOptions {
                csv,
                gamma,
                threads: cli.threads,
                tolerance,
            };
            let report = commands::audit(&dir, &opts)?;
            println!("{}", json(&report));
            if report.mismatch_count > 0 {
                return Err(CliError::AuditMismatch {
                    count: report.mismatch_count,
                });
            }
        }
        Command::DecayFit { csv, column, t0, t1 } => {
            let report = commands::decay_fit(&csv, &column, (t0, t1))?;
            println!("{}", json(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
