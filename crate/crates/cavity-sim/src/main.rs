use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavity_sim::{scenario, verify, RunConfig};

#[derive(Parser)]
#[command(
    name = "cavity-sim",
    version,
    about = "Two-level atom in a lossy driven cavity: deterministic runs, sweeps, presets and self-checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one config and write its CSV and meta files.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write an SVG preview plot.
        #[arg(long)]
        svg: bool,
    },
    /// Repeat one config across a list of values of a numeric key.
    Sweep {
        /// TOML run configuration used as the base of every run.
        #[arg(long)]
        config: PathBuf,
        /// Config key to vary (e.g. gamma_c).
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the built-in cross-checks against the independent references.
    Verify,
    /// Write the artifacts of a named scenario preset (fig1..fig5).
    Preset {
        /// Preset key.
        key: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> cavity_sim::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, svg } => {
            let cfg = RunConfig::from_file(&config)?;
            let (traj, paths) = scenario::run_scenario(&cfg, &out, svg, &[])?;
            println!("wrote {} ({} samples)", paths.csv.display(), traj.rows.len());
            println!("wrote {}", paths.meta.display());
            if let Some(svg_path) = paths.svg {
                println!("wrote {}", svg_path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = RunConfig::from_file(&config)?;
            let summary = scenario::run_sweep(&cfg, &axis, &values, &out)?;
            println!(
                "wrote {} ({} runs along {})",
                summary.path.display(),
                summary.rows.len(),
                summary.axis
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let report = verify::run_all();
            println!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Preset { key, out } => {
            for paths in scenario::run_preset(&key, &out)? {
                println!("wrote {}", paths.csv.display());
                if let Some(svg_path) = paths.svg {
                    println!("wrote {}", svg_path.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
