use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use halfspace_al::experiment::{self, ExperimentConfig, Overrides, Profile};

#[derive(Parser)]
#[command(name = "halfspace-al", version, about = "Active learning of halfspaces under label noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded replicates and write results.csv and summary.json.
    Run(Common),
    /// Run every point of the config's sweep grid and fit label slopes.
    Sweep(Common),
    /// Certify distribution parameters and run the lemma checks; exits 1 on
    /// any failed check.
    Verify(Common),
    /// Print the epoch schedule without querying any label.
    PreviewSchedule(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `out`, else `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplier preset: paper-constants or desk.
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Also write trace.jsonl with one line per epoch.
    #[arg(long)]
    trace: bool,
}

impl Common {
    fn load(&self) -> halfspace_al::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            profile: self.profile,
            replicates: self.replicates,
            trace: self.trace,
        })?;
        Ok(config)
    }
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(command: Command) -> halfspace_al::Result<ExitCode> {
    match command {
        Command::Run(args) => {
            let config = args.load()?;
            let out = experiment::run(&config)?;
            let dir = out_dir(&config);
            experiment::write_run(&dir, &config, &out)?;
            let s = &out.summary;
            println!(
                "{} replicates, {} completed, {} within epsilon; labels per run {}",
                s.replicates, s.completed, s.within_epsilon, s.predicted_labels
            );
            for row in out.rows.iter().filter(|r| !r.is_ok()) {
                eprintln!("replicate {}: {}", row.replicate, row.status);
            }
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let config = args.load()?;
            let out = experiment::sweep(&config)?;
            let dir = out_dir(&config);
            experiment::write_sweep(&dir, &config, &out)?;
            for p in &out.points {
                println!(
                    "{:?}={}  total_labels={}  refine_labels={}",
                    out.axis, p.value, p.total_labels, p.refine_labels
                );
            }
            if let Some(f) = &out.fits {
                println!(
                    "slope total {:.4} (R² {:.4}); refinement {:.4} (R² {:.4})",
                    f.total.slope, f.total.r_squared, f.refine.slope, f.refine.r_squared
                );
            }
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let config = args.load()?;
            let report = experiment::verify(&config)?;
            let dir = out_dir(&config);
            experiment::write_report(&dir, &report)?;
            for c in report.failures() {
                eprintln!("FAIL {}: measured {:.6e}, bound {:.6e}", c.name, c.measured, c.bound);
            }
            println!(
                "{} checks, {} failed; wrote {}",
                report.checks.len(),
                report.failures().count(),
                dir.join("report.json").display()
            );
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::PreviewSchedule(args) => {
            let config = args.load()?;
            let schedule = experiment::preview_schedule(&config)?;
            if args.out.is_some() || config.out.is_some() {
                experiment::write_schedule(&out_dir(&config), &schedule)?;
            }
            println!("{}", serde_json::to_string_pretty(&schedule)?);
            println!("total_labels {}", schedule.total_labels());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
