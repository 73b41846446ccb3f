use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use otha_core::experiment::{
    generate, run_pipeline, run_sweep, sweep_csv, verify_identities, ExperimentConfig, MollifyRule,
};

/// Harmonic approximation diagnostics for planar optimal transport.
#[derive(Parser)]
#[command(name = "otha", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline once and write a JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Mollify at r = (E + D)^(1/4) instead of the configured mollify_r.
        #[arg(long)]
        scaled_r: bool,
    },
    /// Run one pipeline per epsilon; writes per-epsilon JSON and sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scaled_r: bool,
    },
    /// Print the pass/fail table; exit status 0 iff every row passes.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn rule(scaled: bool) -> MollifyRule {
    if scaled {
        MollifyRule::Scaled
    } else {
        MollifyRule::Fixed
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("OTHA_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("OTHA_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        bail!("OTHA_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out, scaled_r } => {
            let config = load_config(&config)?;
            let (lambda, mu) = generate(&config)?;
            let state = run_pipeline(&lambda, &mu, &config, rule(scaled_r))?;
            let json = serde_json::to_string_pretty(&state.report)?;
            fs::write(&out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
        Command::Sweep { config, epsilons, out, scaled_r } => {
            let config = load_config(&config)?;
            if let Some(bad) = epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
                bail!("epsilon values must be finite and nonnegative, got {bad}");
            }
            let rows = run_sweep(&config, &epsilons, rule(scaled_r))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for row in &rows {
                let path = out.join(format!("report_eps_{}.json", row.epsilon));
                let json = serde_json::to_string_pretty(&row.report)?;
                fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            let path = out.join("sweep.csv");
            fs::write(&path, sweep_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
            Ok(true)
        }
        Command::Verify { config } => {
            let config = load_config(&config)?;
            let (lambda, mu) = generate(&config)?;
            let table = verify_identities(&lambda, &mu, &config)?;
            print!("{}", table.render());
            let ok = table.all_passed();
            println!("{}", if ok { "all rows pass" } else { "some rows fail" });
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| run(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
