use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsign_harness::config::{load_config, ExperimentConfig, ExperimentKind, DEFAULT_NEIGHBORS};
use gsign_harness::dataset::{synthetic_dataset, write_dataset};
use gsign_harness::emit::emit_results;
use gsign_harness::experiment::{run_experiment, run_theory, Results};
use gsign_harness::output::fmt_f64;
use gsign_harness::HarnessError;

#[derive(Parser)]
#[command(name = "gsign", version, about = "Adaptive estimation of bandlimited graph signals under impulsive noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Output directory (overrides `outdir`)
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Master seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo runs (overrides `runs`)
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads (overrides `threads`)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the stability bound and steady-state MSD prediction
    Theory {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write draws of the configured noise model to noise.csv
    NoiseDump {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate the synthetic station dataset (readings.csv, coords.csv)
    SynthData {
        #[arg(long, default_value_t = 205)]
        n: usize,
        #[arg(long, default_value_t = 95)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        neighbors: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure(path: &Path, o: &Overrides, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = load_config(path)?;
    if let Some(k) = kind {
        cfg.kind = k;
    }
    if let Some(d) = &o.outdir {
        cfg.outdir = d.clone();
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(r) = o.runs {
        cfg.runs = r;
    }
    if let Some(t) = o.threads {
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), fmt_f64)
}

fn report(results: &Results) {
    match results {
        Results::SteadyState(r) => {
            println!("inverse moment r = {}, step size bound = {}", fmt_f64(r.inverse_moment), opt(r.step_size_bound));
            for s in &r.skipped {
                println!("skipped {s}");
            }
            for e in &r.estimators {
                let c = e.convergence;
                println!(
                    "{:<12} steady MSD {} theory {} converged {} diverged runs {}/{} median step {:.2} us",
                    e.label,
                    opt(c.map(|c| c.steady_value)),
                    opt(e.theoretical_msd),
                    c.is_some_and(|c| c.converged),
                    e.divergence_count,
                    r.config.runs,
                    e.median_step_us
                );
            }
        }
        Results::Sweep(r) => {
            println!("inverse moment r = {}, step size bound = {}", fmt_f64(r.inverse_moment), opt(r.step_size_bound));
            for p in &r.points {
                let c = p.convergence;
                println!(
                    "{:<16} steady MSD {} theory {} iterations to converge {}",
                    p.label,
                    opt(c.map(|c| c.steady_value)),
                    opt(p.theoretical_msd),
                    c.and_then(|c| c.iterations_to_converge).map_or("-".to_string(), |k| k.to_string())
                );
            }
        }
        Results::TimeVarying(r) => {
            println!("tracked node {} dynamic range {}", r.tracked_node, fmt_f64(r.dynamic_range));
            for e in &r.estimators {
                let worst = e.run_max_deviation.iter().cloned().fold(0.0, f64::max);
                println!(
                    "{:<12} max deviation after burn-in {} increment bound {} runs with excursions {} median step {:.2} us",
                    e.label,
                    fmt_f64(worst),
                    fmt_f64(e.increment_bound),
                    e.runs_with_excursion,
                    e.median_step_us
                );
            }
        }
        Results::Theory(r) => {
            println!("inverse moment r = {}, step size bound = {}", fmt_f64(r.inverse_moment), opt(r.step_size_bound));
            for p in &r.points {
                println!("{} step size {} theoretical MSD {}", p.estimator, fmt_f64(p.step_size), opt(p.theoretical_msd));
            }
        }
        Results::NoiseDump(r) => println!("{} draws written", r.samples.len()),
    }
}

fn warnings(results: &Results) -> &[String] {
    match results {
        Results::SteadyState(r) => &r.warnings,
        Results::Sweep(r) => &r.warnings,
        Results::Theory(r) => &r.warnings,
        _ => &[],
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let (cfg, results) = match cli.command {
        Command::Run { config, overrides } => {
            let cfg = configure(&config, &overrides, None)?;
            let r = run_experiment(&cfg)?;
            (cfg, r)
        }
        Command::Theory { config, overrides } => {
            let mut cfg = configure(&config, &overrides, None)?;
            if !matches!(cfg.kind, ExperimentKind::SteadyState | ExperimentKind::StepSizeSweep | ExperimentKind::Theory) {
                return Err(HarnessError::Invalid(vec![format!(
                    "theory needs a sensor, kNN or edge-list graph config, not {}",
                    cfg.kind.name()
                )]));
            }
            let mut t = run_theory(&cfg)?;
            cfg.kind = ExperimentKind::Theory;
            t.config.kind = ExperimentKind::Theory;
            (cfg, Results::Theory(t))
        }
        Command::NoiseDump { config, overrides } => {
            let cfg = configure(&config, &overrides, Some(ExperimentKind::NoiseDump))?;
            let r = run_experiment(&cfg)?;
            (cfg, r)
        }
        Command::SynthData { n, t, seed, neighbors, out } => {
            let data = synthetic_dataset(n, t, neighbors, seed)?;
            write_dataset(&out, &data)?;
            println!("wrote {n} stations x {t} hours to {}", out.display());
            return Ok(());
        }
    };
    for w in warnings(&results) {
        eprintln!("warning: {w}");
    }
    emit_results(&results, &cfg.outdir)?;
    report(&results);
    println!("results in {}", cfg.outdir.display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
