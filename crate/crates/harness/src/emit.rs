//! Writes experiment results to an output directory.
//!
//! Every kind writes `summary.json` and `config.resolved.toml`. Numerical
//! CSVs depend only on the config and seed; wall times go to `timing.csv`
//! alone.

use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::{run_seed, EstimatorOutcome, Results};
use crate::output::{fmt_f64, timing_csv, write_json, write_text, Table, TimingRow};

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    experiment: &'static str,
    master_seed: u64,
    run_seeds: Vec<u64>,
    result: &'a T,
}

fn summary<T: Serialize>(dir: &Path, cfg: &ExperimentConfig, result: &T) -> Result<(), HarnessError> {
    let s = Summary {
        experiment: cfg.kind.name(),
        master_seed: cfg.seed,
        run_seeds: (0..cfg.runs).map(|r| run_seed(cfg.seed, r)).collect(),
        result,
    };
    write_json(dir, "summary.json", &s)?;
    write_text(dir, "config.resolved.toml", &cfg.to_toml())
}

fn timing_rows(outcomes: &[EstimatorOutcome], n_iters: usize) -> Vec<TimingRow> {
    outcomes
        .iter()
        .map(|o| TimingRow { estimator: o.label.clone(), n_iters, stats: o.trace.timing.clone() })
        .collect()
}

/// MSD and MAD tables with one column per outcome. Each outcome with a
/// theory value gets a constant column: `theory` when there is exactly one,
/// `theory_<label>` otherwise.
fn metric_tables(outcomes: &[EstimatorOutcome], n_iters: usize) -> (Table, Table) {
    let mut msd = Table::new("iteration");
    let mut mad = Table::new("iteration");
    for o in outcomes {
        msd.push(o.label.clone(), o.trace.msd.clone());
        mad.push(o.label.clone(), o.trace.mad.clone());
    }
    let with_theory: Vec<&EstimatorOutcome> = outcomes.iter().filter(|o| o.theoretical_msd.is_some()).collect();
    for o in &with_theory {
        let name = if with_theory.len() == 1 { "theory".to_string() } else { format!("theory_{}", o.label) };
        msd.push(name, vec![o.theoretical_msd.expect("filtered"); n_iters]);
    }
    (msd, mad)
}

pub fn emit_results(results: &Results, outdir: &Path) -> Result<(), HarnessError> {
    match results {
        Results::SteadyState(r) => {
            let n = r.config.iters;
            let (msd, mad) = metric_tables(&r.estimators, n);
            write_text(outdir, "msd.csv", &msd.to_csv())?;
            write_text(outdir, "mad.csv", &mad.to_csv())?;
            write_text(outdir, "timing.csv", &timing_csv(&timing_rows(&r.estimators, n)))?;
            summary(outdir, &r.config, r)
        }
        Results::Sweep(r) => {
            let n = r.config.iters;
            let (msd, mad) = metric_tables(&r.points, n);
            write_text(outdir, "msd.csv", &msd.to_csv())?;
            write_text(outdir, "mad.csv", &mad.to_csv())?;
            write_text(outdir, "timing.csv", &timing_csv(&timing_rows(&r.points, n)))?;
            summary(outdir, &r.config, r)
        }
        Results::TimeVarying(r) => {
            let mut msd = Table::new("step");
            let mut mad = Table::new("step");
            let mut tracked = Table::new("step");
            tracked.push("truth", r.truth.clone());
            let mut rows = Vec::new();
            for e in &r.estimators {
                msd.push(e.label.clone(), e.trace.msd.clone());
                mad.push(e.label.clone(), e.trace.mad.clone());
                tracked.push(e.label.clone(), e.tracked.clone());
                rows.push(TimingRow { estimator: e.label.clone(), n_iters: r.n_steps, stats: e.trace.timing.clone() });
            }
            write_text(outdir, "msd.csv", &msd.to_csv())?;
            write_text(outdir, "mad.csv", &mad.to_csv())?;
            write_text(outdir, "tracked.csv", &tracked.to_csv())?;
            write_text(outdir, "timing.csv", &timing_csv(&rows))?;
            summary(outdir, &r.config, r)
        }
        Results::Theory(r) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["estimator", "step_size", "step_size_bound", "inverse_moment", "theoretical_msd"])
                .expect("in-memory write");
            for p in &r.points {
                w.write_record([
                    p.estimator.clone(),
                    fmt_f64(p.step_size),
                    r.step_size_bound.map_or(String::new(), fmt_f64),
                    fmt_f64(r.inverse_moment),
                    p.theoretical_msd.map_or(String::new(), fmt_f64),
                ])
                .expect("in-memory write");
            }
            let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
            write_text(outdir, "theory.csv", &text)?;
            summary(outdir, &r.config, r)
        }
        Results::NoiseDump(r) => {
            let mut t = Table::new("index");
            t.push("value", r.samples.clone());
            write_text(outdir, "noise.csv", &t.to_csv())?;
            summary(outdir, &r.config, r)
        }
    }
}
