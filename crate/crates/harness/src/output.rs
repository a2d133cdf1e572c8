//! Result files.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical double.

use std::path::Path;

use gsign_core::analysis::TimingStats;
use serde::Serialize;

use crate::error::HarnessError;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:?}")
    }
}

/// Column-oriented table with an integer index column.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub index_name: String,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new(index_name: &str) -> Self {
        Self { index_name: index_name.to_string(), columns: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push((name.into(), values));
    }

    pub fn n_rows(&self) -> usize {
        self.columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![self.index_name.clone()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).expect("in-memory write");
        for k in 0..self.n_rows() {
            let mut rec = vec![k.to_string()];
            rec.extend(self.columns.iter().map(|(_, v)| v.get(k).map_or(String::new(), |x| fmt_f64(*x))));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub estimator: String,
    pub n_iters: usize,
    pub stats: TimingStats,
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["estimator", "n_iters", "total_s", "per_iter_us", "median_per_iter_us"]).expect("in-memory write");
    for r in rows {
        let per_iter_us = r.stats.mean_nanos() / 1e3;
        let total_s = per_iter_us * r.n_iters as f64 / 1e6;
        w.write_record([
            r.estimator.clone(),
            r.n_iters.to_string(),
            fmt_f64(total_s),
            fmt_f64(per_iter_us),
            fmt_f64(r.stats.median_nanos / 1e3),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_text(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("iteration");
        t.push("gsign", vec![1.5, 0.25]);
        t.push("theory", vec![0.1, 0.1]);
        assert_eq!(t.to_csv(), "iteration,gsign,theory\n0,1.5,0.1\n1,0.25,0.1\n");
    }
}
