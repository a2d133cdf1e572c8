//! Time-varying station readings and the synthetic stand-in dataset.
//!
//! Readings files are CSV with header `timestamp,station_0,...,station_{N-1}`
//! and one row per hour. Missing values (empty, `NA` or `nan`) are filled by
//! linear interpolation between the nearest readings, or by the nearest
//! reading at either end of the series.

use std::f64::consts::PI;
use std::path::Path;

use gsign_core::estimators::SignalSource;
use gsign_core::graph::{build_laplacian, knn_geographic_graph, Graph};
use gsign_core::io::{parse_coords_csv, write_coords_csv};
use gsign_core::rng::{self, tag};
use gsign_core::spectral::eigendecompose;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::HarnessError;
use crate::output::fmt_f64;

/// `T x N` real signal, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingSignal {
    timestamps: Vec<String>,
    rows: Vec<Vec<f64>>,
    peak: f64,
}

impl TimeVaryingSignal {
    pub fn new(timestamps: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, HarnessError> {
        let Some(first) = rows.first() else {
            return Err(HarnessError::Dataset("signal has no time steps".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(HarnessError::Dataset("signal has no stations".into()));
        }
        if timestamps.len() != rows.len() {
            return Err(HarnessError::Dataset(format!("{} timestamps for {} rows", timestamps.len(), rows.len())));
        }
        if let Some((t, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(HarnessError::Dataset(format!("row {t} has {} stations, expected {n}", r.len())));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(HarnessError::Dataset("signal contains non-finite values".into()));
        }
        let peak = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { timestamps, rows, peak })
    }

    pub fn n_steps(&self) -> usize {
        self.rows.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Values of one station over time.
    pub fn station(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// `max - min` of one station over time.
    pub fn dynamic_range(&self, i: usize) -> f64 {
        let s = self.station(i);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

impl SignalSource for TimeVaryingSignal {
    fn n(&self) -> usize {
        self.n_nodes()
    }

    fn at(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field.to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null")
}

/// Parses a readings CSV into timestamps and per-station columns with gaps
/// left as `None`.
pub fn parse_readings_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<Option<f64>>>), HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| HarnessError::Readings { line: 1, msg: e.to_string() })?.clone();
    if header.get(0) != Some("timestamp") {
        return Err(HarnessError::Readings { line: 1, msg: "first column must be `timestamp`".into() });
    }
    let n = header.len() - 1;
    if n == 0 {
        return Err(HarnessError::Readings { line: 1, msg: "no station columns".into() });
    }
    for (i, name) in header.iter().skip(1).enumerate() {
        if name != format!("station_{i}") {
            return Err(HarnessError::Readings { line: 1, msg: format!("column {} is `{name}`, expected `station_{i}`", i + 1) });
        }
    }
    let mut stamps = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); n];
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| HarnessError::Readings { line, msg: e.to_string() })?;
        if rec.len() != n + 1 {
            return Err(HarnessError::Readings { line, msg: format!("expected {} fields, found {}", n + 1, rec.len()) });
        }
        stamps.push(rec[0].to_string());
        for (i, field) in rec.iter().skip(1).enumerate() {
            let v = if is_missing(field) {
                None
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| HarnessError::Readings { line, msg: format!("bad reading `{field}`") })?;
                if !v.is_finite() {
                    return Err(HarnessError::Readings { line, msg: format!("reading `{field}` is not finite") });
                }
                Some(v)
            };
            columns[i].push(v);
        }
    }
    if stamps.is_empty() {
        return Err(HarnessError::Readings { line: 2, msg: "no readings".into() });
    }
    Ok((stamps, columns))
}

/// Fills gaps in one station's series: linear between neighbors, nearest
/// value at the ends. `None` when the station has no readings at all.
pub fn fill_gaps(series: &[Option<f64>]) -> Option<Vec<f64>> {
    let known: Vec<(usize, f64)> = series.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t, v))).collect();
    let (&(first_t, first_v), &(last_t, last_v)) = (known.first()?, known.last()?);
    let mut out = vec![0.0; series.len()];
    for t in 0..=first_t {
        out[t] = first_v;
    }
    for t in last_t..series.len() {
        out[t] = last_v;
    }
    for w in known.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        for (t, slot) in out.iter_mut().enumerate().take(t1 + 1).skip(t0) {
            let a = (t - t0) as f64 / (t1 - t0) as f64;
            *slot = v0 + a * (v1 - v0);
        }
    }
    Some(out)
}

/// Aligns readings and coordinates into a gap-free signal.
pub fn ingest_station_text(readings: &str, coords: &str) -> Result<(TimeVaryingSignal, Vec<[f64; 2]>), HarnessError> {
    let (stamps, columns) = parse_readings_csv(readings)?;
    let coords = parse_coords_csv(coords)?;
    if coords.len() != columns.len() {
        return Err(HarnessError::Dataset(format!(
            "readings have {} stations but coordinates list {}",
            columns.len(),
            coords.len()
        )));
    }
    let mut filled = Vec::with_capacity(columns.len());
    for (i, c) in columns.iter().enumerate() {
        filled.push(fill_gaps(c).ok_or_else(|| HarnessError::Dataset(format!("station_{i} has no readings")))?);
    }
    let rows = (0..stamps.len()).map(|t| filled.iter().map(|c| c[t]).collect()).collect();
    Ok((TimeVaryingSignal::new(stamps, rows)?, coords))
}

pub fn ingest_station_dataset(readings: &Path, coords: &Path) -> Result<(TimeVaryingSignal, Vec<[f64; 2]>), HarnessError> {
    let r = std::fs::read_to_string(readings).map_err(|e| HarnessError::io(readings, e))?;
    let c = std::fs::read_to_string(coords).map_err(|e| HarnessError::io(coords, e))?;
    ingest_station_text(&r, &c)
}

pub fn write_readings_csv(signal: &TimeVaryingSignal) -> String {
    let mut out = String::from("timestamp");
    for i in 0..signal.n_nodes() {
        out.push_str(&format!(",station_{i}"));
    }
    out.push('\n');
    for (stamp, row) in signal.timestamps.iter().zip(&signal.rows) {
        out.push_str(stamp);
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Generated stand-in for hourly station temperatures.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub signal: TimeVaryingSignal,
    pub coords: Vec<[f64; 2]>,
    pub graph: Graph,
}

/// Spatial modes (after the constant one) carrying the synthetic pattern.
pub const SYNTH_SPATIAL_MODES: usize = 10;
const SYNTH_MEAN: f64 = 15.0;
const SYNTH_SPATIAL_STD: f64 = 4.0;
const SYNTH_DIURNAL_AMPLITUDE: f64 = 5.0;
const SYNTH_MAX_ATTEMPTS: usize = 100;

/// `n` stations scattered over a lat/lon box, linked to their `k` nearest
/// neighbors, with readings `mean + pattern + A sin(2 pi (t + phase) / 24)`.
/// The pattern lives on the lowest nonconstant Laplacian modes and the
/// diurnal term is uniform, so every row is bandlimited to the lowest
/// `SYNTH_SPATIAL_MODES + 1` frequencies. Placement is redrawn until the graph
/// is connected.
pub fn synthetic_dataset(n: usize, t: usize, k: usize, seed: u64) -> Result<SyntheticDataset, HarnessError> {
    if n < 2 || t < 1 || k == 0 || k >= n {
        return Err(HarnessError::Dataset(format!("synthetic dataset needs n >= 2, t >= 1, 0 < k < n (n = {n}, t = {t}, k = {k})")));
    }
    for attempt in 0..SYNTH_MAX_ATTEMPTS as u64 {
        let mut rng = rng::stream(seed, &[tag::SYNTHETIC, attempt]);
        let coords: Vec<[f64; 2]> =
            (0..n).map(|_| [25.0 + 24.0 * rng.random::<f64>(), -125.0 + 58.0 * rng.random::<f64>()]).collect();
        let graph = knn_geographic_graph(&coords, k)?;
        if !graph.is_connected() {
            continue;
        }
        let basis = eigendecompose(&build_laplacian(&graph)?)?;
        let modes = SYNTH_SPATIAL_MODES.min(n - 1);
        let mut pattern = vec![0.0; n];
        for m in 1..=modes {
            let c: f64 = StandardNormal.sample(&mut rng);
            for (i, p) in pattern.iter_mut().enumerate() {
                *p += c * basis.u()[(i, m)];
            }
        }
        // pattern has zero mean (orthogonal to the constant mode)
        let std = (pattern.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        if std > 0.0 {
            pattern.iter_mut().for_each(|v| *v *= SYNTH_SPATIAL_STD / std);
        }
        let phase: f64 = 24.0 * rng.random::<f64>();
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|h| {
                let diurnal = SYNTH_DIURNAL_AMPLITUDE * (2.0 * PI * (h as f64 + phase) / 24.0).sin();
                pattern.iter().map(|p| SYNTH_MEAN + p + diurnal).collect()
            })
            .collect();
        let stamps = (0..t).map(|h| format!("h{h:04}")).collect();
        return Ok(SyntheticDataset { signal: TimeVaryingSignal::new(stamps, rows)?, coords, graph });
    }
    Err(HarnessError::Dataset(format!("no connected {k}-NN placement in {SYNTH_MAX_ATTEMPTS} attempts")))
}

/// Writes `readings.csv` and `coords.csv` (as `node,lat,lon`) into `dir`.
pub fn write_dataset(dir: &Path, data: &SyntheticDataset) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let readings = dir.join("readings.csv");
    std::fs::write(&readings, write_readings_csv(&data.signal)).map_err(|e| HarnessError::io(&readings, e))?;
    let coords = dir.join("coords.csv");
    let text = write_coords_csv(&data.coords).replacen("node,x,y", "node,lat,lon", 1);
    std::fs::write(&coords, text).map_err(|e| HarnessError::io(&coords, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsign_core::spectral::{gft, make_bandlimit};

    const COORDS3: &str = "node,x,y\n0,0,0\n1,1,0\n2,0,1\n";

    #[test]
    fn complete_passthrough() {
        let readings = "timestamp,station_0,station_1,station_2\nt0,1,2,3\nt1,4,5,6\nt2,7,8,9\nt3,10,11,12\n";
        let (sig, coords) = ingest_station_text(readings, COORDS3).unwrap();
        assert_eq!(sig.n_steps(), 4);
        assert_eq!(sig.n_nodes(), 3);
        assert_eq!(sig.rows()[3], vec![10.0, 11.0, 12.0]);
        assert_eq!(coords.len(), 3);
    }

    #[test]
    fn interior_gap_interpolated() {
        let readings = "timestamp,station_0,station_1,station_2\nt0,10,1,1\nt1,,1,1\nt2,12,1,1\n";
        let (sig, _) = ingest_station_text(readings, COORDS3).unwrap();
        assert_eq!(sig.station(0), vec![10.0, 11.0, 12.0]);
    }

    #[test]
    fn boundary_gaps_take_nearest() {
        assert_eq!(fill_gaps(&[None, Some(2.0), None, Some(4.0), None]), Some(vec![2.0, 2.0, 3.0, 4.0, 4.0]));
        assert_eq!(fill_gaps(&[None, None]), None);
    }

    #[test]
    fn mismatches_rejected() {
        let readings = "timestamp,station_0,station_1\nt0,1,2\n";
        assert!(matches!(ingest_station_text(readings, COORDS3), Err(HarnessError::Dataset(_))));
        let readings = "timestamp,station_0,station_1,station_2\nt0,1,NA,3\nt1,1,,3\n";
        let err = ingest_station_text(readings, COORDS3).unwrap_err();
        assert!(err.to_string().contains("station_1"), "{err}");
        assert!(parse_readings_csv("time,station_0\nt,1\n").is_err());
        assert!(parse_readings_csv("timestamp,station_1\nt,1\n").is_err());
        assert!(matches!(
            parse_readings_csv("timestamp,station_0\nt,1\nu,x\n"),
            Err(HarnessError::Readings { line: 3, .. })
        ));
    }

    #[test]
    fn synthetic_is_deterministic_and_bandlimited() {
        let a = synthetic_dataset(60, 30, 8, 4).unwrap();
        let b = synthetic_dataset(60, 30, 8, 4).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_ne!(a.signal, synthetic_dataset(60, 30, 8, 5).unwrap().signal);
        let basis = eigendecompose(&build_laplacian(&a.graph).unwrap()).unwrap();
        let band = make_bandlimit(&basis, &(0..=SYNTH_SPATIAL_MODES).collect::<Vec<_>>()).unwrap();
        for row in a.signal.rows() {
            let proj = band.apply(row).unwrap();
            assert!(row.iter().zip(&proj).all(|(x, y)| (x - y).abs() < 1e-9));
            let s = gft(&basis, row).unwrap();
            assert!(s[SYNTH_SPATIAL_MODES + 1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn readings_roundtrip() {
        let d = synthetic_dataset(12, 5, 3, 1).unwrap();
        let coords = write_coords_csv(&d.coords).replacen("node,x,y", "node,lat,lon", 1);
        let (sig, c) = ingest_station_text(&write_readings_csv(&d.signal), &coords).unwrap();
        assert_eq!(sig, d.signal);
        assert_eq!(c, d.coords);
    }
}
