use std::path::Path;
use std::process::{Command, Output};

fn gsign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsign")).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const STEADY: &str = "kind = \"steady_state\"\nseed = 5\nruns = 3\niters = 200\nbandwidth = 6\nsamples = 10\n\
                      [graph]\nsource = \"sensor\"\nn = 20\n\
                      [noise]\nkind = \"cauchy\"\nscale = 0.1\n\
                      [[estimators]]\nkind = \"gsign\"\nstep_size = 0.002\n\
                      [[estimators]]\nkind = \"glms\"\nstep_size = 0.01\n";

#[test]
fn run_writes_outputs_and_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), STEADY);
    let out = dir.path().join("out");
    let stdout = ok(&gsign(&["run", &cfg, "--outdir", out.to_str().unwrap(), "--runs", "2", "--seed", "9", "--threads", "2"]));
    assert!(stdout.contains("gsign"));
    for f in ["msd.csv", "mad.csv", "timing.csv", "summary.json", "config.resolved.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let resolved = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("runs = 2") && resolved.contains("seed = 9"), "{resolved}");
    let header = std::fs::read_to_string(out.join("msd.csv")).unwrap();
    assert!(header.starts_with("iteration,gsign,glms,theory\n"));
}

#[test]
fn theory_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), STEADY);
    let out = dir.path().join("th");
    let stdout = ok(&gsign(&["theory", &cfg, "--outdir", out.to_str().unwrap()]));
    assert!(stdout.contains("step size bound"));
    let csv = std::fs::read_to_string(out.join("theory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "estimator,step_size,step_size_bound,inverse_moment,theoretical_msd");
    assert!(lines.next().unwrap().starts_with("gsign,0.002,"));
}

#[test]
fn noise_dump_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &STEADY.replacen("runs = 3", "runs = 3\ndump_count = 500", 1));
    let out = dir.path().join("noise");
    ok(&gsign(&["noise-dump", &cfg, "--outdir", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(out.join("noise.csv")).unwrap();
    assert_eq!(csv.lines().count(), 501);
    assert!(csv.starts_with("index,value\n"));
}

#[test]
fn synth_data_then_time_varying() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&gsign(&["synth-data", "--n", "30", "--t", "12", "--seed", "4", "--out", data.to_str().unwrap()]));
    let readings = std::fs::read_to_string(data.join("readings.csv")).unwrap();
    assert_eq!(readings.lines().count(), 13);
    assert!(readings.starts_with("timestamp,station_0,"));
    assert!(data.join("coords.csv").exists());

    let cfg = write_config(
        dir.path(),
        "kind = \"time_varying\"\nruns = 2\nbandwidth = 10\nsamples = 14\n\
         [dataset]\nreadings = \"data/readings.csv\"\ncoords = \"data/coords.csv\"\ntracked_node = 3\nburn_in = 2\n\
         [noise]\nkind = \"student_t\"\nnu = 2.0\n\
         [[estimators]]\nkind = \"gsign\"\nstep_size = 1.5\n",
    );
    let out = dir.path().join("tv");
    ok(&gsign(&["run", &cfg, "--outdir", out.to_str().unwrap()]));
    let tracked = std::fs::read_to_string(out.join("tracked.csv")).unwrap();
    assert!(tracked.starts_with("step,truth,gsign\n"));
    assert_eq!(tracked.lines().count(), 13);
}

#[test]
fn invalid_config_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = STEADY.replace("samples = 10", "samples = 4").replace("kind = \"glms\"", "kind = \"rls\"");
    let cfg = write_config(dir.path(), &bad);
    let out = gsign(&["run", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("glms") && err.contains("gsign"), "valid names listed: {err}");

    let cfg = write_config(dir.path(), &STEADY.replace("samples = 10", "samples = 4"));
    let err = String::from_utf8_lossy(&gsign(&["run", &cfg]).stderr).into_owned();
    assert!(err.contains("samples"), "{err}");
}

#[test]
fn missing_config_file() {
    let out = gsign(&["run", "/nonexistent/exp.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/exp.toml"));
}
