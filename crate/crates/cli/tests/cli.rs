use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asap_core::analysis::settling_iterations;
use asap_core::events::read_metrics;
use asap_core::pipeline::SETTLING_BAND;

fn asap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asap")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&asap(&[])), 2);
    assert_eq!(code(&asap(&["preset", "no-such-preset", "--out", "x"])), 2);
    assert_eq!(code(&asap(&["run", "--out", "x"])), 2);
    assert_eq!(code(&asap(&["calibrate"])), 2);
    assert_eq!(code(&asap(&["--help"])), 0);
}

#[test]
fn invalid_scenario_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.toml");
    fs::write(&sc, "duration_s = -1.0\n").unwrap();
    let out = asap(&["run", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(&sc, "duration_s = 1.0\nunknown_key = 3\n").unwrap();
    let out = asap(&["run", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn missing_trace_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("trace.toml");
    fs::write(&sc, "duration_s = 1.0\nsource = \"trace\"\ntrace = \"missing.csv\"\n").unwrap();
    let out = asap(&["run", "--scenario", sc.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_scenario_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_dir().join("ramp_fixed_size.toml");
    let out = asap(&["run", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_metrics(dir.path().join("metrics.csv")).unwrap();
    assert!(rows.len() > 100);
    assert!(rows.iter().rev().skip(1).all(|r| r.s_k == 500));
    let trace = fs::read_to_string(dir.path().join("gamma_trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("i,t_us,r_i,gamma_i,kept"));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.starts_with("policy fixed_size_500\n"));
}

#[test]
fn preset_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = asap(&["preset", "step-complexity", "--out", d.path().to_str().unwrap(), "--seed", "7"]);
        assert_eq!(code(&out), 0);
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);
}

#[test]
fn static_comparison_writes_one_csv_per_policy() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&asap(&["preset", "static-comparison", "--out", d.path().to_str().unwrap()])), 0);
    let csvs: Vec<String> =
        files(d.path()).into_iter().map(|(n, _)| n).filter(|n| n.ends_with("_metrics.csv")).collect();
    assert_eq!(csvs.len(), 7);
    assert!(csvs.contains(&"asap_metrics.csv".to_string()));
    assert!(csvs.contains(&"fixed_rate_100hz_metrics.csv".to_string()));
}

#[test]
fn summary_settling_matches_csv() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario_dir().join("step_cost.toml");
    assert_eq!(code(&asap(&["run", "--scenario", sc.to_str().unwrap(), "--out", d.path().to_str().unwrap()])), 0);
    let rows = read_metrics(d.path().join("metrics.csv")).unwrap();
    let t: Vec<f64> = rows.iter().map(|r| r.t_k).collect();
    let summary = fs::read_to_string(d.path().join("summary.txt")).unwrap();
    let lines: Vec<&str> = summary.lines().filter(|l| l.starts_with("disturbance ")).collect();
    assert_eq!(lines.len(), 1);
    for line in lines {
        let field = |key: &str| {
            line.split_whitespace().find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('='))).unwrap()
        };
        let index: usize = field("index").parse().unwrap();
        let end: usize = field("segment_end").parse().unwrap();
        let nu: usize = field("nu").parse().unwrap();
        assert_eq!(settling_iterations(&t[..end], index, SETTLING_BAND).unwrap(), nu, "{line}");
    }
}

#[test]
fn converge_grid_csv() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("grid.csv");
    assert_eq!(code(&asap(&["converge", "--grid", "--out", path.to_str().unwrap()])), 0);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta0,beta1,s_star"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[2] >= 1.0 && r[2] <= 1000.0));
}

#[test]
fn calibrate_prints_constants() {
    let out = asap(&["calibrate", "--print"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["A = ", "B = ", "t_flex = ", "t_flex_upper = ", "kappa = 5"] {
        assert!(text.contains(key), "{key} missing from:\n{text}");
    }
}
