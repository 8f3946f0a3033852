//! Command implementations for the `asap` binary.

pub mod presets;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use asap_core::events::write_metrics;
use asap_core::packager::{inflection_point, second_inflection_point};
use asap_core::pipeline::{run, write_gamma_trace, write_summary, AsapConfig, RunOutput, Scenario};
use asap_core::AsapError;

use presets::Preset;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Scenario(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Scenario(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<AsapError> for CliError {
    fn from(e: AsapError) -> Self {
        match e {
            AsapError::Scenario(_) | AsapError::InvalidParams(_) => CliError::Scenario(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Files written for one run.
#[derive(Clone, Debug)]
pub struct RunFiles {
    pub metrics: PathBuf,
    pub gamma_trace: Option<PathBuf>,
    pub summary: PathBuf,
}

/// Writes `<prefix>metrics.csv`, `<prefix>summary.txt` and, when sampled,
/// `<prefix>gamma_trace.csv` into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path, prefix: &str) -> Result<RunFiles, CliError> {
    ensure_dir(dir)?;
    let metrics = dir.join(format!("{prefix}metrics.csv"));
    write_metrics(&out.metrics, &metrics)?;
    let summary = dir.join(format!("{prefix}summary.txt"));
    write_summary(&out.summary, &summary)?;
    let gamma_trace = if out.gamma_trace.is_empty() {
        None
    } else {
        let p = dir.join(format!("{prefix}gamma_trace.csv"));
        write_gamma_trace(&out.gamma_trace, &p)?;
        Some(p)
    };
    Ok(RunFiles { metrics, gamma_trace, summary })
}

pub fn cmd_run(scenario: &Path, out: &Path, seed: Option<u64>) -> Result<RunFiles, CliError> {
    let mut sc = Scenario::load(scenario)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let output = run(&sc)?;
    write_run(&output, out, "")
}

pub fn cmd_preset(preset: Preset, out: &Path, seed: u64) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out)?;
    if preset == Preset::ConvergenceGrid {
        let path = out.join("convergence_grid.csv");
        write_grid(&path)?;
        return Ok(vec![path]);
    }
    let mut written = Vec::new();
    for (label, sc) in preset.scenarios(seed) {
        let files = write_run(&run(&sc)?, out, &format!("{label}_"))?;
        written.push(files.metrics);
        written.extend(files.gamma_trace);
        written.push(files.summary);
    }
    Ok(written)
}

/// Writes the `beta0,beta1,s_star` grid.
pub fn write_grid(path: &Path) -> Result<(), CliError> {
    let rows = presets::convergence_grid()?;
    let mut f = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    let mut text = String::from("beta0,beta1,s_star\n");
    for (b0, b1, s) in rows {
        text.push_str(&format!("{b0:.9e},{b1:.9e},{s:.9}\n"));
    }
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(io_err(path))
}

/// Calibration report for `config`.
pub fn calibration_text(config: &AsapConfig) -> Result<String, CliError> {
    let p = config.packager_params()?;
    let kappa = config.kappa;
    let mut s = String::new();
    s.push_str(&format!("s_min = {}\ns_max = {}\n", p.s_min(), p.s_max()));
    s.push_str(&format!("t_min = {:e}\nt_max = {:e}\nkappa = {kappa}\n", p.t_min(), p.t_max()));
    s.push_str(&format!("A = {:.6}\nB = {:.6}\n", p.a(), p.b()));
    s.push_str(&format!("t_flex = {:.9}\n", inflection_point(kappa)?));
    s.push_str(&format!("t_flex_upper = {:.9}\n", second_inflection_point(kappa)?));
    Ok(s)
}

pub fn cmd_calibrate(scenario: Option<&Path>) -> Result<String, CliError> {
    let config = match scenario {
        Some(p) => Scenario::load(p)?.config,
        None => AsapConfig::default(),
    };
    calibration_text(&config)
}
