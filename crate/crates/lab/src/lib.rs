//! Experiment runner for `disloc-core`: JSON configurations, CSV/JSON
//! output trees with manifests, and the acceptance suites.
//!
//! Every run writes into one output directory:
//!
//! | experiment     | files                                                             |
//! |----------------|-------------------------------------------------------------------|
//! | `heteroclinic` | `profile.csv` (`x,value`) + `profile.json` sidecar                 |
//! | `multibump`    | `profile.csv` + sidecar, `windows.csv` (`lo,hi,level`), `energy.csv` |
//! | `particles`    | `trajectory.csv` (`t,x1..xN`), `collision.json`                    |
//! | `parabolic`    | `snapshots/v_KKKKK.csv` + sidecars, `cores.csv` (`t,core1..`), `particles.csv`, `decay.csv` (`t,sup_distance`) |
//! | `cell`         | `hbar.csv` (`p,L,lambda,spread`)                                   |
//! | `orowan`       | `orowan.csv` (`eps,lambda,ratio`)                                  |
//! | `meanfield`    | `init.csv` + sidecar and `meanfield.csv` (`t,x,value`), or `comparison.csv` (`t,i,particle,level_set`) |
//!
//! plus `summary.json` and `manifest.json`. A field sidecar holds
//! `{l_minus, l_plus, beta, c_minus, c_plus, boundary}`.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;

use std::path::Path;
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
use io::{sha256_hex, Manifest, OutputDir, Versions};

/// Sizes the global rayon pool from `DISLOC_THREADS` (all cores when unset
/// or invalid). Returns the pool size.
pub fn configure_threads() -> usize {
    let requested = std::env::var("DISLOC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0);
    if let Some(n) = requested {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    rayon::current_num_threads()
}

fn write_manifest(
    out: &OutputDir,
    command: &str,
    config: serde_json::Value,
    started: Instant,
    result: &std::result::Result<serde_json::Value, LabError>,
) -> Result<()> {
    let canonical = serde_json::to_string(&config)?;
    let mut outputs = out.written();
    outputs.retain(|p| p != "manifest.json");
    let manifest = Manifest {
        command: command.into(),
        config_sha256: sha256_hex(canonical.as_bytes()),
        config,
        versions: Versions::default(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        exit_code: result
            .as_ref()
            .map(|_| error::EXIT_OK)
            .unwrap_or_else(|e| e.exit_code()),
        error: result.as_ref().err().map(|e| e.to_string()),
        outputs,
    };
    out.write_json("manifest.json", &manifest)
}

/// Runs one experiment into `out_root` and writes its manifest, also on
/// failure. Returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path) -> Result<serde_json::Value> {
    let started = Instant::now();
    let out = OutputDir::new(out_root)?;
    let result = experiments::execute(cfg, &out);
    let config = serde_json::to_value(cfg)?;
    write_manifest(&out, cfg.name(), config, started, &result)?;
    result
}

/// `run <config.json>`.
pub fn run_file(path: &Path, out_root: &Path) -> Result<serde_json::Value> {
    let cfg = ExperimentConfig::load(path)?;
    run_experiment(&cfg, out_root)
}

/// Runs an acceptance suite, writes `report.json` and the manifest, and
/// fails with the list of failed criteria if any.
pub fn run_suite(suite: acceptance::Suite, out_root: &Path) -> Result<acceptance::Report> {
    let started = Instant::now();
    let out = OutputDir::new(out_root)?;
    let report = acceptance::run_suite(suite);
    out.write_json("report.json", &report)?;
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.to_string())
        .collect();
    let result = if failed.is_empty() {
        Ok(serde_json::Value::Null)
    } else {
        Err(LabError::SuiteFailed {
            failed,
            total: report.criteria.len(),
        })
    };
    write_manifest(
        &out,
        "suite",
        serde_json::json!({ "suite": suite.name() }),
        started,
        &result,
    )?;
    result.map(|_| report)
}
