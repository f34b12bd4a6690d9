//! Attractor sample sets on disk: one snapshot per state plus a manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use ascl_core::attractor::{sample_attractor, AttractorSampling};
use ascl_core::snapshot::{load_snapshot, save_snapshot};
use ascl_core::SpectralField;

use crate::config::{AttractorConfig, Experiment};
use crate::error::{HarnessError, Result};

pub const MANIFEST: &str = "manifest.txt";

pub fn sampling(cfg: &AttractorConfig) -> AttractorSampling {
    AttractorSampling {
        trajectories: cfg.trajectories,
        samples_per_trajectory: cfg.samples_per_trajectory,
        t_spinup: cfg.t_spinup,
        t_gap: cfg.t_gap,
        seed: cfg.seed,
        radius: cfg.radius,
    }
}

pub fn sample(exp: &Experiment, cfg: &AttractorConfig) -> Result<Vec<SpectralField>> {
    Ok(sample_attractor(&exp.params, &exp.forcing, exp.grid, exp.dt, &sampling(cfg))?)
}

/// Writes `sample_NNNN.ascl` files and a manifest with one line per file:
/// `file,trajectory,t`.
pub fn write_samples(dir: &Path, samples: &[SpectralField], cfg: &AttractorConfig, fingerprint: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::output(dir, e))?;
    let manifest = dir.join(MANIFEST);
    let mut m = Vec::new();
    writeln!(m, "# fingerprint={fingerprint}").expect("writing to memory");
    writeln!(m, "file,trajectory,t").expect("writing to memory");
    for (i, f) in samples.iter().enumerate() {
        let name = format!("sample_{i:04}.ascl");
        save_snapshot(f, &dir.join(&name))?;
        let traj = i / cfg.samples_per_trajectory;
        let j = (i % cfg.samples_per_trajectory + 1) as f64;
        writeln!(m, "{name},{traj},{}", cfg.t_spinup + j * cfg.t_gap).expect("writing to memory");
    }
    std::fs::write(&manifest, m).map_err(|e| HarnessError::output(&manifest, e))
}

/// Loads every snapshot listed in a manifest, in order.
pub fn read_samples(dir: &Path) -> Result<Vec<SpectralField>> {
    let manifest = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&manifest)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", manifest.display())))?;
    let files: Vec<PathBuf> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("file,") && !l.trim().is_empty())
        .map(|l| dir.join(l.split(',').next().unwrap_or("")))
        .collect();
    files.iter().map(|p| Ok(load_snapshot(p)?)).collect()
}
