//! The two-layer inversion driven by a JSON configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uvot_core::io::{read_field, write_csv, write_field};
use uvot_core::FieldV;
use uvot_fwi::{invert, DemoConfig, InversionHistory};

use crate::error::{ExperimentError, Result};

/// Demo parameters plus optional velocity models stored as field files;
/// relative paths are resolved against the configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FwiDemoFile {
    #[serde(flatten)]
    pub config: DemoConfig,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    #[serde(default)]
    pub initial: Option<PathBuf>,
}

impl FwiDemoFile {
    pub fn load(path: &Path) -> Result<Self> {
        let mut file: FwiDemoFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut file.truth, &mut file.initial].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

fn velocity(path: &Path, sites: usize) -> Result<Vec<f64>> {
    let f = read_field(path)?;
    if f.n() != 1 || f.grid().n_sites() != sites {
        return Err(ExperimentError::ShapeMismatch(format!(
            "{}: expected a scalar field with {sites} sites",
            path.display()
        )));
    }
    Ok(f.into_vec())
}

/// Runs the inversion and writes `truth.rawh`, `velocity_NNN.rawh` per
/// accepted iterate and `convergence.csv` into `out`.
pub fn run_fwi_demo(file: &FwiDemoFile, out: &Path) -> Result<InversionHistory> {
    let c = &file.config;
    let g = c.grid()?;
    let truth = file.truth.as_deref().map(|p| velocity(p, g.n_sites())).transpose()?;
    let initial = file.initial.as_deref().map(|p| velocity(p, g.n_sites())).transpose()?;
    let demo = c.build_with(truth, initial)?;
    let mut opt = demo.optimizer;
    let history = invert(&demo.problem, &demo.initial, c.iterations, 0.0, &mut opt)?;
    std::fs::create_dir_all(out)?;
    write_field(&out.join("truth.rawh"), &FieldV::from_vec(g, 1, demo.truth.clone())?)?;
    for (k, v) in history.velocities.iter().enumerate() {
        write_field(&out.join(format!("velocity_{k:03}.rawh")), &FieldV::from_vec(g, 1, v.clone())?)?;
    }
    let m0 = history.misfits[0];
    let model_error = |v: &[f64]| {
        let num: f64 = v.iter().zip(&demo.truth).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = demo.truth.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    };
    let rows = history.misfits.iter().zip(&history.velocities).enumerate().map(|(k, (m, v))| {
        vec![k as f64, *m, if m0 > 0.0 { m / m0 } else { 0.0 }, model_error(v)]
    });
    write_csv(out.join("convergence.csv"), &["iteration", "misfit", "relative_misfit", "model_error"], rows)?;
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_accepts_partial_settings() {
        let f: FwiDemoFile = serde_json::from_str(r#"{"misfit": "l2", "iterations": 3, "truth": "c.rawh"}"#).unwrap();
        assert_eq!(f.config.iterations, 3);
        assert_eq!(f.config.nx, DemoConfig::default().nx);
        assert_eq!(f.truth, Some(PathBuf::from("c.rawh")));
    }
}
