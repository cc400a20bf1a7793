//! Per-run output directories and the plain-text artifacts written into them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use kdv_core::integrator::TrajectoryRecord;
use kdv_core::{FourierField, Grid};
use serde::Serialize;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "KDV_OUT";
pub const DEFAULT_OUT: &str = "kdv-runs";

/// Output root: explicit path, then `$KDV_OUT`, then `./kdv-runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// A fresh directory `<root>/<command>-<unix millis>[-n]` for one run.
pub struct RunDir {
    path: PathBuf,
    written: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output root {}", root.display()))?;
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        let base = format!("{command}-{stamp}");
        let mut suffix = 0;
        loop {
            let name = if suffix == 0 {
                base.clone()
            } else {
                format!("{base}-{suffix}")
            };
            let path = root.join(name);
            match std::fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(RunDir {
                        path,
                        written: Vec::new(),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => suffix += 1,
                Err(e) => return Err(e).with_context(|| format!("creating {}", path.display())),
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn target(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_owned());
        self.path.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.target(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_text(name, &text)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let text = csv_string(rows)?;
        self.write_text(name, &text)
    }
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

/// One Fourier mode, `k ≥ 0`; negative modes are the conjugates.
#[derive(Debug, Serialize)]
pub struct ModeRow {
    pub k: i64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

pub fn mode_rows(field: &FourierField) -> Vec<ModeRow> {
    (0..=field.cutoff() as i64)
        .map(|k| {
            let c = field.get(k);
            ModeRow {
                k,
                re: c.re,
                im: c.im,
                abs: c.norm(),
            }
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SampleRow {
    pub x: f64,
    pub u: f64,
}

pub fn sample_rows(field: &FourierField, m: usize) -> Result<Vec<SampleRow>> {
    let grid = Grid::new(m)?;
    let samples = kdv_core::spectral::synthesize(field, m)?;
    Ok(grid
        .points()
        .into_iter()
        .zip(samples)
        .map(|(x, u)| SampleRow { x, u })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub energy: f64,
    pub momentum: f64,
    pub error: f64,
}

/// Rows of the diagnostics series; `errors` aligns with the record times.
pub fn trajectory_rows(record: &TrajectoryRecord, errors: &[f64]) -> Vec<TrajectoryRow> {
    record
        .times
        .iter()
        .zip(&record.energy_series)
        .zip(&record.momentum_series)
        .zip(errors)
        .map(|(((&t, &energy), &momentum), &error)| TrajectoryRow {
            t,
            energy,
            momentum,
            error,
        })
        .collect()
}

/// Enough to rerun a command: the resolved configuration plus provenance.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub config: &'a C,
    pub seeds: Vec<u64>,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use kdv_core::Complex64;

    #[test]
    fn mode_rows_start_at_zero() {
        let field = FourierField::from_positive_modes(vec![Complex64::new(0.5, -0.5)]);
        let text = csv_string(&mode_rows(&field)).unwrap();
        assert_eq!(
            text,
            "k,re,im,abs\n0,0.0,0.0,0.0\n1,0.5,-0.5,0.7071067811865476\n"
        );
    }

    #[test]
    fn run_dirs_are_unique() {
        let root = tempfile::tempdir().unwrap();
        let a = RunDir::create(root.path(), "x").unwrap();
        let b = RunDir::create(root.path(), "x").unwrap();
        assert_ne!(a.path(), b.path());
    }

    #[test]
    fn explicit_root_wins() {
        assert_eq!(
            output_root(Some(Path::new("/tmp/r"))),
            PathBuf::from("/tmp/r")
        );
    }
}
