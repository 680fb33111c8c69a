//! Output plumbing: CSV float formatting, atomic writes, run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Render a float with 12 significant digits (trailing zeros trimmed).
pub fn sig12(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp_str) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp_str.parse().expect("scientific exponent");
    if !(-4..=14).contains(&exp) {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{exp}");
    }
    let decimals = if exp >= 11 { 0 } else { (11 - exp) as usize };
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Numerical tolerances the run was produced with.
#[derive(Debug, Serialize)]
pub struct Tolerances {
    /// Bracket-width floor of the root finder.
    pub root_x_tol: f64,
    /// Residual scale the solved equations reach at their roots.
    pub root_residual: f64,
    /// Simulator post-jump convergence tolerance.
    pub sim_convergence: f64,
    /// Regime-boundary equality band of the classifier.
    pub boundary_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_x_tol: aimd_fluid::roots::X_TOL,
            root_residual: aimd_fluid::roots::RESIDUAL_TOL,
            sim_convergence: aimd_fluid::sim::CONVERGENCE_TOL,
            boundary_band: aimd_fluid::classifier::BOUNDARY_TOL,
        }
    }
}

/// Reproducibility record attached to every command's output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub version: String,
    pub tolerances: Tolerances,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            tolerances: Tolerances::default(),
            outputs: Vec::new(),
        }
    }

    /// Write `contents` to `path` atomically and record its digest.
    pub fn emit(&mut self, path: &Path, contents: &[u8]) -> std::io::Result<()> {
        write_atomic(path, contents)?;
        let mut hasher = Sha256::new();
        hasher.update(contents);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write as _;
            let _ = write!(hex, "{byte:02x}");
        }
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: hex,
        });
        Ok(())
    }

    /// Write the manifest itself next to an output file.
    pub fn write_sidecar(&self, primary: &Path) -> std::io::Result<()> {
        let mut path = primary.as_os_str().to_owned();
        path.push(".manifest.json");
        let body = serde_json::to_vec_pretty(self).expect("manifest serializes");
        write_atomic(Path::new(&path), &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(599.759962004209), "599.759962004");
        assert_eq!(sig12(0.061657041587129094), "0.0616570415871");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(1.23456789012345e-9), "1.23456789012e-9");
        assert_eq!(sig12(1e15), "1e15");
    }

    #[test]
    fn sig12_round_trips_to_twelve_digits() {
        for &x in &[
            1999423.821834028,
            1.0 / 3.0,
            0.0616570415871,
            9.87654321e-7,
            -123456.789,
        ] {
            let back: f64 = sig12(x).parse().unwrap();
            assert!(
                ((back - x) / x).abs() < 1e-11,
                "{x} -> {} -> {back}",
                sig12(x)
            );
        }
    }
}
