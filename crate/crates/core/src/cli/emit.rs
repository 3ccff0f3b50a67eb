//! `report.json`, CSV field dumps and `manifest.json`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::run::RunOutput;
use super::CliError;

/// A scalar field sampled on a grid; written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub name: String,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl FieldDump {
    /// Header `x,value` or `x1,..,xn,value`, then one row per point.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(1, |p| p.len());
        let mut s = String::new();
        if n == 1 {
            s.push_str("x,value\n");
        } else {
            for i in 1..=n {
                let _ = write!(s, "x{i},");
            }
            s.push_str("value\n");
        }
        for (x, v) in self.points.iter().zip(&self.values) {
            for c in x {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{v}");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub created_unix_seconds: u64,
    pub wall_time_seconds: f64,
}

fn write(dir: &Path, name: &str, content: &[u8]) -> Result<ManifestEntry, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(ManifestEntry {
        name: name.to_string(),
        bytes: content.len(),
        sha256: hex::encode(Sha256::digest(content)),
    })
}

/// Writes the report, the dumps and a manifest with content hashes. Timing
/// data lives only in the manifest.
pub fn emit_outputs(out: &RunOutput, dir: &Path, wall_time_seconds: f64) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut report = serde_json::to_string_pretty(&out.report).expect("report serializes");
    report.push('\n');
    let mut files = vec![write(dir, "report.json", report.as_bytes())?];
    for d in &out.dumps {
        files.push(write(dir, &format!("{}.csv", d.name), d.to_csv().as_bytes())?);
    }
    let manifest = Manifest {
        files,
        created_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        wall_time_seconds,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(dir, "manifest.json", text.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers() {
        let d = FieldDump {
            name: "f".into(),
            points: vec![vec![0.5], vec![-0.25]],
            values: vec![1.0, 2.5],
        };
        assert_eq!(d.to_csv(), "x,value\n0.5,1\n-0.25,2.5\n");
        let d = FieldDump {
            name: "g".into(),
            points: vec![vec![0.5, 0.25]],
            values: vec![-1.0],
        };
        assert_eq!(d.to_csv(), "x1,x2,value\n0.5,0.25,-1\n");
    }
}
