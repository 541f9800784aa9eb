//! Output files and their JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvsat::curve::{fmt17, Curve, CurveKind};

use crate::config::OutputFormat;
use crate::CliError;

pub const SIDECAR_SUFFIX: &str = ".meta.json";

/// `# key=value` lines at the top of a curve file.
pub type Header = Vec<(String, String)>;

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub file: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_hash: Option<String>,
    /// Git-style blob hash of the file contents (SHA-256).
    pub content_version: String,
    pub tool_version: String,
    pub started_unix_seconds: u64,
    pub runtime_seconds: f64,
}

/// Start time of a run, for the sidecars.
#[derive(Debug, Clone, Copy)]
pub struct RunClock {
    started: Instant,
    unix: u64,
}

impl RunClock {
    pub fn start() -> Self {
        RunClock {
            started: Instant::now(),
            unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn content_version(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` and its sidecar.
pub fn write_with_sidecar(
    path: &Path,
    bytes: &[u8],
    config_hash: &str,
    ensemble_hash: Option<String>,
    clock: RunClock,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    let sidecar = Sidecar {
        file: path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config_hash: config_hash.to_string(),
        ensemble_hash,
        content_version: content_version(bytes),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_seconds: clock.unix,
        runtime_seconds: clock.started.elapsed().as_secs_f64(),
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&side, text).map_err(|e| io_error(&side, e))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(SIDECAR_SUFFIX);
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    kind: CurveKind,
    header: Header,
    abscissa: Vec<String>,
    value: Vec<String>,
    stderr: Vec<String>,
}

/// Serialized curve in the chosen format. JSON numbers are written as
/// 17-digit strings so both formats carry the same bits.
pub fn render_curve(
    curve: &Curve<f64>,
    header: &[(String, String)],
    format: OutputFormat,
) -> Vec<u8> {
    match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            curve
                .write_csv(&mut buf, header)
                .expect("writing to memory");
            buf
        }
        OutputFormat::Json => {
            let col = |v: &[f64]| v.iter().map(|&x| fmt17(x)).collect();
            let j = CurveJson {
                kind: curve.kind,
                header: header.to_vec(),
                abscissa: col(&curve.abscissa),
                value: col(&curve.values),
                stderr: col(&curve.stderr),
            };
            let mut s = serde_json::to_string_pretty(&j).expect("curve serializes");
            s.push('\n');
            s.into_bytes()
        }
    }
}

pub fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

/// Reads a curve written by [`render_curve`] in either format.
pub fn read_curve(path: &Path) -> Result<(Curve<f64>, Header), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let bad = |e: String| CliError::Usage(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let j: CurveJson = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let parse = |v: &[String]| {
            v.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| bad(format!("bad number '{s}'")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let c = Curve::new(
            j.kind,
            parse(&j.abscissa)?,
            parse(&j.value)?,
            parse(&j.stderr)?,
        )
        .map_err(|e| bad(e.to_string()))?;
        Ok((c, j.header))
    } else {
        Curve::read_csv(&text).map_err(|e| bad(e.to_string()))
    }
}

pub fn header_value<'a>(header: &'a [(String, String)], key: &str) -> Option<&'a str> {
    header
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_for_empty_input() {
        // Same framing as `git hash-object`, with SHA-256.
        let h = content_version(b"");
        let want: String = Sha256::digest(b"blob 0\0")
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(h, want);
    }

    #[test]
    fn curve_round_trips_in_both_formats() {
        let dir = std::env::temp_dir().join(format!("nvsat-cli-output-{}", std::process::id()));
        let c = Curve::new(
            CurveKind::NumberVariance,
            vec![1.0, 2.5],
            vec![0.1, 1.0 / 3.0],
            vec![0.0, 1e-3],
        )
        .unwrap();
        let header = vec![("beta".to_string(), "2".to_string())];
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let path = dir.join(format!("c.{}", extension(format)));
            let bytes = render_curve(&c, &header, format);
            write_with_sidecar(&path, &bytes, "abc", None, RunClock::start()).unwrap();
            let (back, h) = read_curve(&path).unwrap();
            assert_eq!(back, c);
            assert_eq!(header_value(&h, "beta"), Some("2"));
            let side: Sidecar =
                serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
            assert_eq!(side.content_version, content_version(&bytes));
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
