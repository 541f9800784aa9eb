//! On-disk spectrum cache.
//!
//! Layout: `<root>/<config hash>/config.json` plus one file per realization,
//! `r<index>.bin` or `r<index>.csv`.
//!
//! Binary format, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `NVSATSP1` |
//! | 4     | beta code (1, 2, 4, or 0 for Poisson) |
//! | 4     | density mode (0 uniform, 1 semicircle) |
//! | 8     | N |
//! | 8     | seed |
//! | 8     | realization index |
//! | 8 N   | levels as `f64` |
//!
//! The CSV variant carries the same header as `# key=value` lines followed by
//! one level per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Beta, DensityMode, EnsembleConfig, EnsembleError, OneParticleSpectrum};
use crate::scalar::{lit, to_f64, Real};

pub const CACHE_MAGIC: &[u8; 8] = b"NVSATSP1";

/// Environment variable that overrides the default cache directory.
pub const CACHE_DIR_ENV: &str = "NVSAT_CACHE_DIR";

const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8 + 8;

/// Hex SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(config: &EnsembleConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    root: PathBuf,
    format: CacheFormat,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EnsembleError + '_ {
    move |source| EnsembleError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn density_code(mode: DensityMode) -> u32 {
    match mode {
        DensityMode::Uniform => 0,
        DensityMode::Semicircle => 1,
    }
}

impl SpectrumCache {
    pub fn new(root: impl Into<PathBuf>, format: CacheFormat) -> Self {
        SpectrumCache {
            root: root.into(),
            format,
        }
    }

    /// Cache rooted at `$NVSAT_CACHE_DIR`, falling back to `default`.
    pub fn from_env(default: impl Into<PathBuf>, format: CacheFormat) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir, format),
            _ => Self::new(default, format),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir_for(&self, config: &EnsembleConfig) -> PathBuf {
        self.root.join(config_hash(config))
    }

    pub fn path_for(&self, config: &EnsembleConfig, index: u64) -> PathBuf {
        let ext = match self.format {
            CacheFormat::Binary => "bin",
            CacheFormat::Csv => "csv",
        };
        self.dir_for(config).join(format!("r{index:07}.{ext}"))
    }

    pub fn contains(&self, config: &EnsembleConfig, index: u64) -> bool {
        self.path_for(config, index).is_file()
    }

    pub fn store<T: Real>(
        &self,
        spectrum: &OneParticleSpectrum<T>,
    ) -> Result<PathBuf, EnsembleError> {
        let dir = self.dir_for(&spectrum.config);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let cfg_path = dir.join("config.json");
        if !cfg_path.exists() {
            let json = serde_json::to_string_pretty(&spectrum.config).expect("config serializes");
            fs::write(&cfg_path, json).map_err(io_err(&cfg_path))?;
        }
        let path = self.path_for(&spectrum.config, spectrum.realization_index);
        let tmp = path.with_extension("tmp");
        {
            let file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            let mut w = BufWriter::new(file);
            match self.format {
                CacheFormat::Binary => write_binary(&mut w, spectrum),
                CacheFormat::Csv => write_csv(&mut w, spectrum),
            }
            .and_then(|_| w.flush())
            .map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn load<T: Real>(
        &self,
        config: &EnsembleConfig,
        index: u64,
    ) -> Result<OneParticleSpectrum<T>, EnsembleError> {
        let path = self.path_for(config, index);
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        let levels = match self.format {
            CacheFormat::Binary => read_binary(BufReader::new(file), config, index, &path)?,
            CacheFormat::Csv => read_csv(BufReader::new(file), config, index, &path)?,
        };
        let sp = OneParticleSpectrum {
            levels: levels.into_iter().map(lit).collect(),
            config: config.clone(),
            realization_index: index,
            clipped: 0,
        };
        sp.check_strictly_increasing()?;
        Ok(sp)
    }
}

fn write_binary<T: Real>(w: &mut impl Write, sp: &OneParticleSpectrum<T>) -> std::io::Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&sp.config.beta.code().to_le_bytes())?;
    w.write_all(&density_code(sp.config.density_mode).to_le_bytes())?;
    w.write_all(&(sp.levels.len() as u64).to_le_bytes())?;
    w.write_all(&sp.config.seed.to_le_bytes())?;
    w.write_all(&sp.realization_index.to_le_bytes())?;
    for &x in &sp.levels {
        w.write_all(&to_f64(x).to_le_bytes())?;
    }
    Ok(())
}

fn write_csv<T: Real>(w: &mut impl Write, sp: &OneParticleSpectrum<T>) -> std::io::Result<()> {
    writeln!(w, "# beta={}", sp.config.beta.code())?;
    writeln!(w, "# density_mode={}", sp.config.density_mode)?;
    writeln!(w, "# n={}", sp.levels.len())?;
    writeln!(w, "# seed={}", sp.config.seed)?;
    writeln!(w, "# index={}", sp.realization_index)?;
    for &x in &sp.levels {
        writeln!(w, "{:.16e}", to_f64(x))?;
    }
    Ok(())
}

fn format_err(path: &Path, reason: impl Into<String>) -> EnsembleError {
    EnsembleError::CacheFormat {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// `found` is `(beta, density, N, seed, index)` as read from the file.
fn check_header(
    path: &Path,
    config: &EnsembleConfig,
    index: u64,
    found: (u32, u32, u64, u64, u64),
) -> Result<(), EnsembleError> {
    let expected = (
        config.beta.code(),
        density_code(config.density_mode),
        config.n_levels as u64,
        config.seed,
        index,
    );
    if expected != found {
        return Err(format_err(
            path,
            format!("header (beta, density, N, seed, index) = {found:?}, expected {expected:?}"),
        ));
    }
    if Beta::from_code(found.0).is_none() {
        return Err(format_err(path, format!("unknown beta code {}", found.0)));
    }
    Ok(())
}

fn read_binary(
    mut r: impl Read,
    config: &EnsembleConfig,
    index: u64,
    path: &Path,
) -> Result<Vec<f64>, EnsembleError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(io_err(path))?;
    if &header[..8] != CACHE_MAGIC {
        return Err(format_err(path, "bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().expect("8 bytes"));
    let n = u64_at(16);
    check_header(
        path,
        config,
        index,
        (u32_at(8), u32_at(12), n, u64_at(24), u64_at(32)),
    )?;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(io_err(path))?;
    if body.len() as u64 != n * 8 {
        return Err(format_err(
            path,
            format!("expected {} level bytes, found {}", n * 8, body.len()),
        ));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn read_csv(
    r: impl BufRead,
    config: &EnsembleConfig,
    index: u64,
    path: &Path,
) -> Result<Vec<f64>, EnsembleError> {
    let mut fields = std::collections::HashMap::new();
    let mut levels = Vec::new();
    for line in r.lines() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| format_err(path, format!("cannot parse level '{line}'")))?;
        levels.push(x);
    }
    let get = |k: &str| -> Result<u64, EnsembleError> {
        fields
            .get(k)
            .ok_or_else(|| format_err(path, format!("missing header field '{k}'")))?
            .parse()
            .map_err(|_| format_err(path, format!("bad header field '{k}'")))
    };
    let density = match fields.get("density_mode").map(String::as_str) {
        Some("uniform") => 0,
        Some("semicircle") => 1,
        _ => return Err(format_err(path, "missing or bad density_mode")),
    };
    let n = get("n")?;
    check_header(
        path,
        config,
        index,
        (get("beta")? as u32, density, n, get("seed")?, get("index")?),
    )?;
    if levels.len() as u64 != n {
        return Err(format_err(
            path,
            format!("expected {n} levels, found {}", levels.len()),
        ));
    }
    Ok(levels)
}
