//! Run configuration, shared by flags, JSON config files and presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvsat::embedding::{place_window, TentUnfolding};
use nvsat::ensembles::{Beta, DensityMode, EnsembleConfig};

use crate::grid::GridSpec;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Generate,
    Stats,
    Analytic,
    Model,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Closed-form quantity tabulated by `analytic` and `model`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    #[default]
    Sigma2,
    Delta3,
    /// Two-point form factor against `chi = k R` (or `k` for cutoff models).
    FormFactor,
    /// Two-particle cluster function against `r`.
    Cluster,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Sigma2 => "sigma2",
            Quantity::Delta3 => "delta3",
            Quantity::FormFactor => "form_factor",
            Quantity::Cluster => "cluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zeta_targets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_half_width: Option<f64>,
    /// Form-factor grid in units of `chi = k R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spacing_orders: Vec<usize>,
    #[serde(default = "default_spacing_bins")]
    pub spacing_bins: usize,
    /// Interval centres averaged by the number-variance estimator.
    #[serde(default = "default_offsets")]
    pub offsets: usize,
    /// `egue`, `egse`, `egoe`, `poisson`, `goe`, `gue` or `gse`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    /// `poisson`, `goe`, `gue` or `gse`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub quantity: Quantity,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Input directory of `compare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_offsets() -> usize {
    33
}

fn default_spacing_bins() -> usize {
    100
}

impl RunConfig {
    pub fn new(command: CommandKind, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            ensemble: None,
            zeta_targets: Vec::new(),
            window_half_width: None,
            k_grid: None,
            r_grid: None,
            spacing_orders: Vec::new(),
            spacing_bins: default_spacing_bins(),
            offsets: default_offsets(),
            model: None,
            density: None,
            cutoff: None,
            delta: None,
            quantity: Quantity::default(),
            output_dir: output_dir.into(),
            cache_dir: None,
            stats_dir: None,
            threads: None,
            format: OutputFormat::default(),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    /// Hash of the settings that determine the results. Thread count and
    /// output and cache locations are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.output_dir = PathBuf::new();
        c.cache_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn ensemble(&self) -> Result<&EnsembleConfig, CliError> {
        self.ensemble.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "{:?} needs an ensemble (--beta, --n, ...)",
                self.command
            ))
        })
    }

    pub fn half_width(&self) -> Result<f64, CliError> {
        match self.window_half_width {
            Some(w) => Ok(w),
            None => Ok(2.0 * self.ensemble()?.n_levels as f64),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        match self.command {
            CommandKind::Generate => {
                self.ensemble()?
                    .validate()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            CommandKind::Stats => self.validate_stats()?,
            CommandKind::Analytic => {
                let model = self
                    .model
                    .as_deref()
                    .ok_or_else(|| CliError::Usage("analytic needs --model".into()))?;
                if matches!(model, "egue" | "egse" | "egoe") && self.density.is_none() {
                    return Err(CliError::Usage(format!("model {model} needs --density")));
                }
                self.grid_for_quantity()?;
            }
            CommandKind::Model => {
                if self.cutoff.is_none() || self.delta.is_none() {
                    return Err(CliError::Usage("model needs --cutoff and --delta".into()));
                }
                if matches!(self.quantity, Quantity::Cluster) {
                    return Err(CliError::Usage(
                        "cutoff models tabulate sigma2, delta3 or form_factor".into(),
                    ));
                }
                self.grid_for_quantity()?;
            }
            CommandKind::Compare => {
                if self.stats_dir.is_none() {
                    return Err(CliError::Usage("compare needs --stats-dir".into()));
                }
            }
        }
        Ok(())
    }

    /// The grid a closed-form quantity is tabulated on.
    pub fn grid_for_quantity(&self) -> Result<&GridSpec, CliError> {
        let (grid, flag) = match self.quantity {
            Quantity::FormFactor => (&self.k_grid, "--k-grid"),
            _ => (&self.r_grid, "--r-grid"),
        };
        let g = grid
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{} needs {flag}", self.quantity.name())))?;
        if self.quantity != Quantity::FormFactor
            && self.quantity != Quantity::Cluster
            && g.first() < 0.0
        {
            return Err(CliError::Usage(format!(
                "{flag} must not contain negative r"
            )));
        }
        Ok(g)
    }

    fn validate_stats(&self) -> Result<(), CliError> {
        let ens = self.ensemble()?;
        ens.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.zeta_targets.is_empty() {
            return Err(CliError::Usage(
                "stats needs at least one --zeta target".into(),
            ));
        }
        if self.k_grid.is_none() && self.r_grid.is_none() && self.spacing_orders.is_empty() {
            return Err(CliError::Usage(
                "stats has nothing to estimate: give --k-grid, --r-grid or --orders".into(),
            ));
        }
        let w = self.half_width()?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(CliError::Usage(format!(
                "window half-width must be positive, got {w}"
            )));
        }
        if let Some(k) = &self.k_grid {
            if !(k.first() > 0.0) {
                return Err(CliError::Usage("--k-grid must be positive".into()));
            }
        }
        if let Some(r) = &self.r_grid {
            if r.first() < 0.0 {
                return Err(CliError::Usage(
                    "--r-grid must not contain negative r".into(),
                ));
            }
            let limit = 0.8 * 2.0 * w;
            if r.last() > limit {
                return Err(CliError::Usage(format!(
                    "--r-grid reaches {} but windows of half-width {w} allow r up to {limit}",
                    r.last()
                )));
            }
        }
        if self.offsets == 0 || self.spacing_bins == 0 {
            return Err(CliError::Usage(
                "--offsets and --spacing-bins must be at least 1".into(),
            ));
        }
        let half_total = ens.two_particle_count() as f64 / 2.0;
        for &z in &self.zeta_targets {
            let fits = match ens.density_mode {
                DensityMode::Uniform => {
                    place_window(&TentUnfolding { n: ens.n_levels }, z, w).is_ok()
                }
                DensityMode::Semicircle => z.abs() + w < half_total,
            };
            if !fits {
                return Err(CliError::Usage(format!(
                    "zeta target {z} with half-width {w} leaves the unfolded spectrum of N={} (|zeta| + w must stay below {half_total})",
                    ens.n_levels
                )));
            }
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 12] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12",
    "fig13",
];

const DESK_SEED: u64 = 20261015;

struct Scale {
    n: usize,
    realizations: u64,
    zetas: Vec<f64>,
}

/// Three regions of the spectrum; desk scale shrinks `zeta` with `N^2`.
fn three_regions(full: bool) -> Scale {
    if full {
        Scale {
            n: 1000,
            realizations: 100_000,
            zetas: vec![1500.0, 50000.0, 100000.0],
        }
    } else {
        Scale {
            n: 300,
            realizations: 2000,
            zetas: vec![135.0, 4500.0, 9000.0],
        }
    }
}

fn centre(full: bool) -> Scale {
    if full {
        Scale {
            n: 1000,
            realizations: 100_000,
            zetas: vec![1500.0],
        }
    } else {
        Scale {
            n: 300,
            realizations: 2000,
            zetas: vec![0.0],
        }
    }
}

fn stats(beta: Beta, scale: &Scale, mode: DensityMode, out: &str) -> RunConfig {
    let mut c = RunConfig::new(CommandKind::Stats, out);
    let mut ens =
        EnsembleConfig::new(beta, scale.n, scale.realizations, DESK_SEED).expect("preset ensemble");
    ens.density_mode = mode;
    c.ensemble = Some(ens);
    c.zeta_targets = scale.zetas.clone();
    c.window_half_width = Some(2.0 * scale.n as f64);
    c
}

fn compare(stats_dir: &str, out: &str) -> RunConfig {
    let mut c = RunConfig::new(CommandKind::Compare, out);
    c.stats_dir = Some(stats_dir.into());
    c
}

/// Configurations that produce the data of one figure, under `root`.
pub fn preset(name: &str, full_scale: bool, root: &str) -> Result<Vec<RunConfig>, CliError> {
    let sub = |s: &str| format!("{root}/{name}/{s}");
    let betas = [
        (Beta::Orthogonal, "egoe"),
        (Beta::Unitary, "egue"),
        (Beta::Symplectic, "egse"),
    ];
    let per_beta = |beta: Beta| match beta {
        Beta::Unitary => ("fig6", "fig7"),
        Beta::Symplectic => ("fig8", "fig9"),
        _ => ("fig10", "fig11"),
    };
    let mut out = Vec::new();
    match name {
        "fig2" => {
            for (beta, tag) in betas {
                let mut c = stats(beta, &centre(full_scale), DensityMode::Uniform, &sub(tag));
                c.r_grid = Some(GridSpec::Lin {
                    lo: 0.25,
                    hi: 5.0,
                    n: 20,
                });
                c.offsets = c.ensemble.as_ref().map_or(33, |e| e.n_levels + 1);
                out.push(c);
            }
        }
        "fig3" => {
            for (beta, tag) in betas {
                let mut c = stats(beta, &centre(full_scale), DensityMode::Uniform, &sub(tag));
                c.spacing_orders = vec![0, 1, 2, 3];
                out.push(c);
            }
        }
        "fig4" => {
            for delta in [0.005, 0.01, 0.02] {
                let mut c = RunConfig::new(CommandKind::Model, sub(&format!("delta{delta}")));
                c.cutoff = Some("poisson".into());
                c.delta = Some(delta);
                c.r_grid = Some(GridSpec::Lin {
                    lo: 0.0,
                    hi: 1000.0,
                    n: 201,
                });
                out.push(c);
            }
        }
        "fig5" => {
            for (_, g) in [("goe", "goe"), ("gue", "gue"), ("gse", "gse")] {
                for delta in [0.005, 0.01, 0.02] {
                    let mut c =
                        RunConfig::new(CommandKind::Model, sub(&format!("{g}_delta{delta}")));
                    c.cutoff = Some(g.into());
                    c.delta = Some(delta);
                    c.r_grid = Some(GridSpec::Log {
                        lo: 0.1,
                        hi: 1000.0,
                        n: 100,
                    });
                    out.push(c);
                }
            }
        }
        "fig6" | "fig7" | "fig8" | "fig9" | "fig10" | "fig11" => {
            let (beta, _) = betas
                .into_iter()
                .find(|(b, _)| per_beta(*b).0 == name || per_beta(*b).1 == name)
                .expect("figure maps to an ensemble");
            let scale = three_regions(full_scale);
            let mut c = stats(beta, &scale, DensityMode::Uniform, &sub("stats"));
            if per_beta(beta).0 == name {
                c.k_grid = Some(GridSpec::Lin {
                    lo: 0.05,
                    hi: 3.0,
                    n: 60,
                });
            } else {
                c.r_grid = Some(GridSpec::Log {
                    lo: 1.0,
                    hi: 3.0 * scale.n as f64,
                    n: 40,
                });
            }
            out.push(c);
            out.push(compare(&sub("stats"), &sub("compare")));
        }
        "fig12" => {
            let scale = if full_scale {
                Scale {
                    n: 5000,
                    realizations: 5000,
                    zetas: vec![50000.0],
                }
            } else {
                Scale {
                    n: 600,
                    realizations: 500,
                    zetas: vec![0.0],
                }
            };
            for (beta, tag) in betas {
                let mut c = stats(beta, &scale, DensityMode::Uniform, &sub(tag));
                c.r_grid = Some(GridSpec::Log {
                    lo: 1.0,
                    hi: 3.0 * scale.n as f64,
                    n: 40,
                });
                out.push(c);
                out.push(compare(&sub(tag), &sub(&format!("{tag}_compare"))));
            }
        }
        "fig13" => {
            let scale = three_regions(full_scale);
            let grid = GridSpec::Log {
                lo: 1.0,
                hi: 3.0 * scale.n as f64,
                n: 40,
            };
            for (mode, tag) in [
                (DensityMode::Semicircle, "semicircle"),
                (DensityMode::Uniform, "uniform"),
            ] {
                let mut c = stats(Beta::Unitary, &scale, mode, &sub(tag));
                c.r_grid = Some(grid.clone());
                out.push(c);
            }
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown preset '{name}'; available: {}",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            for full in [false, true] {
                let cfgs = preset(name, full, "out").unwrap();
                assert!(!cfgs.is_empty());
                for c in cfgs {
                    c.validate()
                        .unwrap_or_else(|e| panic!("{name} full={full}: {e}"));
                }
            }
        }
        assert!(preset("fig1", false, "out").is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfgs = preset("fig7", false, "out").unwrap();
        let text = serde_json::to_string_pretty(&cfgs).unwrap();
        let back: Vec<RunConfig> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfgs);
        assert_eq!(back[0].hash(), cfgs[0].hash());
    }

    #[test]
    fn stats_rejects_out_of_range_target() {
        let mut c = preset("fig7", false, "out").unwrap().remove(0);
        c.zeta_targets = vec![22400.0];
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        c.zeta_targets = vec![0.0];
        c.r_grid = Some("lin:1:2000:5".parse().unwrap());
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"command": "compare", "output_dir": "x", "stats_dir": "y", "bogus": 1}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }
}
