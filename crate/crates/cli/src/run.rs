//! Command execution.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nvsat::analytic::{
    delta3_model, f2_two_particle, f2_windowed, sigma2, sigma2_saturation, y2_two_particle,
    AnalyticModel,
};
use nvsat::curve::{fmt17, Curve, CurveKind};
use nvsat::ensembles::{
    config_hash, Beta, CacheFormat, EnsembleConfig, SpectrumCache, CACHE_DIR_ENV,
};
use nvsat::estimators::{
    form_factor_estimate, number_variance_estimate, poisson_pk_bin_mean, spacing_histogram,
    EstimateMetadata, NumberVarianceOptions,
};
use nvsat::pipeline::{collect_windows, generate, Source, WindowRequest};
use nvsat::symmetry::Symmetry;
use nvsat::LevelWindow;

use crate::config::{CommandKind, OutputFormat, Quantity, RunConfig};
use crate::output::{
    extension, header_value, io_error, read_curve, render_curve, write_with_sidecar, Header,
    RunClock, SIDECAR_SUFFIX,
};
use crate::CliError;

/// Cache used when neither `--cache-dir` nor the environment names one.
pub const DEFAULT_CACHE_DIR: &str = "nvsat-cache";

/// Files written by a run.
pub type Written = Vec<PathBuf>;

pub fn run(config: &RunConfig) -> Result<Written, CliError> {
    config.validate()?;
    let clock = RunClock::start();
    match config.command {
        CommandKind::Generate => run_generate(config, clock),
        CommandKind::Stats => run_stats(config, clock),
        CommandKind::Analytic => run_analytic(config, clock),
        CommandKind::Model => run_model(config, clock),
        CommandKind::Compare => run_compare(config, clock),
    }
}

fn numeric<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Numeric(format!("{context}: {e}"))
}

/// Explicit directory, else `$NVSAT_CACHE_DIR`, else the default.
fn cache(config: &RunConfig) -> SpectrumCache {
    match &config.cache_dir {
        Some(dir) => SpectrumCache::new(dir, CacheFormat::Binary),
        None => SpectrumCache::from_env(DEFAULT_CACHE_DIR, CacheFormat::Binary),
    }
}

fn uses_cache(config: &RunConfig) -> bool {
    config.cache_dir.is_some() || std::env::var_os(CACHE_DIR_ENV).is_some_and(|v| !v.is_empty())
}

fn ensemble_header(ens: &EnsembleConfig) -> Header {
    vec![
        ("beta".into(), ens.beta.to_string()),
        ("n_levels".into(), ens.n_levels.to_string()),
        ("realizations".into(), ens.realizations.to_string()),
        ("seed".into(), ens.seed.to_string()),
        ("density_mode".into(), ens.density_mode.to_string()),
        ("ensemble_hash".into(), config_hash(ens)),
    ]
}

#[derive(Serialize)]
struct GenerateSummary<'a> {
    ensemble: &'a EnsembleConfig,
    cache_dir: String,
    realizations: u64,
    clipped_levels: usize,
}

fn run_generate(config: &RunConfig, clock: RunClock) -> Result<Written, CliError> {
    let ens = config.ensemble()?;
    let cache = cache(config);
    let clipped = generate::<f64>(ens, Source::Cache(&cache)).map_err(numeric("generate"))?;
    let summary = GenerateSummary {
        ensemble: ens,
        cache_dir: cache.dir_for(ens).display().to_string(),
        realizations: ens.realizations,
        clipped_levels: clipped,
    };
    let path = config.output_dir.join("generate.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_with_sidecar(
        &path,
        text.as_bytes(),
        &config.hash(),
        Some(config_hash(ens)),
        clock,
    )?;
    Ok(vec![path])
}

fn zeta_tag(z: f64) -> String {
    format!("zeta{z}")
}

fn run_stats(config: &RunConfig, clock: RunClock) -> Result<Written, CliError> {
    let ens = config.ensemble()?;
    let w = config.half_width()?;
    let request = WindowRequest::new(config.zeta_targets.clone(), w);
    let cache = cache(config);
    let source = if uses_cache(config) {
        Source::Cache(&cache)
    } else {
        Source::Sample
    };
    let out =
        collect_windows::<f64>(ens, &request, source).map_err(numeric("window extraction"))?;
    let hash = config.hash();
    let ens_hash = Some(config_hash(ens));
    let ext = extension(config.format);
    let mut written = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = config.output_dir.join(name);
        write_with_sidecar(&path, &bytes, &hash, ens_hash.clone(), clock)?;
        written.push(path);
        Ok(())
    };
    if let Some(map) = &out.unfolding {
        let mut buf = Vec::new();
        map.write_csv(&mut buf)
            .map_err(|e| CliError::Io(e.to_string()))?;
        emit("unfolding.csv".into(), buf)?;
    }
    for set in &out.sets {
        let windows: &[LevelWindow<f64>] = &set.windows;
        let tag = zeta_tag(set.zeta_center);
        let mut base = ensemble_header(ens);
        base.push(("config_hash".into(), hash.clone()));
        let meta = EstimateMetadata::from_windows(CurveKind::NumberVariance, windows)
            .map_err(numeric("windows"))?;
        base.extend(meta.header());
        if let Some(grid) = &config.r_grid {
            let opts = NumberVarianceOptions::with_offsets(config.offsets);
            let e = number_variance_estimate(windows, &grid.points(), &opts)
                .map_err(numeric("number variance"))?;
            let mut h = base.clone();
            h.push(("abscissa".into(), "r".into()));
            h.push(("offsets".into(), config.offsets.to_string()));
            h.push(("grid".into(), grid.to_string()));
            emit(
                format!("number_variance_{tag}.{ext}"),
                render_curve(&e.curve, &h, config.format),
            )?;
        }
        if let Some(grid) = &config.k_grid {
            let chi = grid.points();
            let density = meta.local_density;
            let k: Vec<f64> = chi.iter().map(|c| c / density).collect();
            let e = form_factor_estimate(windows, &k).map_err(numeric("form factor"))?;
            let curve = Curve::new(CurveKind::FormFactor, chi, e.curve.values, e.curve.stderr)
                .map_err(numeric("form factor"))?;
            let mut h = base.clone();
            h.push(("abscissa".into(), "chi".into()));
            h.push(("grid".into(), grid.to_string()));
            emit(
                format!("form_factor_{tag}.{ext}"),
                render_curve(&curve, &h, config.format),
            )?;
        }
        for &order in &config.spacing_orders {
            let hist = spacing_histogram(windows, order, config.spacing_bins, None)
                .map_err(numeric("spacings"))?;
            let curve = hist.to_curve().map_err(numeric("spacings"))?;
            let mut h = base.clone();
            h.push(("abscissa".into(), "s".into()));
            h.push(("order".into(), order.to_string()));
            h.push(("overflow".into(), hist.overflow.to_string()));
            h.push(("spacings".into(), hist.total().to_string()));
            h.push(("mean_spacing".into(), fmt17(hist.mean)));
            emit(
                format!("spacing_k{order}_{tag}.{ext}"),
                render_curve(&curve, &h, config.format),
            )?;
        }
    }
    Ok(written)
}

fn parse_symmetry(name: &str) -> Result<Symmetry, CliError> {
    name.parse::<Symmetry>().map_err(CliError::Usage)
}

fn analytic_model(config: &RunConfig) -> Result<AnalyticModel<f64>, CliError> {
    let name = config.model.as_deref().unwrap_or_default();
    let model = match name {
        "egue" | "egse" | "egoe" => {
            let s = match name {
                "egue" => Symmetry::Unitary,
                "egse" => Symmetry::Symplectic,
                _ => Symmetry::Orthogonal,
            };
            let density = config.density.unwrap_or_default();
            AnalyticModel::embedded(s, density).map_err(|e| CliError::Usage(e.to_string()))?
        }
        "poisson" => AnalyticModel::Poisson,
        "goe" | "gue" | "gse" => AnalyticModel::Gaussian(parse_symmetry(name)?),
        _ => {
            return Err(CliError::Usage(format!(
                "unknown model '{name}'; expected egue, egse, egoe, poisson, goe, gue or gse"
            )))
        }
    };
    Ok(model)
}

fn cutoff_model(config: &RunConfig) -> Result<AnalyticModel<f64>, CliError> {
    let delta = config.delta.unwrap_or_default();
    let model = match config.cutoff.as_deref().unwrap_or_default() {
        "poisson" => AnalyticModel::PoissonCutoff { delta },
        other => AnalyticModel::GxeCutoff {
            delta,
            symmetry: parse_symmetry(other).map_err(|_| {
                CliError::Usage(format!(
                    "unknown cutoff '{other}'; expected poisson, goe, gue or gse"
                ))
            })?,
        },
    };
    model
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(model)
}

fn tabulate(
    model: &AnalyticModel<f64>,
    quantity: Quantity,
    x: &[f64],
) -> Result<Curve<f64>, CliError> {
    let embedded = model.embedded_parts();
    let mut values = Vec::with_capacity(x.len());
    for &v in x {
        let y = match quantity {
            Quantity::Sigma2 => sigma2(v, model),
            Quantity::Delta3 if v == 0.0 => Ok(0.0),
            Quantity::Delta3 => delta3_model(v, model),
            Quantity::FormFactor => Ok(match embedded {
                Some((_, density)) => f2_two_particle(v / density, model),
                None => f2_two_particle(v, model),
            }),
            Quantity::Cluster => y2_two_particle(v, model),
        };
        values.push(y.map_err(|e| match e {
            nvsat::AnalyticError::Unsupported { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(format!("{model} at {v}: {e}")),
        })?);
    }
    let kind = match quantity {
        Quantity::Sigma2 => CurveKind::NumberVariance,
        Quantity::Delta3 => CurveKind::Rigidity,
        Quantity::FormFactor => CurveKind::FormFactor,
        Quantity::Cluster => CurveKind::Cluster,
    };
    Curve::exact(kind, x.to_vec(), values).map_err(numeric("tabulation"))
}

fn closed_form_header(config: &RunConfig, model: &AnalyticModel<f64>) -> Header {
    let mut h = vec![
        ("model".into(), model.to_string()),
        ("config_hash".into(), config.hash()),
    ];
    let abscissa = match (config.quantity, model.embedded_parts()) {
        (Quantity::FormFactor, Some(_)) => "chi",
        (Quantity::FormFactor, None) => "k",
        _ => "r",
    };
    h.push(("abscissa".into(), abscissa.into()));
    if let Ok(sat) = sigma2_saturation(model) {
        h.push(("sigma2_saturation".into(), fmt17(sat)));
    }
    if let Ok(g) = config.grid_for_quantity() {
        h.push(("grid".into(), g.to_string()));
    }
    h
}

fn write_closed_form(
    config: &RunConfig,
    model: &AnalyticModel<f64>,
    stem: String,
    clock: RunClock,
) -> Result<Written, CliError> {
    let grid = config.grid_for_quantity()?.points();
    let curve = tabulate(model, config.quantity, &grid)?;
    let header = closed_form_header(config, model);
    let path = config.output_dir.join(format!(
        "{stem}_{}.{}",
        config.quantity.name(),
        extension(config.format)
    ));
    write_with_sidecar(
        &path,
        &render_curve(&curve, &header, config.format),
        &config.hash(),
        None,
        clock,
    )?;
    Ok(vec![path])
}

fn run_analytic(config: &RunConfig, clock: RunClock) -> Result<Written, CliError> {
    let model = analytic_model(config)?;
    let stem = format!("analytic_{}", config.model.as_deref().unwrap_or_default());
    write_closed_form(config, &model, stem, clock)
}

fn run_model(config: &RunConfig, clock: RunClock) -> Result<Written, CliError> {
    let model = cutoff_model(config)?;
    let stem = format!(
        "model_{}_delta{}",
        config.cutoff.as_deref().unwrap_or_default(),
        config.delta.unwrap_or_default()
    );
    write_closed_form(config, &model, stem, clock)
}

/// Result of comparing one estimate file with its analytic curve.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub file: String,
    pub points: usize,
    pub within_3_sigma: usize,
    pub fraction: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    stats_dir: String,
    files: &'a [Verdict],
    pass: bool,
}

fn estimate_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "stats directory {} does not exist; run `nvsat stats` first",
            dir.display()
        )));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            let data = name.ends_with(".csv")
                || (name.ends_with(".json") && !name.ends_with(SIDECAR_SUFFIX));
            data && ["number_variance_", "form_factor_", "spacing_k"]
                .iter()
                .any(|p| name.starts_with(p))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no estimate files (number_variance_*, form_factor_*, spacing_k*) in {}; run `nvsat stats` first",
            dir.display()
        )));
    }
    Ok(files)
}

fn header_f64(header: &[(String, String)], key: &str, file: &Path) -> Result<f64, CliError> {
    header_value(header, key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{}: missing or malformed '# {key}=' header",
                file.display()
            ))
        })
}

/// Analytic counterpart of every point of an estimate.
fn reference(
    curve: &Curve<f64>,
    header: &[(String, String)],
    file: &Path,
) -> Result<Vec<f64>, CliError> {
    let beta: Beta = header_value(header, "beta")
        .ok_or_else(|| CliError::Usage(format!("{}: missing '# beta=' header", file.display())))?
        .parse()
        .map_err(|e: String| CliError::Usage(format!("{}: {e}", file.display())))?;
    let density = header_f64(header, "local_density", file)?;
    let model = match beta.symmetry() {
        Some(s) => {
            AnalyticModel::embedded(s, density).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => AnalyticModel::Poisson,
    };
    let x = &curve.abscissa;
    match curve.kind {
        CurveKind::NumberVariance => x
            .iter()
            .map(|&r| sigma2(r, &model).map_err(numeric("analytic number variance")))
            .collect(),
        CurveKind::FormFactor => {
            let length = 2.0 * header_f64(header, "window_half_width", file)?;
            x.iter()
                .map(|&chi| {
                    f2_windowed(chi / density, &model, length)
                        .map_err(numeric("analytic form factor"))
                })
                .collect()
        }
        CurveKind::SpacingPdf => {
            let order = header_f64(header, "order", file)? as usize;
            let h = if x.len() > 1 { x[1] - x[0] } else { 2.0 * x[0] };
            let bins: Vec<f64> = x
                .iter()
                .map(|&c| poisson_pk_bin_mean(c - h / 2.0, c + h / 2.0, order))
                .collect();
            let mass: f64 = bins.iter().sum::<f64>() * h;
            Ok(bins.into_iter().map(|b| b / mass).collect())
        }
        other => Err(CliError::Usage(format!(
            "{}: cannot compare curves of kind {other}",
            file.display()
        ))),
    }
}

/// Errors used for the z-scores. Histogram bins use the counting error of
/// the expected count, which stays finite for empty bins.
fn comparison_errors(
    curve: &Curve<f64>,
    header: &[(String, String)],
    th: &[f64],
    file: &Path,
) -> Result<Vec<f64>, CliError> {
    if curve.kind != CurveKind::SpacingPdf {
        return Ok(curve.stderr.clone());
    }
    let n = header_f64(header, "spacings", file)?;
    let x = &curve.abscissa;
    let h = if x.len() > 1 { x[1] - x[0] } else { 2.0 * x[0] };
    Ok(th.iter().map(|&p| (p / (n * h)).sqrt()).collect())
}

fn run_compare(config: &RunConfig, clock: RunClock) -> Result<Written, CliError> {
    let dir = config.stats_dir.as_ref().expect("validated");
    let files = estimate_files(dir)?;
    let hash = config.hash();
    let mut verdicts = Vec::new();
    let mut written = Vec::new();
    for file in &files {
        let (curve, header) = read_curve(file)?;
        let th = reference(&curve, &header, file)?;
        let errors = comparison_errors(&curve, &header, &th, file)?;
        let mut within = 0;
        let mut rows = Vec::with_capacity(curve.len());
        for i in 0..curve.len() {
            let (v, s) = (curve.values[i], errors[i]);
            let z = if s > 0.0 {
                (v - th[i]) / s
            } else if v == th[i] {
                0.0
            } else {
                f64::INFINITY
            };
            if z.abs() <= 3.0 {
                within += 1;
            }
            rows.push([curve.abscissa[i], v, s, th[i], z]);
        }
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let fraction = within as f64 / curve.len().max(1) as f64;
        let v = Verdict {
            file: file
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            points: curve.len(),
            within_3_sigma: within,
            fraction,
            pass: fraction >= 0.95,
        };
        println!(
            "{}: {}/{} points within 3 sigma: {}",
            v.file,
            within,
            v.points,
            if v.pass { "PASS" } else { "FAIL" }
        );
        let mut head = header.clone();
        head.push(("kind".into(), curve.kind.to_string()));
        head.push(("compare_config_hash".into(), hash.clone()));
        head.push((
            "verdict".into(),
            if v.pass { "PASS" } else { "FAIL" }.into(),
        ));
        let path = config
            .output_dir
            .join(format!("compare_{stem}.{}", extension(config.format)));
        write_with_sidecar(
            &path,
            &render_table(&head, &rows, config.format),
            &hash,
            None,
            clock,
        )?;
        written.push(path);
        verdicts.push(v);
    }
    let pass = verdicts.iter().all(|v| v.pass);
    println!("overall: {}", if pass { "PASS" } else { "FAIL" });
    let summary = CompareSummary {
        stats_dir: dir.display().to_string(),
        files: &verdicts,
        pass,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    let path = config.output_dir.join("compare_summary.json");
    write_with_sidecar(&path, text.as_bytes(), &hash, None, clock)?;
    written.push(path);
    Ok(written)
}

const TABLE_COLUMNS: [&str; 5] = ["abscissa", "estimate", "stderr", "analytic", "z"];

fn render_table(header: &[(String, String)], rows: &[[f64; 5]], format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Csv => {
            let mut s = String::new();
            for (k, v) in header {
                s.push_str(&format!("# {k}={v}\n"));
            }
            s.push_str(&TABLE_COLUMNS.join(","));
            s.push('\n');
            for r in rows {
                let cells: Vec<String> = r.iter().map(|&x| fmt17(x)).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    TABLE_COLUMNS
                        .iter()
                        .zip(r)
                        .map(|(k, &x)| (k.to_string(), serde_json::Value::String(fmt17(x))))
                        .collect()
                })
                .collect();
            let doc = serde_json::json!({ "header": header, "rows": rows });
            let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
            s.push('\n');
            s.into_bytes()
        }
    }
}
