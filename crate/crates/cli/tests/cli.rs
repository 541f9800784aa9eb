use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvsat_cli::output::{content_version, read_curve, sidecar_path, Sidecar};

fn nvsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvsat"))
        .args(args)
        .env_remove("NVSAT_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nvsat-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn egue_number_variance_on_a_log_grid() {
    let dir = scratch("egue");
    let out = nvsat(&[
        "analytic",
        "--model",
        "egue",
        "--density",
        "499.75",
        "--r-grid",
        "log:0.1:4000:64",
        "--output-dir",
        s(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = dir.join("analytic_egue_sigma2.csv");
    let (curve, _) = read_curve(&path).unwrap();
    assert_eq!(curve.len(), 64);
    assert!((curve.abscissa[63] - 4000.0).abs() < 1e-9);
    let last = curve.values[63];
    assert!((last / 101.3 - 1.0).abs() < 0.01, "{last}");
    let rising: Vec<f64> = curve
        .abscissa
        .iter()
        .zip(&curve.values)
        .filter(|(r, _)| **r < 250.0)
        .map(|(_, v)| *v)
        .collect();
    assert!(rising.windows(2).all(|w| w[1] > w[0]));
    // Past r ~ R the curve rings around its saturation value.
    assert!(curve.values.iter().all(|&v| v < 1.07 * 101.3));

    let side: Sidecar =
        serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(
        side.content_version,
        content_version(&fs::read(&path).unwrap())
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn poisson_cutoff_flattens_at_its_saturation() {
    let dir = scratch("cutoff");
    let out = nvsat(&[
        "model",
        "--cutoff",
        "poisson",
        "--delta",
        "0.02",
        "--r-grid",
        "lin:0:1000:201",
        "--output-dir",
        s(&dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let file = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .unwrap();
    let (curve, _) = read_curve(&file).unwrap();
    assert_eq!(curve.len(), 201);
    let sat = 1.0 / (std::f64::consts::PI.powi(2) * 0.02);
    let tail = &curve.values[180..];
    for &v in tail {
        assert!((v / sat - 1.0).abs() < 0.01, "{v} vs {sat}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn compare_on_an_empty_directory_is_a_usage_error() {
    let dir = scratch("empty");
    let out = nvsat(&["compare", "--stats-dir", s(&dir), "--output-dir", s(&dir)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(s(&dir)), "{msg}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["analytic", "--model", "egue"],
        &["analytic", "--model", "nonsense", "--density", "10"],
        &["model", "--cutoff", "gue", "--delta", "-1"],
        &["preset", "nope"],
        &[
            "stats",
            "--beta",
            "2",
            "--n",
            "40",
            "--realizations",
            "4",
            "--zeta",
            "100000",
        ],
    ];
    for args in cases {
        let out = nvsat(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn stats_output_does_not_depend_on_thread_count() {
    let dir = scratch("threads");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.join(threads);
        let out = nvsat(&[
            "stats",
            "--beta",
            "1",
            "--n",
            "40",
            "--realizations",
            "24",
            "--zeta",
            "0,-100",
            "--r-grid",
            "lin:0.5:20:8",
            "--k-grid",
            "lin:0.2:2:5",
            "--orders",
            "0,1",
            "--threads",
            threads,
            "--output-dir",
            s(&out_dir),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert_eq!(outputs[0].len(), 8);
    assert_eq!(outputs[0], outputs[1]);

    let out = nvsat(&[
        "compare",
        "--stats-dir",
        s(&dir.join("1")),
        "--output-dir",
        s(&dir.join("c")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.lines().any(|l| l.starts_with("overall: ")),
        "{stdout}"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("c/compare_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["files"].as_array().unwrap().len(), 8);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_config_runs_like_the_flags() {
    let dir = scratch("config");
    let config = serde_json::json!([{
        "command": "analytic",
        "model": "gse",
        "quantity": "delta3",
        "r_grid": "lin:1:50:10",
        "output_dir": dir.join("a"),
    }]);
    let path = dir.join("run.json");
    fs::write(&path, config.to_string()).unwrap();
    let out = nvsat(&["run", "--config", s(&path)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = nvsat(&[
        "analytic",
        "--model",
        "gse",
        "--quantity",
        "delta3",
        "--r-grid",
        "lin:1:50:10",
        "--output-dir",
        s(&dir.join("b")),
    ]);
    assert!(out.status.success());
    let a = fs::read(dir.join("a/analytic_gse_delta3.csv")).unwrap();
    let b = fs::read(dir.join("b/analytic_gse_delta3.csv")).unwrap();
    assert_eq!(a, b);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn presets_print_valid_configurations() {
    for name in ["fig2", "fig7", "fig13"] {
        let out = nvsat(&["preset", name]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(!v.as_array().unwrap().is_empty(), "{name}");
    }
}
