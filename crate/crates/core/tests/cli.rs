use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use npmix::cli::demo::{near_nonregular_demo, DemoConfig};
use npmix::cli::{EvalReport, FitSummary};
use npmix::measures::{DiscreteMeasure, IntervalSet};
use npmix::mixfit::{estimate_components, voronoi_extend, MixtureFit};

fn npmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npmix")).args(args).output().unwrap()
}

fn point_masses() -> Value {
    json!({
        "family": "vanilla_mixture",
        "lambdas": [0.3, 0.7],
        "mus": [-2.5, 2.5],
        "sigma": 0.25,
        "gks": [{"kind": "point_mass"}, {"kind": "point_mass"}]
    })
}

fn write_spec(dir: &Path, spec: Value) -> String {
    let path = dir.join("spec.json");
    fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(spec: &str, out: &Path, cmd: &[&str]) -> Output {
    let out = out.to_string_lossy();
    let mut args = vec!["--spec", spec, "--out", &out];
    args.extend_from_slice(cmd);
    npmix(&args)
}

#[test]
fn simulate_writes_one_csv_per_seed_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        json!({"model": point_masses(), "n": 500, "seeds": [0, 1, 2]}),
    );
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["simulate"]).status.success());
    let files: Vec<_> = (0..3).map(|s| out.join(format!("data/n500_seed{s}.csv"))).collect();
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["datasets"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["model"]["family"], "vanilla_mixture");
    assert_ne!(first[0], first[1]);

    assert!(run(&spec, &out, &["simulate"]).status.success());
    let again: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(first, again);
}

#[test]
fn zero_sample_size_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), json!({"model": point_masses(), "n": 0, "seeds": [0]}));
    assert_eq!(
        run(&spec, &dir.path().join("out"), &["simulate"]).status.code(),
        Some(2)
    );
    let spec = write_spec(dir.path(), json!({"model": point_masses(), "n": 10, "seeds": []}));
    assert_eq!(
        run(&spec, &dir.path().join("out"), &["simulate"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_model_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        json!({"model": {"file": "nowhere.json"}, "n": 10, "seeds": [0]}),
    );
    let o = run(&spec, &dir.path().join("out"), &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.json"));
}

#[test]
fn missing_dataset_names_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), json!({"model": point_masses(), "n": 500, "seeds": [0, 7]}));
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["--seeds", "0", "simulate"]).status.success());
    let o = run(&spec, &out, &["fit-mixture"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed 7"));
}

#[test]
fn mixture_fit_and_acceptance_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = point_masses();
    let spec = write_spec(
        dir.path(),
        json!({"model": model, "n": [1000, 4000], "seeds": [0, 1, 2],
               "acceptance": {"max_lambda_error": 0.05, "decreasing": false}}),
    );
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["simulate"]).status.success());
    assert!(run(&spec, &out, &["fit-mixture"]).status.success());
    let fit: MixtureFit = serde_json::from_slice(&fs::read(out.join("fits/n4000_seed1.json")).unwrap()).unwrap();
    assert_eq!(fit.k, 2);
    assert!((fit.lambdas_hat.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    let plot = fs::read_to_string(out.join("plots/n4000_seed1.csv")).unwrap();
    assert!(plot.starts_with("y,f_hat_1,f_hat_2,f_1,f_2\n"));

    let o = run(&spec, &out, &["--acceptance", "eval"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: EvalReport = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.passed);
    assert!(fs::read_to_string(out.join("trend.csv"))
        .unwrap()
        .starts_with("n,metric,median,q1,q3"));

    let strict = write_spec(
        dir.path(),
        json!({"model": point_masses(), "n": [1000, 4000], "seeds": [0, 1, 2],
               "acceptance": {"max_lambda_error": 1e-12}}),
    );
    assert_eq!(run(&strict, &out, &["--acceptance", "eval"]).status.code(), Some(4));
    assert_eq!(run(&strict, &out, &["eval"]).status.code(), Some(0));
}

#[test]
fn perfect_fits_evaluate_to_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), json!({"model": point_masses(), "n": 100, "seeds": [0, 1]}));
    let out = dir.path().join("out");
    let g = DiscreteMeasure::normalized(vec![(-2.5, 0.3), (2.5, 0.7)]).unwrap();
    let e = vec![
        IntervalSet::single(-2.6, -2.4).unwrap(),
        IntervalSet::single(2.4, 2.6).unwrap(),
    ];
    let fit = estimate_components(&g, &voronoi_extend(&e).unwrap(), &e, 0.25, 4096).unwrap();
    fs::create_dir_all(out.join("fits")).unwrap();
    for seed in [0, 1] {
        let path = out.join(format!("fits/n100_seed{seed}.json"));
        fs::write(path, serde_json::to_string(&fit).unwrap()).unwrap();
    }
    assert!(run(&spec, &out, &["eval"]).status.success());
    let report: EvalReport = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.n_ok, 2);
    assert!(row.metrics["lambda_error"].median <= 1e-12);
    assert!(row.metrics["f_error"].median <= 1e-4);
    assert!(row.metrics["w1"].median <= 1e-12);
}

#[test]
fn regression_pipeline_writes_curves_and_separation_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let model = json!({
        "family": "mixed_regression", "a": -1.0, "b": 1.0, "p_x": {"kind": "uniform"}, "lambdas": [0.35, 0.65],
        "m": [{"kind": "polynomial", "coeffs": [0.0, 1.0]}, {"kind": "polynomial", "coeffs": [0.0, -1.0]}],
        "sigma": 0.2, "g0": {"kind": "point_mass"}, "x0": 1.0
    });
    fs::write(dir.path().join("model.json"), model.to_string()).unwrap();
    let spec = write_spec(
        dir.path(),
        json!({"model": {"file": "model.json"}, "n": 20000, "seeds": [0, 1], "acceptance": {"max_m_error": 0.2}}),
    );
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["simulate"]).status.success());
    assert!(run(&spec, &out, &["--threads", "2", "fit-regression"]).status.success());
    let fit: Value = serde_json::from_slice(&fs::read(out.join("fits/n20000_seed0.json")).unwrap()).unwrap();
    let curves = fit["m_hat"].as_array().unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(
        curves[0].as_array().unwrap().len(),
        fit["x_grid"].as_array().unwrap().len()
    );
    let plot = fs::read_to_string(out.join("plots/n20000_seed0.csv")).unwrap();
    assert!(plot.starts_with("x,m_hat_1,m_hat_2,m_1,m_2\n"));
    let summary: FitSummary = serde_json::from_slice(&fs::read(out.join("fit_summary.json")).unwrap()).unwrap();
    assert_eq!(summary.failures(), 0);
    assert_eq!(run(&spec, &out, &["--acceptance", "eval"]).status.code(), Some(0));

    assert!(run(&spec, &out, &["find-sep"]).status.success());
    let sep: Value = serde_json::from_slice(&fs::read(out.join("sep/n20000_seed1.json")).unwrap()).unwrap();
    assert!(sep["x_star"].as_f64().unwrap().abs() > 0.8);
}

#[test]
fn regression_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = json!({
        "family": "mixed_regression", "a": 0.0, "b": 1.0, "p_x": {"kind": "uniform"}, "lambdas": [0.4, 0.6],
        "m": [{"kind": "polynomial", "coeffs": [-1.0, 0.5]}, {"kind": "polynomial", "coeffs": [1.0, 0.5]}],
        "sigma": 0.3, "g0": {"kind": "point_mass"}, "x0": 0.5
    });
    let spec = write_spec(dir.path(), json!({"model": model, "n": 3000, "seeds": [4]}));
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["simulate"]).status.success());
    assert!(run(&spec, &out, &["fit-regression"]).status.success());
    let first = fs::read(out.join("fits/n3000_seed4.json")).unwrap();
    assert!(run(&spec, &out, &["fit-regression"]).status.success());
    assert_eq!(first, fs::read(out.join("fits/n3000_seed4.json")).unwrap());
}

#[test]
fn pipeline_failure_on_every_seed_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), json!({"model": point_masses(), "n": 300, "seeds": [0, 1]}));
    let out = dir.path().join("out");
    assert!(run(&spec, &out, &["simulate"]).status.success());
    // A threshold above any density value leaves nothing to cluster.
    let o = run(&spec, &out, &["fit-mixture", "--delta", "0.5", "--threshold", "1000"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_subcommand_and_missing_spec() {
    assert_eq!(npmix(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(npmix(&["simulate"]).status.code(), Some(2));
    assert_eq!(npmix(&["--threads", "0", "simulate"]).status.code(), Some(2));
    assert!(npmix(&["--help"]).status.success());
}

#[test]
fn near_nonregular_components_degrade() {
    let report = near_nonregular_demo(&DemoConfig::default(), None).unwrap();
    assert_eq!(report.runs[0].xi, 0.01);
    assert!(
        report.runs[0].median_f_error > report.runs[1].median_f_error,
        "{report:?}"
    );
    assert!(report.passed);
}
