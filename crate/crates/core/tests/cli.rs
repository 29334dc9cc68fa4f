use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use tumordyn::analysis::{detect_cycle, CycleReport};
use tumordyn::cli::{cmd_fit, cmd_simulate, run, Cli, RunConfig};
use tumordyn::integrator::{integrate_forced, IntegrationConfig};
use tumordyn::model::{ModelParams, State};
use tumordyn::stability;
use tumordyn::sweep::{boundary_csv, extract_boundary, run_sweep, AxisRange, SweepSpec};

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("tumordyn").chain(args.iter().copied())).unwrap()
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_tumordyn"))
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn config_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "model": {"alpha": 2.0, "k": 0.2, "sigma": 0.05, "V": 0.25, "beta": 1.0},
            "initial": {"x0": 5.3, "y0": 6.7},
            "integration": {"t_end": 40.0, "rel_tol": 1e-8, "sample_dt": 0.05}
        }"#,
    );
    let from_file = run(&cli(&["simulate", "--config", &config])).unwrap().0;
    let from_flags = run(&cli(&[
        "simulate", "--alpha", "2", "--k", "0.2", "--sigma", "0.05", "--V", "0.25", "--beta", "1", "--x0", "5.3",
        "--y0", "6.7", "--t-end", "40", "--rel-tol", "1e-8", "--sample-dt", "0.05",
    ]))
    .unwrap()
    .0;
    assert_eq!(from_file, from_flags);
}

#[test]
fn outputs_match_library_calls() {
    let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.25, 0.5);
    let s0 = State::new(5.3, 6.7);
    let icfg = IntegrationConfig::default().with_t_end(30.0);
    let mut cfg = RunConfig::default();
    cfg.model.alpha = Some(2.0);
    cfg.model.k = Some(0.2);
    cfg.model.sigma = Some(0.05);
    cfg.model.dose = Some(0.25);
    cfg.model.beta = Some(0.5);
    cfg.initial.x0 = Some(5.3);
    cfg.initial.y0 = Some(6.7);
    cfg.integration = icfg;

    let out = cmd_simulate(&cfg, false, None).unwrap();
    let traj = integrate_forced(s0, &p, &icfg).unwrap();
    assert_eq!(out.file("trajectory.csv").unwrap(), traj.to_csv());

    let out = run(&cli(&["stability", "--alpha", "2", "--k", "0.2", "--sigma", "0.05", "--V", "0.25", "--beta", "0.5"]))
        .unwrap()
        .0;
    let direct = serde_json::to_string_pretty(&stability::report(&p, false)).unwrap() + "\n";
    assert_eq!(out.file("stability.json").unwrap(), direct);

    let out = run(&cli(&[
        "sweep", "--alpha", "2", "--k", "0.2", "--sigma", "0.05", "--x0", "5.3", "--y0", "6.7", "--v-n", "4",
        "--beta-n", "3", "--jobs", "2",
    ]))
    .unwrap()
    .0;
    let spec = SweepSpec::new(ModelParams::new(2.0, 0.2, 0.05), s0).with_axes(
        AxisRange { min: 0.0, max: 0.6, n: 4 },
        AxisRange { min: 0.0, max: 3.0, n: 3 },
    );
    let grid = run_sweep(&spec).unwrap();
    assert_eq!(out.file("grid.csv").unwrap(), grid.to_csv());
    assert_eq!(out.file("boundary.csv").unwrap(), boundary_csv(&extract_boundary(&grid)));
}

#[test]
fn cycle_reports_period() {
    let (out, _) = run(&cli(&[
        "cycle", "--alpha", "2", "--k", "0.2", "--sigma", "0.05", "--V", "0.25", "--beta", "0.5", "--x0", "5.3",
        "--y0", "6.7", "--t-end", "600",
    ]))
    .unwrap();
    let json: serde_json::Value = serde_json::from_str(out.file("cycle.json").unwrap()).unwrap();
    let report: CycleReport = serde_json::from_value(json["cycle"].clone()).unwrap();
    let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.25, 0.5);
    let traj = integrate_forced(State::new(5.3, 6.7), &p, &IntegrationConfig::default().with_t_end(600.0)).unwrap();
    assert_eq!(report, detect_cycle(&traj, &p));
    assert!(report.found);
}

#[test]
fn fit_reads_boundary_files() {
    let dir = tempfile::tempdir().unwrap();
    let synthetic = cmd_fit(None, Some(20), None).unwrap();
    let csv: String = std::iter::once("beta,V_threshold,monotone\n".to_owned())
        .chain(tumordyn::cli::reference_points(20).iter().map(|(b, v)| format!("{b},{v},true\n")))
        .collect();
    let path = dir.path().join("boundary.csv");
    std::fs::write(&path, csv).unwrap();
    let from_file = cmd_fit(Some(&path), None, None).unwrap();
    assert_eq!(synthetic.file("fit.json"), from_file.file("fit.json"));
}

#[test]
fn binary_writes_files_and_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["potential", "--alpha", "1", "--k", "1.5", "--sigma", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let extrema: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("extrema.json")).unwrap()).unwrap();
    assert_eq!(extrema["extrema"]["x2"], 4.0);
    assert!(std::fs::read_to_string(out.join("potential.csv")).unwrap().starts_with("x,U\n"));

    let bad = write_config(dir.path(), r#"{"model": {"alpha": 2, "k": 0.2, "sigma": 0.05, "delta": 1}}"#);
    let status = bin().args(["stability", "--config", &bad]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));

    let status = bin().args(["stability", "--alpha", "-1", "--k", "0.2", "--sigma", "0.05"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));

    let status = bin()
        .args(["simulate", "--alpha", "2", "--k", "0.2", "--sigma", "0.25", "--x0", "1", "--y0", "1"])
        .args(["--rel-tol", "1e-300", "--abs-tol", "1e-300"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
}

#[test]
fn degenerate_sigma_is_reported_not_fatal() {
    let (out, _) = run(&cli(&["stability", "--alpha", "2", "--k", "0.2", "--sigma", "1"])).unwrap();
    let json: serde_json::Value = serde_json::from_str(out.file("stability.json").unwrap()).unwrap();
    for fp in json["fixed_points"].as_array().unwrap() {
        assert_eq!(fp["class"], "degenerate");
    }
}
