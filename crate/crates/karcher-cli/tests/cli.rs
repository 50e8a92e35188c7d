//! End-to-end tests driving the compiled binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use karcher::io;
use karcher::measure::DiscreteMeasure;
use karcher::spd::{geodesic, mat_exp, thompson_distance, SpdMatrix};
use karcher::sym::SymMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_karcher"))
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("karcher-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn spd(data: Vec<f64>) -> SpdMatrix {
    let n = (data.len() as f64).sqrt() as usize;
    SpdMatrix::new(SymMatrix::new(n, data).unwrap()).unwrap()
}

fn extract_matrix(json: &str, field: &str) -> SpdMatrix {
    let value: serde_json::Value = serde_json::from_str(json).unwrap();
    let m = &value[field];
    let n = m["n"].as_u64().unwrap() as usize;
    let data: Vec<f64> = m["data"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    SpdMatrix::new(SymMatrix::new(n, data).unwrap()).unwrap()
}

#[test]
fn mean_of_two_atoms_is_the_midpoint() {
    let a = spd(vec![2.0, 0.3, 0.3, 1.0]);
    let b = spd(vec![1.0, -0.2, -0.2, 3.0]);
    let mu = DiscreteMeasure::uniform(vec![a.clone(), b.clone()]).unwrap();
    let measure = write_temp("two_atoms.json", &io::write_measure(&mu));

    let out = bin().args(["mean", "--measure"]).arg(&measure).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let mean = extract_matrix(&stdout_str(&out), "mean");
    let expected = geodesic(&a, &b, 0.5).unwrap();
    assert!(thompson_distance(&mean, &expected).unwrap() <= 1e-9);
}

#[test]
fn mean_output_round_trips_exactly() {
    let a = mat_exp(&SymMatrix::from_fn(3, |i, j| ((i * 3 + j) as f64 * 0.1).sin() * 0.4)).unwrap();
    let mu = DiscreteMeasure::dirac(a);
    let measure = write_temp("point.json", &io::write_measure(&mu));
    let out = bin().args(["mean", "--measure"]).arg(&measure).output().unwrap();
    assert!(out.status.success());
    let mean = extract_matrix(&stdout_str(&out), "mean");
    let rewritten = io::write_matrix(&mean);
    let reparsed = io::parse_matrix(&rewritten).unwrap();
    assert_eq!(reparsed.as_sym().data(), mean.as_sym().data(), "round trip not bit-exact");
}

#[test]
fn wasserstein_of_identical_measures_is_zero() {
    let a = spd(vec![2.0, 0.0, 0.0, 0.5]);
    let b = spd(vec![1.0, 0.4, 0.4, 2.0]);
    let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
    let path = write_temp("m.json", &io::write_measure(&mu));
    let out = bin().args(["wasserstein", "--mu"]).arg(&path).arg("--nu").arg(&path).output().unwrap();
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!(value["cost"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn flow_reports_the_a_priori_bound() {
    let a = spd(vec![2.0, 0.0, 0.0, 0.5]);
    let b = spd(vec![1.0, 0.3, 0.3, 1.5]);
    let x = spd(vec![1.0, 0.0, 0.0, 1.0]);
    let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
    let measure = write_temp("flow_m.json", &io::write_measure(&mu));
    let xfile = write_temp("flow_x.json", &io::write_matrix(&x));

    let out = bin()
        .args(["flow", "--t", "1", "--tol", "1e-3", "--measure"])
        .arg(&measure)
        .arg("--x")
        .arg(&xfile)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let n_used = value["n_used"].as_u64().unwrap() as f64;
    let bound = value["error_bound"].as_f64().unwrap();
    let fm = karcher::measure::first_moment(
        &io::parse_measure(&std::fs::read_to_string(&measure).unwrap()).unwrap(),
        &x,
    )
    .unwrap();
    let expected = 2.0 * 1.0 * fm / n_used.sqrt();
    assert!((bound - expected).abs() <= 1e-12 * expected, "bound {bound} vs {expected}");
}

#[test]
fn trotter_orders_both_run() {
    let a = spd(vec![2.0, 0.0, 0.0, 0.5]);
    let b = spd(vec![0.5, 0.0, 0.0, 2.0]);
    let x = spd(vec![1.0, 0.2, 0.2, 1.0]);
    let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
    let measure = write_temp("trotter_m.json", &io::write_measure(&mu));
    let xfile = write_temp("trotter_x.json", &io::write_matrix(&x));

    for order in ["forward", "reverse"] {
        let out = bin()
            .args(["trotter", "--t", "1", "--m", "64", "--order", order, "--measure"])
            .arg(&measure)
            .arg("--x")
            .arg(&xfile)
            .output()
            .unwrap();
        assert!(out.status.success(), "order {order}: {}", stderr_str(&out));
        let state = extract_matrix(&stdout_str(&out), "state");
        assert!(state.dim() == 2);
    }
}

#[test]
fn resolvent_of_point_mass_is_a_geodesic_step() {
    let a = spd(vec![3.0, 0.0, 0.0, 0.4]);
    let x = spd(vec![1.0, 0.0, 0.0, 1.0]);
    let mu = DiscreteMeasure::dirac(a.clone());
    let measure = write_temp("res_m.json", &io::write_measure(&mu));
    let xfile = write_temp("res_x.json", &io::write_matrix(&x));
    let out = bin()
        .args(["resolvent", "--lambda", "1.5", "--measure"])
        .arg(&measure)
        .arg("--x")
        .arg(&xfile)
        .output()
        .unwrap();
    assert!(out.status.success());
    let state = extract_matrix(&stdout_str(&out), "state");
    let expected = geodesic(&x, &a, 1.5 / 2.5).unwrap();
    assert!(thompson_distance(&state, &expected).unwrap() <= 1e-9);
}

#[test]
fn malformed_json_exits_two_with_position() {
    let path = write_temp("broken.json", "{\"n\": 2,\n  \"data\": [1.0,,]}");
    let out = bin().args(["mean", "--measure"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_str(&out);
    assert!(err.contains("line 2"), "diagnostic missing position: {err}");
}

#[test]
fn indefinite_matrix_exits_two() {
    let path = write_temp(
        "indefinite.json",
        r#"{"atoms": [{"n": 2, "data": [1.0, 0.0, 0.0, -1.0]}]}"#,
    );
    let out = bin().args(["mean", "--measure"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("positive definite"));
}

#[test]
fn unreachable_tolerance_exits_one_with_report() {
    let a = spd(vec![2.0, 0.3, 0.3, 1.0]);
    let b = spd(vec![1.0, -0.2, -0.2, 3.0]);
    let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
    let measure = write_temp("hard.json", &io::write_measure(&mu));
    let out = bin()
        .args(["mean", "--tol", "1e-30", "--measure"])
        .arg(&measure)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("best report"), "missing report: {err}");
    assert!(err.contains("residual"), "missing residual: {err}");
}

#[test]
fn dimension_limit_is_enforced() {
    let big = SpdMatrix::identity(3);
    let mu = DiscreteMeasure::dirac(big);
    let measure = write_temp("big.json", &io::write_measure(&mu));
    let out = bin()
        .args(["mean", "--max-dim", "2", "--measure"])
        .arg(&measure)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).contains("--max-dim"));
}

#[test]
fn lln_is_reproducible_and_seed_sensitive() {
    let a = spd(vec![2.0, 0.0, 0.0, 0.5]);
    let b = spd(vec![0.5, 0.0, 0.0, 2.0]);
    let mu = DiscreteMeasure::uniform(vec![a, b]).unwrap();
    let measure = write_temp("lln_m.json", &io::write_measure(&mu));
    let x = write_temp("lln_x.json", &io::write_matrix(&SpdMatrix::identity(2)));

    let run = |seed_args: &[&str], env: Option<(&str, &str)>| -> String {
        let mut cmd = bin();
        cmd.args([
            "lln", "--sizes", "2,4,8", "--t", "0.5", "--tol", "1e-8", "--flow-tol", "1e-3",
        ])
        .arg("--measure")
        .arg(&measure)
        .arg("--x")
        .arg(&x)
        .args(seed_args);
        cmd.env_remove("KARCHER_SEED");
        if let Some((k, v)) = env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "stderr: {}", stderr_str(&out));
        stdout_str(&out)
    };

    let first = run(&["--seed", "7"], None);
    let second = run(&["--seed", "7"], None);
    assert_eq!(first, second, "same seed must give identical bytes");
    assert!(first.starts_with("n,w1_to_law,d_mean,d_flow,seed\n"));

    let other = run(&["--seed", "8"], None);
    assert_ne!(first, other, "different seeds should differ");

    // KARCHER_SEED supplies the default seed.
    let via_env = run(&[], Some(("KARCHER_SEED", "7")));
    assert_eq!(first, via_env);

    // Threaded rows produce the same bytes.
    let threaded = run(&["--seed", "7", "--threads", "3"], None);
    assert_eq!(first, threaded);
}

#[test]
fn check_runs_green_at_small_scale() {
    let out = bin()
        .args(["check", "--instances", "2", "--threads", "4"])
        .output()
        .unwrap();
    let text = stdout_str(&out);
    assert!(out.status.success(), "check failed:\n{text}");
    assert!(text.contains("0 failed"), "summary missing:\n{text}");
    assert!(text.matches("PASS").count() >= 25);
}
