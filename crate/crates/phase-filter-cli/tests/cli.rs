use std::process::Command;

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phase-filter"))
}

#[test]
fn optimal_state_dim1_rows() {
    let out = bin()
        .args(["optimal-state", "--dims", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0].trim_end(), "dim,lambda,mu,n,coeff");
    assert!(rows[1].contains("7.07106781186"));
    assert!(rows[2].contains("7.07106781186"));
}

#[test]
fn optimal_state_json_schema() {
    let out = bin()
        .args(["optimal-state", "--dims", "2", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &parsed[0];
    assert_eq!(row["schema_version"], 1);
    assert_eq!(row["dim"], 2);
    assert!(row["lambda"].is_f64());
    assert!(row["mu"].is_f64());
    assert_eq!(row["coeffs"].as_array().unwrap().len(), 3);
    assert!((row["mu"].as_f64().unwrap() - 2.0_f64.sqrt() / 2.0).abs() < 1e-9);
}

#[test]
fn bad_dim_exits_2() {
    let out = bin().args(["optimal-state", "--dims", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn filter_prob_one_is_identity() {
    let out = bin()
        .args(["filter", "--alpha", "0.5", "--prob", "1", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for f in parsed["f"].as_array().unwrap() {
        assert_eq!(f.as_f64().unwrap(), 1.0);
    }
    assert_eq!(parsed["mu_out"], parsed["mu_deterministic"]);
}

#[test]
fn filter_matches_library_solution() {
    use phase_filter::filter_design::{optimal_filter, FilterProblem};
    use phase_filter::fock::FockVector;

    let out = bin()
        .args(["filter", "--alpha", "0.5", "--prob", "0.5", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();

    let state = FockVector::coherent(0.5, 1e-12).unwrap();
    let problem = FilterProblem::new(state, 0.5).unwrap();
    let sol = optimal_filter(&problem, 30).unwrap();
    assert_eq!(parsed["threshold"].as_u64().unwrap() as usize, sol.threshold);
    assert_eq!(parsed["lambda"].as_f64().unwrap(), sol.lambda);
    assert_eq!(parsed["mu_out"].as_f64().unwrap(), sol.mu_out);
}

#[test]
fn infeasible_prob_exits_3_and_names_floor() {
    let out = bin()
        .args(["filter", "--alpha", "0.5", "--prob", "1e-9", "--n-max", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("feasibility floor"), "stderr: {err}");
}

#[test]
fn tradeoff_monotone_and_baseline() {
    let out = bin()
        .args(["tradeoff", "--alpha", "0.5", "--grid", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut prev_p = f64::INFINITY;
    let mut prev_mu = 0.0_f64;
    for (i, line) in text.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        let p: f64 = cols[0].parse().unwrap();
        let mu: f64 = cols[1].parse().unwrap();
        assert!(p < prev_p);
        assert!(mu >= prev_mu - 1e-9, "row {i}");
        if i == 0 {
            assert_eq!(p, 1.0);
            assert!((mu - 0.4657996650883451).abs() < 1e-10);
        }
        prev_p = p;
        prev_mu = prev_mu.max(mu);
    }
}

#[test]
fn region_map_single_cell_matches_filter() {
    let out = bin()
        .args([
            "region-map",
            "--alpha-lo", "0.5", "--alpha-hi", "0.5",
            "--p-lo", "0.5", "--p-hi", "0.5",
            "--grid", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let n_opt: usize = row.trim_end().split(',').nth(2).unwrap().parse().unwrap();

    let filt = bin()
        .args(["filter", "--alpha", "0.5", "--prob", "0.5", "--format", "json"])
        .output()
        .unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&filt.stdout).unwrap();
    assert_eq!(n_opt, parsed["threshold"].as_u64().unwrap() as usize);
}

#[test]
fn simulate_seed_reproducible_byte_identical() {
    let dir = tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "simulate",
                "--alpha", "0.5",
                "--prob", "none",
                "--samples", "5000",
                "--seed", "17",
                "--out", out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    assert!(out_a.with_extension("csv.manifest.json").exists());
}

#[test]
fn simulate_estimate_near_prediction() {
    let out = bin()
        .args([
            "simulate",
            "--alpha", "0.5",
            "--samples", "200000",
            "--seed", "3",
            "--format", "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let mu_hat = parsed["mu_hat"].as_f64().unwrap();
    let se = parsed["std_err"].as_f64().unwrap();
    let predicted = parsed["predicted_mu"].as_f64().unwrap();
    assert!((mu_hat - predicted).abs() < 5.0 * se);
}

#[test]
fn oracle_unconstrained_audit() {
    let out = bin().args(["oracle", "--n", "2"]).output().unwrap();
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((parsed["best_value"].as_f64().unwrap() - 2.0_f64.sqrt() / 2.0).abs() < 1e-8);
}

#[test]
fn csv_values_round_trip_exactly() {
    let out = bin()
        .args(["optimal-state", "--dims", "5"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        let c: f64 = cols[4].parse().unwrap();
        // 17 significant digits reprint to the same value
        let reprinted: f64 = format!("{c:.16e}").parse().unwrap();
        assert_eq!(c, reprinted);
    }
}
