//! End-to-end command tests: exit codes, reproducibility, and the file
//! contracts (trace CSV, manifests, report round trips).

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pudq-pgo"))
}

fn synth(dir: &Path, n: u32, sigma: &str, seed: u64) {
    let status = bin()
        .args([
            "synth",
            "--n",
            &n.to_string(),
            "--sigma-w",
            sigma,
            "--seed",
            &seed.to_string(),
            "--out-dir",
        ])
        .arg(dir)
        .arg("--g2o")
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn synth_is_reproducible_and_manifests_match_modulo_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    synth(&a, 60, "1e-3", 7);
    synth(&b, 60, "1e-3", 7);
    let da = std::fs::read(a.join("dataset.json")).unwrap();
    let db = std::fs::read(b.join("dataset.json")).unwrap();
    assert_eq!(da, db, "datasets differ between identical runs");

    let mask = |p: &Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["timing_ms"] = serde_json::json!(0);
        v["outputs"] = serde_json::json!([]);
        v
    };
    assert_eq!(
        mask(&a.join("synth.manifest.json")),
        mask(&b.join("synth.manifest.json"))
    );
}

#[test]
fn synth_rejects_single_vertex_as_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["synth", "--n", "1", "--sigma-w", "1e-3", "--out-dir"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn omitted_seed_is_drawn_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["synth", "--n", "10", "--sigma-w", "1e-3", "--out-dir"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("synth.manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(manifest["seed"].is_u64());
}

#[test]
fn solve_eval_pipeline_and_trace_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, 80, "1e-3", 11);
    let run = tmp.path().join("run");
    let status = bin()
        .args(["solve", "--quiet", "--input"])
        .arg(data.join("dataset.json"))
        .arg("--out-dir")
        .arg(&run)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0), "solver should converge");

    // Trace header and the accepted-cost monotonicity contract.
    let trace = std::fs::read_to_string(run.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "k,cost,grad_norm,delta,rho,accepted");
    let mut last_accepted = f64::INFINITY;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 6);
        let cost: f64 = cols[1].parse().unwrap();
        let accepted: bool = cols[5].parse().unwrap();
        if accepted {
            assert!(cost <= last_accepted, "accepted cost increased");
            last_accepted = cost;
        }
    }

    // Evaluate against the dataset's ground truth; identical estimates give
    // zero reduction.
    let report_json = run.join("report.json");
    let report_csv = run.join("report.csv");
    let out = bin()
        .args(["eval", "--estimate"])
        .arg(run.join("estimate.json"))
        .arg("--truth")
        .arg(data.join("dataset.json"))
        .arg("--baseline")
        .arg(run.join("estimate.json"))
        .arg("--out-json")
        .arg(&report_json)
        .arg("--out-csv")
        .arg(&report_csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("reduction_l = 0.00%"), "stdout: {stdout}");

    // The CSV re-parses to exactly the in-memory report.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_json).unwrap()).unwrap();
    let csv = std::fs::read_to_string(&report_csv).unwrap();
    let mut lines = csv.lines();
    let rpe_l: f64 = lines.next().unwrap().strip_prefix("rpe_l,").unwrap().parse().unwrap();
    let rpe_e: f64 = lines.next().unwrap().strip_prefix("rpe_e,").unwrap().parse().unwrap();
    assert_eq!(rpe_l, report["rpe_l"].as_f64().unwrap());
    assert_eq!(rpe_e, report["rpe_e"].as_f64().unwrap());
    assert_eq!(lines.next().unwrap(), "from,to,lie,euclidean");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), report["per_edge"].as_array().unwrap().len());
    for (row, edge) in rows.iter().zip(report["per_edge"].as_array().unwrap()) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<u64>().unwrap(), edge["from"].as_u64().unwrap());
        assert_eq!(cols[2].parse::<f64>().unwrap(), edge["lie"].as_f64().unwrap());
    }
}

#[test]
fn solve_reports_iteration_cap_with_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, 60, "1e-2", 3);
    let status = bin()
        .args(["solve", "--quiet", "--max-outer", "1", "--input"])
        .arg(data.join("dataset.json"))
        .arg("--out-dir")
        .arg(tmp.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn solve_accepts_g2o_input_and_all_initializers() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, 40, "1e-3", 5);
    for init in ["chordal", "odometry"] {
        let status = bin()
            .args(["solve", "--quiet", "--init", init, "--input"])
            .arg(data.join("dataset.g2o"))
            .arg("--out-dir")
            .arg(tmp.path().join(format!("run-{init}")))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0), "init {init} failed on g2o input");
    }
    // File-based initialization from a previous estimate.
    let status = bin()
        .args(["solve", "--quiet", "--init", "file", "--init-file"])
        .arg(tmp.path().join("run-chordal/estimate.json"))
        .arg("--input")
        .arg(data.join("dataset.json"))
        .arg("--out-dir")
        .arg(tmp.path().join("run-file"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn eval_rejects_vertex_count_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    synth(&a, 20, "1e-3", 1);
    synth(&b, 30, "1e-3", 1);
    let run = tmp.path().join("run");
    assert!(bin()
        .args(["solve", "--quiet", "--input"])
        .arg(a.join("dataset.json"))
        .arg("--out-dir")
        .arg(&run)
        .status()
        .unwrap()
        .success());
    let status = bin()
        .args(["eval", "--estimate"])
        .arg(run.join("estimate.json"))
        .arg("--truth")
        .arg(b.join("dataset.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn check_passes_by_default_and_prints_bounds_table() {
    let out = bin()
        .args(["check", "--graphs", "4", "--bounds", "--radius", "8", "--points", "5", "--tangents", "20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("bound constants"));
    assert!(stdout.contains("l_g"));
    assert!(stdout.contains("all checks passed"));
}

#[test]
fn injected_jacobian_fault_exits_four_and_names_the_entry() {
    let out = bin()
        .args([
            "check",
            "--graphs",
            "2",
            "--inject-jacobian-fault",
            "1,2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let all = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(all.contains("A[1][2]"), "output should name the entry: {all}");
}
