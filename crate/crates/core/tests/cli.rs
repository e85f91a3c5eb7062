use std::fs;
use std::process::{Command, Output};

fn tds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tds-qaoa"))
        .args(args)
        .env_remove("TDS_QAOA_WORKERS")
        .output()
        .expect("spawning tds-qaoa")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn oracle_lists_minimal_sets() {
    let o = tds(&["oracle", "--graph", "builtin:paper6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("min_tds_size=3"));
    for set in ["{0,1,2}", "{0,4,5}", "{1,2,4}", "{2,4,5}"] {
        assert!(text.contains(set), "missing {set} in {text}");
    }
}

#[test]
fn bound_reports_counts() {
    let o = tds(&["bound"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in ["q_tdp=10", "q_dp=18", "gap=8", "qubit_upper_bound=14.49"] {
        assert!(text.contains(line), "missing {line} in {text}");
    }
}

#[test]
fn compile_emits_model_and_energy_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("energies.csv");
    let o = tds(&["compile", "--P", "9", "--energy-table", table.to_str().unwrap()]);
    assert!(o.status.success());
    let model: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(model["n_vars"], 10);
    assert_eq!(model["constant"], 54.0);
    let csv = fs::read_to_string(table).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 1024);
    assert_eq!(lines[0], "index,bits,energy");
    assert_eq!(lines[1], "0,0000000000,54");
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = tds(&[
        "run", "--graph", "builtin:paper6", "--q", "2", "--P", "9.0", "--maxiter", "40", "--seed", "7", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["config"]["layers"], 2);
    assert_eq!(result["n_qubits"], 10);
    let correct = result["correct_probability"].as_f64().unwrap();
    let optimal = result["optimal_probability"].as_f64().unwrap();
    assert!(0.0 <= optimal && optimal <= correct && correct <= 1.0);

    let dist = fs::read_to_string(out.join("distribution.csv")).unwrap();
    assert_eq!(dist.lines().next(), Some("bits,probability,count"));
    assert_eq!(dist.lines().count(), 1 + 64);
    let shots: u64 = dist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(shots, 100_000);
    let first = dist.lines().nth(1).unwrap();
    assert!(first.starts_with(result["z_star"].as_str().unwrap()));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("evaluation_index,value"));
    assert_eq!(trace.lines().count(), 1 + 40);
}

#[test]
fn run_is_reproducible() {
    let args = ["run", "--q", "1", "--maxiter", "30", "--seed", "3"];
    assert_eq!(stdout(&tds(&args)), stdout(&tds(&args)));
}

#[test]
fn trace_prints_csv() {
    let o = tds(&["trace", "--q", "1", "--maxiter", "12"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("evaluation_index,value\n0,"));
}

#[test]
fn small_sweep_with_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let o = tds(&[
        "sweep", "--q-list", "1,2", "--P-list", "9", "--maxiter-list", "20", "--seeds", "3", "--workers", "2", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("rows=6 cells=2 failed=0"));
    let rows = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(rows.starts_with(
        "q,P,maxiter,seed,z_star,is_tds,is_min_tds,correct_prob,optimal_prob,final_cost,evals,runtime_ms,error\n"
    ));
    assert_eq!(rows.lines().count(), 1 + 6);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn empty_sweep_succeeds() {
    let o = tds(&["sweep", "--q-list", "", "--workers", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("rows=0 cells=0"));
}

#[test]
fn workers_fall_back_to_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_tds-qaoa"))
        .args(["sweep", "--q-list", "1", "--P-list", "9", "--maxiter-list", "5"])
        .env("TDS_QAOA_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(tds(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(tds(&[]).status.code(), Some(1));
    assert_eq!(tds(&["--help"]).status.code(), Some(0));
    assert_eq!(tds(&["run", "--q", "0"]).status.code(), Some(1));
    assert_eq!(tds(&["oracle", "--graph", "/nonexistent/g.txt"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let isolated = dir.path().join("iso.txt");
    fs::write(&isolated, "3 1\n0 1\n").unwrap();
    let o = tds(&["run", "--graph", isolated.to_str().unwrap(), "--maxiter", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("isolated"));
    assert_eq!(tds(&["compile", "--graph", isolated.to_str().unwrap()]).status.code(), Some(2));

    let malformed = dir.path().join("bad.txt");
    fs::write(&malformed, "3 2\n0 1\n").unwrap();
    assert_eq!(tds(&["oracle", "--graph", malformed.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn penalty_flags_are_exclusive() {
    assert_eq!(tds(&["compile", "--P", "9", "--P-mult", "1.5"]).status.code(), Some(1));
    let a = stdout(&tds(&["compile", "--P", "9"]));
    let b = stdout(&tds(&["compile", "--P-mult", "1.5"]));
    assert_eq!(a, b);
}
