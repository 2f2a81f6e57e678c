mod common;

use std::process::{Command, Output};

use common::*;
use qgraph::format::parse_complex;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    data_path(name).to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    for name in ["interval_pi.qg", "full_line.qg", "lasso.qg", "star3.qg", "asym2.qg"] {
        assert_eq!(run(&["validate", "--graph", &data(name)]).status.code(), Some(0), "{name}");
    }
    let bad = run(&["validate", "--graph", &data("bad_rank.qg")]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 5"));

    let missing = run(&["validate", "--graph", "/nonexistent/graph.qg"]);
    assert_eq!(missing.status.code(), Some(1));

    let over = run(&[
        "lap-sweep",
        "--graph",
        &data("interval_pi.qg"),
        "--function",
        &data("interval_mixed.qf"),
        "--window",
        "3.5,4.5",
        "--step",
        "0.1",
    ]);
    assert_eq!(over.status.code(), Some(3));

    let excluded = run(&[
        "lap-sweep",
        "--graph",
        &data("interval_pi.qg"),
        "--function",
        &data("interval_mixed.qf"),
        "--window",
        "3.5,4.5",
        "--step",
        "0.1",
        "--exclude",
    ]);
    assert_eq!(excluded.status.code(), Some(0));
}

#[test]
fn resolvent_rows_match_the_whole_line_kernel() {
    let out = run(&[
        "resolvent",
        "--graph",
        &data("full_line.qg"),
        "--function",
        &data("bump_lead1.qf"),
        "--lambda",
        "2+1i,3.7",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let pieces = unfold_full_line(&function("bump_lead1.qf"), 2.0);
    let mut n = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let lam: C = parse_complex(fields[col("lambda")]).unwrap();
        let value: C = parse_complex(fields[col("value")]).unwrap();
        assert!(rel_err(value, whole_line_form(&pieces, lam.sqrt())) < 1e-8, "{line}");
        assert_eq!(fields[col("valid")], "true");
        n += 1;
    }
    assert_eq!(n, 2);
}

#[test]
fn jsonl_output_is_valid_json() {
    let out = run(&["scan", "--graph", &data("lasso.qg"), "--window", "0.5,10", "--format", "jsonl"]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 6);
    let embedded = rows.iter().filter(|r| r["kind"] == "embedded_candidate").count();
    assert_eq!(embedded, 3);
    assert!(rows.iter().all(|r| r["lambda_star"].is_f64()));
}

#[test]
fn out_flag_writes_the_same_table() {
    let dir = std::env::temp_dir().join(format!("qgraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("dtn.csv");
    let args = ["dtn", "--graph", &data("star3.qg"), "--lambda", "2+1i,3.3"];
    let direct = stdout(&run(&args));
    let mut with_out = args.to_vec();
    let p = path.to_string_lossy().into_owned();
    with_out.extend(["--out", &p]);
    let out = run(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
    // three leads: 3 x 3 entries per lambda plus a header
    assert_eq!(direct.lines().count(), 1 + 2 * 9);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unnormalized_graphs_are_moved_with_a_warning() {
    let out = run(&[
        "resolvent",
        "--graph",
        &data("star_unnormalized.qg"),
        "--function",
        &data("bump_lead1.qf"),
        "--lambda",
        "3+0.2i",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("normal form"));
    let shifted = run(&[
        "resolvent",
        "--graph",
        &data("star_unnormalized.qg"),
        "--function",
        &data("bump_lead1.qf"),
        "--lambda",
        "3+0.2i",
        "--offset",
        "0.4",
    ]);
    let value = |o: &Output| {
        let text = stdout(o);
        let row: Vec<String> = text.lines().nth(1).unwrap().split(',').map(String::from).collect();
        parse_complex::<f64>(&row[2]).unwrap()
    };
    assert!(rel_err(value(&shifted), value(&out)) < 1e-9);
}
