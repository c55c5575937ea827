use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fuzzy-effort"));
    c.env("FUZZY_EFFORT_DATA_DIR", "/nonexistent-data-dir");
    c
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn summarize_json() {
    let o = run(&[
        "summarize",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["format_version"], "fuzzy-effort/1");
    assert_eq!(v["body"][0]["project_count"], 24);
    assert!(v["config"]["estimation"]["A"].is_number());
}

#[test]
fn summarize_text_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("summary.json");
    let o = run(&[
        "summarize",
        "--dataset",
        &format!("desharnais={}", fixture("synthetic_desharnais.arff")),
        "--drop-incomplete",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("desharnais: 18 projects, mean effort "));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["body"][0]["project_count"], 18);
    assert_eq!(v["config"]["drop_incomplete"], true);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["evaluate"]).status.code(), Some(1));
    assert_eq!(
        run(&["evaluate", "--dataset", "x", "--mode", "nope"]).status.code(),
        Some(1)
    );
    let o = run(&[
        "evaluate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--k-sets",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let o = run(&["evaluate", "--dataset", "nasa93"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nasa93.arff"));
    assert_eq!(run(&["summarize", "--dataset", "/no/such.arff"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.arff");
    std::fs::write(
        &bad,
        "@relation r\n@attribute a numeric\n@attribute effort numeric\n@data\n1,2\n3\n",
    )
    .unwrap();
    let o = run(&["summarize", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 6"));
}

#[test]
fn evaluation_failure_exits_3() {
    // Two projects, one of them incomplete and kept: the other fold has no usable query.
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("tiny.arff");
    std::fs::write(
        &f,
        "@relation tiny\n@attribute kloc numeric\n@attribute effort numeric\n@data\n?,10\n?,20\n",
    )
    .unwrap();
    let o = run(&["evaluate", "--dataset", f.to_str().unwrap(), "--keep-incomplete"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn evaluate_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for out in &outs {
        let o = run(&[
            "evaluate",
            "--dataset",
            &fixture("synthetic_cocomo.arff"),
            "--dataset",
            &format!("desharnais={}", fixture("synthetic_desharnais.arff")),
            "--out",
            out.to_str().unwrap(),
            "--export-partitions",
            "--export-similarity",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("dropped 2 incomplete"));
    }
    for name in [
        "synthetic_cocomo.report.json",
        "desharnais.report.json",
        "synthetic_cocomo.records.csv",
        "desharnais.records.csv",
        "comparison.csv",
        "mmre.svg",
        "synthetic_cocomo.partitions.json",
        "desharnais.similarity.csv",
    ] {
        let a = std::fs::read(outs[0].join(name)).unwrap();
        let b = std::fs::read(outs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        assert!(
            String::from_utf8_lossy(&a).contains("fuzzy-effort/1"),
            "{name} lacks version"
        );
    }
    let cmp = std::fs::read_to_string(outs[0].join("comparison.csv")).unwrap();
    assert!(cmp.contains("synthetic_cocomo,leave-one-out,24,n/a"));
    assert!(cmp.contains("desharnais,leave-one-out,18,77,"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"estimation": {"mode": "crisp_knn", "knn_k": 4}, "baselines": false}"#,
    )
    .unwrap();
    let base = [
        "evaluate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--format",
        "json",
    ];

    let o = bin()
        .args(base)
        .args(["--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["estimation"]["mode"], "crisp_knn");
    assert_eq!(v["config"]["estimation"]["knn_k"], 4);

    let o = bin()
        .args(base)
        .args(["--config", cfg.to_str().unwrap(), "--knn-k", "2"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["estimation"]["knn_k"], 2);
    assert_eq!(v["config"]["estimation"]["mode"], "crisp_knn");
    assert_eq!(v["body"]["reports"][0]["baselines"].as_array().unwrap().len(), 0);
}

#[test]
fn estimate_query_and_project() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    std::fs::write(
        &q,
        r#"[{"id": "new1", "values": {"equivphyskloc": 50, "rely": "h", "cplx": "Very_High"}},
            {"id": "new2", "values": {"equivphyskloc": 5}}]"#,
    )
    .unwrap();
    let o = run(&[
        "estimate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--query",
        q.to_str().unwrap(),
        "--features",
        "equivphyskloc,rely,cplx",
    ]);
    // new2 lacks rely and cplx, which are selected features.
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&[
        "estimate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--query",
        q.to_str().unwrap(),
        "--features",
        "equivphyskloc",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# fuzzy-effort/1 estimate\n"));
    assert!(text.contains("\nnew1,") && text.contains("\nnew2,"));

    let o = run(&[
        "estimate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--project",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["body"]["training_projects"], 23);
    let analogs = v["body"]["estimates"][0]["analogs"].as_array().unwrap();
    assert!(analogs.iter().all(|a| a["id"] != "3"));
}

#[test]
fn estimate_two_case_toy_prints_150() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    let schema = dir.path().join("toy.schema.json");
    let query = dir.path().join("q.csv");
    std::fs::write(&data, "id,x,effort\na,0,100\nb,1,300\n").unwrap();
    std::fs::write(
        &schema,
        r#"{"name": "toy", "effort_column": "effort", "id_column": "id",
            "attributes": [{"name": "x", "kind": "numeric"}]}"#,
    )
    .unwrap();
    // With K = 2 uniform sets peaking at 0 and 1, x = 0.25 grades (0.75, 0.25):
    // similarity 0.75 to a and 0.25 to b, so 0.75·100 + 0.25·300 = 150.
    std::fs::write(&query, "id,x\nq,0.25\n").unwrap();
    let o = run(&[
        "estimate",
        "--dataset",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--query",
        query.to_str().unwrap(),
        "--k-sets",
        "2",
        "--partition",
        "uniform",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("q: estimated effort 150.000 person-months"), "{text}");
    assert!(text.contains("analog a: similarity 0.7500, weight 0.7500"));
}

#[test]
fn estimate_missing_feature_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    std::fs::write(&q, r#"{"id": "n", "values": {"rely": "h"}}"#).unwrap();
    let o = run(&[
        "estimate",
        "--dataset",
        &fixture("synthetic_cocomo.arff"),
        "--query",
        q.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("no value for selected feature 'data'"), "{err}");
}

#[test]
fn evaluate_svg_stdout() {
    let o = run(&[
        "evaluate",
        "--dataset",
        &format!("nasa60={}", fixture("synthetic_cocomo.arff")),
        "--format",
        "svg",
        "--no-baselines",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("Analogy with Fuzzy Number"));
    assert!(svg.contains(">nasa60<"));
}
