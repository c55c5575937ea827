//! Acceptance run: one PASS/FAIL line per criterion, then a hard assert.
//!
//! The real datasets are looked up in `$FUZZY_EFFORT_DATA_DIR`, else in the
//! workspace `data/` directory. Criteria that need them fail when they are absent.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use fuzzy_effort::dataset::{self, load_path, AttributeSchema, Dataset, LoadOptions, Preset, Project, Value};
use fuzzy_effort::estimator::{estimate_cocomo_adjusted, CocomoInputs, EstimationConfig, Estimator, Mode};
use fuzzy_effort::evaluation::{compare, loo_evaluate, loo_records, mmre, mre, LooOptions, REFERENCE_RESULTS};
use fuzzy_effort::fuzzy::{build_categorical_partition, MembershipVector};
use fuzzy_effort::similarity::{attr_similarity, Aggregation};

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: false,
        detail: detail.into(),
    }
}

fn check(cond: bool, what: &str, failures: &mut Vec<String>) {
    if !cond {
        failures.push(what.to_string());
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if took > limit {
        o.passed = false;
        o.detail = format!(
            "{} | runtime {:.3}s exceeds {:.0}s",
            o.detail,
            took.as_secs_f64(),
            limit.as_secs_f64()
        );
    } else {
        o.detail = format!("{} | {:.3}s", o.detail, took.as_secs_f64());
    }
    o
}

fn data_dir() -> PathBuf {
    std::env::var_os("FUZZY_EFFORT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
            p.canonicalize().unwrap_or(p)
        })
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn load_preset(p: Preset) -> Result<(PathBuf, Dataset), String> {
    let path = p.locate(&data_dir()).ok_or_else(|| {
        format!(
            "{} not found in {} ({})",
            p.name(),
            data_dir().display(),
            p.file_names().join("|")
        )
    })?;
    let ds = load_path(&path, &p.load_options(), None).map_err(|e| format!("{}: {e}", p.name()))?;
    let ds = if p == Preset::Desharnais {
        dataset::drop_incomplete(&ds).map_err(|e| e.to_string())?
    } else {
        ds
    };
    Ok((path, ds))
}

/// Reads the effort column straight from the ARFF text, skipping rows with any
/// `?` when `drop_missing` is set. Shares no code with the library loader.
fn oracle_efforts(path: &Path, effort_names: &[&str], drop_missing: bool) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut attrs = Vec::new();
    let mut in_data = false;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if !in_data {
            if lower.starts_with("@attribute") {
                let name = line[10..].split_whitespace().next().unwrap();
                attrs.push(name.trim_matches(|c| c == '\'' || c == '"').to_ascii_lowercase());
            } else if lower.starts_with("@data") {
                in_data = true;
            }
            continue;
        }
        let col = attrs
            .iter()
            .position(|a| effort_names.iter().any(|n| n.eq_ignore_ascii_case(a)))
            .expect("effort column");
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if drop_missing && cells.contains(&"?") {
            continue;
        }
        out.push(cells[col].parse().unwrap());
    }
    out
}

fn criterion_1() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (preset, names, reference) in [
        (
            Preset::Nasa60,
            &["act_effort", "actual_effort", "effort"][..],
            &REFERENCE_RESULTS.datasets[0],
        ),
        (
            Preset::Nasa93,
            &["act_effort", "actual_effort", "effort"][..],
            &REFERENCE_RESULTS.datasets[1],
        ),
        (Preset::Desharnais, &["effort"][..], &REFERENCE_RESULTS.datasets[2]),
    ] {
        let (path, ds) = match load_preset(preset) {
            Ok(x) => x,
            Err(e) => {
                ok = false;
                lines.push(format!("{}: dataset unavailable ({e})", preset.name()));
                continue;
            }
        };
        let summary = dataset::summarize(&ds).unwrap();
        let oracle = oracle_efforts(&path, names, preset == Preset::Desharnais);
        let oracle_mean = oracle.iter().sum::<f64>() / oracle.len() as f64;
        let count_ok = ds.len() == reference.projects && oracle.len() == reference.projects;
        let oracle_ok = ((summary.mean_actual_effort - oracle_mean) / oracle_mean).abs() <= 1e-9;
        let rel = (summary.mean_actual_effort - reference.actual_avg_effort) / reference.actual_avg_effort;
        let table_ok = rel.abs() <= 0.005;
        ok &= count_ok && oracle_ok && table_ok;
        lines.push(format!(
            "{}: {} projects (want {}), mean {:.3} vs oracle {:.3}, vs reference {:.3} ({:+.3}%)",
            preset.name(),
            ds.len(),
            reference.projects,
            summary.mean_actual_effort,
            oracle_mean,
            reference.actual_avg_effort,
            100.0 * rel
        ));
    }
    let detail = lines.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut mres = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let actual: f64 = rng.gen_range(0.01..1e5);
        let est: f64 = rng.gen_range(0.0..2e5);
        let brute = if actual > est { actual - est } else { est - actual } / actual;
        let got = mre(actual, est).unwrap();
        check(
            (got - brute).abs() <= 1e-9 * brute.max(1.0),
            "mre vs brute force",
            &mut failures,
        );
        let c: f64 = rng.gen_range(0.001..1000.0);
        check(
            (mre(c * actual, c * est).unwrap() - got).abs() <= 1e-9 * got.max(1.0),
            "mre scale invariance",
            &mut failures,
        );
        mres.push(got);
    }
    let mut total = 0.0;
    for i in (0..mres.len()).rev() {
        total += mres[i];
    }
    let brute = total * 100.0 / mres.len() as f64;
    check(
        (mmre(&mres).unwrap() - brute).abs() <= 1e-9 * brute,
        "mmre vs brute force",
        &mut failures,
    );
    for n in 1..50 {
        let subset = &mres[..n];
        let b = subset.iter().sum::<f64>() / n as f64 * 100.0;
        check(
            (mmre(subset).unwrap() - b).abs() <= 1e-9 * b.max(1.0),
            "mmre subsets",
            &mut failures,
        );
    }
    check(
        (mmre(&[0.0515]).unwrap() - 5.15).abs() <= 1e-12,
        "mmre([0.0515]) = 5.15",
        &mut failures,
    );
    check(
        mmre(&[]).is_err() && mre(0.0, 1.0).is_err(),
        "error cases",
        &mut failures,
    );
    failures.dedup();
    if failures.is_empty() {
        pass("1000 random mre pairs, mmre over them, mmre([0.0515]) = 5.15")
    } else {
        fail(failures.join(", "))
    }
}

fn random_vector(rng: &mut StdRng, len: usize) -> MembershipVector {
    loop {
        let grades: Vec<f64> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.0..=1.0)
                }
            })
            .collect();
        if let Ok(v) = MembershipVector::new(grades) {
            return v;
        }
    }
}

fn criterion_3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let len = rng.gen_range(1..9);
        let a = random_vector(&mut rng, len);
        let b = random_vector(&mut rng, len);
        for agg in [Aggregation::MaxMin, Aggregation::SumProduct] {
            let ab = attr_similarity(&a, &b, agg).unwrap();
            let ba = attr_similarity(&b, &a, agg).unwrap();
            check(ab.to_bits() == ba.to_bits(), "symmetry", &mut failures);
        }
        let ab = attr_similarity(&a, &b, Aggregation::MaxMin).unwrap();
        let aa = attr_similarity(&a, &a, Aggregation::MaxMin).unwrap();
        check(
            (0.0..=1.0).contains(&ab) && (0.0..=1.0).contains(&aa),
            "max-min range",
            &mut failures,
        );
        check(aa >= ab, "max-min self-dominance", &mut failures);
    }
    let terms: Vec<String> = ["vl", "l", "n", "h", "vh", "xh"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let crisp = build_categorical_partition("rely", &terms, 1.0).unwrap();
    for _ in 0..1000 {
        let i = rng.gen_range(0..terms.len());
        let j = rng.gen_range(0..terms.len());
        let s = attr_similarity(
            &crisp.fuzzify_index(i).unwrap(),
            &crisp.fuzzify_index(j).unwrap(),
            Aggregation::MaxMin,
        )
        .unwrap();
        check(
            s == f64::from(u8::from(i == j)),
            "crisp reduction at w = 1",
            &mut failures,
        );
    }
    failures.sort();
    failures.dedup();
    if failures.is_empty() {
        pass("1000 random pairs: symmetry, range, self-dominance; 1000 label pairs at w=1 equal the indicator")
    } else {
        fail(failures.join(", "))
    }
}

fn random_dataset(rng: &mut StdRng, scale: f64) -> Dataset {
    let n = rng.gen_range(3..15);
    let projects = (0..n)
        .map(|i| Project {
            id: format!("p{i}"),
            values: vec![
                Value::Numeric(rng.gen_range(1.0..400.0)),
                Value::Categorical(rng.gen_range(0..6)),
                Value::Categorical(rng.gen_range(0..6)),
            ],
            actual_effort: rng.gen_range(1.0..5000.0) * scale,
        })
        .collect();
    let ratings = ["vl", "l", "n", "h", "vh", "xh"];
    Dataset::new(
        "random",
        vec![
            AttributeSchema::numeric("kloc"),
            AttributeSchema::categorical("rely", ratings),
            AttributeSchema::categorical("cplx", ratings),
        ],
        projects,
        "person-months",
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut failures = Vec::new();
    let cfg = EstimationConfig::default();
    for _ in 0..100 {
        let ds = random_dataset(&mut rng, 1.0);
        let query = [
            Value::Numeric(rng.gen_range(0.5..500.0)),
            Value::Categorical(rng.gen_range(0..6)),
            Value::Categorical(rng.gen_range(0..6)),
        ];
        let e = Estimator::fit(&ds, &cfg).unwrap().estimate("q", &query).unwrap();
        let lo = ds.efforts().fold(f64::INFINITY, f64::min);
        let hi = ds.efforts().fold(f64::NEG_INFINITY, f64::max);
        check(lo <= e.value && e.value <= hi, "convexity", &mut failures);
        let w: f64 = e.contributions.iter().map(|c| c.weight).sum();
        check((w - 1.0).abs() <= 1e-9, "weights sum to 1", &mut failures);

        let c = rng.gen_range(0.01..100.0);
        let scaled = ds.map_efforts(|x| x * c).unwrap();
        let es = Estimator::fit(&scaled, &cfg)
            .unwrap()
            .estimate("q", &query)
            .unwrap()
            .value;
        check(
            ((es - c * e.value) / (c * e.value)).abs() <= 1e-12,
            "scale equivariance",
            &mut failures,
        );

        // Finite differences of the adjusted formula at a random point with size > 1.
        let size = rng.gen_range(1.5..1000.0);
        let d: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let em: Vec<f64> = (0..4).map(|_| rng.gen_range(0.7..1.7)).collect();
        let f = |size: f64, d: Vec<f64>, em: Vec<f64>| {
            estimate_cocomo_adjusted(&CocomoInputs::new(size, d, em).unwrap(), 2.94, 0.91)
        };
        let base = f(size, d.clone(), em.clone());
        let h = 1e-3;
        check(
            f(size + h, d.clone(), em.clone()) > base,
            "monotone in size",
            &mut failures,
        );
        let mut d2 = d.clone();
        d2[0] += h;
        check(
            f(size, d2, em.clone()) > base,
            "monotone in distance sum",
            &mut failures,
        );
        let mut em2 = em.clone();
        em2[0] += h;
        check(f(size, d.clone(), em2) > base, "monotone in multiplier", &mut failures);
        check(
            f(size, vec![0.0; 3], vec![]) == 2.94 * size.powf(0.91),
            "zero distances give the plain power law",
            &mut failures,
        );
        let identity = estimate_cocomo_adjusted(&CocomoInputs::new(size, vec![0.0], vec![]).unwrap(), 1.0, 1.0);
        check(identity == size, "identity A=1 B=1", &mut failures);
    }
    failures.sort();
    failures.dedup();
    if failures.is_empty() {
        pass("100 random datasets and formula points: convexity, weights, scale, monotonicity, identity")
    } else {
        fail(failures.join(", "))
    }
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let p = fixture("synthetic_cocomo.arff");
    let ds = load_path(&p, &LoadOptions::for_file(&p, None), None).unwrap();
    let cfg = EstimationConfig::default();
    let base = loo_evaluate(&ds, &cfg, LooOptions::default()).unwrap();
    for i in 0..ds.len() {
        let mut projects = ds.projects().to_vec();
        projects[i].actual_effort *= 7.5;
        let perturbed = loo_evaluate(&ds.with_projects(projects).unwrap(), &cfg, LooOptions::default()).unwrap();
        check(
            perturbed.records[i].estimated.map(f64::to_bits) == base.records[i].estimated.map(f64::to_bits),
            "held-out effort leaks into its estimate",
            &mut failures,
        );
    }

    let oracle = loo_records(&ds, |_, held| Ok(held.actual_effort)).unwrap();
    let mres: Vec<f64> = oracle.iter().filter_map(|r| r.mre).collect();
    check(mmre(&mres).unwrap() == 0.0, "oracle estimator MMRE 0", &mut failures);

    let pair = Dataset::new(
        "pair",
        vec![AttributeSchema::numeric("x")],
        vec![
            Project {
                id: "a".into(),
                values: vec![Value::Numeric(1.0)],
                actual_effort: 100.0,
            },
            Project {
                id: "b".into(),
                values: vec![Value::Numeric(2.0)],
                actual_effort: 300.0,
            },
        ],
        "person-months",
    )
    .unwrap();
    let other = loo_records(&pair, |training, _| Ok(training.projects()[0].actual_effort)).unwrap();
    let m = mmre(&other.iter().filter_map(|r| r.mre).collect::<Vec<_>>()).unwrap();
    check((m - 133.3).abs() <= 0.1, "two-project case", &mut failures);
    // The full estimator on two projects reduces to the other project's effort.
    let full = loo_evaluate(&pair, &cfg, LooOptions::default()).unwrap();
    check(
        (full.mmre_percent - 133.3).abs() <= 0.1,
        "two-project case via loo_evaluate",
        &mut failures,
    );

    failures.dedup();
    if failures.is_empty() {
        pass(format!(
            "{} perturbed folds unchanged, oracle MMRE 0, two-project MMRE {m:.4}%",
            ds.len()
        ))
    } else {
        fail(failures.join(", "))
    }
}

fn criterion_6() -> Outcome {
    let cfg = EstimationConfig::default();
    let opts = LooOptions {
        baselines: true,
        ..LooOptions::default()
    };
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    let mut ok = true;
    for p in Preset::ALL {
        let ds = match load_preset(p) {
            Ok((_, ds)) => ds,
            Err(e) => {
                ok = false;
                lines.push(format!("{}: dataset unavailable ({e})", p.name()));
                continue;
            }
        };
        let r = loo_evaluate(&ds, &cfg, opts).unwrap();
        let baseline = r.baseline(&Mode::DatasetMean.to_string()).unwrap().mmre_percent;
        ok &= r.mmre_percent < baseline;
        lines.push(format!(
            "{}: fuzzy-analogy MMRE {:.2}% vs dataset-mean {:.2}%",
            p.name(),
            r.mmre_percent,
            baseline
        ));
        reports.push(r);
    }
    if let Ok(table) = compare(&reports, &REFERENCE_RESULTS) {
        for row in &table.rows {
            lines.push(format!(
                "{} reference {:.2}% (delta {:+.2})",
                row.dataset,
                row.reference_mmre_percent.unwrap_or(f64::NAN),
                row.mmre_delta.unwrap_or(f64::NAN)
            ));
        }
    }
    let detail = lines.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let real: Vec<String> = Preset::ALL
        .iter()
        .filter_map(|p| {
            p.locate(&data_dir())
                .map(|path| format!("{}={}", p.name(), path.display()))
        })
        .collect();
    let (inputs, note) = if real.len() == Preset::ALL.len() {
        (real, "real datasets")
    } else {
        (
            vec![
                fixture("synthetic_cocomo.arff").display().to_string(),
                format!("desharnais={}", fixture("synthetic_desharnais.arff").display()),
            ],
            "synthetic fixtures (real datasets absent)",
        )
    };
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fuzzy-effort"));
        cmd.arg("evaluate");
        for i in &inputs {
            cmd.args(["--dataset", i]);
        }
        let status = cmd
            .args(["--out", out.to_str().unwrap(), "--format", "json"])
            .output()
            .unwrap();
        if !status.status.success() {
            return fail(format!("evaluate exited {:?}", status.status.code()));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files.push(("stdout".into(), status.stdout));
        outputs.push(files);
    }
    if outputs[0] == outputs[1] {
        pass(format!(
            "{} files byte-identical across two runs on {note}",
            outputs[0].len()
        ))
    } else {
        fail(format!("outputs differ between runs on {note}"))
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("1 dataset fidelity", Duration::from_secs(1), criterion_1),
        ("2 metric oracle equivalence", Duration::from_secs(1), criterion_2),
        ("3 similarity axioms", Duration::from_secs(5), criterion_3),
        ("4 estimator properties", Duration::from_secs(10), criterion_4),
        ("5 leave-one-out harness", Duration::from_secs(5), criterion_5),
        ("6 end-to-end sanity", Duration::from_secs(10), criterion_6),
        ("7 determinism", Duration::from_secs(60), criterion_7),
    ];
    let mut failed = Vec::new();
    for (name, limit, run) in criteria {
        let o = timed(limit, run);
        println!("{} [{name}] {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
