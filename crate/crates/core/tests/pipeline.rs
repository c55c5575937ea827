use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use fuzzy_effort::dataset::{self, load_path, Dataset, LoadOptions};
use fuzzy_effort::estimator::{EstimationConfig, Estimator, Mode};
use fuzzy_effort::evaluation::{
    compare, loo_evaluate, LooOptions, LOO_LEAKY_PROTOCOL, LOO_PROTOCOL, REFERENCE_RESULTS,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cocomo() -> Dataset {
    let p = fixture("synthetic_cocomo.arff");
    load_path(&p, &LoadOptions::for_file(&p, None), None).unwrap()
}

fn desharnais_like() -> Dataset {
    let p = fixture("synthetic_desharnais.arff");
    load_path(&p, &LoadOptions::for_file(&p, Some("desharnais")), None).unwrap()
}

#[test]
fn fixtures_load() {
    let c = cocomo();
    assert_eq!(c.len(), 24);
    assert_eq!(c.schema().len(), 16);
    assert_eq!(c.incomplete_count(), 0);
    assert_eq!(c.schema()[0].terms().unwrap(), ["vl", "l", "n", "h", "vh", "xh"]);

    let d = desharnais_like();
    assert_eq!(d.len(), 20);
    assert_eq!(d.incomplete_count(), 2);
    assert_eq!(d.effort_unit(), "person-hours");
    assert_eq!(d.id_column(), "Project");
    assert!(d.attribute_index("Effort").is_none());
    let clean = dataset::drop_incomplete(&d).unwrap();
    assert_eq!(clean.len(), 18);
    assert!(!clean.projects().iter().any(|p| p.id == "7" || p.id == "15"));
}

#[test]
fn loo_on_fixtures_all_modes() {
    let d = dataset::drop_incomplete(&desharnais_like()).unwrap();
    for ds in [cocomo(), d] {
        for mode in [Mode::FuzzyAnalogy, Mode::CrispKnn, Mode::DatasetMean] {
            let cfg = EstimationConfig {
                mode,
                ..EstimationConfig::default()
            };
            let r = loo_evaluate(&ds, &cfg, LooOptions::default()).unwrap();
            assert_eq!(r.records.len(), ds.len());
            assert_eq!(r.failures, 0);
            assert!(r.mmre_percent.is_finite() && r.mmre_percent >= 0.0);
            assert_eq!(r.protocol, LOO_PROTOCOL);
        }
    }
    let cfg = EstimationConfig {
        mode: Mode::CocomoAdjusted,
        ..EstimationConfig::default()
    };
    let r = loo_evaluate(&cocomo(), &cfg, LooOptions::default()).unwrap();
    assert_eq!(r.failures, 0);
}

#[test]
fn loo_is_deterministic_and_order_free() {
    let ds = cocomo();
    let cfg = EstimationConfig::default();
    let opts = LooOptions {
        baselines: true,
        ..LooOptions::default()
    };
    let a = loo_evaluate(&ds, &cfg, opts).unwrap();
    let b = loo_evaluate(&ds, &cfg, opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let mut projects = ds.projects().to_vec();
    projects.shuffle(&mut StdRng::seed_from_u64(7));
    let shuffled = loo_evaluate(&ds.with_projects(projects).unwrap(), &cfg, opts).unwrap();
    for r in &a.records {
        let s = shuffled.records.iter().find(|x| x.id == r.id).unwrap();
        assert_eq!(r.estimated.map(f64::to_bits), s.estimated.map(f64::to_bits));
    }
    assert!((a.mmre_percent - shuffled.mmre_percent).abs() < 1e-9);
}

#[test]
fn leaky_flag_changes_protocol() {
    let ds = cocomo();
    let cfg = EstimationConfig::default();
    let leaky = loo_evaluate(
        &ds,
        &cfg,
        LooOptions {
            shared_partitions: true,
            ..LooOptions::default()
        },
    )
    .unwrap();
    assert_eq!(leaky.protocol, LOO_LEAKY_PROTOCOL);
}

#[test]
fn held_out_project_never_in_training() {
    let ds = cocomo();
    let cfg = EstimationConfig::default();
    let records = fuzzy_effort::evaluation::loo_records(&ds, |training, held| {
        assert!(training.projects().iter().all(|p| p.id != held.id));
        assert_eq!(training.len(), ds.len() - 1);
        Ok(Estimator::fit(training, &cfg)?.estimate(&held.id, &held.values)?.value)
    })
    .unwrap();
    assert_eq!(records.len(), 24);
}

#[test]
fn comparison_against_references() {
    let d = dataset::drop_incomplete(&desharnais_like()).unwrap();
    let r = loo_evaluate(&d, &EstimationConfig::default(), LooOptions::default()).unwrap();
    let table = compare(std::slice::from_ref(&r), &REFERENCE_RESULTS).unwrap();
    assert_eq!(table.rows[0].reference_mmre_percent, Some(4.98));
    assert_eq!(table.rows[0].reference_projects, Some(77));
    assert_eq!(table.rows[0].mmre_delta, Some(r.mmre_percent - 4.98));
    // The synthetic COCOMO-style set is not one of the reference datasets.
    let other = loo_evaluate(&cocomo(), &EstimationConfig::default(), LooOptions::default()).unwrap();
    assert!(compare(&[other], &REFERENCE_RESULTS).is_err());
}
