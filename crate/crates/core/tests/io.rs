mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;

use gmm_intraday::io::{
    parse_model, read_conditions, read_grid, read_model, read_profiles, read_traces, render_model, write_conditions,
    write_grid, write_model, write_profiles, write_traces, Profile,
};
use gmm_intraday::metrics::{DatasetTag, PerformanceTrace, Variant, WaterfallGrid};
use gmm_intraday::synthgen::{CovarianceStyle, GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::build_forecasts;
use gmm_intraday::Error;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn golden_models_parse_and_render_byte_identically() {
    for name in ["model_k1_diag.json", "model_pdcc.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let fcs = parse_model(&text).unwrap();
        assert_eq!(render_model(&fcs).unwrap(), text, "{name}");
    }
}

#[test]
fn golden_pdcc_model_shares_one_dictionary() {
    let fcs = read_model(fixture("model_pdcc.json")).unwrap();
    assert_eq!(fcs.len(), 2);
    let d0 = fcs[0].dictionary().unwrap();
    assert!(fcs.iter().all(|f| std::sync::Arc::ptr_eq(f.dictionary().unwrap(), d0)));
    assert_eq!(fcs[1].weights(), &[0.25, 0.75]);
}

#[test]
fn golden_profiles_round_trip() {
    let profiles = read_profiles(fixture("profiles.csv")).unwrap();
    assert_eq!(profiles.len(), 2);
    assert_eq!(profiles[0].values, vec![1.0, 2.5, -0.125]);
    let dir = tempfile::tempdir().unwrap();
    write_profiles(&profiles, dir.path().join("p.csv")).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("p.csv")).unwrap(),
        std::fs::read(fixture("profiles.csv")).unwrap()
    );
}

#[test]
fn generated_models_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for covariance in [CovarianceStyle::Diagonal, GeneratorConfig::default().covariance] {
        let gt = GroundTruth::new(GeneratorConfig {
            horizon: 6,
            covariance,
            seed: 31,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let fcs = build_forecasts(&gt, &gt.conditions(4, 1), 3, 2).unwrap();
        let path = dir.path().join("m.json");
        write_model(&fcs, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, fcs);
        write_model(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}

#[test]
fn malformed_tables_are_rejected_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "instance_id,t1,t2\na,1,2\nb,1\n").unwrap();
    assert!(matches!(read_profiles(&p), Err(Error::RaggedRow { row: 3, .. })));
    std::fs::write(&p, "instance_id,t1,t2\na,1,NaN\n").unwrap();
    assert!(matches!(
        read_profiles(&p),
        Err(Error::Parse { line: 2, column: 3, .. })
    ));
    std::fs::write(&p, "instance_id,t1,t2\na,1,inf\n").unwrap();
    assert!(matches!(read_profiles(&p), Err(Error::Parse { .. })));
    std::fs::write(&p, "instance_id,t1,t2\na,1,2\na,3,4\n").unwrap();
    assert!(matches!(read_profiles(&p), Err(Error::DuplicateId(id)) if id == "a"));
    std::fs::write(&p, "id,t1\na,1\n").unwrap();
    assert!(matches!(read_profiles(&p), Err(Error::Parse { .. })));
    assert!(matches!(
        read_profiles(dir.path().join("missing.csv")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn conditions_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    let conds: BTreeMap<String, Vec<f64>> =
        [("b".to_string(), vec![0.1, -2.0]), ("a".to_string(), vec![1e-300, 3.0])].into();
    write_conditions(&conds, &p).unwrap();
    assert_eq!(read_conditions(&p).unwrap(), conds);
}

#[test]
fn traces_and_grid_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = PerformanceTrace::new("nll", Variant::Updated, DatasetTag::BestCase);
    let mut b = PerformanceTrace::new("nll", Variant::NonUpdated, DatasetTag::BestCase);
    for tp in 0..5 {
        a.values.insert(tp, 1.0 / (tp + 3) as f64);
        b.values.insert(tp, 0.1 * tp as f64);
    }
    write_traces(&[a.clone(), b.clone()], dir.path().join("t.csv")).unwrap();
    let back = read_traces(dir.path().join("t.csv")).unwrap();
    assert!(back.contains(&a) && back.contains(&b) && back.len() == 2);

    let mut grids = BTreeMap::new();
    for v in [Variant::Updated, Variant::NonUpdated] {
        let mut g = WaterfallGrid::new();
        for tp in 0..3 {
            for t in tp + 1..=3 {
                g.insert(tp, t, (tp * 10 + t) as f64 / 7.0).unwrap();
            }
        }
        grids.insert(v, g);
    }
    write_grid(&grids, dir.path().join("g.csv")).unwrap();
    assert_eq!(read_grid(dir.path().join("g.csv")).unwrap(), grids);
}

#[test]
fn parse_errors_carry_field_paths() {
    let text = std::fs::read_to_string(fixture("model_k1_diag.json")).unwrap();
    let broken = text.replacen("\"sigma\": [\n", "\"sigma\": [\n            -1.0,\n", 1);
    match parse_model(&broken) {
        Err(Error::Parse { message, .. }) => assert!(message.contains("instances[0].components[0]"), "{message}"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_finite_profile_round_trips(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 4), 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        let profiles: Vec<Profile> = rows.into_iter().enumerate().map(|(i, values)| Profile { id: format!("d{i}"), values }).collect();
        write_profiles(&profiles, &p).unwrap();
        prop_assert_eq!(read_profiles(&p).unwrap(), profiles);
    }
}
