use toral_nodal::experiment::{
    comparison_csv, emit_plot_data, run_comparison, run_comparison_cached, Cache, CacheKey, CacheLookup,
    ComparisonRow, ExperimentConfig, ExperimentError, Manifest, PlotKind, RowStatus,
};

fn small_config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

#[test]
fn config_parsing_and_validation() {
    let cfg = small_config("# comment\nenergies = 25, 65\nR = 4\nK = 2\ntrials = 8\nseeds = 1,2\n");
    assert_eq!(cfg.energies, vec![25, 65]);
    assert_eq!(cfg.seeds, vec![1, 2]);
    assert_eq!(cfg.arcs, 2);
    assert!(ExperimentConfig::parse("energies = 25\nnonsense = 1\n").is_err());
    assert!(ExperimentConfig::parse("energies = 25\ntrials = 2\n").is_err());
    let err = ExperimentConfig::parse("energies = 25\nR = -1\n").unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert_eq!(cfg.canonical(), small_config(&cfg.canonical()).canonical());
}

#[test]
fn comparison_rows_are_complete_and_deterministic() {
    let cfg = small_config("energies = 25, 3\nR = 4\ntrials = 8\nseeds = 11\n");
    let a = comparison_csv(&run_comparison(&cfg).unwrap());
    let b = comparison_csv(&run_comparison(&cfg).unwrap());
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some(ComparisonRow::CSV_HEADER));
    let rows = run_comparison(&cfg).unwrap();
    let e25 = rows.iter().find(|r| r.energy == 25).unwrap();
    assert_eq!(e25.status, RowStatus::Ok);
    assert!(e25.nodal_count.is_some() && e25.cns.is_some() && e25.prokhorov.is_some());
    let e3 = rows.iter().find(|r| r.energy == 3).unwrap();
    assert_eq!(e3.status, RowStatus::NotInS);
    assert!(a.contains("E not in S"));
}

#[test]
fn cache_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let key = CacheKey::new("unit", "x=1");
    assert!(matches!(cache.get(&key).unwrap(), CacheLookup::Miss));
    cache.put(&key, b"payload").unwrap();
    assert!(matches!(cache.get(&key).unwrap(), CacheLookup::Hit(ref b) if b == b"payload"));
    let blob = std::fs::read_dir(dir.path().join("unit"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "blob"))
        .unwrap();
    std::fs::write(&blob, b"tampered").unwrap();
    assert!(matches!(cache.get(&key).unwrap(), CacheLookup::Corrupt));
    assert_ne!(CacheKey::new("unit", "x=1"), CacheKey::new("unit", "x=2"));
}

#[test]
fn cached_run_matches_uncached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let cfg = small_config("energies = 25\nR = 4\ntrials = 8\nseeds = 11\n");
    let fresh = comparison_csv(&run_comparison(&cfg).unwrap());
    let first = comparison_csv(&run_comparison_cached(&cfg, Some(&cache)).unwrap());
    let second = comparison_csv(&run_comparison_cached(&cfg, Some(&cache)).unwrap());
    assert_eq!(fresh, first);
    assert_eq!(first, second);
}

#[test]
fn plot_projection() {
    let table = "E,Nf_over_E,cns,cns_err,x\n25,0.2,0.19,0.01,q\n65,,0.18,0.01,q\n";
    let out = emit_plot_data(table, PlotKind::Scatter).unwrap();
    assert_eq!(out, "E,Nf_over_E,cns,cns_err\n25,0.2,0.19,0.01\n");
    assert!(matches!(emit_plot_data("", PlotKind::Scatter), Err(ExperimentError::EmptyTable)));
    assert!(matches!(emit_plot_data("E,cns\n1,2\n", PlotKind::Scatter), Err(ExperimentError::MissingColumn(_))));
    assert!(matches!(emit_plot_data(table.lines().next().unwrap(), PlotKind::Scatter), Err(ExperimentError::EmptyTable)));
}

#[test]
fn manifest_records_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = Manifest::new("compare", vec!["--config".into(), "c.toml".into()], vec![1]);
    m.record_output("table.csv", b"abc");
    let path = m.write(dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(
        json["outputs"]["table.csv"],
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    assert_eq!(json["seeds"][0], 1);
}
