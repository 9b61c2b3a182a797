//! Presets and result files end to end.

use antsel::experiments::{preset, run_experiment, Overrides, ResultTable, COLUMNS, PRESET_NAMES};

#[test]
fn loss_curves_for_every_architecture() {
    let table = run_experiment(&preset("fig7").unwrap()).unwrap();
    let curves: Vec<Vec<f64>> = ["ff_full", "ff_min_conn", "ff_min_loss", "partial"]
        .iter()
        .map(|s| table.series(s, "loss_db").map(|r| r.mean_rate).collect())
        .collect();
    assert!(curves.iter().all(|c| c.len() == 128));
    for m in 0..128 {
        let partial = curves[3][m];
        assert!(curves[..3].iter().all(|c| partial <= c[m]), "M = {}", m + 1);
    }
    assert_eq!(curves[3][63], 0.25);
}

#[test]
fn csv_and_json_round_trip() {
    let mut cfg = preset("fig4").unwrap();
    cfg.apply(&Overrides { trials: Some(50), m: Some(vec![2, 5]), ..Default::default() });
    let table = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 7 * 2);
    let csv = table.to_csv_string();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("# antsel scenario_id=fig4 config_sha256="));
    assert_eq!(csv.lines().nth(1).unwrap(), COLUMNS.join(","));
    let back = ResultTable::read_csv(csv.as_bytes()).unwrap();
    assert_eq!(back.to_csv_string(), csv);
    let json: serde_json::Value = serde_json::from_str(&table.to_json_string()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 14);
    assert_eq!(json["config_sha256"], table.config_sha256);
}

#[test]
fn seed_changes_results_and_hash() {
    let mut a = preset("fig4").unwrap();
    a.apply(&Overrides { trials: Some(20), m: Some(vec![3]), ..Default::default() });
    let mut b = a.clone();
    b.apply(&Overrides { seed: Some(7), ..Default::default() });
    let (ta, tb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
    assert_ne!(ta.config_sha256, tb.config_sha256);
    assert_ne!(ta.rows[1].mean_rate, tb.rows[1].mean_rate);
    assert_eq!(run_experiment(&a).unwrap().to_csv_string(), ta.to_csv_string());
}

#[test]
fn all_presets_known() {
    for name in PRESET_NAMES {
        assert!(preset(name).is_ok());
    }
}
