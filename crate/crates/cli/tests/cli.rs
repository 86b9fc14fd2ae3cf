use std::path::Path;
use std::process::Command;

use pbnlc::Error;
use pbnlc_cli::sim::{make_luts, run_grid};
use pbnlc_cli::{ExperimentConfig, ResultSet};
use serde_json::json;

fn small(dir: &Path, extra: &[String]) -> ExperimentConfig {
    let mut sets = vec![
        format!("lut_dir={}", serde_json::to_string(&dir.join("luts")).unwrap()),
        "spans=[2]".into(),
        "n_symbols=1024".into(),
        "steps_per_span=8".into(),
        "power_start_dbm=0".into(),
        "power_stop_dbm=2".into(),
        "power_step_db=1".into(),
        "fo_window=16".into(),
        "so_window=2".into(),
    ];
    sets.extend_from_slice(extra);
    ExperimentConfig::from_value(serde_json::to_value(ExperimentConfig::default()).unwrap(), &sets).unwrap()
}

#[test]
fn preset_loads() {
    let cfg = ExperimentConfig::load(Path::new("../../configs/paper_table1"), &[]).unwrap();
    assert_eq!(cfg.spans.first(), Some(&29));
    assert_eq!(cfg.powers().len(), 21);
}

#[test]
fn unknown_keys_are_rejected() {
    let mut doc = serde_json::to_value(ExperimentConfig::default()).unwrap();
    doc["gamma_per_km"] = json!(1.0);
    assert!(ExperimentConfig::from_value(doc, &[]).is_err());
    let doc = serde_json::to_value(ExperimentConfig::default()).unwrap();
    assert!(ExperimentConfig::from_value(doc, &["betta2=1".into()]).is_err());
}

#[test]
fn linear_noiseless_link_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(
        dir.path(),
        &["engines=[\"edc\"]".into(), "gamma_per_w_per_km=0".into(), "ase_noise=false".into()],
    );
    let records = run_grid(&cfg).unwrap();
    assert_eq!(records.len(), 3);
    for r in records {
        assert_eq!(r.bit_errors, 0, "{} dBm", r.launch_power);
        assert_eq!(r.bits, 4096);
    }
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &["engines=[\"edc\",\"fo\",\"so\"]".into(), "seeds=[1,2]".into()]);
    make_luts(&cfg).unwrap();
    let a = run_grid(&cfg).unwrap();
    let b = run_grid(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 9);
    assert!(a.iter().all(|r| r.bits == 2 * 4096));
}

#[test]
fn lut_rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &["engines=[\"fo\",\"so\"]".into()]);
    let first = make_luts(&cfg).unwrap();
    let bytes: Vec<Vec<u8>> = first.iter().map(|r| std::fs::read(&r.path).unwrap()).collect();
    let second = make_luts(&cfg).unwrap();
    assert_eq!(first, second);
    for (r, b) in second.iter().zip(bytes) {
        assert_eq!(std::fs::read(&r.path).unwrap(), b);
    }
}

#[test]
fn tables_for_another_link_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &["engines=[\"fo\"]".into()]);
    make_luts(&cfg).unwrap();
    let other = small(dir.path(), &["engines=[\"fo\"]".into(), "tau_ps=12.0".into()]);
    assert!(matches!(run_grid(&other), Err(Error::StaleLut { .. })));
}

#[test]
fn csv_round_trip_preserves_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &["engines=[\"edc\"]".into()]);
    let rs = ResultSet {
        fingerprint: cfg.fingerprint(),
        records: run_grid(&cfg).unwrap(),
    };
    let path = dir.path().join("r.csv");
    rs.save(&path).unwrap();
    let back = ResultSet::load(&path).unwrap();
    assert_eq!(back.fingerprint, rs.fingerprint);
    let key = |s: &ResultSet| {
        s.records
            .iter()
            .map(|r| (r.engine.clone(), r.distance, r.launch_power, r.bit_errors, r.bits))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&back), key(&rs));
}

fn pbnlc(args: &[&str], cwd: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_pbnlc"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn binary_runs_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), &["engines=[\"edc\",\"fo\"]".into()]);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let c = path.to_str().unwrap();

    let luts = pbnlc(&["make-lut", "-c", c], dir.path());
    assert!(luts.contains("fo"), "{luts}");
    pbnlc(&["run", "-c", c, "-o", "run.csv"], dir.path());
    let plot = pbnlc(&["plot-data", "run.csv"], dir.path());
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], format!("# config={}", cfg.fingerprint()));
    assert_eq!(lines[1], "engine,distance_km,power_dBm,ber,bits,errors");
    assert_eq!(lines.len(), 2 + 6);

    let reach = pbnlc(&["reach", "-c", c, "--set", "spans=[1,2]", "--set", "engines=[\"edc\"]", "-o", "reach.csv"], dir.path());
    assert!(reach.contains("edc"), "{reach}");
    let curve = pbnlc(&["plot-data", "reach.csv", "--kind", "reach_vs_power"], dir.path());
    assert!(curve.lines().nth(1).unwrap().starts_with("engine,power_dBm,reach_km"));
}
