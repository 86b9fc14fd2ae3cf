use std::collections::HashSet;

use pbnlc::coeffs::{
    build_table, load_table, prune_table, quantize_table, read_table, save_table, CoefficientTable, KernelParams, Order,
    QuadratureSpec,
};
use pbnlc::engines::{fo_distortion, so_distortion, PredistortConfig};
use pbnlc::signal::{convert_units, Alphabet, Modulation, RawLink, SymbolFrame};
use pbnlc::Error;

fn kernel(n_spans: usize, tau_ps: Option<f64>) -> KernelParams {
    let link = convert_units(&RawLink {
        n_spans,
        tau_ps,
        ..RawLink::table1()
    })
    .unwrap();
    KernelParams::from_link(&link).unwrap()
}

fn fo_table(kp: &KernelParams, window: u16, mu: f64) -> CoefficientTable {
    build_table(Order::Fo, window, mu, kp, &QuadratureSpec::fo_default()).unwrap()
}

fn rel_db(t: &CoefficientTable, v: pbnlc::Complex64) -> f64 {
    20.0 * (v.norm() / t.get([0; 4]).unwrap().norm()).log10()
}

#[test]
fn mu_zero_keeps_only_origin() {
    let t = fo_table(&kernel(1, None), 6, 0.0);
    assert_eq!(t.len(), 1);
    assert_eq!(t.entries[0].index, [0; 4]);
    assert_eq!(fo_table(&kernel(1, None), 0, -40.0).len(), 1);
}

#[test]
fn mu_boundary_membership() {
    let kp = kernel(20, None);
    let full = fo_table(&kp, 128, f64::NEG_INFINITY);
    let kept = prune_table(&full, -40.0);
    let built = fo_table(&kp, 128, -40.0);
    let kept_idx: HashSet<[i16; 4]> = kept.entries.iter().map(|e| e.index).collect();
    let built_idx: HashSet<[i16; 4]> = built.entries.iter().map(|e| e.index).collect();
    assert_eq!(kept_idx, built_idx);
    for e in &full.entries {
        let db = rel_db(&full, e.value);
        assert_eq!(kept_idx.contains(&e.index), db >= -40.0, "{:?} at {db:.2} dB", e.index);
    }
    assert!(built.max_abs_index() < 128, "kept entries reach the window edge");
}

#[test]
fn raising_mu_gives_a_subset() {
    let kp = kernel(20, None);
    let loose = fo_table(&kp, 128, -40.0);
    let tight = fo_table(&kp, 128, -30.0);
    assert!(tight.len() < loose.len());
    // The build tolerance follows μ, so values agree to the looser floor.
    let c0 = tight.get([0; 4]).unwrap().norm();
    for e in &tight.entries {
        let v = loose.get(e.index).unwrap();
        assert!((v - e.value).norm() <= 1e-4 * c0, "{:?}", e.index);
    }
}

#[test]
fn rebuild_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let kp = kernel(2, None);
    let (a, b) = (dir.path().join("a.lut"), dir.path().join("b.lut"));
    save_table(&fo_table(&kp, 32, -40.0), &a).unwrap();
    save_table(&fo_table(&kp, 32, -40.0), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(read_table(&a).unwrap(), fo_table(&kp, 32, -40.0));
}

#[test]
fn table_for_other_tau_is_stale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fo.lut");
    save_table(&fo_table(&kernel(1, Some(10.0)), 8, -40.0), &path).unwrap();
    assert!(load_table(&path, &kernel(1, Some(10.0))).is_ok());
    assert!(matches!(load_table(&path, &kernel(1, None)), Err(Error::StaleLut { .. })));
}

#[test]
fn wider_second_order_window_holds_more_entries() {
    let kp = kernel(1, None);
    let q = QuadratureSpec::so_default();
    for order in [Order::SoTerm1, Order::SoTerm2] {
        let small = build_table(order, 8, -80.0, &kp, &q).unwrap();
        let large = build_table(order, 12, -80.0, &kp, &q).unwrap();
        assert!(large.len() > small.len(), "{order}: {} vs {}", large.len(), small.len());
    }
}

fn rms(v: &[pbnlc::Complex64]) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn quantization_barely_moves_distortion_fields() {
    let kp = kernel(20, None);
    let fo = fo_table(&kp, 128, -40.0);
    let q = QuadratureSpec::so_default();
    let t1 = build_table(Order::SoTerm1, 3, -40.0, &kp, &q).unwrap();
    let t2 = build_table(Order::SoTerm2, 3, -40.0, &kp, &q).unwrap();
    let (qfo, qt1, qt2) = (quantize_table(&fo, 0.5), quantize_table(&t1, 0.5), quantize_table(&t2, 0.5));
    for (plain, quant) in [(&fo, &qfo), (&t1, &qt1), (&t2, &qt2)] {
        assert!(quant.cluster_count() < plain.len(), "{}", plain.order);
    }
    let frame = SymbolFrame::random(&Alphabet::new(Modulation::Qam16), 4096, 32e9, 3);
    let exact = PredistortConfig::fo(fo, 1.22e-3, 1e-3).with_so(t1, t2);
    let coarse = PredistortConfig::fo(qfo, 1.22e-3, 1e-3).with_so(qt1, qt2);
    let db = |a: f64, b: f64| (20.0 * (a / b).log10()).abs();
    let u1 = rms(&fo_distortion(&frame, &exact).unwrap());
    let v1 = rms(&fo_distortion(&frame, &coarse).unwrap());
    assert!(db(v1, u1) < 0.1, "first order moved {} dB", db(v1, u1));
    let u2 = rms(&so_distortion(&frame, &exact).unwrap());
    let v2 = rms(&so_distortion(&frame, &coarse).unwrap());
    assert!(db(v2, u2) < 0.1, "second order moved {} dB", db(v2, u2));
}
