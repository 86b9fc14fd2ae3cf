use std::f64::consts::FRAC_PI_4;

use pbnlc::coeffs::printed::{term1_integrand, term2_integrand};
use pbnlc::coeffs::{coefficient, fo_coefficient, fo_estimate, KernelParams, Order, QuadratureSpec};
use pbnlc::signal::units::{db_per_km_to_power_per_m, ps2_per_km_to_s2_per_m};
use pbnlc::Complex64;

const L: f64 = 80e3;
const T: f64 = 1.0 / 32e9;

fn table1_span() -> KernelParams {
    KernelParams::new(
        ps2_per_km_to_s2_per_m(-20.47),
        db_per_km_to_power_per_m(0.2),
        L,
        T,
        T / 2.0,
    )
    .unwrap()
}

fn ideal_span() -> KernelParams {
    KernelParams::new(0.0, 0.0, L, T, T / 2.0).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// The first-order integrand written out independently of the library.
fn fo_oracle_integrand(m: f64, n: f64, kp: &KernelParams, z: f64) -> Complex64 {
    let x = kp.beta2 * z / (kp.tau * kp.tau);
    let j = Complex64::i();
    let d = 1.0 + 2.0 * j * x + 3.0 * x * x;
    let r = kp.symbol_period * kp.symbol_period / (kp.tau * kp.tau);
    let e = -3.0 * m * n * r / (1.0 + 3.0 * j * x) - (m - n) * (m - n) * r / d;
    (-kp.alpha * z).exp() / d.sqrt() * e.exp()
}

#[test]
fn fo_closed_form_without_dispersion() {
    let kp = ideal_span();
    let q = QuadratureSpec::fo_default();
    for (m, n) in [(0, 0), (1, 0), (1, 1), (-1, 2), (2, -3)] {
        let c = fo_coefficient(m, n, &kp, &q).unwrap();
        let (mf, nf) = (m as f64, n as f64);
        let expect = L * (-(3.0 * mf * nf + (mf - nf).powi(2)) * 4.0).exp();
        assert!((c.re - expect).abs() <= 1e-9 * expect, "({m},{n}): {c} vs {expect}");
        assert!(c.im.abs() <= 1e-9 * expect);
    }
    assert!((fo_coefficient(0, 0, &kp, &q).unwrap().re - 8.0e4).abs() < 1e-4);
}

#[test]
fn fo_origin_matches_midpoint_oracle() {
    let kp = table1_span();
    let c = fo_coefficient(0, 0, &kp, &QuadratureSpec::fo_default().with_rel_tol(1e-9)).unwrap();
    let slices = 1_000_000;
    let h = L / slices as f64;
    let oracle: Complex64 = (0..slices)
        .map(|i| fo_oracle_integrand(0.0, 0.0, &kp, (i as f64 + 0.5) * h))
        .sum::<Complex64>()
        * h;
    assert!(rel(c, oracle) < 1e-6, "{c} vs {oracle}");
}

#[test]
fn fo_matches_oracle_off_origin() {
    let kp = table1_span();
    let q = QuadratureSpec::fo_default().with_rel_tol(1e-9);
    for (m, n) in [(1, 2), (-3, 1), (0, 5)] {
        let c = fo_coefficient(m, n, &kp, &q).unwrap();
        let slices = 200_000;
        let h = L / slices as f64;
        let oracle: Complex64 = (0..slices)
            .map(|i| fo_oracle_integrand(m as f64, n as f64, &kp, (i as f64 + 0.5) * h))
            .sum::<Complex64>()
            * h;
        assert!(rel(c, oracle) < 1e-5, "({m},{n}): {c} vs {oracle}");
    }
}

#[test]
fn fo_is_symmetric_on_index_grid() {
    let kp = table1_span();
    let q = QuadratureSpec::fo_default();
    for m in -10..10 {
        for n in (m + 1)..10 {
            let a = fo_estimate(m, n, &kp, &q).unwrap();
            let b = fo_estimate(n, m, &kp, &q).unwrap();
            let tol = a.error + b.error + 1e-12 * a.value.norm();
            assert!((a.value - b.value).norm() <= tol, "({m},{n})");
        }
    }
}

#[test]
fn fo_magnitude_decays_away_from_origin() {
    let kp = table1_span();
    let q = QuadratureSpec::fo_default();
    let c0 = fo_coefficient(0, 0, &kp, &q).unwrap().norm();
    let far = fo_coefficient(40, 40, &kp, &q).unwrap().norm();
    let farther = fo_coefficient(200, 200, &kp, &q).unwrap().norm();
    assert!(far < c0 && farther < far);
}

#[test]
fn tightening_tolerance_stays_within_error_estimate() {
    let kp = table1_span();
    for (m, n) in [(0, 0), (2, 3), (-4, 7)] {
        let loose = fo_estimate(m, n, &kp, &QuadratureSpec::fo_default()).unwrap();
        let tight = fo_estimate(m, n, &kp, &QuadratureSpec::fo_default().with_rel_tol(5e-7)).unwrap();
        assert!((loose.value - tight.value).norm() <= loose.error.max(1e-12 * loose.value.norm()));
    }
    for order in [Order::SoTerm1, Order::SoTerm2] {
        let q = QuadratureSpec::so_default();
        let loose = coefficient(order, [1, 0, 0, 1], &kp, &q).unwrap();
        let tight = coefficient(order, [1, 0, 0, 1], &kp, &q.with_rel_tol(q.rel_tol / 2.0)).unwrap();
        assert!((loose.value - tight.value).norm() <= loose.error.max(1e-12 * loose.value.norm()));
    }
}

#[test]
fn term1_origin_without_loss_or_dispersion() {
    let kp = ideal_span();
    let q = QuadratureSpec::so_default();
    for order in [Order::SoTerm1, Order::SoTerm1Printed] {
        let c = coefficient(order, [0; 4], &kp, &q).unwrap().value;
        let expect = Complex64::new(-L * L / 2.0, 0.0);
        assert!(rel(c, expect) < 1e-9, "{order}: {c}");
    }
}

#[test]
fn printed_term2_origin_takes_principal_branches() {
    let kp = ideal_span();
    let c = coefficient(Order::SoTerm2Printed, [0; 4], &kp, &QuadratureSpec::so_default())
        .unwrap()
        .value;
    let expect = 3f64.sqrt() * Complex64::from_polar(1.0, -FRAC_PI_4) * (L * L / 2.0);
    assert!(rel(c, expect) < 1e-9, "{c} vs {expect}");
}

/// Iterated midpoint rule over `0 ≤ s ≤ z ≤ L`.
fn triangle_midpoint(n: usize, f: impl Fn(f64, f64) -> Complex64) -> Complex64 {
    let h = L / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let z = (i as f64 + 0.5) * h;
        let hs = z / n as f64;
        let inner: Complex64 = (0..n).map(|j| f(z, (j as f64 + 0.5) * hs)).sum();
        total += inner * hs;
    }
    total * h
}

#[test]
fn printed_term1_matches_midpoint_oracle() {
    let kp = table1_span();
    let c = coefficient(Order::SoTerm1Printed, [1, 0, 0, 0], &kp, &QuadratureSpec::so_default())
        .unwrap()
        .value;
    let oracle = triangle_midpoint(2000, |z, s| term1_integrand([1.0, 0.0, 0.0, 0.0], &kp, z, s).0);
    assert!(rel(c, oracle) < 1e-4, "{c} vs {oracle}");
}

#[test]
fn printed_term2_matches_midpoint_oracle() {
    let kp = table1_span();
    let c = coefficient(Order::SoTerm2Printed, [0, 0, 0, 1], &kp, &QuadratureSpec::so_default())
        .unwrap()
        .value;
    let oracle = triangle_midpoint(2000, |z, s| term2_integrand([0.0, 0.0, 0.0, 1.0], &kp, z, s).0);
    assert!(rel(c, oracle) < 1e-4, "{c} vs {oracle}");
}

#[test]
fn second_order_kernels_swap_first_two_indices() {
    let kp = table1_span();
    let q = QuadratureSpec::so_default();
    for order in [Order::SoTerm1, Order::SoTerm2, Order::SoTerm2Printed] {
        for idx in [[1, 0, 0, 0], [2, -1, 1, 0], [0, 3, 1, -1]] {
            let a = coefficient(order, idx, &kp, &q).unwrap();
            let b = coefficient(order, [idx[1], idx[0], idx[2], idx[3]], &kp, &q).unwrap();
            let tol = 2.0 * (a.error + b.error) + 1e-9 * a.value.norm();
            assert!((a.value - b.value).norm() <= tol, "{order} {idx:?}: {} vs {}", a.value, b.value);
        }
    }
}

#[test]
fn printed_term1_breaks_swap_symmetry() {
    // The printed H polynomial carries 13/6·(m + n²).
    let kp = table1_span();
    let q = QuadratureSpec::so_default();
    let a = coefficient(Order::SoTerm1Printed, [0, 3, 1, -1], &kp, &q).unwrap().value;
    let b = coefficient(Order::SoTerm1Printed, [3, 0, 1, -1], &kp, &q).unwrap().value;
    assert!(rel(a, b) > 0.5, "{a} vs {b}");
}

#[test]
fn printed_term2_decays_with_k() {
    let kp = table1_span();
    let q = QuadratureSpec::so_default();
    let mags: Vec<f64> = (0..6)
        .map(|k| coefficient(Order::SoTerm2Printed, [0, 0, 0, k], &kp, &q).unwrap().value.norm())
        .collect();
    assert!(mags.windows(2).all(|w| w[1] < w[0]), "{mags:?}");
}

#[test]
fn kernels_ignore_gamma_and_power() {
    // KernelParams carries neither; two links differing only in γ and P0 share a fingerprint.
    use pbnlc::signal::{convert_units, RawLink};
    let mut raw = RawLink::table1();
    let a = KernelParams::from_link(&convert_units(&raw).unwrap()).unwrap();
    raw.gamma_per_w_per_km = 2.0;
    raw.launch_power_dbm = 5.0;
    let b = KernelParams::from_link(&convert_units(&raw).unwrap()).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
}
