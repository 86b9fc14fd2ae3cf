//! Quadrature for the perturbation kernels.
//!
//! Two rules are provided:
//!
//! * [`adaptive`]: globally adaptive Gauss–Kronrod (G7/K15) for complex
//!   integrands on an interval, with user break points. [`adaptive_triangle`]
//!   nests it to integrate over `0 ≤ s ≤ z ≤ L`.
//! * [`TriangleRule`]: a fixed tensor product of K15 panels on the triangle with
//!   the embedded G7 product as error estimate. Table builds share one node set
//!   across every index tuple.
//!
//! Integrands report the principal square roots they took. Consecutive nodes
//! inside a panel must not rotate any of them by more than π/2; a larger jump
//! means a branch cut was crossed and the integral is rejected.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes of the K15 rule on `[-1, 1]` in increasing order, with Kronrod and
/// embedded Gauss weights (zero for Kronrod-only nodes).
pub fn k15_nodes() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        out[i] = (-XGK[i], WGK[i], wg);
        out[14 - i] = (XGK[i], WGK[i], wg);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Adaptive Gauss–Kronrod, nested for two-dimensional kernels.
    AdaptiveNested,
    /// Fixed tensor-product K15 panels on the triangle (shared across tuples).
    TensorTriangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute floor, in units of the integrand scale the caller supplies.
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub rule: QuadratureRule,
}

impl QuadratureSpec {
    pub fn fo_default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            rule: QuadratureRule::AdaptiveNested,
        }
    }

    pub fn so_default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-5,
            abs_tol: 1e-9,
            max_subdivisions: 400,
            rule: QuadratureRule::TensorTriangle,
        }
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Integrand value plus the principal square roots used to compute it.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub value: Complex64,
    pub roots: [Complex64; 3],
    pub n_roots: usize,
}

impl Sample {
    pub fn plain(value: Complex64) -> Self {
        Sample {
            value,
            roots: [Complex64::new(1.0, 0.0); 3],
            n_roots: 0,
        }
    }

    pub fn with_roots(value: Complex64, roots: &[Complex64]) -> Self {
        let mut s = Sample::plain(value);
        s.n_roots = roots.len().min(3);
        s.roots[..s.n_roots].copy_from_slice(&roots[..s.n_roots]);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

fn check_continuity(prev: &Sample, next: &Sample, at: f64, context: &dyn Fn() -> String) -> Result<()> {
    for i in 0..prev.n_roots.min(next.n_roots) {
        let (a, b) = (prev.roots[i], next.roots[i]);
        if a.norm() == 0.0 || b.norm() == 0.0 {
            continue;
        }
        let jump = (b / a).arg().abs();
        if jump > FRAC_PI_2 {
            return Err(Error::BranchCut {
                context: context(),
                jump,
                at,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &mut F, lo: f64, hi: f64, context: &dyn Fn() -> String) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut prev: Option<(Sample, f64)> = None;
    for (x, wk, wg) in k15_nodes() {
        let at = centre + half * x;
        let s = f(at)?;
        if !(s.value.re.is_finite() && s.value.im.is_finite()) {
            return Err(Error::Singularity {
                context: format!("{} (non-finite integrand at {at:e})", context()),
                magnitude: f64::INFINITY,
            });
        }
        if let Some((p, _)) = &prev {
            check_continuity(p, &s, at, context)?;
        }
        kronrod += s.value * wk;
        gauss += s.value * wg;
        prev = Some((s, at));
    }
    Ok(Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    })
}

/// Globally adaptive G7/K15 on `[lo, hi]`, starting from the given break points.
///
/// Converges when the summed error estimate is at most
/// `max(rel_tol·|I|, abs_tol)`.
pub fn adaptive<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
    context: &dyn Fn() -> String,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let mut edges: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    edges.push(lo);
    edges.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    edges.push(hi);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1], context)?);
            evaluations += 15;
        }
    }
    let total = |h: &BinaryHeap<Panel>| -> (Complex64, f64) {
        h.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    loop {
        let (value, error) = total(&heap);
        let tol = (rel_tol * value.norm()).max(abs_tol);
        if error <= tol {
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= max_subdivisions {
            let worst = heap.peek().copied().unwrap_or(Panel {
                lo,
                hi,
                value,
                error,
            });
            return Err(Error::Quadrature {
                context: context(),
                estimate: error,
                tolerance: tol,
                lo: worst.lo,
                hi: worst.hi,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval exhausted at machine resolution; keep what we have.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(gk15(&mut f, worst.lo, mid, context)?);
        heap.push(gk15(&mut f, mid, worst.hi, context)?);
        evaluations += 30;
    }
}

/// `∫₀ᴸ ∫₀ᶻ f(z, s) ds dz` as an adaptive integral of adaptive inner integrals.
pub fn adaptive_triangle<F>(
    f: F,
    length: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    context: &dyn Fn() -> String,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Result<Sample>,
{
    let mut evaluations = 0;
    let inner_rel = spec.rel_tol / 4.0;
    let inner_abs = spec.abs_tol / (4.0 * length.max(1.0));
    let outer = adaptive(
        |z| {
            if z <= 0.0 {
                return Ok(Sample::plain(Complex64::new(0.0, 0.0)));
            }
            let est = adaptive(
                |s| f(z, s),
                0.0,
                z,
                breaks,
                inner_rel,
                inner_abs,
                spec.max_subdivisions,
                context,
            )?;
            evaluations += est.evaluations;
            Ok(Sample::plain(est.value))
        },
        0.0,
        length,
        breaks,
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
        context,
    )?;
    Ok(Estimate {
        evaluations: evaluations + outer.evaluations,
        ..outer
    })
}

/// One node of a tensor-product rule on the triangle `0 ≤ s ≤ z ≤ L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriNode {
    pub z: f64,
    pub s: f64,
    /// Product Kronrod weight.
    pub wk: f64,
    /// Product embedded-Gauss weight (zero off the Gauss sub-grid).
    pub wg: f64,
}

/// Panel edges on `[0, length]`: every break point, geometric grading from
/// `grade_scale/64` up to the first break, and no panel longer than `max_panel`.
pub fn graded_edges(length: f64, breaks: &[f64], grade_scale: f64, max_panel: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let first_break = breaks
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < length)
        .fold(length, f64::min);
    if grade_scale > 0.0 {
        let mut e = grade_scale / 64.0;
        while e < first_break {
            edges.push(e);
            e *= 2.0;
        }
    }
    edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < length));
    edges.push(length);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut out = vec![0.0];
    for w in edges.windows(2) {
        let pieces = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
        for i in 1..=pieces {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / pieces as f64);
        }
    }
    out
}

/// Fixed K15 × K15 product rule on the triangle with embedded G7 × G7 weights.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub nodes: Vec<TriNode>,
}

impl TriangleRule {
    /// Outer panels from `edges`; for each outer node `z` the inner variable runs
    /// over the same edges clipped to `[0, z]`.
    pub fn new(edges: &[f64]) -> Self {
        let k15 = k15_nodes();
        let mut nodes = Vec::new();
        for zw in edges.windows(2) {
            let (zc, zh) = (0.5 * (zw[0] + zw[1]), 0.5 * (zw[1] - zw[0]));
            for &(xz, wkz, wgz) in &k15 {
                let z = zc + zh * xz;
                for sw in edges.windows(2) {
                    if sw[0] >= z {
                        break;
                    }
                    let hi = sw[1].min(z);
                    let (sc, sh) = (0.5 * (sw[0] + hi), 0.5 * (hi - sw[0]));
                    for &(xs, wks, wgs) in &k15 {
                        nodes.push(TriNode {
                            z,
                            s: sc + sh * xs,
                            wk: wkz * zh * wks * sh,
                            wg: wgz * zh * wgs * sh,
                        });
                    }
                }
            }
        }
        TriangleRule { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Fixed K15 rule on `[0, length]` over the given edges (one-dimensional analogue).
pub fn line_rule(edges: &[f64]) -> Vec<(f64, f64, f64)> {
    let k15 = k15_nodes();
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for &(x, wk, wg) in &k15 {
            out.push((c + h * x, wk * h, wg * h));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> String {
        "test".into()
    }

    #[test]
    fn weights_integrate_constants() {
        let n = k15_nodes();
        let sk: f64 = n.iter().map(|x| x.1).sum();
        let sg: f64 = n.iter().map(|x| x.2).sum();
        assert!((sk - 2.0).abs() < 1e-14);
        assert!((sg - 2.0).abs() < 1e-14);
        assert!(n.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn oscillatory_complex_integral() {
        // ∫₀¹⁰ exp(j·5x) e^{-x/3} dx in closed form.
        let a = Complex64::new(-1.0 / 3.0, 5.0);
        let exact = ((a * 10.0).exp() - 1.0) / a;
        let est = adaptive(
            |x| Ok(Sample::plain((a * x).exp())),
            0.0,
            10.0,
            &[],
            1e-10,
            1e-14,
            500,
            &ctx,
        )
        .unwrap();
        assert!((est.value - exact).norm() < 1e-9 * exact.norm());
        assert!(est.error <= 1e-10 * est.value.norm());
    }

    #[test]
    fn non_convergence_reports_interval() {
        let err = adaptive(
            |x| Ok(Sample::plain(Complex64::new((1.0 / x.max(1e-300)).sin(), 0.0))),
            0.0,
            1.0,
            &[],
            1e-14,
            0.0,
            8,
            &ctx,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn branch_jump_is_detected() {
        // sqrt(-1 + j·x) jumps by ~π across x = 0 under the principal branch.
        let err = adaptive(
            |x| {
                let r = Complex64::new(-1.0, x).sqrt();
                Ok(Sample::with_roots(r, &[r]))
            },
            -1.0,
            1.0,
            &[],
            1e-8,
            0.0,
            50,
            &ctx,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BranchCut { .. }));
    }

    #[test]
    fn triangle_rules_agree_on_polynomial() {
        // ∫₀ᴸ∫₀ᶻ (z² s + j s³) ds dz = L⁵/10 + j L⁵/20
        let l: f64 = 3.0;
        let exact = Complex64::new(l.powi(5) / 10.0, l.powi(5) / 20.0);
        let f = |z: f64, s: f64| Ok(Sample::plain(Complex64::new(z * z * s, s * s * s)));
        let spec = QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_subdivisions: 100,
            rule: QuadratureRule::AdaptiveNested,
        };
        let a = adaptive_triangle(f, l, &[1.0], &spec, &ctx).unwrap();
        assert!((a.value - exact).norm() < 1e-11 * exact.norm());

        let rule = TriangleRule::new(&graded_edges(l, &[1.0], 0.1, 1.0));
        let (mut k, mut g) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for n in &rule.nodes {
            let v = f(n.z, n.s).unwrap().value;
            k += v * n.wk;
            g += v * n.wg;
        }
        assert!((k - exact).norm() < 1e-12 * exact.norm());
        assert!((g - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn graded_edges_cover_interval() {
        let e = graded_edges(160.0, &[80.0], 10.0, 30.0);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 160.0);
        assert!(e.contains(&80.0));
        assert!(e.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 30.0 + 1e-12));
        assert!(e[1] <= 10.0 / 64.0 + 1e-12);
    }
}
