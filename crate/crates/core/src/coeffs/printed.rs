//! Kernels transcribed term by term from the published closed forms.
//!
//! These are kept verbatim, including the second-order polynomials, so that
//! tables built from them can be compared against the exact kernels in
//! [`super::gaussian`].

use num_complex::Complex64;

use super::gaussian::NodeForm;
use super::KernelParams;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// First-order integrand at `z`; returns the value and the principal root used.
pub fn fo_integrand(m: f64, n: f64, kp: &KernelParams, z: f64) -> (Complex64, Complex64) {
    let t2 = kp.symbol_period * kp.symbol_period / (kp.tau * kp.tau);
    let x = kp.beta2 * z / (kp.tau * kp.tau);
    let den = Complex64::new(1.0 + 3.0 * x * x, 2.0 * x);
    let root = den.sqrt();
    let e = -3.0 * m * n * t2 / Complex64::new(1.0, 3.0 * x) - (m - n) * (m - n) * t2 / den;
    (kp.loss(z) * e.exp() / root, root)
}

struct T1Poly;

impl T1Poly {
    fn all(v: [f64; 4]) -> [f64; 9] {
        let [m, n, l, k] = v;
        let cc = 7.0 / 4.0 * l * l + (-k / 2.0 - 2.0 * m - 2.0 * n) * l + 3.0 / 4.0 * m * m
            + (k / 2.0 + n) * m
            + 0.5 * n * k
            + 0.5 * k * k
            + 3.0 / 4.0 * n * n;
        let d = -l * l + (-k + m / 2.0 + n / 2.0) * l + 0.5 * m * m + (k - n / 2.0) * m + n * k + 0.5 * n * n + k * k;
        let e = -5.0 * l * l + (7.0 / 2.0 * k + 6.0 * (m + n)) * l - 2.0 * m * m
            + 7.0 / 2.0 * (-3.0 / 7.0 * k - 6.0 / 7.0 * n) * m
            - 0.5 * (3.0 * k + 4.0 * n) * n;
        let f = 0.5 * l * l - (m + n + k) * l + 0.5 * m * m + (n + k) * m + n * k + 0.5 * n * n + k * k;
        let g = -10.0 / 3.0 * l * l + (10.0 / 3.0 * k + 4.0 * (m + n)) * l - 2.0 / 3.0 * m * m
            + 10.0 / 3.0 * (-3.0 / 5.0 * k - n) * m
            - 2.0 / 3.0 * (3.0 * k + n) * n;
        let h = 7.0 / 2.0 * l * l + 7.0 / 2.0 * (-4.0 / 3.0 * m - 4.0 / 3.0 * n) * l + 2.0 * n * m
            + 13.0 / 6.0 * (m + n * n);
        let i = k * (l - m - n);
        let jj = 10.0 / 3.0 * l * l + 1.0 / 3.0 * (-13.0 * (m + n)) * l + m * m + 11.0 / 3.0 * n * m + n * n;
        let kk = (l - m - n) * (l - m - n);
        [cc, d, e, f, g, h, i, jj, kk]
    }
}

struct T1Geometry {
    a: Complex64,
    b: Complex64,
    root: Complex64,
}

fn t1_geometry(kp: &KernelParams, z: f64, s: f64) -> T1Geometry {
    let (tau, b2) = (kp.tau, kp.beta2);
    let (t2, t4, t6) = (tau * tau, tau.powi(4), tau.powi(6));
    let a = J * t6 - 3.0 * b2 * (s + 2.0 / 3.0 * z) * t4 - 6.0 * J * b2 * b2 * (s - 7.0 / 6.0 * z) * z * t2
        - 5.0 * s * z * z * b2.powi(3);
    let b = J * t2 + b2 * s;
    T1Geometry {
        a,
        b,
        root: (-a * b).sqrt(),
    }
}

/// Coefficients multiplying the nine polynomials inside the exponent.
fn t1_weights(kp: &KernelParams, z: f64, s: f64, g: &T1Geometry) -> [Complex64; 9] {
    let (tau, b) = (kp.tau, kp.beta2);
    let t = kp.symbol_period;
    let f = 2.0 * t * t / (tau * tau * g.a * g.b);
    let (t2, t4, t6, t8) = (tau * tau, tau.powi(4), tau.powi(6), tau.powi(8));
    [
        f * t8,
        f * J * b * s * t6,
        -f * J * b * z * t6,
        f * 1.5 * b * b * s * s * t4,
        -f * 1.5 * b * b * s * z * t4,
        f * 1.5 * b * b * z * z * t4,
        f * 1.5 * J * b.powi(3) * s * z * s * t2,
        -f * 1.5 * J * b.powi(3) * s * z * z * t2,
        f * 0.25 * s * s * z * z * b.powi(4),
    ]
}

/// Literal first second-order integrand at `(z, s)`, prefactor included.
/// Also returns the principal root and `|Ā·B̄|` for the singularity check.
pub fn term1_integrand(v: [f64; 4], kp: &KernelParams, z: f64, s: f64) -> (Complex64, Complex64, f64) {
    let g = t1_geometry(kp, z, s);
    let w = t1_weights(kp, z, s, &g);
    let p = T1Poly::all(v);
    let e: Complex64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
    let val = -kp.tau.powi(4) * kp.loss(z) * kp.loss(s) / g.root * e.exp();
    (val, g.root, (g.a * g.b).norm())
}

struct T2Geometry {
    bh: Complex64,
    eh: Complex64,
    fh: Complex64,
    r_a: Complex64,
    r_bc: Complex64,
    r_bd: Complex64,
}

fn t2_geometry(kp: &KernelParams, z: f64, s: f64) -> T2Geometry {
    let (tau, b) = (kp.tau, kp.beta2);
    let (t2, t4) = (tau * tau, tau.powi(4));
    let ah = J * t4 + J * s * z * b * b + 3.0 * t2 * b * (s - z);
    let bh = t4 - 3.0 * J * (s - 7.0 / 3.0 * z) * b * t2 + 5.0 * s * z * b * b;
    let ch = J * t2 + b * z;
    let dh = t4 + s * z * b * b + 3.0 * J * t2 * b * (s - z);
    let eh = J * b * z - t2;
    let fh = J * t2 - b * s;
    let bb = J * t2 + b * s;
    T2Geometry {
        bh,
        eh,
        fh,
        r_a: ah.sqrt(),
        r_bc: (bh * ch).sqrt(),
        r_bd: (-bb * dh).sqrt(),
    }
}

struct T2Poly;

impl T2Poly {
    fn all(v: [f64; 4]) -> [f64; 9] {
        let [m, n, l, k] = v;
        let p = m + n - l + k;
        let g = -p * p - k * k - 6.0 * l * l + 6.0 * (m + n) * l - 2.0 * (m * m + m * n + n * n);
        let h = -3.0 * p * p + (k + 2.0 * (2.0 * l - m - n)) * p - 3.0 * k * k + 2.0 * (2.0 * l - m - n) * k
            - 2.0 * l * l
            + 2.0 * (m + n) * l
            - 2.0 * (m * m - m * n + n * n);
        let i = p * p + k * k - 3.0 * (-n + l) * (l - m);
        let jj = p * p + (2.0 * k - 8.0 / 3.0 * l + 4.0 / 3.0 * m + 4.0 / 3.0 * n) * p + k * k
            - 4.0 / 3.0 * (2.0 * l - m - n) * k
            + 10.0 / 3.0 * l * l
            - 10.0 / 3.0 * (m + n) * l
            + 2.0 * m * m
            + 2.0 * n * n
            - 2.0 / 3.0 * m * n;
        let kk = 4.0 / 3.0 * p * p + 4.0 / 3.0 * (k - 2.0 * l + m + n) * p + 4.0 / 3.0 * (n - l + k) * (m - l + k);
        let ll = p * p + k * k;
        let mm = p * p + 2.0 * (k - 2.0 * l + m + n) * p + k * k - 2.0 * (2.0 * l - m - n) * k
            + 5.0 * (-n + l) * (l - m);
        let nn = p * p - 3.0 * p * k + k * k;
        let o = (m + n - l + 2.0 * k) * (m + n - l + 2.0 * k);
        [g, h, i, jj, kk, ll, mm, nn, o]
    }
}

fn t2_weights(kp: &KernelParams, z: f64, s: f64, g: &T2Geometry) -> [Complex64; 9] {
    let (tau, b) = (kp.tau, kp.beta2);
    let t = kp.symbol_period;
    let f = -J * t * t / (2.0 * tau * tau * g.bh * g.eh * g.fh);
    let (t2, t4, t6, t8) = (tau * tau, tau.powi(4), tau.powi(6), tau.powi(8));
    [
        f * t8,
        f * 2.0 * J * b * z * t6,
        f * 2.0 * J * b * s * t6,
        -f * 3.0 * b * b * z * z * t4,
        f * 3.0 * b * b * s * z * t4,
        -f * 3.0 * b * b * s * s * t4,
        -f * 2.0 * J * b.powi(3) * s * z * z * t2,
        -f * 2.0 * J * b.powi(3) * s * z * s * t2,
        -f * s * s * z * z * b.powi(4),
    ]
}

fn t2_prefactor(kp: &KernelParams, z: f64, s: f64, g: &T2Geometry) -> Complex64 {
    3f64.sqrt() * kp.tau.powi(4) * kp.loss(z) * kp.loss(s) * g.r_a / (g.r_bc * g.r_bd.conj())
}

/// Literal second second-order integrand at `(z, s)`, prefactor included.
pub fn term2_integrand(v: [f64; 4], kp: &KernelParams, z: f64, s: f64) -> (Complex64, [Complex64; 3], f64) {
    let g = t2_geometry(kp, z, s);
    let w = t2_weights(kp, z, s, &g);
    let p = T2Poly::all(v);
    let e: Complex64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
    let val = t2_prefactor(kp, z, s, &g) * e.exp();
    (val, [g.r_a, g.r_bc, g.r_bd], (g.bh * g.eh * g.fh).norm())
}

type Parts = (f64, [f64; 4], [[f64; 4]; 4]);

/// Splits a quadratic polynomial in `v` into constant, linear and symmetric
/// quadratic parts by probing it at a few integer points.
fn decompose<const P: usize>(poly: impl Fn([f64; 4]) -> [f64; P]) -> [Parts; P] {
    let zero = poly([0.0; 4]);
    let mut out = [(0.0, [0.0; 4], [[0.0; 4]; 4]); P];
    let mut plus = [[0.0; P]; 4];
    for i in 0..4 {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        let pp = poly(e);
        e[i] = -1.0;
        let pm = poly(e);
        plus[i] = pp;
        for idx in 0..P {
            out[idx].0 = zero[idx];
            out[idx].1[i] = 0.5 * (pp[idx] - pm[idx]);
            out[idx].2[i][i] = 0.5 * (pp[idx] + pm[idx]) - zero[idx];
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            e[j] = 1.0;
            let pij = poly(e);
            for idx in 0..P {
                let cross = 0.5 * (pij[idx] - plus[i][idx] - plus[j][idx] + zero[idx]);
                out[idx].2[i][j] = cross;
                out[idx].2[j][i] = cross;
            }
        }
    }
    out
}

fn combine<const P: usize>(
    parts: &[Parts; P],
    weights: &[Complex64; P],
    prefactor: Complex64,
) -> NodeForm<4> {
    let mut c0 = c(0.0);
    let mut g = [c(0.0); 4];
    let mut q = [[c(0.0); 4]; 4];
    for (part, w) in parts.iter().zip(weights) {
        c0 += w * part.0;
        for i in 0..4 {
            g[i] += w * part.1[i];
            for j in 0..4 {
                q[i][j] += w * part.2[i][j];
            }
        }
    }
    NodeForm {
        base: prefactor * c0.exp(),
        g,
        q,
    }
}

/// Node forms for the transcribed second-order kernels.
pub(crate) struct PrintedForms {
    t1: [Parts; 9],
    t2: [Parts; 9],
}

impl PrintedForms {
    pub fn new() -> Self {
        PrintedForms {
            t1: decompose(T1Poly::all),
            t2: decompose(T2Poly::all),
        }
    }

    pub fn term1(&self, kp: &KernelParams, z: f64, s: f64) -> (NodeForm<4>, [Complex64; 3], f64) {
        let g = t1_geometry(kp, z, s);
        let w = t1_weights(kp, z, s, &g);
        let pre = -kp.tau.powi(4) * kp.loss(z) * kp.loss(s) / g.root;
        (combine(&self.t1, &w, pre), [g.root, g.root, g.root], (g.a * g.b).norm())
    }

    pub fn term2(&self, kp: &KernelParams, z: f64, s: f64) -> (NodeForm<4>, [Complex64; 3], f64) {
        let g = t2_geometry(kp, z, s);
        let w = t2_weights(kp, z, s, &g);
        let pre = t2_prefactor(kp, z, s, &g);
        (combine(&self.t2, &w, pre), [g.r_a, g.r_bc, g.r_bd], (g.bh * g.eh * g.fh).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp() -> KernelParams {
        KernelParams::new(-2.047e-26, 4.605e-5, 80e3, 1.0 / 32e9, 0.5 / 32e9).unwrap()
    }

    #[test]
    fn node_forms_match_literal_integrands() {
        let forms = PrintedForms::new();
        let k = kp();
        for (z, s) in [(1e3, 0.2e3), (40e3, 31e3), (79e3, 2e3)] {
            let (f1, _, _) = forms.term1(&k, z, s);
            let (f2, _, _) = forms.term2(&k, z, s);
            for v in [[0, 0, 0, 0], [1, 0, 0, 0], [2, -1, 1, 3], [-2, 3, 0, -1]] {
                let vf = v.map(|x| x as f64);
                let a = term1_integrand(vf, &k, z, s).0;
                let b = f1.eval(&v);
                assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-300), "{v:?} {a} {b}");
                let a = term2_integrand(vf, &k, z, s).0;
                let b = f2.eval(&v);
                assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-300), "{v:?} {a} {b}");
            }
        }
    }

    #[test]
    fn fo_literal_matches_gaussian_propagation() {
        let k = kp();
        for z in [0.0, 5e3, 77e3] {
            let (f, _) = super::super::gaussian::fo_node(&k, z);
            for (m, n) in [(0, 0), (1, 2), (-3, 1), (4, -4)] {
                let a = fo_integrand(m as f64, n as f64, &k, z).0;
                let b = f.eval(&[m, n]);
                assert!((a - b).norm() <= 1e-12 * a.norm(), "{z} {m} {n} {a} {b}");
            }
        }
    }

    #[test]
    fn zero_dispersion_prefactors() {
        let k = KernelParams::new(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        let (v1, _, _) = term1_integrand([0.0; 4], &k, 0.4, 0.1);
        assert!((v1 + 1.0).norm() < 1e-12);
        let (v2, _, _) = term2_integrand([0.0; 4], &k, 0.4, 0.1);
        let expect = Complex64::from_polar(3f64.sqrt(), -std::f64::consts::FRAC_PI_4);
        assert!((v2 - expect).norm() < 1e-12);
    }
}
