//! Closed-form propagation of Gaussian pulses under dispersion.
//!
//! A field `exp(-A t² + B·t + C)` stays in this family under products,
//! conjugation and the linear dispersion operator, so every kernel reduces to
//! evaluating one such field at `t = 0`. The pulse positions are integer
//! multiples of `T` given by a linear map of the index vector `v`, so `B` is
//! linear and `C` quadratic in `v`.

use num_complex::Complex64;

use super::KernelParams;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Value at one quadrature node as a function of the index vector:
/// `base · exp(gᵀv + vᵀ Q v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NodeForm<const D: usize> {
    pub base: Complex64,
    pub g: [Complex64; D],
    pub q: [[Complex64; D]; D],
}

impl<const D: usize> NodeForm<D> {
    pub fn eval(&self, v: &[i32; D]) -> Complex64 {
        let mut e = ZERO;
        for i in 0..D {
            let vi = v[i] as f64;
            e += self.g[i] * vi;
            for j in 0..D {
                e += self.q[i][j] * (vi * v[j] as f64);
            }
        }
        self.base * e.exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Gauss<const D: usize> {
    a: Complex64,
    b: [Complex64; D],
    c0: Complex64,
    q: [[Complex64; D]; D],
    /// Principal square roots taken so far, for the continuity monitor.
    roots: [Complex64; 3],
    n_roots: usize,
}

impl<const D: usize> Gauss<D> {
    /// Unit-peak pulse `exp(-(t - x·T)²/2τ²)` with `x = posᵀv`.
    pub fn pulse(pos: [f64; D], t: f64, tau: f64) -> Self {
        let a = Complex64::new(1.0 / (2.0 * tau * tau), 0.0);
        let mut b = [ZERO; D];
        let mut q = [[ZERO; D]; D];
        for i in 0..D {
            b[i] = Complex64::new(pos[i] * t / (tau * tau), 0.0);
            for j in 0..D {
                q[i][j] = Complex64::new(-pos[i] * pos[j] * t * t / (2.0 * tau * tau), 0.0);
            }
        }
        Gauss {
            a,
            b,
            c0: ZERO,
            q,
            roots: [Complex64::new(1.0, 0.0); 3],
            n_roots: 0,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = *self;
        out.a += o.a;
        out.c0 += o.c0;
        for i in 0..D {
            out.b[i] += o.b[i];
            for j in 0..D {
                out.q[i][j] += o.q[i][j];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = *self;
        out.a = self.a.conj();
        out.c0 = self.c0.conj();
        for i in 0..D {
            out.b[i] = self.b[i].conj();
            for j in 0..D {
                out.q[i][j] = self.q[i][j].conj();
            }
        }
        out
    }

    /// Linear propagation over `d = β₂·Δz`: width `w → w - j·d` with `w = 1/2A`.
    pub fn disperse(&self, d: f64) -> Self {
        let w = 0.5 / self.a;
        let w2 = w - Complex64::new(0.0, d);
        let ratio = w / w2;
        let mut out = *self;
        out.a = 0.5 / w2;
        // vᵀQv gains (w/2)(1 - w/w2)·(bᵀv)².
        let k = w * 0.5 * (1.0 - ratio);
        for i in 0..D {
            out.b[i] = self.b[i] * ratio;
            for j in 0..D {
                out.q[i][j] = self.q[i][j] + k * self.b[i] * self.b[j];
            }
        }
        let root = ratio.sqrt();
        out.c0 = self.c0 + root.ln();
        if out.n_roots < 3 {
            out.roots[out.n_roots] = root;
            out.n_roots += 1;
        }
        out
    }

    pub fn at_zero(&self, scale: Complex64) -> NodeForm<D> {
        NodeForm {
            base: scale * self.c0.exp(),
            g: [ZERO; D],
            q: self.q,
        }
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots[..self.n_roots]
    }
}

fn unit<const D: usize>(i: usize) -> [f64; D] {
    let mut p = [0.0; D];
    p[i] = 1.0;
    p
}

#[cfg(test)]
/// First-order integrand at `z` over `v = (m, n)`: the dispersed triplet
/// `g_m g*_{m+n} g_n` brought back to the input and sampled at zero.
pub(crate) fn fo_node(kp: &KernelParams, z: f64) -> (NodeForm<2>, [Complex64; 1]) {
    let d = kp.beta2 * z;
    let g = |p| Gauss::<2>::pulse(p, kp.symbol_period, kp.tau).disperse(d);
    let gm = g(unit(0));
    let gn = g(unit(1));
    let gl = g([1.0, 1.0]);
    let out = gm.mul(&gl.conj()).mul(&gn).disperse(-d);
    let root = out.roots()[out.n_roots - 1];
    (out.at_zero(Complex64::new(kp.loss(z), 0.0)), [root])
}

/// Ghost pulse generated at `s` by `g_m g*_l g_n`, propagated to `z`.
fn ghost(kp: &KernelParams, z: f64, s: f64) -> Gauss<4> {
    let g = |p| Gauss::<4>::pulse(p, kp.symbol_period, kp.tau).disperse(kp.beta2 * s);
    let (gm, gn, gl) = (g(unit(0)), g(unit(1)), g(unit(2)));
    gm.mul(&gl.conj()).mul(&gn).disperse(kp.beta2 * (z - s))
}

/// Second-order intra-channel XPM integrand over `v = (m, n, l, k)` with the
/// fifth pulse at `p = m + n - l + k`.
pub(crate) fn term1_node(kp: &KernelParams, z: f64, s: f64) -> (NodeForm<4>, [Complex64; 3]) {
    let d = kp.beta2 * z;
    let u1 = ghost(kp, z, s);
    let gk = Gauss::<4>::pulse(unit(3), kp.symbol_period, kp.tau).disperse(d);
    let gp = Gauss::<4>::pulse([1.0, 1.0, -1.0, 1.0], kp.symbol_period, kp.tau).disperse(d);
    let out = gk.mul(&gp.conj()).mul(&u1).disperse(-d);
    let scale = -kp.loss(z) * kp.loss(s);
    (out.at_zero(Complex64::new(scale, 0.0)), probe(&u1, &out))
}

/// Second-order intra-channel FWM integrand over `v = (m, n, l, k)` with the
/// fifth pulse at `p = m + n - l - k`.
pub(crate) fn term2_node(kp: &KernelParams, z: f64, s: f64) -> (NodeForm<4>, [Complex64; 3]) {
    let d = kp.beta2 * z;
    let u1 = ghost(kp, z, s);
    let gk = Gauss::<4>::pulse(unit(3), kp.symbol_period, kp.tau).disperse(d);
    let gp = Gauss::<4>::pulse([1.0, 1.0, -1.0, -1.0], kp.symbol_period, kp.tau).disperse(d);
    let out = gk.mul(&gp).mul(&u1.conj()).disperse(-d);
    let scale = kp.loss(z) * kp.loss(s);
    (out.at_zero(Complex64::new(scale, 0.0)), probe(&u1, &out))
}

fn probe(u1: &Gauss<4>, out: &Gauss<4>) -> [Complex64; 3] {
    let r = u1.roots();
    [r[r.len() - 1], out.roots()[out.n_roots - 1], r[0]]
}
