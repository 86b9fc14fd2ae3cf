//! Perturbation coefficients: kernel evaluation, table construction and
//! persistence.
//!
//! First-order coefficients weight symbol triplets `a_m a*_{m+n} a_n`; the two
//! second-order families weight quintuplets. All coefficients are independent
//! of `γ` and of the launch power.

mod gaussian;
mod lut;
pub mod printed;
pub mod quadrature;
mod table;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::signal::units::LinkParams;
use crate::{Error, Result};

pub use lut::{load_table, read_table, save_table, LUT_MAGIC, LUT_VERSION};
pub use quadrature::{Estimate, QuadratureRule, QuadratureSpec};
pub use table::{build_table, prune_table, quantize_table, CoefficientTable, TableEntry};

use quadrature::{adaptive, adaptive_triangle, Sample};

/// Constants entering the kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub beta2: f64,
    /// Power attenuation coefficient, 1/m.
    pub alpha: f64,
    /// Total integration length, m.
    pub length: f64,
    pub symbol_period: f64,
    pub tau: f64,
    /// When set, the loss profile restarts every `loss_period` metres
    /// (lumped amplification). `None` is a single continuous span.
    pub loss_period: Option<f64>,
}

impl KernelParams {
    pub fn new(beta2: f64, alpha: f64, length: f64, symbol_period: f64, tau: f64) -> Result<Self> {
        let kp = KernelParams {
            beta2,
            alpha,
            length,
            symbol_period,
            tau,
            loss_period: None,
        };
        kp.validate()?;
        Ok(kp)
    }

    /// Kernel constants for the whole link with the loss restarting every span.
    pub fn from_link(link: &LinkParams) -> Result<Self> {
        KernelParams::new(
            link.beta2,
            link.alpha,
            link.total_length(),
            link.symbol_period,
            link.tau,
        )?
        .with_loss_period(Some(link.span_length))
    }

    pub fn with_loss_period(mut self, period: Option<f64>) -> Result<Self> {
        self.loss_period = period.filter(|p| *p < self.length);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("kernel {name} must be positive, got {v}")))
            }
        };
        positive(self.tau, "tau")?;
        positive(self.symbol_period, "symbol period")?;
        positive(self.length, "length")?;
        if let Some(p) = self.loss_period {
            positive(p, "loss period")?;
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) || !self.beta2.is_finite() {
            return Err(Error::config("kernel alpha must be ≥ 0 and beta2 finite"));
        }
        Ok(())
    }

    /// Power loss factor accumulated at `z`.
    pub fn loss(&self, z: f64) -> f64 {
        let z = match self.loss_period {
            Some(p) => z - p * (z / p).floor(),
            None => z,
        };
        (-self.alpha * z).exp()
    }

    /// Interior amplifier positions (kinks of the loss profile).
    pub fn breaks(&self) -> Vec<f64> {
        match self.loss_period {
            Some(p) => (1..)
                .map(|i| i as f64 * p)
                .take_while(|z| *z < self.length * (1.0 - 1e-12))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Length over which dispersion broadens the pulse appreciably.
    pub fn dispersion_length(&self) -> f64 {
        if self.beta2 == 0.0 {
            0.0
        } else {
            self.tau * self.tau / self.beta2.abs()
        }
    }

    /// First eight bytes of SHA-256 over the parameter bit patterns.
    pub fn fingerprint(&self) -> [u8; 8] {
        let mut h = Sha256::new();
        for v in [self.beta2, self.alpha, self.length, self.symbol_period, self.tau] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.loss_period.unwrap_or(0.0).to_bits().to_le_bytes());
        let d = h.finalize();
        let mut out = [0u8; 8];
        out.copy_from_slice(&d[..8]);
        out
    }
}

/// Coefficient family stored in a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Fo,
    /// Intra-channel XPM, exact Gaussian kernel.
    SoTerm1,
    /// Intra-channel FWM, exact Gaussian kernel.
    SoTerm2,
    /// Intra-channel XPM, transcribed closed form.
    SoTerm1Printed,
    /// Intra-channel FWM, transcribed closed form.
    SoTerm2Printed,
}

impl Order {
    pub fn code(self) -> u8 {
        match self {
            Order::Fo => 0,
            Order::SoTerm1 => 1,
            Order::SoTerm2 => 2,
            Order::SoTerm1Printed => 3,
            Order::SoTerm2Printed => 4,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => Order::Fo,
            1 => Order::SoTerm1,
            2 => Order::SoTerm2,
            3 => Order::SoTerm1Printed,
            4 => Order::SoTerm2Printed,
            _ => return Err(Error::LutFormat(format!("unknown order code {c}"))),
        })
    }

    /// Number of indices per entry.
    pub fn dims(self) -> usize {
        if self == Order::Fo {
            2
        } else {
            4
        }
    }

    pub fn is_term1(self) -> bool {
        matches!(self, Order::SoTerm1 | Order::SoTerm1Printed)
    }

    pub fn is_term2(self) -> bool {
        matches!(self, Order::SoTerm2 | Order::SoTerm2Printed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Order::Fo => "fo",
            Order::SoTerm1 => "so1",
            Order::SoTerm2 => "so2",
            Order::SoTerm1Printed => "so1-printed",
            Order::SoTerm2Printed => "so2-printed",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Order::Fo,
            Order::SoTerm1,
            Order::SoTerm2,
            Order::SoTerm1Printed,
            Order::SoTerm2Printed,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
        .ok_or_else(|| Error::config(format!("unknown coefficient order `{s}`")))
    }
}

/// Natural magnitude of a coefficient of this order; `abs_tol` is relative to it.
pub(crate) fn scale(order: Order, kp: &KernelParams) -> f64 {
    match order {
        Order::Fo => kp.length,
        _ => 0.5 * kp.length * kp.length,
    }
}

/// First-order coefficient `C_{m,n}`.
pub fn fo_coefficient(m: i32, n: i32, kp: &KernelParams, q: &QuadratureSpec) -> Result<Complex64> {
    fo_estimate(m, n, kp, q).map(|e| e.value)
}

pub fn fo_estimate(m: i32, n: i32, kp: &KernelParams, q: &QuadratureSpec) -> Result<Estimate> {
    let (mf, nf) = (m as f64, n as f64);
    let context = || format!("first-order coefficient ({m}, {n})");
    adaptive(
        |z| {
            let (v, root) = printed::fo_integrand(mf, nf, kp, z);
            Ok(Sample::with_roots(v, &[root]))
        },
        0.0,
        kp.length,
        &fo_breaks(kp),
        q.rel_tol,
        q.abs_tol * scale(Order::Fo, kp),
        q.max_subdivisions,
        &context,
    )
}

fn fo_breaks(kp: &KernelParams) -> Vec<f64> {
    let mut b = kp.breaks();
    let ld = kp.dispersion_length();
    if ld > 0.0 {
        b.extend(
            (0..8)
                .map(|i| ld * 2f64.powi(i - 3))
                .filter(|z| *z < kp.length),
        );
        b.sort_by(f64::total_cmp);
    }
    b
}

/// Transcribed intra-channel XPM coefficient.
pub fn so_term1_coefficient(idx: [i32; 4], kp: &KernelParams, q: &QuadratureSpec) -> Result<Complex64> {
    coefficient(Order::SoTerm1Printed, idx, kp, q).map(|e| e.value)
}

/// Transcribed intra-channel FWM coefficient.
pub fn so_term2_coefficient(idx: [i32; 4], kp: &KernelParams, q: &QuadratureSpec) -> Result<Complex64> {
    coefficient(Order::SoTerm2Printed, idx, kp, q).map(|e| e.value)
}

/// Any coefficient by order, with its error estimate. First-order tuples use
/// `idx[0..2]`.
pub fn coefficient(order: Order, idx: [i32; 4], kp: &KernelParams, q: &QuadratureSpec) -> Result<Estimate> {
    kp.validate()?;
    if order == Order::Fo {
        return fo_estimate(idx[0], idx[1], kp, q);
    }
    match q.rule {
        QuadratureRule::AdaptiveNested => so_adaptive(order, idx, kp, q),
        QuadratureRule::TensorTriangle => table::so_tensor_single(order, idx, kp, q),
    }
}

fn so_adaptive(order: Order, idx: [i32; 4], kp: &KernelParams, q: &QuadratureSpec) -> Result<Estimate> {
    let vf = idx.map(|x| x as f64);
    let context = || format!("{order} coefficient {idx:?}");
    let floor = 1e-12 * kp.tau.powi(8);
    let breaks = fo_breaks(kp);
    let spec = QuadratureSpec {
        abs_tol: q.abs_tol * scale(order, kp),
        ..*q
    };
    let integrand = |z: f64, s: f64| -> Result<Sample> {
        match order {
            Order::SoTerm1Printed => {
                let (v, root, mag) = printed::term1_integrand(vf, kp, z, s);
                singular(mag, floor, &context)?;
                Ok(Sample::with_roots(v, &[root]))
            }
            Order::SoTerm2Printed => {
                let (v, roots, mag) = printed::term2_integrand(vf, kp, z, s);
                singular(mag, floor, &context)?;
                Ok(Sample::with_roots(v, &roots))
            }
            Order::SoTerm1 => {
                let (f, roots) = gaussian::term1_node(kp, z, s);
                Ok(Sample::with_roots(f.eval(&idx), &roots))
            }
            Order::SoTerm2 => {
                let (f, roots) = gaussian::term2_node(kp, z, s);
                Ok(Sample::with_roots(f.eval(&idx), &roots))
            }
            Order::Fo => unreachable!("handled by caller"),
        }
    };
    adaptive_triangle(integrand, kp.length, &breaks, &spec, &context)
}

fn singular(mag: f64, floor: f64, context: &dyn Fn() -> String) -> Result<()> {
    if mag < floor {
        Err(Error::Singularity {
            context: context(),
            magnitude: mag,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_profile_restarts_each_period() {
        let kp = KernelParams::new(0.0, 1e-4, 300.0, 1.0, 0.5)
            .unwrap()
            .with_loss_period(Some(100.0))
            .unwrap();
        assert!((kp.loss(50.0) - kp.loss(150.0)).abs() < 1e-15);
        assert!((kp.loss(99.999) - (-1e-4f64 * 99.999).exp()).abs() < 1e-12);
        assert_eq!(kp.breaks(), vec![100.0, 200.0]);
    }

    #[test]
    fn period_longer_than_link_is_dropped() {
        let kp = KernelParams::new(0.0, 1e-4, 300.0, 1.0, 0.5)
            .unwrap()
            .with_loss_period(Some(300.0))
            .unwrap();
        assert_eq!(kp.loss_period, None);
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = KernelParams::new(-2e-26, 4.6e-5, 8e4, 3.125e-11, 1.5625e-11).unwrap();
        let mut seen = vec![base.fingerprint()];
        for kp in [
            KernelParams { tau: 1.6e-11, ..base },
            KernelParams { beta2: -2.1e-26, ..base },
            KernelParams { loss_period: Some(4e4), ..base },
        ] {
            let f = kp.fingerprint();
            assert!(!seen.contains(&f));
            seen.push(f);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(KernelParams::new(0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(0.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn order_codes_round_trip() {
        for c in 0..5u8 {
            let o = Order::from_code(c).unwrap();
            assert_eq!(o.code(), c);
            assert_eq!(o.as_str().parse::<Order>().unwrap(), o);
        }
        assert!(Order::from_code(9).is_err());
    }
}
