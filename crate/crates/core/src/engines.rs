//! Compensation engines.
//!
//! Perturbation predistortion works on symbols: the first-order distortion of
//! symbol `κ` is
//! `u₁[κ] = jγP₀^{3/2} Σ C_{m,n} a_{κ+m} a*_{κ+m+n} a_{κ+n}` and the
//! second-order distortion sums the two quintuplet families. Both are field
//! amplitudes; dividing by `√P₀` gives the shift in symbol units.
//!
//! Digital back-propagation works on the received waveform.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{SplitStep, SsfmConfig};
use crate::coeffs::{CoefficientTable, Order};
use crate::dsp::{cd_apply, CdOperator};
use crate::signal::units::LinkParams;
use crate::signal::{ComplexEnvelope, SymbolFrame};
use crate::{Error, Result};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How symbols outside the frame are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EdgeMode {
    /// Zeros beyond both ends.
    #[default]
    Zero,
    /// The frame repeats periodically (matches a circular channel simulation).
    Cyclic,
}

/// How the second-order correction is combined with the first-order one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SoScheme {
    /// `ã = a − δ₁(a) − δ₂(a)`.
    #[default]
    Additive,
    /// `ã = a − δ₁(a − δ₁(a)) − δ₂(a)`: the channel inverse to second order.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredistortMode {
    Fo,
    So,
}

#[derive(Debug, Clone)]
pub struct PredistortConfig {
    pub fo_table: CoefficientTable,
    pub so_t1_table: Option<CoefficientTable>,
    pub so_t2_table: Option<CoefficientTable>,
    pub include_fo_in_so: bool,
    pub so_scheme: SoScheme,
    pub edges: EdgeMode,
    pub gamma: f64,
    pub peak_power: f64,
    /// Correct only the part of the distortion orthogonal to the symbols; the
    /// common nonlinear rotation is left to receiver phase recovery.
    pub remove_common_phase: bool,
}

impl PredistortConfig {
    pub fn fo(fo_table: CoefficientTable, gamma: f64, peak_power: f64) -> Self {
        PredistortConfig {
            fo_table,
            so_t1_table: None,
            so_t2_table: None,
            include_fo_in_so: true,
            so_scheme: SoScheme::Additive,
            edges: EdgeMode::Zero,
            gamma,
            peak_power,
            remove_common_phase: true,
        }
    }

    pub fn with_so(mut self, t1: CoefficientTable, t2: CoefficientTable) -> Self {
        self.so_t1_table = Some(t1);
        self.so_t2_table = Some(t2);
        self
    }

    pub fn validate(&self, mode: PredistortMode) -> Result<()> {
        if self.fo_table.order != Order::Fo {
            return Err(Error::config(format!(
                "first-order slot holds a {} table",
                self.fo_table.order
            )));
        }
        if !(self.gamma.is_finite() && self.peak_power.is_finite() && self.peak_power >= 0.0) {
            return Err(Error::config("gamma and peak power must be finite, P0 >= 0"));
        }
        if mode == PredistortMode::So {
            let (Some(t1), Some(t2)) = (&self.so_t1_table, &self.so_t2_table) else {
                return Err(Error::config("second-order mode needs both second-order tables"));
            };
            if !t1.order.is_term1() || !t2.order.is_term2() {
                return Err(Error::config(format!(
                    "second-order tables have orders {} and {}",
                    t1.order, t2.order
                )));
            }
            for t in [t1, t2] {
                if t.fingerprint != self.fo_table.fingerprint {
                    return Err(Error::StaleLut {
                        expected: u64::from_le_bytes(self.fo_table.fingerprint),
                        found: u64::from_le_bytes(t.fingerprint),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Symbol offsets and coefficient of one table entry, grouped by cluster.
struct Plan {
    /// Offsets `(m, l, n)` for first order; `(m, l, n, k, p)` for second.
    offsets: Vec<[i32; 5]>,
    values: Vec<Complex64>,
    /// `clusters[c]..clusters[c+1]` share `values[clusters[c]]` when quantized.
    clusters: Vec<usize>,
    quantized: bool,
    reach: i32,
}

impl Plan {
    fn new(table: &CoefficientTable) -> Self {
        let mut rows: Vec<(u32, [i32; 5], Complex64)> = table
            .entries
            .iter()
            .map(|e| {
                let [m, n, l, k] = e.index.map(i32::from);
                let off = match table.order {
                    Order::Fo => [m, m + n, n, 0, 0],
                    Order::SoTerm1 | Order::SoTerm1Printed | Order::SoTerm2Printed => [m, l, n, k, m + n - l + k],
                    Order::SoTerm2 => [m, l, n, k, m + n - l - k],
                };
                (e.cluster, off, e.value)
            })
            .collect();
        let quantized = table.is_quantized();
        if quantized {
            rows.sort_by_key(|r| r.0);
        }
        let mut clusters = vec![0];
        for i in 1..rows.len() {
            if !quantized || rows[i].0 != rows[i - 1].0 {
                clusters.push(i);
            }
        }
        clusters.push(rows.len());
        let reach = rows
            .iter()
            .flat_map(|r| r.1)
            .map(i32::abs)
            .max()
            .unwrap_or(0);
        Plan {
            offsets: rows.iter().map(|r| r.1).collect(),
            values: rows.iter().map(|r| r.2).collect(),
            clusters,
            quantized,
            reach,
        }
    }
}

/// Symbols padded by `reach` on both sides according to the edge mode.
fn padded(symbols: &[Complex64], reach: i32, edges: EdgeMode) -> Vec<Complex64> {
    let n = symbols.len() as i64;
    let r = reach as i64;
    (-r..n + r)
        .map(|i| {
            if (0..n).contains(&i) {
                symbols[i as usize]
            } else {
                match edges {
                    EdgeMode::Zero => Complex64::new(0.0, 0.0),
                    EdgeMode::Cyclic => symbols[i.rem_euclid(n) as usize],
                }
            }
        })
        .collect()
}

/// `Σ C·(symbol product)` for every position, using `product(a, base, offsets)`.
fn correlate<F>(symbols: &[Complex64], plan: &Plan, edges: EdgeMode, product: F) -> Vec<Complex64>
where
    F: Fn(&[Complex64], usize, &[i32; 5]) -> Complex64 + Sync,
{
    if symbols.is_empty() || plan.offsets.is_empty() {
        return vec![Complex64::new(0.0, 0.0); symbols.len()];
    }
    let a = padded(symbols, plan.reach, edges);
    let r = plan.reach as usize;
    (0..symbols.len())
        .into_par_iter()
        .map(|kappa| {
            let base = kappa + r;
            let mut acc = Complex64::new(0.0, 0.0);
            if plan.quantized {
                for c in plan.clusters.windows(2) {
                    let mut s = Complex64::new(0.0, 0.0);
                    for off in &plan.offsets[c[0]..c[1]] {
                        s += product(&a, base, off);
                    }
                    acc += plan.values[c[0]] * s;
                }
            } else {
                for (off, v) in plan.offsets.iter().zip(&plan.values) {
                    acc += v * product(&a, base, off);
                }
            }
            acc
        })
        .collect()
}

#[inline]
fn at(a: &[Complex64], base: usize, off: i32) -> Complex64 {
    a[(base as i64 + off as i64) as usize]
}

fn fo_sum(symbols: &[Complex64], table: &CoefficientTable, edges: EdgeMode) -> Vec<Complex64> {
    correlate(symbols, &Plan::new(table), edges, |a, b, o| {
        at(a, b, o[0]) * at(a, b, o[1]).conj() * at(a, b, o[2])
    })
}

fn so_sums(
    symbols: &[Complex64],
    t1: &CoefficientTable,
    t2: &CoefficientTable,
    edges: EdgeMode,
) -> Vec<Complex64> {
    let s1 = correlate(symbols, &Plan::new(t1), edges, |a, b, o| {
        at(a, b, o[0]) * at(a, b, o[1]).conj() * at(a, b, o[2]) * at(a, b, o[3]) * at(a, b, o[4]).conj()
    });
    let s2 = correlate(symbols, &Plan::new(t2), edges, |a, b, o| {
        at(a, b, o[0]).conj() * at(a, b, o[1]) * at(a, b, o[2]).conj() * at(a, b, o[3]) * at(a, b, o[4])
    });
    s1.iter().zip(&s2).map(|(x, y)| 2.0 * x + y).collect()
}

/// First-order distortion field `u₁` at every symbol, in √W.
pub fn fo_distortion(frame: &SymbolFrame, cfg: &PredistortConfig) -> Result<Vec<Complex64>> {
    cfg.validate(PredistortMode::Fo)?;
    let k = J * cfg.gamma * cfg.peak_power.powf(1.5);
    Ok(fo_sum(&frame.symbols, &cfg.fo_table, cfg.edges)
        .into_iter()
        .map(|s| k * s)
        .collect())
}

/// Second-order distortion field `u₂` at every symbol, in √W.
pub fn so_distortion(frame: &SymbolFrame, cfg: &PredistortConfig) -> Result<Vec<Complex64>> {
    cfg.validate(PredistortMode::So)?;
    let (t1, t2) = (cfg.so_t1_table.as_ref().unwrap(), cfg.so_t2_table.as_ref().unwrap());
    let k = cfg.gamma * cfg.gamma * cfg.peak_power.powf(2.5);
    Ok(so_sums(&frame.symbols, t1, t2, cfg.edges)
        .into_iter()
        .map(|s| k * s)
        .collect())
}

/// Symbol-domain shift `u/√P₀`, zero when `P₀ = 0`.
fn to_symbols(u: Vec<Complex64>, p0: f64) -> Vec<Complex64> {
    if p0 == 0.0 {
        return vec![Complex64::new(0.0, 0.0); u.len()];
    }
    let s = 1.0 / p0.sqrt();
    u.into_iter().map(|v| v * s).collect()
}

/// Least-squares coefficient of `a` in `d`.
fn common_coefficient(d: &[Complex64], a: &[Complex64]) -> Complex64 {
    let energy: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if energy == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    d.iter().zip(a).map(|(x, y)| x * y.conj()).sum::<Complex64>() / energy
}

fn remove_along(d: &mut [Complex64], a: &[Complex64]) {
    let c = common_coefficient(d, a);
    for (x, y) in d.iter_mut().zip(a) {
        *x -= c * y;
    }
}

/// Predistorted frame: the expected nonlinear distortion is subtracted.
///
/// With `remove_common_phase` both shifts keep only their part orthogonal to
/// the symbols: `δ₁ = φa + δ₁⊥` contributes `δ₁⊥`, and likewise for `δ₂`.
pub fn predistort(frame: &SymbolFrame, cfg: &PredistortConfig, mode: PredistortMode) -> Result<SymbolFrame> {
    cfg.validate(mode)?;
    let p0 = cfg.peak_power;
    let a = &frame.symbols;
    let d1 = |f: &SymbolFrame| -> Result<Vec<Complex64>> {
        let mut d = to_symbols(fo_distortion(f, cfg)?, p0);
        if cfg.remove_common_phase {
            remove_along(&mut d, a);
        }
        Ok(d)
    };
    let out: Vec<Complex64> = match mode {
        PredistortMode::Fo => a.iter().zip(d1(frame)?).map(|(x, d)| x - d).collect(),
        PredistortMode::So => {
            let mut d2 = to_symbols(so_distortion(frame, cfg)?, p0);
            let first = d1(frame)?;
            if cfg.remove_common_phase {
                remove_along(&mut d2, a);
            }
            if !cfg.include_fo_in_so {
                a.iter().zip(&d2).map(|(x, d)| x - d).collect()
            } else {
                let first = match cfg.so_scheme {
                    SoScheme::Additive => first,
                    SoScheme::Inverse => {
                        let mut shifted = frame.clone();
                        for (s, d) in shifted.symbols.iter_mut().zip(&first) {
                            *s -= d;
                        }
                        d1(&shifted)?
                    }
                };
                a.iter()
                    .zip(first.iter().zip(&d2))
                    .map(|(x, (f, s))| x - f - s)
                    .collect()
            }
        }
    };
    let inflation = out.iter().map(|s| s.norm_sqr()).sum::<f64>() / a.iter().map(|s| s.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);
    if inflation > 1.05 {
        log::warn!("predistortion raised mean symbol energy by {:.1}%", 100.0 * (inflation - 1.0));
    }
    let mut result = frame.clone();
    result.symbols = out;
    result.predistorted = true;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbpConfig {
    pub steps_per_span: usize,
    pub params: LinkParams,
}

/// Digital back-propagation of a received waveform through every span.
///
/// Each span first undoes the amplifier gain, then integrates the fiber
/// equation backward with the same loss, dispersion and nonlinearity.
pub fn dbp(env: &ComplexEnvelope, cfg: &DbpConfig) -> Result<ComplexEnvelope> {
    if cfg.steps_per_span == 0 {
        return Err(Error::config("DBP needs at least one step per span"));
    }
    cfg.params.validate()?;
    let p = &cfg.params;
    let ss = SsfmConfig {
        guard: crate::channel::GuardPolicy::Ignore,
        ..SsfmConfig::with_steps(cfg.steps_per_span)
    };
    let mut stepper = SplitStep::new(env.len(), env.sample_rate, p, &ss)?;
    let mut out = env.clone();
    let inv_gain = 1.0 / p.span_gain().sqrt();
    for _ in 0..p.n_spans {
        for v in out.samples.iter_mut() {
            *v *= inv_gain;
        }
        stepper.backward(&mut out.samples)?;
    }
    Ok(out)
}

/// Linear equalization of the whole link's dispersion.
pub fn edc(env: &ComplexEnvelope, params: &LinkParams) -> ComplexEnvelope {
    cd_apply(env, &CdOperator::compensate(params.beta2, params.total_length()))
}
