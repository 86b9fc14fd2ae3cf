//! Transmitter and receiver front end: pulse shaping, matched filtering and
//! frequency-domain chromatic-dispersion operators.
//!
//! Every filter here is circular over the frame, matching the periodic
//! boundary of the split-step channel.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::{angular_frequencies, FftPair};
use crate::signal::{ComplexEnvelope, SymbolFrame};
use crate::{Error, Result};

/// Root-raised-cosine pulse, unit energy (Σ taps² = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RrcFilter {
    pub roll_off: f64,
    pub span_symbols: usize,
    pub samples_per_symbol: usize,
    pub taps: Vec<f64>,
}

fn rrc_value(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && ((4.0 * beta * t).abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

impl RrcFilter {
    pub fn new(roll_off: f64, span_symbols: usize, samples_per_symbol: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&roll_off) {
            return Err(Error::config(format!("roll-off must be in [0, 1], got {roll_off}")));
        }
        if span_symbols == 0 {
            return Err(Error::config("RRC span must be at least one symbol"));
        }
        check_sps(samples_per_symbol, roll_off)?;
        let half = span_symbols * samples_per_symbol / 2;
        let mut taps: Vec<f64> = (0..=2 * half)
            .map(|i| rrc_value((i as f64 - half as f64) / samples_per_symbol as f64, roll_off))
            .collect();
        let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
        for t in &mut taps {
            *t /= norm;
        }
        Ok(RrcFilter {
            roll_off,
            span_symbols,
            samples_per_symbol,
            taps,
        })
    }

    /// Circular frequency response for a frame of `len` samples, taps centred on sample 0.
    pub fn frequency_response(&self, len: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        let half = (self.taps.len() / 2) as isize;
        for (i, &t) in self.taps.iter().enumerate() {
            let idx = (i as isize - half).rem_euclid(len as isize) as usize;
            h[idx] += t;
        }
        let mut fft = FftPair::new(len);
        fft.forward(&mut h);
        h
    }
}

fn check_sps(sps: usize, roll_off: f64) -> Result<()> {
    if sps < 2 || (sps as f64) < 1.0 + roll_off {
        return Err(Error::Aliasing(format!(
            "{sps} samples/symbol cannot carry a pulse with roll-off {roll_off}"
        )));
    }
    Ok(())
}

/// Amplitude that gives a unit-energy symbol stream the mean power `launch_power`.
pub fn nominal_amplitude(filter: &RrcFilter, launch_power: f64) -> f64 {
    let energy: f64 = filter.taps.iter().map(|t| t * t).sum();
    (launch_power * filter.samples_per_symbol as f64 / energy).sqrt()
}

/// Upsample and filter with a fixed amplitude factor.
pub fn shape_scaled(frame: &SymbolFrame, filter: &RrcFilter, amplitude: f64) -> Result<ComplexEnvelope> {
    let sps = filter.samples_per_symbol;
    check_sps(sps, filter.roll_off)?;
    if frame.is_empty() {
        return Err(Error::config("cannot shape an empty frame"));
    }
    let len = frame.len() * sps;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, a) in frame.symbols.iter().enumerate() {
        buf[k * sps] = a * amplitude;
    }
    let h = filter.frequency_response(len);
    FftPair::new(len).filter(&mut buf, &h);
    ComplexEnvelope::new(buf, frame.symbol_rate * sps as f64)
}

/// Pulse-shape `frame` and normalize the envelope to `launch_power` watts.
pub fn shape(frame: &SymbolFrame, filter: &RrcFilter, launch_power: f64) -> Result<ComplexEnvelope> {
    let mut env = shape_scaled(frame, filter, 1.0)?;
    env.normalize_power(launch_power);
    Ok(env)
}

/// Matched filter followed by decimation at the timing phase with the most energy.
pub fn matched_filter_downsample(
    env: &ComplexEnvelope,
    filter: &RrcFilter,
    symbol_rate: f64,
) -> Result<SymbolFrame> {
    let ratio = env.sample_rate / symbol_rate;
    let sps = ratio.round() as usize;
    if sps == 0 || (ratio - sps as f64).abs() > 1e-9 * ratio {
        return Err(Error::Resampling(format!(
            "sample rate {} is not an integer multiple of symbol rate {symbol_rate}",
            env.sample_rate
        )));
    }
    if sps != filter.samples_per_symbol {
        return Err(Error::Resampling(format!(
            "filter designed for {} samples/symbol, envelope has {sps}",
            filter.samples_per_symbol
        )));
    }
    if env.len() % sps != 0 {
        return Err(Error::Resampling(format!(
            "{} samples is not a whole number of symbols at {sps} samples/symbol",
            env.len()
        )));
    }
    let mut buf = env.samples.clone();
    let h = filter.frequency_response(buf.len());
    FftPair::new(buf.len()).filter(&mut buf, &h);

    let mut best_phase = 0;
    let mut best_energy = -1.0;
    for phase in 0..sps {
        let e: f64 = buf.iter().skip(phase).step_by(sps).map(|s| s.norm_sqr()).sum();
        if e > best_energy * (1.0 + 1e-12) {
            best_energy = e;
            best_phase = phase;
        }
    }
    let symbols = buf.iter().skip(best_phase).step_by(sps).copied().collect();
    Ok(SymbolFrame::new(symbols, symbol_rate, Default::default()))
}

/// Gaussian pulse train `sqrt(P0)·Σ a_k exp(-(t-kT)²/2τ²)`, circular over the frame.
///
/// This is the transmit waveform the perturbation kernels assume exactly.
pub fn shape_gaussian(frame: &SymbolFrame, tau: f64, sps: usize, peak_power: f64) -> Result<ComplexEnvelope> {
    if sps < 2 {
        return Err(Error::Aliasing(format!("{sps} samples/symbol is too few")));
    }
    if !(tau > 0.0) {
        return Err(Error::config("Gaussian width must be positive"));
    }
    let n = frame.len();
    let len = n * sps;
    let t_sym = 1.0 / frame.symbol_rate;
    let dt = t_sym / sps as f64;
    let reach = ((12.0 * tau / dt).ceil() as usize).min(len / 2);
    let amp = peak_power.sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, a) in frame.symbols.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let centre = k * sps;
        for off in -(reach as isize)..=(reach as isize) {
            let t = off as f64 * dt;
            let idx = (centre as isize + off).rem_euclid(len as isize) as usize;
            buf[idx] += a * (amp * (-(t * t) / (2.0 * tau * tau)).exp());
        }
    }
    ComplexEnvelope::new(buf, frame.symbol_rate * sps as f64)
}

/// Take one sample per symbol at the symbol instants and divide by `amplitude`.
pub fn sample_symbol_instants(env: &ComplexEnvelope, symbol_rate: f64, amplitude: f64) -> Result<SymbolFrame> {
    let ratio = env.sample_rate / symbol_rate;
    let sps = ratio.round() as usize;
    if sps == 0 || (ratio - sps as f64).abs() > 1e-9 * ratio {
        return Err(Error::Resampling(format!(
            "sample rate {} is not an integer multiple of symbol rate {symbol_rate}",
            env.sample_rate
        )));
    }
    let symbols = env.samples.iter().step_by(sps).map(|s| s / amplitude).collect();
    Ok(SymbolFrame::new(symbols, symbol_rate, Default::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdDirection {
    /// Dispersion a signal picks up over `length` of fiber.
    Accumulate,
    /// Inverse filter (EDC).
    Compensate,
}

/// All-pass chromatic-dispersion filter `exp(±j·β₂·ω²·L/2)`.
///
/// With the forward-FFT sign convention of [`crate::fft`], propagation under
/// `∂u/∂z = -j(β₂/2)∂²u/∂t²` multiplies the spectrum by `exp(+jβ₂ω²L/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOperator {
    pub beta2: f64,
    pub length: f64,
    pub direction: CdDirection,
}

impl CdOperator {
    pub fn accumulate(beta2: f64, length: f64) -> Self {
        CdOperator {
            beta2,
            length,
            direction: CdDirection::Accumulate,
        }
    }

    pub fn compensate(beta2: f64, length: f64) -> Self {
        CdOperator {
            beta2,
            length,
            direction: CdDirection::Compensate,
        }
    }

    /// Spectral multiplier for each FFT bin.
    pub fn response(&self, len: usize, sample_rate: f64) -> Vec<Complex64> {
        let sign = match self.direction {
            CdDirection::Accumulate => 1.0,
            CdDirection::Compensate => -1.0,
        };
        angular_frequencies(len, sample_rate)
            .into_iter()
            .map(|w| Complex64::from_polar(1.0, sign * self.beta2 * w * w * self.length / 2.0))
            .collect()
    }
}

pub fn cd_apply(env: &ComplexEnvelope, op: &CdOperator) -> ComplexEnvelope {
    let mut out = env.clone();
    if op.length == 0.0 || op.beta2 == 0.0 {
        return out;
    }
    let h = op.response(out.len(), out.sample_rate);
    FftPair::new(out.len()).filter(&mut out.samples, &h);
    out
}
