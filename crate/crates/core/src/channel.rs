//! Forward propagation truth model: symmetric split-step Fourier per span,
//! followed by an EDFA that restores the span loss and adds ASE noise.
//!
//! The split-step works on the loss-normalized field `u = q·exp(αz/2)`, so
//! attenuation only appears as the `exp(-αz)` weight of the Kerr term. The
//! physical field is restored at the end of each span.

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::{angular_frequencies, FftPair};
use crate::signal::units::PLANCK;
use crate::signal::{ComplexEnvelope, LinkParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardPolicy {
    Ignore,
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsfmConfig {
    pub steps_per_span: usize,
    /// Keep a snapshot after every span (see [`propagate_link_traced`]).
    pub record_intermediate: bool,
    pub guard: GuardPolicy,
    /// Largest tolerated energy fraction in the outer 20 % of the simulated band.
    pub guard_fraction: f64,
}

impl Default for SsfmConfig {
    fn default() -> Self {
        SsfmConfig {
            steps_per_span: 80,
            record_intermediate: false,
            guard: GuardPolicy::Warn,
            guard_fraction: 1e-5,
        }
    }
}

impl SsfmConfig {
    pub fn with_steps(steps_per_span: usize) -> Self {
        SsfmConfig {
            steps_per_span,
            ..Default::default()
        }
    }
}

/// `∫ exp(-α z') dz'` over `[z, z + h]`.
pub fn effective_length(alpha: f64, z: f64, h: f64) -> f64 {
    if alpha == 0.0 {
        h
    } else {
        ((-alpha * z).exp() - (-alpha * (z + h)).exp()) / alpha
    }
}

/// Reusable split-step propagator for one frame length and sample rate.
///
/// Runs the normalized equation `∂u/∂z = -j(β₂/2)∂²u/∂t² + jγ|u|²e^{-αz}u`
/// forward over one span, or the same equation backward from `z = L` to `0`.
pub struct SplitStep {
    fft: FftPair,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    omega: Vec<f64>,
    steps: usize,
    step: f64,
    alpha: f64,
    gamma: f64,
    span_length: f64,
    cfg: SsfmConfig,
}

impl SplitStep {
    pub fn new(len: usize, sample_rate: f64, params: &LinkParams, cfg: &SsfmConfig) -> Result<Self> {
        Self::build(len, sample_rate, params.alpha, params.beta2, params.gamma, params.span_length, cfg)
    }

    pub(crate) fn build(
        len: usize,
        sample_rate: f64,
        alpha: f64,
        beta2: f64,
        gamma: f64,
        span_length: f64,
        cfg: &SsfmConfig,
    ) -> Result<Self> {
        if cfg.steps_per_span == 0 {
            return Err(Error::config("steps_per_span must be >= 1"));
        }
        let omega = angular_frequencies(len, sample_rate);
        let h = span_length / cfg.steps_per_span as f64;
        let phase = |w: f64, dz: f64| Complex64::from_polar(1.0, beta2 * w * w * dz / 2.0);
        Ok(SplitStep {
            fft: FftPair::new(len),
            half: omega.iter().map(|&w| phase(w, h / 2.0)).collect(),
            full: omega.iter().map(|&w| phase(w, h)).collect(),
            omega,
            steps: cfg.steps_per_span,
            step: h,
            alpha,
            gamma,
            span_length,
            cfg: *cfg,
        })
    }

    fn kerr(&self, buf: &mut [Complex64], leff: f64, sign: f64) {
        let k = sign * self.gamma * leff;
        if k == 0.0 {
            return;
        }
        for v in buf.iter_mut() {
            *v *= Complex64::from_polar(1.0, k * v.norm_sqr());
        }
    }

    fn multiply(buf: &mut [Complex64], h: &[Complex64], conjugate: bool) {
        if conjugate {
            for (v, r) in buf.iter_mut().zip(h) {
                *v *= r.conj();
            }
        } else {
            for (v, r) in buf.iter_mut().zip(h) {
                *v *= r;
            }
        }
    }

    /// Physical field at `z = 0` → physical field at `z = L` (attenuated).
    pub fn forward(&mut self, buf: &mut [Complex64]) -> Result<()> {
        for i in 0..self.steps {
            let z = i as f64 * self.step;
            self.fft.forward(buf);
            let h = if i == 0 { &self.half } else { &self.full };
            Self::multiply(buf, h, false);
            self.fft.inverse(buf);
            self.kerr(buf, effective_length(self.alpha, z, self.step), 1.0);
        }
        self.fft.forward(buf);
        Self::multiply(buf, &self.half, false);
        self.check_guard(buf)?;
        self.fft.inverse(buf);
        let loss = (-self.alpha * self.span_length / 2.0).exp();
        for v in buf.iter_mut() {
            *v *= loss;
        }
        Ok(())
    }

    /// Physical field at `z = L` → estimate of the physical field at `z = 0`.
    pub fn backward(&mut self, buf: &mut [Complex64]) -> Result<()> {
        let gain = (self.alpha * self.span_length / 2.0).exp();
        for v in buf.iter_mut() {
            *v *= gain;
        }
        for i in 0..self.steps {
            let z_hi = self.span_length - i as f64 * self.step;
            self.fft.forward(buf);
            let h = if i == 0 { &self.half } else { &self.full };
            Self::multiply(buf, h, true);
            self.fft.inverse(buf);
            self.kerr(buf, effective_length(self.alpha, z_hi - self.step, self.step), -1.0);
        }
        self.fft.forward(buf);
        Self::multiply(buf, &self.half, true);
        self.fft.inverse(buf);
        Ok(())
    }

    fn check_guard(&self, spectrum: &[Complex64]) -> Result<()> {
        if self.cfg.guard == GuardPolicy::Ignore {
            return Ok(());
        }
        let w_max = self.omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let (mut edge, mut total) = (0.0, 0.0);
        for (v, w) in spectrum.iter().zip(&self.omega) {
            let p = v.norm_sqr();
            total += p;
            if w.abs() > 0.8 * w_max {
                edge += p;
            }
        }
        if total == 0.0 {
            return Ok(());
        }
        let frac = edge / total;
        if frac > self.cfg.guard_fraction {
            let msg = format!(
                "{frac:.3e} of the energy sits in the outer 20% of the band (limit {:.1e})",
                self.cfg.guard_fraction
            );
            match self.cfg.guard {
                GuardPolicy::Error => return Err(Error::Aliasing(msg)),
                GuardPolicy::Warn => warn!("{msg}"),
                GuardPolicy::Ignore => {}
            }
        }
        Ok(())
    }
}

/// One span of fiber: symmetric split-step with exact per-step effective length.
pub fn ssfm_span(env: &ComplexEnvelope, params: &LinkParams, cfg: &SsfmConfig) -> Result<ComplexEnvelope> {
    let mut out = env.clone();
    SplitStep::new(env.len(), env.sample_rate, params, cfg)?.forward(&mut out.samples)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierModel {
    /// Linear power gain.
    pub gain: f64,
    /// Linear noise figure; zero disables ASE.
    pub noise_figure: f64,
    /// Noise bandwidth, Hz (the simulation sample rate).
    pub bandwidth: f64,
    pub center_frequency: f64,
    pub rng_seed: u64,
}

impl AmplifierModel {
    /// EDFA that exactly offsets one span of loss.
    pub fn for_link(params: &LinkParams, bandwidth: f64, rng_seed: u64) -> Self {
        AmplifierModel {
            gain: params.span_gain(),
            noise_figure: params.noise_figure,
            bandwidth,
            center_frequency: params.center_frequency,
            rng_seed,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_figure = 0.0;
        self
    }

    /// ASE power spectral density per polarization, W/Hz.
    pub fn ase_psd(&self) -> f64 {
        (PLANCK * self.center_frequency / 2.0 * (self.gain * self.noise_figure - 1.0)).max(0.0)
    }

    /// Total complex noise power added per sample, W.
    pub fn noise_power(&self) -> f64 {
        self.ase_psd() * self.bandwidth
    }
}

/// Amplifier with its own noise stream; successive calls draw fresh noise.
pub struct Amplifier {
    model: AmplifierModel,
    rng: ChaCha8Rng,
}

impl Amplifier {
    pub fn new(model: AmplifierModel) -> Self {
        Amplifier {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
        }
    }

    pub fn apply(&mut self, samples: &mut [Complex64]) {
        let g = self.model.gain.sqrt();
        let sigma = (self.model.noise_power() / 2.0).sqrt();
        for v in samples.iter_mut() {
            *v *= g;
            if sigma > 0.0 {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                *v += Complex64::new(re, im) * sigma;
            }
        }
    }
}

/// Gain plus circular white Gaussian ASE, seeded from the model.
pub fn amplify(env: &ComplexEnvelope, amp: &AmplifierModel) -> ComplexEnvelope {
    let mut out = env.clone();
    Amplifier::new(*amp).apply(&mut out.samples);
    out
}

/// `n_spans × (fiber span, amplifier)`.
pub fn propagate_link(
    env: &ComplexEnvelope,
    params: &LinkParams,
    cfg: &SsfmConfig,
    amp: &AmplifierModel,
) -> Result<ComplexEnvelope> {
    Ok(propagate_link_traced(env, params, cfg, amp)?.0)
}

/// Like [`propagate_link`], also returning per-span snapshots when
/// `cfg.record_intermediate` is set.
pub fn propagate_link_traced(
    env: &ComplexEnvelope,
    params: &LinkParams,
    cfg: &SsfmConfig,
    amp: &AmplifierModel,
) -> Result<(ComplexEnvelope, Vec<ComplexEnvelope>)> {
    params.validate()?;
    let mut out = env.clone();
    let mut stepper = SplitStep::new(env.len(), env.sample_rate, params, cfg)?;
    let mut amplifier = Amplifier::new(*amp);
    let mut trace = Vec::new();
    for _ in 0..params.n_spans {
        stepper.forward(&mut out.samples)?;
        amplifier.apply(&mut out.samples);
        if amp.noise_power() > 0.0 {
            // white ASE fills the guard band from here on
            stepper.cfg.guard = GuardPolicy::Ignore;
        }
        if cfg.record_intermediate {
            trace.push(out.clone());
        }
    }
    Ok((out, trace))
}
