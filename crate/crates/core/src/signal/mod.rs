//! Containers and units shared by every stage of the link.

mod alphabet;
pub mod units;

pub use alphabet::{build_alphabet, Alphabet, Modulation};
pub use units::{convert_units, launch_power_to_peak, LinkParams, RawLink};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Uniformly sampled complex baseband field in √W.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    pub samples: Vec<Complex64>,
    /// Hz.
    pub sample_rate: f64,
    /// Time of the first sample relative to the frame origin, s.
    pub t0_offset: f64,
}

impl ComplexEnvelope {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("envelope needs at least one sample"));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::config(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(ComplexEnvelope {
            samples,
            sample_rate,
            t0_offset: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn energy_sum(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean of |s|² over samples, W.
    pub fn mean_power(&self) -> f64 {
        self.energy_sum() / self.samples.len() as f64
    }

    /// Rescale so that the mean power equals `power`. An all-zero envelope is left unchanged.
    pub fn normalize_power(&mut self, power: f64) {
        let current = self.mean_power();
        if current > 0.0 {
            let k = (power / current).sqrt();
            self.scale(k);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for s in &mut self.samples {
            *s *= k;
        }
    }

    pub fn rotate(&mut self, phase: f64) {
        let r = Complex64::from_polar(1.0, phase);
        for s in &mut self.samples {
            *s *= r;
        }
    }
}

/// Complex symbol sequence at one sample per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<Complex64>,
    /// Baud.
    pub symbol_rate: f64,
    pub modulation: Modulation,
    /// Set once a predistorter has moved symbols off the alphabet.
    pub predistorted: bool,
}

impl SymbolFrame {
    pub fn new(symbols: Vec<Complex64>, symbol_rate: f64, modulation: Modulation) -> Self {
        SymbolFrame {
            symbols,
            symbol_rate,
            modulation,
            predistorted: false,
        }
    }

    /// Uniformly drawn alphabet points, deterministic in `seed`.
    pub fn random(alphabet: &Alphabet, len: usize, symbol_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let symbols = (0..len)
            .map(|_| alphabet.points[rng.random_range(0..alphabet.len())])
            .collect();
        SymbolFrame::new(symbols, symbol_rate, alphabet.modulation)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        if self.symbols.is_empty() {
            return 0.0;
        }
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }

    /// True when every symbol is within `tol` of an alphabet point, or the frame is
    /// flagged as predistorted.
    pub fn is_consistent(&self, alphabet: &Alphabet, tol: f64) -> bool {
        self.predistorted
            || self
                .symbols
                .iter()
                .all(|s| (alphabet.points[alphabet.nearest(*s)] - s).norm() <= tol)
    }
}
