use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    #[default]
    Qam16,
}

impl Modulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" | "16-qam" => Ok(Modulation::Qam16),
            other => Err(Error::config(format!("unknown modulation `{other}`"))),
        }
    }
}

/// Constellation with unit mean energy and a Gray bit labelling.
///
/// `points[i]` carries the bit label `labels[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    pub modulation: Modulation,
    pub points: Vec<Complex64>,
    pub labels: Vec<u32>,
    pub bits_per_symbol: u32,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Alphabet {
    pub fn new(modulation: Modulation) -> Self {
        match modulation {
            Modulation::Qpsk => {
                let mut points = Vec::with_capacity(4);
                let mut labels = Vec::with_capacity(4);
                for (i, re) in [-1.0, 1.0].into_iter().enumerate() {
                    for (q, im) in [-1.0, 1.0].into_iter().enumerate() {
                        points.push(Complex64::new(re, im) * FRAC_1_SQRT_2);
                        labels.push(((i as u32) << 1) | q as u32);
                    }
                }
                Alphabet {
                    modulation,
                    points,
                    labels,
                    bits_per_symbol: 2,
                }
            }
            Modulation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let mut points = Vec::with_capacity(16);
                let mut labels = Vec::with_capacity(16);
                for (i, re) in levels.into_iter().enumerate() {
                    for (q, im) in levels.into_iter().enumerate() {
                        points.push(Complex64::new(re, im) * scale);
                        labels.push((gray(i as u32) << 2) | gray(q as u32));
                    }
                }
                Alphabet {
                    modulation,
                    points,
                    labels,
                    bits_per_symbol: 4,
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest point; ties go to the smaller index.
    pub fn nearest(&self, x: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Minimum distance between distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.min((a - b).norm());
            }
        }
        d
    }
}

pub fn build_alphabet(name: &str) -> Result<Alphabet> {
    Ok(Alphabet::new(name.parse()?))
}
