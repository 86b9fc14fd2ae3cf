//! Decisions, bit error counting, FEC-threshold crossing and reach search.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::signal::{Alphabet, SymbolFrame};
use crate::{Error, Result};

/// Hard-decision FEC limit with 7% overhead.
pub const FEC_BER: f64 = 4.3e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub engine: String,
    /// Metres.
    pub distance: f64,
    /// dBm.
    pub launch_power: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub seed: u64,
}

impl BerRecord {
    pub fn new(engine: &str, distance: f64, launch_power: f64, bit_errors: u64, bits: u64, seed: u64) -> Result<Self> {
        if bits == 0 || bit_errors > bits {
            return Err(Error::config(format!("{bit_errors} errors in {bits} bits")));
        }
        Ok(BerRecord {
            engine: engine.to_string(),
            distance,
            launch_power,
            bit_errors,
            bits,
            ber: bit_errors as f64 / bits as f64,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub engine: String,
    /// Metres.
    pub max_reach: f64,
    /// dBm.
    pub optimal_power: f64,
    pub fec_ber: f64,
}

/// Scale so the mean energy matches the alphabet's.
pub fn normalize_power(frame: &SymbolFrame, alphabet: &Alphabet) -> SymbolFrame {
    let mut out = frame.clone();
    let e = frame.mean_energy();
    if e > 0.0 {
        let k = (alphabet.mean_energy() / e).sqrt();
        for s in &mut out.symbols {
            *s *= k;
        }
    }
    out
}

/// Least-squares complex gain `g` with `rx ≈ g·tx`.
pub fn complex_gain(tx: &SymbolFrame, rx: &SymbolFrame) -> Result<Complex64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            got: rx.len(),
        });
    }
    let num: Complex64 = rx.symbols.iter().zip(&tx.symbols).map(|(r, t)| r * t.conj()).sum();
    let den: f64 = tx.symbols.iter().map(|t| t.norm_sqr()).sum();
    if den == 0.0 || num.norm() == 0.0 {
        return Err(Error::config("complex gain is undefined for a zero frame"));
    }
    Ok(num / den)
}

/// Divide `rx` by its least-squares complex gain against `tx`.
pub fn equalize_gain(tx: &SymbolFrame, rx: &SymbolFrame) -> Result<SymbolFrame> {
    let g = complex_gain(tx, rx)?;
    let mut out = rx.clone();
    for s in &mut out.symbols {
        *s /= g;
    }
    Ok(out)
}

/// Nearest-point decisions; the frame must already be on the alphabet's scale.
pub fn decide(frame: &SymbolFrame, alphabet: &Alphabet) -> SymbolFrame {
    let symbols = frame
        .symbols
        .iter()
        .map(|s| alphabet.points[alphabet.nearest(*s)])
        .collect();
    SymbolFrame::new(symbols, frame.symbol_rate, alphabet.modulation)
}

/// Bit errors between two frames of alphabet points, by Gray label.
pub fn count_bit_errors(tx: &SymbolFrame, rx: &SymbolFrame, alphabet: &Alphabet) -> Result<(u64, u64)> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            got: rx.len(),
        });
    }
    let label = |s: &Complex64| alphabet.labels[alphabet.nearest(*s)];
    let errors = tx
        .symbols
        .iter()
        .zip(&rx.symbols)
        .map(|(a, b)| (label(a) ^ label(b)).count_ones() as u64)
        .sum();
    Ok((errors, tx.len() as u64 * alphabet.bits_per_symbol as u64))
}

/// Bit error ratio of decided symbols against the transmitted ones.
pub fn ber(tx: &SymbolFrame, rx: &SymbolFrame, alphabet: &Alphabet) -> Result<f64> {
    let (e, b) = count_bit_errors(tx, rx, alphabet)?;
    if b == 0 {
        return Err(Error::EmptySelection("no symbols to compare".into()));
    }
    Ok(e as f64 / b as f64)
}

/// Adds circular complex Gaussian noise at `es_n0_db` relative to the frame energy.
pub fn add_awgn(frame: &SymbolFrame, es_n0_db: f64, seed: u64) -> SymbolFrame {
    let n0 = frame.mean_energy() / 10f64.powf(es_n0_db / 10.0);
    let normal = Normal::new(0.0, (n0 / 2.0).sqrt()).expect("finite noise variance");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = frame.clone();
    for s in &mut out.symbols {
        *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    out
}

/// Launch power where BER rises through `fec_ber` to the right of the optimum.
///
/// Records must belong to one engine and distance. Interpolation is linear in
/// `(power, log10 BER)`; a zero BER counts as half an error.
pub fn nonlinearity_threshold(records: &[BerRecord], fec_ber: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptySelection("no records for threshold".into()));
    }
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.launch_power, r.ber.max(0.5 / r.bits as f64)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap();
    if pts[best].1 > fec_ber {
        return Err(Error::OutOfRange(format!(
            "best BER {:.3e} never reaches the limit {fec_ber:.1e}",
            pts[best].1
        )));
    }
    for w in pts[best..].windows(2) {
        let ((p0, b0), (p1, b1)) = (w[0], w[1]);
        if b1 > fec_ber {
            let (l0, l1, lf) = (b0.log10(), b1.log10(), fec_ber.log10());
            return Ok(p0 + (p1 - p0) * (lf - l0) / (l1 - l0));
        }
    }
    Err(Error::OutOfRange(format!(
        "BER stays below {fec_ber:.1e} up to {} dBm",
        pts.last().unwrap().0
    )))
}

/// Largest distance whose best BER over power meets `fec_ber`.
pub fn max_reach(records: &[BerRecord], fec_ber: f64) -> Result<ReachResult> {
    let Some(first) = records.first() else {
        return Err(Error::EmptySelection("no records for reach".into()));
    };
    let mut best: Option<&BerRecord> = None;
    for r in records.iter().filter(|r| r.ber <= fec_ber) {
        let better = match best {
            None => true,
            Some(b) => r.distance > b.distance || (r.distance == b.distance && r.ber < b.ber),
        };
        if better {
            best = Some(r);
        }
    }
    let b = best.ok_or_else(|| {
        Error::NoQualifyingDistance(format!("{}: no distance reaches BER {fec_ber:.1e}", first.engine))
    })?;
    Ok(ReachResult {
        engine: b.engine.clone(),
        max_reach: b.distance,
        optimal_power: b.launch_power,
        fec_ber,
    })
}

/// Per launch power, the largest distance meeting `fec_ber`; `None` where none does.
pub fn reach_per_power(records: &[BerRecord], fec_ber: f64) -> Vec<(f64, Option<f64>)> {
    let mut powers: Vec<f64> = records.iter().map(|r| r.launch_power).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    powers
        .into_iter()
        .map(|p| {
            let d = records
                .iter()
                .filter(|r| r.launch_power == p && r.ber <= fec_ber)
                .map(|r| r.distance)
                .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
            (p, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Modulation;

    fn rec(p: f64, ber: f64) -> BerRecord {
        BerRecord {
            engine: "edc".into(),
            distance: 80e3,
            launch_power: p,
            bit_errors: (ber * 1e6) as u64,
            bits: 1_000_000,
            ber,
            seed: 1,
        }
    }

    #[test]
    fn exact_points_decide_to_themselves() {
        let a = Alphabet::new(Modulation::Qam16);
        let f = SymbolFrame::random(&a, 200, 1.0, 2);
        assert_eq!(decide(&f, &a).symbols, f.symbols);
        assert_eq!(ber(&f, &decide(&f, &a), &a).unwrap(), 0.0);
    }

    #[test]
    fn one_bit_neighbor_counts_one_error() {
        let a = Alphabet::new(Modulation::Qam16);
        let tx = SymbolFrame::random(&a, 4096, 1.0, 3);
        let mut rx = tx.clone();
        let i = a.nearest(rx.symbols[10]);
        let j = (0..16)
            .find(|&j| (a.labels[i] ^ a.labels[j]).count_ones() == 1 && (a.points[i] - a.points[j]).norm() < 0.64)
            .unwrap();
        rx.symbols[10] = a.points[j];
        assert_eq!(ber(&tx, &rx, &a).unwrap(), 1.0 / 16384.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = Alphabet::new(Modulation::Qpsk);
        let f = SymbolFrame::random(&a, 10, 1.0, 1);
        let g = SymbolFrame::random(&a, 9, 1.0, 1);
        assert!(matches!(ber(&f, &g, &a), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn complex_gain_is_undone() {
        let a = Alphabet::new(Modulation::Qam16);
        let tx = SymbolFrame::random(&a, 300, 1.0, 4);
        let mut rx = tx.clone();
        let g = Complex64::from_polar(0.3, 2.1);
        for s in &mut rx.symbols {
            *s *= g;
        }
        let eq = equalize_gain(&tx, &rx).unwrap();
        for (x, y) in eq.symbols.iter().zip(&tx.symbols) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn threshold_on_grid_point_and_midpoint() {
        let r = vec![rec(0.0, 1e-4), rec(1.0, 1e-5), rec(2.0, 4.3e-3), rec(3.0, 1e-2)];
        assert!((nonlinearity_threshold(&r, 4.3e-3).unwrap() - 2.0).abs() < 1e-12);
        let r = vec![rec(0.0, 1e-5), rec(1.0, 1e-3), rec(2.0, 1e-1)];
        assert!((nonlinearity_threshold(&r, 1e-2).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_without_crossing_is_out_of_range() {
        let r = vec![rec(0.0, 1e-2), rec(1.0, 2e-2)];
        assert!(matches!(nonlinearity_threshold(&r, 4.3e-3), Err(Error::OutOfRange(_))));
        let r = vec![rec(0.0, 1e-4), rec(1.0, 1e-5)];
        assert!(matches!(nonlinearity_threshold(&r, 4.3e-3), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn reach_picks_largest_qualifying_distance() {
        let mut r = vec![rec(0.0, 1e-3), rec(1.0, 2e-3)];
        r[1].distance = 160e3;
        let res = max_reach(&r, FEC_BER).unwrap();
        assert_eq!(res.max_reach, 160e3);
        assert_eq!(res.optimal_power, 1.0);
        let bad = vec![rec(0.0, 1e-1)];
        assert!(matches!(max_reach(&bad, FEC_BER), Err(Error::NoQualifyingDistance(_))));
        assert_eq!(reach_per_power(&r, FEC_BER), vec![(0.0, Some(80e3)), (1.0, Some(160e3))]);
    }
}
