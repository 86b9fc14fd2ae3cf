//! Physical constants, unit conversions and the link parameter record.

use std::f64::consts::{LN_10, PI};

use crate::{Error, Result};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Decibels per kilometre of *power* to the field attenuation in nepers per metre.
pub fn db_per_km_to_np_per_m(db_per_km: f64) -> f64 {
    db_per_km * LN_10 / 20.0 / 1000.0
}

pub fn np_per_m_to_db_per_km(np_per_m: f64) -> f64 {
    np_per_m * 20.0 * 1000.0 / LN_10
}

/// Decibels per kilometre to the power attenuation coefficient in 1/m
/// (the `alpha` of the propagation equation, twice the field neper value).
pub fn db_per_km_to_power_per_m(db_per_km: f64) -> f64 {
    db_per_km * LN_10 / 10.0 / 1000.0
}

pub fn power_per_m_to_db_per_km(alpha: f64) -> f64 {
    alpha * 10.0 * 1000.0 / LN_10
}

pub fn ps2_per_km_to_s2_per_m(ps2_per_km: f64) -> f64 {
    ps2_per_km * 1e-24 / 1e3
}

pub fn s2_per_m_to_ps2_per_km(s2_per_m: f64) -> f64 {
    s2_per_m * 1e3 / 1e-24
}

pub fn per_w_km_to_per_w_m(per_w_km: f64) -> f64 {
    per_w_km / 1e3
}

pub fn per_w_m_to_per_w_km(per_w_m: f64) -> f64 {
    per_w_m * 1e3
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Peak power of a Gaussian pulse train `sqrt(P0)·Σ a_k exp(-(t-kT)²/2τ²)` with
/// unit-energy symbols whose time-averaged power is `avg_power`.
///
/// Each pulse carries energy `P0·√π·τ`, one pulse per slot `T`.
pub fn launch_power_to_peak(avg_power: f64, symbol_period: f64, tau: f64) -> Result<f64> {
    if !(avg_power >= 0.0) || !(symbol_period > 0.0) || !(tau > 0.0) {
        return Err(Error::config(format!(
            "launch_power_to_peak needs P>=0, T>0, tau>0 (got {avg_power}, {symbol_period}, {tau})"
        )));
    }
    Ok(avg_power * symbol_period / (PI.sqrt() * tau))
}

/// Link description in the engineering units of a simulation parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLink {
    pub alpha_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_per_km: f64,
    pub span_length_km: f64,
    pub n_spans: usize,
    pub noise_figure_db: f64,
    pub center_frequency_thz: f64,
    pub symbol_rate_gbaud: f64,
    /// Gaussian model pulse width; `None` selects half the symbol period.
    pub tau_ps: Option<f64>,
    pub launch_power_dbm: f64,
}

impl RawLink {
    /// Standard single-mode fiber at 32 GBd with 80 km spans.
    pub fn table1() -> Self {
        RawLink {
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: -20.47,
            gamma_per_w_per_km: 1.22,
            span_length_km: 80.0,
            n_spans: 35,
            noise_figure_db: 5.5,
            center_frequency_thz: 193.41,
            symbol_rate_gbaud: 32.0,
            tau_ps: None,
            launch_power_dbm: 0.0,
        }
    }
}

/// Link constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Power attenuation coefficient, 1/m.
    pub alpha: f64,
    /// Group-velocity dispersion, s²/m.
    pub beta2: f64,
    /// Nonlinear coefficient, 1/(W·m).
    pub gamma: f64,
    pub span_length: f64,
    pub n_spans: usize,
    /// EDFA noise figure, linear.
    pub noise_figure: f64,
    pub center_frequency: f64,
    pub symbol_period: f64,
    pub tau: f64,
    /// Gaussian-model peak power, W.
    pub peak_power: f64,
}

impl LinkParams {
    pub fn total_length(&self) -> f64 {
        self.span_length * self.n_spans as f64
    }

    pub fn symbol_rate(&self) -> f64 {
        1.0 / self.symbol_period
    }

    /// Field attenuation in nepers per metre (half of `alpha`).
    pub fn alpha_np_per_m(&self) -> f64 {
        self.alpha / 2.0
    }

    /// Amplifier gain that exactly offsets one span of loss.
    pub fn span_gain(&self) -> f64 {
        (self.alpha * self.span_length).exp()
    }

    /// Average launch power implied by `peak_power` under the Gaussian-train model.
    pub fn launch_power(&self) -> f64 {
        self.peak_power * PI.sqrt() * self.tau / self.symbol_period
    }

    /// Same link with `peak_power` set from an average launch power in dBm.
    pub fn with_launch_power_dbm(mut self, dbm: f64) -> Result<Self> {
        self.peak_power = launch_power_to_peak(dbm_to_w(dbm), self.symbol_period, self.tau)?;
        Ok(self)
    }

    pub fn with_spans(mut self, n_spans: usize) -> Self {
        self.n_spans = n_spans;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha,
            self.beta2,
            self.gamma,
            self.span_length,
            self.noise_figure,
            self.center_frequency,
            self.symbol_period,
            self.tau,
            self.peak_power,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("link parameters must be finite"));
        }
        if self.alpha < 0.0 {
            return Err(Error::config("alpha must be >= 0"));
        }
        if self.span_length <= 0.0 {
            return Err(Error::config("span length must be > 0"));
        }
        if self.n_spans < 1 {
            return Err(Error::config("at least one span is required"));
        }
        if self.symbol_period <= 0.0 || self.tau <= 0.0 {
            return Err(Error::config("symbol period and tau must be > 0"));
        }
        if self.peak_power < 0.0 {
            return Err(Error::config("peak power must be >= 0"));
        }
        if self.noise_figure < 0.0 || self.center_frequency <= 0.0 {
            return Err(Error::config("noise figure must be >= 0 and carrier frequency > 0"));
        }
        Ok(())
    }
}

/// Convert an engineering-unit link record to SI.
pub fn convert_units(raw: &RawLink) -> Result<LinkParams> {
    if !(raw.span_length_km > 0.0) {
        return Err(Error::config(format!(
            "span length must be positive, got {} km",
            raw.span_length_km
        )));
    }
    if !(raw.symbol_rate_gbaud > 0.0) {
        return Err(Error::config(format!(
            "symbol rate must be positive, got {} GBd",
            raw.symbol_rate_gbaud
        )));
    }
    if raw.alpha_db_per_km < 0.0 {
        return Err(Error::config("attenuation must be non-negative"));
    }
    if !(raw.center_frequency_thz > 0.0) {
        return Err(Error::config("center frequency must be positive"));
    }
    if let Some(tau) = raw.tau_ps {
        if !(tau > 0.0) {
            return Err(Error::config(format!("tau must be positive, got {tau} ps")));
        }
    }
    let symbol_period = 1.0 / (raw.symbol_rate_gbaud * 1e9);
    let tau = raw.tau_ps.map_or(symbol_period / 2.0, |ps| ps * 1e-12);
    let params = LinkParams {
        alpha: db_per_km_to_power_per_m(raw.alpha_db_per_km),
        beta2: ps2_per_km_to_s2_per_m(raw.beta2_ps2_per_km),
        gamma: per_w_km_to_per_w_m(raw.gamma_per_w_per_km),
        span_length: raw.span_length_km * 1e3,
        n_spans: raw.n_spans,
        noise_figure: db_to_linear(raw.noise_figure_db),
        center_frequency: raw.center_frequency_thz * 1e12,
        symbol_period,
        tau,
        peak_power: launch_power_to_peak(dbm_to_w(raw.launch_power_dbm), symbol_period, tau)?,
    };
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn table1_conversions() {
        assert!(rel(db_per_km_to_np_per_m(0.2), 2.302_585_093e-5) < 1e-9);
        assert!(rel(ps2_per_km_to_s2_per_m(-20.47), -2.047e-26) < 1e-12);
        assert!(rel(per_w_km_to_per_w_m(1.22), 1.22e-3) < 1e-12);

        let p = convert_units(&RawLink::table1()).unwrap();
        assert!(rel(p.alpha_np_per_m(), 2.302_585_093e-5) < 1e-9);
        assert!(rel(p.alpha, 4.605_170_186e-5) < 1e-9);
        // 80 km at 0.2 dB/km is 16 dB of loss.
        assert!(rel(linear_to_db(p.span_gain()), 16.0) < 1e-12);
        assert!(rel(p.tau, p.symbol_period / 2.0) < 1e-15);
    }

    #[test]
    fn peak_power_mapping() {
        let t = 31.25e-12;
        let p0 = launch_power_to_peak(1e-3, t, t / PI.sqrt()).unwrap();
        assert!(rel(p0, 1e-3) < 1e-12);

        let p0 = launch_power_to_peak(2e-3, t, 15.625e-12).unwrap();
        // Independent route: integrate one pulse's energy numerically, divide by T.
        let tau = 15.625e-12;
        let n = 200_000;
        let span = 20.0 * tau;
        let dt = 2.0 * span / n as f64;
        let energy_per_w: f64 = (0..n)
            .map(|i| {
                let t = -span + (i as f64 + 0.5) * dt;
                (-(t * t) / (tau * tau)).exp() * dt
            })
            .sum();
        let expected = 2e-3 * t / energy_per_w;
        assert!(rel(p0, expected) < 1e-9);
        assert!(rel(p0, 2.2568e-3) < 1e-4);

        assert_eq!(launch_power_to_peak(0.0, t, tau).unwrap(), 0.0);
        assert!(launch_power_to_peak(1.0, 0.0, tau).is_err());
    }

    #[test]
    fn rejects_bad_raw_values() {
        let mut raw = RawLink::table1();
        raw.span_length_km = -80.0;
        assert!(matches!(convert_units(&raw), Err(Error::Config(_))));
        let mut raw = RawLink::table1();
        raw.symbol_rate_gbaud = 0.0;
        assert!(convert_units(&raw).is_err());
        let mut raw = RawLink::table1();
        raw.alpha_db_per_km = -0.1;
        assert!(convert_units(&raw).is_err());
    }

    #[test]
    fn launch_power_round_trip() {
        let p = convert_units(&RawLink::table1())
            .unwrap()
            .with_launch_power_dbm(2.0)
            .unwrap();
        assert!(rel(w_to_dbm(p.launch_power()), 2.0) < 1e-12);
    }

    proptest! {
        #[test]
        fn conversions_round_trip(x in 1e-6f64..1e3) {
            prop_assert!(rel(np_per_m_to_db_per_km(db_per_km_to_np_per_m(x)), x) < 1e-12);
            prop_assert!(rel(power_per_m_to_db_per_km(db_per_km_to_power_per_m(x)), x) < 1e-12);
            prop_assert!(rel(s2_per_m_to_ps2_per_km(ps2_per_km_to_s2_per_m(-x)), -x) < 1e-12);
            prop_assert!(rel(per_w_m_to_per_w_km(per_w_km_to_per_w_m(x)), x) < 1e-12);
            prop_assert!(rel(db_to_linear(linear_to_db(x)), x) < 1e-12);
        }

        #[test]
        fn dbm_round_trip(dbm in -40f64..30.0) {
            prop_assert!((w_to_dbm(dbm_to_w(dbm)) - dbm).abs() < 1e-12 * dbm.abs().max(1.0));
        }
    }
}
