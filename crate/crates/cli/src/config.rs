//! Experiment configuration: a flat JSON document with a strict key set.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pbnlc::engines::{EdgeMode, SoScheme};
use pbnlc::metrics::FEC_BER;
use pbnlc::signal::{convert_units, LinkParams, Modulation, RawLink};
use pbnlc::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Edc,
    Fo,
    So,
    Dbp,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Edc => "edc",
            Engine::Fo => "fo",
            Engine::So => "so",
            Engine::Dbp => "dbp",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoKernel {
    /// Closed-form Gaussian propagation of the second-order terms.
    Exact,
    /// The published integrands, transcribed literally.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Additive,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edges {
    Zero,
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub modulation: String,
    pub symbol_rate_gbaud: f64,
    /// Gaussian model pulse width; `null` selects half the symbol period.
    pub tau_ps: Option<f64>,
    pub roll_off: f64,
    pub rrc_span_symbols: usize,
    pub sps: usize,

    pub alpha_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_per_km: f64,
    pub span_length_km: f64,
    pub noise_figure_db: f64,
    pub center_frequency_thz: f64,
    pub ase_noise: bool,

    pub steps_per_span: usize,
    pub dbp_steps_per_span: usize,

    pub engines: Vec<Engine>,
    pub power_start_dbm: f64,
    pub power_stop_dbm: f64,
    pub power_step_db: f64,
    /// Link lengths as span counts.
    pub spans: Vec<usize>,
    pub n_symbols: usize,
    pub seeds: Vec<u64>,

    pub lut_dir: PathBuf,
    pub mu_db: f64,
    pub fo_window: u16,
    pub so_window: u16,
    pub quant_step: f64,
    pub so_kernel: SoKernel,
    pub so_scheme: Scheme,
    pub include_fo_in_so: bool,
    pub remove_common_phase: bool,
    pub edges: Edges,
    pub fec_ber: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            modulation: "16qam".into(),
            symbol_rate_gbaud: 32.0,
            tau_ps: None,
            roll_off: 0.1,
            rrc_span_symbols: 64,
            sps: 8,
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: -20.47,
            gamma_per_w_per_km: 1.22,
            span_length_km: 80.0,
            noise_figure_db: 5.5,
            center_frequency_thz: 193.41,
            ase_noise: true,
            steps_per_span: 40,
            dbp_steps_per_span: 1,
            engines: vec![Engine::Edc, Engine::Fo, Engine::So, Engine::Dbp],
            power_start_dbm: -4.0,
            power_stop_dbm: 6.0,
            power_step_db: 0.5,
            spans: vec![20],
            n_symbols: 1 << 15,
            seeds: vec![1],
            lut_dir: PathBuf::from("luts"),
            mu_db: -40.0,
            fo_window: 128,
            so_window: 3,
            quant_step: 0.0,
            so_kernel: SoKernel::Exact,
            so_scheme: Scheme::Additive,
            include_fo_in_so: true,
            remove_common_phase: true,
            edges: Edges::Cyclic,
            fec_ber: FEC_BER,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file, then applies `key=value` overrides (values are JSON,
    /// bare words are taken as strings).
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_value(doc, overrides)
    }

    pub fn from_value(doc: Value, overrides: &[String]) -> Result<Self> {
        let Value::Object(mut map) = doc else {
            return Err(Error::config("config must be a JSON object"));
        };
        apply_overrides(&mut map, overrides)?;
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.modulation.parse::<Modulation>()?;
        self.link(1)?;
        if self.engines.is_empty() || self.spans.is_empty() || self.seeds.is_empty() {
            return Err(Error::config("engines, spans and seeds must be non-empty"));
        }
        if self.spans.contains(&0) {
            return Err(Error::config("span counts must be >= 1"));
        }
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be >= 1"));
        }
        if self.steps_per_span == 0 || self.dbp_steps_per_span == 0 {
            return Err(Error::config("step counts must be >= 1"));
        }
        if !(self.power_step_db > 0.0) || self.power_stop_dbm < self.power_start_dbm {
            return Err(Error::config("power grid needs step > 0 and stop >= start"));
        }
        if !(self.fec_ber > 0.0 && self.fec_ber < 0.5) {
            return Err(Error::config("fec_ber must lie in (0, 0.5)"));
        }
        if !(self.quant_step >= 0.0) {
            return Err(Error::config("quant_step must be >= 0"));
        }
        Ok(())
    }

    pub fn raw_link(&self, n_spans: usize) -> RawLink {
        RawLink {
            alpha_db_per_km: self.alpha_db_per_km,
            beta2_ps2_per_km: self.beta2_ps2_per_km,
            gamma_per_w_per_km: self.gamma_per_w_per_km,
            span_length_km: self.span_length_km,
            n_spans,
            noise_figure_db: self.noise_figure_db,
            center_frequency_thz: self.center_frequency_thz,
            symbol_rate_gbaud: self.symbol_rate_gbaud,
            tau_ps: self.tau_ps,
            launch_power_dbm: 0.0,
        }
    }

    pub fn link(&self, n_spans: usize) -> Result<LinkParams> {
        convert_units(&self.raw_link(n_spans))
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation.parse().expect("validated")
    }

    /// Launch powers from start to stop inclusive.
    pub fn powers(&self) -> Vec<f64> {
        let n = ((self.power_stop_dbm - self.power_start_dbm) / self.power_step_db + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.power_start_dbm + i as f64 * self.power_step_db)
            .collect()
    }

    pub fn scheme(&self) -> SoScheme {
        match self.so_scheme {
            Scheme::Additive => SoScheme::Additive,
            Scheme::Inverse => SoScheme::Inverse,
        }
    }

    pub fn edge_mode(&self) -> EdgeMode {
        match self.edges {
            Edges::Zero => EdgeMode::Zero,
            Edges::Cyclic => EdgeMode::Cyclic,
        }
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn apply_overrides(map: &mut Map<String, Value>, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{item}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.trim().to_string(), value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> Value {
        serde_json::to_value(ExperimentConfig::default()).unwrap()
    }

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::from_value(doc(), &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut d = doc();
        d["gama_per_w_per_km"] = 1.0.into();
        assert!(ExperimentConfig::from_value(d, &[]).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let c = ExperimentConfig::from_value(
            doc(),
            &["spans=[1,2]".into(), "engines=[\"edc\"]".into(), "modulation=qpsk".into()],
        )
        .unwrap();
        assert_eq!(c.spans, vec![1, 2]);
        assert_eq!(c.engines, vec![Engine::Edc]);
        assert_eq!(c.modulation, "qpsk");
        assert!(ExperimentConfig::from_value(doc(), &["nope=1".into()]).is_err());
    }

    #[test]
    fn power_grid_is_inclusive() {
        let c = ExperimentConfig {
            power_step_db: 1.0,
            ..Default::default()
        };
        let p = c.powers();
        assert_eq!(p.len(), 11);
        assert_eq!(p[0], -4.0);
        assert_eq!(p[10], 6.0);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.mu_db = -30.0;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn invalid_physics_is_rejected() {
        assert!(ExperimentConfig::from_value(doc(), &["span_length_km=-1".into()]).is_err());
        assert!(ExperimentConfig::from_value(doc(), &["spans=[]".into()]).is_err());
        assert!(ExperimentConfig::from_value(doc(), &["modulation=\"8psk\"".into()]).is_err());
    }
}
