//! Result sets and their CSV forms.
//!
//! Every CSV starts with a `# config=<fingerprint>` line; readers skip `#` lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use pbnlc::metrics::{max_reach, nonlinearity_threshold, reach_per_power, BerRecord, ReachResult};
use pbnlc::{Error, Result};
use serde::{Deserialize, Serialize};

pub const BER_COLUMNS: [&str; 6] = ["engine", "distance_km", "power_dBm", "ber", "bits", "errors"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub fingerprint: String,
    pub records: Vec<BerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub engine: String,
    pub distance_km: f64,
    #[serde(rename = "power_dBm")]
    pub power_dbm: f64,
    pub ber: f64,
    pub bits: u64,
    pub errors: u64,
}

impl From<&BerRecord> for BerRow {
    fn from(r: &BerRecord) -> Self {
        BerRow {
            engine: r.engine.clone(),
            distance_km: r.distance / 1e3,
            power_dbm: r.launch_power,
            ber: r.ber,
            bits: r.bits,
            errors: r.bit_errors,
        }
    }
}

impl BerRow {
    fn record(&self) -> Result<BerRecord> {
        BerRecord::new(&self.engine, self.distance_km * 1e3, self.power_dbm, self.errors, self.bits, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    BerVsPower,
    ReachVsPower,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ber_vs_power" => Ok(PlotKind::BerVsPower),
            "reach_vs_power" => Ok(PlotKind::ReachVsPower),
            other => Err(Error::config(format!("unknown plot kind `{other}`"))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::config(format!("csv: {e}"))
}

fn finish(fingerprint: &str, body: Vec<u8>) -> String {
    let mut out = format!("# config={fingerprint}\n");
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    out
}

impl ResultSet {
    /// Records for one engine, sorted by distance then power.
    pub fn engine(&self, engine: &str) -> Vec<BerRecord> {
        let mut v: Vec<BerRecord> = self.records.iter().filter(|r| r.engine == engine).cloned().collect();
        v.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.launch_power.total_cmp(&b.launch_power)));
        v
    }

    pub fn engines(&self) -> Vec<String> {
        let mut e: Vec<String> = self.records.iter().map(|r| r.engine.clone()).collect();
        e.sort_by_key(|name| engine_rank(name));
        e.dedup();
        e
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(BerRow::from(r)).map_err(csv_err)?;
        }
        if self.records.is_empty() {
            w.write_record(BER_COLUMNS).map_err(csv_err)?;
        }
        Ok(finish(&self.fingerprint, w.into_inner().expect("flush to memory")))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let fingerprint = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# config="))
            .ok_or_else(|| Error::config("result file lacks a `# config=` line"))?
            .trim()
            .to_string();
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = rd.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != BER_COLUMNS {
            return Err(Error::config(format!("unexpected columns {header:?}")));
        }
        let records = rd
            .deserialize::<BerRow>()
            .map(|row| row.map_err(csv_err)?.record())
            .collect::<Result<_>>()?;
        Ok(ResultSet { fingerprint, records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_csv()?;
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Nonlinearity threshold per (engine, distance).
    pub fn thresholds(&self, fec_ber: f64) -> Vec<(String, f64, Result<f64>)> {
        let mut out = Vec::new();
        for e in self.engines() {
            let recs = self.engine(&e);
            let mut distances: Vec<f64> = recs.iter().map(|r| r.distance).collect();
            distances.dedup();
            for d in distances {
                let at: Vec<BerRecord> = recs.iter().filter(|r| r.distance == d).cloned().collect();
                out.push((e.clone(), d, nonlinearity_threshold(&at, fec_ber)));
            }
        }
        out
    }

    pub fn reach(&self, fec_ber: f64) -> Vec<(String, Result<ReachResult>)> {
        self.engines()
            .into_iter()
            .map(|e| {
                let r = max_reach(&self.engine(&e), fec_ber);
                (e, r)
            })
            .collect()
    }

    /// Plain CSV for plotting, one series per engine.
    pub fn plot_data(&self, kind: PlotKind, fec_ber: f64) -> Result<String> {
        if self.records.is_empty() {
            return Err(Error::EmptySelection("result set has no records".into()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        match kind {
            PlotKind::BerVsPower => {
                for e in self.engines() {
                    for r in self.engine(&e) {
                        w.serialize(BerRow::from(&r)).map_err(csv_err)?;
                    }
                }
            }
            PlotKind::ReachVsPower => {
                w.write_record(["engine", "power_dBm", "reach_km"]).map_err(csv_err)?;
                for e in self.engines() {
                    for (p, d) in reach_per_power(&self.engine(&e), fec_ber) {
                        let reach = d.map_or(String::from("0"), |d| format!("{}", d / 1e3));
                        w.write_record([e.clone(), format!("{p}"), reach]).map_err(csv_err)?;
                    }
                }
            }
        }
        Ok(finish(&self.fingerprint, w.into_inner().expect("flush to memory")))
    }
}

fn engine_rank(name: &str) -> (usize, String) {
    let rank = ["edc", "fo", "so", "dbp"].iter().position(|e| *e == name).unwrap_or(4);
    (rank, name.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> ResultSet {
        let rec = |e: &str, p: f64, err: u64| BerRecord::new(e, 1_600_000.0, p, err, 131_072, 1).unwrap();
        ResultSet {
            fingerprint: "00112233aabbccdd".into(),
            records: vec![rec("edc", -1.0, 30), rec("edc", 0.0, 10), rec("edc", 1.0, 900), rec("fo", 0.0, 3)],
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = set();
        let text = s.to_csv().unwrap();
        assert!(text.starts_with("# config=00112233aabbccdd\nengine,distance_km,power_dBm,ber,bits,errors\n"));
        let back = ResultSet::from_csv(&text).unwrap();
        assert_eq!(back.fingerprint, s.fingerprint);
        assert_eq!(back.records.len(), s.records.len());
        for (a, b) in back.records.iter().zip(&s.records) {
            assert_eq!(BerRow::from(a), BerRow::from(b));
        }
    }

    #[test]
    fn ber_plot_has_one_row_per_record() {
        let s = ResultSet {
            records: set().engine("edc"),
            ..set()
        };
        let text = s.plot_data(PlotKind::BerVsPower, 4.3e-3).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 1 + 3);
        assert_eq!(lines[1], BER_COLUMNS.join(","));
    }

    #[test]
    fn empty_set_has_no_plot() {
        let s = ResultSet {
            fingerprint: "x".into(),
            records: vec![],
        };
        assert!(matches!(s.plot_data(PlotKind::BerVsPower, 4.3e-3), Err(Error::EmptySelection(_))));
    }

    #[test]
    fn missing_fingerprint_is_rejected() {
        assert!(ResultSet::from_csv("engine,distance_km,power_dBm,ber,bits,errors\n").is_err());
    }
}
