//! Table management and the per-cell transmission simulation.

use std::fs;
use std::path::PathBuf;

use pbnlc::channel::{propagate_link, AmplifierModel, SsfmConfig};
use pbnlc::coeffs::{
    build_table, load_table, quantize_table, save_table, CoefficientTable, KernelParams, Order, QuadratureSpec,
};
use pbnlc::dsp::{matched_filter_downsample, nominal_amplitude, shape_scaled, RrcFilter};
use pbnlc::engines::{dbp, edc, predistort, DbpConfig, PredistortConfig, PredistortMode};
use pbnlc::metrics::{count_bit_errors, decide, equalize_gain, BerRecord};
use pbnlc::signal::units::dbm_to_w;
use pbnlc::signal::{Alphabet, SymbolFrame};
use pbnlc::{Error, Result};
use rayon::prelude::*;

use crate::config::{Engine, ExperimentConfig, SoKernel};

pub struct Tables {
    pub fo: CoefficientTable,
    pub so: Option<(CoefficientTable, CoefficientTable)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutReport {
    pub order: Order,
    pub spans: usize,
    pub tuples: u64,
    pub kept: usize,
    pub clusters: usize,
    pub path: PathBuf,
}

pub fn kernel_params(cfg: &ExperimentConfig, spans: usize) -> Result<KernelParams> {
    KernelParams::from_link(&cfg.link(spans)?)
}

pub fn so_orders(cfg: &ExperimentConfig) -> (Order, Order) {
    match cfg.so_kernel {
        SoKernel::Exact => (Order::SoTerm1, Order::SoTerm2),
        SoKernel::Printed => (Order::SoTerm1Printed, Order::SoTerm2Printed),
    }
}

pub fn lut_path(cfg: &ExperimentConfig, order: Order, spans: usize) -> PathBuf {
    cfg.lut_dir
        .join(format!("{order}-{spans}x{}km.lut", cfg.span_length_km))
}

fn needs_so(cfg: &ExperimentConfig) -> bool {
    cfg.engines.contains(&Engine::So)
}

fn needs_tables(cfg: &ExperimentConfig) -> bool {
    cfg.engines.iter().any(|e| matches!(e, Engine::Fo | Engine::So))
}

/// Builds, prunes, optionally quantizes and saves every table the engines need.
pub fn make_luts(cfg: &ExperimentConfig) -> Result<Vec<LutReport>> {
    fs::create_dir_all(&cfg.lut_dir).map_err(|e| Error::io(&cfg.lut_dir, e))?;
    let mut reports = Vec::new();
    let mut orders = vec![(Order::Fo, cfg.fo_window)];
    if needs_so(cfg) {
        let (t1, t2) = so_orders(cfg);
        orders.push((t1, cfg.so_window));
        orders.push((t2, cfg.so_window));
    }
    for &spans in &cfg.spans {
        let kp = kernel_params(cfg, spans)?;
        for &(order, window) in &orders {
            let q = if order == Order::Fo {
                QuadratureSpec::fo_default()
            } else {
                QuadratureSpec::so_default()
            };
            let mut table = build_table(order, window, cfg.mu_db, &kp, &q)?;
            let kept = table.len();
            if cfg.quant_step > 0.0 {
                table = quantize_table(&table, cfg.quant_step);
            }
            let path = lut_path(cfg, order, spans);
            save_table(&table, &path)?;
            reports.push(LutReport {
                order,
                spans,
                tuples: (2 * window as u64 + 1).pow(order.dims() as u32),
                kept,
                clusters: table.cluster_count(),
                path,
            });
        }
    }
    Ok(reports)
}

pub fn load_tables(cfg: &ExperimentConfig, spans: usize) -> Result<Tables> {
    let kp = kernel_params(cfg, spans)?;
    let fo = load_table(&lut_path(cfg, Order::Fo, spans), &kp)?;
    let so = if needs_so(cfg) {
        let (o1, o2) = so_orders(cfg);
        Some((
            load_table(&lut_path(cfg, o1, spans), &kp)?,
            load_table(&lut_path(cfg, o2, spans), &kp)?,
        ))
    } else {
        None
    };
    Ok(Tables { fo, so })
}

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub engine: Engine,
    pub spans: usize,
    pub power_dbm: f64,
    pub seed: u64,
}

fn noise_seed(cell: &Cell) -> u64 {
    // engine-independent so that all engines see the same noise realization
    let p = (cell.power_dbm * 1000.0).round() as i64 as u64;
    cell.seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((cell.spans as u64) << 32)
        .wrapping_add(p)
}

/// Transmit, propagate and detect one frame; returns `(bit errors, bits)`.
pub fn simulate_cell(cfg: &ExperimentConfig, cell: &Cell, tables: Option<&Tables>) -> Result<(u64, u64)> {
    let alphabet = Alphabet::new(cfg.modulation());
    let (frame, rx) = receive_cell(cfg, cell, tables)?;
    count_bit_errors(&frame, &decide(&rx, &alphabet), &alphabet)
}

/// Transmitted symbols and gain-equalized received symbols of one cell.
pub fn receive_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    tables: Option<&Tables>,
) -> Result<(SymbolFrame, SymbolFrame)> {
    let link = cfg.link(cell.spans)?.with_launch_power_dbm(cell.power_dbm)?;
    let alphabet = Alphabet::new(cfg.modulation());
    let frame = SymbolFrame::random(&alphabet, cfg.n_symbols, link.symbol_rate(), cell.seed);

    let tx = match cell.engine {
        Engine::Fo | Engine::So => {
            let t = tables.ok_or_else(|| Error::config("predistortion needs coefficient tables"))?;
            let mut pc = PredistortConfig::fo(t.fo.clone(), link.gamma, link.peak_power);
            pc.edges = cfg.edge_mode();
            pc.so_scheme = cfg.scheme();
            pc.include_fo_in_so = cfg.include_fo_in_so;
            pc.remove_common_phase = cfg.remove_common_phase;
            let mode = if cell.engine == Engine::So {
                let (t1, t2) = t.so.clone().ok_or_else(|| Error::config("second-order tables missing"))?;
                pc = pc.with_so(t1, t2);
                PredistortMode::So
            } else {
                PredistortMode::Fo
            };
            predistort(&frame, &pc, mode)?
        }
        Engine::Edc | Engine::Dbp => frame.clone(),
    };

    let filter = RrcFilter::new(cfg.roll_off, cfg.rrc_span_symbols, cfg.sps)?;
    let env = shape_scaled(&tx, &filter, nominal_amplitude(&filter, dbm_to_w(cell.power_dbm)))?;
    let mut amp = AmplifierModel::for_link(&link, env.sample_rate, noise_seed(cell));
    if !cfg.ase_noise {
        amp = amp.noiseless();
    }
    let ssfm = SsfmConfig::with_steps(cfg.steps_per_span);
    let rx_env = propagate_link(&env, &link, &ssfm, &amp)?;
    let rx_env = match cell.engine {
        Engine::Dbp => dbp(
            &rx_env,
            &DbpConfig {
                steps_per_span: cfg.dbp_steps_per_span,
                params: link,
            },
        )?,
        _ => edc(&rx_env, &link),
    };
    let rx = matched_filter_downsample(&rx_env, &filter, link.symbol_rate())?;
    let rx = equalize_gain(&frame, &rx)?;
    Ok((frame, rx))
}

/// Signal-to-noise ratio of equalized symbols against the transmitted ones, dB.
pub fn effective_snr_db(tx: &SymbolFrame, rx: &SymbolFrame) -> f64 {
    let err: f64 = tx.symbols.iter().zip(&rx.symbols).map(|(a, b)| (a - b).norm_sqr()).sum();
    10.0 * (tx.mean_energy() * tx.len() as f64 / err).log10()
}

/// Every grid cell in canonical order: engine, distance, power, seed.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut engines = cfg.engines.clone();
    engines.sort();
    engines.dedup();
    let mut spans = cfg.spans.clone();
    spans.sort_unstable();
    spans.dedup();
    let mut out = Vec::new();
    for &engine in &engines {
        for &s in &spans {
            for p in cfg.powers() {
                for &seed in &cfg.seeds {
                    out.push(Cell {
                        engine,
                        spans: s,
                        power_dbm: p,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// Runs the full grid. Records are merged over seeds and sorted by cell key.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    let mut spans = cfg.spans.clone();
    spans.sort_unstable();
    spans.dedup();
    let tables: Vec<Option<Tables>> = spans
        .iter()
        .map(|&s| needs_tables(cfg).then(|| load_tables(cfg, s)).transpose())
        .collect::<Result<_>>()?;
    let grid = cells(cfg);
    let counts: Vec<(u64, u64)> = grid
        .par_iter()
        .map(|cell| {
            let i = spans.iter().position(|&s| s == cell.spans).expect("span in grid");
            let r = simulate_cell(cfg, cell, tables[i].as_ref());
            if let Ok((e, b)) = &r {
                log::info!(
                    "{} {} spans {:+.2} dBm seed {}: {e}/{b}",
                    cell.engine,
                    cell.spans,
                    cell.power_dbm,
                    cell.seed
                );
            }
            r
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<BerRecord> = Vec::new();
    for (cell, (e, b)) in grid.iter().zip(counts) {
        let distance = cell.spans as f64 * cfg.span_length_km * 1e3;
        match records.last_mut() {
            Some(r) if r.engine == cell.engine.as_str() && r.distance == distance && r.launch_power == cell.power_dbm => {
                r.bit_errors += e;
                r.bits += b;
                r.ber = r.bit_errors as f64 / r.bits as f64;
            }
            _ => records.push(BerRecord::new(cell.engine.as_str(), distance, cell.power_dbm, e, b, cell.seed)?),
        }
    }
    Ok(records)
}
