use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::gaussian::{self, NodeForm};
use super::printed::PrintedForms;
use super::quadrature::{graded_edges, Estimate, QuadratureRule, QuadratureSpec, TriangleRule};
use super::{fo_estimate, scale, so_adaptive, KernelParams, Order};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const MAX_LEVEL: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    /// `(m, n)` padded with zeros for first order, `(m, n, l, k)` otherwise.
    pub index: [i16; 4],
    pub value: Complex64,
    /// Entries sharing a cluster carry the same value.
    pub cluster: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub order: Order,
    pub window: u16,
    pub mu_db: f64,
    pub quant_step: f64,
    pub fingerprint: [u8; 8],
    /// Sorted by index.
    pub entries: Vec<TableEntry>,
}

impl CoefficientTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: [i16; 4]) -> Option<Complex64> {
        self.entries
            .binary_search_by(|e| e.index.cmp(&index))
            .ok()
            .map(|i| self.entries[i].value)
    }

    /// The all-zero-index coefficient, or the largest entry if it was pruned.
    pub fn reference(&self) -> Option<Complex64> {
        self.get([0; 4]).or_else(|| {
            self.entries
                .iter()
                .map(|e| e.value)
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        })
    }

    pub fn is_quantized(&self) -> bool {
        self.quant_step > 0.0
    }

    pub fn cluster_count(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.cluster)
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    /// Largest absolute index over kept entries.
    pub fn max_abs_index(&self) -> i16 {
        self.entries
            .iter()
            .flat_map(|e| e.index)
            .map(|i| i.abs())
            .max()
            .unwrap_or(0)
    }

    /// Table with every value replaced by zero (same support).
    pub fn zeroed(&self) -> Self {
        let mut t = self.clone();
        for e in &mut t.entries {
            e.value = ZERO;
        }
        t
    }

    pub(crate) fn renumber_clusters(&mut self) {
        if self.is_quantized() {
            let mut ids: HashMap<(u64, u64), u32> = HashMap::new();
            for e in &mut self.entries {
                let next = ids.len() as u32;
                e.cluster = *ids.entry((e.value.re.to_bits(), e.value.im.to_bits())).or_insert(next);
            }
        } else {
            for (i, e) in self.entries.iter_mut().enumerate() {
                e.cluster = i as u32;
            }
        }
    }
}

/// Keeps entries with `20·log10(|C|/|C₀|) ≥ μ`.
pub fn prune_table(table: &CoefficientTable, mu_db: f64) -> CoefficientTable {
    let mut out = table.clone();
    out.mu_db = mu_db;
    if let Some(c0) = table.get([0; 4]) {
        let floor = c0.norm() * 10f64.powf(mu_db / 20.0);
        out.entries.retain(|e| e.value.norm() >= floor);
    }
    out.renumber_clusters();
    out
}

/// Clusters coefficients on a (dB-magnitude, phase) grid and replaces each
/// cluster by its mean. Magnitude bins are `2·step` dB wide; phase bins span
/// the same relative change, `2·step·ln10/20` rad. `step = 0` leaves the table as is.
pub fn quantize_table(table: &CoefficientTable, step: f64) -> CoefficientTable {
    let mut out = table.clone();
    if !(step > 0.0) {
        return out;
    }
    let Some(c0) = table.reference() else {
        out.quant_step = step;
        return out;
    };
    let width = 2.0 * step;
    let phase_width = width * std::f64::consts::LN_10 / 20.0;
    let key = |v: Complex64| -> (i64, i64) {
        if v.norm() == 0.0 || c0.norm() == 0.0 {
            return (i64::MIN, 0);
        }
        let db = 20.0 * (v.norm() / c0.norm()).log10();
        ((db / width).round() as i64, (v.arg() / phase_width).round() as i64)
    };
    let mut order: Vec<(i64, i64)> = Vec::new();
    let mut sums: HashMap<(i64, i64), (Complex64, usize)> = HashMap::new();
    for e in &table.entries {
        let k = key(e.value);
        let slot = sums.entry(k).or_insert_with(|| {
            order.push(k);
            (ZERO, 0)
        });
        slot.0 += e.value;
        slot.1 += 1;
    }
    let ids: HashMap<(i64, i64), u32> = order.iter().enumerate().map(|(i, k)| (*k, i as u32)).collect();
    for e in &mut out.entries {
        let k = key(e.value);
        let (sum, count) = sums[&k];
        e.value = sum / count as f64;
        e.cluster = ids[&k];
    }
    out.quant_step = step;
    out
}

/// Evaluates every tuple with `|index| ≤ window`, then drops entries below `μ`.
pub fn build_table(
    order: Order,
    window: u16,
    mu_db: f64,
    kp: &KernelParams,
    q: &QuadratureSpec,
) -> Result<CoefficientTable> {
    kp.validate()?;
    if window > i16::MAX as u16 {
        return Err(Error::config(format!("window {window} exceeds the index range")));
    }
    let w = window as i32;
    let values = if order == Order::Fo {
        build_fo(w, mu_db, kp, q)?
    } else {
        match q.rule {
            QuadratureRule::TensorTriangle => build_so_tensor(order, w, mu_db, kp, q)?,
            QuadratureRule::AdaptiveNested => build_so_adaptive(order, w, kp, q)?,
        }
    };
    let mut table = CoefficientTable {
        order,
        window,
        mu_db: f64::NEG_INFINITY,
        quant_step: 0.0,
        fingerprint: kp.fingerprint(),
        entries: values
            .into_iter()
            .map(|(index, value)| TableEntry {
                index: index.map(|x| x as i16),
                value,
                cluster: 0,
            })
            .collect(),
    };
    table.entries.sort_by(|a, b| a.index.cmp(&b.index));
    table.renumber_clusters();
    let before = table.len();
    let table = prune_table(&table, mu_db);
    log::info!(
        "{order} table: window {window}, {before} tuples, {} kept at mu {mu_db} dB",
        table.len()
    );
    Ok(table)
}

/// Absolute tolerance used during a build: the spec floor, relaxed to a small
/// fraction of the pruning threshold once the reference coefficient is known.
fn build_floor(order: Order, kp: &KernelParams, q: &QuadratureSpec, c0: f64, mu_db: f64) -> f64 {
    let base = q.abs_tol * scale(order, kp);
    if mu_db.is_finite() {
        base.max(1e-3 * c0 * 10f64.powf(mu_db / 20.0))
    } else {
        base
    }
}

fn canonical_fo(m: i32, n: i32) -> (i32, i32) {
    [(m, n), (n, m), (-m, -n), (-n, -m)].into_iter().min().unwrap()
}

fn build_fo(w: i32, mu_db: f64, kp: &KernelParams, q: &QuadratureSpec) -> Result<Vec<([i32; 4], Complex64)>> {
    let c0 = fo_estimate(0, 0, kp, q)?.value.norm();
    let spec = QuadratureSpec {
        abs_tol: build_floor(Order::Fo, kp, q, c0, mu_db) / kp.length,
        ..*q
    };
    let mut reps: Vec<(i32, i32)> = (-w..=w)
        .flat_map(|m| (-w..=w).map(move |n| canonical_fo(m, n)))
        .collect();
    reps.sort_unstable();
    reps.dedup();
    let computed: Vec<((i32, i32), Complex64)> = reps
        .par_iter()
        .map(|&(m, n)| {
            fo_estimate(m, n, kp, &spec)
                .map(|e| ((m, n), e.value))
                .map_err(|e| Error::TableBuild {
                    index: vec![m, n],
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let lookup: HashMap<(i32, i32), Complex64> = computed.into_iter().collect();
    Ok((-w..=w)
        .flat_map(|m| (-w..=w).map(move |n| (m, n)))
        .map(|(m, n)| ([m, n, 0, 0], lookup[&canonical_fo(m, n)]))
        .collect())
}

fn symmetric(order: Order) -> bool {
    matches!(order, Order::SoTerm1 | Order::SoTerm2)
}

fn build_so_adaptive(
    order: Order,
    w: i32,
    kp: &KernelParams,
    q: &QuadratureSpec,
) -> Result<Vec<([i32; 4], Complex64)>> {
    let tuples = lattice(w, symmetric(order));
    let values: Vec<([i32; 4], Complex64)> = tuples
        .par_iter()
        .map(|&idx| {
            so_adaptive(order, idx, kp, q)
                .map(|e| (idx, e.value))
                .map_err(|e| Error::TableBuild {
                    index: idx.to_vec(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    Ok(mirror(values, symmetric(order)))
}

fn lattice(w: i32, half: bool) -> Vec<[i32; 4]> {
    let mut out = Vec::new();
    for m in -w..=w {
        for n in -w..=w {
            if half && n < m {
                continue;
            }
            for l in -w..=w {
                for k in -w..=w {
                    out.push([m, n, l, k]);
                }
            }
        }
    }
    out
}

fn mirror(values: Vec<([i32; 4], Complex64)>, half: bool) -> Vec<([i32; 4], Complex64)> {
    if !half {
        return values;
    }
    let mut out = Vec::with_capacity(values.len() * 2);
    for (idx, v) in values {
        if idx[0] != idx[1] {
            out.push(([idx[1], idx[0], idx[2], idx[3]], v));
        }
        out.push((idx, v));
    }
    out
}

/// Shared quadrature nodes for a second-order kernel, refined `level` times.
pub(crate) struct SoNodes {
    forms: Vec<NodeForm<4>>,
    wk: Vec<f64>,
    wg: Vec<f64>,
    /// `exp(2·Q₃₃)` per node: step factor of the recurrence in `k`.
    step: Vec<Complex64>,
}

impl SoNodes {
    pub fn new(order: Order, kp: &KernelParams, level: u32) -> Result<Self> {
        let period = kp.loss_period.unwrap_or(kp.length).min(kp.length);
        let coarse = graded_edges(kp.length, &kp.breaks(), kp.dispersion_length(), period);
        let split = 1usize << level;
        let mut edges = vec![0.0];
        for e in coarse.windows(2) {
            for i in 1..=split {
                edges.push(e[0] + (e[1] - e[0]) * i as f64 / split as f64);
            }
        }
        let rule = TriangleRule::new(&edges);
        let printed = PrintedForms::new();
        let floor = 1e-12 * kp.tau.powi(8);
        let context = || format!("{order} node set");

        let mut forms = Vec::with_capacity(rule.len());
        let mut prev: Option<(f64, [Complex64; 3])> = None;
        for node in &rule.nodes {
            let (form, roots) = match order {
                Order::SoTerm1 => gaussian::term1_node(kp, node.z, node.s),
                Order::SoTerm2 => gaussian::term2_node(kp, node.z, node.s),
                Order::SoTerm1Printed | Order::SoTerm2Printed => {
                    let (f, r, mag) = if order == Order::SoTerm1Printed {
                        printed.term1(kp, node.z, node.s)
                    } else {
                        printed.term2(kp, node.z, node.s)
                    };
                    if mag < floor {
                        return Err(Error::Singularity {
                            context: context(),
                            magnitude: mag,
                        });
                    }
                    (f, r)
                }
                Order::Fo => return Err(Error::config("first-order kernels have no triangle node set")),
            };
            if let Some((z, p)) = prev {
                if z == node.z {
                    for (a, b) in p.iter().zip(&roots) {
                        let jump = (b / a).arg().abs();
                        if jump > std::f64::consts::FRAC_PI_2 {
                            return Err(Error::BranchCut {
                                context: context(),
                                jump,
                                at: node.s,
                            });
                        }
                    }
                }
            }
            prev = Some((node.z, roots));
            forms.push(form);
        }
        let step = forms.iter().map(|f| (f.q[3][3] * 2.0).exp()).collect();
        Ok(SoNodes {
            forms,
            wk: rule.nodes.iter().map(|n| n.wk).collect(),
            wg: rule.nodes.iter().map(|n| n.wg).collect(),
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn single(&self, idx: [i32; 4]) -> Estimate {
        let (mut k, mut g) = (ZERO, ZERO);
        for ((f, wk), wg) in self.forms.iter().zip(&self.wk).zip(&self.wg) {
            let v = f.eval(&idx);
            k += v * *wk;
            g += v * *wg;
        }
        Estimate {
            value: k,
            error: (k - g).norm(),
            evaluations: self.len(),
        }
    }

    /// Kronrod and Gauss sums for `(m, n, l, k)` over every `|k| ≤ w`.
    /// Node contributions below `cut` are skipped.
    fn triple(&self, m: i32, n: i32, l: i32, w: i32, cut: f64, kacc: &mut [Complex64], gacc: &mut [Complex64]) {
        let v = [m as f64, n as f64, l as f64];
        for (i, f) in self.forms.iter().enumerate() {
            let mut e0 = ZERO;
            let mut q1 = f.g[3];
            for a in 0..3 {
                e0 += f.g[a] * v[a];
                q1 += f.q[a][3] * (2.0 * v[a]);
                for b in 0..3 {
                    e0 += f.q[a][b] * (v[a] * v[b]);
                }
            }
            let q2 = f.q[3][3];
            let kstar = if q2.re < 0.0 {
                ((-q1.re / (2.0 * q2.re)).round()).clamp(-w as f64, w as f64) as i32
            } else if q1.re >= 0.0 {
                w
            } else {
                -w
            };
            let ks = kstar as f64;
            let peak = f.base * (e0 + q1 * ks + q2 * (ks * ks)).exp();
            let (wk, wg) = (self.wk[i], self.wg[i]);
            if peak.norm() * wk.max(wg) < cut {
                continue;
            }
            let step = self.step[i];
            let decaying = q2.re < 0.0;

            let mut val = peak;
            let mut r = (q1 + q2 * (2.0 * ks + 1.0)).exp();
            let mut k = kstar;
            loop {
                let slot = (k + w) as usize;
                kacc[slot] += val * wk;
                gacc[slot] += val * wg;
                if k == w {
                    break;
                }
                val *= r;
                r *= step;
                k += 1;
                if decaying && val.norm() * wk < cut {
                    break;
                }
            }

            let mut val = peak * (-q1 + q2 * (1.0 - 2.0 * ks)).exp();
            let mut r = (-q1 + q2 * (3.0 - 2.0 * ks)).exp();
            let mut k = kstar - 1;
            while k >= -w {
                if decaying && val.norm() * wk < cut {
                    break;
                }
                let slot = (k + w) as usize;
                kacc[slot] += val * wk;
                gacc[slot] += val * wg;
                val *= r;
                r *= step;
                k -= 1;
            }
        }
    }
}

pub(crate) fn so_tensor_single(order: Order, idx: [i32; 4], kp: &KernelParams, q: &QuadratureSpec) -> Result<Estimate> {
    let abs = q.abs_tol * scale(order, kp);
    let mut last = None;
    for level in 0..=MAX_LEVEL {
        let est = SoNodes::new(order, kp, level)?.single(idx);
        let tol = (q.rel_tol * est.value.norm()).max(abs);
        if est.error <= tol {
            return Ok(est);
        }
        last = Some((est, tol));
    }
    let (est, tol) = last.expect("at least one level");
    Err(Error::Quadrature {
        context: format!("{order} coefficient {idx:?}"),
        estimate: est.error,
        tolerance: tol,
        lo: 0.0,
        hi: kp.length,
    })
}

/// An estimate is settled once it meets tolerance or is certain to be pruned.
fn needs_refinement(v: Complex64, err: f64, rel_tol: f64, floor: f64, prune_below: f64) -> bool {
    err > (rel_tol * v.norm()).max(floor) && v.norm() + err >= prune_below
}

fn build_so_tensor(
    order: Order,
    w: i32,
    mu_db: f64,
    kp: &KernelParams,
    q: &QuadratureSpec,
) -> Result<Vec<([i32; 4], Complex64)>> {
    let c0 = so_tensor_single(order, [0; 4], kp, q)
        .map_err(|e| Error::TableBuild {
            index: vec![0; 4],
            source: Box::new(e),
        })?
        .value
        .norm();
    let floor = build_floor(order, kp, q, c0, mu_db);
    let prune_below = c0 * 10f64.powf(mu_db / 20.0);
    let area = 0.5 * kp.length * kp.length;
    let cut = 1e-6 * floor / area;
    let half = symmetric(order);

    let nodes = SoNodes::new(order, kp, 0)?;
    let triples: Vec<(i32, i32, i32)> = (-w..=w)
        .flat_map(|m| (-w..=w).flat_map(move |n| (-w..=w).map(move |l| (m, n, l))))
        .filter(|&(m, n, _)| !half || n >= m)
        .collect();
    log::info!(
        "{order}: {} nodes, {} index triples",
        nodes.len(),
        triples.len()
    );
    let width = (2 * w + 1) as usize;
    let rows: Vec<Vec<(Complex64, f64)>> = triples
        .par_iter()
        .map(|&(m, n, l)| {
            let mut kacc = vec![ZERO; width];
            let mut gacc = vec![ZERO; width];
            nodes.triple(m, n, l, w, cut, &mut kacc, &mut gacc);
            kacc.iter().zip(&gacc).map(|(k, g)| (*k, (k - g).norm())).collect()
        })
        .collect();

    let mut values = Vec::with_capacity(triples.len() * width);
    let mut errors = Vec::with_capacity(triples.len() * width);
    let mut retry = Vec::new();
    for (&(m, n, l), row) in triples.iter().zip(&rows) {
        for (slot, &(v, err)) in row.iter().enumerate() {
            let idx = [m, n, l, slot as i32 - w];
            if needs_refinement(v, err, q.rel_tol, floor, prune_below) {
                retry.push(values.len());
            }
            values.push((idx, v));
            errors.push(err);
        }
    }
    let mut level = 1;
    while !retry.is_empty() {
        if level > MAX_LEVEL {
            let (idx, v) = values[retry[0]];
            return Err(Error::TableBuild {
                index: idx.to_vec(),
                source: Box::new(Error::Quadrature {
                    context: format!("{order} coefficient {idx:?} (value {v})"),
                    estimate: errors[retry[0]],
                    tolerance: (q.rel_tol * v.norm()).max(floor),
                    lo: 0.0,
                    hi: kp.length,
                }),
            });
        }
        log::info!("{order}: refining {} tuples at level {level}", retry.len());
        let fine = SoNodes::new(order, kp, level)?;
        let redone: Vec<Estimate> = retry.par_iter().map(|&i| fine.single(values[i].0)).collect();
        let mut still = Vec::new();
        for (&i, est) in retry.iter().zip(redone) {
            values[i].1 = est.value;
            errors[i] = est.error;
            if needs_refinement(est.value, est.error, q.rel_tol, floor, prune_below) {
                still.push(i);
            }
        }
        retry = still;
        level += 1;
    }
    Ok(mirror(values, half))
}
