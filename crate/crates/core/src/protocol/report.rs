//! Fidelity, leakage and key metrics of an induced distribution, sweeps and
//! CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::{run_exact, Atom, Induced};
use super::mc::run_monte_carlo;
use super::seq::digits;
use super::{build, ProtocolError, ProtocolInstance, ProtocolRates, Result};
use crate::region::AuxScheme;

/// How an induced distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Mc,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: usize,
    pub seed: u64,
    pub mode: Backend,
    /// TV between the induced and the i.i.d. target law of
    /// `(X1ⁿ, X2ⁿ, Zⁿ, Y1ⁿ, Y2ⁿ, Sⁿ)`.
    pub tv_error: f64,
    /// The fidelity criterion proper: TV on `(X1ⁿ, X2ⁿ, Y1ⁿ, Y2ⁿ)` only.
    pub epsilon: f64,
    /// `|I(Sⁿ; Zⁿ, K_[1:r]) − n·I(S;Z)|`.
    pub leakage: f64,
    pub leakage_per_symbol: f64,
    /// Per round, probability that the receiver's estimate of `F_iⁿ` is wrong.
    pub sw_error: Vec<f64>,
    /// `I(T; Sⁿ, Zⁿ, K_[1:r], B_[1:r])` with terminal 1's key.
    pub key_leak: f64,
    /// TV of terminal 1's key from uniform.
    pub key_uniformity: f64,
    pub key_agree_error: f64,
    /// Expected number of sampler/decoder fallbacks per protocol run.
    pub fallback_count: f64,
    /// Exact mode: TV conditioned on the best and worst shared-randomness value.
    pub tv_best_b: Option<f64>,
    pub tv_worst_b: Option<f64>,
    /// Monte-Carlo mode: trials, stream and standard errors.
    pub trials: Option<u64>,
    pub stream: Option<u64>,
    pub tv_error_se: Option<f64>,
    pub sw_error_se: Option<Vec<f64>>,
    pub total_mass: f64,
    pub note: Option<String>,
}

/// `p^{⊗n}` of a tuple of sequences under a single-letter table whose
/// variables have the given sizes (last fastest).
pub(crate) fn iid_prob(table: &[f64], seqs: &[u64], sizes: &[usize], n: usize) -> f64 {
    let cols: Vec<Vec<usize>> = seqs.iter().zip(sizes).map(|(&q, &a)| digits(q, a, n)).collect();
    (0..n)
        .map(|t| {
            let idx = cols.iter().zip(sizes).fold(0, |acc, (c, &a)| acc * a + c[t]);
            table[idx]
        })
        .product()
}

pub(crate) fn full_cell(a: &Atom) -> [u64; 6] {
    [a.x1, a.x2, a.z, a.y1, a.y2, a.s]
}

pub(crate) fn xy_cell(a: &Atom) -> [u64; 4] {
    [a.x1, a.x2, a.y1, a.y2]
}

pub(crate) fn full_sizes(inst: &ProtocolInstance) -> [usize; 6] {
    let s = inst.tables.sizes;
    [s.x1, s.x2, s.z, s.y1, s.y2, s.s]
}

pub(crate) fn xy_sizes(inst: &ProtocolInstance) -> [usize; 4] {
    let s = inst.tables.sizes;
    [s.x1, s.x2, s.y1, s.y2]
}

/// TV of a sparse (sub)distribution `q` from `target`, counting target mass
/// outside `q`'s support.
fn tv_against<const K: usize>(q: &BTreeMap<[u64; K], f64>, target: impl Fn(&[u64; K]) -> f64) -> f64 {
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (c, &m) in q {
        let p = target(c);
        diff += (m - p).abs();
        covered += p;
    }
    (0.5 * (diff + (1.0 - covered).max(0.0))).clamp(0.0, 1.0)
}

fn entropy<K>(m: &BTreeMap<K, f64>) -> f64 {
    m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// `I(A;B)` from a sparse joint keyed by `(a, b)`.
fn mutual_info<A: Ord + Clone, B: Ord + Clone>(joint: &BTreeMap<(A, B), f64>) -> f64 {
    let mut ma: BTreeMap<A, f64> = BTreeMap::new();
    let mut mb: BTreeMap<B, f64> = BTreeMap::new();
    for ((a, b), &p) in joint {
        *ma.entry(a.clone()).or_insert(0.0) += p;
        *mb.entry(b.clone()).or_insert(0.0) += p;
    }
    (entropy(&ma) + entropy(&mb) - entropy(joint)).max(0.0)
}

/// Every metric of the report from an induced distribution.
pub fn measure(inst: &ProtocolInstance, induced: &Induced) -> Result<SimulationReport> {
    let n = inst.n;
    let r = inst.r();
    let fs = full_sizes(inst);
    let xs = xy_sizes(inst);
    let tables = &inst.tables;
    let mut full: BTreeMap<[u64; 6], f64> = BTreeMap::new();
    let mut xy: BTreeMap<[u64; 4], f64> = BTreeMap::new();
    let mut leak: BTreeMap<(u64, (u64, [u64; 4])), f64> = BTreeMap::new();
    let mut key: BTreeMap<(u64, (u64, u64, [u64; 4], [u64; 4])), f64> = BTreeMap::new();
    let mut keys: BTreeMap<u64, f64> = BTreeMap::new();
    let mut by_b: BTreeMap<(u64, [u64; 4]), BTreeMap<[u64; 6], f64>> = BTreeMap::new();
    let mut sw = vec![0.0; r];
    let mut agree = 0.0;
    let mut fallbacks = 0.0;
    let mut total = 0.0;
    for (a, p) in &induced.atoms {
        let p = *p;
        total += p;
        *full.entry(full_cell(a)).or_insert(0.0) += p;
        *xy.entry(xy_cell(a)).or_insert(0.0) += p;
        *leak.entry((a.s, (a.z, a.k))).or_insert(0.0) += p;
        *key.entry((a.ta, (a.s, a.z, a.k, a.b))).or_insert(0.0) += p;
        *keys.entry(a.ta).or_insert(0.0) += p;
        *by_b
            .entry((a.omega, a.b))
            .or_default()
            .entry(full_cell(a))
            .or_insert(0.0) += p;
        for (i, e) in sw.iter_mut().enumerate() {
            if a.f_true(i + 1) != a.f_decoded(i + 1) {
                *e += p;
            }
        }
        if a.ta != a.tb {
            agree += p;
        }
        fallbacks += p * a.fallbacks as f64;
    }
    let target_full = |c: &[u64; 6]| iid_prob(&tables.target, c, &fs, n);
    let tv_error = tv_against(&full, target_full);
    let epsilon = tv_against(&xy, |c| iid_prob(&tables.target_xy, c, &xs, n));
    let leakage = (mutual_info(&leak) - n as f64 * tables.i_sz).abs();
    let nt = inst.bins.key;
    let seen: f64 = keys.values().map(|&q| (q - 1.0 / nt as f64).abs()).sum();
    let unseen = (nt - keys.len() as u64) as f64 / nt as f64;
    let key_uniformity = (0.5 * (seen + unseen)).clamp(0.0, 1.0);
    let mut best = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for cells in by_b.values() {
        let m: f64 = cells.values().sum();
        let cond: BTreeMap<[u64; 6], f64> = cells.iter().map(|(c, &q)| (*c, q / m)).collect();
        let tv = tv_against(&cond, target_full);
        best = best.min(tv);
        worst = worst.max(tv);
    }
    Ok(SimulationReport {
        n,
        seed: inst.seed,
        mode: Backend::Exact,
        tv_error,
        epsilon,
        leakage,
        leakage_per_symbol: leakage / n as f64,
        sw_error: sw,
        key_leak: mutual_info(&key),
        key_uniformity,
        key_agree_error: agree,
        fallback_count: fallbacks,
        tv_best_b: best.is_finite().then_some(best),
        tv_worst_b: best.is_finite().then_some(worst),
        trials: None,
        stream: None,
        tv_error_se: None,
        sw_error_se: None,
        total_mass: total,
        note: None,
    })
}

/// How each sweep row is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepBackend {
    /// Exact enumeration within an atom budget; when `mc_fallback` is set,
    /// over-budget rows fall back to that many Monte-Carlo trials.
    Exact { budget: usize, mc_fallback: Option<u64> },
    MonteCarlo { trials: u64, stream: u64 },
}

/// One report per `(n, seed)`, sorted by `(n, seed)`.
pub fn sweep(
    a: &AuxScheme,
    rates: &ProtocolRates,
    n_list: &[usize],
    seeds: &[u64],
    backend: SweepBackend,
) -> Result<Vec<SimulationReport>> {
    let mut jobs: Vec<(usize, u64)> = n_list
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    jobs.sort_unstable();
    jobs.dedup();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let inst = build(a, n, rates, seed)?;
            match backend {
                SweepBackend::Exact { budget, mc_fallback } => match run_exact(&inst, budget) {
                    Ok(ind) => measure(&inst, &ind),
                    Err(ProtocolError::BudgetExceeded { .. }) if mc_fallback.is_some() => {
                        run_monte_carlo(&inst, mc_fallback.unwrap_or(1), 0)
                    }
                    Err(e) => Err(e),
                },
                SweepBackend::MonteCarlo { trials, stream } => run_monte_carlo(&inst, trials, stream),
            }
        })
        .collect()
}

/// CSV header for `r` rounds.
pub fn csv_header(r: usize) -> String {
    let mut h = String::from("n,seed,mode,tv_error,leakage");
    for i in 1..=r {
        let _ = write!(h, ",sw_error_{i}");
    }
    h.push_str(",key_leak,key_uniformity,key_agree_error,fallback_count");
    h
}

/// Header without the per-round columns, for reference.
pub const CSV_HEADER: &str = "n,seed,mode,tv_error,leakage,sw_error_1..r,key_leak,key_uniformity,key_agree_error,fallback_count";

/// Rows in input order; floats use the shortest round-trip representation.
pub fn to_csv(reports: &[SimulationReport]) -> String {
    let r = reports.iter().map(|x| x.sw_error.len()).max().unwrap_or(0);
    let mut out = csv_header(r);
    out.push('\n');
    for x in reports {
        let _ = write!(out, "{},{},{},{},{}", x.n, x.seed, x.mode.as_str(), x.tv_error, x.leakage);
        for i in 0..r {
            match x.sw_error.get(i) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            x.key_leak, x.key_uniformity, x.key_agree_error, x.fallback_count
        );
    }
    out
}
