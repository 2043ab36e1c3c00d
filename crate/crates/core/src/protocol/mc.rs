//! Monte-Carlo runs of the protocol.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::engine::{Engine, Prefix};
use super::exact::{Atom, Induced};
use super::report::{full_cell, full_sizes, iid_prob, measure, Backend, SimulationReport};
use super::seq::{index, substream_seed, MAX_ROUNDS};
use super::{ProtocolInstance, Result};
use crate::region::parity;

/// Trials are split into this many independently seeded chunks regardless of
/// the thread count; even chunks form the sign-estimation half of the TV
/// estimator, odd chunks the evaluation half.
const CHUNKS: u64 = 64;

fn draw<R: Rng>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.enumerate() {
        if p > 0.0 {
            last = k;
            acc += p;
            if u < acc {
                return k;
            }
        }
    }
    last
}

fn draw_seq<R: Rng>(rng: &mut R, rows: &[&[f64]]) -> u64 {
    let a = rows.first().map_or(1, |r| r.len());
    let d: Vec<usize> = rows.iter().map(|row| draw(rng, row.iter().copied())).collect();
    index(&d, a)
}

fn trial<R: Rng>(eng: &mut Engine, rng: &mut R) -> Result<Atom> {
    let inst = eng.inst;
    let s = inst.tables.sizes;
    let n = inst.n;
    let cell = s.x1 * s.x2 * s.z;
    let src: Vec<usize> = (0..n)
        .map(|_| draw(rng, inst.tables.source.iter().copied()))
        .collect();
    let x1 = index(&src.iter().map(|c| c / (s.x2 * s.z)).collect::<Vec<_>>(), s.x1);
    let x2 = index(&src.iter().map(|c| (c / s.z) % s.x2).collect::<Vec<_>>(), s.x2);
    let z = index(&src.iter().map(|c| c % s.z).collect::<Vec<_>>(), s.z);
    debug_assert!(cell >= 1);
    let mut fa: Prefix = [0; MAX_ROUNDS];
    let mut fb: Prefix = [0; MAX_ROUNDS];
    let mut b: Prefix = [0; MAX_ROUNDS];
    let mut k: Prefix = [0; MAX_ROUNDS];
    let mut omega = 0;
    let mut fallbacks = 0u32;
    for i in 1..=inst.r() {
        let sender = parity(i);
        let (xs, xr) = if sender == 1 { (x1, x2) } else { (x2, x1) };
        let (own, other) = if sender == 1 { (&mut fa, &mut fb) } else { (&mut fb, &mut fa) };
        let groups = eng.send_groups(i, xs, own);
        let nv = inst.shared_values(i);
        let v = rng.gen_range(0..nv);
        let dist = match groups.groups.get(&v) {
            Some(g) => g,
            None => {
                fallbacks += 1;
                &groups.full
            }
        };
        fallbacks += groups.context_fallback as u32;
        let f = dist[draw(rng, dist.iter().map(|x| x.1))].0;
        own[i - 1] = f;
        let ki = eng.message(i, own);
        let (fhat, dec_fb) = eng.decode(i, xr, other, v, ki)?;
        other[i - 1] = fhat;
        fallbacks += dec_fb as u32;
        k[i - 1] = ki;
        if i == 1 {
            let nb1 = inst.bins.shared[0];
            omega = v / nb1;
            b[0] = v % nb1;
        } else {
            b[i - 1] = v;
        }
    }
    let (rows1, fb1) = eng.output_rows(1, x1, &fa);
    let (rows2, fb2) = eng.output_rows(2, x2, &fb);
    let y1 = draw_seq(rng, &rows1);
    let y2 = draw_seq(rng, &rows2);
    let srows = eng.secret_rows([x1, x2, y1, y2, z]);
    let sv = draw_seq(rng, &srows);
    Ok(Atom {
        x1,
        x2,
        z,
        y1,
        y2,
        s: sv,
        omega,
        b,
        k,
        fa,
        fb,
        ta: eng.key(&fa),
        tb: eng.key(&fb),
        fallbacks: fallbacks + fb1 as u32 + fb2 as u32,
    })
}

/// Plug-in estimates of every report field from `trials` simulated runs.
/// Deterministic in `(seed, stream)`; the binnings depend on the seed only.
///
/// `tv_error` and `epsilon` use a split-sample estimator: the even chunks
/// pick the set `{c : q̂(c) > p(c)}`, the odd chunks estimate `q − p` on it
/// without bias, giving a lower estimate of TV with a binomial standard
/// error. Information quantities are plug-in estimates, biased upward by
/// about `(cells − 1)/(2N ln 2)` bits (Miller–Madow).
pub fn run_monte_carlo(inst: &ProtocolInstance, trials: u64, stream: u64) -> Result<SimulationReport> {
    let trials = trials.max(1);
    let parts: Vec<Result<(u64, BTreeMap<Atom, u64>)>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = trials / CHUNKS + u64::from(c < trials % CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(inst.seed, stream, c));
            let mut eng = Engine::new(inst);
            let mut m = BTreeMap::new();
            for _ in 0..count {
                *m.entry(trial(&mut eng, &mut rng)?).or_insert(0) += 1;
            }
            Ok((c, m))
        })
        .collect();
    let mut all: BTreeMap<Atom, u64> = BTreeMap::new();
    let mut halves: [BTreeMap<Atom, u64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for p in parts {
        let (c, m) = p?;
        for (a, k) in m {
            *all.entry(a).or_insert(0) += k;
            *halves[(c % 2) as usize].entry(a).or_insert(0) += k;
        }
    }
    let nf = trials as f64;
    let induced = Induced {
        atoms: all.iter().map(|(a, &k)| (*a, k as f64 / nf)).collect(),
    };
    let mut rep = measure(inst, &induced)?;
    rep.mode = Backend::Mc;
    rep.trials = Some(trials);
    rep.stream = Some(stream);
    rep.tv_best_b = None;
    rep.tv_worst_b = None;
    rep.sw_error_se = Some(rep.sw_error.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect());
    let fs = full_sizes(inst);
    let n = inst.n;
    let target = |c: &[u64; 6]| iid_prob(&inst.tables.target, c, &fs, n);
    let split = split_tv(&halves[0], &halves[1], full_cell, target);
    if let Some((tv, se)) = split {
        rep.tv_error = tv;
        rep.tv_error_se = Some(se);
    }
    rep.note = Some(
        "mc: tv_error split-sample estimate; information quantities are plug-in (Miller-Madow bias ~ (cells-1)/(2N ln 2) bits)"
            .into(),
    );
    Ok(rep)
}

/// Split-sample TV estimate and its standard error; `None` when a half is empty.
fn split_tv<const K: usize>(
    a: &BTreeMap<Atom, u64>,
    b: &BTreeMap<Atom, u64>,
    cell: impl Fn(&Atom) -> [u64; K],
    target: impl Fn(&[u64; K]) -> f64,
) -> Option<(f64, f64)> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return None;
    }
    let mut qa: BTreeMap<[u64; K], u64> = BTreeMap::new();
    for (x, &k) in a {
        *qa.entry(cell(x)).or_insert(0) += k;
    }
    let mut chosen: BTreeMap<[u64; K], f64> = BTreeMap::new();
    for (c, &k) in &qa {
        let p = target(c);
        if k as f64 / na as f64 > p {
            chosen.insert(*c, p);
        }
    }
    let p_set: f64 = chosen.values().sum();
    let hits: u64 = b
        .iter()
        .filter(|(x, _)| chosen.contains_key(&cell(x)))
        .map(|(_, &k)| k)
        .sum();
    let m = hits as f64 / nb as f64;
    Some(((m - p_set).max(0.0), (m * (1.0 - m) / nb as f64).sqrt()))
}
