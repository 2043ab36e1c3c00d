//! Exact induced distribution by enumerating sources, shared randomness and
//! every sampler outcome.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::engine::{Engine, Prefix};
use super::seq::{digits, index, product_dist, MAX_ROUNDS};
use super::{ProtocolError, ProtocolInstance, Result};
use crate::region::parity;

/// One outcome of the protocol: sources, outputs, public and shared indices,
/// each terminal's auxiliary reconstruction and key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Atom {
    pub x1: u64,
    pub x2: u64,
    pub z: u64,
    pub y1: u64,
    pub y2: u64,
    pub s: u64,
    pub omega: u64,
    pub b: [u64; MAX_ROUNDS],
    pub k: [u64; MAX_ROUNDS],
    /// Terminal 1's view of `F_[1:r]ⁿ` (true for odd rounds).
    pub fa: [u64; MAX_ROUNDS],
    /// Terminal 2's view (true for even rounds).
    pub fb: [u64; MAX_ROUNDS],
    pub ta: u64,
    pub tb: u64,
    /// Sampler/decoder fallbacks taken on this path.
    pub fallbacks: u32,
}

impl Atom {
    /// The value of `F_iⁿ` actually drawn by round `i`'s sender.
    pub fn f_true(&self, i: usize) -> u64 {
        if parity(i) == 1 {
            self.fa[i - 1]
        } else {
            self.fb[i - 1]
        }
    }

    /// The receiver's estimate of `F_iⁿ`.
    pub fn f_decoded(&self, i: usize) -> u64 {
        if parity(i) == 1 {
            self.fb[i - 1]
        } else {
            self.fa[i - 1]
        }
    }
}

/// A weighted list of atoms: exact masses from [`run_exact`] or empirical
/// frequencies from Monte Carlo. Atoms may repeat.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Induced {
    pub atoms: Vec<(Atom, f64)>,
}

impl Induced {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Merge repeated atoms (sorted by atom).
    pub fn merged(&self) -> Self {
        let mut m: BTreeMap<Atom, f64> = BTreeMap::new();
        for &(a, p) in &self.atoms {
            *m.entry(a).or_insert(0.0) += p;
        }
        Self {
            atoms: m.into_iter().collect(),
        }
    }
}

/// Enumerate the source block `(x1ⁿ, x2ⁿ, zⁿ)` with its probability.
pub(crate) fn sources(inst: &ProtocolInstance) -> Vec<([u64; 3], f64)> {
    let s = inst.tables.sizes;
    let n = inst.n;
    let cell = s.x1 * s.x2 * s.z;
    let rows: Vec<&[f64]> = (0..n).map(|_| inst.tables.source.as_slice()).collect();
    product_dist(&rows)
        .into_iter()
        .map(|(q, p)| {
            let d = digits(q, cell, n);
            let x1: Vec<usize> = d.iter().map(|c| c / (s.x2 * s.z)).collect();
            let x2: Vec<usize> = d.iter().map(|c| (c / s.z) % s.x2).collect();
            let z: Vec<usize> = d.iter().map(|c| c % s.z).collect();
            ([index(&x1, s.x1), index(&x2, s.x2), index(&z, s.z)], p)
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Branch {
    x: [u64; 3],
    omega: u64,
    b: Prefix,
    k: Prefix,
    fa: Prefix,
    fb: Prefix,
    fallbacks: u32,
}

struct Walk<'e, 'a> {
    eng: &'e mut Engine<'a>,
    out: Vec<(Atom, f64)>,
    count: &'e AtomicUsize,
    budget: usize,
}

impl Walk<'_, '_> {
    fn explore(&mut self, br: Branch, prob: f64, i: usize) -> Result<()> {
        let inst = self.eng.inst;
        if i > inst.r() {
            return self.finish(br, prob);
        }
        let sender = parity(i);
        let (xs, xr) = if sender == 1 { (br.x[0], br.x[1]) } else { (br.x[1], br.x[0]) };
        let (own, other) = if sender == 1 { (br.fa, br.fb) } else { (br.fb, br.fa) };
        let groups = self.eng.send_groups(i, xs, &own);
        let nv = inst.shared_values(i);
        let nb1 = inst.bins.shared[0];
        for v in 0..nv {
            let (dist, fell_back) = match groups.groups.get(&v) {
                Some(g) => (g, false),
                None => (&groups.full, true),
            };
            let fb_count = fell_back as u32 + groups.context_fallback as u32;
            for &(f, p) in dist {
                let mut own2 = own;
                own2[i - 1] = f;
                let k = self.eng.message(i, &own2);
                let (fhat, dec_fb) = self.eng.decode(i, xr, &other, v, k)?;
                let mut other2 = other;
                other2[i - 1] = fhat;
                let mut next = br;
                if sender == 1 {
                    next.fa = own2;
                    next.fb = other2;
                } else {
                    next.fb = own2;
                    next.fa = other2;
                }
                next.k[i - 1] = k;
                if i == 1 {
                    next.omega = v / nb1;
                    next.b[0] = v % nb1;
                } else {
                    next.b[i - 1] = v;
                }
                next.fallbacks += fb_count + dec_fb as u32;
                self.explore(next, prob * p / nv as f64, i + 1)?;
            }
        }
        Ok(())
    }

    fn finish(&mut self, br: Branch, prob: f64) -> Result<()> {
        let [x1, x2, z] = br.x;
        let (rows1, fb1) = self.eng.output_rows(1, x1, &br.fa);
        let (rows2, fb2) = self.eng.output_rows(2, x2, &br.fb);
        let ta = self.eng.key(&br.fa);
        let tb = self.eng.key(&br.fb);
        let fallbacks = br.fallbacks + fb1 as u32 + fb2 as u32;
        for (y1, p1) in product_dist(&rows1) {
            for &(y2, p2) in &product_dist(&rows2) {
                let srows = self.eng.secret_rows([x1, x2, y1, y2, z]);
                for (s, p3) in product_dist(&srows) {
                    let c = self.count.fetch_add(1, Ordering::Relaxed) + 1;
                    if c > self.budget {
                        return Err(ProtocolError::BudgetExceeded {
                            needed: c as u128,
                            budget: self.budget,
                        });
                    }
                    self.out.push((
                        Atom {
                            x1,
                            x2,
                            z,
                            y1,
                            y2,
                            s,
                            omega: br.omega,
                            b: br.b,
                            k: br.k,
                            fa: br.fa,
                            fb: br.fb,
                            ta,
                            tb,
                            fallbacks,
                        },
                        prob * p1 * p2 * p3,
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Default atom budget for exact enumeration.
pub const DEFAULT_ATOM_BUDGET: usize = 1 << 21;

/// Exact induced distribution; fails once more than `budget` atoms are
/// generated. Sources are processed in parallel chunks and concatenated in
/// source order, so the result is identical across runs.
pub fn run_exact(inst: &ProtocolInstance, budget: usize) -> Result<Induced> {
    let src = sources(inst);
    let count = AtomicUsize::new(0);
    let chunk = (src.len() / (4 * rayon::current_num_threads()).max(1)).max(1);
    let parts: Vec<Result<Vec<(Atom, f64)>>> = src
        .par_chunks(chunk)
        .map(|part| {
            let mut eng = Engine::new(inst);
            let mut walk = Walk {
                eng: &mut eng,
                out: Vec::new(),
                count: &count,
                budget,
            };
            for &(x, p) in part {
                let br = Branch {
                    x,
                    omega: 0,
                    b: [0; MAX_ROUNDS],
                    k: [0; MAX_ROUNDS],
                    fa: [0; MAX_ROUNDS],
                    fb: [0; MAX_ROUNDS],
                    fallbacks: 0,
                };
                walk.explore(br, p, 1)?;
            }
            Ok(walk.out)
        })
        .collect();
    let mut atoms = Vec::new();
    for p in parts {
        atoms.extend(p?);
    }
    Ok(Induced { atoms })
}

/// Largest per-cell deviation of the induced conditionals from the
/// single-letter kernels: `p(y1ⁿ y2ⁿ sⁿ | xⁿ zⁿ, reconstructions, ω, b)`
/// against the product output samplers, and `p(zⁿ | xⁿ, ω, b)` against the
/// i.i.d. source conditional. Zero up to rounding when shared randomness
/// leaves the source-to-output kernel untouched.
pub fn bin_conditioning_gap(inst: &ProtocolInstance, induced: &Induced) -> f64 {
    type Ctx = ([u64; 3], Prefix, Prefix, u64, Prefix);
    let mut ctx: BTreeMap<Ctx, f64> = BTreeMap::new();
    let mut cell: BTreeMap<(Ctx, [u64; 3]), f64> = BTreeMap::new();
    let mut xb: BTreeMap<([u64; 2], u64, Prefix), f64> = BTreeMap::new();
    let mut xzb: BTreeMap<([u64; 3], u64, Prefix), f64> = BTreeMap::new();
    for &(a, p) in &induced.atoms {
        let c: Ctx = ([a.x1, a.x2, a.z], a.fa, a.fb, a.omega, a.b);
        *ctx.entry(c).or_insert(0.0) += p;
        *cell.entry((c, [a.y1, a.y2, a.s])).or_insert(0.0) += p;
        *xb.entry(([a.x1, a.x2], a.omega, a.b)).or_insert(0.0) += p;
        *xzb.entry(([a.x1, a.x2, a.z], a.omega, a.b)).or_insert(0.0) += p;
    }
    let eng = Engine::new(inst);
    let mut gap: f64 = 0.0;
    for ((c, [y1, y2, s]), p) in &cell {
        let (x, fa, fb) = (c.0, c.1, c.2);
        let (r1, _) = eng.output_rows(1, x[0], &fa);
        let (r2, _) = eng.output_rows(2, x[1], &fb);
        let rs = eng.secret_rows([x[0], x[1], *y1, *y2, x[2]]);
        let s_ = inst.tables.sizes;
        let k = seq_prob(&r1, *y1, s_.y1, inst.n)
            * seq_prob(&r2, *y2, s_.y2, inst.n)
            * seq_prob(&rs, *s, s_.s, inst.n);
        gap = gap.max((p / ctx[c] - k).abs());
    }
    let s_ = inst.tables.sizes;
    let n = inst.n;
    for ((x, w, b), p) in &xzb {
        let d1 = digits(x[0], s_.x1, n);
        let d2 = digits(x[1], s_.x2, n);
        let dz = digits(x[2], s_.z, n);
        let mut k = 1.0;
        for t in 0..n {
            let base = (d1[t] * s_.x2 + d2[t]) * s_.z;
            let row = &inst.tables.source[base..base + s_.z];
            let tot: f64 = row.iter().sum();
            k *= row[dz[t]] / tot;
        }
        gap = gap.max((p / xb[&([x[0], x[1]], *w, *b)] - k).abs());
    }
    gap
}

fn seq_prob(rows: &[&[f64]], seq: u64, a: usize, n: usize) -> f64 {
    digits(seq, a, n)
        .iter()
        .zip(rows)
        .map(|(&d, row)| row[d])
        .product()
}
