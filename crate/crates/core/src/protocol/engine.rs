//! Per-round encoder and decoder logic shared by the exact and Monte-Carlo
//! backends. Caches are keyed by the conditioning context, so each worker
//! owns one `Engine`.

use std::collections::HashMap;
use std::rc::Rc;

use super::seq::{bin, digits, product_dist, Role, MAX_ROUNDS};
use super::{ProtocolError, ProtocolInstance, Result};
use crate::region::parity;

pub(crate) type Prefix = [u64; MAX_ROUNDS];

/// Reverse-encoder output distribution for one sender context.
pub(crate) struct SendGroups {
    /// Unconditioned (bin-ignoring) distribution of `F_iⁿ`.
    pub full: Vec<(u64, f64)>,
    /// Per shared-bin value, the normalized restriction of `full`.
    pub groups: HashMap<u64, Vec<(u64, f64)>>,
    /// Some position's conditional needed a coarser fallback.
    pub context_fallback: bool,
}

/// For one receiver context: the MAP candidate per (shared value, message).
struct DecMap {
    best: HashMap<(u64, u64), u64>,
}

pub(crate) struct Engine<'a> {
    pub inst: &'a ProtocolInstance,
    send: HashMap<(usize, u64, Prefix), Rc<SendGroups>>,
    dec: HashMap<(usize, u64, Prefix), Rc<DecMap>>,
}

fn with(prefix: &Prefix, i: usize, f: u64) -> Prefix {
    let mut p = *prefix;
    p[i - 1] = f;
    p
}

impl<'a> Engine<'a> {
    pub fn new(inst: &'a ProtocolInstance) -> Self {
        Self {
            inst,
            send: HashMap::new(),
            dec: HashMap::new(),
        }
    }

    fn n(&self) -> usize {
        self.inst.n
    }

    /// Alphabet size of terminal `t`'s source.
    fn x_size(&self, t: u8) -> usize {
        let s = self.inst.tables.sizes;
        if t == 1 {
            s.x1
        } else {
            s.x2
        }
    }

    pub fn f_size(&self, i: usize) -> usize {
        self.inst.tables.sizes.f[i - 1]
    }

    /// Shared-randomness value `(ω, B_1)` or `B_i` of the prefix `F_[1:i]`.
    pub fn shared_value(&self, i: usize, prefix: &Prefix) -> u64 {
        let bins = &self.inst.bins;
        let seed = self.inst.seed;
        let b = bin(seed, i, Role::Shared, &prefix[..i], bins.shared[i - 1]);
        if i == 1 {
            bin(seed, 1, Role::Secret, &prefix[..1], bins.omega) * bins.shared[0] + b
        } else {
            b
        }
    }

    pub fn message(&self, i: usize, prefix: &Prefix) -> u64 {
        bin(self.inst.seed, i, Role::Message, &prefix[..i], self.inst.bins.message[i - 1])
    }

    pub fn key(&self, f: &Prefix) -> u64 {
        let r = self.inst.r();
        bin(self.inst.seed, 0, Role::Key, &f[..r], self.inst.bins.key)
    }

    /// Per-position conditioning contexts `(f_1[t], …, f_{i−1}[t], x[t])`.
    fn contexts(&self, i: usize, x: u64, x_size: usize, prefix: &Prefix) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut cols: Vec<Vec<usize>> = (1..i).map(|j| digits(prefix[j - 1], self.f_size(j), n)).collect();
        cols.push(digits(x, x_size, n));
        (0..n).map(|t| cols.iter().map(|c| c[t]).collect()).collect()
    }

    /// Reverse encoder of round `i` for a sender holding source `x` and
    /// auxiliary prefix `prefix[..i-1]`.
    pub fn send_groups(&mut self, i: usize, x: u64, prefix: &Prefix) -> Rc<SendGroups> {
        let key = (i, x, *prefix);
        if let Some(g) = self.send.get(&key) {
            return g.clone();
        }
        let kernel = &self.inst.tables.send[i - 1];
        let ctx = self.contexts(i, x, self.x_size(parity(i)), prefix);
        let mut context_fallback = false;
        let rows: Vec<&[f64]> = ctx
            .iter()
            .map(|c| {
                let (row, fb) = kernel.row(c);
                context_fallback |= fb;
                row
            })
            .collect();
        let full = product_dist(&rows);
        let mut groups: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
        for &(f, p) in &full {
            let v = self.shared_value(i, &with(prefix, i, f));
            groups.entry(v).or_default().push((f, p));
        }
        for g in groups.values_mut() {
            let total: f64 = g.iter().map(|x| x.1).sum();
            for x in g.iter_mut() {
                x.1 /= total;
            }
        }
        let out = Rc::new(SendGroups {
            full,
            groups,
            context_fallback,
        });
        self.send.insert(key, out.clone());
        out
    }

    /// MAP estimate of `F_iⁿ` for a receiver holding source `x` and its own
    /// prefix reconstruction, given the shared value `v` and message `k`.
    /// The flag reports that no candidate had positive posterior weight and
    /// the lowest-index bin-consistent sequence was taken (consistent with
    /// the message only, if nothing matches both bins).
    pub fn decode(&mut self, i: usize, x: u64, prefix: &Prefix, v: u64, k: u64) -> Result<(u64, bool)> {
        let key = (i, x, *prefix);
        let map = match self.dec.get(&key) {
            Some(m) => m.clone(),
            None => {
                let kernel = &self.inst.tables.recv[i - 1];
                let ctx = self.contexts(i, x, self.x_size(3 - parity(i)), prefix);
                let rows: Vec<&[f64]> = ctx.iter().map(|c| kernel.row(c).0).collect();
                let mut cands = product_dist(&rows);
                // stable: equal weights keep increasing index order
                cands.sort_by(|a, b| b.1.total_cmp(&a.1));
                let mut best = HashMap::new();
                for &(f, _) in &cands {
                    let p = with(prefix, i, f);
                    best.entry((self.shared_value(i, &p), self.message(i, &p)))
                        .or_insert(f);
                }
                let m = Rc::new(DecMap { best });
                self.dec.insert(key, m.clone());
                m
            }
        };
        if let Some(&f) = map.best.get(&(v, k)) {
            return Ok((f, false));
        }
        // after a sender fallback the shared value may disagree with every
        // sequence in the message bin; the message alone is always consistent
        let total = self.inst.seq_count(self.f_size(i));
        let consistent = |eng: &Self, f: u64, with_v: bool| {
            let p = with(prefix, i, f);
            eng.message(i, &p) == k && (!with_v || eng.shared_value(i, &p) == v)
        };
        for with_v in [true, false] {
            if let Some(f) = (0..total).find(|&f| consistent(self, f, with_v)) {
                return Ok((f, true));
            }
        }
        Err(ProtocolError::EmptyCandidateSet(i))
    }

    /// Output-sampler rows for terminal `t` from its reconstruction `f`.
    pub fn output_rows(&self, t: u8, x: u64, f: &Prefix) -> (Vec<&'a [f64]>, bool) {
        let r = self.inst.r();
        let n = self.n();
        let tables = &self.inst.tables;
        let kernel = if t == 1 { &tables.y1 } else { &tables.y2 };
        let mut cols: Vec<Vec<usize>> = (1..=r).map(|j| digits(f[j - 1], self.f_size(j), n)).collect();
        cols.push(digits(x, self.x_size(t), n));
        let mut fallback = false;
        let rows = (0..n)
            .map(|p| {
                let c: Vec<usize> = cols.iter().map(|col| col[p]).collect();
                let (row, fb) = kernel.row(&c);
                fallback |= fb;
                row
            })
            .collect();
        (rows, fallback)
    }

    /// Rows of the protected-variable channel `p(s | x1, x2, y1, y2, z)`.
    pub fn secret_rows(&self, seqs: [u64; 5]) -> Vec<&'a [f64]> {
        let n = self.n();
        let s = self.inst.tables.sizes;
        let sizes = [s.x1, s.x2, s.y1, s.y2, s.z];
        let cols: Vec<Vec<usize>> = seqs.iter().zip(sizes).map(|(&q, a)| digits(q, a, n)).collect();
        (0..n)
            .map(|p| {
                let c: Vec<usize> = cols.iter().map(|col| col[p]).collect();
                self.inst.tables.s.row(&c).0
            })
            .collect()
    }
}
