//! Finite-blocklength random-binning protocol.
//!
//! The source-coding side is one i.i.d. block of the scheme's joint; every
//! message `K_i`, shared-randomness index `B_i`, preshared index `ω` and key
//! `T` is a seeded uniform bin of the auxiliary sequences. The operational
//! protocol reverses the encoders: the sender of round `i` draws `F_iⁿ` from
//! the source-coding conditional given its inputs and the shared bin value,
//! the receiver MAP-decodes it from the message, and the terminals finally
//! draw their outputs from their own reconstructions.

mod engine;
mod exact;
mod mc;
mod report;
pub mod seq;

pub use exact::{bin_conditioning_gap, run_exact, Atom, Induced, DEFAULT_ATOM_BUDGET};
pub use mc::run_monte_carlo;
pub use report::{csv_header, measure, sweep, to_csv, Backend, SimulationReport, SweepBackend, CSV_HEADER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{Alphabet, ProbError, DEFAULT_BUDGET_CELLS};
use crate::region::{parity, AuxScheme, InternalRates, RegionError};
use crate::{Channel, JointPmf};
use seq::{bin_count, MAX_ROUNDS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("enumeration needs {needed} cells, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: usize },
    #[error("blocklength must be at least 1")]
    InvalidBlocklength,
    #[error("{0} rounds exceed the supported maximum of {MAX_ROUNDS}")]
    TooManyRounds(usize),
    #[error("sequences of `{0}` do not fit in 64 bits at this blocklength")]
    SequenceOverflow(String),
    #[error("internal rates: {0}")]
    Rates(String),
    #[error("decoder found no candidate in round {0}")]
    EmptyCandidateSet(usize),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// Rates driving one protocol instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRates {
    pub internal: InternalRates,
    /// Preshared rate; `ω` uses `internal.r0_used` when set.
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "RSK", default)]
    pub rsk: f64,
}

impl ProtocolRates {
    pub fn new(internal: InternalRates, r0: f64, rsk: f64) -> Self {
        Self { internal, r0, rsk }
    }

    fn omega_rate(&self) -> f64 {
        self.internal.r0_used.unwrap_or(self.r0)
    }
}

/// Conditional `p(target | given)` with coarser fallbacks for conditioning
/// cells of zero mass.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    /// Sizes of the full conditioning context.
    sizes: Vec<usize>,
    /// Each level: positions into the full context, and its given-major rows.
    levels: Vec<(Vec<usize>, Vec<Option<Vec<f64>>>)>,
}

impl Kernel {
    fn new(p: &JointPmf, target: &str, given: &[String], fallbacks: &[&[usize]]) -> Result<Self> {
        let sizes: Vec<usize> = given
            .iter()
            .map(|g| p.alphabet(g).map(Alphabet::len))
            .collect::<std::result::Result<_, _>>()?;
        let mut levels = Vec::new();
        let all: Vec<usize> = (0..given.len()).collect();
        for pos in std::iter::once(all.as_slice()).chain(fallbacks.iter().copied()) {
            let names: Vec<&str> = pos.iter().map(|&k| given[k].as_str()).collect();
            levels.push((pos.to_vec(), p.conditional(&[target], &names)?));
        }
        Ok(Self {
            sizes,
            levels,
        })
    }

    /// Row for context `ctx` and whether a fallback level was needed.
    pub(crate) fn row(&self, ctx: &[usize]) -> (&[f64], bool) {
        for (level, (pos, rows)) in self.levels.iter().enumerate() {
            let idx = pos.iter().fold(0usize, |acc, &k| acc * self.sizes[k] + ctx[k]);
            if let Some(r) = &rows[idx] {
                return (r, level > 0);
            }
        }
        unreachable!("the unconditioned level always has mass")
    }
}

/// Single-letter tables of the scheme, with every absent role filled in by
/// a one-symbol constant.
#[derive(Debug, Clone)]
pub(crate) struct Tables {
    pub sizes: Sizes,
    /// `p(x1, x2, z)`, last fastest.
    pub source: Vec<f64>,
    pub send: Vec<Kernel>,
    pub recv: Vec<Kernel>,
    pub y1: Kernel,
    pub y2: Kernel,
    pub s: Kernel,
    /// Target single-letter pmf over `(x1, x2, z, y1, y2, s)`.
    pub target: Vec<f64>,
    /// Target over `(x1, x2, y1, y2)`.
    pub target_xy: Vec<f64>,
    pub i_sz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Sizes {
    pub x1: usize,
    pub x2: usize,
    pub z: usize,
    pub y1: usize,
    pub y2: usize,
    pub s: usize,
    pub f: [usize; MAX_ROUNDS],
}

fn fill_roles(a: &AuxScheme) -> Result<JointPmf> {
    let mut p = a.joint().clone();
    let mut roles: Vec<String> = ["Z", "Y1", "Y2", "S"].iter().map(|s| s.to_string()).collect();
    roles.extend((1..=a.r()).map(|i| format!("F{i}")));
    for name in roles {
        if !p.has_var(&name) {
            let ch = Channel::constant(vec![], Alphabet::range(name, 1)?, &[1.0])?;
            p = p.compose(&ch, DEFAULT_BUDGET_CELLS)?;
        }
    }
    Ok(p)
}

impl Tables {
    fn build(a: &AuxScheme) -> Result<Self> {
        let r = a.r();
        let p = fill_roles(a)?;
        let len = |v: &str| -> Result<usize> { Ok(p.alphabet(v)?.len()) };
        let mut f = [1usize; MAX_ROUNDS];
        for (i, slot) in f.iter_mut().enumerate().take(r) {
            *slot = len(&format!("F{}", i + 1))?;
        }
        let sizes = Sizes {
            x1: len("X1")?,
            x2: len("X2")?,
            z: len("Z")?,
            y1: len("Y1")?,
            y2: len("Y2")?,
            s: len("S")?,
            f,
        };
        let source = p.marginalize(&["X1", "X2", "Z"])?.reorder(&["X1", "X2", "Z"])?;
        let fnames: Vec<String> = (1..=r).map(|i| format!("F{i}")).collect();
        let mut send = Vec::with_capacity(r);
        let mut recv = Vec::with_capacity(r);
        for i in 1..=r {
            let target = &fnames[i - 1];
            for (out, x) in [(&mut send, parity(i)), (&mut recv, 3 - parity(i))] {
                let mut given: Vec<String> = fnames[..i - 1].to_vec();
                given.push(format!("X{x}"));
                let own = [i - 1];
                out.push(Kernel::new(&p, target, &given, &[&own, &[]])?);
            }
        }
        let mut gy1 = fnames.clone();
        gy1.push("X1".into());
        let mut gy2 = fnames.clone();
        gy2.push("X2".into());
        let y1 = Kernel::new(&p, "Y1", &gy1, &[&[r], &[]])?;
        let y2 = Kernel::new(&p, "Y2", &gy2, &[&[r], &[]])?;
        let gs: Vec<String> = ["X1", "X2", "Y1", "Y2", "Z"].iter().map(|s| s.to_string()).collect();
        let s = Kernel::new(&p, "S", &gs, &[&[0, 1, 4], &[]])?;
        let order = ["X1", "X2", "Z", "Y1", "Y2", "S"];
        let target = p.marginalize(&order)?.reorder(&order)?.table().to_vec();
        let xy = ["X1", "X2", "Y1", "Y2"];
        let target_xy = p.marginalize(&xy)?.reorder(&xy)?.table().to_vec();
        let i_sz = p.mutual_info(&["S"], &["Z"], &[])?;
        Ok(Self {
            sizes,
            source: source.table().to_vec(),
            send,
            recv,
            y1,
            y2,
            s,
            target,
            target_xy,
            i_sz,
        })
    }
}

/// Bin-alphabet sizes of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinSizes {
    pub omega: u64,
    pub message: Vec<u64>,
    pub shared: Vec<u64>,
    pub key: u64,
}

#[derive(Debug, Clone)]
pub struct ProtocolInstance {
    scheme: AuxScheme,
    n: usize,
    rates: ProtocolRates,
    seed: u64,
    bins: BinSizes,
    pub(crate) tables: Tables,
}

fn check_fits(name: &str, a: usize, n: usize) -> Result<()> {
    match (a as u64).checked_pow(n as u32) {
        Some(v) if v < 1 << 63 => Ok(()),
        _ => Err(ProtocolError::SequenceOverflow(name.to_string())),
    }
}

/// Materialize an instance; binnings are evaluated lazily from `seed`.
pub fn build(a: &AuxScheme, n: usize, rates: &ProtocolRates, seed: u64) -> Result<ProtocolInstance> {
    if n == 0 {
        return Err(ProtocolError::InvalidBlocklength);
    }
    let r = a.r();
    if r > MAX_ROUNDS {
        return Err(ProtocolError::TooManyRounds(r));
    }
    rates
        .internal
        .validate(r)
        .map_err(|e| ProtocolError::Rates(e.to_string()))?;
    for (name, v) in [("R0", rates.r0), ("RSK", rates.rsk), ("R0_used", rates.omega_rate())] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ProtocolError::Rates(format!("{name} = {v}")));
        }
    }
    let tables = Tables::build(a)?;
    let sz = tables.sizes;
    for (name, size) in [
        ("X1", sz.x1),
        ("X2", sz.x2),
        ("Z", sz.z),
        ("Y1", sz.y1),
        ("Y2", sz.y2),
        ("S", sz.s),
    ]
    .into_iter()
    .chain((0..r).map(|i| ("F", sz.f[i])))
    {
        check_fits(name, size, n)?;
    }
    let bins = BinSizes {
        omega: bin_count(n, rates.omega_rate()),
        message: rates.internal.message.iter().map(|&x| bin_count(n, x)).collect(),
        shared: rates.internal.shared.iter().map(|&x| bin_count(n, x)).collect(),
        key: bin_count(n, rates.rsk),
    };
    Ok(ProtocolInstance {
        scheme: a.clone(),
        n,
        rates: rates.clone(),
        seed,
        bins,
        tables,
    })
}

impl ProtocolInstance {
    pub fn scheme(&self) -> &AuxScheme {
        &self.scheme
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.scheme.r()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rates(&self) -> &ProtocolRates {
        &self.rates
    }

    pub fn bins(&self) -> &BinSizes {
        &self.bins
    }

    /// Number of shared-randomness values drawn before round `i`
    /// (`ω × B_1` for the first round).
    pub(crate) fn shared_values(&self, i: usize) -> u64 {
        let b = self.bins.shared[i - 1];
        if i == 1 {
            b.saturating_mul(self.bins.omega)
        } else {
            b
        }
    }

    pub(crate) fn seq_count(&self, a: usize) -> u64 {
        (a as u64).pow(self.n as u32)
    }
}
