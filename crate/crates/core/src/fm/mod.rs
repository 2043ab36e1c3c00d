//! Fourier–Motzkin elimination over affine inequality systems.
//!
//! Rows read `Σ a_v·v (≥ | >) c`. Coefficients live in a [`Coefficient`]
//! ring (exact rationals by default); constants are `f64` bits values
//! produced by entropic evaluation.

mod json;
mod lp;

pub use json::{RowDoc, SystemDoc};
pub use lp::{Equivalence, Implication, PruneReport};

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::scalar::Coefficient;

/// Default cap on rows alive at any point of a projection.
pub const DEFAULT_ROW_CAP: usize = 100_000;
/// Constant tolerance shared by feasibility and implication checks.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Implication margins below this are reported as numerically degenerate.
pub const DEGENERACY_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FmError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("row `{label}` has {found} coefficients for {expected} variables")]
    RowWidth {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("row `{label}` has a non-finite constant")]
    NonFinite { label: String },
    #[error("elimination produced {rows} rows, cap is {cap}")]
    RowCap { rows: usize, cap: usize },
    #[error("systems are over different variables: {0}")]
    VariableMismatch(String),
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("malformed system document: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, FmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Ge,
    Gt,
}

impl Op {
    pub fn is_strict(self) -> bool {
        self == Op::Gt
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }

    fn combine(self, other: Op) -> Op {
        if self.is_strict() || other.is_strict() {
            Op::Gt
        } else {
            Op::Ge
        }
    }
}

/// `Σ coeffs[k]·vars[k] op constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<C> {
    pub label: String,
    pub coeffs: Vec<C>,
    pub op: Op,
    pub constant: f64,
}

impl<C: Coefficient> Row<C> {
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn lhs(&self, point: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(point)
            .map(|(a, x)| if a.is_zero() { 0.0 } else { a.to_f64() * x })
            .sum()
    }

    /// Signed margin `lhs − c`.
    pub fn slack(&self, point: &[f64]) -> f64 {
        self.lhs(point) - self.constant
    }

    /// Satisfaction under the strictness policy: strict rows need slack ≥ τ,
    /// non-strict rows slack ≥ −τ.
    pub fn satisfied(&self, point: &[f64], tol: f64) -> bool {
        let s = self.slack(point);
        match self.op {
            Op::Ge => s >= -tol,
            Op::Gt => s >= tol,
        }
    }

    /// Scale so the first nonzero coefficient has magnitude one.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|a| !a.is_zero()).map(Signed::abs) {
            if !lead.is_one() {
                for a in &mut self.coeffs {
                    *a = a.ratio(&lead);
                }
                self.constant /= lead.to_f64();
            }
        }
        self
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match a.to_f64().total_cmp(&b.to_f64()) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        other
            .constant
            .total_cmp(&self.constant)
            .then(other.op.cmp(&self.op))
            .then_with(|| self.label.cmp(&other.label))
    }
}

/// Labels of derived rows are the sorted set of parent leaf labels.
fn merge_labels(a: &str, b: &str) -> String {
    let set: BTreeSet<&str> = a.split('+').chain(b.split('+')).collect();
    set.into_iter().collect::<Vec<_>>().join("+")
}

/// Truth value of a coefficient-free row `0 op c`, under the strictness policy.
fn constant_holds(op: Op, c: f64, tol: f64) -> bool {
    match op {
        Op::Ge => c <= tol,
        Op::Gt => c <= -tol,
    }
}

/// An affine inequality system over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<C> {
    vars: Vec<String>,
    rows: Vec<Row<C>>,
    /// Coefficient-free rows that cannot hold; any entry makes the system infeasible.
    contradictions: Vec<Row<C>>,
}

impl<C: Coefficient> LinearSystem<C> {
    pub fn new(vars: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.as_str()) {
                return Err(FmError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Self {
            vars,
            rows: Vec::new(),
            contradictions: Vec::new(),
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row<C>] {
        &self.rows
    }

    pub fn contradictions(&self) -> &[Row<C>] {
        &self.contradictions
    }

    pub fn is_trivially_infeasible(&self) -> bool {
        !self.contradictions.is_empty()
    }

    /// Contradictions that survive relaxing `>` to `≥`; a strict `0 > 0`
    /// from a zero-entropy bound is empty pointwise but not in the closure.
    pub(crate) fn closure_contradictions(&self) -> impl Iterator<Item = &Row<C>> {
        self.contradictions
            .iter()
            .filter(|r| !constant_holds(Op::Ge, r.constant, DEFAULT_TOL))
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| FmError::UnknownVariable(name.to_string()))
    }

    /// Add `Σ terms op constant`; repeated names accumulate.
    pub fn add(
        &mut self,
        label: impl Into<String>,
        terms: &[(&str, C)],
        op: Op,
        constant: f64,
    ) -> Result<()> {
        let mut coeffs = vec![C::zero(); self.vars.len()];
        for (name, a) in terms {
            let k = self.var_index(name)?;
            coeffs[k] = coeffs[k].clone() + a.clone();
        }
        self.push(Row {
            label: label.into(),
            coeffs,
            op,
            constant,
        })
    }

    /// Convenience for integer coefficients.
    pub fn add_int(
        &mut self,
        label: impl Into<String>,
        terms: &[(&str, i64)],
        op: Op,
        constant: f64,
    ) -> Result<()> {
        let terms: Vec<(&str, C)> = terms.iter().map(|&(n, a)| (n, C::from_i64(a))).collect();
        self.add(label, &terms, op, constant)
    }

    pub fn push(&mut self, row: Row<C>) -> Result<()> {
        if row.coeffs.len() != self.vars.len() {
            return Err(FmError::RowWidth {
                label: row.label,
                expected: self.vars.len(),
                found: row.coeffs.len(),
            });
        }
        if !row.constant.is_finite() {
            return Err(FmError::NonFinite { label: row.label });
        }
        self.insert(row, DEFAULT_TOL);
        Ok(())
    }

    fn insert(&mut self, row: Row<C>, tol: f64) {
        if row.is_constant() {
            if !constant_holds(row.op, row.constant, tol) {
                self.contradictions.push(row);
            }
        } else {
            self.rows.push(row);
        }
    }

    /// Variables appearing with a nonzero coefficient in some row.
    pub fn used_vars(&self) -> Vec<&str> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(k, _)| self.rows.iter().any(|r| !r.coeffs[*k].is_zero()))
            .map(|(_, v)| v.as_str())
            .collect()
    }

    /// Point satisfies every row under the strictness policy.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        self.contradictions.is_empty() && self.rows.iter().all(|r| r.satisfied(point, tol))
    }

    /// Rewrite the system over `vars` (a superset of the used variables),
    /// in that order.
    pub fn with_vars(&self, vars: &[String]) -> Result<Self> {
        let map: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v))
            .collect();
        for (k, m) in map.iter().enumerate() {
            if m.is_none() && self.rows.iter().any(|r| !r.coeffs[k].is_zero()) {
                return Err(FmError::VariableMismatch(format!(
                    "`{}` is used but not in the target list",
                    self.vars[k]
                )));
            }
        }
        let remap = |r: &Row<C>| {
            let mut coeffs = vec![C::zero(); vars.len()];
            for (k, m) in map.iter().enumerate() {
                if let Some(j) = m {
                    coeffs[*j] = r.coeffs[k].clone();
                }
            }
            Row {
                label: r.label.clone(),
                coeffs,
                op: r.op,
                constant: r.constant,
            }
        };
        let mut out = Self::new(vars.to_vec())?;
        out.rows = self.rows.iter().map(remap).collect();
        out.contradictions = self.contradictions.iter().map(remap).collect();
        Ok(out)
    }

    /// Drop a variable that no row uses.
    fn drop_var(&mut self, k: usize) {
        self.vars.remove(k);
        for r in self.rows.iter_mut().chain(self.contradictions.iter_mut()) {
            r.coeffs.remove(k);
        }
    }

    /// Normalize, sort canonically and keep the tightest of rows sharing a
    /// coefficient vector.
    pub fn canonicalize(&mut self) {
        let mut rows: Vec<Row<C>> = std::mem::take(&mut self.rows)
            .into_iter()
            .map(Row::normalized)
            .collect();
        rows.sort_by(Row::canonical_cmp);
        // after sorting, the tightest (largest constant, strict first) leads each group
        rows.dedup_by(|later, first| later.coeffs == first.coeffs);
        self.rows = rows;
    }

    /// Fix `v = value` and drop it from the variable list. An infinite value
    /// satisfies every row in which it appears with a positive coefficient
    /// and contradicts every row with a negative one.
    pub fn substitute(&self, v: &str, value: f64) -> Result<Self> {
        let k = self.var_index(v)?;
        let mut out = Self {
            vars: self.vars.clone(),
            rows: Vec::with_capacity(self.rows.len()),
            contradictions: self.contradictions.clone(),
        };
        for r in &self.rows {
            let a = &r.coeffs[k];
            if a.is_zero() {
                out.rows.push(r.clone());
                continue;
            }
            let mut row = r.clone();
            row.coeffs[k] = C::zero();
            if value.is_infinite() {
                if (value > 0.0) == a.is_positive() {
                    continue;
                }
                row.constant = f64::INFINITY;
                out.contradictions.push(row);
                continue;
            }
            row.constant -= a.to_f64() * value;
            out.insert(row, DEFAULT_TOL);
        }
        out.drop_var(k);
        Ok(out)
    }

    /// One Fourier–Motzkin step on `v`.
    pub fn eliminate(&self, v: &str) -> Result<Self> {
        self.eliminate_capped(v, usize::MAX)
    }

    fn eliminate_capped(&self, v: &str, cap: usize) -> Result<Self> {
        let k = self.var_index(v)?;
        let (mut lower, mut upper, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in &self.rows {
            let a = &r.coeffs[k];
            if a.is_positive() {
                lower.push(r);
            } else if a.is_negative() {
                upper.push(r);
            } else {
                rest.push(r.clone());
            }
        }
        let total = rest.len() + lower.len() * upper.len();
        if total > cap {
            return Err(FmError::RowCap { rows: total, cap });
        }
        let mut out = Self {
            vars: self.vars.clone(),
            rows: rest,
            contradictions: self.contradictions.clone(),
        };
        for lo in &lower {
            for up in &upper {
                let a = lo.coeffs[k].clone();
                let b = -up.coeffs[k].clone();
                let coeffs: Vec<C> = lo
                    .coeffs
                    .iter()
                    .zip(&up.coeffs)
                    .map(|(x, y)| b.clone() * x.clone() + a.clone() * y.clone())
                    .collect();
                debug_assert!(coeffs[k].is_zero());
                let row = Row {
                    label: merge_labels(&lo.label, &up.label),
                    coeffs,
                    op: lo.op.combine(up.op),
                    constant: b.to_f64() * lo.constant + a.to_f64() * up.constant,
                };
                out.insert(row.normalized(), DEFAULT_TOL);
            }
        }
        out.drop_var(k);
        out.canonicalize();
        Ok(out)
    }

    /// Eliminate every variable outside `keep` (fewest bound-pair products
    /// first), pruning redundant rows after each step.
    pub fn project(&self, keep: &[&str]) -> Result<Self> {
        self.project_with(keep, DEFAULT_ROW_CAP, DEFAULT_TOL)
    }

    pub fn project_with(&self, keep: &[&str], cap: usize, tol: f64) -> Result<Self> {
        for v in keep {
            self.var_index(v)?;
        }
        let mut sys = self.clone();
        sys.canonicalize();
        loop {
            let candidates: Vec<(usize, usize)> = sys
                .vars
                .iter()
                .enumerate()
                .filter(|(_, v)| !keep.contains(&v.as_str()))
                .map(|(k, _)| {
                    let lo = sys.rows.iter().filter(|r| r.coeffs[k].is_positive()).count();
                    let up = sys.rows.iter().filter(|r| r.coeffs[k].is_negative()).count();
                    (lo * up, k)
                })
                .collect();
            let Some(&(_, k)) = candidates.iter().min() else {
                break;
            };
            let v = sys.vars[k].clone();
            sys = sys.eliminate_capped(&v, cap)?;
            sys = sys.remove_redundant_with(tol)?.system;
        }
        let order: Vec<String> = keep.iter().map(|s| s.to_string()).collect();
        let mut out = sys.with_vars(&order)?;
        out.canonicalize();
        Ok(out)
    }

    /// Project with the variables eliminated in exactly the given order
    /// (no pruning between steps beyond canonical dedup).
    pub fn project_in_order(&self, order: &[&str], cap: usize) -> Result<Self> {
        let mut sys = self.clone();
        for v in order {
            sys = sys.eliminate_capped(v, cap)?;
        }
        Ok(sys)
    }
}

impl<C: Coefficient> fmt::Display for LinearSystem<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.rows.iter().chain(&self.contradictions) {
            let mut first = true;
            write!(f, "{:>12}: ", r.label)?;
            for (a, v) in r.coeffs.iter().zip(&self.vars) {
                if a.is_zero() {
                    continue;
                }
                let sign = if a.is_negative() { "-" } else if first { "" } else { "+" };
                let mag = a.abs();
                if mag.is_one() {
                    write!(f, "{}{} ", sign, v)?;
                } else {
                    write!(f, "{}{}·{} ", sign, mag, v)?;
                }
                first = false;
            }
            if first {
                write!(f, "0 ")?;
            }
            writeln!(f, "{} {:.6}", r.op.symbol(), r.constant)?;
        }
        Ok(())
    }
}
