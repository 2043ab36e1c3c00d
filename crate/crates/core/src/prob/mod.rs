//! Exact finite-alphabet probability engine.
//!
//! A [`JointPmf`] is a dense table over an ordered list of named alphabets,
//! stored row-major with the last variable varying fastest. Every entropic
//! quantity in the crate is evaluated from one of these tables.

mod info;
mod json;

pub use info::MarkovCheck;
pub use json::{ChannelDoc, PmfDoc};

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::scalar::Real;

/// Default limit on the number of dense cells any operation may materialize.
pub const DEFAULT_BUDGET_CELLS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("alphabet `{0}` has no symbols")]
    EmptyAlphabet(String),
    #[error("alphabet `{name}` repeats symbol `{symbol}`")]
    DuplicateSymbol { name: String, symbol: String },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("table has {found} cells, alphabets require {expected}")]
    TableSize { expected: usize, found: usize },
    #[error("cell {index} has invalid mass {value}")]
    InvalidMass { index: usize, value: f64 },
    #[error("total mass {total} is not 1")]
    NotNormalized { total: f64 },
    #[error("variable `{0}` appears in more than one argument set")]
    Overlap(String),
    #[error("channel output `{0}` already present in the pmf")]
    VariableCollision(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation needs {cells} cells, budget is {budget}")]
    BudgetExceeded { cells: u128, budget: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("blocklength must be at least 1")]
    InvalidBlocklength,
    #[error("channel row {row} sums to {total}")]
    ChannelRow { row: usize, total: f64 },
    #[error("malformed pmf document: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// A named finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(ProbError::EmptyAlphabet(name));
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(ProbError::DuplicateSymbol {
                    name,
                    symbol: s.clone(),
                });
            }
        }
        Ok(Self { name, symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ... `"size-1"`.
    pub fn range(name: impl Into<String>, size: usize) -> Result<Self> {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::range(name, 2).expect("two symbols")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            symbols: self.symbols.clone(),
        }
    }
}

fn check_distinct(vars: &[Alphabet]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for v in vars {
        if !seen.insert(v.name()) {
            return Err(ProbError::DuplicateVariable(v.name().to_string()));
        }
    }
    Ok(())
}

fn cell_count(vars: &[Alphabet]) -> u128 {
    vars.iter().map(|a| a.len() as u128).product()
}

/// Validate a mass vector: nonnegative, finite, total within tolerance.
/// Renormalizes when the drift is small enough, rejects otherwise.
fn normalize<T: Real>(table: &mut [T]) -> Result<()> {
    for (index, &v) in table.iter().enumerate() {
        if !v.is_finite() || v < T::zero() {
            return Err(ProbError::InvalidMass {
                index,
                value: v.as_f64(),
            });
        }
    }
    let total: T = table.iter().copied().sum();
    let drift = (total - T::one()).abs();
    if drift <= T::norm_tol() {
        return Ok(());
    }
    if drift <= T::renorm_tol() {
        for v in table.iter_mut() {
            *v = *v / total;
        }
        return Ok(());
    }
    Err(ProbError::NotNormalized {
        total: total.as_f64(),
    })
}

/// Dense joint probability mass function over named alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<T: Real> {
    vars: Vec<Alphabet>,
    table: Vec<T>,
}

impl<T: Real> JointPmf<T> {
    pub fn new(vars: Vec<Alphabet>, mut table: Vec<T>) -> Result<Self> {
        check_distinct(&vars)?;
        let expected = cell_count(&vars);
        if expected != table.len() as u128 {
            return Err(ProbError::TableSize {
                expected: expected.min(usize::MAX as u128) as usize,
                found: table.len(),
            });
        }
        normalize(&mut table)?;
        Ok(Self { vars, table })
    }

    /// Build from a mass function over symbol-index tuples.
    pub fn from_fn(vars: Vec<Alphabet>, mut mass: impl FnMut(&[usize]) -> T) -> Result<Self> {
        check_distinct(&vars)?;
        let sizes: Vec<usize> = vars.iter().map(Alphabet::len).collect();
        let cells = cell_count(&vars);
        if cells > DEFAULT_BUDGET_CELLS as u128 {
            return Err(ProbError::BudgetExceeded {
                cells,
                budget: DEFAULT_BUDGET_CELLS,
            });
        }
        let mut table = Vec::with_capacity(cells as usize);
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..cells {
            table.push(mass(&idx));
            advance(&mut idx, &sizes);
        }
        Self::new(vars, table)
    }

    /// Point mass on the given symbol indices.
    pub fn point(vars: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        Self::from_fn(vars, |idx| if idx == at { T::one() } else { T::zero() })
    }

    /// Uniform pmf over the product alphabet.
    pub fn uniform(vars: Vec<Alphabet>) -> Result<Self> {
        let cells = cell_count(&vars) as f64;
        Self::from_fn(vars, |_| T::lit(1.0 / cells))
    }

    pub fn vars(&self) -> &[Alphabet] {
        &self.vars
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(Alphabet::name).collect()
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.vars.iter().map(Alphabet::len).collect()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.iter().any(|a| a.name() == name)
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|a| a.name() == name)
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))
    }

    pub fn alphabet(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.vars[self.var_index(name)?])
    }

    /// Mass at a tuple of symbol indices (one per variable, in `vars` order).
    pub fn prob(&self, idx: &[usize]) -> T {
        let mut flat = 0usize;
        for (i, a) in idx.iter().zip(&self.vars) {
            flat = flat * a.len() + i;
        }
        self.table[flat]
    }

    pub fn total_mass(&self) -> T {
        self.table.iter().copied().sum()
    }

    pub fn support_size(&self) -> usize {
        self.table.iter().filter(|&&p| p > T::zero()).count()
    }

    /// Visit every cell with its symbol-index tuple.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], T)) {
        let sizes = self.sizes();
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.table {
            f(&idx, p);
            advance(&mut idx, &sizes);
        }
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = Vec::with_capacity(names.len());
        for n in names {
            let i = self.var_index(n)?;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Sum out every variable not in `keep`. The result lists the kept
    /// variables in this pmf's order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self> {
        let mut positions = self.resolve(keep)?;
        positions.sort_unstable();
        Ok(self.marginalize_positions(&positions))
    }

    pub(crate) fn marginalize_positions(&self, positions: &[usize]) -> Self {
        if positions.len() == self.vars.len() {
            return self.clone();
        }
        let vars: Vec<Alphabet> = positions.iter().map(|&i| self.vars[i].clone()).collect();
        let out_len = vars.iter().map(Alphabet::len).product::<usize>();
        let mut table = vec![T::zero(); out_len];
        self.accumulate_into(positions, &mut table);
        Self { vars, table }
    }

    /// Add every cell's mass into `out` at the flat index of the projected
    /// tuple (projection onto `positions`, in that order).
    fn accumulate_into(&self, positions: &[usize], out: &mut [T]) {
        let sizes = self.sizes();
        let mut weights = vec![0usize; sizes.len()];
        let mut w = 1usize;
        for &pos in positions.iter().rev() {
            weights[pos] = w;
            w *= sizes[pos];
        }
        let mut idx = vec![0usize; sizes.len()];
        let mut target = 0usize;
        for &p in &self.table {
            out[target] = out[target] + p;
            // odometer step, keeping `target` in sync
            for d in (0..sizes.len()).rev() {
                idx[d] += 1;
                target += weights[d];
                if idx[d] < sizes[d] {
                    break;
                }
                target -= weights[d] * sizes[d];
                idx[d] = 0;
            }
        }
    }

    /// Entropy in bits of the marginal on the given positions.
    pub(crate) fn entropy_positions(&self, positions: &[usize]) -> T {
        if positions.is_empty() {
            return T::zero();
        }
        let out_len = positions
            .iter()
            .map(|&i| self.vars[i].len())
            .product::<usize>();
        let mut table = vec![T::zero(); out_len];
        self.accumulate_into(positions, &mut table);
        info::entropy_of(&table)
    }

    /// Attach the outputs of `ch`, which reads `ch.inputs()` from this pmf.
    pub fn compose(&self, ch: &Channel<T>, budget_cells: usize) -> Result<Self> {
        for out in ch.outputs() {
            if self.has_var(out.name()) {
                return Err(ProbError::VariableCollision(out.name().to_string()));
            }
        }
        let mut in_pos = Vec::with_capacity(ch.inputs().len());
        for a in ch.inputs() {
            let i = self.var_index(a.name())?;
            if self.vars[i] != *a {
                return Err(ProbError::DimensionMismatch(format!(
                    "channel input `{}` has {} symbols, pmf has {}",
                    a.name(),
                    a.len(),
                    self.vars[i].len()
                )));
            }
            in_pos.push(i);
        }
        let mut vars = self.vars.clone();
        vars.extend(ch.outputs().iter().cloned());
        let cells = cell_count(&vars);
        if cells > budget_cells as u128 {
            return Err(ProbError::BudgetExceeded {
                cells,
                budget: budget_cells,
            });
        }
        let out_cells = ch.output_cells();
        let mut table = Vec::with_capacity(cells as usize);
        let sizes = self.sizes();
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.table {
            let mut row = 0usize;
            for &pos in &in_pos {
                row = row * sizes[pos] + idx[pos];
            }
            let r = ch.row(row);
            table.extend(r.iter().map(|&q| p * q));
            advance(&mut idx, &sizes);
        }
        debug_assert_eq!(table.len(), self.table.len() * out_cells);
        Ok(Self { vars, table })
    }

    /// Product with an independent pmf over disjoint variables.
    pub fn product(&self, other: &Self, budget_cells: usize) -> Result<Self> {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        check_distinct(&vars).map_err(|e| match e {
            ProbError::DuplicateVariable(n) => ProbError::VariableCollision(n),
            e => e,
        })?;
        let cells = cell_count(&vars);
        if cells > budget_cells as u128 {
            return Err(ProbError::BudgetExceeded {
                cells,
                budget: budget_cells,
            });
        }
        let mut table = Vec::with_capacity(cells as usize);
        for &p in &self.table {
            table.extend(other.table.iter().map(|&q| p * q));
        }
        Ok(Self { vars, table })
    }

    /// Product pmf of `n` independent replicas. Replica `t` (1-based) of
    /// variable `V` is named `V[t]`; replicas are laid out replica-major.
    pub fn iid_extend(&self, n: usize, budget_cells: usize) -> Result<Self> {
        if n == 0 {
            return Err(ProbError::InvalidBlocklength);
        }
        let cells = (self.table.len() as u128).checked_pow(n as u32);
        match cells {
            Some(c) if c <= budget_cells as u128 => {}
            c => {
                return Err(ProbError::BudgetExceeded {
                    cells: c.unwrap_or(u128::MAX),
                    budget: budget_cells,
                })
            }
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let replica = |t: usize| -> Self {
            Self {
                vars: self
                    .vars
                    .iter()
                    .map(|a| a.renamed(format!("{}[{}]", a.name(), t)))
                    .collect(),
                table: self.table.clone(),
            }
        };
        let mut acc = replica(1);
        for t in 2..=n {
            acc = acc.product(&replica(t), budget_cells)?;
        }
        Ok(acc)
    }

    /// Rename variables; names absent from `map` are kept.
    pub fn rename(&self, map: &HashMap<String, String>) -> Result<Self> {
        let vars: Vec<Alphabet> = self
            .vars
            .iter()
            .map(|a| match map.get(a.name()) {
                Some(n) => a.renamed(n.clone()),
                None => a.clone(),
            })
            .collect();
        check_distinct(&vars)?;
        Ok(Self {
            vars,
            table: self.table.clone(),
        })
    }

    /// Reorder variables to the given name order (must be a permutation).
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.vars.len() {
            return Err(ProbError::DimensionMismatch(format!(
                "reorder lists {} names for {} variables",
                order.len(),
                self.vars.len()
            )));
        }
        let positions = self.resolve(order)?;
        if positions.len() != self.vars.len() {
            return Err(ProbError::DuplicateVariable(order.join(",")));
        }
        let vars: Vec<Alphabet> = positions.iter().map(|&i| self.vars[i].clone()).collect();
        let mut table = vec![T::zero(); self.table.len()];
        self.accumulate_into(&positions, &mut table);
        Ok(Self { vars, table })
    }

    /// Conditional table `p(targets | given)` laid out given-major. Rows
    /// whose conditioning mass is zero are returned as `None`.
    pub fn conditional(&self, targets: &[&str], given: &[&str]) -> Result<Vec<Option<Vec<T>>>> {
        let t_pos = self.resolve(targets)?;
        let g_pos = self.resolve(given)?;
        if let Some(&p) = t_pos.iter().find(|p| g_pos.contains(p)) {
            return Err(ProbError::Overlap(self.vars[p].name().to_string()));
        }
        let mut all = g_pos.clone();
        all.extend(&t_pos);
        let t_cells: usize = t_pos.iter().map(|&i| self.vars[i].len()).product();
        let g_cells: usize = g_pos.iter().map(|&i| self.vars[i].len()).product();
        let mut joint = vec![T::zero(); t_cells * g_cells];
        self.accumulate_into(&all, &mut joint);
        Ok(joint
            .chunks(t_cells)
            .map(|row| {
                let mass: T = row.iter().copied().sum();
                (mass > T::zero()).then(|| row.iter().map(|&v| v / mass).collect())
            })
            .collect())
    }
}

/// Step a mixed-radix counter (last digit fastest).
pub(crate) fn advance(idx: &mut [usize], sizes: &[usize]) {
    for d in (0..sizes.len()).rev() {
        idx[d] += 1;
        if idx[d] < sizes[d] {
            return;
        }
        idx[d] = 0;
    }
}

/// Stochastic map from input alphabets to output alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T: Real> {
    inputs: Vec<Alphabet>,
    outputs: Vec<Alphabet>,
    rows: Vec<T>,
}

impl<T: Real> Channel<T> {
    /// `rows` is input-major: one block of `output_cells` masses per input cell.
    pub fn new(inputs: Vec<Alphabet>, outputs: Vec<Alphabet>, mut rows: Vec<T>) -> Result<Self> {
        let mut all = inputs.clone();
        all.extend(outputs.iter().cloned());
        check_distinct(&all)?;
        let out_cells = cell_count(&outputs) as usize;
        let expected = cell_count(&all);
        if expected != rows.len() as u128 {
            return Err(ProbError::TableSize {
                expected: expected as usize,
                found: rows.len(),
            });
        }
        for (row, chunk) in rows.chunks_mut(out_cells).enumerate() {
            normalize(chunk).map_err(|e| match e {
                ProbError::NotNormalized { total } => ProbError::ChannelRow { row, total },
                e => e,
            })?;
        }
        Ok(Self {
            inputs,
            outputs,
            rows,
        })
    }

    /// Build from a conditional mass function `f(input_idx, output_idx)`.
    pub fn from_fn(
        inputs: Vec<Alphabet>,
        outputs: Vec<Alphabet>,
        mut f: impl FnMut(&[usize], &[usize]) -> T,
    ) -> Result<Self> {
        let in_sizes: Vec<usize> = inputs.iter().map(Alphabet::len).collect();
        let out_sizes: Vec<usize> = outputs.iter().map(Alphabet::len).collect();
        let in_cells: usize = in_sizes.iter().product();
        let out_cells: usize = out_sizes.iter().product();
        let mut rows = Vec::with_capacity(in_cells * out_cells);
        let mut i_idx = vec![0usize; in_sizes.len()];
        for _ in 0..in_cells {
            let mut o_idx = vec![0usize; out_sizes.len()];
            for _ in 0..out_cells {
                rows.push(f(&i_idx, &o_idx));
                advance(&mut o_idx, &out_sizes);
            }
            advance(&mut i_idx, &in_sizes);
        }
        Self::new(inputs, outputs, rows)
    }

    /// Output copies the (single) input.
    pub fn identity(input: Alphabet, output: impl Into<String>) -> Result<Self> {
        let out = input.renamed(output);
        Self::from_fn(vec![input], vec![out], |i, o| {
            if i[0] == o[0] {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Binary symmetric channel with the given crossover.
    pub fn bsc(input: Alphabet, output: impl Into<String>, crossover: f64) -> Result<Self> {
        if input.len() != 2 {
            return Err(ProbError::DimensionMismatch(format!(
                "bsc input `{}` is not binary",
                input.name()
            )));
        }
        let out = input.renamed(output);
        Self::from_fn(vec![input], vec![out], |i, o| {
            T::lit(if i[0] == o[0] {
                1.0 - crossover
            } else {
                crossover
            })
        })
    }

    /// Output drawn from `row` regardless of the inputs.
    pub fn constant(inputs: Vec<Alphabet>, output: Alphabet, row: &[T]) -> Result<Self> {
        Self::from_fn(inputs, vec![output], |_, o| row[o[0]])
    }

    pub fn inputs(&self) -> &[Alphabet] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Alphabet] {
        &self.outputs
    }

    pub fn output_cells(&self) -> usize {
        self.outputs.iter().map(Alphabet::len).product()
    }

    pub fn row(&self, input_cell: usize) -> &[T] {
        let w = self.output_cells();
        &self.rows[input_cell * w..(input_cell + 1) * w]
    }

    pub fn rows(&self) -> &[T] {
        &self.rows
    }
}
