//! LP-backed implication, redundancy removal and equivalence.
//!
//! All checks use closure semantics: a strict row is tested as its
//! non-strict closure, with constant tolerance `tol`.

use std::time::Duration;

use microlp::{ComparisonOp, Error as LpError, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::{FmError, LinearSystem, Result, Row, DEFAULT_TOL, DEGENERACY_MARGIN};
use crate::scalar::Coefficient;

const LP_TIME_LIMIT: Duration = Duration::from_secs(20);
/// A soft row whose best slack is within this of the common level is settled.
const BALANCE_EPS: f64 = 1e-9;

enum Lp {
    Optimal { value: f64, point: Vec<f64> },
    Unbounded,
    Infeasible,
}

/// Minimize `obj·x` subject to the closures of `rows` plus `extra` rows
/// (given as dense f64 coefficient vectors with `≥` constants).
fn minimize<C: Coefficient>(
    n: usize,
    rows: &[&Row<C>],
    extra: &[(Vec<f64>, ComparisonOp, f64)],
    obj: &[f64],
) -> Result<Lp> {
    let solve = |obj: &[f64]| {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        p.set_time_limit(LP_TIME_LIMIT);
        // free variables as differences of nonnegative parts; the solver
        // stalls on some degenerate problems with unbounded variable domains
        let vars: Vec<_> = (0..n)
            .map(|k| {
                (
                    p.add_var(obj[k], (0.0, f64::INFINITY)),
                    p.add_var(-obj[k], (0.0, f64::INFINITY)),
                )
            })
            .collect();
        let expr = |coeffs: &mut dyn Iterator<Item = (usize, f64)>| {
            let mut e = Vec::new();
            for (k, a) in coeffs {
                e.push((vars[k].0, a));
                e.push((vars[k].1, -a));
            }
            e
        };
        for r in rows {
            let e = expr(&mut r
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(k, a)| (k, a.to_f64())));
            p.add_constraint(&e[..], ComparisonOp::Ge, r.constant);
        }
        for (coeffs, op, c) in extra {
            let e = expr(&mut coeffs.iter().copied().enumerate().filter(|(_, a)| *a != 0.0));
            p.add_constraint(&e[..], *op, *c);
        }
        match p.solve() {
            Ok(outcome) => match outcome.into_solution() {
                Ok(sol) => Ok(Lp::Optimal {
                    value: sol.objective(),
                    point: vars
                        .iter()
                        .map(|&(a, b)| sol.var_value(a) - sol.var_value(b))
                        .collect(),
                }),
                Err(_) => Err(FmError::Solver("time limit reached".into())),
            },
            Err(LpError::Infeasible) => Ok(Lp::Infeasible),
            Err(LpError::Unbounded) => Ok(Lp::Unbounded),
            Err(e) => Err(FmError::Solver(e.to_string())),
        }
    };
    match solve(obj)? {
        // confirm the status with a pure feasibility problem
        Lp::Infeasible if obj.iter().any(|&a| a != 0.0) => match solve(&vec![0.0; n])? {
            Lp::Optimal { .. } => Ok(Lp::Unbounded),
            other => Ok(other),
        },
        other => Ok(other),
    }
}

/// Result of testing whether a system implies a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Implication {
    pub implied: bool,
    /// `min lhs − c` over the system; `None` when unbounded or infeasible.
    pub margin: Option<f64>,
    /// The decision sat within the degeneracy margin of its threshold.
    pub degenerate: bool,
}

/// What `remove_redundant` did.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport<C> {
    pub system: LinearSystem<C>,
    pub removed: Vec<String>,
    /// Labels whose keep/drop decision had a margin below the degeneracy threshold.
    pub degenerate: Vec<String>,
    pub infeasible: bool,
}

/// Side of an equivalence check a counterexample point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Variable values, in the left system's order.
    pub point: Vec<(String, f64)>,
    /// The system the point satisfies.
    pub satisfies: Side,
    /// Label of the row of the other system the point violates.
    pub violates: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub counterexample: Option<Counterexample>,
    /// Some implication failed because an LP was unbounded.
    pub unbounded_degeneracy: bool,
    pub degenerate: Vec<String>,
}

impl<C: Coefficient> LinearSystem<C> {
    fn lp_rows(&self) -> Vec<&Row<C>> {
        self.rows.iter().collect()
    }

    /// Feasible under closure semantics.
    pub fn is_feasible(&self) -> Result<bool> {
        if self.closure_contradictions().next().is_some() {
            return Ok(false);
        }
        let n = self.vars.len();
        Ok(!matches!(
            minimize(n, &self.lp_rows(), &[], &vec![0.0; n])?,
            Lp::Infeasible
        ))
    }

    /// Some point of the closure, if any.
    pub fn feasible_point(&self) -> Result<Option<Vec<f64>>> {
        if self.closure_contradictions().next().is_some() {
            return Ok(None);
        }
        let n = self.vars.len();
        Ok(match minimize(n, &self.lp_rows(), &[], &vec![0.0; n])? {
            Lp::Optimal { point, .. } => Some(point),
            _ => None,
        })
    }

    /// Whether `row` (over this system's variables) holds on the closure.
    pub fn implies(&self, row: &Row<C>, tol: f64) -> Result<Implication> {
        self.implies_excluding(row, None, tol)
    }

    fn implies_excluding(&self, row: &Row<C>, skip: Option<usize>, tol: f64) -> Result<Implication> {
        if self.closure_contradictions().next().is_some() {
            return Ok(Implication {
                implied: true,
                margin: None,
                degenerate: false,
            });
        }
        let rows: Vec<&Row<C>> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, r)| r)
            .collect();
        if row.is_constant() {
            let margin = -row.constant;
            return Ok(Implication {
                implied: margin >= -tol,
                margin: Some(margin),
                degenerate: margin.abs() < DEGENERACY_MARGIN,
            });
        }
        let obj: Vec<f64> = row.coeffs.iter().map(Coefficient::to_f64).collect();
        Ok(match minimize(self.vars.len(), &rows, &[], &obj)? {
            Lp::Optimal { value, .. } => {
                let margin = value - row.constant;
                Implication {
                    implied: margin >= -tol,
                    margin: Some(margin),
                    degenerate: margin.abs() < DEGENERACY_MARGIN,
                }
            }
            Lp::Unbounded => Implication {
                implied: false,
                margin: None,
                degenerate: false,
            },
            Lp::Infeasible => Implication {
                implied: true,
                margin: None,
                degenerate: false,
            },
        })
    }

    /// A point of the closure that balances margins: the soft rows' slacks,
    /// each capped at `cap`, are maximized lexicographically from the
    /// smallest up (max-min, then max of the second smallest, ...), while
    /// every other row is enforced. Soft rows may end up violated when the
    /// hard rows leave no room. `None` when the hard rows are infeasible.
    pub fn balanced_point(&self, soft: &[bool], cap: f64) -> Result<Option<Vec<f64>>> {
        if self.closure_contradictions().next().is_some() {
            return Ok(None);
        }
        let soft: Vec<usize> = (0..self.rows.len())
            .filter(|&j| soft.get(j).copied().unwrap_or(false))
            .collect();
        // floor per soft row once its level is settled
        let mut floor: Vec<Option<f64>> = vec![None; self.rows.len()];
        let mut point = match self.level_lp(&floor, &soft, None, cap)? {
            Some((_, x)) => x,
            None => return Ok(None),
        };
        loop {
            let free: Vec<usize> = soft.iter().copied().filter(|&j| floor[j].is_none()).collect();
            if free.is_empty() {
                break;
            }
            let Some((t, x)) = self.level_lp(&floor, &free, None, cap)? else {
                break;
            };
            point = x;
            if t >= cap - DEFAULT_TOL {
                break;
            }
            // rows that cannot rise above the common level are settled at it
            let mut settled = false;
            for &j in &free {
                let best = self.level_lp(&floor, &free, Some((j, t)), cap)?;
                if best.map_or(true, |(v, _)| v <= t + BALANCE_EPS) {
                    floor[j] = Some(t);
                    settled = true;
                }
            }
            if !settled {
                for &j in &free {
                    floor[j] = Some(t);
                }
            }
        }
        Ok(Some(point))
    }

    /// With `probe = None`: maximize a common level `t ≤ cap` that every row
    /// in `free` exceeds. With `probe = Some((j, t))`: keep the free rows at
    /// `t` and maximize row `j`'s slack. Settled rows keep their floors.
    fn level_lp(
        &self,
        floor: &[Option<f64>],
        free: &[usize],
        probe: Option<(usize, f64)>,
        cap: f64,
    ) -> Result<Option<(f64, Vec<f64>)>> {
        let n = self.vars.len();
        let mut p = Problem::new(OptimizationDirection::Maximize);
        p.set_time_limit(LP_TIME_LIMIT);
        let vars: Vec<_> = (0..n)
            .map(|_| {
                (
                    p.add_var(0.0, (0.0, f64::INFINITY)),
                    p.add_var(0.0, (0.0, f64::INFINITY)),
                )
            })
            .collect();
        // the level, split so it may go negative
        let level = match probe {
            None => Some((p.add_var(1.0, (0.0, f64::INFINITY)), p.add_var(-1.0, (0.0, f64::INFINITY)))),
            Some(_) => None,
        };
        if let Some((up, down)) = level {
            p.add_constraint(&[(up, 1.0), (down, -1.0)], ComparisonOp::Le, cap);
        }
        for (j, r) in self.rows.iter().enumerate() {
            let mut e = Vec::new();
            for (k, a) in r.coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
                e.push((vars[k].0, a.to_f64()));
                e.push((vars[k].1, -a.to_f64()));
            }
            let mut rhs = r.constant;
            if let Some(f) = floor[j] {
                rhs += f;
            } else if free.contains(&j) {
                match (probe, level) {
                    (Some((k, t)), _) if k == j => {
                        // slack_j = lhs − c, bounded by cap; maximize it
                        let s = p.add_var(1.0, (t - BALANCE_EPS, cap.max(t)));
                        e.push((s, -1.0));
                    }
                    (Some((_, t)), _) => rhs += t,
                    (None, Some((up, down))) => {
                        e.push((up, -1.0));
                        e.push((down, 1.0));
                    }
                    (None, None) => {}
                }
            }
            p.add_constraint(&e[..], ComparisonOp::Ge, rhs);
        }
        match p.solve() {
            Ok(outcome) => match outcome.into_solution() {
                Ok(sol) => Ok(Some((
                    sol.objective(),
                    vars.iter()
                        .map(|&(a, b)| sol.var_value(a) - sol.var_value(b))
                        .collect(),
                ))),
                Err(_) => Err(FmError::Solver("time limit reached".into())),
            },
            Err(LpError::Infeasible) => Ok(None),
            Err(e) => Err(FmError::Solver(e.to_string())),
        }
    }

    /// Drop every row implied by the rows that remain.
    pub fn remove_redundant(&self) -> Result<PruneReport<C>> {
        self.remove_redundant_with(DEFAULT_TOL)
    }

    pub fn remove_redundant_with(&self, tol: f64) -> Result<PruneReport<C>> {
        let mut sys = self.clone();
        sys.canonicalize();
        let mut removed: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !sys.rows.iter().any(|s| s.label == r.label))
            .map(|r| r.label.clone())
            .collect();
        if !sys.is_feasible()? {
            return Ok(PruneReport {
                system: sys,
                removed,
                degenerate: Vec::new(),
                infeasible: true,
            });
        }
        let mut degenerate = Vec::new();
        let mut k = 0;
        while k < sys.rows.len() {
            let imp = sys.implies_excluding(&sys.rows[k], Some(k), tol)?;
            if imp.degenerate {
                degenerate.push(sys.rows[k].label.clone());
            }
            if imp.implied {
                removed.push(sys.rows.remove(k).label);
            } else {
                k += 1;
            }
        }
        Ok(PruneReport {
            system: sys,
            removed,
            degenerate,
            infeasible: false,
        })
    }

    /// Closure-equivalence of two systems over the same variable set. On
    /// failure, returns a point satisfying one system but not the other.
    pub fn equivalent(&self, other: &Self, tol: f64) -> Result<Equivalence> {
        let mut mine: Vec<&String> = self.vars.iter().collect();
        let mut theirs: Vec<&String> = other.vars.iter().collect();
        mine.sort();
        theirs.sort();
        if mine != theirs {
            return Err(FmError::VariableMismatch(format!(
                "[{}] vs [{}]",
                self.vars.join(","),
                other.vars.join(",")
            )));
        }
        let other = other.with_vars(&self.vars)?;
        let mut out = Equivalence {
            equivalent: true,
            counterexample: None,
            unbounded_degeneracy: false,
            degenerate: Vec::new(),
        };
        let fa = self.is_feasible()?;
        let fb = other.is_feasible()?;
        match (fa, fb) {
            (false, false) => return Ok(out),
            (true, false) | (false, true) => {
                let (side, sys, oth) = if fa {
                    (Side::Left, self, &other)
                } else {
                    (Side::Right, &other, self)
                };
                out.equivalent = false;
                let point = sys.feasible_point()?.unwrap_or_default();
                let violates = oth
                    .closure_contradictions()
                    .next()
                    .or_else(|| oth.rows.iter().find(|r| !r.satisfied(&point, tol)))
                    .map(|r| r.label.clone())
                    .unwrap_or_else(|| "infeasible".into());
                out.counterexample = Some(self.named(point, side, violates));
                return Ok(out);
            }
            (true, true) => {}
        }
        for (side, sys, oth) in [(Side::Left, self, &other), (Side::Right, &other, self)] {
            for row in &oth.rows {
                let imp = sys.implies(row, tol)?;
                if imp.degenerate {
                    out.degenerate.push(row.label.clone());
                }
                if imp.implied {
                    continue;
                }
                out.equivalent = false;
                if imp.margin.is_none() {
                    out.unbounded_degeneracy = true;
                }
                let point = sys.witness_below(row, imp.margin)?;
                out.counterexample = Some(self.named(point, side, row.label.clone()));
                return Ok(out);
            }
        }
        Ok(out)
    }

    fn named(&self, point: Vec<f64>, satisfies: Side, violates: String) -> Counterexample {
        Counterexample {
            point: self.vars.iter().cloned().zip(point).collect(),
            satisfies,
            violates,
        }
    }

    /// A point of this system on which `row.lhs` sits strictly below `row.constant`,
    /// halfway between the system's minimum and the constant when finite.
    fn witness_below(&self, row: &Row<C>, margin: Option<f64>) -> Result<Vec<f64>> {
        let n = self.vars.len();
        let a: Vec<f64> = row.coeffs.iter().map(Coefficient::to_f64).collect();
        let target = match margin {
            Some(m) => row.constant + m / 2.0,
            None => row.constant - 1.0,
        };
        let rows = self.lp_rows();
        let pin = [(a.clone(), ComparisonOp::Eq, target)];
        if let Lp::Optimal { point, .. } = minimize(n, &rows, &pin, &vec![0.0; n])? {
            return Ok(point);
        }
        Ok(match minimize(n, &rows, &[], &a)? {
            Lp::Optimal { point, .. } => point,
            _ => vec![0.0; n],
        })
    }
}
