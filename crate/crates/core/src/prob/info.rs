//! Entropic functionals, total variation and Markov tests.

use super::{JointPmf, ProbError, Result};
use crate::scalar::Real;

/// Shannon entropy in bits of an (unconditioned) mass vector, 0·log 0 = 0.
pub(crate) fn entropy_of<T: Real>(masses: &[T]) -> T {
    let mut h = T::zero();
    for &p in masses {
        if p > T::zero() {
            h = h - p * p.log2();
        }
    }
    h
}

/// Outcome of a conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCheck<T> {
    pub holds: bool,
    /// I(A;C|B) in bits.
    pub witness: T,
}

impl<T: Real> JointPmf<T> {
    fn disjoint_sets(&self, sets: &[&[&str]]) -> Result<Vec<Vec<usize>>> {
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
        for set in sets {
            let pos = self.resolve(set)?;
            for p in &pos {
                if out.iter().any(|o| o.contains(p)) {
                    return Err(ProbError::Overlap(self.vars[*p].name().to_string()));
                }
            }
            out.push(pos);
        }
        Ok(out)
    }

    fn joint_entropy(&self, parts: &[&[usize]]) -> T {
        let mut pos: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
        pos.sort_unstable();
        self.entropy_positions(&pos)
    }

    /// H(A|C) in bits.
    pub fn entropy(&self, a: &[&str], given: &[&str]) -> Result<T> {
        let sets = self.disjoint_sets(&[a, given])?;
        let (a, c) = (&sets[0], &sets[1]);
        Ok(self.joint_entropy(&[a, c]) - self.joint_entropy(&[c]))
    }

    /// I(A;B|C) in bits.
    pub fn mutual_info(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<T> {
        let sets = self.disjoint_sets(&[a, b, given])?;
        let (a, b, c) = (&sets[0], &sets[1], &sets[2]);
        Ok(self.joint_entropy(&[a, c]) + self.joint_entropy(&[b, c])
            - self.joint_entropy(&[a, b, c])
            - self.joint_entropy(&[c]))
    }

    /// Tests the chain A − B − C, i.e. I(A;C|B) ≤ tol.
    pub fn is_markov(&self, a: &[&str], b: &[&str], c: &[&str], tol: T) -> Result<MarkovCheck<T>> {
        let witness = self.mutual_info(a, c, b)?;
        Ok(MarkovCheck {
            holds: witness <= tol,
            witness,
        })
    }

    /// ½ Σ |p − q| over identical variable lists.
    pub fn total_variation(&self, other: &Self) -> Result<T> {
        if self.vars != other.vars {
            return Err(ProbError::AlphabetMismatch(format!(
                "[{}] vs [{}]",
                self.names().join(","),
                other.names().join(",")
            )));
        }
        let s: T = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(&p, &q)| (p - q).abs())
            .sum();
        Ok((s * T::lit(0.5)).min(T::one()))
    }
}
