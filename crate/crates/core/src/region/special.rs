//! Closed-form criteria for the function-computation special cases and the
//! wiretap key rate.

use serde::{Deserialize, Serialize};

use super::{theorem2_check, AuxScheme, RatePoint, RegionError, RegionVerdict, Result};
use crate::prob::{Channel, DEFAULT_BUDGET_CELLS};
use crate::JointPmf;

/// Tolerance for "Y is a deterministic function of (X1, X2)".
const DETERMINISM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialCase {
    /// Both terminals compute `Y = g(X1, X2)` securely (`Y1 = Y2 = S = Y`).
    Tyagi,
    /// Only terminal 1 computes `Y1 = g(X1, X2)`.
    OneTerminal,
    /// Terminal 1 computes `Y1 = g(X1, X2)`, terminal 2 a function `Y2` of `Y1`.
    Tyagi2,
}

impl std::str::FromStr for SpecialCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tyagi" => Ok(Self::Tyagi),
            "one-terminal" => Ok(Self::OneTerminal),
            "tyagi2" => Ok(Self::Tyagi2),
            _ => Err(format!("unknown special case `{s}` (tyagi, one-terminal, tyagi2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseReport {
    pub case: SpecialCase,
    #[serde(rename = "R0")]
    pub r0: f64,
    /// Quantity that must stay strictly below `rhs`.
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_label: String,
    pub rhs_label: String,
    /// `lhs < rhs` under the strictness policy.
    pub feasible: bool,
    /// Sides of the original entropy-form condition (terminal-2 function case
    /// only); it must hold as `left > right`.
    pub entropy_form: Option<(f64, f64)>,
    /// Full secrecy-theorem verdict for the induced scheme with uncharged
    /// public discussion.
    pub verdict: RegionVerdict,
}

fn y_name(p: &JointPmf, names: &[&str]) -> Result<String> {
    names
        .iter()
        .find(|n| p.has_var(n))
        .map(|n| n.to_string())
        .ok_or_else(|| RegionError::MissingVariable(names.join("|")))
}

fn require_function(p: &JointPmf, y: &str, of: &[&str], what: &str) -> Result<()> {
    let h = p.entropy(&[y], of)?;
    if h > DETERMINISM_TOL {
        return Err(RegionError::Structural(format!(
            "{what}: H({y}|{}) = {h:.3e} > 0",
            of.join(",")
        )));
    }
    Ok(())
}

fn copy(p: &JointPmf, from: &str, to: &str) -> Result<JointPmf> {
    let ch = Channel::identity(p.alphabet(from)?.clone(), to)?;
    Ok(p.compose(&ch, DEFAULT_BUDGET_CELLS)?)
}

/// Evaluate the named special case on a pmf over `X1, X2` and the
/// function variables (`Y` or `Y1` for the first two cases, `Y1, Y2` for the
/// third).
pub fn special_case(p: &JointPmf, which: SpecialCase, r0: f64, tol: f64) -> Result<SpecialCaseReport> {
    for v in ["X1", "X2"] {
        if !p.has_var(v) {
            return Err(RegionError::MissingVariable(v.into()));
        }
    }
    if r0.is_nan() || r0 < 0.0 {
        return Err(RegionError::InvalidRate("R0".into(), r0));
    }
    let ixx = p.mutual_info(&["X1"], &["X2"], &[])?;
    let (joint, r, lhs, lhs_label, entropy_form) = match which {
        SpecialCase::Tyagi => {
            let y = y_name(p, &["Y", "Y1"])?;
            let base = p.marginalize(&["X1", "X2", &y])?;
            require_function(&base, &y, &["X1", "X2"], "Y must be a function of (X1,X2)")?;
            let hy = base.entropy(&[&y], &[])?;
            let mut j = copy(&base, "X1", "F1")?;
            j = copy(&j, "X2", "F2")?;
            for to in ["Y1", "Y2", "S"] {
                if to != y {
                    j = copy(&j, &y, to)?;
                }
            }
            let j = if y == "Y" { j.marginalize(&other_than(&j, "Y"))? } else { j };
            (j, 2, hy, "H(Y)".to_string(), None)
        }
        SpecialCase::OneTerminal => {
            let y = y_name(p, &["Y1", "Y"])?;
            let base = p.marginalize(&["X1", "X2", &y])?;
            require_function(&base, &y, &["X1", "X2"], "Y1 must be a function of (X1,X2)")?;
            let lhs = base.mutual_info(&["X2"], &[&y], &[])?;
            let mut j = copy(&base, "X2", "F2")?;
            if y != "Y1" {
                j = copy(&j, &y, "Y1")?;
                j = j.marginalize(&other_than(&j, &y))?;
            }
            j = copy(&j, "Y1", "S")?;
            (j, 2, lhs, "I(X2;Y1)".to_string(), None)
        }
        SpecialCase::Tyagi2 => {
            for v in ["Y1", "Y2"] {
                if !p.has_var(v) {
                    return Err(RegionError::MissingVariable(v.into()));
                }
            }
            let base = p.marginalize(&["X1", "X2", "Y1", "Y2"])?;
            require_function(&base, "Y1", &["X1", "X2"], "Y1 must be a function of (X1,X2)")?;
            require_function(&base, "Y2", &["Y1"], "Y2 must be a function of Y1")?;
            let lhs = base.mutual_info(&["X2", "Y2"], &["Y1"], &[])?;
            let left = base.entropy(&["X1", "X2"], &["Y1"])?;
            let right = base.entropy(&["X2"], &["X1"])?
                + base.entropy(&["Y2"], &["X2"])?
                + base.entropy(&["X1"], &["Y1", "X2"])?;
            let mut j = copy(&base, "X2", "F2")?;
            j = copy(&j, "Y2", "F3")?;
            j = copy(&j, "Y1", "S")?;
            (j, 3, lhs, "I(X2Y2;Y1)".to_string(), Some((left, right)))
        }
    };
    let rhs = ixx + r0;
    let scheme = AuxScheme::new(joint, r)?;
    let rates = RatePoint::new(r0, f64::INFINITY, f64::INFINITY);
    let verdict = theorem2_check(&rates, &scheme, tol)?;
    Ok(SpecialCaseReport {
        case: which,
        r0,
        lhs,
        rhs,
        lhs_label,
        rhs_label: "I(X1;X2)+R0".into(),
        feasible: rhs - lhs >= tol,
        entropy_form,
        verdict,
    })
}

fn other_than<'a>(p: &'a JointPmf, drop: &str) -> Vec<&'a str> {
    p.names().into_iter().filter(|n| *n != drop).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WiretapReport {
    /// `I(U;Y) − I(U;Z)`, possibly negative.
    pub rate: f64,
    pub i_uy: f64,
    pub i_uz: f64,
    /// `I(U;YZ|X)`, the witness of `U − X − YZ`.
    pub chain_witness: f64,
}

/// Key rate of the wiretap/source model over `X, Y, Z` with optional
/// auxiliary `U` (defaults to `X`). Missing `Y` or `Z` are constants.
pub fn wiretap_rate(p: &JointPmf, markov_tol: f64) -> Result<WiretapReport> {
    if !p.has_var("X") {
        return Err(RegionError::MissingVariable("X".into()));
    }
    for n in p.names() {
        if !["U", "X", "Y", "Z"].contains(&n) {
            return Err(RegionError::UnknownRole(n.to_string(), 0));
        }
    }
    let u = if p.has_var("U") { "U" } else { "X" };
    let y: Vec<&str> = ["Y"].into_iter().filter(|v| p.has_var(v)).collect();
    let z: Vec<&str> = ["Z"].into_iter().filter(|v| p.has_var(v)).collect();
    let yz: Vec<&str> = y.iter().chain(&z).copied().collect();
    let chain_witness = if u == "U" && !yz.is_empty() {
        p.mutual_info(&["U"], &yz, &["X"])?
    } else {
        0.0
    };
    if chain_witness > markov_tol {
        return Err(RegionError::AuxInvalid {
            label: "chain[U]".into(),
            witness: chain_witness,
        });
    }
    let i_uy = p.mutual_info(&[u], &y, &[])?;
    let i_uz = p.mutual_info(&[u], &z, &[])?;
    Ok(WiretapReport {
        rate: i_uy - i_uz,
        i_uy,
        i_uz,
        chain_witness,
    })
}
