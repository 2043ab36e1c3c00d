//! Rate regions for secure two-terminal channel simulation.
//!
//! Variables of an [`AuxScheme`] are identified by role name: `X1`, `X2`
//! (terminal sources), `Z` (eavesdropper), `Y1`, `Y2` (simulated outputs),
//! `S` (protected variable) and `F1..Fr` (auxiliaries, one per round).
//! A role missing from the joint is the empty (constant) variable.

mod bridge;
mod sample;
mod special;
mod theorems;

pub use bridge::{
    aggregated_system, certify_projection, derive_internal_rates, keep_vars, raw_constraints,
    theorem_system, Aggregation, Certification,
};
pub use sample::{random_scheme, SchemeShape};
pub use special::{special_case, wiretap_rate, SpecialCase, SpecialCaseReport, WiretapReport};
pub use theorems::{
    check_ll1, sk_lower_bound, theorem1_check, theorem2_check, theorem3_check, theorem3_max_sk,
    validate_aux, Ll1Entry, Residual, SkBound, SkRate,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fm::FmError;
use crate::prob::ProbError;
use crate::JointPmf;

/// Default slack tolerance τ for the strictness policy.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default tolerance for Markov-chain witnesses.
pub const DEFAULT_MARKOV_TOL: f64 = 1e-9;
/// Slack magnitude below which a satisfied inequality is reported as binding.
pub const BINDING_TOL: f64 = 1e-7;
/// Largest TV between the scheme's marginal and its declared target.
pub const TARGET_TV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Fm(#[from] FmError),
    #[error("required variable `{0}` is missing")]
    MissingVariable(String),
    #[error("variable `{0}` has no role (expected X1, X2, Z, Y1, Y2, S or F1..F{1})")]
    UnknownRole(String, usize),
    #[error("auxiliary scheme invalid: {label} has witness {witness:.3e} bits")]
    AuxInvalid { label: String, witness: f64 },
    #[error("rate {0} is negative or NaN ({1})")]
    InvalidRate(String, f64),
    #[error("round index {0} out of range")]
    InvalidRound(usize),
    #[error("structural assumption violated: {0}")]
    Structural(String),
    #[error("closed forms disagree: {0} vs {1}")]
    IdentityMismatch(f64, f64),
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Which theorem's constraint set is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Thm1,
    Thm2,
    Thm3,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Thm1 => "thm1",
            Mode::Thm2 => "thm2",
            Mode::Thm3 => "thm3",
        })
    }
}

/// Operational meaning of `R0` in a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum R0Semantics {
    SharedRandomness,
    PresharedSecretKey,
}

impl Mode {
    pub fn r0_semantics(self) -> R0Semantics {
        match self {
            Mode::Thm1 => R0Semantics::SharedRandomness,
            Mode::Thm2 | Mode::Thm3 => R0Semantics::PresharedSecretKey,
        }
    }
}

/// Terminal index (1 or 2) of the sender of round `i`.
pub fn parity(i: usize) -> u8 {
    assert!(i >= 1, "rounds are numbered from 1");
    if i % 2 == 1 {
        1
    } else {
        2
    }
}

/// Serde helpers writing non-finite bit values as `"inf"`, `"-inf"`, `"nan"`.
pub mod bits {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number or \"inf\", got `{other}`"))),
            },
        }
    }
}

/// External rate tuple in bits per source symbol. `f64::INFINITY` is the
/// "uncharged" sentinel and is written as `"inf"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(rename = "R0", with = "bits", default)]
    pub r0: f64,
    #[serde(rename = "R12", with = "bits", default)]
    pub r12: f64,
    #[serde(rename = "R21", with = "bits", default)]
    pub r21: f64,
    #[serde(rename = "RSK", with = "bits", default)]
    pub rsk: f64,
}

impl RatePoint {
    pub fn new(r0: f64, r12: f64, r21: f64) -> Self {
        Self {
            r0,
            r12,
            r21,
            rsk: 0.0,
        }
    }

    pub fn with_rsk(mut self, rsk: f64) -> Self {
        self.rsk = rsk;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("R0", self.r0), ("R12", self.r12), ("R21", self.r21), ("RSK", self.rsk)] {
            if v.is_nan() || v < 0.0 {
                return Err(RegionError::InvalidRate(name.into(), v));
            }
        }
        Ok(())
    }
}

/// Per-round message rates `R_i` and shared-randomness rates `R̃_i`, plus the
/// part of `R0` the binning actually uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalRates {
    #[serde(rename = "R")]
    pub message: Vec<f64>,
    #[serde(rename = "Rt")]
    pub shared: Vec<f64>,
    #[serde(rename = "R0_used", default)]
    pub r0_used: Option<f64>,
}

impl InternalRates {
    pub fn new(message: Vec<f64>, shared: Vec<f64>) -> Self {
        Self {
            message,
            shared,
            r0_used: None,
        }
    }

    pub fn rounds(&self) -> usize {
        self.message.len()
    }

    pub fn validate(&self, r: usize) -> Result<()> {
        if self.message.len() != r || self.shared.len() != r {
            return Err(RegionError::InvalidRound(self.message.len().max(self.shared.len())));
        }
        for (i, (&a, &b)) in self.message.iter().zip(&self.shared).enumerate() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(RegionError::InvalidRate(format!("R{}", i + 1), a));
            }
            if !(b >= 0.0 && b.is_finite()) {
                return Err(RegionError::InvalidRate(format!("Rt{}", i + 1), b));
            }
        }
        Ok(())
    }
}

/// One inequality `lhs (≥ | >) rhs` of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub label: String,
    #[serde(with = "bits")]
    pub lhs: f64,
    #[serde(with = "bits")]
    pub rhs: f64,
    /// `lhs − rhs`.
    #[serde(with = "bits")]
    pub slack: f64,
    pub strict: bool,
    pub satisfied: bool,
}

impl Slack {
    /// Strict rows need slack ≥ τ, non-strict rows slack ≥ −τ.
    pub fn new(label: impl Into<String>, lhs: f64, rhs: f64, strict: bool, tol: f64) -> Self {
        let slack = lhs - rhs;
        let satisfied = if strict { slack >= tol } else { slack >= -tol };
        Self {
            label: label.into(),
            lhs,
            rhs,
            slack,
            strict,
            satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub mode: Mode,
    pub member: bool,
    /// Membership of the closure: every slack ≥ −τ, strictness ignored.
    pub closure_member: bool,
    pub r0_semantics: R0Semantics,
    pub slacks: Vec<Slack>,
    /// Satisfied inequalities with |slack| ≤ [`BINDING_TOL`].
    pub binding: Vec<String>,
    pub tol: f64,
}

impl RegionVerdict {
    pub fn from_slacks(mode: Mode, slacks: Vec<Slack>, tol: f64) -> Self {
        let member = slacks.iter().all(|s| s.satisfied);
        let closure_member = slacks.iter().all(|s| s.slack >= -tol);
        let binding = slacks
            .iter()
            .filter(|s| s.satisfied && s.slack.abs() <= BINDING_TOL)
            .map(|s| s.label.clone())
            .collect();
        Self {
            mode,
            member,
            closure_member,
            r0_semantics: mode.r0_semantics(),
            slacks,
            binding,
            tol,
        }
    }

    pub fn get(&self, label: &str) -> Option<&Slack> {
        self.slacks.iter().find(|s| s.label == label)
    }

    /// Labels of the unsatisfied inequalities.
    pub fn violated(&self) -> Vec<&str> {
        self.slacks
            .iter()
            .filter(|s| !s.satisfied)
            .map(|s| s.label.as_str())
            .collect()
    }
}

/// A joint pmf over the role variables together with the round count.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxScheme {
    joint: JointPmf,
    r: usize,
    markov_tol: f64,
    target: Option<JointPmf>,
}

fn role_ok(name: &str, r: usize) -> bool {
    match name {
        "X1" | "X2" | "Z" | "Y1" | "Y2" | "S" => true,
        _ => name
            .strip_prefix('F')
            .and_then(|k| k.parse::<usize>().ok())
            .is_some_and(|k| (1..=r).contains(&k) && name == format!("F{k}")),
    }
}

impl AuxScheme {
    pub fn new(joint: JointPmf, r: usize) -> Result<Self> {
        for name in joint.names() {
            if !role_ok(name, r) {
                return Err(RegionError::UnknownRole(name.to_string(), r));
            }
        }
        for req in ["X1", "X2"] {
            if !joint.has_var(req) {
                return Err(RegionError::MissingVariable(req.into()));
            }
        }
        Ok(Self {
            joint,
            r,
            markov_tol: DEFAULT_MARKOV_TOL,
            target: None,
        })
    }

    pub fn with_markov_tol(mut self, tol: f64) -> Self {
        self.markov_tol = tol;
        self
    }

    /// Declare the source/channel composition the scheme must reproduce.
    pub fn with_target(mut self, target: JointPmf) -> Result<Self> {
        for name in target.names() {
            if !self.joint.has_var(name) {
                return Err(RegionError::MissingVariable(name.to_string()));
            }
        }
        self.target = Some(target);
        Ok(self)
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn markov_tol(&self) -> f64 {
        self.markov_tol
    }

    pub fn target(&self) -> Option<&JointPmf> {
        self.target.as_ref()
    }

    pub fn has(&self, name: &str) -> bool {
        self.joint.has_var(name)
    }

    /// The present members of `names`.
    pub fn set(&self, names: &[&str]) -> Vec<String> {
        names
            .iter()
            .filter(|n| self.has(n))
            .map(|n| n.to_string())
            .collect()
    }

    /// Terminal `t`'s source (`X1` or `X2`).
    pub fn x(&self, t: u8) -> Vec<String> {
        self.set(&[if t == 1 { "X1" } else { "X2" }])
    }

    pub fn x_both(&self) -> Vec<String> {
        self.set(&["X1", "X2"])
    }

    /// Source of the sender of round `i`.
    pub fn sender(&self, i: usize) -> Vec<String> {
        self.x(parity(i))
    }

    /// Source of the receiver of round `i`.
    pub fn receiver(&self, i: usize) -> Vec<String> {
        self.x(3 - parity(i))
    }

    /// `F_lo … F_hi` (present ones; empty when `lo > hi`).
    pub fn f_range(&self, lo: usize, hi: usize) -> Vec<String> {
        (lo..=hi)
            .map(|k| format!("F{k}"))
            .filter(|n| self.has(n))
            .collect()
    }

    /// `F_[1:i]`.
    pub fn f_upto(&self, i: usize) -> Vec<String> {
        self.f_range(1, i)
    }

    pub fn f_all(&self) -> Vec<String> {
        self.f_range(1, self.r)
    }

    pub fn y(&self) -> Vec<String> {
        self.set(&["Y1", "Y2"])
    }

    pub fn z(&self) -> Vec<String> {
        self.set(&["Z"])
    }

    pub fn s(&self) -> Vec<String> {
        self.set(&["S"])
    }

    pub fn sz(&self) -> Vec<String> {
        self.set(&["S", "Z"])
    }

    /// H(A|C) in bits.
    pub fn h(&self, a: &[String], c: &[String]) -> f64 {
        self.joint
            .entropy(&refs(a), &refs(c))
            .expect("role sets are disjoint and present")
    }

    /// I(A;B|C) in bits.
    pub fn i(&self, a: &[String], b: &[String], c: &[String]) -> f64 {
        self.joint
            .mutual_info(&refs(a), &refs(b), &refs(c))
            .expect("role sets are disjoint and present")
    }

    /// I(A;C|B), the witness of the chain A − B − C.
    pub fn chain(&self, a: &[String], b: &[String], c: &[String]) -> f64 {
        self.i(a, c, b)
    }
}

pub(crate) fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Concatenate role sets.
pub(crate) fn cat(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    #[test]
    fn parity_examples() {
        assert_eq!(parity(1), 1);
        assert_eq!(parity(2), 2);
        assert_eq!(parity(7), 1);
    }

    #[test]
    fn roles_are_checked() {
        let p = JointPmf::uniform(vec![Alphabet::binary("X1"), Alphabet::binary("X2"), Alphabet::binary("F2")])
            .unwrap();
        assert!(matches!(
            AuxScheme::new(p.clone(), 1),
            Err(RegionError::UnknownRole(_, 1))
        ));
        assert!(AuxScheme::new(p, 2).is_ok());
        let q = JointPmf::uniform(vec![Alphabet::binary("X1")]).unwrap();
        assert!(matches!(
            AuxScheme::new(q, 0),
            Err(RegionError::MissingVariable(_))
        ));
        let w = JointPmf::uniform(vec![Alphabet::binary("X1"), Alphabet::binary("X2"), Alphabet::binary("F01")])
            .unwrap();
        assert!(AuxScheme::new(w, 1).is_err());
    }

    #[test]
    fn rate_point_json_uses_inf_sentinel() {
        let p = RatePoint::new(0.0, f64::INFINITY, 1.5);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"R12\":\"inf\""));
        let back: RatePoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let q: RatePoint = serde_json::from_str(r#"{"R0":0.5,"R12":1}"#).unwrap();
        assert_eq!(q, RatePoint::new(0.5, 1.0, 0.0));
        assert!(RatePoint::new(-0.1, 0.0, 0.0).validate().is_err());
    }
}
