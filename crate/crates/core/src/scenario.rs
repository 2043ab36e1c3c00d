//! One JSON document drives region checks, constraint derivations and
//! simulations.
//!
//! ```json
//! {
//!   "name": "dsbs_key_agreement",
//!   "mode": "thm3",
//!   "r": 1,
//!   "joint": {"vars": [...], "table": [...]},
//!   "rates": {"R0": 0, "R12": 0.9, "R21": 0, "RSK": 0.3},
//!   "internal": {"R": [0.9], "Rt": [0]},
//!   "sim": {"n": [2, 3, 4], "seeds": [7]}
//! }
//! ```
//!
//! An absent eavesdropper or protected variable is written as a one-symbol
//! variable; the secrecy modes require both to be declared.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fm::{Equivalence, FmError, SystemDoc};
use crate::prob::{PmfDoc, ProbError, DEFAULT_BUDGET_CELLS};
use crate::protocol::{ProtocolError, ProtocolRates, DEFAULT_ATOM_BUDGET};
use crate::region::{
    certify_projection, derive_internal_rates, keep_vars, raw_constraints, special_case,
    theorem1_check, theorem2_check, theorem3_check, theorem3_max_sk, validate_aux, wiretap_rate,
    Aggregation, AuxScheme, InternalRates, Mode, RatePoint, RegionError, RegionVerdict, SkRate,
    SpecialCase, SpecialCaseReport, WiretapReport, DEFAULT_MARKOV_TOL, DEFAULT_TOL,
};
use crate::JointPmf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Fm(#[from] FmError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Io(String),
}

impl ScenarioError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        Self::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// A resource limit (cell budget, atom budget, row cap) was hit, as
    /// opposed to malformed input.
    pub fn is_budget(&self) -> bool {
        fn prob(e: &ProbError) -> bool {
            matches!(e, ProbError::BudgetExceeded { .. })
        }
        fn fm(e: &FmError) -> bool {
            matches!(e, FmError::RowCap { .. })
        }
        fn region(e: &RegionError) -> bool {
            match e {
                RegionError::Prob(p) => prob(p),
                RegionError::Fm(f) => fm(f),
                _ => false,
            }
        }
        match self {
            Self::Prob(e) => prob(e),
            Self::Fm(e) => fm(e),
            Self::Region(e) => region(e),
            Self::Protocol(ProtocolError::BudgetExceeded { .. }) => true,
            Self::Protocol(ProtocolError::Prob(e)) => prob(e),
            Self::Protocol(ProtocolError::Region(e)) => region(e),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioMode {
    Thm1,
    Thm2,
    Thm3,
    Wiretap,
    SpecialCase,
}

impl ScenarioMode {
    /// The rate region this mode checks, if it is one of the theorems.
    pub fn region(self) -> Option<Mode> {
        match self {
            Self::Thm1 => Some(Mode::Thm1),
            Self::Thm2 => Some(Mode::Thm2),
            Self::Thm3 => Some(Mode::Thm3),
            _ => None,
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_markov_tol() -> f64 {
    DEFAULT_MARKOV_TOL
}

fn default_budget_cells() -> usize {
    DEFAULT_BUDGET_CELLS
}

fn default_n() -> Vec<usize> {
    vec![1]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_trials() -> u64 {
    100_000
}

fn default_budget_atoms() -> usize {
    DEFAULT_ATOM_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_budget_atoms")]
    pub budget_atoms: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            n: default_n(),
            seeds: default_seeds(),
            trials: default_trials(),
            budget_atoms: default_budget_atoms(),
        }
    }
}

/// What a fixture is expected to report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default)]
    pub member: Option<bool>,
    /// Expected [`RegionOutcome::value`].
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub value_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub mode: ScenarioMode,
    #[serde(default)]
    pub r: usize,
    pub joint: PmfDoc,
    /// Target pmf the scheme's marginal must reproduce (optional).
    #[serde(default)]
    pub target: Option<PmfDoc>,
    #[serde(default)]
    pub rates: RatePoint,
    /// Per-round rates for simulation; derived from `rates` when absent.
    #[serde(default)]
    pub internal: Option<InternalRates>,
    /// Required in special-case mode.
    #[serde(default)]
    pub case: Option<SpecialCase>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_markov_tol")]
    pub markov_tol: f64,
    #[serde(default = "default_budget_cells")]
    pub budget_cells: usize,
    #[serde(default)]
    pub sim: Option<SimOptions>,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

/// Verdict of `region` on a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionOutcome {
    Theorem {
        verdict: RegionVerdict,
        /// Largest key rate at the scenario's `R0` (key-generation mode).
        max_sk: Option<SkRate>,
    },
    SpecialCase(SpecialCaseReport),
    Wiretap(WiretapReport),
}

impl RegionOutcome {
    pub fn member(&self) -> bool {
        match self {
            Self::Theorem { verdict, .. } => verdict.member,
            Self::SpecialCase(s) => s.feasible,
            Self::Wiretap(w) => w.rate > 0.0,
        }
    }

    /// The scenario's headline number: the unclipped key rate
    /// `R0 + closed form`, the special-case margin `rhs − lhs`, or the
    /// wiretap rate.
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Theorem { max_sk, .. } => max_sk.as_ref().map(|s| s.raw),
            Self::SpecialCase(s) => Some(s.rhs - s.lhs),
            Self::Wiretap(w) => Some(w.rate),
        }
    }
}

/// Output of `fm` on a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmOutcome {
    pub mode: Mode,
    pub aggregation: Aggregation,
    pub keep: Vec<String>,
    pub raw: SystemDoc,
    pub projected: SystemDoc,
    /// Present when projecting onto the theorem's own rate variables.
    pub theorem: Option<SystemDoc>,
    pub equivalence: Option<Equivalence>,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(s).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialize")
    }

    pub fn joint(&self) -> Result<JointPmf> {
        JointPmf::from_doc(self.joint.clone()).map_err(|e| ScenarioError::field("joint", e.to_string()))
    }

    /// Structural checks that need no information measures.
    pub fn validate(&self) -> Result<()> {
        let p = self.joint()?;
        for (name, v) in [("tol", self.tol), ("markov_tol", self.markov_tol)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ScenarioError::field(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        self.rates
            .validate()
            .map_err(|e| ScenarioError::field("rates", e.to_string()))?;
        match self.mode {
            ScenarioMode::Wiretap => {}
            ScenarioMode::SpecialCase => {
                if self.case.is_none() {
                    return Err(ScenarioError::field("case", "required in special-case mode"));
                }
            }
            ScenarioMode::Thm1 | ScenarioMode::Thm2 | ScenarioMode::Thm3 => {
                let mut required = vec!["X1", "X2"];
                if self.mode != ScenarioMode::Thm1 {
                    required.extend(["Z", "S"]);
                }
                for v in required {
                    if !p.has_var(v) {
                        return Err(ScenarioError::field(
                            "joint",
                            format!("mode {:?} needs variable `{v}`", self.mode),
                        ));
                    }
                }
                if let Some(internal) = &self.internal {
                    internal
                        .validate(self.r)
                        .map_err(|e| ScenarioError::field("internal", e.to_string()))?;
                }
            }
        }
        if let Some(sim) = &self.sim {
            if sim.n.is_empty() || sim.n.contains(&0) {
                return Err(ScenarioError::field("sim.n", "blocklengths must be >= 1"));
            }
            if sim.seeds.is_empty() {
                return Err(ScenarioError::field("sim.seeds", "at least one seed"));
            }
        }
        Ok(())
    }

    fn region_mode(&self) -> Result<Mode> {
        self.mode
            .region()
            .ok_or_else(|| ScenarioError::field("mode", format!("{:?} has no auxiliary scheme", self.mode)))
    }

    pub fn aux_scheme(&self) -> Result<AuxScheme> {
        self.region_mode()?;
        let mut a = AuxScheme::new(self.joint()?, self.r)?.with_markov_tol(self.markov_tol);
        if let Some(t) = &self.target {
            let t = JointPmf::from_doc(t.clone()).map_err(|e| ScenarioError::field("target", e.to_string()))?;
            a = a.with_target(t)?;
        }
        Ok(a)
    }

    /// Region membership, with `tol` overriding the scenario's tolerance.
    pub fn region(&self, tol: Option<f64>) -> Result<RegionOutcome> {
        let tol = tol.unwrap_or(self.tol);
        match self.mode {
            ScenarioMode::Wiretap => Ok(RegionOutcome::Wiretap(wiretap_rate(&self.joint()?, self.markov_tol)?)),
            ScenarioMode::SpecialCase => {
                let case = self.case.ok_or_else(|| ScenarioError::field("case", "missing"))?;
                Ok(RegionOutcome::SpecialCase(special_case(&self.joint()?, case, self.rates.r0, tol)?))
            }
            _ => {
                let mode = self.region_mode()?;
                let a = self.aux_scheme()?;
                let aux = validate_aux(&a, mode)?;
                if !aux.member {
                    return Err(RegionError::AuxInvalid {
                        label: aux.violated().join(","),
                        witness: aux.slacks.iter().map(|s| -s.slack).fold(0.0, f64::max),
                    }
                    .into());
                }
                let (verdict, max_sk) = match mode {
                    Mode::Thm1 => (theorem1_check(&self.rates, &a, tol)?, None),
                    Mode::Thm2 => (theorem2_check(&self.rates, &a, tol)?, None),
                    Mode::Thm3 => (
                        theorem3_check(&self.rates, &a, tol)?,
                        Some(theorem3_max_sk(&a, self.rates.r0, tol)?),
                    ),
                };
                Ok(RegionOutcome::Theorem { verdict, max_sk })
            }
        }
    }

    /// Raw binning constraints, their projection onto `keep` (the theorem's
    /// total rates by default) and, for the default projection, the
    /// equivalence verdict against the stated region.
    pub fn fm(&self, keep: Option<&[String]>, aggregation: Aggregation, cap: usize, tol: Option<f64>) -> Result<FmOutcome> {
        let tol = tol.unwrap_or(self.tol);
        let mode = self.region_mode()?;
        let a = self.aux_scheme()?;
        let default: Vec<String> = keep_vars(mode).iter().map(|s| s.to_string()).collect();
        let keep = keep.map(<[String]>::to_vec).unwrap_or_else(|| default.clone());
        let mut sorted = keep.clone();
        sorted.sort();
        let mut sorted_default = default.clone();
        sorted_default.sort();
        if sorted == sorted_default {
            let c = certify_projection(&a, mode, aggregation, cap, tol)?;
            return Ok(FmOutcome {
                mode,
                aggregation,
                keep,
                raw: c.raw.to_doc(),
                projected: c.projected.to_doc(),
                theorem: Some(c.theorem.to_doc()),
                equivalence: Some(c.equivalence),
            });
        }
        let raw = raw_constraints(&a, mode, None, None)?;
        let refs: Vec<&str> = keep.iter().map(String::as_str).collect();
        let projected = raw.project_with(&refs, cap, tol)?;
        Ok(FmOutcome {
            mode,
            aggregation,
            keep,
            raw: raw.to_doc(),
            projected: projected.to_doc(),
            theorem: None,
            equivalence: None,
        })
    }

    /// Rates for the protocol: the explicit per-round rates if given,
    /// otherwise a balanced split of the total rates.
    pub fn protocol_rates(&self) -> Result<ProtocolRates> {
        let mode = self.region_mode()?;
        let internal = match &self.internal {
            Some(i) => i.clone(),
            None => {
                let a = self.aux_scheme()?;
                derive_internal_rates(&a, mode, &self.rates)?.ok_or_else(|| {
                    ScenarioError::field(
                        "rates",
                        "no per-round rates realize this point; give `internal` explicitly",
                    )
                })?
            }
        };
        Ok(ProtocolRates::new(internal, self.rates.r0, self.rates.rsk))
    }

    pub fn sim_options(&self) -> SimOptions {
        self.sim.clone().unwrap_or_default()
    }
}

/// The bundled fixture corpus as `(name, json)`.
pub fn fixtures() -> Vec<(&'static str, &'static str)> {
    macro_rules! fixture {
        ($name:literal) => {
            ($name, include_str!(concat!("../fixtures/", $name, ".json")))
        };
    }
    vec![
        fixture!("wiretap_bsc"),
        fixture!("dsbs_key_agreement"),
        fixture!("dsbs_outside"),
        fixture!("xor_infeasible"),
        fixture!("tyagi_function"),
        fixture!("one_terminal"),
        fixture!("tyagi2"),
        fixture!("thm3_residual_key"),
        fixture!("bsc_simulation"),
    ]
}

pub fn fixture(name: &str) -> Option<Scenario> {
    fixtures()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, json)| Scenario::from_json(json).expect("bundled fixtures are valid"))
}
