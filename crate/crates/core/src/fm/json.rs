//! JSON form of inequality systems:
//! `{"label":"rel[1]","coeffs":{"R1":1,"Rt1":1,"R0":1},"op":">=","const":0.46899}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FmError, LinearSystem, Op, Result, Row};
use crate::scalar::Coefficient;

/// A coefficient as written: integers as numbers, other rationals as `"p/q"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffDoc {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDoc {
    pub label: String,
    pub coeffs: BTreeMap<String, CoeffDoc>,
    pub op: String,
    #[serde(rename = "const")]
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(default)]
    pub vars: Vec<String>,
    pub rows: Vec<RowDoc>,
}

fn coeff_doc<C: Coefficient>(a: &C) -> CoeffDoc {
    let x = a.to_f64();
    if a.is_integer() && x.abs() < 9.0e15 {
        CoeffDoc::Int(x as i64)
    } else {
        CoeffDoc::Text(a.render())
    }
}

fn parse_coeff<C: Coefficient>(d: &CoeffDoc, label: &str) -> Result<C> {
    let bad = || FmError::Json(format!("row `{label}`: bad coefficient {d:?}"));
    match d {
        CoeffDoc::Int(i) => Ok(C::from_i64(*i)),
        CoeffDoc::Float(x) => C::from_f64(*x).ok_or_else(bad),
        CoeffDoc::Text(s) => C::parse(s).ok_or_else(bad),
    }
}

impl<C: Coefficient> LinearSystem<C> {
    pub fn to_doc(&self) -> SystemDoc {
        let row = |r: &Row<C>| RowDoc {
            label: r.label.clone(),
            coeffs: r
                .coeffs
                .iter()
                .zip(&self.vars)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, v)| (v.clone(), coeff_doc(a)))
                .collect(),
            op: r.op.symbol().to_string(),
            constant: r.constant,
        };
        SystemDoc {
            vars: self.vars.clone(),
            rows: self.rows.iter().chain(&self.contradictions).map(row).collect(),
        }
    }

    pub fn from_doc(doc: SystemDoc) -> Result<Self> {
        let mut vars = doc.vars;
        if vars.is_empty() {
            for r in &doc.rows {
                for name in r.coeffs.keys() {
                    if !vars.contains(name) {
                        vars.push(name.clone());
                    }
                }
            }
        }
        let mut sys = Self::new(vars)?;
        for r in doc.rows {
            let op = match r.op.as_str() {
                ">=" => Op::Ge,
                ">" => Op::Gt,
                "<=" | "<" => {
                    return Err(FmError::Json(format!(
                        "row `{}`: write rows in `>=`/`>` form",
                        r.label
                    )))
                }
                o => return Err(FmError::Json(format!("row `{}`: unknown op `{o}`", r.label))),
            };
            let mut terms = Vec::with_capacity(r.coeffs.len());
            for (name, d) in &r.coeffs {
                terms.push((name.as_str(), parse_coeff::<C>(d, &r.label)?));
            }
            sys.add(r.label.clone(), &terms, op, r.constant)?;
        }
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("system documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(s).map_err(|e| FmError::Json(e.to_string()))?;
        Self::from_doc(doc)
    }
}
