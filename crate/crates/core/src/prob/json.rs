//! JSON documents for pmfs and channels.
//!
//! Tables are row-major in `vars` order with the last variable fastest.
//! Values pass through `f64` so a table written and read back is bit-identical.

use serde::{Deserialize, Serialize};

use super::{Alphabet, Channel, JointPmf, ProbError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDoc {
    pub name: String,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfDoc {
    pub vars: Vec<VarDoc>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub inputs: Vec<VarDoc>,
    pub outputs: Vec<VarDoc>,
    pub table: Vec<f64>,
}

fn to_doc(a: &Alphabet) -> VarDoc {
    VarDoc {
        name: a.name().to_string(),
        symbols: a.symbols().to_vec(),
    }
}

fn from_docs(docs: Vec<VarDoc>) -> Result<Vec<Alphabet>> {
    docs.into_iter()
        .map(|d| Alphabet::new(d.name, d.symbols))
        .collect()
}

fn from_table<T: Real>(table: Vec<f64>) -> Result<Vec<T>> {
    table
        .into_iter()
        .enumerate()
        .map(|(index, v)| T::from_f64(v).ok_or(ProbError::InvalidMass { index, value: v }))
        .collect()
}

impl<T: Real> JointPmf<T> {
    pub fn to_doc(&self) -> PmfDoc {
        PmfDoc {
            vars: self.vars.iter().map(to_doc).collect(),
            table: self.table.iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn from_doc(doc: PmfDoc) -> Result<Self> {
        Self::new(from_docs(doc.vars)?, from_table(doc.table)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("pmf documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PmfDoc = serde_json::from_str(s).map_err(|e| ProbError::Json(e.to_string()))?;
        Self::from_doc(doc)
    }
}

impl<T: Real> Channel<T> {
    pub fn to_doc(&self) -> ChannelDoc {
        ChannelDoc {
            inputs: self.inputs.iter().map(to_doc).collect(),
            outputs: self.outputs.iter().map(to_doc).collect(),
            table: self.rows.iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn from_doc(doc: ChannelDoc) -> Result<Self> {
        Self::new(
            from_docs(doc.inputs)?,
            from_docs(doc.outputs)?,
            from_table(doc.table)?,
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ChannelDoc =
            serde_json::from_str(s).map_err(|e| ProbError::Json(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("channel documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = JointPmf::<f64>::from_fn(
            vec![Alphabet::range("A", 3).unwrap(), Alphabet::binary("B")],
            |i| [0.1, 0.2, 0.05, 0.15, 0.3, 0.2][i[0] * 2 + i[1]] * (1.0 / 3.0) * 3.0,
        )
        .unwrap();
        let back = JointPmf::<f64>::from_json(&p.to_json()).unwrap();
        for (a, b) in p.table().iter().zip(back.table()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.vars(), p.vars());
    }

    #[test]
    fn layout_is_last_variable_fastest() {
        let s = r#"{"vars":[{"name":"A","symbols":["a","b"]},{"name":"B","symbols":["x","y","z"]}],
                    "table":[0.1,0.2,0.3,0.0,0.0,0.4]}"#;
        let p = JointPmf::<f64>::from_json(s).unwrap();
        assert_eq!(p.prob(&[0, 2]), 0.3);
        assert_eq!(p.prob(&[1, 2]), 0.4);
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(
            JointPmf::<f64>::from_json("{"),
            Err(ProbError::Json(_))
        ));
        let s = r#"{"vars":[{"name":"A","symbols":["0","1"]}],"table":[0.5]}"#;
        assert!(matches!(
            JointPmf::<f64>::from_json(s),
            Err(ProbError::TableSize { .. })
        ));
        let c = r#"{"inputs":[{"name":"A","symbols":["0","1"]}],
                    "outputs":[{"name":"B","symbols":["0","1"]}],
                    "table":[0.5,0.5,0.9,0.2]}"#;
        assert!(matches!(
            Channel::<f64>::from_json(c),
            Err(ProbError::ChannelRow { row: 1, .. })
        ));
    }
}
