//! Random valid auxiliary schemes over binary alphabets, built by the
//! prescribed factorization so every chain holds exactly.

use rand::Rng;

use super::{parity, AuxScheme, Result};
use crate::prob::{Alphabet, DEFAULT_BUDGET_CELLS};
use crate::{Channel, JointPmf};

/// Which optional roles a sampled scheme carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeShape {
    pub r: usize,
    pub outputs: bool,
    pub eavesdropper: bool,
    pub protected: bool,
}

impl SchemeShape {
    /// All roles present.
    pub fn full(r: usize) -> Self {
        Self {
            r,
            outputs: true,
            eavesdropper: true,
            protected: true,
        }
    }
}

/// A random binary kernel with entries bounded away from zero.
fn kernel<R: Rng + ?Sized>(rng: &mut R, inputs: Vec<Alphabet>, output: Alphabet) -> Result<Channel> {
    let in_cells: usize = inputs.iter().map(Alphabet::len).product();
    let k = output.len();
    let mut rows = Vec::with_capacity(in_cells * k);
    for _ in 0..in_cells {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        rows.extend(raw.iter().map(|x| x / s));
    }
    Ok(Channel::new(inputs, vec![output], rows)?)
}

fn alph(p: &JointPmf, names: &[String]) -> Result<Vec<Alphabet>> {
    names
        .iter()
        .map(|n| Ok(p.alphabet(n)?.clone()))
        .collect()
}

/// Sample `p(x1,x2,z) ∏ p(f_i|f_<i,x_send) p(y1|f,x1) p(y2|f,x2) p(s|x,y,z)`.
pub fn random_scheme<R: Rng + ?Sized>(shape: SchemeShape, rng: &mut R) -> Result<AuxScheme> {
    let mut vars = vec![Alphabet::binary("X1"), Alphabet::binary("X2")];
    if shape.eavesdropper {
        vars.push(Alphabet::binary("Z"));
    }
    let raw: Vec<f64> = (0..1 << vars.len()).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    let mut p = JointPmf::new(vars, raw.iter().map(|x| x / s).collect())?;
    let mut fs: Vec<String> = Vec::new();
    for i in 1..=shape.r {
        let mut inputs = fs.clone();
        inputs.push(if parity(i) == 1 { "X1" } else { "X2" }.to_string());
        let ch = kernel(rng, alph(&p, &inputs)?, Alphabet::binary(format!("F{i}")))?;
        p = p.compose(&ch, DEFAULT_BUDGET_CELLS)?;
        fs.push(format!("F{i}"));
    }
    let mut ys = Vec::new();
    if shape.outputs {
        for (y, x) in [("Y1", "X1"), ("Y2", "X2")] {
            let mut inputs = fs.clone();
            inputs.push(x.to_string());
            let ch = kernel(rng, alph(&p, &inputs)?, Alphabet::binary(y))?;
            p = p.compose(&ch, DEFAULT_BUDGET_CELLS)?;
            ys.push(y.to_string());
        }
    }
    if shape.protected {
        let mut inputs: Vec<String> = vec!["X1".into(), "X2".into()];
        inputs.extend(ys.iter().cloned());
        if shape.eavesdropper {
            inputs.push("Z".into());
        }
        let ch = kernel(rng, alph(&p, &inputs)?, Alphabet::binary("S"))?;
        p = p.compose(&ch, DEFAULT_BUDGET_CELLS)?;
    }
    AuxScheme::new(p, shape.r)
}
