//! Shared builders and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use secsim::prob::{Alphabet, Channel};
use secsim::JointPmf;

/// Binary entropy, written out independently of the library.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

pub fn bits(names: &[&str]) -> Vec<Alphabet> {
    names.iter().map(|n| Alphabet::binary(*n)).collect()
}

/// Uniform `X1` observed through BSC(`p`) as `X2`.
pub fn dsbs(p: f64) -> JointPmf {
    JointPmf::from_fn(bits(&["X1", "X2"]), |c| if c[0] == c[1] { 0.5 * (1.0 - p) } else { 0.5 * p }).unwrap()
}

pub fn copy(p: &JointPmf, from: &str, to: &str) -> JointPmf {
    let ch = Channel::identity(p.alphabet(from).unwrap().clone(), to).unwrap();
    p.compose(&ch, 1 << 24).unwrap()
}

pub fn bsc(p: &JointPmf, from: &str, to: &str, e: f64) -> JointPmf {
    let ch = Channel::bsc(p.alphabet(from).unwrap().clone(), to, e).unwrap();
    p.compose(&ch, 1 << 24).unwrap()
}

/// One-symbol variable, standing for "absent".
pub fn constant(p: &JointPmf, name: &str) -> JointPmf {
    let ch = Channel::constant(vec![], Alphabet::range(name, 1).unwrap(), &[1.0]).unwrap();
    p.compose(&ch, 1 << 24).unwrap()
}

/// Random pmf over `k` variables named `V0..`, alphabets in `2..=max_size`,
/// with some exact zeros.
pub fn random_pmf<R: Rng>(rng: &mut R, k: usize, max_size: usize) -> JointPmf {
    let vars: Vec<Alphabet> = (0..k)
        .map(|i| Alphabet::range(format!("V{i}"), rng.gen_range(2..=max_size)).unwrap())
        .collect();
    let cells: usize = vars.iter().map(Alphabet::len).product();
    let mut t: Vec<f64> = (0..cells)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if t.iter().all(|&x| x == 0.0) {
        t[0] = 1.0;
    }
    let s: f64 = t.iter().sum();
    JointPmf::new(vars, t.into_iter().map(|x| x / s).collect()).unwrap()
}

/// `H(A)` by direct summation over the table, grouping cells by the
/// symbols of `a` (positions into the pmf's variable list).
pub fn brute_entropy(p: &JointPmf, a: &[&str]) -> f64 {
    let names = p.names();
    let pos: Vec<usize> = a.iter().map(|v| names.iter().position(|n| n == v).unwrap()).collect();
    let sizes = p.sizes();
    let mut groups: std::collections::HashMap<Vec<usize>, f64> = std::collections::HashMap::new();
    let mut idx = vec![0usize; sizes.len()];
    for &m in p.table() {
        *groups.entry(pos.iter().map(|&k| idx[k]).collect()).or_insert(0.0) += m;
        for k in (0..sizes.len()).rev() {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    groups.values().filter(|&&m| m > 0.0).map(|&m| -m * m.log2()).sum()
}

/// `I(A;B|C)` from four brute-force joint entropies.
pub fn brute_mi(p: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
    let h = |parts: &[&[&str]]| {
        let v: Vec<&str> = parts.iter().flat_map(|x| x.iter().copied()).collect();
        if v.is_empty() {
            0.0
        } else {
            brute_entropy(p, &v)
        }
    };
    h(&[a, c]) + h(&[b, c]) - h(&[a, b, c]) - h(&[c])
}

/// Names of the auxiliary variables `F1..Fk`.
pub fn fs(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("F{i}")).collect()
}

pub fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}
