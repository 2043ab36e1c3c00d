//! Membership checks for the three achievability theorems and the
//! secret-key lower bound.

use serde::{Deserialize, Serialize};

use super::{
    cat, parity, AuxScheme, Mode, RatePoint, RegionError, RegionVerdict, Result, Slack,
    TARGET_TV_TOL,
};

/// A Markov-chain entry: satisfied iff the witness is within `markov_tol`.
fn chain_entry(label: String, witness: f64, markov_tol: f64) -> Slack {
    Slack {
        label,
        lhs: markov_tol,
        rhs: witness,
        slack: markov_tol - witness,
        strict: false,
        satisfied: witness <= markov_tol,
    }
}

/// Chain memberships required by `mode`. Thm1 ignores `Z` and `S`.
pub fn validate_aux(a: &AuxScheme, mode: Mode) -> Result<RegionVerdict> {
    let tol = a.markov_tol();
    let secure = mode != Mode::Thm1;
    let z = if secure { a.z() } else { Vec::new() };
    let mut out = Vec::new();
    for i in 1..=a.r() {
        let fi = a.f_range(i, i);
        if fi.is_empty() {
            continue;
        }
        let given = cat(&[&a.f_upto(i - 1), &a.sender(i)]);
        let other = cat(&[&a.receiver(i), &z]);
        out.push(chain_entry(format!("chain[F{i}]"), a.chain(&fi, &given, &other), tol));
    }
    let f = a.f_all();
    let (y1, y2) = (a.set(&["Y1"]), a.set(&["Y2"]));
    if !y1.is_empty() {
        let w = a.chain(&y1, &cat(&[&f, &a.x(1)]), &cat(&[&a.x(2), &y2, &z]));
        out.push(chain_entry("chain[Y1]".into(), w, tol));
    }
    if !y2.is_empty() {
        let w = a.chain(&y2, &cat(&[&f, &a.x(2)]), &cat(&[&a.x(1), &y1, &z]));
        out.push(chain_entry("chain[Y2]".into(), w, tol));
    }
    if secure {
        let y = a.y();
        if !y.is_empty() && !z.is_empty() {
            out.push(chain_entry("chain[Y]".into(), a.chain(&y, &a.x_both(), &z), tol));
        }
        let s = a.s();
        if !s.is_empty() && !f.is_empty() {
            let given = cat(&[&a.x_both(), &y, &z]);
            out.push(chain_entry("chain[S]".into(), a.chain(&s, &given, &f), tol));
        }
    }
    if let Some(target) = a.target() {
        let names = target.names();
        let tv = a.joint().marginalize(&names)?.reorder(&names)?.total_variation(target)?;
        out.push(chain_entry("target".into(), tv, TARGET_TV_TOL));
    }
    Ok(RegionVerdict::from_slacks(mode, out, tol))
}

fn require_valid(a: &AuxScheme, mode: Mode) -> Result<()> {
    let v = validate_aux(a, mode)?;
    match v.slacks.iter().find(|s| !s.satisfied) {
        Some(s) => Err(RegionError::AuxInvalid {
            label: s.label.clone(),
            witness: s.rhs,
        }),
        None => Ok(()),
    }
}

/// The four total-rate inequalities shared by every mode.
fn total_rate_slacks(rates: &RatePoint, a: &AuxScheme, tol: f64) -> Vec<Slack> {
    let (x1, x2, xb) = (a.x(1), a.x(2), a.x_both());
    let f = a.f_all();
    let y = a.y();
    let t1 = a.i(&x1, &f, &x2);
    let t2 = a.i(&x2, &f, &x1);
    let y1 = a.i(&a.f_upto(1), &y, &xb);
    let yall = a.i(&f, &y, &xb);
    vec![
        Slack::new("eqT1", rates.r12, t1, false, tol),
        Slack::new("eqT2", rates.r21, t2, false, tol),
        Slack::new("eqT3", rates.r0 + rates.r12, t1 + y1, false, tol),
        Slack::new("eqT4", rates.r0 + rates.r12 + rates.r21, t1 + t2 + yall, false, tol),
    ]
}

pub fn theorem1_check(rates: &RatePoint, a: &AuxScheme, tol: f64) -> Result<RegionVerdict> {
    rates.validate()?;
    require_valid(a, Mode::Thm1)?;
    Ok(RegionVerdict::from_slacks(Mode::Thm1, total_rate_slacks(rates, a, tol), tol))
}

/// Right-hand side of the secrecy constraint at round `i`, i.e. the
/// threshold `R0` must strictly exceed.
fn secrecy_threshold(a: &AuxScheme, i: usize) -> f64 {
    let fi = a.f_upto(i);
    let (x1, x2) = (a.x(1), a.x(2));
    a.i(&fi, &a.sz(), &[]) + a.i(&x1, &x2, &fi) - a.i(&x1, &x2, &[])
}

fn secrecy_slacks(rates: &RatePoint, a: &AuxScheme, tol: f64) -> Vec<Slack> {
    let ixx = a.i(&a.x(1), &a.x(2), &[]);
    (1..=a.r())
        .map(|i| {
            let rhs = secrecy_threshold(a, i) + ixx;
            Slack::new(format!("eqSE1[{i}]"), rates.r0 + ixx, rhs, true, tol)
        })
        .collect()
}

pub fn theorem2_check(rates: &RatePoint, a: &AuxScheme, tol: f64) -> Result<RegionVerdict> {
    rates.validate()?;
    require_valid(a, Mode::Thm2)?;
    let mut s = total_rate_slacks(rates, a, tol);
    s.extend(secrecy_slacks(rates, a, tol));
    Ok(RegionVerdict::from_slacks(Mode::Thm2, s, tol))
}

/// Residual partial-sum condition after eliminating the key variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    #[serde(rename = "a")]
    pub a: usize,
    /// `R0 + Σ_{i≤a}(I(F_i;X_recv|F_<i) − I(F_i;ZS|F_<i))`; equals the
    /// secrecy-constraint slack at round `a`.
    pub value: f64,
    /// Same sum with the sender's source in the first term, as typeset.
    pub as_printed: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkRate {
    /// `max(raw, 0)`.
    pub rate: f64,
    /// `R0 + closed_form`, unclipped.
    pub raw: f64,
    pub round_sum: f64,
    pub closed_form: f64,
    pub residuals: Vec<Residual>,
}

/// `I(F_i; W | F_<i)` for a role set `w`.
fn round_term(a: &AuxScheme, i: usize, w: &[String]) -> f64 {
    a.i(&a.f_range(i, i), w, &a.f_upto(i - 1))
}

/// Largest key rate for a scheme under preshared key `r0`.
pub fn theorem3_max_sk(a: &AuxScheme, r0: f64, tol: f64) -> Result<SkRate> {
    if r0.is_nan() || r0 < 0.0 {
        return Err(RegionError::InvalidRate("R0".into(), r0));
    }
    require_valid(a, Mode::Thm3)?;
    let sz = a.sz();
    let (x1, x2) = (a.x(1), a.x(2));
    let f = a.f_all();
    let closed_form = a.i(&x1, &x2, &[]) - a.i(&x1, &x2, &f) - a.i(&f, &sz, &[]);
    let mut round_sum = 0.0;
    let mut printed = 0.0;
    let mut residuals = Vec::with_capacity(a.r());
    for i in 1..=a.r() {
        let leak = round_term(a, i, &sz);
        round_sum += round_term(a, i, &a.receiver(i)) - leak;
        printed += round_term(a, i, &a.sender(i)) - leak;
        let value = r0 + round_sum;
        residuals.push(Residual {
            a: i,
            value,
            as_printed: r0 + printed,
            holds: value >= tol,
        });
    }
    let raw = r0 + closed_form;
    Ok(SkRate {
        rate: raw.max(0.0),
        raw,
        round_sum,
        closed_form,
        residuals,
    })
}

/// Theorem 2 verdict plus the key-rate constraint and its residual rows.
pub fn theorem3_check(rates: &RatePoint, a: &AuxScheme, tol: f64) -> Result<RegionVerdict> {
    rates.validate()?;
    let sk = theorem3_max_sk(a, rates.r0, tol)?;
    let mut s = total_rate_slacks(rates, a, tol);
    s.extend(secrecy_slacks(rates, a, tol));
    s.push(Slack::new("SK1", sk.raw, rates.rsk, true, tol));
    for res in &sk.residuals {
        s.push(Slack::new(format!("SK1[{}]", res.a), res.value, 0.0, true, tol));
    }
    Ok(RegionVerdict::from_slacks(Mode::Thm3, s, tol))
}

/// Both forms of the secret-key lower bound starting at round `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkBound {
    pub start: usize,
    pub round_sum: f64,
    pub closed_form: f64,
}

/// Chains `F_i − F_<i X_send − Z X_recv`, with the eavesdropper as `Z` only.
fn require_sk_chains(a: &AuxScheme) -> Result<()> {
    for i in 1..=a.r() {
        let fi = a.f_range(i, i);
        if fi.is_empty() {
            continue;
        }
        let given = cat(&[&a.f_upto(i - 1), &a.sender(i)]);
        let w = a.chain(&fi, &given, &cat(&[&a.z(), &a.receiver(i)]));
        if w > a.markov_tol() {
            return Err(RegionError::AuxInvalid {
                label: format!("chain[F{i}]"),
                witness: w,
            });
        }
    }
    Ok(())
}

/// Identity tolerance between the round-sum and closed forms.
const IDENTITY_TOL: f64 = 1e-9;

pub fn sk_lower_bound(a: &AuxScheme, start: usize) -> Result<SkBound> {
    if start == 0 || start > a.r() + 1 {
        return Err(RegionError::InvalidRound(start));
    }
    require_sk_chains(a)?;
    let z = a.z();
    let round_sum: f64 = (start..=a.r())
        .map(|i| round_term(a, i, &a.receiver(i)) - round_term(a, i, &z))
        .sum();
    let (x1, x2) = (a.x(1), a.x(2));
    let head = a.f_upto(start - 1);
    let f = a.f_all();
    let tail: Vec<String> = f.iter().filter(|v| !head.contains(v)).cloned().collect();
    let closed_form = a.i(&x1, &x2, &head) - a.i(&x1, &x2, &f) - a.i(&tail, &z, &head);
    if (round_sum - closed_form).abs() > IDENTITY_TOL {
        return Err(RegionError::IdentityMismatch(round_sum, closed_form));
    }
    Ok(SkBound {
        start,
        round_sum,
        closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ll1Entry {
    #[serde(rename = "a")]
    pub a: usize,
    pub value: f64,
    pub holds: bool,
}

/// Strict positivity of every partial sum of the key lower bound; `holds`
/// uses the slack tolerance `tol`.
pub fn check_ll1(a: &AuxScheme, tol: f64) -> Result<Vec<Ll1Entry>> {
    require_sk_chains(a)?;
    let z = a.z();
    let mut sum = 0.0;
    Ok((1..=a.r())
        .map(|i| {
            sum += round_term(a, i, &a.x(3 - parity(i))) - round_term(a, i, &z);
            Ll1Entry {
                a: i,
                value: sum,
                holds: sum >= tol,
            }
        })
        .collect())
}
