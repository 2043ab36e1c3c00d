//! Binning constraint systems and their projection onto total rates.

use serde::{Deserialize, Serialize};

use super::{AuxScheme, InternalRates, Mode, RatePoint, Result};
use crate::fm::{Equivalence, FmError, Op};
use crate::LinearSystem;

fn var_names(a: &AuxScheme, mode: Mode, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    v.extend((1..=a.r()).map(|i| format!("R{i}")));
    v.extend((1..=a.r()).map(|i| format!("Rt{i}")));
    if mode == Mode::Thm3 && !extra.contains(&"RSK") {
        v.push("RSK".into());
    }
    v
}

/// Emit the reliability, independence and secrecy conditions into `sys`,
/// using `r0` and `rsk` as the names of the key-rate variables.
fn emit_raw(sys: &mut LinearSystem, a: &AuxScheme, mode: Mode, r0: &str, rsk: &str) -> Result<()> {
    let r = a.r();
    let xy = super::cat(&[&a.x_both(), &a.y()]);
    let sz = a.sz();
    let rn = |i: usize| format!("R{i}");
    let tn = |i: usize| format!("Rt{i}");
    let f1 = a.f_range(1, 1);
    if r >= 1 {
        sys.add_int("rel[1]", &[(&rn(1), 1), (r0, 1), (&tn(1), 1)], Op::Ge, a.h(&f1, &a.x(2)))?;
    }
    for i in 2..=r {
        let given = super::cat(&[&a.receiver(i), &a.f_upto(i - 1)]);
        let h = a.h(&a.f_range(i, i), &given);
        sys.add_int(format!("rel[{i}]"), &[(&rn(i), 1), (&tn(i), 1)], Op::Ge, h)?;
    }
    if r >= 1 {
        sys.add_int("ind[1]", &[(r0, -1), (&tn(1), -1)], Op::Gt, -a.h(&f1, &a.x(1)))?;
    }
    for i in 2..=r {
        let given = super::cat(&[&a.sender(i), &a.f_upto(i - 1)]);
        let h = a.h(&a.f_range(i, i), &given);
        sys.add_int(format!("indB[{i}]"), &[(&tn(i), -1)], Op::Gt, -h)?;
    }
    for i in 1..=r {
        let names: Vec<String> = (1..=i).map(tn).collect();
        let terms: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), -1)).collect();
        sys.add_int(format!("indS[{i}]"), &terms, Op::Gt, -a.h(&a.f_upto(i), &xy))?;
    }
    for i in 1..=r {
        sys.add_int(format!("nn[{}]", tn(i)), &[(&tn(i), 1)], Op::Ge, 0.0)?;
    }
    if mode != Mode::Thm1 {
        for i in 1..=r {
            let names: Vec<String> = (1..=i).flat_map(|t| [rn(t), tn(t)]).collect();
            let terms: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), -1)).collect();
            sys.add_int(format!("sec[{i}]"), &terms, Op::Gt, -a.h(&a.f_upto(i), &sz))?;
        }
    }
    if mode == Mode::Thm3 {
        let mut names: Vec<String> = (1..=r).flat_map(|t| [rn(t), tn(t)]).collect();
        names.push(rsk.to_string());
        let terms: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), -1)).collect();
        sys.add_int("sk", &terms, Op::Gt, -a.h(&a.f_all(), &sz))?;
    }
    Ok(())
}

/// The per-round binning conditions over `R0, R_i, R̃_i` (and `RSK` in
/// thm3 mode). `r0`/`rsk` given as `Some` are substituted as constants.
pub fn raw_constraints(
    a: &AuxScheme,
    mode: Mode,
    r0: Option<f64>,
    rsk: Option<f64>,
) -> Result<LinearSystem> {
    let mut sys = LinearSystem::new(var_names(a, mode, &["R0"]))?;
    emit_raw(&mut sys, a, mode, "R0", "RSK")?;
    if let Some(v) = r0 {
        sys = sys.substitute("R0", v)?;
    }
    if let (Mode::Thm3, Some(v)) = (mode, rsk) {
        sys = sys.substitute("RSK", v)?;
    }
    Ok(sys)
}

/// How per-round rates are tied to the total rates before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `R12 = Σ_odd R_i`, `R21 = Σ_even R_i`, with `R0` and `RSK` used as is.
    Equality,
    /// Totals are upper bounds on what the protocol spends: `R12 ≥ Σ_odd R_i`,
    /// `R21 ≥ Σ_even R_i`, the binning uses `R0u ≤ R0` key bits and the
    /// unused key bits may extend the secret key.
    FreeDisposal,
}

/// Variables kept by the projection in each mode.
pub fn keep_vars(mode: Mode) -> Vec<&'static str> {
    match mode {
        Mode::Thm3 => vec!["R0", "R12", "R21", "RSK"],
        _ => vec!["R0", "R12", "R21"],
    }
}

/// Raw conditions plus the rows defining the total rates.
pub fn aggregated_system(a: &AuxScheme, mode: Mode, agg: Aggregation) -> Result<LinearSystem> {
    let dispose = agg == Aggregation::FreeDisposal;
    let mut head: Vec<&str> = keep_vars(mode);
    if dispose {
        head.push("R0u");
        if mode == Mode::Thm3 {
            head.push("RSKb");
        }
    }
    let mut sys = LinearSystem::new(var_names(a, mode, &head))?;
    let (r0, rsk) = if dispose { ("R0u", "RSKb") } else { ("R0", "RSK") };
    emit_raw(&mut sys, a, mode, r0, rsk)?;
    let odd: Vec<String> = (1..=a.r()).step_by(2).map(|i| format!("R{i}")).collect();
    let even: Vec<String> = (2..=a.r()).step_by(2).map(|i| format!("R{i}")).collect();
    for (total, parts) in [("R12", &odd), ("R21", &even)] {
        let mut terms: Vec<(&str, i64)> = vec![(total, 1)];
        terms.extend(parts.iter().map(|p| (p.as_str(), -1)));
        let tag = &total[1..];
        sys.add_int(format!("agg[{tag}]"), &terms, Op::Ge, 0.0)?;
        if !dispose {
            let neg: Vec<(&str, i64)> = terms.iter().map(|&(n, c)| (n, -c)).collect();
            sys.add_int(format!("agg[{tag}]'"), &neg, Op::Ge, 0.0)?;
        }
    }
    for i in 1..=a.r() {
        let n = format!("R{i}");
        sys.add_int(format!("nn[{n}]"), &[(&n, 1)], Op::Ge, 0.0)?;
    }
    for v in keep_vars(mode) {
        sys.add_int(format!("nn[{v}]"), &[(v, 1)], Op::Ge, 0.0)?;
    }
    if dispose {
        sys.add_int("disp[R0]", &[("R0", 1), ("R0u", -1)], Op::Ge, 0.0)?;
        sys.add_int("nn[R0u]", &[("R0u", 1)], Op::Ge, 0.0)?;
        if mode == Mode::Thm3 {
            sys.add_int("nn[RSKb]", &[("RSKb", 1)], Op::Ge, 0.0)?;
            sys.add_int(
                "disp[RSK]",
                &[("RSKb", 1), ("R0", 1), ("R0u", -1), ("RSK", -1)],
                Op::Ge,
                0.0,
            )?;
        }
    }
    Ok(sys)
}

/// The stated region as a system over the total rates.
pub fn theorem_system(a: &AuxScheme, mode: Mode) -> Result<LinearSystem> {
    let keep: Vec<String> = keep_vars(mode).iter().map(|s| s.to_string()).collect();
    let mut sys = LinearSystem::new(keep)?;
    let (x1, x2, xb) = (a.x(1), a.x(2), a.x_both());
    let f = a.f_all();
    let y = a.y();
    let t1 = a.i(&x1, &f, &x2);
    let t2 = a.i(&x2, &f, &x1);
    sys.add_int("eqT1", &[("R12", 1)], Op::Ge, t1)?;
    sys.add_int("eqT2", &[("R21", 1)], Op::Ge, t2)?;
    sys.add_int("eqT3", &[("R0", 1), ("R12", 1)], Op::Ge, t1 + a.i(&a.f_upto(1), &y, &xb))?;
    sys.add_int(
        "eqT4",
        &[("R0", 1), ("R12", 1), ("R21", 1)],
        Op::Ge,
        t1 + t2 + a.i(&f, &y, &xb),
    )?;
    for v in keep_vars(mode) {
        sys.add_int(format!("nn[{v}]"), &[(v, 1)], Op::Ge, 0.0)?;
    }
    if mode != Mode::Thm1 {
        let sz = a.sz();
        let ixx = a.i(&x1, &x2, &[]);
        for i in 1..=a.r() {
            let fi = a.f_upto(i);
            let th = a.i(&fi, &sz, &[]) + a.i(&x1, &x2, &fi) - ixx;
            sys.add_int(format!("eqSE1[{i}]"), &[("R0", 1)], Op::Gt, th)?;
        }
    }
    if mode == Mode::Thm3 {
        let cf = a.i(&x1, &x2, &[]) - a.i(&x1, &x2, &f) - a.i(&f, &a.sz(), &[]);
        sys.add_int("SK1", &[("R0", 1), ("RSK", -1)], Op::Gt, -cf)?;
    }
    Ok(sys)
}

/// Projection of the aggregated raw system next to the stated region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub mode: Mode,
    pub aggregation: Aggregation,
    #[serde(skip)]
    pub raw: LinearSystem,
    #[serde(skip)]
    pub projected: LinearSystem,
    #[serde(skip)]
    pub theorem: LinearSystem,
    pub equivalence: Equivalence,
}

pub fn certify_projection(
    a: &AuxScheme,
    mode: Mode,
    agg: Aggregation,
    cap: usize,
    tol: f64,
) -> Result<Certification> {
    let raw = aggregated_system(a, mode, agg)?;
    let projected = raw.project_with(&keep_vars(mode), cap, tol)?;
    let theorem = theorem_system(a, mode)?;
    let equivalence = projected.equivalent(&theorem, tol)?;
    Ok(Certification {
        mode,
        aggregation: agg,
        raw,
        projected,
        theorem,
        equivalence,
    })
}

/// Largest slack credited to any one soft row when balancing margins.
const BALANCE_CAP: f64 = 1.0;

/// Per-round rates realizing a total-rate point: a point of the
/// free-disposal system with the totals fixed that keeps every binning
/// condition as far from its boundary as possible (up to one bit each).
/// `None` when the totals leave no room for the bookkeeping rows.
pub fn derive_internal_rates(
    a: &AuxScheme,
    mode: Mode,
    rates: &RatePoint,
) -> Result<Option<InternalRates>> {
    rates.validate()?;
    let mut sys = aggregated_system(a, mode, Aggregation::FreeDisposal)?;
    sys = sys.substitute("R0", rates.r0)?;
    sys = sys.substitute("R12", rates.r12)?;
    sys = sys.substitute("R21", rates.r21)?;
    if mode == Mode::Thm3 {
        sys = sys.substitute("RSK", rates.rsk)?;
    }
    let hard = |label: &str| {
        label.starts_with("nn[") || label.starts_with("agg[") || label.starts_with("disp[")
    };
    if sys.contradictions().iter().any(|r| hard(&r.label)) {
        return Ok(None);
    }
    // a violated soft constant row says nothing about the internal rates
    let soft: Vec<bool> = sys.rows().iter().map(|r| !hard(&r.label)).collect();
    let Some(point) = sys.balanced_point(&soft, BALANCE_CAP)? else {
        return Ok(None);
    };
    let value = |name: &str| -> std::result::Result<f64, FmError> {
        Ok(point[sys.var_index(name)?].max(0.0))
    };
    let r = a.r();
    let message = (1..=r).map(|i| value(&format!("R{i}"))).collect::<std::result::Result<_, _>>()?;
    let shared = (1..=r).map(|i| value(&format!("Rt{i}"))).collect::<std::result::Result<_, _>>()?;
    let mut out = InternalRates::new(message, shared);
    out.r0_used = Some(value("R0u")?);
    Ok(Some(out))
}
