mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secsim::prob::Alphabet;
use secsim::region::*;
use secsim::scenario::fixture;
use secsim::JointPmf;

fn scheme(seed: u64, r: usize) -> AuxScheme {
    random_scheme(SchemeShape::full(r), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn dsbs_scheme() -> AuxScheme {
    fixture("dsbs_key_agreement").unwrap().aux_scheme().unwrap()
}

#[test]
fn rounds_alternate_starting_with_terminal_one() {
    assert_eq!((1..=5).map(parity).collect::<Vec<_>>(), vec![1, 2, 1, 2, 1]);
    let a = scheme(1, 3);
    assert_eq!(a.sender(2), vec!["X2".to_string()]);
    assert_eq!(a.receiver(2), vec!["X1".to_string()]);
}

#[test]
fn sampled_schemes_are_valid() {
    for seed in 0..5 {
        for r in 1..=3 {
            let a = scheme(seed, r);
            for mode in [Mode::Thm1, Mode::Thm2, Mode::Thm3] {
                let v = validate_aux(&a, mode).unwrap();
                assert!(v.member, "seed {seed} r {r} {mode}: {:?}", v.violated());
            }
        }
    }
}

#[test]
fn aux_chain_violation_is_reported() {
    // F1 copies X2 although terminal 1 sends round 1
    let p = copy(&copy(&dsbs(0.1), "X2", "F1"), "X1", "Y1");
    let a = AuxScheme::new(p, 1).unwrap();
    let v = validate_aux(&a, Mode::Thm1).unwrap();
    assert!(!v.member);
    let bad = v.get("chain[F1]").unwrap();
    assert!(!bad.satisfied);
    assert!((bad.rhs - brute_mi(a.joint(), &["F1"], &["X2"], &["X1"])).abs() < 1e-12);
    assert!(matches!(
        theorem1_check(&RatePoint::new(0.0, 5.0, 5.0), &a, 1e-9),
        Err(RegionError::AuxInvalid { .. })
    ));
}

#[test]
fn unknown_roles_and_missing_sources_are_rejected() {
    let p = copy(&dsbs(0.1), "X1", "W");
    assert!(matches!(AuxScheme::new(p, 1), Err(RegionError::UnknownRole(..))));
    let p = copy(&dsbs(0.1), "X1", "F3");
    assert!(AuxScheme::new(p, 2).is_err());
    let p = JointPmf::uniform(bits(&["X1"])).unwrap();
    assert!(matches!(AuxScheme::new(p, 1), Err(RegionError::MissingVariable(_))));
}

#[test]
fn total_rate_constraints_match_direct_evaluation() {
    let a = scheme(7, 2);
    let p = a.joint();
    let f = ["F1", "F2"];
    let y = ["Y1", "Y2"];
    let t1 = brute_mi(p, &["X1"], &f, &["X2"]);
    let t2 = brute_mi(p, &["X2"], &f, &["X1"]);
    let y1 = brute_mi(p, &["F1"], &y, &["X1", "X2"]);
    let yall = brute_mi(p, &f, &y, &["X1", "X2"]);
    let rates = RatePoint::new(0.2, 0.7, 0.4);
    let v = theorem1_check(&rates, &a, 1e-9).unwrap();
    let expect = [
        ("eqT1", 0.7 - t1),
        ("eqT2", 0.4 - t2),
        ("eqT3", 0.9 - t1 - y1),
        ("eqT4", 1.3 - t1 - t2 - yall),
    ];
    for (label, slack) in expect {
        let s = v.get(label).unwrap();
        assert!((s.slack - slack).abs() < 1e-12, "{label}: {} vs {slack}", s.slack);
        assert_eq!(s.satisfied, slack >= -1e-9);
    }
    assert_eq!(v.member, expect.iter().all(|e| e.1 >= -1e-9));
    assert_eq!(v.r0_semantics, R0Semantics::SharedRandomness);
}

#[test]
fn secrecy_constraint_is_strict() {
    let a = scheme(2, 1);
    let p = a.joint();
    // threshold: I(F1;SZ) + I(X1;X2|F1) − I(X1;X2)
    let th = brute_mi(p, &["F1"], &["S", "Z"], &[]) + brute_mi(p, &["X1"], &["X2"], &["F1"])
        - brute_mi(p, &["X1"], &["X2"], &[]);
    let big = RatePoint::new(th.max(0.0) + 0.5, 10.0, 10.0);
    let v = theorem2_check(&big, &a, 1e-9).unwrap();
    assert!(v.get("eqSE1[1]").unwrap().satisfied);
    if th >= 0.0 {
        let tight = RatePoint::new(th, 10.0, 10.0);
        let v = theorem2_check(&tight, &a, 1e-9).unwrap();
        let s = v.get("eqSE1[1]").unwrap();
        assert!(s.strict && !s.satisfied);
        assert!(v.closure_member);
        assert!(!v.member);
    }
}

#[test]
fn key_rate_identity_on_dsbs() {
    let a = dsbs_scheme();
    let sk = theorem3_max_sk(&a, 0.0, 1e-9).unwrap();
    assert!((sk.raw - (1.0 - h2(0.1))).abs() < 1e-12);
    assert!((sk.round_sum - sk.closed_form).abs() < 1e-12);
    let ll1 = check_ll1(&a, 1e-9).unwrap();
    assert_eq!(ll1.len(), 1);
    assert!(ll1[0].holds);
    assert!((ll1[0].value - (1.0 - h2(0.1))).abs() < 1e-12);
    let b = sk_lower_bound(&a, 1).unwrap();
    assert!((b.closed_form - (1.0 - h2(0.1))).abs() < 1e-12);
    assert_eq!(sk_lower_bound(&a, 2).unwrap().closed_form, 0.0);
    assert!(matches!(sk_lower_bound(&a, 0), Err(RegionError::InvalidRound(0))));
    assert!(matches!(sk_lower_bound(&a, 3), Err(RegionError::InvalidRound(3))));
}

#[test]
fn residual_rows_follow_partial_sums() {
    let a = scheme(4, 3);
    let p = a.joint();
    let r0 = 0.3;
    let sk = theorem3_max_sk(&a, r0, 1e-9).unwrap();
    let mut sum = r0;
    for i in 1..=3 {
        let fi = format!("F{i}");
        let prev = fs(i - 1);
        let recv = if i % 2 == 1 { "X2" } else { "X1" };
        sum += brute_mi(p, &[&fi], &[recv], &refs(&prev)) - brute_mi(p, &[&fi], &["S", "Z"], &refs(&prev));
        let res = sk.residuals[i - 1];
        assert_eq!(res.a, i);
        assert!((res.value - sum).abs() < 1e-10);
        assert_eq!(res.holds, sum >= 1e-9);
    }
    let rates = RatePoint::new(r0, 10.0, 10.0).with_rsk(0.0);
    let v = theorem3_check(&rates, &a, 1e-9).unwrap();
    for i in 1..=3 {
        assert!(v.get(&format!("SK1[{i}]")).is_some());
    }
    assert!(v.get("SK1").is_some());
}

#[test]
fn special_cases() {
    // XOR of independent bits
    let p = JointPmf::from_fn(bits(&["X1", "X2", "Y"]), |c| if c[2] == c[0] ^ c[1] { 0.25 } else { 0.0 }).unwrap();
    let rep = special_case(&p, SpecialCase::Tyagi, 0.0, 1e-9).unwrap();
    assert!(!rep.feasible);
    assert!((rep.lhs - 1.0).abs() < 1e-12 && rep.rhs.abs() < 1e-12);
    assert!(!rep.verdict.member);

    // identical bits, Y = X1
    let p = copy(&copy(&JointPmf::uniform(bits(&["X1"])).unwrap(), "X1", "X2"), "X1", "Y");
    let rep = special_case(&p, SpecialCase::Tyagi, 0.5, 1e-9).unwrap();
    assert!(rep.feasible);
    assert!((rep.rhs - rep.lhs - 0.5).abs() < 1e-12);
    assert!(rep.verdict.member);
    let rep0 = special_case(&p, SpecialCase::Tyagi, 0.0, 1e-9).unwrap();
    assert!(!rep0.feasible, "equality is on the boundary of a strict inequality");

    // Y not a function of the sources
    let noisy = bsc(&dsbs(0.1), "X1", "Y", 0.2);
    assert!(matches!(
        special_case(&noisy, SpecialCase::Tyagi, 0.0, 1e-9),
        Err(RegionError::Structural(_))
    ));

    // one-terminal: I(X2;Y1) with Y1 = X1 AND X2
    let p = dsbs(0.1);
    let p = p
        .compose(
            &secsim::Channel::new(bits(&["X1", "X2"]), bits(&["Y1"]), vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap(),
            1 << 10,
        )
        .unwrap();
    let rep = special_case(&p, SpecialCase::OneTerminal, 0.0, 1e-9).unwrap();
    assert!((rep.lhs - brute_mi(&p, &["X2"], &["Y1"], &[])).abs() < 1e-12);
    assert!((rep.rhs - (1.0 - h2(0.1))).abs() < 1e-12);
    assert_eq!(rep.feasible, rep.lhs < rep.rhs);
}

#[test]
fn wiretap_bsc() {
    let p = bsc(&bsc(&JointPmf::uniform(bits(&["X"])).unwrap(), "X", "Y", 0.1), "X", "Z", 0.3);
    let w = wiretap_rate(&p, 1e-9).unwrap();
    assert!((w.rate - (h2(0.3) - h2(0.1))).abs() < 1e-12);
    assert!((w.rate - 0.4123).abs() < 1e-3);
    assert_eq!(w.chain_witness, 0.0);
    // a U that looks at Y breaks U − X − YZ
    let q = copy(&p, "Y", "U");
    assert!(matches!(wiretap_rate(&q, 1e-9), Err(RegionError::AuxInvalid { .. })));
}

#[test]
fn raw_system_shapes() {
    let a = AuxScheme::new(copy(&dsbs(0.1), "X1", "F1"), 1).unwrap();
    let s = raw_constraints(&a, Mode::Thm1, None, None).unwrap();
    assert_eq!(s.vars(), &["R0", "R1", "Rt1"].map(String::from));
    assert_eq!(s.rows().len(), 4);
    let labels: Vec<&str> = s.rows().iter().map(|r| r.label.as_str()).collect();
    for l in ["rel[1]", "ind[1]", "indS[1]", "nn[Rt1]"] {
        assert!(labels.contains(&l), "{l} missing from {labels:?}");
    }
    let a3 = dsbs_scheme();
    let s3 = raw_constraints(&a3, Mode::Thm3, None, None).unwrap();
    assert!(s3.vars().contains(&"RSK".to_string()));
    assert!(s3.rows().iter().any(|r| r.label == "sk"));
    assert!(s3.rows().iter().any(|r| r.label == "sec[1]"));
    let fixed = raw_constraints(&a3, Mode::Thm3, Some(0.0), Some(0.1)).unwrap();
    assert!(!fixed.vars().contains(&"R0".to_string()));
    assert!(!fixed.vars().contains(&"RSK".to_string()));
}

#[test]
fn derived_internal_rates_satisfy_the_raw_system() {
    let sc = fixture("dsbs_key_agreement").unwrap();
    let a = sc.aux_scheme().unwrap();
    let ir = derive_internal_rates(&a, Mode::Thm3, &sc.rates).unwrap().unwrap();
    let mut sys = aggregated_system(&a, Mode::Thm3, Aggregation::FreeDisposal).unwrap();
    for (v, x) in [
        ("R0", sc.rates.r0),
        ("R12", sc.rates.r12),
        ("R21", sc.rates.r21),
        ("RSK", sc.rates.rsk),
        ("R0u", ir.r0_used.unwrap()),
        ("R1", ir.message[0]),
        ("Rt1", ir.shared[0]),
    ] {
        sys = sys.substitute(v, x).unwrap();
    }
    // H(F1|X1) = 0 leaves the strict independence rows tight: the point
    // lies in the closure of the region
    for row in sys.contradictions() {
        assert!(row.op == secsim::fm::Op::Gt && row.constant.abs() < 1e-9, "{row:?}");
    }
    let closure = secsim::LinearSystem::new(sys.vars().to_vec()).map(|mut c| {
        for row in sys.rows() {
            let mut r = row.clone();
            r.op = secsim::fm::Op::Ge;
            c.push(r).unwrap();
        }
        c
    });
    assert!(closure.unwrap().is_feasible().unwrap());
    // strictly between the Slepian-Wolf rate and the message budget
    assert!(ir.message[0] > h2(0.1) && ir.message[0] <= sc.rates.r12 + 1e-9);
}

#[test]
fn derived_rates_outside_the_region_violate_reliability() {
    // outside points still get a split so they can be simulated
    let a = dsbs_scheme();
    let rates = RatePoint::new(0.0, 0.1, 0.0).with_rsk(0.0);
    let ir = derive_internal_rates(&a, Mode::Thm3, &rates).unwrap().unwrap();
    assert!((ir.message[0] - 0.1).abs() < 1e-9);
    let sys = raw_constraints(&a, Mode::Thm3, Some(0.0), Some(0.0)).unwrap();
    let point: Vec<f64> = sys
        .vars()
        .iter()
        .map(|v| if v == "R1" { ir.message[0] } else { ir.shared[0] })
        .collect();
    let rel = sys.rows().iter().find(|r| r.label == "rel[1]").unwrap();
    assert!(!rel.satisfied(&point, 1e-9));
}

#[test]
fn verdict_json_round_trip() {
    let a = scheme(9, 2);
    let v = theorem3_check(&RatePoint::new(0.1, 2.0, 2.0).with_rsk(0.05), &a, 1e-9).unwrap();
    let back: RegionVerdict = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, back);
    let inf = RatePoint::new(0.0, f64::INFINITY, 1.0);
    let s = serde_json::to_string(&inf).unwrap();
    assert!(s.contains("\"inf\""));
    assert_eq!(serde_json::from_str::<RatePoint>(&s).unwrap(), inf);
}

#[test]
fn negative_rates_are_rejected() {
    let a = scheme(3, 1);
    assert!(matches!(
        theorem1_check(&RatePoint::new(-0.1, 1.0, 1.0), &a, 1e-9),
        Err(RegionError::InvalidRate(..))
    ));
    assert!(theorem3_max_sk(&a, f64::NAN, 1e-9).is_err());
}

#[test]
fn alphabet_sizes_beyond_binary_are_supported() {
    let p = JointPmf::uniform(vec![Alphabet::range("X1", 3).unwrap()]).unwrap();
    let p = copy(&copy(&p, "X1", "X2"), "X1", "F1");
    let a = AuxScheme::new(p, 1).unwrap();
    let sk = theorem3_max_sk(&AuxScheme::new(constant(&constant(a.joint(), "Z"), "S"), 1).unwrap(), 0.0, 1e-9).unwrap();
    assert!((sk.raw - 3f64.log2()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn membership_is_monotone_in_rates(seed in any::<u64>(), r in 1usize..=3,
        r0 in 0.0f64..2.0, r12 in 0.0f64..3.0, r21 in 0.0f64..3.0, d in 0.0f64..1.0) {
        let a = scheme(seed, r);
        let lo = RatePoint::new(r0, r12, r21);
        let hi = RatePoint::new(r0 + d, r12 + d, r21 + d);
        for check in [theorem1_check, theorem2_check] {
            if check(&lo, &a, 1e-9).unwrap().member {
                prop_assert!(check(&hi, &a, 1e-9).unwrap().member);
            }
        }
        let k_lo = RatePoint::new(r0, r12, r21).with_rsk(0.0);
        let k_hi = RatePoint::new(r0 + d, r12 + d, r21 + d).with_rsk(0.0);
        if theorem3_check(&k_lo, &a, 1e-9).unwrap().member {
            prop_assert!(theorem3_check(&k_hi, &a, 1e-9).unwrap().member);
        }
    }

    #[test]
    fn key_rate_forms_agree(seed in any::<u64>(), r in 1usize..=3) {
        let a = scheme(seed, r);
        let sk = theorem3_max_sk(&a, 0.0, 1e-9).unwrap();
        prop_assert!((sk.round_sum - sk.closed_form).abs() < 1e-9);
        for start in 1..=r {
            let b = sk_lower_bound(&a, start).unwrap();
            prop_assert!((b.round_sum - b.closed_form).abs() < 1e-9);
        }
    }
}
