mod common;

use common::*;
use secsim::protocol::seq::{bin_count, digits};
use secsim::protocol::*;
use secsim::region::{AuxScheme, InternalRates};
use secsim::scenario::{fixture, Scenario};

fn instance(name: &str, n: usize, seed: u64) -> ProtocolInstance {
    let sc = fixture(name).unwrap();
    build(&sc.aux_scheme().unwrap(), n, &sc.protocol_rates().unwrap(), seed).unwrap()
}

fn sim_fixtures() -> Vec<Scenario> {
    ["dsbs_key_agreement", "dsbs_outside", "thm3_residual_key", "bsc_simulation"]
        .iter()
        .map(|n| fixture(n).unwrap())
        .collect()
}

fn zero_rates(r: usize) -> ProtocolRates {
    ProtocolRates::new(InternalRates::new(vec![0.0; r], vec![0.0; r]), 0.0, 0.0)
}

#[test]
fn bin_counts() {
    assert_eq!(bin_count(3, 0.0), 1);
    assert_eq!(bin_count(1, 1.0), 2);
    assert_eq!(bin_count(4, 0.5), 4);
    assert_eq!(bin_count(2, 0.3), 2); // ⌈2^0.6⌉
    assert_eq!(bin_count(5, 0.9), 23); // ⌈2^4.5⌉ = ⌈22.63⌉
    assert_eq!(bin_count(100, 1.0), 1 << 62);
}

#[test]
fn induced_distributions_are_normalized() {
    for sc in sim_fixtures() {
        let a = sc.aux_scheme().unwrap();
        let rates = sc.protocol_rates().unwrap();
        for &n in sc.sim_options().n.iter().take(3) {
            let inst = build(&a, n, &rates, 1).unwrap();
            let ind = run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap();
            assert!((ind.total_mass() - 1.0).abs() < 1e-12, "{} n={n}", sc.name);
            assert!(ind.atoms.iter().all(|a| a.1 >= 0.0));
        }
    }
}

#[test]
fn exact_runs_are_deterministic_and_seed_dependent() {
    let a = run_exact(&instance("dsbs_outside", 3, 5), DEFAULT_ATOM_BUDGET).unwrap();
    let b = run_exact(&instance("dsbs_outside", 3, 5), DEFAULT_ATOM_BUDGET).unwrap();
    assert_eq!(a, b);
    let ra = measure(&instance("dsbs_outside", 3, 5), &a).unwrap();
    let c = run_exact(&instance("dsbs_outside", 3, 6), DEFAULT_ATOM_BUDGET).unwrap();
    let rc = measure(&instance("dsbs_outside", 3, 6), &c).unwrap();
    assert_ne!(ra.sw_error, rc.sw_error);
}

#[test]
fn without_messages_the_receiver_guesses_its_own_source() {
    // R1 = 0: the MAP estimate of X1ⁿ from X2ⁿ alone is X2ⁿ itself
    let sc = fixture("dsbs_key_agreement").unwrap();
    let a = sc.aux_scheme().unwrap();
    for n in 1..=4 {
        let inst = build(&a, n, &zero_rates(1), 0).unwrap();
        let rep = measure(&inst, &run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap()).unwrap();
        let expect = 1.0 - 0.9f64.powi(n as i32);
        assert!((rep.sw_error[0] - expect).abs() < 1e-12, "n={n}: {}", rep.sw_error[0]);
        assert!((rep.key_agree_error).abs() < 1e-15, "one key bin always agrees");
        assert_eq!(inst.bins().message, vec![1]);
    }
}

#[test]
fn source_marginal_is_iid_whatever_the_bins() {
    // sources are never touched by the protocol
    let inst = instance("bsc_simulation", 3, 9);
    let ind = run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap();
    let src = fixture("bsc_simulation").unwrap().joint().unwrap().marginalize(&["X1", "X2"]).unwrap();
    let mut m = std::collections::BTreeMap::new();
    for (a, p) in &ind.atoms {
        *m.entry((a.x1, a.x2)).or_insert(0.0) += p;
    }
    assert_eq!(m.len(), 64);
    for ((x1, x2), q) in m {
        let (d1, d2) = (digits(x1, 2, 3), digits(x2, 2, 3));
        let p: f64 = (0..3).map(|t| src.prob(&[d1[t], d2[t]])).product();
        assert!((q - p).abs() < 1e-14);
    }
}

#[test]
fn no_rounds_means_exact_simulation() {
    // Y1 drawn from its own conditional: no error at any blocklength
    let p = bsc(&dsbs(0.2), "X1", "Y1", 0.1);
    let a = AuxScheme::new(p, 0).unwrap();
    for n in 1..=3 {
        let inst = build(&a, n, &zero_rates(0), 0).unwrap();
        let ind = run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap();
        let rep = measure(&inst, &ind).unwrap();
        assert!(rep.tv_error < 1e-14, "n={n}: {}", rep.tv_error);
        assert!(rep.sw_error.is_empty());
        assert!(bin_conditioning_gap(&inst, &ind) < 1e-14);
    }
}

#[test]
fn key_disagreement_needs_a_decoding_error() {
    for sc in sim_fixtures() {
        let a = sc.aux_scheme().unwrap();
        let rates = sc.protocol_rates().unwrap();
        for n in [2, 3] {
            let inst = build(&a, n, &rates, 4).unwrap();
            let rep = measure(&inst, &run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap()).unwrap();
            let sw: f64 = rep.sw_error.iter().sum();
            assert!(rep.key_agree_error <= sw + 1e-12, "{}: {} > {sw}", sc.name, rep.key_agree_error);
            assert!(rep.epsilon <= rep.tv_error + 1e-12, "marginal TV cannot exceed joint TV");
            assert!((0.0..=1.0).contains(&rep.key_uniformity));
            if let (Some(b), Some(w)) = (rep.tv_best_b, rep.tv_worst_b) {
                assert!(b <= w);
            }
        }
    }
}

#[test]
fn bin_conditioning_invariant_on_fixtures() {
    for sc in sim_fixtures() {
        let a = sc.aux_scheme().unwrap();
        let rates = sc.protocol_rates().unwrap();
        for &n in &sc.sim_options().n {
            let inst = build(&a, n, &rates, 2).unwrap();
            let ind = run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap();
            let gap = bin_conditioning_gap(&inst, &ind);
            assert!(gap <= 1e-10, "{} n={n}: {gap:e}", sc.name);
        }
    }
}

#[test]
fn budget_is_enforced() {
    let inst = instance("dsbs_key_agreement", 6, 0);
    assert!(matches!(run_exact(&inst, 100), Err(ProtocolError::BudgetExceeded { .. })));
    let sc = fixture("bsc_simulation").unwrap();
    let a = sc.aux_scheme().unwrap();
    assert!(matches!(
        build(&a, 0, &sc.protocol_rates().unwrap(), 0),
        Err(ProtocolError::InvalidBlocklength)
    ));
    assert!(matches!(build(&a, 2, &zero_rates(2), 0), Err(ProtocolError::Rates(_))));
    assert!(matches!(build(&a, 70, &zero_rates(1), 0), Err(ProtocolError::SequenceOverflow(_))));
}

#[test]
fn monte_carlo_is_deterministic_per_stream() {
    let inst = instance("bsc_simulation", 3, 3);
    let a = run_monte_carlo(&inst, 20_000, 0).unwrap();
    let b = run_monte_carlo(&inst, 20_000, 0).unwrap();
    assert_eq!(a, b);
    let c = run_monte_carlo(&inst, 20_000, 1).unwrap();
    assert_ne!(a.sw_error, c.sw_error);
    assert_eq!(a.mode, Backend::Mc);
    assert_eq!(a.trials, Some(20_000));
    assert!(a.tv_error_se.is_some());
    assert!((a.total_mass - 1.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_handles_tiny_trial_counts() {
    let inst = instance("bsc_simulation", 2, 3);
    let one = run_monte_carlo(&inst, 1, 0).unwrap();
    assert_eq!(one.trials, Some(1));
    // a single trial leaves one half of the split estimator empty
    assert_eq!(one.tv_error_se, None);
    let zero = run_monte_carlo(&inst, 0, 0).unwrap();
    assert_eq!(zero.trials, Some(1));
}

#[test]
fn monte_carlo_tracks_exact_on_a_small_instance() {
    let inst = instance("thm3_residual_key", 2, 11);
    let ex = measure(&inst, &run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap()).unwrap();
    let mc = run_monte_carlo(&inst, 200_000, 0).unwrap();
    let se = mc.sw_error_se.as_ref().unwrap();
    for i in 0..ex.sw_error.len() {
        assert!((ex.sw_error[i] - mc.sw_error[i]).abs() <= 4.0 * se[i] + 1e-12);
    }
    let tse = mc.tv_error_se.unwrap();
    assert!((ex.tv_error - mc.tv_error).abs() <= 4.0 * tse + 1e-3);
}

#[test]
fn sweep_rows_and_csv() {
    let sc = fixture("bsc_simulation").unwrap();
    let a = sc.aux_scheme().unwrap();
    let rates = sc.protocol_rates().unwrap();
    let backend = SweepBackend::Exact { budget: DEFAULT_ATOM_BUDGET, mc_fallback: None };
    let rows = sweep(&a, &rates, &[3, 1, 2, 1], &[8, 7], backend).unwrap();
    let keys: Vec<(usize, u64)> = rows.iter().map(|r| (r.n, r.seed)).collect();
    assert_eq!(keys, vec![(1, 7), (1, 8), (2, 7), (2, 8), (3, 7), (3, 8)]);
    let csv = to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), csv_header(1));
    assert_eq!(
        csv_header(2),
        "n,seed,mode,tv_error,leakage,sw_error_1,sw_error_2,key_leak,key_uniformity,key_agree_error,fallback_count"
    );
    assert_eq!(lines.count(), 6);
    assert_eq!(csv, to_csv(&sweep(&a, &rates, &[1, 2, 3], &[7, 8], backend).unwrap()));

    let small = SweepBackend::Exact { budget: 10, mc_fallback: Some(1000) };
    let rows = sweep(&a, &rates, &[2], &[7], small).unwrap();
    assert_eq!(rows[0].mode, Backend::Mc);
    let strict = SweepBackend::Exact { budget: 10, mc_fallback: None };
    assert!(sweep(&a, &rates, &[2], &[7], strict).is_err());
}

#[test]
fn report_json_round_trip() {
    let inst = instance("thm3_residual_key", 1, 0);
    let rep = measure(&inst, &run_exact(&inst, DEFAULT_ATOM_BUDGET).unwrap()).unwrap();
    let back: SimulationReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(rep, back);
}
