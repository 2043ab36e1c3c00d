use secsim::region::Aggregation;
use secsim::scenario::*;

#[test]
fn every_fixture_parses_and_round_trips() {
    for (name, text) in fixtures() {
        let sc = Scenario::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(sc.name, name);
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        assert_eq!(sc, back, "{name}");
    }
    assert!(fixture("no_such_fixture").is_none());
}

#[test]
fn every_fixture_meets_its_expectation() {
    for (name, _) in fixtures() {
        let sc = fixture(name).unwrap();
        let out = sc.region(None).unwrap();
        let exp = sc.expect.clone().unwrap();
        if let Some(m) = exp.member {
            assert_eq!(out.member(), m, "{name}");
        }
        if let Some(v) = exp.value {
            let got = out.value().unwrap();
            assert!((got - v).abs() <= exp.value_tol.unwrap_or(1e-9), "{name}: {got} vs {v}");
        }
    }
}

#[test]
fn outcomes_round_trip_through_json() {
    for (name, _) in fixtures() {
        let out = fixture(name).unwrap().region(None).unwrap();
        let json = serde_json::to_string(&out).unwrap();
        let back: RegionOutcome = serde_json::from_str(&json).unwrap();
        assert_eq!(out, back, "{name}");
    }
}

#[test]
fn fm_outcome_certifies_the_dsbs_scheme() {
    let sc = fixture("dsbs_key_agreement").unwrap();
    let out = sc.fm(None, Aggregation::FreeDisposal, 10_000, None).unwrap();
    assert!(out.equivalence.as_ref().unwrap().equivalent);
    assert_eq!(out.keep, vec!["R0", "R12", "R21", "RSK"]);
    let keep = vec!["R0".to_string(), "R1".to_string()];
    let partial = sc.fm(Some(&keep), Aggregation::FreeDisposal, 10_000, None).unwrap();
    assert!(partial.equivalence.is_none());
    assert_eq!(partial.projected.vars, keep);
    let bad = vec!["nope".to_string()];
    assert!(sc.fm(Some(&bad), Aggregation::FreeDisposal, 10_000, None).is_err());
}

#[test]
fn wiretap_has_no_binning_system() {
    let sc = fixture("wiretap_bsc").unwrap();
    assert!(sc.fm(None, Aggregation::FreeDisposal, 100, None).is_err());
    assert!(sc.protocol_rates().is_err());
}

fn edit(name: &str, f: impl FnOnce(&mut serde_json::Value)) -> String {
    let (_, text) = fixtures().into_iter().find(|(n, _)| *n == name).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    f(&mut v);
    v.to_string()
}

#[test]
fn malformed_scenarios_are_rejected() {
    let e = Scenario::from_json("{\"mode\": ").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 1, .. }));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["bogus"] = 1.into())).unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { .. }));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["mode"] = "thm9".into())).unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { .. }));
    let e = Scenario::from_json(&edit("tyagi2", |v| v.as_object_mut().unwrap().remove("case").map(drop).unwrap())).unwrap_err();
    assert!(matches!(e, ScenarioError::Field { ref field, .. } if field == "case"));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["rates"]["R12"] = (-1.0).into())).unwrap_err();
    assert!(matches!(e, ScenarioError::Field { ref field, .. } if field == "rates"));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["internal"]["R"] = serde_json::json!([0.5, 0.5]))).unwrap_err();
    assert!(matches!(e, ScenarioError::Field { ref field, .. } if field == "internal"));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["sim"]["n"] = serde_json::json!([0]))).unwrap_err();
    assert!(matches!(e, ScenarioError::Field { ref field, .. } if field == "sim.n"));
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["joint"]["table"][0] = 0.9.into())).unwrap_err();
    assert!(matches!(e, ScenarioError::Field { ref field, .. } if field == "joint"));
    let e = Scenario::from_path(std::path::Path::new("/nonexistent/scenario.json")).unwrap_err();
    assert!(matches!(e, ScenarioError::Io(_)));
}

#[test]
fn budget_errors_are_classified() {
    let sc = fixture("dsbs_key_agreement").unwrap();
    let e = sc.fm(None, Aggregation::FreeDisposal, 1, None).unwrap_err();
    assert!(e.is_budget(), "{e}");
    let e = Scenario::from_json(&edit("dsbs_key_agreement", |v| v["rates"]["R12"] = (-1.0).into())).unwrap_err();
    assert!(!e.is_budget());
}

#[test]
fn tolerance_override_changes_boundary_verdicts() {
    // X1 = X2 with R0 = 0 sits exactly on H(Y) = I(X1;X2)
    let text = edit("tyagi_function", |v| v["rates"]["R0"] = 0.0.into());
    let sc = Scenario::from_json(&text).unwrap();
    assert!(!sc.region(None).unwrap().member());
    assert!(sc.region(Some(0.0)).unwrap().member());
}
