mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secsim::prob::{Alphabet, Channel, ProbError};
use secsim::{JointPmf, JointPmf32};

#[test]
fn marginal_of_dsbs_is_uniform() {
    let m = dsbs(0.1).marginalize(&["X2"]).unwrap();
    // 0.5·0.9 + 0.5·0.1
    assert!((m.table()[0] - 0.5).abs() < 1e-15);
    assert!((m.table()[1] - 0.5).abs() < 1e-15);
    let all = dsbs(0.1).marginalize(&["X1", "X2"]).unwrap();
    assert_eq!(all, dsbs(0.1));
}

#[test]
fn cascade_of_crossovers() {
    let p = bsc(&dsbs(0.1), "X2", "W", 0.1);
    let m = p.marginalize(&["X1", "W"]).unwrap();
    // 0.9·0.1 + 0.1·0.9
    let flip = m.prob(&[0, 1]) + m.prob(&[1, 0]);
    assert!((flip - 0.18).abs() < 1e-15);
}

#[test]
fn compose_identity_and_constant() {
    let p = copy(&dsbs(0.2), "X1", "S");
    assert!(p.entropy(&["S"], &["X1"]).unwrap().abs() < 1e-15);
    let row = [0.25, 0.75];
    let ch = Channel::constant(vec![], Alphabet::binary("C"), &row).unwrap();
    let q = dsbs(0.2).compose(&ch, 1 << 10).unwrap();
    assert!(q.mutual_info(&["C"], &["X1", "X2"], &[]).unwrap().abs() < 1e-15);
    let c = q.marginalize(&["C"]).unwrap();
    assert!((c.table()[1] - 0.75).abs() < 1e-15);
}

#[test]
fn entropy_examples() {
    let u = JointPmf::uniform(vec![Alphabet::range("A", 4).unwrap()]).unwrap();
    assert!((u.entropy(&["A"], &[]).unwrap() - 2.0).abs() < 1e-12);
    let b = JointPmf::new(vec![Alphabet::binary("A")], vec![0.1, 0.9]).unwrap();
    assert!((b.entropy(&["A"], &[]).unwrap() - 0.46899).abs() < 1e-4);
    assert!((b.entropy(&["A"], &[]).unwrap() - h2(0.1)).abs() < 1e-14);
    let f = copy(&dsbs(0.3), "X1", "F");
    assert_eq!(f.entropy(&["F"], &["X1"]).unwrap(), 0.0);
}

#[test]
fn mutual_information_examples() {
    let i = dsbs(0.1).mutual_info(&["X1"], &["X2"], &[]).unwrap();
    assert!((i - 0.53101).abs() < 1e-4);
    assert!((i - (1.0 - h2(0.1))).abs() < 1e-14);
    let same = copy(&JointPmf::uniform(bits(&["A"])).unwrap(), "A", "B");
    assert!((same.mutual_info(&["A"], &["B"], &[]).unwrap() - 1.0).abs() < 1e-15);
    let ind = JointPmf::uniform(bits(&["A", "B"])).unwrap();
    assert_eq!(ind.mutual_info(&["A"], &["B"], &[]).unwrap(), 0.0);
    assert!(matches!(
        ind.mutual_info(&["A"], &["A"], &[]),
        Err(ProbError::Overlap(_))
    ));
}

#[test]
fn total_variation_examples() {
    let v = || bits(&["A"]);
    let p = JointPmf::new(v(), vec![0.5, 0.5]).unwrap();
    let q = JointPmf::new(v(), vec![0.9, 0.1]).unwrap();
    assert!((p.total_variation(&q).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(p.total_variation(&p).unwrap(), 0.0);
    let a = JointPmf::point(v(), &[0]).unwrap();
    let b = JointPmf::point(v(), &[1]).unwrap();
    assert_eq!(a.total_variation(&b).unwrap(), 1.0);
    let other = JointPmf::new(bits(&["B"]), vec![0.5, 0.5]).unwrap();
    assert!(p.total_variation(&other).is_err());
}

#[test]
fn markov_examples() {
    let p = copy(&dsbs(0.1), "X1", "F1");
    let m = p.is_markov(&["F1"], &["X1"], &["X2"], 1e-12).unwrap();
    assert!(m.holds && m.witness <= 1e-12);
    // A = C uniform, B independent
    let q = copy(&JointPmf::uniform(bits(&["A", "B"])).unwrap(), "A", "C");
    let m = q.is_markov(&["A"], &["B"], &["C"], 1e-9).unwrap();
    assert!(!m.holds);
    assert!((m.witness - 1.0).abs() < 1e-12);
}

#[test]
fn iid_extension_examples() {
    let p = dsbs(0.2);
    assert_eq!(p.iid_extend(1, 1 << 20).unwrap(), p);
    let p3 = p.iid_extend(3, 1 << 20).unwrap();
    assert_eq!(p3.support_size(), p.support_size().pow(3));
    let names: Vec<String> = p3.names().iter().map(|s| s.to_string()).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let h3 = p3.entropy(&refs, &[]).unwrap();
    assert!((h3 - 3.0 * p.entropy(&["X1", "X2"], &[]).unwrap()).abs() < 1e-9);
    assert!(matches!(p.iid_extend(20, 1 << 20), Err(ProbError::BudgetExceeded { .. })));
    assert!(matches!(p.iid_extend(0, 1 << 20), Err(ProbError::InvalidBlocklength)));
}

#[test]
fn json_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let p = random_pmf(&mut rng, 3, 4);
        let back = JointPmf::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }
    let doc = r#"{"vars":[{"name":"X1","symbols":["a","b"]}],"table":[0.25,0.75]}"#;
    let p = JointPmf::from_json(doc).unwrap();
    assert_eq!(p.alphabet("X1").unwrap().symbols(), &["a".to_string(), "b".to_string()]);
    assert!(JointPmf::from_json(r#"{"vars":[],"table":[0.5,0.6]}"#).is_err());
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(JointPmf::new(bits(&["A"]), vec![0.5, 0.6]).is_err());
    assert!(JointPmf::new(bits(&["A"]), vec![1.5, -0.5]).is_err());
    assert!(JointPmf::new(bits(&["A"]), vec![1.0]).is_err());
    assert!(JointPmf::new(bits(&["A", "A"]), vec![0.25; 4]).is_err());
    assert!(Alphabet::new("A", vec![]).is_err());
    assert!(Alphabet::new("A", vec!["x".into(), "x".into()]).is_err());
    // drift within 1e-9 is renormalized
    let p = JointPmf::new(bits(&["A"]), vec![0.5, 0.5 + 5e-10]).unwrap();
    assert!((p.total_mass() - 1.0).abs() < 1e-15);
}

#[test]
fn single_precision_agrees_with_double() {
    let p = dsbs(0.1);
    let q = JointPmf32::new(bits(&["X1", "X2"]), p.table().iter().map(|&x| x as f32).collect()).unwrap();
    let a = p.mutual_info(&["X1"], &["X2"], &[]).unwrap();
    let b = q.mutual_info(&["X1"], &["X2"], &[]).unwrap();
    assert!((a - b as f64).abs() < 1e-5);
}

fn pmf_strategy() -> impl Strategy<Value = JointPmf> {
    (any::<u64>(), 1usize..=4).prop_map(|(seed, k)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_pmf(&mut rng, k.max(3), 3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_matches_brute_force(p in pmf_strategy()) {
        for set in [&["V0"][..], &["V0", "V1"], &["V1", "V2"], &["V0", "V1", "V2"]] {
            let lib = p.entropy(set, &[]).unwrap();
            prop_assert!((lib - brute_entropy(&p, set)).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_rule(p in pmf_strategy()) {
        let lhs = p.entropy(&["V0", "V1"], &["V2"]).unwrap();
        let rhs = p.entropy(&["V0"], &["V2"]).unwrap() + p.entropy(&["V1"], &["V0", "V2"]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_nonnegative_and_markov_consistent(p in pmf_strategy()) {
        let i = p.mutual_info(&["V0"], &["V1"], &["V2"]).unwrap();
        prop_assert!(i >= -1e-12);
        let m = p.is_markov(&["V0"], &["V2"], &["V1"], 1e-12).unwrap();
        prop_assert_eq!(m.holds, i <= 1e-12);
    }

    #[test]
    fn total_variation_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_pmf(&mut rng, 2, 3);
        let vars = a.vars().to_vec();
        let fresh = |rng: &mut ChaCha8Rng| {
            let t: Vec<f64> = (0..a.len()).map(|_| rand::Rng::gen::<f64>(rng)).collect();
            let s: f64 = t.iter().sum();
            JointPmf::new(vars.clone(), t.iter().map(|x| x / s).collect()).unwrap()
        };
        let b = fresh(&mut rng);
        let c = fresh(&mut rng);
        let ab = a.total_variation(&b).unwrap();
        prop_assert_eq!(ab, b.total_variation(&a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(a.total_variation(&c).unwrap() <= ab + b.total_variation(&c).unwrap() + 1e-12);
    }

    #[test]
    fn compose_then_marginalize_is_identity(p in pmf_strategy(), e in 0.0f64..0.5) {
        // q-ary symmetric channel on V0
        let a = p.alphabet("V0").unwrap().clone();
        let k = a.len();
        let rows: Vec<f64> = (0..k * k)
            .map(|c| if c / k == c % k { 1.0 - e } else { e / (k - 1) as f64 })
            .collect();
        let out = Alphabet::range("OUT", k).unwrap();
        let ch = Channel::new(vec![a], vec![out], rows).unwrap();
        let q = p.compose(&ch, 1 << 16).unwrap();
        let back = q.marginalize(&p.names()).unwrap();
        for (x, y) in back.table().iter().zip(p.table()) {
            prop_assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn iid_extension_splits_into_products(seed in any::<u64>(), m in 1usize..=2, n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_pmf(&mut rng, 2, 2);
        let whole = p.iid_extend(m + n, 1 << 16).unwrap();
        let left = p.iid_extend(m, 1 << 16).unwrap();
        let right = p.iid_extend(n, 1 << 16).unwrap();
        // the replicas of `right` are numbered from 1; shift them past `m`
        let mut map = std::collections::HashMap::new();
        for name in right.names() {
            let (base, t) = match name.split_once('[') {
                Some((b, t)) => (b.to_string(), t.trim_end_matches(']').parse::<usize>().unwrap()),
                None => (name.to_string(), 1),
            };
            map.insert(name.to_string(), format!("{base}[{}]", t + m));
        }
        let mut lmap = std::collections::HashMap::new();
        if m == 1 {
            for name in left.names() {
                lmap.insert(name.to_string(), format!("{name}[1]"));
            }
        }
        let prod = left.rename(&lmap).unwrap().product(&right.rename(&map).unwrap(), 1 << 16).unwrap();
        let order = whole.names();
        let prod = prod.reorder(&order).unwrap();
        for (x, y) in prod.table().iter().zip(whole.table()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }
}
