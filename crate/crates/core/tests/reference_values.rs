use std::collections::BTreeMap;

use serde_json::Value;
use tsbdd_core::counting::{card, Counter, Evidence, OpCounter};
use tsbdd_core::formula::Formula;
use tsbdd_core::inference::{cause_counts, posteriors, Strategy, TsEvidence};
use tsbdd_core::kernel::{compile_kernel, FaultMode};
use tsbdd_core::model::example_model;
use tsbdd_core::oracle::reference_values;
use tsbdd_core::robdd::{Robdd, VarOrder};

fn frozen() -> BTreeMap<String, f64> {
    let text = include_str!("data/reference_values.json");
    let doc: Value = serde_json::from_str(text).unwrap();
    doc["values"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_f64().unwrap()))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

#[test]
fn oracle_still_produces_the_frozen_values() {
    assert_eq!(reference_values().unwrap(), frozen());
}

#[test]
fn frozen_values_match_hand_derived_ones() {
    let v = frozen();
    assert_eq!(v["exactly_one_of_three.card"], 3.0);
    assert!(close(v["example.unforced.weighted_card.A=y"], 1.8));
    assert!(close(v["example.forced.posterior.A=y.C1"], 3.0 / 7.0));
    assert!(close(v["example.forced.posterior.A=y.C2"], 4.0 / 7.0));
    assert!(close(v["example.forced.evidence_probability.A=y"], 0.35));
}

#[test]
fn engine_counts_match_frozen() {
    let v = frozen();
    let f = Formula::parse("count(1,1; A1,A2,A3)").unwrap();
    let bdd = Robdd::build(&f, VarOrder::new(["A1", "A2", "A3"]).unwrap()).unwrap();
    assert_eq!(card(&bdd).unwrap() as f64, v["exactly_one_of_three.card"]);

    let m = example_model();
    let likelihood = m.action("A").unwrap().likelihood(true);
    for (force, tag) in [(true, "forced"), (false, "unforced")] {
        let k = compile_kernel(&m, FaultMode::ExactlyOne, force).unwrap();
        assert_eq!(card(&k.bdd).unwrap() as f64, v[&format!("example.{tag}.card")]);
        for (name, c) in cause_counts(&k, &Evidence::new(), &mut OpCounter::default()).unwrap() {
            assert_eq!(c as f64, v[&format!("example.{tag}.count.{name}")], "{tag} {name}");
        }
        let w = Counter::new(&k.bdd)
            .weighted_card(&[likelihood.clone()], &Evidence::new(), &mut OpCounter::default())
            .unwrap();
        assert!(close(w, v[&format!("example.{tag}.weighted_card.A=y")]), "{tag}: {w}");
    }
}

#[test]
fn engine_posteriors_match_frozen() {
    let v = frozen();
    let m = example_model();
    let k = compile_kernel(&m, FaultMode::ExactlyOne, true).unwrap();
    for (text, tag) in [("", "none"), ("A=y", "A=y")] {
        let e = TsEvidence::parse(&m, text).unwrap();
        let r = posteriors(&m, &k, &e, Strategy::Both).unwrap();
        assert!(close(r.evidence_probability, v[&format!("example.forced.evidence_probability.{tag}")]));
        for c in &r.causes {
            assert!(close(c.posterior, v[&format!("example.forced.posterior.{tag}.{}", c.name)]), "{tag} {}", c.name);
        }
    }
}
