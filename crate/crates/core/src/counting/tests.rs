use proptest::prelude::*;

use super::*;
use crate::formula::Formula;

fn bdd(text: &str, vars: &[&str]) -> Robdd {
    let order = VarOrder::new(vars.iter().copied()).unwrap();
    Robdd::build(&Formula::parse(text).unwrap(), order).unwrap()
}

/// Enumeration over every configuration of the order.
fn brute(f: &Formula, order: &VarOrder, fns: &[WeightFunction], e: &Evidence) -> f64 {
    let n = order.len();
    let mut total = 0.0;
    for i in 0..1u64 << n {
        let at = |name: &str| i >> (order.require(name).unwrap() - 1) & 1 == 1;
        if e.iter().any(|(v, b)| at(v) != b) || !f.eval(&at) {
            continue;
        }
        total += fns.iter().map(|g| g.value(at)).product::<f64>();
    }
    total
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn single_variable_counts_half() {
    let b = bdd("x1", &["x1", "x2", "x3"]);
    assert_eq!(card(&b).unwrap(), 4);
}

#[test]
fn skipped_levels_pass_value_through() {
    let b = bdd("x3", &["x1", "x2", "x3"]);
    assert_eq!(card(&b).unwrap(), 4);
    let nv = node_values(&b, &Evidence::new()).unwrap();
    assert_eq!(nv.v(b.root()), 8.0);
    assert_eq!(nv.v(TERM1_REF), 4.0);
}

const TERM1_REF: NodeRef = crate::robdd::TERM1;

#[test]
fn skipped_evidence_level_halves() {
    let b = bdd("x3", &["x1", "x2", "x3"]);
    let e = Evidence::new().with("x2", true);
    assert_eq!(card_with_evidence(&b, &e).unwrap(), 2);
    let e = e.with("x3", false);
    assert_eq!(card_with_evidence(&b, &e).unwrap(), 0);
}

#[test]
fn exactly_one_of_three() {
    let b = bdd("count(1,1; A1,A2,A3)", &["A1", "A2", "A3"]);
    assert_eq!(card(&b).unwrap(), 3);
    let e = Evidence::new().with("A1", true);
    assert_eq!(card_with_evidence(&b, &e).unwrap(), 1);
    let e = Evidence::new().with("A1", false);
    assert_eq!(card_with_evidence(&b, &e).unwrap(), 2);
}

#[test]
fn constants() {
    assert_eq!(card(&bdd("1", &["a", "b"])).unwrap(), 4);
    assert_eq!(card(&bdd("0", &["a", "b"])).unwrap(), 0);
    assert_eq!(card(&bdd("a | !a", &["a", "b", "c"])).unwrap(), 8);
}

#[test]
fn unknown_evidence_variable() {
    let b = bdd("a", &["a"]);
    let e = Evidence::new().with("zz", true);
    assert!(matches!(card_with_evidence(&b, &e), Err(CountError::Bdd(BddError::UnknownVariable(_)))));
}

#[test]
fn weight_on_evidence_rejected() {
    let b = bdd("a & b", &["a", "b"]);
    let f = WeightFunction::new(names(&["a"]), vec![1.0, 2.0]).unwrap();
    let e = Evidence::new().with("a", true);
    assert!(matches!(weighted_card(&b, &[f], &e), Err(CountError::WeightOnEvidence(_))));
}

#[test]
fn weight_function_validation() {
    assert!(WeightFunction::new(names(&["a"]), vec![1.0]).is_err());
    assert!(WeightFunction::new(names(&["a", "a"]), vec![1.0; 4]).is_err());
    assert!(WeightFunction::new(names(&["a"]), vec![1.0, f64::NAN]).is_err());
}

#[test]
fn condition_drops_variable() {
    let f = WeightFunction::from_fn(names(&["a", "b", "c"]), |x| (x[0] as u8 + 2 * x[1] as u8 + 4 * x[2] as u8) as f64)
        .unwrap();
    let g = f.condition("b", true);
    assert_eq!(g.domain(), &names(&["a", "c"])[..]);
    assert_eq!(g.table(), &[2.0, 3.0, 6.0, 7.0]);
}

#[test]
fn merge_joins_overlapping_spans() {
    let order = VarOrder::new(["a", "b", "c", "d", "e"]).unwrap();
    let f = WeightFunction::new(names(&["a", "c"]), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let g = WeightFunction::new(names(&["b"]), vec![5.0, 6.0]).unwrap();
    let h = WeightFunction::new(names(&["e"]), vec![7.0, 8.0]).unwrap();
    let merged = merge_overlapping(&[h.clone(), f, g], &order).unwrap();
    assert_eq!(merged.len(), 2);
    assert_eq!(merged[0].domain(), &names(&["a", "b", "c"])[..]);
    assert_eq!(merged[1], h);
}

#[test]
fn weighted_small_example() {
    let b = bdd("(a | b) & c", &["a", "b", "c", "d"]);
    let f = WeightFunction::new(names(&["a", "b"]), vec![0.5, 1.0, 2.0, 4.0]).unwrap();
    // configurations (a,b) in {10, 01, 11}, c fixed, d free
    let expected = 2.0 * (1.0 + 2.0 + 4.0);
    assert!((weighted_card(&b, &[f.clone()], &Evidence::new()).unwrap() - expected).abs() < 1e-12);
    let naive = Counter::new(&b).weighted_card_naive(&[f], &Evidence::new(), &mut OpCounter::default()).unwrap();
    assert!((naive - expected).abs() < 1e-12);
}

#[test]
fn readout_levels_sum_to_total() {
    let b = bdd("(a ^ c) | (b & d) | count(2,3; c,d,e)", &["a", "b", "c", "d", "e"]);
    let layout = Layout::new(&b);
    let mut unary = vec![[1.0, 1.0]; 6];
    unary[4] = [0.3, 0.7];
    unary[2] = [0.0, 1.0];
    let p = propagate(&layout, &unary, &[], 3, &mut OpCounter::default());
    for l in 3..=5 {
        let s = p.readout[l][0] + p.readout[l][1];
        assert!((s - p.total).abs() < 1e-9, "level {l}: {s} vs {}", p.total);
    }
    // direct check of one entry
    let f = Formula::parse("(a ^ c) | (b & d) | count(2,3; c,d,e)").unwrap();
    let want: f64 = (0..32u32)
        .filter(|i| i >> 1 & 1 == 1 && i >> 2 & 1 == 1)
        .filter(|i| f.eval(&|v: &str| i >> (b.order().require(v).unwrap() - 1) & 1 == 1))
        .map(|i| if i >> 3 & 1 == 1 { 0.7 } else { 0.3 })
        .sum();
    assert!((p.readout[3][1] - want).abs() < 1e-9);
}

#[test]
fn single_pass_is_cheaper_than_naive() {
    let vars: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
    let order = VarOrder::new(vars.clone()).unwrap();
    let f = Formula::parse("count(3,5; x0,x1,x2,x3,x4,x5,x6,x7,x8,x9)").unwrap();
    let b = Robdd::build(&f, order).unwrap();
    let wf = WeightFunction::from_fn(vars[2..6].to_vec(), |x| 1.0 + x.iter().filter(|&&b| b).count() as f64).unwrap();
    let c = Counter::new(&b);
    let mut single = OpCounter::default();
    let mut naive = OpCounter::default();
    let a = c.weighted_card(&[wf.clone()], &Evidence::new(), &mut single).unwrap();
    let n = c.weighted_card_naive(&[wf], &Evidence::new(), &mut naive).unwrap();
    assert!((a - n).abs() < 1e-9 * n.abs().max(1.0));
    assert!(single.total() < naive.total(), "{single:?} vs {naive:?}");
}

#[test]
fn to_count_rejects_fractions() {
    assert!(to_count(2.5).is_err());
    assert_eq!(to_count(3.0000000001).unwrap(), 3);
}

const VARS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn arb_case() -> impl Strategy<Value = (Formula, Vec<Option<bool>>, Vec<(Vec<usize>, Vec<f64>)>)> {
    let formula = crate::formula::tests::arb_formula();
    let evidence = prop::collection::vec(prop::option::weighted(0.3, any::<bool>()), 6);
    let weight = prop::collection::btree_set(0usize..6, 1..4).prop_flat_map(|dom| {
        let k = dom.len();
        (Just(dom.into_iter().collect::<Vec<_>>()), prop::collection::vec(0.0f64..3.0, 1 << k))
    });
    (formula, evidence, prop::collection::vec(weight, 0..3))
}

fn setup(
    f: &Formula,
    ev: &[Option<bool>],
    ws: &[(Vec<usize>, Vec<f64>)],
) -> (Robdd, Evidence, Vec<WeightFunction>) {
    let order = VarOrder::new(VARS).unwrap();
    let b = Robdd::build(f, order).unwrap();
    let mut e = Evidence::new();
    for (i, x) in ev.iter().enumerate() {
        if let Some(x) = x {
            e.set(VARS[i], *x);
        }
    }
    let fns = ws
        .iter()
        .map(|(dom, t)| {
            let g = WeightFunction::new(dom.iter().map(|&i| VARS[i].to_string()).collect(), t.clone()).unwrap();
            dom.iter().fold(g, |g, &i| match ev[i] {
                Some(x) => g.condition(VARS[i], x),
                None => g,
            })
        })
        .collect();
    (b, e, fns)
}

proptest! {
    #[test]
    fn card_matches_enumeration((f, ev, _) in arb_case()) {
        let (b, e, _) = setup(&f, &ev, &[]);
        let want = brute(&f, b.order(), &[], &e);
        prop_assert_eq!(card_with_evidence(&b, &e).unwrap() as f64, want);
    }

    #[test]
    fn weighted_matches_enumeration((f, ev, ws) in arb_case()) {
        let (b, e, fns) = setup(&f, &ev, &ws);
        // conditioning folds evidence variables out of the weights
        let want = brute(&f, b.order(), &fns, &e);
        let got = weighted_card(&b, &fns, &e).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
        let naive = Counter::new(&b).weighted_card_naive(&fns, &e, &mut OpCounter::default()).unwrap();
        prop_assert!((naive - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn unit_weights_give_card((f, ev, ws) in arb_case()) {
        let (b, e, fns) = setup(&f, &ev, &ws);
        let ones: Vec<WeightFunction> = fns
            .iter()
            .map(|g| WeightFunction::new(g.domain().to_vec(), vec![1.0; g.table().len()]).unwrap())
            .collect();
        let got = weighted_card(&b, &ones, &e).unwrap();
        prop_assert_eq!(got, card_with_evidence(&b, &e).unwrap() as f64);
    }

    #[test]
    fn linear_in_weights((f, ev, ws) in arb_case(), alpha in -2.0f64..2.0) {
        let (b, e, fns) = setup(&f, &ev, &ws);
        prop_assume!(!fns.is_empty());
        let g = &fns[0];
        let other = WeightFunction::from_fn(g.domain().to_vec(), |x| x.iter().filter(|&&b| b).count() as f64).unwrap();
        let mix = WeightFunction::new(
            g.domain().to_vec(),
            g.table().iter().zip(other.table()).map(|(a, o)| alpha * a + o).collect(),
        )
        .unwrap();
        let with = |h: &WeightFunction| {
            let mut v = fns.clone();
            v[0] = h.clone();
            weighted_card(&b, &v, &e).unwrap()
        };
        let lhs = with(&mix);
        let rhs = alpha * with(g) + with(&other);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs()).max(1.0));
    }

    #[test]
    fn readout_matches_enumeration((f, ev, _) in arb_case(), cut in 1usize..7, ps in prop::collection::vec(0.05f64..0.95, 6)) {
        let (b, _, _) = setup(&f, &[None; 6], &[]);
        let layout = Layout::new(&b);
        let mut unary = vec![[1.0, 1.0]; 7];
        for l in 1..=6 {
            unary[l] = match ev[l - 1] {
                Some(true) => [0.0, 1.0],
                Some(false) => [1.0, 0.0],
                None if l % 2 == 0 => [1.0 - ps[l - 1], ps[l - 1]],
                None => [1.0, 1.0],
            };
        }
        let p = propagate(&layout, &unary, &[], cut, &mut OpCounter::default());
        let mut want = vec![[0.0; 2]; 8];
        let mut total = 0.0;
        for i in 0..64u32 {
            let at = |v: &str| i >> (b.order().require(v).unwrap() - 1) & 1 == 1;
            if !f.eval(&at) {
                continue;
            }
            let m: f64 = (1..=6).map(|l| unary[l][(i >> (l - 1) & 1) as usize]).product();
            total += m;
            for (l, slot) in want.iter_mut().enumerate().take(7).skip(1) {
                slot[(i >> (l - 1) & 1) as usize] += m;
            }
        }
        prop_assert!((p.total - total).abs() < 1e-9);
        for l in cut..=6 {
            for bit in 0..2 {
                prop_assert!((p.readout[l][bit] - want[l][bit]).abs() < 1e-9,
                    "level {} bit {}: {} vs {}", l, bit, p.readout[l][bit], want[l][bit]);
            }
        }
    }
}
