use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsbdd_core::generate::{generate_model, GenSpec};
use tsbdd_core::inference::{posteriors, Status, Strategy};
use tsbdd_core::kernel::{compile_kernel, model_size_bound, CompiledKernel, FaultMode};
use tsbdd_core::model::TroubleshootingModel;
use tsbdd_core::robdd::{NodeRef, Robdd, TERM1};
use tsbdd_core::verify::random_evidence;

fn small_model(seed: u64, n_system: usize, n_cause: usize) -> TroubleshootingModel {
    generate_model(&GenSpec {
        max_subsystems_per_node: 3,
        ..GenSpec::new(n_system, n_cause, 2, seed)
    })
    .unwrap()
}

/// Satisfying assignments as bitmasks over the kernel order.
fn models_of(k: &CompiledKernel) -> BTreeSet<u32> {
    let n = k.order().names().len();
    (0u32..1 << n)
        .filter(|bits| {
            let a: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            k.bdd.eval(k.bdd.root(), &a)
        })
        .collect()
}

fn paths_to_one(bdd: &Robdd, u: NodeRef, memo: &mut HashMap<NodeRef, u128>) -> u128 {
    if u.is_terminal() {
        return (u == TERM1) as u128;
    }
    if let Some(&p) = memo.get(&u) {
        return p;
    }
    let node = bdd.node(u).unwrap();
    let p = paths_to_one(bdd, node.lo, memo) + paths_to_one(bdd, node.hi, memo);
    memo.insert(u, p);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn single_fault_kernel_within_size_bound(seed in any::<u64>(), n_system in 2usize..40, n_cause in 1usize..20) {
        let m = small_model(seed, n_system, n_cause);
        let k = compile_kernel(&m, FaultMode::ExactlyOne, true).unwrap();
        prop_assert!(k.node_count() as u128 <= model_size_bound(&m, FaultMode::ExactlyOne));
    }

    #[test]
    fn one_path_through_each_cause_arc(seed in any::<u64>(), n_system in 2usize..30, n_cause in 1usize..12) {
        let m = small_model(seed, n_system, n_cause);
        let k = compile_kernel(&m, FaultMode::ExactlyOne, true).unwrap();
        let mut memo = HashMap::new();
        for &(_, level) in &k.cause_levels {
            for u in k.bdd.layer(level) {
                let hi = k.bdd.node(u).unwrap().hi;
                prop_assert!(paths_to_one(&k.bdd, hi, &mut memo) <= 1);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn single_fault_configurations(seed in any::<u64>(), n_system in 2usize..9, n_cause in 1usize..5) {
        let m = small_model(seed, n_system, n_cause);
        let k = compile_kernel(&m, FaultMode::ExactlyOne, true).unwrap();
        let names = k.order().names().to_vec();
        let pos = |v: &str| names.iter().position(|n| n == v).unwrap();
        for bits in models_of(&k) {
            let on = |v: &str| bits >> pos(v) & 1 == 1;
            prop_assert_eq!(m.causes.iter().filter(|c| on(&c.name)).count(), 1);
            for s in m.systems.iter().filter(|s| !s.subsystems.is_empty() && on(&s.name)) {
                prop_assert_eq!(s.subsystems.iter().filter(|c| on(c)).count(), 1);
            }
        }
    }

    #[test]
    fn at_most_is_the_union_of_exact_modes(
        seed in any::<u64>(),
        n_system in 2usize..8,
        n_cause in 2usize..5,
        force in any::<bool>(),
    ) {
        let m = small_model(seed, n_system, n_cause);
        for limit in 1..=n_cause.min(3) {
            let at_most = models_of(&compile_kernel(&m, FaultMode::AtMostM(limit), force).unwrap());
            let mut union = BTreeSet::new();
            for exact in 1..=limit {
                union.extend(models_of(&compile_kernel(&m, FaultMode::ExactlyM(exact), force).unwrap()));
            }
            if !force {
                union.insert(0);
            }
            prop_assert_eq!(&at_most, &union, "limit {}", limit);
        }
    }

    /// Scaling every prior by a common factor changes each cause's log odds by
    /// at most (1 - factor) / (1 - max prior)^2 relative to any other, so pairs
    /// further apart than that keep their order.
    #[test]
    fn prior_scaling_keeps_clear_rankings(
        seed in any::<u64>(),
        n_system in 2usize..10,
        n_cause in 2usize..6,
        factor in 0.999f64..1.0,
    ) {
        let mut m = small_model(seed, n_system, n_cause);
        for c in &mut m.causes {
            c.prior = c.prior.min(0.9);
        }
        let k = compile_kernel(&m, FaultMode::ExactlyOne, true).unwrap();
        let e = random_evidence(&m, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = posteriors(&m, &k, &e, Strategy::SinglePass).unwrap();
        prop_assume!(before.status == Status::Ok);

        let mut scaled = m.clone();
        for c in &mut scaled.causes {
            c.prior *= factor;
        }
        let after = posteriors(&scaled, &k, &e, Strategy::SinglePass).unwrap();
        let margin = (1.0 - factor) / (0.1f64 * 0.1) + 1e-9;
        for a in 0..m.causes.len() {
            for b in 0..m.causes.len() {
                let (pa, pb) = (before.causes[a].posterior, before.causes[b].posterior);
                if pa > 0.0 && pb > 0.0 && (pa / pb).ln() > margin {
                    prop_assert!(after.causes[a].posterior > after.causes[b].posterior);
                }
            }
        }
    }
}
