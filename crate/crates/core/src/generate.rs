//! Seeded random troubleshooting models.
//!
//! The system variables form a random recursive tree under `S`: each new
//! variable picks a parent uniformly among those with spare branching
//! capacity. Causes target leaves only; leaves are first dealt round-robin
//! so every leaf has a cause, then each cause is topped up to a size drawn
//! uniformly from `targets_per_cause`. Priors are uniform in `[0.01, 0.99]`
//! and CPT entries uniform in `[0, 1]`, both rounded to three decimals.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ActionVar, CauseVar, SystemVar, TroubleshootingModel};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenSpec {
    pub n_system: usize,
    pub n_cause: usize,
    pub n_action: usize,
    pub max_subsystems_per_node: usize,
    pub targets_per_cause: RangeInclusive<usize>,
    pub parents_per_action: RangeInclusive<usize>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(n_system: usize, n_cause: usize, n_action: usize, seed: u64) -> GenSpec {
        GenSpec {
            n_system,
            n_cause,
            n_action,
            max_subsystems_per_node: 4,
            targets_per_cause: 1..=3,
            parents_per_action: 1..=2,
            seed,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_system + self.n_cause + self.n_action
    }

    /// One-line description of the generator settings.
    pub fn describe(&self) -> String {
        format!(
            "max_subsystems_per_node={} targets_per_cause={}..={} parents_per_action={}..={} \
             tree=random-recursive targets=leaves priors=uniform[0.01,0.99] cpt=uniform[0,1] rounding=3dp rng=chacha8",
            self.max_subsystems_per_node,
            self.targets_per_cause.start(),
            self.targets_per_cause.end(),
            self.parents_per_action.start(),
            self.parents_per_action.end(),
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("need at least one system variable and one cause")]
    Empty,
    #[error("max_subsystems_per_node must be at least 1")]
    NoBranching,
    #[error("targets_per_cause {min}..={max} is infeasible with {n_system} system variables")]
    Targets { min: usize, max: usize, n_system: usize },
    #[error("parents_per_action {min}..={max} is infeasible with {n_system} system variables")]
    Parents { min: usize, max: usize, n_system: usize },
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn generate_model(spec: &GenSpec) -> Result<TroubleshootingModel, GenError> {
    if spec.n_system == 0 || spec.n_cause == 0 {
        return Err(GenError::Empty);
    }
    if spec.max_subsystems_per_node == 0 {
        return Err(GenError::NoBranching);
    }
    let (tmin, tmax) = (*spec.targets_per_cause.start(), *spec.targets_per_cause.end());
    if tmin == 0 || tmin > tmax || tmin > spec.n_system {
        return Err(GenError::Targets {
            min: tmin,
            max: tmax,
            n_system: spec.n_system,
        });
    }
    let (pmin, pmax) = (*spec.parents_per_action.start(), *spec.parents_per_action.end());
    if pmin > pmax || (spec.n_action > 0 && pmin > spec.n_system) {
        return Err(GenError::Parents {
            min: pmin,
            max: pmax,
            n_system: spec.n_system,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let names: Vec<String> = (0..spec.n_system)
        .map(|i| if i == 0 { "S".to_string() } else { format!("S{i}") })
        .collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); spec.n_system];
    let mut open: Vec<usize> = vec![0];
    for i in 1..spec.n_system {
        let slot = rng.gen_range(0..open.len());
        let parent = open[slot];
        children[parent].push(i);
        if children[parent].len() == spec.max_subsystems_per_node {
            open.swap_remove(slot);
        }
        open.push(i);
    }
    let systems: Vec<SystemVar> = (0..spec.n_system)
        .map(|i| SystemVar {
            name: names[i].clone(),
            subsystems: children[i].iter().map(|&c| names[c].clone()).collect(),
        })
        .collect();

    let leaves: Vec<usize> = (0..spec.n_system).filter(|&i| children[i].is_empty()).collect();
    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); spec.n_cause];
    let mut dealt = leaves.clone();
    dealt.shuffle(&mut rng);
    for (k, &leaf) in dealt.iter().enumerate() {
        targets[k % spec.n_cause].push(leaf);
    }
    for t in targets.iter_mut() {
        let want = rng.gen_range(tmin..=tmax).min(leaves.len());
        let mut spare: Vec<usize> = leaves.iter().copied().filter(|l| !t.contains(l)).collect();
        spare.shuffle(&mut rng);
        while t.len() < want {
            t.push(spare.pop().unwrap());
        }
        t.sort_unstable();
    }
    let causes = targets
        .into_iter()
        .enumerate()
        .map(|(k, t)| CauseVar {
            name: format!("C{}", k + 1),
            targets: t.into_iter().map(|i| names[i].clone()).collect(),
            prior: round3(rng.gen_range(0.01..=0.99)),
        })
        .collect();

    let mut actions = Vec::with_capacity(spec.n_action);
    for k in 0..spec.n_action {
        let n_parents = rng.gen_range(pmin..=pmax).min(spec.n_system);
        let mut parents: Vec<usize> = (0..spec.n_system).collect::<Vec<_>>().choose_multiple(&mut rng, n_parents).copied().collect();
        parents.sort_unstable();
        let cpt = (0..1usize << n_parents).map(|_| round3(rng.gen_range(0.0..=1.0))).collect();
        actions.push(ActionVar {
            name: format!("A{}", k + 1),
            parents: parents.into_iter().map(|i| names[i].clone()).collect(),
            cpt,
        });
    }

    Ok(TroubleshootingModel {
        problem: "S".to_string(),
        systems,
        causes,
        actions,
    })
}

/// System/cause/action proportions cycled through the benchmark suite.
pub const SPLITS: [(usize, usize, usize); 3] = [(50, 30, 20), (40, 40, 20), (60, 25, 15)];

/// Splits `total` variables by a percentage triple, keeping at least one
/// system variable and one cause.
pub fn split_total(total: usize, split: (usize, usize, usize)) -> (usize, usize, usize) {
    let n_system = (total * split.0 / 100).max(1);
    let n_cause = (total * split.1 / 100).max(1);
    let n_action = total.saturating_sub(n_system + n_cause);
    (n_system, n_cause, n_action)
}

/// Fifteen total-variable sizes from 21 to 322 with fifteen models each,
/// cycling through [`SPLITS`]; seeds derive from `base_seed`.
pub fn suite(base_seed: u64) -> Vec<(String, GenSpec)> {
    let points = 15;
    let mut out = Vec::with_capacity(points * 15);
    for p in 0..points {
        let total = 21 + (322 - 21) * p / (points - 1);
        for k in 0..15 {
            let (s, c, a) = split_total(total, SPLITS[k % SPLITS.len()]);
            let seed = base_seed.wrapping_mul(1_000_003).wrapping_add((p * 15 + k) as u64);
            out.push((format!("n{total:03}-{k:02}"), GenSpec::new(s, c, a, seed)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{has_errors, parse_model, serialize_model, validate};

    #[test]
    fn generated_models_validate() {
        for seed in 0..1000 {
            let spec = GenSpec::new(1 + seed as usize % 12, 1 + seed as usize % 5, seed as usize % 3, seed);
            let m = generate_model(&spec).unwrap();
            let issues = validate(&m);
            assert!(!has_errors(&issues), "seed {seed}: {issues:?}");
            assert!(issues.is_empty(), "seed {seed}: {issues:?}");
        }
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec::new(30, 12, 6, 7);
        assert_eq!(generate_model(&spec).unwrap(), generate_model(&spec).unwrap());
        let other = GenSpec { seed: 8, ..spec.clone() };
        assert_ne!(generate_model(&spec).unwrap(), generate_model(&other).unwrap());
    }

    #[test]
    fn round_trips_through_text() {
        for seed in 0..50 {
            let m = generate_model(&GenSpec::new(10, 4, 3, seed)).unwrap();
            assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
        }
    }

    #[test]
    fn branching_is_bounded() {
        let spec = GenSpec {
            max_subsystems_per_node: 2,
            ..GenSpec::new(40, 5, 0, 3)
        };
        let m = generate_model(&spec).unwrap();
        assert!(m.systems.iter().all(|s| s.subsystems.len() <= 2));
    }

    #[test]
    fn infeasible_specs() {
        let spec = GenSpec {
            targets_per_cause: 5..=6,
            ..GenSpec::new(3, 2, 0, 1)
        };
        assert!(matches!(generate_model(&spec), Err(GenError::Targets { .. })));
        assert!(matches!(generate_model(&GenSpec::new(0, 1, 0, 1)), Err(GenError::Empty)));
    }

    #[test]
    fn suite_shape() {
        let s = suite(1);
        assert_eq!(s.len(), 225);
        assert_eq!(s[0].1.n_vars(), 21);
        assert_eq!(s[224].1.n_vars(), 322);
    }
}
