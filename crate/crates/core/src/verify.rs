//! Engine-versus-oracle comparison on random evidence.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::counting::{card_with_evidence, CountError, OpCounter};
use crate::formula::Formula;
use crate::generate::GenSpec;
use crate::inference::{cause_counts, posteriors, InferenceError, Status, Strategy, TsEvidence};
use crate::kernel::{compile_kernel, kernel_formula, CompiledKernel, FaultMode, KernelError};
use crate::model::TroubleshootingModel;
use crate::oracle::{brute_card, brute_cause_counts, brute_posteriors, OracleError};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub models: usize,
    pub evidence_sets: usize,
    /// Evidence sets on which some integer count differed from enumeration.
    pub count_mismatches: usize,
    /// Largest absolute posterior difference between engine and oracle.
    pub max_posterior_deviation: f64,
    /// Largest relative evidence-probability difference between engine and oracle.
    pub max_evidence_deviation: f64,
    /// Largest absolute posterior difference between the two strategies.
    pub max_strategy_deviation: f64,
    /// Evidence sets where the oracle and the engine disagree on consistency.
    pub status_mismatches: usize,
}

impl CheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.count_mismatches == 0
            && self.status_mismatches == 0
            && self.max_posterior_deviation <= tolerance
            && self.max_evidence_deviation <= tolerance
            && self.max_strategy_deviation <= tolerance
    }

    pub fn merge(&mut self, other: &CheckReport) {
        self.models += other.models;
        self.evidence_sets += other.evidence_sets;
        self.count_mismatches += other.count_mismatches;
        self.status_mismatches += other.status_mismatches;
        self.max_posterior_deviation = self.max_posterior_deviation.max(other.max_posterior_deviation);
        self.max_evidence_deviation = self.max_evidence_deviation.max(other.max_evidence_deviation);
        self.max_strategy_deviation = self.max_strategy_deviation.max(other.max_strategy_deviation);
    }
}

/// Generator settings for models small enough to enumerate (at most 16
/// kernel variables).
pub fn small_spec<R: Rng>(rng: &mut R, seed: u64) -> GenSpec {
    let n_system = rng.gen_range(2..=10);
    let n_cause = rng.gen_range(1..=(16 - n_system).min(5));
    let n_action = rng.gen_range(0..=3);
    GenSpec {
        max_subsystems_per_node: rng.gen_range(2..=3),
        ..GenSpec::new(n_system, n_cause, n_action, seed)
    }
}

/// Up to three kernel variables and up to three actions, with random values.
pub fn random_evidence<R: Rng>(model: &TroubleshootingModel, rng: &mut R) -> TsEvidence {
    let mut e = TsEvidence::new();
    let kernel_vars: Vec<&str> = model
        .systems
        .iter()
        .map(|s| s.name.as_str())
        .chain(model.causes.iter().map(|c| c.name.as_str()))
        .collect();
    let k = rng.gen_range(0..=3.min(kernel_vars.len()));
    for v in kernel_vars.choose_multiple(rng, k) {
        e.kernel.set(*v, rng.gen_bool(0.5));
    }
    let a = rng.gen_range(0..=3.min(model.actions.len()));
    for act in model.actions.choose_multiple(rng, a) {
        e.actions.insert(act.name.clone(), rng.gen_bool(0.5));
    }
    e
}

/// Compares counts, posteriors and evidence probabilities of the forced
/// kernel with enumeration, for each evidence set.
pub fn check_model(
    model: &TroubleshootingModel,
    mode: FaultMode,
    evidence: &[TsEvidence],
) -> Result<CheckReport, VerifyError> {
    let kernel = compile_kernel(model, mode, true)?;
    let formula = Formula::And(vec![kernel_formula(model, mode)?, Formula::var(&model.problem)]);
    let mut report = CheckReport {
        models: 1,
        ..CheckReport::default()
    };
    for e in evidence {
        report.evidence_sets += 1;
        if !counts_agree(model, mode, &kernel, &formula, e)? {
            report.count_mismatches += 1;
        }
        let naive = posteriors(model, &kernel, e, Strategy::Naive)?;
        let single = posteriors(model, &kernel, e, Strategy::SinglePass)?;
        let oracle = brute_posteriors(model, mode, true, e)?;
        for c in &single.causes {
            let n = naive.posterior(&c.name).unwrap_or(f64::NAN);
            report.max_strategy_deviation = report.max_strategy_deviation.max((c.posterior - n).abs());
        }
        if oracle.consistent != (single.status == Status::Ok) {
            report.status_mismatches += 1;
            continue;
        }
        if !oracle.consistent {
            continue;
        }
        for c in &single.causes {
            let d = (c.posterior - oracle.posteriors[&c.name]).abs();
            report.max_posterior_deviation = report.max_posterior_deviation.max(d);
        }
        let rel = (single.evidence_probability - oracle.evidence_probability).abs() / oracle.evidence_probability;
        report.max_evidence_deviation = report.max_evidence_deviation.max(rel);
    }
    Ok(report)
}

fn counts_agree(
    model: &TroubleshootingModel,
    mode: FaultMode,
    kernel: &CompiledKernel,
    formula: &Formula,
    e: &TsEvidence,
) -> Result<bool, VerifyError> {
    let engine_total = card_with_evidence(&kernel.bdd, &e.kernel)?;
    let brute_total = brute_card(formula, kernel.order(), &e.kernel)?;
    let engine = cause_counts(kernel, &e.kernel, &mut OpCounter::default())?;
    let brute = brute_cause_counts(model, mode, true, &e.kernel)?;
    Ok(engine_total == brute_total && engine.iter().all(|(name, c)| brute[name] == *c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_small_models_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut total = CheckReport::default();
        for seed in 0..20 {
            let spec = small_spec(&mut rng, seed);
            let m = generate_model(&spec).unwrap();
            let ev: Vec<TsEvidence> = (0..5).map(|_| random_evidence(&m, &mut rng)).collect();
            total.merge(&check_model(&m, FaultMode::ExactlyOne, &ev).unwrap());
            if m.causes.len() >= 2 {
                total.merge(&check_model(&m, FaultMode::AtMostM(2), &ev).unwrap());
                total.merge(&check_model(&m, FaultMode::ExactlyM(2), &ev).unwrap());
            }
        }
        assert!(total.passed(1e-9), "{total:?}");
    }
}
