//! Brute-force reference answers by exhaustive enumeration.
//!
//! Nothing here touches decision diagrams: counts come from evaluating the
//! formula tree on every assignment, and posteriors from the full joint
//! distribution, with the kernel constraints checked directly against the
//! model.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::counting::Evidence;
use crate::formula::Formula;
use crate::inference::TsEvidence;
use crate::kernel::FaultMode;
use crate::model::TroubleshootingModel;
use crate::robdd::VarOrder;

pub const FORMULA_VAR_LIMIT: usize = 24;
pub const KERNEL_VAR_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{vars} variables exceed the enumeration limit of {limit}")]
    Budget { vars: usize, limit: usize },
    #[error("evidence refers to unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("formula variable {0:?} is missing from the order")]
    MissingFromOrder(String),
}

/// Number of assignments to the order's variables that agree with `e` and
/// satisfy `formula`.
pub fn brute_card(formula: &Formula, order: &VarOrder, e: &Evidence) -> Result<u128, OracleError> {
    let names = order.names();
    if names.len() > FORMULA_VAR_LIMIT {
        return Err(OracleError::Budget {
            vars: names.len(),
            limit: FORMULA_VAR_LIMIT,
        });
    }
    for v in formula.variables() {
        if !names.contains(&v) {
            return Err(OracleError::MissingFromOrder(v));
        }
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut fixed = Vec::new();
    for (v, b) in e.iter() {
        let i = *index.get(v).ok_or_else(|| OracleError::UnknownVariable(v.to_string()))?;
        fixed.push((i, b));
    }
    let mut count = 0u128;
    for bits in 0u64..1 << names.len() {
        if fixed.iter().any(|&(i, b)| (bits >> i & 1 == 1) != b) {
            continue;
        }
        if formula.eval(&|v: &str| bits >> index[v] & 1 == 1) {
            count += 1;
        }
    }
    Ok(count)
}

/// Whether a full assignment of system and cause variables satisfies the
/// kernel constraints of `mode`.
pub fn kernel_holds(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    value: &dyn Fn(&str) -> bool,
) -> bool {
    let multi = mode != FaultMode::ExactlyOne;
    for s in model.systems.iter().filter(|s| !s.subsystems.is_empty()) {
        let faulty_subs = s.subsystems.iter().filter(|x| value(x)).count();
        let ok = match (value(&s.name), multi) {
            (true, false) => faulty_subs == 1,
            (true, true) => faulty_subs >= 1,
            (false, _) => faulty_subs == 0,
        };
        if !ok {
            return false;
        }
    }
    for c in &model.causes {
        if value(&c.name) && c.targets.iter().filter(|t| value(t)).count() != 1 {
            return false;
        }
    }
    let present = model.causes.iter().filter(|c| value(&c.name)).count();
    let (lo, hi) = match mode {
        FaultMode::ExactlyOne => (1, 1),
        FaultMode::ExactlyM(m) => (m, m),
        FaultMode::AtMostM(m) => (1, m),
    };
    let problem = value(&model.problem);
    if force_problem_faulty && !problem {
        return false;
    }
    if problem {
        (lo..=hi).contains(&present)
    } else {
        present == 0
    }
}

/// Probability mass of every kernel configuration that satisfies the
/// kernel and agrees with the evidence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointTable {
    /// System variables in declaration order, then causes.
    pub vars: Vec<String>,
    pub entries: BTreeMap<u32, f64>,
}

impl JointTable {
    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Mass of the configurations in which `var` holds.
    pub fn marginal(&self, var: &str) -> f64 {
        let Some(i) = self.vars.iter().position(|v| v == var) else {
            return 0.0;
        };
        self.entries.iter().filter(|(&k, _)| k >> i & 1 == 1).map(|(_, &p)| p).sum()
    }
}

pub fn joint_table(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    e: &TsEvidence,
) -> Result<JointTable, OracleError> {
    enumerate(model, mode, force_problem_faulty, e, true)
}

/// Like [`joint_table`] but with every configuration weighted only by the
/// observed-action likelihoods, so masses are (weighted) counts.
pub fn count_table(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    e: &TsEvidence,
) -> Result<JointTable, OracleError> {
    enumerate(model, mode, force_problem_faulty, e, false)
}

fn enumerate(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    e: &TsEvidence,
    with_priors: bool,
) -> Result<JointTable, OracleError> {
    let vars: Vec<String> = model
        .systems
        .iter()
        .map(|s| s.name.clone())
        .chain(model.causes.iter().map(|c| c.name.clone()))
        .collect();
    if vars.len() > KERNEL_VAR_LIMIT {
        return Err(OracleError::Budget {
            vars: vars.len(),
            limit: KERNEL_VAR_LIMIT,
        });
    }
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut fixed = Vec::new();
    for (v, b) in e.kernel.iter() {
        let i = *index.get(v).ok_or_else(|| OracleError::UnknownVariable(v.to_string()))?;
        fixed.push((i, b));
    }
    let mut observed = Vec::new();
    for (name, &obs) in &e.actions {
        let a = model.action(name).ok_or_else(|| OracleError::UnknownVariable(name.clone()))?;
        observed.push((a, obs));
    }
    let mut entries = BTreeMap::new();
    for bits in 0u32..1 << vars.len() {
        if fixed.iter().any(|&(i, b)| (bits >> i & 1 == 1) != b) {
            continue;
        }
        let value = |v: &str| bits >> index[v] & 1 == 1;
        if !kernel_holds(model, mode, force_problem_faulty, &value) {
            continue;
        }
        let mut p = 1.0;
        if with_priors {
            for c in &model.causes {
                p *= if value(&c.name) { c.prior } else { 1.0 - c.prior };
            }
        }
        for (a, obs) in &observed {
            let row = a
                .parents
                .iter()
                .enumerate()
                .fold(0usize, |acc, (d, x)| acc | (value(x) as usize) << d);
            p *= if *obs { a.cpt[row] } else { 1.0 - a.cpt[row] };
        }
        if p > 0.0 {
            entries.insert(bits, p);
        }
    }
    Ok(JointTable { vars, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OraclePosteriors {
    pub posteriors: BTreeMap<String, f64>,
    /// Total joint mass consistent with the evidence.
    pub evidence_probability: f64,
    pub consistent: bool,
}

/// Marginal probability of each cause given the evidence, from the full joint.
pub fn brute_posteriors(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    e: &TsEvidence,
) -> Result<OraclePosteriors, OracleError> {
    let table = joint_table(model, mode, force_problem_faulty, e)?;
    let total = table.total();
    let consistent = total > 0.0;
    let posteriors = model
        .causes
        .iter()
        .map(|c| {
            let p = if consistent { table.marginal(&c.name) / total } else { 0.0 };
            (c.name.clone(), p)
        })
        .collect();
    Ok(OraclePosteriors {
        posteriors,
        evidence_probability: total,
        consistent,
    })
}

/// Number of kernel configurations with each cause present, agreeing with `e`.
pub fn brute_cause_counts(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
    e: &Evidence,
) -> Result<BTreeMap<String, u128>, OracleError> {
    let ev = TsEvidence {
        kernel: e.clone(),
        actions: BTreeMap::new(),
    };
    let table = count_table(model, mode, force_problem_faulty, &ev)?;
    Ok(model
        .causes
        .iter()
        .map(|c| (c.name.clone(), table.marginal(&c.name) as u128))
        .collect())
}

/// Reference values for the built-in example and small fixed cases, each
/// computed by enumeration. Keys name the quantity.
pub fn reference_values() -> Result<BTreeMap<String, f64>, OracleError> {
    let mut out = BTreeMap::new();
    let three = VarOrder::new(["A1", "A2", "A3"]).expect("distinct names");
    let f = Formula::exactly_one(vec![Formula::var("A1"), Formula::var("A2"), Formula::var("A3")]);
    out.insert("exactly_one_of_three.card".into(), brute_card(&f, &three, &Evidence::new())? as f64);

    let m = crate::model::example_model();
    let mode = FaultMode::ExactlyOne;
    let none = TsEvidence::new();
    let a_yes = TsEvidence {
        kernel: Evidence::new(),
        actions: BTreeMap::from([("A".to_string(), true)]),
    };
    for (force, tag) in [(true, "forced"), (false, "unforced")] {
        let counts = count_table(&m, mode, force, &none)?;
        out.insert(format!("example.{tag}.card"), counts.total());
        for c in &m.causes {
            out.insert(format!("example.{tag}.count.{}", c.name), counts.marginal(&c.name));
        }
        let weighted = count_table(&m, mode, force, &a_yes)?;
        out.insert(format!("example.{tag}.weighted_card.A=y"), weighted.total());
    }
    for (ev, tag) in [(&none, "none"), (&a_yes, "A=y")] {
        let p = brute_posteriors(&m, mode, true, ev)?;
        for (c, v) in &p.posteriors {
            out.insert(format!("example.forced.posterior.{tag}.{c}"), *v);
        }
        out.insert(format!("example.forced.evidence_probability.{tag}"), p.evidence_probability);
    }
    Ok(out)
}
