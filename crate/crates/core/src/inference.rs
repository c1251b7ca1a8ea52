//! Posterior cause probabilities from a compiled kernel.
//!
//! All per-cause counts come out of one propagation: values flow down to
//! the first cause level, then a bottom-up pass through the cause layers
//! splits the mass reaching each cause node by the value of every cause.
//! Observed actions never enter the kernel; their likelihoods over system
//! parents are applied as weight functions during the propagation
//! (single pass) or by one conditioned count per parent configuration
//! (naive).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::counting::{prepare_bands, propagate, to_count, CountError, Evidence, Layout, OpCounter, WeightFunction};
use crate::kernel::{CompiledKernel, FaultMode};
use crate::model::TroubleshootingModel;

pub const STRATEGY_TOLERANCE: f64 = 1e-9;

/// Largest number of action parents the naive strategy will enumerate.
pub const NAIVE_PARENT_LIMIT: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("observed action {0:?} is not declared")]
    UnknownAction(String),
    #[error("invalid value {value:?} for {var}")]
    InvalidValue { var: String, value: String },
    #[error("malformed evidence item {0:?}")]
    Malformed(String),
    #[error("naive strategy would enumerate 2^{0} parent configurations")]
    NaiveTooLarge(usize),
    #[error("strategies disagree on {cause}: naive {naive}, single pass {single_pass}")]
    StrategyMismatch { cause: String, naive: f64, single_pass: f64 },
}

/// Evidence on kernel variables plus observed actions.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TsEvidence {
    pub kernel: Evidence,
    pub actions: BTreeMap<String, bool>,
}

fn parse_value(var: &str, value: &str) -> Result<bool, InferenceError> {
    match value.to_ascii_lowercase().as_str() {
        "faulty" | "y" | "yes" | "1" | "true" => Ok(true),
        "ok" | "n" | "no" | "0" | "false" => Ok(false),
        _ => Err(InferenceError::InvalidValue {
            var: var.to_string(),
            value: value.to_string(),
        }),
    }
}

impl TsEvidence {
    pub fn new() -> TsEvidence {
        TsEvidence::default()
    }

    /// Sets `var`, which may be a system variable, a cause or an action.
    pub fn set(&mut self, model: &TroubleshootingModel, var: &str, value: bool) -> Result<(), InferenceError> {
        if model.action(var).is_some() {
            self.actions.insert(var.to_string(), value);
        } else if model.system(var).is_some() || model.cause(var).is_some() {
            self.kernel.set(var, value);
        } else {
            return Err(InferenceError::UnknownVariable(var.to_string()));
        }
        Ok(())
    }

    /// Sets `var` from a `name=value` item; values are `faulty`/`ok`,
    /// `y`/`n`, `1`/`0` or `true`/`false`.
    pub fn assign(&mut self, model: &TroubleshootingModel, item: &str) -> Result<(), InferenceError> {
        let (var, value) = item
            .split_once('=')
            .ok_or_else(|| InferenceError::Malformed(item.to_string()))?;
        let (var, value) = (var.trim(), value.trim());
        if var.is_empty() || value.is_empty() {
            return Err(InferenceError::Malformed(item.to_string()));
        }
        let b = parse_value(var, value)?;
        self.set(model, var, b)
    }

    pub fn retract(&mut self, var: &str) -> bool {
        self.kernel.remove(var).is_some() || self.actions.remove(var).is_some()
    }

    /// Parses a comma-separated list such as `S3=faulty,A=y`.
    pub fn parse(model: &TroubleshootingModel, text: &str) -> Result<TsEvidence, InferenceError> {
        let mut e = TsEvidence::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            e.assign(model, item)?;
        }
        Ok(e)
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty() && self.actions.is_empty()
    }
}

impl fmt::Display for TsEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .kernel
            .iter()
            .map(|(v, b)| format!("{v}={}", if b { "faulty" } else { "ok" }))
            .chain(self.actions.iter().map(|(v, &b)| format!("{v}={}", if b { "y" } else { "n" })))
            .collect();
        write!(f, "{}", items.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Naive,
    SinglePass,
    Both,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "single-pass" => Ok(Strategy::SinglePass),
            "both" => Ok(Strategy::Both),
            _ => Err(format!("invalid strategy {s:?}; expected naive, single-pass or both")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    InconsistentEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausePosterior {
    pub name: String,
    /// Satisfying kernel configurations with this cause present that agree
    /// with the kernel evidence.
    pub card: u128,
    /// The same count with observed-action likelihoods applied.
    pub weighted_card: f64,
    /// Unnormalised `P(cause present, evidence)`.
    pub mass: f64,
    pub posterior: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorResult {
    pub causes: Vec<CausePosterior>,
    pub evidence_probability: f64,
    pub status: Status,
    pub naive_ops: Option<OpCounter>,
    pub single_pass_ops: Option<OpCounter>,
}

impl PosteriorResult {
    pub fn posterior(&self, cause: &str) -> Option<f64> {
        self.causes.iter().find(|c| c.name == cause).map(|c| c.posterior)
    }

    pub fn posteriors(&self) -> BTreeMap<String, f64> {
        self.causes.iter().map(|c| (c.name.clone(), c.posterior)).collect()
    }

    /// Operations of the single-pass computation when it ran, else the naive one.
    pub fn ops(&self) -> OpCounter {
        self.single_pass_ops.or(self.naive_ops).unwrap_or_default()
    }
}

fn check_kernel_evidence(kernel: &CompiledKernel, e: &Evidence) -> Result<(), InferenceError> {
    for (v, _) in e.iter() {
        if kernel.order().level(v).is_none() {
            return Err(InferenceError::UnknownVariable(v.to_string()));
        }
    }
    Ok(())
}

/// `Card(C = present, e)` for every cause, in declaration order, from a
/// single propagation.
pub fn cause_counts(
    kernel: &CompiledKernel,
    e: &Evidence,
    ops: &mut OpCounter,
) -> Result<Vec<(String, u128)>, InferenceError> {
    check_kernel_evidence(kernel, e)?;
    let layout = Layout::new(&kernel.bdd);
    let unary = e.level_weights(kernel.order()).map_err(CountError::from)?;
    let p = propagate(&layout, &unary, &[], kernel.first_cause_level(), ops);
    kernel
        .cause_levels
        .iter()
        .map(|(name, l)| Ok((name.clone(), to_count(p.readout[*l][1])?)))
        .collect()
}

/// Per-cause readouts and the total of one propagation.
struct Masses {
    per_cause: Vec<f64>,
    total: f64,
}

struct Query<'a> {
    model: &'a TroubleshootingModel,
    kernel: &'a CompiledKernel,
    layout: Layout,
    kernel_evidence: &'a Evidence,
    likelihoods: Vec<WeightFunction>,
    /// Cause levels carry prior weights instead of plain counts.
    prior_weighted: bool,
}

impl Query<'_> {
    fn unary(&self, e: &Evidence) -> Result<Vec<[f64; 2]>, InferenceError> {
        let mut w = e.level_weights(self.kernel.order()).map_err(CountError::from)?;
        if self.prior_weighted {
            for (c, &(_, l)) in self.model.causes.iter().zip(&self.kernel.cause_levels) {
                w[l][0] *= 1.0 - c.prior;
                w[l][1] *= c.prior;
            }
        }
        Ok(w)
    }

    fn run(&self, e: &Evidence, fns: &[WeightFunction], ops: &mut OpCounter) -> Result<Masses, InferenceError> {
        let unary = self.unary(e)?;
        let (scale, bands) = prepare_bands(fns, e, self.kernel.order())?;
        let p = propagate(&self.layout, &unary, &bands, self.kernel.first_cause_level(), ops);
        let mut per_cause: Vec<f64> = self.kernel.cause_levels.iter().map(|&(_, l)| p.readout[l][1]).collect();
        let mut total = p.total;
        if scale != 1.0 {
            for m in per_cause.iter_mut() {
                *m *= scale;
            }
            total *= scale;
            ops.multiplications += per_cause.len() as u64 + 1;
        }
        Ok(Masses { per_cause, total })
    }

    fn single_pass(&self, ops: &mut OpCounter) -> Result<Masses, InferenceError> {
        self.run(self.kernel_evidence, &self.likelihoods, ops)
    }

    fn naive(&self, ops: &mut OpCounter) -> Result<Masses, InferenceError> {
        let mut parents: Vec<String> = Vec::new();
        for f in &self.likelihoods {
            for v in f.domain() {
                if !parents.contains(v) {
                    parents.push(v.clone());
                }
            }
        }
        if parents.len() > NAIVE_PARENT_LIMIT {
            return Err(InferenceError::NaiveTooLarge(parents.len()));
        }
        let constant: f64 = self
            .likelihoods
            .iter()
            .filter(|f| f.domain().is_empty())
            .map(|f| f.table()[0])
            .product();
        let mut acc = Masses {
            per_cause: vec![0.0; self.kernel.cause_levels.len()],
            total: 0.0,
        };
        for i in 0..1usize << parents.len() {
            let at = |name: &str| i >> parents.iter().position(|p| p == name).unwrap() & 1 == 1;
            let mut weight = constant;
            for f in self.likelihoods.iter().filter(|f| !f.domain().is_empty()) {
                weight *= f.value(at);
                ops.multiplications += 1;
            }
            let mut e = self.kernel_evidence.clone();
            for (d, p) in parents.iter().enumerate() {
                e.set(p.clone(), i >> d & 1 == 1);
            }
            let m = self.run(&e, &[], ops)?;
            for (a, x) in acc.per_cause.iter_mut().zip(&m.per_cause) {
                *a += weight * x;
            }
            acc.total += weight * m.total;
            ops.multiplications += m.per_cause.len() as u64 + 1;
            ops.additions += m.per_cause.len() as u64 + 1;
        }
        Ok(acc)
    }
}

/// Posterior probability of every cause given `e`.
///
/// Under a single fault the unnormalised mass of cause `i` is
/// `P(C_i present) * prod_{k != i} P(C_k absent) * W_i`, with `W_i` the
/// (action-weighted) count of configurations with `C_i` present, and the
/// posteriors are these masses normalised. Under multiple faults cause
/// levels carry their priors directly, the masses are the marginals
/// `P(C_i present, e)` and the normaliser is the total weighted mass.
pub fn posteriors(
    model: &TroubleshootingModel,
    kernel: &CompiledKernel,
    e: &TsEvidence,
    strategy: Strategy,
) -> Result<PosteriorResult, InferenceError> {
    check_kernel_evidence(kernel, &e.kernel)?;
    let mut likelihoods = Vec::new();
    for (name, &obs) in &e.actions {
        let action = model.action(name).ok_or_else(|| InferenceError::UnknownAction(name.clone()))?;
        let mut f = action.likelihood(obs);
        for (v, b) in e.kernel.iter() {
            f = f.condition(v, b);
        }
        likelihoods.push(f);
    }
    let prior_weighted = kernel.mode != FaultMode::ExactlyOne;
    let query = Query {
        model,
        kernel,
        layout: Layout::new(&kernel.bdd),
        kernel_evidence: &e.kernel,
        likelihoods,
        prior_weighted,
    };

    let mut naive_ops = None;
    let mut single_ops = None;
    let naive = if strategy != Strategy::SinglePass {
        let mut ops = OpCounter::default();
        let m = query.naive(&mut ops)?;
        naive_ops = Some(ops);
        Some(m)
    } else {
        None
    };
    let single = if strategy != Strategy::Naive {
        let mut ops = OpCounter::default();
        let m = query.single_pass(&mut ops)?;
        single_ops = Some(ops);
        Some(m)
    } else {
        None
    };

    let cards = cause_counts(kernel, &e.kernel, &mut OpCounter::default())?;
    let finish = |m: &Masses| summarize(model, prior_weighted, m, &cards);
    let result = match (&naive, &single) {
        (Some(a), Some(b)) => {
            let (ra, rb) = (finish(a), finish(b));
            for (x, y) in ra.iter().zip(&rb) {
                let scale = x.mass.abs().max(y.mass.abs()).max(1.0);
                if (x.posterior - y.posterior).abs() > STRATEGY_TOLERANCE
                    || (x.mass - y.mass).abs() > STRATEGY_TOLERANCE * scale
                {
                    return Err(InferenceError::StrategyMismatch {
                        cause: x.name.clone(),
                        naive: x.posterior,
                        single_pass: y.posterior,
                    });
                }
            }
            rb
        }
        (Some(a), None) => finish(a),
        (None, Some(b)) => finish(b),
        (None, None) => unreachable!(),
    };
    let evidence_probability = if prior_weighted {
        single.as_ref().or(naive.as_ref()).unwrap().total
    } else {
        result.iter().map(|c| c.mass).sum()
    };
    let status = if evidence_probability > 0.0 {
        Status::Ok
    } else {
        Status::InconsistentEvidence
    };
    Ok(PosteriorResult {
        causes: result,
        evidence_probability,
        status,
        naive_ops,
        single_pass_ops: single_ops,
    })
}

fn summarize(
    model: &TroubleshootingModel,
    prior_weighted: bool,
    m: &Masses,
    cards: &[(String, u128)],
) -> Vec<CausePosterior> {
    let n = model.causes.len();
    let masses: Vec<f64> = if prior_weighted {
        m.per_cause.clone()
    } else {
        (0..n)
            .map(|i| {
                let others: f64 = (0..n).filter(|&k| k != i).map(|k| 1.0 - model.causes[k].prior).product();
                model.causes[i].prior * others * m.per_cause[i]
            })
            .collect()
    };
    let norm = if prior_weighted {
        m.total
    } else {
        masses.iter().sum()
    };
    (0..n)
        .map(|i| {
            let (weighted_card, mass) = if norm > 0.0 {
                (m.per_cause[i], masses[i])
            } else {
                (0.0, 0.0)
            };
            CausePosterior {
                name: model.causes[i].name.clone(),
                card: cards[i].1,
                weighted_card,
                mass,
                posterior: if norm > 0.0 { masses[i] / norm } else { 0.0 },
            }
        })
        .collect()
}

/// Unnormalised probability of the evidence; only ratios between evidence
/// sets of one model are meaningful.
pub fn evidence_probability(
    model: &TroubleshootingModel,
    kernel: &CompiledKernel,
    e: &TsEvidence,
) -> Result<f64, InferenceError> {
    Ok(posteriors(model, kernel, e, Strategy::SinglePass)?.evidence_probability)
}
