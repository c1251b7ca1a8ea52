//! Compilation of a troubleshooting model into its Boolean kernel over the
//! system and cause variables.
//!
//! The kernel is the conjunction of
//! - for each system variable `T` with subsystems: `T` is faulty iff exactly
//!   one subsystem is faulty, and all subsystems are ok when `T` is ok;
//! - for each cause `C`: `C` implies exactly one of its targets is faulty;
//! - the fault-count constraint tying the problem variable to the causes.
//!
//! In the multi-fault modes the per-system constraint is relaxed to "`T` is
//! faulty iff some subsystem is faulty".

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::formula::Formula;
use crate::model::{has_errors, validate, ModelIssue, TroubleshootingModel};
use crate::robdd::{BddError, BinOp, Robdd, VarOrder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FaultMode {
    ExactlyOne,
    ExactlyM(usize),
    AtMostM(usize),
}

impl FaultMode {
    /// Smallest and largest number of simultaneously present causes when
    /// the device is faulty.
    pub fn fault_range(self) -> (usize, usize) {
        match self {
            FaultMode::ExactlyOne => (1, 1),
            FaultMode::ExactlyM(m) => (m, m),
            FaultMode::AtMostM(m) => (1, m),
        }
    }
}

impl fmt::Display for FaultMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultMode::ExactlyOne => write!(f, "exactly-one"),
            FaultMode::ExactlyM(m) => write!(f, "exactly-m={m}"),
            FaultMode::AtMostM(m) => write!(f, "at-most-m={m}"),
        }
    }
}

impl FromStr for FaultMode {
    type Err = String;

    fn from_str(s: &str) -> Result<FaultMode, String> {
        let bad = || format!("invalid fault mode {s:?}; expected exactly-one, exactly-m=<m> or at-most-m=<m>");
        if s == "exactly-one" {
            return Ok(FaultMode::ExactlyOne);
        }
        let (kind, m) = s.split_once('=').ok_or_else(bad)?;
        let m: usize = m.parse().map_err(|_| bad())?;
        if m == 0 {
            return Err(bad());
        }
        match kind {
            "exactly-m" => Ok(FaultMode::ExactlyM(m)),
            "at-most-m" => Ok(FaultMode::AtMostM(m)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("model has validation errors: {}", .0.iter().map(|i| i.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ModelIssue>),
    #[error("fault mode {mode} needs 1 <= m <= {n_causes}")]
    ModeOutOfRange { mode: FaultMode, n_causes: usize },
    #[error(transparent)]
    Bdd(#[from] BddError),
}

#[derive(Clone, Debug)]
pub struct CompiledKernel {
    pub bdd: Robdd,
    pub mode: FaultMode,
    pub force_problem_faulty: bool,
    /// Cause names with their levels, in declaration order.
    pub cause_levels: Vec<(String, usize)>,
}

impl CompiledKernel {
    pub fn order(&self) -> &VarOrder {
        self.bdd.order()
    }

    pub fn node_count(&self) -> usize {
        self.bdd.node_count()
    }

    /// Level of the first cause; everything above it is a system variable.
    pub fn first_cause_level(&self) -> usize {
        self.cause_levels.iter().map(|&(_, l)| l).min().unwrap_or(self.bdd.n_vars() + 1)
    }

    /// Reachable nodes testing a cause variable.
    pub fn cause_layer_nodes(&self) -> usize {
        self.cause_levels.iter().map(|&(_, l)| self.bdd.layer(l).len()).sum()
    }
}

fn check(model: &TroubleshootingModel, mode: FaultMode) -> Result<(), KernelError> {
    let issues = validate(model);
    if has_errors(&issues) {
        return Err(KernelError::Invalid(issues));
    }
    let n_causes = model.causes.len();
    let m = match mode {
        FaultMode::ExactlyOne => 1,
        FaultMode::ExactlyM(m) | FaultMode::AtMostM(m) => m,
    };
    if m == 0 || m > n_causes {
        return Err(KernelError::ModeOutOfRange { mode, n_causes });
    }
    Ok(())
}

/// System variables with every variable ahead of its subsystems (breadth
/// first from the problem variable, declaration order breaking ties),
/// followed by all causes in declaration order.
pub fn order_variables(model: &TroubleshootingModel) -> Result<VarOrder, KernelError> {
    let issues = validate(model);
    if has_errors(&issues) {
        return Err(KernelError::Invalid(issues));
    }
    let index = |name: &str| model.systems.iter().position(|s| s.name == name).unwrap();
    // number of systems that still have to be placed before each one
    let mut pending = vec![0usize; model.systems.len()];
    for s in &model.systems {
        for sub in &s.subsystems {
            pending[index(sub)] += 1;
        }
    }
    let mut queue = std::collections::VecDeque::from([index(&model.problem)]);
    let mut names = Vec::with_capacity(model.n_kernel_vars());
    while let Some(i) = queue.pop_front() {
        let s = &model.systems[i];
        names.push(s.name.clone());
        for sub in &s.subsystems {
            let j = index(sub);
            pending[j] -= 1;
            if pending[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    names.extend(model.causes.iter().map(|c| c.name.clone()));
    Ok(VarOrder::new(names)?)
}

fn vars(names: &[String]) -> Vec<Formula> {
    names.iter().map(Formula::var).collect()
}

fn count(min: usize, max: usize, operands: Vec<Formula>) -> Formula {
    Formula::Count { min, max, operands }
}

/// The kernel's conjuncts in build order: per-system constraints in
/// variable order, then per-cause constraints, then the fault-count
/// constraint.
pub fn kernel_conjuncts(model: &TroubleshootingModel, mode: FaultMode) -> Result<Vec<Formula>, KernelError> {
    check(model, mode)?;
    let order = order_variables(model)?;
    let mut out = Vec::new();
    for name in order.names() {
        let Some(sys) = model.system(name) else { continue };
        if sys.subsystems.is_empty() {
            continue;
        }
        let t = Formula::var(name);
        let subs = vars(&sys.subsystems);
        out.push(match mode {
            FaultMode::ExactlyOne => Formula::Or(vec![
                Formula::And(vec![t.clone(), Formula::exactly_one(subs.clone())]),
                Formula::And(vec![Formula::not(t), count(0, 0, subs)]),
            ]),
            _ => Formula::iff(t, Formula::Or(subs)),
        });
    }
    for c in &model.causes {
        out.push(Formula::implies(Formula::var(&c.name), Formula::exactly_one(vars(&c.targets))));
    }
    let s = Formula::var(&model.problem);
    let causes: Vec<Formula> = model.causes.iter().map(|c| Formula::var(&c.name)).collect();
    let (lo, hi) = mode.fault_range();
    out.push(Formula::Or(vec![
        Formula::And(vec![s.clone(), count(lo, hi, causes.clone())]),
        Formula::And(vec![Formula::not(s), count(0, 0, causes)]),
    ]));
    Ok(out)
}

pub fn kernel_formula(model: &TroubleshootingModel, mode: FaultMode) -> Result<Formula, KernelError> {
    Ok(Formula::And(kernel_conjuncts(model, mode)?))
}

/// Builds the kernel one conjunct at a time under [`order_variables`]; with
/// `force_problem_faulty` the problem variable is additionally fixed to faulty.
pub fn compile_kernel(
    model: &TroubleshootingModel,
    mode: FaultMode,
    force_problem_faulty: bool,
) -> Result<CompiledKernel, KernelError> {
    let conjuncts = kernel_conjuncts(model, mode)?;
    let order = order_variables(model)?;
    let cause_levels = model
        .causes
        .iter()
        .map(|c| (c.name.clone(), order.level(&c.name).unwrap()))
        .collect();
    let mut bdd = Robdd::new(order);
    let mut root = bdd.root();
    for f in &conjuncts {
        let g = bdd.build_formula(f)?;
        root = bdd.apply(BinOp::And, root, g)?;
    }
    if force_problem_faulty {
        let s = bdd.var(&model.problem)?;
        root = bdd.apply(BinOp::And, root, s)?;
    }
    bdd.set_root(root)?;
    Ok(CompiledKernel {
        bdd,
        mode,
        force_problem_faulty,
        cause_levels,
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Node-count bound for the kernel under the compiled ordering, terminals
/// included.
pub fn size_bound(n_system: usize, n_cause: usize, mode: FaultMode) -> u128 {
    let s = n_system as u128;
    let c = n_cause as u128;
    let system_part = s * (s + 1) / 2;
    let cause_part = match mode {
        FaultMode::ExactlyOne => c * c,
        FaultMode::ExactlyM(m) => c * binomial(c, m as u128),
        FaultMode::AtMostM(m) => c * (1..=m as u128).map(|i| binomial(c, i)).sum::<u128>(),
    };
    system_part + cause_part + 2
}

pub fn model_size_bound(model: &TroubleshootingModel, mode: FaultMode) -> u128 {
    size_bound(model.systems.len(), model.causes.len(), mode)
}

/// Bound on the nodes in the cause layers alone.
pub fn cause_layer_bound(n_cause: usize, mode: FaultMode) -> u128 {
    size_bound(0, n_cause, mode) - 2
}
