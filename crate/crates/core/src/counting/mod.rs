//! Model counting on a [`Robdd`]: plain and evidence-conditioned
//! satisfying-configuration counts, per-node propagation values, and
//! weighted counts against real-valued functions over variable subsets.
//!
//! All counts come from a single top-down propagation that starts with
//! `2^n` at the root and halves along every arc. Because the diagrams are
//! fully reduced, an arc may skip levels; a skipped free level passes its
//! value through unchanged and a skipped evidence level halves it, so the
//! 1-terminal still receives the number of consistent satisfying
//! configurations.

mod layout;
mod sweep;

use std::collections::{BTreeMap, HashMap};
use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

pub use layout::Layout;
pub(crate) use sweep::{propagate, Band};

use crate::robdd::{BddError, NodeRef, Robdd, VarOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountError {
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error("count {0} is not integral")]
    NotIntegral(f64),
    #[error("count {0} does not fit in 128 bits")]
    Overflow(f64),
    #[error("weight function over {0:?} has {1} entries, expected {2}")]
    TableSize(Vec<String>, usize, usize),
    #[error("weight function has a non-finite entry")]
    NonFinite,
    #[error("weight function repeats variable {0:?}")]
    RepeatedVariable(String),
    #[error("weight function variable {0:?} also carries evidence")]
    WeightOnEvidence(String),
}

/// Partial assignment of diagram variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Evidence {
    assignments: BTreeMap<String, bool>,
}

impl Evidence {
    pub fn new() -> Evidence {
        Evidence::default()
    }

    pub fn with(mut self, var: impl Into<String>, value: bool) -> Evidence {
        self.set(var, value);
        self
    }

    /// Sets `var`, replacing any earlier value.
    pub fn set(&mut self, var: impl Into<String>, value: bool) {
        self.assignments.insert(var.into(), value);
    }

    pub fn remove(&mut self, var: &str) -> Option<bool> {
        self.assignments.remove(var)
    }

    pub fn get(&self, var: &str) -> Option<bool> {
        self.assignments.get(var).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.assignments.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Unary level weights: `(1, 1)` everywhere, indicators on evidence.
    pub(crate) fn level_weights(&self, order: &VarOrder) -> Result<Vec<[f64; 2]>, BddError> {
        let mut w = vec![[1.0, 1.0]; order.len() + 1];
        for (var, value) in self.iter() {
            let l = order.require(var)?;
            w[l] = if value { [0.0, 1.0] } else { [1.0, 0.0] };
        }
        Ok(w)
    }
}

impl FromIterator<(String, bool)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (String, bool)>>(iter: I) -> Self {
        Evidence {
            assignments: iter.into_iter().collect(),
        }
    }
}

/// A real-valued function over the configurations of a set of variables.
///
/// `table[i]` is the value for the configuration in which `domain[d]`
/// takes bit `d` of `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction {
    domain: Vec<String>,
    table: Vec<f64>,
}

impl WeightFunction {
    pub fn new(domain: Vec<String>, table: Vec<f64>) -> Result<WeightFunction, CountError> {
        let expect = 1usize << domain.len();
        if table.len() != expect {
            return Err(CountError::TableSize(domain, table.len(), expect));
        }
        if table.iter().any(|x| !x.is_finite()) {
            return Err(CountError::NonFinite);
        }
        for (i, v) in domain.iter().enumerate() {
            if domain[..i].contains(v) {
                return Err(CountError::RepeatedVariable(v.clone()));
            }
        }
        Ok(WeightFunction { domain, table })
    }

    pub fn from_fn<F: Fn(&[bool]) -> f64>(domain: Vec<String>, f: F) -> Result<WeightFunction, CountError> {
        let k = domain.len();
        let table = (0..1usize << k)
            .map(|i| {
                let bits: Vec<bool> = (0..k).map(|d| i >> d & 1 == 1).collect();
                f(&bits)
            })
            .collect();
        WeightFunction::new(domain, table)
    }

    pub fn constant(value: f64) -> WeightFunction {
        WeightFunction {
            domain: Vec::new(),
            table: vec![value],
        }
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Value under an assignment that answers every domain variable.
    pub fn value<F: Fn(&str) -> bool>(&self, assignment: F) -> f64 {
        let idx = self
            .domain
            .iter()
            .enumerate()
            .fold(0usize, |acc, (d, v)| acc | (assignment(v) as usize) << d);
        self.table[idx]
    }

    /// Same function with the domain sorted by level.
    pub fn sorted_by(&self, order: &VarOrder) -> Result<WeightFunction, CountError> {
        let mut levels = Vec::with_capacity(self.domain.len());
        for v in &self.domain {
            levels.push((order.require(v)?, v.clone()));
        }
        levels.sort();
        let domain: Vec<String> = levels.into_iter().map(|(_, v)| v).collect();
        WeightFunction::from_fn(domain.clone(), |bits| {
            self.value(|name| bits[domain.iter().position(|d| d == name).unwrap()])
        })
    }

    /// Pointwise product over the union of both domains, sorted by level.
    pub fn product(&self, other: &WeightFunction, order: &VarOrder) -> Result<WeightFunction, CountError> {
        let mut domain: Vec<String> = self.domain.clone();
        for v in &other.domain {
            if !domain.contains(v) {
                domain.push(v.clone());
            }
        }
        let joint = WeightFunction::from_fn(domain.clone(), |bits| {
            let at = |name: &str| bits[domain.iter().position(|d| d == name).unwrap()];
            self.value(at) * other.value(at)
        })?;
        joint.sorted_by(order)
    }

    /// Fixes `var` to `value`, dropping it from the domain; unchanged if
    /// `var` is not in the domain.
    pub fn condition(&self, var: &str, value: bool) -> WeightFunction {
        let Some(pos) = self.domain.iter().position(|d| d == var) else {
            return self.clone();
        };
        let mut domain = self.domain.clone();
        domain.remove(pos);
        let table = (0..1usize << domain.len())
            .map(|i| {
                let low = i & ((1 << pos) - 1);
                let high = (i >> pos) << (pos + 1);
                self.table[high | (value as usize) << pos | low]
            })
            .collect();
        WeightFunction { domain, table }
    }

    fn band(&self, order: &VarOrder) -> Result<(usize, usize), CountError> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for v in &self.domain {
            let l = order.require(v)?;
            lo = lo.min(l);
            hi = hi.max(l);
        }
        Ok((lo, hi))
    }
}

/// Multiplies together functions whose level spans intersect until all
/// spans are pairwise disjoint; the result is sorted by span. Constant
/// functions (empty domain) are kept as they are, first.
pub fn merge_overlapping(fns: &[WeightFunction], order: &VarOrder) -> Result<Vec<WeightFunction>, CountError> {
    let mut constants = Vec::new();
    let mut pending: Vec<WeightFunction> = Vec::new();
    for f in fns {
        if f.domain.is_empty() {
            constants.push(f.clone());
        } else {
            pending.push(f.sorted_by(order)?);
        }
    }
    loop {
        let mut merged = false;
        'outer: for i in 0..pending.len() {
            for j in i + 1..pending.len() {
                let (a_lo, a_hi) = pending[i].band(order)?;
                let (b_lo, b_hi) = pending[j].band(order)?;
                if a_lo <= b_hi && b_lo <= a_hi {
                    let g = pending.remove(j);
                    let f = pending.remove(i);
                    pending.push(f.product(&g, order)?);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut keyed = Vec::with_capacity(pending.len());
    for f in pending {
        keyed.push((f.band(order)?, f));
    }
    keyed.sort_by_key(|(b, _)| *b);
    constants.extend(keyed.into_iter().map(|(_, f)| f));
    Ok(constants)
}

/// Tally of arithmetic operations performed by a propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounter {
    pub additions: u64,
    pub multiplications: u64,
    pub divisions: u64,
}

impl OpCounter {
    pub fn total(&self) -> u64 {
        self.additions + self.multiplications + self.divisions
    }

    pub fn reset(&mut self) {
        *self = OpCounter::default();
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: OpCounter) {
        self.additions += rhs.additions;
        self.multiplications += rhs.multiplications;
        self.divisions += rhs.divisions;
    }
}

/// Per-node propagation values `v(u)` for one evidence set.
#[derive(Clone, Debug)]
pub struct NodeValues {
    values: HashMap<NodeRef, f64>,
}

impl NodeValues {
    /// Value of `u`; nodes not reachable from the root (and `TERM0`) carry 0.
    pub fn v(&self, u: NodeRef) -> f64 {
        self.values.get(&u).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeRef, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }
}

/// Rounds a propagated count, rejecting values that are not integral.
pub fn to_count(v: f64) -> Result<u128, CountError> {
    let r = v.round();
    if (v - r).abs() >= 1e-6 {
        return Err(CountError::NotIntegral(v));
    }
    if !(0.0..3.4e38).contains(&r) {
        return Err(CountError::Overflow(v));
    }
    Ok(r as u128)
}

/// A diagram prepared for repeated counting queries.
#[derive(Clone, Debug)]
pub struct Counter<'a> {
    bdd: &'a Robdd,
    layout: Layout,
}

impl<'a> Counter<'a> {
    pub fn new(bdd: &'a Robdd) -> Counter<'a> {
        Counter {
            bdd,
            layout: Layout::new(bdd),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn n(&self) -> usize {
        self.bdd.n_vars()
    }

    /// Count of satisfying configurations consistent with `e`, as a real.
    pub fn mass(&self, e: &Evidence, ops: &mut OpCounter) -> Result<f64, CountError> {
        let w = e.level_weights(self.bdd.order())?;
        Ok(propagate(&self.layout, &w, &[], self.n() + 1, ops).total)
    }

    pub fn card_with_evidence(&self, e: &Evidence, ops: &mut OpCounter) -> Result<u128, CountError> {
        to_count(self.mass(e, ops)?)
    }

    pub fn node_values(&self, e: &Evidence, ops: &mut OpCounter) -> Result<NodeValues, CountError> {
        let w = e.level_weights(self.bdd.order())?;
        let p = propagate(&self.layout, &w, &[], self.n() + 1, ops);
        let values = (0..self.layout.len()).map(|i| (self.layout.node_ref(i), p.v[i])).collect();
        Ok(NodeValues { values })
    }

    /// `sum over w of prod_k f_k(w_k) * Card(w, e)` in one banded propagation.
    pub fn weighted_card(&self, fns: &[WeightFunction], e: &Evidence, ops: &mut OpCounter) -> Result<f64, CountError> {
        let order = self.bdd.order();
        let w = e.level_weights(order)?;
        let (scale, bands) = prepare_bands(fns, e, order)?;
        Ok(scale * propagate(&self.layout, &w, &bands, self.n() + 1, ops).total)
    }

    /// Same quantity by one conditioned count per configuration of the
    /// functions' joint domain.
    pub fn weighted_card_naive(
        &self,
        fns: &[WeightFunction],
        e: &Evidence,
        ops: &mut OpCounter,
    ) -> Result<f64, CountError> {
        let order = self.bdd.order();
        let mut vars: Vec<String> = Vec::new();
        for f in fns {
            for v in f.domain() {
                order.require(v)?;
                if e.get(v).is_some() {
                    return Err(CountError::WeightOnEvidence(v.clone()));
                }
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let mut total = 0.0;
        for i in 0..1usize << vars.len() {
            let at = |name: &str| i >> vars.iter().position(|v| v == name).unwrap() & 1 == 1;
            let weight: f64 = fns.iter().map(|f| f.value(at)).product();
            let mut cond = e.clone();
            for (d, v) in vars.iter().enumerate() {
                cond.set(v.clone(), i >> d & 1 == 1);
            }
            let m = self.mass(&cond, ops)?;
            ops.multiplications += 1;
            ops.additions += 1;
            total += weight * m;
        }
        Ok(total)
    }
}

/// Validates, merges and converts weight functions into propagation bands;
/// constant functions fold into the returned scale.
pub(crate) fn prepare_bands(
    fns: &[WeightFunction],
    e: &Evidence,
    order: &VarOrder,
) -> Result<(f64, Vec<Band>), CountError> {
    for f in fns {
        for v in f.domain() {
            order.require(v)?;
            if e.get(v).is_some() {
                return Err(CountError::WeightOnEvidence(v.clone()));
            }
        }
    }
    let mut scale = 1.0;
    let mut bands = Vec::new();
    for f in merge_overlapping(fns, order)? {
        if f.domain.is_empty() {
            scale *= f.table[0];
            continue;
        }
        let levels = f.domain.iter().map(|v| order.require(v)).collect::<Result<Vec<_>, _>>()?;
        bands.push(Band {
            levels,
            table: f.table,
        });
    }
    Ok((scale, bands))
}

/// Number of satisfying configurations over all variables of the order.
pub fn card(bdd: &Robdd) -> Result<u128, CountError> {
    card_with_evidence(bdd, &Evidence::new())
}

pub fn card_with_evidence(bdd: &Robdd, e: &Evidence) -> Result<u128, CountError> {
    Counter::new(bdd).card_with_evidence(e, &mut OpCounter::default())
}

pub fn node_values(bdd: &Robdd, e: &Evidence) -> Result<NodeValues, CountError> {
    Counter::new(bdd).node_values(e, &mut OpCounter::default())
}

pub fn weighted_card(bdd: &Robdd, fns: &[WeightFunction], e: &Evidence) -> Result<f64, CountError> {
    Counter::new(bdd).weighted_card(fns, e, &mut OpCounter::default())
}

#[cfg(test)]
mod tests;
