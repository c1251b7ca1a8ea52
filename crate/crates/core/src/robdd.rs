//! Reduced ordered binary decision diagrams over an explicit variable order.
//!
//! A [`Robdd`] owns its node table, unique table and operation caches.
//! Nodes are hash-consed through [`Robdd::mk`], so two handles denote the
//! same Boolean function iff they are equal. Handles are tagged with the
//! identity of the diagram that issued them; mixing handles from different
//! diagrams is reported as an error rather than silently misread.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::formula::Formula;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("variable {0:?} is not registered in the variable order")]
    UnknownVariable(String),
    #[error("duplicate variable {0:?} in variable order")]
    DuplicateVariable(String),
    #[error("level {level} out of range 1..={n}")]
    LevelOutOfRange { level: usize, n: usize },
    #[error("node handle does not belong to this diagram")]
    ForeignHandle,
    #[error("node handle is out of range")]
    InvalidHandle,
    #[error("ordering violated: level {level} must be above child level {child}")]
    OrderViolation { level: usize, child: usize },
}

/// Bijection between variable names and levels `1..=n`; level 1 is tested first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VarOrder {
    vars: Vec<String>,
    index: HashMap<String, usize>,
}

impl VarOrder {
    pub fn new<I, S>(names: I) -> Result<VarOrder, BddError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut order = VarOrder::default();
        for name in names {
            let name = name.into();
            if order.index.contains_key(&name) {
                return Err(BddError::DuplicateVariable(name));
            }
            order.index.insert(name.clone(), order.vars.len() + 1);
            order.vars.push(name);
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn level(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, BddError> {
        self.level(name).ok_or_else(|| BddError::UnknownVariable(name.to_string()))
    }

    /// Name at `level` (1-based).
    pub fn name(&self, level: usize) -> &str {
        &self.vars[level - 1]
    }

    pub fn names(&self) -> &[String] {
        &self.vars
    }
}

static NEXT_DIAGRAM_ID: AtomicU32 = AtomicU32::new(1);

/// Handle to a node of a particular [`Robdd`].
///
/// Terminals are shared by every diagram; inner nodes carry the id of the
/// issuing diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    diagram: u32,
    index: u32,
}

pub const TERM0: NodeRef = NodeRef { diagram: 0, index: 0 };
pub const TERM1: NodeRef = NodeRef { diagram: 0, index: 1 };

impl NodeRef {
    pub fn is_terminal(self) -> bool {
        self.diagram == 0
    }

    pub fn constant(value: bool) -> NodeRef {
        if value {
            TERM1
        } else {
            TERM0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub level: usize,
    pub lo: NodeRef,
    pub hi: NodeRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

impl BinOp {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Xor => a ^ b,
            BinOp::Implies => !a || b,
            BinOp::Iff => a == b,
        }
    }

    fn commutative(self) -> bool {
        !matches!(self, BinOp::Implies)
    }
}

#[derive(Clone, Debug)]
pub struct Robdd {
    id: u32,
    order: VarOrder,
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeRef>,
    apply_cache: HashMap<(BinOp, NodeRef, NodeRef), NodeRef>,
    not_cache: HashMap<NodeRef, NodeRef>,
    root: NodeRef,
}

impl Robdd {
    /// An empty diagram over `order`; the root starts as `TERM1`.
    pub fn new(order: VarOrder) -> Robdd {
        Robdd {
            id: NEXT_DIAGRAM_ID.fetch_add(1, Ordering::Relaxed),
            order,
            nodes: Vec::new(),
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
            root: TERM1,
        }
    }

    /// Canonical diagram of `formula` under `order`.
    pub fn build(formula: &Formula, order: VarOrder) -> Result<Robdd, BddError> {
        let mut bdd = Robdd::new(order);
        let root = bdd.build_formula(formula)?;
        bdd.root = root;
        Ok(bdd)
    }

    pub fn order(&self) -> &VarOrder {
        &self.order
    }

    pub fn n_vars(&self) -> usize {
        self.order.len()
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    pub fn set_root(&mut self, root: NodeRef) -> Result<(), BddError> {
        self.check(root)?;
        self.root = root;
        Ok(())
    }

    fn check(&self, f: NodeRef) -> Result<(), BddError> {
        if f.is_terminal() {
            if f.index > 1 {
                return Err(BddError::InvalidHandle);
            }
            return Ok(());
        }
        if f.diagram != self.id {
            return Err(BddError::ForeignHandle);
        }
        if f.index as usize >= self.nodes.len() {
            return Err(BddError::InvalidHandle);
        }
        Ok(())
    }

    /// Level of `f`; terminals sit at `n + 1`.
    pub fn level(&self, f: NodeRef) -> usize {
        if f.is_terminal() {
            self.order.len() + 1
        } else {
            self.nodes[f.index as usize].level
        }
    }

    /// The stored node behind an inner handle.
    pub fn node(&self, f: NodeRef) -> Option<Node> {
        if f.is_terminal() {
            None
        } else {
            self.nodes.get(f.index as usize).copied()
        }
    }

    /// Child of `f` along the `bit` arc.
    pub fn child(&self, f: NodeRef, bit: bool) -> Option<NodeRef> {
        self.node(f).map(|n| if bit { n.hi } else { n.lo })
    }

    /// Number of inner nodes ever created (including unreachable ones).
    pub fn table_size(&self) -> usize {
        self.nodes.len()
    }

    pub fn mk(&mut self, level: usize, lo: NodeRef, hi: NodeRef) -> Result<NodeRef, BddError> {
        let n = self.order.len();
        if level == 0 || level > n {
            return Err(BddError::LevelOutOfRange { level, n });
        }
        self.check(lo)?;
        self.check(hi)?;
        for child in [lo, hi] {
            let cl = self.level(child);
            if cl <= level {
                return Err(BddError::OrderViolation { level, child: cl });
            }
        }
        Ok(self.mk_unchecked(level, lo, hi))
    }

    fn mk_unchecked(&mut self, level: usize, lo: NodeRef, hi: NodeRef) -> NodeRef {
        if lo == hi {
            return lo;
        }
        let node = Node { level, lo, hi };
        if let Some(&r) = self.unique.get(&node) {
            return r;
        }
        let r = NodeRef {
            diagram: self.id,
            index: self.nodes.len() as u32,
        };
        self.nodes.push(node);
        self.unique.insert(node, r);
        r
    }

    pub fn var(&mut self, name: &str) -> Result<NodeRef, BddError> {
        let level = self.order.require(name)?;
        Ok(self.mk_unchecked(level, TERM0, TERM1))
    }

    pub fn not(&mut self, f: NodeRef) -> Result<NodeRef, BddError> {
        self.check(f)?;
        Ok(self.not_rec(f))
    }

    fn not_rec(&mut self, f: NodeRef) -> NodeRef {
        if f == TERM0 {
            return TERM1;
        }
        if f == TERM1 {
            return TERM0;
        }
        if let Some(&r) = self.not_cache.get(&f) {
            return r;
        }
        let n = self.nodes[f.index as usize];
        let lo = self.not_rec(n.lo);
        let hi = self.not_rec(n.hi);
        let r = self.mk_unchecked(n.level, lo, hi);
        self.not_cache.insert(f, r);
        r
    }

    pub fn apply(&mut self, op: BinOp, f: NodeRef, g: NodeRef) -> Result<NodeRef, BddError> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.apply_rec(op, f, g))
    }

    fn apply_rec(&mut self, op: BinOp, f: NodeRef, g: NodeRef) -> NodeRef {
        if f.is_terminal() && g.is_terminal() {
            return NodeRef::constant(op.eval(f == TERM1, g == TERM1));
        }
        // cheap identities
        match op {
            BinOp::And => {
                if f == TERM0 || g == TERM0 {
                    return TERM0;
                }
                if f == TERM1 || f == g {
                    return g;
                }
                if g == TERM1 {
                    return f;
                }
            }
            BinOp::Or => {
                if f == TERM1 || g == TERM1 {
                    return TERM1;
                }
                if f == TERM0 || f == g {
                    return g;
                }
                if g == TERM0 {
                    return f;
                }
            }
            BinOp::Xor => {
                if f == g {
                    return TERM0;
                }
                if f == TERM0 {
                    return g;
                }
                if g == TERM0 {
                    return f;
                }
            }
            BinOp::Implies => {
                if f == TERM0 || g == TERM1 || f == g {
                    return TERM1;
                }
                if f == TERM1 {
                    return g;
                }
            }
            BinOp::Iff => {
                if f == g {
                    return TERM1;
                }
                if f == TERM1 {
                    return g;
                }
                if g == TERM1 {
                    return f;
                }
            }
        }
        let key = if op.commutative() && g < f { (op, g, f) } else { (op, f, g) };
        if let Some(&r) = self.apply_cache.get(&key) {
            return r;
        }
        let lf = self.level(f);
        let lg = self.level(g);
        let top = lf.min(lg);
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let lo = self.apply_rec(op, f0, g0);
        let hi = self.apply_rec(op, f1, g1);
        let r = self.mk_unchecked(top, lo, hi);
        self.apply_cache.insert(key, r);
        r
    }

    fn cofactors(&self, f: NodeRef, level: usize) -> (NodeRef, NodeRef) {
        match self.node(f) {
            Some(n) if n.level == level => (n.lo, n.hi),
            _ => (f, f),
        }
    }

    /// `if c then t else e`.
    pub fn ite(&mut self, c: NodeRef, t: NodeRef, e: NodeRef) -> Result<NodeRef, BddError> {
        let ct = self.apply(BinOp::And, c, t)?;
        let nc = self.not(c)?;
        let ne = self.apply(BinOp::And, nc, e)?;
        self.apply(BinOp::Or, ct, ne)
    }

    /// Builds `formula` into this diagram without touching the root.
    pub fn build_formula(&mut self, formula: &Formula) -> Result<NodeRef, BddError> {
        Ok(match formula {
            Formula::Const(b) => NodeRef::constant(*b),
            Formula::Var(v) => self.var(v)?,
            Formula::Not(a) => {
                let a = self.build_formula(a)?;
                self.not_rec(a)
            }
            Formula::And(xs) => self.fold(xs, BinOp::And, TERM1)?,
            Formula::Or(xs) => self.fold(xs, BinOp::Or, TERM0)?,
            Formula::Xor(xs) => self.fold(xs, BinOp::Xor, TERM0)?,
            Formula::Implies(a, b) => {
                let a = self.build_formula(a)?;
                let b = self.build_formula(b)?;
                self.apply_rec(BinOp::Implies, a, b)
            }
            Formula::Iff(a, b) => {
                let a = self.build_formula(a)?;
                let b = self.build_formula(b)?;
                self.apply_rec(BinOp::Iff, a, b)
            }
            Formula::Ite(c, t, e) => {
                let c = self.build_formula(c)?;
                let t = self.build_formula(t)?;
                let e = self.build_formula(e)?;
                self.ite(c, t, e)?
            }
            Formula::Count { min, max, operands } => {
                let ops = operands
                    .iter()
                    .map(|o| self.build_formula(o))
                    .collect::<Result<Vec<_>, _>>()?;
                self.threshold(&ops, *min, *max)?
            }
        })
    }

    fn fold(&mut self, xs: &[Formula], op: BinOp, unit: NodeRef) -> Result<NodeRef, BddError> {
        let mut acc = unit;
        for x in xs {
            let r = self.build_formula(x)?;
            acc = self.apply_rec(op, acc, r);
        }
        Ok(acc)
    }

    /// "Between `min` and `max` of `operands` hold", built as a layered
    /// counter: `exact[k]` is the function "exactly k of the operands seen
    /// so far hold", capped at `max`.
    pub fn threshold(&mut self, operands: &[NodeRef], min: usize, max: usize) -> Result<NodeRef, BddError> {
        for &o in operands {
            self.check(o)?;
        }
        if min > max || min > operands.len() {
            return Ok(TERM0);
        }
        let cap = max.min(operands.len());
        let mut exact = vec![TERM0; cap + 1];
        exact[0] = TERM1;
        // deepest operands first keeps intermediate diagrams small when the
        // operands are plain variables
        let mut sorted: Vec<NodeRef> = operands.to_vec();
        sorted.sort_by_key(|&o| std::cmp::Reverse(self.level(o)));
        for o in sorted {
            let mut next = vec![TERM0; cap + 1];
            for k in 0..=cap {
                let stay = exact[k];
                let step = if k > 0 { exact[k - 1] } else { TERM0 };
                next[k] = self.ite(o, step, stay)?;
            }
            exact = next;
        }
        let mut acc = TERM0;
        for &e in &exact[min..=cap] {
            acc = self.apply_rec(BinOp::Or, acc, e);
        }
        Ok(acc)
    }

    /// `f` with variable `var` fixed to `value`.
    pub fn restrict(&mut self, f: NodeRef, var: &str, value: bool) -> Result<NodeRef, BddError> {
        self.check(f)?;
        let level = self.order.require(var)?;
        let mut memo = HashMap::new();
        Ok(self.restrict_rec(f, level, value, &mut memo))
    }

    fn restrict_rec(&mut self, f: NodeRef, level: usize, value: bool, memo: &mut HashMap<NodeRef, NodeRef>) -> NodeRef {
        let Some(n) = self.node(f) else { return f };
        if n.level > level {
            return f;
        }
        if n.level == level {
            return if value { n.hi } else { n.lo };
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let lo = self.restrict_rec(n.lo, level, value, memo);
        let hi = self.restrict_rec(n.hi, level, value, memo);
        let r = self.mk_unchecked(n.level, lo, hi);
        memo.insert(f, r);
        r
    }

    /// Evaluates `f`; `assignment[level - 1]` is the value of the variable at `level`.
    pub fn eval(&self, f: NodeRef, assignment: &[bool]) -> bool {
        let mut cur = f;
        while let Some(n) = self.node(cur) {
            cur = if assignment[n.level - 1] { n.hi } else { n.lo };
        }
        cur == TERM1
    }

    /// Nodes reachable from `f`, inner nodes first in level order, then terminals.
    pub fn reachable(&self, f: NodeRef) -> Vec<NodeRef> {
        let mut seen = HashSet::new();
        let mut stack = vec![f];
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            if !seen.insert(u) {
                continue;
            }
            out.push(u);
            if let Some(n) = self.node(u) {
                stack.push(n.hi);
                stack.push(n.lo);
            }
        }
        out.sort_by_key(|&u| (self.level(u), u.is_terminal(), u.index));
        out
    }

    /// Inner nodes plus terminals reachable from the root.
    pub fn node_count(&self) -> usize {
        self.reachable(self.root).len()
    }

    /// Reachable nodes testing the variable at `level`.
    pub fn layer(&self, level: usize) -> Vec<NodeRef> {
        self.reachable(self.root)
            .into_iter()
            .filter(|&u| !u.is_terminal() && self.level(u) == level)
            .collect()
    }

    /// Full scan of the node table for ordering and reduction violations.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.lo == n.hi {
                return Err(format!("node {i} has lo == hi"));
            }
            if !seen.insert(*n) {
                return Err(format!("node {i} duplicates an earlier node"));
            }
            for c in [n.lo, n.hi] {
                if self.check(c).is_err() {
                    return Err(format!("node {i} has an invalid child"));
                }
                if self.level(c) <= n.level {
                    return Err(format!("node {i} at level {} has child at level {}", n.level, self.level(c)));
                }
            }
        }
        Ok(())
    }

    /// Graphviz rendering of the diagram under the root; 0-arcs dashed, 1-arcs solid.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph robdd {\n");
        let nodes = self.reachable(self.root);
        let id = |u: NodeRef| -> String {
            if u == TERM0 {
                "t0".into()
            } else if u == TERM1 {
                "t1".into()
            } else {
                format!("n{}", u.index)
            }
        };
        for &u in &nodes {
            match self.node(u) {
                None => {
                    let label = if u == TERM1 { "1" } else { "0" };
                    let _ = writeln!(out, "  {} [shape=box,label=\"{label}\"];", id(u));
                }
                Some(n) => {
                    let _ = writeln!(out, "  {} [label=\"{}\"];", id(u), self.order.name(n.level));
                }
            }
        }
        let mut level = 0;
        for &u in &nodes {
            if let Some(n) = self.node(u) {
                if n.level != level {
                    level = n.level;
                    let same: Vec<String> = nodes
                        .iter()
                        .filter(|&&v| !v.is_terminal() && self.level(v) == level)
                        .map(|&v| id(v))
                        .collect();
                    let _ = writeln!(out, "  {{ rank=same; {} }}", same.join("; "));
                }
                let _ = writeln!(out, "  {} -> {} [style=dashed];", id(u), id(n.lo));
                let _ = writeln!(out, "  {} -> {};", id(u), id(n.hi));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(names: &[&str]) -> VarOrder {
        VarOrder::new(names.iter().copied()).unwrap()
    }

    fn build(text: &str, names: &[&str]) -> Robdd {
        Robdd::build(&Formula::parse(text).unwrap(), order(names)).unwrap()
    }

    fn exactly_one_of_three() -> Robdd {
        build("count(1, 1; A1, A2, A3)", &["A1", "A2", "A3"])
    }

    #[test]
    fn var_order_is_a_bijection() {
        let o = order(&["x", "y", "z"]);
        assert_eq!(o.level("y"), Some(2));
        assert_eq!(o.name(3), "z");
        assert_eq!(VarOrder::new(["a", "a"]), Err(BddError::DuplicateVariable("a".into())));
    }

    #[test]
    fn mk_eliminates_redundant_tests() {
        let mut b = Robdd::new(order(&["x"]));
        assert_eq!(b.mk(1, TERM1, TERM1).unwrap(), TERM1);
    }

    #[test]
    fn mk_hash_conses() {
        let mut b = Robdd::new(order(&["x"]));
        let u = b.mk(1, TERM0, TERM1).unwrap();
        let v = b.mk(1, TERM0, TERM1).unwrap();
        assert_eq!(u, v);
        assert_eq!(b.table_size(), 1);
    }

    #[test]
    fn mk_rejects_bad_input() {
        let mut b = Robdd::new(order(&["x", "y"]));
        assert_eq!(b.mk(0, TERM0, TERM1), Err(BddError::LevelOutOfRange { level: 0, n: 2 }));
        assert_eq!(b.mk(3, TERM0, TERM1), Err(BddError::LevelOutOfRange { level: 3, n: 2 }));
        let y = b.mk(2, TERM0, TERM1).unwrap();
        assert_eq!(b.mk(2, TERM0, y), Err(BddError::OrderViolation { level: 2, child: 2 }));
        let mut other = Robdd::new(order(&["x", "y"]));
        assert_eq!(other.mk(1, TERM0, y), Err(BddError::ForeignHandle));
        assert_eq!(other.apply(BinOp::And, y, TERM1), Err(BddError::ForeignHandle));
    }

    #[test]
    fn apply_basic_identities() {
        let mut b = Robdd::new(order(&["x", "y"]));
        let x = b.var("x").unwrap();
        let nx = b.not(x).unwrap();
        assert_eq!(b.apply(BinOp::And, x, nx).unwrap(), TERM0);
        let f = b.build_formula(&Formula::parse("x & !y").unwrap()).unwrap();
        assert_eq!(b.apply(BinOp::Or, f, TERM0).unwrap(), f);
    }

    #[test]
    fn xor_of_two_variables() {
        let b = build("A1 ^ A2", &["A1", "A2"]);
        assert_eq!(b.reachable(b.root()).iter().filter(|u| !u.is_terminal()).count(), 3);
        let sat = (0..4u32)
            .filter(|m| b.eval(b.root(), &[m & 1 != 0, m & 2 != 0]))
            .count();
        assert_eq!(sat, 2);
    }

    #[test]
    fn constants_and_tautologies() {
        assert_eq!(build("1", &["x"]).root(), TERM1);
        assert_eq!(build("(X => Y) <=> (!X | Y)", &["X", "Y"]).root(), TERM1);
        assert_eq!(build("X & !X", &["X"]).root(), TERM0);
    }

    #[test]
    fn exactly_one_shape() {
        let b = exactly_one_of_three();
        let root = b.node(b.root()).unwrap();
        assert_eq!(root.level, 1);
        assert_eq!(b.layer(1).len(), 1);
        assert_eq!(b.layer(2).len(), 2);
        assert_eq!(b.layer(3).len(), 2);
        // five inner nodes plus both terminals
        assert_eq!(b.node_count(), 7);
        let inner: usize = (1..=3).map(|l| b.layer(l).len()).sum();
        assert_eq!(inner + 2, b.node_count());
    }

    #[test]
    fn restrict_examples() {
        let mut b = build("X", &["X"]);
        let r = b.restrict(b.root(), "X", true).unwrap();
        assert_eq!(r, TERM1);

        let mut b = exactly_one_of_three();
        let r = b.restrict(b.root(), "A1", true).unwrap();
        let expect = b.build_formula(&Formula::parse("!A2 & !A3").unwrap()).unwrap();
        assert_eq!(r, expect);

        let mut b = build("x & y", &["x", "y", "z"]);
        let root = b.root();
        assert_eq!(b.restrict(root, "z", false).unwrap(), root);
        assert!(matches!(b.restrict(root, "w", false), Err(BddError::UnknownVariable(_))));
    }

    #[test]
    fn unregistered_variable_is_an_error() {
        let f = Formula::parse("a & b").unwrap();
        assert_eq!(
            Robdd::build(&f, order(&["a"])).unwrap_err(),
            BddError::UnknownVariable("b".into())
        );
    }

    #[test]
    fn dot_marks_arcs() {
        let b = build("a & b", &["a", "b"]);
        let dot = b.to_dot();
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("label=\"a\""));
        assert!(dot.starts_with("digraph"));
    }

    #[test]
    fn threshold_matches_enumeration() {
        let names = ["a", "b", "c", "d", "e"];
        for min in 0..=5 {
            for max in min..=5 {
                let mut b = Robdd::new(order(&names));
                let vars: Vec<_> = names.iter().map(|n| b.var(n).unwrap()).collect();
                let t = b.threshold(&vars, min, max).unwrap();
                for m in 0..32u32 {
                    let asg: Vec<bool> = (0..5).map(|i| m >> i & 1 == 1).collect();
                    let k = m.count_ones() as usize;
                    assert_eq!(b.eval(t, &asg), min <= k && k <= max);
                }
            }
        }
    }

    fn truth_table(f: &Formula, names: &[&str]) -> Vec<bool> {
        (0..1u32 << names.len())
            .map(|m| {
                f.eval(&|v: &str| {
                    let i = names.iter().position(|n| *n == v).unwrap();
                    m >> i & 1 == 1
                })
            })
            .collect()
    }

    proptest! {
        #[test]
        fn canonicity(f in crate::formula::tests::arb_formula(), g in crate::formula::tests::arb_formula()) {
            let names = ["a", "b", "c", "d"];
            let mut b = Robdd::new(order(&names));
            let rf = b.build_formula(&f).unwrap();
            let rg = b.build_formula(&g).unwrap();
            let same = truth_table(&f, &names) == truth_table(&g, &names);
            prop_assert_eq!(same, rf == rg);
            prop_assert!(b.check_invariants().is_ok());
            for m in 0..16u32 {
                let asg: Vec<bool> = (0..4).map(|i| m >> i & 1 == 1).collect();
                prop_assert_eq!(b.eval(rf, &asg), truth_table(&f, &names)[m as usize]);
            }
        }

        #[test]
        fn restrict_matches_substitution(f in crate::formula::tests::arb_formula(), var in 0usize..4, value: bool) {
            let names = ["a", "b", "c", "d"];
            let mut b = Robdd::new(order(&names));
            let rf = b.build_formula(&f).unwrap();
            let restricted = b.restrict(rf, names[var], value).unwrap();
            let substituted = substitute(&f, names[var], value);
            let rs = b.build_formula(&substituted).unwrap();
            prop_assert_eq!(restricted, rs);
            let lvl = var + 1;
            prop_assert!(b.reachable(restricted).iter().all(|&u| b.level(u) != lvl));
        }
    }

    fn substitute(f: &Formula, var: &str, value: bool) -> Formula {
        let s = |x: &Formula| substitute(x, var, value);
        match f {
            Formula::Var(v) if v == var => Formula::Const(value),
            Formula::Const(_) | Formula::Var(_) => f.clone(),
            Formula::Not(a) => Formula::not(s(a)),
            Formula::And(xs) => Formula::And(xs.iter().map(s).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(s).collect()),
            Formula::Xor(xs) => Formula::Xor(xs.iter().map(s).collect()),
            Formula::Implies(a, b) => Formula::implies(s(a), s(b)),
            Formula::Iff(a, b) => Formula::iff(s(a), s(b)),
            Formula::Ite(c, t, e) => Formula::ite(s(c), s(t), s(e)),
            Formula::Count { min, max, operands } => Formula::Count {
                min: *min,
                max: *max,
                operands: operands.iter().map(s).collect(),
            },
        }
    }
}
