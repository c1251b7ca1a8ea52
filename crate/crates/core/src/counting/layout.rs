use std::collections::HashMap;

use crate::robdd::{NodeRef, Robdd, TERM0, TERM1};

/// Reachable part of a diagram flattened for propagation.
///
/// Nodes are sorted by level (a topological order), `TERM1` last; `TERM0`
/// is dropped since nothing it receives can reach a satisfying
/// configuration. Parent lists are materialized once here.
#[derive(Clone, Debug)]
pub struct Layout {
    n_vars: usize,
    refs: Vec<NodeRef>,
    level: Vec<usize>,
    child: Vec<[Option<usize>; 2]>,
    parents: Vec<Vec<(usize, bool)>>,
    root: Option<usize>,
    term1: Option<usize>,
    index: HashMap<NodeRef, usize>,
}

impl Layout {
    pub fn new(bdd: &Robdd) -> Layout {
        Layout::rooted_at(bdd, bdd.root())
    }

    pub fn rooted_at(bdd: &Robdd, root: NodeRef) -> Layout {
        let refs: Vec<NodeRef> = bdd.reachable(root).into_iter().filter(|&u| u != TERM0).collect();
        let index: HashMap<NodeRef, usize> = refs.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let level = refs.iter().map(|&u| bdd.level(u)).collect();
        let mut child = vec![[None, None]; refs.len()];
        let mut parents = vec![Vec::new(); refs.len()];
        for (i, &u) in refs.iter().enumerate() {
            if let Some(n) = bdd.node(u) {
                for (bit, c) in [(false, n.lo), (true, n.hi)] {
                    if let Some(&ci) = index.get(&c) {
                        child[i][bit as usize] = Some(ci);
                        parents[ci].push((i, bit));
                    }
                }
            }
        }
        Layout {
            n_vars: bdd.n_vars(),
            root: index.get(&root).copied(),
            term1: index.get(&TERM1).copied(),
            refs,
            level,
            child,
            parents,
            index,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of nodes excluding the 0-terminal.
    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn node_ref(&self, i: usize) -> NodeRef {
        self.refs[i]
    }

    pub fn index_of(&self, u: NodeRef) -> Option<usize> {
        self.index.get(&u).copied()
    }

    pub fn level(&self, i: usize) -> usize {
        self.level[i]
    }

    pub fn child(&self, i: usize, bit: bool) -> Option<usize> {
        self.child[i][bit as usize]
    }

    pub fn parents(&self, i: usize) -> &[(usize, bool)] {
        &self.parents[i]
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn term1(&self) -> Option<usize> {
        self.term1
    }

    /// First node index whose level is at least `level`.
    pub fn first_at_or_below(&self, level: usize) -> usize {
        self.level.partition_point(|&l| l < level)
    }
}
