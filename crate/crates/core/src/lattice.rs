//! Depth-truncated ideal lattices and their diamonds.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::poset::{Elem, Ideal, Poset};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// An admissible edge `from -> from ∪ {elem}` between slice nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub elem: Elem,
    pub to: usize,
}

/// A rank-two Boolean interval `(I; u, v)` with `u <τ v`, both admissible
/// at `I` and incomparable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Diamond {
    pub base: Ideal,
    pub u: Elem,
    pub v: Elem,
}

impl Diamond {
    /// Orders the pair so that `u <τ v`.
    pub fn new(base: Ideal, a: Elem, b: Elem) -> Self {
        Diamond {
            base,
            u: a.min(b),
            v: a.max(b),
        }
    }

    pub fn top(&self) -> Ideal {
        self.base.with(self.u).with(self.v)
    }
}

/// The ideals reachable from `base` by at most `depth` admissible additions,
/// with all admissible edges between them.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSlice {
    poset: Poset,
    base: Ideal,
    depth: usize,
    nodes: Vec<Ideal>,
    index: HashMap<Ideal, usize>,
    edge_start: Vec<usize>,
    edges: Vec<Edge>,
}

pub fn build_lattice(p: &Poset, base: Ideal, depth: usize) -> Result<LatticeSlice> {
    LatticeSlice::build(p, base, depth, DEFAULT_NODE_CAP)
}

impl LatticeSlice {
    /// Breadth-first expansion by cardinality. Fails without a partial
    /// result once more than `node_cap` nodes would be stored.
    pub fn build(p: &Poset, base: Ideal, depth: usize, node_cap: usize) -> Result<Self> {
        p.check_ideal(base)?;
        Self::expand(p, base, depth, p.full(), node_cap)
    }

    /// The full interval `[lo, hi]` of the ideal lattice.
    pub fn interval(p: &Poset, lo: Ideal, hi: Ideal) -> Result<Self> {
        p.check_ideal(lo)?;
        p.check_ideal(hi)?;
        if !lo.is_subset(hi) {
            return Err(Error::NotSubset {
                lo: p.render(lo),
                hi: p.render(hi),
            });
        }
        Self::expand(p, lo, hi.difference(lo).len(), hi, DEFAULT_NODE_CAP)
    }

    fn expand(p: &Poset, base: Ideal, depth: usize, within: Ideal, cap: usize) -> Result<Self> {
        let mut nodes = vec![base];
        let mut index = HashMap::from([(base, 0usize)]);
        let mut edges = Vec::new();
        let mut edge_start = Vec::new();
        let mut layer = 0..1;
        for d in 0..depth {
            let next_start = nodes.len();
            for k in layer.clone() {
                edge_start.push(edges.len());
                let node = nodes[k];
                for a in p.admissible_unchecked(node) {
                    if !within.contains(a) {
                        continue;
                    }
                    let target = node.with(a);
                    let to = match index.get(&target) {
                        Some(&t) => t,
                        None => {
                            if nodes.len() >= cap {
                                return Err(Error::NodeCap { cap, depth: d + 1 });
                            }
                            nodes.push(target);
                            index.insert(target, nodes.len() - 1);
                            nodes.len() - 1
                        }
                    };
                    edges.push(Edge { from: k, elem: a, to });
                }
            }
            layer = next_start..nodes.len();
            if layer.is_empty() {
                break;
            }
        }
        edge_start.resize(nodes.len() + 1, edges.len());
        Ok(LatticeSlice {
            poset: p.clone(),
            base,
            depth,
            nodes,
            index,
            edge_start,
            edges,
        })
    }

    /// A slice over an arbitrary family of ideals containing `base`, with
    /// every admissible edge between members. Members need not be reachable
    /// from each other; [`crate::integrability::reference_tree`] rejects
    /// families that miss a parent.
    pub fn from_ideals(p: &Poset, base: Ideal, ideals: &[Ideal]) -> Result<Self> {
        p.check_ideal(base)?;
        let mut nodes: Vec<Ideal> = vec![base];
        for &i in ideals {
            p.check_ideal(i)?;
            if !base.is_subset(i) {
                return Err(Error::NotSubset {
                    lo: p.render(base),
                    hi: p.render(i),
                });
            }
            if !nodes.contains(&i) {
                nodes.push(i);
            }
        }
        nodes[1..].sort_by_key(|i| (i.len(), *i));
        let index: HashMap<Ideal, usize> =
            nodes.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut edges = Vec::new();
        let mut edge_start = Vec::with_capacity(nodes.len() + 1);
        for (k, &node) in nodes.iter().enumerate() {
            edge_start.push(edges.len());
            for a in p.admissible_unchecked(node) {
                if let Some(&to) = index.get(&node.with(a)) {
                    edges.push(Edge { from: k, elem: a, to });
                }
            }
        }
        edge_start.push(edges.len());
        let depth = nodes.iter().map(|i| i.len() - base.len()).max().unwrap_or(0);
        Ok(LatticeSlice {
            poset: p.clone(),
            base,
            depth,
            nodes,
            index,
            edge_start,
            edges,
        })
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn base(&self) -> Ideal {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Nodes in breadth-first order; index 0 is the base.
    pub fn nodes(&self) -> &[Ideal] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, i: Ideal) -> Option<usize> {
        self.index.get(&i).copied()
    }

    pub fn contains(&self, i: Ideal) -> bool {
        self.index.contains_key(&i)
    }

    pub fn require(&self, i: Ideal) -> Result<usize> {
        self.node_index(i)
            .ok_or_else(|| Error::NotInSlice(self.poset.render(i)))
    }

    /// Edge offsets leaving node `k`, sorted by element.
    pub fn out_edges(&self, k: usize) -> &[Edge] {
        &self.edges[self.edge_start[k]..self.edge_start[k + 1]]
    }

    pub fn edge_index(&self, from: Ideal, a: Elem) -> Option<usize> {
        let k = self.node_index(from)?;
        let range = self.edge_start[k]..self.edge_start[k + 1];
        self.edges[range.clone()]
            .binary_search_by_key(&a, |e| e.elem)
            .ok()
            .map(|off| range.start + off)
    }

    /// `|I| - |base|`.
    pub fn node_depth(&self, i: Ideal) -> usize {
        i.len() - self.base.len()
    }

    /// The union of all nodes, if it is itself a node. In that case the slice
    /// is exactly the interval `[base, top]`.
    pub fn top(&self) -> Option<Ideal> {
        let top = self
            .nodes
            .iter()
            .fold(Ideal::EMPTY, |acc, &i| acc.union(i));
        self.contains(top).then_some(top)
    }

    /// Whether the slice contains every ideal of `[base, top]` for its top.
    pub fn is_full_interval(&self) -> bool {
        match self.top() {
            Some(top) => {
                // Interval sizes are compared against a fresh expansion.
                match LatticeSlice::interval(&self.poset, self.base, top) {
                    Ok(full) => full.nodes.len() == self.nodes.len(),
                    Err(_) => false,
                }
            }
            None => false,
        }
    }

    pub fn render_edge(&self, i: Ideal, a: Elem) -> String {
        format!("{}, {}", self.poset.render(i), self.poset.id(a))
    }

    pub fn render_diamond(&self, d: &Diamond) -> String {
        format!(
            "{}; {}, {}",
            self.poset.render(d.base),
            self.poset.id(d.u),
            self.poset.id(d.v)
        )
    }

    pub fn is_diamond(&self, d: &Diamond) -> bool {
        d.u < d.v
            && self.contains(d.base)
            && self.contains(d.top())
            && self.poset.is_admissible(d.base, d.u)
            && self.poset.is_admissible(d.base, d.v)
            && !self.poset.comparable(d.u, d.v)
    }
}

/// All diamonds whose four corners lie in the slice, ordered by base node
/// index, then `u`, then `v`.
pub fn enumerate_diamonds(l: &LatticeSlice) -> Vec<Diamond> {
    let p = l.poset();
    let mut out = Vec::new();
    for (k, &base) in l.nodes().iter().enumerate() {
        let adds = l.out_edges(k);
        for (x, eu) in adds.iter().enumerate() {
            for ev in &adds[x + 1..] {
                let d = Diamond {
                    base,
                    u: eu.elem,
                    v: ev.elem,
                };
                if !p.comparable(d.u, d.v) && l.contains(d.top()) {
                    out.push(d);
                }
            }
        }
    }
    out
}
