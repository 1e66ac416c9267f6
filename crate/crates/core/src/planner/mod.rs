//! Exact planning on the truncated ideal lattice.
//!
//! Both planners break ties toward the lexicographically smallest addition
//! sequence in τ order, where stopping ranks before any further addition.

mod policy;

pub use policy::*;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_diamonds, LatticeSlice};
use crate::path::{enumerate_paths, inversions, Path};
use crate::poset::{Elem, Ideal};
use crate::valuation::{curvature, path_value, EdgeField};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 1_000_000;

/// Which paths compete.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PlanMode {
    /// Every path of length at most the slice depth, including the empty
    /// path (value 0).
    #[default]
    Stop,
    /// Only paths from the base to the given ideal.
    Endpoint(Ideal),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub best_path: Path,
    pub best_value: f64,
    /// `U(K)`: best continuation value from each node, at the node's depth.
    /// Nodes that cannot reach a fixed endpoint are absent.
    pub value_table: IndexMap<Ideal, f64>,
}

pub fn dp_plan(g: &EdgeField, l: &LatticeSlice) -> Result<PlanResult> {
    dp_plan_with(g, l, PlanMode::Stop)
}

/// Backward recursion `U(K) = max{0, max_a [g(K,a) + U(K ∪ {a})]}` over the
/// slice DAG (without the 0 branch for a fixed endpoint), then forward
/// replay of the smallest optimal action.
pub fn dp_plan_with(g: &EdgeField, l: &LatticeSlice, mode: PlanMode) -> Result<PlanResult> {
    let nodes = l.nodes();
    if let PlanMode::Endpoint(target) = mode {
        l.require(target)?;
        if !l.base().is_subset(target) {
            return Err(Error::NotSubset {
                lo: l.poset().render(l.base()),
                hi: l.poset().render(target),
            });
        }
    }
    let mut best: Vec<Option<f64>> = vec![None; nodes.len()];
    for k in (0..nodes.len()).rev() {
        let here = nodes[k];
        let mut u = match mode {
            PlanMode::Stop => Some(0.0),
            PlanMode::Endpoint(t) if here == t => Some(0.0),
            PlanMode::Endpoint(_) => None,
        };
        if let PlanMode::Endpoint(t) = mode {
            if !here.is_subset(t) || here == t {
                best[k] = u;
                continue;
            }
        }
        for e in l.out_edges(k) {
            if let Some(next) = best[e.to] {
                let cand = g.value(l, here, e.elem)? + next;
                if u.is_none_or(|cur| cand > cur) {
                    u = Some(cand);
                }
            }
        }
        best[k] = u;
    }

    let Some(root) = best[0] else {
        return Err(Error::Precondition("fixed endpoint is unreachable".into()));
    };
    let mut adds: Vec<Elem> = Vec::new();
    let mut k = 0;
    let mut target = root;
    loop {
        let here = nodes[k];
        let stop_here = match mode {
            PlanMode::Stop => target == 0.0,
            PlanMode::Endpoint(t) => here == t,
        };
        if stop_here {
            break;
        }
        let mut next = None;
        for e in l.out_edges(k) {
            if let Some(u) = best[e.to] {
                if g.value(l, here, e.elem)? + u == target {
                    next = Some((e.elem, e.to, u));
                    break;
                }
            }
        }
        let (a, to, u) = next.expect("an optimal action attains the recorded maximum");
        adds.push(a);
        k = to;
        target = u;
    }
    let best_path = Path::new(l.base(), adds);
    let best_value = path_value(g, l, &best_path)?;
    let value_table = nodes
        .iter()
        .zip(&best)
        .filter_map(|(&i, u)| u.map(|u| (i, u)))
        .collect();
    Ok(PlanResult {
        best_path,
        best_value,
        value_table,
    })
}

pub fn exhaustive_plan(g: &EdgeField, l: &LatticeSlice, cap: usize) -> Result<PlanResult> {
    exhaustive_plan_with(g, l, PlanMode::Stop, cap)
}

/// Enumerates every competing path in lexicographic order and keeps the
/// first strict maximum.
pub fn exhaustive_plan_with(g: &EdgeField, l: &LatticeSlice, mode: PlanMode, cap: usize) -> Result<PlanResult> {
    if let PlanMode::Endpoint(t) = mode {
        l.require(t)?;
    }
    struct Search<'a> {
        g: &'a EdgeField,
        l: &'a LatticeSlice,
        mode: PlanMode,
        cap: usize,
        seen: usize,
        prefix: Vec<Elem>,
        best: Option<(f64, Vec<Elem>)>,
    }
    impl Search<'_> {
        fn visit(&mut self, k: usize, value: f64) -> Result<()> {
            let here = self.l.nodes()[k];
            let counts = match self.mode {
                PlanMode::Stop => true,
                PlanMode::Endpoint(t) => here == t,
            };
            if counts {
                self.seen += 1;
                if self.seen > self.cap {
                    return Err(Error::EnumerationCap {
                        size: self.seen,
                        cap: self.cap,
                    });
                }
                if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                    self.best = Some((value, self.prefix.clone()));
                }
            }
            for e in self.l.out_edges(k) {
                if let PlanMode::Endpoint(t) = self.mode {
                    if !self.l.nodes()[e.to].is_subset(t) {
                        continue;
                    }
                }
                let step = self.g.value(self.l, here, e.elem)?;
                self.prefix.push(e.elem);
                self.visit(e.to, value + step)?;
                self.prefix.pop();
            }
            Ok(())
        }
    }
    let mut search = Search {
        g,
        l,
        mode,
        cap,
        seen: 0,
        prefix: Vec::new(),
        best: None,
    };
    search.visit(0, 0.0)?;
    let (best_value, adds) = search
        .best
        .ok_or_else(|| Error::Precondition("fixed endpoint is unreachable".into()))?;
    Ok(PlanResult {
        best_path: Path::new(l.base(), adds),
        best_value,
        value_table: IndexMap::new(),
    })
}

/// Outcome of checking `|V(γ) − V(γ′)| ≤ N_swap(γ,γ′)·ε ≤ C(L,2)·ε` over all
/// path pairs of an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderBound {
    /// `max |κ|` over every diamond of the slice.
    pub epsilon: f64,
    pub pairs: usize,
    pub max_abs_diff: f64,
    /// Largest `N_swap · ε` over the pairs.
    pub max_swap_bound: f64,
    /// `C(L, 2) · ε`.
    pub binomial_bound: f64,
    /// Largest `|ΔV| / (N_swap · ε)` over pairs with a positive bound.
    pub tightest_ratio: Option<f64>,
    pub violations: usize,
    pub holds: bool,
}

pub fn order_bound_check(
    g: &EdgeField,
    l: &LatticeSlice,
    i: Ideal,
    j: Ideal,
    path_cap: usize,
    tol: f64,
) -> Result<OrderBound> {
    let mut epsilon: f64 = 0.0;
    for d in enumerate_diamonds(l) {
        epsilon = epsilon.max(curvature(g, l, &d)?.abs());
    }
    let paths = enumerate_paths(l, i, j, path_cap)?;
    let values: Vec<f64> = paths
        .iter()
        .map(|p| path_value(g, l, p))
        .collect::<Result<_>>()?;
    let len = j.difference(i).len();
    let binomial_bound = (len * len.saturating_sub(1) / 2) as f64 * epsilon;
    let mut out = OrderBound {
        epsilon,
        pairs: 0,
        max_abs_diff: 0.0,
        max_swap_bound: 0.0,
        binomial_bound,
        tightest_ratio: None,
        violations: 0,
        holds: true,
    };
    for x in 0..paths.len() {
        for y in x + 1..paths.len() {
            let diff = (values[x] - values[y]).abs();
            let swaps = inversions(&paths[x].additions, &paths[y].additions);
            let bound = swaps as f64 * epsilon;
            out.pairs += 1;
            out.max_abs_diff = out.max_abs_diff.max(diff);
            out.max_swap_bound = out.max_swap_bound.max(bound);
            let slack = tol * bound.max(1.0);
            if diff > bound + slack || bound > binomial_bound + slack {
                out.violations += 1;
            }
            if bound > 0.0 {
                let ratio = diff / bound;
                out.tightest_ratio = Some(out.tightest_ratio.map_or(ratio, |r: f64| r.max(ratio)));
            }
        }
    }
    out.holds = out.violations == 0;
    Ok(out)
}
