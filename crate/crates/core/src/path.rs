//! Admissible paths, reference paths, and diamond-swap rewriting.
//!
//! A path in `Γ(I, J)` is identified with a linear extension of the induced
//! poset on `J \ I`; adjacent swaps of incomparable neighbours are exactly
//! diamond swaps.

use crate::error::{Error, Result};
use crate::lattice::{Diamond, LatticeSlice};
use crate::poset::{Elem, Ideal, Poset};

pub const DEFAULT_PATH_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: Ideal,
    pub additions: Vec<Elem>,
}

impl Path {
    pub fn new(start: Ideal, additions: Vec<Elem>) -> Self {
        Path { start, additions }
    }

    pub fn empty(start: Ideal) -> Self {
        Path::new(start, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.additions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.additions.is_empty()
    }

    pub fn end(&self) -> Ideal {
        self.additions
            .iter()
            .fold(self.start, |acc, &a| acc.with(a))
    }

    /// `(I_ℓ, a_ℓ)` for every step.
    pub fn steps(&self) -> impl Iterator<Item = (Ideal, Elem)> + '_ {
        self.additions.iter().scan(self.start, |state, &a| {
            let here = *state;
            *state = here.with(a);
            Some((here, a))
        })
    }

    /// The prefix states `I_0, …, I_L`.
    pub fn states(&self) -> Vec<Ideal> {
        let mut out = vec![self.start];
        out.extend(self.steps().map(|(i, a)| i.with(a)));
        out
    }

    pub fn is_admissible(&self, p: &Poset) -> bool {
        p.is_ideal(self.start) && self.steps().all(|(i, a)| p.is_admissible(i, a))
    }

    pub fn check(&self, p: &Poset) -> Result<()> {
        p.check_ideal(self.start)?;
        for (k, (i, a)) in self.steps().enumerate() {
            if a >= p.len() || !p.is_admissible(i, a) {
                let name = if a < p.len() { p.id(a) } else { "?" };
                return Err(Error::InadmissiblePath(format!(
                    "step {k} adds `{name}` at {}",
                    p.render(i)
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self, p: &Poset) -> String {
        let ids: Vec<&str> = self.additions.iter().map(|&a| p.id(a)).collect();
        format!("{}:({})", p.render(self.start), ids.join(","))
    }
}

fn check_interval(p: &Poset, i: Ideal, j: Ideal) -> Result<()> {
    p.check_ideal(i)?;
    p.check_ideal(j)?;
    if !i.is_subset(j) {
        return Err(Error::NotSubset {
            lo: p.render(i),
            hi: p.render(j),
        });
    }
    Ok(())
}

/// `ρ_{I,J}`: the elements of `J \ I` in τ order.
pub fn reference_path(p: &Poset, i: Ideal, j: Ideal) -> Result<Path> {
    check_interval(p, i, j)?;
    Ok(Path::new(i, j.difference(i).iter().collect()))
}

/// All of `Γ(I, J)` in lexicographic τ order, refusing when `|J \ I|`
/// exceeds `cap`.
pub fn enumerate_paths(l: &LatticeSlice, i: Ideal, j: Ideal, cap: usize) -> Result<Vec<Path>> {
    let p = l.poset();
    check_interval(p, i, j)?;
    l.require(i)?;
    l.require(j)?;
    let size = j.difference(i).len();
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(size);
    extend_paths(p, i, j, &mut prefix, &mut out);
    Ok(out
        .into_iter()
        .map(|adds| Path::new(i, adds))
        .collect())
}

fn extend_paths(p: &Poset, here: Ideal, target: Ideal, prefix: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
    if here == target {
        out.push(prefix.clone());
        return;
    }
    for a in target.difference(here).iter() {
        if p.pred(a).is_subset(here) {
            prefix.push(a);
            extend_paths(p, here.with(a), target, prefix, out);
            prefix.pop();
        }
    }
}

/// A diamond swap: `sign = +1` replaces the u-first side by the v-first side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub diamond: Diamond,
    pub sign: i8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteSequence {
    pub steps: Vec<RewriteStep>,
}

impl RewriteSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies every step in order, returning the path after each step.
    pub fn replay(&self, p: &Poset, src: &Path) -> Result<Vec<Path>> {
        let mut cur = src.clone();
        let mut out = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            cur = apply_step(p, &cur, step)?;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// Replaces the side of `step.diamond` traversed by `path` with the other
/// side, in the direction given by the sign.
pub fn apply_step(p: &Poset, path: &Path, step: &RewriteStep) -> Result<Path> {
    let d = step.diamond;
    let (first, second) = if step.sign > 0 { (d.u, d.v) } else { (d.v, d.u) };
    let mut state = path.start;
    for k in 0..path.additions.len().saturating_sub(1) {
        if state == d.base {
            if path.additions[k] == first && path.additions[k + 1] == second {
                if p.comparable(d.u, d.v) {
                    break;
                }
                let mut adds = path.additions.clone();
                adds.swap(k, k + 1);
                return Ok(Path::new(path.start, adds));
            }
            break;
        }
        state = state.with(path.additions[k]);
    }
    Err(Error::BadRewriteStep(format!(
        "path {} does not traverse the {} side of ({}; {}, {})",
        path.render(p),
        if step.sign > 0 { "u-first" } else { "v-first" },
        p.render(d.base),
        p.id(d.u),
        p.id(d.v)
    )))
}

fn check_same_endpoints(p: &Poset, src: &Path, dst: &Path) -> Result<()> {
    src.check(p)?;
    dst.check(p)?;
    if src.start != dst.start || src.end() != dst.end() {
        return Err(Error::EndpointMismatch);
    }
    Ok(())
}

/// A diamond-swap sequence taking `src` to `dst`.
///
/// Bubble construction: the last element of `dst` is moved rightward in the
/// working extension one adjacent swap at a time, then the prefix is handled
/// the same way. Not minimal in general; see [`min_swap_distance`].
pub fn rewrite_sequence(l: &LatticeSlice, src: &Path, dst: &Path) -> Result<RewriteSequence> {
    let p = l.poset();
    check_same_endpoints(p, src, dst)?;
    let mut cur = src.additions.clone();
    let mut steps = Vec::new();
    for k in (0..cur.len()).rev() {
        let target = dst.additions[k];
        let mut pos = cur[..=k]
            .iter()
            .position(|&a| a == target)
            .expect("same endpoints imply same element sets");
        while pos < k {
            let (x, y) = (cur[pos], cur[pos + 1]);
            let base = src.start.union(Ideal::from_elems(cur[..pos].iter().copied()));
            let diamond = Diamond::new(base, x, y);
            debug_assert!(!p.comparable(x, y));
            steps.push(RewriteStep {
                diamond,
                sign: if x == diamond.u { 1 } else { -1 },
            });
            cur.swap(pos, pos + 1);
            pos += 1;
        }
    }
    Ok(RewriteSequence { steps })
}

/// Inversion count between the two extensions: the minimum number of
/// diamond swaps between the paths.
pub fn min_swap_distance(l: &LatticeSlice, src: &Path, dst: &Path) -> Result<usize> {
    check_same_endpoints(l.poset(), src, dst)?;
    Ok(inversions(&src.additions, &dst.additions))
}

pub(crate) fn inversions(a: &[Elem], b: &[Elem]) -> usize {
    let mut pos = std::collections::HashMap::with_capacity(b.len());
    for (k, &e) in b.iter().enumerate() {
        pos.insert(e, k);
    }
    let ranks: Vec<usize> = a.iter().map(|e| pos[e]).collect();
    let mut count = 0;
    for x in 0..ranks.len() {
        for y in x + 1..ranks.len() {
            if ranks[x] > ranks[y] {
                count += 1;
            }
        }
    }
    count
}
