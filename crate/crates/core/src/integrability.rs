//! Cube consistency and gauge-fixed reconstruction of edge fields from
//! diamond fields.
//!
//! The reference tree links every non-base node `K` to `K⁻ = K \ {m(K)}`,
//! where `m(K)` is the τ-largest element of `K \ base`. Fixing edge values
//! on that tree (the gauge) makes the realizing edge field unique.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::lattice::{Diamond, LatticeSlice};
use crate::poset::{Elem, Ideal};
use crate::valuation::{DiamondField, EdgeField, NodeField, Potential};

/// `(I; u, v, w)` with `u <τ v <τ w`, pairwise incomparable and admissible
/// at `I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ThreeCube {
    pub base: Ideal,
    pub u: Elem,
    pub v: Elem,
    pub w: Elem,
}

impl ThreeCube {
    /// The six 2-faces with their signs in the alternating defect sum.
    pub fn faces(&self) -> [(Diamond, f64); 6] {
        let (i, u, v, w) = (self.base, self.u, self.v, self.w);
        [
            (Diamond::new(i, u, v), 1.0),
            (Diamond::new(i.with(w), u, v), -1.0),
            (Diamond::new(i, u, w), -1.0),
            (Diamond::new(i.with(v), u, w), 1.0),
            (Diamond::new(i, v, w), 1.0),
            (Diamond::new(i.with(u), v, w), -1.0),
        ]
    }

    pub fn top(&self) -> Ideal {
        self.base.with(self.u).with(self.v).with(self.w)
    }
}

fn render_cube(l: &LatticeSlice, c: &ThreeCube) -> String {
    let p = l.poset();
    format!(
        "{}; {}, {}, {}",
        p.render(c.base),
        p.id(c.u),
        p.id(c.v),
        p.id(c.w)
    )
}

/// Every three-cube whose eight corners are slice nodes, ordered by base
/// node index and then lexicographically by `(u, v, w)`.
pub fn enumerate_cubes(l: &LatticeSlice) -> Vec<ThreeCube> {
    let p = l.poset();
    let mut out = Vec::new();
    for (k, &base) in l.nodes().iter().enumerate() {
        let adds: Vec<Elem> = l.out_edges(k).iter().map(|e| e.elem).collect();
        for (x, &u) in adds.iter().enumerate() {
            for (y, &v) in adds.iter().enumerate().skip(x + 1) {
                for &w in &adds[y + 1..] {
                    if p.comparable(u, v) || p.comparable(u, w) || p.comparable(v, w) {
                        continue;
                    }
                    let c = ThreeCube { base, u, v, w };
                    let corners = Ideal::from_elems([u, v, w]);
                    let all_present = (0u128..8).all(|mask| {
                        let sub = corners
                            .iter()
                            .enumerate()
                            .filter(|(bit, _)| mask >> bit & 1 == 1)
                            .fold(base, |acc, (_, e)| acc.with(e));
                        l.contains(sub)
                    });
                    if all_present {
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

/// The alternating six-face sum
/// `κ(I;u,v) − κ(I∪w;u,v) − κ(I;u,w) + κ(I∪v;u,w) + κ(I;v,w) − κ(I∪u;v,w)`.
pub fn cube_defect(kappa: &DiamondField, c: &ThreeCube) -> Result<f64> {
    c.faces().iter().try_fold(0.0, |acc, (d, sign)| {
        let k = kappa
            .get(d)
            .ok_or_else(|| Error::MissingDiamond(format!("{d:?}")))?;
        Ok(acc + sign * k)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum CubeConsistency {
    Consistent,
    Witness { cube: ThreeCube, defect: f64 },
}

impl CubeConsistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, CubeConsistency::Consistent)
    }
}

/// Consistent iff every cube defect is within `tol`; otherwise the first
/// violating cube.
pub fn is_cube_consistent(kappa: &DiamondField, l: &LatticeSlice, tol: f64) -> Result<CubeConsistency> {
    for c in enumerate_cubes(l) {
        let defect = cube_defect(kappa, &c)?;
        if defect.abs() > tol {
            return Ok(CubeConsistency::Witness { cube: c, defect });
        }
    }
    Ok(CubeConsistency::Consistent)
}

fn require_consistent(kappa: &DiamondField, l: &LatticeSlice, tol: f64) -> Result<()> {
    match is_cube_consistent(kappa, l, tol)? {
        CubeConsistency::Consistent => Ok(()),
        CubeConsistency::Witness { cube, defect } => Err(Error::CubeInconsistent {
            cube: render_cube(l, &cube),
            defect,
        }),
    }
}

/// Parent links `K -> (K⁻, m(K))` for every non-base node, in slice order.
#[derive(Clone, Debug)]
pub struct ReferenceTree {
    pub root: Ideal,
    parent: IndexMap<Ideal, (Ideal, Elem)>,
}

impl ReferenceTree {
    pub fn parent(&self, k: Ideal) -> Option<Ideal> {
        self.parent.get(&k).map(|&(p, _)| p)
    }

    /// `m(K)`, the element added by the tree edge into `K`.
    pub fn top_elem(&self, k: Ideal) -> Option<Elem> {
        self.parent.get(&k).map(|&(_, m)| m)
    }

    /// `(K, K⁻, m(K))` in breadth-first order.
    pub fn links(&self) -> impl Iterator<Item = (Ideal, Ideal, Elem)> + '_ {
        self.parent.iter().map(|(&k, &(p, m))| (k, p, m))
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

pub fn reference_tree(l: &LatticeSlice) -> Result<ReferenceTree> {
    let base = l.base();
    let mut parent = IndexMap::with_capacity(l.nodes().len().saturating_sub(1));
    for &k in &l.nodes()[1..] {
        let m = k
            .difference(base)
            .max_elem()
            .expect("non-base nodes strictly contain the base");
        let up = k.without(m);
        if l.edge_index(up, m).is_none() {
            return Err(Error::RaggedSlice(l.poset().render(k)));
        }
        parent.insert(k, (up, m));
    }
    Ok(ReferenceTree { root: base, parent })
}

/// Gauge values `α(K)` on every non-base node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaugeSystem {
    alpha: IndexMap<Ideal, f64>,
}

impl GaugeSystem {
    pub fn from_fn(l: &LatticeSlice, mut f: impl FnMut(Ideal) -> f64) -> Self {
        GaugeSystem {
            alpha: l.nodes()[1..].iter().map(|&k| (k, f(k))).collect(),
        }
    }

    /// The key set must equal the non-base nodes exactly.
    pub fn from_values(l: &LatticeSlice, mut values: HashMap<Ideal, f64>) -> Result<Self> {
        let mut alpha = IndexMap::with_capacity(values.len());
        for &k in &l.nodes()[1..] {
            match values.remove(&k) {
                Some(v) => {
                    alpha.insert(k, v);
                }
                None => {
                    return Err(Error::FieldDomain(format!(
                        "no gauge value for {}",
                        l.poset().render(k)
                    )))
                }
            }
        }
        if let Some(&k) = values.keys().next() {
            return Err(Error::FieldDomain(format!(
                "gauge value for {} which is not a non-base node",
                l.poset().render(k)
            )));
        }
        Ok(GaugeSystem { alpha })
    }

    /// `α(K) = g(K⁻, m(K))`.
    pub fn from_edge_field(g: &EdgeField, l: &LatticeSlice, t: &ReferenceTree) -> Result<Self> {
        let mut alpha = IndexMap::with_capacity(t.len());
        for (k, up, m) in t.links() {
            let v = g
                .get(up, m)
                .ok_or_else(|| Error::MissingEdge(l.render_edge(up, m)))?;
            alpha.insert(k, v);
        }
        Ok(GaugeSystem { alpha })
    }

    pub fn get(&self, k: Ideal) -> Option<f64> {
        self.alpha.get(&k).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ideal, f64)> + '_ {
        self.alpha.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// The unique edge field that vanishes on reference-tree edges and whose
/// curvature is `kappa`.
///
/// Edges are filled in increasing `δ(I, a) = |{b ∈ I \ base : a <τ b}|`:
/// tree edges (`δ = 0`) get 0, and otherwise with `b = m(I)`,
/// `g(I, a) = g(I \ {b}, a) + κ(I \ {b}; a, b)`.
pub fn zero_gauge_reconstruct(kappa: &DiamondField, l: &LatticeSlice, tol: f64) -> Result<EdgeField> {
    require_consistent(kappa, l, tol)?;
    reference_tree(l)?;
    let base = l.base();
    let mut order: Vec<(usize, usize)> = l
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| (l.nodes()[e.from].difference(base).count_above(e.elem), k))
        .collect();
    order.sort_unstable();
    let mut values = vec![0.0; l.edges().len()];
    for (delta, k) in order {
        if delta == 0 {
            continue;
        }
        let e = l.edges()[k];
        let i = l.nodes()[e.from];
        let b = i.difference(base).max_elem().expect("δ ≥ 1 implies I ≠ base");
        let below = i.without(b);
        let prev = l
            .edge_index(below, e.elem)
            .ok_or_else(|| Error::MissingEdge(l.render_edge(below, e.elem)))?;
        let d = Diamond::new(below, e.elem, b);
        let kv = kappa
            .get(&d)
            .ok_or_else(|| Error::MissingDiamond(l.render_diamond(&d)))?;
        values[k] = values[prev] + kv;
    }
    Ok(EdgeField::from_fn(l, {
        let mut it = values.into_iter();
        move |_, _| it.next().unwrap()
    }))
}

/// `ψ(root) = 0`, `ψ(K) = ψ(K⁻) + α(K)`.
pub fn tree_integrate(alpha: &GaugeSystem, t: &ReferenceTree) -> Result<Potential> {
    let mut psi: HashMap<Ideal, f64> = HashMap::with_capacity(t.len() + 1);
    psi.insert(t.root, 0.0);
    let mut out = NodeField::default();
    out.insert(t.root, 0.0);
    for (k, up, _) in t.links() {
        let a = alpha
            .get(k)
            .ok_or_else(|| Error::FieldDomain(format!("no gauge value for node {k:?}")))?;
        let v = psi[&up] + a;
        psi.insert(k, v);
        out.insert(k, v);
    }
    Ok(out)
}

/// `(g + dψ)(I, a) = g(I, a) + ψ(I ∪ {a}) − ψ(I)`.
pub fn gradient_shift(g: &EdgeField, psi: &Potential, l: &LatticeSlice) -> Result<EdgeField> {
    let mut out = g.clone();
    for (i, a, v) in g.iter() {
        let lookup = |k: Ideal| {
            psi.get(k)
                .ok_or_else(|| Error::NotInSlice(l.poset().render(k)))
        };
        out.set(i, a, v + lookup(i.with(a))? - lookup(i)?);
    }
    Ok(out)
}

/// The unique edge field with curvature `kappa` and tree values `alpha`.
pub fn reconstruct_with_gauge(
    kappa: &DiamondField,
    alpha: &GaugeSystem,
    l: &LatticeSlice,
    tol: f64,
) -> Result<EdgeField> {
    let g0 = zero_gauge_reconstruct(kappa, l, tol)?;
    let psi = tree_integrate(alpha, &reference_tree(l)?)?;
    gradient_shift(&g0, &psi, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::poset::Poset;
    use crate::valuation::{curvature_field, DEFAULT_TOL};

    fn b(n: usize, depth: usize) -> LatticeSlice {
        let ids: Vec<String> = (0..n).map(|k| format!("e{k}")).collect();
        let p = Poset::antichain(&ids).unwrap();
        build_lattice(&p, Ideal::EMPTY, depth).unwrap()
    }

    fn b2_field(l: &LatticeSlice) -> EdgeField {
        EdgeField::from_fn(l, |i, a| match (i.bits(), a) {
            (0, 0) => 1.0,
            (0, 1) => 2.0,
            (0b01, 1) => 3.0,
            (0b10, 0) => 5.0,
            _ => unreachable!(),
        })
    }

    #[test]
    fn cube_counts() {
        assert!(enumerate_cubes(&b(2, 2)).is_empty());
        assert_eq!(enumerate_cubes(&b(3, 3)).len(), 1);
        // Antichain of 4: C(4,3) cubes at ∅ and C(3,3) at each singleton.
        assert_eq!(enumerate_cubes(&b(4, 4)).len(), 8);
    }

    #[test]
    fn defects() {
        let l = b(3, 3);
        let g = EdgeField::from_fn(&l, |i, a| (i.bits() * 7 + a as u128 * 3) as f64 % 11.0);
        let kappa = curvature_field(&g, &l).unwrap();
        let c = enumerate_cubes(&l)[0];
        assert_eq!(cube_defect(&kappa, &c).unwrap(), 0.0);

        let constant = DiamondField::from_fn(&l, |_| 2.5);
        assert_eq!(cube_defect(&constant, &c).unwrap(), 0.0);

        let mut bumped = kappa.clone();
        let face = Diamond::new(Ideal::from_elems([2]), 0, 1);
        bumped.set(&face, kappa.get(&face).unwrap() + 1.0);
        assert_eq!(cube_defect(&bumped, &c).unwrap(), -1.0);
        match is_cube_consistent(&bumped, &l, DEFAULT_TOL).unwrap() {
            CubeConsistency::Witness { cube, defect } => {
                assert_eq!(cube, c);
                assert_eq!(defect, -1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(is_cube_consistent(&kappa, &l, DEFAULT_TOL).unwrap().is_consistent());
        assert!(matches!(
            zero_gauge_reconstruct(&bumped, &l, DEFAULT_TOL),
            Err(Error::CubeInconsistent { .. })
        ));
    }

    #[test]
    fn reference_tree_shapes() {
        let l = b(2, 2);
        let t = reference_tree(&l).unwrap();
        let u = Ideal::from_elems([0]);
        let v = Ideal::from_elems([1]);
        assert_eq!(t.parent(u.union(v)), Some(u));
        assert_eq!(t.parent(v), Some(Ideal::EMPTY));
        assert_eq!(t.parent(u), Some(Ideal::EMPTY));

        let p = Poset::chain(&["a", "b", "c"]).unwrap();
        let lc = build_lattice(&p, Ideal::EMPTY, 3).unwrap();
        let tc = reference_tree(&lc).unwrap();
        let links: Vec<_> = tc.links().map(|(k, up, _)| (k, up)).collect();
        let expected: Vec<_> = lc.edges().iter().map(|e| (lc.nodes()[e.to], lc.nodes()[e.from])).collect();
        assert_eq!(links, expected);

        let l3 = b(3, 3);
        for (k, up, m) in reference_tree(&l3).unwrap().links() {
            assert_eq!(Some(m), k.max_elem());
            assert_eq!(up, k.without(m));
        }
    }

    #[test]
    fn ragged_slices_are_rejected() {
        let p = Poset::antichain(&["u", "v"]).unwrap();
        // {u,v} without {u}: the parent of {u,v} is missing.
        let l = LatticeSlice::from_ideals(&p, Ideal::EMPTY, &[Ideal::from_elems([1]), p.full()]).unwrap();
        assert!(matches!(reference_tree(&l), Err(Error::RaggedSlice(_))));
    }

    #[test]
    fn zero_gauge_on_b2() {
        let l = b(2, 2);
        let kappa = DiamondField::from_fn(&l, |_| 3.0);
        let g0 = zero_gauge_reconstruct(&kappa, &l, DEFAULT_TOL).unwrap();
        let u = Ideal::from_elems([0]);
        let v = Ideal::from_elems([1]);
        assert_eq!(g0.get(Ideal::EMPTY, 1), Some(0.0));
        assert_eq!(g0.get(u, 1), Some(0.0));
        assert_eq!(g0.get(Ideal::EMPTY, 0), Some(0.0));
        assert_eq!(g0.get(v, 0), Some(3.0));

        let zero = DiamondField::from_fn(&l, |_| 0.0);
        let g = zero_gauge_reconstruct(&zero, &l, DEFAULT_TOL).unwrap();
        assert!(g.iter().all(|(_, _, x)| x == 0.0));
    }

    #[test]
    fn tree_integration() {
        let p = Poset::chain(&["a", "b"]).unwrap();
        let lc = build_lattice(&p, Ideal::EMPTY, 2).unwrap();
        let t = reference_tree(&lc).unwrap();
        let alpha = GaugeSystem::from_fn(&lc, |k| if k.len() == 1 { 2.0 } else { 4.0 });
        let psi = tree_integrate(&alpha, &t).unwrap();
        assert_eq!(psi.iter().map(|(_, v)| v).collect::<Vec<_>>(), vec![0.0, 2.0, 6.0]);

        let l = b(2, 2);
        let alpha = GaugeSystem::from_fn(&l, |k| match k.bits() {
            0b01 => 1.0,
            0b10 => 2.0,
            _ => 3.0,
        });
        let psi = tree_integrate(&alpha, &reference_tree(&l).unwrap()).unwrap();
        assert_eq!(psi.get(Ideal::from_elems([0, 1])), Some(4.0));

        let zero = GaugeSystem::from_fn(&l, |_| 0.0);
        let psi = tree_integrate(&zero, &reference_tree(&l).unwrap()).unwrap();
        assert!(psi.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn gradient_shift_examples() {
        let l = b(2, 2);
        let g = b2_field(&l);
        let psi = NodeField::from_fn(&l, |k| if k.bits() == 0b01 { 10.0 } else { 0.0 });
        let shifted = gradient_shift(&g, &psi, &l).unwrap();
        let u = Ideal::from_elems([0]);
        let v = Ideal::from_elems([1]);
        assert_eq!(shifted.get(Ideal::EMPTY, 0), Some(11.0));
        assert_eq!(shifted.get(Ideal::EMPTY, 1), Some(2.0));
        assert_eq!(shifted.get(u, 1), Some(-7.0));
        assert_eq!(shifted.get(v, 0), Some(5.0));
        assert_eq!(curvature_field(&shifted, &l).unwrap(), curvature_field(&g, &l).unwrap());

        let card = NodeField::from_fn(&l, |k| k.len() as f64);
        let flat = gradient_shift(&EdgeField::zero(&l), &card, &l).unwrap();
        assert!(flat.iter().all(|(_, _, x)| x == 1.0));
        assert!(curvature_field(&flat, &l).unwrap().iter().all(|(_, k)| k == 0.0));
    }

    #[test]
    fn reconstruction_round_trip_on_b2() {
        let l = b(2, 2);
        let g = b2_field(&l);
        let kappa = curvature_field(&g, &l).unwrap();
        let alpha = GaugeSystem::from_edge_field(&g, &l, &reference_tree(&l).unwrap()).unwrap();
        assert_eq!(alpha.get(Ideal::from_elems([0])), Some(1.0));
        assert_eq!(alpha.get(Ideal::from_elems([1])), Some(2.0));
        assert_eq!(alpha.get(Ideal::from_elems([0, 1])), Some(3.0));
        let back = reconstruct_with_gauge(&kappa, &alpha, &l, DEFAULT_TOL).unwrap();
        assert_eq!(back, g);

        let zero = reconstruct_with_gauge(
            &DiamondField::from_fn(&l, |_| 0.0),
            &GaugeSystem::from_fn(&l, |_| 0.0),
            &l,
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(zero.iter().all(|(_, _, x)| x == 0.0));
    }

    #[test]
    fn nonempty_base_uses_additions_only() {
        let p = Poset::new(&["r", "x", "y"], &[("r", "x"), ("r", "y")], None).unwrap();
        let base = Ideal::from_elems([p.elem("r").unwrap()]);
        let l = build_lattice(&p, base, 2).unwrap();
        let g = EdgeField::from_fn(&l, |i, a| (i.bits() as f64) - 2.0 * a as f64);
        let kappa = curvature_field(&g, &l).unwrap();
        let t = reference_tree(&l).unwrap();
        let alpha = GaugeSystem::from_edge_field(&g, &l, &t).unwrap();
        assert_eq!(reconstruct_with_gauge(&kappa, &alpha, &l, DEFAULT_TOL).unwrap(), g);
    }
}
