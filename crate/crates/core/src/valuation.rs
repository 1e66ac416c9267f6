//! Edge-additive path valuations and their local-to-global calculus:
//! diamond curvature, path independence, endpoint potentials, Möbius
//! parameterization and the reference-path decomposition.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_diamonds, Diamond, LatticeSlice};
use crate::path::{reference_path, rewrite_sequence, Path, RewriteSequence};
use crate::poset::{Elem, Ideal};

pub const DEFAULT_TOL: f64 = 1e-9;

/// A real value on every admissible edge `(I, a)` of a slice.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeField {
    pub context: String,
    values: IndexMap<(Ideal, Elem), f64>,
}

impl EdgeField {
    /// Evaluates `f` on every slice edge, in slice edge order.
    pub fn from_fn(l: &LatticeSlice, mut f: impl FnMut(Ideal, Elem) -> f64) -> Self {
        let values = l
            .edges()
            .iter()
            .map(|e| {
                let i = l.nodes()[e.from];
                ((i, e.elem), f(i, e.elem))
            })
            .collect();
        EdgeField {
            context: String::new(),
            values,
        }
    }

    pub fn zero(l: &LatticeSlice) -> Self {
        Self::from_fn(l, |_, _| 0.0)
    }

    /// Takes ownership of explicit values; the key set must equal the slice
    /// edge set exactly.
    pub fn from_values(l: &LatticeSlice, mut values: HashMap<(Ideal, Elem), f64>) -> Result<Self> {
        let mut ordered = IndexMap::with_capacity(values.len());
        for e in l.edges() {
            let i = l.nodes()[e.from];
            match values.remove(&(i, e.elem)) {
                Some(v) => {
                    ordered.insert((i, e.elem), v);
                }
                None => return Err(Error::MissingEdge(l.render_edge(i, e.elem))),
            }
        }
        if let Some(&(i, a)) = values.keys().next() {
            return Err(Error::FieldDomain(format!(
                "edge ({}) is not in the slice",
                l.render_edge(i, a)
            )));
        }
        Ok(EdgeField {
            context: String::new(),
            values: ordered,
        })
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = context.into();
        self
    }

    pub fn get(&self, i: Ideal, a: Elem) -> Option<f64> {
        self.values.get(&(i, a)).copied()
    }

    pub(crate) fn value(&self, l: &LatticeSlice, i: Ideal, a: Elem) -> Result<f64> {
        self.get(i, a)
            .ok_or_else(|| Error::MissingEdge(l.render_edge(i, a)))
    }

    /// Overwrites an existing edge value.
    pub fn set(&mut self, i: Ideal, a: Elem, value: f64) -> bool {
        match self.values.get_mut(&(i, a)) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ideal, Elem, f64)> + '_ {
        self.values.iter().map(|(&(i, a), &v)| (i, a, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise `alpha * self + beta * other` over a shared domain.
    pub fn combine(&self, alpha: f64, other: &EdgeField, beta: f64) -> Result<EdgeField> {
        let mut values = IndexMap::with_capacity(self.values.len());
        for (&key, &x) in &self.values {
            let y = other
                .values
                .get(&key)
                .ok_or_else(|| Error::FieldDomain("edge fields have different domains".into()))?;
            values.insert(key, alpha * x + beta * y);
        }
        Ok(EdgeField {
            context: self.context.clone(),
            values,
        })
    }
}

/// A real value per diamond.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiamondField {
    values: IndexMap<Diamond, f64>,
}

impl DiamondField {
    pub fn from_fn(l: &LatticeSlice, mut f: impl FnMut(&Diamond) -> f64) -> Self {
        DiamondField {
            values: enumerate_diamonds(l).into_iter().map(|d| (d, f(&d))).collect(),
        }
    }

    /// The key set must equal the slice's diamonds exactly.
    pub fn from_values(l: &LatticeSlice, mut values: HashMap<Diamond, f64>) -> Result<Self> {
        let mut ordered = IndexMap::with_capacity(values.len());
        for d in enumerate_diamonds(l) {
            match values.remove(&d) {
                Some(v) => {
                    ordered.insert(d, v);
                }
                None => return Err(Error::MissingDiamond(l.render_diamond(&d))),
            }
        }
        if let Some(d) = values.keys().next() {
            return Err(Error::FieldDomain(format!(
                "({}) is not a diamond of the slice",
                l.render_diamond(d)
            )));
        }
        Ok(DiamondField { values: ordered })
    }

    pub fn get(&self, d: &Diamond) -> Option<f64> {
        self.values.get(d).copied()
    }

    pub fn set(&mut self, d: &Diamond, value: f64) -> bool {
        match self.values.get_mut(d) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Diamond, f64)> + '_ {
        self.values.iter().map(|(d, &v)| (d, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A real value per slice node. Used for potentials `Φ`, Möbius
/// coefficients `θ` and tree potentials `ψ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeField {
    values: IndexMap<Ideal, f64>,
}

pub type Potential = NodeField;
pub type ThetaSystem = NodeField;

impl NodeField {
    pub fn from_fn(l: &LatticeSlice, mut f: impl FnMut(Ideal) -> f64) -> Self {
        NodeField {
            values: l.nodes().iter().map(|&i| (i, f(i))).collect(),
        }
    }

    /// The key set must equal the slice nodes exactly.
    pub fn from_values(l: &LatticeSlice, mut values: HashMap<Ideal, f64>) -> Result<Self> {
        let mut ordered = IndexMap::with_capacity(values.len());
        for &i in l.nodes() {
            match values.remove(&i) {
                Some(v) => {
                    ordered.insert(i, v);
                }
                None => {
                    return Err(Error::FieldDomain(format!(
                        "no value for node {}",
                        l.poset().render(i)
                    )))
                }
            }
        }
        if let Some(&i) = values.keys().next() {
            return Err(Error::NotInSlice(l.poset().render(i)));
        }
        Ok(NodeField { values: ordered })
    }

    pub fn get(&self, i: Ideal) -> Option<f64> {
        self.values.get(&i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ideal, f64)> + '_ {
        self.values.iter().map(|(&i, &v)| (i, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn insert(&mut self, i: Ideal, v: f64) {
        self.values.insert(i, v);
    }
}

/// `V(γ) = Σ g(I_ℓ, a_ℓ)`.
pub fn path_value(g: &EdgeField, l: &LatticeSlice, path: &Path) -> Result<f64> {
    path.steps()
        .try_fold(0.0, |acc, (i, a)| Ok(acc + g.value(l, i, a)?))
}

/// `κ(I; u, v) = g(I,v) + g(I∪{v},u) − g(I,u) − g(I∪{u},v)`, the v-first
/// side minus the u-first side.
pub fn curvature(g: &EdgeField, l: &LatticeSlice, d: &Diamond) -> Result<f64> {
    let v_side = g.value(l, d.base, d.v)? + g.value(l, d.base.with(d.v), d.u)?;
    let u_side = g.value(l, d.base, d.u)? + g.value(l, d.base.with(d.u), d.v)?;
    Ok(v_side - u_side)
}

pub fn curvature_field(g: &EdgeField, l: &LatticeSlice) -> Result<DiamondField> {
    let mut values = IndexMap::new();
    for d in enumerate_diamonds(l) {
        values.insert(d, curvature(g, l, &d)?);
    }
    Ok(DiamondField { values })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathIndependence {
    Independent,
    Witness { diamond: Diamond, kappa: f64 },
}

impl PathIndependence {
    pub fn is_independent(&self) -> bool {
        matches!(self, PathIndependence::Independent)
    }
}

/// Independent iff every diamond has `|κ| ≤ tol`; otherwise the first
/// violating diamond in enumeration order.
pub fn check_path_independence(g: &EdgeField, l: &LatticeSlice, tol: f64) -> Result<PathIndependence> {
    for d in enumerate_diamonds(l) {
        let kappa = curvature(g, l, &d)?;
        if kappa.abs() > tol {
            return Ok(PathIndependence::Witness { diamond: d, kappa });
        }
    }
    Ok(PathIndependence::Independent)
}

/// The endpoint potential with `Φ(base) = 0` of a curvature-free field.
pub fn endpoint_potential(g: &EdgeField, l: &LatticeSlice, tol: f64) -> Result<Potential> {
    if let PathIndependence::Witness { diamond, kappa } = check_path_independence(g, l, tol)? {
        return Err(Error::NonZeroCurvature {
            diamond: l.render_diamond(&diamond),
            kappa,
        });
    }
    let mut phi: Vec<Option<f64>> = vec![None; l.nodes().len()];
    phi[0] = Some(0.0);
    for e in l.edges() {
        if phi[e.to].is_none() {
            let from = phi[e.from].expect("breadth-first edges start at visited nodes");
            phi[e.to] = Some(from + g.value(l, l.nodes()[e.from], e.elem)?);
        }
    }
    let mut out = NodeField::default();
    for (k, &i) in l.nodes().iter().enumerate() {
        match phi[k] {
            Some(v) => out.insert(i, v),
            None => return Err(Error::RaggedSlice(l.poset().render(i))),
        }
    }
    Ok(out)
}

/// The Möbius function `μ(K, I)` of the slice, for `K ⊆ I` both nodes.
#[derive(Clone, Debug)]
pub struct MobiusTable {
    index: HashMap<Ideal, usize>,
    uppers: Vec<Vec<(Ideal, i64)>>,
}

impl MobiusTable {
    /// `μ(K, I)`; zero when `K ⊄ I` or either ideal is outside the slice.
    pub fn get(&self, k: Ideal, i: Ideal) -> i64 {
        self.index
            .get(&k)
            .and_then(|&x| self.uppers[x].iter().find(|(j, _)| *j == i))
            .map_or(0, |&(_, m)| m)
    }

    /// Nonzero and zero entries `(I, μ(K, I))` for every stored `I ⊇ K`.
    pub fn row(&self, k: Ideal) -> &[(Ideal, i64)] {
        self.index.get(&k).map_or(&[], |&x| &self.uppers[x])
    }
}

/// `μ(K,K) = 1`, `μ(K,I) = −Σ_{K ⊆ L ⊊ I} μ(K,L)`, over slice nodes.
pub fn mobius_function(l: &LatticeSlice) -> MobiusTable {
    let nodes = l.nodes();
    let mut uppers = Vec::with_capacity(nodes.len());
    for &k in nodes {
        // Breadth-first order is nondecreasing in cardinality, so every
        // strict lower bound of `i` is finished before `i`.
        let above: Vec<Ideal> = nodes.iter().copied().filter(|&i| k.is_subset(i)).collect();
        let mut row: Vec<(Ideal, i64)> = Vec::with_capacity(above.len());
        for &i in &above {
            let m = if i == k {
                1
            } else {
                -row.iter()
                    .filter(|(j, _)| j.is_subset(i) && *j != i)
                    .map(|&(_, m)| m)
                    .sum::<i64>()
            };
            row.push((i, m));
        }
        uppers.push(row);
    }
    MobiusTable {
        index: nodes.iter().enumerate().map(|(k, &i)| (i, k)).collect(),
        uppers,
    }
}

/// `θ(I) = Σ_{K ⊆ I} μ(K, I) Φ(K)` on a full interval slice.
pub fn mobius_invert(phi: &Potential, l: &LatticeSlice) -> Result<ThetaSystem> {
    if !l.is_full_interval() {
        return Err(Error::NotInterval);
    }
    let mu = mobius_function(l);
    let mut theta = vec![0.0; l.nodes().len()];
    for &k in l.nodes() {
        let pk = phi
            .get(k)
            .ok_or_else(|| Error::FieldDomain(format!("no value for node {}", l.poset().render(k))))?;
        for &(i, m) in mu.row(k) {
            theta[l.node_index(i).unwrap()] += m as f64 * pk;
        }
    }
    Ok(NodeField {
        values: l.nodes().iter().copied().zip(theta).collect(),
    })
}

/// `Φ(I) = Σ_{K ⊆ I} θ(K)` over slice nodes.
pub fn zeta_sum(theta: &ThetaSystem, l: &LatticeSlice) -> Potential {
    NodeField::from_fn(l, |i| {
        theta
            .iter()
            .filter(|(k, _)| k.is_subset(i))
            .map(|(_, t)| t)
            .sum()
    })
}

/// `Σ_{K ⊆ I∪{a}, a ∈ K} θ(K)`: the edge value implied by `θ`.
pub fn mobius_edge_value(theta: &ThetaSystem, i: Ideal, a: Elem) -> f64 {
    let top = i.with(a);
    theta
        .iter()
        .filter(|(k, _)| k.contains(a) && k.is_subset(top))
        .map(|(_, t)| t)
        .sum()
}

/// `Φ^ρ(I, J)`: the value of the reference path.
pub fn reference_score(g: &EdgeField, l: &LatticeSlice, i: Ideal, j: Ideal) -> Result<f64> {
    path_value(g, l, &reference_path(l.poset(), i, j)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub diamond: Diamond,
    pub sign: i8,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub ref_score: f64,
    pub rewrite: RewriteSequence,
    pub corrections: Vec<Correction>,
    /// `ref_score + Σ sign · κ`.
    pub total: f64,
}

/// Splits `V(γ)` into the reference-path score plus signed curvature
/// corrections along the rewrite from `ρ_{I,J}` to `γ`.
pub fn decompose(g: &EdgeField, l: &LatticeSlice, path: &Path) -> Result<Decomposition> {
    path.check(l.poset())?;
    let rho = reference_path(l.poset(), path.start, path.end())?;
    let ref_score = path_value(g, l, &rho)?;
    let rewrite = rewrite_sequence(l, &rho, path)?;
    let mut total = ref_score;
    let mut corrections = Vec::with_capacity(rewrite.len());
    for step in &rewrite.steps {
        let kappa = curvature(g, l, &step.diamond)?;
        total += f64::from(step.sign) * kappa;
        corrections.push(Correction {
            diamond: step.diamond,
            sign: step.sign,
            kappa,
        });
    }
    Ok(Decomposition {
        ref_score,
        rewrite,
        corrections,
        total,
    })
}
