//! Non-identification of order effects without two-sided support.

use super::model::CausalModel;
use crate::error::{Error, Result};
use crate::lattice::Diamond;

/// Two models with the same observational law whose local order effects on
/// `d` differ by `delta` in every context of `contexts`.
#[derive(Clone, Debug)]
pub struct NonIdWitness {
    pub original: CausalModel,
    pub shifted: CausalModel,
    pub delta: f64,
}

impl NonIdWitness {
    pub fn laws_agree(&self) -> bool {
        self.original.observational_law() == self.shifted.observational_law()
    }
}

/// Probability of observing the first two steps `(first, second)` from the
/// base in context `x`.
fn side_prob(m: &CausalModel, x: usize, first: usize, second: usize) -> f64 {
    let base = m.base();
    let p1 = m.action_prob(base, x, first);
    if p1 == 0.0 {
        return 0.0;
    }
    (0..m.contexts().len())
        .map(|y| m.transition(base, x, first, y) * m.action_prob(base.with(first), y, second))
        .sum::<f64>()
        * p1
}

/// Shifts the mean reward of the `v`-first side of `d` by `delta` for
/// episodes starting in `contexts`. Requires that side to have zero
/// observational probability in each of those contexts, and `d` to sit at
/// the model base.
pub fn nonid_witness(m: &CausalModel, d: &Diamond, contexts: &[usize], delta: f64) -> Result<NonIdWitness> {
    if d.base != m.base() {
        return Err(Error::Precondition("the diamond must sit at the model base".into()));
    }
    if !m.slice().is_diamond(d) {
        return Err(Error::Precondition(format!("({}) is not a diamond of the model", m.slice().render_diamond(d))));
    }
    let mut shifted = m.clone();
    for &x in contexts {
        if x >= m.contexts().len() {
            return Err(Error::InvalidModel(format!("context index {x} out of range")));
        }
        let p = side_prob(m, x, d.v, d.u);
        if p > 0.0 {
            return Err(Error::Precondition(format!(
                "the {}-first side of ({}) has probability {p} in context {}",
                m.poset().id(d.v),
                m.slice().render_diamond(d),
                m.contexts()[x]
            )));
        }
        shifted.add_path_shift(x, vec![d.v, d.u], delta)?;
    }
    Ok(NonIdWitness {
        original: m.clone(),
        shifted,
        delta,
    })
}
