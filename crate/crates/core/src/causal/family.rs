//! Two-activity order families `(u, w → v)` and their per-case episodes.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::log::{Case, EventLog};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.02;

/// Activities `u` and `w` (with `u < w` by name) preceding the target `v`.
/// Rewards are `outcome − λ · remaining days` after the first `v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub u: String,
    pub w: String,
    pub v: String,
    pub lambda: f64,
}

impl FamilySpec {
    /// Orders the pair by name.
    pub fn new(a: &str, b: &str, v: &str, lambda: f64) -> Result<Self> {
        if a == b || a == v || b == v {
            return Err(Error::Format(format!("family activities must differ: {a}, {b} -> {v}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Format(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        let (u, w) = if a < b { (a, b) } else { (b, a) };
        Ok(FamilySpec {
            u: u.to_string(),
            w: w.to_string(),
            v: v.to_string(),
            lambda,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        FamilySpec::new(&self.u, &self.w, &self.v, lambda)
    }

    pub fn label(&self) -> String {
        format!("({}, {} -> {})", self.u, self.w, self.v)
    }
}

/// Which of `u`, `w` occurred before the anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointClass {
    Empty,
    U,
    W,
    Uw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `u` first.
    UThenW,
    /// `w` first.
    WThenU,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub case_id: String,
    pub class: EndpointClass,
    /// Set only for the `{u, w}` class.
    pub order: Option<Order>,
    pub reward: f64,
}

/// First-occurrence positions of every activity in a case.
fn first_positions(case: &Case) -> HashMap<&str, usize> {
    let mut first = HashMap::new();
    for (k, e) in case.events.iter().enumerate() {
        first.entry(e.activity.as_str()).or_insert(k);
    }
    first
}

/// Families where both orders of the pair occur before the first `v` in at
/// least `min_two_sided` cases each, sorted by `(u, w, v)`.
pub fn detect_families(log: &EventLog, min_two_sided: usize, lambda: f64) -> Result<Vec<FamilySpec>> {
    let mut counts: BTreeMap<(&str, &str, &str), (usize, usize)> = BTreeMap::new();
    for case in &log.cases {
        let first = first_positions(case);
        for (&v, &anchor) in &first {
            let mut before: Vec<(&str, usize)> = first
                .iter()
                .filter(|&(_, &k)| k < anchor)
                .map(|(&a, &k)| (a, k))
                .collect();
            before.sort_unstable();
            for (x, &(a, ka)) in before.iter().enumerate() {
                for &(b, kb) in &before[x + 1..] {
                    let slot = counts.entry((a, b, v)).or_default();
                    if ka < kb {
                        slot.0 += 1;
                    } else {
                        slot.1 += 1;
                    }
                }
            }
        }
    }
    counts
        .into_iter()
        .filter(|&(_, (n_uw, n_wu))| n_uw >= min_two_sided.max(1) && n_wu >= min_two_sided.max(1))
        .map(|((u, w, v), _)| FamilySpec::new(u, w, v, lambda))
        .collect()
}

/// One episode per case containing `v`, anchored at its first occurrence.
pub fn extract_episodes(log: &EventLog, family: &FamilySpec) -> Vec<Episode> {
    let mut out = Vec::new();
    for case in &log.cases {
        let Some(anchor) = case.first(&family.v) else {
            continue;
        };
        let before = |a: &str| case.first(a).filter(|&k| k < anchor);
        let (pu, pw) = (before(&family.u), before(&family.w));
        let (class, order) = match (pu, pw) {
            (None, None) => (EndpointClass::Empty, None),
            (Some(_), None) => (EndpointClass::U, None),
            (None, Some(_)) => (EndpointClass::W, None),
            (Some(ku), Some(kw)) => (
                EndpointClass::Uw,
                Some(if ku < kw { Order::UThenW } else { Order::WThenU }),
            ),
        };
        let anchor_ts = case.events[anchor].timestamp;
        let last_ts = case.events.last().expect("anchor exists").timestamp;
        let days = (last_ts - anchor_ts).num_milliseconds() as f64 / 86_400_000.0;
        out.push(Episode {
            case_id: case.id.clone(),
            class,
            order,
            reward: case.outcome - family.lambda * days,
        });
    }
    out
}
