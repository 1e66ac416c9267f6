//! Held-out comparison of order policies on a two-activity family, and
//! exact planning over the family's `B₂` lattice.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{dp_plan_with, exhaustive_plan_with, PlanMode};
use crate::causal::estimate::{mean, split_rewards, Estimate, EstimationReport};
use crate::causal::family::{EndpointClass, Episode, FamilySpec, Order};
use crate::error::Result;
use crate::lattice::build_lattice;
use crate::poset::{Ideal, Poset};
use crate::valuation::EdgeField;

pub const DEFAULT_RESPLITS: usize = 30;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

pub const POLICIES: [&str; 7] = [
    "sequence_sensitive",
    "reference_path",
    "greedy_one_step",
    "fixed_forward",
    "fixed_reverse",
    "endpoint_pooled",
    "frequency",
];

/// What a policy commits to inside the `{u, w}` endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Path(Order),
    /// Any order reaching `{u, w}`.
    Endpoint,
}

impl Selection {
    pub fn render(&self, f: &FamilySpec) -> String {
        match self {
            Selection::Path(Order::UThenW) => format!("{}->{}", f.u, f.w),
            Selection::Path(Order::WThenU) => format!("{}->{}", f.w, f.u),
            Selection::Endpoint => format!("{{{},{}}}", f.u, f.w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: &'static str,
    pub selection: Selection,
    pub selected_path: String,
    pub heldout_value: Estimate<f64>,
    pub delta_ref: Estimate<f64>,
    pub delta_greedy: Estimate<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WinRate {
    /// Fraction of resplits where the sequence-sensitive held-out value is
    /// strictly above the reference-path value.
    pub strict: f64,
    /// The same with `≥`.
    pub non_strict: f64,
    /// Resplits where both values were available.
    pub counted: usize,
    pub resplits: usize,
    pub train_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyTable {
    pub family: FamilySpec,
    pub train_size: usize,
    pub heldout_size: usize,
    pub rows: Vec<PolicyRow>,
    pub win_rate: Option<WinRate>,
}

impl PolicyTable {
    pub fn row(&self, policy: &str) -> Option<&PolicyRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }
}

/// Training-set quantities the policies choose from.
struct Fit {
    class_mean: [Option<f64>; 4],
    order_mean: [Option<f64>; 2],
    order_count: [usize; 2],
}

fn fit(train: &[Episode]) -> Fit {
    let (classes, orders) = split_rewards(train);
    Fit {
        class_mean: [0, 1, 2, 3].map(|k| mean(&classes[k])),
        order_mean: [0, 1].map(|k| mean(&orders[k])),
        order_count: [orders[0].len(), orders[1].len()],
    }
}

fn select(policy: &str, fit: &Fit) -> Selection {
    use Order::*;
    match policy {
        // Φ^ρ + κ̂ for w→u against Φ^ρ for u→w; without κ̂ it reduces to the
        // reference path.
        "sequence_sensitive" => match fit.order_mean {
            [Some(a), Some(b)] if b - a > 0.0 => Selection::Path(WThenU),
            _ => Selection::Path(UThenW),
        },
        "greedy_one_step" => {
            let mu = fit.class_mean[EndpointClass::U as usize].unwrap_or(f64::NEG_INFINITY);
            let mw = fit.class_mean[EndpointClass::W as usize].unwrap_or(f64::NEG_INFINITY);
            Selection::Path(if mw > mu { WThenU } else { UThenW })
        }
        "fixed_reverse" => Selection::Path(WThenU),
        "endpoint_pooled" => Selection::Endpoint,
        "frequency" => Selection::Path(if fit.order_count[1] > fit.order_count[0] { WThenU } else { UThenW }),
        _ => Selection::Path(UThenW),
    }
}

fn heldout_value(sel: Selection, heldout: &[Episode]) -> Estimate<f64> {
    let rewards: Vec<f64> = heldout
        .iter()
        .filter(|e| match sel {
            Selection::Path(o) => e.order == Some(o),
            Selection::Endpoint => e.class == EndpointClass::Uw,
        })
        .map(|e| e.reward)
        .collect();
    mean(&rewards).map_or(Estimate::InsufficientN, Estimate::Value)
}

fn diff(a: Estimate<f64>, b: Estimate<f64>) -> Estimate<f64> {
    match (a, b) {
        (Estimate::Value(x), Estimate::Value(y)) => Estimate::Value(x - y),
        _ => Estimate::InsufficientN,
    }
}

/// Fits every policy on `train` and scores it on `heldout`.
pub fn policy_compare(train: &[Episode], heldout: &[Episode], family: &FamilySpec) -> PolicyTable {
    let fit = fit(train);
    let picks: Vec<(&'static str, Selection, Estimate<f64>)> = POLICIES
        .iter()
        .map(|&name| {
            let sel = select(name, &fit);
            (name, sel, heldout_value(sel, heldout))
        })
        .collect();
    let value_of = |name: &str| picks.iter().find(|p| p.0 == name).unwrap().2;
    let (reference, greedy) = (value_of("reference_path"), value_of("greedy_one_step"));
    PolicyTable {
        family: family.clone(),
        train_size: train.len(),
        heldout_size: heldout.len(),
        rows: picks
            .iter()
            .map(|&(policy, selection, value)| PolicyRow {
                policy,
                selection,
                selected_path: selection.render(family),
                heldout_value: value,
                delta_ref: diff(value, reference),
                delta_greedy: diff(value, greedy),
            })
            .collect(),
        win_rate: None,
    }
}

/// Seeded split by case: each case's episodes go to one side.
pub fn split_episodes(episodes: &[Episode], train_fraction: f64, seed: u64) -> (Vec<Episode>, Vec<Episode>) {
    let mut ids: Vec<&str> = episodes.iter().map(|e| e.case_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = (ids.len() as f64 * train_fraction).round() as usize;
    let train_ids: std::collections::HashSet<&str> = ids[..n_train].iter().copied().collect();
    episodes
        .iter()
        .cloned()
        .partition(|e| train_ids.contains(e.case_id.as_str()))
}

/// The table for the split drawn from `seed`, plus the win rate over
/// `resplits` further splits seeded `seed + 1, …`.
pub fn policy_compare_resplits(
    episodes: &[Episode],
    family: &FamilySpec,
    seed: u64,
    resplits: usize,
    train_fraction: f64,
) -> PolicyTable {
    let (train, heldout) = split_episodes(episodes, train_fraction, seed);
    let mut table = policy_compare(&train, &heldout, family);
    let outcomes: Vec<Option<(f64, f64)>> = (1..=resplits as u64)
        .into_par_iter()
        .map(|k| {
            let (tr, ho) = split_episodes(episodes, train_fraction, seed.wrapping_add(k));
            let t = policy_compare(&tr, &ho, family);
            let s = t.row("sequence_sensitive")?.heldout_value.value()?;
            let r = t.row("reference_path")?.heldout_value.value()?;
            Some((s, r))
        })
        .collect();
    let counted: Vec<(f64, f64)> = outcomes.into_iter().flatten().collect();
    let rate = |pred: fn(f64, f64) -> bool| {
        if counted.is_empty() {
            0.0
        } else {
            counted.iter().filter(|&&(s, r)| pred(s, r)).count() as f64 / counted.len() as f64
        }
    };
    table.win_rate = Some(WinRate {
        strict: rate(|s, r| s > r),
        non_strict: rate(|s, r| s >= r),
        counted: counted.len(),
        resplits,
        train_fraction,
    });
    table
}

/// DP and exhaustive argmax over the family's `B₂` lattice for the fixed
/// endpoint `{u, w}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyPlan {
    pub family: FamilySpec,
    pub dp_argmax: String,
    pub exhaustive_argmax: String,
    pub equal: bool,
    /// Absolute value of the best full order: `m_∅ + U(∅)`.
    pub best_value: f64,
}

/// Builds the pooled edge field `g(∅,u) = m_u − m_∅`,
/// `g({u},w) = m_{u→w} − m_u` (and symmetrically) from a report and plans
/// to `{u, w}`. Missing endpoint means are taken as 0; they cancel along
/// full paths. Returns `None` when either order mean is unidentified.
pub fn family_plan(report: &EstimationReport, exhaustive_cap: usize) -> Result<Option<FamilyPlan>> {
    let f = &report.family;
    let (Some(m_uw), Some(m_wu)) = (report.orders.u_then_w.mean.value(), report.orders.w_then_u.mean.value()) else {
        return Ok(None);
    };
    let m0 = report.classes.empty.mean.value().unwrap_or(0.0);
    let mu = report.classes.u.mean.value().unwrap_or(0.0);
    let mw = report.classes.w.mean.value().unwrap_or(0.0);
    let p = Poset::antichain(&[f.u.as_str(), f.w.as_str()])?;
    let (u, w) = (p.elem(&f.u)?, p.elem(&f.w)?);
    let l = build_lattice(&p, Ideal::EMPTY, 2)?;
    let g = EdgeField::from_fn(&l, |i, a| match (i.is_empty(), a == u) {
        (true, true) => mu - m0,
        (true, false) => mw - m0,
        (false, false) => m_uw - mu,
        (false, true) => m_wu - mw,
    });
    let top = p.full();
    let dp = dp_plan_with(&g, &l, PlanMode::Endpoint(top))?;
    let ex = exhaustive_plan_with(&g, &l, PlanMode::Endpoint(top), exhaustive_cap)?;
    let render = |adds: &[usize]| {
        let order = if adds.first() == Some(&w) { Order::WThenU } else { Order::UThenW };
        Selection::Path(order).render(f)
    };
    Ok(Some(FamilyPlan {
        family: f.clone(),
        dp_argmax: render(&dp.best_path.additions),
        exhaustive_argmax: render(&ex.best_path.additions),
        equal: dp.best_path == ex.best_path && dp.best_value == ex.best_value,
        best_value: m0 + dp.best_value,
    }))
}
