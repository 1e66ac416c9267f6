//! Order-effect estimation for a family from its episodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{EndpointClass, Episode, FamilySpec, Order};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_SEED: u64 = 20_240_601;

/// A quantity that may be unavailable: no data on a required side, or too
/// little data for the requested statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Estimate<T> {
    Value(T),
    Unidentified,
    InsufficientN,
}

impl<T: Copy> Estimate<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Estimate::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupSummary {
    pub count: usize,
    pub mean: Estimate<f64>,
}

impl GroupSummary {
    fn of(rewards: &[f64]) -> Self {
        GroupSummary {
            count: rewards.len(),
            mean: mean(rewards).map_or(Estimate::Unidentified, Estimate::Value),
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    /// Minimum episodes per order for a confidence interval.
    pub min_n: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
            seed: DEFAULT_SEED,
            min_n: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classes {
    pub empty: GroupSummary,
    pub u: GroupSummary,
    pub w: GroupSummary,
    pub uw: GroupSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orders {
    pub u_then_w: GroupSummary,
    pub w_then_u: GroupSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationReport {
    pub family: FamilySpec,
    pub classes: Classes,
    pub orders: Orders,
    /// `κ̂ = mean(w→u) − mean(u→w)`.
    pub kappa: Estimate<f64>,
    /// Stratified percentile bootstrap interval, widened to contain `κ̂`.
    pub ci: Estimate<(f64, f64)>,
    /// `Φ^ρ = mean(u→w)`, the reference-path score.
    pub reference_score: Estimate<f64>,
    pub reference_supported: bool,
    pub two_sided_supported: bool,
    /// `|Φ^ρ + κ̂ − mean(w→u)|`.
    pub reconstruction_error: Estimate<f64>,
    pub config: EstimateConfig,
    /// Means pool over unobserved contexts: they are marginal quantities.
    pub pooling: &'static str,
}

pub fn split_rewards(episodes: &[Episode]) -> ([Vec<f64>; 4], [Vec<f64>; 2]) {
    let mut classes: [Vec<f64>; 4] = Default::default();
    let mut orders: [Vec<f64>; 2] = Default::default();
    for e in episodes {
        classes[e.class as usize].push(e.reward);
        match e.order {
            Some(Order::UThenW) => orders[0].push(e.reward),
            Some(Order::WThenU) => orders[1].push(e.reward),
            None => {}
        }
    }
    (classes, orders)
}

/// Linear-interpolated empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample_mean(rng: &mut ChaCha8Rng, xs: &[f64]) -> f64 {
    let n = xs.len();
    (0..n).map(|_| xs[rng.gen_range(0..n)]).sum::<f64>() / n as f64
}

/// Percentile interval for `mean(b) − mean(a)`, resampling within each
/// group. Resample `r` uses stream `r` of the seeded generator, so the result
/// does not depend on thread scheduling.
pub fn bootstrap_ci(a: &[f64], b: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    let mut stats: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            resample_mean(&mut rng, b) - resample_mean(&mut rng, a)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    (quantile(&stats, alpha), quantile(&stats, 1.0 - alpha))
}

pub fn estimate_family(episodes: &[Episode], family: &FamilySpec, config: &EstimateConfig) -> EstimationReport {
    let (classes, orders) = split_rewards(episodes);
    let [c_empty, c_u, c_w, c_uw] = &classes;
    let [o_uw, o_wu] = &orders;
    let m_uw = mean(o_uw);
    let m_wu = mean(o_wu);
    let kappa = match (m_uw, m_wu) {
        (Some(a), Some(b)) => Estimate::Value(b - a),
        _ => Estimate::Unidentified,
    };
    let ci = match kappa {
        Estimate::Value(k) if o_uw.len() >= config.min_n && o_wu.len() >= config.min_n => {
            let (lo, hi) = bootstrap_ci(o_uw, o_wu, config.resamples.max(1), config.level, config.seed);
            Estimate::Value((lo.min(k), hi.max(k)))
        }
        Estimate::Value(_) => Estimate::InsufficientN,
        _ => Estimate::Unidentified,
    };
    let reconstruction_error = match (m_uw, kappa, m_wu) {
        (Some(r), Estimate::Value(k), Some(b)) => Estimate::Value((r + k - b).abs()),
        _ => Estimate::Unidentified,
    };
    EstimationReport {
        family: family.clone(),
        classes: Classes {
            empty: GroupSummary::of(c_empty),
            u: GroupSummary::of(c_u),
            w: GroupSummary::of(c_w),
            uw: GroupSummary::of(c_uw),
        },
        orders: Orders {
            u_then_w: GroupSummary::of(o_uw),
            w_then_u: GroupSummary::of(o_wu),
        },
        kappa,
        ci,
        reference_score: m_uw.map_or(Estimate::Unidentified, Estimate::Value),
        reference_supported: !o_uw.is_empty(),
        two_sided_supported: !o_uw.is_empty() && !o_wu.is_empty(),
        reconstruction_error,
        config: config.clone(),
        pooling: "marginal over unobserved contexts",
    }
}

impl EstimationReport {
    pub fn class(&self, c: EndpointClass) -> &GroupSummary {
        match c {
            EndpointClass::Empty => &self.classes.empty,
            EndpointClass::U => &self.classes.u,
            EndpointClass::W => &self.classes.w,
            EndpointClass::Uw => &self.classes.uw,
        }
    }
}
