//! Event-log generation from a [`CausalModel`].

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::log::{Case, Event, EventLog};
use super::model::{CausalModel, Trajectory};
use crate::error::{Error, Result};
use crate::path::Path;

/// A simulated episode with its latent quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedEpisode {
    pub trajectory: Trajectory,
    pub reward_mean: f64,
    pub outcome: f64,
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

/// Samples `n` observational episodes.
pub fn simulate_episodes(m: &CausalModel, n: usize, seed: u64) -> Result<Vec<SimulatedEpisode>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let trajectory = m.sample(&mut rng);
            let path = Path::new(m.base(), trajectory.additions());
            let reward_mean = m.reward_mean(trajectory.x0, &path, trajectory.last_context())?;
            let outcome = f64::from(u8::from(rand::Rng::gen::<f64>(&mut rng) < m.outcome_prob()));
            Ok(SimulatedEpisode {
                trajectory,
                reward_mean,
                outcome,
            })
        })
        .collect()
}

/// Writes `n` episodes as an event log: one event per action an hour apart,
/// then the target activity, then an end event `(p − μ) / λ` days later so
/// that `outcome − λ · remaining days` has mean `μ`.
///
/// Fails when some sampled episode has `μ > p`, or `λ = 0` with `μ ≠ p`,
/// since no non-negative delay realizes that mean.
pub fn simulate_log(m: &CausalModel, n: usize, seed: u64) -> Result<EventLog> {
    let episodes = simulate_episodes(m, n, seed)?;
    let p = m.poset();
    let start = epoch();
    let mut cases = Vec::with_capacity(n);
    for (k, ep) in episodes.iter().enumerate() {
        let gap = m.outcome_prob() - ep.reward_mean;
        let days = if m.lambda() == 0.0 {
            if gap != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "reward mean {} differs from the outcome probability with lambda = 0",
                    ep.reward_mean
                )));
            }
            0.0
        } else {
            gap / m.lambda()
        };
        if days < 0.0 {
            return Err(Error::InvalidModel(format!(
                "reward mean {} exceeds the outcome probability {}",
                ep.reward_mean,
                m.outcome_prob()
            )));
        }
        let t0 = start + Duration::hours(k as i64);
        let mut events: Vec<Event> = ep
            .trajectory
            .steps
            .iter()
            .enumerate()
            .map(|(s, &(a, _))| Event {
                activity: p.id(a).to_string(),
                timestamp: t0 + Duration::hours(s as i64),
            })
            .collect();
        let anchor = t0 + Duration::hours(events.len() as i64);
        events.push(Event {
            activity: m.target_activity().to_string(),
            timestamp: anchor,
        });
        let delay = Duration::milliseconds((days * 86_400_000.0).round() as i64);
        if delay > Duration::zero() {
            events.push(Event {
                activity: m.end_activity().to_string(),
                timestamp: anchor + delay,
            });
        }
        cases.push(Case {
            id: format!("case{k:06}"),
            events,
            outcome: ep.outcome,
        });
    }
    Ok(EventLog {
        cases,
        outcome_missing: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::family::{extract_episodes, FamilySpec, Order};
    use crate::causal::model::ModelSpec;

    #[test]
    fn log_rewards_recover_means() {
        let m = ModelSpec::family_preset().build().unwrap();
        let log = simulate_log(&m, 200, 3).unwrap();
        let eps = simulate_episodes(&m, 200, 3).unwrap();
        let fam = FamilySpec::new("u", "w", "v", m.lambda()).unwrap();
        let extracted = extract_episodes(&log, &fam);
        assert_eq!(extracted.len(), 200);
        for (x, e) in extracted.iter().zip(&eps) {
            let expected = e.outcome - m.outcome_prob() + e.reward_mean;
            assert!((x.reward - expected).abs() < 1e-9);
            let adds = e.trajectory.additions();
            let order = (adds.len() == 2).then(|| if adds[0] == 0 { Order::UThenW } else { Order::WThenU });
            assert_eq!(x.order, order);
        }
    }

    #[test]
    fn unrealizable_means_fail() {
        let mut spec = ModelSpec::family_preset();
        spec.edge_reward[0].value = 2.0;
        let m = spec.build().unwrap();
        assert!(matches!(simulate_log(&m, 500, 1), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn seeded() {
        let m = ModelSpec::family_preset().build().unwrap();
        assert_eq!(simulate_log(&m, 50, 9).unwrap(), simulate_log(&m, 50, 9).unwrap());
    }
}
