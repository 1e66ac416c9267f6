//! A finite-state sequential decision model used as a simulator with known
//! ground truth.
//!
//! States are `(I, x)`: an ideal of the slice and a context index. At each
//! state the behaviour policy picks an admissible action with the given
//! propensities or stops with the remaining mass; contexts then move by the
//! kernel. The mean reward of an episode that started in context `x0`,
//! followed path `γ` and ended in context `x_L` is
//! `Σ g_{x0}(γ) + β(I_L, x_L) + shift(x0, γ)`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSlice;
use crate::path::Path;
use crate::poset::{parse_poset, Elem, Ideal, Poset};
use crate::valuation::{path_value, EdgeField};

const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CausalModel {
    slice: LatticeSlice,
    contexts: Vec<String>,
    initial: Vec<f64>,
    propensity: HashMap<(Ideal, usize), Vec<(Elem, f64)>>,
    kernel: HashMap<(Ideal, usize, Elem), Vec<f64>>,
    edge_reward: Vec<EdgeField>,
    terminal: HashMap<(Ideal, usize), f64>,
    path_shift: HashMap<(usize, Vec<Elem>), f64>,
    outcome_prob: f64,
    lambda: f64,
    target_activity: String,
    end_activity: String,
}

/// One observable episode: initial context and `(action, next context)`
/// steps. The episode stops after the last step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trajectory {
    pub x0: usize,
    pub steps: Vec<(Elem, usize)>,
}

impl Trajectory {
    pub fn additions(&self) -> Vec<Elem> {
        self.steps.iter().map(|&(a, _)| a).collect()
    }

    pub fn last_context(&self) -> usize {
        self.steps.last().map_or(self.x0, |&(_, x)| x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawEntry {
    pub prob: f64,
    pub reward_mean: f64,
}

/// Every positive-probability trajectory with its probability and mean
/// reward.
pub type ObservationalLaw = BTreeMap<Trajectory, LawEntry>;

fn check_distribution(what: &str, probs: &[f64], total: Option<f64>) -> Result<()> {
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidModel(format!("{what}: probabilities must be finite and non-negative")));
    }
    let sum: f64 = probs.iter().sum();
    match total {
        Some(t) if (sum - t).abs() > PROB_TOL => {
            Err(Error::InvalidModel(format!("{what}: probabilities sum to {sum}, expected {t}")))
        }
        None if sum > 1.0 + PROB_TOL => Err(Error::InvalidModel(format!("{what}: probabilities sum to {sum} > 1"))),
        _ => Ok(()),
    }
}

/// Index drawn from `probs`, or `None` for the remaining mass.
fn draw<R: Rng>(rng: &mut R, probs: impl IntoIterator<Item = f64>) -> Option<usize> {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.into_iter().enumerate() {
        acc += p;
        if r < acc {
            return Some(k);
        }
    }
    None
}

impl CausalModel {
    /// A model with uniform initial law, no actions (every state stops),
    /// identity kernel and zero rewards.
    pub fn new(poset: &Poset, base: Ideal, horizon: usize, contexts: Vec<String>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::InvalidModel("at least one context is required".into()));
        }
        let slice = crate::lattice::build_lattice(poset, base, horizon)?;
        let n = contexts.len();
        let edge_reward = (0..n).map(|_| EdgeField::zero(&slice)).collect();
        Ok(CausalModel {
            slice,
            initial: vec![1.0 / n as f64; n],
            contexts,
            propensity: HashMap::new(),
            kernel: HashMap::new(),
            edge_reward,
            terminal: HashMap::new(),
            path_shift: HashMap::new(),
            outcome_prob: 0.5,
            lambda: crate::causal::family::DEFAULT_LAMBDA,
            target_activity: "target".into(),
            end_activity: "end".into(),
        })
    }

    pub fn slice(&self) -> &LatticeSlice {
        &self.slice
    }

    pub fn poset(&self) -> &Poset {
        self.slice.poset()
    }

    pub fn base(&self) -> Ideal {
        self.slice.base()
    }

    pub fn horizon(&self) -> usize {
        self.slice.depth()
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn outcome_prob(&self) -> f64 {
        self.outcome_prob
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn target_activity(&self) -> &str {
        &self.target_activity
    }

    pub fn end_activity(&self) -> &str {
        &self.end_activity
    }

    fn check_context(&self, x: usize) -> Result<()> {
        if x < self.contexts.len() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("context index {x} out of range")))
        }
    }

    fn check_edge(&self, i: Ideal, a: Elem) -> Result<()> {
        if self.slice.edge_index(i, a).is_none() {
            return Err(Error::InvalidModel(format!("({}) is not an edge of the model", self.slice.render_edge(i, a))));
        }
        Ok(())
    }

    pub fn render_state(&self, i: Ideal, x: usize) -> String {
        format!("({}, {})", self.poset().render(i), self.contexts[x])
    }

    pub fn set_initial(&mut self, probs: Vec<f64>) -> Result<()> {
        if probs.len() != self.contexts.len() {
            return Err(Error::InvalidModel("initial law has the wrong length".into()));
        }
        check_distribution("initial law", &probs, Some(1.0))?;
        self.initial = probs;
        Ok(())
    }

    /// Action probabilities at `(i, x)`; the remainder is the stop
    /// probability.
    pub fn set_propensity(&mut self, i: Ideal, x: usize, probs: Vec<(Elem, f64)>) -> Result<()> {
        self.check_context(x)?;
        for (k, &(a, _)) in probs.iter().enumerate() {
            self.check_edge(i, a)?;
            if probs[..k].iter().any(|&(b, _)| b == a) {
                return Err(Error::InvalidModel(format!("duplicate action `{}`", self.poset().id(a))));
            }
        }
        let ps: Vec<f64> = probs.iter().map(|&(_, p)| p).collect();
        check_distribution(&format!("propensity at {}", self.render_state(i, x)), &ps, None)?;
        let mut probs = probs;
        probs.sort_by_key(|&(a, _)| a);
        self.propensity.insert((i, x), probs);
        Ok(())
    }

    /// Law of the next context after taking `a` at `(i, x)`.
    pub fn set_kernel(&mut self, i: Ideal, x: usize, a: Elem, next: Vec<f64>) -> Result<()> {
        self.check_context(x)?;
        self.check_edge(i, a)?;
        if next.len() != self.contexts.len() {
            return Err(Error::InvalidModel("kernel row has the wrong length".into()));
        }
        check_distribution("kernel row", &next, Some(1.0))?;
        self.kernel.insert((i, x, a), next);
        Ok(())
    }

    /// `g_{x0}(i, a)`.
    pub fn set_edge_reward(&mut self, x0: usize, i: Ideal, a: Elem, value: f64) -> Result<()> {
        self.check_context(x0)?;
        self.check_edge(i, a)?;
        self.edge_reward[x0].set(i, a, value);
        Ok(())
    }

    pub fn edge_reward(&self, x0: usize) -> &EdgeField {
        &self.edge_reward[x0]
    }

    /// `β(i, x)`.
    pub fn set_terminal(&mut self, i: Ideal, x: usize, value: f64) -> Result<()> {
        self.check_context(x)?;
        self.slice.require(i)?;
        self.terminal.insert((i, x), value);
        Ok(())
    }

    /// Adds `delta` to the mean reward of episodes that start in `x0` and
    /// follow exactly `additions` from the base.
    pub fn add_path_shift(&mut self, x0: usize, additions: Vec<Elem>, delta: f64) -> Result<()> {
        self.check_context(x0)?;
        Path::new(self.base(), additions.clone()).check(self.poset())?;
        if delta != 0.0 {
            *self.path_shift.entry((x0, additions)).or_insert(0.0) += delta;
        }
        Ok(())
    }

    pub fn set_outcome_prob(&mut self, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidModel(format!("outcome probability {p} outside [0, 1]")));
        }
        self.outcome_prob = p;
        Ok(())
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<()> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidModel(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(())
    }

    pub fn set_activities(&mut self, target: &str, end: &str) -> Result<()> {
        for name in [target, end] {
            if self.poset().elem(name).is_ok() {
                return Err(Error::InvalidModel(format!("activity `{name}` collides with a poset element")));
            }
        }
        if target == end || target.is_empty() || end.is_empty() {
            return Err(Error::InvalidModel("target and end activities must be distinct and non-empty".into()));
        }
        self.target_activity = target.into();
        self.end_activity = end.into();
        Ok(())
    }

    /// Action probabilities at `(i, x)` in τ order.
    pub fn propensity(&self, i: Ideal, x: usize) -> &[(Elem, f64)] {
        self.propensity.get(&(i, x)).map_or(&[], Vec::as_slice)
    }

    pub fn action_prob(&self, i: Ideal, x: usize, a: Elem) -> f64 {
        self.propensity(i, x)
            .iter()
            .find(|&&(b, _)| b == a)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn stop_prob(&self, i: Ideal, x: usize) -> f64 {
        (1.0 - self.propensity(i, x).iter().map(|&(_, p)| p).sum::<f64>()).max(0.0)
    }

    /// `K(x' | i, x, a)`; the identity when unset.
    pub fn transition(&self, i: Ideal, x: usize, a: Elem, next: usize) -> f64 {
        match self.kernel.get(&(i, x, a)) {
            Some(row) => row[next],
            None => f64::from(u8::from(next == x)),
        }
    }

    fn check_path(&self, path: &Path) -> Result<()> {
        if path.start != self.base() {
            return Err(Error::Precondition(format!(
                "paths must start at the model base {}",
                self.poset().render(self.base())
            )));
        }
        path.check(self.poset())?;
        for (i, a) in path.steps() {
            if self.slice.edge_index(i, a).is_none() {
                return Err(Error::NotInSlice(self.poset().render(i.with(a))));
            }
        }
        Ok(())
    }

    /// Mean reward of an episode from `x0` along `path` ending in `x_last`.
    pub fn reward_mean(&self, x0: usize, path: &Path, x_last: usize) -> Result<f64> {
        let g = path_value(&self.edge_reward[x0], &self.slice, path)?;
        let beta = self.terminal.get(&(path.end(), x_last)).copied().unwrap_or(0.0);
        let shift = self
            .path_shift
            .get(&(x0, path.additions.clone()))
            .copied()
            .unwrap_or(0.0);
        Ok(g + beta + shift)
    }

    /// `E[R | do(γ), x0]` by backward recursion through the kernel. Needs no
    /// positivity.
    pub fn true_value(&self, x0: usize, path: &Path) -> Result<f64> {
        self.check_context(x0)?;
        self.check_path(path)?;
        let n = self.contexts.len();
        let mut v: Vec<f64> = (0..n)
            .map(|x| self.reward_mean(x0, path, x))
            .collect::<Result<_>>()?;
        let steps: Vec<(Ideal, Elem)> = path.steps().collect();
        for &(i, a) in steps.iter().rev() {
            v = (0..n)
                .map(|x| (0..n).map(|y| self.transition(i, x, a, y) * v[y]).sum())
                .collect();
        }
        Ok(v[x0])
    }

    /// `Σ_{x0} P(x0) · true_value(x0, γ)`.
    pub fn marginal_true_value(&self, path: &Path) -> Result<f64> {
        let mut total = 0.0;
        for (x0, &p) in self.initial.iter().enumerate() {
            if p > 0.0 {
                total += p * self.true_value(x0, path)?;
            }
        }
        Ok(total)
    }

    /// `true_value(x0, (v, u)) − true_value(x0, (u, v))` for a diamond at
    /// the base.
    pub fn local_order_effect(&self, x0: usize, u: Elem, v: Elem) -> Result<f64> {
        let base = self.base();
        Ok(self.true_value(x0, &Path::new(base, vec![v, u]))? - self.true_value(x0, &Path::new(base, vec![u, v]))?)
    }

    pub fn observational_law(&self) -> ObservationalLaw {
        let mut law = ObservationalLaw::new();
        for (x0, &p0) in self.initial.iter().enumerate() {
            if p0 > 0.0 {
                let mut steps = Vec::new();
                self.expand_law(x0, self.base(), x0, p0, &mut steps, &mut law);
            }
        }
        law
    }

    fn expand_law(
        &self,
        x0: usize,
        i: Ideal,
        x: usize,
        prob: f64,
        steps: &mut Vec<(Elem, usize)>,
        law: &mut ObservationalLaw,
    ) {
        let stop = self.stop_prob(i, x);
        if stop > 0.0 {
            let traj = Trajectory {
                x0,
                steps: steps.clone(),
            };
            let path = Path::new(self.base(), traj.additions());
            let reward_mean = self
                .reward_mean(x0, &path, x)
                .expect("observed paths lie in the slice");
            law.insert(
                traj,
                LawEntry {
                    prob: prob * stop,
                    reward_mean,
                },
            );
        }
        for &(a, pa) in self.propensity(i, x) {
            if pa <= 0.0 {
                continue;
            }
            for y in 0..self.contexts.len() {
                let k = self.transition(i, x, a, y);
                if k > 0.0 {
                    steps.push((a, y));
                    self.expand_law(x0, i.with(a), y, prob * pa * k, steps, law);
                    steps.pop();
                }
            }
        }
    }

    /// The g-formula value of `γ` from `x0`, computed from the
    /// observational law alone. Fails with `Unsupported` at the first stage
    /// where the required action (or the final stop) has zero probability.
    pub fn g_formula_value(&self, x0: usize, path: &Path) -> Result<f64> {
        self.check_context(x0)?;
        self.check_path(path)?;
        g_formula_from_law(&self.observational_law(), self, x0, path)
    }

    /// Samples one observational episode.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Trajectory {
        let x0 = draw(rng, self.initial.iter().copied()).unwrap_or(self.contexts.len() - 1);
        let (mut i, mut x) = (self.base(), x0);
        let mut steps = Vec::new();
        loop {
            let probs = self.propensity(i, x);
            let Some(k) = draw(rng, probs.iter().map(|&(_, p)| p)) else {
                break;
            };
            let a = probs[k].0;
            let y = draw(rng, (0..self.contexts.len()).map(|y| self.transition(i, x, a, y))).unwrap_or(x);
            steps.push((a, y));
            i = i.with(a);
            x = y;
        }
        Trajectory { x0, steps }
    }

    /// Rewards of `n` episodes forced along `path`, with `x0` fixed or drawn
    /// from the initial law. Realized reward is `O − p + μ` with
    /// `O ~ Bernoulli(p)`.
    pub fn simulate_forced<R: Rng>(&self, rng: &mut R, x0: Option<usize>, path: &Path, n: usize) -> Result<Vec<f64>> {
        self.check_path(path)?;
        let steps: Vec<(Ideal, Elem)> = path.steps().collect();
        let nctx = self.contexts.len();
        let mut means: HashMap<(usize, usize), f64> = HashMap::new();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let start = match x0 {
                Some(x) => x,
                None => draw(rng, self.initial.iter().copied()).unwrap_or(nctx - 1),
            };
            let mut x = start;
            for &(i, a) in &steps {
                x = draw(rng, (0..nctx).map(|y| self.transition(i, x, a, y))).unwrap_or(x);
            }
            let mu = match means.get(&(start, x)) {
                Some(&m) => m,
                None => {
                    let m = self.reward_mean(start, path, x)?;
                    means.insert((start, x), m);
                    m
                }
            };
            out.push(self.realize(rng, mu));
        }
        Ok(out)
    }

    pub(crate) fn realize<R: Rng>(&self, rng: &mut R, mu: f64) -> f64 {
        let o = f64::from(u8::from(rng.gen::<f64>() < self.outcome_prob));
        o - self.outcome_prob + mu
    }
}

/// History-conditional g-formula over a law.
pub fn g_formula_from_law(law: &ObservationalLaw, m: &CausalModel, x0: usize, path: &Path) -> Result<f64> {
    fn rec(
        law: &ObservationalLaw,
        m: &CausalModel,
        x0: usize,
        adds: &[Elem],
        hist: &mut Vec<(Elem, usize)>,
    ) -> Result<f64> {
        let b = hist.len();
        let here = adds[..b].iter().fold(m.base(), |acc, &a| acc.with(a));
        let x = hist.last().map_or(x0, |&(_, y)| y);
        let unsupported = || Error::Unsupported {
            stage: b,
            state: m.render_state(here, x),
        };
        if b == adds.len() {
            let key = Trajectory {
                x0,
                steps: hist.clone(),
            };
            return law.get(&key).map(|e| e.reward_mean).ok_or_else(unsupported);
        }
        let a = adds[b];
        let n = m.contexts().len();
        let mut mass = vec![0.0; n];
        for (t, e) in law.range(Trajectory { x0, steps: hist.clone() }..) {
            if t.x0 != x0 || t.steps.len() < b || t.steps[..b] != hist[..] {
                break;
            }
            if t.steps.len() > b && t.steps[b].0 == a {
                mass[t.steps[b].1] += e.prob;
            }
        }
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(unsupported());
        }
        let mut value = 0.0;
        for (y, &my) in mass.iter().enumerate() {
            if my > 0.0 {
                hist.push((a, y));
                value += my / total * rec(law, m, x0, adds, hist)?;
                hist.pop();
            }
        }
        Ok(value)
    }
    if !law.keys().any(|t| t.x0 == x0) {
        return Err(Error::Unsupported {
            stage: 0,
            state: m.render_state(m.base(), x0),
        });
    }
    rec(law, m, x0, &path.additions, &mut Vec::new())
}

fn default_base() -> String {
    "-".into()
}

fn default_outcome_prob() -> f64 {
    0.5
}

fn default_lambda() -> f64 {
    crate::causal::family::DEFAULT_LAMBDA
}

fn default_target() -> String {
    "target".into()
}

fn default_end() -> String {
    "end".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropensitySpec {
    pub ideal: String,
    pub context: String,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub ideal: String,
    pub context: String,
    pub action: String,
    pub next: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRewardSpec {
    pub context: String,
    pub ideal: String,
    pub action: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalSpec {
    pub ideal: String,
    pub context: String,
    pub value: f64,
}

/// Serializable description of a [`CausalModel`]. Ideals use the `a+b`
/// notation and `-` for the empty ideal; unset entries take the model
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Poset file contents.
    pub poset: String,
    #[serde(default = "default_base")]
    pub base: String,
    pub horizon: usize,
    pub contexts: Vec<String>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub propensity: Vec<PropensitySpec>,
    #[serde(default)]
    pub kernel: Vec<KernelSpec>,
    #[serde(default)]
    pub edge_reward: Vec<EdgeRewardSpec>,
    #[serde(default)]
    pub terminal_reward: Vec<TerminalSpec>,
    #[serde(default = "default_outcome_prob")]
    pub outcome_prob: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_target")]
    pub target_activity: String,
    #[serde(default = "default_end")]
    pub end_activity: String,
}

impl ModelSpec {
    pub fn build(&self) -> Result<CausalModel> {
        let p = parse_poset(&self.poset)?;
        let base = p.parse_ideal(&self.base)?;
        let mut m = CausalModel::new(&p, base, self.horizon, self.contexts.clone())?;
        let ctx = |name: &str| {
            self.contexts
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidModel(format!("unknown context `{name}`")))
        };
        if let Some(init) = &self.initial {
            m.set_initial(init.clone())?;
        }
        for s in &self.propensity {
            let probs = s
                .probs
                .iter()
                .map(|(a, &q)| Ok((p.elem(a)?, q)))
                .collect::<Result<Vec<_>>>()?;
            m.set_propensity(p.parse_ideal(&s.ideal)?, ctx(&s.context)?, probs)?;
        }
        for s in &self.kernel {
            m.set_kernel(p.parse_ideal(&s.ideal)?, ctx(&s.context)?, p.elem(&s.action)?, s.next.clone())?;
        }
        for s in &self.edge_reward {
            m.set_edge_reward(ctx(&s.context)?, p.parse_ideal(&s.ideal)?, p.elem(&s.action)?, s.value)?;
        }
        for s in &self.terminal_reward {
            m.set_terminal(p.parse_ideal(&s.ideal)?, ctx(&s.context)?, s.value)?;
        }
        m.set_outcome_prob(self.outcome_prob)?;
        m.set_lambda(self.lambda)?;
        m.set_activities(&self.target_activity, &self.end_activity)?;
        Ok(m)
    }

    /// A two-activity family `(u, w -> target)` with two contexts and
    /// context-free propensities. The marginal order effect is 0.3125.
    pub fn family_preset() -> Self {
        let er = |context: &str, ideal: &str, action: &str, value: f64| EdgeRewardSpec {
            context: context.into(),
            ideal: ideal.into(),
            action: action.into(),
            value,
        };
        let prop = |ideal: &str, context: &str, probs: &[(&str, f64)]| PropensitySpec {
            ideal: ideal.into(),
            context: context.into(),
            probs: probs.iter().map(|&(a, q)| (a.to_string(), q)).collect(),
        };
        let mut propensity = Vec::new();
        for c in ["low", "high"] {
            propensity.push(prop("-", c, &[("u", 0.375), ("w", 0.375)]));
            propensity.push(prop("u", c, &[("w", 0.75)]));
            propensity.push(prop("w", c, &[("u", 0.75)]));
        }
        ModelSpec {
            poset: "elem u\nelem w\n".into(),
            base: "-".into(),
            horizon: 2,
            contexts: vec!["low".into(), "high".into()],
            initial: Some(vec![0.5, 0.5]),
            propensity,
            kernel: Vec::new(),
            edge_reward: vec![
                er("low", "-", "u", -0.125),
                er("low", "-", "w", -0.25),
                er("low", "w", "u", 0.25),
                er("high", "u", "w", -0.5),
            ],
            terminal_reward: Vec::new(),
            outcome_prob: 0.5,
            lambda: default_lambda(),
            target_activity: "v".into(),
            end_activity: "end".into(),
        }
    }
}
