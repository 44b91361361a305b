//! Desk-scale MORL fixture: a deterministic treasure-hunting gridworld,
//! scalarized tabular Q-learning over a weight lattice, expected-return
//! evaluation and Pareto filtering into a [`SolutionSet`].

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::rng;
use crate::solution::{pareto_filter, Policy, Provenance, SolutionSet};

const SIMPLEX_TOL: f64 = 1e-9;

pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

/// A treasure cell. Entering it ends the episode and pays `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Treasure {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// JSON layout of a treasure grid: a submarine starts at `start` and moves
/// up/down/left/right. Cells below a treasure in the same column are rock.
/// Objectives are the collected treasure value and the negated step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreasureGridSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub start: (usize, usize),
    pub treasures: Vec<Treasure>,
    #[serde(default = "default_step_penalty")]
    pub step_penalty: f64,
    pub gamma: f64,
    pub max_steps: usize,
}

fn default_name() -> String {
    "treasure-grid".into()
}

fn default_step_penalty() -> f64 {
    1.0
}

impl TreasureGridSpec {
    /// The classic ten-treasure layout on an 11 × 10 grid.
    pub fn deep_sea_treasure() -> Self {
        let depths = [1, 2, 3, 4, 4, 4, 7, 7, 9, 10];
        let values = [1.0, 2.0, 3.0, 5.0, 8.0, 16.0, 24.0, 50.0, 74.0, 124.0];
        TreasureGridSpec {
            name: "deep-sea-treasure".into(),
            rows: 11,
            cols: 10,
            start: (0, 0),
            treasures: depths
                .iter()
                .zip(values)
                .enumerate()
                .map(|(col, (&row, value))| Treasure { row, col, value })
                .collect(),
            step_penalty: 1.0,
            gamma: 0.99,
            max_steps: 100,
        }
    }

    /// A random layout with one treasure per column whose discounted
    /// (treasure, time) returns lie on a strictly concave curve, so every
    /// treasure is optimal for some linear scalarization.
    pub fn convex_front(seed: u64, n_treasures: usize, gamma: f64) -> Self {
        let mut rng = rng::stream(seed, &[0x7265_6173]);
        let n = n_treasures.max(2);
        let mut depths = Vec::with_capacity(n);
        let mut depth = 1usize;
        for c in 0..n {
            if c > 0 {
                depth += rng.gen_range(0..=2);
            }
            depths.push(depth);
        }
        let time_cost = |t: usize| (0..t).map(|k| gamma.powi(k as i32)).sum::<f64>();
        let mut slope = rng.gen_range(6.0..10.0);
        let mut discounted = rng.gen_range(1.0..2.0);
        let mut prev_time = time_cost(depths[0]);
        let mut treasures = Vec::with_capacity(n);
        for (col, &row) in depths.iter().enumerate() {
            let steps = row + col;
            let t = time_cost(steps);
            if col > 0 {
                discounted += slope * (t - prev_time);
                slope *= rng.gen_range(0.55..0.75);
            }
            prev_time = t;
            let value = discounted / gamma.powi(steps as i32 - 1);
            treasures.push(Treasure {
                row,
                col,
                value: (value * 100.0).round() / 100.0,
            });
        }
        TreasureGridSpec {
            name: format!("convex-treasure-{seed}"),
            rows: depth + 1,
            cols: n,
            start: (0, 0),
            treasures,
            step_penalty: 1.0,
            gamma,
            max_steps: 4 * (depth + n),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Compiles the layout into a tabular environment.
    pub fn build(&self) -> Result<TabularMOEnv> {
        let bad = |m: String| Err(Error::InvalidEnv(m));
        if self.rows == 0 || self.cols == 0 {
            return bad("grid must be at least 1 × 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !self.step_penalty.is_finite() {
            return bad("step_penalty must be finite".into());
        }
        let mut cell = vec![Cell::Water; self.rows * self.cols];
        for t in &self.treasures {
            if t.row >= self.rows || t.col >= self.cols || !t.value.is_finite() {
                return bad(format!("treasure at ({}, {}) is invalid", t.row, t.col));
            }
            cell[t.row * self.cols + t.col] = Cell::Treasure(t.value);
        }
        for t in &self.treasures {
            for r in t.row + 1..self.rows {
                if matches!(cell[r * self.cols + t.col], Cell::Treasure(_)) {
                    return bad(format!("treasure at ({r}, {}) lies under rock", t.col));
                }
                cell[r * self.cols + t.col] = Cell::Rock;
            }
        }
        let (sr, sc) = self.start;
        if sr >= self.rows || sc >= self.cols || cell[sr * self.cols + sc] != Cell::Water {
            return bad("start must be a water cell inside the grid".into());
        }

        let mut index = vec![usize::MAX; cell.len()];
        let mut coords = Vec::new();
        for (k, c) in cell.iter().enumerate() {
            if *c != Cell::Rock {
                index[k] = coords.len();
                coords.push((k / self.cols, k % self.cols));
            }
        }
        let n_states = coords.len();
        let n_actions = ACTION_NAMES.len();
        let mut transition = vec![0; n_states * n_actions];
        let mut reward = vec![vec![0.0; 2]; n_states * n_actions];
        let mut terminal = vec![false; n_states];
        for (s, &(r, c)) in coords.iter().enumerate() {
            terminal[s] = matches!(cell[r * self.cols + c], Cell::Treasure(_));
            for a in 0..n_actions {
                let (nr, nc) = match a {
                    0 => (r.wrapping_sub(1), c),
                    1 => (r + 1, c),
                    2 => (r, c.wrapping_sub(1)),
                    _ => (r, c + 1),
                };
                let next = if nr < self.rows && nc < self.cols && cell[nr * self.cols + nc] != Cell::Rock {
                    index[nr * self.cols + nc]
                } else {
                    s
                };
                transition[s * n_actions + a] = next;
                let (nr, nc) = coords[next];
                let treasure = match cell[nr * self.cols + nc] {
                    Cell::Treasure(v) => v,
                    _ => 0.0,
                };
                reward[s * n_actions + a] = vec![treasure, -self.step_penalty];
            }
        }
        let norm = |x: usize, extent: usize| if extent > 1 { x as f64 / (extent - 1) as f64 } else { 0.0 };
        let state_features = coords
            .iter()
            .map(|&(r, c)| vec![norm(r, self.rows), norm(c, self.cols)])
            .collect();
        TabularMOEnv::new(TabularMOEnv {
            name: self.name.clone(),
            n_states,
            n_actions,
            n_obj: 2,
            transition,
            reward,
            initial_state: index[sr * self.cols + sc],
            terminal,
            gamma: self.gamma,
            max_steps: self.max_steps,
            state_features,
            objective_names: vec!["treasure".into(), "time".into()],
            base_feature_names: vec!["row".into(), "col".into()],
            action_names: ACTION_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Water,
    Rock,
    Treasure(f64),
}

/// Deterministic multi-objective MDP with a single start state.
///
/// State features seen by behavior extraction are the per-state base
/// features followed by a one-hot encoding of the action that led into the
/// state (all zeros for the start of an episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMOEnv {
    pub name: String,
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obj: usize,
    /// Next state, indexed `s * n_actions + a`.
    pub transition: Vec<usize>,
    /// Reward vector, indexed `s * n_actions + a`.
    pub reward: Vec<Vec<f64>>,
    pub initial_state: usize,
    pub terminal: Vec<bool>,
    pub gamma: f64,
    pub max_steps: usize,
    pub state_features: Vec<Vec<f64>>,
    pub objective_names: Vec<String>,
    pub base_feature_names: Vec<String>,
    pub action_names: Vec<String>,
}

impl TabularMOEnv {
    /// Validates table sizes, ranges and finiteness.
    pub fn new(env: TabularMOEnv) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidEnv(m.into()));
        let sa = env.n_states * env.n_actions;
        if env.n_states == 0 || env.n_actions == 0 || env.n_obj == 0 {
            return bad("empty state, action or objective space");
        }
        if env.transition.len() != sa || env.reward.len() != sa || env.terminal.len() != env.n_states {
            return bad("table sizes do not match n_states × n_actions");
        }
        if env.transition.iter().any(|&s| s >= env.n_states) || env.initial_state >= env.n_states {
            return bad("state index out of range");
        }
        if env.reward.iter().any(|r| r.len() != env.n_obj || r.iter().any(|v| !v.is_finite())) {
            return bad("reward vectors must be finite with length n_obj");
        }
        if !(0.0..=1.0).contains(&env.gamma) {
            return bad("gamma outside [0, 1]");
        }
        if env.state_features.len() != env.n_states {
            return bad("one feature vector per state required");
        }
        let dim = env.base_feature_names.len();
        if env
            .state_features
            .iter()
            .any(|f| f.len() != dim || f.iter().any(|v| !v.is_finite()))
        {
            return bad("state features must be finite with length matching feature names");
        }
        if env.objective_names.len() != env.n_obj || env.action_names.len() != env.n_actions {
            return bad("name lists do not match dimensions");
        }
        Ok(env)
    }

    #[inline]
    pub fn step(&self, s: usize, a: usize) -> (usize, &[f64]) {
        let k = s * self.n_actions + a;
        (self.transition[k], &self.reward[k])
    }

    pub fn n_features(&self) -> usize {
        self.base_feature_names.len() + self.n_actions
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.base_feature_names
            .iter()
            .cloned()
            .chain(self.action_names.iter().map(|a| format!("prev_{a}")))
            .collect()
    }

    /// Feature vector of `state` entered via `prev_action`.
    pub fn features(&self, state: usize, prev_action: Option<usize>) -> Vec<f64> {
        let mut f = self.state_features[state].clone();
        f.extend((0..self.n_actions).map(|a| if Some(a) == prev_action { 1.0 } else { 0.0 }));
        f
    }
}

/// All weight vectors with entries `k / resolution` summing to one, in
/// lexicographic order of the integer numerators.
pub fn simplex_lattice(n_obj: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if n_obj < 2 {
        return Err(Error::InvalidParam {
            name: "n_obj",
            reason: format!("need at least 2 objectives, got {n_obj}"),
        });
    }
    if resolution < 1 {
        return Err(Error::InvalidParam {
            name: "resolution",
            reason: "must be at least 1".into(),
        });
    }
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(left - k, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut ints = Vec::new();
    rec(resolution, n_obj, &mut Vec::with_capacity(n_obj), &mut ints);
    Ok(ints
        .into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect())
}

fn check_simplex(weight: &[f64], n_obj: usize) -> Result<()> {
    let sum: f64 = weight.iter().sum();
    if weight.len() != n_obj || weight.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotSimplex(weight.to_vec()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Action-value tables of one trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub weight: Vec<f64>,
    pub n_states: usize,
    pub n_actions: usize,
    /// Learned scalarized values, indexed `s * n_actions + a`.
    pub scalar: Vec<f64>,
    /// Per-objective values of the greedy policy, indexed `s * n_actions + a`.
    pub vector: Vec<Vec<f64>>,
}

impl QTable {
    pub fn row(&self, s: usize) -> &[f64] {
        &self.scalar[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Greedy action with ties broken toward the lowest index.
    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

/// Greedy deterministic policy over a scalarized Q-table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    /// Greedy action per state; `None` for terminal states.
    pub action_of: Vec<Option<usize>>,
    pub q_table: QTable,
}

impl TabularPolicy {
    /// Derives the greedy policy from `q_table` and fills its per-objective
    /// values by evaluating that policy on `env`.
    pub fn from_q_table(env: &TabularMOEnv, mut q_table: QTable) -> Self {
        let action_of: Vec<Option<usize>> = (0..env.n_states)
            .map(|s| (!env.terminal[s]).then(|| q_table.greedy(s)))
            .collect();
        q_table.vector = evaluate_vector_q(env, &action_of);
        TabularPolicy { action_of, q_table }
    }

    /// Actions at the states visited when following the policy from the
    /// start state (the part of the action map that affects behavior).
    pub fn reachable_actions(&self, env: &TabularMOEnv) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut seen = vec![false; env.n_states];
        let mut s = env.initial_state;
        for _ in 0..env.max_steps {
            if env.terminal[s] || seen[s] {
                break;
            }
            seen[s] = true;
            let a = self.action_of[s].expect("non-terminal state has an action");
            out.push((s, a));
            s = env.step(s, a).0;
        }
        out
    }
}

/// Finite-horizon (max_steps) evaluation of a deterministic policy.
fn evaluate_vector_q(env: &TabularMOEnv, action_of: &[Option<usize>]) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; env.n_obj]; env.n_states];
    let mut q = vec![vec![0.0; env.n_obj]; env.n_states * env.n_actions];
    for _ in 0..env.max_steps {
        for s in 0..env.n_states {
            for a in 0..env.n_actions {
                let (next, r) = env.step(s, a);
                let k = s * env.n_actions + a;
                for o in 0..env.n_obj {
                    q[k][o] = if env.terminal[s] {
                        0.0
                    } else {
                        r[o] + env.gamma * v[next][o]
                    };
                }
            }
        }
        let mut changed = false;
        for s in 0..env.n_states {
            if let Some(a) = action_of[s] {
                let new = &q[s * env.n_actions + a];
                if *new != v[s] {
                    v[s].clone_from(new);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    q
}

/// Q-learning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub alpha: f64,
    /// Exploration rate at the first episode, decayed linearly to
    /// `epsilon_end` at the last.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Start each training episode in a uniformly drawn non-terminal state.
    pub exploring_starts: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 3000,
            alpha: 1.0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            exploring_starts: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(Error::InvalidParam {
                name: "episodes",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParam {
                name: "alpha",
                reason: format!("{} outside (0, 1]", self.alpha),
            });
        }
        for (name, e) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("{e} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }

    fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes == 1 {
            return self.epsilon_end;
        }
        let t = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }
}

/// Tabular Q-learning on the scalarized reward `weight · r`.
pub fn train_scalarized(env: &TabularMOEnv, weight: &[f64], cfg: &TrainConfig) -> Result<TabularPolicy> {
    check_simplex(weight, env.n_obj)?;
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, &[]);
    let na = env.n_actions;
    let scalar_reward: Vec<f64> = env.reward.iter().map(|r| dot(weight, r)).collect();
    let starts: Vec<usize> = (0..env.n_states).filter(|&s| !env.terminal[s]).collect();
    let mut q = vec![0.0; env.n_states * na];
    for episode in 0..cfg.episodes {
        let eps = cfg.epsilon(episode);
        let mut s = if cfg.exploring_starts && !starts.is_empty() {
            starts[rng.gen_range(0..starts.len())]
        } else {
            env.initial_state
        };
        for _ in 0..env.max_steps {
            if env.terminal[s] {
                break;
            }
            let a = if rng.gen::<f64>() < eps {
                rng.gen_range(0..na)
            } else {
                argmax(&q[s * na..(s + 1) * na])
            };
            let k = s * na + a;
            let next = env.transition[k];
            let future = if env.terminal[next] {
                0.0
            } else {
                q[next * na..(next + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let target = scalar_reward[k] + env.gamma * future;
            q[k] += cfg.alpha * (target - q[k]);
            s = next;
        }
    }
    let table = QTable {
        weight: weight.to_vec(),
        n_states: env.n_states,
        n_actions: na,
        scalar: q,
        vector: Vec::new(),
    };
    Ok(TabularPolicy::from_q_table(env, table))
}

/// Outcome of evaluating a policy from the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    /// Some episode hit `max_steps` before reaching a terminal state.
    pub truncated: bool,
}

/// Mean discounted per-objective return over `episodes` rollouts.
pub fn expected_returns(env: &TabularMOEnv, policy: &TabularPolicy, episodes: usize) -> Result<Evaluation> {
    if episodes == 0 {
        return Err(Error::InvalidParam {
            name: "episodes",
            reason: "must be at least 1".into(),
        });
    }
    let mut total = vec![0.0; env.n_obj];
    let mut truncated = false;
    for _ in 0..episodes {
        let mut s = env.initial_state;
        let mut discount = 1.0;
        let mut done = env.terminal[s];
        for _ in 0..env.max_steps {
            if done {
                break;
            }
            let a = policy.action_of[s].expect("non-terminal state has an action");
            let (next, r) = env.step(s, a);
            for (t, v) in total.iter_mut().zip(r) {
                *t += discount * v;
            }
            discount *= env.gamma;
            s = next;
            done = env.terminal[s];
        }
        truncated |= !done;
    }
    Ok(Evaluation {
        returns: total.into_iter().map(|t| t / episodes as f64).collect(),
        truncated,
    })
}

/// Settings for building a solution set from an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub resolution: usize,
    pub train: TrainConfig,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            resolution: 100,
            train: TrainConfig::default(),
            eval_episodes: 5,
            seed: 0,
        }
    }
}

/// A generated solution set with the trained policies behind it, keyed by
/// policy id.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSet {
    pub set: SolutionSet,
    pub policies: BTreeMap<String, TabularPolicy>,
}

/// Trains one policy per lattice weight, evaluates them, keeps the Pareto
/// optimal ones and drops policies whose reachable action maps repeat an
/// earlier survivor.
pub fn generate_solution_set(env: &TabularMOEnv, cfg: &GenerateConfig) -> Result<GeneratedSet> {
    let weights = simplex_lattice(env.n_obj, cfg.resolution)?;
    let trained: Vec<(TabularPolicy, Evaluation)> = weights
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let train = TrainConfig {
                seed: rng::derive_seed(cfg.seed, &[i as u64]),
                ..cfg.train.clone()
            };
            let policy = train_scalarized(env, w, &train)?;
            let eval = expected_returns(env, &policy, cfg.eval_episodes)?;
            Ok((policy, eval))
        })
        .collect::<Result<_>>()?;

    let width = weights.len().saturating_sub(1).to_string().len().max(2);
    let ids: Vec<String> = (0..weights.len()).map(|i| format!("p{i:0width$}")).collect();
    let candidates = ids
        .iter()
        .zip(&trained)
        .map(|(id, (_, e))| (id.clone(), e.returns.clone()))
        .collect();
    let survivors = pareto_filter(candidates)?;

    let index_of: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut seen_maps: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut policies = Vec::new();
    let mut tables = BTreeMap::new();
    let mut truncated = Vec::new();
    for (id, returns) in survivors {
        let i = index_of[id.as_str()];
        let (policy, eval) = &trained[i];
        let key = policy.reachable_actions(env);
        if seen_maps.contains(&key) {
            continue;
        }
        seen_maps.push(key);
        if eval.truncated {
            truncated.push(id.clone());
        }
        policies.push(Policy::new(id.clone(), returns));
        tables.insert(id, policy.clone());
    }
    if policies.len() < 2 {
        return Err(Error::TooFewParetoPolicies(policies.len()));
    }

    let mut provenance = Provenance::new();
    provenance.insert("environment".into(), json!(env.name));
    provenance.insert("seed".into(), json!(cfg.seed));
    provenance.insert("weight_generation".into(), json!("simplex-lattice"));
    provenance.insert("resolution".into(), json!(cfg.resolution));
    provenance.insert("n_weights".into(), json!(weights.len()));
    provenance.insert("train".into(), serde_json::to_value(&cfg.train).expect("serializable"));
    provenance.insert("eval_episodes".into(), json!(cfg.eval_episodes));
    provenance.insert("truncated_policies".into(), json!(truncated));
    let set = SolutionSet::new(env.objective_names.clone(), env.feature_names(), policies, provenance)?;
    Ok(GeneratedSet { set, policies: tables })
}
