//! Behavior extraction: roll each policy out many times, score every unique
//! visited state by how much the action choice matters there, and keep the
//! top states as the policy's behavior matrix.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixture::{TabularMOEnv, TabularPolicy};
use crate::rng::{self, Rng};
use crate::solution::{BehaviorMatrix, N_STATES};

/// Spread between the best and worst action value in a state.
pub fn state_importance(q_row: &[f64]) -> Result<f64> {
    if q_row.is_empty() {
        return Err(Error::Empty("q_row"));
    }
    if q_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("q_row"));
    }
    let max = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = q_row.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// A unique visited state with its importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredState {
    pub state: usize,
    pub features: Vec<f64>,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightsConfig {
    pub runs: usize,
    /// Probability of a uniformly random action at each step of a
    /// collection run.
    pub epsilon_vis: f64,
    pub k: usize,
    /// Steps before and after an important state shown in its log window.
    pub window: usize,
}

impl Default for HighlightsConfig {
    fn default() -> Self {
        HighlightsConfig {
            runs: 50,
            epsilon_vis: 0.05,
            k: N_STATES,
            window: 3,
        }
    }
}

/// One visited step: the state and the action that led into it.
pub type Visit = (usize, Option<usize>);

/// Everything gathered during the collection runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    /// Unique states in order of first visit.
    pub states: Vec<ScoredState>,
    /// `(run, step)` of each state's first visit.
    pub first_seen: Vec<(usize, usize)>,
    pub trajectories: Vec<Vec<Visit>>,
}

fn dedup_key(features: &[f64]) -> Vec<i64> {
    features.iter().map(|f| (f * 1e9).round() as i64).collect()
}

/// Executes `runs` rollouts from the start state with `epsilon_vis`
/// exploration and records every visited state once.
pub fn collect_states(
    env: &TabularMOEnv,
    policy: &TabularPolicy,
    runs: usize,
    epsilon_vis: f64,
    rng: &mut Rng,
) -> Result<Collection> {
    let mut seen = HashSet::new();
    let mut states = Vec::new();
    let mut first_seen = Vec::new();
    let mut trajectories = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut s = env.initial_state;
        let mut traj: Vec<Visit> = vec![(s, None)];
        for _ in 0..env.max_steps {
            if env.terminal[s] {
                break;
            }
            let a = if epsilon_vis > 0.0 && rng.gen::<f64>() < epsilon_vis {
                rng.gen_range(0..env.n_actions)
            } else {
                policy.action_of[s].expect("non-terminal state has an action")
            };
            s = env.step(s, a).0;
            traj.push((s, Some(a)));
        }
        for (step, &(state, prev)) in traj.iter().enumerate() {
            let features = env.features(state, prev);
            if seen.insert(dedup_key(&features)) {
                let importance = state_importance(policy.q_table.row(state))?;
                states.push(ScoredState {
                    state,
                    features,
                    importance,
                });
                first_seen.push((run, step));
            }
        }
        trajectories.push(traj);
    }
    Ok(Collection {
        states,
        first_seen,
        trajectories,
    })
}

/// The selected top states.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub matrix: BehaviorMatrix,
    /// Indices into the scored states, one per column.
    pub columns: Vec<usize>,
    pub padded: bool,
}

/// Top-`k` states by descending importance (ties: ascending feature vector)
/// as an `n_feat × k` matrix. With fewer than `k` states the last selected
/// column is repeated.
pub fn behavior_matrix(states: &[ScoredState], k: usize) -> Result<Selection> {
    if states.is_empty() {
        return Err(Error::Empty("scored states"));
    }
    if k == 0 {
        return Err(Error::InvalidParam {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&states[a], &states[b]);
        sb.importance.total_cmp(&sa.importance).then_with(|| {
            sa.features
                .iter()
                .zip(&sb.features)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order.truncate(k);
    let padded = order.len() < k;
    let last = *order.last().unwrap();
    order.resize(k, last);
    let cols: Vec<Vec<f64>> = order.iter().map(|&i| states[i].features.clone()).collect();
    Ok(Selection {
        matrix: BehaviorMatrix::from_columns(&cols),
        columns: order,
        padded,
    })
}

/// Result of extracting one policy's behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub behavior: BehaviorMatrix,
    pub padded: bool,
    pub collection: Collection,
    pub selection: Selection,
}

/// Collects and selects in one go, with the RNG stream derived from
/// `(seed, policy_id)`.
pub fn extract(
    env: &TabularMOEnv,
    policy: &TabularPolicy,
    policy_id: &str,
    cfg: &HighlightsConfig,
    seed: u64,
) -> Result<Extraction> {
    let mut rng = rng::stream(seed, &[rng::hash_str(policy_id)]);
    let collection = collect_states(env, policy, cfg.runs, cfg.epsilon_vis, &mut rng)?;
    let selection = behavior_matrix(&collection.states, cfg.k)?;
    Ok(Extraction {
        behavior: selection.matrix.clone(),
        padded: selection.padded,
        collection,
        selection,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Text log of the selected states and the trajectory window around the
/// first visit of each.
pub fn highlight_log(env: &TabularMOEnv, policy_id: &str, ex: &Extraction, window: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "policy {policy_id}");
    let _ = writeln!(out, "features {}", env.feature_names().join(","));
    for (rank, &i) in ex.selection.columns.iter().enumerate() {
        let st = &ex.collection.states[i];
        let (run, step) = ex.collection.first_seen[i];
        let _ = writeln!(
            out,
            "highlight {} state {} importance {:.6} features {}",
            rank + 1,
            st.state,
            st.importance,
            fmt_vec(&st.features)
        );
        let traj = &ex.collection.trajectories[run];
        let lo = step.saturating_sub(window);
        let hi = (step + window).min(traj.len() - 1);
        for (t, &(s, prev)) in traj.iter().enumerate().take(hi + 1).skip(lo) {
            let marker = if t == step { '*' } else { ' ' };
            let action = prev.map_or("-", |a| env.action_names[a].as_str());
            let _ = writeln!(
                out,
                "  {marker} run {run} step {t} via {action} state {s} features {}",
                fmt_vec(&env.features(s, prev))
            );
        }
    }
    if ex.padded {
        let _ = writeln!(out, "padded: fewer than {} unique states", ex.selection.columns.len());
    }
    out
}
