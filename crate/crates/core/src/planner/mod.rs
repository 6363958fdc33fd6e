//! Monte Carlo Tree Search over sequential placement actions, plus an
//! exhaustive solver used as an oracle on small instances.
//!
//! A plan is built one placement at a time. Before each commitment the
//! search tree rooted at the current partial arrangement is topped up to
//! `iterations` visits; the child with the highest mean accumulated reward
//! is then committed and its subtree becomes the next root. The horizon is
//! the number of objects: every object is placed exactly once.

pub mod exact;
pub mod problem;
pub mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructs::{ConstructScores, PreferenceWeights};
use crate::error::{Error, Result};
use crate::priors::PriorBundle;
use crate::scene::{validate_arrangement, Action, Arrangement, SceneDescription};

pub use problem::{IndexedAction, Problem, State};
pub use tree::{rollout, select_ucb, Edge, RolloutOutcome, SearchNode, SearchTree};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutPolicy {
    #[default]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub iterations: u64,
    pub exploration_c: f64,
    pub seed: u64,
    #[serde(default)]
    pub rollout_policy: RolloutPolicy,
    /// Independent seeded trees whose root statistics are summed before
    /// each commitment.
    #[serde(default = "one")]
    pub root_parallelism: usize,
}

fn one() -> usize {
    1
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            iterations: 10_000,
            exploration_c: std::f64::consts::FRAC_1_SQRT_2,
            seed: 0,
            rollout_policy: RolloutPolicy::UniformRandom,
            root_parallelism: 1,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::Precondition("iterations must be >= 1".into()));
        }
        if !(self.exploration_c.is_finite() && self.exploration_c > 0.0) {
            return Err(Error::Precondition("exploration constant must be > 0".into()));
        }
        if self.root_parallelism < 1 {
            return Err(Error::Precondition("root_parallelism must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed of worker `k`; worker 0 uses the configured seed itself.
    pub fn worker_seed(&self, k: usize) -> u64 {
        if k == 0 {
            return self.seed;
        }
        // splitmix64 finaliser
        let mut z = self.seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    /// Construct scores of the partial arrangement after this action.
    pub scores: ConstructScores,
    pub reward: f64,
    /// Root statistics of the committed edge.
    pub visits: u64,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub scene_ref: String,
    pub weights: PreferenceWeights,
    pub config: PlannerConfig,
    pub trajectory: Vec<Action>,
    #[serde(rename = "final")]
    pub final_arrangement: Arrangement,
    pub final_scores: ConstructScores,
    pub final_reward: f64,
    pub reward_trace: Vec<TraceStep>,
    pub iterations_used: u64,
    pub dead_end_rollouts: u64,
    pub seed: u64,
}

struct Worker {
    tree: SearchTree,
    rng: ChaCha8Rng,
}

impl Worker {
    fn top_up(&mut self, problem: &Problem<'_>, iterations: u64) -> u64 {
        let mut ran = 0;
        while self.tree.root().visits < iterations {
            self.tree.iterate(problem, &mut self.rng);
            ran += 1;
        }
        ran
    }
}

fn is_dead_end(problem: &Problem<'_>, state: &State) -> bool {
    !state.is_complete() && problem.admissible(state).is_empty()
}

/// Index of the committed root edge: highest mean accumulated reward,
/// earliest action on ties. Falls back to the most visited child when the
/// best one is a dead end.
fn choose(problem: &Problem<'_>, root: &SearchNode, merged: &[(u64, f64)]) -> Result<usize> {
    let children: Vec<(usize, State)> = (0..merged.len())
        .filter(|&k| merged[k].0 > 0)
        .map(|k| (k, root.state.applied(root_action(problem, root, k))))
        .collect();
    let mean = |k: usize| merged[k].1 / merged[k].0 as f64;
    let mut best: Option<usize> = None;
    for (k, _) in &children {
        if best.is_none_or(|b| mean(*k) > mean(b)) {
            best = Some(*k);
        }
    }
    let best = best.ok_or_else(|| Error::Planning("no visited action at the root".into()))?;
    let best_state = &children.iter().find(|(k, _)| *k == best).expect("present").1;
    if !is_dead_end(problem, best_state) {
        return Ok(best);
    }
    let mut fallback: Option<usize> = None;
    for (k, state) in &children {
        if is_dead_end(problem, state) {
            continue;
        }
        if fallback.is_none_or(|f| merged[*k].0 > merged[f].0) {
            fallback = Some(*k);
        }
    }
    fallback.ok_or_else(|| Error::Planning("every explored continuation is a dead end".into()))
}

fn root_action(problem: &Problem<'_>, root: &SearchNode, k: usize) -> IndexedAction {
    match root.edges.get(k) {
        Some(e) => e.action,
        None => problem.admissible(&root.state)[k],
    }
}

/// Plans a complete arrangement maximising the weighted reward.
pub fn plan(
    scene: &SceneDescription,
    priors: &PriorBundle,
    weights: &PreferenceWeights,
    config: &PlannerConfig,
) -> Result<PlanResult> {
    config.validate()?;
    let problem = Problem::new(scene, priors, weights)?;
    let mut workers: Vec<Worker> = (0..config.root_parallelism)
        .map(|k| Worker {
            tree: SearchTree::new(&problem, problem.empty_state(), config.exploration_c),
            rng: ChaCha8Rng::seed_from_u64(config.worker_seed(k)),
        })
        .collect();

    let mut state = problem.empty_state();
    let mut trajectory = Vec::new();
    let mut reward_trace = Vec::new();
    let mut iterations_used = 0;
    while !state.is_complete() {
        if is_dead_end(&problem, &state) {
            return Err(Error::Planning(format!(
                "no admissible placement with {} object(s) left",
                state.unplaced()
            )));
        }
        iterations_used += if workers.len() == 1 {
            workers[0].top_up(&problem, config.iterations)
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = workers
                    .iter_mut()
                    .map(|w| {
                        let problem = &problem;
                        s.spawn(move || w.top_up(problem, config.iterations))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("search worker")).sum::<u64>()
            })
        };

        let width = workers.iter().map(|w| w.tree.root().edges.len()).max().unwrap_or(0);
        let mut merged = vec![(0u64, 0.0f64); width];
        for w in &workers {
            for (k, e) in w.tree.root().edges.iter().enumerate() {
                merged[k].0 += e.visits;
                merged[k].1 += e.total_reward;
            }
        }
        let k = choose(&problem, workers[0].tree.root(), &merged)?;
        let action = root_action(&problem, workers[0].tree.root(), k);
        for w in &mut workers {
            if k < w.tree.root().edges.len() {
                w.tree.advance(k);
            } else {
                let next = w.tree.root().state.applied(action);
                w.tree = SearchTree::new(&problem, next, config.exploration_c);
            }
        }
        state.apply(action);
        let scores = problem.scores(&state);
        reward_trace.push(TraceStep {
            action: problem.action(action),
            scores,
            reward: scores.weighted(weights),
            visits: merged[k].0,
            mean_return: merged[k].1 / merged[k].0 as f64,
        });
        trajectory.push(problem.action(action));
    }

    let final_arrangement = problem.to_arrangement(&state);
    let verdict = validate_arrangement(scene, &final_arrangement)?;
    if let Some(v) = verdict.violations.first() {
        return Err(Error::Planning(format!("internal: planned arrangement infeasible: {v}")));
    }
    let final_scores = problem.scores(&state);
    Ok(PlanResult {
        scene_ref: scene.id.clone(),
        weights: *weights,
        config: config.clone(),
        trajectory,
        final_arrangement,
        final_scores,
        final_reward: final_scores.weighted(weights),
        reward_trace,
        iterations_used,
        dead_end_rollouts: workers.iter().map(|w| w.tree.dead_end_rollouts).sum(),
        seed: config.seed,
    })
}

/// Exhaustive argmax over all feasible complete arrangements.
pub fn solve_exact(
    scene: &SceneDescription,
    priors: &PriorBundle,
    weights: &PreferenceWeights,
) -> Result<(Arrangement, f64)> {
    let problem = Problem::new(scene, priors, weights)?;
    let (state, reward) = exact::solve(&problem)?;
    Ok((problem.to_arrangement(&state), reward))
}

/// Random completion of `x` (which must sit on candidate slots).
pub fn rollout_arrangement(
    scene: &SceneDescription,
    x: &Arrangement,
    priors: &PriorBundle,
    weights: &PreferenceWeights,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutOutcome> {
    let problem = Problem::new(scene, priors, weights)?;
    let state = problem.state_of(x)?;
    let mut scratch = Vec::new();
    Ok(rollout(&problem, &state, rng, &mut scratch))
}
