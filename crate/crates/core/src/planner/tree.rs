//! UCT search tree over partial arrangements.
//!
//! Children are expanded in canonical action order, so the expanded edges of
//! a node always form a prefix of its admissible action list and unexpanded
//! actions never need to be stored.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::problem::{IndexedAction, Problem, State};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Statistics of one state–action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: IndexedAction,
    pub child: NodeId,
    /// `n(X, a)`
    pub visits: u64,
    /// Sum of rollout returns backed up through this edge.
    pub total_reward: f64,
}

impl Edge {
    /// `Q(X, a)`; zero for an unvisited edge.
    pub fn mean(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_reward / self.visits as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub state: State,
    /// `n(X)`
    pub visits: u64,
    /// Sum of every return backed up through this node.
    pub total_reward: f64,
    /// Returns of rollouts that started at this node.
    pub credited_reward: f64,
    /// Size of the admissible action set `A(X)`.
    pub num_actions: usize,
    /// Expanded children, a prefix of `A(X)` in canonical order.
    pub edges: Vec<Edge>,
}

impl SearchNode {
    fn new(problem: &Problem<'_>, state: State, scratch: &mut Vec<IndexedAction>) -> Self {
        problem.admissible_into(&state, scratch);
        SearchNode {
            num_actions: scratch.len(),
            state,
            visits: 0,
            total_reward: 0.0,
            credited_reward: 0.0,
            edges: Vec::new(),
        }
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.edges.len() == self.num_actions
    }

    /// Non-complete state with nothing admissible.
    pub fn is_dead_end(&self) -> bool {
        self.num_actions == 0 && !self.state.is_complete()
    }
}

/// Position in `A(X)` of the action the tree policy takes next.
///
/// Unvisited actions come first, in action order. Otherwise the action
/// maximising `Q + c·sqrt(ln n(X) / n(X, a))` wins, ties going to the
/// earliest action.
pub fn select_ucb(node: &SearchNode, c: f64) -> Result<usize> {
    if node.num_actions == 0 {
        return Err(Error::Precondition("UCB selection on a node without actions".into()));
    }
    if let Some(k) = node.edges.iter().position(|e| e.visits == 0) {
        return Ok(k);
    }
    if !node.is_fully_expanded() {
        return Ok(node.edges.len());
    }
    let ln_n = (node.visits.max(1) as f64).ln();
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (k, e) in node.edges.iter().enumerate() {
        let value = ucb_value(e.mean(), ln_n, e.visits, c);
        if value > best_value {
            best = k;
            best_value = value;
        }
    }
    Ok(best)
}

pub fn ucb_value(q: f64, ln_parent_visits: f64, visits: u64, c: f64) -> f64 {
    q + c * (ln_parent_visits / visits as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOutcome {
    /// Mean per-step reward in `[0, 1]`.
    pub value: f64,
    /// The rollout hit a state with unplaced objects and no admissible action.
    pub dead_end: bool,
}

/// Completes `state` with uniformly random admissible actions.
///
/// Returns the mean of `R` over the states after each placement; steps
/// that cannot be taken because of a dead end count as 0. A complete
/// input state yields `R(state)`.
pub fn rollout(problem: &Problem<'_>, state: &State, rng: &mut ChaCha8Rng, scratch: &mut Vec<IndexedAction>) -> RolloutOutcome {
    let steps = state.unplaced();
    if steps == 0 {
        return RolloutOutcome {
            value: problem.reward(state),
            dead_end: false,
        };
    }
    let mut current = state.clone();
    let mut sum = 0.0;
    let mut dead_end = false;
    while !current.is_complete() {
        problem.admissible_into(&current, scratch);
        if scratch.is_empty() {
            dead_end = true;
            break;
        }
        let pick = rng.random_range(0..scratch.len() as u32) as usize;
        current.apply(scratch[pick]);
        sum += problem.reward(&current);
    }
    RolloutOutcome {
        value: sum / steps as f64,
        dead_end,
    }
}

/// Arena-allocated search tree. Node 0 of the arena is not necessarily the
/// root: the root moves when the planner commits an action.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    root: NodeId,
    pub exploration_c: f64,
    pub dead_end_rollouts: u64,
    scratch: Vec<IndexedAction>,
}

impl SearchTree {
    pub fn new(problem: &Problem<'_>, state: State, exploration_c: f64) -> Self {
        let mut scratch = Vec::new();
        let root = SearchNode::new(problem, state, &mut scratch);
        SearchTree {
            nodes: vec![root],
            root: 0,
            exploration_c,
            dead_end_rollouts: 0,
            scratch,
        }
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[self.root]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn root_id(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One select / expand / rollout / backpropagate cycle.
    pub fn iterate(&mut self, problem: &Problem<'_>, rng: &mut ChaCha8Rng) {
        let mut path_nodes = vec![self.root];
        let mut path_edges: Vec<usize> = Vec::new();
        let mut current = self.root;
        loop {
            let node = &self.nodes[current];
            if node.num_actions == 0 {
                break;
            }
            let k = select_ucb(node, self.exploration_c).expect("node has actions");
            if k == node.edges.len() {
                problem.admissible_into(&node.state, &mut self.scratch);
                let action = self.scratch[k];
                let child_state = node.state.applied(action);
                let child = SearchNode::new(problem, child_state, &mut self.scratch);
                let child_id = self.nodes.len();
                self.nodes.push(child);
                self.nodes[current].edges.push(Edge {
                    action,
                    child: child_id,
                    visits: 0,
                    total_reward: 0.0,
                });
                path_edges.push(k);
                path_nodes.push(child_id);
                break;
            }
            let next = node.edges[k].child;
            path_edges.push(k);
            path_nodes.push(next);
            current = next;
        }

        let leaf = *path_nodes.last().expect("non-empty path");
        let outcome = rollout(problem, &self.nodes[leaf].state, rng, &mut self.scratch);
        if outcome.dead_end {
            self.dead_end_rollouts += 1;
        }
        let value = outcome.value;
        for (depth, &id) in path_nodes.iter().enumerate() {
            let node = &mut self.nodes[id];
            node.visits += 1;
            node.total_reward += value;
            if let Some(&k) = path_edges.get(depth) {
                let edge = &mut node.edges[k];
                edge.visits += 1;
                edge.total_reward += value;
            } else {
                node.credited_reward += value;
            }
        }
    }

    /// Moves the root to the child reached by edge `k` and drops every node
    /// outside the new root's subtree.
    pub fn advance(&mut self, k: usize) {
        let new_root = self.nodes[self.root].edges[k].child;
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut order = vec![new_root];
        let mut head = 0;
        while head < order.len() {
            let id = order[head];
            remap[id] = head;
            head += 1;
            for e in &self.nodes[id].edges {
                order.push(e.child);
            }
        }
        let mut old: Vec<Option<SearchNode>> = std::mem::take(&mut self.nodes).into_iter().map(Some).collect();
        let mut nodes = Vec::with_capacity(order.len());
        for id in order {
            let mut node = old[id].take().expect("tree nodes have one parent");
            for e in &mut node.edges {
                e.child = remap[e.child];
            }
            nodes.push(node);
        }
        self.nodes = nodes;
        self.root = 0;
    }
}
