//! Exhaustive enumeration of feasible complete arrangements.

use super::problem::{Problem, State};
use crate::error::{Error, Result};

/// Refuse instances whose leaf-count bound exceeds this.
pub const MAX_LEAF_STATES: u128 = 10_000_000;

/// Upper bound on the number of complete assignments: the product of each
/// object's statically fitting slot count.
pub fn leaf_bound(problem: &Problem<'_>) -> u128 {
    (0..problem.num_objects())
        .map(|i| problem.fitting_slots(i).len() as u128)
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Calls `visit` with every feasible complete state and its reward, in
/// lexicographic `(object, slot)` order.
pub fn for_each_feasible(problem: &Problem<'_>, mut visit: impl FnMut(&State, f64)) -> Result<u64> {
    let bound = leaf_bound(problem);
    if bound > MAX_LEAF_STATES {
        return Err(Error::Capacity {
            bound,
            limit: MAX_LEAF_STATES,
        });
    }
    let mut leaves = 0;
    descend(problem, 0, &problem.empty_state(), &mut visit, &mut leaves);
    Ok(leaves)
}

fn descend(problem: &Problem<'_>, object: usize, state: &State, visit: &mut impl FnMut(&State, f64), leaves: &mut u64) {
    if object == problem.num_objects() {
        *leaves += 1;
        visit(state, problem.reward(state));
        return;
    }
    for &slot in problem.fitting_slots(object) {
        if problem.can_place(state, object, slot) {
            let next = state.applied((object as u32, slot));
            descend(problem, object + 1, &next, visit, leaves);
        }
    }
}

/// Reward-maximal feasible complete state; the lexicographically first one on ties.
pub fn solve(problem: &Problem<'_>) -> Result<(State, f64)> {
    let mut best: Option<(State, f64)> = None;
    for_each_feasible(problem, |state, r| {
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((state.clone(), r));
        }
    })?;
    best.ok_or_else(|| Error::Planning("scene admits no feasible complete arrangement".into()))
}
