//! Household object arrangement planning from interpretable preferences.
//!
//! An arrangement assigns each object to a slot on a receptacle surface.
//! Its quality is a weighted sum of four construct scores (spatial,
//! habitual, semantic, commonsense), and [`planner::plan`] searches the
//! feasible assignments with UCT to maximise it for a given weight profile.

pub mod commonsense;
pub mod constructs;
pub mod error;
pub mod eval;
pub mod io;
pub mod planner;
pub mod priors;
pub mod render;
pub mod scene;

pub use constructs::{
    commonsense_score, habitual_score, reward, semantic_score, spatial_score, CommonsensePriorTable,
    ConstructScores, PreferenceWeights, SemanticAffinities, SpatialPriors,
};
pub use error::{Error, Result};
pub use eval::{batch_eval, object_accuracy, BatchSummary, EvalCase, EvalReport, GroundTruth};
pub use planner::{plan, solve_exact, PlanResult, PlannerConfig};
pub use priors::{
    estimate_accessibility, estimate_affinities, estimate_spatial_priors, weights_from_likert, DemonstrationSet,
    LikertResponse, PriorBundle,
};
pub use scene::{
    admissible_actions, candidate_slots, jaccard_similarity, validate_arrangement, Action, Arrangement, Placement,
    SceneDescription,
};
