//! The four preference constructs and their weighted aggregation.
//!
//! | construct    | score | inputs                                   |
//! |--------------|-------|------------------------------------------|
//! | spatial      | `f1`  | distance to each object's preferred spot |
//! | habitual     | `f2`  | usage frequency vs receptacle access     |
//! | semantic     | `f3`  | pairwise affinity vs pairwise distance   |
//! | commonsense  | `f4`  | per (object, receptacle) prior table     |
//!
//! Scores are averaged over the objects currently placed, so partial
//! arrangements score in `[0, 1]` at every depth of the search. An empty
//! arrangement scores 1 on every construct. Distances are divided by the
//! scene diagonal before the `d / (1 + d)` transforms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::PriorBundle;
use crate::scene::{distance, Arrangement, Point3, SceneDescription};

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Normalised 4-vector `(spatial, habitual, semantic, commonsense)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct PreferenceWeights([f64; 4]);

impl PreferenceWeights {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if let Some(bad) = w.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidWeights(format!("component {bad} outside [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("components sum to {sum}, expected 1")));
        }
        Ok(PreferenceWeights(w))
    }

    pub fn uniform() -> Self {
        PreferenceWeights([0.25; 4])
    }

    /// Unit weight on construct `k` (0-based).
    pub fn one_hot(k: usize) -> Self {
        let mut w = [0.0; 4];
        w[k] = 1.0;
        PreferenceWeights(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn spatial(&self) -> f64 {
        self.0[0]
    }
    pub fn habitual(&self) -> f64 {
        self.0[1]
    }
    pub fn semantic(&self) -> f64 {
        self.0[2]
    }
    pub fn commonsense(&self) -> f64 {
        self.0[3]
    }
}

impl TryFrom<[f64; 4]> for PreferenceWeights {
    type Error = Error;
    fn try_from(w: [f64; 4]) -> Result<Self> {
        PreferenceWeights::new(w)
    }
}

impl From<PreferenceWeights> for [f64; 4] {
    fn from(w: PreferenceWeights) -> Self {
        w.0
    }
}

/// Preferred position `v*` per object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpatialPriors {
    pub preferred_position: BTreeMap<String, Point3>,
}

impl SpatialPriors {
    pub fn get(&self, object_id: &str) -> Result<&Point3> {
        self.preferred_position
            .get(object_id)
            .ok_or_else(|| Error::MissingPrior(object_id.to_string()))
    }

    pub fn check_coverage(&self, scene: &SceneDescription) -> Result<()> {
        for o in scene.objects() {
            self.get(&o.id)?;
        }
        for (id, p) in &self.preferred_position {
            scene.object(id)?;
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Coverage(format!("spatial prior for `{id}` is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityEntry {
    pub a: String,
    pub b: String,
    pub sigma: f64,
}

/// Symmetric pairwise affinities `σ ∈ [-1, 1]` with a zero diagonal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AffinityEntry>", into = "Vec<AffinityEntry>")]
pub struct SemanticAffinities {
    sigma: BTreeMap<(String, String), f64>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SemanticAffinities {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `σ_ab = σ_ba`. Self-pairs are ignored (always 0).
    pub fn set(&mut self, a: &str, b: &str, sigma: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&sigma) {
            return Err(Error::Coverage(format!(
                "affinity ({a}, {b}) = {sigma} outside [-1, 1]"
            )));
        }
        if a != b {
            self.sigma.insert(ordered(a, b), sigma);
        }
        Ok(())
    }

    pub fn get(&self, a: &str, b: &str) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        self.sigma
            .get(&ordered(a, b))
            .copied()
            .ok_or_else(|| Error::MissingAffinity(a.to_string(), b.to_string()))
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.sigma.iter().map(|((a, b), s)| (a.as_str(), b.as_str(), *s))
    }

    pub fn check_coverage(&self, scene: &SceneDescription) -> Result<()> {
        let objects = scene.objects();
        for (i, a) in objects.iter().enumerate() {
            for b in &objects[i + 1..] {
                self.get(&a.id, &b.id)?;
            }
        }
        for (a, b, _) in self.iter() {
            scene.object(a)?;
            scene.object(b)?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<AffinityEntry>> for SemanticAffinities {
    type Error = Error;
    fn try_from(entries: Vec<AffinityEntry>) -> Result<Self> {
        let mut out = SemanticAffinities::new();
        for e in entries {
            if e.a == e.b && e.sigma != 0.0 {
                return Err(Error::Coverage(format!("self-affinity for `{}` must be 0", e.a)));
            }
            if let Ok(existing) = out.get(&e.a, &e.b) {
                if existing != e.sigma && e.a != e.b {
                    return Err(Error::Coverage(format!(
                        "asymmetric affinity entries for ({}, {})",
                        e.a, e.b
                    )));
                }
            }
            out.set(&e.a, &e.b, e.sigma)?;
        }
        Ok(out)
    }
}

impl From<SemanticAffinities> for Vec<AffinityEntry> {
    fn from(aff: SemanticAffinities) -> Self {
        aff.sigma
            .into_iter()
            .map(|((a, b), sigma)| AffinityEntry { a, b, sigma })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonsenseEntry {
    pub object_id: String,
    pub receptacle_id: String,
    pub score: f64,
    #[serde(default)]
    pub provenance: String,
}

/// Appropriateness score in `[0, 1]` for every (object, receptacle) pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CommonsenseEntry>", into = "Vec<CommonsenseEntry>")]
pub struct CommonsensePriorTable {
    score: BTreeMap<(String, String), f64>,
    pub provenance: String,
}

impl CommonsensePriorTable {
    pub fn new(provenance: impl Into<String>) -> Self {
        CommonsensePriorTable {
            score: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    pub fn insert(&mut self, object_id: &str, receptacle_id: &str, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Coverage(format!(
                "commonsense score ({object_id}, {receptacle_id}) = {score} outside [0, 1]"
            )));
        }
        self.score
            .insert((object_id.to_string(), receptacle_id.to_string()), score);
        Ok(())
    }

    pub fn get(&self, object_id: &str, receptacle_id: &str) -> Result<f64> {
        self.score
            .get(&(object_id.to_string(), receptacle_id.to_string()))
            .copied()
            .ok_or_else(|| Error::MissingCommonsense(object_id.to_string(), receptacle_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.score.len()
    }

    pub fn is_empty(&self) -> bool {
        self.score.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.score.iter().map(|((o, r), s)| (o.as_str(), r.as_str(), *s))
    }

    /// Table totality over `objects × receptacles` of `scene`.
    pub fn check_coverage(&self, scene: &SceneDescription) -> Result<()> {
        for o in scene.objects() {
            for r in scene.receptacles() {
                self.get(&o.id, &r.id)?;
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<CommonsenseEntry>> for CommonsensePriorTable {
    type Error = Error;
    fn try_from(entries: Vec<CommonsenseEntry>) -> Result<Self> {
        let mut tags: Vec<&str> = entries.iter().map(|e| e.provenance.as_str()).collect();
        tags.sort_unstable();
        tags.dedup();
        let mut table = CommonsensePriorTable::new(tags.join(","));
        for e in &entries {
            table.insert(&e.object_id, &e.receptacle_id, e.score)?;
        }
        Ok(table)
    }
}

impl From<CommonsensePriorTable> for Vec<CommonsenseEntry> {
    fn from(table: CommonsensePriorTable) -> Self {
        let provenance = table.provenance;
        table
            .score
            .into_iter()
            .map(|((object_id, receptacle_id), score)| CommonsenseEntry {
                object_id,
                receptacle_id,
                score,
                provenance: provenance.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructScores {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl ConstructScores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f1, self.f2, self.f3, self.f4]
    }

    /// `R = Σ w_k f_k`, clamped to `[0, 1]`: weights are only required to
    /// sum to one within 1e-9, and rounding can otherwise land a few ulps
    /// outside the range.
    pub fn weighted(&self, w: &PreferenceWeights) -> f64 {
        let r: f64 = self
            .as_array()
            .iter()
            .zip(w.as_array())
            .map(|(f, w)| f * w)
            .sum();
        r.clamp(0.0, 1.0)
    }
}

fn check_ref(scene: &SceneDescription, x: &Arrangement) -> Result<()> {
    scene.check_scene_ref(&x.scene_ref)
}

/// Mean of `1 / (1 + ‖v − v*‖ / D)` over placed objects.
pub fn spatial_score(scene: &SceneDescription, x: &Arrangement, priors: &SpatialPriors) -> Result<f64> {
    check_ref(scene, x)?;
    if x.placements.is_empty() {
        return Ok(1.0);
    }
    let diag = scene.diagonal();
    let mut sum = 0.0;
    for p in &x.placements {
        scene.object(&p.object_id)?;
        let prior = priors.get(&p.object_id)?;
        sum += 1.0 / (1.0 + distance(&p.position, prior) / diag);
    }
    Ok(sum / x.placements.len() as f64)
}

/// `1 − mean (u/u_max − α)²` over placed objects; `u_max` spans the whole scene.
pub fn habitual_score(scene: &SceneDescription, x: &Arrangement) -> Result<f64> {
    check_ref(scene, x)?;
    if x.placements.is_empty() {
        return Ok(1.0);
    }
    let u_max = scene.max_usage();
    if u_max <= 0.0 {
        return Err(Error::DegenerateUsage);
    }
    let mut sum = 0.0;
    for p in &x.placements {
        let u = scene.object(&p.object_id)?.usage_frequency / u_max;
        let alpha = scene.receptacle(&p.receptacle_id)?.accessibility;
        sum += (u - alpha).powi(2);
    }
    Ok(1.0 - sum / x.placements.len() as f64)
}

/// Penalty contributed by one ordered pair at normalised distance `d`.
pub fn affinity_penalty(sigma: f64, d: f64) -> f64 {
    let near = d / (1.0 + d);
    if sigma > 0.0 {
        sigma * near
    } else if sigma < 0.0 {
        sigma.abs() * (1.0 - near)
    } else {
        0.0
    }
}

/// `1 − mean penalty` over ordered pairs of placed objects.
pub fn semantic_score(scene: &SceneDescription, x: &Arrangement, aff: &SemanticAffinities) -> Result<f64> {
    check_ref(scene, x)?;
    for p in &x.placements {
        scene.object(&p.object_id)?;
    }
    let n = x.placements.len();
    if n < 2 {
        return Ok(1.0);
    }
    let diag = scene.diagonal();
    let mut sum = 0.0;
    for (i, a) in x.placements.iter().enumerate() {
        for (j, b) in x.placements.iter().enumerate() {
            if i == j {
                continue;
            }
            let sigma = aff.get(&a.object_id, &b.object_id)?;
            sum += affinity_penalty(sigma, distance(&a.position, &b.position) / diag);
        }
    }
    Ok(1.0 - sum / (n * (n - 1)) as f64)
}

pub fn commonsense_score(
    scene: &SceneDescription,
    x: &Arrangement,
    table: &CommonsensePriorTable,
) -> Result<f64> {
    check_ref(scene, x)?;
    if x.placements.is_empty() {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for p in &x.placements {
        scene.object(&p.object_id)?;
        scene.receptacle(&p.receptacle_id)?;
        sum += table.get(&p.object_id, &p.receptacle_id)?;
    }
    Ok(sum / x.placements.len() as f64)
}

pub fn construct_scores(
    scene: &SceneDescription,
    x: &Arrangement,
    priors: &PriorBundle,
) -> Result<ConstructScores> {
    Ok(ConstructScores {
        f1: spatial_score(scene, x, &priors.spatial)?,
        f2: habitual_score(scene, x)?,
        f3: semantic_score(scene, x, &priors.affinities)?,
        f4: commonsense_score(scene, x, &priors.commonsense)?,
    })
}

/// Component scores and the weighted reward `R`.
pub fn reward(
    scene: &SceneDescription,
    x: &Arrangement,
    priors: &PriorBundle,
    w: &PreferenceWeights,
) -> Result<(ConstructScores, f64)> {
    let scores = construct_scores(scene, x, priors)?;
    let r = scores.weighted(w);
    Ok((scores, r))
}

/// Per-object share of each construct for explainability output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectContribution {
    pub object_id: String,
    pub receptacle_id: String,
    /// `1 / (1 + d̂)` to the spatial prior.
    pub spatial: f64,
    /// `1 − (u/u_max − α)²`.
    pub habitual: f64,
    /// `1 −` mean penalty of pairs involving this object.
    pub semantic: f64,
    pub commonsense: f64,
    /// Weighted sum of the four terms.
    pub weighted: f64,
}

pub fn object_contributions(
    scene: &SceneDescription,
    x: &Arrangement,
    priors: &PriorBundle,
    w: &PreferenceWeights,
) -> Result<Vec<ObjectContribution>> {
    check_ref(scene, x)?;
    let diag = scene.diagonal();
    let u_max = scene.max_usage();
    let mut out = Vec::with_capacity(x.placements.len());
    for p in &x.placements {
        let object = scene.object(&p.object_id)?;
        let receptacle = scene.receptacle(&p.receptacle_id)?;
        let spatial = 1.0 / (1.0 + distance(&p.position, priors.spatial.get(&p.object_id)?) / diag);
        let habitual = if u_max > 0.0 {
            1.0 - (object.usage_frequency / u_max - receptacle.accessibility).powi(2)
        } else {
            return Err(Error::DegenerateUsage);
        };
        let mut penalty = 0.0;
        let mut pairs = 0usize;
        for q in x.placements.iter().filter(|q| q.object_id != p.object_id) {
            let sigma = priors.affinities.get(&p.object_id, &q.object_id)?;
            penalty += affinity_penalty(sigma, distance(&p.position, &q.position) / diag);
            pairs += 1;
        }
        let semantic = if pairs == 0 { 1.0 } else { 1.0 - penalty / pairs as f64 };
        let commonsense = priors.commonsense.get(&p.object_id, &p.receptacle_id)?;
        let weighted = ConstructScores {
            f1: spatial,
            f2: habitual,
            f3: semantic,
            f4: commonsense,
        }
        .weighted(w);
        out.push(ObjectContribution {
            object_id: p.object_id.clone(),
            receptacle_id: p.receptacle_id.clone(),
            spatial,
            habitual,
            semantic,
            commonsense,
            weighted,
        });
    }
    out.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    Ok(out)
}
