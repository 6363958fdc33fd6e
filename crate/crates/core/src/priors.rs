//! Construct parameters estimated from demonstration arrangements, and
//! preference weights derived from questionnaire ratings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constructs::{CommonsensePriorTable, PreferenceWeights, SemanticAffinities, SpatialPriors};
use crate::error::{Error, Result};
use crate::scene::{validate_arrangement, Arrangement, Point3, SceneDescription};

/// Everything the planner holds constant during search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorBundle {
    #[serde(rename = "spatial_priors")]
    pub spatial: SpatialPriors,
    pub affinities: SemanticAffinities,
    pub commonsense: CommonsensePriorTable,
    pub weights: PreferenceWeights,
}

impl PriorBundle {
    /// Spatial, affinity and commonsense coverage of `scene`.
    pub fn check_coverage(&self, scene: &SceneDescription) -> Result<()> {
        self.spatial.check_coverage(scene)?;
        self.affinities.check_coverage(scene)?;
        self.commonsense.check_coverage(scene)
    }
}

/// Feasible demonstration arrangements of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationSet {
    pub scene_ref: String,
    arrangements: Vec<Arrangement>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemonstrationFile {
    pub demonstrations: Vec<Arrangement>,
}

impl DemonstrationSet {
    pub fn new(scene: &SceneDescription, arrangements: Vec<Arrangement>) -> Result<Self> {
        if arrangements.is_empty() {
            return Err(Error::Precondition("demonstration set is empty".into()));
        }
        for (k, x) in arrangements.iter().enumerate() {
            let verdict = validate_arrangement(scene, x)?;
            if let Some(v) = verdict.violations.first() {
                return Err(Error::Precondition(format!("demonstration {k} is infeasible: {v}")));
            }
        }
        Ok(DemonstrationSet {
            scene_ref: scene.id.clone(),
            arrangements,
        })
    }

    pub fn arrangements(&self) -> &[Arrangement] {
        &self.arrangements
    }

    pub fn len(&self) -> usize {
        self.arrangements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrangements.is_empty()
    }
}

fn centroid(mut points: Vec<Point3>) -> Point3 {
    // Sorting makes the floating-point sum independent of demonstration order.
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in &points {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    c.map(|v| v / n)
}

/// Centroid of each object's positions on its most frequent receptacle.
/// Frequency ties go to the lexicographically smallest receptacle id.
pub fn estimate_spatial_priors(scene: &SceneDescription, demos: &DemonstrationSet) -> Result<SpatialPriors> {
    scene.check_scene_ref(&demos.scene_ref)?;
    let mut by_object: BTreeMap<&str, BTreeMap<&str, Vec<Point3>>> = BTreeMap::new();
    for x in demos.arrangements() {
        for p in &x.placements {
            by_object
                .entry(p.object_id.as_str())
                .or_default()
                .entry(p.receptacle_id.as_str())
                .or_default()
                .push(p.position);
        }
    }
    let mut priors = SpatialPriors::default();
    for object in scene.objects() {
        let per_receptacle = by_object.get(object.id.as_str()).ok_or_else(|| {
            Error::Coverage(format!("object `{}` is absent from every demonstration", object.id))
        })?;
        // BTreeMap iterates ids in order; strict `>` keeps the first maximum.
        let mut modal: Option<(&str, &Vec<Point3>)> = None;
        for (rid, points) in per_receptacle {
            if modal.is_none_or(|(_, best)| points.len() > best.len()) {
                modal = Some((rid, points));
            }
        }
        let (_, points) = modal.expect("at least one placement");
        priors
            .preferred_position
            .insert(object.id.clone(), centroid(points.clone()));
    }
    Ok(priors)
}

/// Co-placement affinities normalised against the chance rate `1/M`:
/// chance maps to 0, always-together to 1 and never-together to −1.
pub fn estimate_affinities(
    scene: &SceneDescription,
    demos: &DemonstrationSet,
    num_receptacles: usize,
) -> Result<SemanticAffinities> {
    scene.check_scene_ref(&demos.scene_ref)?;
    if demos.is_empty() {
        return Err(Error::Precondition("demonstration set is empty".into()));
    }
    if num_receptacles < 2 {
        return Err(Error::Precondition(format!(
            "affinity estimation needs at least 2 receptacles, got {num_receptacles}"
        )));
    }
    let chance = 1.0 / num_receptacles as f64;
    let maps: Vec<BTreeMap<&str, &str>> = demos.arrangements().iter().map(|x| x.receptacle_map()).collect();
    let objects = scene.objects();
    let mut aff = SemanticAffinities::new();
    for (i, a) in objects.iter().enumerate() {
        for b in &objects[i + 1..] {
            let together = maps
                .iter()
                .filter(|m| match (m.get(a.id.as_str()), m.get(b.id.as_str())) {
                    (Some(ra), Some(rb)) => ra == rb,
                    _ => false,
                })
                .count();
            let c = together as f64 / maps.len() as f64;
            aff.set(&a.id, &b.id, co_placement_affinity(c, chance))?;
        }
    }
    Ok(aff)
}

/// Maps a co-placement rate `c` to `σ` given chance rate `p0`.
pub fn co_placement_affinity(c: f64, p0: f64) -> f64 {
    if c >= p0 {
        ((c - p0) / (1.0 - p0)).clamp(-1.0, 1.0)
    } else {
        (c - p0) / p0
    }
}

/// `α_j` = mean normalised usage of the distinct objects ever placed on
/// receptacle `j`; unused receptacles get 0.
pub fn estimate_accessibility(
    scene: &SceneDescription,
    demos: &DemonstrationSet,
) -> Result<BTreeMap<String, f64>> {
    scene.check_scene_ref(&demos.scene_ref)?;
    let u_max = scene.max_usage();
    if u_max <= 0.0 {
        return Err(Error::DegenerateUsage);
    }
    let mut hosted: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for x in demos.arrangements() {
        for p in &x.placements {
            hosted
                .entry(p.receptacle_id.as_str())
                .or_default()
                .insert(p.object_id.as_str());
        }
    }
    let mut out = BTreeMap::new();
    for r in scene.receptacles() {
        let alpha = match hosted.get(r.id.as_str()) {
            Some(objects) => {
                let mut sum = 0.0;
                for id in objects {
                    sum += scene.object(id)?.usage_frequency / u_max;
                }
                sum / objects.len() as f64
            }
            None => 0.0,
        };
        out.insert(r.id.clone(), alpha);
    }
    Ok(out)
}

/// Source of per-object usage frequencies.
///
/// Usage cannot be recovered from placements alone, so the default source
/// reads the frequencies declared in the scene file.
pub trait UsageEstimator {
    fn estimate(&self, scene: &SceneDescription, demos: &DemonstrationSet) -> Result<BTreeMap<String, f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DeclaredUsage;

impl UsageEstimator for DeclaredUsage {
    fn estimate(&self, scene: &SceneDescription, _demos: &DemonstrationSet) -> Result<BTreeMap<String, f64>> {
        Ok(scene
            .objects()
            .iter()
            .map(|o| (o.id.clone(), o.usage_frequency))
            .collect())
    }
}

pub const LIKERT_ITEMS: usize = 12;
pub const ITEMS_PER_CONSTRUCT: usize = 3;

/// Twelve 1–5 ratings, three per construct in the order spatial,
/// habitual, semantic, commonsense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant_id: Option<String>,
    pub items: Vec<u8>,
}

impl LikertResponse {
    pub fn new(items: Vec<u8>) -> Result<Self> {
        let resp = LikertResponse {
            participant_id: None,
            items,
        };
        resp.validate()?;
        Ok(resp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.len() != LIKERT_ITEMS {
            return Err(Error::InvalidLikert(format!(
                "expected {LIKERT_ITEMS} items, got {}",
                self.items.len()
            )));
        }
        if let Some((k, v)) = self.items.iter().enumerate().find(|(_, v)| !(1..=5).contains(*v)) {
            return Err(Error::InvalidLikert(format!("item {k} = {v} outside 1..=5")));
        }
        Ok(())
    }

    pub fn construct_means(&self) -> [f64; 4] {
        let mut means = [0.0; 4];
        for (k, chunk) in self.items.chunks(ITEMS_PER_CONSTRUCT).enumerate().take(4) {
            means[k] = chunk.iter().map(|&v| v as f64).sum::<f64>() / chunk.len() as f64;
        }
        means
    }
}

pub fn weights_from_construct_means(means: [f64; 4]) -> Result<PreferenceWeights> {
    let total: f64 = means.iter().sum();
    if total.is_nan() || total <= 0.0 || means.iter().any(|m| *m < 0.0) {
        return Err(Error::InvalidWeights(format!("cannot normalise construct means {means:?}")));
    }
    PreferenceWeights::new(means.map(|m| m / total))
}

/// Raw ratings, averaged per construct, normalised to sum to one.
pub fn weights_from_likert(resp: &LikertResponse) -> Result<PreferenceWeights> {
    resp.validate()?;
    weights_from_construct_means(resp.construct_means())
}
