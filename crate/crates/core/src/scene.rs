//! Scene domain model: objects, receptacle surfaces, placements, and the
//! feasibility rules every arrangement must satisfy.
//!
//! Receptacles are planar rectangles at a fixed height. Each surface is
//! discretised into a `grid_resolution × grid_resolution` grid of candidate
//! slots; objects are axis-aligned boxes centred on their placement position.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for containment and overlap tests, in meters.
pub const GEOMETRY_EPS: f64 = 1e-9;

pub type Point3 = [f64; 3];

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub name: String,
    pub footprint: Footprint,
    /// Uses per week.
    #[serde(default)]
    pub usage_frequency: f64,
}

/// Axis-aligned placement rectangle with origin `(x, y)`, extents `(w, d)`
/// and height `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub d: f64,
    pub z: f64,
}

impl Surface {
    pub fn contains(&self, footprint: &Footprint, position: &Point3) -> bool {
        let hw = footprint.width / 2.0;
        let hd = footprint.depth / 2.0;
        position[0] - hw >= self.x - GEOMETRY_EPS
            && position[0] + hw <= self.x + self.w + GEOMETRY_EPS
            && position[1] - hd >= self.y - GEOMETRY_EPS
            && position[1] + hd <= self.y + self.d + GEOMETRY_EPS
            && (position[2] - self.z).abs() <= GEOMETRY_EPS
    }

    pub fn center(&self) -> Point3 {
        [self.x + self.w / 2.0, self.y + self.d / 2.0, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub id: String,
    pub name: String,
    pub surface: Surface,
    pub accessibility: f64,
    pub grid_resolution: u32,
}

impl ReceptacleSpec {
    /// Cell-centre slot positions in row-major order (x fastest).
    pub fn slots(&self) -> Vec<Point3> {
        let r = self.grid_resolution as usize;
        let s = &self.surface;
        let (cw, cd) = (s.w / r as f64, s.d / r as f64);
        let mut out = Vec::with_capacity(r * r);
        for row in 0..r {
            for col in 0..r {
                out.push([
                    s.x + (col as f64 + 0.5) * cw,
                    s.y + (row as f64 + 0.5) * cd,
                    s.z,
                ]);
            }
        }
        out
    }
}

/// Axis-aligned box occupied by an object placed at `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn of(footprint: &Footprint, position: &Point3) -> Self {
        let half = [footprint.width / 2.0, footprint.depth / 2.0];
        Aabb {
            min: [position[0] - half[0], position[1] - half[1], position[2]],
            max: [
                position[0] + half[0],
                position[1] + half[1],
                position[2] + footprint.height,
            ],
        }
    }

    /// Strict intersection; boxes that merely touch do not overlap.
    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|k| {
            self.min[k] < other.max[k] - GEOMETRY_EPS && other.min[k] < self.max[k] - GEOMETRY_EPS
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub object_id: String,
    pub receptacle_id: String,
    pub position: Point3,
}

/// A possibly partial set of placements. Stored as a list so that invalid
/// inputs (duplicate object ids) can be represented and reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub scene_ref: String,
    #[serde(default)]
    pub placements: Vec<Placement>,
}

impl Arrangement {
    pub fn empty(scene_ref: impl Into<String>) -> Self {
        Arrangement {
            scene_ref: scene_ref.into(),
            placements: Vec::new(),
        }
    }

    pub fn placement_of(&self, object_id: &str) -> Option<&Placement> {
        self.placements.iter().find(|p| p.object_id == object_id)
    }

    /// `(object_id, receptacle_id)` pairs, ignoring positions.
    pub fn assignment_pairs(&self) -> BTreeSet<(String, String)> {
        self.placements
            .iter()
            .map(|p| (p.object_id.clone(), p.receptacle_id.clone()))
            .collect()
    }

    pub fn receptacle_map(&self) -> BTreeMap<&str, &str> {
        self.placements
            .iter()
            .map(|p| (p.object_id.as_str(), p.receptacle_id.as_str()))
            .collect()
    }

    pub fn with(&self, action: &Action) -> Arrangement {
        let mut next = self.clone();
        next.placements.push(action.placement());
        next
    }
}

/// Place one object on one candidate slot of a receptacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub object_id: String,
    pub receptacle_id: String,
    pub slot: usize,
    pub position: Point3,
}

impl Action {
    pub fn placement(&self) -> Placement {
        Placement {
            object_id: self.object_id.clone(),
            receptacle_id: self.receptacle_id.clone(),
            position: self.position,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawScene {
    id: String,
    #[serde(default)]
    room: Option<String>,
    objects: Vec<ObjectSpec>,
    receptacles: Vec<ReceptacleSpec>,
}

/// One room. Objects and receptacles are kept sorted by id, which is the
/// canonical order used for actions and tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScene", into = "RawScene")]
pub struct SceneDescription {
    pub id: String,
    pub room: Option<String>,
    objects: Vec<ObjectSpec>,
    receptacles: Vec<ReceptacleSpec>,
    diagonal: f64,
}

impl TryFrom<RawScene> for SceneDescription {
    type Error = Error;

    fn try_from(raw: RawScene) -> Result<Self> {
        SceneDescription::new(raw.id, raw.room, raw.objects, raw.receptacles)
    }
}

impl From<SceneDescription> for RawScene {
    fn from(scene: SceneDescription) -> Self {
        RawScene {
            id: scene.id,
            room: scene.room,
            objects: scene.objects,
            receptacles: scene.receptacles,
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl SceneDescription {
    pub fn new(
        id: impl Into<String>,
        room: Option<String>,
        mut objects: Vec<ObjectSpec>,
        mut receptacles: Vec<ReceptacleSpec>,
    ) -> Result<Self> {
        let id = id.into();
        if receptacles.is_empty() {
            return Err(Error::InvalidScene(format!("scene `{id}` has no receptacles")));
        }
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        receptacles.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = objects.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidScene(format!("duplicate object id `{}`", w[0].id)));
        }
        if let Some(w) = receptacles.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidScene(format!("duplicate receptacle id `{}`", w[0].id)));
        }
        for o in &objects {
            let f = &o.footprint;
            if !(positive(f.width) && positive(f.depth) && positive(f.height)) {
                return Err(Error::InvalidScene(format!(
                    "object `{}` footprint must be strictly positive",
                    o.id
                )));
            }
            if !(o.usage_frequency.is_finite() && o.usage_frequency >= 0.0) {
                return Err(Error::InvalidScene(format!(
                    "object `{}` usage frequency must be non-negative",
                    o.id
                )));
            }
        }
        for r in &receptacles {
            let s = &r.surface;
            if !(positive(s.w) && positive(s.d)) || ![s.x, s.y, s.z].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidScene(format!(
                    "receptacle `{}` surface extents must be strictly positive",
                    r.id
                )));
            }
            if !(0.0..=1.0).contains(&r.accessibility) {
                return Err(Error::InvalidScene(format!(
                    "receptacle `{}` accessibility {} outside [0, 1]",
                    r.id, r.accessibility
                )));
            }
            if r.grid_resolution < 1 {
                return Err(Error::InvalidScene(format!(
                    "receptacle `{}` grid_resolution must be >= 1",
                    r.id
                )));
            }
        }
        for o in &objects {
            let fits = receptacles
                .iter()
                .any(|r| r.slots().iter().any(|p| r.surface.contains(&o.footprint, p)));
            if !fits {
                return Err(Error::InvalidScene(format!(
                    "object `{}` does not fit on any receptacle slot",
                    o.id
                )));
            }
        }
        let diagonal = bounding_diagonal(&receptacles);
        Ok(SceneDescription {
            id,
            room,
            objects,
            receptacles,
            diagonal,
        })
    }

    pub fn objects(&self) -> &[ObjectSpec] {
        &self.objects
    }

    pub fn receptacles(&self) -> &[ReceptacleSpec] {
        &self.receptacles
    }

    /// Diagonal of the bounding box of all receptacle surfaces; the length
    /// scale for distance normalisation.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.binary_search_by(|o| o.id.as_str().cmp(id)).ok()
    }

    pub fn receptacle_index(&self, id: &str) -> Option<usize> {
        self.receptacles.binary_search_by(|r| r.id.as_str().cmp(id)).ok()
    }

    pub fn object(&self, id: &str) -> Result<&ObjectSpec> {
        self.object_index(id)
            .map(|i| &self.objects[i])
            .ok_or_else(|| Error::UnknownObject(id.to_string()))
    }

    pub fn receptacle(&self, id: &str) -> Result<&ReceptacleSpec> {
        self.receptacle_index(id)
            .map(|i| &self.receptacles[i])
            .ok_or_else(|| Error::UnknownReceptacle(id.to_string()))
    }

    /// Largest usage frequency over all scene objects.
    pub fn max_usage(&self) -> f64 {
        self.objects.iter().map(|o| o.usage_frequency).fold(0.0, f64::max)
    }

    /// Copy of the scene with receptacle accessibilities replaced for the
    /// ids present in `accessibility`.
    pub fn with_accessibility(&self, accessibility: &BTreeMap<String, f64>) -> Result<Self> {
        let mut receptacles = self.receptacles.clone();
        for (id, alpha) in accessibility {
            let idx = self
                .receptacle_index(id)
                .ok_or_else(|| Error::UnknownReceptacle(id.clone()))?;
            receptacles[idx].accessibility = *alpha;
        }
        SceneDescription::new(self.id.clone(), self.room.clone(), self.objects.clone(), receptacles)
    }

    pub fn check_scene_ref(&self, scene_ref: &str) -> Result<()> {
        if scene_ref != self.id {
            return Err(Error::SceneMismatch {
                expected: self.id.clone(),
                found: scene_ref.to_string(),
            });
        }
        Ok(())
    }
}

fn bounding_diagonal(receptacles: &[ReceptacleSpec]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for r in receptacles {
        let s = &r.surface;
        let corners = [[s.x, s.y, s.z], [s.x + s.w, s.y + s.d, s.z]];
        for c in &corners {
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
    }
    distance(&lo, &hi)
}

/// One broken feasibility rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    DuplicateAssignment { object_id: String },
    OutsideSurface { object_id: String, receptacle_id: String },
    Overlap { first: String, second: String, receptacle_id: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateAssignment { object_id } => {
                write!(f, "duplicate assignment: `{object_id}` is placed more than once")
            }
            Violation::OutsideSurface { object_id, receptacle_id } => write!(
                f,
                "surface containment: `{object_id}` extends beyond `{receptacle_id}`"
            ),
            Violation::Overlap { first, second, receptacle_id } => {
                write!(f, "overlap: `{first}` and `{second}` intersect on `{receptacle_id}`")
            }
        }
    }
}

/// Outcome of [`validate_arrangement`]; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validity {
    pub violations: Vec<Violation>,
}

impl Validity {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks unique assignment, surface containment and non-overlap.
pub fn validate_arrangement(scene: &SceneDescription, x: &Arrangement) -> Result<Validity> {
    scene.check_scene_ref(&x.scene_ref)?;
    let mut boxes = Vec::with_capacity(x.placements.len());
    for p in &x.placements {
        let object = scene.object(&p.object_id)?;
        let receptacle = scene.receptacle(&p.receptacle_id)?;
        boxes.push((p, object, receptacle));
    }

    let mut violations = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for (p, _, _) in &boxes {
        if !seen.insert(p.object_id.as_str()) {
            violations.insert(Violation::DuplicateAssignment {
                object_id: p.object_id.clone(),
            });
        }
    }
    for (p, object, receptacle) in &boxes {
        if !receptacle.surface.contains(&object.footprint, &p.position) {
            violations.insert(Violation::OutsideSurface {
                object_id: p.object_id.clone(),
                receptacle_id: p.receptacle_id.clone(),
            });
        }
    }
    for (i, (a, oa, _)) in boxes.iter().enumerate() {
        for (b, ob, _) in &boxes[i + 1..] {
            if a.receptacle_id != b.receptacle_id || a.object_id == b.object_id {
                continue;
            }
            if Aabb::of(&oa.footprint, &a.position).intersects(&Aabb::of(&ob.footprint, &b.position)) {
                let (first, second) = if a.object_id <= b.object_id {
                    (&a.object_id, &b.object_id)
                } else {
                    (&b.object_id, &a.object_id)
                };
                violations.insert(Violation::Overlap {
                    first: first.clone(),
                    second: second.clone(),
                    receptacle_id: a.receptacle_id.clone(),
                });
            }
        }
    }
    Ok(Validity {
        violations: violations.into_iter().collect(),
    })
}

pub fn candidate_slots(scene: &SceneDescription, receptacle_id: &str) -> Result<Vec<Point3>> {
    Ok(scene.receptacle(receptacle_id)?.slots())
}

/// Every `(unplaced object, receptacle, slot)` whose addition keeps `x`
/// feasible, ordered by object id, receptacle id, then slot index.
pub fn admissible_actions(scene: &SceneDescription, x: &Arrangement) -> Result<Vec<Action>> {
    let validity = validate_arrangement(scene, x)?;
    if !validity.is_ok() {
        let reasons: Vec<String> = validity.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Precondition(format!(
            "arrangement is infeasible: {}",
            reasons.join("; ")
        )));
    }

    let placed: BTreeSet<&str> = x.placements.iter().map(|p| p.object_id.as_str()).collect();
    let mut actions = Vec::new();
    for object in scene.objects().iter().filter(|o| !placed.contains(o.id.as_str())) {
        for receptacle in scene.receptacles() {
            let occupants: Vec<Aabb> = x
                .placements
                .iter()
                .filter(|p| p.receptacle_id == receptacle.id)
                .map(|p| {
                    // ids were checked by validate_arrangement
                    let o = scene.object(&p.object_id).expect("validated id");
                    Aabb::of(&o.footprint, &p.position)
                })
                .collect();
            for (slot, position) in receptacle.slots().into_iter().enumerate() {
                if !receptacle.surface.contains(&object.footprint, &position) {
                    continue;
                }
                let candidate = Aabb::of(&object.footprint, &position);
                if occupants.iter().any(|b| b.intersects(&candidate)) {
                    continue;
                }
                actions.push(Action {
                    object_id: object.id.clone(),
                    receptacle_id: receptacle.id.clone(),
                    slot,
                    position,
                });
            }
        }
    }
    Ok(actions)
}

/// Intersection-over-union of `(object, receptacle)` pair sets; 1 when both
/// sets are empty.
pub fn jaccard_pairs<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn jaccard_similarity(a: &Arrangement, b: &Arrangement) -> Result<f64> {
    if a.scene_ref != b.scene_ref {
        return Err(Error::SceneMismatch {
            expected: a.scene_ref.clone(),
            found: b.scene_ref.clone(),
        });
    }
    Ok(jaccard_pairs(&a.assignment_pairs(), &b.assignment_pairs()))
}
