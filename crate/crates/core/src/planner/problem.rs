//! Index-based view of a scene and prior bundle used inside the search loop.
//!
//! Objects and receptacles keep the scene's id order, and slots are
//! flattened receptacle-major, so the natural index order of
//! `(object, slot)` pairs is the canonical action order.

use crate::constructs::{affinity_penalty, ConstructScores, PreferenceWeights};
use crate::error::{Error, Result};
use crate::priors::PriorBundle;
use crate::scene::{distance, Aabb, Action, Arrangement, Placement, Point3, SceneDescription};

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub receptacle: usize,
    /// Index within the receptacle's slot grid.
    pub index: usize,
    pub position: Point3,
}

/// `(object index, slot index)`.
pub type IndexedAction = (u32, u32);

/// Slot per object, `None` while unplaced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    slots: Vec<Option<u32>>,
    placed: usize,
}

impl State {
    pub fn empty(n: usize) -> Self {
        State {
            slots: vec![None; n],
            placed: 0,
        }
    }

    pub fn slot_of(&self, object: usize) -> Option<u32> {
        self.slots[object]
    }

    pub fn placed(&self) -> usize {
        self.placed
    }

    pub fn unplaced(&self) -> usize {
        self.slots.len() - self.placed
    }

    pub fn is_complete(&self) -> bool {
        self.placed == self.slots.len()
    }

    pub fn apply(&mut self, (object, slot): IndexedAction) {
        debug_assert!(self.slots[object as usize].is_none());
        self.slots[object as usize] = Some(slot);
        self.placed += 1;
    }

    pub fn applied(&self, action: IndexedAction) -> State {
        let mut next = self.clone();
        next.apply(action);
        next
    }

    pub fn assignments(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (i, s)))
    }
}

pub struct Problem<'a> {
    scene: &'a SceneDescription,
    weights: PreferenceWeights,
    slots: Vec<Slot>,
    /// Slots whose surface contains the object, per object.
    fits: Vec<Vec<u32>>,
    /// Box of object `i` on slot `s`, indexed `i * slots.len() + s`.
    boxes: Vec<Option<Aabb>>,
    prior: Vec<Point3>,
    usage: Vec<f64>,
    alpha: Vec<f64>,
    sigma: Vec<f64>,
    commonsense: Vec<f64>,
    diagonal: f64,
}

impl<'a> Problem<'a> {
    pub fn new(scene: &'a SceneDescription, priors: &PriorBundle, weights: &PreferenceWeights) -> Result<Self> {
        priors.check_coverage(scene)?;
        let objects = scene.objects();
        let receptacles = scene.receptacles();
        let n = objects.len();
        let m = receptacles.len();

        let u_max = scene.max_usage();
        if n > 0 && u_max <= 0.0 {
            return Err(Error::DegenerateUsage);
        }

        let mut slots = Vec::new();
        for (r, receptacle) in receptacles.iter().enumerate() {
            for (index, position) in receptacle.slots().into_iter().enumerate() {
                slots.push(Slot {
                    receptacle: r,
                    index,
                    position,
                });
            }
        }
        let mut fits = Vec::with_capacity(n);
        let mut boxes = Vec::with_capacity(n * slots.len());
        for o in objects {
            let mut ok = Vec::new();
            for (s, slot) in slots.iter().enumerate() {
                if receptacles[slot.receptacle].surface.contains(&o.footprint, &slot.position) {
                    ok.push(s as u32);
                    boxes.push(Some(Aabb::of(&o.footprint, &slot.position)));
                } else {
                    boxes.push(None);
                }
            }
            fits.push(ok);
        }

        let mut sigma = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sigma[i * n + j] = priors.affinities.get(&objects[i].id, &objects[j].id)?;
            }
        }
        let mut commonsense = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                commonsense[i * m + j] = priors.commonsense.get(&objects[i].id, &receptacles[j].id)?;
            }
        }
        let prior = objects
            .iter()
            .map(|o| priors.spatial.get(&o.id).copied())
            .collect::<Result<Vec<_>>>()?;

        Ok(Problem {
            scene,
            weights: *weights,
            slots,
            fits,
            boxes,
            prior,
            usage: objects
                .iter()
                .map(|o| if u_max > 0.0 { o.usage_frequency / u_max } else { 0.0 })
                .collect(),
            alpha: receptacles.iter().map(|r| r.accessibility).collect(),
            sigma,
            commonsense,
            diagonal: scene.diagonal(),
        })
    }

    pub fn scene(&self) -> &SceneDescription {
        self.scene
    }

    pub fn weights(&self) -> &PreferenceWeights {
        &self.weights
    }

    pub fn num_objects(&self) -> usize {
        self.fits.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Statically fitting slots of `object`, in canonical order.
    pub fn fitting_slots(&self, object: usize) -> &[u32] {
        &self.fits[object]
    }

    pub fn empty_state(&self) -> State {
        State::empty(self.num_objects())
    }

    fn object_box(&self, object: usize, slot: u32) -> &Aabb {
        self.boxes[object * self.slots.len() + slot as usize]
            .as_ref()
            .expect("only fitting slots are queried")
    }

    /// Whether `object` can go on `slot` given the placements in `state`.
    pub fn can_place(&self, state: &State, object: usize, slot: u32) -> bool {
        let receptacle = self.slots[slot as usize].receptacle;
        let candidate = self.object_box(object, slot);
        state.assignments().all(|(other, s)| {
            self.slots[s as usize].receptacle != receptacle || !self.object_box(other, s).intersects(candidate)
        })
    }

    /// Admissible actions in canonical order, written into `out`.
    pub fn admissible_into(&self, state: &State, out: &mut Vec<IndexedAction>) {
        out.clear();
        for object in 0..self.num_objects() {
            if state.slot_of(object).is_some() {
                continue;
            }
            for &slot in &self.fits[object] {
                if self.can_place(state, object, slot) {
                    out.push((object as u32, slot));
                }
            }
        }
    }

    pub fn admissible(&self, state: &State) -> Vec<IndexedAction> {
        let mut out = Vec::new();
        self.admissible_into(state, &mut out);
        out
    }

    pub fn scores(&self, state: &State) -> ConstructScores {
        let placed: Vec<(usize, u32)> = state.assignments().collect();
        let n = placed.len();
        if n == 0 {
            return ConstructScores {
                f1: 1.0,
                f2: 1.0,
                f3: 1.0,
                f4: 1.0,
            };
        }
        let m = self.alpha.len();
        let (mut f1, mut f2, mut f4) = (0.0, 0.0, 0.0);
        for &(i, s) in &placed {
            let slot = &self.slots[s as usize];
            f1 += 1.0 / (1.0 + distance(&slot.position, &self.prior[i]) / self.diagonal);
            f2 += (self.usage[i] - self.alpha[slot.receptacle]).powi(2);
            f4 += self.commonsense[i * m + slot.receptacle];
        }
        let nf = n as f64;
        let f3 = if n < 2 {
            1.0
        } else {
            let total = self.num_objects();
            let mut penalty = 0.0;
            for &(i, si) in &placed {
                for &(j, sj) in &placed {
                    if i == j {
                        continue;
                    }
                    let d = distance(&self.slots[si as usize].position, &self.slots[sj as usize].position)
                        / self.diagonal;
                    penalty += affinity_penalty(self.sigma[i * total + j], d);
                }
            }
            1.0 - penalty / (nf * (nf - 1.0))
        };
        ConstructScores {
            f1: f1 / nf,
            f2: 1.0 - f2 / nf,
            f3,
            f4: f4 / nf,
        }
    }

    pub fn reward(&self, state: &State) -> f64 {
        self.scores(state).weighted(&self.weights)
    }

    pub fn action(&self, (object, slot): IndexedAction) -> Action {
        let s = &self.slots[slot as usize];
        Action {
            object_id: self.scene.objects()[object as usize].id.clone(),
            receptacle_id: self.scene.receptacles()[s.receptacle].id.clone(),
            slot: s.index,
            position: s.position,
        }
    }

    pub fn to_arrangement(&self, state: &State) -> Arrangement {
        let placements = state
            .assignments()
            .map(|(i, s)| {
                let slot = &self.slots[s as usize];
                Placement {
                    object_id: self.scene.objects()[i].id.clone(),
                    receptacle_id: self.scene.receptacles()[slot.receptacle].id.clone(),
                    position: slot.position,
                }
            })
            .collect();
        Arrangement {
            scene_ref: self.scene.id.clone(),
            placements,
        }
    }

    /// Maps an arrangement whose positions coincide with slot centres onto a state.
    pub fn state_of(&self, x: &Arrangement) -> Result<State> {
        self.scene.check_scene_ref(&x.scene_ref)?;
        let mut state = self.empty_state();
        for p in &x.placements {
            let object = self
                .scene
                .object_index(&p.object_id)
                .ok_or_else(|| Error::UnknownObject(p.object_id.clone()))?;
            let receptacle = self
                .scene
                .receptacle_index(&p.receptacle_id)
                .ok_or_else(|| Error::UnknownReceptacle(p.receptacle_id.clone()))?;
            if state.slot_of(object).is_some() {
                return Err(Error::Precondition(format!("`{}` placed twice", p.object_id)));
            }
            let slot = self
                .slots
                .iter()
                .position(|s| s.receptacle == receptacle && distance(&s.position, &p.position) < 1e-9)
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "`{}` is not on a candidate slot of `{}`",
                        p.object_id, p.receptacle_id
                    ))
                })?;
            if self.boxes[object * self.slots.len() + slot].is_none() || !self.can_place(&state, object, slot as u32) {
                return Err(Error::Precondition(format!("placement of `{}` is infeasible", p.object_id)));
            }
            state.apply((object as u32, slot as u32));
        }
        Ok(state)
    }
}
