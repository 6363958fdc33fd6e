#![allow(dead_code)]

use std::path::{Path, PathBuf};

use arrange_core::constructs::{AffinityEntry, CommonsenseEntry};
use arrange_core::scene::{Footprint, ObjectSpec, ReceptacleSpec, Surface};
use arrange_core::{
    admissible_actions, Arrangement, CommonsensePriorTable, PreferenceWeights, PriorBundle, SceneDescription,
    SemanticAffinities, SpatialPriors,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn load<T: serde::de::DeserializeOwned>(rel: &str) -> T {
    arrange_core::io::read_json(fixture(rel)).unwrap()
}

pub struct Shape {
    pub objects: std::ops::RangeInclusive<usize>,
    pub receptacles: std::ops::RangeInclusive<usize>,
    pub grid: u32,
}

/// Random scene and priors; object footprints fit every slot.
pub fn random_instance(seed: u64, shape: &Shape) -> (SceneDescription, PriorBundle) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(shape.objects.clone());
    let m = rng.random_range(shape.receptacles.clone());
    let objects = (0..n)
        .map(|i| ObjectSpec {
            id: format!("o{i}"),
            name: format!("object {i}"),
            footprint: Footprint {
                width: rng.random_range(0.05..0.2),
                depth: rng.random_range(0.05..0.2),
                height: 0.1,
            },
            usage_frequency: if i == 0 { 10.0 } else { rng.random_range(0.0..10.0) },
        })
        .collect();
    let receptacles = (0..m)
        .map(|j| ReceptacleSpec {
            id: format!("r{j}"),
            name: format!("receptacle {j}"),
            surface: Surface {
                x: rng.random_range(0.0..4.0),
                y: rng.random_range(0.0..4.0),
                w: 0.5 * shape.grid as f64,
                d: 0.5 * shape.grid as f64,
                z: rng.random_range(0.0..2.0),
            },
            accessibility: rng.random_range(0.0..=1.0),
            grid_resolution: shape.grid,
        })
        .collect();
    let scene = SceneDescription::new(format!("random-{seed}"), None, objects, receptacles).unwrap();
    let bundle = random_bundle(&mut rng, &scene);
    (scene, bundle)
}

pub fn random_bundle(rng: &mut ChaCha8Rng, scene: &SceneDescription) -> PriorBundle {
    let mut spatial = SpatialPriors::default();
    for o in scene.objects() {
        spatial.preferred_position.insert(
            o.id.clone(),
            [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(0.0..2.0)],
        );
    }
    let ids: Vec<String> = scene.objects().iter().map(|o| o.id.clone()).collect();
    let mut pairs = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            pairs.push(AffinityEntry {
                a: a.clone(),
                b: b.clone(),
                sigma: rng.random_range(-1.0..=1.0),
            });
        }
    }
    let mut table = Vec::new();
    for o in &ids {
        for r in scene.receptacles() {
            table.push(CommonsenseEntry {
                object_id: o.clone(),
                receptacle_id: r.id.clone(),
                score: rng.random_range(0.0..=1.0),
                provenance: "random".into(),
            });
        }
    }
    PriorBundle {
        spatial,
        affinities: SemanticAffinities::try_from(pairs).unwrap(),
        commonsense: CommonsensePriorTable::try_from(table).unwrap(),
        weights: random_weights(rng),
    }
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> PreferenceWeights {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.01..1.0));
    let total: f64 = raw.iter().sum();
    PreferenceWeights::new(raw.map(|v| v / total)).unwrap()
}

/// Random feasible arrangement built from admissible actions; may be partial.
pub fn random_arrangement(rng: &mut ChaCha8Rng, scene: &SceneDescription, complete: bool) -> Arrangement {
    let n = scene.objects().len();
    let stop = if complete { n } else { rng.random_range(0..=n) };
    let mut x = Arrangement::empty(&scene.id);
    while x.placements.len() < stop {
        let actions = admissible_actions(scene, &x).unwrap();
        if actions.is_empty() {
            break;
        }
        x = x.with(&actions[rng.random_range(0..actions.len())]);
    }
    x
}

pub fn object(id: &str, w: f64, d: f64, usage: f64) -> ObjectSpec {
    ObjectSpec {
        id: id.into(),
        name: id.into(),
        footprint: Footprint { width: w, depth: d, height: 0.1 },
        usage_frequency: usage,
    }
}

pub fn receptacle(id: &str, x: f64, y: f64, w: f64, d: f64, z: f64, grid: u32) -> ReceptacleSpec {
    ReceptacleSpec {
        id: id.into(),
        name: id.into(),
        surface: Surface { x, y, w, d, z },
        accessibility: 0.5,
        grid_resolution: grid,
    }
}
