mod common;

use std::collections::BTreeMap;

use arrange_core::constructs::{construct_scores, habitual_score, semantic_score, spatial_score};
use arrange_core::eval::{batch_eval, object_accuracy, EvalCase, GroundTruth};
use arrange_core::priors::{estimate_affinities, estimate_spatial_priors, weights_from_likert, DemonstrationSet};
use arrange_core::scene::{ObjectSpec, Placement, ReceptacleSpec};
use arrange_core::{
    admissible_actions, jaccard_similarity, reward, validate_arrangement, Arrangement, LikertResponse,
    PreferenceWeights, SceneDescription, SemanticAffinities,
};
use common::{random_arrangement, random_instance, random_weights, Shape};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SMALL: Shape = Shape {
    objects: 1..=6,
    receptacles: 1..=4,
    grid: 2,
};

fn rebuild(scene: &SceneDescription, objects: Vec<ObjectSpec>, receptacles: Vec<ReceptacleSpec>) -> SceneDescription {
    SceneDescription::new(scene.id.clone(), scene.room.clone(), objects, receptacles).unwrap()
}

fn ground_truth(x: &Arrangement) -> GroundTruth {
    GroundTruth {
        scene_ref: x.scene_ref.clone(),
        assignment: x
            .placements
            .iter()
            .map(|p| (p.object_id.clone(), p.receptacle_id.clone()))
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_and_reward_lie_in_unit_interval(seed in any::<u64>()) {
        let (scene, bundle) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = random_arrangement(&mut rng, &scene, false);
        let (f, r) = reward(&scene, &x, &bundle, &bundle.weights).unwrap();
        for v in f.as_array().into_iter().chain([r]) {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn admissible_actions_keep_arrangements_feasible(seed in any::<u64>()) {
        let (scene, _) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let x = random_arrangement(&mut rng, &scene, false);
        for action in admissible_actions(&scene, &x).unwrap() {
            let next = x.with(&action);
            prop_assert!(validate_arrangement(&scene, &next).unwrap().is_ok());
        }
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(seed in any::<u64>()) {
        let (scene, _) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let a = random_arrangement(&mut rng, &scene, false);
        let b = random_arrangement(&mut rng, &scene, false);
        let ab = jaccard_similarity(&a, &b).unwrap();
        prop_assert_eq!(ab, jaccard_similarity(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(jaccard_similarity(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn moving_a_prior_towards_its_object_never_lowers_spatial_score(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (scene, bundle) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let x = random_arrangement(&mut rng, &scene, true);
        prop_assume!(!x.placements.is_empty());
        let before = spatial_score(&scene, &x, &bundle.spatial).unwrap();
        let p = &x.placements[0];
        let mut priors = bundle.spatial.clone();
        let v = priors.preferred_position.get_mut(&p.object_id).unwrap();
        for (a, b) in v.iter_mut().zip(p.position) {
            *a += t * (b - *a);
        }
        let after = spatial_score(&scene, &x, &priors).unwrap();
        prop_assert!(after >= before - 1e-12, "{after} < {before}");
    }

    #[test]
    fn closer_pairs_help_positive_and_hurt_negative_affinity(
        sigma in -1.0f64..=1.0,
        near in 0.0f64..5.0,
        extra in 0.0f64..5.0,
    ) {
        let (scene, _) = random_instance(7, &Shape { objects: 2..=2, receptacles: 1..=1, grid: 1 });
        let mut aff = SemanticAffinities::new();
        aff.set("o0", "o1", sigma).unwrap();
        let at = |d: f64| Arrangement {
            scene_ref: scene.id.clone(),
            placements: vec![
                Placement { object_id: "o0".into(), receptacle_id: "r0".into(), position: [0.0, 0.0, 0.0] },
                Placement { object_id: "o1".into(), receptacle_id: "r0".into(), position: [d, 0.0, 0.0] },
            ],
        };
        let close = semantic_score(&scene, &at(near), &aff).unwrap();
        let far = semantic_score(&scene, &at(near + extra), &aff).unwrap();
        if sigma > 0.0 {
            prop_assert!(close >= far - 1e-12);
        } else if sigma < 0.0 {
            prop_assert!(close <= far + 1e-12);
        } else {
            prop_assert_eq!(close, far);
        }
    }

    #[test]
    fn habitual_score_ignores_usage_units(seed in any::<u64>(), k in 0.01f64..100.0) {
        let (scene, _) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let x = random_arrangement(&mut rng, &scene, false);
        let scaled_objects = scene
            .objects()
            .iter()
            .cloned()
            .map(|mut o| { o.usage_frequency *= k; o })
            .collect();
        let scaled = rebuild(&scene, scaled_objects, scene.receptacles().to_vec());
        let a = habitual_score(&scene, &x).unwrap();
        let b = habitual_score(&scaled, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn reward_is_linear_in_weights(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let (scene, bundle) = random_instance(seed, &SMALL);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
        let x = random_arrangement(&mut rng, &scene, false);
        let (w1, w2) = (random_weights(&mut rng), random_weights(&mut rng));
        let mix = PreferenceWeights::new(std::array::from_fn(|k| {
            lambda * w1.as_array()[k] + (1.0 - lambda) * w2.as_array()[k]
        }))
        .unwrap();
        let f = construct_scores(&scene, &x, &bundle).unwrap();
        let (_, r1) = reward(&scene, &x, &bundle, &w1).unwrap();
        let (_, r2) = reward(&scene, &x, &bundle, &w2).unwrap();
        let (_, rm) = reward(&scene, &x, &bundle, &mix).unwrap();
        prop_assert!((rm - (lambda * r1 + (1.0 - lambda) * r2)).abs() < 1e-12);
        let dot: f64 = f.as_array().iter().zip(w1.as_array()).map(|(a, b)| a * b).sum();
        prop_assert!((r1 - dot).abs() < 1e-12);
        for k in 0..4 {
            let (_, rk) = reward(&scene, &x, &bundle, &PreferenceWeights::one_hot(k)).unwrap();
            prop_assert_eq!(rk, f.as_array()[k]);
        }
    }

    #[test]
    fn estimated_affinities_are_symmetric_and_bounded(seed in any::<u64>(), demos in 1usize..6) {
        let (scene, _) = random_instance(seed, &Shape { objects: 2..=5, receptacles: 2..=4, grid: 2 });
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let xs = (0..demos).map(|_| random_arrangement(&mut rng, &scene, true)).collect();
        let set = DemonstrationSet::new(&scene, xs).unwrap();
        let aff = estimate_affinities(&scene, &set, scene.receptacles().len()).unwrap();
        for a in scene.objects() {
            for b in scene.objects() {
                let s = aff.get(&a.id, &b.id).unwrap();
                prop_assert_eq!(s, aff.get(&b.id, &a.id).unwrap());
                prop_assert!((-1.0..=1.0).contains(&s));
                if a.id == b.id {
                    prop_assert_eq!(s, 0.0);
                }
            }
        }
    }

    #[test]
    fn spatial_priors_ignore_demonstration_order(seed in any::<u64>(), demos in 1usize..6) {
        let (scene, _) = random_instance(seed, &Shape { objects: 1..=5, receptacles: 1..=3, grid: 2 });
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 8);
        let xs: Vec<Arrangement> = (0..demos)
            .map(|_| random_arrangement(&mut rng, &scene, true))
            .filter(|x| x.placements.len() == scene.objects().len())
            .collect();
        prop_assume!(!xs.is_empty());
        let mut shuffled = xs.clone();
        shuffled.shuffle(&mut rng);
        let a = estimate_spatial_priors(&scene, &DemonstrationSet::new(&scene, xs).unwrap()).unwrap();
        let b = estimate_spatial_priors(&scene, &DemonstrationSet::new(&scene, shuffled).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn likert_weights_depend_only_on_construct_means(items in proptest::collection::vec(1u8..=5, 12), seed in any::<u64>()) {
        let w = weights_from_likert(&LikertResponse::new(items.clone()).unwrap()).unwrap();
        prop_assert!((w.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(w.as_array().iter().all(|v| (0.0..=1.0).contains(v)));
        // Reordering items inside a construct leaves its mean unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut permuted = items.clone();
        for chunk in permuted.chunks_mut(3) {
            chunk.shuffle(&mut rng);
        }
        let v = weights_from_likert(&LikertResponse::new(permuted).unwrap()).unwrap();
        for (a, b) in w.as_array().iter().zip(v.as_array()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_ratings_give_uniform_weights(v in 1u8..=5) {
        let w = weights_from_likert(&LikertResponse::new(vec![v; 12]).unwrap()).unwrap();
        prop_assert_eq!(w.as_array(), [0.25; 4]);
    }

    #[test]
    fn perfect_accuracy_iff_perfect_jaccard(seed in any::<u64>()) {
        let (scene, _) = random_instance(seed, &Shape { objects: 1..=6, receptacles: 1..=3, grid: 2 });
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
        let pred = random_arrangement(&mut rng, &scene, true);
        let truth = random_arrangement(&mut rng, &scene, true);
        prop_assume!(pred.placements.len() == scene.objects().len());
        prop_assume!(truth.placements.len() == scene.objects().len());
        let report = object_accuracy(&pred, &ground_truth(&truth)).unwrap();
        prop_assert_eq!(report.object_accuracy == 1.0, report.jaccard == 1.0);
        prop_assert_eq!(report.object_accuracy, report.matches as f64 / report.total as f64);
        prop_assert_eq!(report.per_object.len(), scene.objects().len());

        // Receptacle-level metric: moving positions does not matter.
        let mut moved = pred.clone();
        for p in &mut moved.placements {
            p.position[0] += 10.0;
        }
        prop_assert_eq!(object_accuracy(&moved, &ground_truth(&truth)).unwrap().object_accuracy, report.object_accuracy);
    }

    #[test]
    fn batch_mean_lies_between_extremes(seed in any::<u64>(), cases in 1usize..6) {
        let (scene, _) = random_instance(seed, &Shape { objects: 1..=5, receptacles: 1..=3, grid: 2 });
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 10);
        let mut list = Vec::new();
        for k in 0..cases {
            let pred = random_arrangement(&mut rng, &scene, true);
            let truth = random_arrangement(&mut rng, &scene, true);
            prop_assume!(pred.placements.len() == scene.objects().len());
            prop_assume!(truth.placements.len() == scene.objects().len());
            list.push(EvalCase { label: format!("c{k}"), prediction: pred, ground_truth: ground_truth(&truth) });
        }
        let s = batch_eval(&list).unwrap();
        prop_assert!(s.min_accuracy <= s.mean_accuracy + 1e-15 && s.mean_accuracy <= s.max_accuracy + 1e-15);
        prop_assert!(s.stdev_accuracy >= 0.0);
        let labels: Vec<&str> = s.cases.iter().map(|c| c.label.as_str()).collect();
        let expected: Vec<String> = (0..cases).map(|k| format!("c{k}")).collect();
        prop_assert_eq!(labels, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

#[test]
fn published_weight_vectors_are_accepted() {
    let profiles: BTreeMap<&str, [f64; 4]> = [
        ("p23", [0.37, 0.29, 0.17, 0.17]),
        ("p32", [0.25, 0.25, 0.25, 0.25]),
        ("p24", [0.34, 0.40, 0.18, 0.08]),
        ("p16", [0.26, 0.21, 0.30, 0.23]),
    ]
    .into_iter()
    .collect();
    for (name, w) in profiles {
        assert!(PreferenceWeights::new(w).is_ok(), "{name}");
    }
}
