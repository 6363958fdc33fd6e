use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use arrange_core::commonsense::{fetch_table, Backend, PriorCache, RemoteBackend, RemoteConfig, StubBackend};
use arrange_core::constructs::{object_contributions, reward, ConstructScores};
use arrange_core::priors::DemonstrationFile;
use arrange_core::{
    batch_eval, estimate_accessibility, estimate_affinities, estimate_spatial_priors, planner, render as draw,
    weights_from_likert, Arrangement, CommonsensePriorTable, Error, EvalCase, GroundTruth, LikertResponse,
    PlannerConfig, PreferenceWeights, PriorBundle, Result, SceneDescription,
};
use log::info;
use serde::{Deserialize, Serialize};

use crate::output::{read_arrangement, read_payload, OutputDir};
use crate::{GlobalOpts, RenderFormat};

/// Result of exhaustive solving, written by `oracle` and `plan --oracle`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactResult {
    pub scene_ref: String,
    pub weights: PreferenceWeights,
    #[serde(rename = "final")]
    pub final_arrangement: Arrangement,
    pub final_scores: ConstructScores,
    pub final_reward: f64,
}

fn parse_weights(w: Vec<f64>) -> Result<PreferenceWeights> {
    let w: [f64; 4] = w
        .try_into()
        .map_err(|w: Vec<f64>| Error::InvalidWeights(format!("expected 4 weights, got {}", w.len())))?;
    PreferenceWeights::new(w)
}

fn load_problem(scene: &Path, bundle: &Path, weights: Option<Vec<f64>>) -> Result<(SceneDescription, PriorBundle)> {
    let scene: SceneDescription = read_payload(scene)?;
    let mut bundle: PriorBundle = read_payload(bundle)?;
    if let Some(w) = weights {
        bundle.weights = parse_weights(w)?;
    }
    bundle.check_coverage(&scene)?;
    Ok((scene, bundle))
}

pub fn estimate_priors(
    g: &GlobalOpts,
    scene_path: &Path,
    demos_path: &Path,
    commonsense_path: &Path,
    likert: Option<&Path>,
    weights: Option<Vec<f64>>,
) -> Result<()> {
    let scene: SceneDescription = read_payload(scene_path)?;
    let file: DemonstrationFile = read_payload(demos_path)?;
    let demos = arrange_core::DemonstrationSet::new(&scene, file.demonstrations)?;

    let spatial = estimate_spatial_priors(&scene, &demos)?;
    let affinities = estimate_affinities(&scene, &demos, scene.receptacles().len())?;
    let accessibility = estimate_accessibility(&scene, &demos)?;
    let estimated_scene = scene.with_accessibility(&accessibility)?;
    let commonsense: CommonsensePriorTable = read_payload(commonsense_path)?;

    let (weights, weight_source) = match (likert, weights) {
        (Some(path), _) => {
            let resp: LikertResponse = read_payload(path)?;
            (weights_from_likert(&resp)?, format!("likert {}", path.display()))
        }
        (None, Some(w)) => (parse_weights(w)?, "command line".to_string()),
        (None, None) => (PreferenceWeights::uniform(), "uniform default".to_string()),
    };
    let bundle = PriorBundle {
        spatial,
        affinities,
        commonsense,
        weights,
    };
    bundle.check_coverage(&estimated_scene)?;

    let out = OutputDir::new(&g.out)?;
    let bundle_path = out.write("bundle.json", "estimate-priors", &bundle)?;
    let scene_out = out.write("scene.json", "estimate-priors", &estimated_scene)?;
    println!("demonstrations: {}", demos.len());
    println!("spatial priors: modal-receptacle centroid ({} objects)", scene.objects().len());
    println!(
        "affinities: co-placement rate against chance 1/{}",
        scene.receptacles().len()
    );
    println!("accessibility: mean normalised usage of hosted objects");
    println!("commonsense: {} ({})", commonsense_path.display(), bundle.commonsense.provenance);
    println!("weights: {:?} from {weight_source}", bundle.weights.as_array());
    println!("wrote {}", bundle_path.display());
    println!("wrote {}", scene_out.display());
    Ok(())
}

pub fn fetch_commonsense(
    g: &GlobalOpts,
    scene_path: &Path,
    stub: Option<&Path>,
    config: Option<&Path>,
    cache: Option<PathBuf>,
) -> Result<()> {
    let scene: SceneDescription = read_payload(scene_path)?;
    let out = OutputDir::new(&g.out)?;
    let backend = match stub {
        Some(path) => Backend::Stub(StubBackend {
            fixture: read_payload(path)?,
        }),
        None if g.offline => {
            return Err(Error::OracleConfig(
                "--offline needs --stub; the remote oracle would reach the network".into(),
            ))
        }
        None => {
            let cfg = match config {
                Some(path) => RemoteConfig::from_file(path)?,
                None => RemoteConfig::from_env()?,
            };
            info!("remote oracle {cfg:?}");
            Backend::Remote(RemoteBackend::http(cfg))
        }
    };
    let cache = PriorCache::open(cache.unwrap_or_else(|| out.path("commonsense_cache.json")))?;
    let table = fetch_table(&scene, &backend, &cache)?;
    if matches!(backend, Backend::Remote(_)) {
        cache.persist()?;
    }
    let path = out.write("commonsense.json", "fetch-commonsense", &table)?;
    println!("{} entries ({})", table.len(), table.provenance);
    println!("wrote {}", path.display());
    Ok(())
}

fn explain(scene: &SceneDescription, x: &Arrangement, bundle: &PriorBundle) -> Result<String> {
    let rows = object_contributions(scene, x, bundle, &bundle.weights)?;
    let w = rows.iter().map(|r| r.object_id.len()).chain([6]).max().unwrap_or(6);
    let v = rows.iter().map(|r| r.receptacle_id.len()).chain([10]).max().unwrap_or(10);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$}  {:<v$}  spatial  habitual  semantic  commonsense  weighted",
        "object", "receptacle"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{:<w$}  {:<v$}  {:>7.4}  {:>8.4}  {:>8.4}  {:>11.4}  {:>8.4}",
            r.object_id, r.receptacle_id, r.spatial, r.habitual, r.semantic, r.commonsense, r.weighted
        );
    }
    let (f, total) = reward(scene, x, bundle, &bundle.weights)?;
    let _ = writeln!(
        out,
        "scores f1={:.4} f2={:.4} f3={:.4} f4={:.4}  weights {:?}  R={:.6}",
        f.f1,
        f.f2,
        f.f3,
        f.f4,
        bundle.weights.as_array(),
        total
    );
    Ok(out)
}

fn write_render(out: &OutputDir, stem: &str, scene: &SceneDescription, x: &Arrangement, format: RenderFormat) -> Result<PathBuf> {
    match format {
        RenderFormat::Svg => out.write_text(&format!("{stem}.svg"), &draw::svg(scene, x)?),
        RenderFormat::Ascii => {
            let text = draw::ascii(scene, x, 72)?;
            print!("{text}");
            out.write_text(&format!("{stem}.txt"), &text)
        }
    }
}

pub fn plan(
    g: &GlobalOpts,
    scene_path: &Path,
    bundle_path: &Path,
    weights: Option<Vec<f64>>,
    parallel: usize,
    render: Option<RenderFormat>,
) -> Result<()> {
    let (scene, bundle) = load_problem(scene_path, bundle_path, weights)?;
    let config = PlannerConfig {
        iterations: g.iterations,
        exploration_c: g.exploration_c,
        seed: g.seed,
        root_parallelism: parallel,
        ..PlannerConfig::default()
    };
    let result = planner::plan(&scene, &bundle, &bundle.weights, &config)?;
    let out = OutputDir::new(&g.out)?;
    let path = out.write("plan.json", "plan", &result)?;
    for (k, step) in result.reward_trace.iter().enumerate() {
        println!(
            "{:>2}. {} -> {}  R={:.4}  visits={} mean={:.4}",
            k + 1,
            step.action.object_id,
            step.action.receptacle_id,
            step.reward,
            step.visits,
            step.mean_return
        );
    }
    print!("{}", explain(&scene, &result.final_arrangement, &bundle)?);
    if let Some(format) = render {
        let p = write_render(&out, "plan", &scene, &result.final_arrangement, format)?;
        println!("wrote {}", p.display());
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn oracle(
    g: &GlobalOpts,
    scene_path: &Path,
    bundle_path: &Path,
    weights: Option<Vec<f64>>,
    command: &str,
) -> Result<()> {
    let (scene, bundle) = load_problem(scene_path, bundle_path, weights)?;
    let (x, best) = planner::solve_exact(&scene, &bundle, &bundle.weights)?;
    let (scores, _) = reward(&scene, &x, &bundle, &bundle.weights)?;
    let result = ExactResult {
        scene_ref: scene.id.clone(),
        weights: bundle.weights,
        final_arrangement: x,
        final_scores: scores,
        final_reward: best,
    };
    let out = OutputDir::new(&g.out)?;
    let path = out.write("oracle.json", command, &result)?;
    print!("{}", explain(&scene, &result.final_arrangement, &bundle)?);
    println!("wrote {}", path.display());
    Ok(())
}

pub fn eval(g: &GlobalOpts, preds: &[PathBuf], gts: &[PathBuf], labels: &[String]) -> Result<()> {
    if preds.len() != gts.len() {
        return Err(Error::Precondition(format!(
            "{} prediction(s) but {} ground truth file(s)",
            preds.len(),
            gts.len()
        )));
    }
    if !labels.is_empty() && labels.len() != preds.len() {
        return Err(Error::Precondition(format!(
            "{} label(s) for {} case(s)",
            labels.len(),
            preds.len()
        )));
    }
    let mut cases = Vec::with_capacity(preds.len());
    for (k, (p, t)) in preds.iter().zip(gts).enumerate() {
        let label = labels.get(k).cloned().unwrap_or_else(|| p.display().to_string());
        cases.push(EvalCase {
            label,
            prediction: read_arrangement(p)?,
            ground_truth: read_payload::<GroundTruth>(t)?,
        });
    }
    let summary = batch_eval(&cases)?;
    for c in &summary.cases {
        println!("== {}", c.label);
        print!("{}", c.report.to_table());
    }
    print!("{}", summary.to_table());
    let out = OutputDir::new(&g.out)?;
    let path = out.write("eval.json", "eval", &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn render(g: &GlobalOpts, scene_path: &Path, arrangement: &Path, format: RenderFormat) -> Result<()> {
    let scene: SceneDescription = read_payload(scene_path)?;
    let x = read_arrangement(arrangement)?;
    let out = OutputDir::new(&g.out)?;
    let path = write_render(&out, "render", &scene, &x, format)?;
    println!("wrote {}", path.display());
    Ok(())
}
