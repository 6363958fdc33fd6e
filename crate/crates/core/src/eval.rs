//! Receptacle-level comparison of generated arrangements against
//! participant ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{jaccard_pairs, Arrangement};

/// Object → receptacle; positions are not recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scene_ref: String,
    pub assignment: BTreeMap<String, String>,
}

impl GroundTruth {
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        self.assignment.iter().map(|(o, r)| (o.clone(), r.clone())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub object_id: String,
    pub predicted: String,
    pub ground_truth: String,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scene_ref: String,
    pub matches: usize,
    pub total: usize,
    pub object_accuracy: f64,
    pub jaccard: f64,
    pub per_object: Vec<ObjectOutcome>,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let w = self
            .per_object
            .iter()
            .map(|o| o.object_id.len())
            .chain(["object".len()])
            .max()
            .unwrap_or(6);
        let p = self
            .per_object
            .iter()
            .map(|o| o.predicted.len())
            .chain(["predicted".len()])
            .max()
            .unwrap_or(9);
        let g = self
            .per_object
            .iter()
            .map(|o| o.ground_truth.len())
            .chain(["ground truth".len()])
            .max()
            .unwrap_or(12);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$}  {:<p$}  {:<g$}  ok", "object", "predicted", "ground truth");
        let _ = writeln!(out, "{}", "-".repeat(w + p + g + 8));
        for o in &self.per_object {
            let mark = if o.matched { "yes" } else { "no" };
            let _ = writeln!(out, "{:<w$}  {:<p$}  {:<g$}  {mark}", o.object_id, o.predicted, o.ground_truth);
        }
        let _ = writeln!(
            out,
            "object accuracy: {}/{} = {:.2}   jaccard: {:.4}",
            self.matches, self.total, self.object_accuracy, self.jaccard
        );
        out
    }
}

/// Fraction of ground-truth objects placed on the same receptacle.
pub fn object_accuracy(pred: &Arrangement, gt: &GroundTruth) -> Result<EvalReport> {
    if pred.scene_ref != gt.scene_ref {
        return Err(Error::SceneMismatch {
            expected: gt.scene_ref.clone(),
            found: pred.scene_ref.clone(),
        });
    }
    let mut predicted: BTreeMap<&str, &str> = BTreeMap::new();
    for p in &pred.placements {
        if predicted.insert(&p.object_id, &p.receptacle_id).is_some() {
            return Err(Error::Precondition(format!("`{}` is placed more than once", p.object_id)));
        }
        if !gt.assignment.contains_key(&p.object_id) {
            return Err(Error::UnknownObject(p.object_id.clone()));
        }
    }
    let missing: Vec<&str> = gt
        .assignment
        .keys()
        .map(String::as_str)
        .filter(|o| !predicted.contains_key(o))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Incomplete(format!("prediction lacks {}", missing.join(", "))));
    }

    let per_object: Vec<ObjectOutcome> = gt
        .assignment
        .iter()
        .map(|(object, truth)| {
            let guess = predicted[object.as_str()];
            ObjectOutcome {
                object_id: object.clone(),
                predicted: guess.to_string(),
                ground_truth: truth.clone(),
                matched: guess == truth,
            }
        })
        .collect();
    let matches = per_object.iter().filter(|o| o.matched).count();
    let total = per_object.len();
    Ok(EvalReport {
        scene_ref: gt.scene_ref.clone(),
        matches,
        total,
        object_accuracy: if total == 0 { 1.0 } else { matches as f64 / total as f64 },
        jaccard: jaccard_pairs(&pred.assignment_pairs(), &gt.pairs()),
        per_object,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub label: String,
    pub prediction: Arrangement,
    pub ground_truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReport {
    pub label: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub cases: Vec<LabeledReport>,
    pub mean_accuracy: f64,
    /// Population standard deviation (divides by the number of cases).
    pub stdev_accuracy: f64,
    pub stdev_kind: String,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
}

impl BatchSummary {
    pub fn to_table(&self) -> String {
        let w = self.cases.iter().map(|c| c.label.len()).chain([4]).max().unwrap_or(4);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$}  accuracy  jaccard", "case");
        for c in &self.cases {
            let _ = writeln!(out, "{:<w$}  {:>8.2}  {:>7.4}", c.label, c.report.object_accuracy, c.report.jaccard);
        }
        let _ = writeln!(
            out,
            "mean {:.4} ± {:.4} ({} stdev), range [{:.2}, {:.2}]",
            self.mean_accuracy, self.stdev_accuracy, self.stdev_kind, self.min_accuracy, self.max_accuracy
        );
        out
    }
}

/// Mean and population standard deviation of per-case accuracies, in the
/// order the cases are given.
pub fn batch_eval(cases: &[EvalCase]) -> Result<BatchSummary> {
    if cases.is_empty() {
        return Err(Error::Precondition("batch evaluation needs at least one case".into()));
    }
    let reports = cases
        .iter()
        .map(|c| {
            Ok(LabeledReport {
                label: c.label.clone(),
                report: object_accuracy(&c.prediction, &c.ground_truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let acc: Vec<f64> = reports.iter().map(|r| r.report.object_accuracy).collect();
    let n = acc.len() as f64;
    let mean = acc.iter().sum::<f64>() / n;
    let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    Ok(BatchSummary {
        mean_accuracy: mean,
        stdev_accuracy: var.sqrt(),
        stdev_kind: "population".into(),
        min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
        max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        cases: reports,
    })
}
