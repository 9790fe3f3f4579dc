//! Per-corner mean absolute error between predicted and true labels.

use std::collections::HashMap;
use std::fmt;

use super::labels::{LabeledImage, Units};
use super::DatapipeError;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// MAE of corners TL, TR, BR, BL (normalized units).
    pub per_corner: [f64; 4],
    /// Mean of the four per-corner values.
    pub overall: f64,
    /// 1-based number of the corner with the largest MAE (3 = bottom right).
    pub worst_corner: usize,
    pub images: usize,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "images,{}", self.images)?;
        for (i, mae) in self.per_corner.iter().enumerate() {
            writeln!(f, "corner{},{}", i + 1, mae)?;
        }
        writeln!(f, "overall,{}", self.overall)?;
        writeln!(f, "worst_corner,{}", self.worst_corner)
    }
}

/// For each corner, averages `(|Δu| + |Δv|) / 2` over all images.
///
/// Both sets must hold the same ids and be in normalized units.
pub fn evaluate(pred: &[LabeledImage], truth: &[LabeledImage]) -> Result<EvalReport, DatapipeError> {
    if truth.is_empty() {
        return Err(DatapipeError::Empty);
    }
    let mut by_id: HashMap<&str, &LabeledImage> = HashMap::with_capacity(pred.len());
    for p in pred {
        p.require_units(Units::Normalized)?;
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(DatapipeError::DuplicateId(p.id.clone()));
        }
    }
    if pred.len() != truth.len() {
        let truth_ids: std::collections::HashSet<&str> = truth.iter().map(|t| t.id.as_str()).collect();
        if let Some(extra) = pred.iter().find(|p| !truth_ids.contains(p.id.as_str())) {
            return Err(DatapipeError::IdMismatch(extra.id.clone()));
        }
    }
    let mut sums = [0.0; 4];
    for t in truth {
        t.require_units(Units::Normalized)?;
        let p = by_id
            .get(t.id.as_str())
            .ok_or_else(|| DatapipeError::IdMismatch(t.id.clone()))?;
        for (slot, (a, b)) in sums
            .iter_mut()
            .zip(p.corners.points().iter().zip(t.corners.points()))
        {
            *slot += ((a.u - b.u).abs() + (a.v - b.v).abs()) / 2.0;
        }
    }
    let n = truth.len() as f64;
    let per_corner = sums.map(|s| s / n);
    let overall = per_corner.iter().sum::<f64>() / 4.0;
    let worst_corner = (0..4)
        .max_by(|&a, &b| per_corner[a].total_cmp(&per_corner[b]).then(b.cmp(&a)))
        .expect("four corners")
        + 1;
    Ok(EvalReport {
        per_corner,
        overall,
        worst_corner,
        images: truth.len(),
    })
}
