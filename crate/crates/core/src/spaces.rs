//! Pairwise distances in objective space (Euclidean on return vectors) and
//! behavior space (Frobenius on behavior matrices).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solution::{BehaviorMatrix, DistanceMatrix, SolutionSet, Space};

/// Per-feature scaling applied before distances are taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Raw,
    /// Each objective coordinate (or behavior feature row, pooled over all
    /// policies and states) is shifted to mean 0 and scaled to unit
    /// population standard deviation. Constant features become 0.
    #[serde(rename = "zscore")]
    ZScorePerFeature,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

pub fn frobenius(a: &BehaviorMatrix, b: &BehaviorMatrix) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_rectangular() || !b.is_rectangular() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let sum: f64 = a
        .rows()
        .iter()
        .zip(b.rows())
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)))
        .sum();
    Ok(sum.sqrt())
}

fn zscore_in_place(groups: &mut [Vec<&mut f64>]) {
    for values in groups.iter_mut() {
        let n = values.len() as f64;
        let mean = values.iter().map(|v| **v).sum::<f64>() / n;
        let var = values.iter().map(|v| (**v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in values.iter_mut() {
            **v = if sd > 0.0 { (**v - mean) / sd } else { 0.0 };
        }
    }
}

fn normalized_objectives(set: &SolutionSet, norm: Normalization) -> Vec<Vec<f64>> {
    let mut objs: Vec<Vec<f64>> = set.policies.iter().map(|p| p.objectives.clone()).collect();
    if norm == Normalization::ZScorePerFeature {
        let n_obj = set.objective_names.len();
        let mut groups: Vec<Vec<&mut f64>> = (0..n_obj).map(|_| Vec::new()).collect();
        for o in objs.iter_mut() {
            for (k, v) in o.iter_mut().enumerate() {
                groups[k].push(v);
            }
        }
        zscore_in_place(&mut groups);
    }
    objs
}

fn normalized_behaviors(set: &SolutionSet, norm: Normalization) -> Vec<BehaviorMatrix> {
    let mut mats: Vec<BehaviorMatrix> = set.policies.iter().map(|p| p.behavior.clone()).collect();
    if norm == Normalization::ZScorePerFeature {
        let n_feat = mats.first().map_or(0, |m| m.shape().0);
        let mut groups: Vec<Vec<&mut f64>> = (0..n_feat).map(|_| Vec::new()).collect();
        for m in mats.iter_mut() {
            for (r, row) in m.0.iter_mut().enumerate() {
                groups[r].extend(row.iter_mut());
            }
        }
        zscore_in_place(&mut groups);
    }
    mats
}

/// Full pairwise distance matrix of `set` in `space`.
pub fn distance_matrix(set: &SolutionSet, space: Space, norm: Normalization) -> Result<DistanceMatrix> {
    let n = set.len();
    if n < 2 {
        return Err(Error::TooFewPolicies { needed: 2, got: n });
    }
    match space {
        Space::Objective => {
            let objs = normalized_objectives(set, norm);
            pairwise(space, n, |i, j| euclidean(&objs[i], &objs[j]))
        }
        Space::Behavior => {
            if let Some(p) = set.policies.iter().find(|p| p.behavior.is_empty()) {
                return Err(Error::MissingBehavior(p.id.clone()));
            }
            let mats = normalized_behaviors(set, norm);
            pairwise(space, n, |i, j| frobenius(&mats[i], &mats[j]))
        }
    }
}

fn pairwise(space: Space, n: usize, f: impl Fn(usize, usize) -> Result<f64>) -> Result<DistanceMatrix> {
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = f(i, j)?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix::new(space, n, values)
}
