//! Domain types shared by every stage: policies, solution sets, distance
//! matrices, partitionings and fronts of partitionings, plus Pareto-dominance
//! helpers.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::hypervolume_2d;

/// Number of highlight states per policy.
pub const N_STATES: usize = 5;

/// Optimization sense for dominance checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Returns `true` iff `a` Pareto-dominates `b` under `sense`: weakly better
/// in every coordinate and strictly better in at least one.
pub fn dominates(a: &[f64], b: &[f64], sense: Sense) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut strict = false;
    for (&x, &y) in a.iter().zip(b) {
        let (better, worse) = match sense {
            Sense::Maximize => (x > y, x < y),
            Sense::Minimize => (x < y, x > y),
        };
        if worse {
            return Ok(false);
        }
        strict |= better;
    }
    Ok(strict)
}

/// Indices of the vectors not dominated by any other vector, in input order.
/// Identical vectors never dominate each other, so duplicates all survive.
pub fn non_dominated_indices<V: AsRef<[f64]>>(points: &[V], sense: Sense) -> Result<Vec<usize>> {
    if let Some(first) = points.first() {
        let dim = first.as_ref().len();
        for p in points {
            if p.as_ref().len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    got: p.as_ref().len(),
                });
            }
        }
    }
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j && dominates(q.as_ref(), p.as_ref(), sense)? {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

/// Keeps the `(id, objectives)` candidates that no other candidate dominates
/// under maximization. Order is preserved.
pub fn pareto_filter(candidates: Vec<(String, Vec<f64>)>) -> Result<Vec<(String, Vec<f64>)>> {
    if candidates.is_empty() {
        return Err(Error::Empty("pareto_filter candidates"));
    }
    let objs: Vec<&[f64]> = candidates.iter().map(|(_, o)| o.as_slice()).collect();
    let keep: HashSet<usize> = non_dominated_indices(&objs, Sense::Maximize)?
        .into_iter()
        .collect();
    Ok(candidates
        .into_iter()
        .enumerate()
        .filter_map(|(i, c)| keep.contains(&i).then_some(c))
        .collect())
}

/// Feature-by-state matrix: one row per state feature, one column per
/// highlight state in descending importance. Empty when not yet extracted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BehaviorMatrix(pub Vec<Vec<f64>>);

impl BehaviorMatrix {
    /// Builds a matrix from its columns (one feature vector per state).
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let n_feat = columns.first().map_or(0, Vec::len);
        let rows = (0..n_feat)
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        BehaviorMatrix(rows)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(n_feat, n_st)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.0.len(), self.0.first().map_or(0, Vec::len))
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.iter().map(|r| r[j]).collect()
    }

    pub fn is_rectangular(&self) -> bool {
        let (_, cols) = self.shape();
        self.0.iter().all(|r| r.len() == cols)
    }

    /// Entries in row-major order.
    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

/// One MORL solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    pub objectives: Vec<f64>,
    #[serde(default)]
    pub behavior: BehaviorMatrix,
    /// Set when fewer than five unique states were available and the last
    /// selected state was repeated.
    #[serde(default)]
    pub padding: bool,
}

impl Policy {
    pub fn new(id: impl Into<String>, objectives: Vec<f64>) -> Self {
        Policy {
            id: id.into(),
            objectives,
            behavior: BehaviorMatrix::default(),
            padding: false,
        }
    }

    pub fn with_behavior(mut self, behavior: BehaviorMatrix) -> Self {
        self.behavior = behavior;
        self
    }
}

/// Free-form metadata attached to a solution set.
pub type Provenance = BTreeMap<String, serde_json::Value>;

/// A Pareto-filtered collection of policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub objective_names: Vec<String>,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub provenance: Provenance,
    pub policies: Vec<Policy>,
}

impl SolutionSet {
    /// Validates and builds a solution set. Behavior matrices are either
    /// absent for every policy or present with one common shape
    /// `n_feat × k` (k = 5 by default).
    pub fn new(
        objective_names: Vec<String>,
        feature_names: Vec<String>,
        policies: Vec<Policy>,
        provenance: Provenance,
    ) -> Result<Self> {
        let set = SolutionSet {
            objective_names,
            feature_names,
            provenance,
            policies,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let n_obj = self.objective_names.len();
        let n_feat = self.feature_names.len();
        let n_cols = self
            .policies
            .iter()
            .find(|p| !p.behavior.is_empty())
            .map_or(N_STATES, |p| p.behavior.shape().1);
        let mut seen = HashSet::new();
        for p in &self.policies {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
            if p.objectives.len() != n_obj {
                return Err(Error::LengthMismatch {
                    expected: n_obj,
                    got: p.objectives.len(),
                });
            }
            if p.objectives.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("policy objectives"));
            }
            if !p.behavior.is_empty() {
                let shape = p.behavior.shape();
                if shape != (n_feat, n_cols) || n_cols == 0 || !p.behavior.is_rectangular() {
                    return Err(Error::ShapeMismatch {
                        expected: (n_feat, n_cols),
                        got: shape,
                    });
                }
                if p.behavior.flatten().iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("behavior matrix"));
                }
            }
        }
        let with_behavior = self.policies.iter().filter(|p| !p.behavior.is_empty()).count();
        if with_behavior != 0 && with_behavior != self.policies.len() {
            let missing = self.policies.iter().find(|p| p.behavior.is_empty()).unwrap();
            return Err(Error::MissingBehavior(missing.id.clone()));
        }
        let objs: Vec<&[f64]> = self.policies.iter().map(|p| p.objectives.as_slice()).collect();
        let keep = non_dominated_indices(&objs, Sense::Maximize)?;
        if keep.len() != self.policies.len() {
            let kept: HashSet<usize> = keep.into_iter().collect();
            let bad = (0..self.policies.len()).find(|i| !kept.contains(i)).unwrap();
            return Err(Error::Dominated(self.policies[bad].id.clone()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn has_behavior(&self) -> bool {
        !self.policies.is_empty() && self.policies.iter().all(|p| !p.behavior.is_empty())
    }
}

/// Which representation a distance matrix was computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Objective,
    Behavior,
}

/// Dense symmetric pairwise dissimilarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    space: Space,
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from row-major values. Rejects asymmetric, negative,
    /// non-finite or non-zero-diagonal input.
    pub fn new(space: Space, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidParam {
                    name: "distance matrix",
                    reason: format!("diagonal entry {i} is not zero"),
                });
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFinite("distance matrix"));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidParam {
                        name: "distance matrix",
                        reason: format!("entry ({i}, {j}) is not symmetric"),
                    });
                }
            }
        }
        Ok(DistanceMatrix { space, n, values })
    }

    /// Builds from a pairwise function evaluated on the upper triangle.
    pub fn from_fn(space: Space, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self::new(space, n, values)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.space, self.n, self.values.iter().map(|v| v * c).collect())
    }
}

/// The two minimization objectives of a partitioning, each in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    #[serde(rename = "f_O")]
    pub f_o: f64,
    #[serde(rename = "f_B")]
    pub f_b: f64,
}

impl ObjectivePair {
    pub fn new(f_o: f64, f_b: f64) -> Self {
        ObjectivePair { f_o, f_b }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.f_o, self.f_b]
    }

    /// Minimization dominance.
    pub fn dominates(&self, other: &ObjectivePair) -> bool {
        self.f_o <= other.f_o
            && self.f_b <= other.f_b
            && (self.f_o < other.f_o || self.f_b < other.f_b)
    }
}

/// A disjoint cover of policy indices by clusters.
///
/// Members are kept sorted and clusters ordered by their smallest member, so
/// structurally equal partitionings compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partitioning {
    clusters: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objectives: Option<ObjectivePair>,
}

impl Partitioning {
    /// Canonicalizes `clusters` (empty clusters are dropped). Validity is not
    /// checked here; see [`validate_partitioning`].
    pub fn new(clusters: Vec<Vec<usize>>) -> Self {
        let mut clusters: Vec<Vec<usize>> = clusters
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        clusters.sort_by_key(|c| c[0]);
        Partitioning {
            clusters,
            objectives: None,
        }
    }

    /// Builds from per-item cluster labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(i);
        }
        Self::new(by_label.into_values().collect())
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Number of covered items.
    pub fn n_items(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Cluster index of every item in `0..n`; `usize::MAX` for uncovered items.
    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &i in members {
                if i < n {
                    labels[i] = c;
                }
            }
        }
        labels
    }

    pub fn objectives(&self) -> Option<ObjectivePair> {
        self.objectives
    }

    pub fn set_objectives(&mut self, pair: ObjectivePair) {
        self.objectives = Some(pair);
    }

    pub fn with_objectives(mut self, pair: ObjectivePair) -> Self {
        self.objectives = Some(pair);
        self
    }

    /// Structural equality, ignoring objective values.
    pub fn same_clusters(&self, other: &Partitioning) -> bool {
        self.clusters == other.clusters
    }
}

/// One failed validity rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// An index in `0..n` is not covered.
    MissingIndex(usize),
    /// An index appears in more than one place.
    DuplicateIndex(usize),
    /// An index is `>= n`.
    OutOfRange(usize),
    TooFewClusters,
    SingletonCluster,
}

/// Checks cover, disjointness, at least two clusters and at least two
/// members per cluster. One record per failed rule.
pub fn validate_partitioning(p: &Partitioning, n: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut count = vec![0usize; n];
    let mut out_of_range = None;
    for &i in p.clusters.iter().flatten() {
        if i < n {
            count[i] += 1;
        } else if out_of_range.is_none() {
            out_of_range = Some(i);
        }
    }
    if let Some(i) = count.iter().position(|&c| c == 0) {
        out.push(Violation::MissingIndex(i));
    }
    if let Some(i) = count.iter().position(|&c| c > 1) {
        out.push(Violation::DuplicateIndex(i));
    }
    if let Some(i) = out_of_range {
        out.push(Violation::OutOfRange(i));
    }
    if p.clusters.len() < 2 {
        out.push(Violation::TooFewClusters);
    }
    if p.clusters.iter().any(|c| c.len() < 2) {
        out.push(Violation::SingletonCluster);
    }
    out
}

/// Mutually non-dominated partitionings with their hypervolume against (2, 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitioningFront {
    pub members: Vec<Partitioning>,
    pub hypervolume: f64,
}

impl PartitioningFront {
    /// Keeps the non-dominated, structurally distinct members (all must carry
    /// objectives), ordered by ascending `f_O` then `f_B`.
    pub fn from_population(population: &[Partitioning]) -> Self {
        let mut unique: Vec<&Partitioning> = Vec::new();
        for p in population {
            if p.objectives.is_some() && !unique.iter().any(|q| q.same_clusters(p)) {
                unique.push(p);
            }
        }
        let pairs: Vec<[f64; 2]> = unique
            .iter()
            .map(|p| p.objectives.unwrap().as_array())
            .collect();
        let keep = non_dominated_indices(&pairs, Sense::Minimize).expect("pairs have length 2");
        let mut members: Vec<Partitioning> = keep.into_iter().map(|i| unique[i].clone()).collect();
        members.sort_by(|a, b| {
            let (a, b) = (a.objectives.unwrap(), b.objectives.unwrap());
            a.f_o.total_cmp(&b.f_o).then(a.f_b.total_cmp(&b.f_b))
        });
        let hypervolume = hypervolume_2d(
            &members.iter().map(|m| m.objectives.unwrap()).collect::<Vec<_>>(),
            crate::metrics::REFERENCE_POINT,
        );
        PartitioningFront {
            members,
            hypervolume,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pairs(&self) -> Vec<ObjectivePair> {
        self.members.iter().filter_map(|m| m.objectives).collect()
    }
}
