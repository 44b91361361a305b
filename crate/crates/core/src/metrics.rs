//! Clustering validity and comparison measures: silhouette, the minimization
//! transform used by PAN, 2-D hypervolume, adjusted Rand index and Sankey
//! link extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solution::{validate_partitioning, DistanceMatrix, Partitioning};

pub use crate::solution::ObjectivePair;

/// Reference point for every hypervolume computed on clustering objectives.
pub const REFERENCE_POINT: (f64, f64) = (2.0, 2.0);

/// Silhouette of item `i`. Items in singleton clusters, items with no other
/// cluster to compare against and coincident configurations score 0.
pub fn silhouette_point(i: usize, p: &Partitioning, d: &DistanceMatrix) -> f64 {
    let labels = p.labels(d.n());
    if labels[i] == usize::MAX {
        return 0.0;
    }
    let sizes: Vec<usize> = p.clusters().iter().map(Vec::len).collect();
    let mut sums = vec![0.0; sizes.len()];
    point_silhouette(i, &labels, &sizes, d, &mut sums)
}

/// Silhouette of item `i` given per-item labels and cluster sizes. Every
/// label must be `< sizes.len()`. `sums` is scratch space of length
/// `sizes.len()`.
fn point_silhouette(i: usize, labels: &[usize], sizes: &[usize], d: &DistanceMatrix, sums: &mut [f64]) -> f64 {
    let own = labels[i];
    if sizes[own] < 2 || sizes.len() < 2 {
        return 0.0;
    }
    sums.iter_mut().for_each(|s| *s = 0.0);
    for (&l, &dij) in labels.iter().zip(d.row(i)) {
        if let Some(s) = sums.get_mut(l) {
            *s += dij;
        }
    }
    let mut a = 0.0;
    let mut b = f64::INFINITY;
    for (c, (&sum, &size)) in sums.iter().zip(sizes).enumerate() {
        if c == own {
            a = sum / (size - 1) as f64;
        } else if size > 0 {
            b = b.min(sum / size as f64);
        }
    }
    let denom = a.max(b);
    if denom == 0.0 {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Mean silhouette for a full labelling of `d.n()` items into `k` clusters.
pub(crate) fn mean_silhouette_labels(labels: &[usize], k: usize, d: &DistanceMatrix) -> f64 {
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut sums = vec![0.0; k];
    let total: f64 = (0..labels.len())
        .map(|i| point_silhouette(i, labels, &sizes, d, &mut sums))
        .sum();
    total / labels.len() as f64
}

/// Mean silhouette over all items; errors if `p` is not a valid partitioning
/// of `d.n()` items.
pub fn silhouette(p: &Partitioning, d: &DistanceMatrix) -> Result<f64> {
    let violations = validate_partitioning(p, d.n());
    if !violations.is_empty() {
        return Err(Error::InvalidPartitioning(violations));
    }
    Ok(mean_silhouette_labels(&p.labels(d.n()), p.n_clusters(), d))
}

/// `(1 - S_O, 1 - S_B)`: maps silhouettes in `[-1, 1]` to `[0, 2]` so that
/// smaller is better in both coordinates.
pub fn objective_pair(p: &Partitioning, d_o: &DistanceMatrix, d_b: &DistanceMatrix) -> Result<ObjectivePair> {
    if d_o.n() != d_b.n() {
        return Err(Error::LengthMismatch {
            expected: d_o.n(),
            got: d_b.n(),
        });
    }
    let s_o = silhouette(p, d_o)?;
    let s_b = silhouette(p, d_b)?;
    Ok(ObjectivePair::new(1.0 - s_o, 1.0 - s_b))
}

/// Objective pair for a complete labelling; no validity check.
pub(crate) fn objective_pair_labels(labels: &[usize], k: usize, d_o: &DistanceMatrix, d_b: &DistanceMatrix) -> ObjectivePair {
    ObjectivePair::new(
        1.0 - mean_silhouette_labels(labels, k, d_o),
        1.0 - mean_silhouette_labels(labels, k, d_b),
    )
}

/// Area dominated by `points` (minimization) and bounded by `reference`.
///
/// Points not strictly better than the reference in both coordinates
/// contribute nothing and are skipped.
pub fn hypervolume_2d(points: &[ObjectivePair], reference: (f64, f64)) -> f64 {
    let (rx, ry) = reference;
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.f_o < rx && p.f_b < ry)
        .map(|p| (p.f_o, p.f_b))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut last_y = ry;
    for (x, y) in pts {
        if y < last_y {
            area += (rx - x) * (last_y - y);
            last_y = y;
        }
    }
    area
}

/// Hypervolume lost when each point is removed on its own.
pub fn exclusive_contributions(points: &[ObjectivePair], reference: (f64, f64)) -> Vec<f64> {
    let total = hypervolume_2d(points, reference);
    let mut rest = Vec::with_capacity(points.len().saturating_sub(1));
    (0..points.len())
        .map(|i| {
            rest.clear();
            rest.extend(points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| *p));
            (total - hypervolume_2d(&rest, reference)).max(0.0)
        })
        .collect()
}

fn pairs(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Hubert–Arabie adjusted Rand index.
pub fn ari(p1: &Partitioning, p2: &Partitioning) -> Result<f64> {
    let n = p1.n_items();
    if n != p2.n_items() {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p2.n_items(),
        });
    }
    let l1 = p1.labels(n);
    let l2 = p2.labels(n);
    if l1.contains(&usize::MAX) || l2.contains(&usize::MAX) {
        return Err(Error::InvalidParam {
            name: "partitioning",
            reason: "clusters do not cover 0..n".into(),
        });
    }
    let (k1, k2) = (p1.n_clusters(), p2.n_clusters());
    let mut table = vec![0u64; k1 * k2];
    for (&a, &b) in l1.iter().zip(&l2) {
        table[a * k2 + b] += 1;
    }
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let sum_a: f64 = p1.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let sum_b: f64 = p2.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let total = pairs(n as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if p1.same_clusters(p2) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// One Sankey link: `count` items sit in cluster `source` of the first
/// partitioning and cluster `target` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SankeyLink {
    pub source: usize,
    pub target: usize,
    pub count: usize,
}

/// Links for every pair of clusters with a nonempty intersection, ordered by
/// source then target cluster.
pub fn sankey_links(p1: &Partitioning, p2: &Partitioning) -> Result<Vec<SankeyLink>> {
    let n = p1.n_items();
    if n != p2.n_items() {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p2.n_items(),
        });
    }
    let l2 = p2.labels(n);
    let k2 = p2.n_clusters();
    let mut links = Vec::new();
    for (source, members) in p1.clusters().iter().enumerate() {
        let mut counts = vec![0usize; k2];
        for &i in members {
            if let Some(&t) = l2.get(i) {
                if t != usize::MAX {
                    counts[t] += 1;
                }
            }
        }
        links.extend(
            counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(target, count)| SankeyLink { source, target, count }),
        );
    }
    Ok(links)
}

/// Index of the member closest (Euclidean) to the ideal point
/// `(min f_O, min f_B)`; ties go to the lower index.
pub fn knee_index(pairs: &[ObjectivePair]) -> Option<usize> {
    let ideal_o = pairs.iter().map(|p| p.f_o).fold(f64::INFINITY, f64::min);
    let ideal_b = pairs.iter().map(|p| p.f_b).fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in pairs.iter().enumerate() {
        let d = ((p.f_o - ideal_o).powi(2) + (p.f_b - ideal_b).powi(2)).sqrt();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solution::Space;

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(Space::Objective, points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    fn two_pairs() -> (Partitioning, DistanceMatrix) {
        (
            Partitioning::new(vec![vec![0, 1], vec![2, 3]]),
            line(&[0.0, 0.1, 10.0, 10.1]),
        )
    }

    #[test]
    fn silhouette_point_hand_computed() {
        let (p, d) = two_pairs();
        // a = 0.1, b = (10 + 10.1) / 2 = 10.05
        let s = silhouette_point(0, &p, &d);
        assert!((s - 9.95 / 10.05).abs() < 1e-12);
        assert!((s - 0.990050).abs() < 1e-6);
    }

    #[test]
    fn silhouette_of_two_tight_pairs() {
        let (p, d) = two_pairs();
        let s = silhouette(&p, &d).unwrap();
        // Outer points score 9.95 / 10.05, inner points 9.85 / 9.95.
        let expected = (9.95 / 10.05 + 9.85 / 9.95) / 2.0;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.99).abs() < 1e-3);
    }

    #[test]
    fn coincident_points_score_zero() {
        let d = line(&[1.0; 4]);
        let p = Partitioning::new(vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(silhouette_point(0, &p, &d), 0.0);
        assert_eq!(silhouette(&p, &d).unwrap(), 0.0);
    }

    #[test]
    fn equidistant_point_scores_zero() {
        // Item 0 at distance 1 from everything.
        let d = DistanceMatrix::from_fn(Space::Objective, 4, |_, _| 1.0).unwrap();
        let p = Partitioning::new(vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(silhouette_point(0, &p, &d), 0.0);
    }

    #[test]
    fn singleton_point_scores_zero() {
        let d = line(&[0.0, 1.0, 2.0]);
        let p = Partitioning::new(vec![vec![0], vec![1, 2]]);
        assert_eq!(silhouette_point(0, &p, &d), 0.0);
        assert!(matches!(silhouette(&p, &d), Err(Error::InvalidPartitioning(_))));
    }

    #[test]
    fn objective_pair_endpoints() {
        let (p, d) = two_pairs();
        let pair = objective_pair(&p, &d, &d).unwrap();
        assert!((pair.f_o - (1.0 - (9.95 / 10.05 + 9.85 / 9.95) / 2.0)).abs() < 1e-12);
        let flat = line(&[0.0; 4]);
        let mid = objective_pair(&p, &flat, &flat).unwrap();
        assert_eq!(mid, ObjectivePair::new(1.0, 1.0));
        let short = line(&[0.0; 5]);
        assert!(objective_pair(&p, &d, &short).is_err());
    }

    #[test]
    fn hypervolume_examples() {
        let hv = hypervolume_2d(&[ObjectivePair::new(0.5, 1.0), ObjectivePair::new(1.0, 0.5)], REFERENCE_POINT);
        assert!((hv - 2.0).abs() < 1e-12);
        assert_eq!(hypervolume_2d(&[ObjectivePair::new(0.0, 0.0)], REFERENCE_POINT), 4.0);
        let hv = hypervolume_2d(&[ObjectivePair::new(1.0, 1.0), ObjectivePair::new(1.5, 1.5)], REFERENCE_POINT);
        assert!((hv - 1.0).abs() < 1e-12);
        assert_eq!(hypervolume_2d(&[], REFERENCE_POINT), 0.0);
        assert_eq!(hypervolume_2d(&[ObjectivePair::new(2.5, 0.0)], REFERENCE_POINT), 0.0);
    }

    #[test]
    fn contributions() {
        let pts = [
            ObjectivePair::new(0.5, 1.0),
            ObjectivePair::new(1.0, 0.5),
            ObjectivePair::new(1.5, 1.5),
        ];
        let c = exclusive_contributions(&pts, REFERENCE_POINT);
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((c[1] - 0.5).abs() < 1e-12);
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn ari_examples() {
        let p = Partitioning::new(vec![vec![0, 1], vec![2, 3]]);
        let q = Partitioning::new(vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(ari(&p, &p).unwrap(), 1.0);
        // Pair counting over the 6 pairs: index 0, expected 2*2/6, max 2.
        let expected = (0.0 - 2.0 / 3.0) / (2.0 - 2.0 / 3.0);
        assert!((ari(&p, &q).unwrap() - expected).abs() < 1e-12);
        assert!(ari(&p, &Partitioning::new(vec![vec![0, 1, 2]])).is_err());
    }

    #[test]
    fn sankey_examples() {
        let p = Partitioning::new(vec![vec![0, 1], vec![2, 3]]);
        let q = Partitioning::new(vec![vec![0, 2], vec![1, 3]]);
        let same = sankey_links(&p, &p).unwrap();
        assert_eq!(
            same,
            vec![
                SankeyLink { source: 0, target: 0, count: 2 },
                SankeyLink { source: 1, target: 1, count: 2 }
            ]
        );
        let cross = sankey_links(&p, &q).unwrap();
        assert_eq!(cross.len(), 4);
        assert!(cross.iter().all(|l| l.count == 1));
    }

    #[test]
    fn knee_on_three_points() {
        // Ideal point is (0.2, 0.3); distances: 0.7, ~0.283, 0.8.
        let pts = [
            ObjectivePair::new(0.2, 1.0),
            ObjectivePair::new(0.4, 0.5),
            ObjectivePair::new(1.0, 0.3),
        ];
        assert_eq!(knee_index(&pts), Some(1));
        assert_eq!(knee_index(&[]), None);
    }
}
