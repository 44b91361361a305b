//! Synthetic inputs for the benchmarks.

use morlpan::rng;
use morlpan::{DistanceMatrix, ObjectivePair, Partitioning, Space};
use rand::Rng;

/// `n` points in the unit square grouped around `k` centers.
pub fn clustered_matrix(space: Space, n: usize, k: usize, seed: u64) -> DistanceMatrix {
    let mut r = rng::stream(seed, &[n as u64, k as u64]);
    let centers: Vec<(f64, f64)> = (0..k).map(|_| (r.gen_range(0.0..1.0), r.gen_range(0.0..1.0))).collect();
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let c = centers[i % k];
            (c.0 + r.gen_range(-0.05..0.05), c.1 + r.gen_range(-0.05..0.05))
        })
        .collect();
    DistanceMatrix::from_fn(space, n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt())
        .expect("finite distances")
}

/// Round-robin assignment of `n` items to `k` clusters.
pub fn round_robin(n: usize, k: usize) -> Partitioning {
    Partitioning::from_labels(&(0..n).map(|i| i % k).collect::<Vec<_>>())
}

/// `m` random points in [0, 2]².
pub fn random_pairs(m: usize, seed: u64) -> Vec<ObjectivePair> {
    let mut r = rng::stream(seed, &[m as u64]);
    (0..m).map(|_| ObjectivePair::new(r.gen_range(0.0..2.0), r.gen_range(0.0..2.0))).collect()
}
