//! Variation operators, repair and local search over valid partitionings.
//!
//! Every operator returns a valid partitioning (at least two clusters, at
//! least two members each) when given one. When a variation cannot be
//! repaired the input is returned unchanged.

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{objective_pair_labels, ObjectivePair};
use crate::solution::{DistanceMatrix, Partitioning};

/// Mean of the two distance matrices, each scaled by its maximum entry.
/// Used wherever an operator needs a single notion of closeness.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedDistance {
    n: usize,
    values: Vec<f64>,
}

impl CombinedDistance {
    pub fn new(d_o: &DistanceMatrix, d_b: &DistanceMatrix) -> Result<Self> {
        if d_o.n() != d_b.n() {
            return Err(Error::LengthMismatch {
                expected: d_o.n(),
                got: d_b.n(),
            });
        }
        let scale = |m: f64| if m > 0.0 { 1.0 / m } else { 0.0 };
        let (so, sb) = (scale(d_o.max()), scale(d_b.max()));
        let values = d_o
            .values()
            .iter()
            .zip(d_b.values())
            .map(|(o, b)| 0.5 * (o * so + b * sb))
            .collect();
        Ok(CombinedDistance { n: d_o.n(), values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Member with the smallest summed distance to the others (lowest index on
/// ties).
pub fn medoid(members: &[usize], dist: &CombinedDistance) -> usize {
    let mut best = (members[0], f64::INFINITY);
    for &m in members {
        let cost: f64 = members.iter().map(|&o| dist.get(m, o)).sum();
        if cost < best.1 {
            best = (m, cost);
        }
    }
    best.0
}

/// Best 2-medoids bipartition of `members` in which both halves have at
/// least two members. `None` for fewer than four members.
pub fn two_medoid_split(members: &[usize], dist: &CombinedDistance) -> Option<(Vec<usize>, Vec<usize>)> {
    if members.len() < 4 {
        return None;
    }
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for (ia, &a) in members.iter().enumerate() {
        for &b in &members[ia + 1..] {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for &x in members {
                if x == a || (x != b && dist.get(x, a) <= dist.get(x, b)) {
                    left.push(x);
                } else {
                    right.push(x);
                }
            }
            rebalance(&mut left, &mut right, a, b, dist);
            let cost: f64 = left.iter().map(|&x| dist.get(x, a)).sum::<f64>()
                + right.iter().map(|&x| dist.get(x, b)).sum::<f64>();
            if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
                best = Some((cost, left, right));
            }
        }
    }
    best.map(|(_, l, r)| (l, r))
}

/// Moves members from the larger side until the smaller side has two,
/// taking those that are relatively closest to the smaller side's medoid.
fn rebalance(left: &mut Vec<usize>, right: &mut Vec<usize>, a: usize, b: usize, dist: &CombinedDistance) {
    let (small, big, small_med, big_med) = if left.len() < 2 {
        (left, right, a, b)
    } else if right.len() < 2 {
        (right, left, b, a)
    } else {
        return;
    };
    while small.len() < 2 {
        let (pos, _) = big
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x != big_med)
            .map(|(p, &x)| (p, dist.get(x, small_med) - dist.get(x, big_med)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("big side has at least three members");
        small.push(big.remove(pos));
    }
}

/// Dissolves singleton clusters into the cluster with the nearest medoid,
/// then splits the largest cluster if fewer than two remain. `None` when no
/// valid partitioning can be reached.
pub fn repair(clusters: Vec<Vec<usize>>, dist: &CombinedDistance) -> Option<Partitioning> {
    let mut clusters: Vec<Vec<usize>> = clusters.into_iter().filter(|c| !c.is_empty()).collect();
    while clusters.len() > 1 {
        let Some(pos) = clusters.iter().position(|c| c.len() == 1) else {
            break;
        };
        let lone = clusters.remove(pos)[0];
        let target = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, dist.get(lone, medoid(c, dist))))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .expect("at least one other cluster");
        clusters[target].push(lone);
    }
    if clusters.len() < 2 {
        let largest = clusters.pop()?;
        let (l, r) = two_medoid_split(&largest, dist)?;
        clusters = vec![l, r];
    }
    if clusters.iter().any(|c| c.len() < 2) {
        return None;
    }
    Some(Partitioning::new(clusters))
}

/// A random valid partitioning: cluster count uniform in `[2, n/2]`,
/// uniform assignment, then repair.
pub fn random_partitioning<R: Rng>(n: usize, dist: &CombinedDistance, rng: &mut R) -> Result<Partitioning> {
    if n < 4 {
        return Err(Error::TooFewPolicies { needed: 4, got: n });
    }
    loop {
        let k = rng.gen_range(2..=n / 2);
        let mut clusters = vec![Vec::new(); k];
        for i in 0..n {
            clusters[rng.gen_range(0..k)].push(i);
        }
        if let Some(p) = repair(clusters, dist) {
            return Ok(p);
        }
    }
}

/// Moves one uniformly chosen item to a different uniformly chosen cluster.
/// A move that would leave its source cluster with one member is rejected.
pub fn mutate_move<R: Rng>(p: &Partitioning, rng: &mut R) -> Partitioning {
    let k = p.n_clusters();
    let n = p.n_items();
    if k < 2 || n == 0 {
        return p.clone();
    }
    let labels = p.labels(n);
    let item = rng.gen_range(0..n);
    let from = labels[item];
    let mut to = rng.gen_range(0..k - 1);
    if to >= from {
        to += 1;
    }
    if p.clusters()[from].len() <= 2 {
        return p.clone();
    }
    let mut clusters = p.clusters().to_vec();
    clusters[from].retain(|&x| x != item);
    clusters[to].push(item);
    Partitioning::new(clusters)
}

/// Merges two distinct uniformly chosen clusters; unchanged with only two.
pub fn union_clusters<R: Rng>(p: &Partitioning, rng: &mut R) -> Partitioning {
    let k = p.n_clusters();
    if k <= 2 {
        return p.clone();
    }
    let a = rng.gen_range(0..k);
    let mut b = rng.gen_range(0..k - 1);
    if b >= a {
        b += 1;
    }
    let mut clusters = p.clusters().to_vec();
    let moved = std::mem::take(&mut clusters[b]);
    clusters[a].extend(moved);
    Partitioning::new(clusters)
}

/// Splits a uniformly chosen cluster of four or more members into its best
/// 2-medoids halves; unchanged when no cluster is large enough.
pub fn split_cluster<R: Rng>(p: &Partitioning, dist: &CombinedDistance, rng: &mut R) -> Partitioning {
    let splittable: Vec<usize> = (0..p.n_clusters()).filter(|&c| p.clusters()[c].len() >= 4).collect();
    if splittable.is_empty() {
        return p.clone();
    }
    let c = splittable[rng.gen_range(0..splittable.len())];
    let Some((l, r)) = two_medoid_split(&p.clusters()[c], dist) else {
        return p.clone();
    };
    let mut clusters = p.clusters().to_vec();
    clusters[c] = l;
    clusters.push(r);
    Partitioning::new(clusters)
}

/// Greedy cluster-preserving crossover: alternately take the largest cluster
/// of each parent that does not overlap what is already taken, then attach
/// leftovers to the cluster of their nearest assigned item. The starting
/// parent is chosen at random. Falls back to `p1` if repair fails.
pub fn recombine<R: Rng>(p1: &Partitioning, p2: &Partitioning, dist: &CombinedDistance, rng: &mut R) -> Partitioning {
    let n = dist.n();
    if p1.n_items() != n || p2.n_items() != n {
        return p1.clone();
    }
    let parents = [p1, p2];
    let mut turn = usize::from(rng.gen_bool(0.5));
    let mut assigned = vec![false; n];
    let mut child: Vec<Vec<usize>> = Vec::new();
    let mut exhausted = [false; 2];
    while !(exhausted[0] && exhausted[1]) {
        let pick = parents[turn]
            .clusters()
            .iter()
            .filter(|c| c.iter().all(|&x| !assigned[x]))
            .fold(None::<&Vec<usize>>, |best, c| match best {
                Some(b) if b.len() >= c.len() => Some(b),
                _ => Some(c),
            });
        match pick {
            Some(c) => {
                for &x in c {
                    assigned[x] = true;
                }
                child.push(c.clone());
            }
            None => exhausted[turn] = true,
        }
        turn = 1 - turn;
    }
    let mut owner = vec![usize::MAX; n];
    for (ci, c) in child.iter().enumerate() {
        for &x in c {
            owner[x] = ci;
        }
    }
    let leftovers: Vec<usize> = (0..n).filter(|&x| !assigned[x]).collect();
    let mut joins = Vec::with_capacity(leftovers.len());
    for &x in &leftovers {
        let nearest = (0..n)
            .filter(|&y| assigned[y])
            .min_by(|&a, &b| dist.get(x, a).total_cmp(&dist.get(x, b)))
            .expect("at least one cluster was taken");
        joins.push((x, owner[nearest]));
    }
    for (x, ci) in joins {
        child[ci].push(x);
    }
    repair(child, dist).unwrap_or_else(|| p1.clone())
}

/// First-improvement local search: for each item in index order try every
/// other cluster and accept the first move that keeps the partitioning
/// valid and Pareto-improves the objective pair. Up to `budget` passes.
/// The result carries its objectives.
pub fn local_optimize(p: &Partitioning, d_o: &DistanceMatrix, d_b: &DistanceMatrix, budget: usize) -> Partitioning {
    let n = d_o.n();
    let k = p.n_clusters();
    let mut labels = p.labels(n);
    let mut sizes: Vec<usize> = p.clusters().iter().map(Vec::len).collect();
    let mut current = objective_pair_labels(&labels, k, d_o, d_b);
    for _ in 0..budget {
        let mut improved = false;
        for i in 0..n {
            let from = labels[i];
            if sizes[from] <= 2 {
                continue;
            }
            for to in (0..k).filter(|&c| c != from) {
                labels[i] = to;
                let cand = objective_pair_labels(&labels, k, d_o, d_b);
                if cand.dominates(&current) {
                    current = cand;
                    sizes[from] -= 1;
                    sizes[to] += 1;
                    improved = true;
                    break;
                }
                labels[i] = from;
            }
        }
        if !improved {
            break;
        }
    }
    Partitioning::from_labels(&labels).with_objectives(current)
}

/// Objective pair of a valid partitioning (no validation).
pub fn evaluate(p: &Partitioning, d_o: &DistanceMatrix, d_b: &DistanceMatrix) -> ObjectivePair {
    objective_pair_labels(&p.labels(d_o.n()), p.n_clusters(), d_o, d_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::solution::{validate_partitioning, Space};

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(Space::Objective, points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    fn combined(points: &[f64]) -> CombinedDistance {
        let d = line(points);
        CombinedDistance::new(&d, &d).unwrap()
    }

    #[test]
    fn move_on_two_plus_two_is_locked() {
        let p = Partitioning::new(vec![vec![0, 1], vec![2, 3]]);
        let mut r = rng::stream(1, &[]);
        for _ in 0..50 {
            assert_eq!(mutate_move(&p, &mut r), p);
        }
    }

    #[test]
    fn move_on_three_plus_three() {
        let p = Partitioning::new(vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let mut r = rng::stream(2, &[]);
        let mut changed = 0;
        for _ in 0..100 {
            let q = mutate_move(&p, &mut r);
            assert!(validate_partitioning(&q, 6).is_empty());
            if q != p {
                changed += 1;
                let mut sizes: Vec<usize> = q.clusters().iter().map(Vec::len).collect();
                sizes.sort();
                assert_eq!(sizes, vec![2, 4]);
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn union_examples() {
        let mut r = rng::stream(3, &[]);
        let three = Partitioning::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(union_clusters(&three, &mut r).n_clusters(), 2);
        let two = Partitioning::new(vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(union_clusters(&two, &mut r), two);
    }

    #[test]
    fn split_examples() {
        let mut r = rng::stream(4, &[]);
        let d = combined(&[0.0; 6]);
        let p = Partitioning::new(vec![vec![0, 1, 2, 3], vec![4, 5]]);
        let q = split_cluster(&p, &d, &mut r);
        assert_eq!(q.n_clusters(), 3);
        assert!(q.clusters().iter().all(|c| c.len() == 2));

        let d = combined(&[0.0, 0.1, 10.0, 10.1, 50.0, 50.0]);
        let q = split_cluster(&p, &d, &mut r);
        assert_eq!(q.clusters(), &[vec![0, 1], vec![2, 3], vec![4, 5]]);

        let small = Partitioning::new(vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(split_cluster(&small, &d, &mut r), small);
    }

    #[test]
    fn repair_dissolves_singletons() {
        let d = combined(&[0.0, 0.1, 10.0, 10.1, 0.05]);
        let p = repair(vec![vec![0, 1], vec![2, 3], vec![4]], &d).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 4], vec![2, 3]]);
        let p = repair(vec![vec![0, 1, 2, 3, 4]], &d).unwrap();
        assert_eq!(p.n_clusters(), 2);
        assert!(repair(vec![vec![0, 1, 2]], &combined(&[0.0, 1.0, 2.0])).is_none());
    }

    #[test]
    fn recombine_identical_parents() {
        let d = combined(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = Partitioning::new(vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]]);
        let mut r = rng::stream(5, &[]);
        for _ in 0..10 {
            assert_eq!(recombine(&p, &p, &d, &mut r), p);
        }
    }

    #[test]
    fn local_search_fixes_misassignment() {
        let d = line(&[0.0, 0.1, 10.0, 10.1, 10.2, 0.2]);
        let bad = Partitioning::new(vec![vec![0, 1], vec![2, 3, 4, 5]]);
        let good = local_optimize(&bad, &d, &d, 3);
        assert_eq!(good.clusters(), &[vec![0, 1, 5], vec![2, 3, 4]]);
        let again = local_optimize(&good, &d, &d, 3);
        assert_eq!(again, good);
    }

    #[test]
    fn random_partitionings_are_valid() {
        let d = combined(&[0.0, 1.0, 2.0, 3.0]);
        let mut r = rng::stream(6, &[]);
        for _ in 0..20 {
            let p = random_partitioning(4, &d, &mut r).unwrap();
            assert!(validate_partitioning(&p, 4).is_empty());
        }
        assert!(random_partitioning(3, &d, &mut r).is_err());
    }
}
