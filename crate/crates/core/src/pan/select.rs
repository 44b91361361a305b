//! Environmental selection: non-dominated sorting with hypervolume-based
//! truncation of the last admitted front.

use crate::metrics::{exclusive_contributions, ObjectivePair, REFERENCE_POINT};
use crate::solution::Partitioning;

/// Splits `pairs` into successive non-dominated fronts (minimization).
/// Each front lists indices in ascending order.
pub fn non_dominated_sort(pairs: &[ObjectivePair]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..pairs.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| pairs[j].dominates(&pairs[i])))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Picks `n` members: structural duplicates are dropped (first copy kept),
/// whole fronts are admitted in rank order and the front that does not fit
/// is thinned by repeatedly removing its member with the smallest exclusive
/// hypervolume contribution (the later member on ties).
///
/// Every member must carry objectives.
pub fn hv_select(population: &[Partitioning], n: usize) -> Vec<Partitioning> {
    let mut unique: Vec<&Partitioning> = Vec::with_capacity(population.len());
    for p in population {
        if !unique.iter().any(|q| q.same_clusters(p)) {
            unique.push(p);
        }
    }
    let pairs: Vec<ObjectivePair> = unique
        .iter()
        .map(|p| p.objectives().expect("selection needs evaluated partitionings"))
        .collect();
    let mut selected = Vec::with_capacity(n.min(unique.len()));
    for front in non_dominated_sort(&pairs) {
        let room = n - selected.len();
        if room == 0 {
            break;
        }
        if front.len() <= room {
            selected.extend(front);
            continue;
        }
        let mut front = front;
        while front.len() > room {
            let pts: Vec<ObjectivePair> = front.iter().map(|&i| pairs[i]).collect();
            let contrib = exclusive_contributions(&pts, REFERENCE_POINT);
            let mut worst = 0;
            for (k, &c) in contrib.iter().enumerate() {
                if c <= contrib[worst] {
                    worst = k;
                }
            }
            front.remove(worst);
        }
        selected.extend(front);
    }
    selected.into_iter().map(|i| unique[i].clone()).collect()
}
