//! PAN: bi-objective evolutionary clustering. A population of valid
//! partitionings is evolved under recombination, move mutation, cluster
//! union and cluster split, each offspring is locally optimized, and
//! parents plus offspring are reduced back to the population size by
//! hypervolume-based selection against the reference point (2, 2).

pub mod operators;
pub mod select;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{hypervolume_2d, REFERENCE_POINT};
use crate::rng;
use crate::solution::{DistanceMatrix, Partitioning, PartitioningFront};

pub use operators::{
    local_optimize, mutate_move, random_partitioning, recombine, repair, split_cluster, two_medoid_split,
    union_clusters, CombinedDistance,
};
pub use select::{hv_select, non_dominated_sort};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanParams {
    /// Population size.
    pub n: usize,
    /// Generations.
    pub g: usize,
    /// Move-mutation probability.
    pub p_m: f64,
    /// Cluster-union probability.
    pub p_u: f64,
    /// Recombination probability.
    pub p_r: f64,
    /// Cluster-split probability.
    pub p_s: f64,
    pub seed: u64,
    /// Local-search passes per offspring.
    #[serde(default = "default_budget")]
    pub local_opt_budget: usize,
}

fn default_budget() -> usize {
    1
}

impl Default for PanParams {
    fn default() -> Self {
        PanParams {
            n: 20,
            g: 200,
            p_m: 0.3,
            p_u: 0.2,
            p_r: 0.5,
            p_s: 0.2,
            seed: 0,
            local_opt_budget: 1,
        }
    }
}

impl PanParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParam {
                name: "n",
                reason: format!("population size {} < 2", self.n),
            });
        }
        if self.g < 1 {
            return Err(Error::InvalidParam {
                name: "g",
                reason: "need at least one generation".into(),
            });
        }
        for (name, p) in [("p_m", self.p_m), ("p_u", self.p_u), ("p_r", self.p_r), ("p_s", self.p_s)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("{p} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// Population statistics after one generation's selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub hypervolume: f64,
    pub front_size: usize,
    #[serde(rename = "best_f_O")]
    pub best_f_o: f64,
    #[serde(rename = "best_f_B")]
    pub best_f_b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanTrace {
    pub records: Vec<TraceRecord>,
}

fn population_hv(pop: &[Partitioning]) -> f64 {
    let pairs: Vec<_> = pop.iter().filter_map(Partitioning::objectives).collect();
    hypervolume_2d(&pairs, REFERENCE_POINT)
}

fn record(generation: usize, pop: &[Partitioning]) -> TraceRecord {
    let pairs: Vec<_> = pop.iter().filter_map(Partitioning::objectives).collect();
    let front = select::non_dominated_sort(&pairs).into_iter().next().unwrap_or_default();
    TraceRecord {
        generation,
        hypervolume: hypervolume_2d(&pairs, REFERENCE_POINT),
        front_size: front.len(),
        best_f_o: pairs.iter().map(|p| p.f_o).fold(f64::INFINITY, f64::min),
        best_f_b: pairs.iter().map(|p| p.f_b).fold(f64::INFINITY, f64::min),
    }
}

/// `n` random valid partitionings of `n_policies` items, each evaluated.
pub fn init_population(
    n_policies: usize,
    params: &PanParams,
    d_o: &DistanceMatrix,
    d_b: &DistanceMatrix,
) -> Result<Vec<Partitioning>> {
    if n_policies < 4 {
        return Err(Error::TooFewPolicies {
            needed: 4,
            got: n_policies,
        });
    }
    let dist = CombinedDistance::new(d_o, d_b)?;
    let mut r = rng::stream(params.seed, &[0]);
    (0..params.n)
        .map(|_| {
            let p = random_partitioning(n_policies, &dist, &mut r)?;
            let pair = operators::evaluate(&p, d_o, d_b);
            Ok(p.with_objectives(pair))
        })
        .collect()
}

fn make_offspring(
    pop: &[Partitioning],
    params: &PanParams,
    generation: usize,
    slot: usize,
    d_o: &DistanceMatrix,
    d_b: &DistanceMatrix,
    dist: &CombinedDistance,
) -> Partitioning {
    let mut r = rng::stream(params.seed, &[generation as u64, slot as u64]);
    let mut child = pop[r.gen_range(0..pop.len())].clone();
    if r.gen::<f64>() < params.p_r {
        let other = &pop[r.gen_range(0..pop.len())];
        child = recombine(&child, other, dist, &mut r);
    }
    if r.gen::<f64>() < params.p_m {
        child = mutate_move(&child, &mut r);
    }
    if r.gen::<f64>() < params.p_u {
        child = union_clusters(&child, &mut r);
    }
    if r.gen::<f64>() < params.p_s {
        child = split_cluster(&child, dist, &mut r);
    }
    local_optimize(&child, d_o, d_b, params.local_opt_budget)
}

/// Runs PAN and returns the final non-dominated front with the per-generation
/// trace.
pub fn pan_run(d_o: &DistanceMatrix, d_b: &DistanceMatrix, params: &PanParams) -> Result<(PartitioningFront, PanTrace)> {
    pan_run_observed(d_o, d_b, params, |_, _| {})
}

/// Like [`pan_run`], calling `observe(generation, population)` after the
/// initial population (generation 0) and after every selection.
pub fn pan_run_observed(
    d_o: &DistanceMatrix,
    d_b: &DistanceMatrix,
    params: &PanParams,
    mut observe: impl FnMut(usize, &[Partitioning]),
) -> Result<(PartitioningFront, PanTrace)> {
    params.validate()?;
    if d_o.n() != d_b.n() {
        return Err(Error::LengthMismatch {
            expected: d_o.n(),
            got: d_b.n(),
        });
    }
    let dist = CombinedDistance::new(d_o, d_b)?;
    let mut pop = init_population(d_o.n(), params, d_o, d_b)?;
    let mut trace = PanTrace::default();
    observe(0, &pop);
    trace.records.push(record(0, &pop));

    for generation in 1..=params.g {
        let offspring: Vec<Partitioning> = (0..params.n)
            .into_par_iter()
            .map(|slot| make_offspring(&pop, params, generation, slot, d_o, d_b, &dist))
            .collect();
        let mut pool = pop.clone();
        pool.extend(offspring);
        let selected = hv_select(&pool, params.n);
        // Greedy truncation can in rare cases lose area relative to the
        // parents; keep the parents then.
        if population_hv(&selected) >= population_hv(&pop) {
            pop = selected;
        }
        observe(generation, &pop);
        trace.records.push(record(generation, &pop));
    }
    Ok((PartitioningFront::from_population(&pop), trace))
}
