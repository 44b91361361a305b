//! Baseline comparison: PAM k-medoids run separately in each space for every
//! feasible cluster count, filtered for validity, scored in both spaces and
//! reduced with PAN's own selection, then compared against a PAN front.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ari, knee_index, objective_pair, sankey_links};
use crate::pan::{hv_select, pan_run, PanParams, PanTrace};
use crate::rng;
use crate::solution::{validate_partitioning, DistanceMatrix, Partitioning, PartitioningFront, Space, Violation};

/// Output of one PAM run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMedoids {
    pub partitioning: Partitioning,
    /// Medoid item indices, ascending.
    pub medoids: Vec<usize>,
    /// Total deviation after the build phase and after each accepted swap.
    pub costs: Vec<f64>,
}

fn total_deviation(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.n())
        .map(|i| medoids.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Picks uniformly among the indices whose score equals the best score.
fn pick_tied<R: rand::Rng>(scores: &[(usize, f64)], rng: &mut R, better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = scores[0].1;
    for &(_, s) in scores {
        if better(s, best) {
            best = s;
        }
    }
    let tied: Vec<usize> = scores.iter().filter(|&&(_, s)| s == best).map(|&(i, _)| i).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    }
}

/// PAM: greedy build followed by best-improvement swaps until no swap
/// lowers the total deviation. Exact ties during build are broken by the
/// seed; assignment ties go to the lower medoid index.
pub fn k_medoids_detailed(d: &DistanceMatrix, k: usize, seed: u64) -> Result<KMedoids> {
    let n = d.n();
    if k < 2 || k > n / 2 {
        return Err(Error::InvalidParam {
            name: "k",
            reason: format!("{k} outside [2, {}]", n / 2),
        });
    }
    let mut r = rng::stream(seed, &[]);
    let first: Vec<(usize, f64)> = (0..n).map(|i| (i, d.row(i).iter().sum())).collect();
    let mut medoids = vec![pick_tied(&first, &mut r, |a, b| a < b)];
    let mut nearest: Vec<f64> = (0..n).map(|j| d.get(j, medoids[0])).collect();
    while medoids.len() < k {
        let gains: Vec<(usize, f64)> = (0..n)
            .filter(|i| !medoids.contains(i))
            .map(|i| (i, (0..n).map(|j| (nearest[j] - d.get(j, i)).max(0.0)).sum()))
            .collect();
        let m = pick_tied(&gains, &mut r, |a, b| a > b);
        medoids.push(m);
        for (j, nj) in nearest.iter_mut().enumerate() {
            *nj = nj.min(d.get(j, m));
        }
    }
    medoids.sort_unstable();
    let mut cost = total_deviation(d, &medoids);
    let mut costs = vec![cost];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let mut trial = medoids.clone();
                trial[slot] = h;
                let c = total_deviation(d, &trial);
                if c < cost && best.map_or(true, |(bc, _, _)| c < bc) {
                    best = Some((c, slot, h));
                }
            }
        }
        let Some((c, slot, h)) = best else { break };
        medoids[slot] = h;
        medoids.sort_unstable();
        cost = c;
        costs.push(c);
    }
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            for (mi, &m) in medoids.iter().enumerate() {
                if d.get(i, m) < d.get(i, medoids[best]) {
                    best = mi;
                }
            }
            best
        })
        .collect();
    Ok(KMedoids {
        partitioning: Partitioning::from_labels(&labels),
        medoids,
        costs,
    })
}

pub fn k_medoids(d: &DistanceMatrix, k: usize, seed: u64) -> Result<Partitioning> {
    k_medoids_detailed(d, k, seed).map(|r| r.partitioning)
}

/// One k-medoids partitioning considered by the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMedoidsRun {
    pub space: Space,
    pub k: usize,
    pub partitioning: Partitioning,
    pub violations: Vec<Violation>,
}

impl KMedoidsRun {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub front: PartitioningFront,
    /// Population after reduction to the PAN population size.
    pub selected: Vec<Partitioning>,
    /// Every run, in (space, k) order, valid or not.
    pub runs: Vec<KMedoidsRun>,
}

fn space_tag(space: Space) -> u64 {
    match space {
        Space::Objective => 0,
        Space::Behavior => 1,
    }
}

/// Runs k-medoids for each k in `[2, n/2]` in each space, keeps the valid
/// partitionings, scores them in both spaces and reduces them to `pop_size`
/// with PAN's selection.
pub fn iterative_kmedoids_front(
    d_o: &DistanceMatrix,
    d_b: &DistanceMatrix,
    pop_size: usize,
    seed: u64,
) -> Result<Baseline> {
    let n = d_o.n();
    if n != d_b.n() {
        return Err(Error::LengthMismatch {
            expected: n,
            got: d_b.n(),
        });
    }
    if n < 4 {
        return Err(Error::TooFewPolicies { needed: 4, got: n });
    }
    let mut runs = Vec::new();
    for (space, d) in [(Space::Objective, d_o), (Space::Behavior, d_b)] {
        for k in 2..=n / 2 {
            let p = k_medoids(d, k, rng::derive_seed(seed, &[space_tag(space), k as u64]))?;
            let violations = validate_partitioning(&p, n);
            runs.push(KMedoidsRun {
                space,
                k,
                partitioning: p,
                violations,
            });
        }
    }
    let scored: Vec<Partitioning> = runs
        .iter()
        .filter(|r| r.is_valid())
        .map(|r| {
            let pair = objective_pair(&r.partitioning, d_o, d_b)?;
            Ok(r.partitioning.clone().with_objectives(pair))
        })
        .collect::<Result<_>>()?;
    if scored.is_empty() {
        let diag: Vec<String> = runs
            .iter()
            .map(|r| format!("{:?} k={}: {:?}", r.space, r.k, r.violations))
            .collect();
        return Err(Error::NoValidPartitioning(diag.join("; ")));
    }
    let selected = hv_select(&scored, pop_size);
    Ok(Baseline {
        front: PartitioningFront::from_population(&selected),
        selected,
        runs,
    })
}

/// Chooses one member of a front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointSelector {
    Index(usize),
    /// Lowest `f_O`.
    BestObjective,
    /// Lowest `f_B`.
    BestBehavior,
    /// Closest to the ideal point.
    Knee,
}

impl PointSelector {
    /// Index into `front.members`, or `None` if out of range or empty.
    pub fn resolve(&self, front: &PartitioningFront) -> Option<usize> {
        let pairs = front.pairs();
        if pairs.is_empty() {
            return None;
        }
        let argmin = |key: fn(&crate::metrics::ObjectivePair) -> f64| {
            (0..pairs.len()).fold(0, |b, i| if key(&pairs[i]) < key(&pairs[b]) { i } else { b })
        };
        match *self {
            PointSelector::Index(i) => (i < pairs.len()).then_some(i),
            PointSelector::BestObjective => Some(argmin(|p| p.f_o)),
            PointSelector::BestBehavior => Some(argmin(|p| p.f_b)),
            PointSelector::Knee => knee_index(&pairs),
        }
    }
}

impl fmt::Display for PointSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSelector::Index(i) => write!(f, "{i}"),
            PointSelector::BestObjective => f.write_str("objective-best"),
            PointSelector::BestBehavior => f.write_str("behavior-best"),
            PointSelector::Knee => f.write_str("knee"),
        }
    }
}

impl FromStr for PointSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "knee" => Ok(PointSelector::Knee),
            "objective-best" | "best-f_O" | "best-fo" => Ok(PointSelector::BestObjective),
            "behavior-best" | "best-f_B" | "best-fb" => Ok(PointSelector::BestBehavior),
            other => other
                .parse()
                .map(PointSelector::Index)
                .map_err(|_| format!("unknown front point `{other}`")),
        }
    }
}

/// A labelled Sankey edge between two columns of clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedLink {
    pub source: String,
    pub target: String,
    pub count: usize,
}

/// Correspondence between one selected PAN partitioning and the k-medoids
/// partitionings with the same cluster count in each space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyReport {
    pub selector: String,
    pub pan_index: usize,
    pub k: usize,
    pub ari_objective: f64,
    pub ari_behavior: f64,
    /// `objective:* -> pan:*` links followed by `pan:* -> behavior:*` links.
    pub links: Vec<NamedLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pan: PartitioningFront,
    pub baseline: PartitioningFront,
    pub pan_hypervolume: f64,
    pub baseline_hypervolume: f64,
    /// ARI between PAN member `i` (rows) and baseline member `j` (columns).
    pub ari: Vec<Vec<f64>>,
    pub kmedoids_runs: Vec<KMedoidsRun>,
    pub sankeys: Vec<SankeyReport>,
    pub params: PanParams,
    #[serde(skip)]
    pub trace: PanTrace,
}

fn named(prefix_a: &str, prefix_b: &str, a: &Partitioning, b: &Partitioning) -> Result<Vec<NamedLink>> {
    Ok(sankey_links(a, b)?
        .into_iter()
        .map(|l| NamedLink {
            source: format!("{prefix_a}:{}", l.source),
            target: format!("{prefix_b}:{}", l.target),
            count: l.count,
        })
        .collect())
}

/// Runs PAN and the iterative k-medoids baseline on the same matrices and
/// reports both fronts, their hypervolumes, the ARI matrix and Sankey links
/// for the selected PAN members.
pub fn compare_methods(
    d_o: &DistanceMatrix,
    d_b: &DistanceMatrix,
    params: &PanParams,
    selectors: &[PointSelector],
) -> Result<ComparisonReport> {
    let (pan, trace) = pan_run(d_o, d_b, params)?;
    let baseline = iterative_kmedoids_front(d_o, d_b, params.n, params.seed)?;
    let ari_matrix = pan
        .members
        .iter()
        .map(|p| baseline.front.members.iter().map(|q| ari(p, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut sankeys = Vec::new();
    for sel in selectors {
        let Some(idx) = sel.resolve(&pan) else {
            return Err(Error::InvalidParam {
                name: "pair",
                reason: format!("front has no member `{sel}`"),
            });
        };
        let member = &pan.members[idx];
        let k = member.n_clusters();
        let find = |space| {
            baseline
                .runs
                .iter()
                .find(|r| r.space == space && r.k == k)
                .map(|r| &r.partitioning)
                .expect("k-medoids ran for every feasible k")
        };
        let (obj, beh) = (find(Space::Objective), find(Space::Behavior));
        let mut links = named("objective", "pan", obj, member)?;
        links.extend(named("pan", "behavior", member, beh)?);
        sankeys.push(SankeyReport {
            selector: sel.to_string(),
            pan_index: idx,
            k,
            ari_objective: ari(member, obj)?,
            ari_behavior: ari(member, beh)?,
            links,
        });
    }
    Ok(ComparisonReport {
        pan_hypervolume: pan.hypervolume,
        baseline_hypervolume: baseline.front.hypervolume,
        pan,
        baseline: baseline.front,
        ari: ari_matrix,
        kmedoids_runs: baseline.runs,
        sankeys,
        params: params.clone(),
        trace,
    })
}
