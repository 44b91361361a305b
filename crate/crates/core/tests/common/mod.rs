//! Independent reference implementations used as test oracles. They share
//! no code with the library beyond its plain data types.
#![allow(dead_code)]

use morlpan::fixture::TabularMOEnv;
use morlpan::{DistanceMatrix, ObjectivePair, Space};
use rand::Rng;

pub fn line_matrix(points: &[f64]) -> DistanceMatrix {
    DistanceMatrix::from_fn(Space::Objective, points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
}

pub fn points_matrix(space: Space, points: &[Vec<f64>]) -> DistanceMatrix {
    DistanceMatrix::from_fn(space, points.len(), |i, j| {
        let mut s = 0.0;
        for k in 0..points[i].len() {
            s += (points[i][k] - points[j][k]).powi(2);
        }
        s.sqrt()
    })
    .unwrap()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect()
}

/// Textbook silhouette straight from the cluster lists.
pub fn brute_silhouette(clusters: &[Vec<usize>], d: &DistanceMatrix) -> f64 {
    let n: usize = clusters.iter().map(Vec::len).sum();
    let mut total = 0.0;
    for (ci, c) in clusters.iter().enumerate() {
        for &i in c {
            if c.len() == 1 {
                continue;
            }
            let a = c.iter().filter(|&&j| j != i).map(|&j| d.get(i, j)).sum::<f64>() / (c.len() - 1) as f64;
            let mut b = f64::INFINITY;
            for (cj, other) in clusters.iter().enumerate() {
                if cj != ci {
                    let m = other.iter().map(|&j| d.get(i, j)).sum::<f64>() / other.len() as f64;
                    b = b.min(m);
                }
            }
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / n as f64
}

/// Midpoint-rule area of the region dominated by `points` inside the box up
/// to `reference`, with square cells of side `cell`.
pub fn grid_hypervolume(points: &[ObjectivePair], reference: (f64, f64), cell: f64) -> f64 {
    let nx = (reference.0 / cell).round() as usize;
    let ny = (reference.1 / cell).round() as usize;
    let mut covered = 0usize;
    for ix in 0..nx {
        let x = (ix as f64 + 0.5) * cell;
        // Lowest f_B among points with f_O <= x.
        let mut low = f64::INFINITY;
        for p in points {
            if p.f_o <= x {
                low = low.min(p.f_b);
            }
        }
        for iy in 0..ny {
            let y = (iy as f64 + 0.5) * cell;
            if low <= y {
                covered += 1;
            }
        }
    }
    covered as f64 * cell * cell
}

/// Midpoint rule in `f_O` only: each column of width `cell` contributes its
/// exact covered height.
pub fn column_hypervolume(points: &[ObjectivePair], reference: (f64, f64), cell: f64) -> f64 {
    let nx = (reference.0 / cell).round() as usize;
    let mut area = 0.0;
    for ix in 0..nx {
        let x = (ix as f64 + 0.5) * cell;
        let low = points
            .iter()
            .filter(|p| p.f_o <= x)
            .map(|p| p.f_b)
            .fold(reference.1, f64::min);
        area += (reference.1 - low) * cell;
    }
    area
}

/// Adjusted Rand index from raw pair counts over all C(n, 2) pairs.
pub fn pair_counting_ari(l1: &[usize], l2: &[usize]) -> f64 {
    let n = l1.len();
    let (mut n11, mut n10, mut n01, mut n00) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (l1[i] == l1[j], l2[i] == l2[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (n00 * n11 - n01 * n10) / denom
}

/// All set partitions of `0..n` as restricted-growth label vectors.
pub fn all_label_vectors(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            if i == 0 && l > 0 {
                break;
            }
            cur.push(l);
            rec(i + 1, n, if i == 0 { 0 } else { max.max(l) }, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, n, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Label vectors with at least two clusters of at least two members.
pub fn valid_label_vectors(n: usize) -> Vec<Vec<usize>> {
    all_label_vectors(n)
        .into_iter()
        .filter(|l| {
            let k = l.iter().max().unwrap() + 1;
            k >= 2 && (0..k).all(|c| l.iter().filter(|&&x| x == c).count() >= 2)
        })
        .collect()
}

pub fn clusters_of(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    out.retain(|c| !c.is_empty());
    out
}

/// Infinite-horizon value iteration on the scalarized reward; returns the
/// optimal state values.
pub fn value_iteration(env: &TabularMOEnv, weight: &[f64]) -> Vec<f64> {
    let na = env.n_actions;
    let mut v = vec![0.0; env.n_states];
    loop {
        let mut delta: f64 = 0.0;
        let mut next = v.clone();
        for s in 0..env.n_states {
            if env.terminal[s] {
                next[s] = 0.0;
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let k = s * na + a;
                let r: f64 = env.reward[k].iter().zip(weight).map(|(x, w)| x * w).sum();
                let t = env.transition[k];
                let cont = if env.terminal[t] { 0.0 } else { v[t] };
                best = best.max(r + env.gamma * cont);
            }
            delta = delta.max((best - v[s]).abs());
            next[s] = best;
        }
        v = next;
        if delta < 1e-13 {
            return v;
        }
    }
}

/// Step-by-step discounted rollout straight from the transition tables.
pub fn simulate(env: &TabularMOEnv, action_of: &[Option<usize>]) -> (Vec<f64>, bool) {
    let mut ret = vec![0.0; env.n_obj];
    let mut s = env.initial_state;
    let mut discount = 1.0;
    let mut steps = 0;
    while !env.terminal[s] {
        if steps == env.max_steps {
            return (ret, true);
        }
        let a = action_of[s].unwrap();
        let k = s * env.n_actions + a;
        for o in 0..env.n_obj {
            ret[o] += discount * env.reward[k][o];
        }
        discount *= env.gamma;
        s = env.transition[k];
        steps += 1;
    }
    (ret, false)
}

/// Maximize-all dominance written out longhand.
pub fn dominated_by(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for i in 0..a.len() {
        if b[i] < a[i] {
            return false;
        }
        if b[i] > a[i] {
            strictly = true;
        }
    }
    strictly
}
