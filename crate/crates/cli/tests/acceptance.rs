//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_silhouette, clusters_of, grid_hypervolume, pair_counting_ari, points_matrix, random_points, valid_label_vectors};
use morlpan::baselines::{compare_methods, PointSelector};
use morlpan::fixture::{generate_solution_set, GenerateConfig, QTable, TabularPolicy, TreasureGridSpec};
use morlpan::highlights::{behavior_matrix, collect_states, extract, state_importance, HighlightsConfig};
use morlpan::pan::pan_run_observed;
use morlpan::solution::validate_partitioning;
use morlpan::{
    ari, distance_matrix, hypervolume_2d, pan_run, silhouette, DistanceMatrix, Normalization, ObjectivePair, PanParams,
    Partitioning, SolutionSet, Space, REFERENCE_POINT,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_valid_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let k = rng.gen_range(2..=n / 2);
    let mut labels: Vec<usize> = (0..n).map(|i| if i < 2 * k { i / 2 } else { rng.gen_range(0..k) }).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.gen_range(0..=i));
    }
    labels
}

fn silhouette_oracle() -> Outcome {
    let mut rng = morlpan::rng::stream(1001, &[]);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(6..=20);
        let dim = rng.gen_range(1..=4);
        let pts = random_points(&mut rng, n, dim);
        let d = points_matrix(Space::Objective, &pts);
        let labels = random_valid_labels(&mut rng, n);
        let got = silhouette(&Partitioning::from_labels(&labels), &d).map_err(|e| e.to_string())?;
        worst = worst.max((got - brute_silhouette(&clusters_of(&labels), &d)).abs());
    }
    check(worst <= 1e-9, format!("500 instances, max |diff| {worst:.2e}"))
}

fn hypervolume_oracle() -> Outcome {
    let closed = [
        (vec![ObjectivePair::new(0.5, 1.0), ObjectivePair::new(1.0, 0.5)], 2.0),
        (vec![ObjectivePair::new(0.0, 0.0)], 4.0),
        (vec![ObjectivePair::new(2.0, 2.0)], 0.0),
        (vec![ObjectivePair::new(1.0, 1.0)], 1.0),
    ];
    for (pts, want) in &closed {
        let got = hypervolume_2d(pts, REFERENCE_POINT);
        if (got - want).abs() > 1e-12 {
            return Err(format!("closed form {pts:?}: {got} != {want}"));
        }
    }
    let mut rng = morlpan::rng::stream(1002, &[]);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(1..=12);
        let pts: Vec<ObjectivePair> =
            (0..m).map(|_| ObjectivePair::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0))).collect();
        let got = hypervolume_2d(&pts, REFERENCE_POINT);
        worst = worst.max((got - grid_hypervolume(&pts, REFERENCE_POINT, 1e-3)).abs());
    }
    check(worst <= 2e-3, format!("closed forms exact, 200 sets vs 1e-3 grid max |diff| {worst:.2e}"))
}

fn ari_properties() -> Outcome {
    let mut rng = morlpan::rng::stream(1003, &[]);
    let e = |r: morlpan::Result<f64>| r.map_err(|e| e.to_string());
    for _ in 0..200 {
        let n = rng.gen_range(6..=20);
        let labels = random_valid_labels(&mut rng, n);
        let p = Partitioning::from_labels(&labels);
        if e(ari(&p, &p))? != 1.0 {
            return Err("ari(p, p) != 1".into());
        }
        let q = Partitioning::from_labels(&random_valid_labels(&mut rng, n));
        let k = labels.iter().max().unwrap() + 1;
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let relabeled = Partitioning::from_labels(&labels.iter().map(|&l| perm[l]).collect::<Vec<_>>());
        if e(ari(&relabeled, &q))? != e(ari(&p, &q))? {
            return Err("label permutation changed ari".into());
        }
    }
    let mut sum = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(6..=20);
        let a = Partitioning::from_labels(&random_valid_labels(&mut rng, n));
        let b = Partitioning::from_labels(&random_valid_labels(&mut rng, n));
        sum += e(ari(&a, &b))?;
    }
    let mean = sum / 1000.0;
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(4..=12);
        let (a, b) = (random_valid_labels(&mut rng, n), random_valid_labels(&mut rng, n));
        let got = e(ari(&Partitioning::from_labels(&a), &Partitioning::from_labels(&b)))?;
        worst = worst.max((got - pair_counting_ari(&a, &b)).abs());
    }
    check(
        mean.abs() <= 0.05 && worst <= 1e-12,
        format!("self = 1, relabel invariant, random-pair mean {mean:+.4}, pair counting max |diff| {worst:.2e}"),
    )
}

fn highlights_exactness() -> Outcome {
    let env = TreasureGridSpec::convex_front(1, 12, 0.99).build().map_err(|e| e.to_string())?;
    let range = |row: &[f64]| {
        let mut s = row.to_vec();
        s.sort_by(f64::total_cmp);
        s[s.len() - 1] - s[0]
    };
    let mut shift_worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = morlpan::rng::stream(1004, &[seed]);
        let table = QTable {
            weight: vec![0.5, 0.5],
            n_states: env.n_states,
            n_actions: env.n_actions,
            scalar: (0..env.n_states * env.n_actions).map(|_| rng.gen_range(-10.0..10.0)).collect(),
            vector: Vec::new(),
        };
        let policy = TabularPolicy::from_q_table(&env, table);
        let col = collect_states(&env, &policy, 50, 0.3, &mut rng).map_err(|e| e.to_string())?;
        let sel = behavior_matrix(&col.states, 5).map_err(|e| e.to_string())?;
        let mut scored: Vec<(f64, Vec<f64>)> =
            col.states.iter().map(|s| (range(policy.q_table.row(s.state)), s.features.clone())).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.partial_cmp(&b.1).unwrap()));
        let mut want: Vec<Vec<f64>> = scored.iter().take(5).map(|s| s.1.clone()).collect();
        while want.len() < 5 {
            want.push(want.last().unwrap().clone());
        }
        for (j, w) in want.iter().enumerate() {
            if &sel.matrix.column(j) != w {
                return Err(format!("table {seed}: column {j} differs from oracle"));
            }
        }
        for s in 0..env.n_states {
            let row = policy.q_table.row(s);
            let shifted: Vec<f64> = row.iter().map(|v| v + 7.25).collect();
            let a = state_importance(row).map_err(|e| e.to_string())?;
            let b = state_importance(&shifted).map_err(|e| e.to_string())?;
            shift_worst = shift_worst.max((a - b).abs());
        }
    }
    check(shift_worst <= 1e-12, format!("100 tables match oracle, shift max |diff| {shift_worst:.2e}"))
}

struct Fixture {
    set: SolutionSet,
    d_o: DistanceMatrix,
    d_b: DistanceMatrix,
}

fn fixture(layout: u64, epsilon_vis: f64) -> morlpan::Result<Fixture> {
    let env = TreasureGridSpec::convex_front(layout, 12, 0.99).build()?;
    let g = generate_solution_set(&env, &GenerateConfig { seed: 42, ..GenerateConfig::default() })?;
    let mut set = g.set;
    let cfg = HighlightsConfig { epsilon_vis, ..HighlightsConfig::default() };
    for p in &mut set.policies {
        let ex = extract(&env, &g.policies[&p.id], &p.id, &cfg, 42)?;
        p.behavior = ex.behavior;
        p.padding = ex.padded;
    }
    set.validate()?;
    let d_o = distance_matrix(&set, Space::Objective, Normalization::Raw)?;
    let d_b = distance_matrix(&set, Space::Behavior, Normalization::Raw)?;
    Ok(Fixture { set, d_o, d_b })
}

fn pan_validity() -> Outcome {
    let f = fixture(1, 0.05).map_err(|e| e.to_string())?;
    let n = f.set.len();
    let mut violations = 0;
    let mut members = 0;
    for seed in 1..=5 {
        let params = PanParams { g: 200, seed, ..PanParams::default() };
        let (_, trace) = pan_run_observed(&f.d_o, &f.d_b, &params, |_, pop| {
            members += pop.len();
            violations += pop.iter().filter(|p| !validate_partitioning(p, n).is_empty()).count();
        })
        .map_err(|e| e.to_string())?;
        violations += trace.records.windows(2).filter(|w| w[1].hypervolume < w[0].hypervolume).count();
    }
    check(violations == 0, format!("{n} policies, seeds 1-5, {members} members checked, {violations} violations"))
}

fn planted_points(order: &[usize]) -> Vec<Vec<f64>> {
    order.iter().map(|&i| vec![(i / 2) as f64 * 10.0 + (i % 2) as f64 * 0.3, 0.0]).collect()
}

fn tiny_optimality() -> Outcome {
    let pts = planted_points(&(0..8).collect::<Vec<_>>());
    let d_o = points_matrix(Space::Objective, &pts);
    let d_b = points_matrix(Space::Behavior, &pts);
    let all: Vec<ObjectivePair> = valid_label_vectors(8)
        .iter()
        .map(|l| {
            let c = clusters_of(l);
            ObjectivePair::new(1.0 - brute_silhouette(&c, &d_o), 1.0 - brute_silhouette(&c, &d_b))
        })
        .collect();
    let front: Vec<ObjectivePair> = all.iter().copied().filter(|p| !all.iter().any(|q| q.dominates(p))).collect();
    let best = front[0];
    if front.iter().any(|p| (p.f_o - best.f_o).abs() > 1e-12 || (p.f_b - best.f_b).abs() > 1e-12) {
        return Err("planted optimum is not unique".into());
    }
    let mut hits = 0;
    for seed in 1..=5 {
        let params = PanParams { n: 20, g: 100, seed, ..PanParams::default() };
        let (f, _) = pan_run(&d_o, &d_b, &params).map_err(|e| e.to_string())?;
        if f.pairs().iter().any(|p| (p.f_o - best.f_o).abs() <= 1e-9 && (p.f_b - best.f_b).abs() <= 1e-9) {
            hits += 1;
        }
    }
    check(hits >= 4, format!("optimum ({:.6}, {:.6}) recovered in {hits}/5 seeds", best.f_o, best.f_b))
}

const EPSILONS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

fn hypervolume_comparison() -> (Outcome, Outcome) {
    let mut rows = Vec::new();
    let mut wins = 0;
    let mut spectrum = Vec::new();
    for (i, layout) in (1..=5u64).enumerate() {
        let run = || -> morlpan::Result<_> {
            let f = fixture(layout, EPSILONS[i])?;
            let r = compare_methods(&f.d_o, &f.d_b, &PanParams { seed: 42, ..PanParams::default() }, &[PointSelector::Knee])?;
            Ok((f.set.len(), r))
        };
        let (n, r) = match run() {
            Ok(x) => x,
            Err(e) => return (Err(e.to_string()), Err("no fixtures".into())),
        };
        if n < 10 {
            return (Err(format!("layout {layout}: only {n} policies")), Err("no fixtures".into()));
        }
        if r.pan_hypervolume >= r.baseline_hypervolume - 0.05 {
            wins += 1;
        }
        rows.push(format!("{layout}:{:.3}/{:.3}", r.pan_hypervolume, r.baseline_hypervolume));
        spectrum.push((layout, spectrum_holds(&r.pan.pairs(), &r.baseline.pairs())));
    }
    let table = check(wins >= 3, format!("pan/kmedoids hv {}; {wins}/5 within 0.05", rows.join(" ")));
    let good: Vec<String> = spectrum.iter().filter(|s| s.1).map(|s| s.0.to_string()).collect();
    let spec = check(!good.is_empty(), format!("holds on layouts [{}]", good.join(",")));
    (table, spec)
}

/// At least three distinct members, extremes within 0.05 of the baseline's
/// best values, and one member strictly inside the box spanned by them.
fn spectrum_holds(pan: &[ObjectivePair], base: &[ObjectivePair]) -> bool {
    let mut distinct: Vec<ObjectivePair> = Vec::new();
    for p in pan {
        if !distinct.contains(p) {
            distinct.push(*p);
        }
    }
    if distinct.len() < 3 {
        return false;
    }
    let base_o = base.iter().map(|p| p.f_o).fold(f64::INFINITY, f64::min);
    let base_b = base.iter().map(|p| p.f_b).fold(f64::INFINITY, f64::min);
    let a = *pan.iter().min_by(|x, y| x.f_o.total_cmp(&y.f_o)).unwrap();
    let b = *pan.iter().min_by(|x, y| x.f_b.total_cmp(&y.f_b)).unwrap();
    a.f_o <= base_o + 0.05
        && b.f_b <= base_b + 0.05
        && pan.iter().any(|c| a.f_o < c.f_o && c.f_o < b.f_o && b.f_b < c.f_b && c.f_b < a.f_b)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let set = dir.join("solution_set.json");
    let set = set.to_str().unwrap();
    let steps: [&[&str]; 4] = [
        &["generate", "--layout-seed", "1", "--seed", "42"],
        &["extract", "--input", set, "--seed", "42"],
        &["cluster", "--input", set, "--seed", "42"],
        &["compare", "--input", set, "--seed", "42", "--pair", "knee,objective-best,behavior-best"],
    ];
    for args in steps {
        let o = Command::new(env!("CARGO_BIN_EXE_morlpan"))
            .args(args)
            .arg("--output-dir")
            .arg(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&o.stderr)));
        }
    }
    Ok(snapshot(dir))
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = pipeline(a.path())?;
    let fb = pipeline(b.path())?;
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    check(
        fa.keys().eq(fb.keys()) && differing.is_empty(),
        format!("{} files byte-identical across two runs (differing: {differing:?})", fa.len()),
    )
}

fn timed(name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    report(name, limit, start.elapsed(), out)
}

fn report(name: &str, limit: Duration, took: Duration, out: Outcome) -> bool {
    let (pass, msg) = match out {
        Ok(m) if took <= limit => (true, m),
        Ok(m) => (false, format!("{m}; too slow")),
        Err(m) => (false, m),
    };
    println!(
        "{} {name}: {msg} [{:.2}s, limit {}s]",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= timed("silhouette oracle equivalence", secs(5), silhouette_oracle);
    ok &= timed("hypervolume oracle equivalence", secs(10), hypervolume_oracle);
    ok &= timed("ari properties", secs(10), ari_properties);
    ok &= timed("highlights exactness", secs(60), highlights_exactness);
    ok &= timed("pan validity and elitism", secs(300), pan_validity);
    ok &= timed("pan optimality at tiny scale", secs(30), tiny_optimality);
    let start = Instant::now();
    let (table, spectrum) = hypervolume_comparison();
    let took = start.elapsed();
    ok &= report("pan vs k-medoids hypervolume", secs(300), took, table);
    ok &= report("spectrum property", secs(300), took, spectrum);
    ok &= timed("pipeline determinism", secs(60), determinism);
    if !ok {
        std::process::exit(1);
    }
}
