use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morlpan::baselines::compare_methods;
use morlpan::fixture::{generate_solution_set, GenerateConfig, TrainConfig, TreasureGridSpec};
use morlpan::highlights::{extract, highlight_log, HighlightsConfig};
use morlpan::{distance_matrix, pan_run, DistanceMatrix, Error, Normalization, PanParams, SolutionSet, Space};
use serde_json::json;

use crate::io::{self, FrontDoc, InputError, QTableDoc, ReportDoc, SCHEMA_VERSION};
use crate::{ClusterArgs, Cli, Command, CompareArgs, ExtractArgs, GenerateArgs, PanArgs, ReportArgs};

// Like `println!`, but a closed stdout is not an error.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const SET_FILE: &str = "solution_set.json";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Extract(a) => extract_cmd(&a),
        Command::Cluster(a) => cluster(&a),
        Command::Compare(a) => compare(&a),
        Command::Report(a) => report(&a),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes every `(name, contents)` pair under `dir` only after all of them
/// have been rendered.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<()> {
    for (name, text) in files {
        io::write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = match (&a.input, a.layout_seed) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
            TreasureGridSpec::from_json(&text).map_err(|e| InputError(format!("cannot parse {}: {e}", path.display())))?
        }
        (None, Some(layout)) => TreasureGridSpec::convex_front(layout, a.treasures, 0.99),
        (None, None) => TreasureGridSpec::deep_sea_treasure(),
    };
    let env = spec.build().map_err(|e| InputError(format!("invalid environment: {e}")))?;
    let cfg = GenerateConfig {
        resolution: a.resolution,
        train: TrainConfig {
            episodes: a.episodes,
            ..TrainConfig::default()
        },
        eval_episodes: 5,
        seed: a.seed,
    };
    let generated = match generate_solution_set(&env, &cfg) {
        Err(Error::TooFewParetoPolicies(n)) => {
            bail!("only {n} distinct Pareto policies; use a finer lattice (--resolution > {})", a.resolution)
        }
        other => other?,
    };
    let mut set = generated.set;
    let sidecar = io::sidecar_name(Path::new(SET_FILE));
    set.provenance.insert("qtables".into(), json!(file_name(&sidecar)));
    if let Some(l) = a.layout_seed {
        set.provenance.insert("layout_seed".into(), json!(l));
    }
    let qdoc = QTableDoc {
        schema_version: SCHEMA_VERSION,
        environment: env,
        policies: generated.policies,
    };
    write_all(
        &a.out.output_dir,
        &[
            (SET_FILE.into(), io::solution_set_json(&set)?),
            (file_name(&sidecar), io::to_json(&qdoc)?),
        ],
    )?;
    say!("{} policies", set.len());
    for (name, (lo, hi)) in objective_ranges(&set) {
        say!("{name}: [{lo:.4}, {hi:.4}]");
    }
    Ok(())
}

fn sidecar_path(input: &Path, set: &SolutionSet) -> PathBuf {
    match set.provenance.get("qtables").and_then(|v| v.as_str()) {
        Some(name) => input.with_file_name(name),
        None => io::sidecar_name(input),
    }
}

fn extract_cmd(a: &ExtractArgs) -> Result<()> {
    let mut set = io::read_solution_set(&a.input)?;
    let side = sidecar_path(&a.input, &set);
    let qdoc: QTableDoc = io::read_json(&side)?;
    let env = morlpan::fixture::TabularMOEnv::new(qdoc.environment.clone())
        .map_err(|e| InputError(format!("invalid environment in {}: {e}", side.display())))?;
    let missing: Vec<String> = set
        .policies
        .iter()
        .filter(|p| !qdoc.policies.contains_key(&p.id))
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingQTables(missing).into());
    }
    let cfg = HighlightsConfig {
        runs: a.runs,
        epsilon_vis: a.epsilon_vis,
        k: a.k,
        ..HighlightsConfig::default()
    };
    if !(0.0..=1.0).contains(&cfg.epsilon_vis) {
        bail!("--epsilon-vis {} outside [0, 1]", cfg.epsilon_vis);
    }
    let mut log = String::new();
    let mut padded = Vec::new();
    for p in &mut set.policies {
        let ex = extract(&env, &qdoc.policies[&p.id], &p.id, &cfg, a.seed)?;
        log.push_str(&highlight_log(&env, &p.id, &ex, cfg.window));
        p.behavior = ex.behavior;
        p.padding = ex.padded;
        if ex.padded {
            padded.push(p.id.clone());
        }
    }
    set.feature_names = env.feature_names();
    set.provenance.insert(
        "highlights".into(),
        json!({ "runs": cfg.runs, "epsilon_vis": cfg.epsilon_vis, "k": cfg.k, "seed": a.seed }),
    );
    set.provenance.insert("padded_policies".into(), json!(padded));
    set.validate()?;
    let side_name = file_name(&side);
    set.provenance.insert("qtables".into(), json!(side_name));
    write_all(
        &a.out.output_dir,
        &[
            (SET_FILE.into(), io::solution_set_json(&set)?),
            (side_name, io::to_json(&qdoc)?),
            ("highlights.log".into(), log),
        ],
    )?;
    say!("extracted {} behavior matrices ({} padded)", set.len(), padded.len());
    Ok(())
}

fn pan_params(a: &PanArgs) -> PanParams {
    PanParams {
        n: a.pop,
        g: a.gens,
        p_m: a.pm,
        p_u: a.pu,
        p_r: a.pr,
        p_s: a.ps,
        seed: a.seed,
        ..PanParams::default()
    }
}

fn matrices(input: &Path, norm: Normalization) -> Result<(DistanceMatrix, DistanceMatrix)> {
    let set = io::read_solution_set(input)?;
    if !set.has_behavior() {
        bail!("{} has no behavior matrices; run `extract` first", file_name(input));
    }
    if set.len() < 4 {
        return Err(Error::TooFewPolicies { needed: 4, got: set.len() }.into());
    }
    Ok((
        distance_matrix(&set, Space::Objective, norm)?,
        distance_matrix(&set, Space::Behavior, norm)?,
    ))
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let norm: Normalization = a.pan.normalization.into();
    let (d_o, d_b) = matrices(&a.input, norm)?;
    let params = pan_params(&a.pan);
    let (front, trace) = pan_run(&d_o, &d_b, &params)?;
    let doc = FrontDoc::new(&front, &params, norm);
    write_all(
        &a.out.output_dir,
        &[
            ("front.json".into(), io::to_json(&doc)?),
            ("trace.csv".into(), io::trace_csv(&trace.records)),
            ("scatter.csv".into(), io::scatter_csv(&front.pairs())),
        ],
    )?;
    say!("front: {} partitionings, hypervolume {:.6}", front.len(), front.hypervolume);
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<()> {
    let norm: Normalization = a.pan.normalization.into();
    let (d_o, d_b) = matrices(&a.input, norm)?;
    let params = pan_params(&a.pan);
    let report = compare_methods(&d_o, &d_b, &params, &a.pair)?;
    let mut files = vec![
        (
            "report.json".to_string(),
            io::to_json(&ReportDoc {
                normalization: norm,
                report: report.clone(),
            })?,
        ),
        (
            "table.csv".to_string(),
            io::table_csv(&[("pan", report.pan_hypervolume), ("kmedoids", report.baseline_hypervolume)]),
        ),
        ("front.json".to_string(), io::to_json(&FrontDoc::new(&report.pan, &params, norm))?),
        ("trace.csv".to_string(), io::trace_csv(&report.trace.records)),
        ("scatter_pan.csv".to_string(), io::scatter_csv(&report.pan.pairs())),
        ("scatter_kmedoids.csv".to_string(), io::scatter_csv(&report.baseline.pairs())),
    ];
    for s in &report.sankeys {
        files.push((format!("sankey_{}.csv", s.selector), io::sankey_csv(&s.links)));
    }
    write_all(&a.out.output_dir, &files)?;
    say!(
        "hypervolume: pan {:.6}, kmedoids {:.6}",
        report.pan_hypervolume, report.baseline_hypervolume
    );
    Ok(())
}

fn front_summary(out: &mut String, title: &str, doc: &FrontDoc) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "hypervolume: {:.6}\n", doc.hypervolume);
    let _ = writeln!(out, "| member | clusters | f_O | f_B |");
    let _ = writeln!(out, "|---|---|---|---|");
    for (i, m) in doc.members.iter().enumerate() {
        let _ = writeln!(out, "| {i} | {} | {:.6} | {:.6} |", m.clusters.len(), m.f_o, m.f_b);
    }
    let _ = writeln!(out);
}

/// Markdown summary of a front file or a comparison report.
pub fn render_report(value: serde_json::Value) -> Result<String> {
    let mut out = String::new();
    if value.get("baseline").is_some() {
        let doc: ReportDoc =
            serde_json::from_value(value).map_err(|e| InputError(format!("bad comparison report: {e}")))?;
        let (r, norm) = (doc.report, doc.normalization);
        let _ = writeln!(out, "normalization: {norm:?}\n");
        front_summary(&mut out, "PAN", &FrontDoc::new(&r.pan, &r.params, norm));
        front_summary(&mut out, "k-medoids", &FrontDoc::new(&r.baseline, &r.params, norm));
        let valid = r.kmedoids_runs.iter().filter(|k| k.is_valid()).count();
        let _ = writeln!(out, "k-medoids runs: {} ({valid} valid)\n", r.kmedoids_runs.len());
        for s in &r.sankeys {
            let _ = writeln!(
                out,
                "selection {}: member {}, k = {}, ARI vs objective k-medoids {:.4}, vs behavior k-medoids {:.4}",
                s.selector, s.pan_index, s.k, s.ari_objective, s.ari_behavior
            );
        }
    } else {
        let doc: FrontDoc = serde_json::from_value(value).map_err(|e| InputError(format!("bad front file: {e}")))?;
        front_summary(&mut out, "PAN", &doc);
    }
    Ok(out)
}

fn report(a: &ReportArgs) -> Result<()> {
    let value: serde_json::Value = io::read_json(&a.input)?;
    let text = render_report(value)?;
    io::write_atomic(&a.out.output_dir.join("summary.md"), text.as_bytes())
        .with_context(|| "writing summary".to_string())?;
    say!("{text}");
    Ok(())
}

/// Lowest and highest value of each objective.
pub fn objective_ranges(set: &SolutionSet) -> BTreeMap<String, (f64, f64)> {
    set.objective_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let vals = set.policies.iter().map(|p| p.objectives[j]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            (name.clone(), (lo, hi))
        })
        .collect()
}
