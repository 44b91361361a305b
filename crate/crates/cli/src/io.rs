//! File formats. Everything written here can be read back losslessly:
//! JSON through serde, CSV cells through Rust's shortest round-trip float
//! formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use morlpan::baselines::{ComparisonReport, NamedLink};
use morlpan::fixture::{TabularMOEnv, TabularPolicy};
use morlpan::solution::{Policy, Provenance};
use morlpan::{Normalization, ObjectivePair, PanParams, Partitioning, PartitioningFront, SolutionSet, TraceRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A malformed or unreadable input file. Mapped to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Reads and parses a JSON file, reporting failures as [`InputError`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("cannot parse {}: {e}", path.display())).into())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSetDoc {
    pub schema_version: u32,
    pub objective_names: Vec<String>,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub provenance: Provenance,
    pub policies: Vec<Policy>,
}

impl From<&SolutionSet> for SolutionSetDoc {
    fn from(set: &SolutionSet) -> Self {
        SolutionSetDoc {
            schema_version: SCHEMA_VERSION,
            objective_names: set.objective_names.clone(),
            feature_names: set.feature_names.clone(),
            provenance: set.provenance.clone(),
            policies: set.policies.clone(),
        }
    }
}

impl SolutionSetDoc {
    pub fn into_set(self) -> Result<SolutionSet> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(InputError(format!("unsupported schema_version {}", self.schema_version)));
        }
        SolutionSet::new(self.objective_names, self.feature_names, self.policies, self.provenance)
            .map_err(|e| InputError(format!("invalid solution set: {e}")).into())
    }
}

pub fn solution_set_json(set: &SolutionSet) -> Result<String> {
    to_json(&SolutionSetDoc::from(set))
}

pub fn read_solution_set(path: &Path) -> Result<SolutionSet> {
    read_json::<SolutionSetDoc>(path)?.into_set()
}

/// Q-table sidecar: the environment the policies were trained on and each
/// policy's tables keyed by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableDoc {
    pub schema_version: u32,
    pub environment: TabularMOEnv,
    pub policies: BTreeMap<String, TabularPolicy>,
}

/// Sidecar file name for a solution-set file name: `x.json` -> `x.qtables.json`.
pub fn sidecar_name(set_file: &Path) -> PathBuf {
    let stem = set_file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    set_file.with_file_name(format!("{stem}.qtables.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMemberDoc {
    pub clusters: Vec<Vec<usize>>,
    #[serde(rename = "f_O")]
    pub f_o: f64,
    #[serde(rename = "f_B")]
    pub f_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontDoc {
    pub members: Vec<FrontMemberDoc>,
    pub hypervolume: f64,
    pub params: PanParams,
    pub seed: u64,
    pub normalization: Normalization,
}

impl FrontDoc {
    pub fn new(front: &PartitioningFront, params: &PanParams, normalization: Normalization) -> Self {
        FrontDoc {
            members: front
                .members
                .iter()
                .map(|m| {
                    let pair = m.objectives().expect("front members are evaluated");
                    FrontMemberDoc {
                        clusters: m.clusters().to_vec(),
                        f_o: pair.f_o,
                        f_b: pair.f_b,
                    }
                })
                .collect(),
            hypervolume: front.hypervolume,
            params: params.clone(),
            seed: params.seed,
            normalization,
        }
    }

    pub fn front(&self) -> PartitioningFront {
        PartitioningFront {
            members: self
                .members
                .iter()
                .map(|m| Partitioning::new(m.clusters.clone()).with_objectives(ObjectivePair::new(m.f_o, m.f_b)))
                .collect(),
            hypervolume: self.hypervolume,
        }
    }
}

/// Comparison report with the normalization the matrices were built under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub normalization: Normalization,
    #[serde(flatten)]
    pub report: ComparisonReport,
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub const SCATTER_HEADER: &str = "f_O,f_B,member_index";
pub const SANKEY_HEADER: &str = "src_cluster,dst_cluster,count";
pub const TRACE_HEADER: &str = "generation,hypervolume,front_size,best_f_O,best_f_B";
pub const TABLE_HEADER: &str = "method,hypervolume";

pub fn scatter_csv(pairs: &[ObjectivePair]) -> String {
    csv(
        SCATTER_HEADER,
        pairs.iter().enumerate().map(|(i, p)| format!("{},{},{i}", p.f_o, p.f_b)),
    )
}

pub fn sankey_csv(links: &[NamedLink]) -> String {
    csv(
        SANKEY_HEADER,
        links.iter().map(|l| format!("{},{},{}", l.source, l.target, l.count)),
    )
}

pub fn trace_csv(records: &[TraceRecord]) -> String {
    csv(
        TRACE_HEADER,
        records.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.generation, r.hypervolume, r.front_size, r.best_f_o, r.best_f_b
            )
        }),
    )
}

pub fn table_csv(rows: &[(&str, f64)]) -> String {
    csv(TABLE_HEADER, rows.iter().map(|(m, hv)| format!("{m},{hv}")))
}

/// Splits a CSV produced above into header cells and data rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        bail!(InputError("empty csv".into()));
    };
    let header: Vec<String> = header.split(',').map(str::to_owned).collect();
    let rows: Vec<Vec<String>> = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
        bail!(InputError(format!("csv row has {} cells, header has {}", bad.len(), header.len())));
    }
    Ok((header, rows))
}

fn expect_header(header: &[String], want: &str) -> Result<()> {
    if header.join(",") != want {
        bail!(InputError(format!("expected csv header `{want}`, got `{}`", header.join(","))));
    }
    Ok(())
}

fn cell<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| InputError(format!("bad csv cell `{s}`")).into())
}

pub fn read_scatter_csv(text: &str) -> Result<Vec<ObjectivePair>> {
    let (h, rows) = parse_csv(text)?;
    expect_header(&h, SCATTER_HEADER)?;
    rows.iter().map(|r| Ok(ObjectivePair::new(cell(&r[0])?, cell(&r[1])?))).collect()
}

pub fn read_sankey_csv(text: &str) -> Result<Vec<NamedLink>> {
    let (h, rows) = parse_csv(text)?;
    expect_header(&h, SANKEY_HEADER)?;
    rows.iter()
        .map(|r| {
            Ok(NamedLink {
                source: r[0].clone(),
                target: r[1].clone(),
                count: cell(&r[2])?,
            })
        })
        .collect()
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let (h, rows) = parse_csv(text)?;
    expect_header(&h, TRACE_HEADER)?;
    rows.iter()
        .map(|r| {
            Ok(TraceRecord {
                generation: cell(&r[0])?,
                hypervolume: cell(&r[1])?,
                front_size: cell(&r[2])?,
                best_f_o: cell(&r[3])?,
                best_f_b: cell(&r[4])?,
            })
        })
        .collect()
}

pub fn read_table_csv(text: &str) -> Result<Vec<(String, f64)>> {
    let (h, rows) = parse_csv(text)?;
    expect_header(&h, TABLE_HEADER)?;
    rows.iter().map(|r| Ok((r[0].clone(), cell(&r[1])?))).collect()
}
