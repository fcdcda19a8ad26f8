//! `fmdeploy` command-line front end.
//!
//! Exit codes: 0 success, 1 parse or validation failure, 2 I/O failure,
//! 3 oracle mismatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::deploy::{DeploymentSpec, NodeDescriptor};
use crate::dsl::{ParseDiagnostic, Source};
use crate::matcher::{constraint_subset_counts, possible_host_with, MatchOptions, SolutionSet, SubsetCount};
use crate::model::{validate_model, FeatureModel};
use crate::solver::{brute_force_enumerate, DEFAULT_BRUTE_FORCE_BOUND, DEFAULT_SOLUTION_LIMIT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ORACLE_MISMATCH: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fmdeploy", version, about = "Enumerate valid deployments of a feature model onto nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Inputs {
    /// Application model (.fm)
    app: PathBuf,
    /// Deployment node model (.fm); repeat for each node
    #[arg(long = "node", required = true)]
    nodes: Vec<PathBuf>,
    /// Deployment spec (.dep); omitted means no declared constraints
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Maximum number of configurations to collect
    #[arg(long, env = "FMDEPLOY_LIMIT", default_value_t = DEFAULT_SOLUTION_LIMIT)]
    limit: usize,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate one model
    Validate { model: PathBuf },
    /// List every valid deployment configuration
    Enumerate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Print only the number of configurations
        #[arg(long)]
        count_only: bool,
        /// Cross-check against exhaustive enumeration
        #[arg(long)]
        oracle: bool,
    },
    /// Count configurations under subsets of the colocation and separation
    /// constraints
    Stats {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Largest proper subset to count; the full set is always counted
        #[arg(long, default_value_t = 1)]
        subset_size: usize,
    },
}

/// A failed command: exit status plus what to print on standard error.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn print_diagnostics(diags: &[ParseDiagnostic]) {
    let mut err = std::io::stderr().lock();
    for d in diags {
        let _ = writeln!(err, "{d}");
    }
}

fn load_model(path: &Path, digests: &mut BTreeMap<String, String>) -> Result<FeatureModel, Failure> {
    let text = read(path)?;
    digests.insert(path.display().to_string(), hex::encode(Sha256::digest(text.as_bytes())));
    match Source::new(path.display().to_string()).parse_model(&text) {
        Ok(parsed) => {
            print_diagnostics(&parsed.warnings);
            Ok(parsed.value)
        }
        Err(diags) => {
            print_diagnostics(&diags.0);
            Err(Failure::invalid(format!("{}: parse failed", path.display())))
        }
    }
}

struct Loaded {
    app: FeatureModel,
    nodes: Vec<NodeDescriptor>,
    spec: DeploymentSpec,
    digests: BTreeMap<String, String>,
}

fn load(inputs: &Inputs) -> Result<Loaded, Failure> {
    let mut digests = BTreeMap::new();
    let app = load_model(&inputs.app, &mut digests)?;
    let node_models = inputs
        .nodes
        .iter()
        .map(|p| load_model(p, &mut digests))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = match &inputs.spec {
        None => DeploymentSpec::new(),
        Some(path) => {
            let text = read(path)?;
            digests.insert(path.display().to_string(), hex::encode(Sha256::digest(text.as_bytes())));
            match Source::new(path.display().to_string()).parse_deployment_spec(&text, &app, &node_models) {
                Ok(parsed) => {
                    print_diagnostics(&parsed.warnings);
                    parsed.value
                }
                Err(diags) => {
                    print_diagnostics(&diags.0);
                    return Err(Failure::invalid(format!("{}: parse failed", path.display())));
                }
            }
        }
    };
    let nodes = node_models
        .into_iter()
        .map(NodeDescriptor::from_model)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::invalid(e.to_string()))?;
    Ok(Loaded {
        app,
        nodes,
        spec,
        digests,
    })
}

#[derive(Serialize)]
struct ConfigJson<'a> {
    selected: &'a BTreeMap<crate::model::FeatureId, u32>,
    hosting: &'a BTreeMap<crate::model::FeatureId, crate::model::NodeId>,
}

#[derive(Serialize)]
struct NodeJson<'a> {
    id: &'a str,
    class: &'static str,
    capacities: &'a BTreeMap<String, u64>,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    features: usize,
    nodes: Vec<NodeJson<'a>>,
    peak_usage: BTreeMap<crate::model::NodeId, BTreeMap<String, u64>>,
    diagnostics: Vec<String>,
    inputs: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct EnumerateJson<'a> {
    count: usize,
    truncated: bool,
    configurations: Vec<ConfigJson<'a>>,
    stats: StatsJson<'a>,
}

fn stats_json<'a>(loaded: &'a Loaded, set: &SolutionSet) -> StatsJson<'a> {
    StatsJson {
        features: loaded.app.features.len(),
        nodes: loaded
            .nodes
            .iter()
            .map(|n| NodeJson {
                id: n.id.as_str(),
                class: n.class.keyword(),
                capacities: &n.capacities,
            })
            .collect(),
        peak_usage: set.peak_usage(),
        diagnostics: set.diagnostics.iter().map(ToString::to_string).collect(),
        inputs: &loaded.digests,
    }
}

/// Left-aligned columns separated by two spaces.
fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn match_options(limit: usize) -> MatchOptions {
    MatchOptions {
        limit,
        ..MatchOptions::default()
    }
}

fn cmd_validate(path: &Path) -> CmdResult {
    let mut digests = BTreeMap::new();
    let model = load_model(path, &mut digests)?;
    let report = validate_model(&model);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::invalid(crate::error::render(&report)))
    }
}

fn cmd_enumerate(inputs: &Inputs, format: Format, count_only: bool, oracle: bool) -> CmdResult {
    let loaded = load(inputs)?;
    let set = possible_host_with(&loaded.app, &loaded.nodes, &loaded.spec, &match_options(inputs.limit))
        .map_err(|e| Failure::invalid(e.to_string()))?;
    for d in &set.diagnostics {
        eprintln!("note: {d}");
    }

    if oracle {
        let expected = brute_force_enumerate(&set.augmented, &loaded.nodes, DEFAULT_BRUTE_FORCE_BOUND)
            .map_err(|e| Failure::invalid(format!("oracle: {e}")))?;
        if set.stats.truncated || expected != set.configurations {
            return Err(Failure {
                code: EXIT_ORACLE_MISMATCH,
                message: format!(
                    "oracle mismatch: solver found {}{}, exhaustive search found {}",
                    set.len(),
                    if set.stats.truncated { " (truncated)" } else { "" },
                    expected.len()
                ),
            });
        }
    }

    let mut out = std::io::stdout().lock();
    let text = if count_only {
        format!("{}\n", set.len())
    } else {
        match format {
            Format::Json => {
                let doc = EnumerateJson {
                    count: set.len(),
                    truncated: set.stats.truncated,
                    configurations: set
                        .configurations
                        .iter()
                        .map(|c| ConfigJson {
                            selected: &c.selection,
                            hosting: &c.hosting,
                        })
                        .collect(),
                    stats: stats_json(&loaded, &set),
                };
                let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
                s.push('\n');
                s
            }
            Format::Table => {
                let header = vec!["#".to_owned(), "selected".to_owned(), "hosting".to_owned()];
                let rows: Vec<Vec<String>> = set
                    .configurations
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let selected: Vec<String> = c
                            .selection
                            .iter()
                            .filter(|(f, _)| loaded.app.contains(f.as_str()))
                            .map(|(f, &n)| if n == 1 { f.to_string() } else { format!("{f}*{n}") })
                            .collect();
                        let hosting: Vec<String> = c.hosting.iter().map(|(f, n)| format!("{f}@{n}")).collect();
                        vec![(i + 1).to_string(), selected.join(" "), hosting.join(" ")]
                    })
                    .collect();
                let mut s = render_table(&header, &rows);
                let _ = writeln!(
                    s,
                    "{} configurations{}",
                    set.len(),
                    if set.stats.truncated { " (truncated)" } else { "" }
                );
                s
            }
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct SubsetJson<'a> {
    constraints: &'a str,
    count: usize,
    truncated: bool,
}

#[derive(Serialize)]
struct RunReport<'a> {
    count: usize,
    truncated: bool,
    subsets: Vec<SubsetJson<'a>>,
    elapsed_ms: u128,
    inputs: &'a BTreeMap<String, String>,
}

fn cmd_stats(inputs: &Inputs, format: Format, subset_size: usize) -> CmdResult {
    let start = Instant::now();
    let loaded = load(inputs)?;
    let options = match_options(inputs.limit);
    let full = possible_host_with(&loaded.app, &loaded.nodes, &loaded.spec, &options)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let subsets: Vec<SubsetCount> = constraint_subset_counts(&loaded.app, &loaded.nodes, &loaded.spec, subset_size, &options)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let elapsed_ms = start.elapsed().as_millis();

    let text = match format {
        Format::Json => {
            let report = RunReport {
                count: full.len(),
                truncated: full.stats.truncated || subsets.iter().any(|s| s.truncated),
                subsets: subsets
                    .iter()
                    .map(|s| SubsetJson {
                        constraints: &s.label,
                        count: s.count,
                        truncated: s.truncated,
                    })
                    .collect(),
                elapsed_ms,
                inputs: &loaded.digests,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("serializable");
            s.push('\n');
            s
        }
        Format::Table => {
            let mut header = vec!["Feature Model".to_owned(), "Features".to_owned()];
            header.extend(subsets.iter().map(|s| {
                if s.constraints.is_empty() {
                    "Config".to_owned()
                } else {
                    format!("Config with {}", s.label)
                }
            }));
            let mut row = vec![loaded.app.name.clone(), loaded.app.features.len().to_string()];
            row.extend(subsets.iter().map(|s| format!("{}{}", s.count, if s.truncated { "+" } else { "" })));
            let mut s = render_table(&header, &[row]);
            let _ = writeln!(s, "elapsed: {elapsed_ms} ms");
            s
        }
    };
    print!("{text}");
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Enumerate {
            inputs,
            format,
            count_only,
            oracle,
        } => cmd_enumerate(inputs, *format, *count_only, *oracle),
        Command::Stats {
            inputs,
            format,
            subset_size,
        } => cmd_stats(inputs, *format, *subset_size),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os())
}
