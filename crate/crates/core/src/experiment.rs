//! Experiment orchestration: mapping sweeps over relabeled topologies,
//! strategy comparison, aggregation with confidence intervals, and CSV /
//! plot-data emission.
//!
//! Runs are deterministic per (config, seed): mappings and the random
//! strategy draw from streams derived by hashing the master seed with a role
//! label and index, so adding a strategy never perturbs another's randomness,
//! and all emitted files are byte-identical across reruns and thread counts.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::direction::{self, PairCoverage, PairScope};
use crate::exec;
use crate::faultsim::{self, FaultModel};
use crate::quorum::{self, QuorumBase, QuorumSet, SearchStrategy};
use crate::rng;
use crate::routing::{self, CycleRoute};
use crate::topology::{self, Topology};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Quorum(#[from] quorum::QuorumError),
    #[error("no base for N={n}, R={r} in {}", path.display())]
    MissingBase { n: usize, r: usize, path: PathBuf },
    #[error("comparison needs strategies {missing:?} in the result set")]
    MissingStrategy { missing: Vec<Strategy> },
    #[error("strategies do not share a mapping set: sample counts {counts:?}")]
    MismatchedSamples { counts: Vec<(Strategy, usize)> },
    #[error("{path}:{line}: malformed CSV row: {reason}")]
    Csv {
        path: String,
        line: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Paired,
    Forward,
    Random,
    Greedy,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Paired => "paired",
            Self::Forward => "forward",
            Self::Random => "random",
            Self::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paired" => Ok(Self::Paired),
            "forward" => Ok(Self::Forward),
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum QuorumSource {
    Search { strategy: SearchStrategy, budget: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topology_path: PathBuf,
    pub redundancy: usize,
    pub strategies: Vec<Strategy>,
    pub mappings: usize,
    pub seed: u64,
    pub quorum_source: QuorumSource,
    pub fault_sweep: bool,
    pub compensation: bool,
    pub fault_model: FaultModel,
    pub count_passthrough: bool,
    pub output_dir: PathBuf,
}

pub const DEFAULT_SEARCH_BUDGET: u64 = 2_000_000;

/// Parses the flat `key = value` config format; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    let mut topology_path: Option<PathBuf> = None;
    let mut output_dir: Option<PathBuf> = None;
    let mut redundancy = 2usize;
    let mut strategies = vec![
        Strategy::Paired,
        Strategy::Forward,
        Strategy::Random,
        Strategy::Greedy,
    ];
    let mut mappings = 100usize;
    let mut seed = 1u64;
    let mut quorum_source_raw = "search".to_string();
    let mut search_strategy = SearchStrategy::Exhaustive;
    let mut search_budget = DEFAULT_SEARCH_BUDGET;
    let mut fault_sweep = true;
    let mut compensation = false;
    let mut fault_model = FaultModel::WholeCycle;
    let mut count_passthrough = true;

    let bad = |line: usize, reason: String| ExperimentError::Config { line, reason };
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let number = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(number, format!("expected key = value, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_bool = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(bad(number, format!("expected true/false, found {other:?}"))),
        };
        match key {
            "topology" => topology_path = Some(PathBuf::from(value)),
            "output_dir" => output_dir = Some(PathBuf::from(value)),
            "redundancy" => {
                redundancy = value
                    .parse()
                    .map_err(|_| bad(number, format!("bad redundancy {value:?}")))?;
            }
            "strategies" => {
                strategies = value
                    .split(',')
                    .map(|s| s.trim().parse::<Strategy>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| bad(number, e))?;
            }
            "mappings" => {
                mappings = value
                    .parse()
                    .map_err(|_| bad(number, format!("bad mapping count {value:?}")))?;
            }
            "seed" => {
                seed = value
                    .parse()
                    .map_err(|_| bad(number, format!("bad seed {value:?}")))?;
            }
            "quorum_source" => quorum_source_raw = value.to_string(),
            "search_strategy" => {
                search_strategy = value.parse().map_err(|e| bad(number, e))?;
            }
            "search_budget" => {
                search_budget = value
                    .parse()
                    .map_err(|_| bad(number, format!("bad budget {value:?}")))?;
            }
            "fault_sweep" => fault_sweep = parse_bool(value)?,
            "compensation" => compensation = parse_bool(value)?,
            "fault_model" => {
                fault_model = value.parse().map_err(|e| bad(number, e))?;
            }
            "count_passthrough" => count_passthrough = parse_bool(value)?,
            other => {
                return Err(bad(number, format!("unknown key {other:?}")));
            }
        }
    }
    let topology_path = topology_path
        .ok_or_else(|| bad(0, "missing required key \"topology\"".to_string()))?;
    let output_dir =
        output_dir.ok_or_else(|| bad(0, "missing required key \"output_dir\"".to_string()))?;
    if mappings == 0 {
        return Err(bad(0, "mapping count must be at least 1".to_string()));
    }
    if redundancy == 0 {
        return Err(bad(0, "redundancy must be at least 1".to_string()));
    }
    if strategies.is_empty() {
        return Err(bad(0, "at least one strategy is required".to_string()));
    }
    let mut seen = Vec::new();
    for &s in &strategies {
        if seen.contains(&s) {
            return Err(bad(0, format!("duplicate strategy {s}")));
        }
        seen.push(s);
    }
    let quorum_source = if quorum_source_raw == "search" {
        QuorumSource::Search {
            strategy: search_strategy,
            budget: search_budget,
        }
    } else {
        QuorumSource::File(PathBuf::from(quorum_source_raw))
    };
    Ok(ExperimentConfig {
        topology_path,
        redundancy,
        strategies,
        mappings,
        seed,
        quorum_source,
        fault_sweep,
        compensation,
        fault_model,
        count_passthrough,
        output_dir,
    })
}

/// One strategy's metrics for one mapping.
#[derive(Debug, Clone)]
pub struct StrategyRow {
    pub strategy: Strategy,
    pub links_used: usize,
    pub fault_free_missing: usize,
    pub missing_pct: f64,
    pub mean_fault_missing: Option<f64>,
    pub coverage_pct: Option<f64>,
    pub compensated_missing: Option<f64>,
    /// `(u, v, missing_count)` per failed hop.
    pub fault_rows: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct MappingOutcome {
    pub mapping_id: usize,
    pub rows: Vec<StrategyRow>,
    pub skipped: Option<String>,
}

fn member_sets(qs: &QuorumSet, cycles: &[CycleRoute]) -> Vec<BTreeSet<usize>> {
    cycles
        .iter()
        .map(|c| qs.quorums()[c.quorum_index].iter().copied().collect())
        .collect()
}

fn evaluate_solution(
    cfg: &ExperimentConfig,
    mapped: &Topology,
    strategy: Strategy,
    cycles: &[CycleRoute],
    sets: &[BTreeSet<usize>],
    links_used: usize,
) -> StrategyRow {
    let n = mapped.node_count();
    let scope = if cfg.count_passthrough {
        PairScope::AllOnCycle
    } else {
        PairScope::MembersOnly(sets)
    };
    let pc = PairCoverage::from_cycles(n, cycles, scope);
    let fault_free_missing = pc.missing_count();
    let missing_pct = direction::missing_percentage(fault_free_missing, n);

    let mut row = StrategyRow {
        strategy,
        links_used,
        fault_free_missing,
        missing_pct,
        mean_fault_missing: None,
        coverage_pct: None,
        compensated_missing: None,
        fault_rows: Vec::new(),
    };
    if cfg.fault_sweep {
        let outcome =
            faultsim::sweep_single_faults_with(mapped, cycles, cfg.fault_model, scope, cfg.compensation)
                .expect("solution has at least one cycle");
        row.mean_fault_missing = Some(outcome.report.mean_missing);
        row.coverage_pct = Some(faultsim::fault_coverage(&outcome.report));
        row.compensated_missing = outcome.compensated_mean_missing;
        row.fault_rows = outcome
            .report
            .edges_swept
            .iter()
            .map(|&(u, v)| (u, v, outcome.report.per_edge[&(u, v)].len()))
            .collect();
    } else if cfg.compensation {
        // Fault-free compensation: relays through every hub.
        let mut covered = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && pc.is_covered(i, j) {
                    covered.insert((i, j));
                }
            }
        }
        let hubs: BTreeSet<usize> = cycles.iter().map(|c| c.hub).collect();
        let comp = faultsim::compensated_pairs(&covered, &hubs);
        row.compensated_missing = Some((n * (n - 1) - comp.len()) as f64);
    }
    row
}

fn one_mapping(
    cfg: &ExperimentConfig,
    topo: &Topology,
    mapping: &topology::NodeMapping,
    mapping_id: usize,
    single_base: Option<&QuorumBase>,
    paired_base: Option<&QuorumBase>,
) -> MappingOutcome {
    let skip = |reason: String| MappingOutcome {
        mapping_id,
        rows: Vec::new(),
        skipped: Some(reason),
    };
    let mapped = match topology::apply_mapping(topo, mapping) {
        Ok(t) => t,
        Err(e) => return skip(e.to_string()),
    };

    let route = |base: &QuorumBase| -> Result<(QuorumSet, Vec<CycleRoute>), routing::RoutingError> {
        let qs = QuorumSet::generate(base.clone());
        let cycles = routing::route_all(&mapped, &qs)?;
        Ok((qs, cycles))
    };
    let single = match single_base.map(route).transpose() {
        Ok(s) => s,
        Err(e) => return skip(e.to_string()),
    };
    let paired = match paired_base.map(route).transpose() {
        Ok(p) => p,
        Err(e) => return skip(e.to_string()),
    };

    let mut rows = Vec::with_capacity(cfg.strategies.len());
    for &strategy in &cfg.strategies {
        match strategy {
            Strategy::Paired => {
                let (qs, cycles) = paired.as_ref().expect("paired base resolved");
                let expanded = direction::expand_paired(cycles);
                let sets = member_sets(qs, &expanded);
                let links = routing::links_used(&expanded, false);
                rows.push(evaluate_solution(cfg, &mapped, strategy, &expanded, &sets, links));
            }
            Strategy::Forward | Strategy::Random | Strategy::Greedy => {
                let (qs, cycles) = single.as_ref().expect("single base resolved");
                let mut directed = cycles.clone();
                let sets = member_sets(qs, &directed);
                let scope = if cfg.count_passthrough {
                    PairScope::AllOnCycle
                } else {
                    PairScope::MembersOnly(&sets)
                };
                let n = mapped.node_count();
                let assignment = match strategy {
                    Strategy::Forward => direction::assign_forward_with(n, &directed, scope),
                    Strategy::Random => direction::assign_random_with(
                        n,
                        &directed,
                        rng::derive_seed(cfg.seed, "strategy:random", mapping_id as u64),
                        scope,
                    ),
                    Strategy::Greedy => {
                        direction::initial_cycle_direction_with(n, &directed, scope, &mut |_, _| {})
                            .and_then(|(initial, pc)| {
                                direction::greedy_update_cycle_direction_with(
                                    &directed,
                                    &initial,
                                    pc,
                                    scope,
                                    &mut |_, _| {},
                                )
                            })
                            .map(|(updated, _)| updated)
                    }
                    Strategy::Paired => unreachable!(),
                }
                .expect("solutions routed from a quorum set are never empty");
                assignment.apply_to(&mut directed);
                let links = routing::links_used(&directed, false);
                rows.push(evaluate_solution(cfg, &mapped, strategy, &directed, &sets, links));
            }
        }
    }
    MappingOutcome {
        mapping_id,
        rows,
        skipped: None,
    }
}

/// Pure sweep over all mappings; parallel per mapping, output in mapping
/// order.
pub fn run_mappings(
    cfg: &ExperimentConfig,
    topo: &Topology,
    single_base: Option<&QuorumBase>,
    paired_base: Option<&QuorumBase>,
) -> Vec<MappingOutcome> {
    let mappings = topology::generate_mappings(topo.node_count(), cfg.mappings, cfg.seed);
    exec::map_indices(cfg.mappings, |id| {
        one_mapping(cfg, topo, &mappings[id], id, single_base, paired_base)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// 95% half-width under the normal approximation:
    /// `1.96 * sample_sd / sqrt(samples)`; 0 for fewer than two samples.
    pub ci_half: f64,
}

fn stat(values: &[f64]) -> Stat {
    let n = values.len();
    if n == 0 {
        return Stat { mean: f64::NAN, ci_half: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Stat { mean, ci_half: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    Stat {
        mean,
        ci_half: 1.96 * var.sqrt() / (n as f64).sqrt(),
    }
}

#[derive(Debug, Clone)]
pub struct StrategyAggregate {
    pub strategy: Strategy,
    pub samples: usize,
    pub links_used: Stat,
    pub missing_pct: Stat,
    pub fault_free_missing: Stat,
    pub mean_fault_missing: Option<Stat>,
    pub coverage_pct: Option<Stat>,
    pub compensated_missing: Option<Stat>,
}

#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub network: String,
    pub samples: usize,
    pub skipped: usize,
    pub strategies: Vec<StrategyAggregate>,
}

pub fn aggregate(
    network: &str,
    strategies: &[Strategy],
    outcomes: &[MappingOutcome],
) -> AggregateResult {
    let samples = outcomes.iter().filter(|o| o.skipped.is_none()).count();
    let skipped = outcomes.len() - samples;
    let per_strategy = strategies
        .iter()
        .map(|&strategy| {
            let rows: Vec<&StrategyRow> = outcomes
                .iter()
                .filter(|o| o.skipped.is_none())
                .flat_map(|o| o.rows.iter().filter(|r| r.strategy == strategy))
                .collect();
            let collect = |f: &dyn Fn(&StrategyRow) -> f64| -> Vec<f64> {
                rows.iter().map(|r| f(r)).collect()
            };
            let optional = |f: &dyn Fn(&StrategyRow) -> Option<f64>| -> Option<Stat> {
                let values: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
                (values.len() == rows.len() && !values.is_empty()).then(|| stat(&values))
            };
            StrategyAggregate {
                strategy,
                samples: rows.len(),
                links_used: stat(&collect(&|r| r.links_used as f64)),
                missing_pct: stat(&collect(&|r| r.missing_pct)),
                fault_free_missing: stat(&collect(&|r| r.fault_free_missing as f64)),
                mean_fault_missing: optional(&|r| r.mean_fault_missing),
                coverage_pct: optional(&|r| r.coverage_pct),
                compensated_missing: optional(&|r| r.compensated_missing),
            }
        })
        .collect();
    AggregateResult {
        network: network.to_string(),
        samples,
        skipped,
        strategies: per_strategy,
    }
}

/// One metric's greedy-vs-forward change, negative for reductions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionRow {
    pub metric: &'static str,
    pub forward: f64,
    pub greedy: f64,
    /// `100 * (greedy - forward) / forward`; `None` when forward is 0.
    pub reduction_pct: Option<f64>,
}

impl ReductionRow {
    pub fn formatted(&self) -> String {
        match self.reduction_pct {
            Some(pct) => format!("{pct:.2}"),
            None => "n/a".to_string(),
        }
    }
}

/// Greedy against the forward baseline for fault-free and under-fault
/// missing pairs.
pub fn compare_strategies(agg: &AggregateResult) -> Result<Vec<ReductionRow>, ExperimentError> {
    let find = |s: Strategy| agg.strategies.iter().find(|a| a.strategy == s);
    let (forward, greedy) = match (find(Strategy::Forward), find(Strategy::Greedy)) {
        (Some(f), Some(g)) => (f, g),
        (f, g) => {
            let mut missing = Vec::new();
            if f.is_none() {
                missing.push(Strategy::Forward);
            }
            if g.is_none() {
                missing.push(Strategy::Greedy);
            }
            return Err(ExperimentError::MissingStrategy { missing });
        }
    };
    if forward.samples != greedy.samples {
        return Err(ExperimentError::MismatchedSamples {
            counts: vec![
                (Strategy::Forward, forward.samples),
                (Strategy::Greedy, greedy.samples),
            ],
        });
    }
    let row = |metric: &'static str, f: f64, g: f64| ReductionRow {
        metric,
        forward: f,
        greedy: g,
        reduction_pct: (f != 0.0).then(|| 100.0 * (g - f) / f),
    };
    let mut rows = vec![row(
        "fault_free_missing_pct",
        forward.missing_pct.mean,
        greedy.missing_pct.mean,
    )];
    if let (Some(f), Some(g)) = (&forward.mean_fault_missing, &greedy.mean_fault_missing) {
        rows.push(row("mean_fault_missing", f.mean, g.mean));
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-mapping CSV: one row per (mapping, strategy).
pub fn mappings_csv(network: &str, outcomes: &[MappingOutcome]) -> String {
    let mut out = format!("# network={network}\n");
    out.push_str(
        "mapping_id,strategy,links_used,fault_free_missing,mean_missing,coverage_pct,compensated_missing\n",
    );
    for o in outcomes {
        for r in &o.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                o.mapping_id,
                r.strategy,
                r.links_used,
                r.fault_free_missing,
                fmt_opt(r.mean_fault_missing),
                fmt_opt(r.coverage_pct),
                fmt_opt(r.compensated_missing),
            ));
        }
    }
    out
}

/// Per-fault CSV: one row per (mapping, strategy, failed hop).
pub fn faults_csv(network: &str, outcomes: &[MappingOutcome]) -> String {
    let mut out = format!("# network={network}\n");
    out.push_str("mapping_id,strategy,failed_edge_u,failed_edge_v,missing_count\n");
    for o in outcomes {
        for r in &o.rows {
            for &(u, v, count) in &r.fault_rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    o.mapping_id, r.strategy, u, v, count
                ));
            }
        }
    }
    out
}

fn fmt_stat(s: &Stat) -> String {
    format!("{},{}", s.mean, s.ci_half)
}

fn fmt_stat_opt(s: &Option<Stat>) -> String {
    match s {
        Some(s) => fmt_stat(s),
        None => ",".to_string(),
    }
}

/// Aggregate summary CSV.
pub fn summary_csv(agg: &AggregateResult) -> String {
    let mut out = format!(
        "# network={} samples={} skipped={}\n",
        agg.network, agg.samples, agg.skipped
    );
    out.push_str(
        "strategy,samples,links_used_mean,links_used_ci,fault_free_missing_pct_mean,fault_free_missing_pct_ci,mean_fault_missing_mean,mean_fault_missing_ci,coverage_pct_mean,coverage_pct_ci,compensated_missing_mean,compensated_missing_ci\n",
    );
    for s in &agg.strategies {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.strategy,
            s.samples,
            fmt_stat(&s.links_used),
            fmt_stat(&s.missing_pct),
            fmt_stat_opt(&s.mean_fault_missing),
            fmt_stat_opt(&s.coverage_pct),
            fmt_stat_opt(&s.compensated_missing),
        ));
    }
    out
}

/// Columnar plot data: coverage percentage and CI half-width per strategy.
/// Logs (stderr) when a paired row unexpectedly covers less than greedy.
pub fn emit_plot_data(agg: &AggregateResult) -> String {
    let mut out = String::from("# network strategy coverage_pct ci_half\n");
    for s in &agg.strategies {
        if let Some(cov) = &s.coverage_pct {
            out.push_str(&format!(
                "{} {} {:.4} {:.4}\n",
                agg.network, s.strategy, cov.mean, cov.ci_half
            ));
        }
    }
    let coverage = |strategy: Strategy| {
        agg.strategies
            .iter()
            .find(|s| s.strategy == strategy)
            .and_then(|s| s.coverage_pct.as_ref())
            .map(|c| c.mean)
    };
    if let (Some(paired), Some(greedy)) = (coverage(Strategy::Paired), coverage(Strategy::Greedy)) {
        if paired < greedy {
            eprintln!(
                "warning: paired coverage {paired:.4} below greedy {greedy:.4} on {}",
                agg.network
            );
        }
    }
    out
}

fn read_file(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn resolve_base(cfg: &ExperimentConfig, n: usize, r: usize) -> Result<QuorumBase, ExperimentError> {
    match &cfg.quorum_source {
        QuorumSource::Search { strategy, budget } => Ok(quorum::find_min_redundant_base(
            n,
            r,
            *strategy,
            rng::derive_seed(cfg.seed, "quorum-search", r as u64),
            *budget,
        )?),
        QuorumSource::File(path) => {
            let bases = quorum::load_bases(&read_file(path)?)?;
            quorum::find_base(&bases, n, r)
                .cloned()
                .ok_or_else(|| ExperimentError::MissingBase {
                    n,
                    r,
                    path: path.clone(),
                })
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Full run: resolve inputs, sweep mappings, emit artifacts, aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult, ExperimentError> {
    let text = read_file(&cfg.topology_path)?;
    let name = cfg
        .topology_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let topo = topology::load_topology(&text)?.with_name(name);

    let needs_single = cfg
        .strategies
        .iter()
        .any(|&s| s != Strategy::Paired);
    let single_base = needs_single
        .then(|| resolve_base(cfg, topo.node_count(), cfg.redundancy))
        .transpose()?;
    let paired_base = cfg
        .strategies
        .contains(&Strategy::Paired)
        .then(|| resolve_base(cfg, topo.node_count(), 1))
        .transpose()?;

    let outcomes = run_mappings(cfg, &topo, single_base.as_ref(), paired_base.as_ref());
    for o in &outcomes {
        if let Some(reason) = &o.skipped {
            eprintln!("warning: mapping {} skipped: {reason}", o.mapping_id);
        }
    }

    let agg = aggregate(topo.name(), &cfg.strategies, &outcomes);
    fs::create_dir_all(&cfg.output_dir).map_err(|source| ExperimentError::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    write_file(
        &cfg.output_dir.join("mappings.csv"),
        &mappings_csv(topo.name(), &outcomes),
    )?;
    if cfg.fault_sweep {
        write_file(
            &cfg.output_dir.join("faults.csv"),
            &faults_csv(topo.name(), &outcomes),
        )?;
        write_file(&cfg.output_dir.join("plotdata.txt"), &emit_plot_data(&agg))?;
    }
    write_file(&cfg.output_dir.join("summary.csv"), &summary_csv(&agg))?;
    Ok(agg)
}

/// Rebuilds the aggregate from an output directory's per-mapping CSV.
pub fn report_from_dir(dir: &Path) -> Result<AggregateResult, ExperimentError> {
    let path = dir.join("mappings.csv");
    let text = read_file(&path)?;
    let display = path.display().to_string();
    let mut network = String::new();
    let mut outcomes: Vec<MappingOutcome> = Vec::new();
    let mut strategies: Vec<Strategy> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("# network=") {
            network = rest.to_string();
            continue;
        }
        if line.is_empty() || line.starts_with('#') || line.starts_with("mapping_id") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(ExperimentError::Csv {
                path: display,
                line: idx + 1,
                reason: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let err = |reason: String| ExperimentError::Csv {
            path: display.clone(),
            line: idx + 1,
            reason,
        };
        let mapping_id: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad mapping_id {:?}", fields[0])))?;
        let strategy: Strategy = fields[1].parse().map_err(err)?;
        let links_used: usize = fields[2]
            .parse()
            .map_err(|_| err(format!("bad links_used {:?}", fields[2])))?;
        let fault_free_missing: usize = fields[3]
            .parse()
            .map_err(|_| err(format!("bad fault_free_missing {:?}", fields[3])))?;
        let parse_opt = |field: &str| -> Result<Option<f64>, ExperimentError> {
            if field.is_empty() {
                Ok(None)
            } else {
                field
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| err(format!("bad float {field:?}")))
            }
        };
        let mean_fault_missing = parse_opt(fields[4])?;
        let coverage_pct = parse_opt(fields[5])?;
        let compensated_missing = parse_opt(fields[6])?;

        if !strategies.contains(&strategy) {
            strategies.push(strategy);
        }
        if outcomes.last().map(|o| o.mapping_id) != Some(mapping_id) {
            outcomes.push(MappingOutcome {
                mapping_id,
                rows: Vec::new(),
                skipped: None,
            });
        }
        // Percentage universe is unknown without N; reconstruct it from the
        // coverage identity when fault data exists, else leave counts only.
        outcomes.last_mut().expect("just pushed").rows.push(StrategyRow {
            strategy,
            links_used,
            fault_free_missing,
            missing_pct: f64::NAN,
            mean_fault_missing,
            coverage_pct,
            compensated_missing,
            fault_rows: Vec::new(),
        });
    }
    // Recover N from the coverage identity on any row with fault data:
    // coverage_pct = 100 * (1 - mean_missing / (n(n-1))).
    let n = outcomes
        .iter()
        .flat_map(|o| o.rows.iter())
        .find_map(|r| match (r.mean_fault_missing, r.coverage_pct) {
            (Some(mean), Some(cov)) if cov < 100.0 => {
                let total = mean / (1.0 - cov / 100.0);
                Some(total.round() as usize)
            }
            _ => None,
        });
    for o in &mut outcomes {
        for r in &mut o.rows {
            r.missing_pct = match n {
                Some(total) if total > 0 => 100.0 * r.fault_free_missing as f64 / total as f64,
                _ => r.fault_free_missing as f64,
            };
        }
    }
    Ok(aggregate(&network, &strategies, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_config(dir: &Path, out: &Path) -> ExperimentConfig {
        let topo_path = dir.join("triangle.txt");
        fs::write(&topo_path, "3\n0 1\n1 2\n2 0\n").unwrap();
        ExperimentConfig {
            topology_path: topo_path,
            redundancy: 1,
            strategies: vec![Strategy::Forward],
            mappings: 1,
            seed: 1,
            quorum_source: QuorumSource::Search {
                strategy: SearchStrategy::Exhaustive,
                budget: DEFAULT_SEARCH_BUDGET,
            },
            fault_sweep: true,
            compensation: false,
            fault_model: FaultModel::WholeCycle,
            count_passthrough: true,
            output_dir: out.to_path_buf(),
        }
    }

    #[test]
    fn triangle_forward_uses_nine_links() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = triangle_config(tmp.path(), &tmp.path().join("out"));
        let agg = run_experiment(&cfg).unwrap();
        assert_eq!(agg.samples, 1);
        assert_eq!(agg.skipped, 0);
        let forward = &agg.strategies[0];
        assert_eq!(forward.links_used.mean, 9.0);
    }

    #[test]
    fn config_parses_defaults_and_overrides() {
        let cfg = parse_config(
            "# demo\ntopology = nets/x.txt\noutput_dir = out\nstrategies = forward , greedy\nmappings = 5\nseed = 9\nfault_model = segment\ncount_passthrough = false\n",
        )
        .unwrap();
        assert_eq!(cfg.topology_path, PathBuf::from("nets/x.txt"));
        assert_eq!(cfg.strategies, vec![Strategy::Forward, Strategy::Greedy]);
        assert_eq!(cfg.mappings, 5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.fault_model, FaultModel::SegmentSurvival);
        assert!(!cfg.count_passthrough);
        assert!(cfg.fault_sweep);
        assert_eq!(cfg.redundancy, 2);
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(parse_config("").is_err());
        assert!(parse_config("topology = a\n").is_err());
        assert!(parse_config("topology = a\noutput_dir = b\nstrategies =\n").is_err());
        assert!(parse_config("topology = a\noutput_dir = b\nmappings = 0\n").is_err());
        assert!(parse_config("topology = a\noutput_dir = b\nbogus = 1\n").is_err());
        assert!(
            parse_config("topology = a\noutput_dir = b\nstrategies = greedy,greedy\n").is_err()
        );
    }

    #[test]
    fn reruns_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = triangle_config(tmp.path(), &tmp.path().join("one"));
        cfg.strategies = vec![Strategy::Paired, Strategy::Forward, Strategy::Random, Strategy::Greedy];
        cfg.mappings = 3;
        cfg.compensation = true;
        run_experiment(&cfg).unwrap();
        let mut again = cfg.clone();
        again.output_dir = tmp.path().join("two");
        run_experiment(&again).unwrap();
        for file in ["mappings.csv", "faults.csv", "summary.csv", "plotdata.txt"] {
            let a = fs::read(cfg.output_dir.join(file)).unwrap();
            let b = fs::read(again.output_dir.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between reruns");
        }
    }

    #[test]
    fn csv_aggregates_match_summary() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = triangle_config(tmp.path(), &tmp.path().join("out"));
        cfg.strategies = vec![Strategy::Forward, Strategy::Greedy];
        cfg.mappings = 4;
        let agg = run_experiment(&cfg).unwrap();
        let reread = report_from_dir(&cfg.output_dir).unwrap();
        assert_eq!(reread.samples, agg.samples);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
        for (a, b) in agg.strategies.iter().zip(&reread.strategies) {
            assert_eq!(a.strategy, b.strategy);
            assert!(close(a.links_used.mean, b.links_used.mean));
            let (fa, fb) = (
                a.mean_fault_missing.as_ref().unwrap(),
                b.mean_fault_missing.as_ref().unwrap(),
            );
            assert!(close(fa.mean, fb.mean));
            let (ca, cb) = (a.coverage_pct.as_ref().unwrap(), b.coverage_pct.as_ref().unwrap());
            assert!(close(ca.mean, cb.mean));
            assert!((ca.ci_half - cb.ci_half).abs() <= 1e-9);
        }
    }

    #[test]
    fn reduction_formatting() {
        let make = |strategy, missing: f64, fault: f64| StrategyAggregate {
            strategy,
            samples: 20,
            links_used: Stat { mean: 0.0, ci_half: 0.0 },
            missing_pct: Stat { mean: missing, ci_half: 0.0 },
            fault_free_missing: Stat { mean: 0.0, ci_half: 0.0 },
            mean_fault_missing: Some(Stat { mean: fault, ci_half: 0.0 }),
            coverage_pct: None,
            compensated_missing: None,
        };
        let agg = AggregateResult {
            network: "x".into(),
            samples: 20,
            skipped: 0,
            strategies: vec![
                make(Strategy::Forward, 0.95, 5.0),
                make(Strategy::Greedy, 0.02, 3.0),
            ],
        };
        let rows = compare_strategies(&agg).unwrap();
        assert_eq!(rows.len(), 2);
        let first = rows[0].reduction_pct.unwrap();
        assert!((first - -97.9).abs() < 0.1, "got {first}");
        assert!((rows[1].reduction_pct.unwrap() - -40.0).abs() < 1e-9);

        let identical = AggregateResult {
            strategies: vec![
                make(Strategy::Forward, 0.5, 1.0),
                make(Strategy::Greedy, 0.5, 1.0),
            ],
            ..agg.clone()
        };
        assert_eq!(
            compare_strategies(&identical).unwrap()[0].reduction_pct,
            Some(0.0)
        );

        let zero_forward = AggregateResult {
            strategies: vec![
                make(Strategy::Forward, 0.0, 1.0),
                make(Strategy::Greedy, 0.0, 1.0),
            ],
            ..agg.clone()
        };
        let rows = compare_strategies(&zero_forward).unwrap();
        assert_eq!(rows[0].reduction_pct, None);
        assert_eq!(rows[0].formatted(), "n/a");
    }

    #[test]
    fn compare_requires_both_strategies() {
        let agg = AggregateResult {
            network: "x".into(),
            samples: 0,
            skipped: 0,
            strategies: vec![],
        };
        assert!(matches!(
            compare_strategies(&agg),
            Err(ExperimentError::MissingStrategy { .. })
        ));
    }

    #[test]
    fn plot_data_has_row_per_strategy_with_coverage() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = triangle_config(tmp.path(), &tmp.path().join("out"));
        cfg.strategies = vec![Strategy::Paired, Strategy::Greedy];
        let agg = run_experiment(&cfg).unwrap();
        let plot = emit_plot_data(&agg);
        let rows: Vec<&str> = plot.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 2);
        for row in rows {
            let coverage: f64 = row.split_whitespace().nth(2).unwrap().parse().unwrap();
            assert!((0.0..=100.0).contains(&coverage));
        }
    }
}
