//! The five subcommands. Each writes its outputs into `output_dir` and
//! reports whether it ran clean or produced a finding.

use std::collections::BTreeMap;
use std::fs;

use imatch_core::dynamics::{
    bridge_instance, check_nested_rays, cost, extract_matching, random_kmatching, run_dynamics, BridgeOutcome,
    DynamicsError, KMatching, RandomSpec, StepRecord,
};
use imatch_core::graph::{random_unit_rational, ComponentView, GEdge, GraphError, GraphFinding, SampleReport};
use imatch_core::pathcert::{verify_lemma as run_lemma, CertError, LemmaReport};
use imatch_core::{make_alpha, AlgebraicPoint, GVertex, SchreierGraph, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::figure::{figure_data, parse_metadata, render_svg, FigureData};
use crate::{
    write_atomic, write_json, CliError, Header, RunConfig, Status, DYNAMICS_FILE, EXPLORE_FILE, FIGURE_FILE,
    FINAL_MATCHINGS_FILE, LEMMA_FILE, REPORT_FILE, TRACES_FILE,
};

fn graph(config: &RunConfig) -> Result<SchreierGraph, CliError> {
    let ctx = make_alpha(config.alpha).map_err(|e| CliError::Usage(format!("alpha: {e}")))?;
    Ok(SchreierGraph::new(ctx))
}

fn status_of(findings: usize) -> Status {
    if findings == 0 {
        Status::Clean
    } else {
        Status::Finding
    }
}

#[derive(Debug, Serialize)]
struct VertexDegree {
    vertex: GVertex,
    degree: usize,
}

#[derive(Debug, Serialize)]
struct ParitySummary {
    /// Sampled components explored to the end within budget.
    finite_components: usize,
    statement: &'static str,
}

#[derive(Debug, Serialize)]
struct ExploreOutput<'a> {
    header: Header<'a>,
    status: &'static str,
    start: GVertex,
    degree: usize,
    neighbors: Vec<GEdge>,
    budget: usize,
    component: Option<ComponentView<GVertex>>,
    degree_one_vertices: Vec<VertexDegree>,
    sample: Option<SampleReport>,
    parity: ParitySummary,
    findings: Vec<GraphFinding>,
}

/// Moves a graph finding into `findings`; other errors abort the command.
fn catch_finding<T>(r: Result<T, GraphError>, findings: &mut Vec<GraphFinding>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(GraphError::Finding(f)) => {
            findings.push(*f);
            Ok(None)
        }
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

pub fn explore(config: &RunConfig, point: &str, side: &str, budget: Option<usize>) -> Result<Status, CliError> {
    let point: AlgebraicPoint = point.parse().map_err(|e| CliError::Usage(format!("--point: {e}")))?;
    let side: Side = side.parse().map_err(|e| CliError::Usage(format!("--side: {e}")))?;
    let graph = graph(config)?;
    let start = GVertex::new(side, point);
    if !graph.contains(&start) {
        return Err(CliError::Usage(format!("{start} is not a vertex of G")));
    }
    let budget = budget.unwrap_or(config.bfs_budget);
    let internal = |e: GraphError| CliError::Usage(e.to_string());
    let degree = graph.degree(&start).map_err(internal)?;
    let neighbors = graph.neighbors(&start).map_err(internal)?;

    let mut findings = Vec::new();
    let component = catch_finding(graph.explore_component(&start, budget), &mut findings)?;
    let sample = catch_finding(
        graph.classify_sample(config.explore_samples, budget, config.seed),
        &mut findings,
    )?;

    let degree_one_vertices = graph
        .degree_one_vertices()
        .into_iter()
        .map(|vertex| {
            Ok(VertexDegree {
                degree: graph.degree(&vertex).map_err(internal)?,
                vertex,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let finite_components = sample.as_ref().map_or(0, |s| s.tally.finite())
        + usize::from(
            component
                .as_ref()
                .is_some_and(|c| matches!(c.kind.name(), "even_cycle" | "finite_path")),
        );
    let statement = if !findings.is_empty() {
        "a fully explored component violated parity"
    } else if finite_components == 0 {
        "no component was fully explored within budget"
    } else {
        "every fully explored component is an even cycle or a path with an odd number of edges"
    };
    let status = status_of(findings.len());
    let output = ExploreOutput {
        header: Header::new("explore", config),
        status: status.name(),
        start,
        degree,
        neighbors,
        budget,
        component,
        degree_one_vertices,
        sample,
        parity: ParitySummary {
            finite_components,
            statement,
        },
        findings,
    };
    write_json(&config.output_dir, EXPLORE_FILE, &output)?;
    Ok(status)
}

#[derive(Debug, Serialize)]
struct LemmaOutput<'a> {
    header: Header<'a>,
    status: &'static str,
    report: LemmaReport,
}

pub fn verify_lemma(config: &RunConfig) -> Result<Status, CliError> {
    let graph = graph(config)?;
    let report = match run_lemma(
        &graph,
        config.ball_radius,
        config.samples,
        config.seed,
        config.bfs_budget,
    ) {
        Ok(report) => report,
        Err(CertError::Group(e)) => return Err(CliError::Usage(e.to_string())),
        Err(CertError::Finding(f)) => LemmaReport {
            violations: vec![*f],
            ..LemmaReport::default()
        },
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let status = status_of(report.violations.len());
    let output = LemmaOutput {
        header: Header::new("verify-lemma", config),
        status: status.name(),
        report,
    };
    write_json(&config.output_dir, LEMMA_FILE, &output)?;
    Ok(status)
}

/// Minimal evidence for a failed dynamics check.
#[derive(Debug, Serialize)]
struct Witness {
    check: &'static str,
    instance: usize,
    k: u32,
    seed: u64,
    detail: Value,
}

#[derive(Debug, Serialize)]
struct InstanceRecord {
    instance: usize,
    k: u32,
    seed: u64,
    initial_cost: u64,
    iterations: usize,
    total_s: u64,
    final_cost: u64,
    nested_rays: bool,
    extracted_standard: bool,
}

#[derive(Debug, Default, Serialize)]
struct KStats {
    instances: usize,
    steps: usize,
    total_initial_cost: u64,
    max_initial_cost: u64,
    total_iterations: usize,
    max_iterations: usize,
    total_s: u64,
}

#[derive(Debug, Default, Serialize)]
struct BridgeSummary {
    requested: usize,
    completed: usize,
    skipped: usize,
    max_displacement: i64,
    max_bridge_k: u32,
    outcomes: Vec<BridgeOutcome>,
}

#[derive(Debug, Serialize)]
struct DynamicsSummary {
    instances: usize,
    window: usize,
    k_values: Vec<u32>,
    transpositions: usize,
    steps_checked: usize,
    per_k: BTreeMap<u32, KStats>,
    bridge: BridgeSummary,
}

#[derive(Debug, Serialize)]
struct DynamicsOutput<'a> {
    header: Header<'a>,
    status: &'static str,
    summary: DynamicsSummary,
    findings: Vec<Witness>,
    instances: Vec<InstanceRecord>,
}

#[derive(Debug, Serialize)]
struct FinalMatching {
    instance: usize,
    matching: KMatching,
}

fn error_detail(e: &DynamicsError) -> Value {
    match e {
        DynamicsError::Finding(f) => serde_json::to_value(f).expect("findings serialize"),
        other => Value::String(other.to_string()),
    }
}

fn error_check(e: &DynamicsError) -> &'static str {
    match e {
        DynamicsError::Finding(_) => "improve_step",
        DynamicsError::IterationCap(_) => "termination_bound",
        DynamicsError::SNotEmpty(_) => "extraction",
        _ => "matching_validity",
    }
}

fn pairs_field(step: &StepRecord) -> String {
    let pairs: Vec<String> = step.rewired_pairs.iter().map(|(_, a, b)| format!("{a}:{b}")).collect();
    pairs.join(" ")
}

pub fn dynamics(config: &RunConfig) -> Result<Status, CliError> {
    let d = &config.dynamics;
    let transpositions = d.transpositions.unwrap_or(d.window);
    let mut traces = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("writing traces: {e}"));
    traces
        .write_record([
            "instance",
            "k",
            "seed",
            "n",
            "S_size",
            "cost",
            "cost_after",
            "rewired_pairs",
        ])
        .map_err(csv_err)?;

    let mut findings = Vec::new();
    let mut records = Vec::new();
    let mut finals = Vec::new();
    let mut per_k: BTreeMap<u32, KStats> = BTreeMap::new();
    let mut steps_checked = 0;
    for instance in 0..d.instances {
        let k = d.k[instance % d.k.len()];
        let seed = config.seed.wrapping_add(instance as u64);
        let witness = |check, detail| Witness {
            check,
            instance,
            k,
            seed,
            detail,
        };
        let spec = RandomSpec {
            paths: 1,
            window: d.window,
            k,
            transpositions,
        };
        let m0 = random_kmatching(&spec, seed).map_err(|e| CliError::Usage(e.to_string()))?;
        let c0 = cost(&m0);
        let (fin, trace) = match run_dynamics(&m0, c0 as usize) {
            Ok(done) => done,
            Err(e) => {
                findings.push(witness(error_check(&e), error_detail(&e)));
                continue;
            }
        };
        for step in &trace.steps {
            traces
                .write_record([
                    instance.to_string(),
                    k.to_string(),
                    seed.to_string(),
                    step.n.to_string(),
                    step.s_size.to_string(),
                    step.cost.to_string(),
                    step.cost_after.to_string(),
                    pairs_field(step),
                ])
                .map_err(csv_err)?;
        }
        steps_checked += trace.steps.len();
        if trace.total_s() > c0 || trace.iterations() as u64 > c0 {
            let detail = format!(
                "iterations {}, Σ|S| {}, initial cost {c0}",
                trace.iterations(),
                trace.total_s()
            );
            findings.push(witness("termination_bound", Value::String(detail)));
        }
        if fin.windows() != m0.windows() {
            findings.push(witness(
                "vertex_set",
                Value::String("windows changed during the run".into()),
            ));
        }
        let nested = check_nested_rays(&fin);
        if !nested {
            findings.push(witness(
                "nested_rays",
                serde_json::to_value(&fin).expect("matching serializes"),
            ));
        }
        let extracted_standard = match extract_matching(&fin) {
            Ok(e) => e.is_standard(),
            Err(e) => {
                findings.push(witness("extraction", error_detail(&e)));
                false
            }
        };
        if nested && !extracted_standard {
            findings.push(witness(
                "extraction",
                Value::String("extracted matching is not standard".into()),
            ));
        }
        let stats = per_k.entry(k).or_default();
        stats.instances += 1;
        stats.steps += trace.steps.len();
        stats.total_initial_cost += c0;
        stats.max_initial_cost = stats.max_initial_cost.max(c0);
        stats.total_iterations += trace.iterations();
        stats.max_iterations = stats.max_iterations.max(trace.iterations());
        stats.total_s += trace.total_s();
        records.push(InstanceRecord {
            instance,
            k,
            seed,
            initial_cost: c0,
            iterations: trace.iterations(),
            total_s: trace.total_s(),
            final_cost: trace.final_cost,
            nested_rays: nested,
            extracted_standard,
        });
        finals.push(FinalMatching {
            instance,
            matching: fin,
        });
    }

    let bridge = bridge_suite(config, transpositions, &mut findings)?;
    let status = status_of(findings.len());
    let output = DynamicsOutput {
        header: Header::new("dynamics", config),
        status: status.name(),
        summary: DynamicsSummary {
            instances: d.instances,
            window: d.window,
            k_values: d.k.clone(),
            transpositions,
            steps_checked,
            per_k,
            bridge,
        },
        findings,
        instances: records,
    };
    let csv_bytes = traces
        .into_inner()
        .map_err(|e| CliError::Usage(format!("writing traces: {e}")))?;
    write_atomic(&config.output_dir, TRACES_FILE, &csv_bytes)?;
    let mut final_bytes = serde_json::to_vec(&finals).expect("matchings serialize");
    final_bytes.push(b'\n');
    write_atomic(&config.output_dir, FINAL_MATCHINGS_FILE, &final_bytes)?;
    write_json(&config.output_dir, DYNAMICS_FILE, &output)?;
    Ok(status)
}

/// Matchings assembled from group-element pieces on segments of `G`
/// through seeded random `I`-points.
fn bridge_suite(
    config: &RunConfig,
    transpositions: usize,
    findings: &mut Vec<Witness>,
) -> Result<BridgeSummary, CliError> {
    let d = &config.dynamics;
    let graph = graph(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut summary = BridgeSummary {
        requested: d.bridge_instances,
        ..BridgeSummary::default()
    };
    for j in 0..d.bridge_instances {
        let k = d.k[j % d.k.len()];
        let seed = config.seed.wrapping_add(j as u64);
        let start = GVertex::i(random_unit_rational(&mut rng));
        let spec = RandomSpec {
            paths: 1,
            window: d.window,
            k,
            transpositions,
        };
        let budget = d.window + 4 * (k as usize + 1) + 4;
        match bridge_instance(&graph, &start, budget, &spec, seed) {
            Ok(Some(outcome)) => {
                summary.completed += 1;
                summary.max_displacement = summary.max_displacement.max(outcome.max_displacement);
                summary.max_bridge_k = summary.max_bridge_k.max(outcome.bridge_k);
                if !outcome.extracted_standard {
                    let detail = serde_json::to_value(&outcome).expect("outcome serializes");
                    findings.push(Witness {
                        check: "bridge_extraction",
                        instance: j,
                        k,
                        seed,
                        detail,
                    });
                }
                summary.outcomes.push(outcome);
            }
            Ok(None) => summary.skipped += 1,
            Err(e) => findings.push(Witness {
                check: "bridge",
                instance: j,
                k,
                seed,
                detail: error_detail(&e),
            }),
        }
    }
    Ok(summary)
}

pub fn figure(config: &RunConfig) -> Result<Status, CliError> {
    let graph = graph(config)?;
    let data = figure_data(&graph);
    let svg = render_svg(&graph, &data);
    write_atomic(&config.output_dir, FIGURE_FILE, svg.as_bytes())?;
    Ok(if data.is_faithful() {
        Status::Clean
    } else {
        Status::Finding
    })
}

#[derive(Debug, Serialize)]
struct ReportOutput<'a> {
    header: Header<'a>,
    status: &'static str,
    explore: Value,
    lemma: Value,
    dynamics: Value,
    figure: FigureData,
}

pub fn report(config: &RunConfig) -> Result<Status, CliError> {
    let dir = &config.output_dir;
    let read = |name: &str| {
        fs::read_to_string(dir.join(name))
            .map_err(|e| CliError::Usage(format!("missing input {}: {e}", dir.join(name).display())))
    };
    let json = |name: &str| -> Result<Value, CliError> {
        serde_json::from_str(&read(name)?).map_err(|e| CliError::Usage(format!("{name} is not valid JSON: {e}")))
    };
    let explore = json(EXPLORE_FILE)?;
    let lemma = json(LEMMA_FILE)?;
    let dynamics = json(DYNAMICS_FILE)?;
    let figure = parse_metadata(&read(FIGURE_FILE)?)
        .ok_or_else(|| CliError::Usage(format!("{FIGURE_FILE} carries no geometry metadata")))?;
    let clean = [&explore, &lemma, &dynamics].iter().all(|v| v["status"] == "clean") && figure.is_faithful();
    let status = if clean { Status::Clean } else { Status::Finding };
    let output = ReportOutput {
        header: Header::new("report", config),
        status: status.name(),
        explore,
        lemma,
        dynamics,
        figure,
    };
    write_json(dir, REPORT_FILE, &output)?;
    Ok(status)
}
