//! `odd-assure` command-line front end.
//!
//! Exit status: 0 on success, 1 when inputs are well-formed but defective
//! (validation defects, axiom violations, missing priors, impossible
//! evidence), 2 on unreadable or malformed input.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use odd_assure::bayes::{self, mean_variance, BayesNet, BnError, EvidenceSet, Posterior};
use odd_assure::confidence::{parse_state_records, parse_template_config, scenario_coverage, ScenarioSpec};
use odd_assure::hara::{check_oper_conditions, parse_hara, validate_fta, FtaError};
use odd_assure::monitor::{
    load_bundle, parse_observation, parse_script, report_csv_header, report_csv_row, report_json_line,
    synth_trace, Monitor, MonitorOptions, OodPolicy, OrderPolicy,
};
use odd_assure::odd::{check_odd_document, parse_odd_spec, OddError, OddSpec};
use odd_assure::ontology::{
    bn_triples, check_axioms, export_graph, hara_triples, import_graph, link_constraints, odd_triples,
    parse_pattern, TripleGraph,
};
use odd_assure::refinement::{extract_rules, fit_tree, parse_traces, refine_boundaries, TreeParams};

#[derive(Parser)]
#[command(name = "odd-assure", version, about = "ODD-aware hazard and confidence modelling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural validators over ODD, HARA and network files.
    Validate {
        #[arg(long)]
        odd: PathBuf,
        #[arg(long)]
        hara: Option<PathBuf>,
        #[arg(long)]
        bn: Option<PathBuf>,
    },
    /// Compile a hazard's fault tree into a network with the hazard as objective.
    CompileFta {
        #[arg(long)]
        hara: PathBuf,
        /// JSON object mapping each atomic event to its occurrence probability.
        #[arg(long)]
        priors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Hazard event id; defaults to the first hazard.
        #[arg(long)]
        hazard: Option<String>,
    },
    /// Print a posterior distribution, one `P(node=state|evidence)` line per state.
    Infer(InferArgs),
    /// Scenario coverage of a dataset: fraction of rows matching every condition.
    Coverage {
        #[arg(long)]
        odd: PathBuf,
        /// CSV whose header names ODD classes; cells are raw values or state names.
        #[arg(long)]
        data: PathBuf,
        /// Conditions as `Class=State`, comma separated.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "scenario")]
        id: String,
    },
    /// Learn in-ODD rules from labeled traces and propose attribute boundaries.
    Refine {
        /// CSV with one column per feature and a `label` column of Yes/No.
        #[arg(long)]
        traces: PathBuf,
        /// When given, rule features are projected onto this ODD's classes.
        #[arg(long)]
        odd: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
        #[arg(long, default_value_t = 20)]
        min_leaf: usize,
    },
    /// Stream confidence reports for line-delimited JSON observations.
    ///
    /// CSV columns: t, in_odd, degenerate, mean, variance, one
    /// P(objective=state) per objective state, evidence (`node=state`
    /// joined by `;`), dropped_readings (joined by `;`).
    Monitor {
        /// Bundle manifest naming the ODD, network, bindings and assurance point.
        #[arg(long)]
        bundle: PathBuf,
        /// Observation file; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long = "oodd-policy", value_enum, default_value_t = OodArg::DropAndFlag)]
        oodd_policy: OodArg,
        #[arg(long, value_enum, default_value_t = OrderArg::Reject)]
        order: OrderArg,
    },
    /// Generate a synthetic observation trace from a scenario script.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Triple-store operations.
    #[command(subcommand)]
    Onto(OntoCommand),
}

#[derive(Args)]
struct InferArgs {
    /// Network file.
    #[arg(long, conflicts_with = "template", required_unless_present = "template")]
    bn: Option<PathBuf>,
    /// Assurance template config; supplies the network and its state values.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Query node; defaults to the network objective.
    #[arg(long)]
    query: Option<String>,
    /// Observed `NODE=STATE`, repeatable.
    #[arg(long = "evidence", value_name = "NODE=STATE")]
    evidence: Vec<String>,
    /// Score of a query state, `STATE=VALUE` in [0, 1], repeatable.
    #[arg(long = "value", value_name = "STATE=VALUE")]
    values: Vec<String>,
}

#[derive(Subcommand)]
enum OntoCommand {
    /// Check the closed-world axioms; one violation per line.
    Check {
        #[arg(long)]
        triples: PathBuf,
        /// Also check `hasDomain` constraint literals against this ODD.
        #[arg(long)]
        odd: Option<PathBuf>,
    },
    /// Print asserted and inferred triples matching `s p o` (`?` is a wildcard).
    Query {
        #[arg(long)]
        triples: PathBuf,
        pattern: String,
    },
    /// Emit triples describing an ODD, and optionally a hazard and a network.
    Build {
        #[arg(long)]
        odd: PathBuf,
        #[arg(long, requires = "hazard")]
        hara: Option<PathBuf>,
        #[arg(long)]
        hazard: Option<String>,
        #[arg(long)]
        bn: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum OodArg {
    DropAndFlag,
    WorstCase,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Reject,
    Warn,
}

/// Well-formed but defective input.
const DEFECTS: u8 = 1;
/// Unreadable or malformed input.
const FATAL: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ODD_ASSURE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(FATAL)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match command {
        Command::Validate { odd, hara, bn } => validate(&mut out, &odd, hara.as_deref(), bn.as_deref())?,
        Command::CompileFta {
            hara,
            priors,
            out: target,
            hazard,
        } => compile_fta(&hara, &priors, &target, hazard.as_deref())?,
        Command::Infer(args) => infer(&mut out, &args)?,
        Command::Coverage { odd, data, scenario, id } => coverage(&mut out, &odd, &data, &scenario, &id)?,
        Command::Refine {
            traces,
            odd,
            max_depth,
            min_leaf,
        } => refine(&mut out, &traces, odd.as_deref(), TreeParams { max_depth, min_leaf })?,
        Command::Monitor {
            bundle,
            input,
            format,
            oodd_policy,
            order,
        } => {
            let options = MonitorOptions {
                ood: match oodd_policy {
                    OodArg::DropAndFlag => OodPolicy::DropAndFlag,
                    OodArg::WorstCase => OodPolicy::WorstCase,
                },
                order: match order {
                    OrderArg::Reject => OrderPolicy::Reject,
                    OrderArg::Warn => OrderPolicy::Warn,
                },
            };
            monitor(&mut out, &bundle, input.as_deref(), format, options)?
        }
        Command::Synth { script, seed } => {
            let s = parse_script(&read(&script)?).with_context(|| script.display().to_string())?;
            for obs in synth_trace(&s, seed)? {
                writeln!(out, "{}", serde_json::to_string(&obs)?)?;
            }
            0
        }
        Command::Onto(cmd) => onto(&mut out, cmd)?,
    };
    out.flush()?;
    Ok(code)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

/// Variant name of an error enum, for machine-readable defect lines.
fn kind(e: &impl Debug) -> String {
    let s = format!("{e:?}");
    s.split(['(', ' ', '{']).next().unwrap_or_default().to_string()
}

fn validate(out: &mut impl Write, odd_path: &Path, hara: Option<&Path>, bn: Option<&Path>) -> Result<u8> {
    let mut defects = 0usize;
    let mut report = |out: &mut dyn Write, path: &Path, kind: String, message: String| -> Result<()> {
        defects += 1;
        writeln!(out, "{}: {kind}: {message}", path.display())?;
        Ok(())
    };

    let odd_text = read(odd_path)?;
    let odd_defects = match check_odd_document(&odd_text) {
        Ok(d) => d,
        Err(OddError::Document(e)) => bail!("{}: {e}", odd_path.display()),
        Err(e) => vec![e],
    };
    for d in &odd_defects {
        report(out, odd_path, kind(d), d.to_string())?;
    }
    let odd: Option<OddSpec> = if odd_defects.is_empty() {
        let spec = parse_odd_spec(&odd_text).map_err(|e| anyhow!("{}: {e}", odd_path.display()))?;
        for o in spec.overlaps() {
            info!("{}: {o} (class is not a partition)", odd_path.display());
        }
        Some(spec)
    } else {
        None
    };

    if let Some(path) = hara {
        match parse_hara(&read(path)?) {
            Err(FtaError::Document(e)) => bail!("{}: {e}", path.display()),
            Err(e) => report(out, path, kind(&e), e.to_string())?,
            Ok(h) => {
                for hz in &h.hazards {
                    match h.compute_fta(&hz.event) {
                        Err(e) => report(out, path, kind(&e), e.to_string())?,
                        Ok(fta) => {
                            let mut found = validate_fta(&fta);
                            if let Some(spec) = &odd {
                                found.extend(check_oper_conditions(&fta, spec));
                            }
                            for d in found {
                                report(out, path, kind(&d), d.to_string())?;
                            }
                        }
                    }
                }
            }
        }
    }

    if let Some(path) = bn {
        match bayes::parse_bn(&read(path)?) {
            Err(BnError::Document(e)) => bail!("{}: {e}", path.display()),
            Err(e) => report(out, path, kind(&e), e.to_string())?,
            Ok(net) => info!("{}: {} nodes", path.display(), net.len()),
        }
    }

    if defects == 0 {
        writeln!(out, "ok")?;
        Ok(0)
    } else {
        Ok(DEFECTS)
    }
}

fn compile_fta(hara_path: &Path, priors_path: &Path, target: &Path, hazard: Option<&str>) -> Result<u8> {
    let hara = parse_hara(&read(hara_path)?).with_context(|| hara_path.display().to_string())?;
    let priors: BTreeMap<String, f64> = serde_json::from_str(&read(priors_path)?)
        .map_err(|e| anyhow!("{}: line {}, column {}: {e}", priors_path.display(), e.line(), e.column()))?;
    let hazard = hazard.unwrap_or(&hara.hazards[0].event);
    let fta = hara.compute_fta(hazard).with_context(|| hara_path.display().to_string())?;
    let defects = validate_fta(&fta);
    if !defects.is_empty() {
        for d in defects {
            eprintln!("{}: {}: {d}", hara_path.display(), kind(&d));
        }
        return Ok(DEFECTS);
    }
    match bayes::compile_fta_to_bn(&fta, &priors) {
        Ok(net) => {
            fs::write(target, net.to_json()).with_context(|| format!("{}: cannot write", target.display()))?;
            info!("wrote {} ({} nodes)", target.display(), net.len());
            Ok(0)
        }
        Err(e @ (BnError::MissingPrior(_) | BnError::UnexpectedPrior(_) | BnError::InvalidPrior { .. })) => {
            eprintln!("{}: {}: {e}", priors_path.display(), kind(&e));
            Ok(DEFECTS)
        }
        Err(e) => Err(anyhow!("{}: {e}", hara_path.display())),
    }
}

fn split_pair<'a>(text: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    text.split_once('=')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| anyhow!("{what} must look like NAME=VALUE, got {text:?}"))
}

fn infer(out: &mut impl Write, args: &InferArgs) -> Result<u8> {
    let (net, mut values): (BayesNet, BTreeMap<String, f64>) = match (&args.bn, &args.template) {
        (Some(path), _) => (
            bayes::parse_bn(&read(path)?).with_context(|| path.display().to_string())?,
            BTreeMap::new(),
        ),
        (None, Some(path)) => {
            let (net, acp) = parse_template_config(&read(path)?)
                .and_then(|d| d.build())
                .with_context(|| path.display().to_string())?;
            (net, acp.state_values)
        }
        (None, None) => bail!("one of --bn or --template is required"),
    };
    let query = match &args.query {
        Some(q) => q.clone(),
        None => net
            .objective()
            .map(str::to_string)
            .ok_or_else(|| anyhow!("network has no objective; pass --query"))?,
    };
    if Some(query.as_str()) != net.objective() {
        values.clear();
    }
    for v in &args.values {
        let (state, x) = split_pair(v, "--value")?;
        let x: f64 = x.parse().with_context(|| format!("--value {v:?}: not a number"))?;
        values.insert(state.to_string(), x);
    }
    let mut evidence = EvidenceSet::new();
    for e in &args.evidence {
        let (node, state) = split_pair(e, "--evidence")?;
        evidence.insert(node, state);
    }

    let post = match bayes::posterior(&net, &query, &evidence) {
        Ok(p) => p,
        Err(e @ BnError::ZeroProbabilityEvidence(_)) => {
            eprintln!("error: {e}");
            return Ok(DEFECTS);
        }
        Err(e) => return Err(e.into()),
    };
    print_posterior(out, &post, &evidence)?;
    if !values.is_empty() {
        let (mean, variance) = mean_variance(&post, &values)?;
        writeln!(out, "mean={mean:.6}")?;
        writeln!(out, "variance={variance:.6}")?;
    }
    Ok(0)
}

fn print_posterior(out: &mut impl Write, post: &Posterior, evidence: &EvidenceSet) -> Result<()> {
    let given: Vec<String> = evidence.iter().map(|(n, s)| format!("{n}={s}")).collect();
    let cond = if given.is_empty() {
        String::new()
    } else {
        format!("|{}", given.join(","))
    };
    for (s, p) in post.states.iter().zip(&post.probs) {
        writeln!(out, "P({}={s}{cond})={p:.6}", post.node)?;
    }
    Ok(())
}

fn coverage(out: &mut impl Write, odd_path: &Path, data: &Path, scenario: &str, id: &str) -> Result<u8> {
    let odd = parse_odd_spec(&read(odd_path)?).with_context(|| odd_path.display().to_string())?;
    let pairs: Vec<(&str, &str)> = scenario
        .split(',')
        .map(|c| split_pair(c, "--scenario condition"))
        .collect::<Result<_>>()?;
    let spec = ScenarioSpec::new(id, &pairs, &odd)?;
    let file = fs::File::open(data).with_context(|| format!("{}: cannot read", data.display()))?;
    let rows = parse_state_records(file, &odd).with_context(|| data.display().to_string())?;
    let r = scenario_coverage(&rows, &spec).with_context(|| data.display().to_string())?;
    writeln!(
        out,
        "scenario={} n_occurrences={} n_total={} m={:.6}",
        r.scenario, r.n_occurrences, r.n_total, r.m
    )?;
    Ok(0)
}

fn refine(out: &mut impl Write, traces: &Path, odd_path: Option<&Path>, params: TreeParams) -> Result<u8> {
    let file = fs::File::open(traces).with_context(|| format!("{}: cannot read", traces.display()))?;
    let records = parse_traces(file).with_context(|| traces.display().to_string())?;
    let fit = fit_tree(&records, params).with_context(|| traces.display().to_string())?;
    if fit.constant_features {
        warn!("{}: labels are mixed but no feature separates them", traces.display());
    }
    let rules = extract_rules(&fit.tree);
    for r in &rules {
        writeln!(out, "{r}")?;
    }
    if let Some(path) = odd_path {
        let odd = parse_odd_spec(&read(path)?).with_context(|| path.display().to_string())?;
        let report = refine_boundaries(&odd, &rules)?;
        if report.exit_everywhere {
            writeln!(out, "# exit_everywhere")?;
        }
        for p in &report.proposals {
            let proposed: Vec<String> = p.proposed.iter().map(|i| i.to_string()).collect();
            let current: Vec<String> = p.current.iter().map(|(n, i)| format!("{n}={i}")).collect();
            writeln!(out, "# {} proposed {} current {}", p.class, proposed.join(" "), current.join(" "))?;
        }
    }
    Ok(0)
}

fn monitor(
    out: &mut impl Write,
    bundle_path: &Path,
    input: Option<&Path>,
    format: Format,
    options: MonitorOptions,
) -> Result<u8> {
    let bundle = load_bundle(bundle_path)?;
    let source = input.map_or_else(|| "<stdin>".to_string(), |p| p.display().to_string());
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(io::BufReader::new(
            fs::File::open(p).with_context(|| format!("{}: cannot read", p.display()))?,
        )),
        None => Box::new(io::BufReader::new(io::stdin())),
    };
    if let Format::Csv = format {
        writeln!(out, "{}", report_csv_header(&bundle))?;
    }
    let mut mon = Monitor::new(&bundle, options);
    for (i, line) in reader.lines().enumerate() {
        let line = line.with_context(|| format!("{source}: line {}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let obs = parse_observation(&line, i + 1).with_context(|| source.clone())?;
        let report = mon.push(&obs).with_context(|| format!("{source}: line {}", i + 1))?;
        for w in mon.take_warnings() {
            warn!("{source}: line {}: {w}", i + 1);
        }
        if report.degenerate {
            warn!("{source}: line {}: evidence has zero probability", i + 1);
        }
        match format {
            Format::Json => writeln!(out, "{}", report_json_line(&report))?,
            Format::Csv => writeln!(out, "{}", report_csv_row(&bundle, &report))?,
        }
    }
    Ok(0)
}

fn load_graph(path: &Path) -> Result<TripleGraph> {
    import_graph(&read(path)?).with_context(|| path.display().to_string())
}

fn onto(out: &mut impl Write, cmd: OntoCommand) -> Result<u8> {
    match cmd {
        OntoCommand::Check { triples, odd } => {
            let graph = load_graph(&triples)?;
            let mut n = 0;
            for v in check_axioms(&graph) {
                n += 1;
                writeln!(out, "{} {} {}", v.axiom, v.triple.line(), v.message)?;
            }
            if let Some(path) = odd {
                let spec = parse_odd_spec(&read(&path)?).with_context(|| path.display().to_string())?;
                for d in link_constraints(&graph, &spec) {
                    n += 1;
                    writeln!(out, "link {d}")?;
                }
            }
            if n == 0 {
                writeln!(out, "ok")?;
                Ok(0)
            } else {
                Ok(DEFECTS)
            }
        }
        OntoCommand::Query { triples, pattern } => {
            let graph = load_graph(&triples)?;
            let p = parse_pattern(&pattern)?;
            for t in graph.query(&p) {
                writeln!(out, "{}", t.line())?;
            }
            Ok(0)
        }
        OntoCommand::Build { odd, hara, hazard, bn } => {
            let spec = parse_odd_spec(&read(&odd)?).with_context(|| odd.display().to_string())?;
            let mut graph = TripleGraph::new();
            graph.insert_all(odd_triples(&spec))?;
            if let (Some(path), Some(h)) = (hara, hazard) {
                let doc = parse_hara(&read(&path)?).with_context(|| path.display().to_string())?;
                graph.insert_all(hara_triples(&doc, &h, &spec)?)?;
            }
            if let Some(path) = bn {
                let net = bayes::parse_bn(&read(&path)?).with_context(|| path.display().to_string())?;
                graph.insert_all(bn_triples(&net))?;
            }
            write!(out, "{}", export_graph(&graph))?;
            Ok(0)
        }
    }
}
