//! `mnm`: decision tree to verified prime-implicant rules, stage by stage.

mod artifact;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mnm_core::compile::{complement, compile_rules, render_trits, DnfDoc};
use mnm_core::discretize::{combine_spaces, map_features, merge_intervals, SpaceDoc};
use mnm_core::eval::{evaluate, load_flows, Dataset, SchemaConfig};
use mnm_core::explain::{explain_batch, explain_instance, Explanation, VerifiedRules};
use mnm_core::primes::{minimal_cover, prime_pair, PrimeMode, PrimeSet, PrimesDoc};
use mnm_core::{DiscreteSpace, DEFAULT_BUDGET};
use thiserror::Error;

use artifact::{read_artifact, read_text, read_tree, Artifact};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mnm_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_capacity() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mnm", version, about = "Compile decision-tree classifiers into verified prime-implicant rules")]
struct Cli {
    /// Ceiling on feasible points for exhaustive work.
    #[arg(long, global = true, env = "MNM_BUDGET")]
    budget: Option<u128>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format; artifact stages default to json, the others to text.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tree document to interval rules.
    Rules {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Rules to a discrete space (map, optional combine, merge).
    Discretize {
        /// Rule artifacts; the first is the model being compiled. Reads stdin if absent.
        #[arg(long)]
        rules: Vec<PathBuf>,
        /// Start from a tree document instead of a rule artifact.
        #[arg(long, conflicts_with = "rules")]
        tree: Option<PathBuf>,
        /// Further spaces (or any artifact carrying one) to combine with.
        #[arg(long)]
        combine: Vec<PathBuf>,
        /// Classes whose rules decide which intervals may merge (default: all).
        #[arg(long)]
        label: Vec<String>,
        #[arg(long)]
        no_merge: bool,
    },
    /// Rules of one class over the space as a DNF.
    Compile {
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        label: String,
    },
    /// Prime implicants of the class and of its complement.
    Primes {
        /// Artifact from `compile` (or from `discretize`, together with --label).
        #[arg(long, conflicts_with = "tree")]
        space: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        /// Greedy expansion instead of the exact closure.
        #[arg(long)]
        heuristic: bool,
        /// Check both sides against the tree; fail if either cover is inexact.
        #[arg(long)]
        verify: bool,
    },
    /// Sufficient reasons for the tree's decision on flows.
    Explain {
        #[command(flatten)]
        source: Source,
        /// One flow as `feature=value,...`.
        #[arg(long, conflicts_with = "flows")]
        flow: Option<String>,
        /// CSV of flows.
        #[arg(long, required_unless_present = "flow")]
        flows: Option<PathBuf>,
        /// Header aliases and label column for CSV input.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Run tree and prime rules over a CSV and report metrics.
    Evaluate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Prime tables.
    Report {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = Sides::Both)]
        side: Sides,
        /// Reduce each side to a smallest covering subset first.
        #[arg(long)]
        cover: bool,
    },
}

/// Where verified primes come from: a `primes` artifact, or a tree and label.
#[derive(Debug, Args)]
struct Source {
    #[arg(long, conflicts_with = "tree")]
    primes: Option<PathBuf>,
    #[arg(long, requires = "label")]
    tree: Option<PathBuf>,
    #[arg(long, requires = "tree")]
    label: Option<String>,
    #[arg(long, requires = "tree")]
    heuristic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sides {
    Positive,
    Negative,
    Both,
}

struct Ctx {
    budget: u128,
    format: Option<Format>,
}

impl Ctx {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let budget = cli.budget.unwrap_or(DEFAULT_BUDGET);
    if budget == 0 {
        return Err(CliError::Usage("budget must be positive".into()));
    }
    let ctx = Ctx { budget, format: cli.format };
    let out = match cli.command {
        Command::Rules { tree } => cmd_rules(&ctx, &tree)?,
        Command::Discretize { rules, tree, combine, label, no_merge } => {
            cmd_discretize(&ctx, &rules, tree.as_deref(), &combine, &label, no_merge)?
        }
        Command::Compile { space, label } => cmd_compile(&ctx, space.as_deref(), &label)?,
        Command::Primes { space, tree, label, heuristic, verify } => {
            cmd_primes(&ctx, space.as_deref(), tree.as_deref(), label.as_deref(), mode(heuristic), verify)?
        }
        Command::Explain { source, flow, flows, schema } => {
            cmd_explain(&ctx, &source, flow.as_deref(), flows.as_deref(), schema.as_deref())?
        }
        Command::Evaluate { source, flows, schema } => cmd_evaluate(&ctx, &source, &flows, schema.as_deref())?,
        Command::Report { source, side, cover } => cmd_report(&ctx, &source, side, cover)?,
    };
    emit(cli.output.as_deref(), &out)
}

fn mode(heuristic: bool) -> PrimeMode {
    if heuristic {
        PrimeMode::Heuristic
    } else {
        PrimeMode::Exact
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn json<S: serde::Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

// ---- stages ----------------------------------------------------------------

fn stage_rules(tree: &Path) -> Result<Artifact> {
    Artifact::from_tree(&read_tree(tree)?)
}

fn stage_discretize(
    mut art: Artifact,
    others: &[Artifact],
    combine: &[DiscreteSpace<f64>],
    labels: &[String],
    no_merge: bool,
) -> Result<Artifact> {
    let mut space = map_features(&art.rules)?;
    for o in others {
        space = combine_spaces(&space, &map_features(&o.rules)?);
    }
    for s in combine {
        space = combine_spaces(&space, s);
    }
    if !no_merge {
        let guide = if labels.is_empty() { art.rules.clone() } else { art.rules.with_labels(labels) };
        if guide.is_empty() {
            return Err(CliError::Usage(format!("no rule carries any of the labels {labels:?}")));
        }
        space = merge_intervals(&space, &guide)?.0;
    }
    art.stage = "discretize".into();
    art.space = Some(SpaceDoc::from(&space));
    art.dnf = None;
    art.primes = None;
    Ok(art)
}

fn stage_compile(mut art: Artifact, label: &str) -> Result<Artifact> {
    if !art.rules.classes.iter().any(|c| c == label) {
        return Err(CliError::Usage(format!("`{label}` is not a class of the model ({})", art.rules.classes.join(", "))));
    }
    let space = art.space()?;
    let dnf = compile_rules(&art.rules, &space, label)?;
    art.stage = "compile".into();
    art.dnf = Some(dnf.to_doc());
    art.primes = None;
    Ok(art)
}

fn stage_primes(mut art: Artifact, mode: PrimeMode, verify: bool, budget: u128) -> Result<Artifact> {
    let dnf = art.dnf().ok_or_else(|| CliError::Usage("input has no compiled class; run `compile` or pass --label".into()))??;
    let space = art.space()?;
    let (pos, neg) = prime_pair(&art.rules, &space, &dnf.label, mode, budget)?;
    let verified = if verify {
        VerifiedRules::verify(&art.tree()?, pos.clone(), neg.clone(), budget)?;
        true
    } else {
        false
    };
    art.stage = "primes".into();
    art.primes = Some(PrimesDoc::new(&pos, &neg, verified));
    Ok(art)
}

/// The default pipeline from a tree document up to primes for one class.
fn pipeline(tree: &Path, label: &str, mode: PrimeMode, verify: bool, budget: u128) -> Result<Artifact> {
    let art = stage_discretize(stage_rules(tree)?, &[], &[], &[], false)?;
    stage_primes(stage_compile(art, label)?, mode, verify, budget)
}

fn load_source(src: &Source, budget: u128) -> Result<(Artifact, VerifiedRules<f64>)> {
    let art = match (&src.tree, &src.label) {
        (Some(tree), Some(label)) => pipeline(tree, label, mode(src.heuristic), false, budget)?,
        _ => read_artifact(src.primes.as_deref())?,
    };
    let (pos, neg) = art.primes()?;
    let rules = VerifiedRules::verify(&art.tree()?, pos, neg, budget)?;
    Ok((art, rules))
}

// ---- commands --------------------------------------------------------------

fn cmd_rules(ctx: &Ctx, tree: &Path) -> Result<String> {
    let art = stage_rules(tree)?;
    Ok(match ctx.format(Format::Json) {
        Format::Json => art.to_json(),
        Format::Text => {
            let mut s = String::new();
            for (i, r) in art.rules.rules.iter().enumerate() {
                let cs: Vec<String> = r.constraints.iter().map(|(f, iv)| format!("{f} in {iv}")).collect();
                let body = if cs.is_empty() { "true".to_string() } else { cs.join(" and ") };
                s.push_str(&format!("r{}: {body} -> {}\n", i + 1, r.label));
            }
            s
        }
    })
}

fn cmd_discretize(
    ctx: &Ctx,
    rules: &[PathBuf],
    tree: Option<&Path>,
    combine: &[PathBuf],
    labels: &[String],
    no_merge: bool,
) -> Result<String> {
    let (first, others) = match (tree, rules.split_first()) {
        (Some(t), _) => (stage_rules(t)?, Vec::new()),
        (None, Some((first, rest))) => (
            read_artifact(Some(first))?,
            rest.iter().map(|p| read_artifact(Some(p))).collect::<Result<Vec<_>>>()?,
        ),
        (None, None) => (read_artifact(None)?, Vec::new()),
    };
    let spaces = combine.iter().map(|p| read_space(p)).collect::<Result<Vec<_>>>()?;
    let art = stage_discretize(first, &others, &spaces, labels, no_merge)?;
    Ok(match ctx.format(Format::Json) {
        Format::Json => art.to_json(),
        Format::Text => {
            let space = art.space()?;
            let mut s = format!(
                "{} features, {} variables, {} feasible points\n",
                space.features().len(),
                space.variable_count(),
                space.feasible_count()
            );
            for (i, f) in space.features().iter().enumerate() {
                let vars: Vec<String> =
                    (0..f.interval_count()).map(|j| format!("{}={}", space.variable_name(i, j), f.interval(j))).collect();
                s.push_str(&format!("{}: {}\n", f.name, vars.join(" ")));
            }
            s
        }
    })
}

/// A bare space document or any artifact carrying one.
fn read_space(path: &Path) -> Result<DiscreteSpace<f64>> {
    let text = read_text(Some(path))?;
    if let Ok(art) = serde_json::from_str::<Artifact>(&text) {
        return art.space();
    }
    DiscreteSpace::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn cmd_compile(ctx: &Ctx, space: Option<&Path>, label: &str) -> Result<String> {
    let art = stage_compile(read_artifact(space)?, label)?;
    Ok(match ctx.format(Format::Json) {
        Format::Json => art.to_json(),
        Format::Text => {
            let dnf: DnfDoc<f64> = art.dnf.clone().expect("just compiled");
            let space = art.space()?;
            let mut s = format!("{} cubes for {}: {}\n", dnf.cubes.len(), dnf.label, space.variable_names().join(" "));
            for c in &dnf.cubes {
                let cube = space.layout().cube_from_sets(c)?;
                s.push_str(&render_trits(&cube, space.layout()).join(","));
                s.push('\n');
            }
            s
        }
    })
}

fn cmd_primes(
    ctx: &Ctx,
    space: Option<&Path>,
    tree: Option<&Path>,
    label: Option<&str>,
    mode: PrimeMode,
    verify: bool,
) -> Result<String> {
    let art = match tree {
        Some(t) => {
            let label = label.ok_or_else(|| CliError::Usage("--tree needs --label".into()))?;
            pipeline(t, label, mode, verify, ctx.budget)?
        }
        None => {
            let mut art = read_artifact(space)?;
            if let Some(l) = label {
                art = stage_compile(art, l)?;
            }
            stage_primes(art, mode, verify, ctx.budget)?
        }
    };
    Ok(match ctx.format(Format::Json) {
        Format::Json => art.to_json(),
        Format::Text => {
            let (pos, neg) = art.primes()?;
            tables(&pos, &neg, Sides::Both)
        }
    })
}

fn tables(pos: &PrimeSet<f64>, neg: &PrimeSet<f64>, side: Sides) -> String {
    match side {
        Sides::Positive => pos.render_table(),
        Sides::Negative => neg.render_table(),
        Sides::Both => format!("{}\n{}", pos.render_table(), neg.render_table()),
    }
}

fn schema(path: Option<&Path>) -> Result<SchemaConfig> {
    match path {
        None => Ok(SchemaConfig::default()),
        Some(p) => {
            let text = read_text(Some(p))?;
            SchemaConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn parse_flow(spec: &str, schema: &SchemaConfig) -> Result<Vec<(String, f64)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("flow entry `{part}` is not feature=value")))?;
        let name = schema.canonical(k.trim()).to_string();
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("flow value `{}` for `{name}` is not a number", v.trim())))?;
        if seen.insert(name.clone(), value).is_some() {
            return Err(CliError::Usage(format!("feature `{name}` given twice")));
        }
        out.push((name, value));
    }
    Ok(out)
}

fn required_features(art: &Artifact, rules: &VerifiedRules<f64>) -> Result<Vec<String>> {
    let mut names: Vec<String> = rules.space().features().iter().map(|f| f.name.clone()).collect();
    for f in art.tree()?.features() {
        if !names.contains(f) {
            names.push(f.clone());
        }
    }
    Ok(names)
}

fn cmd_explain(
    ctx: &Ctx,
    source: &Source,
    flow: Option<&str>,
    flows: Option<&Path>,
    schema_path: Option<&Path>,
) -> Result<String> {
    let (art, rules) = load_source(source, ctx.budget)?;
    let tree = art.tree()?;
    let schema = schema(schema_path)?;
    let explanations: Vec<Explanation<f64>> = match (flow, flows) {
        (Some(spec), _) => vec![explain_instance(&parse_flow(spec, &schema)?, &tree, &rules)?],
        (None, Some(path)) => {
            let required = required_features(&art, &rules)?;
            let data: Dataset<f64> = load_flows(path, &schema, &required)?;
            let rows: Vec<Vec<(String, f64)>> = data
                .rows()
                .map(|r| data.features().iter().cloned().zip(r.values.iter().copied()).collect())
                .collect();
            explain_batch(&rows, &tree, &rules)?
        }
        (None, None) => return Err(CliError::Usage("give --flow or --flows".into())),
    };
    Ok(match ctx.format(Format::Text) {
        Format::Json => json(&explanations),
        Format::Text if explanations.len() == 1 => explanations[0].to_text(),
        Format::Text => explanations
            .iter()
            .enumerate()
            .map(|(i, e)| format!("flow {}\n{}", i + 1, e.to_text()))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

fn cmd_evaluate(ctx: &Ctx, source: &Source, flows: &Path, schema_path: Option<&Path>) -> Result<String> {
    let (art, rules) = load_source(source, ctx.budget)?;
    let schema = schema(schema_path)?;
    let required = required_features(&art, &rules)?;
    let data: Dataset<f64> = load_flows(flows, &schema, &required)?;
    let report = evaluate(&art.tree()?, &rules, &data)?;
    if report.disagreements > 0 {
        return Err(CliError::Usage(format!(
            "prime rules disagree with the tree on {} rows",
            report.disagreements
        )));
    }
    Ok(match ctx.format(Format::Text) {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Text => report.to_text(),
    })
}

fn cmd_report(ctx: &Ctx, source: &Source, side: Sides, cover: bool) -> Result<String> {
    let (art, rules) = load_source(source, ctx.budget)?;
    let (mut pos, mut neg) = (rules.positive().clone(), rules.negative().clone());
    if cover {
        let dnf = compile_rules(&art.rules, rules.space(), rules.target())?;
        pos = minimal_cover(&pos, &dnf, ctx.budget)?.set;
        neg = minimal_cover(&neg, &complement(&dnf), ctx.budget)?.set;
    }
    Ok(match ctx.format(Format::Text) {
        Format::Json => {
            let doc = PrimesDoc::new(&pos, &neg, true);
            match side {
                Sides::Both => json(&doc),
                Sides::Positive => json(&doc.positive),
                Sides::Negative => json(&doc.negative),
            }
        }
        Format::Text => tables(&pos, &neg, side),
    })
}
