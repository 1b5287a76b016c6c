//! `ehyp`: validate, build, rewrite, saturate, normalize and extract
//! extended cospans stored as JSON documents.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ehyp::cospan::ExtendedCospan;
use ehyp::egraph::{translate, EGraph};
use ehyp::engine::{
    export_dot, extract, normalize_with, saturate, DirectionPolicy, MatchOrder, NormalizeOptions, SaturationStatus, Strategy,
};
use ehyp::graph::ValidationReport;
use ehyp::io::{cospan_from_json, cospan_to_json, infer_signature};
use ehyp::rewrite::{apply, find_matches, parse_rules, RewriteRule, SchemaKind};
use ehyp::signature::Signature;
use ehyp::term::Term;
use ehyp::FloatCostModel;

#[derive(Parser)]
#[command(name = "ehyp", version, about = "Rewriting of extended cospans over e-hypergraphs")]
struct Cli {
    /// Seed for every order-dependent choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a cospan document and report violated conditions.
    Check {
        graph: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
    },
    /// Interpret a term and print its cospan document.
    Interp {
        term: String,
        #[arg(long)]
        sig: PathBuf,
    },
    /// Apply rules destructively.
    Rewrite {
        graph: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
        /// Apply the first occurrence only (the default).
        #[arg(long, conflicts_with = "all")]
        step: bool,
        /// Apply every occurrence found in the input that still applies.
        #[arg(long)]
        all: bool,
    },
    /// Saturate with rules, keeping both sides of each rewrite.
    Saturate {
        graph: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Also use every rule right to left.
        #[arg(long)]
        bidirectional: bool,
        /// Comma-separated forward schemas that may expose rule
        /// occurrences, or `none`. All are enabled by default.
        #[arg(long, value_delimiter = ',')]
        schemas: Option<Vec<String>>,
    },
    /// Rewrite to a join of box-free components.
    Normalize {
        graph: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, value_enum, default_value_t = Order::First)]
        order: Order,
    },
    /// Pick the cheapest component of every e-box and print the term.
    Extract {
        graph: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
        /// Lines `name = cost`; unlisted generators cost 1.
        #[arg(long)]
        costs: Option<PathBuf>,
    },
    /// Translate an e-graph document into a cospan document.
    ImportEgraph {
        file: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
    },
    /// Print a cospan document as Graphviz DOT.
    ExportDot {
        graph: PathBuf,
        #[arg(long)]
        sig: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    First,
    Last,
}

enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<ValidationReport> for Failure {
    fn from(r: ValidationReport) -> Self {
        Failure::Invalid(r.to_string())
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_sig(path: &Path) -> Result<Signature, Failure> {
    Signature::parse(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Reads a cospan and checks it against the given or inferred signature.
fn load(path: &Path, sig: &Option<PathBuf>) -> Result<(ExtendedCospan, Signature), Failure> {
    let c = cospan_from_json(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let sig = match sig {
        Some(p) => load_sig(p)?,
        None => infer_signature(&c.carrier).map_err(invalid)?,
    };
    let report = c.check(&sig);
    if !report.is_valid() {
        return Err(report.into());
    }
    Ok((c, sig))
}

/// The rules of a file read left to right.
fn load_rules(path: &Path, sig: &Signature) -> Result<Vec<RewriteRule>, Failure> {
    let all = parse_rules(&read(path)?, sig).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    // Each rule is followed by its reverse.
    Ok(all.into_iter().step_by(2).collect())
}

fn parse_schemas(names: &[String]) -> Result<Vec<SchemaKind>, Failure> {
    if names.len() == 1 && names[0] == "none" {
        return Ok(Vec::new());
    }
    names
        .iter()
        .map(|n| {
            SchemaKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(n)).ok_or_else(|| {
                let known: Vec<&str> = SchemaKind::ALL.iter().map(|k| k.name()).collect();
                Failure::Usage(format!("unknown schema {n}; expected one of {} or none", known.join(", ")))
            })
        })
        .collect()
}

/// Heads typed by their child counts, with one output each.
fn egraph_signature(eg: &EGraph) -> Result<Signature, Failure> {
    let mut sig = Signature::new();
    for id in eg.class_ids() {
        for n in eg.nodes(id) {
            match sig.get(&n.head) {
                Some(g) if g.arity != n.children.len() => {
                    return Err(Failure::Invalid(format!("head {} is used with {} and {} children", n.head, g.arity, n.children.len())))
                }
                Some(_) => {}
                None => sig.add(&n.head, n.children.len(), 1).map_err(invalid)?,
            }
        }
    }
    Ok(sig.cartesian())
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Check { graph, sig } => {
            load(&graph, &sig)?;
            Ok("valid".into())
        }
        Command::Interp { term, sig } => {
            let sig = load_sig(&sig)?;
            let t = Term::parse(&term).map_err(invalid)?;
            let c = t.interpret(&sig).map_err(invalid)?;
            Ok(cospan_to_json(&c))
        }
        Command::Rewrite { graph, rules, sig, all, .. } => {
            let (c, sig) = load(&graph, &sig)?;
            let rules = load_rules(&rules, &sig)?;
            let matches: Vec<_> = rules.iter().flat_map(|r| find_matches(r, &c)).collect();
            let mut host = c;
            let mut applied = 0;
            for m in &matches {
                if let Ok(next) = apply(&host, m) {
                    eprintln!("applied {m}");
                    host = next;
                    applied += 1;
                    if !all {
                        break;
                    }
                }
            }
            if applied == 0 {
                eprintln!("no rule applies");
            }
            Ok(cospan_to_json(&host))
        }
        Command::Saturate {
            graph,
            rules,
            sig,
            max_steps,
            bidirectional,
            schemas,
        } => {
            let schemas = match schemas {
                Some(names) => parse_schemas(&names)?,
                None => SchemaKind::ALL.to_vec(),
            };
            let (c, sig) = load(&graph, &sig)?;
            let rules = load_rules(&rules, &sig)?;
            let strategy = Strategy {
                max_steps,
                rules,
                schemas,
                direction: if bidirectional { DirectionPolicy::Bidirectional } else { DirectionPolicy::ForwardOnly },
                seed: cli.seed,
                ..Strategy::default()
            };
            let s = saturate(&c, &strategy);
            for step in &s.steps {
                eprintln!("applied {step}");
            }
            if s.status == SaturationStatus::StepLimit {
                eprintln!("stopped at the step limit of {max_steps}");
            }
            Ok(cospan_to_json(&s.result))
        }
        Command::Normalize { graph, sig, max_steps, order } => {
            let (c, _) = load(&graph, &sig)?;
            let opts = NormalizeOptions {
                max_steps,
                order: match order {
                    Order::First => MatchOrder::First,
                    Order::Last => MatchOrder::Last,
                },
            };
            normalize_with(&c, &opts).map(|n| cospan_to_json(&n)).map_err(invalid)
        }
        Command::Extract { graph, sig, costs } => {
            let (c, _) = load(&graph, &sig)?;
            let model = match costs {
                Some(p) => FloatCostModel::parse(&read(&p)?).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?,
                None => FloatCostModel::unit(),
            };
            extract(&c, &model).map(|t| t.to_string()).map_err(invalid)
        }
        Command::ImportEgraph { file, sig } => {
            let eg = EGraph::from_json(&read(&file)?).map_err(|e| Failure::Invalid(format!("{}: {e}", file.display())))?;
            let sig = match sig {
                Some(p) => load_sig(&p)?,
                None => egraph_signature(&eg)?,
            };
            translate(&eg, &sig).map(|c| cospan_to_json(&c)).map_err(invalid)
        }
        Command::ExportDot { graph, sig } => {
            let (c, _) = load(&graph, &sig)?;
            Ok(export_dot(&c))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            // A closed pipe downstream is not an error of ours.
            let _ = writeln!(std::io::stdout(), "{}", out.trim_end());
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
