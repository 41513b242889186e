//! Subcommands and their line-oriented output.
//!
//! Every result line is a space-separated list of `key=value` fields in a
//! fixed order. Exit codes: 0 on success, 1 when a computation reports
//! non-convergence or an exhausted search, 2 on usage or spec errors.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qmachine::natcomp::{
    catalog, catalog_witness, compare, dec_to_semi, enum_to_semi, equivalence_report, semi_to_enum_nonempty, CATALOG,
};
use qmachine::ndrelation::{self, from_function, make_finite_rel, make_tail_rel, member_semi, Membership, RealEnumRel};
use qmachine::probrel::{self, decompose, empirical_frequency, make_prob, outcome_mass, DiscreteProbAlgorithm, ProbBranch, Sampler};
use qmachine::{
    domain_neighborhood, expr_to_machine, from_rational, refine, FMachine, Fuel, Positive, Rational, RealOracle,
    RefineOutcome,
};
use thiserror::Error;

use crate::spec::{parse_spec, RelSpec, SpecAst};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_RESULT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `p/q`, `n`, or the dyadic shorthand `2^k` / `2^-k`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    if let Some(exp) = s.strip_prefix("2^") {
        let exp: i64 = exp.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
        if exp.unsigned_abs() > 1 << 20 {
            return Err(format!("exponent in `{s}` is too large"));
        }
        return Ok(Rational::pow2(exp));
    }
    s.parse().map_err(|e| format!("{e}"))
}

pub fn parse_accuracy(s: &str) -> Result<Positive, String> {
    Positive::new(parse_rational(s)?).map_err(|e| e.to_string())
}

fn parse_fuel(s: &str) -> Result<Fuel, String> {
    let n: u64 = s.parse().map_err(|_| format!("`{s}` is not a natural number"))?;
    Fuel::new(n).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "qmachine", version, about = "Exact real computation with interval-query machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Machine spec file (s-expression).
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct Refinement {
    /// Maximum refinement steps.
    #[arg(long, default_value = "1000", value_parser = parse_fuel)]
    pub fuel: Fuel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine an expression at a rational point to the requested accuracy.
    Eval {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        y: Option<Rational>,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Find a neighborhood of a point on which an expression is defined.
    Domain {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        y: Option<Rational>,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// List the witnesses f(x, i) for i = 0..=max-index.
    Enumerate {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[arg(long)]
        max_index: u64,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Search the witness window for one certifiably close to y.
    Member {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        y: Rational,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[arg(long)]
        max_index: u64,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Draw samples from a probabilistic algorithm.
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Certified mass of outcomes within accuracy of y.
    Mass {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        y: Rational,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Count how often each branch is drawn in n samples.
    Freq {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, value_parser = parse_accuracy)]
        accuracy: Positive,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[command(flatten)]
        refinement: Refinement,
    },
    /// Check a construction over the naturals against a catalog relation.
    Natcheck {
        /// roundtrip | dec-to-semi | nonempty-roundtrip
        #[arg(long)]
        construction: Construction,
        /// equality | divisibility | geq
        #[arg(long)]
        relation: String,
        #[arg(long)]
        bound: u64,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Construction {
    /// decidable → semi-decidable → enumerable → semi-decidable
    Roundtrip,
    /// decidable → semi-decidable
    DecToSemi,
    /// as roundtrip, enumerating with a default member instead of FAIL
    NonemptyRoundtrip,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{source}")]
    Parse {
        path: String,
        source: crate::spec::ParseError,
    },
    #[error("{0}")]
    Usage(String),
}

fn load_spec(arg: &SpecArg) -> Result<SpecAst, CliError> {
    let path = arg.spec.display().to_string();
    let text = std::fs::read_to_string(&arg.spec).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    parse_spec(&text).map_err(|source| CliError::Parse { path, source })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn machine_of(ast: &SpecAst) -> Result<FMachine, CliError> {
    match ast {
        SpecAst::Expr { expr, arity } => expr_to_machine(expr, *arity).map_err(|e| usage(e.to_string())),
        _ => Err(usage("this command needs an expression spec")),
    }
}

fn point_args(m: &FMachine, x: &Rational, y: Option<&Rational>) -> Result<Vec<RealOracle>, CliError> {
    match (m.arity(), y) {
        (1, None) => Ok(vec![from_rational(x.clone())]),
        (2, Some(y)) => Ok(vec![from_rational(x.clone()), from_rational(y.clone())]),
        (1, Some(_)) => Err(usage("the expression takes one argument; drop --y")),
        (2, None) => Err(usage("the expression takes two arguments; pass --y")),
        (n, _) => Err(usage(format!("the command line supplies at most 2 arguments, the expression takes {n}"))),
    }
}

/// Relations come from relation specs directly, from unary expressions as
/// function graphs, and from probabilistic specs as their outcome family.
fn relation_of(ast: &SpecAst) -> Result<RealEnumRel, CliError> {
    let rel = match ast {
        SpecAst::Rel(RelSpec::Tail { head, tail }) => make_tail_rel(head, tail),
        SpecAst::Rel(RelSpec::Finite(branches)) => make_finite_rel(branches),
        SpecAst::Expr { expr, arity: 1 } => {
            from_function(&expr_to_machine(expr, 1).map_err(|e| usage(e.to_string()))?)
        }
        SpecAst::Expr { .. } => return Err(usage("relation commands need a unary spec")),
        SpecAst::Prob(_) => return Ok(decompose(&algorithm_of(ast)?).family()),
    };
    rel.map_err(|e| usage(e.to_string()))
}

/// Unary expressions count as single-branch algorithms.
fn algorithm_of(ast: &SpecAst) -> Result<DiscreteProbAlgorithm, CliError> {
    let branches = match ast {
        SpecAst::Prob(branches) => branches
            .iter()
            .map(|b| ProbBranch::from_expr(&b.expr, b.mass()))
            .collect::<Result<Vec<_>, _>>(),
        SpecAst::Expr { expr, arity: 1 } => ProbBranch::from_expr(expr, Rational::one()).map(|b| vec![b]),
        _ => return Err(usage("this command needs a prob spec")),
    };
    make_prob(branches.map_err(|e| usage(e.to_string()))?).map_err(|e| usage(e.to_string()))
}

fn write_outcome(out: &mut impl Write, outcome: &RefineOutcome) -> io::Result<i32> {
    match outcome {
        RefineOutcome::Converged { r, epsilon, .. } => {
            writeln!(out, "r={r} eps={epsilon}")?;
            Ok(EXIT_OK)
        }
        RefineOutcome::NoConvergence(nc) => {
            writeln!(out, "no-convergence steps={} all_infinite={}", nc.steps_taken, nc.all_infinite)?;
            Ok(EXIT_NO_RESULT)
        }
    }
}

fn execute(command: &Command, out: &mut impl Write) -> Result<i32, CliError> {
    let io_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    match command {
        Command::Eval {
            spec,
            x,
            y,
            accuracy,
            refinement,
        } => {
            let m = machine_of(&load_spec(spec)?)?;
            let args = point_args(&m, x, y.as_ref())?;
            let outcome = refine(&m, &args, accuracy, refinement.fuel).map_err(|e| usage(e.to_string()))?;
            write_outcome(out, &outcome).map_err(io_err)
        }
        Command::Domain { spec, x, y, refinement } => {
            let m = machine_of(&load_spec(spec)?)?;
            let args = point_args(&m, x, y.as_ref())?;
            match domain_neighborhood(&m, &args, refinement.fuel).map_err(|e| usage(e.to_string()))? {
                Ok(intervals) => {
                    for (k, i) in intervals.iter().enumerate() {
                        writeln!(out, "arg={k} lo={} hi={}", i.lo(), i.hi()).map_err(io_err)?;
                    }
                    Ok(EXIT_OK)
                }
                Err(nc) => {
                    writeln!(out, "no-convergence steps={} all_infinite={}", nc.steps_taken, nc.all_infinite)
                        .map_err(io_err)?;
                    Ok(EXIT_NO_RESULT)
                }
            }
        }
        Command::Enumerate {
            spec,
            x,
            accuracy,
            max_index,
            refinement,
        } => {
            let rel = relation_of(&load_spec(spec)?)?;
            let list = ndrelation::enumerate(&rel, &from_rational(x.clone()), accuracy, *max_index, refinement.fuel);
            let mut lines: Vec<(u64, String)> = list
                .entries
                .iter()
                .map(|e| (e.index, format!("index={} r={} eps={}", e.index, e.r, e.epsilon)))
                .chain(list.skipped.iter().map(|&i| (i, format!("index={i} skipped"))))
                .collect();
            lines.sort_by_key(|(i, _)| *i);
            for (_, line) in lines {
                writeln!(out, "{line}").map_err(io_err)?;
            }
            Ok(EXIT_OK)
        }
        Command::Member {
            spec,
            x,
            y,
            accuracy,
            max_index,
            refinement,
        } => {
            let rel = relation_of(&load_spec(spec)?)?;
            let (xo, yo) = (from_rational(x.clone()), from_rational(y.clone()));
            match member_semi(&rel, &xo, &yo, accuracy, *max_index, refinement.fuel) {
                Membership::Found(i) => {
                    writeln!(out, "found index={i}").map_err(io_err)?;
                    Ok(EXIT_OK)
                }
                Membership::Exhausted => {
                    writeln!(out, "exhausted max_index={max_index}").map_err(io_err)?;
                    Ok(EXIT_NO_RESULT)
                }
            }
        }
        Command::Sample {
            spec,
            x,
            accuracy,
            seed,
            n,
            refinement,
        } => {
            let alg = algorithm_of(&load_spec(spec)?)?;
            let xo = from_rational(x.clone());
            let mut sampler = Sampler::new(*seed);
            for k in 0..*n {
                match probrel::sample(&alg, &xo, &mut sampler, accuracy, refinement.fuel) {
                    Ok(s) => writeln!(out, "sample={k} index={} r={}", s.index, s.r).map_err(io_err)?,
                    Err(nc) => {
                        writeln!(out, "sample={k} no-convergence steps={} all_infinite={}", nc.steps_taken, nc.all_infinite)
                            .map_err(io_err)?;
                        return Ok(EXIT_NO_RESULT);
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Mass {
            spec,
            x,
            y,
            accuracy,
            refinement,
        } => {
            let alg = algorithm_of(&load_spec(spec)?)?;
            let report = outcome_mass(&alg, &from_rational(x.clone()), &from_rational(y.clone()), accuracy, refinement.fuel);
            writeln!(out, "{report}").map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Command::Freq {
            spec,
            x,
            accuracy,
            seed,
            n,
            refinement,
        } => {
            let alg = algorithm_of(&load_spec(spec)?)?;
            let mut sampler = Sampler::new(*seed);
            match empirical_frequency(&alg, &from_rational(x.clone()), *n, &mut sampler, accuracy, refinement.fuel) {
                Ok(report) => {
                    writeln!(out, "n={}", report.n).map_err(io_err)?;
                    for (i, count) in report.counts.iter().enumerate() {
                        match &report.outcomes[i] {
                            Some(r) => writeln!(out, "index={i} count={count} r={r}"),
                            None => writeln!(out, "index={i} count={count}"),
                        }
                        .map_err(io_err)?;
                    }
                    Ok(EXIT_OK)
                }
                Err(nc) => {
                    writeln!(out, "no-convergence steps={} all_infinite={}", nc.steps_taken, nc.all_infinite)
                        .map_err(io_err)?;
                    Ok(EXIT_NO_RESULT)
                }
            }
        }
        Command::Natcheck {
            construction,
            relation,
            bound,
            fuel,
        } => {
            let r = catalog(relation)
                .ok_or_else(|| usage(format!("unknown relation `{relation}` (known: {})", CATALOG.join(", "))))?;
            let report = match construction {
                Construction::Roundtrip => equivalence_report(&r, *bound, *fuel),
                Construction::DecToSemi => compare(&r, &dec_to_semi(&r), *bound, *fuel),
                Construction::NonemptyRoundtrip => {
                    let d = catalog_witness(relation).expect("catalog relations have witnesses");
                    let e = semi_to_enum_nonempty(&dec_to_semi(&r), d);
                    compare(&r, &enum_to_semi(&e), *bound, *fuel)
                }
            };
            if report.full_agreement() {
                writeln!(out, "OK {}/{}", report.agreements, report.checked).map_err(io_err)?;
                Ok(EXIT_OK)
            } else {
                writeln!(
                    out,
                    "FAIL {}/{} missed={} false_accepts={}",
                    report.agreements,
                    report.checked,
                    report.missed.len(),
                    report.false_accepts.len()
                )
                .map_err(io_err)?;
                Ok(EXIT_NO_RESULT)
            }
        }
    }
}

/// Runs one parsed command, writing results to `out` and diagnostics to
/// `err`. Returns the process exit code.
pub fn run_command(command: &Command, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match execute(command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
