//! The machine-spec language.
//!
//! ```text
//! spec  := expr | (tail expr+) | (finite expr+) | (prob (mass INT INT expr)+)
//! expr  := (rat INT INT) | (var INT) | (neg expr) | (chi-pos expr)
//!        | (add expr expr) | (sub expr expr) | (mul expr expr)
//!        | (min expr expr) | (max expr expr)
//! ```
//!
//! Atoms are symbols and decimal integers; `;` starts a comment that runs to
//! the end of the line. In `(tail e0 … ek e)` the last expression serves
//! every index past `k`. Relation and probability branches are unary.

use std::fmt;

use num_bigint::BigInt;
use qmachine::{Rational, RealExpr};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax(String),
    UnknownHead(String),
    Arity(String),
    BadMass(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {}", describe(.kind))]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ErrorKind,
}

fn describe(kind: &ErrorKind) -> String {
    match kind {
        ErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ErrorKind::UnknownHead(h) => format!("unknown head symbol `{h}`"),
        ErrorKind::Arity(m) => format!("arity error: {m}"),
        ErrorKind::BadMass(m) => format!("bad mass: {m}"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelSpec {
    Tail { head: Vec<RealExpr>, tail: RealExpr },
    Finite(Vec<RealExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassBranch {
    pub numerator: BigInt,
    pub denominator: BigInt,
    pub expr: RealExpr,
}

impl MassBranch {
    pub fn mass(&self) -> Rational {
        Rational::new(self.numerator.clone(), self.denominator.clone()).expect("denominator checked at parse time")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecAst {
    Expr { expr: RealExpr, arity: usize },
    Rel(RelSpec),
    Prob(Vec<MassBranch>),
}

impl fmt::Display for SpecAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Expr { expr, .. } => write!(f, "{expr}"),
            Self::Rel(RelSpec::Tail { head, tail }) => {
                f.write_str("(tail")?;
                for e in head {
                    write!(f, " {e}")?;
                }
                write!(f, " {tail})")
            }
            Self::Rel(RelSpec::Finite(branches)) => {
                f.write_str("(finite")?;
                for e in branches {
                    write!(f, " {e}")?;
                }
                f.write_str(")")
            }
            Self::Prob(branches) => {
                f.write_str("(prob")?;
                for b in branches {
                    write!(f, " (mass {} {} {})", b.numerator, b.denominator, b.expr)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Int(BigInt, Pos),
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Self::Int(_, p) | Self::Sym(_, p) | Self::List(_, p) => *p,
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, col: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos,
            kind: ErrorKind::Syntax(msg.into()),
        }
    }

    fn read(&mut self) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek().copied() {
            None => Err(Self::syntax(start, "unexpected end of input")),
            Some(')') => Err(Self::syntax(start, "unexpected `)`")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(Self::syntax(start, "unclosed list")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut atom = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                let digits = atom.strip_prefix(['-', '+']).unwrap_or(&atom);
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    let value = atom.parse().map_err(|_| Self::syntax(start, format!("bad integer `{atom}`")))?;
                    Ok(Sexp::Int(value, start))
                } else if atom.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                    Ok(Sexp::Sym(atom, start))
                } else {
                    Err(Self::syntax(start, format!("invalid atom `{atom}`")))
                }
            }
        }
    }
}

fn arity_error(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError {
        pos,
        kind: ErrorKind::Arity(msg.into()),
    }
}

/// Splits `(head args…)` into its head symbol and arguments.
fn head_of(list: &Sexp) -> Result<(&str, &[Sexp], Pos), ParseError> {
    match list {
        Sexp::List(items, pos) => match items.split_first() {
            Some((Sexp::Sym(head, _), args)) => Ok((head, args, *pos)),
            Some((other, _)) => Err(Reader::syntax(other.pos(), "expected a head symbol")),
            None => Err(Reader::syntax(*pos, "empty list")),
        },
        other => Err(Reader::syntax(other.pos(), "expected a list")),
    }
}

fn expect_int(s: &Sexp) -> Result<&BigInt, ParseError> {
    match s {
        Sexp::Int(n, _) => Ok(n),
        other => Err(Reader::syntax(other.pos(), "expected an integer")),
    }
}

fn expect_args(head: &str, args: &[Sexp], n: usize, pos: Pos) -> Result<(), ParseError> {
    if args.len() != n {
        return Err(arity_error(pos, format!("`{head}` takes {n} operand(s), got {}", args.len())));
    }
    Ok(())
}

fn parse_expr(s: &Sexp) -> Result<RealExpr, ParseError> {
    let (head, args, pos) = head_of(s)?;
    let unary = |f: fn(RealExpr) -> RealExpr| -> Result<RealExpr, ParseError> {
        expect_args(head, args, 1, pos)?;
        Ok(f(parse_expr(&args[0])?))
    };
    let binary = |f: fn(RealExpr, RealExpr) -> RealExpr| -> Result<RealExpr, ParseError> {
        expect_args(head, args, 2, pos)?;
        Ok(f(parse_expr(&args[0])?, parse_expr(&args[1])?))
    };
    match head {
        "rat" => {
            expect_args(head, args, 2, pos)?;
            let (n, d) = (expect_int(&args[0])?, expect_int(&args[1])?);
            let value = Rational::new(n.clone(), d.clone())
                .map_err(|_| Reader::syntax(args[1].pos(), "zero denominator"))?;
            Ok(RealExpr::constant(value))
        }
        "var" => {
            expect_args(head, args, 1, pos)?;
            let k = expect_int(&args[0])?;
            let k = usize::try_from(k).map_err(|_| Reader::syntax(args[0].pos(), "variable index must be a natural"))?;
            Ok(RealExpr::var(k))
        }
        "add" => binary(RealExpr::add),
        "sub" => binary(RealExpr::sub),
        "mul" => binary(RealExpr::mul),
        "min" => binary(RealExpr::min),
        "max" => binary(RealExpr::max),
        "neg" => unary(RealExpr::neg),
        "chi-pos" => unary(RealExpr::chi_pos),
        other => Err(ParseError {
            pos,
            kind: ErrorKind::UnknownHead(other.to_owned()),
        }),
    }
}

fn parse_unary_expr(s: &Sexp) -> Result<RealExpr, ParseError> {
    let e = parse_expr(s)?;
    if e.min_arity() > 1 {
        return Err(arity_error(
            s.pos(),
            format!("branches take one argument but use (var {})", e.min_arity() - 1),
        ));
    }
    Ok(e)
}

fn bad_mass(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError {
        pos,
        kind: ErrorKind::BadMass(msg.into()),
    }
}

fn parse_mass(s: &Sexp) -> Result<MassBranch, ParseError> {
    let (head, args, pos) = head_of(s)?;
    if head != "mass" {
        return Err(ParseError {
            pos,
            kind: ErrorKind::UnknownHead(head.to_owned()),
        });
    }
    expect_args(head, args, 3, pos)?;
    let numerator = match &args[0] {
        Sexp::Int(n, _) => n.clone(),
        other => return Err(bad_mass(other.pos(), "numerator must be an integer")),
    };
    let denominator = match &args[1] {
        Sexp::Int(d, _) => d.clone(),
        other => return Err(bad_mass(other.pos(), "denominator must be an integer")),
    };
    if denominator <= BigInt::from(0) {
        return Err(bad_mass(args[1].pos(), "denominator must be positive"));
    }
    if numerator < BigInt::from(0) || numerator > denominator {
        return Err(bad_mass(args[0].pos(), format!("{numerator}/{denominator} is not in [0, 1]")));
    }
    Ok(MassBranch {
        numerator,
        denominator,
        expr: parse_unary_expr(&args[2])?,
    })
}

pub fn parse_spec(text: &str) -> Result<SpecAst, ParseError> {
    let mut reader = Reader::new(text);
    let form = reader.read()?;
    reader.skip_trivia();
    if reader.chars.peek().is_some() {
        return Err(Reader::syntax(reader.pos, "trailing input after the spec"));
    }
    let (head, args, pos) = head_of(&form)?;
    match head {
        "tail" => {
            let exprs = args.iter().map(parse_unary_expr).collect::<Result<Vec<_>, _>>()?;
            let Some((tail, head)) = exprs.split_last() else {
                return Err(arity_error(pos, "`tail` needs at least one expression"));
            };
            Ok(SpecAst::Rel(RelSpec::Tail {
                head: head.to_vec(),
                tail: tail.clone(),
            }))
        }
        "finite" => {
            if args.is_empty() {
                return Err(arity_error(pos, "`finite` needs at least one expression"));
            }
            let exprs = args.iter().map(parse_unary_expr).collect::<Result<Vec<_>, _>>()?;
            Ok(SpecAst::Rel(RelSpec::Finite(exprs)))
        }
        "prob" => {
            if args.is_empty() {
                return Err(arity_error(pos, "`prob` needs at least one `mass` branch"));
            }
            let branches = args.iter().map(parse_mass).collect::<Result<Vec<_>, _>>()?;
            let total = branches.iter().fold(Rational::zero(), |acc, b| acc + b.mass());
            if total != Rational::one() {
                return Err(bad_mass(pos, format!("masses sum to {total}, not 1")));
            }
            Ok(SpecAst::Prob(branches))
        }
        _ => {
            let expr = parse_expr(&form)?;
            let arity = expr.min_arity().max(1);
            Ok(SpecAst::Expr { expr, arity })
        }
    }
}
