//! Test-only reference semantics: direct exact evaluation of expressions and
//! a sampling checker for machine soundness. Nothing here goes through the
//! machine layer it is used to check.

#![allow(dead_code)]

use qmachine::{rat, Approx, FMachine, Positive, Query, RealExpr, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact value of `e` at a rational point; `None` where `chi-pos` is
/// undefined (argument `≤ 0`).
pub fn eval_exact(e: &RealExpr, point: &[Rational]) -> Option<Rational> {
    Some(match e {
        RealExpr::Const(c) => c.clone(),
        RealExpr::Var(k) => point[*k].clone(),
        RealExpr::Add(a, b) => eval_exact(a, point)? + eval_exact(b, point)?,
        RealExpr::Sub(a, b) => eval_exact(a, point)? - eval_exact(b, point)?,
        RealExpr::Mul(a, b) => eval_exact(a, point)? * eval_exact(b, point)?,
        RealExpr::Neg(a) => -eval_exact(a, point)?,
        RealExpr::Min(a, b) => eval_exact(a, point)?.min(eval_exact(b, point)?),
        RealExpr::Max(a, b) => eval_exact(a, point)?.max(eval_exact(b, point)?),
        RealExpr::ChiPos(a) => {
            if eval_exact(a, point)?.is_positive() {
                Rational::one()
            } else {
                return None;
            }
        }
    })
}

pub fn random_rational(rng: &mut impl Rng, magnitude: i64, max_den: i64) -> Rational {
    rat(rng.random_range(-magnitude * max_den..=magnitude * max_den), rng.random_range(1..=max_den))
}

pub fn random_positive(rng: &mut impl Rng) -> Positive {
    // mostly small radii, occasionally wide ones
    let r = if rng.random_bool(0.15) {
        rat(rng.random_range(1..=40), rng.random_range(1..=4))
    } else {
        rat(1, rng.random_range(1..=4096))
    };
    Positive::new(r).unwrap()
}

/// A point of the ball `[q − η, q + η]`, endpoints included with positive
/// probability.
pub fn point_in_ball(rng: &mut impl Rng, c: &Approx) -> Rational {
    let t = match rng.random_range(0..10) {
        0 => rat(-1, 1),
        1 => rat(1, 1),
        _ => {
            let den = rng.random_range(1..=1000);
            rat(rng.random_range(-den..=den), den)
        }
    };
    &c.q + &(c.eta.get() * &t)
}

pub fn random_query(rng: &mut impl Rng, arity: usize) -> Query {
    Query::new(
        (0..arity)
            .map(|_| Approx::new(random_rational(rng, 8, 64), random_positive(rng)))
            .collect(),
    )
    .unwrap()
}

pub fn random_expr(rng: &mut impl Rng, depth: usize, arity: usize, allow_chi: bool) -> RealExpr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.6) {
            RealExpr::var(rng.random_range(0..arity))
        } else {
            RealExpr::constant(random_rational(rng, 4, 8))
        };
    }
    let sub = |rng: &mut _| random_expr(rng, depth - 1, arity, allow_chi);
    let choices = if allow_chi { 8 } else { 7 };
    match rng.random_range(0..choices) {
        0 => RealExpr::add(sub(rng), sub(rng)),
        1 => RealExpr::sub(sub(rng), sub(rng)),
        2 => RealExpr::mul(sub(rng), sub(rng)),
        3 => RealExpr::neg(sub(rng)),
        4 => RealExpr::min(sub(rng), sub(rng)),
        5 => RealExpr::max(sub(rng), sub(rng)),
        6 => RealExpr::add(sub(rng), sub(rng)),
        _ => RealExpr::chi_pos(sub(rng)),
    }
}

/// Exact reference semantics for a machine under test.
pub type Reference = Box<dyn Fn(&[Rational]) -> Option<Rational>>;

#[derive(Debug, Default)]
pub struct SoundnessTally {
    pub trials: usize,
    pub finite: usize,
    pub violations: Vec<String>,
}

/// Samples `trials` (query, point-in-box) pairs and checks
/// `|f(x) − r| ≤ ε` for every finite answer, with `f` the reference.
/// Points outside the machine's declared domain are skipped; a finite answer
/// at a point where the reference is undefined is a violation.
pub fn check_soundness(
    machine: &FMachine,
    reference: impl Fn(&[Rational]) -> Option<Rational>,
    trials: usize,
    seed: u64,
) -> SoundnessTally {
    let mut rng = rng(seed);
    let mut tally = SoundnessTally::default();
    while tally.trials < trials {
        let query = random_query(&mut rng, machine.arity());
        let point: Vec<Rational> = query.components().iter().map(|c| point_in_ball(&mut rng, c)).collect();
        if !machine.in_domain(&point) {
            continue;
        }
        tally.trials += 1;
        let answer = machine.apply(&query).unwrap();
        let Some(eps) = answer.epsilon.as_finite() else {
            continue;
        };
        tally.finite += 1;
        match reference(&point) {
            Some(value) if (&value - &answer.r).abs() <= *eps.get() => {}
            Some(value) => tally.violations.push(format!(
                "{}: query {query} point {point:?} f={value} answer=({}, {eps})",
                machine.label(),
                answer.r
            )),
            None => tally.violations.push(format!(
                "{}: finite answer at undefined point {point:?} (query {query})",
                machine.label()
            )),
        }
    }
    tally
}
