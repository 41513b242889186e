//! Interval-query machines.
//!
//! A machine maps a query `(q, η)` (one pair per argument) to an answer
//! `(r, ε)`. It is sound for a real function `f` when every `x` with
//! `|x − q| ≤ η` satisfies `|f(x) − r| ≤ ε`. An answer with `ε = +∞`
//! carries no information; a point where every query answers `+∞` is a
//! point where the function is undefined.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::oracle::RealOracle;
use crate::rational::{ExtAccuracy, Interval, Positive, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("arity mismatch: machine takes {expected} argument(s), got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("composition needs inner machines of a common arity, found {0} and {1}")]
    InnerArityMismatch(usize, usize),
    #[error("a machine needs at least one argument")]
    ZeroArity,
    #[error("projection index {index} out of range for arity {arity}")]
    ProjectionOutOfRange { index: usize, arity: usize },
    #[error("fuel must be at least 1")]
    ZeroFuel,
}

/// One argument's component of a query: the claim `|x − q| ≤ η`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Approx {
    pub q: Rational,
    pub eta: Positive,
}

impl Approx {
    pub fn new(q: Rational, eta: Positive) -> Self {
        Self { q, eta }
    }

    pub fn interval(&self) -> Interval {
        Interval::ball(&self.q, &self.eta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Query(Vec<Approx>);

impl Query {
    pub fn new(components: Vec<Approx>) -> Result<Self, MachineError> {
        if components.is_empty() {
            return Err(MachineError::ZeroArity);
        }
        Ok(Self(components))
    }

    pub fn single(q: Rational, eta: Positive) -> Self {
        Self(vec![Approx::new(q, eta)])
    }

    pub fn pair(first: Approx, second: Approx) -> Self {
        Self(vec![first, second])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[Approx] {
        &self.0
    }

    pub fn get(&self, k: usize) -> &Approx {
        &self.0[k]
    }

    fn min_eta(&self) -> Positive {
        self.0
            .iter()
            .map(|c| &c.eta)
            .min()
            .cloned()
            .expect("queries are nonempty")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", c.q, c.eta)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Answer {
    pub r: Rational,
    pub epsilon: ExtAccuracy,
}

impl Answer {
    pub fn finite(r: Rational, epsilon: Positive) -> Self {
        Self {
            r,
            epsilon: ExtAccuracy::Finite(epsilon),
        }
    }

    pub fn no_information(r: Rational) -> Self {
        Self {
            r,
            epsilon: ExtAccuracy::Infinity,
        }
    }

    pub fn is_finite(&self) -> bool {
        !self.epsilon.is_infinite()
    }
}

/// Per-argument domain bound; `None` endpoints are unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DomainBound {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl DomainBound {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= x) && self.hi.as_ref().is_none_or(|hi| x <= hi)
    }
}

type Transition = dyn Fn(&Query) -> Answer + Send + Sync;

/// A pure total mapping from queries of a fixed arity to answers.
#[derive(Clone)]
pub struct FMachine {
    arity: usize,
    label: Arc<str>,
    transition: Arc<Transition>,
    domain: Option<Vec<DomainBound>>,
}

impl fmt::Debug for FMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FMachine")
            .field("label", &self.label)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl FMachine {
    /// Wraps a transition function. The closure is only ever called with
    /// queries of the given arity.
    pub fn new(
        arity: usize,
        label: impl Into<Arc<str>>,
        transition: impl Fn(&Query) -> Answer + Send + Sync + 'static,
    ) -> Result<Self, MachineError> {
        if arity == 0 {
            return Err(MachineError::ZeroArity);
        }
        Ok(Self {
            arity,
            label: label.into(),
            transition: Arc::new(transition),
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: Vec<DomainBound>) -> Result<Self, MachineError> {
        if domain.len() != self.arity {
            return Err(MachineError::ArityMismatch {
                expected: self.arity,
                found: domain.len(),
            });
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Option<&[DomainBound]> {
        self.domain.as_deref()
    }

    /// Whether a point lies in the declared domain (everywhere, when none
    /// was declared).
    pub fn in_domain(&self, point: &[Rational]) -> bool {
        match &self.domain {
            None => true,
            Some(bounds) => bounds.iter().zip(point).all(|(b, x)| b.contains(x)),
        }
    }

    pub fn apply(&self, query: &Query) -> Result<Answer, MachineError> {
        self.check_arity(query.arity())?;
        Ok((self.transition)(query))
    }

    fn check_arity(&self, found: usize) -> Result<(), MachineError> {
        if found != self.arity {
            return Err(MachineError::ArityMismatch {
                expected: self.arity,
                found,
            });
        }
        Ok(())
    }
}

/// Maximum number of refinement steps a driver may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fuel(u64);

impl Fuel {
    pub fn new(max_refinement_steps: u64) -> Result<Self, MachineError> {
        if max_refinement_steps == 0 {
            return Err(MachineError::ZeroFuel);
        }
        Ok(Self(max_refinement_steps))
    }

    pub fn steps(self) -> u64 {
        self.0
    }

    pub fn times(self, factor: u64) -> Self {
        Self(self.0.saturating_mul(factor.max(1)))
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Self(1000)
    }
}

/// Refinement gave up: no answer fine enough was produced within fuel.
/// This is evidence of undefinedness, never a proof of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error)]
#[error("no convergence after {steps_taken} step(s) (all answers infinite: {all_infinite})")]
pub struct NoConvergence {
    pub steps_taken: u64,
    pub all_infinite: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefineOutcome {
    /// `step` is the schedule index `n` whose query (`η = 2^-n`) answered.
    Converged {
        r: Rational,
        epsilon: Positive,
        step: u64,
    },
    NoConvergence(NoConvergence),
}

impl RefineOutcome {
    pub fn converged(&self) -> Option<(&Rational, &Positive)> {
        match self {
            Self::Converged { r, epsilon, .. } => Some((r, epsilon)),
            Self::NoConvergence(_) => None,
        }
    }

    pub fn into_result(self) -> Result<(Rational, Positive), NoConvergence> {
        match self {
            Self::Converged { r, epsilon, .. } => Ok((r, epsilon)),
            Self::NoConvergence(nc) => Err(nc),
        }
    }
}

/// The refinement schedule: `η_n = 2^-n`.
pub fn schedule_eta(n: u64) -> Positive {
    Positive::dyadic(u32::try_from(n).expect("schedule index fits in u32"))
}

/// Drives any query-answering function through the canonical schedule.
/// Shared by [`refine`] and by the relation and probabilistic layers,
/// whose slices may also answer FAIL (`Err`).
pub(crate) fn refine_with<E>(
    arity: usize,
    mut answer: impl FnMut(&Query) -> Result<Answer, E>,
    args: &[RealOracle],
    target: &Positive,
    fuel: Fuel,
) -> Result<RefineOutcome, E> {
    debug_assert_eq!(arity, args.len());
    let mut all_infinite = true;
    for n in 0..fuel.steps() {
        let eta = schedule_eta(n);
        let mut components = Vec::with_capacity(args.len());
        for oracle in args {
            match oracle.query(&eta) {
                Ok(q) => components.push(Approx::new(q, eta.clone())),
                // An undefined argument makes the application undefined.
                Err(_) => {
                    return Ok(RefineOutcome::NoConvergence(NoConvergence {
                        steps_taken: n,
                        all_infinite,
                    }))
                }
            }
        }
        let Answer { r, epsilon } = answer(&Query(components))?;
        if let ExtAccuracy::Finite(epsilon) = epsilon {
            all_infinite = false;
            if &epsilon <= target {
                return Ok(RefineOutcome::Converged { r, epsilon, step: n });
            }
        }
    }
    Ok(RefineOutcome::NoConvergence(NoConvergence {
        steps_taken: fuel.steps(),
        all_infinite,
    }))
}

/// Queries `m` with `q_n = oracle(η_n)`, `η_n = 2^-n`, for `n = 0, 1, …`
/// until an answer has `ε ≤ target` or fuel runs out.
///
/// An argument oracle that itself fails to converge ends the run early with
/// `NoConvergence`.
pub fn refine(m: &FMachine, args: &[RealOracle], target: &Positive, fuel: Fuel) -> Result<RefineOutcome, MachineError> {
    m.check_arity(args.len())?;
    let outcome = refine_with(m.arity, |q| Ok::<_, std::convert::Infallible>((m.transition)(q)), args, target, fuel);
    Ok(match outcome {
        Ok(o) => o,
        Err(never) => match never {},
    })
}

/// Extracts a neighborhood of the argument point on which `m` is defined.
///
/// Runs the schedule with doubled radii, querying `(q_n, 2η_n)`. At the
/// first step `n` with a finite answer, every `y` in `[q_n − 2η_n, q_n + 2η_n]`
/// admits an approximation sequence starting with that very query, so the
/// machine is defined on the whole interval, which contains the argument
/// point in its interior.
pub fn domain_neighborhood(m: &FMachine, args: &[RealOracle], fuel: Fuel) -> Result<Result<Vec<Interval>, NoConvergence>, MachineError> {
    m.check_arity(args.len())?;
    for n in 0..fuel.steps() {
        let eta = schedule_eta(n);
        let radius = eta.double();
        let mut components = Vec::with_capacity(args.len());
        for oracle in args {
            match oracle.query(&eta) {
                Ok(q) => components.push(Approx::new(q, radius.clone())),
                Err(_) => {
                    return Ok(Err(NoConvergence {
                        steps_taken: n,
                        all_infinite: true,
                    }))
                }
            }
        }
        let query = Query(components);
        if (m.transition)(&query).is_finite() {
            return Ok(Ok(query.0.iter().map(Approx::interval).collect()));
        }
    }
    Ok(Err(NoConvergence {
        steps_taken: fuel.steps(),
        all_infinite: true,
    }))
}

/// The partial characteristic function of the strictly positive reals:
/// `(1, η)` when `q − η > 0`, `(1, +∞)` otherwise.
pub fn chi_pos() -> FMachine {
    FMachine::new(1, "chi-pos", |query| {
        let Approx { q, eta } = query.get(0);
        if (q - eta.get()).is_positive() {
            Answer::finite(Rational::one(), eta.clone())
        } else {
            Answer::no_information(Rational::one())
        }
    })
    .expect("arity 1")
}

/// The `k`-th argument of an `arity`-argument function.
pub fn projection(index: usize, arity: usize) -> Result<FMachine, MachineError> {
    if index >= arity {
        return Err(MachineError::ProjectionOutOfRange { index, arity });
    }
    FMachine::new(arity, format!("var{index}"), move |query| {
        let c = query.get(index);
        Answer::finite(c.q.clone(), c.eta.clone())
    })
}

pub fn identity() -> FMachine {
    projection(0, 1).expect("index 0 < arity 1")
}

/// The constant `c` as a machine of any arity. Its answers carry the
/// smallest query radius as `ε`, which keeps `ε` strictly positive.
pub fn constant(c: Rational, arity: usize) -> Result<FMachine, MachineError> {
    FMachine::new(arity, format!("const({c})"), move |query| Answer::finite(c.clone(), query.min_eta()))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
    Min,
    Max,
    Const(Rational),
}

impl ArithOp {
    pub fn arity(&self) -> usize {
        match self {
            Self::Add | Self::Sub | Self::Mul | Self::Min | Self::Max => 2,
            Self::Neg | Self::Const(_) => 1,
        }
    }
}

/// `|q1|·η2 + |q2|·η1 + η1·η2`, which equals the largest `|xy − q1·q2|`
/// over the corners of the box `[q1 ± η1] × [q2 ± η2]`.
fn product_error(a: &Approx, b: &Approx) -> Positive {
    let cross = &a.q.abs() * b.eta.get() + &b.q.abs() * a.eta.get();
    let bound = cross + a.eta.get() * b.eta.get();
    Positive::new(bound).expect("η1·η2 > 0")
}

/// Interval `[f(lo1, lo2), f(hi1, hi2)]` for a monotone `f`, re-centered.
fn monotone_pair(a: &Approx, b: &Approx, f: fn(Rational, Rational) -> Rational) -> Answer {
    let lo = f(&a.q - a.eta.get(), &b.q - b.eta.get());
    let hi = f(&a.q + a.eta.get(), &b.q + b.eta.get());
    let interval = Interval::new(lo, hi).expect("monotone image of ordered endpoints is ordered");
    let (mid, radius) = interval.to_ball().expect("min/max of nondegenerate boxes is nondegenerate");
    Answer::finite(mid, radius)
}

/// Sound machines for the basic arithmetic operations, using exact
/// interval propagation.
pub fn lift_arith(op: ArithOp) -> FMachine {
    let label = format!("{op:?}").to_lowercase();
    let machine = match op {
        ArithOp::Add => FMachine::new(2, label, |query| {
            let (a, b) = (query.get(0), query.get(1));
            Answer::finite(&a.q + &b.q, &a.eta + &b.eta)
        }),
        ArithOp::Sub => FMachine::new(2, label, |query| {
            let (a, b) = (query.get(0), query.get(1));
            Answer::finite(&a.q - &b.q, &a.eta + &b.eta)
        }),
        ArithOp::Mul => FMachine::new(2, label, |query| {
            let (a, b) = (query.get(0), query.get(1));
            Answer::finite(&a.q * &b.q, product_error(a, b))
        }),
        ArithOp::Neg => FMachine::new(1, label, |query| {
            let a = query.get(0);
            Answer::finite(-&a.q, a.eta.clone())
        }),
        ArithOp::Min => FMachine::new(2, label, |query| monotone_pair(query.get(0), query.get(1), Rational::min)),
        ArithOp::Max => FMachine::new(2, label, |query| monotone_pair(query.get(0), query.get(1), Rational::max)),
        ArithOp::Const(c) => return constant(c, 1).expect("arity 1"),
    };
    machine.expect("positive arity")
}

/// Feeds each inner machine's answer `(r_k, ε_k)` to the outer machine as
/// its `k`-th query component. Any inner `+∞` makes the composite answer
/// `(0, +∞)`.
pub fn compose(outer: &FMachine, inners: &[FMachine]) -> Result<FMachine, MachineError> {
    outer.check_arity(inners.len())?;
    let arity = inners[0].arity;
    if let Some(odd) = inners.iter().find(|m| m.arity != arity) {
        return Err(MachineError::InnerArityMismatch(arity, odd.arity));
    }
    let label = format!(
        "{}({})",
        outer.label,
        inners.iter().map(|m| &*m.label).collect::<Vec<_>>().join(", ")
    );
    let outer = outer.clone();
    let inners = inners.to_vec();
    FMachine::new(arity, label, move |query| {
        let mut components = Vec::with_capacity(inners.len());
        for inner in &inners {
            let Answer { r, epsilon } = (inner.transition)(query);
            match epsilon {
                ExtAccuracy::Finite(eta) => components.push(Approx::new(r, eta)),
                ExtAccuracy::Infinity => return Answer::no_information(Rational::zero()),
            }
        }
        (outer.transition)(&Query(components))
    })
}

type Modulus = dyn Fn(&Positive) -> Positive + Send + Sync;
type Approximant = dyn Fn(&Rational, &Positive) -> Rational + Send + Sync;

/// A function presented with an a-priori modulus: whenever `|x − q| ≤ e(ε)`,
/// `|f(x) − approx(q, ε)| ≤ ε`.
#[derive(Clone)]
pub struct GlMachine {
    modulus: Arc<Modulus>,
    approx: Arc<Approximant>,
}

impl GlMachine {
    pub fn new(
        modulus: impl Fn(&Positive) -> Positive + Send + Sync + 'static,
        approx: impl Fn(&Rational, &Positive) -> Rational + Send + Sync + 'static,
    ) -> Self {
        Self {
            modulus: Arc::new(modulus),
            approx: Arc::new(approx),
        }
    }

    pub fn modulus(&self, epsilon: &Positive) -> Positive {
        (self.modulus)(epsilon)
    }

    pub fn approx(&self, q: &Rational, epsilon: &Positive) -> Rational {
        (self.approx)(q, epsilon)
    }
}

impl fmt::Debug for GlMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GlMachine").finish_non_exhaustive()
    }
}

/// Turns a modulus presentation into a query machine by searching the dyadic
/// grid `ε = 1, 1/2, …, 2^-grid_floor_exp` for the smallest `ε` whose
/// modulus covers the query radius.
pub fn gl_to_f(gl: &GlMachine, grid_floor_exp: u32) -> FMachine {
    let gl = gl.clone();
    FMachine::new(1, "gl", move |query| {
        let Approx { q, eta } = query.get(0);
        let best = (0..=grid_floor_exp)
            .map(Positive::dyadic)
            .filter(|eps| &gl.modulus(eps) >= eta)
            .min();
        match best {
            Some(eps) => Answer::finite(gl.approx(q, &eps), eps),
            None => Answer::no_information(gl.approx(q, &Positive::one())),
        }
    })
    .expect("arity 1")
}
