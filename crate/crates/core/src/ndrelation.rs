//! Effectively enumerable relations over the reals: `x R y` iff `y = f(x, i)`
//! for some index `i`, where each slice `f(·, i)` is a query machine that
//! may also answer FAIL (index not in use).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{expr_to_machine, RealExpr};
use crate::machine::{refine_with, Answer, FMachine, Fuel, MachineError, NoConvergence, Query, RefineOutcome};
use crate::oracle::RealOracle;
use crate::rational::{Positive, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("index {index} outside the index set {omega}")]
    IndexOutOfRange { index: u64, omega: IndexSet },
    #[error("index {0} is not in use (answers FAIL)")]
    FailIndex(u64),
    #[error("relation slices take one argument, got arity {0}")]
    NotUnary(usize),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexSet {
    /// `{0, …, n − 1}`, `n ≥ 1`.
    Finite(u64),
    Naturals,
}

impl IndexSet {
    pub fn contains(&self, i: u64) -> bool {
        match self {
            Self::Finite(n) => i < *n,
            Self::Naturals => true,
        }
    }

    /// Last index of the window `0..=max_index` that lies in the set.
    pub fn clip(&self, max_index: u64) -> u64 {
        match self {
            Self::Finite(n) => max_index.min(n - 1),
            Self::Naturals => max_index,
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(n) => write!(f, "{{0..{n}}}"),
            Self::Naturals => f.write_str("N"),
        }
    }
}

type Family = dyn Fn(&Query, u64) -> Option<Answer> + Send + Sync;

/// An index set and a deterministic family of unary slices; `None` is FAIL.
#[derive(Clone)]
pub struct RealEnumRel {
    omega: IndexSet,
    family: Arc<Family>,
}

impl fmt::Debug for RealEnumRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealEnumRel").field("omega", &self.omega).finish_non_exhaustive()
    }
}

/// The family was asked about an index it does not use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Failed;

impl RealEnumRel {
    pub fn new(omega: IndexSet, family: impl Fn(&Query, u64) -> Option<Answer> + Send + Sync + 'static) -> Self {
        Self {
            omega,
            family: Arc::new(family),
        }
    }

    pub fn omega(&self) -> IndexSet {
        self.omega
    }

    /// `F(q, η, i)`. Indices outside Ω answer FAIL.
    pub fn answer(&self, query: &Query, i: u64) -> Result<Option<Answer>, RelationError> {
        if query.arity() != 1 {
            return Err(RelationError::NotUnary(query.arity()));
        }
        if !self.omega.contains(i) {
            return Ok(None);
        }
        Ok((self.family)(query, i))
    }

    fn check_index(&self, index: u64) -> Result<(), RelationError> {
        if !self.omega.contains(index) {
            return Err(RelationError::IndexOutOfRange {
                index,
                omega: self.omega,
            });
        }
        Ok(())
    }
}

fn compile_unary(e: &RealExpr) -> Result<FMachine, RelationError> {
    if e.min_arity() > 1 {
        return Err(RelationError::NotUnary(e.min_arity()));
    }
    Ok(expr_to_machine(e, 1)?)
}

/// Ω = ℕ; index `i < head.len()` uses `head[i]`, every later index uses
/// `tail`.
pub fn make_tail_rel(head: &[RealExpr], tail: &RealExpr) -> Result<RealEnumRel, RelationError> {
    let head = head.iter().map(compile_unary).collect::<Result<Vec<_>, _>>()?;
    let tail = compile_unary(tail)?;
    Ok(RealEnumRel::new(IndexSet::Naturals, move |query, i| {
        let slice = usize::try_from(i).ok().and_then(|i| head.get(i)).unwrap_or(&tail);
        slice.apply(query).ok()
    }))
}

/// Ω = `{0, …, n − 1}`, one branch per index.
pub fn make_finite_rel(branches: &[RealExpr]) -> Result<RealEnumRel, RelationError> {
    if branches.is_empty() {
        return Err(MachineError::ZeroArity.into());
    }
    let machines = branches.iter().map(compile_unary).collect::<Result<Vec<_>, _>>()?;
    let n = machines.len() as u64;
    Ok(RealEnumRel::new(IndexSet::Finite(n), move |query, i| {
        usize::try_from(i)
            .ok()
            .and_then(|i| machines.get(i))
            .and_then(|m| m.apply(query).ok())
    }))
}

/// The graph of a function as a relation: every index answers as `m`.
pub fn from_function(m: &FMachine) -> Result<RealEnumRel, RelationError> {
    if m.arity() != 1 {
        return Err(RelationError::NotUnary(m.arity()));
    }
    let m = m.clone();
    Ok(RealEnumRel::new(IndexSet::Naturals, move |query, _| m.apply(query).ok()))
}

/// The `i0`-th slice as a standalone machine. Rejected when `i0` is outside
/// Ω or the slice answers FAIL; should a FAIL surface later on some other
/// query, it reads as `(0, +∞)`.
pub fn project(rel: &RealEnumRel, i0: u64) -> Result<FMachine, RelationError> {
    rel.check_index(i0)?;
    let probe = Query::single(Rational::zero(), Positive::one());
    if rel.answer(&probe, i0)?.is_none() {
        return Err(RelationError::FailIndex(i0));
    }
    let rel = rel.clone();
    Ok(FMachine::new(1, format!("slice{i0}"), move |query| {
        (rel.family)(query, i0).unwrap_or_else(|| Answer::no_information(Rational::zero()))
    })?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessOutcome {
    Value { r: Rational, epsilon: Positive },
    Fail,
    NoConvergence(NoConvergence),
}

/// Refines the `i`-th witness `f(x, i)` to the requested accuracy.
pub fn witness(
    rel: &RealEnumRel,
    x: &RealOracle,
    i: u64,
    accuracy: &Positive,
    fuel: Fuel,
) -> Result<WitnessOutcome, RelationError> {
    rel.check_index(i)?;
    let family = &rel.family;
    let outcome = refine_with(1, |query| family(query, i).ok_or(Failed), std::slice::from_ref(x), accuracy, fuel);
    Ok(match outcome {
        Err(Failed) => WitnessOutcome::Fail,
        Ok(RefineOutcome::Converged { r, epsilon, .. }) => WitnessOutcome::Value { r, epsilon },
        Ok(RefineOutcome::NoConvergence(nc)) => WitnessOutcome::NoConvergence(nc),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessEntry {
    pub index: u64,
    pub r: Rational,
    pub epsilon: Positive,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WitnessList {
    pub entries: Vec<WitnessEntry>,
    /// Indices that answered FAIL or did not converge within fuel.
    pub skipped: Vec<u64>,
}

/// Witnesses for every index in the window `0..=max_index` (clipped to Ω).
pub fn enumerate(rel: &RealEnumRel, x: &RealOracle, accuracy: &Positive, max_index: u64, fuel: Fuel) -> WitnessList {
    let mut list = WitnessList::default();
    for i in 0..=rel.omega.clip(max_index) {
        match witness(rel, x, i, accuracy, fuel).expect("index within Ω") {
            WitnessOutcome::Value { r, epsilon } => list.entries.push(WitnessEntry { index: i, r, epsilon }),
            WitnessOutcome::Fail | WitnessOutcome::NoConvergence(_) => list.skipped.push(i),
        }
    }
    list
}

/// Single-linkage clusters of witness values: two values share a cluster
/// when a chain of steps of exact distance `≤ radius` joins them. Clusters
/// are returned as index lists in order of first appearance.
pub fn cluster(entries: &[WitnessEntry], radius: &Positive) -> Vec<Vec<u64>> {
    let n = entries.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    for a in 0..n {
        for b in a + 1..n {
            if (&entries[a].r - &entries[b].r).abs() <= *radius.get() {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut clusters: Vec<(usize, Vec<u64>)> = Vec::new();
    for (k, entry) in entries.iter().enumerate() {
        let r = root(&mut parent, k);
        match clusters.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(entry.index),
            None => clusters.push((r, vec![entry.index])),
        }
    }
    clusters.into_iter().map(|(_, members)| members).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Found(u64),
    /// No witness certified within the window. Not a refutation: equality
    /// of reals cannot be decided.
    Exhausted,
}

/// Searches the window for an index whose witness is certifiably within
/// `accuracy` of `y`. Both sides are refined to `accuracy / 4`, so a match
/// needs `|r − q_y| + ε_r + accuracy/4 ≤ accuracy`.
pub fn member_semi(
    rel: &RealEnumRel,
    x: &RealOracle,
    y: &RealOracle,
    accuracy: &Positive,
    max_index: u64,
    fuel: Fuel,
) -> Membership {
    let quarter = accuracy.scale_down(4);
    let Ok(q_y) = y.query(&quarter) else {
        return Membership::Exhausted;
    };
    for i in 0..=rel.omega.clip(max_index) {
        if let Ok(WitnessOutcome::Value { r, epsilon }) = witness(rel, x, i, &quarter, fuel) {
            let spread = (&r - &q_y).abs() + epsilon.get() + quarter.get();
            if spread <= *accuracy.get() {
                return Membership::Found(i);
            }
        }
    }
    Membership::Exhausted
}

/// `{x}`: every index answers the identity.
pub fn identity_rel() -> RealEnumRel {
    make_tail_rel(&[], &RealExpr::var(0)).expect("unary expression")
}

/// `{x, x + 1}`: index 0 answers `x`, every other index `x + 1`.
pub fn x_or_successor_rel() -> RealEnumRel {
    let succ = RealExpr::add(RealExpr::var(0), RealExpr::constant(Rational::one()));
    make_tail_rel(&[RealExpr::var(0)], &succ).expect("unary expressions")
}
