//! Discrete probabilistic algorithms over the reals: finitely many branches,
//! each a unary machine with an exact rational mass, masses summing to 1.

use std::fmt;

use thiserror::Error;

use crate::expr::{expr_to_machine, RealExpr};
use crate::machine::{refine, FMachine, Fuel, MachineError, NoConvergence};
use crate::ndrelation::{IndexSet, RealEnumRel};
use crate::oracle::{from_rational, RealOracle};
use crate::rational::{Positive, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("an algorithm needs at least one branch")]
    NoBranches,
    #[error("branch {index} has mass {mass} outside [0, 1]")]
    MassOutOfRange { index: usize, mass: Rational },
    #[error("branch masses sum to {0}, not 1")]
    MassSumInvalid(Rational),
    #[error("branch {index} has arity {arity}; branches take one argument")]
    NotUnary { index: usize, arity: usize },
    #[error("uniform draw {0} outside [0, 1)")]
    DrawOutOfRange(Rational),
    #[error("h and p disagree in length ({0} machines, {1} masses)")]
    ShapeMismatch(usize, usize),
    #[error("repartition machine failed validation at x={x}, y={y}: {reason}")]
    ValidationFailed { x: Box<Rational>, y: Box<Rational>, reason: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Clone, Debug)]
pub struct ProbBranch {
    pub machine: FMachine,
    pub mass: Rational,
}

impl ProbBranch {
    pub fn new(machine: FMachine, mass: Rational) -> Self {
        Self { machine, mass }
    }

    pub fn from_expr(e: &RealExpr, mass: Rational) -> Result<Self, MachineError> {
        Ok(Self::new(expr_to_machine(e, 1)?, mass))
    }
}

/// Validated branch list: every mass in `[0, 1]`, total exactly 1.
#[derive(Clone, Debug)]
pub struct DiscreteProbAlgorithm {
    branches: Vec<ProbBranch>,
    /// `cumulative[i]` is the mass of branches `0..=i`.
    cumulative: Vec<Rational>,
}

pub fn make_prob(branches: Vec<ProbBranch>) -> Result<DiscreteProbAlgorithm, ProbError> {
    if branches.is_empty() {
        return Err(ProbError::NoBranches);
    }
    let mut cumulative = Vec::with_capacity(branches.len());
    let mut total = Rational::zero();
    for (index, b) in branches.iter().enumerate() {
        if b.machine.arity() != 1 {
            return Err(ProbError::NotUnary {
                index,
                arity: b.machine.arity(),
            });
        }
        if b.mass.is_negative() || b.mass > Rational::one() {
            return Err(ProbError::MassOutOfRange {
                index,
                mass: b.mass.clone(),
            });
        }
        total = total + &b.mass;
        cumulative.push(total.clone());
    }
    if total != Rational::one() {
        return Err(ProbError::MassSumInvalid(total));
    }
    Ok(DiscreteProbAlgorithm { branches, cumulative })
}

impl DiscreteProbAlgorithm {
    pub fn branches(&self) -> &[ProbBranch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_mass(&self) -> Rational {
        self.cumulative.last().cloned().unwrap_or_default()
    }
}

/// The algorithm split into its outcome family `h` and mass vector `p`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub h: Vec<FMachine>,
    pub p: Vec<Rational>,
}

impl Decomposition {
    /// `h` as an enumerable relation over Ω = `{0, …, n − 1}`.
    pub fn family(&self) -> RealEnumRel {
        let h = self.h.clone();
        RealEnumRel::new(IndexSet::Finite(h.len() as u64), move |query, i| {
            usize::try_from(i)
                .ok()
                .and_then(|i| h.get(i))
                .and_then(|m| m.apply(query).ok())
        })
    }

    pub fn recompose(&self) -> Result<DiscreteProbAlgorithm, ProbError> {
        if self.h.len() != self.p.len() {
            return Err(ProbError::ShapeMismatch(self.h.len(), self.p.len()));
        }
        make_prob(
            self.h
                .iter()
                .zip(&self.p)
                .map(|(m, p)| ProbBranch::new(m.clone(), p.clone()))
                .collect(),
        )
    }
}

pub fn decompose(alg: &DiscreteProbAlgorithm) -> Decomposition {
    Decomposition {
        h: alg.branches.iter().map(|b| b.machine.clone()).collect(),
        p: alg.branches.iter().map(|b| b.mass.clone()).collect(),
    }
}

/// Inverse-CDF selection: the unique `i` with `C_{i−1} ≤ u < C_i`.
pub fn select_index(alg: &DiscreteProbAlgorithm, u: &Rational) -> Result<usize, ProbError> {
    if u.is_negative() || *u >= Rational::one() {
        return Err(ProbError::DrawOutOfRange(u.clone()));
    }
    // C is nondecreasing, so the first C_i above u is the answer
    let index = alg.cumulative.partition_point(|c| c <= u);
    Ok(index)
}

/// SplitMix64: a 64-bit state advanced by the golden-ratio increment and
/// passed through a two-round xor-shift-multiply finalizer.
///
/// Uniform draws are `next_u64() / 2^64`, exact dyadic rationals in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sampler {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// An independent stream for parallel sampling, derived only from
    /// `(seed, stream)`.
    pub fn stream(seed: u64, stream: u64) -> Self {
        Self {
            state: seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    pub fn next_uniform(&mut self) -> Rational {
        Rational::new(self.next_u64(), num_bigint::BigInt::from(1u8) << 64).expect("nonzero denominator")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub index: usize,
    pub r: Rational,
}

fn refine_branch(alg: &DiscreteProbAlgorithm, index: usize, x: &RealOracle, accuracy: &Positive, fuel: Fuel) -> Result<Rational, NoConvergence> {
    refine(&alg.branches[index].machine, std::slice::from_ref(x), accuracy, fuel)
        .expect("branches are unary")
        .into_result()
        .map(|(r, _)| r)
}

/// Draws a branch and refines its outcome at `x` to `accuracy`.
pub fn sample(
    alg: &DiscreteProbAlgorithm,
    x: &RealOracle,
    sampler: &mut Sampler,
    accuracy: &Positive,
    fuel: Fuel,
) -> Result<Sample, NoConvergence> {
    let u = sampler.next_uniform();
    let index = select_index(alg, &u).expect("draws lie in [0, 1)");
    let r = refine_branch(alg, index, x, accuracy, fuel)?;
    Ok(Sample { index, r })
}

/// Certified bounds on the mass of outcomes within `accuracy` of `y`.
///
/// `lower` collects branches certified close, `unknown` those that are
/// neither certified close nor certified far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassReport {
    pub lower: Rational,
    pub unknown: Rational,
}

impl fmt::Display for MassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lower={} unknown={}", self.lower, self.unknown)
    }
}

/// Per branch, refines the outcome at `x` and `y` to `accuracy / 4`. With
/// `d` the distance of the refined values and `s` the sum of their error
/// bounds, `d + s ≤ accuracy` certifies closeness and `d − s > accuracy`
/// certifies distance; anything else (including non-convergence) is
/// unknown.
pub fn outcome_mass(alg: &DiscreteProbAlgorithm, x: &RealOracle, y: &RealOracle, accuracy: &Positive, fuel: Fuel) -> MassReport {
    let quarter = accuracy.scale_down(4);
    let mut report = MassReport {
        lower: Rational::zero(),
        unknown: Rational::zero(),
    };
    let y_approx = y.query(&quarter);
    for branch in &alg.branches {
        let refined = refine(&branch.machine, std::slice::from_ref(x), &quarter, fuel)
            .expect("branches are unary")
            .into_result();
        let (Ok((r, eps)), Ok(q_y)) = (refined, &y_approx) else {
            report.unknown = report.unknown + &branch.mass;
            continue;
        };
        let d = (&r - q_y).abs();
        let slack = eps.get() + quarter.get();
        if &d + &slack <= *accuracy.get() {
            report.lower = report.lower + &branch.mass;
        } else if d - slack <= *accuracy.get() {
            report.unknown = report.unknown + &branch.mass;
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyReport {
    pub n: u64,
    pub counts: Vec<u64>,
    /// Refined outcome of each branch that was drawn at least once.
    pub outcomes: Vec<Option<Rational>>,
}

impl FrequencyReport {
    pub fn count_of(&self, indices: &[usize]) -> u64 {
        indices.iter().map(|&i| self.counts[i]).sum()
    }
}

/// Draws `n` samples. A branch's outcome is refined once, the first time it
/// is drawn; outcomes are deterministic so later draws reuse it.
pub fn empirical_frequency(
    alg: &DiscreteProbAlgorithm,
    x: &RealOracle,
    n: u64,
    sampler: &mut Sampler,
    accuracy: &Positive,
    fuel: Fuel,
) -> Result<FrequencyReport, NoConvergence> {
    let mut report = FrequencyReport {
        n,
        counts: vec![0; alg.len()],
        outcomes: vec![None; alg.len()],
    };
    for _ in 0..n {
        let u = sampler.next_uniform();
        let index = select_index(alg, &u).expect("draws lie in [0, 1)");
        if report.outcomes[index].is_none() {
            report.outcomes[index] = Some(refine_branch(alg, index, x, accuracy, fuel)?);
        }
        report.counts[index] += 1;
    }
    Ok(report)
}

/// An arity-2 machine `g(x, y)` read as `P(result ≤ y | input x)`, checked
/// on sample points to take values in `[0, 1]` and to be nondecreasing
/// in `y`.
#[derive(Clone, Debug)]
pub struct RepartitionMachine {
    machine: FMachine,
}

impl RepartitionMachine {
    pub fn machine(&self) -> &FMachine {
        &self.machine
    }

    /// `P(result ≤ y)` at input `x`, refined to `accuracy`.
    pub fn probability_at_most(&self, x: &RealOracle, y: &RealOracle, accuracy: &Positive, fuel: Fuel) -> Result<(Rational, Positive), NoConvergence> {
        refine(&self.machine, &[x.clone(), y.clone()], accuracy, fuel)
            .expect("arity 2")
            .into_result()
    }
}

pub fn cdf_algorithm(
    g: &FMachine,
    xs: &[Rational],
    ys: &[Rational],
    accuracy: &Positive,
    fuel: Fuel,
) -> Result<RepartitionMachine, ProbError> {
    if g.arity() != 2 {
        return Err(MachineError::ArityMismatch {
            expected: 2,
            found: g.arity(),
        }
        .into());
    }
    let candidate = RepartitionMachine { machine: g.clone() };
    let mut ys = ys.to_vec();
    ys.sort();
    ys.dedup();
    for x in xs {
        let fail = |y: &Rational, reason: String| ProbError::ValidationFailed {
            x: Box::new(x.clone()),
            y: Box::new(y.clone()),
            reason,
        };
        let mut previous: Option<(Rational, Rational)> = None;
        for y in &ys {
            let (r, eps) = candidate
                .probability_at_most(&from_rational(x.clone()), &from_rational(y.clone()), accuracy, fuel)
                .map_err(|nc| fail(y, nc.to_string()))?;
            let (lo, hi) = (&r - eps.get(), &r + eps.get());
            if hi.is_negative() || lo > Rational::one() {
                return Err(fail(y, format!("value {r} ± {eps} outside [0, 1]")));
            }
            if let Some((prev_lo, prev_y)) = &previous {
                if *prev_lo > hi {
                    return Err(fail(y, format!("decreases from y={prev_y}")));
                }
            }
            previous = Some((lo, y.clone()));
        }
    }
    Ok(candidate)
}

fn quarter() -> Rational {
    Rational::new(1, 4).expect("nonzero denominator")
}

fn quartered(outcomes: [RealExpr; 4]) -> DiscreteProbAlgorithm {
    let branches = outcomes
        .iter()
        .map(|e| ProbBranch::from_expr(e, quarter()).expect("unary expression"))
        .collect();
    make_prob(branches).expect("four quarters sum to 1")
}

/// `x` and `x + 1` with probability 1/2 each, over four branches of mass 1/4.
pub fn x_or_successor_alg() -> DiscreteProbAlgorithm {
    let succ = RealExpr::add(RealExpr::var(0), RealExpr::constant(Rational::one()));
    quartered([RealExpr::var(0), RealExpr::var(0), succ.clone(), succ])
}

/// `x` and `2x` with probability 1/2 each; both outcomes coincide at 0.
pub fn x_or_double_alg() -> DiscreteProbAlgorithm {
    let double = RealExpr::mul(RealExpr::constant(Rational::integer(2)), RealExpr::var(0));
    quartered([RealExpr::var(0), RealExpr::var(0), double.clone(), double])
}

/// `max(0, min(1, y − x))`: the repartition function of the uniform law on
/// `[x, x + 1]`.
pub fn uniform_cdf_expr() -> RealExpr {
    RealExpr::max(
        RealExpr::constant(Rational::zero()),
        RealExpr::min(
            RealExpr::constant(Rational::one()),
            RealExpr::sub(RealExpr::var(1), RealExpr::var(0)),
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::identity;
    use crate::rational::rat;

    fn fuel() -> Fuel {
        Fuel::new(200).unwrap()
    }

    #[test]
    fn make_prob_validates_masses() {
        assert_eq!(x_or_successor_alg().total_mass(), Rational::one());
        let bad = make_prob(vec![
            ProbBranch::new(identity(), rat(1, 2)),
            ProbBranch::new(identity(), rat(1, 3)),
        ]);
        assert_eq!(bad.unwrap_err(), ProbError::MassSumInvalid(rat(5, 6)));
        let single = make_prob(vec![ProbBranch::new(identity(), rat(1, 1))]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(
            make_prob(vec![ProbBranch::new(identity(), rat(3, 2)), ProbBranch::new(identity(), rat(-1, 2))]),
            Err(ProbError::MassOutOfRange { index: 0, .. })
        ));
        assert_eq!(make_prob(vec![]).unwrap_err(), ProbError::NoBranches);
    }

    #[test]
    fn decomposition_round_trip() {
        let d = decompose(&x_or_successor_alg());
        assert_eq!(d.p, vec![rat(1, 4); 4]);
        let q = crate::machine::Query::single(rat(2, 1), Positive::dyadic(3));
        let centres: Vec<_> = d.h.iter().map(|m| m.apply(&q).unwrap().r).collect();
        assert_eq!(centres, vec![rat(2, 1), rat(2, 1), rat(3, 1), rat(3, 1)]);
        let again = decompose(&d.recompose().unwrap());
        assert_eq!(again.p, d.p);

        let d = decompose(&x_or_double_alg());
        let centres: Vec<_> = d.h.iter().map(|m| m.apply(&q).unwrap().r).collect();
        assert_eq!(centres, vec![rat(2, 1), rat(2, 1), rat(4, 1), rat(4, 1)]);

        let single = decompose(&make_prob(vec![ProbBranch::new(identity(), rat(1, 1))]).unwrap());
        assert_eq!(single.p, vec![rat(1, 1)]);
        let broken = Decomposition { h: d.h.clone(), p: vec![rat(1, 1)] };
        assert!(matches!(broken.recompose(), Err(ProbError::ShapeMismatch(4, 1))));
    }

    #[test]
    fn select_index_examples() {
        let alg = x_or_successor_alg();
        assert_eq!(select_index(&alg, &rat(0, 1)), Ok(0));
        assert_eq!(select_index(&alg, &rat(3, 10)), Ok(1));
        assert_eq!(select_index(&alg, &rat(9, 10)), Ok(3));
        assert_eq!(select_index(&alg, &rat(1, 4)), Ok(1));
        assert!(select_index(&alg, &rat(1, 1)).is_err());
        assert!(select_index(&alg, &rat(-1, 8)).is_err());
    }

    #[test]
    fn zero_mass_branches_are_never_selected() {
        let alg = make_prob(vec![
            ProbBranch::new(identity(), rat(0, 1)),
            ProbBranch::new(identity(), rat(1, 2)),
            ProbBranch::new(identity(), rat(0, 1)),
            ProbBranch::new(identity(), rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(select_index(&alg, &rat(0, 1)), Ok(1));
        assert_eq!(select_index(&alg, &rat(1, 2)), Ok(3));
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0, as published with the generator
        let mut s = Sampler::new(0);
        assert_eq!(s.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(s.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(s.next_u64(), 0x06C4_5D18_8009_454F);
        let u = Sampler::new(0).next_uniform();
        assert!(!u.is_negative() && u < Rational::one());
        assert_ne!(Sampler::stream(7, 0), Sampler::stream(7, 1));
    }

    #[test]
    fn outcome_mass_examples() {
        let acc = Positive::dyadic(6);
        let zero = from_rational(rat(0, 1));
        let report = outcome_mass(&x_or_successor_alg(), &zero, &zero, &acc, fuel());
        assert_eq!(report, MassReport { lower: rat(1, 2), unknown: rat(0, 1) });
        let report = outcome_mass(&x_or_double_alg(), &zero, &zero, &acc, fuel());
        assert_eq!(report, MassReport { lower: rat(1, 1), unknown: rat(0, 1) });
        let report = outcome_mass(&x_or_successor_alg(), &zero, &from_rational(rat(5, 1)), &acc, fuel());
        assert_eq!(report, MassReport { lower: rat(0, 1), unknown: rat(0, 1) });

        let single = make_prob(vec![ProbBranch::new(identity(), rat(1, 1))]).unwrap();
        let boundary = from_rational(Rational::pow2(-6));
        let report = outcome_mass(&single, &zero, &boundary, &acc, fuel());
        assert_eq!(report, MassReport { lower: rat(0, 1), unknown: rat(1, 1) });
    }

    #[test]
    fn diverging_branch_is_unknown_mass() {
        let chi = expr_to_machine(&RealExpr::chi_pos(RealExpr::var(0)), 1).unwrap();
        let alg = make_prob(vec![ProbBranch::new(chi, rat(1, 3)), ProbBranch::new(identity(), rat(2, 3))]).unwrap();
        let zero = from_rational(rat(0, 1));
        let report = outcome_mass(&alg, &zero, &zero, &Positive::dyadic(4), Fuel::new(30).unwrap());
        assert_eq!(report, MassReport { lower: rat(2, 3), unknown: rat(1, 3) });
    }

    #[test]
    fn degenerate_sampling() {
        let single = make_prob(vec![ProbBranch::new(identity(), rat(1, 1))]).unwrap();
        let x = from_rational(rat(1, 3));
        let mut sampler = Sampler::new(42);
        for _ in 0..20 {
            let s = sample(&single, &x, &mut sampler, &Positive::dyadic(8), fuel()).unwrap();
            assert_eq!(s, Sample { index: 0, r: rat(1, 3) });
        }
        let report = empirical_frequency(&single, &x, 500, &mut Sampler::new(1), &Positive::dyadic(8), fuel()).unwrap();
        assert_eq!(report.counts, vec![500]);
    }

    #[test]
    fn uniform_cdf_values() {
        let g = expr_to_machine(&uniform_cdf_expr(), 2).unwrap();
        let acc = Positive::dyadic(12);
        let ys: Vec<_> = (-8..=16).map(|k| rat(k, 4)).collect();
        let xs = [rat(0, 1), rat(-3, 2), rat(7, 5)];
        let cdf = cdf_algorithm(&g, &xs, &ys, &acc, fuel()).unwrap();
        let zero = from_rational(rat(0, 1));
        for (y, expected) in [(rat(1, 2), rat(1, 2)), (rat(-1, 1), rat(0, 1)), (rat(2, 1), rat(1, 1))] {
            let (r, _) = cdf.probability_at_most(&zero, &from_rational(y), &acc, fuel()).unwrap();
            assert!((r - expected).abs() <= *acc.get());
        }
    }

    #[test]
    fn cdf_validation_rejects_bad_machines() {
        let acc = Positive::dyadic(10);
        let ys: Vec<_> = (-4..=4).map(|k| rat(k, 2)).collect();
        // decreasing in y
        let decreasing = RealExpr::max(
            RealExpr::constant(Rational::zero()),
            RealExpr::min(RealExpr::constant(Rational::one()), RealExpr::sub(RealExpr::var(0), RealExpr::var(1))),
        );
        let g = expr_to_machine(&decreasing, 2).unwrap();
        assert!(matches!(cdf_algorithm(&g, &[rat(0, 1)], &ys, &acc, fuel()), Err(ProbError::ValidationFailed { .. })));
        // unbounded
        let g = expr_to_machine(&RealExpr::var(1), 2).unwrap();
        assert!(matches!(cdf_algorithm(&g, &[rat(0, 1)], &ys, &acc, fuel()), Err(ProbError::ValidationFailed { .. })));
        assert!(cdf_algorithm(&identity(), &[], &ys, &acc, fuel()).is_err());
    }
}
