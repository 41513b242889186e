//! Relations over the naturals in three presentations (decidable,
//! semi-decidable, enumerable) and the constructive conversions between
//! them.
//!
//! Partial computations are modelled as fuel-indexed programs: running with
//! fuel `f` performs at most `f` steps and either halts with a value or
//! reports that it is still running. Programs are monotone in fuel.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunResult {
    Halt(u64),
    StillRunning,
}

impl RunResult {
    pub fn halted(self) -> bool {
        matches!(self, Self::Halt(_))
    }
}

type Runner = dyn Fn(&[u64], u64) -> RunResult + Send + Sync;

/// A step-indexed partial function on tuples of naturals.
#[derive(Clone)]
pub struct FueledProgram {
    arity: usize,
    run: Arc<Runner>,
}

impl FueledProgram {
    pub fn new(arity: usize, run: impl Fn(&[u64], u64) -> RunResult + Send + Sync + 'static) -> Self {
        Self {
            arity,
            run: Arc::new(run),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Panics if `args` does not match the program's arity.
    pub fn run(&self, args: &[u64], fuel: u64) -> RunResult {
        assert_eq!(args.len(), self.arity, "program arity mismatch");
        (self.run)(args, fuel)
    }
}

impl fmt::Debug for FueledProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FueledProgram").field("arity", &self.arity).finish_non_exhaustive()
    }
}

/// A relation given by a total characteristic function.
#[derive(Clone)]
pub struct DecidableNatRel {
    name: Arc<str>,
    char_fn: Arc<dyn Fn(u64, u64) -> bool + Send + Sync>,
}

impl DecidableNatRel {
    pub fn new(name: impl Into<Arc<str>>, char_fn: impl Fn(u64, u64) -> bool + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            char_fn: Arc::new(char_fn),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The characteristic function, valued in {0, 1}.
    pub fn char_fn(&self, x: u64, y: u64) -> u8 {
        u8::from(self.holds(x, y))
    }

    pub fn holds(&self, x: u64, y: u64) -> bool {
        (self.char_fn)(x, y)
    }
}

impl fmt::Debug for DecidableNatRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("DecidableNatRel").field(&self.name).finish()
    }
}

/// A relation given by its partial characteristic function: a binary
/// program that halts with 1 exactly on members.
#[derive(Clone, Debug)]
pub struct SemiDecidableNatRel {
    program: FueledProgram,
}

impl SemiDecidableNatRel {
    /// The program must only ever halt with the value 1.
    pub fn new(program: FueledProgram) -> Self {
        assert_eq!(program.arity(), 2, "semi-decision programs are binary");
        Self { program }
    }

    pub fn program(&self) -> &FueledProgram {
        &self.program
    }

    pub fn run(&self, x: u64, y: u64, fuel: u64) -> RunResult {
        self.program.run(&[x, y], fuel)
    }

    pub fn accepts_within(&self, x: u64, y: u64, fuel: u64) -> bool {
        self.run(x, y, fuel) == RunResult::Halt(1)
    }
}

/// One step of an enumeration: a value, or the distinguished FAIL that is
/// never confused with data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Enumerated {
    Value(u64),
    Fail,
}

/// A relation given by a total function `(x, j) ↦ y | FAIL`; its members are
/// exactly the pairs `(x, y)` with `y` produced at some `j`.
#[derive(Clone)]
pub struct EnumerableNatRel {
    enumerate: Arc<dyn Fn(u64, u64) -> Enumerated + Send + Sync>,
}

impl EnumerableNatRel {
    pub fn new(enumerate: impl Fn(u64, u64) -> Enumerated + Send + Sync + 'static) -> Self {
        Self {
            enumerate: Arc::new(enumerate),
        }
    }

    pub fn enumerate(&self, x: u64, j: u64) -> Enumerated {
        (self.enumerate)(x, j)
    }
}

impl fmt::Debug for EnumerableNatRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnumerableNatRel").finish_non_exhaustive()
    }
}

/// Cantor pairing `(a + b)(a + b + 1)/2 + b`.
///
/// Panics on overflow, i.e. when `a + b` is around `2^32` or more.
pub fn pair(a: u64, b: u64) -> u64 {
    let s = a.checked_add(b).expect("pair: a + b overflows");
    let triangle = if s.is_multiple_of(2) {
        (s / 2).checked_mul(s + 1)
    } else {
        s.checked_mul(s.div_ceil(2))
    };
    triangle
        .and_then(|t| t.checked_add(b))
        .expect("pair: result overflows u64")
}

/// Inverse of [`pair`].
pub fn unpair(n: u64) -> (u64, u64) {
    // largest w with w(w+1)/2 <= n
    let w = ((8 * u128::from(n) + 1).isqrt() - 1) / 2;
    let w = u64::try_from(w).expect("diagonal index fits in u64");
    let t = if w % 2 == 0 { (w / 2) * (w + 1) } else { w * w.div_ceil(2) };
    let b = n - t;
    (w - b, b)
}

/// The program that halts with 1 where the characteristic function is 1
/// and never halts elsewhere.
pub fn dec_to_semi(r: &DecidableNatRel) -> SemiDecidableNatRel {
    let r = r.clone();
    SemiDecidableNatRel::new(FueledProgram::new(2, move |args, _fuel| {
        if r.holds(args[0], args[1]) {
            RunResult::Halt(1)
        } else {
            RunResult::StillRunning
        }
    }))
}

/// `enumerate(x, j)` with `(y, i) = unpair(j)` yields `y` when the
/// semi-decision accepts `(x, y)` within `i` steps, FAIL otherwise.
pub fn semi_to_enum(s: &SemiDecidableNatRel) -> EnumerableNatRel {
    let s = s.clone();
    EnumerableNatRel::new(move |x, j| {
        let (y, i) = unpair(j);
        if s.accepts_within(x, y, i) {
            Enumerated::Value(y)
        } else {
            Enumerated::Fail
        }
    })
}

/// As [`semi_to_enum`], but every FAIL is replaced by `witness(x)`, which the
/// caller guarantees to be a member of `R_x`. The enumeration is then total
/// onto `R_x`.
pub fn semi_to_enum_nonempty(
    s: &SemiDecidableNatRel,
    witness: impl Fn(u64) -> u64 + Send + Sync + 'static,
) -> EnumerableNatRel {
    let s = s.clone();
    EnumerableNatRel::new(move |x, j| {
        let (y, i) = unpair(j);
        if s.accepts_within(x, y, i) {
            Enumerated::Value(y)
        } else {
            Enumerated::Value(witness(x))
        }
    })
}

#[derive(Default)]
struct Scan {
    /// Every `j` below this has been inspected.
    next: u64,
    first_hit: HashMap<u64, u64>,
}

/// Sequential search: with fuel `f`, inspects `enumerate(x, 0..=f)` and
/// halts with 1 as soon as `y` shows up.
///
/// The scan of each `x` is remembered between runs, so repeated runs with
/// growing fuel do not redo work; results are the same as a fresh scan.
pub fn enum_to_semi(e: &EnumerableNatRel) -> SemiDecidableNatRel {
    let e = e.clone();
    let scans: Arc<Mutex<HashMap<u64, Scan>>> = Arc::default();
    SemiDecidableNatRel::new(FueledProgram::new(2, move |args, fuel| {
        let (x, y) = (args[0], args[1]);
        let mut scans = scans.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        let scan = scans.entry(x).or_default();
        if let Some(&j) = scan.first_hit.get(&y) {
            return if j <= fuel { RunResult::Halt(1) } else { RunResult::StillRunning };
        }
        while scan.next <= fuel {
            let j = scan.next;
            scan.next += 1;
            if let Enumerated::Value(v) = e.enumerate(x, j) {
                scan.first_hit.entry(v).or_insert(j);
                if v == y {
                    return RunResult::Halt(1);
                }
            }
        }
        RunResult::StillRunning
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub relation: String,
    pub bound: u64,
    pub fuel: u64,
    pub checked: u64,
    pub agreements: u64,
    /// Members not accepted within fuel.
    pub missed: Vec<(u64, u64)>,
    /// Non-members accepted: a hard failure at any fuel.
    pub false_accepts: Vec<(u64, u64)>,
    /// Smallest fuel sufficient for every accepted member.
    pub max_fuel_used: u64,
}

impl EquivalenceReport {
    pub fn full_agreement(&self) -> bool {
        self.agreements == self.checked && self.false_accepts.is_empty()
    }
}

/// Smallest fuel at which a monotone program accepts, given that it
/// accepts at `fuel`.
fn min_accepting_fuel(s: &SemiDecidableNatRel, x: u64, y: u64, fuel: u64) -> u64 {
    let (mut lo, mut hi) = (0, fuel);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if s.accepts_within(x, y, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Round-trips a decidable relation through semi-decision, enumeration and
/// sequential search, then compares the result with the characteristic
/// function on every pair in `[0, bound]²`.
pub fn equivalence_report(r: &DecidableNatRel, bound: u64, fuel: u64) -> EquivalenceReport {
    let round_trip = enum_to_semi(&semi_to_enum(&dec_to_semi(r)));
    compare(r, &round_trip, bound, fuel)
}

/// Compares any semi-decision procedure against a characteristic function.
pub fn compare(r: &DecidableNatRel, s: &SemiDecidableNatRel, bound: u64, fuel: u64) -> EquivalenceReport {
    let mut report = EquivalenceReport {
        relation: r.name().to_owned(),
        bound,
        fuel,
        checked: 0,
        agreements: 0,
        missed: Vec::new(),
        false_accepts: Vec::new(),
        max_fuel_used: 0,
    };
    for x in 0..=bound {
        for y in 0..=bound {
            report.checked += 1;
            let accepted = s.accepts_within(x, y, fuel);
            match (r.holds(x, y), accepted) {
                (true, true) => {
                    report.agreements += 1;
                    report.max_fuel_used = report.max_fuel_used.max(min_accepting_fuel(s, x, y, fuel));
                }
                (false, false) => report.agreements += 1,
                (true, false) => report.missed.push((x, y)),
                (false, true) => report.false_accepts.push((x, y)),
            }
        }
    }
    report
}

pub fn equality() -> DecidableNatRel {
    DecidableNatRel::new("equality", |x, y| x == y)
}

/// `x` divides `y`; zero divides only zero.
pub fn divisibility() -> DecidableNatRel {
    DecidableNatRel::new("divisibility", |x, y| if x == 0 { y == 0 } else { y % x == 0 })
}

/// `y >= x`.
pub fn geq() -> DecidableNatRel {
    DecidableNatRel::new("geq", |x, y| y >= x)
}

pub fn empty() -> DecidableNatRel {
    DecidableNatRel::new("empty", |_, _| false)
}

pub const CATALOG: [&str; 3] = ["equality", "divisibility", "geq"];

pub fn catalog(name: &str) -> Option<DecidableNatRel> {
    match name {
        "equality" => Some(equality()),
        "divisibility" => Some(divisibility()),
        "geq" => Some(geq()),
        _ => None,
    }
}

/// A member of `R_x` for each catalog relation (all have nonempty `R_x`).
pub fn catalog_witness(name: &str) -> Option<fn(u64) -> u64> {
    match name {
        "equality" | "geq" => Some(|x| x),
        "divisibility" => Some(|_| 0),
        _ => None,
    }
}
