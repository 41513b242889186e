//! Real numbers presented by accuracy queries: asking for `η` returns a
//! rational `q` with `|x − q| ≤ η`.

use std::fmt;
use std::sync::Arc;

use crate::machine::{refine, FMachine, Fuel, MachineError, NoConvergence};
use crate::rational::{Positive, Rational};

type Approximator = dyn Fn(&Positive) -> Result<Rational, NoConvergence> + Send + Sync;

/// A possibly partial presentation of a real number. Partial oracles (those
/// produced by applying a machine) signal [`NoConvergence`] instead of
/// blocking.
#[derive(Clone)]
pub struct RealOracle {
    label: Arc<str>,
    approx: Arc<Approximator>,
}

impl RealOracle {
    pub fn new(
        label: impl Into<Arc<str>>,
        approx: impl Fn(&Positive) -> Result<Rational, NoConvergence> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            approx: Arc::new(approx),
        }
    }

    pub fn query(&self, eta: &Positive) -> Result<Rational, NoConvergence> {
        (self.approx)(eta)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for RealOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RealOracle").field(&self.label).finish()
    }
}

/// The exact oracle for a rational: the same answer at every accuracy.
pub fn from_rational(q: Rational) -> RealOracle {
    RealOracle::new(q.to_string(), move |_| Ok(q.clone()))
}

/// The real `f(args)` as an oracle. Each request for accuracy `η` runs a
/// fresh refinement to target `η` under `fuel`.
pub fn apply_machine(m: &FMachine, args: &[RealOracle], fuel: Fuel) -> Result<RealOracle, MachineError> {
    if args.len() != m.arity() {
        return Err(MachineError::ArityMismatch {
            expected: m.arity(),
            found: args.len(),
        });
    }
    let label = format!(
        "{}({})",
        m.label(),
        args.iter().map(RealOracle::label).collect::<Vec<_>>().join(", ")
    );
    let m = m.clone();
    let args = args.to_vec();
    Ok(RealOracle::new(label, move |eta| {
        refine(&m, &args, eta, fuel)
            .expect("arity checked at construction")
            .into_result()
            .map(|(r, _)| r)
    }))
}
