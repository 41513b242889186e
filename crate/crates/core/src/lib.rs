//! Exact real computation with interval-query machines.
//!
//! A real function is presented by a machine answering rational queries
//! `(q, η)` with rational answers `(r, ε)`; partial functions answer
//! `ε = +∞` where they carry no information. On top of that sit
//! nondeterministic relations (indexed families of machines) and discrete
//! probabilistic algorithms (families with rational masses). The [`natcomp`]
//! module holds the corresponding constructions over the naturals.
//!
//! All arithmetic is exact; nothing here touches floating point.

pub mod expr;
pub mod machine;
pub mod natcomp;
pub mod ndrelation;
pub mod oracle;
pub mod probrel;
pub mod rational;

pub use expr::{band_expr, expr_to_machine, RealExpr};
pub use machine::{
    chi_pos, compose, constant, domain_neighborhood, gl_to_f, identity, lift_arith, projection, refine, schedule_eta,
    Answer, Approx, ArithOp, DomainBound, FMachine, Fuel, GlMachine, MachineError, NoConvergence, Query,
    RefineOutcome,
};
pub use oracle::{apply_machine, from_rational, RealOracle};
pub use rational::{interval_of, rat, ExtAccuracy, Interval, Positive, Rational, RationalError};
