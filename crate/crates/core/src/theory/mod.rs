//! Numerical witnesses for the structural claims about linear surrogates:
//! curvature preservation under `x = P y`, a joint non-quasiconvexity
//! counterexample, a per-column quasiconvexity probe and the generalization bound.

mod bound;
mod hessian;
mod probes;
mod report;

pub use bound::{rademacher_bound, BoundInputs};
pub use hessian::{
    check_convexity_preservation, check_dr_preservation, finite_difference_hessian, CheckOutcome,
    ConstantHessian, HessianOracle,
};
pub use probes::{
    coordinate_quasiconvexity_probe, counterexample_matrices, counterexample_opt, segment_probe,
    surrogate_opt, ProbeReport,
};
pub use report::{
    estimate_portfolio_gap, run_theory_checks, theory_report_csv, write_theory_report, TheoryCheck,
    HESSIAN_TOL, PROBE_TOL, P_DRAWS, QUASICONVEXITY_TRIALS,
};
