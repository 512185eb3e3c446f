//! Quadratic programs, first-order maximizers, and implicit differentiation
//! of the optimum through the KKT conditions.

mod active_set;
mod first_order;
mod kkt;
mod qp;

pub use active_set::{feasible_point, solve_qp, solve_qp_with, QpOptions};
pub use first_order::{
    frank_wolfe_maximize, projected_gradient_maximize, ProjectedGradientOptions,
    FRANK_WOLFE_DEFAULT_STEPS,
};
pub use kkt::{
    kkt_jacobian_p, kkt_jacobian_theta, kkt_vjp, ComposedWithP, KktSystem, QpDataGradient,
    QpDerivative, QpParameterization,
};
pub use qp::{kkt_audit, KktAudit, PrimalDualSolution, QuadraticProgram};
