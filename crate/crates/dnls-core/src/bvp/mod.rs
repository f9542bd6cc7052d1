//! Orthogonal-collocation boundary value problem for periodic orbits.

pub mod basis;
pub mod constraints;
pub mod mesh;
pub mod orbit;
pub mod solve;
pub mod system;

pub use constraints::{
    CANONICAL_PARAMS, ConstraintSet, EnergyConvention, FreeParam, PhaseCondition, Target,
};
pub use mesh::{adapt_mesh, error_estimate, ErrorEstimate};
pub use orbit::{OrbitMonitors, RotatingOrbit};
pub use solve::{branch_tangent, newton_solve, transfer_matrices, NewtonReport};
pub use system::{assemble_residual, energy_expression_at_zero, LinearScalarEq, TrackedTargets};
