//! Dense subproblem solvers.
//!
//! Four engines sit under everything else in the crate:
//!
//! * [`lp`] - bounded-variable two-phase primal simplex,
//! * [`qp`] - primal active-set method for convex quadratic programs,
//! * [`enumerate`] - lattice enumeration with optional bound pruning,
//! * [`sbb`] - spatial branch and bound for square-separable programs.
//!
//! Solves return tagged outcomes (optimal / infeasible / unbounded)
//! rather than bare vectors, and optimal LP/QP outcomes carry a
//! [`Certificate`] with residuals recomputed from the original data,
//! so callers can trust-but-verify every claim. Infeasible and
//! unbounded outcomes carry rays that witness the claim.

pub mod enumerate;
pub(crate) mod linalg;
pub mod lp;
pub mod qp;
pub mod sbb;

pub use enumerate::{enumerate_assignments, EnumerationOutcome};
pub use lp::{solve_lp, solve_lp_lex_smallest, DenseLinearProgram, LpOutcome};
pub use qp::{solve_qp, DenseConvexQp, QpOutcome};
pub use sbb::{
    solve_square_program, square_form_of, DenseSquareProgram, SbbOutcome, SquareForm, SquareRow,
};

use serde::{Deserialize, Serialize};

/// Residual bundle attached to an optimal subsolver outcome. All
/// residuals are absolute; `objective` and `dual_objective` agree to
/// within the solver's tolerance at a clean optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
    pub objective: f64,
    pub dual_objective: f64,
}

impl Certificate {
    /// Gap between primal and dual objectives.
    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }

    /// All residuals and the duality gap within `tol * (1 + |value|)`.
    pub fn is_clean(&self, tol: f64) -> bool {
        let scale = 1.0 + self.objective.abs();
        self.primal_residual <= tol * scale
            && self.dual_residual <= tol * scale
            && self.complementarity <= tol * scale
            && self.duality_gap() <= tol * scale
    }
}

/// Witness that a linear system has no solution: multipliers `y`
/// (nonnegative on `<=` rows) under which the best achievable
/// left-hand side still exceeds the right-hand side by `margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasWitness {
    pub row_multipliers: Vec<f64>,
    pub margin: f64,
}
