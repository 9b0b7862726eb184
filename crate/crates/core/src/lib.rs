//! Extremal radial maps between annuli for weighted combined energies under radial metrics.
//!
//! The solver computes the admissibility bound `r_max`, the first-integral
//! constant `α`, the radial minimizer `H = q⁻¹`, its energy and dual distortion,
//! and numerical evidence of minimality.

pub mod cli;
pub mod closed_forms;
pub mod energy;
pub mod error;
pub mod extremal;
pub mod interp;
pub mod io;
pub mod metric;
pub mod nitsche;
pub mod quadrature;
pub mod roots;
pub mod variation;

pub use closed_forms::{
    bound_power, bound_rho1, closed_form_for, compare_with_solver, theorem_b_profile, theorem_c_profile, theorem_d_profile,
    ClosedFormCase, ClosedFormComparison, ClosedFormFamily,
};
pub use energy::{
    distortion_closed_form, grid_energy, grid_energy_with, radial_distortion, radial_energy, EnergyBreakdown, InverseProfile,
    PolarGridMap, ThetaDerivative,
};
pub use error::{Error, Result};
pub use extremal::{build_profile, eval_h, phi, solve, solve_alpha, solve_alpha_detailed, ExtremalSolution, RadialProfile};
pub use metric::{eval_rho, eval_rho_prime, minimize_weight, weight, AnnulusPair, MetricSpec, Table, Weights};
pub use nitsche::{alpha0, classify, classify_with, nitsche_bound, nitsche_bound_detailed, NitscheReport, Regime};
pub use quadrature::{cumulative, integrate, QuadOptions, QuadResult};
pub use variation::{
    duality_check, el_residual, first_integral_deviation, perturbation_test, verify, PerturbationFamily, PerturbationOutcome,
    VerificationReport,
};
