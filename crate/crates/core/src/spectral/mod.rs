//! Deterministic numerics of the limiting spectral law: the edge parameters,
//! the self-consistent equation for the Stieltjes transform and the density.

mod edge;
mod population;
mod stieltjes;

pub use edge::{
    compute_lambda_r, compute_sigma, edge_params, edge_params_unchecked, edge_params_with,
    normalize_top_eigenvalue, solve_c, subcritical_check, EdgeOptions, EdgeParams,
};
pub use population::PopulationSpectrum;
pub use stieltjes::{
    companion_inverse, companion_transform, density_rho0, self_consistent_map, solve_m0,
    solve_m0_with, SolverOptions, StieltjesValue, DENSITY_ETAS,
};
