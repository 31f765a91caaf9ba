//! Random-matrix models: entry laws, population covariances, sample
//! covariance draws and Gaussian ensembles.

mod entries;
mod gaussian;
pub mod io;
mod rng;
mod sample;
mod sigma;

pub use entries::{
    pareto_threshold, sample_entries, EntryDistribution, EntryMatrix, DISCRETE_U_ATOMS,
    DISCRETE_U_COUNTS,
};
pub use gaussian::{
    draw_goe_top3, draw_goe_top3_dense, edge_rescaled, gaussian_dense, gaussian_tridiagonal,
    top3_of_matrix, Beta,
};
pub use rng::replicate_seed;
pub(crate) use rng::{stream_rng, Stream};

pub(crate) use sample::top_spectrum_of;
pub use sample::{
    apply_sigma_sqrt, draw_sample, outer_top_spectrum, SampleDraw, DEFAULT_EIGENVECTOR_CAP,
};
pub use sigma::{build_sigma, haar_orthogonal, Sigma, SigmaModel};
