//! A numerical laboratory for the nonlocal evolution equation
//!
//! ```text
//! u_t = d(J*u) - u,   u(0, ·) = u₀,   x ∈ ℝ,
//! ```
//!
//! where `J` is a continuous probability density and `d > 0`. The solution is
//! evaluated through its exact Fourier representation
//! `û(t,ξ) = e^{t(dĴ(ξ)-1)}·û₀(ξ)`, which gives the bound
//! `|u(t,x)| ≤ ‖û₀‖₁·e^{(d-1)t}`. For even, nonnegative, radially decreasing
//! `û₀` the cosine integral splits into an alternating series whose first
//! terms bracket `u`; with a narrow Gaussian kernel the lower bracket grows
//! like `e^{(d-1-ε)t}`, so the exponent `d - 1` cannot be improved.
//!
//! Modules:
//!
//! * [`quadrature`]: adaptive Gauss–Kronrod engine used by everything else.
//! * [`kernels`]: Gaussian and tabulated kernels, width selection.
//! * [`profiles`]: frequency-space initial data, the Fresnel integral and
//!   the positivity condition.
//! * [`spectral_solver`]: `u(t,x)` by cosine transform, grids, mass.
//! * [`series_lab`]: the `A_k/B_k/C_n` decomposition, lower bounds and the
//!   growth-rate experiment.
//! * [`direct_solver`]: an independent method-of-lines solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod direct_solver;
pub mod kernels;
pub mod profiles;
pub mod quadrature;
pub mod series_lab;
pub mod spectral_solver;

pub use direct_solver::{DirectConfig, DirectError, TimeIntegrator, Trajectory};
pub use kernels::{sigma_for_epsilon, KernelError, KernelSpec};
pub use profiles::{
    check_h2, example_inverse_transform, example_profile, fresnel_c, gaussian_profile,
    FrequencyProfile, H2Report, ProfileError, SqrtWeight,
};
pub use quadrature::{Estimate, QuadratureConfig, QuadratureError};
pub use series_lab::{
    series_report, sharpness_experiment, BoundsReport, LowerBoundReport, SeriesError, SeriesReport,
    SharpnessSetup,
};
pub use spectral_solver::{
    mass, solve_at, solve_grid, u_hat, ModelParams, SolutionGrid, SolverError,
};
