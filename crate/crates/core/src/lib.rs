pub mod criticality;
pub mod diagnostics;
pub mod error;
pub mod linear;
pub mod mittag_leffler;
pub mod semilinear;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use mittag_leffler::{kernel_moment, ml_bound_probe, ml_e, ml_identity_residuals, mittag_leffler, MLPrecision, MLQuery};
pub use spectral::{
    evaluate, frac_norm, make_operator, project, q_a_of, Collocation, ExtReal, Operator, OperatorSpecConfig,
    SpectralField,
};
pub use linear::{
    convolve_forcing, homogeneous_state, solve_linear, strong_norm_probe, ForcingSpec, LinearProblem, SolutionTrace,
    TimeFunction, TimeGrid,
};
pub use diagnostics::{discrete_caputo, rate_fit, self_convergence, Order, RateFit};
pub use semilinear::{
    apply_nonlinearity, run, strong_solution_check, HypothesisClass, Marcher, NonlinearitySpec, PicardConfig, RunOutcome,
    RunStatus, SemilinearProblem, StrongCheck, StrongVerdict, WindowRecord,
};
