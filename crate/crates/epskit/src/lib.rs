//! Analysis and eps-optimal synthesis of discrete-time linear systems under
//! arbitrary bounded (l-infinity) disturbances.
//!
//! The library computes invariant-ellipsoid approximations of reachable and
//! hardly observable sets, evaluates the eps(alpha)- and eps-norms, and
//! synthesizes optimal state-feedback, observer, and output-feedback gains
//! from alpha-scaled Lyapunov and Riccati equations. A simulation harness
//! validates the theoretical bounds empirically.
//!
//! Modules:
//! * [`sysmodel`]: system types, structural validation, closed-loop builders;
//! * [`solvers`]: alpha-scaled Stein and Riccati kernels;
//! * [`epsnorm`]: eps(alpha)-norm evaluation and alpha minimization;
//! * [`synthesis`]: optimal gain synthesis and the separation identities;
//! * [`simkit`]: disturbance generation, simulation, and bound validation.

pub mod epsnorm;
pub mod error;
pub mod simkit;
pub mod solvers;
pub mod synthesis;
pub mod sysmodel;

pub use error::{Error, Result};

pub use sysmodel::{
    cl_output_feedback, cl_state_feedback, spectral_radius, CertKind, CheckResult, EllipsoidCert,
    FilterPlant, LtiSystem, OutputFeedbackPlant, StateFeedbackPlant, SynthesisResult,
    ValidationReport,
};

pub use solvers::{
    solve_dare_control, solve_dare_filter, solve_p_alpha, solve_q_alpha, solve_stein,
    RiccatiSolution,
};

pub use epsnorm::{
    alpha_sweep, eps_alpha_norm, eps_norm, eps_norm_default, AlphaCurve, AlphaPoint, EpsNormResult,
    DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL, SWEEP_GUARD,
};

pub use synthesis::{
    gain_k, gain_l, optimize_synthesis, reduced_series_norm, synth_observer, synth_output_feedback,
    synth_state_feedback, synthesis_objective, OptimizedSynthesis, OutputFeedbackNormParts,
    SynthesisPlant,
};

pub use simkit::{
    containment_stats, ellipsoid_boundary_points, gen_disturbance, output_l1_norm, simulate,
    simulate_greedy, ContainmentStats, DisturbanceKind, DisturbanceSpec, Trajectory, RNG_ID,
};
