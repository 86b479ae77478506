//! eps-optimal gain synthesis: state feedback, observer, and output
//! feedback, plus the series-reduction identity used for cross-validation.
//!
//! Every synthesis call recomputes the achieved eps(alpha)-norm
//! independently on the returned closed loop and refuses to return when the
//! two routes disagree.

use nalgebra::DMatrix;

use crate::epsnorm::{eps_alpha_norm, grid_then_golden, AlphaCurve, SWEEP_GUARD};
use crate::error::{Error, Result};
use crate::solvers::{
    solve_dare_control, solve_dare_filter, solve_q_alpha, solve_stein, COND_LIMIT,
    SYNTH_ALPHA_MAX, SYNTH_ALPHA_MIN,
};
use crate::sysmodel::{
    cl_output_feedback, cl_state_feedback, sym_eig_range, sym_part, FilterPlant, LtiSystem,
    OutputFeedbackPlant, StateFeedbackPlant, SynthesisResult, ValidationReport,
};

const NORM_CHECK_REL_TOL: f64 = 1e-8;

/// The two trace terms of the output-feedback eps(alpha)-norm,
/// total^2 = tr(B1' Q B1) + tr(K P K' M) with M = ((1-a)/a) B2'QB2 + D2'D2.
/// M plays the role of R'R; the factor R itself is never formed.
#[derive(Debug, Clone, Copy)]
pub struct OutputFeedbackNormParts {
    pub term_q: f64,
    pub term_kp: f64,
    pub total: f64,
}

fn check_synth_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= SYNTH_ALPHA_MIN || alpha >= SYNTH_ALPHA_MAX {
        return Err(Error::AlphaOutOfRange { alpha, lo: SYNTH_ALPHA_MIN, hi: SYNTH_ALPHA_MAX });
    }
    Ok(())
}

fn require_valid(report: ValidationReport) -> Result<()> {
    if report.all_passed() {
        Ok(())
    } else {
        Err(Error::StructuralAssumptionViolated {
            failed: report.failed_names().join(", "),
        })
    }
}

/// Solves `inner * y = rhs` after checking cond(inner) < 1e12.
fn solve_inner(inner: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (min, max) = sym_eig_range(inner)?;
    let cond = if min.abs() > 0.0 { max.abs() / min.abs() } else { f64::INFINITY };
    if min <= 0.0 || cond > COND_LIMIT {
        return Err(Error::SingularInnerMatrix { cond });
    }
    inner
        .clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularInnerMatrix { cond: f64::INFINITY })
}

/// Feedback gain K = -(B'QB + (a/(1-a)) D'D)^{-1} B'QA.
pub fn gain_k(
    q: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    check_synth_alpha(alpha)?;
    let inner = sym_part(&(b.transpose() * q * b + d.transpose() * d * (alpha / (1.0 - alpha))));
    let rhs = b.transpose() * q * a;
    Ok(-solve_inner(&inner, &rhs)?)
}

/// Observer gain L = -A P C' (C P C' + (a/(1-a)) D D')^{-1}, the dual of
/// [`gain_k`] under transposition.
pub fn gain_l(
    p: &DMatrix<f64>,
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    Ok(gain_k(&p.transpose(), &a.transpose(), &c.transpose(), &d.transpose(), alpha)?.transpose())
}

fn check_norm_consistency(what: &'static str, formula: f64, direct: f64) -> Result<()> {
    if (formula - direct).abs() > NORM_CHECK_REL_TOL * (1.0 + formula.abs()) {
        if what == "output-feedback separation" {
            return Err(Error::SeparationCheckFailed { direct, formula });
        }
        return Err(Error::ConsistencyCheckFailed { what, lhs: formula, rhs: direct });
    }
    Ok(())
}

/// State-feedback synthesis at fixed alpha: Q from the control Riccati
/// equation, K from the gain formula, achieved norm sqrt(tr(Bw' Q Bw)).
pub fn synth_state_feedback(plant: &StateFeedbackPlant, alpha: f64) -> Result<SynthesisResult> {
    check_synth_alpha(alpha)?;
    require_valid(plant.validate_structure()?)?;
    let sol = solve_dare_control(&plant.a, &plant.b, &plant.c, &plant.d, alpha)?;
    let k = gain_k(&sol.x, &plant.a, &plant.b, &plant.d, alpha)?;
    let norm = (plant.bw.transpose() * &sol.x * &plant.bw).trace().max(0.0).sqrt();
    let closed_loop = cl_state_feedback(plant, &k)?;
    let recomputed = eps_alpha_norm(&closed_loop, alpha)?;
    check_norm_consistency("state-feedback norm", norm, recomputed)?;
    Ok(SynthesisResult {
        k: Some(k),
        l: None,
        p: None,
        q: Some(sol.x),
        alpha,
        eps_alpha_norm: norm,
        closed_loop,
    })
}

/// Observer synthesis at fixed alpha: P from the filter Riccati equation,
/// L from the gain formula, achieved norm sqrt(tr(Cz P Cz')). The attached
/// closed loop is the error system (A + LC, B + LD, Cz).
pub fn synth_observer(plant: &FilterPlant, alpha: f64) -> Result<SynthesisResult> {
    check_synth_alpha(alpha)?;
    require_valid(plant.validate_structure()?)?;
    let sol = solve_dare_filter(&plant.a, &plant.b, &plant.c, &plant.d, alpha)?;
    let l = gain_l(&sol.x, &plant.a, &plant.c, &plant.d, alpha)?;
    let norm = (&plant.cz * &sol.x * plant.cz.transpose()).trace().max(0.0).sqrt();
    let closed_loop = LtiSystem::new(
        &plant.a + &l * &plant.c,
        &plant.b + &l * &plant.d,
        plant.cz.clone(),
        None,
    )?;
    let recomputed = eps_alpha_norm(&closed_loop, alpha)?;
    check_norm_consistency("observer norm", norm, recomputed)?;
    Ok(SynthesisResult {
        k: None,
        l: Some(l),
        p: Some(sol.x),
        q: None,
        alpha,
        eps_alpha_norm: norm,
        closed_loop,
    })
}

/// Output-feedback synthesis at fixed alpha. Solves both Riccati equations
/// at the shared alpha, forms the gains, computes the norm trace-wise, and
/// verifies the separation identity against the 2n-state closed loop.
pub fn synth_output_feedback(
    plant: &OutputFeedbackPlant,
    alpha: f64,
) -> Result<(SynthesisResult, OutputFeedbackNormParts)> {
    check_synth_alpha(alpha)?;
    require_valid(plant.validate_structure()?)?;
    let p_sol = solve_dare_filter(&plant.a, &plant.b1, &plant.c1, &plant.d1, alpha)?;
    let q_sol = solve_dare_control(&plant.a, &plant.b2, &plant.c2, &plant.d2, alpha)?;
    let k = gain_k(&q_sol.x, &plant.a, &plant.b2, &plant.d2, alpha)?;
    let l = gain_l(&p_sol.x, &plant.a, &plant.c1, &plant.d1, alpha)?;

    let parts = output_feedback_norm_parts(plant, &p_sol.x, &q_sol.x, &k, alpha)?;

    let closed_loop = cl_output_feedback(plant, &k, &l)?;
    // Independent route: reachability-dual trace on the full 2n-state loop.
    let q_cl = solve_q_alpha(&closed_loop.a, &closed_loop.c, alpha)?;
    let direct = (closed_loop.b.transpose() * &q_cl.shape * &closed_loop.b)
        .trace()
        .max(0.0)
        .sqrt();
    check_norm_consistency("output-feedback separation", parts.total, direct)?;

    Ok((
        SynthesisResult {
            k: Some(k),
            l: Some(l),
            p: Some(p_sol.x),
            q: Some(q_sol.x),
            alpha,
            eps_alpha_norm: parts.total,
            closed_loop,
        },
        parts,
    ))
}

fn output_feedback_norm_parts(
    plant: &OutputFeedbackPlant,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    k: &DMatrix<f64>,
    alpha: f64,
) -> Result<OutputFeedbackNormParts> {
    let m = sym_part(
        &(plant.b2.transpose() * q * &plant.b2 * ((1.0 - alpha) / alpha)
            + plant.d2.transpose() * &plant.d2),
    );
    let term_q = (plant.b1.transpose() * q * &plant.b1).trace();
    let term_kp = (k * p * k.transpose() * &m).trace();
    if term_q < -1e-12 || term_kp < -1e-12 {
        return Err(Error::ConsistencyCheckFailed {
            what: "norm trace terms nonnegative",
            lhs: term_q,
            rhs: term_kp,
        });
    }
    let total = (term_q.max(0.0) + term_kp.max(0.0)).sqrt();
    Ok(OutputFeedbackNormParts { term_q, term_kp, total })
}

/// eps(alpha)-norm of the series composition S2 S1 where S1 = (Abar, Bbar,
/// Cbar) and S2 is a state-feedback closed loop with feedthrough and gain `k`, reduced
/// to the single system (Abar, Bbar, R Cbar) with R'R = ((1-a)/a) B'QB +
/// D'D. Computed trace-wise; R is never materialized.
pub fn reduced_series_norm(
    s1: &LtiSystem,
    _k: &DMatrix<f64>,
    q_alpha: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
) -> Result<f64> {
    if !s1.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    check_synth_alpha(alpha)?;
    let m = sym_part(&(b.transpose() * q_alpha * b * ((1.0 - alpha) / alpha) + d.transpose() * d));
    // Q-path Stein equation with output weight Cbar' M Cbar.
    let f = s1.a.transpose() / alpha.sqrt();
    let w = sym_part(&(s1.c.transpose() * &m * &s1.c / (1.0 - alpha)));
    let qbar = solve_stein(&f, &w)?;
    Ok((s1.b.transpose() * &qbar * &s1.b).trace().max(0.0).sqrt())
}

/// Which synthesis problem to solve; carries the plant itself.
#[derive(Debug, Clone)]
pub enum SynthesisPlant {
    StateFeedback(StateFeedbackPlant),
    Observer(FilterPlant),
    OutputFeedback(OutputFeedbackPlant),
}

impl SynthesisPlant {
    fn synthesize(&self, alpha: f64) -> Result<SynthesisResult> {
        match self {
            SynthesisPlant::StateFeedback(p) => synth_state_feedback(p, alpha),
            SynthesisPlant::Observer(p) => synth_observer(p, alpha),
            SynthesisPlant::OutputFeedback(p) => synth_output_feedback(p, alpha).map(|(r, _)| r),
        }
    }
}

/// The alpha-objective minimized by [`optimize_synthesis`]: the achieved
/// eps(alpha)-norm of the synthesized closed loop, evaluated cheaply from
/// the Riccati solutions alone.
pub fn synthesis_objective(plant: &SynthesisPlant, alpha: f64) -> Result<f64> {
    match plant {
        SynthesisPlant::StateFeedback(p) => {
            let sol = solve_dare_control(&p.a, &p.b, &p.c, &p.d, alpha)?;
            Ok((p.bw.transpose() * &sol.x * &p.bw).trace().max(0.0).sqrt())
        }
        SynthesisPlant::Observer(p) => {
            let sol = solve_dare_filter(&p.a, &p.b, &p.c, &p.d, alpha)?;
            Ok((&p.cz * &sol.x * p.cz.transpose()).trace().max(0.0).sqrt())
        }
        SynthesisPlant::OutputFeedback(p) => {
            let p_sol = solve_dare_filter(&p.a, &p.b1, &p.c1, &p.d1, alpha)?;
            let q_sol = solve_dare_control(&p.a, &p.b2, &p.c2, &p.d2, alpha)?;
            let k = gain_k(&q_sol.x, &p.a, &p.b2, &p.d2, alpha)?;
            Ok(output_feedback_norm_parts(p, &p_sol.x, &q_sol.x, &k, alpha)?.total)
        }
    }
}

/// Result of an alpha-optimized synthesis, with the sweep curve that located
/// the minimizer.
#[derive(Debug, Clone)]
pub struct OptimizedSynthesis {
    pub result: SynthesisResult,
    pub boundary_minimum: bool,
    pub curve: AlphaCurve,
}

/// Minimizes the synthesis objective over alpha in (delta, 1 - delta) by
/// grid scan plus golden-section refinement, then synthesizes at the
/// minimizer. Structural assumptions are validated once up front.
pub fn optimize_synthesis(
    plant: &SynthesisPlant,
    grid_points: usize,
    refine_tol: f64,
) -> Result<OptimizedSynthesis> {
    let report = match plant {
        SynthesisPlant::StateFeedback(p) => p.validate_structure()?,
        SynthesisPlant::Observer(p) => p.validate_structure()?,
        SynthesisPlant::OutputFeedback(p) => p.validate_structure()?,
    };
    require_valid(report)?;

    let objective = |alpha: f64| synthesis_objective(plant, alpha).ok();
    let min = grid_then_golden(
        objective,
        SWEEP_GUARD,
        1.0 - SWEEP_GUARD,
        grid_points.max(2),
        refine_tol,
    )?;
    let result = plant.synthesize(min.alpha_star)?;
    Ok(OptimizedSynthesis {
        result,
        boundary_minimum: min.boundary_minimum,
        curve: min.curve,
    })
}
