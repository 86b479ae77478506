//! eps(alpha)-norm evaluation and eps-norm computation via scalar
//! minimization over alpha, including alpha-sweep curve generation.
//!
//! For a stable, strictly proper system the squared eps(alpha)-norm is
//! tr(C P_a C') = tr(B' Q_a B); the eps-norm is its minimum over
//! admissible alpha.

use crate::error::{Error, Result};
use crate::solvers::{solve_p_alpha, solve_q_alpha};
use crate::sysmodel::{spectral_radius, LtiSystem};

/// Default grid density for the eps-norm scan.
pub const DEFAULT_GRID_POINTS: usize = 199;
/// Default golden-section bracket width on alpha.
pub const DEFAULT_REFINE_TOL: f64 = 1e-6;
/// Guard band delta keeping sweeps away from the open-interval endpoints.
pub const SWEEP_GUARD: f64 = 1e-4;

/// Two candidate trace paths agree unless the output/input dimensions are
/// imbalanced by more than this factor; then only the cheaper one runs.
const PATH_BALANCE_FACTOR: usize = 4;
const DUALITY_REL_TOL: f64 = 1e-9;

/// One sample of an alpha sweep; `value` is `None` where the objective was
/// infeasible.
#[derive(Debug, Clone, Copy)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub value: Option<f64>,
}

/// An ordered alpha sweep with strictly increasing alphas.
#[derive(Debug, Clone)]
pub struct AlphaCurve {
    pub points: Vec<AlphaPoint>,
}

impl AlphaCurve {
    /// Index of the feasible point with the smallest value, if any.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, pt) in self.points.iter().enumerate() {
            if let Some(v) = pt.value
                && best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((i, v));
                }
        }
        best.map(|(i, _)| i)
    }

    pub fn all_feasible(&self) -> bool {
        self.points.iter().all(|p| p.value.is_some())
    }
}

/// Result of an eps-norm minimization. `boundary_minimum` flags the case
/// where the infimum is approached at an open-interval endpoint and the
/// value is reported at the guard-band edge instead.
#[derive(Debug, Clone)]
pub struct EpsNormResult {
    pub value: f64,
    pub alpha_star: f64,
    pub boundary_minimum: bool,
    pub curve: Option<AlphaCurve>,
}

/// eps(alpha)-norm of a stable, strictly proper system: sqrt(tr(C P_a C')),
/// cross-checked against sqrt(tr(B' Q_a B)) whenever the two trace paths
/// cost within 4x of each other.
pub fn eps_alpha_norm(s: &LtiSystem, alpha: f64) -> Result<f64> {
    if !s.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let rho = spectral_radius(&s.a)?;
    if rho >= 1.0 {
        return Err(Error::UnstableSystem { rho });
    }

    let p_dim = s.p();
    let m_dim = s.m();
    let run_p = !(p_dim > PATH_BALANCE_FACTOR * m_dim);
    let run_q = !(m_dim > PATH_BALANCE_FACTOR * p_dim);

    let trace_p = if run_p {
        let cert = solve_p_alpha(&s.a, &s.b, alpha)?;
        Some((&s.c * &cert.shape * s.c.transpose()).trace())
    } else {
        None
    };
    let trace_q = if run_q {
        let cert = solve_q_alpha(&s.a, &s.c, alpha)?;
        Some((s.b.transpose() * &cert.shape * &s.b).trace())
    } else {
        None
    };

    let value = match (trace_p, trace_q) {
        (Some(tp), Some(tq)) => {
            if (tp - tq).abs() > DUALITY_REL_TOL * (1.0 + tp.abs()) {
                return Err(Error::ConsistencyCheckFailed {
                    what: "trace duality",
                    lhs: tp,
                    rhs: tq,
                });
            }
            tp
        }
        (Some(tp), None) => tp,
        (None, Some(tq)) => tq,
        (None, None) => unreachable!("at least one trace path always runs"),
    };
    Ok(value.max(0.0).sqrt())
}

/// Evaluates `objective` at `points` uniformly spaced alphas in [lo, hi]
/// (endpoints included). Infeasible evaluations are recorded, never abort
/// the sweep.
pub fn alpha_sweep<F>(objective: F, lo: f64, hi: f64, points: usize) -> Result<AlphaCurve>
where
    F: Fn(f64) -> Option<f64>,
{
    if !(lo > 0.0 && lo < hi && hi < 1.0) || points < 2 {
        return Err(Error::BadInterval { lo, hi, points });
    }
    let step = (hi - lo) / (points - 1) as f64;
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let alpha = if i + 1 == points { hi } else { lo + step * i as f64 };
        let value = objective(alpha).filter(|v| v.is_finite());
        out.push(AlphaPoint { alpha, value });
    }
    Ok(AlphaCurve { points: out })
}

/// Golden-section minimization of `f` on [a, b] down to bracket width `tol`.
/// Infeasible evaluations are treated as +infinity.
fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> Option<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let eval = |x: f64| f(x).filter(|v| v.is_finite()).unwrap_or(f64::INFINITY);

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// Outcome of the shared grid-scan-then-golden-refine strategy.
#[derive(Debug, Clone)]
pub(crate) struct GridMinimum {
    pub alpha_star: f64,
    pub value: f64,
    pub boundary_minimum: bool,
    pub curve: AlphaCurve,
}

/// Scans `objective` on a uniform grid over [lo, hi], then golden-section
/// refines around the best grid point. A best point at the grid edge is
/// reported at the edge with the boundary flag set (open-interval infimum).
pub(crate) fn grid_then_golden<F>(
    objective: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    refine_tol: f64,
) -> Result<GridMinimum>
where
    F: Fn(f64) -> Option<f64>,
{
    let curve = alpha_sweep(&objective, lo, hi, grid_points)?;
    let best = curve.argmin().ok_or(Error::AllInfeasible)?;
    let last = curve.points.len() - 1;

    if best == 0 || best == last {
        return Ok(GridMinimum {
            alpha_star: curve.points[best].alpha,
            value: curve.points[best].value.expect("argmin returns feasible points"),
            boundary_minimum: true,
            curve,
        });
    }

    let bracket_lo = curve.points[best - 1].alpha;
    let bracket_hi = curve.points[best + 1].alpha;
    let (mut alpha_star, mut value) = golden_section(&objective, bracket_lo, bracket_hi, refine_tol);
    // Golden section never revisits the grid point itself; keep whichever won.
    if let Some(grid_val) = curve.points[best].value
        && grid_val < value {
            alpha_star = curve.points[best].alpha;
            value = grid_val;
        }
    Ok(GridMinimum { alpha_star, value, boundary_minimum: false, curve })
}

/// eps-norm: minimizes the eps(alpha)-norm over the admissible interval
/// (rho^2(A) + delta, 1 - delta) by grid scan plus golden-section refinement.
pub fn eps_norm(s: &LtiSystem, grid_points: usize, refine_tol: f64) -> Result<EpsNormResult> {
    let rho = spectral_radius(&s.a)?;
    if rho >= 1.0 {
        return Err(Error::UnstableSystem { rho });
    }
    let lo = rho * rho + SWEEP_GUARD;
    let hi = 1.0 - SWEEP_GUARD;
    if lo >= hi {
        return Err(Error::AllInfeasible);
    }
    let objective = |alpha: f64| eps_alpha_norm(s, alpha).ok();
    let min = grid_then_golden(objective, lo, hi, grid_points.max(2), refine_tol)?;
    Ok(EpsNormResult {
        value: min.value,
        alpha_star: min.alpha_star,
        boundary_minimum: min.boundary_minimum,
        curve: Some(min.curve),
    })
}

/// [`eps_norm`] with the default grid density and refinement tolerance.
pub fn eps_norm_default(s: &LtiSystem) -> Result<EpsNormResult> {
    eps_norm(s, DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL)
}
