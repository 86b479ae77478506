//! Numerical kernels for the alpha-scaled discrete Lyapunov (Stein)
//! equations and the alpha-scaled discrete Riccati equations.
//!
//! The scaled equations reduce to standard forms:
//!
//! * (1/a) A P A' - P + (1/(1-a)) B B' = 0  is the Stein equation
//!   F X F' - X + W = 0 with F = A/sqrt(a), W = BB'/(1-a);
//! * the alpha-scaled control Riccati equation is the standard DARE with
//!   Abar = A/sqrt(a), state weight C'C/(1-a) and input weight
//!   (a/(1-a)) D'D, after which the gain is recovered from the unscaled
//!   formula.
//!
//! The Stein solver uses the squaring (doubling) iteration
//! X <- X + F X F', F <- F^2. The Riccati solver uses structure-preserving
//! doubling when the input weight is well conditioned and otherwise falls
//! back to the Riccati difference recursion, polished by Newton steps (each
//! a Stein solve on the current closed loop) once a stabilizing gain is
//! available.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sysmodel::{
    all_finite, asymmetry, spectral_radius, sym_eig_range, sym_part, CertKind, EllipsoidCert,
};

const STEIN_UPDATE_TOL: f64 = 1e-14;
const STEIN_MAX_DOUBLINGS: usize = 200;
const STEIN_RESIDUAL_TOL: f64 = 1e-10;

const RICCATI_CHANGE_TOL: f64 = 1e-13;
const RICCATI_RESIDUAL_TOL: f64 = 1e-9;
const RICCATI_MAX_ITER: usize = 10_000;
const SDA_MAX_DOUBLINGS: usize = 100;
const NEWTON_MAX_STEPS: usize = 50;

/// Inverses with condition number above this are treated as singular.
pub(crate) const COND_LIMIT: f64 = 1e12;

/// Guard band below which alpha counts as touching an interval boundary.
const ALPHA_GUARD: f64 = 1e-10;

/// Admissible alpha interval for the synthesis Riccati equations.
pub const SYNTH_ALPHA_MIN: f64 = 1e-6;
pub const SYNTH_ALPHA_MAX: f64 = 1.0 - 1e-6;

/// A positive definite Riccati solution together with the Frobenius norm of
/// the equation residual and the iteration count that produced it.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub x: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// Stein equation
// ---------------------------------------------------------------------------

/// Solves F X F' - X + W = 0 for Schur-stable F and symmetric W.
///
/// The solution equals the series sum_{i>=0} F^i W (F')^i; the doubling
/// iteration converges quadratically and the result is checked against the
/// residual contract |F X F' - X + W| <= 1e-10 (1 + |X|).
pub fn solve_stein(f: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::NonSquare { rows: f.nrows(), cols: f.ncols() });
    }
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_stein W",
            expected: format!("{}x{}", n, n),
            got: format!("{}x{}", w.nrows(), w.ncols()),
        });
    }
    if !all_finite(f) || !all_finite(w) {
        return Err(Error::NonFinite { context: "solve_stein" });
    }
    let asym = asymmetry(w);
    if asym > 1e-12 * (1.0 + w.norm()) {
        return Err(Error::NonSymmetricW { asymmetry: asym });
    }
    let rho = spectral_radius(f)?;
    if rho >= 1.0 - 1e-12 {
        return Err(Error::UnstableF { rho });
    }

    let mut x = stein_doubling(f, &sym_part(w))?;

    // Iterative refinement: for strongly non-normal F the squaring chain
    // loses transient-amplification x epsilon accuracy, so re-solve on the
    // residual defect until the contract holds with margin. Each pass
    // shrinks the defect by roughly that same factor.
    for _ in 0..4 {
        let defect = f * &x * f.transpose() - &x + w;
        if defect.norm() <= 0.25 * STEIN_RESIDUAL_TOL * (1.0 + x.norm()) {
            break;
        }
        let correction = stein_doubling(f, &sym_part(&defect))?;
        x = sym_part(&(&x + &correction));
    }

    let residual = (f * &x * f.transpose() - &x + w).norm();
    if residual > STEIN_RESIDUAL_TOL * (1.0 + x.norm()) {
        return Err(Error::ConsistencyCheckFailed {
            what: "Stein residual contract",
            lhs: residual,
            rhs: STEIN_RESIDUAL_TOL * (1.0 + x.norm()),
        });
    }
    Ok(x)
}

/// The raw squaring iteration X <- X + F X F', F <- F^2 (no residual gate).
fn stein_doubling(f: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = w.clone();
    let mut fk = f.clone();
    for _ in 0..STEIN_MAX_DOUBLINGS {
        let update = &fk * &x * fk.transpose();
        x = sym_part(&(&x + &update));
        if !all_finite(&x) {
            return Err(Error::ConvergenceFailure { what: "Stein doubling", limit: STEIN_MAX_DOUBLINGS });
        }
        if update.norm() < STEIN_UPDATE_TOL * (1.0 + x.norm()) {
            return Ok(x);
        }
        fk = &fk * &fk;
    }
    Err(Error::ConvergenceFailure { what: "Stein doubling", limit: STEIN_MAX_DOUBLINGS })
}

/// Validates alpha against the open interval (lo, hi) with the guard band.
fn check_alpha(alpha: f64, lo: f64, hi: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= lo || alpha >= hi {
        return Err(Error::AlphaOutOfRange { alpha, lo, hi });
    }
    if alpha - lo < ALPHA_GUARD || hi - alpha < ALPHA_GUARD {
        return Err(Error::SingularLimit { alpha, lo, hi });
    }
    Ok(())
}

/// Solves (1/a) A P A' - P + (1/(1-a)) B B' = 0 for the reachable-set shape
/// matrix P and wraps it in a certificate. Requires alpha in
/// (rho^2(A), 1), away from both boundaries.
pub fn solve_p_alpha(a: &DMatrix<f64>, b: &DMatrix<f64>, alpha: f64) -> Result<EllipsoidCert> {
    let rho = spectral_radius(a)?;
    check_alpha(alpha, rho * rho, 1.0)?;
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_p_alpha B",
            expected: format!("{} rows", a.nrows()),
            got: format!("{} rows", b.nrows()),
        });
    }
    let f = a / alpha.sqrt();
    let w = (b * b.transpose()) / (1.0 - alpha);
    let p = solve_stein(&f, &w)?;
    EllipsoidCert::new(p, alpha, CertKind::Reachable)
}

/// Solves (1/a) A' Q A - Q + (1/(1-a)) C' C = 0, the dual of
/// [`solve_p_alpha`] under (A, C) -> (A', C').
pub fn solve_q_alpha(a: &DMatrix<f64>, c: &DMatrix<f64>, alpha: f64) -> Result<EllipsoidCert> {
    let rho = spectral_radius(a)?;
    check_alpha(alpha, rho * rho, 1.0)?;
    if c.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_q_alpha C",
            expected: format!("{} cols", a.nrows()),
            got: format!("{} cols", c.ncols()),
        });
    }
    let f = a.transpose() / alpha.sqrt();
    let w = (c.transpose() * c) / (1.0 - alpha);
    let q = solve_stein(&f, &w)?;
    EllipsoidCert::new(q, alpha, CertKind::Observable)
}

// ---------------------------------------------------------------------------
// Riccati equations
// ---------------------------------------------------------------------------

/// Condition number of a symmetric PSD matrix from its eigenvalue range.
/// Returns infinity for singular or indefinite input.
fn psd_condition(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let (min, max) = sym_eig_range(m)?;
    if min <= 0.0 || max <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Pseudo-inverse solve of (sym PSD) `m` against `rhs`, dropping singular
/// directions below 1e-12 * sigma_max. Used inside the Riccati difference
/// recursion where early iterates can make the inner matrix rank deficient.
fn pinv_solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_part(m)
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-12 * max.max(f64::MIN_POSITIVE);
    let ut_rhs = eig.eigenvectors.transpose() * rhs;
    let mut scaled = ut_rhs;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let inv = if lambda > cutoff { 1.0 / lambda } else { 0.0 };
        scaled.row_mut(i).scale_mut(inv);
    }
    Ok(&eig.eigenvectors * scaled)
}

struct ScaledDare {
    abar: DMatrix<f64>,
    b: DMatrix<f64>,
    qbar: DMatrix<f64>,
    rbar: DMatrix<f64>,
}

impl ScaledDare {
    /// One sweep of the Riccati difference recursion.
    fn recurse(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let bxa = self.b.transpose() * x * &self.abar;
        let inner = &self.rbar + self.b.transpose() * x * &self.b;
        let gain_term = pinv_solve(&inner, &bxa)?;
        let next = self.abar.transpose() * x * &self.abar - self.abar.transpose() * x * &self.b * gain_term
            + &self.qbar;
        Ok(sym_part(&next))
    }

    /// Gain of the scaled system at iterate x (pseudo-inverse variant).
    fn gain(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let inner = &self.rbar + self.b.transpose() * x * &self.b;
        let bxa = self.b.transpose() * x * &self.abar;
        Ok(-pinv_solve(&inner, &bxa)?)
    }

    /// Structure-preserving doubling; requires rbar invertible.
    fn sda(&self) -> Option<(DMatrix<f64>, usize)> {
        let n = self.abar.nrows();
        let rinv = sym_part(&self.rbar).try_inverse()?;
        let mut g = sym_part(&(&self.b * rinv * self.b.transpose()));
        let mut h = self.qbar.clone();
        let mut ak = self.abar.clone();
        let eye = DMatrix::<f64>::identity(n, n);
        for iter in 0..SDA_MAX_DOUBLINGS {
            let lu = (&eye + &g * &h).lu();
            let w_a = lu.solve(&ak)?; // (I + GH)^{-1} A
            let w_g = lu.solve(&g)?; // (I + GH)^{-1} G
            let h_next = sym_part(&(&h + ak.transpose() * &h * &w_a));
            let g_next = sym_part(&(&g + &ak * &w_g * ak.transpose()));
            let a_next = &ak * &w_a;
            if !all_finite(&h_next) || !all_finite(&g_next) || !all_finite(&a_next) {
                return None;
            }
            let change = (&h_next - &h).norm();
            h = h_next;
            g = g_next;
            ak = a_next;
            // At the true solution A_k contracts to zero quadratically; a
            // stagnating H with a huge A_k is a false convergence signal.
            if change < RICCATI_CHANGE_TOL * (1.0 + h.norm()) && ak.norm() < 1.0 {
                return Some((h, iter + 1));
            }
        }
        None
    }

    /// First-choice candidate. Doubling handles an invertible input weight
    /// directly. A singular weight gets a stabilizing seed from doubling on
    /// a regularized weight; the exact equation is then solved by Newton
    /// steps, so no regularization error survives.
    fn doubling_candidate(&self) -> Option<(DMatrix<f64>, usize)> {
        if psd_condition(&self.rbar).ok()? < COND_LIMIT {
            return self.sda();
        }
        let m = self.rbar.nrows();
        let eps = 1e-6
            * (1.0 + self.rbar.norm() + (self.b.transpose() * &self.qbar * &self.b).norm());
        let regularized = ScaledDare {
            abar: self.abar.clone(),
            b: self.b.clone(),
            qbar: self.qbar.clone(),
            rbar: &self.rbar + DMatrix::identity(m, m) * eps,
        };
        let (seed, seed_iters) = regularized.sda()?;
        let (x, newton_iters) = self.newton_polish(&seed).ok()??;
        Some((x, seed_iters + newton_iters))
    }

    /// Riccati difference recursion with Newton (Kleinman) polish once a
    /// stabilizing gain appears. Each Newton step solves the closed-loop
    /// Stein equation via the doubling solver. The start sits slightly off
    /// Qbar: with a singular input weight, Qbar itself can be an exact
    /// non-stabilizing fixed point of the recursion.
    fn value_iteration(&self) -> Result<(DMatrix<f64>, usize)> {
        let n = self.qbar.nrows();
        let mut x = &self.qbar + DMatrix::identity(n, n) * (1e-6 * (1.0 + self.qbar.norm()));
        let mut iterations = 0usize;
        for iter in 0..RICCATI_MAX_ITER {
            let next = self.recurse(&x)?;
            if !all_finite(&next) {
                return Err(Error::NoStabilizingSolution {
                    reason: format!("iteration diverged at sweep {}", iter),
                });
            }
            let change = (&next - &x).norm();
            x = next;
            iterations = iter + 1;
            if change < RICCATI_CHANGE_TOL * (1.0 + x.norm()) {
                return Ok((x, iterations));
            }
            // Periodically try to jump to quadratic convergence.
            if iter >= 10 && iter % 25 == 0
                && let Some((polished, newton_iters)) = self.newton_polish(&x)? {
                    return Ok((polished, iterations + newton_iters));
                }
        }
        // One last polish attempt before giving up.
        if let Some((polished, newton_iters)) = self.newton_polish(&x)? {
            return Ok((polished, iterations + newton_iters));
        }
        Err(Error::NoStabilizingSolution {
            reason: format!("difference recursion exceeded {} sweeps", RICCATI_MAX_ITER),
        })
    }

    /// A gain that Schur-stabilizes the scaled pair, obtained from an
    /// auxiliary identity-weight Riccati equation. Identity weights keep
    /// the doubling iteration well scaled no matter how extreme the real
    /// cost data is.
    fn stabilizing_gain(&self) -> Option<DMatrix<f64>> {
        let n = self.abar.nrows();
        let m = self.b.ncols();
        let aux = ScaledDare {
            abar: self.abar.clone(),
            b: self.b.clone(),
            qbar: DMatrix::identity(n, n),
            rbar: DMatrix::identity(m, m),
        };
        let (x_aux, _) = aux.sda()?;
        let k = aux.gain(&x_aux).ok()?;
        let rho = spectral_radius(&(&self.abar + &self.b * &k)).ok()?;
        (rho < 1.0 - 1e-9).then_some(k)
    }

    /// Newton candidate seeded by the auxiliary stabilizing gain.
    fn stabilized_newton_candidate(&self) -> Option<(DMatrix<f64>, usize)> {
        let k0 = self.stabilizing_gain()?;
        self.newton_from_gain(k0).ok()?
    }

    /// Newton iteration from a (hopefully) stabilizing iterate. Returns
    /// Ok(None) when the current gain does not stabilize the scaled system.
    fn newton_polish(&self, x0: &DMatrix<f64>) -> Result<Option<(DMatrix<f64>, usize)>> {
        let k = self.gain(x0)?;
        let acl = &self.abar + &self.b * &k;
        if spectral_radius(&acl)? >= 1.0 - 1e-9 {
            return Ok(None);
        }
        self.newton_from_gain(k)
    }

    /// Kleinman iteration from a stabilizing gain: each step solves the
    /// closed-loop Stein equation of the current policy via the doubling
    /// solver, then refreshes the gain.
    fn newton_from_gain(&self, k0: DMatrix<f64>) -> Result<Option<(DMatrix<f64>, usize)>> {
        let mut x = DMatrix::zeros(self.abar.nrows(), self.abar.ncols());
        let mut k = k0;
        let mut best_change = f64::INFINITY;
        let mut since_progress = 0usize;
        for iter in 0..NEWTON_MAX_STEPS {
            let acl = &self.abar + &self.b * &k;
            let w = sym_part(&(&self.qbar + k.transpose() * &self.rbar * &k));
            let next = match solve_stein(&acl.transpose(), &w) {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
            let change = (&next - &x).norm();
            x = next;
            k = self.gain(&x)?;
            if change < RICCATI_CHANGE_TOL * (1.0 + x.norm()) {
                return Ok(Some((x, iter + 1)));
            }
            // The iteration contracts superlinearly until it hits its
            // floating-point floor; changes that stop halving the best seen
            // so far mean the floor is reached. Accept and let the residual
            // gates arbitrate.
            if change < 0.5 * best_change {
                since_progress = 0;
            } else {
                since_progress += 1;
                if iter >= 3 && since_progress >= 3 {
                    return Ok(Some((x, iter + 1)));
                }
            }
            best_change = best_change.min(change);
        }
        Ok(None)
    }
}

/// Residual of the alpha-scaled control Riccati equation evaluated verbatim:
/// (1/a) A'XB (B'XB + a/(1-a) D'D)^{-1} B'XA - (1/a) A'XA + X - (1/(1-a)) C'C.
fn control_riccati_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
    x: &DMatrix<f64>,
) -> Result<f64> {
    let inner = b.transpose() * x * b + d.transpose() * d * (alpha / (1.0 - alpha));
    let bxa = b.transpose() * x * a;
    let inner_inv_bxa = inner
        .clone()
        .lu()
        .solve(&bxa)
        .ok_or(Error::SingularInnerMatrix { cond: f64::INFINITY })?;
    let res = a.transpose() * x * b * inner_inv_bxa / alpha - a.transpose() * x * a / alpha + x
        - c.transpose() * c / (1.0 - alpha);
    Ok(res.norm())
}

/// Solves the alpha-scaled control Riccati equation for Q > 0.
///
/// Preconditions (not re-checked here; see plant validation): (A,B)
/// stabilizable, (C,A) observable, C'D = 0, alpha in (1e-6, 1 - 1e-6).
pub fn solve_dare_control(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
) -> Result<RiccatiSolution> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            context: "solve_dare_control",
            expected: format!("B {}xm, C px{}, D pxm", n, n),
            got: format!(
                "B {}x{}, C {}x{}, D {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            ),
        });
    }
    for m in [a, b, c, d] {
        if !all_finite(m) {
            return Err(Error::NonFinite { context: "solve_dare_control" });
        }
    }
    if !alpha.is_finite() || alpha <= SYNTH_ALPHA_MIN || alpha >= SYNTH_ALPHA_MAX {
        return Err(Error::AlphaOutOfRange { alpha, lo: SYNTH_ALPHA_MIN, hi: SYNTH_ALPHA_MAX });
    }

    let problem = ScaledDare {
        abar: a / alpha.sqrt(),
        b: b.clone(),
        qbar: sym_part(&(c.transpose() * c / (1.0 - alpha))),
        rbar: sym_part(&(d.transpose() * d * (alpha / (1.0 - alpha)))),
    };

    // Candidate chain, cheapest first; every candidate must pass the same
    // acceptance gates. The difference recursion is the last resort and the
    // only stage whose failure is reported.
    if let Some((x, iterations)) = problem.doubling_candidate()
        && let Ok(sol) = accept_control_solution(a, b, c, d, alpha, x, iterations)
    {
        return Ok(sol);
    }
    if let Some((x, iterations)) = problem.stabilized_newton_candidate()
        && let Ok(sol) = accept_control_solution(a, b, c, d, alpha, x, iterations)
    {
        return Ok(sol);
    }
    let (x, iterations) = problem.value_iteration()?;
    accept_control_solution(a, b, c, d, alpha, x, iterations)
}

/// Acceptance gates for a control Riccati candidate: positive definiteness,
/// inner-matrix conditioning, a Schur-stable scaled closed loop, and the
/// residual contract.
fn accept_control_solution(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
    x: DMatrix<f64>,
    iterations: usize,
) -> Result<RiccatiSolution> {
    let x = sym_part(&x);
    let (min_eig, max_eig) = sym_eig_range(&x)?;
    if min_eig <= 1e-12 * max_eig.abs() {
        return Err(Error::NoStabilizingSolution {
            reason: format!("iterate is not positive definite (min eigenvalue {:.3e})", min_eig),
        });
    }

    // Inner matrix must be honestly invertible at the solution.
    let inner = sym_part(&(b.transpose() * &x * b + d.transpose() * d * (alpha / (1.0 - alpha))));
    let cond = psd_condition(&inner)?;
    if cond > COND_LIMIT {
        return Err(Error::SingularInnerMatrix { cond });
    }

    // The stabilizing solution is the one whose implied closed loop
    // satisfies rho(A + BK) < sqrt(alpha); reject any other fixed point.
    let k = -(inner
        .clone()
        .lu()
        .solve(&(b.transpose() * &x * a))
        .ok_or(Error::SingularInnerMatrix { cond: f64::INFINITY })?);
    let rho_scaled = spectral_radius(&((a + b * &k) / alpha.sqrt()))?;
    if rho_scaled >= 1.0 {
        return Err(Error::NoStabilizingSolution {
            reason: format!("converged to a non-stabilizing solution (scaled rho {:.6})", rho_scaled),
        });
    }

    let residual = control_riccati_residual(a, b, c, d, alpha, &x)?;
    if residual > RICCATI_RESIDUAL_TOL * (1.0 + x.norm()) {
        return Err(Error::NoStabilizingSolution {
            reason: format!(
                "residual {:.3e} exceeds contract {:.3e}",
                residual,
                RICCATI_RESIDUAL_TOL * (1.0 + x.norm())
            ),
        });
    }

    Ok(RiccatiSolution { x, residual, iterations })
}

/// Solves the alpha-scaled filter Riccati equation for P > 0. Implemented as
/// [`solve_dare_control`] on the transposed data (A', C', B', D') with the
/// result transposed back.
pub fn solve_dare_filter(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    alpha: f64,
) -> Result<RiccatiSolution> {
    let sol = solve_dare_control(
        &a.transpose(),
        &c.transpose(),
        &b.transpose(),
        &d.transpose(),
        alpha,
    )?;
    Ok(RiccatiSolution {
        x: sol.x.transpose(),
        residual: sol.residual,
        iterations: sol.iterations,
    })
}
