//! System data types, structural validation, and closed-loop realization
//! builders for discrete-time LTI systems
//!
//!   x_{k+1} = A x_k + B u_k,   y_k = C x_k + D u_k.
//!
//! Stability throughout means Schur stability, rho(A) < 1.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};

/// Safety factor applied on top of machine epsilon in rank decisions.
pub(crate) const RANK_SAFETY: f64 = 64.0;

/// Eigenvalues with |lambda| >= 1 - PBH_BOUNDARY_TOL count as not stable
/// and are subjected to the PBH rank test.
const PBH_BOUNDARY_TOL: f64 = 1e-9;

const EIG_MAX_ITER: usize = 100_000;

// ---------------------------------------------------------------------------
// small matrix helpers shared across the crate
// ---------------------------------------------------------------------------

pub(crate) fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

pub(crate) fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix as (min, max).
pub(crate) fn sym_eig_range(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let eig = sym_part(m)
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::EigenFailure)?;
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

fn check_finite(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

fn dim_err(context: &'static str, expected: String, got: String) -> Error {
    Error::DimensionMismatch { context, expected, got }
}

// ---------------------------------------------------------------------------
// spectral radius
// ---------------------------------------------------------------------------

/// Largest eigenvalue magnitude of a square matrix, computed from the full
/// eigenvalue set via a real Schur decomposition.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
    }
    check_finite(m, "spectral_radius")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max))
}

/// Complex eigenvalues as (re, im) pairs.
fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().map(|l| (l.re, l.im)).collect())
}

// ---------------------------------------------------------------------------
// rank machinery: Krylov rank tests and PBH tests
// ---------------------------------------------------------------------------

/// Numerical rank with tolerance sigma_max * max(rows, cols) * eps * 64.
pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * RANK_SAFETY;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Rank of the n-block Krylov (controllability) matrix [B, AB, ..., A^{n-1}B].
fn krylov_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let m = b.ncols();
    let mut krylov = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        krylov.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    numerical_rank(&krylov)
}

fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (bool, f64) {
    let n = a.nrows();
    let rank = krylov_rank(a, b);
    (rank == n, (n - rank) as f64)
}

fn is_observable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> (bool, f64) {
    is_controllable(&a.transpose(), &c.transpose())
}

/// PBH test: rank [A - lambda I, B] = n for every eigenvalue with
/// |lambda| >= 1 (the discrete-time stability boundary is the unit circle).
/// Complex eigenvalues are handled through the real 2n x 2(n+m) embedding
/// [[A - aI, bI, B, 0], [-bI, A - aI, 0, B]], whose real rank is twice the
/// complex rank.
fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(bool, f64)> {
    let n = a.nrows();
    let m = b.ncols();
    let mut worst_deficiency = 0usize;
    for (re, im) in eigenvalues(a)? {
        if (re * re + im * im).sqrt() < 1.0 - PBH_BOUNDARY_TOL {
            continue;
        }
        let mut embed = DMatrix::zeros(2 * n, 2 * (n + m));
        let shifted = a - DMatrix::<f64>::identity(n, n) * re;
        embed.view_mut((0, 0), (n, n)).copy_from(&shifted);
        embed.view_mut((n, n), (n, n)).copy_from(&shifted);
        let imi = DMatrix::<f64>::identity(n, n) * im;
        embed.view_mut((0, n), (n, n)).copy_from(&imi);
        embed.view_mut((n, 0), (n, n)).copy_from(&(-&imi));
        embed.view_mut((0, 2 * n), (n, m)).copy_from(b);
        embed.view_mut((n, 2 * n + m), (n, m)).copy_from(b);
        let rank = numerical_rank(&embed);
        worst_deficiency = worst_deficiency.max(2 * n - rank.min(2 * n));
    }
    Ok((worst_deficiency == 0, worst_deficiency as f64))
}

fn is_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<(bool, f64)> {
    is_stabilizable(&a.transpose(), &c.transpose())
}

/// Absolute tolerance for the orthogonality assumptions C'D = 0 etc.
fn orthogonality_tol(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    1e-12 * (x.norm() * y.norm() + 1.0)
}

// ---------------------------------------------------------------------------
// validation report
// ---------------------------------------------------------------------------

/// Outcome of one structural check. For orthogonality checks the residual is
/// the Frobenius norm of the product that should vanish; for rank-based
/// checks it is the rank deficiency.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
}

/// Structural validation report. Assumption failures are reported here, not
/// thrown; synthesis operations refuse plants whose report fails.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    fn push(&mut self, name: &'static str, passed: bool, residual: f64) {
        self.checks.push(CheckResult { name, passed, residual });
    }
}

// ---------------------------------------------------------------------------
// LtiSystem
// ---------------------------------------------------------------------------

/// A discrete-time state-space realization (A, B, C, D). D defaults to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        if b.nrows() != n {
            return Err(dim_err("LtiSystem B", format!("{} rows", n), format!("{} rows", b.nrows())));
        }
        if c.ncols() != n {
            return Err(dim_err("LtiSystem C", format!("{} cols", n), format!("{} cols", c.ncols())));
        }
        let d = d.unwrap_or_else(|| DMatrix::zeros(c.nrows(), b.ncols()));
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(dim_err(
                "LtiSystem D",
                format!("{}x{}", c.nrows(), b.ncols()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        check_finite(&a, "LtiSystem A")?;
        check_finite(&b, "LtiSystem B")?;
        check_finite(&c, "LtiSystem C")?;
        check_finite(&d, "LtiSystem D")?;
        Ok(Self { a, b, c, d })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }
}

// ---------------------------------------------------------------------------
// synthesis plants
// ---------------------------------------------------------------------------

/// Plant for state-feedback design:
///   x_{k+1} = A x + B u + Bw w,   z = C x + D u,
/// with the standing assumptions C'D = 0, (A,B) stabilizable, (C,A) observable.
#[derive(Debug, Clone)]
pub struct StateFeedbackPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub bw: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateFeedbackPlant {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        bw: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        if b.nrows() != n || bw.nrows() != n {
            return Err(dim_err("StateFeedbackPlant inputs", format!("{} rows", n), format!("B {} / Bw {}", b.nrows(), bw.nrows())));
        }
        if c.ncols() != n {
            return Err(dim_err("StateFeedbackPlant C", format!("{} cols", n), format!("{} cols", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(dim_err(
                "StateFeedbackPlant D",
                format!("{}x{}", c.nrows(), b.ncols()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        for m in [&a, &b, &bw, &c, &d] {
            check_finite(m, "StateFeedbackPlant")?;
        }
        Ok(Self { a, b, bw, c, d })
    }

    pub fn validate_structure(&self) -> Result<ValidationReport> {
        let mut report = ValidationReport { checks: Vec::new() };
        let ortho = (self.c.transpose() * &self.d).norm();
        report.push("c_transpose_d_zero", ortho <= orthogonality_tol(&self.c, &self.d), ortho);
        let (ok, res) = is_stabilizable(&self.a, &self.b)?;
        report.push("a_b_stabilizable", ok, res);
        let (ok, res) = is_observable(&self.a, &self.c);
        report.push("c_a_observable", ok, res);
        Ok(report)
    }
}

/// Plant for observer design:
///   x_{k+1} = A x + B w,   y = C x + D w,   error output z = Cz (x - xhat),
/// with BD' = 0, (C,A) detectable, (A,B) controllable.
#[derive(Debug, Clone)]
pub struct FilterPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub cz: DMatrix<f64>,
}

impl FilterPlant {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        cz: DMatrix<f64>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        if b.nrows() != n {
            return Err(dim_err("FilterPlant B", format!("{} rows", n), format!("{} rows", b.nrows())));
        }
        if c.ncols() != n || cz.ncols() != n {
            return Err(dim_err("FilterPlant C/Cz", format!("{} cols", n), format!("C {} / Cz {}", c.ncols(), cz.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(dim_err(
                "FilterPlant D",
                format!("{}x{}", c.nrows(), b.ncols()),
                format!("{}x{}", d.nrows(), d.ncols()),
            ));
        }
        for m in [&a, &b, &c, &d, &cz] {
            check_finite(m, "FilterPlant")?;
        }
        Ok(Self { a, b, c, d, cz })
    }

    pub fn validate_structure(&self) -> Result<ValidationReport> {
        let mut report = ValidationReport { checks: Vec::new() };
        let ortho = (&self.b * self.d.transpose()).norm();
        report.push("b_d_transpose_zero", ortho <= orthogonality_tol(&self.b, &self.d), ortho);
        let (ok, res) = is_detectable(&self.a, &self.c)?;
        report.push("c_a_detectable", ok, res);
        let (ok, res) = is_controllable(&self.a, &self.b);
        report.push("a_b_controllable", ok, res);
        Ok(report)
    }
}

/// Plant for output-feedback design:
///   x_{k+1} = A x + B1 w + B2 u,   y = C1 x + D1 w,   z = C2 x + D2 u,
/// with B1 D1' = 0, C2'D2 = 0, (A,B2) stabilizable, (C2,A) observable,
/// (C1,A) detectable, (A,B1) controllable.
#[derive(Debug, Clone)]
pub struct OutputFeedbackPlant {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

impl OutputFeedbackPlant {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        c1: DMatrix<f64>,
        d1: DMatrix<f64>,
        c2: DMatrix<f64>,
        d2: DMatrix<f64>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        if b1.nrows() != n || b2.nrows() != n {
            return Err(dim_err("OutputFeedbackPlant B1/B2", format!("{} rows", n), format!("B1 {} / B2 {}", b1.nrows(), b2.nrows())));
        }
        if c1.ncols() != n || c2.ncols() != n {
            return Err(dim_err("OutputFeedbackPlant C1/C2", format!("{} cols", n), format!("C1 {} / C2 {}", c1.ncols(), c2.ncols())));
        }
        if d1.nrows() != c1.nrows() || d1.ncols() != b1.ncols() {
            return Err(dim_err(
                "OutputFeedbackPlant D1",
                format!("{}x{}", c1.nrows(), b1.ncols()),
                format!("{}x{}", d1.nrows(), d1.ncols()),
            ));
        }
        if d2.nrows() != c2.nrows() || d2.ncols() != b2.ncols() {
            return Err(dim_err(
                "OutputFeedbackPlant D2",
                format!("{}x{}", c2.nrows(), b2.ncols()),
                format!("{}x{}", d2.nrows(), d2.ncols()),
            ));
        }
        for m in [&a, &b1, &b2, &c1, &d1, &c2, &d2] {
            check_finite(m, "OutputFeedbackPlant")?;
        }
        Ok(Self { a, b1, b2, c1, d1, c2, d2 })
    }

    pub fn validate_structure(&self) -> Result<ValidationReport> {
        let mut report = ValidationReport { checks: Vec::new() };
        let ortho1 = (&self.b1 * self.d1.transpose()).norm();
        report.push("b1_d1_transpose_zero", ortho1 <= orthogonality_tol(&self.b1, &self.d1), ortho1);
        let ortho2 = (self.c2.transpose() * &self.d2).norm();
        report.push("c2_transpose_d2_zero", ortho2 <= orthogonality_tol(&self.c2, &self.d2), ortho2);
        let (ok, res) = is_stabilizable(&self.a, &self.b2)?;
        report.push("a_b2_stabilizable", ok, res);
        let (ok, res) = is_observable(&self.a, &self.c2);
        report.push("c2_a_observable", ok, res);
        let (ok, res) = is_detectable(&self.a, &self.c1)?;
        report.push("c1_a_detectable", ok, res);
        let (ok, res) = is_controllable(&self.a, &self.b1);
        report.push("a_b1_controllable", ok, res);
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// ellipsoid certificates
// ---------------------------------------------------------------------------

/// Which set an [`EllipsoidCert`] certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertKind {
    /// Reachable-set cover { x | x' P^{-1} x <= 1 } with shape matrix P.
    Reachable,
    /// Hardly-observable-set inner approximation { x | x' Q x <= 1 }.
    Observable,
}

/// A pair (shape matrix, alpha) certifying a reachable-set or hardly
/// observable set ellipsoid.
#[derive(Debug, Clone)]
pub struct EllipsoidCert {
    pub shape: DMatrix<f64>,
    pub alpha: f64,
    pub kind: CertKind,
}

impl EllipsoidCert {
    /// Builds a certificate, enforcing symmetry (to 1e-12 * scale) and
    /// positive definiteness of the shape matrix.
    pub fn new(shape: DMatrix<f64>, alpha: f64, kind: CertKind) -> Result<Self> {
        if shape.nrows() != shape.ncols() {
            return Err(Error::NonSquare { rows: shape.nrows(), cols: shape.ncols() });
        }
        check_finite(&shape, "EllipsoidCert shape")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange { alpha, lo: 0.0, hi: 1.0 });
        }
        let asym = asymmetry(&shape);
        if asym > 1e-12 * (1.0 + shape.norm()) {
            return Err(Error::NonSymmetricW { asymmetry: asym });
        }
        let shape = sym_part(&shape);
        let (min_eig, max_eig) = sym_eig_range(&shape)?;
        if min_eig <= 1e-14 * (1.0 + max_eig.abs()) {
            return Err(Error::NotPositiveDefinite { what: "ellipsoid shape", min_eig });
        }
        Ok(Self { shape, alpha, kind })
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }
}

// ---------------------------------------------------------------------------
// synthesis result container
// ---------------------------------------------------------------------------

/// Gains plus Riccati solutions plus the achieved eps(alpha)-norm, with the
/// closed-loop realization attached. `q` holds the control Riccati solution,
/// `p` the filter one; only the fields relevant to the synthesis mode are set.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub k: Option<DMatrix<f64>>,
    pub l: Option<DMatrix<f64>>,
    pub p: Option<DMatrix<f64>>,
    pub q: Option<DMatrix<f64>>,
    pub alpha: f64,
    pub eps_alpha_norm: f64,
    pub closed_loop: LtiSystem,
}

// ---------------------------------------------------------------------------
// closed-loop realizations
// ---------------------------------------------------------------------------

/// Closed loop of a state-feedback plant under u = Kx:
/// (A + BK, Bw, C + DK, 0).
pub fn cl_state_feedback(plant: &StateFeedbackPlant, k: &DMatrix<f64>) -> Result<LtiSystem> {
    let n = plant.a.nrows();
    let m = plant.b.ncols();
    if k.nrows() != m || k.ncols() != n {
        return Err(dim_err("cl_state_feedback K", format!("{}x{}", m, n), format!("{}x{}", k.nrows(), k.ncols())));
    }
    LtiSystem::new(
        &plant.a + &plant.b * k,
        plant.bw.clone(),
        &plant.c + &plant.d * k,
        None,
    )
}

/// Closed loop of an output-feedback plant under the observer-based
/// controller with gains (K, L), written in (x, e) coordinates with
/// e = x - xhat:
///
///   A_cl = [[A + B2 K, -B2 K], [0, A + L C1]],
///   B_cl = [B1; B1 + L D1],
///   C_cl = [C2 + D2 K, -D2 K].
pub fn cl_output_feedback(
    plant: &OutputFeedbackPlant,
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
) -> Result<LtiSystem> {
    let n = plant.a.nrows();
    let m = plant.b2.ncols();
    let mw = plant.b1.ncols();
    let p = plant.c1.nrows();
    let q = plant.c2.nrows();
    if k.nrows() != m || k.ncols() != n {
        return Err(dim_err("cl_output_feedback K", format!("{}x{}", m, n), format!("{}x{}", k.nrows(), k.ncols())));
    }
    if l.nrows() != n || l.ncols() != p {
        return Err(dim_err("cl_output_feedback L", format!("{}x{}", n, p), format!("{}x{}", l.nrows(), l.ncols())));
    }

    let a_k = &plant.a + &plant.b2 * k;
    let b2k = &plant.b2 * k;
    let a_l = &plant.a + l * &plant.c1;
    let d2k = &plant.d2 * k;

    let mut a_cl = DMatrix::zeros(2 * n, 2 * n);
    a_cl.view_mut((0, 0), (n, n)).copy_from(&a_k);
    a_cl.view_mut((0, n), (n, n)).copy_from(&(-&b2k));
    a_cl.view_mut((n, n), (n, n)).copy_from(&a_l);

    let mut b_cl = DMatrix::zeros(2 * n, mw);
    b_cl.view_mut((0, 0), (n, mw)).copy_from(&plant.b1);
    b_cl.view_mut((n, 0), (n, mw)).copy_from(&(&plant.b1 + l * &plant.d1));

    let mut c_cl = DMatrix::zeros(q, 2 * n);
    c_cl.view_mut((0, 0), (q, n)).copy_from(&(&plant.c2 + &d2k));
    c_cl.view_mut((0, n), (q, n)).copy_from(&(-&d2k));

    LtiSystem::new(a_cl, b_cl, c_cl, None)
}
