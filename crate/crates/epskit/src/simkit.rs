//! Disturbance generation, trajectory simulation, and empirical validation
//! of the ellipsoidal containment and l1-output bounds.
//!
//! All randomness flows through a seeded ChaCha8 stream (rand_chacha's
//! `ChaCha8Rng`, seeded via `seed_from_u64`), with normal deviates produced
//! by an in-crate Box-Muller transform. Identical specs therefore yield
//! bit-identical disturbance sequences on every platform.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::sysmodel::{spectral_norm, spectral_radius, sym_part, CertKind, EllipsoidCert, LtiSystem};

/// Name of the generator backing all disturbance sampling, reported by the
/// CLI `--version` output.
pub const RNG_ID: &str = "chacha8";

/// Per-step disturbance classes, all confined to the closed unit ball
/// (|w_k| <= 1 in the Euclidean norm).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceKind {
    /// A fresh uniformly random unit vector each step.
    ExtremeSwitching,
    /// Uniform in the unit ball.
    UniformBall,
    /// The first basis vector at every step.
    Constant,
    /// Per-step maximizer of the next-state ellipsoid functional; state
    /// dependent, so produced by [`simulate_greedy`] rather than
    /// [`gen_disturbance`].
    WorstCaseGreedy,
}

/// A reproducible disturbance description.
#[derive(Debug, Clone, Copy)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    pub seed: u64,
    pub steps: usize,
    pub dim: usize,
}

/// A simulated run: `states` has length steps + 1, `outputs` and
/// `disturbances` have length steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub disturbances: Vec<DVector<f64>>,
}

/// Containment summary against a reachable-set certificate.
#[derive(Debug, Clone, Copy)]
pub struct ContainmentStats {
    pub max_quadratic: f64,
    pub violations: usize,
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal deviate via Box-Muller (kept in-crate so the stream is
/// stable across dependency upgrades).
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let mut u1 = uniform01(rng);
    if u1 <= f64::MIN_POSITIVE {
        u1 = f64::MIN_POSITIVE;
    }
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_sphere(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

fn unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    let dir = unit_sphere(rng, dim);
    let radius = uniform01(rng).powf(1.0 / dim as f64);
    dir * radius
}

/// Generates the disturbance sequence for the state-independent kinds.
/// Deterministic given the seed; every sample lies in the closed unit ball.
pub fn gen_disturbance(spec: &DisturbanceSpec) -> Result<Vec<DVector<f64>>> {
    if spec.dim == 0 || spec.steps == 0 {
        return Err(Error::BadSpec { reason: "steps and dim must be positive".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samples = match spec.kind {
        DisturbanceKind::ExtremeSwitching => (0..spec.steps).map(|_| unit_sphere(&mut rng, spec.dim)).collect(),
        DisturbanceKind::UniformBall => (0..spec.steps).map(|_| unit_ball(&mut rng, spec.dim)).collect(),
        DisturbanceKind::Constant => {
            let mut e1 = DVector::zeros(spec.dim);
            e1[0] = 1.0;
            vec![e1; spec.steps]
        }
        DisturbanceKind::WorstCaseGreedy => {
            return Err(Error::BadSpec {
                reason: "WorstCaseGreedy is state dependent; use simulate_greedy".into(),
            });
        }
    };
    Ok(samples)
}

/// Exact recursion x_{k+1} = A x_k + B w_k with outputs y_k = C x_k + D w_k.
pub fn simulate(s: &LtiSystem, w: &[DVector<f64>], x0: &DVector<f64>) -> Result<Trajectory> {
    if x0.len() != s.n() {
        return Err(Error::DimensionMismatch {
            context: "simulate x0",
            expected: format!("{}", s.n()),
            got: format!("{}", x0.len()),
        });
    }
    for wk in w {
        if wk.len() != s.m() {
            return Err(Error::DimensionMismatch {
                context: "simulate w",
                expected: format!("{}", s.m()),
                got: format!("{}", wk.len()),
            });
        }
    }
    let mut states = Vec::with_capacity(w.len() + 1);
    let mut outputs = Vec::with_capacity(w.len());
    let mut x = x0.clone();
    states.push(x.clone());
    for (k, wk) in w.iter().enumerate() {
        outputs.push(&s.c * &x + &s.d * wk);
        x = &s.a * &x + &s.b * wk;
        if x.amax() > 1e15 {
            return Err(Error::Overflow { step: k + 1 });
        }
        states.push(x.clone());
    }
    Ok(Trajectory { states, outputs, disturbances: w.to_vec() })
}

/// Simulates under the per-step worst-case disturbance for the given
/// reachable-set certificate: w_k points along B' P^{-1} (A x_k) at full
/// magnitude (first basis vector when that direction vanishes, e.g. at the
/// origin).
pub fn simulate_greedy(
    s: &LtiSystem,
    cert: &EllipsoidCert,
    steps: usize,
    x0: &DVector<f64>,
) -> Result<Trajectory> {
    if cert.kind != CertKind::Reachable {
        return Err(Error::BadSpec { reason: "greedy simulation needs a Reachable certificate".into() });
    }
    if cert.dim() != s.n() || x0.len() != s.n() {
        return Err(Error::DimensionMismatch {
            context: "simulate_greedy",
            expected: format!("state dim {}", s.n()),
            got: format!("cert {} / x0 {}", cert.dim(), x0.len()),
        });
    }
    let chol = Cholesky::new(cert.shape.clone())
        .ok_or(Error::NotPositiveDefinite { what: "certificate shape", min_eig: f64::NAN })?;

    let mut w_seq = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for _ in 0..steps {
        let ax = &s.a * &x;
        let v = s.b.transpose() * chol.solve(&ax);
        let norm = v.norm();
        let wk = if norm > 1e-12 {
            v / norm
        } else {
            let mut e1 = DVector::zeros(s.m());
            e1[0] = 1.0;
            e1
        };
        x = ax + &s.b * &wk;
        w_seq.push(wk);
    }
    simulate(s, &w_seq, x0)
}

/// Maximum of x' P^{-1} x along the trajectory (via a Cholesky solve, never
/// an explicit inverse) and the count of samples exceeding 1 + 1e-6.
pub fn containment_stats(traj: &Trajectory, cert: &EllipsoidCert) -> Result<ContainmentStats> {
    if cert.kind != CertKind::Reachable {
        return Err(Error::BadSpec { reason: "containment check needs a Reachable certificate".into() });
    }
    let n = cert.dim();
    let chol = Cholesky::new(cert.shape.clone())
        .ok_or(Error::NotPositiveDefinite { what: "certificate shape", min_eig: f64::NAN })?;
    let mut max_quadratic = 0.0f64;
    let mut violations = 0usize;
    for x in &traj.states {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                context: "containment_stats",
                expected: format!("{}", n),
                got: format!("{}", x.len()),
            });
        }
        let q = x.dot(&chol.solve(x));
        max_quadratic = max_quadratic.max(q);
        if q > 1.0 + 1e-6 {
            violations += 1;
        }
    }
    Ok(ContainmentStats { max_quadratic, violations })
}

/// Certified truncation of the free-output l1 norm sum_k |C A^k x0|.
///
/// The tail is bounded by grouping the series in blocks of m, where m is a
/// power of two with |A^m| <= 1/2 (found by repeated squaring): the sum
/// beyond step k is at most |C| L/(1-L) times the trailing window of m
/// state norms, L = |A^m|. Iteration stops once that bound drops below
/// `tail_tol`, so the returned value is within `tail_tol` of the full sum.
pub fn output_l1_norm(s: &LtiSystem, x0: &DVector<f64>, tail_tol: f64) -> Result<f64> {
    if !s.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let rho = spectral_radius(&s.a)?;
    if rho >= 1.0 {
        return Err(Error::UnstableSystem { rho });
    }
    if x0.len() != s.n() {
        return Err(Error::DimensionMismatch {
            context: "output_l1_norm x0",
            expected: format!("{}", s.n()),
            got: format!("{}", x0.len()),
        });
    }
    let tail_tol = if tail_tol > 0.0 { tail_tol } else { 1e-12 };

    // Find m = 2^j with |A^m|_2 <= 1/2 by repeated squaring.
    let mut block = s.a.clone();
    let mut block_len = 1usize;
    let mut contraction = spectral_norm(&block);
    const MAX_BLOCK: usize = 1 << 20;
    while contraction > 0.5 {
        block = &block * &block;
        block_len *= 2;
        contraction = spectral_norm(&block);
        if block_len > MAX_BLOCK || !contraction.is_finite() {
            return Err(Error::ConvergenceFailure { what: "l1 tail contraction", limit: MAX_BLOCK });
        }
    }

    let c_norm = spectral_norm(&s.c);
    let tail_factor = c_norm * contraction / (1.0 - contraction);

    let mut total = 0.0f64;
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    let mut window_sum = 0.0f64;
    let mut v = x0.clone();
    const MAX_STEPS: usize = 10_000_000;
    for _ in 0..MAX_STEPS {
        total += (&s.c * &v).norm();
        v = &s.a * &v;
        let vn = v.norm();
        window.push_back(vn);
        window_sum += vn;
        if window.len() > block_len {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        if window.len() == block_len && tail_factor * window_sum < tail_tol {
            return Ok(total);
        }
    }
    Err(Error::ConvergenceFailure { what: "l1 summation", limit: MAX_STEPS })
}

/// `count` points on the boundary of the 2D projection of the certificate's
/// ellipsoid onto the coordinate plane (i, j). For Reachable certificates
/// the projection is the ellipse of the corresponding 2x2 sub-block of the
/// shape matrix; Observable certificates project the sub-block of its
/// inverse.
pub fn ellipsoid_boundary_points(
    cert: &EllipsoidCert,
    plane: (usize, usize),
    count: usize,
) -> Result<Vec<[f64; 2]>> {
    let n = cert.dim();
    let (i, j) = plane;
    if n < 2 || i >= n || j >= n || i == j {
        return Err(Error::BadPlane { i, j, n });
    }
    let cov = match cert.kind {
        CertKind::Reachable => cert.shape.clone(),
        CertKind::Observable => cert
            .shape
            .clone()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite { what: "certificate shape", min_eig: f64::NAN })?,
    };
    let sub = sym_part(&DMatrix::from_row_slice(
        2,
        2,
        &[cov[(i, i)], cov[(i, j)], cov[(j, i)], cov[(j, j)]],
    ));
    let eig = sub
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let sqrt_eig = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let sqrtm = &eig.eigenvectors * sqrt_eig * eig.eigenvectors.transpose();

    let mut points = Vec::with_capacity(count);
    for t in 0..count {
        let theta = std::f64::consts::TAU * t as f64 / count as f64;
        let dir = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
        let p = &sqrtm * dir;
        points.push([p[0], p[1]]);
    }
    Ok(points)
}
