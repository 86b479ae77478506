//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `--nocapture` to see them). Expected values are
//! either published constants, closed-form scalar results, or recomputed
//! here by independent oracles (truncated series, dense grids, Monte
//! Carlo); they are never read back from the code under test.

mod common;

use common::{example_plant, example_plant_path, Gen};
use epskit::{
    alpha_sweep, cl_state_feedback, containment_stats, eps_alpha_norm, eps_norm_default,
    gen_disturbance, optimize_synthesis, output_l1_norm, reduced_series_norm, simulate,
    simulate_greedy, solve_dare_control, solve_dare_filter, solve_p_alpha, solve_q_alpha,
    synth_observer, synth_output_feedback, synth_state_feedback, DisturbanceKind, DisturbanceSpec,
    LtiSystem, SynthesisPlant,
};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

fn pass(criterion: usize, title: &str, details: String) {
    println!("[acceptance] criterion {} ({}): PASS — {}", criterion, title, details);
}

/// Published optimal controller for the bundled example plant.
const PUBLISHED_K: [f64; 2] = [0.0928, -0.0643];
const PUBLISHED_L: [[f64; 2]; 2] = [[0.626, 0.281], [0.5, 0.0]];
const PUBLISHED_EPS_NORM: f64 = 241.2;

// ---------------------------------------------------------------------------
// 1. published-controller reproduction through the CLI
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_published_controller_via_cli() {
    let out_dir = std::env::temp_dir().join(format!("epsctl-accept-{}", std::process::id()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let gains_path = out_dir.join("gains.json");

    let started = Instant::now();
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_epsctl"))
        .arg("synth")
        .arg(example_plant_path())
        .args(["--mode", "output-feedback", "--optimize", "--out"])
        .arg(&gains_path)
        .output()
        .expect("binary runs");
    let elapsed = started.elapsed();
    assert!(output.status.success(), "synth failed: {}", String::from_utf8_lossy(&output.stderr));
    assert!(elapsed.as_secs_f64() < 5.0, "took {:?}, expected < 5 s", elapsed);

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&gains_path).unwrap()).unwrap();
    let k = doc["K"][0].as_array().unwrap();
    for (i, expected) in PUBLISHED_K.iter().enumerate() {
        let got = k[i].as_f64().unwrap();
        assert!((got - expected).abs() <= 2e-3, "K[{}] = {} vs published {}", i, got, expected);
    }
    for (i, row) in PUBLISHED_L.iter().enumerate() {
        for (j, expected) in row.iter().enumerate() {
            let got = doc["L"][i][j].as_f64().unwrap();
            assert!(
                (got - expected).abs() <= 2e-3,
                "L[{}][{}] = {} vs published {}",
                i,
                j,
                got,
                expected
            );
        }
    }
    let norm = doc["eps_alpha_norm"].as_f64().unwrap();
    assert!((norm - PUBLISHED_EPS_NORM).abs() <= 0.3, "eps-norm {} vs published {}", norm, PUBLISHED_EPS_NORM);

    pass(
        1,
        "published-controller reproduction",
        format!("eps-norm {:.4}, K and L within 2e-3, {:?}", norm, elapsed),
    );
}

// ---------------------------------------------------------------------------
// 2. objective feasible across the whole alpha interval
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_objective_feasible_everywhere() {
    let plant = SynthesisPlant::OutputFeedback(example_plant());
    let curve = alpha_sweep(
        |alpha| epskit::synthesis_objective(&plant, alpha).ok(),
        0.01,
        0.99,
        97,
    )
    .unwrap();
    assert_eq!(curve.points.len(), 97);
    assert!(curve.all_feasible(), "objective must be finite at every sweep point");

    let sweep_min = curve
        .points
        .iter()
        .filter_map(|p| p.value)
        .fold(f64::INFINITY, f64::min);
    let opt = optimize_synthesis(&plant, 199, 1e-6).unwrap();
    assert!(
        (sweep_min - opt.result.eps_alpha_norm).abs() <= 0.5,
        "sweep min {} vs optimized {}",
        sweep_min,
        opt.result.eps_alpha_norm
    );
    pass(
        2,
        "all-alpha feasibility",
        format!("97/97 feasible, sweep min {:.4} vs optimum {:.4}", sweep_min, opt.result.eps_alpha_norm),
    );
}

// ---------------------------------------------------------------------------
// 3 + 4. trace duality and residual contracts on a 200-system ensemble
// ---------------------------------------------------------------------------

/// The shared ensemble: 200 random stable systems with their admissible alpha.
fn ensemble() -> Vec<(LtiSystem, f64)> {
    let mut g = Gen::new(0x5EED_0003);
    (0..200)
        .map(|_| {
            let n = g.usize_in(1, 6);
            let m = g.usize_in(1, 3);
            let p = g.usize_in(1, 3);
            let rho = g.in_range(0.1, 0.95);
            let s = g.lti(n, m, p, rho);
            let alpha = g.in_range(rho * rho + 0.01, 0.99);
            (s, alpha)
        })
        .collect()
}

#[test]
fn criterion_3_trace_duality_ensemble() {
    let started = Instant::now();
    for (s, alpha) in ensemble() {
        let p = solve_p_alpha(&s.a, &s.b, alpha).unwrap();
        let q = solve_q_alpha(&s.a, &s.c, alpha).unwrap();
        let tp = (&s.c * &p.shape * s.c.transpose()).trace();
        let tq = (s.b.transpose() * &q.shape * &s.b).trace();
        assert!(
            (tp - tq).abs() <= 1e-9 * (1.0 + tp.abs()),
            "duality violated: {} vs {} (n={}, alpha={})",
            tp,
            tq,
            s.n(),
            alpha
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {:?}", elapsed);
    pass(3, "trace duality", format!("200 systems in {:?}", elapsed));
}

#[test]
fn criterion_4_residual_contracts() {
    // Lyapunov contracts on the ensemble, evaluated directly on the
    // alpha-scaled equations.
    for (s, alpha) in ensemble() {
        let p = solve_p_alpha(&s.a, &s.b, alpha).unwrap().shape;
        let res_p = (&s.a * &p * s.a.transpose() / alpha - &p
            + &s.b * s.b.transpose() / (1.0 - alpha))
            .norm();
        assert!(res_p <= 1e-10 * (1.0 + p.norm()), "P residual {}", res_p);

        let q = solve_q_alpha(&s.a, &s.c, alpha).unwrap().shape;
        let res_q = (s.a.transpose() * &q * &s.a / alpha - &q
            + s.c.transpose() * &s.c / (1.0 - alpha))
            .norm();
        assert!(res_q <= 1e-10 * (1.0 + q.norm()), "Q residual {}", res_q);
    }

    // Riccati contracts on the bundled plant across 20 alphas, again
    // evaluated verbatim.
    let plant = example_plant();
    for i in 0..20 {
        let alpha = 0.05 + 0.9 * i as f64 / 19.0;

        let q = solve_dare_control(&plant.a, &plant.b2, &plant.c2, &plant.d2, alpha).unwrap().x;
        let inner_q = plant.b2.transpose() * &q * &plant.b2
            + plant.d2.transpose() * &plant.d2 * (alpha / (1.0 - alpha));
        let res_q = (plant.a.transpose() * &q * &plant.b2
            * inner_q.try_inverse().unwrap()
            * plant.b2.transpose()
            * &q
            * &plant.a
            / alpha
            - plant.a.transpose() * &q * &plant.a / alpha
            + &q
            - plant.c2.transpose() * &plant.c2 / (1.0 - alpha))
            .norm();
        assert!(res_q <= 1e-9 * (1.0 + q.norm()), "control residual {} at alpha {}", res_q, alpha);

        let p = solve_dare_filter(&plant.a, &plant.b1, &plant.c1, &plant.d1, alpha).unwrap().x;
        let inner_p = &plant.c1 * &p * plant.c1.transpose()
            + &plant.d1 * plant.d1.transpose() * (alpha / (1.0 - alpha));
        let res_p = (&plant.a * &p * plant.c1.transpose()
            * inner_p.try_inverse().unwrap()
            * &plant.c1
            * &p
            * plant.a.transpose()
            / alpha
            - &plant.a * &p * plant.a.transpose() / alpha
            + &p
            - &plant.b1 * plant.b1.transpose() / (1.0 - alpha))
            .norm();
        assert!(res_p <= 1e-9 * (1.0 + p.norm()), "filter residual {} at alpha {}", res_p, alpha);
    }
    pass(4, "residual contracts", "200-system ensemble + 20 alphas on the example plant".into());
}

// ---------------------------------------------------------------------------
// 5. optimality probes for the two gain formulas
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_optimality_probes() {
    let alpha = 0.5;
    let mut g = Gen::new(0x5EED_0005);

    for trial in 0..10 {
        let (n, m, mw, pz) = (g.usize_in(1, 3), g.usize_in(1, 2), g.usize_in(1, 2), g.usize_in(1, 2));
        let plant = g.sf_plant(n, m, mw, pz);
        let res = synth_state_feedback(&plant, alpha).unwrap();
        let k = res.k.as_ref().unwrap();
        let base = res.eps_alpha_norm;
        for _ in 0..100 {
            let raw = g.matrix(k.nrows(), k.ncols());
            let delta = &raw * (1e-3 * (1.0 + k.norm()) / raw.norm());
            let cl = cl_state_feedback(&plant, &(k + delta)).unwrap();
            let perturbed = eps_alpha_norm(&cl, alpha).unwrap_or(f64::INFINITY);
            assert!(
                perturbed >= base - 1e-9,
                "state-feedback probe {}: perturbed {} < base {}",
                trial,
                perturbed,
                base
            );
        }
    }

    for trial in 0..10 {
        let (n, mw, p, pz) = (g.usize_in(1, 3), g.usize_in(1, 2), g.usize_in(1, 2), g.usize_in(1, 2));
        let plant = g.filter_plant(n, mw, p, pz);
        let res = synth_observer(&plant, alpha).unwrap();
        let l = res.l.as_ref().unwrap();
        let base = res.eps_alpha_norm;
        for _ in 0..100 {
            let raw = g.matrix(l.nrows(), l.ncols());
            let delta = &raw * (1e-3 * (1.0 + l.norm()) / raw.norm());
            let lp = l + delta;
            let cl = LtiSystem::new(
                &plant.a + &lp * &plant.c,
                &plant.b + &lp * &plant.d,
                plant.cz.clone(),
                None,
            )
            .unwrap();
            let perturbed = eps_alpha_norm(&cl, alpha).unwrap_or(f64::INFINITY);
            assert!(
                perturbed >= base - 1e-9,
                "observer probe {}: perturbed {} < base {}",
                trial,
                perturbed,
                base
            );
        }
    }
    pass(5, "gain optimality probes", "20 plants x 100 perturbations, no decrease > 1e-9".into());
}

// ---------------------------------------------------------------------------
// 6. separation identity and the series-reduction identity
// ---------------------------------------------------------------------------

fn check_separation(plant: &epskit::OutputFeedbackPlant, alpha: f64) {
    let (res, parts) = synth_output_feedback(plant, alpha).unwrap();
    let cl = &res.closed_loop;
    // direct 2n-state evaluation, independent of the synthesis path
    let q_cl = solve_q_alpha(&cl.a, &cl.c, alpha).unwrap();
    let direct_sq = (cl.b.transpose() * &q_cl.shape * &cl.b).trace();
    let formula_sq = parts.term_q + parts.term_kp;
    assert!(
        (direct_sq - formula_sq).abs() <= 1e-8 * (1.0 + formula_sq.abs()),
        "separation: direct {} vs formula {} at alpha {}",
        direct_sq,
        formula_sq,
        alpha
    );
}

#[test]
fn criterion_6_separation_and_series_reduction() {
    let mut g = Gen::new(0x5EED_0006);

    check_separation(&example_plant(), 0.4336);
    check_separation(&example_plant(), 0.5);
    for _ in 0..20 {
        let (n, m, mw, py, pz) =
            (g.usize_in(2, 3), g.usize_in(1, 2), g.usize_in(1, 2), g.usize_in(1, 2), g.usize_in(1, 2));
        let plant = g.of_plant(n, m, mw, py, pz);
        let alpha = g.in_range(0.15, 0.9);
        check_separation(&plant, alpha);
    }

    // series reduction against explicitly composed realizations
    for trial in 0..20 {
        let (n, m, pz) = (g.usize_in(1, 3), g.usize_in(1, 2), g.usize_in(1, 2));
        let plant = g.sf_plant(n, m, 1, pz);
        let alpha = g.in_range(0.2, 0.9);
        let q = solve_dare_control(&plant.a, &plant.b, &plant.c, &plant.d, alpha).unwrap().x;
        let k = epskit::gain_k(&q, &plant.a, &plant.b, &plant.d, alpha).unwrap();

        let n1 = g.usize_in(1, 3);
        let rho1 = g.in_range(0.1, 0.9) * alpha.sqrt();
        let abar = g.stable(n1, rho1);
        let bbar = g.matrix(n1, 2);
        let cbar = g.matrix(plant.b.ncols(), n1);
        let s1 = LtiSystem::new(abar.clone(), bbar.clone(), cbar.clone(), None).unwrap();

        let reduced = reduced_series_norm(&s1, &k, &q, &plant.b, &plant.d, alpha).unwrap();

        // block realization of the series composition
        let n2 = plant.a.nrows();
        let a_k = &plant.a + &plant.b * &k;
        let c_k = &plant.c + &plant.d * &k;
        let mut a_s = DMatrix::zeros(n1 + n2, n1 + n2);
        a_s.view_mut((0, 0), (n1, n1)).copy_from(&abar);
        a_s.view_mut((n1, 0), (n2, n1)).copy_from(&(&plant.b * &cbar));
        a_s.view_mut((n1, n1), (n2, n2)).copy_from(&a_k);
        let mut b_s = DMatrix::zeros(n1 + n2, 2);
        b_s.view_mut((0, 0), (n1, 2)).copy_from(&bbar);
        let pz = plant.c.nrows();
        let mut c_s = DMatrix::zeros(pz, n1 + n2);
        c_s.view_mut((0, 0), (pz, n1)).copy_from(&(&plant.d * &cbar));
        c_s.view_mut((0, n1), (pz, n2)).copy_from(&c_k);
        let composed = LtiSystem::new(a_s, b_s, c_s, None).unwrap();
        let direct = eps_alpha_norm(&composed, alpha).unwrap();

        assert!(
            (reduced - direct).abs() <= 1e-8 * (1.0 + direct.abs()),
            "series reduction trial {}: reduced {} vs direct {}",
            trial,
            reduced,
            direct
        );
    }
    pass(6, "separation + series reduction", "example plant + 20 random plants each".into());
}

// ---------------------------------------------------------------------------
// 7. reachable-set containment under simulation
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_containment_monte_carlo() {
    let plant = SynthesisPlant::OutputFeedback(example_plant());
    let opt = optimize_synthesis(&plant, 199, 1e-6).unwrap();
    let cl = &opt.result.closed_loop;
    let cert = solve_p_alpha(&cl.a, &cl.b, opt.result.alpha).unwrap();
    let steps = 10_000;
    let x0 = DVector::zeros(cl.n());

    let mut worst = 0.0f64;
    for kind in [
        DisturbanceKind::ExtremeSwitching,
        DisturbanceKind::UniformBall,
        DisturbanceKind::Constant,
    ] {
        for seed in 0..100u64 {
            let spec = DisturbanceSpec { kind, seed, steps, dim: cl.m() };
            let traj = simulate(cl, &gen_disturbance(&spec).unwrap(), &x0).unwrap();
            let stats = containment_stats(&traj, &cert).unwrap();
            assert_eq!(stats.violations, 0, "violation under {:?} seed {}", kind, seed);
            worst = worst.max(stats.max_quadratic);
        }
    }
    let greedy = simulate_greedy(cl, &cert, steps, &x0).unwrap();
    let greedy_stats = containment_stats(&greedy, &cert).unwrap();
    assert_eq!(greedy_stats.violations, 0, "violation under greedy disturbance");
    worst = worst.max(greedy_stats.max_quadratic);

    // scalar tight case: the bound is attained in the limit
    let s = LtiSystem::new(
        DMatrix::from_row_slice(1, 1, &[0.5]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
        None,
    )
    .unwrap();
    let scalar_cert = solve_p_alpha(&s.a, &s.b, 0.5).unwrap();
    let w = vec![DVector::from_column_slice(&[1.0]); steps];
    let traj = simulate(&s, &w, &DVector::zeros(1)).unwrap();
    let stats = containment_stats(&traj, &scalar_cert).unwrap();
    assert_eq!(stats.violations, 0);
    assert!(stats.max_quadratic >= 0.999, "tight case reached only {}", stats.max_quadratic);

    pass(
        7,
        "containment Monte Carlo",
        format!("0 violations over 301 runs x {} steps; peak quadratic {:.6}", steps, worst),
    );
}

// ---------------------------------------------------------------------------
// 8. l1-norm bound for the hardly observable set
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_l1_bound() {
    let mut g = Gen::new(0x5EED_0008);
    for _ in 0..20 {
        let n = g.usize_in(1, 4);
        let rho = g.in_range(0.1, 0.9);
        let p_dim = g.usize_in(1, 2);
        let s = g.lti(n, 1, p_dim, rho);
        let alpha = g.in_range(rho * rho + 0.02, 0.97);
        let q = solve_q_alpha(&s.a, &s.c, alpha).unwrap().shape;

        // x0 = Q^{-1/2} u puts u on/inside the unit sphere onto the
        // ellipsoid boundary/interior
        let eig = q.clone().symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();

        for sample in 0..100 {
            let raw = g.matrix(n, 1).column(0).clone_owned();
            let u = if raw.norm() < 1e-9 {
                continue;
            } else if sample % 2 == 0 {
                &raw / raw.norm()
            } else {
                &raw / raw.norm() * g.unit()
            };
            let x0 = &inv_sqrt * u;
            debug_assert!(x0.dot(&(&q * &x0)) <= 1.0 + 1e-9);
            let l1 = output_l1_norm(&s, &x0, 1e-12).unwrap();
            assert!(l1 <= 1.0 + 1e-6, "l1 bound violated: {} (n={}, alpha={})", l1, n, alpha);
        }
    }

    // scalar tight case: boundary state achieves the bound exactly
    let s = LtiSystem::new(
        DMatrix::from_row_slice(1, 1, &[0.5]),
        DMatrix::from_row_slice(1, 1, &[0.0]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
        None,
    )
    .unwrap();
    let l1 = output_l1_norm(&s, &DVector::from_column_slice(&[0.5]), 1e-12).unwrap();
    assert!((l1 - 1.0).abs() <= 1e-9, "tight case returned {}", l1);

    pass(8, "l1 output bound", "20 systems x 100 states; scalar tight case exact".into());
}

// ---------------------------------------------------------------------------
// 9. analytic scalar minimum against a dense grid oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_scalar_eps_norm() {
    // oracle: closed form eps(alpha)^2 = alpha/((1-alpha)(alpha-1/4)) on a
    // 1e5-point grid
    let closed_form = |alpha: f64| (alpha / ((1.0 - alpha) * (alpha - 0.25))).sqrt();
    let mut best = (0.0f64, f64::INFINITY);
    let points = 100_000;
    for i in 0..points {
        let alpha = 0.2501 + (0.9999 - 0.2501) * i as f64 / (points - 1) as f64;
        let v = closed_form(alpha);
        if v < best.1 {
            best = (alpha, v);
        }
    }
    assert!((best.1 - 2.0).abs() < 1e-7, "oracle minimum {}", best.1);
    assert!((best.0 - 0.5).abs() < 1e-4, "oracle alpha* {}", best.0);

    let s = LtiSystem::new(
        DMatrix::from_row_slice(1, 1, &[0.5]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
        None,
    )
    .unwrap();
    let res = eps_norm_default(&s).unwrap();
    assert!((res.value - 2.0).abs() <= 1e-6, "value {}", res.value);
    assert!((res.alpha_star - 0.5).abs() <= 1e-4, "alpha* {}", res.alpha_star);
    assert!(!res.boundary_minimum);

    pass(
        9,
        "analytic scalar minimum",
        format!("value {:.9} at alpha* {:.6}", res.value, res.alpha_star),
    );
}
