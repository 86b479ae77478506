//! Seeded random system and plant generators shared by the integration
//! suites. Orthogonality assumptions (C'D = 0, B D' = 0) are satisfied
//! structurally by splitting channels, never by projection.
//!
//! Each test target compiles this module separately and uses a subset.
#![allow(dead_code)]

use epskit::{spectral_radius, FilterPlant, LtiSystem, OutputFeedbackPlant, StateFeedbackPlant};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-1, 1].
    pub fn signed(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn usize_in(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.rng.next_u64() as usize) % (hi - lo + 1)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.signed())
    }

    /// Random square matrix rescaled to the requested spectral radius.
    pub fn stable(&mut self, n: usize, rho_target: f64) -> DMatrix<f64> {
        loop {
            let m = self.matrix(n, n);
            let rho = spectral_radius(&m).unwrap();
            if rho > 1e-6 {
                return m * (rho_target / rho);
            }
        }
    }

    /// Random stable strictly proper system with rho(A) equal to `rho`.
    pub fn lti(&mut self, n: usize, m: usize, p: usize, rho: f64) -> LtiSystem {
        LtiSystem::new(self.stable(n, rho), self.matrix(n, m), self.matrix(p, n), None).unwrap()
    }

    /// State-feedback plant with split regulated output so that C'D = 0
    /// holds exactly; regenerated until the structural checks pass.
    pub fn sf_plant(&mut self, n: usize, m: usize, mw: usize, pz: usize) -> StateFeedbackPlant {
        loop {
            let rho = self.in_range(0.3, 1.2);
            let a = self.stable(n, rho);
            let b = self.matrix(n, m);
            let bw = self.matrix(n, mw);
            let mut c = DMatrix::zeros(pz + m, n);
            c.view_mut((0, 0), (pz, n)).copy_from(&self.matrix(pz, n));
            let mut d = DMatrix::zeros(pz + m, m);
            d.view_mut((pz, 0), (m, m))
                .copy_from(&DMatrix::from_fn(m, m, |i, j| if i == j { self.in_range(0.2, 1.5) } else { 0.0 }));
            let plant = StateFeedbackPlant::new(a, b, bw, c, d).unwrap();
            if plant.validate_structure().unwrap().all_passed() {
                return plant;
            }
        }
    }

    /// Filtering plant with split disturbance channels so that B D' = 0.
    pub fn filter_plant(&mut self, n: usize, mw: usize, p: usize, pz: usize) -> FilterPlant {
        loop {
            let rho = self.in_range(0.3, 1.2);
            let a = self.stable(n, rho);
            let mut b = DMatrix::zeros(n, mw + p);
            b.view_mut((0, 0), (n, mw)).copy_from(&self.matrix(n, mw));
            let c = self.matrix(p, n);
            let mut d = DMatrix::zeros(p, mw + p);
            d.view_mut((0, mw), (p, p))
                .copy_from(&DMatrix::from_fn(p, p, |i, j| if i == j { self.in_range(0.2, 1.5) } else { 0.0 }));
            let cz = self.matrix(pz, n);
            let plant = FilterPlant::new(a, b, c, d, cz).unwrap();
            if plant.validate_structure().unwrap().all_passed() {
                return plant;
            }
        }
    }

    /// Output-feedback plant with both orthogonality assumptions satisfied
    /// structurally.
    pub fn of_plant(&mut self, n: usize, m: usize, mw: usize, py: usize, pz: usize) -> OutputFeedbackPlant {
        loop {
            let rho = self.in_range(0.3, 1.2);
            let a = self.stable(n, rho);
            let mut b1 = DMatrix::zeros(n, mw + py);
            b1.view_mut((0, 0), (n, mw)).copy_from(&self.matrix(n, mw));
            let b2 = self.matrix(n, m);
            let c1 = self.matrix(py, n);
            let mut d1 = DMatrix::zeros(py, mw + py);
            d1.view_mut((0, mw), (py, py))
                .copy_from(&DMatrix::from_fn(py, py, |i, j| if i == j { self.in_range(0.2, 1.5) } else { 0.0 }));
            let mut c2 = DMatrix::zeros(pz + m, n);
            c2.view_mut((0, 0), (pz, n)).copy_from(&self.matrix(pz, n));
            let mut d2 = DMatrix::zeros(pz + m, m);
            d2.view_mut((pz, 0), (m, m))
                .copy_from(&DMatrix::from_fn(m, m, |i, j| if i == j { self.in_range(0.2, 1.5) } else { 0.0 }));
            let plant = OutputFeedbackPlant::new(a, b1, b2, c1, d1, c2, d2).unwrap();
            if plant.validate_structure().unwrap().all_passed() {
                return plant;
            }
        }
    }
}

/// Path to the bundled worked-example plant file.
pub fn example_plant_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/paper_siv.json")
}

/// The worked-example plant, parsed from the bundled fixture.
pub fn example_plant() -> OutputFeedbackPlant {
    let text = std::fs::read_to_string(example_plant_path()).unwrap();
    match epsctl::systemfile::parse_system_file(&text).unwrap().system {
        epsctl::systemfile::ParsedSystem::OutputFeedback(p) => p,
        _ => panic!("fixture must be an output_feedback plant"),
    }
}
