//! Published sub-optimal output-feedback controller for the bundled
//! two-state example plant (`examples/paper_siv.json`), obtained in the
//! literature with LMI-based methods. Shipped as read-only constants for
//! side-by-side display via `--compare-reference`; never recomputed here.

pub const REFERENCE_LABEL: &str = "literature LMI-based sub-optimal controller";

pub const REFERENCE_K: [[f64; 2]; 1] = [[0.0919, -0.0661]];

pub const REFERENCE_L: [[f64; 2]; 2] = [[1.32, 0.407], [0.681, 0.0927]];

pub const REFERENCE_EPS_NORM: f64 = 299.0;
