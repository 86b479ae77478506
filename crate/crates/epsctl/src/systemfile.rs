//! The JSON system-file format consumed and produced by the CLI.
//!
//! A file is a UTF-8 JSON document with a top-level `kind` in
//! {"lti", "state_feedback", "filter", "output_feedback"}, matrix fields as
//! nested row-major arrays of numbers (named A, B, C, D, Bw, Cz, B1, B2,
//! C1, C2, D1, D2 per kind), and an optional scalar `alpha`. NaN/Inf are
//! rejected (they are not valid JSON to begin with), as are ragged arrays.

use epskit::{FilterPlant, LtiSystem, OutputFeedbackPlant, StateFeedbackPlant};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A parse/schema failure; reported with exit code 2.
#[derive(Debug, Clone)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawSystemFile {
    pub kind: String,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Bw", skip_serializing_if = "Option::is_none")]
    pub bw: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Cz", skip_serializing_if = "Option::is_none")]
    pub cz: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B1", skip_serializing_if = "Option::is_none")]
    pub b1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B2", skip_serializing_if = "Option::is_none")]
    pub b2: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D1", skip_serializing_if = "Option::is_none")]
    pub d1: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D2", skip_serializing_if = "Option::is_none")]
    pub d2: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// A validated system together with the optional file-level alpha.
#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: ParsedSystem,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum ParsedSystem {
    Lti(LtiSystem),
    StateFeedback(StateFeedbackPlant),
    Filter(FilterPlant),
    OutputFeedback(OutputFeedbackPlant),
}

impl ParsedSystem {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ParsedSystem::Lti(_) => "lti",
            ParsedSystem::StateFeedback(_) => "state_feedback",
            ParsedSystem::Filter(_) => "filter",
            ParsedSystem::OutputFeedback(_) => "output_feedback",
        }
    }
}

/// Converts nested row-major arrays to a matrix, checking rectangularity
/// and finiteness.
pub fn rows_to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ParseError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(ParseError(format!("matrix {} must be non-empty", name)));
    }
    let ncols = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(ParseError(format!(
                "matrix {} is ragged: row {} has {} entries, expected {}",
                name,
                i,
                row.len(),
                ncols
            )));
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ParseError(format!("matrix {} entry ({}, {}) is not finite", name, i, j)));
            }
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Row-major nested arrays from a matrix.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn require(
    field: &'static str,
    value: &Option<Vec<Vec<f64>>>,
) -> Result<DMatrix<f64>, ParseError> {
    match value {
        Some(rows) => rows_to_matrix(field, rows),
        None => Err(ParseError(format!("missing required field {}", field))),
    }
}

fn map_lib_err(e: epskit::Error) -> ParseError {
    ParseError(e.to_string())
}

/// Parses and validates a system file from JSON text.
pub fn parse_system_file(text: &str) -> Result<SystemFile, ParseError> {
    let raw: RawSystemFile =
        serde_json::from_str(text).map_err(|e| ParseError(format!("invalid JSON: {}", e)))?;
    parse_raw(&raw)
}

pub fn parse_raw(raw: &RawSystemFile) -> Result<SystemFile, ParseError> {
    if let Some(alpha) = raw.alpha
        && !alpha.is_finite() {
            return Err(ParseError("alpha must be finite".into()));
        }
    let system = match raw.kind.as_str() {
        "lti" => {
            let a = require("A", &raw.a)?;
            let b = require("B", &raw.b)?;
            let c = require("C", &raw.c)?;
            let d = match &raw.d {
                Some(rows) => Some(rows_to_matrix("D", rows)?),
                None => None,
            };
            ParsedSystem::Lti(LtiSystem::new(a, b, c, d).map_err(map_lib_err)?)
        }
        "state_feedback" => {
            let a = require("A", &raw.a)?;
            let b = require("B", &raw.b)?;
            let bw = require("Bw", &raw.bw)?;
            let c = require("C", &raw.c)?;
            let d = require("D", &raw.d)?;
            ParsedSystem::StateFeedback(
                StateFeedbackPlant::new(a, b, bw, c, d).map_err(map_lib_err)?,
            )
        }
        "filter" => {
            let a = require("A", &raw.a)?;
            let b = require("B", &raw.b)?;
            let c = require("C", &raw.c)?;
            let d = require("D", &raw.d)?;
            let cz = require("Cz", &raw.cz)?;
            ParsedSystem::Filter(FilterPlant::new(a, b, c, d, cz).map_err(map_lib_err)?)
        }
        "output_feedback" => {
            let a = require("A", &raw.a)?;
            let b1 = require("B1", &raw.b1)?;
            let b2 = require("B2", &raw.b2)?;
            let c1 = require("C1", &raw.c1)?;
            let d1 = require("D1", &raw.d1)?;
            let c2 = require("C2", &raw.c2)?;
            let d2 = require("D2", &raw.d2)?;
            ParsedSystem::OutputFeedback(
                OutputFeedbackPlant::new(a, b1, b2, c1, d1, c2, d2).map_err(map_lib_err)?,
            )
        }
        other => {
            return Err(ParseError(format!(
                "unknown kind {:?}; expected lti, state_feedback, filter, or output_feedback",
                other
            )));
        }
    };
    Ok(SystemFile { system, alpha: raw.alpha })
}

/// Serializes an LTI realization back to the file schema.
pub fn lti_to_raw(s: &LtiSystem, alpha: Option<f64>) -> RawSystemFile {
    RawSystemFile {
        kind: "lti".into(),
        a: Some(matrix_to_rows(&s.a)),
        b: Some(matrix_to_rows(&s.b)),
        c: Some(matrix_to_rows(&s.c)),
        d: Some(matrix_to_rows(&s.d)),
        alpha,
        ..Default::default()
    }
}
