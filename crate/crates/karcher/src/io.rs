//! JSON wire formats for matrices, measures and solver configuration.
//!
//! A matrix travels as `{"n": <dim>, "data": [<n*n row-major reals>]}` and a
//! measure as `{"atoms": [<matrix>...], "weights": [<reals>]}` with the
//! weights optional (uniform when absent). Writers emit full double
//! precision (17 significant digits), so everything written here re-parses
//! to the identical bit pattern.

use serde::Deserialize;

use crate::error::Error;
use crate::means::SolverConfig;
use crate::measure::{Coupling, DiscreteMeasure};
use crate::spd::SpdMatrix;
use crate::sym::SymMatrix;

/// Input-side failures: malformed JSON (with position) or structurally
/// invalid values (wrong entry count, non-positive-definite atoms, ...).
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("invalid value: {0}")]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Deserialize)]
struct MatrixWire {
    n: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MeasureWire {
    atoms: Vec<MatrixWire>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

fn matrix_from_wire(w: MatrixWire) -> Result<SpdMatrix, ParseError> {
    let sym = SymMatrix::new(w.n, w.data)?;
    Ok(SpdMatrix::new(sym)?)
}

/// Parses a positive definite matrix from its JSON object.
pub fn parse_matrix(text: &str) -> Result<SpdMatrix, ParseError> {
    matrix_from_wire(serde_json::from_str(text)?)
}

/// Parses a discrete measure; missing weights mean uniform.
pub fn parse_measure(text: &str) -> Result<DiscreteMeasure, ParseError> {
    let wire: MeasureWire = serde_json::from_str(text)?;
    let atoms = wire.atoms.into_iter().map(matrix_from_wire).collect::<Result<Vec<_>, _>>()?;
    match wire.weights {
        Some(w) => Ok(DiscreteMeasure::new(atoms, w)?),
        None => Ok(DiscreteMeasure::uniform(atoms)?),
    }
}

/// Parses solver configuration; all fields optional.
pub fn parse_solver_config(text: &str) -> Result<SolverConfig, ParseError> {
    let cfg: SolverConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Full-precision decimal rendering: 17 significant digits, which is enough
/// for every f64 to survive a write/parse round trip bit for bit.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

/// Serializes a symmetric matrix as the matrix JSON object.
pub fn write_sym(m: &SymMatrix) -> String {
    let mut out = String::new();
    out.push_str("{\"n\":");
    out.push_str(&m.dim().to_string());
    out.push_str(",\"data\":");
    push_array(&mut out, m.data());
    out.push('}');
    out
}

/// Serializes a positive definite matrix as the matrix JSON object.
pub fn write_matrix(m: &SpdMatrix) -> String {
    write_sym(m.as_sym())
}

/// Serializes a measure with explicit weights.
pub fn write_measure(mu: &DiscreteMeasure) -> String {
    let mut out = String::from("{\"atoms\":[");
    for (i, a) in mu.atoms().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&write_matrix(a));
    }
    out.push_str("],\"weights\":");
    push_array(&mut out, mu.weights());
    out.push('}');
    out
}

/// Serializes a coupling as `{"rows": k, "cols": m, "plan": [...]}`.
pub fn write_coupling(c: &Coupling) -> String {
    let mut out = String::from("{\"rows\":");
    out.push_str(&c.rows().to_string());
    out.push_str(",\"cols\":");
    out.push_str(&c.cols().to_string());
    out.push_str(",\"plan\":");
    push_array(&mut out, c.plan());
    out.push('}');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::spd::mat_exp;
    use proptest::prelude::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let mut rng = Rng::new(80, 0);
        for _ in 0..50 {
            let g = SymMatrix::from_fn(3, |_, _| rng.normal());
            let p = mat_exp(&g).unwrap();
            let text = write_matrix(&p);
            let back = parse_matrix(&text).unwrap();
            assert_eq!(back.as_sym().data(), p.as_sym().data(), "round trip drifted");
        }
    }

    #[test]
    fn measure_round_trip_is_exact() {
        let mut rng = Rng::new(81, 0);
        let atoms: Vec<SpdMatrix> = (0..3)
            .map(|_| mat_exp(&SymMatrix::from_fn(2, |_, _| rng.normal())).unwrap())
            .collect();
        let mu = DiscreteMeasure::new(atoms, vec![0.25, 0.5, 0.25]).unwrap();
        let back = parse_measure(&write_measure(&mu)).unwrap();
        assert_eq!(back.weights(), mu.weights());
        for (a, b) in back.atoms().iter().zip(mu.atoms()) {
            assert_eq!(a.as_sym().data(), b.as_sym().data());
        }
    }

    #[test]
    fn uniform_weights_when_absent() {
        let text = r#"{"atoms": [{"n": 1, "data": [2.0]}, {"n": 1, "data": [3.0]}]}"#;
        let mu = parse_measure(text).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_matrix("{\"n\": 2,\n  \"data\": [1.0,}").unwrap_err();
        match err {
            ParseError::Json { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected a JSON error, got {other}"),
        }
    }

    #[test]
    fn structural_errors_are_invalid_values() {
        // Right shape, wrong content: not positive definite.
        let err = parse_matrix(r#"{"n": 2, "data": [1.0, 0.0, 0.0, -1.0]}"#).unwrap_err();
        assert!(matches!(err, ParseError::Invalid(Error::NotPositiveDefinite)));
        // Entry count mismatch.
        let err = parse_matrix(r#"{"n": 2, "data": [1.0]}"#).unwrap_err();
        assert!(matches!(err, ParseError::Invalid(_)));
    }

    #[test]
    fn config_parsing_validates() {
        assert!(parse_solver_config(r#"{"tol": -1.0}"#).is_err());
        assert!(parse_solver_config(r#"{"max_iter": 100}"#).is_ok());
    }

    proptest! {
        #[test]
        fn fmt_round_trips_every_float(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
