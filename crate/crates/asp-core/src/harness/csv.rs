//! CSV emission for learning curves.
//!
//! The contract: header row, UTF-8, newline-terminated records, floats in
//! decimal scientific notation with 17 significant digits so values
//! round-trip exactly. Comparison output prefixes an `algorithm` column.

use super::{Algorithm, LearningCurve};

pub const CURVE_HEADER: &str = "iteration,squared_prediction_error,parameter_error,cumulative_macs";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders one curve as CSV text.
pub fn curve_to_csv(curve: &LearningCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for p in curve.points() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.iteration,
            fmt(p.squared_prediction_error),
            fmt(p.parameter_error),
            p.cumulative_macs
        ));
    }
    out
}

/// Renders a comparison table: every algorithm's curve on identical data,
/// one algorithm column ahead of the usual fields.
pub fn comparison_to_csv(results: &[(Algorithm, LearningCurve)]) -> String {
    let mut out = String::new();
    out.push_str("algorithm,");
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for (alg, curve) in results {
        for p in curve.points() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                alg,
                p.iteration,
                fmt(p.squared_prediction_error),
                fmt(p.parameter_error),
                p.cumulative_macs
            ));
        }
    }
    out
}
