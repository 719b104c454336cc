//! Transformer insulation aging: the dynamic thermal model that labels hourly
//! loss of life, and the learned surrogates that estimate it directly from
//! ambient temperature and load ratio.
//!
//! The pipeline runs in this order:
//!
//! 1. [`dataset`] ingests or synthesizes an hourly series and repairs bad rows.
//! 2. [`thermal`] steps the top-oil and hot-spot rises and labels each hour
//!    with its loss of life ([`dataset::label`]).
//! 3. [`fcm`] clusters the inputs; [`anfis`] turns the clusters into rules and
//!    trains them; [`baselines`] provides the MLP and RBF comparisons.
//! 4. [`metrics`] scores and ranks the estimators on a shared test split.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anfis;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod fcm;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod thermal;

pub use error::{Error, Result};
pub use model_io::ModelFile;

/// A fitted model mapping `[ambient °C, load ratio]` to loss of life in percent.
pub trait Regressor {
    fn predict(&self, input: [f64; 2]) -> f64;

    fn predict_all(&self, inputs: &[[f64; 2]]) -> Vec<f64> {
        inputs.iter().map(|&x| self.predict(x)).collect()
    }
}

/// Shortest text that parses back to exactly `x`, in exponent form when the
/// magnitude is below 1e-3 or at least 1e9.
pub fn format_float(x: f64) -> String {
    let magnitude = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e9).contains(&magnitude) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_float;

    #[test]
    fn float_text_round_trips() {
        for x in [0.0, 1.5, -2.0, 1.7642461099185844e-7, 6.480591785413425e-12, 0.976, 3e12, 1e-3] {
            assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_float(1.7642461099185844e-7), "1.7642461099185844e-7");
        assert_eq!(format_float(0.5), "0.5");
    }
}
