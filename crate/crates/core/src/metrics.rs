//! Error metrics and the ranked method comparison.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format_float;

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Input(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Input("metrics need at least one value".into()));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let sse: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(sse / actual.len() as f64)
}

/// Coefficient of determination, with the mean of `actual` as the baseline.
/// Negative when the predictions are worse than that mean.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    if actual.len() < 2 {
        return Err(Error::Input("R² needs at least two values".into()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let total: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if !(total > 0.0) {
        return Err(Error::Input("R² undefined: actual values have zero variance".into()));
    }
    let residual: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - residual / total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub mse: f64,
    pub r_squared: f64,
    /// Wall-clock training time in seconds.
    pub train_time_s: f64,
    pub config: String,
    /// Fingerprint of the test rows the report was scored on.
    pub test_fingerprint: u64,
    pub rank: Option<usize>,
}

impl EvalReport {
    pub fn new(
        method: impl Into<String>,
        actual: &[f64],
        predicted: &[f64],
        train_time_s: f64,
        config: impl Into<String>,
        test_fingerprint: u64,
    ) -> Result<Self> {
        Ok(Self {
            method: method.into(),
            mse: mse(actual, predicted)?,
            r_squared: r_squared(actual, predicted)?,
            train_time_s,
            config: config.into(),
            test_fingerprint,
            rank: None,
        })
    }
}

/// Reports ranked by ascending MSE, then descending R², then ascending
/// training time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub reports: Vec<EvalReport>,
}

pub fn compare(reports: &[EvalReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Input("comparison needs at least two reports".into()));
    }
    let fingerprint = reports[0].test_fingerprint;
    if let Some(other) = reports.iter().find(|r| r.test_fingerprint != fingerprint) {
        return Err(Error::Input(format!(
            "reports `{}` and `{}` were scored on different test splits",
            reports[0].method, other.method
        )));
    }
    let mut ranked = reports.to_vec();
    ranked.sort_by(|a, b| {
        a.mse
            .total_cmp(&b.mse)
            .then_with(|| b.r_squared.total_cmp(&a.r_squared))
            .then_with(|| a.train_time_s.partial_cmp(&b.train_time_s).unwrap_or(Ordering::Equal))
    });
    for (i, report) in ranked.iter_mut().enumerate() {
        report.rank = Some(i + 1);
    }
    Ok(Comparison { reports: ranked })
}

impl Comparison {
    /// CSV with columns `method,mse,r_squared,[train_time_s,]rank`.
    pub fn to_csv(&self, with_time: bool) -> String {
        let mut out = String::from(if with_time {
            "method,mse,r_squared,train_time_s,rank\n"
        } else {
            "method,mse,r_squared,rank\n"
        });
        for r in &self.reports {
            let rank = r.rank.unwrap_or(0);
            if with_time {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.3},{rank}",
                    r.method,
                    format_float(r.mse),
                    format_float(r.r_squared),
                    r.train_time_s
                );
            } else {
                let _ = writeln!(out, "{},{},{},{rank}", r.method, format_float(r.mse), format_float(r.r_squared));
            }
        }
        out
    }

    /// Fixed-width table with the same columns as the CSV.
    pub fn to_text(&self, with_time: bool) -> String {
        let mut out = String::new();
        if with_time {
            let _ = writeln!(out, "{:<8} {:>14} {:>9} {:>10} {:>5}", "method", "MSE", "R^2", "time (s)", "rank");
        } else {
            let _ = writeln!(out, "{:<8} {:>14} {:>9} {:>5}", "method", "MSE", "R^2", "rank");
        }
        for r in &self.reports {
            let rank = r.rank.unwrap_or(0);
            if with_time {
                let _ = writeln!(
                    out,
                    "{:<8} {:>14.4e} {:>9.4} {:>10.3} {:>5}",
                    r.method, r.mse, r.r_squared, r.train_time_s, rank
                );
            } else {
                let _ = writeln!(out, "{:<8} {:>14.4e} {:>9.4} {:>5}", r.method, r.mse, r.r_squared, rank);
            }
        }
        out
    }

    pub fn get(&self, method: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(method: &str, mse: f64, r2: f64, time: f64) -> EvalReport {
        EvalReport {
            method: method.into(),
            mse,
            r_squared: r2,
            train_time_s: time,
            config: String::new(),
            test_fingerprint: 7,
            rank: None,
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[3.0], &[0.5]).unwrap(), 6.25);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Input(_))));
        assert!(matches!(mse(&[], &[]), Err(Error::Input(_))));
    }

    #[test]
    fn r_squared_examples() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&y, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&y, &[0.0, 0.0, 0.0]).unwrap(), -1.5);
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn ranking() {
        let c = compare(&[report("b", 2.0, 0.5, 1.0), report("a", 1.0, 0.5, 1.0)]).unwrap();
        assert_eq!(c.get("a").unwrap().rank, Some(1));
        assert_eq!(c.get("b").unwrap().rank, Some(2));

        let c = compare(&[report("low", 1.0, 0.8, 1.0), report("high", 1.0, 0.9, 1.0)]).unwrap();
        assert_eq!(c.reports[0].method, "high");

        let c = compare(&[report("slow", 1.0, 0.9, 5.0), report("fast", 1.0, 0.9, 1.0)]).unwrap();
        assert_eq!(c.reports[0].method, "fast");
    }

    #[test]
    fn table_two_ordering() {
        let anfis_mse = 2.946e-10;
        let c = compare(&[
            report("ANFIS", anfis_mse, 0.96, 25.7),
            report("MLP", 1.6027e-6, 0.15, 18.6),
            report("RBF", 1.4 * anfis_mse, 0.89, 21.7),
        ])
        .unwrap();
        let ranks: Vec<_> = ["ANFIS", "RBF", "MLP"].iter().map(|m| c.get(m).unwrap().rank.unwrap()).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        assert_eq!(c.to_csv(true).lines().count(), 4);
    }

    #[test]
    fn compare_rejects_mismatched_splits() {
        let mut other = report("b", 1.0, 0.5, 1.0);
        other.test_fingerprint = 8;
        assert!(compare(&[report("a", 1.0, 0.5, 1.0), other]).is_err());
        assert!(compare(&[report("a", 1.0, 0.5, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn mse_permutation_invariant(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
            let (a, p) = split(&pairs);
            let (a2, p2) = split(&shuffled);
            let lhs = mse(&a, &p).unwrap();
            let rhs = mse(&a2, &p2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
        }

        #[test]
        fn r_squared_affine_invariant_and_bounded(
            pairs in prop::collection::vec((-10f64..10.0, -10f64..10.0), 3..40),
            scale in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            shift in -100f64..100.0,
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            prop_assume!(a.iter().map(|y| (y - mean).powi(2)).sum::<f64>() > 1e-6);
            let r = r_squared(&a, &p).unwrap();
            prop_assert!(r <= 1.0);
            let ta: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let tp: Vec<f64> = p.iter().map(|v| scale * v + shift).collect();
            let r2 = r_squared(&ta, &tp).unwrap();
            prop_assert!((r - r2).abs() <= 1e-8 * r.abs().max(1.0));
        }
    }
}
