//! Fuzzy c-means clustering and the cluster-count sweep used to size ANFIS.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anfis::{self, AnfisConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::{format_float, Regressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier exponent `m > 1`.
    pub fuzzifier: f64,
    /// Stop once the objective improves by less than this fraction.
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            clusters: 2,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iter: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult<const D: usize> {
    pub centers: Vec<[f64; D]>,
    /// `membership[i][k]`: degree of point `k` in cluster `i`.
    pub membership: Vec<Vec<f64>>,
    pub fuzzifier: f64,
    pub objective: f64,
    /// Objective after initialization and after every accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn squared_distance<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Membership of every point in every cluster for fixed centers.
pub fn memberships<const D: usize>(points: &[[f64; D]], centers: &[[f64; D]], fuzzifier: f64) -> Vec<Vec<f64>> {
    let c = centers.len();
    let exponent = 1.0 / (fuzzifier - 1.0);
    let mut u = vec![vec![0.0; points.len()]; c];
    let mut d2 = vec![0.0; c];
    for (k, x) in points.iter().enumerate() {
        for (i, center) in centers.iter().enumerate() {
            d2[i] = squared_distance(x, center);
        }
        let nearest = d2.iter().copied().fold(f64::INFINITY, f64::min);
        if nearest == 0.0 {
            let hits = d2.iter().filter(|&&d| d == 0.0).count() as f64;
            for i in 0..c {
                u[i][k] = if d2[i] == 0.0 { 1.0 / hits } else { 0.0 };
            }
        } else {
            // ratios are in (0, 1], so nothing overflows
            let mut total = 0.0;
            for i in 0..c {
                let w = (nearest / d2[i]).powf(exponent);
                u[i][k] = w;
                total += w;
            }
            for row in u.iter_mut() {
                row[k] /= total;
            }
        }
    }
    u
}

fn update_centers<const D: usize>(points: &[[f64; D]], u: &[Vec<f64>], fuzzifier: f64) -> Vec<[f64; D]> {
    u.iter()
        .map(|row| {
            let mut num = [0.0; D];
            let mut den = 0.0;
            for (x, &uik) in points.iter().zip(row) {
                let w = uik.powf(fuzzifier);
                den += w;
                for d in 0..D {
                    num[d] += w * x[d];
                }
            }
            num.map(|v| v / den)
        })
        .collect()
}

pub fn objective<const D: usize>(points: &[[f64; D]], centers: &[[f64; D]], u: &[Vec<f64>], fuzzifier: f64) -> f64 {
    centers
        .iter()
        .zip(u)
        .map(|(center, row)| {
            points
                .iter()
                .zip(row)
                .map(|(x, &uik)| uik.powf(fuzzifier) * squared_distance(x, center))
                .sum::<f64>()
        })
        .sum()
}

/// Standard alternating fuzzy c-means. Initial centers are distinct data
/// points drawn with the configured seed.
///
/// An iteration whose objective would rise (floating-point noise near the
/// optimum) is discarded and ends the run, so `trace` never increases.
pub fn cluster<const D: usize>(points: &[[f64; D]], config: &FcmConfig) -> Result<FcmResult<D>> {
    let c = config.clusters;
    if c < 2 {
        return Err(Error::Input(format!("need at least 2 clusters, got {c}")));
    }
    if !(config.fuzzifier > 1.0) || !config.fuzzifier.is_finite() {
        return Err(Error::Domain(format!("fuzzifier must exceed 1, got {}", config.fuzzifier)));
    }
    if c > points.len() {
        return Err(Error::Input(format!("{c} clusters requested for {} points", points.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("points contain non-finite coordinates".into()));
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let mut seen = HashSet::new();
    let mut centers = Vec::with_capacity(c);
    for &k in &order {
        if seen.insert(points[k].map(f64::to_bits)) {
            centers.push(points[k]);
            if centers.len() == c {
                break;
            }
        }
    }
    if seen.len() == 1 {
        return Err(Error::Degenerate("all points are identical".into()));
    }
    if centers.len() < c {
        return Err(Error::Input(format!(
            "{c} clusters requested but only {} distinct points",
            centers.len()
        )));
    }

    let m = config.fuzzifier;
    let mut u = memberships(points, &centers, m);
    let mut current = objective(points, &centers, &u, m);
    let mut trace = vec![current];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let next_centers = update_centers(points, &u, m);
        let next_u = memberships(points, &next_centers, m);
        let next = objective(points, &next_centers, &next_u, m);
        iterations += 1;
        if next > current || !next.is_finite() {
            converged = true;
            break;
        }
        let improvement = current - next;
        centers = next_centers;
        u = next_u;
        trace.push(next);
        current = next;
        if improvement <= config.tolerance * current.abs() {
            converged = true;
            break;
        }
    }

    Ok(FcmResult {
        centers,
        membership: u,
        fuzzifier: m,
        objective: current,
        trace,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub clusters: usize,
    pub train_mse: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub recommended: usize,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,train_mse,test_mse\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.clusters,
                format_float(row.train_mse),
                format_float(row.test_mse)
            ));
        }
        out
    }
}

/// Smallest cluster count after which adding one more cluster improves the
/// test MSE by less than `threshold` (relative). Falls back to the last row.
pub fn elbow(rows: &[SweepRow], threshold: f64) -> usize {
    for pair in rows.windows(2) {
        let (a, b) = (pair[0].test_mse, pair[1].test_mse);
        let gain = if a > 0.0 { (a - b) / a } else { 0.0 };
        if gain < threshold {
            return pair[0].clusters;
        }
    }
    rows.last().map(|r| r.clusters).unwrap_or(0)
}

/// For each cluster count: build an ANFIS from FCM on `train`, run exactly
/// one hybrid epoch, and record train and test MSE.
pub fn cluster_sweep(
    train: &LabeledDataset,
    test: &LabeledDataset,
    counts: RangeInclusive<usize>,
    base: &AnfisConfig,
    threshold: f64,
) -> Result<SweepTable> {
    if counts.is_empty() || *counts.start() < 2 || *counts.end() > train.len() {
        return Err(Error::Input(format!(
            "cluster range {}..={} must lie within [2, {}]",
            counts.start(),
            counts.end(),
            train.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::Input("sweep needs a non-empty test set".into()));
    }
    let rows: Result<Vec<SweepRow>> = counts
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|clusters| {
            let config = AnfisConfig {
                clusters,
                epochs: 1,
                ..base.clone()
            };
            let fitted = anfis::fit(train, None, &config)?;
            let model = &fitted.outcome.model;
            Ok(SweepRow {
                clusters,
                train_mse: metrics::mse(&train.targets, &model.predict_all(&train.inputs))?,
                test_mse: metrics::mse(&test.targets, &model.predict_all(&test.inputs))?,
            })
        })
        .collect();
    let rows = rows?;
    let recommended = elbow(&rows, threshold);
    Ok(SweepTable { rows, recommended })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.01;
            pts.push([t, 1.0 - t]);
            pts.push([10.0 + t, 10.0 - t]);
        }
        pts
    }

    #[test]
    fn separates_blobs() {
        let pts = blobs();
        let res = cluster(&pts, &FcmConfig { clusters: 2, seed: 5, ..FcmConfig::default() }).unwrap();
        let mut xs: Vec<f64> = res.centers.iter().map(|c| c[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((0.0..=0.09).contains(&xs[0]) && (10.0..=10.09).contains(&xs[1]));
        for k in 0..pts.len() {
            let best = res.membership.iter().map(|row| row[k]).fold(0.0, f64::max);
            assert!(best > 0.99);
        }
    }

    #[test]
    fn one_cluster_per_point() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]];
        let res = cluster(&pts, &FcmConfig { clusters: 3, ..FcmConfig::default() }).unwrap();
        assert!(res.objective < 1e-20);
    }

    #[test]
    fn columns_sum_to_one_and_trace_monotone() {
        let pts: Vec<[f64; 2]> = (0..60).map(|i| {
            let t = i as f64;
            [(t * 0.37).sin() * 3.0 + t * 0.1, (t * 1.3).cos()]
        }).collect();
        let res = cluster(&pts, &FcmConfig { clusters: 4, tolerance: 1e-12, seed: 2, ..FcmConfig::default() }).unwrap();
        for k in 0..pts.len() {
            let s: f64 = res.membership.iter().map(|row| row[k]).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(res.membership.iter().all(|row| (0.0..=1.0).contains(&row[k])));
        }
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn input_errors() {
        let same = [[1.0, 1.0]; 5];
        assert!(matches!(cluster(&same, &FcmConfig::default()), Err(Error::Degenerate(_))));
        let few = [[0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(cluster(&few, &FcmConfig { clusters: 3, ..FcmConfig::default() }), Err(Error::Input(_))));
        assert!(cluster(&few, &FcmConfig { fuzzifier: 1.0, ..FcmConfig::default() }).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let pts = blobs();
        let cfg = FcmConfig { clusters: 3, seed: 9, ..FcmConfig::default() };
        assert_eq!(cluster(&pts, &cfg).unwrap(), cluster(&pts, &cfg).unwrap());
    }

    #[test]
    fn elbow_rule() {
        let row = |c, t| SweepRow { clusters: c, train_mse: t, test_mse: t };
        assert_eq!(elbow(&[row(2, 1.0)], 0.02), 2);
        assert_eq!(elbow(&[row(2, 1.0), row(3, 0.5), row(4, 0.495), row(5, 0.1)], 0.02), 3);
        assert_eq!(elbow(&[row(2, 1.0), row(3, 0.5)], 0.02), 3);
        assert_eq!(elbow(&[row(2, 0.0), row(3, 0.0)], 0.02), 2);
    }
}
