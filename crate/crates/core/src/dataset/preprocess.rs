use serde::{Deserialize, Serialize};

use super::HourlySeries;
use crate::error::{Error, Result};

/// Rules for flagging bad samples.
///
/// A sample is flagged when it falls outside its absolute bounds, or when its
/// z-score (computed from the in-bounds samples of the same column) exceeds
/// `z_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BadDataPolicy {
    pub z_threshold: f64,
    pub temp_bounds: (f64, f64),
    pub load_bounds: (f64, f64),
    /// Largest tolerated fraction of flagged rows.
    pub max_bad_fraction: f64,
}

impl Default for BadDataPolicy {
    fn default() -> Self {
        Self {
            z_threshold: 4.0,
            temp_bounds: (-60.0, 60.0),
            load_bounds: (0.0, 3.0),
            max_bad_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    AmbientTemp,
    LoadRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Repair {
    pub index: usize,
    pub column: Column,
    pub original: f64,
    pub replacement: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PreprocessReport {
    pub repairs: Vec<Repair>,
    pub flagged_rows: usize,
}

fn flag_column(values: &[f64], bounds: (f64, f64), z_threshold: f64) -> Vec<bool> {
    let in_bounds = |v: f64| v.is_finite() && v >= bounds.0 && v <= bounds.1;
    let good: Vec<f64> = values.iter().copied().filter(|&v| in_bounds(v)).collect();
    let (mean, sd) = if good.len() >= 2 {
        let n = good.len() as f64;
        let mean = good.iter().sum::<f64>() / n;
        let var = good.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    } else {
        (0.0, 0.0)
    };
    values
        .iter()
        .map(|&v| !in_bounds(v) || (sd > 0.0 && ((v - mean) / sd).abs() > z_threshold))
        .collect()
}

/// Replaces flagged samples by linear interpolation between the nearest
/// unflagged neighbours; at the ends of the series the nearest unflagged
/// value is copied.
fn repair_column(values: &mut [f64], flags: &[bool], column: Column, repairs: &mut Vec<Repair>) {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !flags[i]).collect();
    let originals = values.to_vec();
    for i in (0..values.len()).filter(|&i| flags[i]) {
        let after = valid.partition_point(|&j| j < i);
        let replacement = match (after.checked_sub(1).map(|a| valid[a]), valid.get(after)) {
            (Some(lo), Some(&hi)) => {
                let w = (i - lo) as f64 / (hi - lo) as f64;
                originals[lo] + w * (originals[hi] - originals[lo])
            }
            (Some(lo), None) => originals[lo],
            (None, Some(&hi)) => originals[hi],
            (None, None) => unreachable!("bad-row limit guarantees a valid sample"),
        };
        values[i] = replacement;
        repairs.push(Repair {
            index: i,
            column,
            original: originals[i],
            replacement,
        });
    }
}

/// Detects and repairs bad samples. Rows that are not flagged are returned
/// untouched.
pub fn preprocess(series: &HourlySeries, policy: &BadDataPolicy) -> Result<(HourlySeries, PreprocessReport)> {
    if series.is_empty() {
        return Err(Error::Input("cannot pre-process an empty series".into()));
    }
    let temp_flags = flag_column(series.ambient_temp(), policy.temp_bounds, policy.z_threshold);
    let load_flags = flag_column(series.load_ratio(), policy.load_bounds, policy.z_threshold);
    let flagged_rows = temp_flags
        .iter()
        .zip(&load_flags)
        .filter(|(a, b)| **a || **b)
        .count();
    let total = series.len();
    let all_bad = temp_flags.iter().all(|&f| f) || load_flags.iter().all(|&f| f);
    if all_bad || flagged_rows as f64 > policy.max_bad_fraction * total as f64 {
        return Err(Error::TooManyBadRows {
            flagged: flagged_rows,
            total,
            limit: policy.max_bad_fraction * 100.0,
        });
    }

    let mut temps = series.ambient_temp().to_vec();
    let mut loads = series.load_ratio().to_vec();
    let mut report = PreprocessReport {
        repairs: Vec::new(),
        flagged_rows,
    };
    repair_column(&mut temps, &temp_flags, Column::AmbientTemp, &mut report.repairs);
    repair_column(&mut loads, &load_flags, Column::LoadRatio, &mut report.repairs);
    report.repairs.sort_by_key(|r| r.index);

    let repaired = HourlySeries::new(series.timestamps().to_vec(), temps, loads)?;
    Ok((repaired, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, SyntheticSpec};
    use chrono::NaiveDateTime;

    fn series(temps: Vec<f64>, loads: Vec<f64>) -> HourlySeries {
        HourlySeries::from_start(NaiveDateTime::default(), temps, loads).unwrap()
    }

    #[test]
    fn clean_series_unchanged() {
        let s = synthesize(&SyntheticSpec::default(), 24 * 30, 3).unwrap();
        let (out, report) = preprocess(&s, &BadDataPolicy::default()).unwrap();
        assert_eq!(out, s);
        assert!(report.repairs.is_empty());
    }

    #[test]
    fn spike_is_interpolated() {
        let mut temps = vec![20.0; 21];
        temps[10] = 999.0;
        let s = series(temps, vec![0.5; 21]);
        let (out, report) = preprocess(&s, &BadDataPolicy::default()).unwrap();
        assert_eq!(out.ambient_temp()[10], 20.0);
        assert_eq!(report.repairs.len(), 1);
        assert_eq!(report.repairs[0].index, 10);
        assert_eq!(report.repairs[0].original, 999.0);
        assert_eq!(&out.ambient_temp()[..10], &s.ambient_temp()[..10]);
        assert_eq!(&out.ambient_temp()[11..], &s.ambient_temp()[11..]);
    }

    #[test]
    fn interpolates_between_unequal_neighbours() {
        let temps = vec![10.0, 11.0, -500.0, -500.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 21.0, 22.0, 23.0, 24.0, 25.0, 26.0, 27.0, 28.0, 29.0];
        let s = series(temps, vec![0.5; 20]);
        let (out, report) = preprocess(&s, &BadDataPolicy::default()).unwrap();
        assert_eq!(report.flagged_rows, 2);
        assert!((out.ambient_temp()[2] - 12.0).abs() < 1e-12);
        assert!((out.ambient_temp()[3] - 13.0).abs() < 1e-12);
    }

    #[test]
    fn edge_spike_copies_neighbour() {
        let mut loads = vec![0.6; 20];
        loads[19] = 9.0;
        let (out, _) = preprocess(&series(vec![5.0; 20], loads), &BadDataPolicy::default()).unwrap();
        assert_eq!(out.load_ratio()[19], 0.6);
    }

    #[test]
    fn refuses_mostly_bad_data() {
        let temps: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 20.0 } else { 999.0 }).collect();
        let err = preprocess(&series(temps, vec![0.5; 10]), &BadDataPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::TooManyBadRows { flagged: 5, total: 10, .. }));
    }
}
