//! Seeded synthetic year of hourly weather and residential load.
//!
//! With `h` the hour index from the start of the series:
//!
//! ```text
//! temp(h) = temp_mean
//!         - temp_annual_amp  * cos(2π (h - temp_coldest_hour) / 8760)
//!         - temp_diurnal_amp * cos(2π (h - temp_coldest_hour_of_day) / 24)
//!         + temp_noise(h)
//!
//! load(h) = clip(load_base
//!         + load_evening_amp  * cos(2π (h - load_evening_peak_hour) / 24)
//!         + load_morning_amp  * cos(4π (h - load_morning_peak_hour) / 24)
//!         + load_weekly_amp   * cos(2π h / 168)
//!         + load_seasonal_amp * cos(4π (h - temp_coldest_hour) / 8760)
//!         + load_noise(h), load_min, load_max)
//! ```
//!
//! `temp_noise` is white Gaussian noise. `load_noise` is a stationary AR(1)
//! process with standard deviation `load_noise_sd` and lag-one correlation
//! `load_noise_correlation`. The seasonal load term peaks in midwinter and
//! midsummer, the heating and cooling seasons.

use std::f64::consts::PI;

use chrono::NaiveDateTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{HourlySeries, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// First timestamp, `YYYY-MM-DDTHH:MM:SS`.
    pub start: String,
    pub temp_mean: f64,
    pub temp_annual_amp: f64,
    pub temp_coldest_hour: f64,
    pub temp_diurnal_amp: f64,
    pub temp_coldest_hour_of_day: f64,
    pub temp_noise_sd: f64,
    pub load_base: f64,
    pub load_evening_amp: f64,
    pub load_evening_peak_hour: f64,
    pub load_morning_amp: f64,
    pub load_morning_peak_hour: f64,
    pub load_weekly_amp: f64,
    pub load_seasonal_amp: f64,
    pub load_noise_sd: f64,
    pub load_noise_correlation: f64,
    pub load_min: f64,
    pub load_max: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            start: "2015-01-01T00:00:00".into(),
            temp_mean: 10.0,
            temp_annual_amp: 15.0,
            temp_coldest_hour: 480.0,
            temp_diurnal_amp: 5.0,
            temp_coldest_hour_of_day: 4.0,
            temp_noise_sd: 2.0,
            load_base: 0.65,
            load_evening_amp: 0.15,
            load_evening_peak_hour: 19.0,
            load_morning_amp: 0.05,
            load_morning_peak_hour: 8.0,
            load_weekly_amp: 0.05,
            load_seasonal_amp: 0.12,
            load_noise_sd: 0.02,
            load_noise_correlation: 0.95,
            load_min: 0.2,
            load_max: 1.2,
        }
    }
}

impl SyntheticSpec {
    pub fn start_time(&self) -> Result<NaiveDateTime> {
        NaiveDateTime::parse_from_str(&self.start, TIMESTAMP_FORMAT)
            .map_err(|e| Error::Domain(format!("invalid synthetic start `{}`: {e}", self.start)))
    }

    pub fn validate(&self) -> Result<()> {
        self.start_time()?;
        let fields = [
            ("temp_mean", self.temp_mean),
            ("temp_annual_amp", self.temp_annual_amp),
            ("temp_coldest_hour", self.temp_coldest_hour),
            ("temp_diurnal_amp", self.temp_diurnal_amp),
            ("temp_coldest_hour_of_day", self.temp_coldest_hour_of_day),
            ("temp_noise_sd", self.temp_noise_sd),
            ("load_base", self.load_base),
            ("load_evening_amp", self.load_evening_amp),
            ("load_evening_peak_hour", self.load_evening_peak_hour),
            ("load_morning_amp", self.load_morning_amp),
            ("load_morning_peak_hour", self.load_morning_peak_hour),
            ("load_weekly_amp", self.load_weekly_amp),
            ("load_seasonal_amp", self.load_seasonal_amp),
            ("load_noise_sd", self.load_noise_sd),
            ("load_noise_correlation", self.load_noise_correlation),
            ("load_min", self.load_min),
            ("load_max", self.load_max),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain(format!("synthetic spec field {name} is not finite ({v})")));
        }
        if self.temp_noise_sd < 0.0 || self.load_noise_sd < 0.0 {
            return Err(Error::Domain("noise standard deviations must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.load_noise_correlation) {
            return Err(Error::Domain(format!(
                "load_noise_correlation must lie in [0, 1), got {}",
                self.load_noise_correlation
            )));
        }
        if !(0.0 <= self.load_min && self.load_min < self.load_max) {
            return Err(Error::Domain(format!(
                "load band must satisfy 0 <= load_min < load_max, got [{}, {}]",
                self.load_min, self.load_max
            )));
        }
        Ok(())
    }

    /// Noise-free temperature at hour `h`.
    pub fn temp_shape(&self, h: f64) -> f64 {
        self.temp_mean
            - self.temp_annual_amp * (2.0 * PI * (h - self.temp_coldest_hour) / HOURS_PER_YEAR).cos()
            - self.temp_diurnal_amp * (2.0 * PI * (h - self.temp_coldest_hour_of_day) / 24.0).cos()
    }

    /// Noise-free, unclipped load ratio at hour `h`.
    pub fn load_shape(&self, h: f64) -> f64 {
        self.load_base
            + self.load_evening_amp * (2.0 * PI * (h - self.load_evening_peak_hour) / 24.0).cos()
            + self.load_morning_amp * (4.0 * PI * (h - self.load_morning_peak_hour) / 24.0).cos()
            + self.load_weekly_amp * (2.0 * PI * h / 168.0).cos()
            + self.load_seasonal_amp * (4.0 * PI * (h - self.temp_coldest_hour) / HOURS_PER_YEAR).cos()
    }
}

/// Generates `hours` consecutive hours. Deterministic in `(spec, hours, seed)`.
pub fn synthesize(spec: &SyntheticSpec, hours: usize, seed: u64) -> Result<HourlySeries> {
    spec.validate()?;
    if hours < 24 {
        return Err(Error::Domain(format!("synthetic series needs at least 24 hours, got {hours}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let phi = spec.load_noise_correlation;
    let innovation_sd = spec.load_noise_sd * (1.0 - phi * phi).sqrt();
    let mut load_noise = spec.load_noise_sd * unit.sample(&mut rng);

    let mut temps = Vec::with_capacity(hours);
    let mut loads = Vec::with_capacity(hours);
    for hour in 0..hours {
        let h = hour as f64;
        if hour > 0 {
            load_noise = phi * load_noise + innovation_sd * unit.sample(&mut rng);
        }
        let temp_noise = spec.temp_noise_sd * unit.sample(&mut rng);
        temps.push(spec.temp_shape(h) + temp_noise);
        loads.push((spec.load_shape(h) + load_noise).clamp(spec.load_min, spec.load_max));
    }
    HourlySeries::from_start(spec.start_time()?, temps, loads)
}
