//! IEEE C57.91 dynamic hot-spot temperature and insulation aging model.
//!
//! The hottest-spot temperature of each interval is ambient plus a top-oil
//! rise plus a winding hot-spot rise. Each rise relaxes exponentially from an
//! initial value toward the ultimate value set by the interval's load ratio.
//! The Arrhenius aging acceleration factor of the hot spot, integrated over
//! time and divided by the normal insulation life, gives the percent loss of
//! life.

use serde::{Deserialize, Serialize};

use crate::dataset::HourlySeries;
use crate::error::{Error, Result};

/// Hot-spot temperature (°C) at which the aging acceleration factor is one.
pub const REFERENCE_HOTSPOT_C: f64 = 110.0;

const KELVIN_OFFSET: f64 = 273.0;

/// Nameplate and thermal constants of one transformer.
///
/// Defaults are the 934 A distribution transformer used throughout this
/// crate's examples, with a 5 minute winding time constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformerParams {
    /// Rated current in amperes. Informational only.
    pub rated_current: f64,
    /// Load loss at rated load divided by no-load loss.
    pub loss_ratio: f64,
    /// Winding hot-spot rise exponent `m`.
    pub exponent_m: f64,
    /// Top-oil rise exponent `n`.
    pub exponent_n: f64,
    /// Rated winding hot-spot rise over top oil, °C.
    pub hotspot_rise_rated: f64,
    /// Rated top-oil rise over ambient, °C.
    pub topoil_rise_rated: f64,
    /// Top-oil time constant at rated load, hours.
    pub topoil_time_constant: f64,
    /// Winding time constant, hours.
    pub winding_time_constant: f64,
    /// Normal insulation life, hours.
    pub normal_insulation_life: f64,
    /// Per-unit life constant `A`.
    pub arrhenius_a: f64,
    /// Aging rate constant `B`, kelvin.
    pub arrhenius_b: f64,
}

impl Default for TransformerParams {
    fn default() -> Self {
        Self {
            rated_current: 934.0,
            loss_ratio: 7.43,
            exponent_m: 0.8,
            exponent_n: 0.8,
            hotspot_rise_rated: 17.6,
            topoil_rise_rated: 53.9,
            topoil_time_constant: 6.8,
            winding_time_constant: 5.0 / 60.0,
            normal_insulation_life: 180_000.0,
            arrhenius_a: 9.8e-18,
            arrhenius_b: 15_000.0,
        }
    }
}

impl TransformerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("loss_ratio", self.loss_ratio),
            ("hotspot_rise_rated", self.hotspot_rise_rated),
            ("topoil_rise_rated", self.topoil_rise_rated),
            ("topoil_time_constant", self.topoil_time_constant),
            ("winding_time_constant", self.winding_time_constant),
            ("normal_insulation_life", self.normal_insulation_life),
            ("arrhenius_a", self.arrhenius_a),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        for (name, value) in [("exponent_m", self.exponent_m), ("exponent_n", self.exponent_n)] {
            if !(0.8..=1.0).contains(&value) {
                return Err(Error::Domain(format!(
                    "{name} must lie in [0.8, 1.0], got {value}"
                )));
            }
        }
        if !(11_350.0..=18_000.0).contains(&self.arrhenius_b) {
            return Err(Error::Domain(format!(
                "arrhenius_b must lie in [11350, 18000] K, got {}",
                self.arrhenius_b
            )));
        }
        if !self.rated_current.is_finite() || self.rated_current < 0.0 {
            return Err(Error::Domain(format!(
                "rated_current must be finite and non-negative, got {}",
                self.rated_current
            )));
        }
        Ok(())
    }
}

/// How the initial rises of an interval are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialRiseMode {
    /// Recompute the initial rises from the previous interval's load ratio
    /// with the ultimate-rise formulas.
    #[default]
    FromPreviousLoad,
    /// Use the rises actually reached at the end of the previous interval.
    CarryForward,
}

/// Thermal state carried from one interval to the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub load_ratio_prev: f64,
    pub topoil_rise: f64,
    pub hotspot_rise: f64,
}

impl ThermalState {
    /// Rises already at their ultimate values for `load_ratio`.
    pub fn warm(load_ratio: f64, params: &TransformerParams) -> Result<Self> {
        Ok(Self {
            load_ratio_prev: load_ratio,
            topoil_rise: ultimate_topoil_rise(load_ratio, params)?,
            hotspot_rise: ultimate_hotspot_rise(load_ratio, params)?,
        })
    }

    /// Oil and windings at ambient temperature.
    pub fn cold(load_ratio: f64) -> Result<Self> {
        check_load_ratio(load_ratio)?;
        Ok(Self {
            load_ratio_prev: load_ratio,
            topoil_rise: 0.0,
            hotspot_rise: 0.0,
        })
    }

    fn validate(&self) -> Result<()> {
        check_load_ratio(self.load_ratio_prev)?;
        if !(self.topoil_rise >= 0.0 && self.hotspot_rise >= 0.0)
            || !self.topoil_rise.is_finite()
            || !self.hotspot_rise.is_finite()
        {
            return Err(Error::Domain(format!(
                "thermal state rises must be finite and non-negative, got top-oil {} / hot-spot {}",
                self.topoil_rise, self.hotspot_rise
            )));
        }
        Ok(())
    }
}

/// Output of one interval of the thermal recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LolRecord {
    pub interval_index: usize,
    pub ambient_temp: f64,
    pub load_ratio: f64,
    pub topoil_rise: f64,
    pub hotspot_rise: f64,
    pub hotspot_temp: f64,
    pub aging_factor: f64,
    pub lol_percent: f64,
}

fn check_hotspot(hotspot_temp: f64) -> Result<()> {
    if !hotspot_temp.is_finite() {
        return Err(Error::Domain(format!(
            "hot-spot temperature must be finite, got {hotspot_temp}"
        )));
    }
    if hotspot_temp <= -KELVIN_OFFSET {
        return Err(Error::Domain(format!(
            "hot-spot temperature must exceed -273 °C, got {hotspot_temp}"
        )));
    }
    Ok(())
}

fn check_load_ratio(load_ratio: f64) -> Result<()> {
    if !load_ratio.is_finite() || load_ratio < 0.0 {
        return Err(Error::Domain(format!(
            "load ratio must be finite and non-negative, got {load_ratio}"
        )));
    }
    Ok(())
}

/// Arrhenius per-unit life `A·exp(B/(θ_H + 273))`.
pub fn per_unit_life(hotspot_temp: f64, params: &TransformerParams) -> Result<f64> {
    check_hotspot(hotspot_temp)?;
    Ok(params.arrhenius_a * (params.arrhenius_b / (hotspot_temp + KELVIN_OFFSET)).exp())
}

/// Aging acceleration factor relative to a 110 °C hot spot.
pub fn aging_acceleration_factor(hotspot_temp: f64, params: &TransformerParams) -> Result<f64> {
    check_hotspot(hotspot_temp)?;
    let b = params.arrhenius_b;
    Ok((b / (REFERENCE_HOTSPOT_C + KELVIN_OFFSET) - b / (hotspot_temp + KELVIN_OFFSET)).exp())
}

/// Steady-state top-oil rise over ambient for a constant load ratio.
pub fn ultimate_topoil_rise(load_ratio: f64, params: &TransformerParams) -> Result<f64> {
    check_load_ratio(load_ratio)?;
    let r = params.loss_ratio;
    let ratio = (load_ratio * load_ratio * r + 1.0) / (r + 1.0);
    Ok(params.topoil_rise_rated * ratio.powf(params.exponent_n))
}

/// Steady-state winding hot-spot rise over top oil for a constant load ratio.
pub fn ultimate_hotspot_rise(load_ratio: f64, params: &TransformerParams) -> Result<f64> {
    check_load_ratio(load_ratio)?;
    Ok(params.hotspot_rise_rated * load_ratio.powf(2.0 * params.exponent_m))
}

/// First-order exponential relaxation from `initial` toward `ultimate`
/// after `elapsed` hours.
pub fn transient_rise(initial: f64, ultimate: f64, elapsed: f64, time_constant: f64) -> Result<f64> {
    if !(time_constant > 0.0) || !time_constant.is_finite() {
        return Err(Error::Domain(format!(
            "time constant must be finite and > 0, got {time_constant}"
        )));
    }
    if !(elapsed >= 0.0) {
        return Err(Error::Domain(format!(
            "elapsed time must be non-negative, got {elapsed}"
        )));
    }
    // -expm1(-x) = 1 - exp(-x), without cancellation for short intervals
    let progress = -(-elapsed / time_constant).exp_m1();
    Ok((ultimate - initial) * progress + initial)
}

/// Advances the thermal state by one interval of `dt` hours at constant
/// ambient temperature and load ratio.
pub fn step_interval(
    state: &ThermalState,
    ambient_temp: f64,
    load_ratio: f64,
    dt: f64,
    params: &TransformerParams,
    mode: InitialRiseMode,
    interval_index: usize,
) -> Result<(ThermalState, LolRecord)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("interval length must be > 0, got {dt}")));
    }
    if !ambient_temp.is_finite() {
        return Err(Error::Domain(format!(
            "ambient temperature must be finite, got {ambient_temp}"
        )));
    }
    state.validate()?;

    let (topoil_initial, hotspot_initial) = match mode {
        InitialRiseMode::FromPreviousLoad => (
            ultimate_topoil_rise(state.load_ratio_prev, params)?,
            ultimate_hotspot_rise(state.load_ratio_prev, params)?,
        ),
        InitialRiseMode::CarryForward => (state.topoil_rise, state.hotspot_rise),
    };
    let topoil_ultimate = ultimate_topoil_rise(load_ratio, params)?;
    let hotspot_ultimate = ultimate_hotspot_rise(load_ratio, params)?;

    let topoil_rise =
        transient_rise(topoil_initial, topoil_ultimate, dt, params.topoil_time_constant)?;
    let hotspot_rise =
        transient_rise(hotspot_initial, hotspot_ultimate, dt, params.winding_time_constant)?;

    let hotspot_temp = ambient_temp + topoil_rise + hotspot_rise;
    let aging_factor = aging_acceleration_factor(hotspot_temp, params)?;
    let lol_percent = aging_factor * dt * 100.0 / params.normal_insulation_life;

    let next = ThermalState {
        load_ratio_prev: load_ratio,
        topoil_rise,
        hotspot_rise,
    };
    let record = LolRecord {
        interval_index,
        ambient_temp,
        load_ratio,
        topoil_rise,
        hotspot_rise,
        hotspot_temp,
        aging_factor,
        lol_percent,
    };
    Ok((next, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    #[default]
    Warm,
    Cold,
}

/// Options for [`run_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    /// Load ratio assumed before the first interval. `None` uses the first
    /// interval's load ratio.
    pub initial_load_ratio: Option<f64>,
    pub start: StartMode,
    pub rise_mode: InitialRiseMode,
}

/// Runs the thermal recursion over a whole series.
pub fn run_profile(
    series: &HourlySeries,
    params: &TransformerParams,
    options: &ProfileOptions,
) -> Result<Vec<LolRecord>> {
    if series.is_empty() {
        return Err(Error::Input("cannot run the thermal model on an empty series".into()));
    }
    params.validate()?;
    let dt = series.step_hours();
    let initial_load = options
        .initial_load_ratio
        .unwrap_or(series.load_ratio()[0]);
    let mut state = match options.start {
        StartMode::Warm => ThermalState::warm(initial_load, params)?,
        StartMode::Cold => ThermalState::cold(initial_load)?,
    };

    let mut records = Vec::with_capacity(series.len());
    for (index, (&ambient, &load)) in series
        .ambient_temp()
        .iter()
        .zip(series.load_ratio())
        .enumerate()
    {
        let (next, record) =
            step_interval(&state, ambient, load, dt, params, options.rise_mode, index)?;
        state = next;
        records.push(record);
    }
    Ok(records)
}

/// Time-weighted mean of the aging factors for intervals of equal length.
pub fn equivalent_aging(records: &[LolRecord], dt: f64) -> Result<f64> {
    let factors: Vec<f64> = records.iter().map(|r| r.aging_factor).collect();
    let steps = vec![dt; factors.len()];
    equivalent_aging_weighted(&factors, &steps)
}

/// Time-weighted mean of aging factors with per-interval durations.
pub fn equivalent_aging_weighted(aging_factors: &[f64], durations: &[f64]) -> Result<f64> {
    if aging_factors.is_empty() {
        return Err(Error::Input("equivalent aging needs at least one interval".into()));
    }
    if aging_factors.len() != durations.len() {
        return Err(Error::Input(format!(
            "{} aging factors but {} durations",
            aging_factors.len(),
            durations.len()
        )));
    }
    if durations.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Domain("interval durations must be > 0".into()));
    }
    let weighted: f64 = aging_factors.iter().zip(durations).map(|(f, d)| f * d).sum();
    let total: f64 = durations.iter().sum();
    Ok(weighted / total)
}

/// Percent of normal insulation life consumed over `total_hours`.
pub fn loss_of_life_percent(
    equivalent_aging: f64,
    total_hours: f64,
    params: &TransformerParams,
) -> Result<f64> {
    if !(equivalent_aging >= 0.0) || !(total_hours >= 0.0) {
        return Err(Error::Domain(format!(
            "equivalent aging and duration must be non-negative, got {equivalent_aging} and {total_hours}"
        )));
    }
    Ok(equivalent_aging * total_hours * 100.0 / params.normal_insulation_life)
}

/// Aggregate figures for a profile run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub intervals: usize,
    pub total_hours: f64,
    pub equivalent_aging: f64,
    pub total_lol_percent: f64,
    pub peak_hotspot_temp: f64,
}

pub fn summarize(records: &[LolRecord], dt: f64, params: &TransformerParams) -> Result<ProfileSummary> {
    let feqa = equivalent_aging(records, dt)?;
    let total_hours = dt * records.len() as f64;
    Ok(ProfileSummary {
        intervals: records.len(),
        total_hours,
        equivalent_aging: feqa,
        total_lol_percent: loss_of_life_percent(feqa, total_hours, params)?,
        peak_hotspot_temp: records
            .iter()
            .map(|r| r.hotspot_temp)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}
