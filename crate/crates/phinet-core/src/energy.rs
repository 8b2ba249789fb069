//! First-order energy model for always-on inference hardware.
//!
//! Compute cost is linear in multiply-accumulate count: the default
//! coefficient of 1.2 mJ per million MACCs reproduces measurements taken on a
//! sub-100 mW vision platform (9.85 MMACC at roughly 11.8 mJ per frame,
//! 1.23 MMACC at roughly 1.3 mJ). Measured current traces can be integrated
//! directly as an alternative to the linear model.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("energy model needs a positive MACC count")]
    ZeroMacc,
    #[error("current trace has no samples")]
    EmptyTrace,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Millijoules spent per million multiply-accumulates.
    pub mj_per_mmacc: f64,
    /// Baseline draw of the rest of the board, in milliwatts.
    pub idle_mw: f64,
    /// Supply voltage used when integrating current traces.
    pub supply_volts: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            mj_per_mmacc: 1.2,
            idle_mw: 0.0,
            supply_volts: 1.8,
        }
    }
}

/// A sampled current waveform, e.g. from a shunt monitor during inference.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub samples_ma: Vec<f64>,
    pub sample_period_s: f64,
}

impl CurrentTrace {
    pub fn new(samples_ma: Vec<f64>) -> Self {
        CurrentTrace {
            samples_ma,
            sample_period_s: 10e-6,
        }
    }
}

impl EnergyModel {
    /// Energy for one inference of `macc` multiply-accumulates, in mJ.
    pub fn energy_per_inference(&self, macc: u64) -> Result<f64, EnergyError> {
        if macc == 0 {
            return Err(EnergyError::ZeroMacc);
        }
        Ok(macc as f64 / 1e6 * self.mj_per_mmacc)
    }

    /// Rectangle-rule integral of a current trace: V · Σ I·Δt, in mJ.
    pub fn integrate_trace(&self, trace: &CurrentTrace) -> Result<f64, EnergyError> {
        if trace.samples_ma.is_empty() {
            return Err(EnergyError::EmptyTrace);
        }
        if trace.sample_period_s <= 0.0 {
            return Err(EnergyError::NonPositive("sample period"));
        }
        let charge: f64 = trace.samples_ma.iter().sum::<f64>() * trace.sample_period_s;
        Ok(self.supply_volts * charge)
    }

    /// Average power when running at `fps` frames per second, in mW.
    pub fn power_at_fps(&self, energy_per_frame_mj: f64, fps: f64) -> Result<f64, EnergyError> {
        if fps <= 0.0 {
            return Err(EnergyError::NonPositive("frame rate"));
        }
        Ok(energy_per_frame_mj * fps + self.idle_mw)
    }
}

/// Hours of continuous operation funded by one charging interval: a panel of
/// `panel_mw` at `efficiency` collecting for `sun_hours`, against a constant
/// `load_mw` draw.
pub fn solar_endurance_hours(
    panel_mw: f64,
    efficiency: f64,
    sun_hours: f64,
    load_mw: f64,
) -> Result<f64, EnergyError> {
    if panel_mw <= 0.0 {
        return Err(EnergyError::NonPositive("panel power"));
    }
    if efficiency <= 0.0 || efficiency > 1.0 {
        return Err(EnergyError::NonPositive("harvest efficiency"));
    }
    if sun_hours <= 0.0 {
        return Err(EnergyError::NonPositive("sun hours"));
    }
    if load_mw <= 0.0 {
        return Err(EnergyError::NonPositive("load power"));
    }
    Ok(panel_mw * efficiency * sun_hours / load_mw)
}

/// A (configuration, frame rate) pair priced by the energy model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkingPoint {
    pub label: String,
    pub macc: u64,
    pub fps: f64,
    pub energy_per_frame_mj: f64,
    pub average_power_mw: f64,
}

/// Price a set of candidate operating modes, returned in ascending MACC
/// order so the table reads from lightest to heaviest.
pub fn working_points(
    model: &EnergyModel,
    candidates: &[(String, u64, f64)],
) -> Result<Vec<WorkingPoint>, EnergyError> {
    let mut points = candidates
        .iter()
        .map(|(label, macc, fps)| {
            let energy = model.energy_per_inference(*macc)?;
            let power = model.power_at_fps(energy, *fps)?;
            Ok(WorkingPoint {
                label: label.clone(),
                macc: *macc,
                fps: *fps,
                energy_per_frame_mj: energy,
                average_power_mw: power,
            })
        })
        .collect::<Result<Vec<_>, EnergyError>>()?;
    points.sort_by_key(|p| p.macc);
    Ok(points)
}
