//! Geometry calibration: nested one-dimensional root finds on a seed cell.

use alloc::format;

use crate::cell::{tcr_q_coupling, MemoryCell};
use crate::jjfet::JjState;
use crate::roots::{bisect, bisect_log, first_sign_change};
use crate::{CalibrationStage, Error, Result};

/// Relative tolerance of every scalar root find.
pub const CALIBRATION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    /// Isolated storage-cavity frequency, Hz.
    pub f_sc: f64,
    /// Isolated TCR frequency with the junction at `l_anchor`; normally equal to `f_sc`.
    pub f_tcr_on: f64,
    pub l_anchor: f64,
    /// TCR coupling quality factor to the feedline.
    pub q_c: f64,
}

impl CalibrationTargets {
    /// Crossing placed at `l_anchor`, with the TCR tuned onto the SC there.
    pub fn crossing_at(f_sc: f64, l_anchor: f64, q_c: f64) -> Self {
        Self {
            f_sc,
            f_tcr_on: f_sc,
            l_anchor,
            q_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_sc", self.f_sc),
            ("f_tcr_on", self.f_tcr_on),
            ("l_anchor", self.l_anchor),
            ("q_c", self.q_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn stage_err(stage: CalibrationStage, reason: &str) -> Error {
    Error::Calibration {
        stage,
        reason: reason.into(),
    }
}

/// Stage one: SC stub length so that stub ‖ `c_couple` resonates at `f_sc`.
pub fn calibrate_sc_length(cell: &MemoryCell, f_sc: f64) -> Result<f64> {
    let quarter = cell.phase_velocity() / (4.0 * f_sc);
    let mut trial = *cell;
    bisect(
        |len| {
            trial.sc_len = len;
            Ok(trial.sc_loaded_admittance(f_sc)?.im)
        },
        quarter * 1e-3,
        quarter,
        CALIBRATION_RTOL,
    )?
    .ok_or_else(|| stage_err(CalibrationStage::StorageLength, "no stub length resonates at f_sc"))
}

/// Stage two: TCR half length so the TCR with grounded ends resonates at `f_tcr` for `state`.
pub fn calibrate_tcr_length(cell: &MemoryCell, state: JjState, f_tcr: f64) -> Result<f64> {
    let quarter = cell.phase_velocity() / (4.0 * f_tcr);
    let mut trial = *cell;
    let mut im_b = |h: f64| -> Result<f64> {
        trial.tcr_half_len = h;
        Ok(trial.tcr_abcd(state, f_tcr)?.b.im)
    };
    let (lo, hi) = first_sign_change(&mut im_b, 0.05 * quarter, 2.0 * quarter, 2000)?
        .ok_or_else(|| stage_err(CalibrationStage::CouplerLength, "no TCR length resonates at the target"))?;
    bisect(im_b, lo, hi, CALIBRATION_RTOL)?
        .ok_or_else(|| stage_err(CalibrationStage::CouplerLength, "lost the TCR root bracket"))
}

/// Full calibration. `c_couple`, line parameters and the junction are kept from `seed`.
pub fn calibrate_geometry(targets: &CalibrationTargets, seed: &MemoryCell, z_ref: f64) -> Result<MemoryCell> {
    targets.validate()?;
    seed.validate()?;
    let mut cell = *seed;
    cell.sc_len = calibrate_sc_length(&cell, targets.f_sc)?;
    let on = JjState::On { l_j: targets.l_anchor };

    let q_of = |c_in: f64| -> Result<f64> {
        let mut trial = cell;
        trial.c_in = c_in;
        trial.tcr_half_len = calibrate_tcr_length(&trial, on, targets.f_tcr_on)?;
        tcr_q_coupling(&trial, on, targets.f_tcr_on, z_ref)
    };
    // Q_c falls roughly as 1/c_in² so a wide logarithmic bracket is cheap
    let (lo, hi) = (1e-17, 1e-13);
    let c_in = bisect_log(
        |c| Ok(libm::log(q_of(c)? / targets.q_c)),
        lo,
        hi,
        CALIBRATION_RTOL,
    )
    .map_err(|e| match e {
        Error::Calibration { .. } => e,
        other => stage_err(CalibrationStage::InputCapacitor, &format!("{other}")),
    })?
    .ok_or_else(|| {
        stage_err(
            CalibrationStage::InputCapacitor,
            &format!("q_c = {} is outside the reachable range", targets.q_c),
        )
    })?;
    cell.c_in = c_in;
    cell.tcr_half_len = calibrate_tcr_length(&cell, on, targets.f_tcr_on)?;
    Ok(cell)
}
