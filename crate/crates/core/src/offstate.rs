//! Resistive (OFF) junction regime: wide-band spectrum and residual SC coupling.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::cell::{cell_resonances, isolated_sc_frequency, s21_batch, MemoryCell};
use crate::constants::TWO_PI;
use crate::fit::lstsq;
use crate::modemap::SweepSettings;
use crate::resonance::{fit_notch, linspace, ResonancePeak, TracePoint};
use crate::Result;

/// Band of the OFF-state survey, Hz.
pub const OFF_BAND: (f64, f64) = (1e9, 16e9);

/// Settings for OFF sweeps: the features are far shallower than ON-state dips.
pub fn off_settings(z_ref: f64) -> SweepSettings {
    SweepSettings {
        min_depth_db: 1e-5,
        z_ref,
        ..SweepSettings::default()
    }
}

/// Every resonance of the OFF cell in `band`.
pub fn off_state_spectrum(cell: &MemoryCell, band: (f64, f64), settings: &SweepSettings) -> Result<Vec<ResonancePeak>> {
    cell_resonances(
        cell,
        cell.jj.off_state(),
        &settings.plan(band),
        settings.z_ref,
        settings.min_depth_db,
    )
}

/// Peaks inside `center ± half_width`.
pub fn peaks_near(peaks: &[ResonancePeak], center: f64, half_width: f64) -> Vec<ResonancePeak> {
    peaks
        .iter()
        .copied()
        .filter(|p| (p.f0 - center).abs() <= half_width)
        .collect()
}

/// What the OFF spectrum says about the storage cavity's leak to the feedline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCoupling {
    /// Effective TCR–SC coupling in OFF segments, rad/s.
    pub g_off: f64,
    /// SC decay rate into the feedline through the OFF junction, rad/s.
    pub kappa_b_ext: f64,
    /// Fitted SC mode in the OFF state, if it was resolved.
    pub sc_peak: Option<ResonancePeak>,
    pub below_resolution: bool,
}

impl ResidualCoupling {
    fn none() -> Self {
        Self {
            g_off: 0.0,
            kappa_b_ext: 0.0,
            sc_peak: None,
            below_resolution: true,
        }
    }
}

/// Half-width of the window examined around the isolated SC frequency, Hz.
const SC_WINDOW: f64 = 20e6;
const SC_POINTS: usize = 4001;
/// Normalised deviations below this are indistinguishable from rounding.
const RESOLUTION: f64 = 1e-9;

/// Extracts the SC's external decay in the OFF state and maps it onto an
/// equivalent coupling `g_off` to a TCR that decays at `kappa_a` (rad/s).
///
/// A resonant mode coupled at rate `g` to one decaying at `κa` leaks at `4g²/κa`,
/// so `g_off = √(κb,ext · κa) / 2`.
pub fn off_state_residual_coupling(cell: &MemoryCell, kappa_a: f64, z_ref: f64) -> Result<ResidualCoupling> {
    cell.validate()?;
    let f_sc = isolated_sc_frequency(cell)?;
    let grid = linspace(f_sc - SC_WINDOW, f_sc + SC_WINDOW, SC_POINTS);
    let s = s21_batch(cell, cell.jj.off_state(), &grid, z_ref)?;
    let Some(norm) = normalise_background(&grid, &s, f_sc) else {
        return Ok(ResidualCoupling::none());
    };
    let dev: Vec<f64> = norm.iter().map(|p| (p.1 - 1.0).norm()).collect();
    let (imax, dmax) = dev
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    if !(dmax > RESOLUTION) {
        return Ok(ResidualCoupling::none());
    }
    // the OFF feature may be a dip or a bump on the background, so work on the deviation
    let above = |i: &usize| dev[*i] >= 0.5 * dmax;
    let left = (0..imax).rev().find(|i| !above(i)).unwrap_or(0);
    let right = (imax + 1..dev.len()).find(|i| !above(i)).unwrap_or(dev.len() - 1);
    let step = grid[1] - grid[0];
    let fwhm = (grid[right] - grid[left]).max(4.0 * step);
    let f_guess = grid[imax];
    let peak = match fit_notch(&norm, f_guess, fwhm) {
        Some(fit) if (fit.f0 - f_guess).abs() < 2.0 * fwhm => ResonancePeak {
            f0: fit.f0,
            q_loaded: fit.q_loaded,
            q_internal: None,
            q_coupling: fit.q_coupling(),
            q_c_abs: Some(fit.q_c_abs),
            depth_db: 20.0 * libm::log10(1.0 - dmax),
        },
        _ => ResonancePeak {
            f0: f_guess,
            q_loaded: f_guess / fwhm,
            q_internal: None,
            q_coupling: None,
            // the deviation of a notch at its centre is its diameter Q_l / |Q_c|
            q_c_abs: Some(f_guess / fwhm / dmax),
            depth_db: 20.0 * libm::log10(1.0 - dmax),
        },
    };
    let q_c = peak.q_c_abs.unwrap_or(f64::INFINITY);
    let kappa_b_ext = TWO_PI * peak.f0 / q_c;
    let g_off = if kappa_a > 0.0 { 0.5 * libm::sqrt(kappa_b_ext * kappa_a) } else { 0.0 };
    Ok(ResidualCoupling {
        g_off,
        kappa_b_ext,
        sc_peak: Some(peak),
        below_resolution: false,
    })
}

/// Divides out a cubic complex background fitted over the window.
fn normalise_background(grid: &[f64], s: &[Complex64], f_c: f64) -> Option<Vec<TracePoint>> {
    let half = SC_WINDOW;
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|f| {
            let x = (f - f_c) / half;
            alloc::vec![1.0, x, x * x, x * x * x]
        })
        .collect();
    let re: Vec<f64> = s.iter().map(|v| v.re).collect();
    let im: Vec<f64> = s.iter().map(|v| v.im).collect();
    let cr = lstsq(&rows, &re)?;
    let ci = lstsq(&rows, &im)?;
    let bg = |x: f64| {
        let p = |c: &[f64]| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        Complex64::new(p(&cr), p(&ci))
    };
    grid.iter()
        .zip(s)
        .map(|(&f, &v)| {
            let b = bg((f - f_c) / half);
            (b.norm() > 0.0).then(|| (f, v / b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_coupling_capacitor_path() {
        let c = MemoryCell {
            c_couple: 1e-30,
            ..MemoryCell::default()
        };
        let r = off_state_residual_coupling(&c, 2e6, 50.0).unwrap();
        assert_eq!(r.g_off, 0.0);
        assert!(r.below_resolution);
    }

    #[test]
    fn open_junction_blocks_everything() {
        let mut c = MemoryCell::default();
        c.jj.r_off = f64::INFINITY;
        c.jj.c_j = 0.0;
        let r = off_state_residual_coupling(&c, 2e6, 50.0).unwrap();
        assert_eq!(r.g_off, 0.0);
    }

    #[test]
    fn default_cell_leaks_a_little() {
        let r = off_state_residual_coupling(&MemoryCell::default(), 2e6, 50.0).unwrap();
        assert!(!r.below_resolution);
        assert!(r.g_off > 0.0 && r.g_off < 1e5, "{r:?}");
    }
}
