//! Mode maps over junction inductance and the two-mode avoided-crossing fit.

use alloc::vec::Vec;

use crate::cell::{cell_resonances, MemoryCell};
use crate::fit::{levenberg_marquardt, lstsq, LmOptions};
use crate::jjfet::JjState;
use crate::resonance::{ResonancePeak, SweepPlan};
use crate::roots::bisect;
use crate::{Error, Result};

/// Sweep settings shared by mode maps and spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub coarse_step: f64,
    pub refine_stages: usize,
    /// Dips shallower than this many dB below unity are ignored.
    pub min_depth_db: f64,
    pub z_ref: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            coarse_step: 2e6,
            refine_stages: 3,
            min_depth_db: 0.01,
            z_ref: 50.0,
        }
    }
}

impl SweepSettings {
    pub fn plan(&self, band: (f64, f64)) -> SweepPlan {
        SweepPlan {
            start: band.0,
            stop: band.1,
            coarse_step: self.coarse_step,
            refine_stages: self.refine_stages,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRow {
    pub l_j: f64,
    /// The two lowest peaks in band, ordered by frequency; `None` flags the row.
    pub modes: Option<[ResonancePeak; 2]>,
    /// Number of peaks the sweep found in band.
    pub found: usize,
}

impl ModeRow {
    pub fn f_mode1(&self) -> Option<f64> {
        self.modes.map(|m| m[0].f0)
    }

    pub fn f_mode2(&self) -> Option<f64> {
        self.modes.map(|m| m[1].f0)
    }

    pub fn splitting(&self) -> Option<f64> {
        self.modes.map(|m| m[1].f0 - m[0].f0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeMap {
    pub rows: Vec<ModeRow>,
}

impl ModeMap {
    /// `(l_j, f_mode1, f_mode2)` for every complete row.
    pub fn valid(&self) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.modes.map(|m| (r.l_j, m[0].f0, m[1].f0)))
            .collect()
    }

    pub fn flagged(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.modes.is_none()).map(|r| r.l_j).collect()
    }

    /// Index (into [`ModeMap::valid`]) of the minimum splitting, and whether the
    /// splitting falls strictly before it and rises strictly after it.
    pub fn splitting_minimum(&self) -> Option<(usize, bool)> {
        let v = self.valid();
        let s: Vec<f64> = v.iter().map(|r| r.2 - r.1).collect();
        let k = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b]))?;
        let unimodal = s[..=k].windows(2).all(|w| w[1] < w[0]) && s[k..].windows(2).all(|w| w[1] > w[0]);
        let interior = k > 0 && k + 1 < s.len();
        Some((k, unimodal && interior))
    }

    pub fn from_rows(rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let peak = |f0: f64| ResonancePeak {
            f0,
            q_loaded: 1.0,
            q_internal: None,
            q_coupling: None,
            q_c_abs: None,
            depth_db: 0.0,
        };
        ModeMap {
            rows: rows
                .into_iter()
                .map(|(l_j, a, b)| ModeRow {
                    l_j,
                    modes: Some([peak(a.min(b)), peak(a.max(b))]),
                    found: 2,
                })
                .collect(),
        }
    }
}

/// One row of the map: the two lowest resonances of the ON cell in `band`.
pub fn mode_row(cell: &MemoryCell, l_j: f64, band: (f64, f64), settings: &SweepSettings) -> Result<ModeRow> {
    let peaks = cell_resonances(
        cell,
        JjState::On { l_j },
        &settings.plan(band),
        settings.z_ref,
        settings.min_depth_db,
    )?;
    Ok(ModeRow {
        l_j,
        modes: (peaks.len() >= 2).then(|| [peaks[0], peaks[1]]),
        found: peaks.len(),
    })
}

pub fn mode_map(cell: &MemoryCell, l_grid: &[f64], band: (f64, f64), settings: &SweepSettings) -> Result<ModeMap> {
    if l_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("l_grid", "inductances must be positive"));
    }
    cell.validate()?;
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<ModeRow>> = {
        use rayon::prelude::*;
        l_grid.par_iter().map(|&l| mode_row(cell, l, band, settings)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<ModeRow>> = l_grid.iter().map(|&l| mode_row(cell, l, band, settings)).collect();
    Ok(ModeMap { rows: rows? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingFit {
    /// Half the minimum splitting, Hz.
    pub g: f64,
    pub l_cross: f64,
    pub f_cross: f64,
    /// Inductance interval where the splitting stays within √2 of its minimum.
    pub window: (f64, f64),
    pub rms_residual: f64,
    /// Constant bare SC branch, Hz.
    pub f_b: f64,
    /// Cubic bare TCR branch in the normalised inductance `(l - l_mid) / l_half`, Hz.
    pub f_a_coeffs: [f64; 4],
    pub l_mid: f64,
    pub l_half: f64,
}

impl CrossingFit {
    pub fn f_a(&self, l_j: f64) -> f64 {
        let x = (l_j - self.l_mid) / self.l_half;
        let c = &self.f_a_coeffs;
        c[0] + x * (c[1] + x * (c[2] + x * c[3]))
    }

    /// Hybrid frequencies `(f-, f+)` predicted at `l_j`.
    pub fn hybrid(&self, l_j: f64) -> (f64, f64) {
        hybrid(self.f_a(l_j), self.f_b, self.g)
    }
}

fn hybrid(fa: f64, fb: f64, g: f64) -> (f64, f64) {
    let mean = 0.5 * (fa + fb);
    let r = libm::sqrt(0.25 * (fa - fb) * (fa - fb) + g * g);
    (mean - r, mean + r)
}

const MHZ: f64 = 1e6;

pub fn fit_avoided_crossing(map: &ModeMap) -> Result<CrossingFit> {
    let rows = map.valid();
    if rows.len() < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: rows.len(),
        });
    }
    let (l_lo, l_hi) = rows
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), r| (a.min(r.0), b.max(r.0)));
    let (l_mid, l_half) = (0.5 * (l_lo + l_hi), 0.5 * (l_hi - l_lo));
    if !(l_half > 0.0) {
        return Err(Error::invalid("map", "needs more than one inductance"));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 - l_mid) / l_half).collect();
    // frequencies in MHz keep the normal equations well scaled
    let f1: Vec<f64> = rows.iter().map(|r| r.1 / MHZ).collect();
    let f2: Vec<f64> = rows.iter().map(|r| r.2 / MHZ).collect();

    let k = (0..rows.len())
        .min_by(|&a, &b| (f2[a] - f1[a]).total_cmp(&(f2[b] - f1[b])))
        .unwrap_or(0);
    let g0 = 0.5 * (f2[k] - f1[k]);
    let fb0 = 0.5 * (f1[k] + f2[k]);
    // sum rule: f- + f+ = fa + fb
    let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec_cubic(x)).collect();
    let fa_est: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a + b - fb0).collect();
    let c0 = lstsq(&design, &fa_est).ok_or(Error::NonFinite("fit_avoided_crossing"))?;

    let residuals = |p: &[f64], out: &mut Vec<f64>| -> Result<()> {
        out.clear();
        for (i, &x) in xs.iter().enumerate() {
            let fa = p[0] + x * (p[1] + x * (p[2] + x * p[3]));
            let (lo, hi) = hybrid(fa, p[4], p[5]);
            out.push(lo - f1[i]);
            out.push(hi - f2[i]);
        }
        Ok(())
    };
    let p0 = [c0[0], c0[1], c0[2], c0[3], fb0, g0.max(1e-3)];
    let res = levenberg_marquardt(residuals, &p0, &[1e-5; 6], LmOptions::default())?;
    let p = res.params;
    let g = p[5].abs() * MHZ;
    let f_b = p[4] * MHZ;
    let coeffs = [p[0] * MHZ, p[1] * MHZ, p[2] * MHZ, p[3] * MHZ];
    let rms = libm::sqrt(res.cost / res.residuals as f64) * MHZ;
    if !(g.is_finite() && f_b.is_finite() && coeffs.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite("fit_avoided_crossing"));
    }
    let mut fit = CrossingFit {
        g,
        l_cross: f64::NAN,
        f_cross: f_b,
        window: (f64::NAN, f64::NAN),
        rms_residual: rms,
        f_b,
        f_a_coeffs: coeffs,
        l_mid,
        l_half,
    };

    let det = |l: f64, offset: f64| fit.f_a(l) - fit.f_b - offset;
    let l_k = rows[k].0;
    let l_cross = nearest_root(|l| det(l, 0.0), l_lo, l_hi, l_k).ok_or(Error::CrossingNotBracketed)?;
    // the window edges are where the detuning reaches ±2g
    let slope_sign = (det(l_hi, 0.0) - det(l_lo, 0.0)).signum();
    let lo_edge = edge(|l| det(l, -2.0 * g * slope_sign), l_lo, l_cross);
    let hi_edge = edge(|l| det(l, 2.0 * g * slope_sign), l_cross, l_hi);
    fit.l_cross = l_cross;
    fit.window = (lo_edge.unwrap_or(l_lo), hi_edge.unwrap_or(l_hi));
    Ok(fit)
}

fn vec_cubic(x: f64) -> Vec<f64> {
    alloc::vec![1.0, x, x * x, x * x * x]
}

const SCAN: usize = 4000;

/// Root of `f` on `[lo, hi]` closest to `near`, from a uniform scan plus bisection.
fn nearest_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, near: f64) -> Option<f64> {
    let step = (hi - lo) / SCAN as f64;
    let mut best: Option<f64> = None;
    let mut prev = f(lo);
    for k in 1..=SCAN {
        let (a, b) = (lo + step * (k - 1) as f64, lo + step * k as f64);
        let cur = f(b);
        if prev == 0.0 || (prev > 0.0) != (cur > 0.0) {
            let r = bisect(|l| Ok(f(l)), a, b, 1e-12).ok().flatten().unwrap_or(a);
            if best.is_none_or(|x| (r - near).abs() < (x - near).abs()) {
                best = Some(r);
            }
        }
        prev = cur;
    }
    best
}

/// Zero of a monotone-ish `f` within `[a, b]`, if bracketed.
fn edge<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Option<f64> {
    if a == b {
        return None;
    }
    bisect(|l| Ok(f(l)), a, b, 1e-12).ok().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(g: f64, fb: f64, l_cross: f64) -> ModeMap {
        // bare TCR falls linearly-ish through the SC frequency
        let fa = |l: f64| fb - 3.5e18 * (l - l_cross) + 2e27 * (l - l_cross) * (l - l_cross);
        ModeMap::from_rows((0..60).map(|k| {
            let l = 10e-12 + 490e-12 * k as f64 / 59.0;
            let (a, b) = hybrid(fa(l), fb, g);
            (l, a, b)
        }))
    }

    #[test]
    fn recovers_generator() {
        let fit = fit_avoided_crossing(&synthetic(3e8, 6.55e9, 220e-12)).unwrap();
        assert!((fit.g / 3e8 - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.f_cross / 6.55e9 - 1.0).abs() < 1e-4);
        assert!((fit.l_cross - 220e-12).abs() < 2e-12);
        assert!(fit.window.0 < fit.l_cross && fit.l_cross < fit.window.1);
    }

    #[test]
    fn weak_coupling_shrinks_window() {
        let strong = fit_avoided_crossing(&synthetic(2e8, 6.55e9, 220e-12)).unwrap();
        let weak = fit_avoided_crossing(&synthetic(2e6, 6.55e9, 220e-12)).unwrap();
        let w = |f: &CrossingFit| f.window.1 - f.window.0;
        assert!(w(&weak) < 0.05 * w(&strong));
        assert!(weak.g < 1e7);
    }

    #[test]
    fn crossing_outside_grid() {
        let map = synthetic(1e8, 6.55e9, 900e-12);
        assert_eq!(fit_avoided_crossing(&map), Err(Error::CrossingNotBracketed));
    }

    #[test]
    fn too_few_rows() {
        let map = ModeMap::from_rows((0..5).map(|k| (k as f64 * 1e-11 + 1e-11, 6e9, 7e9)));
        assert!(matches!(fit_avoided_crossing(&map), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn unimodal_splitting_detected() {
        let map = synthetic(1.5e8, 6.55e9, 220e-12);
        let (k, ok) = map.splitting_minimum().unwrap();
        assert!(ok);
        assert!((map.valid()[k].0 - 220e-12).abs() < 10e-12);
    }
}
