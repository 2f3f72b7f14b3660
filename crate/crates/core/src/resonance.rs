//! Dip detection and notch-resonator fitting on complex transmission traces.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::fit::{levenberg_marquardt, LmOptions};
use crate::{Error, Result};

/// One sampled point of a transmission trace: frequency (Hz) and complex S21.
pub type TracePoint = (f64, Complex64);

/// A resonance extracted from a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePeak {
    pub f0: f64,
    pub q_loaded: f64,
    pub q_internal: Option<f64>,
    pub q_coupling: Option<f64>,
    /// `|Q_c|` of the fitted notch: `Q_l / |Q_c|` is the diameter of the resonance
    /// circle whatever the asymmetry angle.
    pub q_c_abs: Option<f64>,
    /// |S21| at the minimum, in dB (non-positive for a passive trace).
    pub depth_db: f64,
}

impl ResonancePeak {
    pub fn is_fitted(&self) -> bool {
        self.q_coupling.is_some()
    }

    pub fn linewidth(&self) -> f64 {
        self.f0 / self.q_loaded
    }
}

/// Notch response `1 - (Q_l/|Q_c|) e^{iφ} / (1 + 2i Q_l (f - f0)/f0)` without background.
pub fn notch_model(f: f64, f0: f64, q_loaded: f64, q_c_abs: f64, phi: f64) -> Complex64 {
    let x = (f - f0) / f0;
    let num = Complex64::from_polar(q_loaded / q_c_abs, phi);
    Complex64::new(1.0, 0.0) - num / Complex64::new(1.0, 2.0 * q_loaded * x)
}

/// Frequency grid plan: uniform coarse grid plus refinement stages around dips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub start: f64,
    pub stop: f64,
    pub coarse_step: f64,
    pub refine_stages: usize,
}

/// Points added on each side of a minimum per refinement stage; the step shrinks tenfold.
const REFINE_POINTS: i32 = 10;

impl SweepPlan {
    pub fn new(start: f64, stop: f64) -> Self {
        Self {
            start,
            stop,
            coarse_step: 2e6,
            refine_stages: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.stop > self.start && self.stop.is_finite()) {
            return Err(Error::invalid("band", "need 0 < start < stop"));
        }
        if !(self.coarse_step > 0.0 && self.coarse_step < self.stop - self.start) {
            return Err(Error::invalid(
                "coarse_step",
                "must be positive and smaller than the band",
            ));
        }
        if self.refine_stages > 8 {
            return Err(Error::invalid("refine_stages", "at most 8 stages"));
        }
        Ok(())
    }

    pub fn coarse_grid(&self) -> Vec<f64> {
        let n = libm::floor((self.stop - self.start) / self.coarse_step + 1e-9) as usize;
        let mut g: Vec<f64> = (0..=n)
            .map(|k| self.start + self.coarse_step * k as f64)
            .collect();
        if self.stop - g[n] > 1e-9 * self.coarse_step {
            g.push(self.stop);
        }
        g
    }
}

/// Sweeps a band adaptively. `eval` maps a batch of frequencies to S21 values.
pub fn adaptive_sweep<F>(plan: &SweepPlan, mut eval: F) -> Result<Vec<TracePoint>>
where
    F: FnMut(&[f64]) -> Result<Vec<Complex64>>,
{
    plan.validate()?;
    let grid = plan.coarse_grid();
    let vals = eval(&grid)?;
    let mut trace: Vec<TracePoint> = grid.into_iter().zip(vals).collect();
    let mut step = plan.coarse_step;
    for _ in 0..plan.refine_stages {
        step /= 10.0;
        let mut fresh = Vec::new();
        for i in dip_minima(&trace) {
            let fm = trace[i].0;
            let (lo, hi) = (trace[i - 1].0, trace[i + 1].0);
            for k in -REFINE_POINTS..=REFINE_POINTS {
                let f = fm + step * k as f64;
                if k != 0 && f > lo && f < hi {
                    fresh.push(f);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        fresh.sort_by(f64::total_cmp);
        fresh.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * step);
        let vals = eval(&fresh)?;
        trace.extend(fresh.into_iter().zip(vals));
        trace.sort_by(|a, b| a.0.total_cmp(&b.0));
        trace.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3 * step);
    }
    Ok(trace)
}

/// Indices of local minima of |S21| whose prominence stands out from rounding noise.
///
/// Prominence is measured the topographic way: walk out on each side until the
/// trace dips below the minimum again and take the lower of the two highest points.
fn dip_minima(trace: &[TracePoint]) -> Vec<usize> {
    let mag: Vec<f64> = trace.iter().map(|p| p.1.norm_sqr()).collect();
    let n = mag.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(mag[i] < mag[i - 1] && mag[i] <= mag[i + 1]) {
            continue;
        }
        let mut left = mag[i];
        for j in (0..i).rev() {
            if mag[j] < mag[i] {
                break;
            }
            left = left.max(mag[j]);
        }
        let mut right = mag[i];
        for &m in &mag[i + 1..] {
            if m < mag[i] {
                break;
            }
            right = right.max(m);
        }
        if left.min(right) - mag[i] > 1e-12 * left.max(right) {
            out.push(i);
        }
    }
    out
}

fn to_db(s: Complex64) -> f64 {
    20.0 * libm::log10(s.norm())
}

/// Vertex of the parabola through three (x, y) points.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    if !(xv > x0 && xv < x2) {
        return None;
    }
    let yv = y1 + d01 * (xv - x1) + a * (xv - x0) * (xv - x1);
    Some((xv, yv))
}

/// Finds dips deeper than `min_depth_db` (a positive number of dB below unity) and fits each.
pub fn find_resonances(trace: &[TracePoint], min_depth_db: f64) -> Result<Vec<ResonancePeak>> {
    if !(min_depth_db >= 0.0) {
        return Err(Error::invalid("min_depth_db", "must be >= 0"));
    }
    if trace.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid(
            "trace",
            "frequencies must be strictly increasing",
        ));
    }
    let cands: Vec<usize> = dip_minima(trace)
        .into_iter()
        .filter(|&i| -to_db(trace[i].1) > min_depth_db)
        .collect();
    let mut peaks = Vec::with_capacity(cands.len());
    for (k, &i) in cands.iter().enumerate() {
        // neighbouring candidates bound the region that belongs to this dip
        let lo = if k > 0 { (cands[k - 1] + i) / 2 } else { 0 };
        let hi = if k + 1 < cands.len() {
            (cands[k + 1] + i).div_ceil(2)
        } else {
            trace.len() - 1
        };
        peaks.push(analyse_dip(&trace[lo..=hi], i - lo));
    }
    peaks.sort_by(|a, b| a.f0.total_cmp(&b.f0));
    Ok(peaks)
}

fn analyse_dip(seg: &[TracePoint], i: usize) -> ResonancePeak {
    let pts = [seg[i - 1], seg[i], seg[i + 1]].map(|(f, s)| (f, to_db(s)));
    let (f_min, db_min) = parabola_vertex(pts).unwrap_or(pts[1]);

    let mag2: Vec<f64> = seg.iter().map(|p| p.1.norm_sqr()).collect();
    let bg2 = mag2.iter().cloned().fold(0.0, f64::max);
    let half = 0.5 * (bg2 + mag2[i]);
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = i;
        for j in range {
            if mag2[j] >= half {
                let t = (half - mag2[prev]) / (mag2[j] - mag2[prev]);
                return Some(seg[prev].0 + t * (seg[j].0 - seg[prev].0));
            }
            prev = j;
        }
        None
    };
    let left = crossing(&mut (0..i).rev());
    let right = crossing(&mut (i + 1..seg.len()));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f_min - l),
        (None, Some(r)) => 2.0 * (r - f_min),
        (None, None) => seg[i + 1].0 - seg[i - 1].0,
    }
    .max(1e-12 * f_min);

    let fallback = ResonancePeak {
        f0: f_min,
        q_loaded: f_min / fwhm,
        q_internal: None,
        q_coupling: None,
        q_c_abs: None,
        depth_db: db_min.min(0.0),
    };
    let q_guess = fallback.q_loaded;
    let Some(fit) = fit_notch(seg, f_min, fwhm) else {
        return fallback;
    };
    // a fit that wandered off the dip it was seeded on is not trusted
    if (fit.f0 - f_min).abs() > 2.0 * fwhm || !(fit.q_loaded > 0.2 * q_guess && fit.q_loaded < 5.0 * q_guess) {
        return fallback;
    }
    let q_coupling = fit.q_coupling();
    let q_internal = q_coupling.map(|qc| {
        let excess = (1.0 / fit.q_loaded - 1.0 / qc) * fit.q_loaded;
        if excess < 1e-7 {
            f64::INFINITY
        } else {
            1.0 / (1.0 / fit.q_loaded - 1.0 / qc)
        }
    });
    ResonancePeak {
        f0: fit.f0,
        q_loaded: fit.q_loaded,
        q_internal,
        q_coupling,
        q_c_abs: Some(fit.q_c_abs),
        depth_db: fallback.depth_db,
    }
}

/// Result of the eight-parameter notch fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchFit {
    pub f0: f64,
    pub q_loaded: f64,
    pub q_c_abs: f64,
    /// Asymmetry angle of the coupling term, rad.
    pub phi: f64,
    pub amplitude: Complex64,
    pub rms_residual: f64,
}

impl NotchFit {
    /// `Re(1/Q_c)⁻¹`, the coupling Q of the symmetric equivalent; only meaningful for cos φ > 0.
    pub fn q_coupling(&self) -> Option<f64> {
        let c = libm::cos(self.phi);
        (c > 0.0).then(|| self.q_c_abs / c)
    }
}

/// Fits `A (1 + B (f - f0)/w) [1 - (Q_l/|Q_c|) e^{iφ} / (1 + 2i Q_l (f - f0)/f0)]` to the
/// points of `seg` within four linewidths of `f_guess`.
pub fn fit_notch(seg: &[TracePoint], f_guess: f64, fwhm: f64) -> Option<NotchFit> {
    let span = 4.0 * fwhm;
    let data: Vec<TracePoint> = seg
        .iter()
        .copied()
        .filter(|p| (p.0 - f_guess).abs() <= span)
        .collect();
    if data.len() < 16 {
        return None;
    }
    let w = data
        .iter()
        .map(|p| (p.0 - f_guess).abs())
        .fold(0.0, f64::max);
    let q_guess = f_guess / fwhm;
    let (first, last) = (data[0].1, data[data.len() - 1].1);
    let a0 = (first + last) * 0.5;
    // the point furthest from the background seeds depth and angle, dip or bump alike
    let de = data
        .iter()
        .map(|p| Complex64::new(1.0, 0.0) - p.1 / a0)
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))?;
    let (d0, phi0) = (de.norm().max(1e-12), de.arg());

    let model = |p: &[f64], f: f64| {
        let f0 = f_guess + p[0] * fwhm;
        let ql = libm::exp(p[1]);
        let d = libm::exp(p[2]);
        let a = Complex64::new(p[4], p[5]);
        let b = Complex64::new(p[6], p[7]);
        let x = (f - f0) / f0;
        a * (Complex64::new(1.0, 0.0) + b * ((f - f0) / w))
            * (Complex64::new(1.0, 0.0)
                - Complex64::from_polar(d, p[3]) / Complex64::new(1.0, 2.0 * ql * x))
    };
    let p0 = [
        0.0,
        libm::log(q_guess),
        libm::log(d0),
        phi0,
        a0.re,
        a0.im,
        0.0,
        0.0,
    ];
    let steps = [1e-6, 1e-7, 1e-7, 1e-7, 1e-9, 1e-9, 1e-9, 1e-9];
    let res = levenberg_marquardt(
        |p, out| {
            out.clear();
            for &(f, s) in &data {
                let r = model(p, f) - s;
                out.push(r.re);
                out.push(r.im);
            }
            Ok(())
        },
        &p0,
        &steps,
        LmOptions {
            max_iter: 300,
            ..LmOptions::default()
        },
    )
    .ok()?;
    let p = &res.params;
    let fit = NotchFit {
        f0: f_guess + p[0] * fwhm,
        q_loaded: libm::exp(p[1]),
        q_c_abs: libm::exp(p[1] - p[2]),
        phi: libm::remainder(p[3], core::f64::consts::TAU),
        amplitude: Complex64::new(p[4], p[5]),
        rms_residual: libm::sqrt(res.cost / res.residuals as f64),
    };
    let ok = p.iter().all(|v| v.is_finite())
        && (fit.f0 - f_guess).abs() <= w
        && fit.q_loaded > 0.2 * q_guess
        && fit.q_loaded < 5.0 * q_guess
        && fit.q_c_abs.is_finite();
    ok.then_some(fit)
}

/// Trace of `eval` on a list of frequencies, as a convenience for tests and callers.
pub fn sample<F>(grid: &[f64], mut eval: F) -> Vec<TracePoint>
where
    F: FnMut(f64) -> Complex64,
{
    grid.iter().map(|&f| (f, eval(f))).collect()
}

/// Uniform grid with `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}
