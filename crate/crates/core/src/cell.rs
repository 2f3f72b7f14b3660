//! Assembly of one memory cell as a shunt branch on the feedline.
//!
//! Seen from the feedline tap the branch is
//! `c_in → TCR half → junction → TCR half → c_couple → shorted SC stub`.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::constants::{SPEED_OF_LIGHT, TWO_PI};
use crate::jjfet::{JjFet, JjState};
use crate::resonance::{adaptive_sweep, find_resonances, ResonancePeak, SweepPlan, TracePoint};
use crate::roots::{bisect, first_sign_change};
use crate::twoport::{
    chain_abcd, notch_s21, Element, Impedance, Termination, TwoPort, INFINITE_IMPEDANCE_OHM,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryCell {
    pub z0: f64,
    pub eps_eff: f64,
    pub c_in: f64,
    /// Length of each of the two equal TCR sections, m.
    pub tcr_half_len: f64,
    pub jj: JjFet,
    pub c_couple: f64,
    pub sc_len: f64,
    pub sc_termination: Termination,
    /// Attenuation shared by every line section, Np/m.
    pub line_atten: f64,
}

impl Default for MemoryCell {
    /// Roughly the 6.55 GHz cell; run calibration before trusting any frequency.
    fn default() -> Self {
        Self {
            z0: 50.0,
            eps_eff: 6.45,
            c_in: 6.08e-15,
            tcr_half_len: 4.17e-3,
            jj: JjFet::default(),
            c_couple: 20e-15,
            sc_len: 4.387e-3,
            sc_termination: Termination::Short,
            line_atten: 0.0,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

impl MemoryCell {
    pub fn validate(&self) -> Result<()> {
        positive("z0", self.z0)?;
        positive("c_in", self.c_in)?;
        positive("tcr_half_len", self.tcr_half_len)?;
        positive("c_couple", self.c_couple)?;
        positive("sc_len", self.sc_len)?;
        if !(self.eps_eff >= 1.0 && self.eps_eff.is_finite()) {
            return Err(Error::invalid(
                "eps_eff",
                format!("must be >= 1, got {}", self.eps_eff),
            ));
        }
        if !(self.line_atten >= 0.0 && self.line_atten.is_finite()) {
            return Err(Error::invalid(
                "line_atten",
                format!("must be >= 0, got {}", self.line_atten),
            ));
        }
        if self.sc_termination != Termination::Short {
            return Err(Error::invalid(
                "sc_termination",
                "only a shorted storage cavity is modelled",
            ));
        }
        self.jj.validate()
    }

    pub fn phase_velocity(&self) -> f64 {
        SPEED_OF_LIGHT / libm::sqrt(self.eps_eff)
    }

    pub fn line(&self, length: f64) -> Element {
        Element::LineSection {
            z0: self.z0,
            eps_eff: self.eps_eff,
            length,
            atten: self.line_atten,
        }
    }

    /// TCR as a two-port from the feedline side of `c_in` to the far side of `c_couple`.
    pub fn tcr_abcd(&self, state: JjState, f: f64) -> Result<TwoPort> {
        // an open junction becomes a very large finite series impedance here
        let zj = self
            .jj
            .series_impedance(state, f)?
            .finite()
            .unwrap_or(Complex64::new(INFINITE_IMPEDANCE_OHM, 0.0));
        chain_abcd(
            &[
                Element::SeriesCapacitor(self.c_in),
                self.line(self.tcr_half_len),
                Element::SeriesImpedance(zj),
                self.line(self.tcr_half_len),
                Element::SeriesCapacitor(self.c_couple),
            ],
            f,
        )
    }

    /// Input impedance of the shorted SC stub alone.
    pub fn sc_stub_impedance(&self, f: f64) -> Result<Impedance> {
        Impedance::from(self.sc_termination).through(&self.line(self.sc_len), f)
    }

    /// Admittance to ground of the SC stub in parallel with `c_couple`; zero at the isolated SC mode.
    pub fn sc_loaded_admittance(&self, f: f64) -> Result<Complex64> {
        let yc = Complex64::new(0.0, TWO_PI * f * self.c_couple);
        Ok(match self.sc_stub_impedance(f)? {
            Impedance::Infinite => yc,
            Impedance::Finite(z) if z == Complex64::new(0.0, 0.0) => {
                return Err(Error::NonFinite("sc_loaded_admittance"))
            }
            Impedance::Finite(z) => yc + z.inv(),
        })
    }
}

/// Impedance of the whole cell branch seen from the feedline tap.
pub fn cell_shunt_impedance(cell: &MemoryCell, state: JjState, f: f64) -> Result<Impedance> {
    let zj = cell.jj.series_impedance(state, f)?;
    let half = cell.line(cell.tcr_half_len);
    let z = cell
        .sc_stub_impedance(f)?
        .through(&Element::SeriesCapacitor(cell.c_couple), f)?
        .through(&half, f)?
        .plus(zj)
        .through(&half, f)?
        .through(&Element::SeriesCapacitor(cell.c_in), f)?;
    Ok(z)
}

pub fn cell_s21(cell: &MemoryCell, state: JjState, f: f64, z_ref: f64) -> Result<Complex64> {
    notch_s21(cell_shunt_impedance(cell, state, f)?, z_ref)
}

/// S21 at each frequency of a strictly increasing grid.
pub fn frequency_sweep(
    cell: &MemoryCell,
    state: JjState,
    f_grid: &[f64],
    z_ref: f64,
) -> Result<Vec<TracePoint>> {
    check_grid(f_grid)?;
    cell.validate()?;
    let vals = s21_batch(cell, state, f_grid, z_ref)?;
    Ok(f_grid.iter().copied().zip(vals).collect())
}

fn check_grid(f_grid: &[f64]) -> Result<()> {
    if f_grid.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::invalid("f_grid", "frequencies must be positive"));
    }
    if f_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "f_grid",
            "frequencies must be strictly increasing",
        ));
    }
    Ok(())
}

/// Evaluates S21 over a batch of frequencies, in parallel when the feature is on.
pub fn s21_batch(
    cell: &MemoryCell,
    state: JjState,
    fs: &[f64],
    z_ref: f64,
) -> Result<Vec<Complex64>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        fs.par_iter()
            .map(|&f| cell_s21(cell, state, f, z_ref))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        fs.iter()
            .map(|&f| cell_s21(cell, state, f, z_ref))
            .collect()
    }
}

/// Adaptively sampled transmission of one cell over `plan`.
pub fn cell_sweep(
    cell: &MemoryCell,
    state: JjState,
    plan: &SweepPlan,
    z_ref: f64,
) -> Result<Vec<TracePoint>> {
    cell.validate()?;
    adaptive_sweep(plan, |fs| s21_batch(cell, state, fs, z_ref))
}

pub fn cell_resonances(
    cell: &MemoryCell,
    state: JjState,
    plan: &SweepPlan,
    z_ref: f64,
    min_depth_db: f64,
) -> Result<Vec<ResonancePeak>> {
    find_resonances(&cell_sweep(cell, state, plan, z_ref)?, min_depth_db)
}

/// Fundamental of the SC stub loaded by `c_couple` to ground.
pub fn isolated_sc_frequency(cell: &MemoryCell) -> Result<f64> {
    cell.validate()?;
    let f_qw = cell.phase_velocity() / (4.0 * cell.sc_len);
    bisect(
        |f| Ok(cell.sc_loaded_admittance(f)?.im),
        0.5 * f_qw,
        f_qw,
        1e-13,
    )?
    .ok_or(Error::NonFinite("isolated_sc_frequency"))
}

/// Lowest mode of the TCR with both capacitors grounded, searched in `[lo, hi]`.
pub fn isolated_tcr_frequency(
    cell: &MemoryCell,
    state: JjState,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    cell.validate()?;
    let b = |f: f64| Ok(cell.tcr_abcd(state, f)?.b.im);
    let n = (libm::ceil((hi - lo) / 5e6) as usize).clamp(16, 100_000);
    let Some((a, c)) = first_sign_change(b, lo, hi, n)? else {
        return Ok(None);
    };
    bisect(b, a, c, 1e-13)
}

/// Coupling quality factor of the TCR to a feedline of impedance `z_ref`, at `f0`.
///
/// The far end is grounded, so the branch is a series resonance whose reactance
/// slope sets `Q_c = ω0 X'(ω0) / z_ref`.
pub fn tcr_q_coupling(cell: &MemoryCell, state: JjState, f0: f64, z_ref: f64) -> Result<f64> {
    let x = |f: f64| -> Result<f64> {
        let t = cell.tcr_abcd(state, f)?;
        Ok((t.b / t.d).im)
    };
    // a pole of B/D sits about one linewidth away, so the step follows a first estimate of Q
    let slope_q = |rel: f64| -> Result<f64> {
        let df = f0 * rel;
        let dx_dw = (x(f0 + df)? - x(f0 - df)?) / (2.0 * df * TWO_PI);
        Ok(TWO_PI * f0 * dx_dw / z_ref)
    };
    let rough = slope_q(1e-9)?;
    let q = if rough.is_finite() && rough > 0.0 {
        slope_q((0.02 / rough).min(1e-5))?
    } else {
        rough
    };
    if q.is_finite() && q > 0.0 {
        Ok(q)
    } else {
        Err(Error::NonFinite("tcr_q_coupling"))
    }
}
