//! Gate-tunable Josephson junction: inductance, gate map and lumped impedance.

use alloc::format;
use core::f64::consts::FRAC_PI_2;
use num_complex::Complex64;

use crate::constants::{FLUX_QUANTUM, TWO_PI};
use crate::twoport::Impedance;
use crate::{Error, Result};

/// Josephson inductance `Φ0 / (2π I_c cos φ)`.
pub fn josephson_inductance(i_c: f64, phi: f64) -> Result<f64> {
    if !(i_c > 0.0 && i_c.is_finite()) {
        return Err(Error::invalid(
            "i_c",
            format!("must be positive, got {i_c}"),
        ));
    }
    if !(phi.abs() < FRAC_PI_2) {
        return Err(Error::invalid(
            "phi",
            format!("|phi| must be below pi/2, got {phi}"),
        ));
    }
    Ok(FLUX_QUANTUM / (TWO_PI * i_c * libm::cos(phi)))
}

/// Critical current giving inductance `l_j` at zero phase.
pub fn critical_current_for_inductance(l_j: f64) -> Result<f64> {
    if !(l_j > 0.0 && l_j.is_finite()) {
        return Err(Error::invalid(
            "l_j",
            format!("must be positive, got {l_j}"),
        ));
    }
    Ok(FLUX_QUANTUM / (TWO_PI * l_j))
}

/// Maximum supercurrent from `I_c R_n = Δ/e` (unit prefactor).
pub fn icrn_max_current(r_n: f64, gap: f64) -> Result<f64> {
    if !(r_n > 0.0 && r_n.is_finite()) {
        return Err(Error::invalid(
            "r_n",
            format!("must be positive, got {r_n}"),
        ));
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::invalid(
            "gap",
            format!("must be positive, got {gap}"),
        ));
    }
    Ok(gap / r_n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateShape {
    Linear,
    /// Logistic in gate voltage, rescaled to hit exactly 0 and 1 at the end points.
    Logistic {
        steepness: f64,
    },
}

/// Phenomenological map from gate voltage to critical-current fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateModel {
    pub v_pinch: f64,
    pub v_on: f64,
    pub shape: GateShape,
}

impl Default for GateModel {
    fn default() -> Self {
        Self {
            v_pinch: -1.0,
            v_on: 0.0,
            shape: GateShape::Linear,
        }
    }
}

impl GateModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_pinch.is_finite() && self.v_on.is_finite() && self.v_pinch < self.v_on) {
            return Err(Error::invalid(
                "gate",
                format!(
                    "need v_pinch < v_on, got {} and {}",
                    self.v_pinch, self.v_on
                ),
            ));
        }
        if let GateShape::Logistic { steepness } = self.shape {
            if !(steepness > 0.0 && steepness.is_finite()) {
                return Err(Error::invalid(
                    "steepness",
                    format!("must be positive, got {steepness}"),
                ));
            }
        }
        Ok(())
    }

    /// Fraction of the maximum critical current reached at `v_g`, in `[0, 1]`.
    pub fn fraction(&self, v_g: f64) -> f64 {
        if v_g <= self.v_pinch {
            return 0.0;
        }
        if v_g >= self.v_on {
            return 1.0;
        }
        let x = (v_g - self.v_pinch) / (self.v_on - self.v_pinch);
        match self.shape {
            GateShape::Linear => x,
            GateShape::Logistic { steepness } => {
                let k = steepness * (self.v_on - self.v_pinch);
                let s = |u: f64| 1.0 / (1.0 + libm::exp(-k * (u - 0.5)));
                let (lo, hi) = (s(0.0), s(1.0));
                ((s(x) - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JjState {
    On { l_j: f64 },
    Off { r: f64 },
}

impl JjState {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JjState::On { l_j } if !(l_j > 0.0 && l_j.is_finite()) => Err(Error::invalid(
                "l_j",
                format!("must be positive, got {l_j}"),
            )),
            JjState::Off { r } if !(r > 0.0) => Err(Error::invalid(
                "r_off",
                format!("must be positive, got {r}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JjFet {
    pub i_c_max: f64,
    pub c_j: f64,
    /// May be infinite (fully open OFF channel).
    pub r_off: f64,
    /// ON-state subgap shunt; infinite means no shunt.
    pub r_sub: f64,
    pub phi: f64,
    pub gate: GateModel,
}

impl Default for JjFet {
    fn default() -> Self {
        Self {
            i_c_max: FLUX_QUANTUM / (TWO_PI * 220e-12),
            c_j: 1e-15,
            r_off: 1000.0,
            r_sub: 1e6,
            phi: 0.0,
            gate: GateModel::default(),
        }
    }
}

/// Default OFF threshold: the critical current whose inductance is 2 nH.
pub const DEFAULT_OFF_INDUCTANCE: f64 = 2e-9;

pub fn default_off_threshold() -> f64 {
    FLUX_QUANTUM / (TWO_PI * DEFAULT_OFF_INDUCTANCE)
}

impl JjFet {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_c_max > 0.0 && self.i_c_max.is_finite()) {
            return Err(Error::invalid(
                "i_c_max",
                format!("must be positive, got {}", self.i_c_max),
            ));
        }
        if !(self.c_j >= 0.0 && self.c_j.is_finite()) {
            return Err(Error::invalid(
                "c_j",
                format!("must be >= 0, got {}", self.c_j),
            ));
        }
        if !(self.r_off > 0.0) {
            return Err(Error::invalid(
                "r_off",
                format!("must be positive, got {}", self.r_off),
            ));
        }
        if !(self.r_sub > 0.0) {
            return Err(Error::invalid(
                "r_sub",
                format!("must be positive, got {}", self.r_sub),
            ));
        }
        if !(self.phi.abs() < FRAC_PI_2) {
            return Err(Error::invalid(
                "phi",
                format!("|phi| must be below pi/2, got {}", self.phi),
            ));
        }
        self.gate.validate()
    }

    pub fn critical_current(&self, v_g: f64) -> f64 {
        self.i_c_max * self.gate.fraction(v_g)
    }

    pub fn off_state(&self) -> JjState {
        JjState::Off { r: self.r_off }
    }

    pub fn series_impedance(&self, state: JjState, f: f64) -> Result<Impedance> {
        jj_series_impedance(state, self.c_j, self.r_sub, f)
    }
}

pub fn gate_to_state(jj: &JjFet, v_g: f64, off_threshold: f64) -> Result<JjState> {
    jj.validate()?;
    let i_c = jj.critical_current(v_g);
    if i_c <= off_threshold || i_c <= 0.0 {
        Ok(JjState::Off { r: jj.r_off })
    } else {
        Ok(JjState::On {
            l_j: josephson_inductance(i_c, jj.phi)?,
        })
    }
}

/// Series impedance of the junction: ON is `L_J ‖ C_J ‖ r_sub`, OFF is `r ‖ C_J`.
pub fn jj_series_impedance(state: JjState, c_j: f64, r_sub: f64, f: f64) -> Result<Impedance> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid("f", format!("must be positive, got {f}")));
    }
    state.validate()?;
    let w = TWO_PI * f;
    let cap = Complex64::new(0.0, w * c_j);
    let y = match state {
        JjState::On { l_j } => {
            let shunt = if r_sub.is_finite() { 1.0 / r_sub } else { 0.0 };
            Complex64::new(shunt, -1.0 / (w * l_j)) + cap
        }
        JjState::Off { r } => {
            let g = if r.is_finite() { 1.0 / r } else { 0.0 };
            Complex64::new(g, 0.0) + cap
        }
    };
    Ok(Impedance::from_ratio(Complex64::new(1.0, 0.0), y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_microamp_inductance() {
        let l = josephson_inductance(1e-6, 0.0).unwrap();
        assert!((l - 329.11e-12).abs() / 329.11e-12 < 1e-4, "{l}");
    }

    #[test]
    fn phase_dependence() {
        let l0 = josephson_inductance(2.3e-6, 0.0).unwrap();
        let l3 = josephson_inductance(2.3e-6, core::f64::consts::FRAC_PI_3).unwrap();
        assert!((l3 / l0 - 2.0).abs() < 1e-12);
        assert!(josephson_inductance(1e-6, FRAC_PI_2).is_err());
        assert!(josephson_inductance(0.0, 0.0).is_err());
        assert!(critical_current_for_inductance(-1e-12).is_err());
    }

    #[test]
    fn sweep_endpoints() {
        let hi = josephson_inductance(0.658e-6, 0.0).unwrap();
        let lo = josephson_inductance(32.91e-6, 0.0).unwrap();
        assert!((hi - 500e-12).abs() / 500e-12 < 1e-3);
        assert!((lo - 10e-12).abs() / 10e-12 < 1e-3);
    }

    #[test]
    fn inverse_examples() {
        let i = critical_current_for_inductance(220e-12).unwrap();
        assert!((i - 1.496e-6).abs() / 1.496e-6 < 1e-3);
        let i = critical_current_for_inductance(329.11e-12).unwrap();
        assert!((i - 1e-6).abs() / 1e-6 < 1e-4);
    }

    #[test]
    fn gate_end_points() {
        let jj = JjFet {
            i_c_max: 1.496e-6,
            ..JjFet::default()
        };
        let thr = default_off_threshold();
        assert_eq!(
            gate_to_state(&jj, -1.5, thr).unwrap(),
            JjState::Off { r: 1000.0 }
        );
        assert_eq!(
            gate_to_state(&jj, -1.0, thr).unwrap(),
            JjState::Off { r: 1000.0 }
        );
        match gate_to_state(&jj, 0.3, thr).unwrap() {
            JjState::On { l_j } => assert!((l_j - 220e-12).abs() / 220e-12 < 1e-3),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn logistic_respects_boundaries() {
        let g = GateModel {
            v_pinch: -2.0,
            v_on: 1.0,
            shape: GateShape::Logistic { steepness: 4.0 },
        };
        assert_eq!(g.fraction(-2.0), 0.0);
        assert_eq!(g.fraction(1.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=300 {
            let v = -2.0 + 3.0 * k as f64 / 300.0;
            let x = g.fraction(v);
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn series_impedance_examples() {
        let z = jj_series_impedance(JjState::On { l_j: 220e-12 }, 0.0, f64::INFINITY, 6.5e9)
            .unwrap()
            .finite()
            .unwrap();
        assert!(z.re.abs() < 1e-12);
        assert!((z.im - 8.985).abs() < 1e-3, "{z}");

        for f in [1e8, 6.5e9, 3e10] {
            let z = jj_series_impedance(JjState::Off { r: 1000.0 }, 0.0, 1e6, f)
                .unwrap()
                .finite()
                .unwrap();
            assert!((z - Complex64::new(1000.0, 0.0)).norm() < 1e-10, "{z}");
        }

        let pure = TWO_PI * 6.5e9 * 220e-12;
        let z = jj_series_impedance(JjState::On { l_j: 220e-12 }, 1e-15, f64::INFINITY, 6.5e9)
            .unwrap()
            .finite()
            .unwrap();
        assert!((z.im - pure).abs() / pure < 1e-3);
    }

    #[test]
    fn open_junction_is_infinite() {
        let z = jj_series_impedance(JjState::Off { r: f64::INFINITY }, 0.0, 1e6, 6e9).unwrap();
        assert!(z.is_infinite());
    }

    #[test]
    fn self_resonance_diverges() {
        let (l, c) = (220e-12, 1e-15);
        let f_sr = 1.0 / (TWO_PI * libm::sqrt(l * c));
        let far = jj_series_impedance(JjState::On { l_j: l }, c, f64::INFINITY, 0.5 * f_sr)
            .unwrap()
            .finite()
            .unwrap()
            .norm();
        let near = jj_series_impedance(
            JjState::On { l_j: l },
            c,
            f64::INFINITY,
            f_sr * (1.0 - 1e-6),
        )
        .unwrap()
        .finite()
        .unwrap()
        .norm();
        assert!(near > 1e4 * far);
    }

    #[test]
    fn icrn_examples() {
        let i = icrn_max_current(120.0, 180e-6).unwrap();
        assert!((i - 1.5e-6).abs() < 1e-15);
        assert!((icrn_max_current(120.0, 360e-6).unwrap() - 2.0 * i).abs() < 1e-18);
        let i = icrn_max_current(547.0, 180e-6).unwrap();
        let l = josephson_inductance(i, 0.0).unwrap();
        assert!((l - 1e-9).abs() / 1e-9 < 2e-3, "{l}");
    }
}
