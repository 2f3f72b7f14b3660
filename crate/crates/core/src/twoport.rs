//! Two-port (ABCD) algebra for cascaded microwave elements.
//!
//! Every element is evaluated at a single frequency. Chains multiply left to
//! right in signal order (port 1 of the first element faces the source).

use alloc::format;
use num_complex::Complex64;

use crate::constants::{SPEED_OF_LIGHT, TWO_PI};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Impedances larger than this (in ohm) are reported as [`Impedance::Infinite`].
pub const INFINITE_IMPEDANCE_OHM: f64 = 1e14;

/// ABCD matrix `[[a, b], [c, d]]` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPort {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPort {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn series_impedance(z: Complex64) -> Self {
        Self::new(ONE, z, ZERO, ONE)
    }

    pub const fn shunt_admittance(y: Complex64) -> Self {
        Self::new(ONE, ZERO, y, ONE)
    }

    /// `ad - bc`; exactly one for a reciprocal network.
    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &TwoPort) -> TwoPort {
        TwoPort {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Impedance seen at port 1 when port 2 is closed by `load`.
    pub fn input_impedance(&self, load: Impedance) -> Impedance {
        match load {
            Impedance::Infinite => Impedance::from_ratio(self.a, self.c),
            Impedance::Finite(z) => Impedance::from_ratio(self.a * z + self.b, self.c * z + self.d),
        }
    }
}

/// A linear circuit element placed in series along a two-port chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    /// Uniform TEM line section. `atten` is the field attenuation constant in Np/m.
    LineSection {
        z0: f64,
        eps_eff: f64,
        length: f64,
        atten: f64,
    },
    /// Lumped series impedance, already evaluated at the sweep frequency.
    SeriesImpedance(Complex64),
    /// Lumped series capacitor, farad.
    SeriesCapacitor(f64),
    /// Lumped shunt admittance to ground, already evaluated at the sweep frequency.
    ShuntAdmittance(Complex64),
}

impl Element {
    pub fn line(z0: f64, eps_eff: f64, length: f64) -> Self {
        Element::LineSection {
            z0,
            eps_eff,
            length,
            atten: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Element::LineSection {
                z0,
                eps_eff,
                length,
                atten,
            } => {
                if !(z0 > 0.0 && z0.is_finite()) {
                    return Err(Error::invalid("z0", format!("must be positive, got {z0}")));
                }
                if !(eps_eff >= 1.0 && eps_eff.is_finite()) {
                    return Err(Error::invalid(
                        "eps_eff",
                        format!("must be >= 1, got {eps_eff}"),
                    ));
                }
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::invalid(
                        "length",
                        format!("must be positive, got {length}"),
                    ));
                }
                if !(atten >= 0.0 && atten.is_finite()) {
                    return Err(Error::invalid(
                        "atten",
                        format!("must be >= 0, got {atten}"),
                    ));
                }
            }
            Element::SeriesCapacitor(c) => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid(
                        "c_val",
                        format!("must be positive, got {c}"),
                    ));
                }
            }
            Element::SeriesImpedance(_) | Element::ShuntAdmittance(_) => {}
        }
        Ok(())
    }
}

/// Phase constant of a TEM line at `f`, rad/m.
pub fn phase_constant(eps_eff: f64, f: f64) -> f64 {
    TWO_PI * f * libm::sqrt(eps_eff) / SPEED_OF_LIGHT
}

/// ABCD matrix of `e` at frequency `f` (Hz).
pub fn element_abcd(e: &Element, f: f64) -> Result<TwoPort> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid("f", format!("must be positive, got {f}")));
    }
    e.validate()?;
    let tp = match *e {
        Element::LineSection {
            z0,
            eps_eff,
            length,
            atten,
        } => {
            let beta_l = phase_constant(eps_eff, f) * length;
            if atten == 0.0 {
                let (s, c) = (libm::sin(beta_l), libm::cos(beta_l));
                TwoPort::new(
                    Complex64::new(c, 0.0),
                    Complex64::new(0.0, z0 * s),
                    Complex64::new(0.0, s / z0),
                    Complex64::new(c, 0.0),
                )
            } else {
                let gl = Complex64::new(atten * length, beta_l);
                let (ch, sh) = (gl.cosh(), gl.sinh());
                TwoPort::new(ch, sh * z0, sh / z0, ch)
            }
        }
        Element::SeriesImpedance(z) => TwoPort::series_impedance(z),
        Element::SeriesCapacitor(c) => {
            TwoPort::series_impedance(Complex64::new(0.0, -1.0 / (TWO_PI * f * c)))
        }
        Element::ShuntAdmittance(y) => TwoPort::shunt_admittance(y),
    };
    if tp.is_finite() {
        Ok(tp)
    } else {
        Err(Error::NonFinite("element_abcd"))
    }
}

/// Ordered product of two-ports.
pub fn cascade(ports: &[TwoPort]) -> Result<TwoPort> {
    let (first, rest) = ports.split_first().ok_or(Error::EmptyCascade)?;
    Ok(rest.iter().fold(*first, |acc, p| acc.then(p)))
}

/// ABCD matrix of a whole element chain.
pub fn chain_abcd(chain: &[Element], f: f64) -> Result<TwoPort> {
    if chain.is_empty() {
        return Err(Error::EmptyCascade);
    }
    chain.iter().try_fold(TwoPort::identity(), |acc, e| {
        Ok(acc.then(&element_abcd(e, f)?))
    })
}

/// An impedance that may be an exact open circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Impedance {
    Finite(Complex64),
    Infinite,
}

impl Impedance {
    /// `num / den`, mapping a vanishing denominator to [`Impedance::Infinite`].
    pub fn from_ratio(num: Complex64, den: Complex64) -> Self {
        if den.norm() * INFINITE_IMPEDANCE_OHM <= num.norm() {
            Impedance::Infinite
        } else {
            Impedance::Finite(num / den)
        }
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            Impedance::Finite(z) => Some(z),
            Impedance::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Impedance::Infinite)
    }

    /// Series connection with `z`.
    pub fn plus(self, z: Impedance) -> Impedance {
        match (self, z) {
            (Impedance::Finite(a), Impedance::Finite(b)) => Impedance::Finite(a + b),
            _ => Impedance::Infinite,
        }
    }

    /// Parallel connection with a finite admittance `y`.
    pub fn shunted_by(self, y: Complex64) -> Impedance {
        match self {
            Impedance::Infinite => Impedance::from_ratio(ONE, y),
            Impedance::Finite(z) => Impedance::from_ratio(z, ONE + y * z),
        }
    }

    /// Impedance seen through `e` when it is closed by `self`.
    pub fn through(self, e: &Element, f: f64) -> Result<Impedance> {
        match *e {
            Element::SeriesImpedance(z) if !z.is_finite() => Ok(Impedance::Infinite),
            _ => Ok(element_abcd(e, f)?.input_impedance(self)),
        }
    }
}

/// Far-end closure of an element chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Short,
    Open,
    Load(Complex64),
}

impl From<Termination> for Impedance {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Short => Impedance::Finite(ZERO),
            Termination::Open => Impedance::Infinite,
            Termination::Load(z) => Impedance::Finite(z),
        }
    }
}

/// Input impedance of `chain` closed by `termination`.
pub fn input_impedance(chain: &[Element], termination: Termination, f: f64) -> Result<Impedance> {
    Ok(chain_abcd(chain, f)?.input_impedance(termination.into()))
}

/// Transmission past a shunt branch of impedance `z_shunt` across a matched line.
pub fn notch_s21(z_shunt: Impedance, z_ref: f64) -> Result<Complex64> {
    if !(z_ref > 0.0 && z_ref.is_finite()) {
        return Err(Error::invalid(
            "z_ref",
            format!("must be positive, got {z_ref}"),
        ));
    }
    Ok(match z_shunt {
        Impedance::Infinite => ONE,
        Impedance::Finite(z) if z == ZERO => ZERO,
        Impedance::Finite(z) => {
            let twice = z * 2.0;
            twice / (twice + z_ref)
        }
    })
}

/// Scattering parameters referenced to a real impedance `z_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SParams {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s12: Complex64,
    pub s22: Complex64,
    pub z_ref: f64,
}

pub fn to_sparams(tp: &TwoPort, z_ref: f64) -> Result<SParams> {
    if !(z_ref > 0.0 && z_ref.is_finite()) {
        return Err(Error::invalid(
            "z_ref",
            format!("must be positive, got {z_ref}"),
        ));
    }
    let bz = tp.b / z_ref;
    let cz = tp.c * z_ref;
    let den = tp.a + bz + cz + tp.d;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::NonFinite("to_sparams"));
    }
    Ok(SParams {
        s11: (tp.a + bz - cz - tp.d) / den,
        s21: Complex64::new(2.0, 0.0) / den,
        s12: tp.determinant() * 2.0 / den,
        s22: (-tp.a + bz - cz + tp.d) / den,
        z_ref,
    })
}
