//! Two-mode coupled-mode model of the write/read SWAP protocol.
//!
//! Amplitudes live in a frame rotating at the RF carrier. The TCR mode `a`
//! couples to the feedline at `kappa_ext`; the SC mode `b` couples only to `a`,
//! through a gate-controlled rate `g(t)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::cell::MemoryCell;
use crate::constants::TWO_PI;
use crate::modemap::{mode_row, CrossingFit, ModeMap, SweepSettings};
use crate::offstate::off_state_residual_coupling;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reduced model parameters; every entry is an angular rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModeSystem {
    pub omega_a: f64,
    pub omega_b: f64,
    pub kappa_ext: f64,
    pub kappa_int_a: f64,
    pub gamma_b: f64,
    /// Coupling while the gate is fully ON.
    pub g_on: f64,
    /// Residual coupling while the gate is OFF.
    pub g_off: f64,
}

impl CoupledModeSystem {
    /// Resonant, lossless pair coupled at `g` with the gate held open.
    pub fn resonant(omega: f64, g: f64, kappa_ext: f64) -> Self {
        Self {
            omega_a: omega,
            omega_b: omega,
            kappa_ext,
            kappa_int_a: 0.0,
            gamma_b: 0.0,
            g_on: g,
            g_off: 0.0,
        }
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_ext + self.kappa_int_a
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("kappa_ext", self.kappa_ext),
            ("kappa_int_a", self.kappa_int_a),
            ("gamma_b", self.gamma_b),
            ("g_on", self.g_on),
            ("g_off", self.g_off),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, alloc::format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Rect,
    /// Gaussian centred in the pulse window.
    Gauss { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPulse {
    /// Carrier frequency, Hz; also sets the rotating frame.
    pub carrier: f64,
    /// Peak drive amplitude, √(photons/s).
    pub amplitude: f64,
    pub start: f64,
    pub duration: f64,
    pub envelope: Envelope,
}

impl RfPulse {
    pub fn value(&self, t: f64) -> f64 {
        if t < self.start || t >= self.start + self.duration {
            return 0.0;
        }
        match self.envelope {
            Envelope::Rect => self.amplitude,
            Envelope::Gauss { sigma } => {
                let x = (t - self.start - 0.5 * self.duration) / sigma;
                self.amplitude * libm::exp(-0.5 * x * x)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateLevel {
    /// Junction ON at inductance `l_j`; the reduced model couples at `g_on`.
    On { l_j: f64 },
    Off,
}

/// Trapezoidal gate pulse whose ramps are centred on `start` and `start + duration`,
/// so the integrated level equals `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatePulse {
    pub level: GateLevel,
    pub start: f64,
    pub duration: f64,
    pub rise: f64,
}

impl GatePulse {
    /// ON fraction in `[0, 1]` at `t`.
    pub fn level_at(&self, t: f64) -> f64 {
        if matches!(self.level, GateLevel::Off) {
            return 0.0;
        }
        let ramp = |edge: f64| {
            if self.rise == 0.0 {
                if t >= edge {
                    1.0
                } else {
                    0.0
                }
            } else {
                ((t - edge) / self.rise + 0.5).clamp(0.0, 1.0)
            }
        };
        (ramp(self.start) - ramp(self.start + self.duration)).max(0.0)
    }

    pub(crate) fn first(&self) -> f64 {
        self.start - 0.5 * self.rise
    }

    pub(crate) fn last(&self) -> f64 {
        self.start + self.duration + 0.5 * self.rise
    }
}

pub const DEFAULT_GATE_RISE: f64 = 50e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub rf: Option<RfPulse>,
    pub gate_pulses: Vec<GatePulse>,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        if let Some(rf) = &self.rf {
            if !(rf.carrier > 0.0 && rf.carrier.is_finite()) {
                return Err(Error::Schedule(alloc::format!("RF carrier must be positive, got {}", rf.carrier)));
            }
            if !(rf.duration > 0.0) || !rf.amplitude.is_finite() || !rf.start.is_finite() {
                return Err(Error::Schedule("RF pulse needs a positive duration and finite amplitude".into()));
            }
            if let Envelope::Gauss { sigma } = rf.envelope {
                if !(sigma > 0.0) {
                    return Err(Error::Schedule("Gaussian sigma must be positive".into()));
                }
            }
        }
        for p in &self.gate_pulses {
            if !(p.duration > 0.0 && p.rise >= 0.0 && p.rise <= p.duration && p.start.is_finite()) {
                return Err(Error::Schedule(alloc::format!(
                    "gate pulse at {} s needs duration > 0 and 0 <= rise <= duration",
                    p.start
                )));
            }
        }
        let mut sorted: Vec<&GatePulse> = self.gate_pulses.iter().collect();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        if let Some(w) = sorted.windows(2).find(|w| w[0].last() > w[1].first()) {
            return Err(Error::Schedule(alloc::format!(
                "gate pulses at {} s and {} s overlap",
                w[0].start,
                w[1].start
            )));
        }
        Ok(())
    }

    pub(crate) fn level(&self, t: f64) -> f64 {
        self.gate_pulses.iter().map(|p| p.level_at(t)).sum::<f64>().min(1.0)
    }

    fn any_on(&self) -> bool {
        self.gate_pulses.iter().any(|p| matches!(p.level, GateLevel::On { .. }))
    }

    fn extent(&self) -> Option<(f64, f64)> {
        let rf = self.rf.map(|r| (r.start, r.start + r.duration));
        let gates = self.gate_pulses.iter().map(|p| (p.first(), p.last()));
        rf.into_iter()
            .chain(gates)
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub a_out: Vec<Complex64>,
    pub e_a: Vec<f64>,
    pub e_b: Vec<f64>,
}

impl Trajectory {
    fn push(&mut self, t: f64, a: Complex64, b: Complex64, a_out: Complex64) {
        self.times.push(t);
        self.a.push(a);
        self.b.push(b);
        self.a_out.push(a_out);
        self.e_a.push(a.norm_sqr());
        self.e_b.push(b.norm_sqr());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> (Complex64, Complex64) {
        (*self.a.last().unwrap_or(&ZERO), *self.b.last().unwrap_or(&ZERO))
    }

    pub fn max_e_a(&self) -> f64 {
        self.e_a.iter().cloned().fold(0.0, f64::max)
    }

    /// ∫|a_out|² dt over samples with `t >= from`, trapezoidal.
    pub fn emitted_energy(&self, from: f64) -> f64 {
        self.times
            .windows(2)
            .zip(self.a_out.windows(2))
            .filter(|(t, _)| t[0] >= from)
            .map(|(t, o)| 0.5 * (t[1] - t[0]) * (o[0].norm_sqr() + o[1].norm_sqr()))
            .sum()
    }
}

/// Largest step the resolution guard allows for `system` driven by `pulses`.
pub fn max_step(system: &CoupledModeSystem, pulses: &PulseSequence) -> f64 {
    let carrier = pulses.rf.map_or(system.omega_b, |r| TWO_PI * r.carrier);
    let g_max = if pulses.any_on() {
        system.g_on.max(system.g_off)
    } else {
        system.g_off
    };
    let rate = [
        (system.omega_a - carrier).abs(),
        (system.omega_b - carrier).abs(),
        g_max,
        0.5 * system.kappa_a(),
        0.5 * system.gamma_b,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        TWO_PI / (50.0 * rate)
    }
}

/// Drive seen by the TCR: either the RF pulse or a sampled field.
#[derive(Clone, Copy)]
pub(crate) enum Drive<'a> {
    Pulse(Option<RfPulse>),
    /// Samples on a uniform grid starting at `t0` with spacing `dt`, linearly interpolated.
    Sampled { t0: f64, dt: f64, values: &'a [Complex64] },
}

impl Drive<'_> {
    pub(crate) fn at(&self, t: f64) -> Complex64 {
        match *self {
            Drive::Pulse(rf) => Complex64::new(rf.map_or(0.0, |r| r.value(t)), 0.0),
            Drive::Sampled { t0, dt, values } => {
                if values.is_empty() {
                    return ZERO;
                }
                let x = (t - t0) / dt;
                if x <= 0.0 {
                    return if x == 0.0 { values[0] } else { ZERO };
                }
                let k = libm::floor(x) as usize;
                if k + 1 >= values.len() {
                    return if k + 1 == values.len() && x - k as f64 == 0.0 { values[k] } else { ZERO };
                }
                let u = x - k as f64;
                values[k] * (1.0 - u) + values[k + 1] * u
            }
        }
    }
}

/// Fixed-step RK4 trajectory of `system` under `pulses` from `initial = (a, b)`.
pub fn evolve(
    system: &CoupledModeSystem,
    pulses: &PulseSequence,
    initial: (Complex64, Complex64),
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    system.validate()?;
    pulses.validate()?;
    if let Some((lo, hi)) = pulses.extent() {
        if lo < t_span.0 - 1e-15 || hi > t_span.1 + 1e-15 {
            return Err(Error::Schedule(alloc::format!(
                "time span [{}, {}] s does not cover the pulses [{lo}, {hi}] s",
                t_span.0,
                t_span.1
            )));
        }
    }
    let carrier = pulses.rf.map_or(system.omega_b, |r| TWO_PI * r.carrier);
    integrate(system, pulses, Drive::Pulse(pulses.rf), carrier, initial, t_span, dt)
}

pub(crate) fn integrate(
    system: &CoupledModeSystem,
    gates: &PulseSequence,
    drive: Drive<'_>,
    carrier: f64,
    initial: (Complex64, Complex64),
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::invalid("t_span", "need a finite interval with t1 > t0"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let suggested = max_step(system, gates);
    if dt > suggested {
        return Err(Error::ResolutionGuard { dt, suggested });
    }
    let n = libm::ceil((t1 - t0) / dt - 1e-9).max(1.0) as usize;
    let h = (t1 - t0) / n as f64;

    let da = I * (system.omega_a - carrier) + 0.5 * system.kappa_a();
    let db = I * (system.omega_b - carrier) + 0.5 * system.gamma_b;
    let sqk = libm::sqrt(system.kappa_ext);
    let g = |t: f64| {
        let l = gates.level(t);
        system.g_off + (system.g_on - system.g_off) * l
    };
    let rhs = |t: f64, a: Complex64, b: Complex64| {
        let gt = g(t);
        (
            -da * a - I * gt * b + drive.at(t) * sqk,
            -db * b - I * gt * a,
        )
    };

    let mut traj = Trajectory::default();
    let (mut a, mut b) = initial;
    traj.push(t0, a, b, drive.at(t0) - a * sqk);
    for k in 0..n {
        let t = t0 + h * k as f64;
        let (k1a, k1b) = rhs(t, a, b);
        let (k2a, k2b) = rhs(t + 0.5 * h, a + k1a * (0.5 * h), b + k1b * (0.5 * h));
        let (k3a, k3b) = rhs(t + 0.5 * h, a + k2a * (0.5 * h), b + k2b * (0.5 * h));
        let (k4a, k4b) = rhs(t + h, a + k3a * h, b + k3b * h);
        a += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
        b += (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (h / 6.0);
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("evolve"));
        }
        let tn = t0 + h * (k + 1) as f64;
        traj.push(tn, a, b, drive.at(tn) - a * sqk);
    }
    Ok(traj)
}

/// Full-transfer time `π / (2 g)` of two resonant modes.
pub fn swap_duration(g_ang: f64) -> Result<f64> {
    if !(g_ang > 0.0 && g_ang.is_finite()) {
        return Err(Error::invalid("g_ang", alloc::format!("must be positive, got {g_ang}")));
    }
    Ok(PI / (2.0 * g_ang))
}

/// Integration step and protocol padding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolTimings {
    pub dt: f64,
    pub gate_rise: f64,
    /// Time simulated after the write gate pulse.
    pub settle: f64,
    /// Time simulated after the read gate pulse, for the TCR to empty.
    pub read_window: f64,
}

impl ProtocolTimings {
    /// Reasonable defaults for a system: a step well inside the guard and a read
    /// window of ten TCR lifetimes.
    pub fn for_system(system: &CoupledModeSystem) -> Self {
        let kappa = system.kappa_a();
        Self {
            dt: 20e-12,
            gate_rise: DEFAULT_GATE_RISE,
            settle: 1e-9,
            read_window: if kappa > 0.0 { 10.0 / kappa } else { 1e-6 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriteResult {
    /// `|b(t_end)|² / max_t |a(t)|²`.
    pub fidelity: f64,
    pub trajectory: Trajectory,
    pub gate_end: f64,
}

fn swap_for(system: &CoupledModeSystem, level: GateLevel) -> Result<f64> {
    match level {
        GateLevel::On { .. } => swap_duration(system.g_on),
        // a gate that never opens still spans the nominal slot
        GateLevel::Off => swap_duration(system.g_on.max(system.g_off).max(f64::MIN_POSITIVE)),
    }
}

/// Loads the TCR with `rf`, then opens the gate for one swap time right after the pulse.
pub fn write_protocol(
    system: &CoupledModeSystem,
    rf: &RfPulse,
    gate_on: GateLevel,
    timings: &ProtocolTimings,
) -> Result<WriteResult> {
    write_from(system, rf, gate_on, timings, (ZERO, ZERO))
}

fn write_from(
    system: &CoupledModeSystem,
    rf: &RfPulse,
    gate_on: GateLevel,
    timings: &ProtocolTimings,
    initial: (Complex64, Complex64),
) -> Result<WriteResult> {
    let swap = swap_for(system, gate_on)?;
    let gate = GatePulse {
        level: gate_on,
        start: rf.start + rf.duration + 0.5 * timings.gate_rise,
        duration: swap,
        rise: timings.gate_rise,
    };
    let seq = PulseSequence {
        rf: Some(*rf),
        gate_pulses: alloc::vec![gate],
    };
    let t_end = gate.last() + timings.settle;
    let trajectory = evolve(system, &seq, initial, (rf.start, t_end), timings.dt)?;
    let peak = trajectory.max_e_a();
    let fidelity = if peak > 0.0 {
        trajectory.e_b.last().copied().unwrap_or(0.0) / peak
    } else {
        0.0
    };
    Ok(WriteResult {
        fidelity,
        trajectory,
        gate_end: gate.last(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadResult {
    pub emitted: Vec<(f64, Complex64)>,
    /// `∫|a_out|² dt` over the energy in the cell when the read starts.
    pub recovered_fraction: f64,
    pub trajectory: Trajectory,
}

/// Opens the gate for one swap time on a unit excitation stored in the SC and collects the output field.
pub fn read_protocol(system: &CoupledModeSystem, timings: &ProtocolTimings) -> Result<ReadResult> {
    read_from(system, timings, (ZERO, Complex64::new(1.0, 0.0)), 0.0)
}

fn read_from(
    system: &CoupledModeSystem,
    timings: &ProtocolTimings,
    initial: (Complex64, Complex64),
    t0: f64,
) -> Result<ReadResult> {
    let gate = GatePulse {
        level: GateLevel::On { l_j: f64::NAN },
        start: t0 + 0.5 * timings.gate_rise,
        duration: swap_duration(system.g_on)?,
        rise: timings.gate_rise,
    };
    let seq = PulseSequence {
        rf: None,
        gate_pulses: alloc::vec![gate],
    };
    let t_end = gate.last() + timings.read_window;
    let trajectory = evolve(system, &seq, initial, (t0, t_end), timings.dt)?;
    let stored = initial.0.norm_sqr() + initial.1.norm_sqr();
    let emitted_energy = trajectory.emitted_energy(t0);
    Ok(ReadResult {
        emitted: trajectory.times.iter().copied().zip(trajectory.a_out.iter().copied()).collect(),
        recovered_fraction: if stored > 0.0 { emitted_energy / stored } else { 0.0 },
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriteReadResult {
    pub write_fidelity: f64,
    /// `|a|² + |b|²` when the read starts.
    pub stored: f64,
    /// Read-out energy over `stored`.
    pub recovered_fraction: f64,
    /// Read-out energy over the peak TCR energy of the write.
    pub round_trip: f64,
}

/// Write, hold for `hold` seconds with the gate OFF, then read.
pub fn write_then_read(
    system: &CoupledModeSystem,
    rf: &RfPulse,
    gate_on: GateLevel,
    timings: &ProtocolTimings,
    hold: f64,
) -> Result<WriteReadResult> {
    let w = write_protocol(system, rf, gate_on, timings)?;
    let mut state = w.trajectory.last_state();
    let mut t = *w.trajectory.times.last().unwrap_or(&0.0);
    if hold > 0.0 {
        let idle = evolve(system, &PulseSequence::default(), state, (t, t + hold), timings.dt)?;
        state = idle.last_state();
        t += hold;
    }
    let stored = state.0.norm_sqr() + state.1.norm_sqr();
    let r = read_from(system, timings, state, t)?;
    let emitted = r.recovered_fraction * stored;
    let peak = w.trajectory.max_e_a();
    Ok(WriteReadResult {
        write_fidelity: w.fidelity,
        stored,
        recovered_fraction: r.recovered_fraction,
        round_trip: if peak > 0.0 { emitted / peak } else { 0.0 },
    })
}

/// Reduced-model parameters of `cell` with the gate ON at `l_on`.
///
/// Bare frequencies and `g` come from the crossing fit. The external rate of the TCR
/// is the sum of both hybrid modes' external rates at `l_on`. Internal rates are split
/// between the bare modes using their mixing at the most detuned row of `map`.
pub fn extract_coupled_mode_params(
    cell: &MemoryCell,
    l_on: f64,
    map: &ModeMap,
    fit: &CrossingFit,
    band: (f64, f64),
    settings: &SweepSettings,
) -> Result<CoupledModeSystem> {
    if !(l_on > 0.0 && l_on.is_finite()) {
        return Err(Error::invalid("l_on", "must be positive"));
    }
    let row = mode_row(cell, l_on, band, settings)?;
    let Some(modes) = row.modes else {
        return Err(Error::MissingRates(alloc::vec!["kappa_ext", "kappa_int_a", "gamma_b"]));
    };
    let ext = |p: &crate::resonance::ResonancePeak| p.q_coupling.map(|q| TWO_PI * p.f0 / q);
    let int = |p: &crate::resonance::ResonancePeak| p.q_internal.map(|q| TWO_PI * p.f0 / q);

    let mut missing = Vec::new();
    let kappa_ext = match (ext(&modes[0]), ext(&modes[1])) {
        (Some(x), Some(y)) => x + y,
        _ => {
            missing.push("kappa_ext");
            0.0
        }
    };
    let int_sum = match (int(&modes[0]), int(&modes[1])) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };

    // mixing at the most detuned complete row
    let detuned = map
        .rows
        .iter()
        .filter_map(|r| r.modes.map(|m| (r.l_j, m)))
        .max_by(|x, y| {
            let d = |l: f64| (fit.f_a(l) - fit.f_b).abs();
            d(x.0).total_cmp(&d(y.0))
        });
    let split = detuned.and_then(|(_, m)| {
        let (e0, e1) = (ext(&m[0])?, ext(&m[1])?);
        let (i0, i1) = (int(&m[0])?, int(&m[1])?);
        let w0 = e0 / (e0 + e1);
        let w1 = 1.0 - w0;
        // i0 = w0 ka + w1 gb, i1 = w1 ka + w0 gb
        let det = w0 * w0 - w1 * w1;
        if det.abs() < 1e-9 {
            return None;
        }
        let ka = (i0 * w0 - i1 * w1) / det;
        let gb = (i1 * w0 - i0 * w1) / det;
        let ka = ka.max(0.0);
        let gb = gb.max(0.0);
        let total = ka + gb;
        Some(if total > 0.0 { ka / total } else { 1.0 })
    });
    let (kappa_int_a, gamma_b) = match (int_sum, split) {
        (Some(s), Some(frac_a)) => (s * frac_a, s * (1.0 - frac_a)),
        _ => {
            missing.push("kappa_int_a");
            missing.push("gamma_b");
            (0.0, 0.0)
        }
    };
    if !missing.is_empty() {
        return Err(Error::MissingRates(missing));
    }
    let residual = off_state_residual_coupling(cell, kappa_ext + kappa_int_a, settings.z_ref)?;
    Ok(CoupledModeSystem {
        omega_a: TWO_PI * fit.f_a(l_on),
        omega_b: TWO_PI * fit.f_b,
        kappa_ext,
        kappa_int_a,
        gamma_b,
        g_on: TWO_PI * fit.g,
        g_off: residual.g_off,
    })
}
