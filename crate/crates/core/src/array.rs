//! Frequency-multiplexed cells on one feedline: combined transmission,
//! addressing and scheduled random access.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::calibrate::{calibrate_geometry, CalibrationTargets};
use crate::cell::{s21_batch, MemoryCell};
use crate::constants::TWO_PI;
use crate::dynamics::{
    extract_coupled_mode_params, integrate, swap_duration, CoupledModeSystem, Drive, Envelope, GateLevel,
    GatePulse, PulseSequence, RfPulse, DEFAULT_GATE_RISE,
};
use crate::jjfet::JjState;
use crate::modemap::{fit_avoided_crossing, mode_map, CrossingFit, ModeMap, SweepSettings};
use crate::resonance::{ResonancePeak, TracePoint};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// How every cell of an array is calibrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayDesign {
    pub l_anchor: f64,
    pub q_c: f64,
    pub z_ref: f64,
    /// Distance between neighbouring taps, m. Bookkeeping only.
    pub tap_spacing: f64,
}

impl Default for ArrayDesign {
    fn default() -> Self {
        Self {
            l_anchor: 220e-12,
            q_c: 2e4,
            z_ref: 50.0,
            tap_spacing: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryArray {
    pub cells: Vec<MemoryCell>,
    pub targets: Vec<f64>,
    pub tap_spacings: Vec<f64>,
    pub z_ref: f64,
    pub l_anchor: f64,
    pub q_c: f64,
}

impl MemoryArray {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Smallest distance from target `i` to another target, or ∞ for a lone cell.
    pub fn spacing(&self, i: usize) -> f64 {
        self.targets
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, f)| (f - self.targets[i]).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Loaded linewidth used by the addressability check: the TCR linewidth `f / q_c`,
/// the broadest feature a cell puts on the feedline.
pub fn loaded_linewidth(f: f64, q_c: f64) -> f64 {
    f / q_c
}

/// Targets must be strictly increasing and every pair more than ten linewidths apart.
pub fn check_addressability(targets: &[f64], q_c: f64) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::invalid("targets", "at least one target frequency is required"));
    }
    if let Some(f) = targets.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::invalid("targets", format!("target {f} Hz is not a positive frequency")));
    }
    if let Some(k) = targets.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "targets",
            format!("targets must be strictly increasing; entries {k} and {} are not", k + 1),
        ));
    }
    let required = 10.0 * targets.iter().map(|&f| loaded_linewidth(f, q_c)).fold(0.0, f64::max);
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            let separation = targets[j] - targets[i];
            if separation <= required {
                return Err(Error::Addressability {
                    first: i,
                    second: j,
                    separation,
                    required,
                });
            }
        }
    }
    Ok(())
}

/// Calibrates one copy of `template` per target.
pub fn build_array(targets: &[f64], template: &MemoryCell, design: &ArrayDesign) -> Result<MemoryArray> {
    if !(design.q_c > 0.0) || !(design.z_ref > 0.0) || !(design.tap_spacing >= 0.0) {
        return Err(Error::invalid("design", "q_c and z_ref must be positive, tap_spacing non-negative"));
    }
    check_addressability(targets, design.q_c)?;
    let cells = par_map(targets, |&f| {
        calibrate_geometry(
            &CalibrationTargets::crossing_at(f, design.l_anchor, design.q_c),
            template,
            design.z_ref,
        )
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MemoryArray {
        tap_spacings: vec![design.tap_spacing; targets.len().saturating_sub(1)],
        cells,
        targets: targets.to_vec(),
        z_ref: design.z_ref,
        l_anchor: design.l_anchor,
        q_c: design.q_c,
    })
}

/// Per-cell transmission on `f_grid`.
pub fn cell_traces(array: &MemoryArray, states: &[JjState], f_grid: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    if states.len() != array.len() {
        return Err(Error::invalid(
            "states",
            format!("{} states given for {} cells", states.len(), array.len()),
        ));
    }
    array
        .cells
        .iter()
        .zip(states)
        .map(|(c, &s)| s21_batch(c, s, f_grid, array.z_ref))
        .collect()
}

/// Feedline transmission as the product of the per-cell notch responses.
pub fn array_spectrum(array: &MemoryArray, states: &[JjState], f_grid: &[f64]) -> Result<Vec<TracePoint>> {
    let traces = cell_traces(array, states, f_grid)?;
    Ok(f_grid
        .iter()
        .enumerate()
        .map(|(k, &f)| (f, traces.iter().map(|t| t[k]).product()))
        .collect())
}

/// Spectrum model of one calibrated cell, from its mode map.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub map: ModeMap,
    pub fit: CrossingFit,
    /// Junction inductance while the gate is ON.
    pub l_on: f64,
    /// Reduced model with the gate ON at `l_on`.
    pub system: CoupledModeSystem,
}

/// Mode map, crossing fit and reduced model of every cell; the band is `target ± half_band`.
/// The gate-ON inductance is `l_on`, or each cell's fitted crossing when `None`.
pub fn characterise_array(
    array: &MemoryArray,
    l_grid: &[f64],
    half_band: f64,
    settings: &SweepSettings,
    l_on: Option<f64>,
) -> Result<Vec<CellModel>> {
    let idx: Vec<usize> = (0..array.len()).collect();
    par_map(&idx, |&i| {
        let cell = &array.cells[i];
        let band = (array.targets[i] - half_band, array.targets[i] + half_band);
        let map = mode_map(cell, l_grid, band, settings)?;
        let fit = fit_avoided_crossing(&map)?;
        let l_on = l_on.unwrap_or(fit.l_cross);
        let system = extract_coupled_mode_params(cell, l_on, &map, &fit, band, settings)?;
        Ok(CellModel { map, fit, l_on, system })
    })
    .into_iter()
    .collect()
}

/// Centre of each cell's hybrid doublet in a measured array spectrum: the mean of
/// the two measured dips nearest the cell's own hybrid frequencies at `l_on`.
pub fn doublet_centres(peaks: &[ResonancePeak], models: &[CellModel]) -> Vec<Option<f64>> {
    let nearest = |x: f64| {
        peaks
            .iter()
            .map(|p| p.f0)
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
    };
    models
        .iter()
        .map(|m| {
            let (lo, hi) = m.fit.hybrid(m.l_on);
            let (a, b) = (nearest(lo)?, nearest(hi)?);
            (a != b).then_some(0.5 * (a + b))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Write,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateTimings {
    pub rise: f64,
    /// ON time; the cell's swap duration when `None`.
    pub duration: Option<f64>,
}

impl Default for GateTimings {
    fn default() -> Self {
        Self {
            rise: DEFAULT_GATE_RISE,
            duration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessOp {
    pub kind: AccessKind,
    pub cell_index: usize,
    pub start: f64,
    pub rf_carrier: f64,
    pub gate: GateTimings,
}

/// Drive and integration settings shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSettings {
    pub dt: f64,
    pub rf_amplitude: f64,
    pub rf_duration: f64,
    pub envelope: Envelope,
    /// Simulated time after a write's gate pulse.
    pub settle: f64,
    /// Simulated time after a read's gate pulse.
    pub read_window: f64,
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        Self {
            dt: 20e-12,
            rf_amplitude: 1.0,
            rf_duration: 3e-6,
            envelope: Envelope::Rect,
            settle: 1e-9,
            read_window: 5e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccessSchedule {
    pub ops: Vec<AccessOp>,
    pub settings: ScheduleSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpWindow {
    gate_start: f64,
    swap: f64,
    end: f64,
}

fn op_window(op: &AccessOp, system: &CoupledModeSystem, s: &ScheduleSettings) -> Result<OpWindow> {
    let swap = match op.gate.duration {
        Some(d) => d,
        None => swap_duration(system.g_on)?,
    };
    let lead = match op.kind {
        AccessKind::Write => s.rf_duration,
        AccessKind::Read => 0.0,
    };
    let gate_start = op.start + lead + 0.5 * op.gate.rise;
    let tail = match op.kind {
        AccessKind::Write => s.settle,
        AccessKind::Read => s.read_window,
    };
    Ok(OpWindow {
        gate_start,
        swap,
        end: gate_start + swap + 0.5 * op.gate.rise + tail,
    })
}

/// Rejects schedules that break the per-cell and carrier invariants.
pub fn validate_schedule(array: &MemoryArray, models: &[CellModel], schedule: &AccessSchedule) -> Result<()> {
    let s = &schedule.settings;
    if models.len() != array.len() {
        return Err(Error::Schedule(format!("{} cell models for {} cells", models.len(), array.len())));
    }
    if !(s.dt > 0.0 && s.rf_duration > 0.0 && s.settle >= 0.0 && s.read_window >= 0.0) {
        return Err(Error::Schedule("dt and rf_duration must be positive, settle and read_window non-negative".into()));
    }
    if !s.rf_amplitude.is_finite() {
        return Err(Error::Schedule("rf_amplitude must be finite".into()));
    }
    if let Envelope::Gauss { sigma } = s.envelope {
        if !(sigma > 0.0) {
            return Err(Error::Schedule("Gaussian sigma must be positive".into()));
        }
    }
    let mut windows: Vec<Vec<(f64, f64, usize)>> = vec![Vec::new(); array.len()];
    for (k, op) in schedule.ops.iter().enumerate() {
        let i = op.cell_index;
        if i >= array.len() {
            return Err(Error::Schedule(format!("op {k}: cell {i} does not exist")));
        }
        if !(op.start >= 0.0 && op.start.is_finite()) {
            return Err(Error::Schedule(format!("op {k}: start must be finite and >= 0")));
        }
        if !(op.gate.rise >= 0.0) || op.gate.duration.is_some_and(|d| !(d > 0.0 && d >= op.gate.rise)) {
            return Err(Error::Schedule(format!("op {k}: gate needs rise >= 0 and duration >= rise")));
        }
        let half = 0.5 * array.spacing(i);
        if !((op.rf_carrier - array.targets[i]).abs() < half) {
            return Err(Error::Schedule(format!(
                "op {k}: carrier {} Hz is not within half the spacing of cell {i} at {} Hz",
                op.rf_carrier, array.targets[i]
            )));
        }
        let w = op_window(op, &models[i].system, s)?;
        windows[i].push((op.start, w.end, k));
    }
    for (i, w) in windows.iter_mut().enumerate() {
        w.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(p) = w.windows(2).find(|p| p[1].0 < p[0].1) {
            return Err(Error::Schedule(format!(
                "ops {} and {} overlap on cell {i}",
                p[0].2, p[1].2
            )));
        }
    }
    Ok(())
}

/// Transfer fractions between cells, the worst over all operations on the addressed
/// cell; `rows[i]` is `None` when cell `i` was never addressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkReport {
    pub rows: Vec<Option<Vec<f64>>>,
}

impl CrosstalkReport {
    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(Option::is_none)
    }

    pub fn get(&self, addressed: usize, other: usize) -> Option<f64> {
        self.rows.get(addressed)?.as_ref()?.get(other).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpOutcome {
    pub kind: AccessKind,
    pub cell_index: usize,
    /// Write: `|b_end|² / max|a|²`. Read: emitted energy over the energy in the cell at the start.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub ops: Vec<OpOutcome>,
    pub crosstalk: CrosstalkReport,
}

/// Exact propagator of the undriven, gate-OFF pair in the frame rotating at `omega_b`.
fn idle(system: &CoupledModeSystem, state: (Complex64, Complex64), t: f64) -> (Complex64, Complex64) {
    if t <= 0.0 {
        return state;
    }
    let i = Complex64::new(0.0, 1.0);
    let m11 = -(i * (system.omega_a - system.omega_b) + 0.5 * system.kappa_a());
    let m22 = Complex64::new(-0.5 * system.gamma_b, 0.0);
    let m12 = -i * system.g_off;
    let half_tr = 0.5 * (m11 + m22);
    let n11 = m11 - half_tr;
    // N = [[n11, m12], [m12, -n11]], N² = s² I
    let s = (n11 * n11 + m12 * m12).sqrt();
    let st = s * t;
    let ch = st.cosh();
    let sh_over_s = if st.norm() < 1e-8 { Complex64::new(t, 0.0) } else { st.sinh() / s };
    let e = (half_tr * t).exp();
    let (a, b) = state;
    (
        e * (ch * a + sh_over_s * (n11 * a + m12 * b)),
        e * (ch * b + sh_over_s * (m12 * a - n11 * b)),
    )
}

/// Rotates a state from the `from` frame to the `to` frame at absolute time `t`.
fn reframe(state: (Complex64, Complex64), from: f64, to: f64, t: f64) -> (Complex64, Complex64) {
    let ph = Complex64::from_polar(1.0, (to - from) * t);
    (state.0 * ph, state.1 * ph)
}

struct Addressed {
    fidelity: f64,
    deposited: f64,
    /// Feedline field leaving the addressed cell during a read, on the op grid.
    emitted: Option<Vec<Complex64>>,
    final_state: (Complex64, Complex64),
    end: f64,
}

fn gate_sequence(op: &AccessOp, w: &OpWindow, rf: Option<RfPulse>, level: GateLevel) -> PulseSequence {
    PulseSequence {
        rf,
        gate_pulses: vec![GatePulse {
            level,
            start: w.gate_start,
            duration: w.swap,
            rise: op.gate.rise,
        }],
    }
}

fn rf_for(op: &AccessOp, s: &ScheduleSettings) -> Option<RfPulse> {
    (op.kind == AccessKind::Write).then_some(RfPulse {
        carrier: op.rf_carrier,
        amplitude: s.rf_amplitude,
        start: op.start,
        duration: s.rf_duration,
        envelope: s.envelope,
    })
}

/// Energy a cell holds because of an operation: what is left when a write ends,
/// or the most it held during a read (whose energy leaves the cell by design).
fn deposit(kind: AccessKind, e_a: &[f64], e_b: &[f64]) -> f64 {
    match kind {
        AccessKind::Write => e_a.last().copied().unwrap_or(0.0) + e_b.last().copied().unwrap_or(0.0),
        AccessKind::Read => e_a.iter().zip(e_b).map(|(a, b)| a + b).fold(0.0, f64::max),
    }
}

fn run_addressed(
    op: &AccessOp,
    system: &CoupledModeSystem,
    s: &ScheduleSettings,
    state: (Complex64, Complex64),
    l_on: f64,
) -> Result<Addressed> {
    let w = op_window(op, system, s)?;
    let carrier = TWO_PI * op.rf_carrier;
    let rf = rf_for(op, s);
    let seq = gate_sequence(op, &w, rf, GateLevel::On { l_j: l_on });
    let init = reframe(state, system.omega_b, carrier, op.start);
    let tr = integrate(system, &seq, Drive::Pulse(rf), carrier, init, (op.start, w.end), s.dt)?;
    let deposited = deposit(op.kind, &tr.e_a, &tr.e_b);
    let fidelity = match op.kind {
        AccessKind::Write => {
            let m = tr.max_e_a();
            if m > 0.0 {
                tr.e_b.last().copied().unwrap_or(0.0) / m
            } else {
                0.0
            }
        }
        AccessKind::Read => {
            let stored = init.0.norm_sqr() + init.1.norm_sqr();
            if stored > 0.0 {
                tr.emitted_energy(op.start) / stored
            } else {
                0.0
            }
        }
    };
    let last = reframe(tr.last_state(), carrier, system.omega_b, w.end);
    Ok(Addressed {
        fidelity,
        deposited,
        emitted: (op.kind == AccessKind::Read).then(|| tr.a_out.clone()),
        final_state: last,
        end: w.end,
    })
}

/// Energy a gate-OFF neighbour picks up from the feedline drive of `op`.
fn neighbour_deposit(
    op: &AccessOp,
    window_end: f64,
    neighbour: &CoupledModeSystem,
    s: &ScheduleSettings,
    emitted: Option<&[Complex64]>,
) -> Result<f64> {
    let carrier = TWO_PI * op.rf_carrier;
    let rf = rf_for(op, s);
    let seq = PulseSequence {
        rf,
        gate_pulses: Vec::new(),
    };
    let span = (op.start, window_end);
    let n = libm::ceil((span.1 - span.0) / s.dt - 1e-9).max(1.0);
    let drive = match emitted {
        Some(values) => Drive::Sampled {
            t0: span.0,
            dt: (span.1 - span.0) / n,
            values,
        },
        None => Drive::Pulse(rf),
    };
    let tr = integrate(neighbour, &seq, drive, carrier, (ZERO, ZERO), span, s.dt)?;
    Ok(deposit(op.kind, &tr.e_a, &tr.e_b))
}

/// Runs `schedule` on the reduced models of `array`.
///
/// Each cell carries its stored state from one of its operations to the next,
/// decaying freely in between. Every other cell sees the same feedline drive with
/// its gate OFF (for a read, the field the addressed cell emits); the energy it
/// picks up is reported as crosstalk but not fed back into its stored state.
pub fn run_schedule(array: &MemoryArray, models: &[CellModel], schedule: &AccessSchedule) -> Result<ScheduleReport> {
    validate_schedule(array, models, schedule)?;
    let s = &schedule.settings;
    let n = array.len();

    // per-cell chains are independent of each other
    let cells: Vec<usize> = (0..n).collect();
    let chains = par_map(&cells, |&i| -> Result<Vec<(usize, Addressed)>> {
        let system = &models[i].system;
        let mut ops: Vec<(usize, &AccessOp)> =
            schedule.ops.iter().enumerate().filter(|(_, op)| op.cell_index == i).collect();
        ops.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
        let mut state = (ZERO, ZERO);
        let mut t = 0.0;
        let mut out = Vec::with_capacity(ops.len());
        for (k, op) in ops {
            state = idle(system, state, op.start - t);
            let r = run_addressed(op, system, s, state, models[i].l_on)?;
            state = r.final_state;
            t = r.end;
            out.push((k, r));
        }
        Ok(out)
    });
    let mut addressed: Vec<Option<Addressed>> = (0..schedule.ops.len()).map(|_| None).collect();
    for chain in chains {
        for (k, r) in chain? {
            addressed[k] = Some(r);
        }
    }
    let addressed: Vec<Addressed> = addressed.into_iter().map(|a| a.expect("every op runs")).collect();

    let pairs: Vec<(usize, usize)> = schedule
        .ops
        .iter()
        .enumerate()
        .flat_map(|(k, op)| (0..n).filter(move |&j| j != op.cell_index).map(move |j| (k, j)))
        .collect();
    let deposits = par_map(&pairs, |&(k, j)| {
        let a = &addressed[k];
        neighbour_deposit(&schedule.ops[k], a.end, &models[j].system, s, a.emitted.as_deref())
    });

    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    for op in &schedule.ops {
        rows[op.cell_index].get_or_insert_with(|| {
            let mut r = vec![0.0; n];
            r[op.cell_index] = 1.0;
            r
        });
    }
    for (&(k, j), dep) in pairs.iter().zip(deposits) {
        let dep = dep?;
        let i = schedule.ops[k].cell_index;
        let reference = addressed[k].deposited;
        let frac = if reference > 0.0 { dep / reference } else { 0.0 };
        if let Some(row) = rows[i].as_mut() {
            row[j] = row[j].max(frac);
        }
    }
    Ok(ScheduleReport {
        ops: schedule
            .ops
            .iter()
            .zip(&addressed)
            .map(|(op, a)| OpOutcome {
                kind: op.kind,
                cell_index: op.cell_index,
                fidelity: a.fidelity,
            })
            .collect(),
        crosstalk: CrosstalkReport { rows },
    })
}

/// Steady-state fraction of resonant energy a mode of width `kappa` takes up at detuning `delta`.
pub fn lorentzian_bound(kappa: f64, delta: f64) -> f64 {
    let h = 0.5 * kappa;
    h * h / (h * h + delta * delta)
}
