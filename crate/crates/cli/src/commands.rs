//! Subcommands as plain functions: configuration in, CSV text and report out.

use qumem_core::array::{
    array_spectrum as combined_spectrum, build_array, characterise_array, doublet_centres, run_schedule, ArrayDesign,
    CellModel, MemoryArray,
};
use qumem_core::calibrate::calibrate_geometry;
use qumem_core::cell::{cell_sweep, isolated_sc_frequency, isolated_tcr_frequency, tcr_q_coupling, MemoryCell};
use qumem_core::constants::TWO_PI;
use qumem_core::dynamics::{
    evolve, extract_coupled_mode_params, swap_duration, CoupledModeSystem, GateLevel, GatePulse, PulseSequence,
    Trajectory,
};
use qumem_core::jjfet::JjState;
use qumem_core::modemap::{fit_avoided_crossing, mode_map};
use qumem_core::resonance::{adaptive_sweep, find_resonances, ResonancePeak, TracePoint};
use qumem_core::Complex64;
use serde_json::{json, Value};

use crate::config::Config;
use crate::csv::{CsvWriter, Field};
use crate::report::{number, RunReport};
use crate::schedule::{parse_schedule, resolve};
use crate::units::{parse_quantity, Dimension};
use crate::CliError;

/// Result of a subcommand.
#[derive(Debug, Clone)]
pub struct Output {
    /// Main data product (CSV, or JSON for `calibrate`).
    pub data: String,
    /// Second CSV, if the command has one.
    pub extra: Option<String>,
    pub report: RunReport,
}

/// The configured cell, calibrated unless calibration is disabled.
pub fn prepare_cell(cfg: &Config) -> Result<MemoryCell, CliError> {
    if cfg.calibration.enabled {
        Ok(calibrate_geometry(&cfg.targets(), &cfg.cell, cfg.sweep.z_ref)?)
    } else {
        cfg.cell.validate()?;
        Ok(cfg.cell)
    }
}

pub fn prepare_array(cfg: &Config) -> Result<MemoryArray, CliError> {
    let design = ArrayDesign {
        l_anchor: cfg.calibration.l_anchor,
        q_c: cfg.calibration.q_c,
        z_ref: cfg.sweep.z_ref,
        tap_spacing: cfg.array.tap_spacing,
    };
    Ok(build_array(&cfg.array.targets, &cfg.cell, &design)?)
}

fn half_band(cfg: &Config) -> f64 {
    0.5 * (cfg.sweep.band.1 - cfg.sweep.band.0)
}

pub fn characterise(cfg: &Config, array: &MemoryArray) -> Result<Vec<CellModel>, CliError> {
    Ok(characterise_array(
        array,
        &cfg.l_grid(),
        half_band(cfg),
        &cfg.sweep_settings(),
        cfg.dynamics.l_j,
    )?)
}

fn trace_csv(trace: &[TracePoint]) -> String {
    let mut w = CsvWriter::new(&["f_hz", "re_s21", "im_s21", "abs_s21_db"]);
    for (f, s) in trace {
        w.row(&[*f, s.re, s.im, 20.0 * s.norm().log10()]);
    }
    w.finish()
}

fn peaks_json(peaks: &[ResonancePeak]) -> Value {
    Value::Array(
        peaks
            .iter()
            .map(|p| {
                json!({
                    "f0_hz": number(p.f0),
                    "q_loaded": number(p.q_loaded),
                    "q_internal": p.q_internal.map(number),
                    "q_coupling": p.q_coupling.map(number),
                    "depth_db": number(p.depth_db),
                })
            })
            .collect(),
    )
}

pub fn calibrate(cfg: &Config, config_bytes: &[u8]) -> Result<Output, CliError> {
    let mut report = RunReport::new("calibrate", config_bytes);
    let cell = calibrate_geometry(&cfg.targets(), &cfg.cell, cfg.sweep.z_ref)?;
    let on = JjState::On {
        l_j: cfg.calibration.l_anchor,
    };
    let f_sc = isolated_sc_frequency(&cell)?;
    let f_tcr = isolated_tcr_frequency(&cell, on, 0.5 * f_sc, 1.5 * f_sc)?;
    report.set_num("c_in_f", cell.c_in);
    report.set_num("tcr_half_len_m", cell.tcr_half_len);
    report.set_num("sc_len_m", cell.sc_len);
    report.set_num("f_sc_hz", f_sc);
    report.set("f_tcr_hz", f_tcr.map(number));
    report.set_num("q_c", tcr_q_coupling(&cell, on, cfg.calibration.f_sc, cfg.sweep.z_ref)?);

    let array = prepare_array(cfg)?;
    let fs: Vec<Value> = array
        .cells
        .iter()
        .map(|c| isolated_sc_frequency(c).map(number))
        .collect::<Result<_, _>>()?;
    report.set("array_target_hz", array.targets.iter().map(|&f| number(f)).collect::<Vec<_>>());
    report.set("array_f_sc_hz", fs);

    let mut out = cfg.clone();
    out.cell = cell;
    out.calibration.enabled = false;
    Ok(Output {
        data: out.to_json_string(),
        extra: None,
        report,
    })
}

/// Junction state from `on:<inductance>`, `on` (the anchor) or `off`.
pub fn parse_state(text: &str, cfg: &Config) -> Result<JjState, CliError> {
    let t = text.trim();
    if t == "off" {
        return Ok(cfg.cell.jj.off_state());
    }
    if t == "on" {
        return Ok(JjState::On {
            l_j: cfg.dynamics.l_j.unwrap_or(cfg.calibration.l_anchor),
        });
    }
    match t.strip_prefix("on:") {
        Some(l) => {
            let l_j = parse_quantity(l, Dimension::Inductance).map_err(|e| CliError::invalid(format!("--state: {e}")))?;
            if !(l_j > 0.0) {
                return Err(CliError::invalid("--state: inductance must be positive"));
            }
            Ok(JjState::On { l_j })
        }
        None => Err(CliError::invalid(format!("--state: expected on:<L>, on or off, got `{t}`"))),
    }
}

/// `lo,hi` with units on both ends.
pub fn parse_band(text: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(CliError::invalid("--band: expected lo,hi"));
    };
    let p = |s: &str| parse_quantity(s, Dimension::Frequency).map_err(|e| CliError::invalid(format!("--band: {e}")));
    let (lo, hi) = (p(lo)?, p(hi)?);
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::invalid("--band: need 0 < lo < hi"));
    }
    Ok((lo, hi))
}

/// `lo,hi,n` with units on the inductances.
pub fn parse_l_grid(text: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(CliError::invalid("--l-grid: expected lo,hi,n"));
    };
    let p = |s: &str| parse_quantity(s, Dimension::Inductance).map_err(|e| CliError::invalid(format!("--l-grid: {e}")));
    let (lo, hi) = (p(lo)?, p(hi)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| CliError::invalid("--l-grid: n must be a whole number"))?;
    if !(lo > 0.0 && hi > lo) || n < 8 {
        return Err(CliError::invalid("--l-grid: need 0 < lo < hi and n >= 8"));
    }
    Ok((lo, hi, n))
}

pub fn spectrum(cfg: &Config, config_bytes: &[u8], state: JjState, band: Option<(f64, f64)>) -> Result<Output, CliError> {
    let mut report = RunReport::new("spectrum", config_bytes);
    let cell = prepare_cell(cfg)?;
    let (settings, default_band) = match state {
        JjState::On { .. } => (cfg.sweep_settings(), cfg.sweep.band),
        JjState::Off { .. } => (cfg.off_sweep_settings(), cfg.sweep.off_band),
    };
    let band = band.unwrap_or(default_band);
    let trace = cell_sweep(&cell, state, &settings.plan(band), settings.z_ref)?;
    let peaks = find_resonances(&trace, settings.min_depth_db)?;
    match state {
        JjState::On { l_j } => report.set_num("l_j_h", l_j),
        JjState::Off { r } => report.set_num("r_off_ohm", r),
    }
    report.set("band_hz", json!([number(band.0), number(band.1)]));
    report.set("resonance_count", peaks.len());
    report.set("resonances", peaks_json(&peaks));
    Ok(Output {
        data: trace_csv(&trace),
        extra: None,
        report,
    })
}

pub fn modemap(cfg: &Config, config_bytes: &[u8], l_grid: Option<(f64, f64, usize)>) -> Result<Output, CliError> {
    let mut report = RunReport::new("modemap", config_bytes);
    let cell = prepare_cell(cfg)?;
    let mut cfg = cfg.clone();
    if let Some(g) = l_grid {
        cfg.sweep.l_grid = g;
    }
    let map = mode_map(&cell, &cfg.l_grid(), cfg.sweep.band, &cfg.sweep_settings())?;
    let mut w = CsvWriter::new(&["l_j_h", "f_mode1_hz", "f_mode2_hz"]);
    for row in &map.rows {
        w.row(&[
            row.l_j,
            row.f_mode1().unwrap_or(f64::NAN),
            row.f_mode2().unwrap_or(f64::NAN),
        ]);
    }
    let flagged = map.flagged();
    if !flagged.is_empty() {
        report.warn(format!("{} rows did not resolve two modes", flagged.len()));
    }
    report.set("flagged_rows", flagged.len());
    match map.splitting_minimum() {
        Some((_, unique)) => {
            report.set("unique_interior_minimum", unique);
            if !unique {
                report.warn("splitting minimum is not a unique interior minimum");
            }
        }
        None => report.warn("no valid rows"),
    }
    let fit = fit_avoided_crossing(&map)?;
    report.set_num("g_hz", fit.g);
    report.set_num("l_cross_h", fit.l_cross);
    report.set_num("f_cross_hz", fit.f_cross);
    report.set_num("f_b_hz", fit.f_b);
    report.set("window_h", json!([number(fit.window.0), number(fit.window.1)]));
    report.set_num("fit_rms_hz", fit.rms_residual);
    Ok(Output {
        data: w.finish(),
        extra: None,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapMode {
    /// Lossless, resonant pair at a constant coupling `g` (Hz).
    Constant { g_hz: f64 },
    /// Reduced model extracted from the configured cell.
    FromFit,
}

fn trajectory_csv(tr: &Trajectory) -> String {
    let mut w = CsvWriter::new(&["t_s", "re_a", "im_a", "re_b", "im_b", "e_a", "e_b"]);
    for k in 0..tr.len() {
        let (a, b) = (tr.a[k], tr.b[k]);
        w.row(&[tr.times[k], a.re, a.im, b.re, b.im, tr.e_a[k], tr.e_b[k]]);
    }
    w.finish()
}

/// Reduced model of the configured cell with the gate ON at `dynamics.l_j` or the crossing.
pub fn reduced_model(cfg: &Config) -> Result<(CoupledModeSystem, f64, MemoryCell), CliError> {
    let cell = prepare_cell(cfg)?;
    let settings = cfg.sweep_settings();
    let map = mode_map(&cell, &cfg.l_grid(), cfg.sweep.band, &settings)?;
    let fit = fit_avoided_crossing(&map)?;
    let l_on = cfg.dynamics.l_j.unwrap_or(fit.l_cross);
    let system = extract_coupled_mode_params(&cell, l_on, &map, &fit, cfg.sweep.band, &settings)?;
    Ok((system, l_on, cell))
}

fn system_json(s: &CoupledModeSystem) -> Value {
    json!({
        "omega_a_rad_s": number(s.omega_a),
        "omega_b_rad_s": number(s.omega_b),
        "kappa_ext_rad_s": number(s.kappa_ext),
        "kappa_int_a_rad_s": number(s.kappa_int_a),
        "gamma_b_rad_s": number(s.gamma_b),
        "g_on_rad_s": number(s.g_on),
        "g_off_rad_s": number(s.g_off),
    })
}

pub fn swap(cfg: &Config, config_bytes: &[u8], mode: SwapMode) -> Result<Output, CliError> {
    let mut report = RunReport::new("swap", config_bytes);
    let one = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let tr = match mode {
        SwapMode::Constant { g_hz } => {
            if !(g_hz > 0.0 && g_hz.is_finite()) {
                return Err(CliError::invalid("--g must be a positive frequency"));
            }
            let g = TWO_PI * g_hz;
            let omega = TWO_PI * cfg.calibration.f_sc;
            let system = CoupledModeSystem {
                g_off: g,
                ..CoupledModeSystem::resonant(omega, g, 0.0)
            };
            let t = swap_duration(g)?;
            report.set_num("g_hz", g_hz);
            report.set_num("t_swap_s", t);
            report.set("system", system_json(&system));
            evolve(&system, &PulseSequence::default(), one, (0.0, t), cfg.dynamics.dt)?
        }
        SwapMode::FromFit => {
            let (system, l_on, _) = reduced_model(cfg)?;
            let t = swap_duration(system.g_on)?;
            let rise = cfg.dynamics.gate_rise.min(t);
            let seq = PulseSequence {
                rf: None,
                gate_pulses: vec![GatePulse {
                    level: GateLevel::On { l_j: l_on },
                    start: 0.5 * rise,
                    duration: t,
                    rise,
                }],
            };
            report.set_num("g_hz", system.g_on / TWO_PI);
            report.set_num("l_on_h", l_on);
            report.set_num("t_swap_s", t);
            report.set("system", system_json(&system));
            evolve(&system, &seq, one, (0.0, t + rise), cfg.dynamics.dt)?
        }
    };
    report.set_num("final_e_a", *tr.e_a.last().unwrap_or(&f64::NAN));
    report.set_num("final_e_b", *tr.e_b.last().unwrap_or(&f64::NAN));
    report.set_num("final_t_s", *tr.times.last().unwrap_or(&f64::NAN));
    Ok(Output {
        data: trajectory_csv(&tr),
        extra: None,
        report,
    })
}

pub fn protocol(cfg: &Config, config_bytes: &[u8], schedule_text: &str) -> Result<Output, CliError> {
    let mut report = RunReport::new("protocol", config_bytes);
    let specs = parse_schedule(schedule_text)?;
    let array = prepare_array(cfg)?;
    let models = characterise(cfg, &array)?;
    let schedule = resolve(&specs, &models, cfg)?;
    let result = run_schedule(&array, &models, &schedule)?;

    let mut ops = CsvWriter::new(&["op_index", "cell_index", "kind", "start_s", "rf_carrier_hz", "fidelity"]);
    for (k, (op, out)) in schedule.ops.iter().zip(&result.ops).enumerate() {
        let kind = match out.kind {
            qumem_core::array::AccessKind::Write => "write",
            qumem_core::array::AccessKind::Read => "read",
        };
        ops.mixed_row(&[
            Field::Int(k),
            Field::Int(out.cell_index),
            Field::Text(kind),
            Field::Num(op.start),
            Field::Num(op.rf_carrier),
            Field::Num(out.fidelity),
        ]);
    }
    let mut xt = CsvWriter::new(&["addressed_cell", "other_cell", "fraction"]);
    for (i, row) in result.crosstalk.rows.iter().enumerate() {
        if let Some(row) = row {
            for (j, &v) in row.iter().enumerate() {
                xt.mixed_row(&[Field::Int(i), Field::Int(j), Field::Num(v)]);
            }
        }
    }
    report.set("fidelities", result.ops.iter().map(|o| number(o.fidelity)).collect::<Vec<_>>());
    report.set(
        "crosstalk",
        result
            .crosstalk
            .rows
            .iter()
            .map(|r| r.as_ref().map(|r| r.iter().map(|&v| number(v)).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    );
    report.set("systems", models.iter().map(|m| system_json(&m.system)).collect::<Vec<_>>());
    Ok(Output {
        data: ops.finish(),
        extra: Some(xt.finish()),
        report,
    })
}

/// Per-cell states: `on` (each cell at its ON inductance), `off`, or a comma list of
/// `on`, `off` and `on:<L>` entries, one per cell.
pub fn array_spectrum(
    cfg: &Config,
    config_bytes: &[u8],
    states: &str,
    band: Option<(f64, f64)>,
) -> Result<Output, CliError> {
    let mut report = RunReport::new("array-spectrum", config_bytes);
    let array = prepare_array(cfg)?;
    let n = array.len();
    let items: Vec<&str> = match states.trim() {
        "on" => vec!["on"; n],
        "off" => vec!["off"; n],
        list => list.split(',').map(str::trim).collect(),
    };
    if items.len() != n {
        return Err(CliError::invalid(format!("--states: {} entries for {n} cells", items.len())));
    }
    // cells switched ON without an explicit inductance need their crossing
    let needs_models = cfg.dynamics.l_j.is_none() && items.contains(&"on");
    let models = if needs_models { Some(characterise(cfg, &array)?) } else { None };
    let mut jj_states = Vec::with_capacity(n);
    for (i, s) in items.iter().enumerate() {
        jj_states.push(match (*s, &models) {
            ("on", Some(m)) => JjState::On { l_j: m[i].l_on },
            (other, _) => parse_state(other, cfg)?,
        });
    }
    let band = band.unwrap_or(cfg.sweep.array_band);
    let settings = cfg.sweep_settings();
    let trace = adaptive_sweep(&settings.plan(band), |fs| {
        combined_spectrum(&array, &jj_states, fs).map(|t| t.into_iter().map(|p| p.1).collect())
    })?;
    let peaks = find_resonances(&trace, settings.min_depth_db)?;
    report.set("band_hz", json!([number(band.0), number(band.1)]));
    report.set("resonance_count", peaks.len());
    report.set("resonances", peaks_json(&peaks));
    if let (Some(m), true) = (&models, items.iter().all(|s| *s == "on")) {
        let centres = doublet_centres(&peaks, m);
        report.set(
            "doublet_centres_hz",
            centres.iter().map(|c| c.map(number)).collect::<Vec<_>>(),
        );
    }
    report.set("targets_hz", array.targets.iter().map(|&f| number(f)).collect::<Vec<_>>());
    let worst = trace.iter().map(|p| p.1.norm_sqr()).fold(f64::INFINITY, f64::min);
    report.set_num("min_abs_s21_sq", worst);
    Ok(Output {
        data: trace_csv(&trace),
        extra: None,
        report,
    })
}
