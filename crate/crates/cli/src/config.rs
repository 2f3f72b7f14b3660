//! JSON configuration with mandatory units.
//!
//! Every section and key is optional and falls back to the defaults of
//! [`Config::default`]. Unknown keys, missing units and unphysical values are all
//! collected and reported together.

use std::path::Path;

use qumem_core::calibrate::CalibrationTargets;
use qumem_core::cell::MemoryCell;
use qumem_core::dynamics::{Envelope, ProtocolTimings, DEFAULT_GATE_RISE};
use qumem_core::jjfet::{GateShape, DEFAULT_OFF_INDUCTANCE};
use qumem_core::modemap::SweepSettings;
use qumem_core::twoport::Termination;
use serde_json::{json, Map, Value};

use crate::units::{format_quantity, parse_quantity, Dimension};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    /// When false the cell geometry is used as written.
    pub enabled: bool,
    pub f_sc: f64,
    pub l_anchor: f64,
    pub q_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub targets: Vec<f64>,
    pub tap_spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub band: (f64, f64),
    pub off_band: (f64, f64),
    pub array_band: (f64, f64),
    pub coarse_step: f64,
    pub refine_stages: usize,
    pub min_depth_db: f64,
    pub off_min_depth_db: f64,
    pub z_ref: f64,
    pub l_grid: (f64, f64, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub gate_rise: f64,
    pub settle: f64,
    pub read_window: f64,
    pub rf_duration: f64,
    pub rf_amplitude: f64,
    pub envelope: Envelope,
    /// ON inductance for gate pulses; `None` means the fitted crossing.
    pub l_j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub cell: MemoryCell,
    pub off_inductance: f64,
    pub calibration: CalibrationConfig,
    pub array: ArrayConfig,
    pub sweep: SweepConfig,
    pub dynamics: DynamicsConfig,
}

impl Default for Config {
    fn default() -> Self {
        let s = SweepSettings::default();
        Self {
            cell: MemoryCell::default(),
            off_inductance: DEFAULT_OFF_INDUCTANCE,
            calibration: CalibrationConfig {
                enabled: true,
                f_sc: 6.55e9,
                l_anchor: 220e-12,
                q_c: 2e4,
            },
            array: ArrayConfig {
                targets: vec![6.55e9, 6.65e9, 6.70e9, 6.75e9],
                tap_spacing: 2e-3,
            },
            sweep: SweepConfig {
                band: (5.5e9, 7.5e9),
                off_band: (1e9, 16e9),
                array_band: (6.4e9, 7.0e9),
                coarse_step: s.coarse_step,
                refine_stages: s.refine_stages,
                min_depth_db: s.min_depth_db,
                off_min_depth_db: 1e-5,
                z_ref: s.z_ref,
                l_grid: (10e-12, 500e-12, 64),
            },
            dynamics: DynamicsConfig {
                dt: 20e-12,
                gate_rise: DEFAULT_GATE_RISE,
                settle: 1e-9,
                read_window: 5e-6,
                rf_duration: 3e-6,
                rf_amplitude: 1.0,
                envelope: Envelope::Rect,
                l_j: None,
            },
        }
    }
}

impl Config {
    pub fn targets(&self) -> CalibrationTargets {
        CalibrationTargets::crossing_at(self.calibration.f_sc, self.calibration.l_anchor, self.calibration.q_c)
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            coarse_step: self.sweep.coarse_step,
            refine_stages: self.sweep.refine_stages,
            min_depth_db: self.sweep.min_depth_db,
            z_ref: self.sweep.z_ref,
        }
    }

    pub fn off_sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            min_depth_db: self.sweep.off_min_depth_db,
            ..self.sweep_settings()
        }
    }

    pub fn timings(&self) -> ProtocolTimings {
        ProtocolTimings {
            dt: self.dynamics.dt,
            gate_rise: self.dynamics.gate_rise,
            settle: self.dynamics.settle,
            read_window: self.dynamics.read_window,
        }
    }

    pub fn l_grid(&self) -> Vec<f64> {
        let (lo, hi, n) = self.sweep.l_grid;
        qumem_core::resonance::linspace(lo, hi, n)
    }

    /// Parses and validates a configuration document.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("not valid JSON: {e}")]))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, CliError> {
        let mut w = Walker::default();
        let cfg = w.config(value);
        if w.errors.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Validation(w.errors))
        }
    }

    /// Every value written out in SI base units, so the round trip is exact.
    pub fn to_value(&self) -> Value {
        use Dimension::*;
        let q = format_quantity;
        let c = &self.cell;
        let jj = &c.jj;
        let shape = match jj.gate.shape {
            GateShape::Linear => json!("linear"),
            GateShape::Logistic { steepness } => json!({ "logistic": q(steepness, PerVolt) }),
        };
        let envelope = match self.dynamics.envelope {
            Envelope::Rect => json!("rect"),
            Envelope::Gauss { sigma } => json!({ "gauss": q(sigma, Time) }),
        };
        let band = |b: (f64, f64)| json!([q(b.0, Frequency), q(b.1, Frequency)]);
        json!({
            "cell": {
                "z0": q(c.z0, Resistance),
                "eps_eff": c.eps_eff,
                "c_in": q(c.c_in, Capacitance),
                "tcr_half_len": q(c.tcr_half_len, Length),
                "c_couple": q(c.c_couple, Capacitance),
                "sc_len": q(c.sc_len, Length),
                "sc_termination": match c.sc_termination { Termination::Open => "open", _ => "short" },
                "line_atten": q(c.line_atten, Attenuation),
            },
            "junction": {
                "i_c_max": q(jj.i_c_max, Current),
                "c_j": q(jj.c_j, Capacitance),
                "r_off": resistance_value(jj.r_off),
                "r_sub": resistance_value(jj.r_sub),
                "phi": jj.phi,
                "off_inductance": q(self.off_inductance, Inductance),
                "gate": {
                    "v_pinch": q(jj.gate.v_pinch, Voltage),
                    "v_on": q(jj.gate.v_on, Voltage),
                    "shape": shape,
                },
            },
            "calibration": {
                "enabled": self.calibration.enabled,
                "f_sc": q(self.calibration.f_sc, Frequency),
                "l_anchor": q(self.calibration.l_anchor, Inductance),
                "q_c": self.calibration.q_c,
            },
            "array": {
                "targets": self.array.targets.iter().map(|&f| q(f, Frequency)).collect::<Vec<_>>(),
                "tap_spacing": q(self.array.tap_spacing, Length),
            },
            "sweep": {
                "band": band(self.sweep.band),
                "off_band": band(self.sweep.off_band),
                "array_band": band(self.sweep.array_band),
                "coarse_step": q(self.sweep.coarse_step, Frequency),
                "refine_stages": self.sweep.refine_stages,
                "min_depth_db": self.sweep.min_depth_db,
                "off_min_depth_db": self.sweep.off_min_depth_db,
                "z_ref": q(self.sweep.z_ref, Resistance),
                "l_grid": {
                    "start": q(self.sweep.l_grid.0, Inductance),
                    "stop": q(self.sweep.l_grid.1, Inductance),
                    "points": self.sweep.l_grid.2,
                },
            },
            "dynamics": {
                "dt": q(self.dynamics.dt, Time),
                "gate_rise": q(self.dynamics.gate_rise, Time),
                "settle": q(self.dynamics.settle, Time),
                "read_window": q(self.dynamics.read_window, Time),
                "rf_duration": q(self.dynamics.rf_duration, Time),
                "rf_amplitude": self.dynamics.rf_amplitude,
                "envelope": envelope,
                "l_j": self.dynamics.l_j.map_or(json!("auto"), |l| json!(q(l, Inductance))),
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("config values serialise");
        s.push('\n');
        s
    }
}

fn resistance_value(r: f64) -> Value {
    if r.is_finite() {
        json!(format_quantity(r, Dimension::Resistance))
    } else {
        json!("open")
    }
}

/// Reads and validates the configuration at `path`; returns the raw bytes too, for hashing.
pub fn load_config(path: &Path) -> Result<(Config, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Validation(vec![format!("{}: not UTF-8", path.display())]))?;
    Ok((Config::from_json_str(text)?, bytes))
}

#[derive(Default)]
struct Walker {
    errors: Vec<String>,
}

type Obj = Map<String, Value>;

impl Walker {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    /// Object at `path`, with unknown keys reported. Missing sections are empty.
    fn section<'v>(&mut self, parent: Option<&'v Obj>, path: &str, key: &str, known: &[&str]) -> Option<&'v Obj> {
        let v = parent?.get(key)?;
        let full = join(path, key);
        match v.as_object() {
            Some(o) => {
                self.unknown(o, &full, known);
                Some(o)
            }
            None => {
                self.err(&full, "expected an object");
                None
            }
        }
    }

    fn unknown(&mut self, o: &Obj, path: &str, known: &[&str]) {
        for k in o.keys() {
            if !known.contains(&k.as_str()) {
                self.err(&join(path, k), "unknown key");
            }
        }
    }

    fn quantity(&mut self, o: Option<&Obj>, path: &str, key: &str, dim: Dimension, default: f64) -> f64 {
        match o.and_then(|o| o.get(key)) {
            None => default,
            Some(v) => self.quantity_value(v, &join(path, key), dim).unwrap_or(default),
        }
    }

    fn quantity_value(&mut self, v: &Value, path: &str, dim: Dimension) -> Option<f64> {
        match v {
            Value::String(s) => match parse_quantity(s, dim) {
                Ok(x) => Some(x),
                Err(e) => {
                    self.err(path, e);
                    None
                }
            },
            Value::Number(n) => {
                self.err(path, format!("missing unit: write \"{n} {}\" or similar", dim.base_unit()));
                None
            }
            _ => {
                self.err(path, format!("expected a {dim} string such as \"1 {}\"", dim.base_unit()));
                None
            }
        }
    }

    fn number(&mut self, o: Option<&Obj>, path: &str, key: &str, default: f64) -> f64 {
        match o.and_then(|o| o.get(key)) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) => x,
                None => {
                    self.err(&join(path, key), "expected a number");
                    default
                }
            },
        }
    }

    fn count(&mut self, o: Option<&Obj>, path: &str, key: &str, default: usize) -> usize {
        match o.and_then(|o| o.get(key)) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(x) => x as usize,
                None => {
                    self.err(&join(path, key), "expected a non-negative integer");
                    default
                }
            },
        }
    }

    fn boolean(&mut self, o: Option<&Obj>, path: &str, key: &str, default: bool) -> bool {
        match o.and_then(|o| o.get(key)) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.err(&join(path, key), "expected true or false");
                default
            }
        }
    }

    /// A resistance that may also be `"open"` (infinite).
    fn resistance(&mut self, o: Option<&Obj>, path: &str, key: &str, default: f64) -> f64 {
        match o.and_then(|o| o.get(key)) {
            Some(Value::String(s)) if s.trim() == "open" => f64::INFINITY,
            _ => self.quantity(o, path, key, Dimension::Resistance, default),
        }
    }

    fn band(&mut self, o: Option<&Obj>, path: &str, key: &str, default: (f64, f64)) -> (f64, f64) {
        let Some(v) = o.and_then(|o| o.get(key)) else {
            return default;
        };
        let full = join(path, key);
        match v.as_array().map(Vec::as_slice) {
            Some([lo, hi]) => {
                let lo = self.quantity_value(lo, &format!("{full}[0]"), Dimension::Frequency);
                let hi = self.quantity_value(hi, &format!("{full}[1]"), Dimension::Frequency);
                match (lo, hi) {
                    (Some(lo), Some(hi)) => {
                        if !(lo > 0.0 && hi > lo) {
                            self.err(&full, "need 0 < low < high");
                        }
                        (lo, hi)
                    }
                    _ => default,
                }
            }
            _ => {
                self.err(&full, "expected [low, high]");
                default
            }
        }
    }

    fn positive(&mut self, path: &str, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.err(&join(path, key), format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, path: &str, key: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.err(&join(path, key), format!("must be >= 0, got {v}"));
        }
    }

    fn config(&mut self, root: &Value) -> Config {
        let d = Config::default();
        let Some(root) = root.as_object() else {
            self.err("$", "expected a JSON object");
            return d;
        };
        self.unknown(root, "", &["cell", "junction", "calibration", "array", "sweep", "dynamics"]);
        let root = Some(root);
        let mut cfg = d.clone();
        self.cell(root, &mut cfg);
        self.junction(root, &mut cfg);
        self.calibration(root, &mut cfg);
        self.array(root, &mut cfg);
        self.sweep(root, &mut cfg);
        self.dynamics(root, &mut cfg);
        if self.errors.is_empty() {
            if let Err(e) = cfg.cell.validate() {
                self.err("cell", e);
            }
        }
        cfg
    }

    fn cell(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        use Dimension::*;
        let p = "cell";
        let o = self.section(
            root,
            "",
            p,
            &["z0", "eps_eff", "c_in", "tcr_half_len", "c_couple", "sc_len", "sc_termination", "line_atten"],
        );
        let c = &mut cfg.cell;
        c.z0 = self.quantity(o, p, "z0", Resistance, c.z0);
        self.positive(p, "z0", c.z0);
        c.eps_eff = self.number(o, p, "eps_eff", c.eps_eff);
        if !(c.eps_eff >= 1.0 && c.eps_eff.is_finite()) {
            self.err("cell.eps_eff", format!("must be >= 1, got {}", c.eps_eff));
        }
        c.c_in = self.quantity(o, p, "c_in", Capacitance, c.c_in);
        self.positive(p, "c_in", c.c_in);
        c.tcr_half_len = self.quantity(o, p, "tcr_half_len", Length, c.tcr_half_len);
        self.positive(p, "tcr_half_len", c.tcr_half_len);
        c.c_couple = self.quantity(o, p, "c_couple", Capacitance, c.c_couple);
        self.positive(p, "c_couple", c.c_couple);
        c.sc_len = self.quantity(o, p, "sc_len", Length, c.sc_len);
        self.positive(p, "sc_len", c.sc_len);
        c.line_atten = self.quantity(o, p, "line_atten", Attenuation, c.line_atten);
        self.non_negative(p, "line_atten", c.line_atten);
        if let Some(v) = o.and_then(|o| o.get("sc_termination")) {
            match v.as_str() {
                Some("short") => c.sc_termination = Termination::Short,
                Some("open") => c.sc_termination = Termination::Open,
                _ => self.err("cell.sc_termination", "expected \"short\" or \"open\""),
            }
        }
    }

    fn junction(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        use Dimension::*;
        let p = "junction";
        let o = self.section(
            root,
            "",
            p,
            &["i_c_max", "c_j", "r_off", "r_sub", "phi", "off_inductance", "gate"],
        );
        let jj = &mut cfg.cell.jj;
        jj.i_c_max = self.quantity(o, p, "i_c_max", Current, jj.i_c_max);
        self.positive(p, "i_c_max", jj.i_c_max);
        jj.c_j = self.quantity(o, p, "c_j", Capacitance, jj.c_j);
        self.non_negative(p, "c_j", jj.c_j);
        jj.r_off = self.resistance(o, p, "r_off", jj.r_off);
        if !(jj.r_off > 0.0) {
            self.err("junction.r_off", format!("must be positive, got {}", jj.r_off));
        }
        jj.r_sub = self.resistance(o, p, "r_sub", jj.r_sub);
        if !(jj.r_sub > 0.0) {
            self.err("junction.r_sub", format!("must be positive, got {}", jj.r_sub));
        }
        jj.phi = self.number(o, p, "phi", jj.phi);
        if !(jj.phi.abs() < std::f64::consts::FRAC_PI_2) {
            self.err("junction.phi", "must lie strictly between -pi/2 and pi/2");
        }
        cfg.off_inductance = self.quantity(o, p, "off_inductance", Inductance, cfg.off_inductance);
        self.positive(p, "off_inductance", cfg.off_inductance);

        let gp = "junction.gate";
        let g = self.section(o, p, "gate", &["v_pinch", "v_on", "shape"]);
        let gate = &mut jj.gate;
        gate.v_pinch = self.quantity(g, gp, "v_pinch", Voltage, gate.v_pinch);
        gate.v_on = self.quantity(g, gp, "v_on", Voltage, gate.v_on);
        if !(gate.v_pinch < gate.v_on) {
            self.err(gp, "need v_pinch < v_on");
        }
        if let Some(v) = g.and_then(|g| g.get("shape")) {
            let sp = "junction.gate.shape";
            match v {
                Value::String(s) if s == "linear" => gate.shape = GateShape::Linear,
                Value::Object(m) => {
                    self.unknown(m, sp, &["logistic"]);
                    match m.get("logistic") {
                        Some(k) => {
                            if let Some(steepness) = self.quantity_value(k, &join(sp, "logistic"), PerVolt) {
                                self.positive(sp, "logistic", steepness);
                                gate.shape = GateShape::Logistic { steepness };
                            }
                        }
                        None => self.err(sp, "expected {\"logistic\": \"<k> /V\"}"),
                    }
                }
                _ => self.err(sp, "expected \"linear\" or {\"logistic\": \"<k> /V\"}"),
            }
        }
    }

    fn calibration(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        use Dimension::*;
        let p = "calibration";
        let o = self.section(root, "", p, &["enabled", "f_sc", "l_anchor", "q_c"]);
        let c = &mut cfg.calibration;
        c.enabled = self.boolean(o, p, "enabled", c.enabled);
        c.f_sc = self.quantity(o, p, "f_sc", Frequency, c.f_sc);
        self.positive(p, "f_sc", c.f_sc);
        c.l_anchor = self.quantity(o, p, "l_anchor", Inductance, c.l_anchor);
        self.positive(p, "l_anchor", c.l_anchor);
        c.q_c = self.number(o, p, "q_c", c.q_c);
        self.positive(p, "q_c", c.q_c);
    }

    fn array(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        let p = "array";
        let o = self.section(root, "", p, &["targets", "tap_spacing"]);
        let a = &mut cfg.array;
        if let Some(v) = o.and_then(|o| o.get("targets")) {
            match v.as_array() {
                Some(items) if !items.is_empty() => {
                    let parsed: Vec<Option<f64>> = items
                        .iter()
                        .enumerate()
                        .map(|(k, it)| self.quantity_value(it, &format!("array.targets[{k}]"), Dimension::Frequency))
                        .collect();
                    if let Some(ts) = parsed.into_iter().collect::<Option<Vec<_>>>() {
                        if ts.windows(2).any(|w| w[1] <= w[0]) {
                            self.err("array.targets", "must be strictly increasing");
                        }
                        a.targets = ts;
                    }
                }
                _ => self.err("array.targets", "expected a non-empty list of frequencies"),
            }
        }
        a.tap_spacing = self.quantity(o, p, "tap_spacing", Dimension::Length, a.tap_spacing);
        self.non_negative(p, "tap_spacing", a.tap_spacing);
    }

    fn sweep(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        use Dimension::*;
        let p = "sweep";
        let o = self.section(
            root,
            "",
            p,
            &[
                "band",
                "off_band",
                "array_band",
                "coarse_step",
                "refine_stages",
                "min_depth_db",
                "off_min_depth_db",
                "z_ref",
                "l_grid",
            ],
        );
        let s = &mut cfg.sweep;
        s.band = self.band(o, p, "band", s.band);
        s.off_band = self.band(o, p, "off_band", s.off_band);
        s.array_band = self.band(o, p, "array_band", s.array_band);
        s.coarse_step = self.quantity(o, p, "coarse_step", Frequency, s.coarse_step);
        self.positive(p, "coarse_step", s.coarse_step);
        s.refine_stages = self.count(o, p, "refine_stages", s.refine_stages);
        s.min_depth_db = self.number(o, p, "min_depth_db", s.min_depth_db);
        self.non_negative(p, "min_depth_db", s.min_depth_db);
        s.off_min_depth_db = self.number(o, p, "off_min_depth_db", s.off_min_depth_db);
        self.non_negative(p, "off_min_depth_db", s.off_min_depth_db);
        s.z_ref = self.quantity(o, p, "z_ref", Resistance, s.z_ref);
        self.positive(p, "z_ref", s.z_ref);

        let lp = "sweep.l_grid";
        let g = self.section(o, p, "l_grid", &["start", "stop", "points"]);
        let (lo, hi, n) = s.l_grid;
        let lo = self.quantity(g, lp, "start", Inductance, lo);
        let hi = self.quantity(g, lp, "stop", Inductance, hi);
        let n = self.count(g, lp, "points", n);
        if !(lo > 0.0 && hi > lo) {
            self.err(lp, "need 0 < start < stop");
        }
        if n < 8 {
            self.err(&join(lp, "points"), format!("need at least 8 points, got {n}"));
        }
        s.l_grid = (lo, hi, n);
    }

    fn dynamics(&mut self, root: Option<&Obj>, cfg: &mut Config) {
        use Dimension::*;
        let p = "dynamics";
        let o = self.section(
            root,
            "",
            p,
            &["dt", "gate_rise", "settle", "read_window", "rf_duration", "rf_amplitude", "envelope", "l_j"],
        );
        let d = &mut cfg.dynamics;
        d.dt = self.quantity(o, p, "dt", Time, d.dt);
        self.positive(p, "dt", d.dt);
        d.gate_rise = self.quantity(o, p, "gate_rise", Time, d.gate_rise);
        self.non_negative(p, "gate_rise", d.gate_rise);
        d.settle = self.quantity(o, p, "settle", Time, d.settle);
        self.non_negative(p, "settle", d.settle);
        d.read_window = self.quantity(o, p, "read_window", Time, d.read_window);
        self.non_negative(p, "read_window", d.read_window);
        d.rf_duration = self.quantity(o, p, "rf_duration", Time, d.rf_duration);
        self.positive(p, "rf_duration", d.rf_duration);
        d.rf_amplitude = self.number(o, p, "rf_amplitude", d.rf_amplitude);
        if !d.rf_amplitude.is_finite() {
            self.err("dynamics.rf_amplitude", "must be finite");
        }
        if let Some(v) = o.and_then(|o| o.get("envelope")) {
            let ep = "dynamics.envelope";
            match v {
                Value::String(s) if s == "rect" => d.envelope = Envelope::Rect,
                Value::Object(m) => {
                    self.unknown(m, ep, &["gauss"]);
                    match m.get("gauss") {
                        Some(s) => {
                            if let Some(sigma) = self.quantity_value(s, &join(ep, "gauss"), Time) {
                                self.positive(ep, "gauss", sigma);
                                d.envelope = Envelope::Gauss { sigma };
                            }
                        }
                        None => self.err(ep, "expected {\"gauss\": \"<sigma>\"}"),
                    }
                }
                _ => self.err(ep, "expected \"rect\" or {\"gauss\": \"<sigma>\"}"),
            }
        }
        match o.and_then(|o| o.get("l_j")) {
            None => {}
            Some(Value::String(s)) if s.trim() == "auto" => d.l_j = None,
            Some(v) => {
                if let Some(l) = self.quantity_value(v, "dynamics.l_j", Inductance) {
                    self.positive(p, "l_j", l);
                    d.l_j = Some(l);
                }
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}
