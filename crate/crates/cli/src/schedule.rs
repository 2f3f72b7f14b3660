//! Access-schedule files.
//!
//! ```json
//! {"ops": [{"op": "write", "cell": 0, "start": "0 us", "carrier": "auto",
//!           "gate": {"rise": "50 ps", "duration": "auto"}}]}
//! ```
//! `"auto"` carriers use the addressed cell's TCR frequency; `"auto"` gate
//! durations use its swap time.

use qumem_core::array::{AccessKind, AccessOp, AccessSchedule, CellModel, GateTimings, ScheduleSettings};
use qumem_core::constants::TWO_PI;
use serde_json::Value;

use crate::config::Config;
use crate::units::{parse_quantity, Dimension};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct OpSpec {
    pub kind: AccessKind,
    pub cell: usize,
    pub start: f64,
    pub carrier: Option<f64>,
    pub rise: Option<f64>,
    pub duration: Option<f64>,
}

pub fn parse_schedule(text: &str) -> Result<Vec<OpSpec>, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::invalid(format!("schedule is not valid JSON: {e}")))?;
    let mut errors = Vec::new();
    let root = v.as_object();
    if root.is_none() {
        errors.push("schedule: expected a JSON object".to_string());
    }
    for k in root.into_iter().flat_map(|r| r.keys()) {
        if k != "ops" {
            errors.push(format!("schedule.{k}: unknown key"));
        }
    }
    let ops = root.and_then(|r| r.get("ops"));
    let items = match ops {
        None => &[][..],
        Some(Value::Array(a)) => a.as_slice(),
        Some(_) => {
            errors.push("schedule.ops: expected a list".into());
            &[][..]
        }
    };
    let mut out = Vec::new();
    for (k, item) in items.iter().enumerate() {
        let path = format!("schedule.ops[{k}]");
        let Some(o) = item.as_object() else {
            errors.push(format!("{path}: expected an object"));
            continue;
        };
        for key in o.keys() {
            if !["op", "cell", "start", "carrier", "gate"].contains(&key.as_str()) {
                errors.push(format!("{path}.{key}: unknown key"));
            }
        }
        let kind = match o.get("op").and_then(Value::as_str) {
            Some("write") => Some(AccessKind::Write),
            Some("read") => Some(AccessKind::Read),
            _ => {
                errors.push(format!("{path}.op: expected \"write\" or \"read\""));
                None
            }
        };
        let cell = o.get("cell").and_then(Value::as_u64);
        if cell.is_none() {
            errors.push(format!("{path}.cell: expected a cell index"));
        }
        let mut quantity = |key: &str, v: Option<&Value>, dim: Dimension, auto_ok: bool| -> Option<Option<f64>> {
            match v {
                None if auto_ok => Some(None),
                Some(Value::String(s)) if auto_ok && s.trim() == "auto" => Some(None),
                Some(Value::String(s)) => match parse_quantity(s, dim) {
                    Ok(x) => Some(Some(x)),
                    Err(e) => {
                        errors.push(format!("{path}.{key}: {e}"));
                        None
                    }
                },
                _ => {
                    errors.push(format!("{path}.{key}: expected a {dim} such as \"1 {}\"", dim.base_unit()));
                    None
                }
            }
        };
        let start = quantity("start", o.get("start"), Dimension::Time, false).flatten();
        let carrier = quantity("carrier", o.get("carrier"), Dimension::Frequency, true);
        let gate = o.get("gate");
        let (rise, duration) = match gate {
            None => (Some(None), Some(None)),
            Some(Value::Object(g)) => {
                let bad: Vec<&String> = g.keys().filter(|k| *k != "rise" && *k != "duration").collect();
                let r = quantity("gate.rise", g.get("rise"), Dimension::Time, true);
                let d = quantity("gate.duration", g.get("duration"), Dimension::Time, true);
                for b in bad {
                    errors.push(format!("{path}.gate.{b}: unknown key"));
                }
                (r, d)
            }
            Some(_) => {
                errors.push(format!("{path}.gate: expected an object"));
                (None, None)
            }
        };
        if let (Some(kind), Some(cell), Some(start), Some(carrier), Some(rise), Some(duration)) =
            (kind, cell, start, carrier, rise, duration)
        {
            out.push(OpSpec {
                kind,
                cell: cell as usize,
                start,
                carrier,
                rise,
                duration,
            });
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(CliError::Validation(errors))
    }
}

/// Fills in `"auto"` values and the shared drive settings.
pub fn resolve(specs: &[OpSpec], models: &[CellModel], cfg: &Config) -> Result<AccessSchedule, CliError> {
    let d = &cfg.dynamics;
    let mut ops = Vec::with_capacity(specs.len());
    for (k, s) in specs.iter().enumerate() {
        let model = models
            .get(s.cell)
            .ok_or_else(|| CliError::invalid(format!("schedule.ops[{k}].cell: no cell {}", s.cell)))?;
        ops.push(AccessOp {
            kind: s.kind,
            cell_index: s.cell,
            start: s.start,
            rf_carrier: s.carrier.unwrap_or(model.system.omega_a / TWO_PI),
            gate: GateTimings {
                rise: s.rise.unwrap_or(d.gate_rise),
                duration: s.duration,
            },
        });
    }
    Ok(AccessSchedule {
        ops,
        settings: ScheduleSettings {
            dt: d.dt,
            rf_amplitude: d.rf_amplitude,
            rf_duration: d.rf_duration,
            envelope: d.envelope,
            settle: d.settle,
            read_window: d.read_window,
        },
    })
}
