//! End-to-end acceptance checks against the shipped configuration.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use qumem_cli::commands::{self, prepare_array, prepare_cell, reduced_model};
use qumem_cli::config::Config;
use qumem_cli::SEED_CONFIG;
use qumem_core::array::{lorentzian_bound, run_schedule, AccessKind, AccessOp, AccessSchedule, GateTimings, ScheduleSettings};
use qumem_core::cell::isolated_sc_frequency;
use qumem_core::constants::TWO_PI;
use qumem_core::dynamics::{
    evolve, max_step, swap_duration, write_protocol, write_then_read, CoupledModeSystem, GateLevel, PulseSequence,
    RfPulse, Trajectory,
};
use qumem_core::jjfet::{critical_current_for_inductance, josephson_inductance};
use qumem_core::modemap::{fit_avoided_crossing, ModeMap};
use qumem_core::resonance::{adaptive_sweep, find_resonances, SweepPlan};
use qumem_core::twoport::{chain_abcd, element_abcd, input_impedance, to_sparams, Element, Impedance, Termination};
use qumem_core::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seed() -> Config {
    Config::from_json_str(SEED_CONFIG).expect("shipped configuration parses")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---- 1 -------------------------------------------------------------------

fn junction_inductance() -> Check {
    // h / 2e from the exact SI constants
    let phi0 = 6.626_070_15e-34 / (2.0 * 1.602_176_634e-19);
    let oracle = phi0 / (2.0 * std::f64::consts::PI * 1e-6);
    let l = josephson_inductance(1e-6, 0.0).map_err(|e| e.to_string())?;
    ensure((l / 329.11e-12 - 1.0).abs() <= 1e-4, || format!("L(1 uA) = {l:e}"))?;
    ensure((l / oracle - 1.0).abs() <= 1e-12, || format!("L(1 uA) = {l:e}, oracle {oracle:e}"))?;
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let l_j = rng.random_range(10e-12..500e-12);
        let back = josephson_inductance(critical_current_for_inductance(l_j).map_err(|e| e.to_string())?, 0.0)
            .map_err(|e| e.to_string())?;
        worst = worst.max((back / l_j - 1.0).abs());
    }
    ensure(worst <= 1e-12, || format!("round trip error {worst:e}"))?;
    Ok(format!("L(1 uA) = {:.4} pH, round trip {worst:.1e}", l * 1e12))
}

// ---- 2 -------------------------------------------------------------------

fn calibration() -> Check {
    let cfg = seed();
    let array = prepare_array(&cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (cell, &target) in array.cells.iter().zip(&array.targets) {
        let f = isolated_sc_frequency(cell).map_err(|e| e.to_string())?;
        worst = worst.max((f - target).abs());
    }
    ensure(array.len() == 4, || format!("{} cells", array.len()))?;
    ensure(worst < 1e6, || format!("worst SC offset {worst:.3e} Hz"))?;
    Ok(format!("4 storage cavities, worst offset {worst:.2e} Hz"))
}

// ---- 3 -------------------------------------------------------------------

fn anticrossing() -> Check {
    let cfg = seed();
    let t = Instant::now();
    let out = commands::modemap(&cfg, SEED_CONFIG.as_bytes(), None).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let s = &out.report.summary;
    let g = num(&s["g_hz"]);
    let w = (num(&s["window_h"][0]), num(&s["window_h"][1]));
    ensure(cfg.sweep.l_grid.2 >= 60, || "fewer than 60 grid points".into())?;
    ensure(s["unique_interior_minimum"] == Value::Bool(true), || "splitting minimum not unique".into())?;
    ensure(w.0 <= 250e-12 && w.1 >= 175e-12, || format!("window {w:?} misses [175, 250] pH"))?;
    ensure((100e6..=500e6).contains(&g), || format!("g = {g:e} Hz"))?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "g = {:.1} MHz, crossing {:.1} pH, window [{:.0}, {:.0}] pH, {secs:.2} s",
        g / 1e6,
        num(&s["l_cross_h"]) * 1e12,
        w.0 * 1e12,
        w.1 * 1e12
    ))
}

// ---- 4 -------------------------------------------------------------------

fn fit_oracles() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst_g = 0.0f64;
    for _ in 0..20 {
        let g = rng.random_range(5e7..4e8);
        let fb = rng.random_range(6.4e9..6.8e9);
        let l_cross = rng.random_range(150e-12..300e-12);
        let slope = rng.random_range(2e18..6e18);
        let curve = rng.random_range(0.0..4e27);
        // exact hybridisation of a constant branch with a quadratic one
        let fa = |l: f64| fb - slope * (l - l_cross) + curve * (l - l_cross) * (l - l_cross);
        let map = ModeMap::from_rows((0..64).map(|k| {
            let l = 10e-12 + 490e-12 * k as f64 / 63.0;
            let (m, d) = (0.5 * (fa(l) + fb), 0.5 * (fa(l) - fb));
            let r = (d * d + g * g).sqrt();
            (l, m - r, m + r)
        }));
        let fit = fit_avoided_crossing(&map).map_err(|e| e.to_string())?;
        worst_g = worst_g.max((fit.g / g - 1.0).abs());
    }
    ensure(worst_g < 0.01, || format!("g error {worst_g:.2e}"))?;

    let (mut worst_f, mut worst_q) = (0.0f64, 0.0f64);
    for k in 0..31 {
        let ql = 10f64.powf(3.0 + 3.0 * k as f64 / 30.0);
        let f0 = rng.random_range(6.0e9..7.0e9);
        let qc = ql / rng.random_range(0.1..0.9);
        let model = |f: f64| c(1.0, 0.0) - (ql / qc) / c(1.0, 2.0 * ql * (f - f0) / f0);
        let trace = adaptive_sweep(&SweepPlan::new(5.9e9, 7.1e9), |fs: &[f64]| Ok(fs.iter().map(|&f| model(f)).collect()))
            .map_err(|e| e.to_string())?;
        let peaks = find_resonances(&trace, 0.1).map_err(|e| e.to_string())?;
        ensure(peaks.len() == 1, || format!("Q = {ql:.0}: {} dips", peaks.len()))?;
        worst_f = worst_f.max((peaks[0].f0 / f0 - 1.0).abs());
        worst_q = worst_q.max((peaks[0].q_loaded / ql - 1.0).abs());
    }
    ensure(worst_f < 1e-4 && worst_q < 1e-3, || format!("f0 error {worst_f:.1e}, Q error {worst_q:.1e}"))?;
    Ok(format!("g error {worst_g:.1e} (20 cases); f0 {worst_f:.1e}, Q {worst_q:.1e} over Q 1e3..1e6"))
}

// ---- 5 -------------------------------------------------------------------

fn off_state() -> Check {
    let cfg = seed();
    let cell = prepare_cell(&cfg).map_err(|e| e.to_string())?;
    let out = commands::spectrum(&cfg, SEED_CONFIG.as_bytes(), cell.jj.off_state(), Some((1e9, 16e9)))
        .map_err(|e| e.to_string())?;
    let near: Vec<f64> = out.report.summary["resonances"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|p| num(&p["f0_hz"]))
        .filter(|f| (f - 13e9).abs() <= 1.5e9)
        .collect();
    ensure(near.len() == 2, || format!("{} resonances within 13 +- 1.5 GHz: {near:?}", near.len()))?;

    let (system, _, _) = reduced_model(&cfg).map_err(|e| e.to_string())?;
    let rf = RfPulse {
        carrier: system.omega_a / TWO_PI,
        amplitude: cfg.dynamics.rf_amplitude,
        start: 0.0,
        duration: cfg.dynamics.rf_duration,
        envelope: cfg.dynamics.envelope,
    };
    let w = write_protocol(&system, &rf, GateLevel::Off, &cfg.timings()).map_err(|e| e.to_string())?;
    ensure(w.fidelity <= 1e-4, || format!("gate-OFF write fidelity {:.2e}", w.fidelity))?;
    Ok(format!(
        "OFF modes at {:.3} and {:.3} GHz; gate-OFF write fidelity {:.1e}",
        near[0] / 1e9,
        near[1] / 1e9,
        w.fidelity
    ))
}

// ---- 6 -------------------------------------------------------------------

fn lossless_pair(g: f64, detuning: f64) -> CoupledModeSystem {
    let w = TWO_PI * 6.55e9;
    CoupledModeSystem {
        omega_a: w + detuning,
        g_off: g,
        ..CoupledModeSystem::resonant(w, g, 0.0)
    }
}

fn rabi(g: f64, dt: f64) -> Result<Trajectory, String> {
    let t = swap_duration(g).map_err(|e| e.to_string())?;
    evolve(&lossless_pair(g, 0.0), &PulseSequence::default(), (c(1.0, 0.0), c(0.0, 0.0)), (0.0, t), dt)
        .map_err(|e| e.to_string())
}

fn sin2_error(g: f64, tr: &Trajectory) -> f64 {
    tr.times
        .iter()
        .zip(&tr.e_b)
        .map(|(t, e)| (e - (g * t).sin().powi(2)).abs())
        .fold(0.0, f64::max)
}

fn swap_dynamics() -> Check {
    let g = TWO_PI * 300e6;
    let guard = max_step(&lossless_pair(g, 0.0), &PulseSequence::default());
    // the configured step must respect the guard; the guard itself is only a ceiling
    let dt = seed().dynamics.dt;
    ensure(dt <= guard, || format!("configured dt {dt:e} exceeds the guard {guard:e}"))?;
    let tr = rabi(g, dt)?;
    let err = sin2_error(g, &tr);
    let full = *tr.e_b.last().unwrap_or(&0.0);
    let at_guard = sin2_error(g, &rabi(g, guard)?);
    let order = (at_guard / sin2_error(g, &rabi(g, guard / 2.0)?)).log2();

    let s = lossless_pair(TWO_PI * 200e6, TWO_PI * 50e6);
    let h = max_step(&s, &PulseSequence::default()) / 20.0;
    let long = evolve(&s, &PulseSequence::default(), (c(1.0, 0.0), c(0.0, 0.0)), (0.0, 1e4 * h), h)
        .map_err(|e| e.to_string())?;
    let drift = long
        .e_a
        .iter()
        .zip(&long.e_b)
        .map(|(a, b)| (a + b - 1.0).abs())
        .fold(0.0, f64::max);

    let detail = format!(
        "sin^2 error {err:.1e} at dt {:.0} ps ({at_guard:.1e} at the {:.1} ps guard), |b|^2 = {full:.7} at pi/2g, order {order:.2}, drift {drift:.1e} over {} steps",
        dt * 1e12,
        guard * 1e12,
        long.len() - 1
    );
    ensure(err < 1e-6, || detail.clone())?;
    ensure(full >= 0.999, || detail.clone())?;
    ensure((3.5..=4.5).contains(&order), || detail.clone())?;
    ensure(drift < 1e-9 && long.len() > 10_000, || detail.clone())?;
    Ok(detail)
}

// ---- 7 -------------------------------------------------------------------

fn bits(tr: &Trajectory) -> Vec<u64> {
    let mut v: Vec<u64> = tr.times.iter().map(|x| x.to_bits()).collect();
    for (a, b) in tr.a.iter().zip(&tr.b) {
        v.extend([a.re, a.im, b.re, b.im].map(f64::to_bits));
    }
    v
}

fn protocol() -> Check {
    let cfg = seed();
    let (system, l_on, _) = reduced_model(&cfg).map_err(|e| e.to_string())?;
    let internal = system.kappa_int_a + system.gamma_b;
    ensure(system.kappa_ext > 10.0 * internal, || {
        format!("kappa_ext {:.3e} vs internal {internal:.3e}", system.kappa_ext)
    })?;
    let lossless = CoupledModeSystem {
        kappa_int_a: 0.0,
        gamma_b: 0.0,
        ..system
    };
    let rf = RfPulse {
        carrier: system.omega_a / TWO_PI,
        amplitude: cfg.dynamics.rf_amplitude,
        start: 0.0,
        duration: cfg.dynamics.rf_duration,
        envelope: cfg.dynamics.envelope,
    };
    let gate = GateLevel::On { l_j: l_on };
    let timings = cfg.timings();
    let w1 = write_protocol(&lossless, &rf, gate, &timings).map_err(|e| e.to_string())?;
    let w2 = write_protocol(&lossless, &rf, gate, &timings).map_err(|e| e.to_string())?;
    ensure(w1.fidelity >= 0.99, || format!("lossless write fidelity {:.5}", w1.fidelity))?;
    ensure(bits(&w1.trajectory) == bits(&w2.trajectory), || "write runs differ".into())?;

    let r1 = write_then_read(&system, &rf, gate, &timings, 0.0).map_err(|e| e.to_string())?;
    let r2 = write_then_read(&system, &rf, gate, &timings, 0.0).map_err(|e| e.to_string())?;
    ensure(r1.recovered_fraction >= 0.95, || format!("recovered {:.4}", r1.recovered_fraction))?;
    let same = [
        (r1.write_fidelity, r2.write_fidelity),
        (r1.stored, r2.stored),
        (r1.recovered_fraction, r2.recovered_fraction),
        (r1.round_trip, r2.round_trip),
    ]
    .iter()
    .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(same, || "write-then-read runs differ".into())?;
    Ok(format!(
        "lossless write {:.5}; write-then-read recovers {:.4} (round trip {:.4}); repeats bit-identical",
        w1.fidelity, r1.recovered_fraction, r1.round_trip
    ))
}

// ---- 8 -------------------------------------------------------------------

fn array() -> Check {
    let cfg = seed();
    let bytes = SEED_CONFIG.as_bytes();
    let spec = commands::array_spectrum(&cfg, bytes, "on", None).map_err(|e| e.to_string())?;
    let s = &spec.report.summary;
    let dips = s["resonance_count"].as_u64().unwrap_or(0);
    ensure(dips >= 4, || format!("{dips} dips"))?;
    let centres: Vec<f64> = s["doublet_centres_hz"].as_array().into_iter().flatten().map(num).collect();
    let worst = centres
        .iter()
        .zip(&cfg.array.targets)
        .map(|(c, t)| (c - t).abs())
        .fold(if centres.len() == cfg.array.targets.len() { 0.0 } else { f64::NAN }, f64::max);
    ensure(worst <= 5e6, || format!("doublet centres {centres:?}"))?;

    let array = prepare_array(&cfg).map_err(|e| e.to_string())?;
    let models = commands::characterise(&cfg, &array).map_err(|e| e.to_string())?;
    let ops: Vec<AccessOp> = models
        .iter()
        .enumerate()
        .map(|(i, m)| AccessOp {
            kind: AccessKind::Write,
            cell_index: i,
            start: 0.0,
            rf_carrier: m.system.omega_a / TWO_PI,
            gate: GateTimings::default(),
        })
        .collect();
    let settings = ScheduleSettings {
        dt: cfg.dynamics.dt,
        rf_amplitude: cfg.dynamics.rf_amplitude,
        rf_duration: cfg.dynamics.rf_duration,
        envelope: cfg.dynamics.envelope,
        settle: cfg.dynamics.settle,
        read_window: cfg.dynamics.read_window,
    };
    let schedule = AccessSchedule { ops, settings };
    let report = run_schedule(&array, &models, &schedule).map_err(|e| e.to_string())?;
    let mut worst_ratio = 0.0f64;
    for (i, op) in schedule.ops.iter().enumerate() {
        let carrier = TWO_PI * op.rf_carrier;
        for (j, m) in models.iter().enumerate().filter(|&(j, _)| j != i) {
            let x = report.crosstalk.get(i, j).unwrap_or(f64::NAN);
            let bound = lorentzian_bound(m.system.kappa_a(), m.system.omega_a - carrier);
            worst_ratio = worst_ratio.max(x / bound);
            ensure(x <= 1.5 * bound, || format!("crosstalk {i}->{j} = {x:.2e} > 1.5 x {bound:.2e}"))?;
        }
    }
    Ok(format!(
        "{dips} dips, doublet centres within {:.2} MHz of targets; write crosstalk <= {worst_ratio:.2} x Lorentzian",
        worst / 1e6
    ))
}

// ---- 9 -------------------------------------------------------------------

fn lossless_element(rng: &mut StdRng) -> Element {
    match rng.random_range(0..4) {
        0 => Element::line(rng.random_range(20.0..120.0), rng.random_range(1.0..12.0), rng.random_range(1e-4..2e-2)),
        1 => Element::SeriesCapacitor(rng.random_range(1e-16..1e-12)),
        2 => Element::SeriesImpedance(c(0.0, rng.random_range(-500.0..500.0))),
        _ => Element::ShuntAdmittance(c(0.0, rng.random_range(-0.05..0.05))),
    }
}

fn passive_element(rng: &mut StdRng) -> Element {
    match rng.random_range(0..3) {
        0 => lossless_element(rng),
        1 => Element::LineSection {
            z0: rng.random_range(20.0..120.0),
            eps_eff: rng.random_range(1.0..12.0),
            length: rng.random_range(1e-4..2e-2),
            atten: rng.random_range(0.0..5.0),
        },
        _ => Element::SeriesImpedance(c(rng.random_range(0.0..200.0), rng.random_range(-500.0..500.0))),
    }
}

fn chain(rng: &mut StdRng, lossless: bool) -> Vec<Element> {
    let n = rng.random_range(1..8);
    (0..n)
        .map(|_| if lossless { lossless_element(rng) } else { passive_element(rng) })
        .collect()
}

fn twoport_algebra() -> Check {
    const CASES: usize = 1000;
    let mut rng = StdRng::seed_from_u64(9);
    let e = |e: qumem_core::Error| e.to_string();
    let (mut recip, mut unit, mut assoc) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..CASES {
        let f = rng.random_range(1e9..16e9);
        let s = to_sparams(&chain_abcd(&chain(&mut rng, false), f).map_err(e)?, 50.0).map_err(e)?;
        recip = recip.max((s.s21 - s.s12).norm());

        let z_ref = rng.random_range(25.0..100.0);
        let s = to_sparams(&chain_abcd(&chain(&mut rng, true), f).map_err(e)?, z_ref).map_err(e)?;
        let m = [[s.s11, s.s12], [s.s21, s.s22]];
        for i in 0..2 {
            for j in 0..2 {
                let v: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                unit = unit.max((v - if i == j { 1.0 } else { 0.0 }).norm());
            }
        }

        let [x, y, z] = [0; 3].map(|_| passive_element(&mut rng));
        let [x, y, z] = [x, y, z].map(|el| element_abcd(&el, f).unwrap());
        let (l, r) = (x.then(&y).then(&z), x.then(&y.then(&z)));
        let scale = [l.a, l.b, l.c, l.d].iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (p, q) in [(l.a, r.a), (l.b, r.b), (l.c, r.c), (l.d, r.d)] {
            assoc = assoc.max((p - q).norm() / scale);
        }
    }
    let mut misplaced = 0;
    for _ in 0..CASES {
        let (z0, eps, f0): (f64, f64, f64) = (rng.random_range(20.0..120.0), rng.random_range(1.0..12.0), rng.random_range(1e9..16e9));
        let len = 299_792_458.0 / eps.sqrt() / (4.0 * f0);
        let stub = [Element::line(z0, eps, len)];
        let b = |f: f64| match input_impedance(&stub, Termination::Short, f).unwrap() {
            Impedance::Infinite => 0.0,
            Impedance::Finite(z) => (1.0 / z).im,
        };
        if b(f0 - 1e3) * b(f0 + 1e3) > 0.0 {
            misplaced += 1;
        }
    }
    let detail = format!(
        "{CASES} cases each: reciprocity {recip:.1e}, unitarity {unit:.1e}, associativity {assoc:.1e}, stub poles off by > 1 kHz: {misplaced}"
    );
    ensure(recip <= 1e-12 && unit <= 1e-9 && assoc <= 1e-12 && misplaced == 0, || detail.clone())?;
    Ok(detail)
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("junction inductance", junction_inductance),
        ("calibration", calibration),
        ("mode map / anti-crossing", anticrossing),
        ("fit oracles", fit_oracles),
        ("OFF state", off_state),
        ("SWAP dynamics", swap_dynamics),
        ("end-to-end protocol", protocol),
        ("array", array),
        ("two-port algebra", twoport_algebra),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = run();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.2} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.2} s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
