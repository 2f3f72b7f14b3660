use std::sync::OnceLock;

use qumem_core::calibrate::{calibrate_geometry, CalibrationTargets};
use qumem_core::cell::MemoryCell;
use qumem_core::constants::TWO_PI;
use qumem_core::dynamics::{extract_coupled_mode_params, write_protocol, Envelope, GateLevel, ProtocolTimings, RfPulse};
use qumem_core::modemap::{fit_avoided_crossing, mode_map, CrossingFit, ModeMap, SweepSettings};
use qumem_core::offstate::{off_settings, off_state_spectrum, peaks_near, OFF_BAND};
use qumem_core::resonance::linspace;

const BAND: (f64, f64) = (5.5e9, 7.5e9);

struct Anchored {
    cell: MemoryCell,
    map: ModeMap,
    fit: CrossingFit,
}

fn build(seed: MemoryCell) -> Anchored {
    let cell = calibrate_geometry(&CalibrationTargets::crossing_at(6.55e9, 220e-12, 2e4), &seed, 50.0).unwrap();
    let map = mode_map(&cell, &linspace(10e-12, 500e-12, 64), BAND, &SweepSettings::default()).unwrap();
    let fit = fit_avoided_crossing(&map).unwrap();
    Anchored { cell, map, fit }
}

fn anchored() -> &'static Anchored {
    static A: OnceLock<Anchored> = OnceLock::new();
    A.get_or_init(|| build(MemoryCell::default()))
}

#[test]
fn anticrossing_window_and_coupling() {
    let a = anchored();
    assert!(a.map.flagged().is_empty());
    let (_, unique) = a.map.splitting_minimum().unwrap();
    assert!(unique);
    assert!(a.fit.window.0 < 250e-12 && a.fit.window.1 > 175e-12, "{:?}", a.fit.window);
    assert!((1e8..=5e8).contains(&a.fit.g), "{}", a.fit.g);
    assert!((a.fit.l_cross - 220e-12).abs() < 20e-12);
}

#[test]
fn off_state_splits_into_two_half_wave_modes() {
    let a = anchored();
    let peaks = off_state_spectrum(&a.cell, OFF_BAND, &off_settings(50.0)).unwrap();
    assert_eq!(peaks_near(&peaks, 13e9, 1.5e9).len(), 2, "{peaks:?}");
}

#[test]
fn reduced_model_is_resonant_at_the_crossing() {
    let a = anchored();
    let s = extract_coupled_mode_params(&a.cell, a.fit.l_cross, &a.map, &a.fit, BAND, &SweepSettings::default()).unwrap();
    assert!((s.omega_a - s.omega_b).abs() / s.omega_b < 1e-9);
    assert!(s.kappa_ext > 10.0 * (s.kappa_int_a + s.gamma_b));
    assert!(s.g_off > 0.0 && s.g_off < 1e-3 * s.g_on);
    // TCR linewidth follows the calibrated coupling quality factor
    assert!((s.kappa_ext / (TWO_PI * 6.55e9 / 2e4) - 1.0).abs() < 0.05, "{s:?}");
}

#[test]
fn lossless_cell_has_no_internal_rates() {
    let mut seed = MemoryCell::default();
    seed.jj.r_sub = f64::INFINITY;
    seed.jj.r_off = f64::INFINITY;
    let a = build(seed);
    let s = extract_coupled_mode_params(&a.cell, a.fit.l_cross, &a.map, &a.fit, BAND, &SweepSettings::default()).unwrap();
    assert_eq!((s.kappa_int_a, s.gamma_b), (0.0, 0.0), "{s:?}");
}

#[test]
fn gate_off_write_is_isolated() {
    let a = anchored();
    let s = extract_coupled_mode_params(&a.cell, a.fit.l_cross, &a.map, &a.fit, BAND, &SweepSettings::default()).unwrap();
    let rf = RfPulse {
        carrier: s.omega_a / TWO_PI,
        amplitude: 1.0,
        start: 0.0,
        duration: 6.0 / s.kappa_a(),
        envelope: Envelope::Rect,
    };
    let t = ProtocolTimings::for_system(&s);
    let off = write_protocol(&s, &rf, GateLevel::Off, &t).unwrap();
    assert!(off.fidelity <= 1e-4, "{}", off.fidelity);
    let on = write_protocol(&s, &rf, GateLevel::On { l_j: a.fit.l_cross }, &t).unwrap();
    assert!(on.fidelity > 0.99);
}
