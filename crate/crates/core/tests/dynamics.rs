use num_complex::Complex64;
use proptest::prelude::*;
use qumem_core::constants::TWO_PI;
use qumem_core::dynamics::*;

const W: f64 = TWO_PI * 6.55e9;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn free(g: f64, detuning: f64) -> CoupledModeSystem {
    CoupledModeSystem {
        omega_a: W + detuning,
        g_off: g,
        ..CoupledModeSystem::resonant(W, g, 0.0)
    }
}

fn swap_error(g: f64, dt: f64) -> f64 {
    let s = free(g, 0.0);
    let t = swap_duration(g).unwrap();
    let tr = evolve(&s, &PulseSequence::default(), (one(), Complex64::new(0.0, 0.0)), (0.0, t), dt).unwrap();
    tr.times
        .iter()
        .zip(&tr.e_b)
        .map(|(t, e)| (e - (g * t).sin().powi(2)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn fourth_order_convergence() {
    let g = TWO_PI * 3e8;
    let h = max_step(&free(g, 0.0), &PulseSequence::default());
    let p = (swap_error(g, h) / swap_error(g, h / 2.0)).log2();
    assert!((3.5..=4.5).contains(&p), "order {p}");
}

#[test]
fn lossless_energy_is_conserved() {
    let g = TWO_PI * 2e8;
    let s = free(g, TWO_PI * 5e7);
    let dt = max_step(&s, &PulseSequence::default()) / 20.0;
    let tr = evolve(&s, &PulseSequence::default(), (one(), Complex64::new(0.0, 0.0)), (0.0, 1e4 * dt), dt).unwrap();
    assert_eq!(tr.len(), 10_001);
    let drift = tr
        .e_a
        .iter()
        .zip(&tr.e_b)
        .map(|(a, b)| (a + b - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift}");
}

#[test]
fn lossless_write_read_is_time_reversal_bounded() {
    let kappa = 2e6;
    let s = CoupledModeSystem::resonant(W, TWO_PI * 1.2e8, kappa);
    let timings = ProtocolTimings::for_system(&s);
    let rf = RfPulse {
        carrier: W / TWO_PI,
        amplitude: 1.0,
        start: 0.0,
        duration: 6.0 / kappa,
        envelope: Envelope::Rect,
    };
    let r = write_then_read(&s, &rf, GateLevel::On { l_j: 2.2e-10 }, &timings, 0.0).unwrap();
    assert!(r.write_fidelity > 0.99);
    assert!(r.round_trip >= r.write_fidelity.powi(2), "{r:?}");
}

#[test]
fn idle_storage_leaks_at_residual_rate() {
    let kappa = 2e6;
    let g_off = 3e3;
    let s = CoupledModeSystem {
        g_off,
        ..CoupledModeSystem::resonant(W, TWO_PI * 1.2e8, kappa)
    };
    let hold = 100.0 * swap_duration(s.g_on).unwrap();
    let tr = evolve(&s, &PulseSequence::default(), (Complex64::new(0.0, 0.0), one()), (0.0, hold), 1e-11).unwrap();
    let loss = 1.0 - tr.e_b.last().unwrap();
    let bound = 4.0 * g_off * g_off / kappa * hold;
    assert!(loss > 0.0 && loss <= bound, "{loss} vs {bound}");
}

#[test]
fn gauss_envelope_drives_less_than_rect() {
    let kappa = 2e6;
    let s = CoupledModeSystem::resonant(W, TWO_PI * 1.2e8, kappa);
    let timings = ProtocolTimings::for_system(&s);
    let rect = RfPulse {
        carrier: W / TWO_PI,
        amplitude: 1.0,
        start: 0.0,
        duration: 6.0 / kappa,
        envelope: Envelope::Rect,
    };
    let gauss = RfPulse {
        envelope: Envelope::Gauss { sigma: 1.0 / kappa },
        ..rect
    };
    let gate = GateLevel::On { l_j: 2.2e-10 };
    let a = write_protocol(&s, &rect, gate, &timings).unwrap();
    let b = write_protocol(&s, &gauss, gate, &timings).unwrap();
    assert!(b.trajectory.max_e_a() < a.trajectory.max_e_a());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn response_is_linear(ampl in 0.1f64..10.0, scale in -5.0f64..5.0) {
        let kappa = 2e6;
        let s = CoupledModeSystem::resonant(W, TWO_PI * 1e8, kappa);
        let seq = |a: f64| PulseSequence {
            rf: Some(RfPulse {
                carrier: W / TWO_PI + 2e5,
                amplitude: a,
                start: 0.0,
                duration: 2e-7,
                envelope: Envelope::Rect,
            }),
            gate_pulses: vec![GatePulse { level: GateLevel::On { l_j: 2e-10 }, start: 1e-7, duration: 2e-9, rise: 5e-11 }],
        };
        let z = Complex64::new(0.0, 0.0);
        let run = |a: f64| evolve(&s, &seq(a), (z, z), (0.0, 2.2e-7), 5e-11).unwrap().last_state();
        let (a1, b1) = run(ampl);
        let (a2, b2) = run(ampl * scale);
        let tol = 1e-9 * (a1.norm() + b1.norm()) * scale.abs().max(1.0);
        prop_assert!((a2 - a1 * scale).norm() <= tol);
        prop_assert!((b2 - b1 * scale).norm() <= tol);
    }

    #[test]
    fn detuned_transfer_is_bounded(g_mhz in 10.0f64..300.0, det_mhz in -2000.0f64..2000.0) {
        let g = TWO_PI * g_mhz * 1e6;
        let det = TWO_PI * det_mhz * 1e6;
        let s = free(g, det);
        let dt = max_step(&s, &PulseSequence::default()) / 4.0;
        let t = 2.0 * swap_duration(g).unwrap();
        let tr = evolve(&s, &PulseSequence::default(), (one(), Complex64::new(0.0, 0.0)), (0.0, t), dt).unwrap();
        let bound = 4.0 * g * g / (4.0 * g * g + det * det);
        let peak = tr.e_b.iter().cloned().fold(0.0, f64::max);
        prop_assert!(peak <= bound + 1e-6, "{} > {}", peak, bound);
    }

    #[test]
    fn no_feedline_no_emission(g_mhz in 10.0f64..300.0) {
        let s = CoupledModeSystem::resonant(W, TWO_PI * g_mhz * 1e6, 0.0);
        let t = ProtocolTimings { read_window: 1e-8, ..ProtocolTimings::for_system(&s) };
        prop_assert_eq!(read_protocol(&s, &t).unwrap().recovered_fraction, 0.0);
    }

    #[test]
    fn swap_duration_scales_inversely(g in 1e3f64..1e10) {
        let t = swap_duration(g).unwrap();
        prop_assert!((t * g - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        prop_assert!((swap_duration(2.0 * g).unwrap() - t / 2.0).abs() <= 1e-15 * t);
    }
}
