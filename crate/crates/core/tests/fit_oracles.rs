use num_complex::Complex64;
use proptest::prelude::*;
use qumem_core::modemap::{fit_avoided_crossing, ModeMap};
use qumem_core::resonance::{adaptive_sweep, find_resonances, SweepPlan};

fn notch(f0: f64, ql: f64, qc: f64) -> impl Fn(f64) -> Complex64 + Copy {
    move |f| Complex64::new(1.0, 0.0) - (ql / qc) / Complex64::new(1.0, 2.0 * ql * (f - f0) / f0)
}

fn crossing_map(g: f64, fb: f64, l_cross: f64, slope: f64, curve: f64) -> ModeMap {
    let fa = |l: f64| fb - slope * (l - l_cross) + curve * (l - l_cross).powi(2);
    ModeMap::from_rows((0..64).map(|k| {
        let l = 10e-12 + 490e-12 * k as f64 / 63.0;
        let (m, d) = (0.5 * (fa(l) + fb), 0.5 * (fa(l) - fb));
        let r = (d * d + g * g).sqrt();
        (l, m - r, m + r)
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn crossing_fit_recovers_g(
        g in 5e7f64..4e8,
        fb in 6.4e9f64..6.8e9,
        l_cross in 150e-12f64..300e-12,
        slope in 2e18f64..6e18,
        curve in 0.0f64..4e27,
    ) {
        let fit = fit_avoided_crossing(&crossing_map(g, fb, l_cross, slope, curve)).unwrap();
        prop_assert!((fit.g / g - 1.0).abs() < 0.01, "{} vs {}", fit.g, g);
        prop_assert!((fit.l_cross - l_cross).abs() < 5e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn single_notch_recovered(
        f0 in 6.0e9f64..7.0e9,
        log_q in 3.0f64..6.0,
        ratio in 0.1f64..0.9,
    ) {
        let ql = 10f64.powf(log_q);
        let model = notch(f0, ql, ql / ratio);
        let trace = adaptive_sweep(&SweepPlan::new(5.9e9, 7.1e9), |fs: &[f64]| Ok(fs.iter().map(|&f| model(f)).collect())).unwrap();
        let peaks = find_resonances(&trace, 0.1).unwrap();
        prop_assert_eq!(peaks.len(), 1);
        prop_assert!((peaks[0].f0 / f0 - 1.0).abs() < 1e-4);
        prop_assert!((peaks[0].q_loaded / ql - 1.0).abs() < 1e-3, "{} vs {}", peaks[0].q_loaded, ql);
    }
}
