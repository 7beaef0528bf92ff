use std::f64::consts::{FRAC_PI_2, PI};

use catamp::fock::{
    apply_inverse_two_mode_squeeze, apply_signal_phase, apply_two_mode_squeeze_with,
    coherent_vector, overlap, product_state,
};
use catamp::pipeline::Branches;
use catamp::qfunc::{build_q_terms, integrate_probability, q_value, visibility_closed_form};
use catamp::{ExperimentConfig, GainParam, QStage, TwoModeState};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coherent_pair(a: (f64, f64), b: (f64, f64), n: usize) -> TwoModeState {
    product_state(
        &coherent_vector(C64::new(a.0, a.1), n).unwrap(),
        &coherent_vector(C64::new(b.0, b.1), n).unwrap(),
    )
    .unwrap()
}

fn config(g: f64, a0: f64, phi: f64, theta: f64) -> ExperimentConfig {
    ExperimentConfig::new(C64::new(a0, 0.0), GainParam::from_gain(g).unwrap())
        .with_phi(phi)
        .with_theta(theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_preserves_norm(re in -2.0..2.0f64, im in -2.0..2.0f64, phase in -7.0..7.0f64) {
        let s = coherent_pair((re, im), (0.3, -0.2), 30);
        let rotated = apply_signal_phase(&s, phase);
        prop_assert!((rotated.norm_sqr() - s.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_hermitian(
        a in (-1.5..1.5f64, -1.5..1.5f64),
        b in (-1.5..1.5f64, -1.5..1.5f64),
    ) {
        let x = coherent_pair(a, (0.1, 0.0), 20);
        let y = coherent_pair(b, (0.0, 0.4), 20);
        let xy = overlap(&x, &y).unwrap();
        let yx = overlap(&y, &x).unwrap();
        prop_assert!((xy - yx.conj()).norm() < 1e-14);
    }

    #[test]
    fn squeeze_then_inverse_is_identity(
        g in 1.0..1.3f64,
        a in (-1.0..1.0f64, -1.0..1.0f64),
    ) {
        let gain = GainParam::from_gain(g).unwrap();
        let s = coherent_pair(a, (0.0, 0.0), 60);
        let out = apply_two_mode_squeeze_with(&s, gain, f64::INFINITY).unwrap();
        let back = apply_inverse_two_mode_squeeze(&out, gain, f64::INFINITY).unwrap();
        let err = back
            .amps()
            .iter()
            .zip(s.amps().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "error {}", err);
    }

    #[test]
    fn q_is_bounded(
        g in 1.0..1.5f64,
        a0 in 0.0..2.0f64,
        phi in 0.0..PI,
        theta in 0.0..(2.0 * PI),
        alpha in (-4.0..4.0f64, -4.0..4.0f64),
        beta in (-4.0..4.0f64, -4.0..4.0f64),
    ) {
        for stage in [QStage::PostAmplifier, QStage::PostAnalyzer] {
            let terms = build_q_terms(&config(g, a0, phi, theta), stage);
            let total = integrate_probability(&terms).unwrap();
            let q = q_value(&terms, C64::new(alpha.0, alpha.1), C64::new(beta.0, beta.1)).unwrap();
            prop_assert!(q >= -1e-15);
            prop_assert!(q <= total / (PI * PI) + 1e-15);
        }
    }

    #[test]
    fn opposite_analyzer_phases_sum_to_constant(
        g in 1.0..1.4f64,
        a0 in 0.0..1.5f64,
        t1 in 0.0..(2.0 * PI),
        t2 in 0.0..(2.0 * PI),
    ) {
        let b = Branches::build(&config(g, a0, FRAC_PI_2, 0.0)).unwrap();
        let s1 = b.accepted_probability(t1).unwrap() + b.accepted_probability(t1 + PI).unwrap();
        let s2 = b.accepted_probability(t2).unwrap() + b.accepted_probability(t2 + PI).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn visibility_decreases_with_gain_and_amplitude(
        g in 1.0..2.0f64,
        dg in 0.001..0.5f64,
        a in 0.0..3.0f64,
        da in 0.001..1.0f64,
    ) {
        let v = visibility_closed_form(g, a).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(visibility_closed_form(g + dg, a).unwrap() < v);
        if g > 1.0 {
            prop_assert!(visibility_closed_form(g, a + da).unwrap() < v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn q_engine_matches_fock_probability(
        g in 1.0..1.4f64,
        a0 in 0.2..1.5f64,
        phi in 0.3..(PI - 0.3),
        theta in 0.0..(2.0 * PI),
    ) {
        let cfg = config(g, a0, phi, theta);
        let fock = Branches::build(&cfg).unwrap().accepted_probability(theta).unwrap();
        let q = integrate_probability(&build_q_terms(&cfg, QStage::PostAnalyzer)).unwrap();
        prop_assert!((fock - q).abs() < 1e-6, "{} vs {}", fock, q);
    }

    #[test]
    fn q_value_matches_fock_projection(
        g in 1.0..1.4f64,
        a0 in 0.2..1.5f64,
        theta in 0.0..(2.0 * PI),
        points in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 10),
    ) {
        let cfg = config(g, a0, FRAC_PI_2, theta);
        let state = Branches::build(&cfg).unwrap().accepted_state(theta).unwrap();
        let terms = build_q_terms(&cfg, QStage::PostAnalyzer);
        let (ns, ni) = state.dims();
        for (ar, ai, br, bi) in points {
            let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
            let ca = coherent_vector(alpha, ns).unwrap();
            let cb = coherent_vector(beta, ni).unwrap();
            let mut proj = C64::new(0.0, 0.0);
            for ((n, m), z) in state.amps().indexed_iter() {
                proj += ca.amps[n].conj() * cb.amps[m].conj() * z;
            }
            let expected = proj.norm_sqr() / (PI * PI);
            let q = q_value(&terms, alpha, beta).unwrap();
            prop_assert!((q - expected).abs() < 1e-6, "{} vs {}", q, expected);
        }
    }
}
