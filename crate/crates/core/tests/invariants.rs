use num_complex::Complex64;
use proptest::prelude::*;
use sns_core::noise::rng::CounterRng;
use sns_core::noise::{NoisePath, NoiseSpec};
use sns_core::operators::{apply_c_spectral, nonlinear_b, OperatorVariant};
use sns_core::solver::{h_norm, IntegratorConfig, Model, ModelConfig};
use sns_core::spectrum::eigenvalue;
use sns_core::{GridSpec, ScalarSpectrum, SphereContext, SphereTransform};

fn random(l: usize, seed: u64, slope: f64) -> ScalarSpectrum {
    ScalarSpectrum::random(l, l, slope, &mut CounterRng::new(seed, 0).stream(5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesis_is_real_and_invertible(l in 1usize..16, seed in any::<u64>(), slope in 0.0f64..2.0) {
        let t = SphereTransform::new(GridSpec::exact(l)).unwrap();
        let s = random(l, seed, slope);
        let (_, im) = t.synth_complex(&s).unwrap();
        prop_assert!(im.max_abs() <= 1e-13);
        let back = t.analyze_scalar(&t.synth_scalar(&s).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&s) <= 1e-12);
    }

    #[test]
    fn nonlinear_term_is_energy_neutral(l in 2usize..14, seed in any::<u64>()) {
        let ctx = SphereContext::new(l).unwrap();
        let s = random(l, seed, 1.0);
        let b = nonlinear_b(&ctx, &s).unwrap();
        let scale = h_norm(&b) * h_norm(&s);
        prop_assert!(b.velocity_dot(&s).abs() <= 1e-12 * scale.max(1e-300));
        // and enstrophy-neutral, as in two-dimensional flow
        let w = s.scale_degrees(eigenvalue);
        prop_assert!(b.velocity_dot(&w).abs() <= 1e-11 * (h_norm(&b) * h_norm(&w)).max(1e-300));
    }

    #[test]
    fn coriolis_is_skew(l in 1usize..20, seed in any::<u64>(), omega in -10.0f64..10.0) {
        let s = random(l, seed, 0.5);
        prop_assert!(apply_c_spectral(&s, omega).velocity_dot(&s).abs() <= 1e-13 * s.velocity_energy() * (1.0 + omega.abs()));
    }

    #[test]
    fn shifts_compose(a in -1000i64..1000, b in -1000i64..1000, k in -50i64..50, seed in any::<u64>()) {
        let p = NoisePath::new(&NoiseSpec::new(1.0, 1.0, 4, seed, 0.01));
        let (x, y) = (p.shift(a).shift(b), p.shift(a + b));
        for l in 1..=4usize {
            for m in -(l as i64)..=l as i64 {
                prop_assert_eq!(x.increment(l, m, k), y.increment(l, m, k));
                prop_assert_eq!(x.increment(l, m, k), p.increment(l, m, k + a + b));
            }
        }
    }

    // A single-degree field has B(u, u) = 0, so each mode is a
    // Rossby-Haurwitz wave: psi(t) = psi(0) exp(-(nu l(l+1) + i c) t) with
    // c = -2 Omega m / (l(l+1)).
    #[test]
    fn rossby_haurwitz_wave(l in 1usize..8, m in 0i64..8, nu in 0.01f64..1.0, omega in -3.0f64..3.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let m = m.min(l as i64);
        let mut cfg = ModelConfig::quiet(8, nu, OperatorVariant::DeltaOnly);
        cfg.omega = omega;
        let model = Model::new(cfg).unwrap();
        let mut x = ScalarSpectrum::zeros(8);
        x.set_real(l, m, Complex64::new(re, if m == 0 { 0.0 } else { im }));
        let t = 0.5;
        let u = model.rds_phi(t, &model.path(), &x, &IntegratorConfig::new(0.01)).unwrap();
        let lam = eigenvalue(l);
        let c = -2.0 * omega * m as f64 / lam;
        let expected = x.get(l, m) * (-Complex64::new(nu * lam, c) * t).exp();
        prop_assert!((u.get(l, m) - expected).norm() <= 1e-12 * (1.0 + x.get(l, m).norm()));
        prop_assert!(u.reality_defect() == 0.0);
    }

    #[test]
    fn cocycle_on_random_splits(s_steps in 0usize..40, t_steps in 0usize..40, seed in any::<u64>()) {
        let mut cfg = ModelConfig::quiet(6, 0.3, OperatorVariant::DeltaOnly);
        cfg.omega = 1.0;
        cfg.noise = NoiseSpec::new(1.0, 1.0, 6, seed, 0.01);
        let model = Model::new(cfg).unwrap();
        let icfg = IntegratorConfig::new(0.02);
        let path = model.path();
        let x = model.random_initial(seed, 1, 1.0, 1.0);
        let (s, t) = (s_steps as f64 * 0.02, t_steps as f64 * 0.02);
        let whole = model.rds_phi(s + t, &path, &x, &icfg).unwrap();
        let mid = model.rds_phi(s, &path, &x, &icfg).unwrap();
        let split = model.rds_phi(t, &path.shift(2 * s_steps as i64), &mid, &icfg).unwrap();
        prop_assert!(h_norm(&whole.sub(&split)) <= 1e-12);
    }
}
