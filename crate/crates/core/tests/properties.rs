use std::f64::consts::PI;

use faer::Mat;
use nesslab_core::basis::fold_momentum;
use nesslab_core::dynamics::{deviation_bound_z, DeviationNorms};
use nesslab_core::linalg::C64;
use nesslab_core::models::{build_xx_model, build_xxz_model, energy_density, CurrentGeometry};
use nesslab_core::operator::{ChainConfig, LocalOperator};
use nesslab_core::spectral::{singularity_diagnostic, SpectralFunction, WindowFunction};
use nesslab_core::steady_state::{build_biased_gibbs, BiasOperator, BiasSpec};
use proptest::prelude::*;

fn two_site() -> impl Strategy<Value = LocalOperator> {
    (prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16), -3i64..3).prop_map(|(v, x)| {
        let m = Mat::from_fn(4, 4, |i, j| C64::new(v[4 * i + j].0, v[4 * i + j].1));
        LocalOperator::new(vec![x, x + 1], 2, m).unwrap()
    })
}

proptest! {
    #[test]
    fn commutator_is_antisymmetric(a in two_site(), b in two_site()) {
        let ab = a.commutator(&b).unwrap();
        let ba = b.commutator(&a).unwrap();
        prop_assert!(ab.add(&ba).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in two_site(), b in two_site()) {
        let lhs = a.mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().mul(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        prop_assert!(a.adjoint().adjoint().max_abs_diff(&a).unwrap() == 0.0);
    }

    #[test]
    fn translation_is_an_algebra_map(a in two_site(), b in two_site(), y in -5i64..5) {
        let lhs = a.mul(&b).unwrap().shifted(y);
        let rhs = a.shifted(y).mul(&b.shifted(y)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn window_transform_is_even_and_peaked(t in 0.2..4.0f64, w in -30.0..30.0f64) {
        let f = WindowFunction::hann(t).unwrap();
        prop_assert!((f.transform(w) - f.transform(-w)).abs() < 1e-12);
        prop_assert!(f.transform(w).abs() <= f.transform(0.0) + 1e-12);
        prop_assert!((f.transform(0.0) - f.integral()).abs() < 1e-12);
        prop_assert!((f.fourier(0.0) * (2.0 * PI).sqrt() - f.integral()).abs() < 1e-12);
    }

    #[test]
    fn folded_momentum_lies_in_brillouin_zone(n in 1usize..40, q in 0usize..200) {
        let k = fold_momentum(q, n);
        prop_assert!(k > -PI && k <= PI + 1e-12);
        let turns = (2.0 * PI * (q % n) as f64 / n as f64 - k) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-12);
    }

    #[test]
    fn deviation_bound_grows_with_time(t1 in 0.0..3.0f64, dt in 0.0..3.0f64, m in 2usize..5) {
        let (phi, spec) = build_xxz_model(0.4).unwrap();
        let geom = CurrentGeometry::new(m + 3, m, 1).unwrap();
        let chain = ChainConfig::periodic(2 * m + 6, 2).unwrap();
        let norms = DeviationNorms::compute(&phi, &spec, &geom, &chain).unwrap();
        let z1 = deviation_bound_z(&phi, &geom, t1, &norms).unwrap();
        let z2 = deviation_bound_z(&phi, &geom, t1 + dt, &norms).unwrap();
        prop_assert!(z1 >= 0.0 && z2 >= z1);
        prop_assert_eq!(deviation_bound_z(&phi, &geom, -t1, &norms).unwrap(), z1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectral_weights_are_complete(n in 4usize..7, beta in 0.2..2.0f64, lambda in -1.0..1.0f64) {
        let (phi, spec) = build_xx_model().unwrap();
        let chain = ChainConfig::periodic(n, 2).unwrap();
        let bias = BiasSpec::new(beta, lambda, BiasOperator::TotalCurrent).unwrap();
        let state = build_biased_gibbs(&phi, &spec, &bias, &chain).unwrap();
        let sf = SpectralFunction::build(&state, &spec.at(0), &energy_density(&phi).unwrap()).unwrap();
        prop_assert!(sf.completeness_residual < 1e-12);
        prop_assert!(sf.pairing_residual < 1e-12);
        prop_assert!(sf.entries.iter().all(|e| e.dk_index < n));
        let rep = singularity_diagnostic(&sf, &[f64::INFINITY]);
        if let Some(f) = rep.fractions[0].fraction {
            prop_assert!((f - 1.0).abs() < 1e-12);
        }
    }
}
