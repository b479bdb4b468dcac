//! Randomised invariants over sampled Gaussian states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use tracedist::bargmann::{multivariate_trace, pure_moment_invariant};
use tracedist::bounds::{fidelity_sandwich, pure_pure_distance, variational_lower_bound};
use tracedist::fock;
use tracedist::lanczos::{
    trace_distance_lower_bound, trace_distance_pure_mixed, KetInput, LanczosOptions, StateInput,
};
use tracedist::linalg::sym_eigen_sorted;
use tracedist::moments::{hankel_metrics, moments_gaussian, moments_mixed_difference};
use tracedist::sampling::StateSampler;
use tracedist::symplectic::{symplectic_residual, williamson};
use tracedist::GaussianState;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn exact(psi: &tracedist::PureGaussianKet, rho: &GaussianState) -> tracedist::lanczos::DistanceEstimate {
    trace_distance_pure_mixed(
        &KetInput::Gaussian(psi.clone()),
        &StateInput::Gaussian(rho.clone()),
        10,
        &LanczosOptions::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn williamson_reconstructs(seed in any::<u64>(), modes in 1usize..=3) {
        let rho = StateSampler::seeded(seed).mixed(modes, 2.0);
        let w = williamson(&rho).unwrap();
        prop_assert!(symplectic_residual(&w.s) < 1e-10);
        let scale = max_abs(rho.cov());
        prop_assert!(max_abs(&(w.reconstruct(2.0) - rho.cov())) <= 1e-8 * scale);
        prop_assert!(w.nbar.iter().all(|&n| n >= -1e-12));
    }

    #[test]
    fn loss_channels_compose(seed in any::<u64>(), e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
        let rho = StateSampler::seeded(seed).mixed(2, 2.0);
        let twice = rho.loss_channel(e1).unwrap().loss_channel(e2).unwrap();
        let once = rho.loss_channel(1.0 - (1.0 - e1) * (1.0 - e2)).unwrap();
        prop_assert!(max_abs(&(twice.cov() - once.cov())) < 1e-12);
        prop_assert!((twice.means() - once.means()).amax() < 1e-12);
        prop_assert!(twice.validate().is_valid());
    }

    #[test]
    fn two_state_traces_are_symmetric(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (a, b) = (s.mixed(modes, 2.0), s.mixed(modes, 2.0));
        let ab = multivariate_trace(&[a.clone(), b.clone()]).unwrap();
        let ba = multivariate_trace(&[b, a]).unwrap();
        prop_assert!((ab - ba).norm() < 1e-10);
        prop_assert!(ab.im.abs() < 1e-10 && ab.re > 0.0);
    }

    #[test]
    fn traces_are_cyclic(seed in any::<u64>()) {
        let mut s = StateSampler::seeded(seed);
        let (a, b, c) = (s.mixed(1, 2.0), s.mixed(1, 2.0), s.mixed(1, 2.0));
        let abc = multivariate_trace(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let bca = multivariate_trace(&[b.clone(), c.clone(), a.clone()]).unwrap();
        let cba = multivariate_trace(&[c, b, a]).unwrap();
        prop_assert!((abc - bca).norm() < 1e-10 * abc.norm().max(1.0));
        // reversing the word conjugates the trace of Hermitian factors
        prop_assert!((abc - cba.conj()).norm() < 1e-10 * abc.norm().max(1.0));
    }

    #[test]
    fn purities_decrease_with_order(seed in any::<u64>(), modes in 1usize..=2) {
        let rho = StateSampler::seeded(seed).mixed(modes, 2.0);
        let mut prev = 1.0;
        for ell in 2..=6 {
            let t = multivariate_trace(&vec![rho.clone(); ell]).unwrap();
            prop_assert!(t.im.abs() < 1e-10);
            prop_assert!(t.re <= prev + 1e-12 && t.re > 0.0);
            prev = t.re;
        }
    }

    #[test]
    fn pure_moments_decrease_with_order(seed in any::<u64>()) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(1, 2.0), s.mixed(1, 2.0));
        let m = moments_gaussian(&psi, &rho, 8).unwrap();
        for w in m.values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 && w[1] >= -1e-12);
        }
        prop_assert!((m.values[1] - pure_moment_invariant(&psi, &rho, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hankel_metrics_are_positive(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(modes, 2.0), s.mixed(modes, 2.0));
        let m = moments_gaussian(&psi, &rho, 9).unwrap();
        let g = hankel_metrics(&m, 4).unwrap().g;
        let (vals, _) = sym_eigen_sorted(&g);
        prop_assert!(vals[0] >= -1e-10 * vals[vals.len() - 1].max(1.0), "{vals:?}");
    }

    #[test]
    fn single_positive_ritz_value(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(modes, 2.0), s.mixed(modes, 2.0));
        let est = exact(&psi, &rho);
        prop_assert!(est.workspace.ritz.iter().filter(|&&x| x > 1e-8).count() <= 1);
    }

    #[test]
    fn ritz_history_is_monotone(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(modes, 2.0), s.mixed(modes, 2.0));
        let est = exact(&psi, &rho);
        for w in est.max_ritz_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10, "{:?}", est.max_ritz_history);
        }
    }

    #[test]
    fn bounds_bracket_the_estimate(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(modes, 2.0), s.mixed(modes, 2.0));
        let d = exact(&psi, &rho).value;
        let (lo, hi) = fidelity_sandwich(&psi, &rho).unwrap();
        prop_assert!(lo - 1e-8 <= d && d <= hi + 1e-8, "{lo} {d} {hi}");
        prop_assert!(variational_lower_bound(&psi, &rho).unwrap().bound <= d + 1e-8);
    }

    #[test]
    fn variational_is_exact_on_pure_pairs(seed in any::<u64>(), modes in 1usize..=2) {
        let mut s = StateSampler::seeded(seed);
        let (a, b) = (s.pure(modes, 2.0), s.pure(modes, 2.0));
        let v = variational_lower_bound(&a, b.state()).unwrap().bound;
        prop_assert!((v - pure_pure_distance(&a, &b).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn distances_do_not_depend_on_hbar(seed in any::<u64>(), hbar in 0.2..5.0f64) {
        let mut s = StateSampler::seeded(seed);
        let (psi, rho) = (s.pure(1, 2.0), s.mixed(1, 2.0));
        let psi2 = tracedist::PureGaussianKet::new(psi.state().with_hbar(hbar).unwrap()).unwrap();
        let rho2 = rho.with_hbar(hbar).unwrap();
        prop_assert!((exact(&psi, &rho).value - exact(&psi2, &rho2).value).abs() < 1e-9);
        let f1 = multivariate_trace(&[psi.state().clone(), rho.clone()]).unwrap();
        let f2 = multivariate_trace(&[psi2.state().clone(), rho2]).unwrap();
        prop_assert!((f1 - f2).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn lower_bound_is_sound(seed in any::<u64>()) {
        let mut s = StateSampler::seeded_bounded(seed);
        let (a, b) = (s.mixed(1, 2.0), s.mixed(1, 2.0));
        let c = s.pure(1, 2.0);
        let m = moments_mixed_difference(&c, &a, &b, 11).unwrap();
        prop_assert!(m.values.iter().all(|x| x.is_finite()));
        let est = trace_distance_lower_bound(
            &StateInput::Gaussian(a.clone()),
            &StateInput::Gaussian(b.clone()),
            &KetInput::Gaussian(c),
            5,
            &LanczosOptions::default(),
        )
        .unwrap();
        let oracle = fock::trace_distance_exact(
            &fock::gaussian_to_fock(&a, 100).unwrap(),
            &fock::gaussian_to_fock(&b, 100).unwrap(),
        )
        .unwrap();
        prop_assert!(est.value <= oracle + 1e-6, "{} > {oracle}", est.value);
        for w in est.max_ritz_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn exact_estimate_matches_oracle(seed in any::<u64>()) {
        let mut s = StateSampler::seeded_bounded(seed);
        let (psi, rho) = (s.pure(1, 2.0), s.mixed(1, 2.0));
        let oracle = fock::trace_distance_exact(
            &fock::projector(&fock::ket_to_fock(&psi, 100).unwrap()),
            &fock::gaussian_to_fock(&rho, 100).unwrap(),
        )
        .unwrap();
        prop_assert!((exact(&psi, &rho).value - oracle).abs() < 1e-6);
    }
}

#[test]
fn coherent_pair_distance() {
    let a = tracedist::PureGaussianKet::coherent(Complex64::new(0.5, 0.0), 2.0);
    let b = tracedist::PureGaussianKet::coherent(Complex64::new(-0.5, 0.0), 2.0);
    let want = (1.0 - (-1.0f64).exp()).sqrt();
    assert!((pure_pure_distance(&a, &b).unwrap() - want).abs() < 1e-12);
    assert!((exact(&a, b.state()).value - want).abs() < 1e-10);
}
