use depol_core::algebra::{random_block_state, su2_coherent_state, stokes_matrices, BlockPairs, TwoModeState};
use depol_core::depolarizer::{evolve, generator_spectrum, steady_state, DepolarizerRates, Evolver, Method};
use depol_core::fit::fit_decay_rate;
use depol_core::metrics::{
    degree_of_polarization, one_photon_analytic, one_photon_rate, purity, stokes_moments, uncertainty_check,
    BlochRecord, TimeGrid,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist(a: &nalgebra::DMatrix<Complex64>, b: &nalgebra::DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn random_states_relax_to_the_unpolarized_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rates = DepolarizerRates::new(1.0, 0.4).unwrap();
    for n in 0..=6 {
        let st = random_block_state(n, &mut rng);
        let late = evolve(&st, 30.0, &rates, Method::ExactExpm).unwrap();
        assert!(dist(late.block(n, n).unwrap(), &steady_state(n)) < 1e-8, "N={n}");
        let zeros = generator_spectrum(n, n, &rates).iter().filter(|z| z.norm() < 1e-9).count();
        assert_eq!(zeros, 1, "N={n}");
    }
}

#[test]
fn evolution_preserves_state_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rates = DepolarizerRates::new(0.6, 1.1).unwrap();
    let mix = TwoModeState::mixture(&[
        (0.3, random_block_state(2, &mut rng)),
        (0.7, random_block_state(4, &mut rng)),
    ])
    .unwrap();
    let coh = depol_core::algebra::two_mode_coherent_state(Complex64::new(0.9, 0.2), Complex64::new(-0.4, 0.7), 5);
    for st in [mix, coh] {
        let evolver = Evolver::for_state(&st, &rates);
        let mut last_purity = f64::INFINITY;
        for t in TimeGrid::log(1e-3, 3.0, 15).times().unwrap() {
            let rho = evolver.evolve(&st, t);
            assert!((rho.trace() - 1.0).abs() < 1e-10);
            assert!(rho.min_eigenvalue() > -1e-10);
            rho.validate().unwrap();
            let p = purity(&rho);
            assert!(p <= last_purity + 1e-12);
            last_purity = p;
        }
    }
}

#[test]
fn exact_and_adaptive_evolution_agree() {
    let st = su2_coherent_state(4, 0.7, 0.3, 0.0).unwrap();
    let rates = DepolarizerRates::new(1.0, 0.5).unwrap();
    let exact = evolve(&st, 0.2, &rates, Method::ExactExpm).unwrap();
    let rk = evolve(&st, 0.2, &rates, Method::RkAdaptive(Default::default())).unwrap();
    assert!(exact.blocks().max_abs_diff(rk.blocks()) < 1e-7);
}

#[test]
fn semigroup_property() {
    let coh = depol_core::algebra::two_mode_coherent_state(Complex64::new(0.5, 0.1), Complex64::new(0.2, 0.3), 4);
    let rates = DepolarizerRates::new(0.8, 2.0).unwrap();
    let a = evolve(&evolve(&coh, 0.13, &rates, Method::ExactExpm).unwrap(), 0.29, &rates, Method::ExactExpm).unwrap();
    let b = evolve(&coh, 0.42, &rates, Method::ExactExpm).unwrap();
    assert!(a.blocks().max_abs_diff(b.blocks()) < 1e-10);
}

#[test]
fn one_photon_closed_form_matches_evolution() {
    let rates = DepolarizerRates::new(0.7, 0.0).unwrap();
    let r = one_photon_rate(&rates);
    let mut rho = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
    rho[(0, 0)] = Complex64::new(0.3, 0.0);
    rho[(1, 1)] = Complex64::new(0.7, 0.0);
    rho[(1, 0)] = Complex64::new(0.2, -0.3);
    rho[(0, 1)] = Complex64::new(0.2, 0.3);
    let mut blocks = BlockPairs::new(1);
    blocks.insert(1, 1, rho).unwrap();
    let st = TwoModeState::from_blocks(blocks).unwrap();
    let r0 = BlochRecord::from_state(&st).unwrap();
    let evolver = Evolver::for_state(&st, &rates);
    for t in TimeGrid::log(1e-3 / r, 3.0 / r, 20).times().unwrap() {
        let num = BlochRecord::from_state(&evolver.evolve(&st, t)).unwrap();
        let ana = one_photon_analytic(&r0, t, r);
        assert!((num.x - ana.x).abs() < 1e-9 && (num.y - ana.y).abs() < 1e-9 && (num.z - ana.z).abs() < 1e-9);
    }
}

#[test]
fn fitted_s1_rate_matches_the_spectrum() {
    let rates = DepolarizerRates::new(1.0, 0.3).unwrap();
    let st = su2_coherent_state(1, std::f64::consts::FRAC_PI_2, 0.0, 0.0).unwrap();
    let times = TimeGrid::linear(0.0, 0.3, 10).times().unwrap();
    let evolver = Evolver::for_state(&st, &rates);
    let s1: Vec<f64> = times.iter().map(|&t| stokes_moments(&evolver.evolve(&st, t)).s1).collect();
    let fit = fit_decay_rate(&times, &s1).unwrap();
    let slowest = generator_spectrum(1, 1, &rates)
        .iter()
        .map(|z| -z.re)
        .filter(|r| *r > 1e-9)
        .fold(f64::INFINITY, f64::min);
    assert!((fit.rate - slowest).abs() < 1e-6);
}

#[test]
fn polarization_decays_monotonically_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rates = DepolarizerRates::atomic_medium(0.5).unwrap();
    for n in 1..=5 {
        let st = random_block_state(n, &mut rng);
        let evolver = Evolver::for_state(&st, &rates);
        let mut last = f64::INFINITY;
        for t in TimeGrid::log(1e-3, 10.0, 25).times().unwrap() {
            let rho = evolver.evolve(&st, t);
            let p = degree_of_polarization(&rho);
            assert!(p <= last + 1e-12);
            assert!(uncertainty_check(&rho).holds);
            last = p;
        }
        assert!(last < 1e-9);
    }
}

#[test]
fn stokes_algebra_up_to_ten_photons() {
    let i2 = Complex64::new(0.0, 2.0);
    for n in 0..=10 {
        let s = stokes_matrices(n);
        let comm = |a: &nalgebra::DMatrix<Complex64>, b: &nalgebra::DMatrix<Complex64>| a * b - b * a;
        let zero = nalgebra::DMatrix::<Complex64>::zeros(n + 1, n + 1);
        assert!(dist(&comm(&s.s1, &s.s2), &(&s.s3 * i2)) < 1e-12);
        assert!(dist(&comm(&s.s2, &s.s3), &(&s.s1 * i2)) < 1e-12);
        assert!(dist(&comm(&s.s3, &s.s1), &(&s.s2 * i2)) < 1e-12);
        assert!(dist(&comm(&s.s1, &s.s0), &zero) == 0.0);
        let casimir = nalgebra::DMatrix::<Complex64>::identity(n + 1, n + 1).scale((n * (n + 2)) as f64);
        assert!(dist(&s.casimir(), &casimir) < 1e-10);
    }
}

#[test]
fn field_amplitude_moments_follow_the_half_spin_channels() {
    use depol_core::algebra::{annihilation, two_mode_coherent_state, Mode};
    let (gamma, gamma0) = (0.7, 0.4);
    let rates = DepolarizerRates::new(gamma, gamma0).unwrap();
    let n_max = 6;
    let st = two_mode_coherent_state(Complex64::new(0.5, 0.2), Complex64::new(-0.3, 0.4), n_max);
    let a = annihilation(Mode::Plus, n_max).to_dense();
    let a2 = &a * &a;
    let evolver = Evolver::for_state(&st, &rates);
    let moment = |op: &nalgebra::DMatrix<Complex64>, t: f64| (evolver.evolve(&st, t).to_dense() * op).trace();
    for t in [0.05, 0.2, 0.6] {
        let first = moment(&a, t) / moment(&a, 0.0);
        let second = moment(&a2, t) / moment(&a2, 0.0);
        assert!((first - Complex64::from((-(4.0 * gamma + gamma0) * t).exp())).norm() < 1e-10);
        assert!((second - Complex64::from((-(8.0 * gamma + 4.0 * gamma0) * t).exp())).norm() < 1e-10);
    }
}
