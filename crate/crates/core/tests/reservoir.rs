use depol_core::reservoir::{validate_adiabatic, AdiabaticOptions, AtomConfig};

fn atom(g: f64, ratio: f64, gamma_a: f64, phase: f64) -> AtomConfig {
    AtomConfig { phase, ..AtomConfig::new(g, ratio * g, gamma_a, 20.0) }
}

#[test]
fn deep_dispersive_rate_is_insensitive_to_the_atom_phase() {
    let opts = AdiabaticOptions { horizon: 0.5, ..Default::default() };
    let a = validate_adiabatic(&[atom(0.1, 100.0, 2.5e-4, 0.0)], &opts, None).unwrap();
    let b = validate_adiabatic(&[atom(0.1, 100.0, 2.5e-4, 1.234)], &opts, None).unwrap();
    assert!((a.rate_fitted / b.rate_fitted - 1.0).abs() < 0.05);
    assert!(!a.non_exponential && a.dispersive);
}

#[test]
fn one_photon_population_is_conserved_in_the_dispersive_regime() {
    let opts = AdiabaticOptions { horizon: 0.5, ..Default::default() };
    let rep = validate_adiabatic(&[atom(0.1, 100.0, 2.5e-4, 0.4)], &opts, None).unwrap();
    assert!(rep.population_drift < 0.01, "{}", rep.population_drift);
}

#[test]
fn atoms_stay_between_unpolarized_and_thermal() {
    let rep = validate_adiabatic(&[atom(0.1, 100.0, 2.5e-4, 0.0)], &AdiabaticOptions::default(), None).unwrap();
    let thermal = 20.0 / 41.0;
    let (lo, hi) = rep.atomic_population_range;
    assert!(lo >= thermal - 1e-3 && hi <= 0.5 + 1e-9, "{lo} {hi}");
}

#[test]
fn near_resonance_is_flagged() {
    let rep = validate_adiabatic(&[atom(0.1, 2.0, 1e-3, 0.0)], &AdiabaticOptions::default(), None).unwrap();
    assert!(!rep.dispersive && rep.regime_violation());
}
