//! End-to-end paths through the public API: configuration, simulation,
//! functionals and the closed-form references.

use svie_core::config::parse_config;
use svie_core::experiments::functional::evaluate_functional;
use svie_core::experiments::weak::{discrete_expectation, exact_expectation};
use svie_core::experiments::{squared_distance, SpaceKind};
use svie_core::reference::{discrete_resolvent, exact_discrete_moments};
use svie_core::scheme::Simulator;
use svie_core::Field;

#[test]
fn configured_path_is_reproducible() {
    let c = parse_config(
        "[operator]\ndiscretization = \"fem\"\nresolution = 16\n[drift]\nkind = \"tanh\"\n[grid]\nn_steps = 32\n[experiment]\nseed = 12\n",
    )
    .unwrap();
    let p = c.problem();
    let config = p.config(c.space, c.base_level()).unwrap();
    let sim = Simulator::new(&config).unwrap();
    let run = || {
        let table = p.increments(c.n_steps, c.experiment.seed, 0).unwrap();
        sim.simulate(&table, &c.record_steps(None).unwrap()).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.len(), 33);
    assert_eq!(a.final_state().len(), 15);
}

#[test]
fn functional_matches_direct_projection() {
    let c = parse_config("[operator]\nresolution = 8\n[grid]\nn_steps = 16\n").unwrap();
    let p = c.problem();
    let config = p.config(SpaceKind::Spectral, c.base_level()).unwrap();
    let table = p.increments(16, 3, 0).unwrap();
    let traj = Simulator::new(&config).unwrap().simulate(&table, &[16]).unwrap();
    let spec = c.functional();
    let value = evaluate_functional(&spec, &traj, &config.discretization).unwrap();
    let x1 = traj.final_state().values()[0];
    assert!((value - x1 * x1).abs() < 1e-14);
}

#[test]
fn noiseless_spectral_state_is_the_transfer_coefficient() {
    let c = parse_config(
        "[noise]\nspectrum = \"explicit\"\nmu = [0.0]\nmodes = 4\n[operator]\nresolution = 4\n[grid]\nn_steps = 64\n",
    )
    .unwrap();
    let p = c.problem();
    let config = p.config(SpaceKind::Spectral, c.base_level()).unwrap();
    let table = p.increments(64, 0, 0).unwrap();
    let traj = Simulator::new(&config).unwrap().simulate(&table, &[64]).unwrap();
    let lambda = std::f64::consts::PI.powi(2);
    let b = discrete_resolvent(&c.kernel, lambda, 1.0 / 64.0, 64).unwrap();
    assert!((traj.final_state().values()[0] - b[64]).abs() < 1e-13);
    assert!(traj.final_state().values()[1..].iter().all(|v| *v == 0.0));
}

#[test]
fn discrete_weak_moment_uses_the_transfer_coefficients() {
    let c = parse_config("[operator]\nresolution = 4\n[grid]\nn_steps = 32\n").unwrap();
    let p = c.problem();
    let spec = c.functional();
    let level = c.base_level();
    let lambda = std::f64::consts::PI.powi(2);
    let b = discrete_resolvent(&c.kernel, lambda, 1.0 / 32.0, 32).unwrap();
    let m = exact_discrete_moments(&b, p.noise.eigenvalue(1), 1.0, 1.0 / 32.0, 32).unwrap();
    let second = discrete_expectation(&p, level, &spec).unwrap();
    assert!((second - (m.variance + m.mean * m.mean)).abs() < 1e-14);
    let exact = exact_expectation(&p, &spec).unwrap();
    assert!((exact - second).abs() < 5e-2);
}

#[test]
fn distances_between_refined_meshes() {
    let d4 = SpaceKind::Fem.discretization(4).unwrap();
    let d8 = SpaceKind::Fem.discretization(8).unwrap();
    let zero4 = Field::nodal(vec![0.0; 3]);
    let zero8 = Field::nodal(vec![0.0; 7]);
    assert_eq!(squared_distance(&d4, zero4.values(), &d8, zero8.values()).unwrap(), 0.0);
}
