use proptest::prelude::*;

use svie_core::config::parse_config;
use svie_core::quadrature::weights_closed_form;
use svie_core::reference::{discrete_resolvent, mittag_leffler};
use svie_core::{IncrementTable, KernelSpec, NoiseModel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coarsening_composes_bitwise(a in 1usize..5, b in 1usize..5, m in 1usize..4, seed in any::<u64>()) {
        let noise = NoiseModel::power_law(1.0, 1.0, 4).unwrap();
        let n = a * b * m;
        let fine = IncrementTable::sample(&noise, 1.0 / n as f64, n, 4, seed, 3).unwrap();
        let twice = fine.coarsen(a).unwrap().coarsen(b).unwrap();
        let once = fine.coarsen(a * b).unwrap();
        prop_assert_eq!(twice.as_slice(), once.as_slice());
        prop_assert_eq!(twice.k(), once.k());
    }

    #[test]
    fn extra_modes_leave_existing_columns_alone(modes in 1usize..12, extra in 1usize..12, seed in any::<u64>()) {
        let noise = NoiseModel::power_law(0.5, 1.0, modes + extra).unwrap();
        let small = IncrementTable::sample(&noise, 0.1, 10, modes, seed, 0).unwrap();
        let large = IncrementTable::sample(&noise, 0.1, 10, modes + extra, seed, 0).unwrap();
        for m in 0..10 {
            prop_assert_eq!(small.row(m), &large.row(m)[..modes]);
        }
    }

    #[test]
    fn riesz_weights_are_positive_and_decreasing(rho in 1.01f64..1.99, k in 1e-3f64..1.0) {
        let w = weights_closed_form(&KernelSpec::riesz(rho).unwrap(), k, 200).unwrap();
        let w = w.as_slice();
        prop_assert!(w.iter().all(|&x| x > 0.0));
        prop_assert!(w.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn resolvents_stay_bounded(rho in 1.01f64..1.99, y in 0.0f64..5000.0) {
        let e = mittag_leffler(rho, -y).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-8, "E_{}(-{}) = {}", rho, y, e);
    }

    #[test]
    fn discrete_resolvent_is_contractive(rho in 1.01f64..1.99, lambda in 0.0f64..1e5, n in 1usize..200) {
        let b = discrete_resolvent(&KernelSpec::riesz(rho).unwrap(), lambda, 1.0 / n as f64, n).unwrap();
        prop_assert_eq!(b[0], 1.0);
        prop_assert!(b.iter().all(|x| x.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn valid_rho_round_trips(rho in 1.001f64..1.999) {
        let c = parse_config(&format!("[kernel]\nrho = {rho:?}\n")).unwrap();
        prop_assert_eq!(c.kernel.rho(), rho);
    }
}
