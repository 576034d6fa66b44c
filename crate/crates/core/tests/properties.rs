use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qrd_core::entropies::{d_max, h0, h_min, von_neumann};
use qrd_core::io::{self, StateData};
use qrd_core::isotropic;
use qrd_core::linalg::{self, trace_norm_hermitian};
use qrd_core::protocol::clopper_pearson;
use qrd_core::quantum::{fidelity, purified_distance, trace_distance, SystemDims};
use qrd_core::random::{random_channel, random_density, random_state};

fn pair() -> SystemDims {
    SystemDims::new(vec!["A", "B"], vec![2, 3]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_keeps_a_state(seed in any::<u64>(), rank in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(pair(), rank, &mut rng);
        for keep in [["A"], ["B"]] {
            let r = rho.partial_trace(&keep).unwrap();
            prop_assert!((r.trace() - 1.0).abs() < 1e-12);
            prop_assert!(linalg::min_eigenvalue(r.matrix()) > -1e-12);
        }
    }

    #[test]
    fn distances_are_symmetric_and_ordered(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(pair(), &mut rng);
        let sigma = random_state(pair(), &mut rng);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f));
        let t = trace_distance(&rho, &sigma).unwrap();
        let direct = 0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix()));
        prop_assert!((t - direct).abs() < 1e-12);
        prop_assert!(t <= purified_distance(&rho, &sigma).unwrap() + 1e-9);
    }

    #[test]
    fn entropies_are_ordered(seed in any::<u64>(), rank in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(pair(), rank, &mut rng);
        let hmin = h_min(&rho, &[]).unwrap();
        let h = von_neumann(&rho);
        prop_assert!(hmin <= h + 1e-9 && h <= h0(&rho) + 1e-9);
        prop_assert!(h0(&rho) <= (rank as f64).log2() + 1e-9);
    }

    #[test]
    fn channels_do_not_increase_dmax(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SystemDims::single("A", 3);
        let rho = random_state(a.clone(), &mut rng);
        let sigma = random_state(a.clone(), &mut rng);
        let ch = random_channel(a, SystemDims::single("B", 2), 3, &mut rng).unwrap();
        let before = d_max(&rho, &sigma).unwrap();
        let after = d_max(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-9, "{} > {}", after, before);
    }

    #[test]
    fn state_files_round_trip_exactly(seed in any::<u64>(), rank in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(pair(), rank, &mut rng);
        let text = io::density_json(&rho).to_string();
        match io::state_from_str(&text, "mem").unwrap() {
            StateData::Density(back) => prop_assert_eq!(back.matrix(), rho.matrix()),
            StateData::Ket(_) => prop_assert!(false, "density read back as ket"),
        }
    }

    #[test]
    fn ball_sizes_sum_to_the_whole_space(n in 1u64..=40) {
        prop_assert_eq!(isotropic::s_k(n, n).unwrap(), BigUint::from(4u8).pow(n as u32));
        let d = 0.3;
        let m = isotropic::m_star(n, d, 0.05).unwrap();
        prop_assert!(isotropic::achievability_eps(n, &m, d).unwrap() <= 0.05);
        if m > BigUint::from(1u8) {
            prop_assert!(isotropic::achievability_eps(n, &(m - 1u8), d).unwrap() > 0.05);
        }
    }

    #[test]
    fn clopper_pearson_contains_the_estimate(x in 0u64..=200, extra in 0u64..=200) {
        let n = x + extra.max(1);
        let (lo, hi) = clopper_pearson(x, n, 0.99);
        let p = x as f64 / n as f64;
        prop_assert!(lo <= p && p <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
    }
}
