use cdma_nash::allocation::{
    decode_permutation, encode_permutation, pa_sic_closed, pa_sic_recursive, rank_by_energy, FilterKind,
};
use cdma_nash::asymptotics::{capacity_mmse, capacity_opt_identity, solve_beta_mmse, ChannelProfile};
use cdma_nash::channel::{sample_spreading, MultipathChannel, SystemRealization};
use cdma_nash::game::{goodput, solve_beta_plus, utility, EquilibriumTarget};
use cdma_nash::receivers::{
    sinr_mf_exact, sinr_mmse_exact, sinr_mmse_exact_with, InterferenceSet, MmseRoute,
};
use cdma_nash::rng::SeedStream;
use cdma_nash::EnergyDirection;
use num_complex::Complex64;
use proptest::prelude::*;

fn realization(seed: u64, k: usize, n: usize, l: usize, spread: f64) -> SystemRealization<f64> {
    let mut rng = SeedStream::new(seed).rng(&[1]);
    let chans: Vec<MultipathChannel<f64>> =
        (0..k).map(|_| MultipathChannel::sample(l, 1.0, &mut rng).unwrap()).collect();
    let gains = chans.iter().map(|c| c.dft_gains(n).unwrap()).collect();
    let codes = sample_spreading(n, k, &mut rng).unwrap();
    let powers = (0..k).map(|i| 1.0 + spread * (i as f64 / k as f64)).collect();
    SystemRealization::from_parts(gains, codes, powers, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_gains_preserve_energy(
        paths in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12),
        extra in 0usize..40,
    ) {
        let paths: Vec<Complex64> = paths.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        let n = paths.len() + extra;
        let ch = MultipathChannel::new(paths, 1.0).unwrap();
        let d = ch.dft_gains(n).unwrap();
        let mean: f64 = d.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        let e = ch.total_energy();
        prop_assert!((mean - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn permutation_codec_round_trips(k in 1usize..=20, raw in any::<u128>()) {
        let fact: u128 = (1..=k as u128).product();
        let signal = raw % fact;
        let order = decode_permutation(signal, k).unwrap();
        let mut seen = order.ranks().to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (1..=k).collect::<Vec<_>>());
        prop_assert_eq!(encode_permutation(&order).unwrap(), signal);
    }

    #[test]
    fn energy_ranks_are_a_sorted_permutation(e in prop::collection::vec(0.01f64..10.0, 1..40)) {
        let order = rank_by_energy(&e, EnergyDirection::Decreasing);
        let by_rank = order.users_by_rank();
        let mut ids = by_rank.clone();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..e.len()).collect::<Vec<_>>());
        for w in by_rank.windows(2) {
            prop_assert!(e[w[0]] >= e[w[1]]);
        }
    }

    #[test]
    fn sic_recursion_equals_closed_form(
        e in prop::collection::vec(0.05f64..20.0, 1..48),
        beta in 0.5f64..10.0,
        n in 8usize..512,
        sigma2 in 1e-3f64..10.0,
        mmse in any::<bool>(),
    ) {
        let filter = if mmse { FilterKind::MmseSic } else { FilterKind::MfSic };
        let target = EquilibriumTarget::fixed(beta).unwrap();
        let a = pa_sic_closed(&e, filter, &target, sigma2, n).unwrap();
        let b = pa_sic_recursive(&e, filter, &target, sigma2, n).unwrap();
        for (x, y) in a.powers.iter().zip(&b.powers) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn beta_plus_below_beta_star_and_decreasing(beta in 0.5f64..12.0, a1 in 0.01f64..0.9, a2 in 0.01f64..0.9) {
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let p_lo = solve_beta_plus(beta, lo).unwrap();
        let p_hi = solve_beta_plus(beta, hi).unwrap();
        prop_assert!(p_lo < beta && p_hi < beta);
        prop_assert!(p_hi <= p_lo + 1e-9);
    }

    #[test]
    fn utility_is_homogeneous_in_power(beta in 0.1f64..20.0, p in 1e-3f64..1e3, c in 1e-3f64..1e3) {
        let u = goodput::<f64>(100).unwrap();
        let a = utility(beta, p, &u).unwrap();
        let b = utility(beta, c * p, &u).unwrap();
        prop_assert!((a - c * b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mmse_dominates_matched_filter(seed in any::<u64>(), k in 2usize..12, l in 1usize..5, spread in 0.0f64..8.0) {
        let sys = realization(seed, k, 32, l, spread);
        for user in 0..k {
            let set = InterferenceSet::all_but(user, k);
            let mf = sinr_mf_exact(&sys, &set).unwrap();
            let mmse = sinr_mmse_exact(&sys, &set).unwrap();
            prop_assert!(mmse >= mf * (1.0 - 1e-10));
        }
    }

    #[test]
    fn chip_and_user_routes_agree(seed in any::<u64>(), k in 2usize..40, l in 1usize..5) {
        let sys = realization(seed, k, 24, l, 3.0);
        let set = InterferenceSet::all_but(0, k);
        let chip = sinr_mmse_exact_with(&sys, &set, MmseRoute::Chip).unwrap();
        let user = sinr_mmse_exact_with(&sys, &set, MmseRoute::User).unwrap();
        prop_assert!((chip - user).abs() <= 1e-9 * chip.max(1.0));
    }

    #[test]
    fn optimum_capacity_dominates_linear_mmse(alpha in 0.05f64..1.5, sigma2 in 0.05f64..5.0, ratio in 0.2f64..5.0) {
        let p = ChannelProfile::from_fn(alpha, sigma2, 8, 16, |x| 1.0 + (ratio - 1.0) * x / alpha, |f, _| {
            1.0 + 0.5 * (std::f64::consts::TAU * f).cos()
        })
        .unwrap();
        let mmse = capacity_mmse(&solve_beta_mmse(&p).unwrap());
        let opt = capacity_opt_identity(&p).unwrap();
        prop_assert!(opt >= mmse - 1e-9);
    }
}
