use entcost::dilution::{self, CurtailedBinomial};
use entcost::entropy;
use entcost::eof;
use entcost::gibbs::{self, Beta, DiagonalHamiltonian, TailModel};
use entcost::typicality::{self, SourceDistribution, TypicalityMode};
use entcost::{rng, sampling, Ensemble, Spectrum, Subsystem};
use proptest::prelude::*;

fn probability_vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..=max_len).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

/// Mass of the weakly typical set by enumerating all `K^n` sequences.
fn brute_force_weak_mass(p: &[f64], n: usize, delta: f64) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    let k = p.len();
    let mut mass = 0.0;
    let mut seq = vec![0usize; n];
    loop {
        let prob: f64 = seq.iter().map(|&x| p[x]).product();
        let rate = -prob.log2() / n as f64;
        if (rate - h).abs() <= delta + 1e-12 {
            mass += prob;
        }
        let mut i = 0;
        while i < n && seq[i] == k - 1 {
            seq[i] = 0;
            i += 1;
        }
        if i == n {
            return mass;
        }
        seq[i] += 1;
    }
}

#[test]
fn weak_mass_matches_enumeration() {
    let cases: [(&[f64], usize, f64); 5] = [
        (&[0.8, 0.2], 10, 0.05),
        (&[0.8, 0.2], 12, 0.2),
        (&[0.5, 0.3, 0.2], 7, 0.1),
        (&[0.6, 0.25, 0.15], 8, 0.3),
        (&[0.4, 0.3, 0.2, 0.1], 6, 0.15),
    ];
    for (p, n, delta) in cases {
        let dist = SourceDistribution::new(p.to_vec()).unwrap();
        let got = typicality::weak_typical_mass(&dist, n as u64, delta, TypicalityMode::Exact).unwrap();
        let want = brute_force_weak_mass(p, n, delta);
        assert!((got.mass - want).abs() < 1e-12, "{p:?} n={n}: {} vs {want}", got.mass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_mass_is_monotone_in_delta(p in probability_vector(4), n in 1u64..60, d1 in 0.01f64..0.5, extra in 0.0f64..0.5) {
        let dist = SourceDistribution::new(p).unwrap();
        let lo = typicality::weak_typical_mass(&dist, n, d1, TypicalityMode::Exact).unwrap();
        let hi = typicality::weak_typical_mass(&dist, n, d1 + extra, TypicalityMode::Exact).unwrap();
        prop_assert!(hi.mass >= lo.mass - 1e-12);
        prop_assert!((lo.mass + lo.atypical_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weak_cardinality_respects_upper_bound(p in probability_vector(3), n in 1u64..80, delta in 0.01f64..0.4) {
        let dist = SourceDistribution::new(p).unwrap();
        let r = typicality::weak_typical_mass(&dist, n, delta, TypicalityMode::Exact).unwrap();
        if let Some(log_card) = r.log2_cardinality_bound {
            prop_assert!(log_card <= n as f64 * (dist.entropy_bits() + delta) + 1e-9);
        }
    }

    #[test]
    fn integral_forms_agree(p in probability_vector(24)) {
        let s = Spectrum::from_unsorted(p, 0.0).unwrap();
        let vn = entropy::von_neumann_entropy(&s).unwrap();
        let cf = entropy::entropy_integral_closed_form(&s).unwrap();
        let quad = entropy::entropy_integral_quadrature(&s, 16).unwrap();
        prop_assert!((cf - vn).abs() <= 1e-10 * vn.max(1.0));
        prop_assert!((quad - cf).abs() <= 1e-10);
    }

    #[test]
    fn tail_sums_are_decreasing(p in probability_vector(16)) {
        let s = Spectrum::from_unsorted(p, 0.0).unwrap();
        let tails: Vec<f64> = (0..=s.len()).map(|n| entropy::chi_tilde(&s, n)).collect();
        prop_assert!((tails[0] - 1.0).abs() < 1e-12);
        prop_assert!(tails.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(tails[s.len()].abs() < 1e-12);
    }

    #[test]
    fn gibbs_beta_round_trip(gaps in prop::collection::vec(0.1f64..3.0, 1..6), beta in 0.05f64..8.0) {
        let mut energies = vec![0.0];
        for g in gaps {
            energies.push(energies.last().unwrap() + g);
        }
        let b = energies.last().unwrap() + 0.5 - energies.len() as f64;
        let h = DiagonalHamiltonian::new(energies, TailModel::Affine { a: 1.0, b }).unwrap();
        let e = gibbs::gibbs_energy(&h, beta).unwrap();
        let point = gibbs::beta_of_energy(&h, e).unwrap();
        let Beta::Finite(found) = point.beta else { return Err(TestCaseError::fail("infinite beta")) };
        prop_assert!((found - beta).abs() <= 1e-6 * beta.max(1.0), "{found} vs {beta}");
    }

    #[test]
    fn schmidt_entropy_is_symmetric(seed in any::<u64>(), da in 1usize..6, db in 1usize..6) {
        let psi = sampling::random_pure_state(&mut rng::stream(seed, 0), da, db).unwrap();
        let state = psi.to_state();
        let sa = entropy::von_neumann_entropy(&state.local_spectrum(Subsystem::A)).unwrap();
        let sb = entropy::von_neumann_entropy(&state.local_spectrum(Subsystem::B)).unwrap();
        prop_assert!((sa - psi.entanglement_entropy()).abs() < 1e-10);
        prop_assert!((sb - psi.entanglement_entropy()).abs() < 1e-10);
    }

    #[test]
    fn curtailed_binomial_is_a_distribution(p0 in 0.1f64..0.9, xi in 0.01f64..0.1, n in 1u64..400) {
        prop_assume!(xi <= p0.min(1.0 - p0));
        if let Ok(cb) = CurtailedBinomial::new(p0, xi, n) {
            let total: f64 = cb.pmf().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (k, _) in cb.pmf() {
                prop_assert!((k as f64 / n as f64 - p0).abs() <= xi + 1e-12);
            }
        }
    }

    #[test]
    fn full_split_equals_decomposition_rate(seed in any::<u64>(), members in 1usize..6) {
        let mut r = rng::stream(seed, 1);
        let states: Vec<_> = (0..members).map(|_| sampling::random_pure_state(&mut r, 3, 3).unwrap()).collect();
        let w = sampling::random_spectrum(&mut r, members).unwrap();
        let e = Ensemble::pure(w.values().to_vec(), states).unwrap();
        let full = dilution::mixed_dilution_rate(&e, members - 1).unwrap();
        prop_assert_eq!(full.wasteful_term, 0.0);
        prop_assert!((full.rate_bound - eof::dilution_rate_upper_bound(&e).unwrap()).abs() < 1e-12);
        let first = dilution::mixed_dilution_rate(&e, 0).unwrap();
        prop_assert!((first.common_term + first.wasteful_term - first.rate_bound).abs() < 1e-12);
        prop_assert!((first.delta_n - (1.0 - e.weights()[0])).abs() < 1e-12);
    }
}
