use fluctlab_core::bounds::{
    brute_force_walkers, count_reunions_by_enumeration, early_time_bound, late_time_bound, purity_walk_bound,
    two_design_bound, walker_reunion_count, BoundMode,
};
use fluctlab_core::fluxstats::TailCounter;
use fluctlab_core::haar::haar_state;
use fluctlab_core::qstate::{partial_trace, purity, trace_distance, von_neumann_entropy};
use fluctlab_core::rng::rng_from_seed;
use fluctlab_core::{DensityMatrix, StateVector, Subregion};
use proptest::prelude::*;

fn random_state(n: usize, q: usize, seed: u64) -> StateVector {
    let dim = q.pow(n as u32);
    StateVector::new(n, q, haar_state(dim, &mut rng_from_seed(seed))).unwrap()
}

fn region_strategy() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2usize..=6).prop_flat_map(|n| (Just(n), proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropy_inequalities((n, sites) in region_strategy(), seed in any::<u64>()) {
        let psi = random_state(n, 2, seed);
        let region = Subregion::new(sites, n).unwrap();
        let rho = partial_trace(&psi, &region).unwrap();
        let d = rho.dim() as f64;
        let p = purity(&rho);
        let s = von_neumann_entropy(&rho).unwrap();
        let dist = trace_distance(&rho, &DensityMatrix::maximally_mixed(rho.dim())).unwrap();
        prop_assert!(s >= -p.ln() - 1e-9);
        prop_assert!(dist * dist <= 2.0 * (d * p).ln() + 1e-9);
        prop_assert!(dist * dist <= d * p - 1.0 + 1e-9);
        prop_assert!(s <= d.ln() + 1e-9);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn complementary_regions_share_spectrum((n, sites) in region_strategy(), seed in any::<u64>()) {
        let psi = random_state(n, 2, seed);
        let a = Subregion::new(sites, n).unwrap();
        let b = Subregion::new(a.complement(n), n).unwrap();
        let sa = von_neumann_entropy(&partial_trace(&psi, &a).unwrap()).unwrap();
        let sb = von_neumann_entropy(&partial_trace(&psi, &b).unwrap()).unwrap();
        prop_assert!((sa - sb).abs() < 1e-9);
        let pa = purity(&partial_trace(&psi, &a).unwrap());
        let pb = purity(&partial_trace(&psi, &b).unwrap());
        prop_assert!((pa - pb).abs() < 1e-10);
    }

    #[test]
    fn qutrit_marginals_are_states(seed in any::<u64>(), start in 0usize..3) {
        let psi = random_state(3, 3, seed);
        let rho = partial_trace(&psi, &Subregion::interval(start, 2, 3).unwrap()).unwrap();
        prop_assert!(DensityMatrix::new(rho.dim(), rho.entries().to_vec()).is_ok());
    }

    #[test]
    fn early_bound_monotone(tau in 0.05f64..5.0, dtau in 0.0f64..2.0, t in 1usize..40, da in 1u64..16, db in 1u64..4096) {
        let a = early_time_bound(tau, da, db, 2, t, 1).unwrap();
        let b = early_time_bound(tau + dtau, da, db, 2, t, 1).unwrap();
        let c = early_time_bound(tau, da, db, 2, t + 1, 1).unwrap();
        prop_assert!(b.entropy <= a.entropy && b.trace <= a.trace);
        prop_assert!(c.entropy <= a.entropy && c.trace <= a.trace);
        prop_assert!(a.entropy.is_finite() && a.entropy >= 0.0);
    }

    #[test]
    fn two_design_monotone(tau in 0.05f64..8.0, dtau in 0.0f64..2.0, eps in 0.0f64..1.0) {
        for mode in [BoundMode::Entropy, BoundMode::Trace] {
            let a = two_design_bound(tau, 2, 64, eps, mode).unwrap();
            let b = two_design_bound(tau + dtau, 2, 64, eps, mode).unwrap();
            prop_assert!(b <= a && a.is_finite());
        }
    }

    #[test]
    fn late_bound_monotone_and_finite(tau in 0.01f64..4.0, dtau in 0.0f64..1.0, n in 4usize..40, t in 1u64..1_000_000) {
        // Domain: tau >= d_A/d_B with d_A = 2.
        prop_assume!(tau >= 2f64.powi(2 - n as i32));
        let a = late_time_bound(tau, t, n, 2, 2, 1.0, 0.5, BoundMode::Entropy).unwrap();
        let b = late_time_bound(tau + dtau, t, n, 2, 2, 1.0, 0.5, BoundMode::Entropy).unwrap();
        prop_assert!(a.is_finite() && a >= 0.0);
        prop_assert!(b <= a);
        // Nonincreasing in t before the plateau while t/d < e^{2 tau - 1}.
        let d = 2f64.powi(n as i32);
        if ((t + 1) as f64) < 0.5 * d && ((t + 1) as f64) / d < (2.0 * tau - 1.0).exp() {
            let c = late_time_bound(tau, t + 1, n, 2, 2, 1.0, 0.5, BoundMode::Entropy).unwrap();
            prop_assert!(c <= a * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tail_counter_merge_is_order_independent(xs in proptest::collection::vec(0.0f64..1.0, 1..200), split in 0usize..200) {
        let grid = [0.0, 0.1, 0.25, 0.5, 0.9];
        let cut = split.min(xs.len());
        let mut whole = TailCounter::new(&grid);
        xs.iter().for_each(|&x| whole.observe(x));
        let mut left = TailCounter::new(&grid);
        let mut right = TailCounter::new(&grid);
        xs[..cut].iter().for_each(|&x| left.observe(x));
        xs[cut..].iter().for_each(|&x| right.observe(x));
        let mut lr = left.clone();
        lr.merge(&right).unwrap();
        let mut rl = right.clone();
        rl.merge(&left).unwrap();
        prop_assert_eq!(lr.counts(), whole.counts());
        prop_assert_eq!(rl.counts(), whole.counts());
    }
}

#[test]
fn reunion_counts_match_enumeration_grid() {
    for a in [2u64, 4, 6, 8] {
        for t in 1..=10u32 {
            assert_eq!(walker_reunion_count(a, t as u64).unwrap(), count_reunions_by_enumeration(a, t).unwrap());
        }
    }
}

#[test]
fn enumerated_purity_below_walk_bound() {
    for q in 2..=5usize {
        for a in [2usize, 4, 6, 8] {
            for b in [2usize, 4, 6, 8] {
                for t in 1..=12 {
                    let v = brute_force_walkers(a, b, q, t).unwrap();
                    assert!(v <= purity_walk_bound(q, a, b, t, 0).unwrap() + 1e-12);
                    assert!(v <= purity_walk_bound(q, a, b, t, 1).unwrap() + 1e-12);
                }
            }
        }
    }
}
