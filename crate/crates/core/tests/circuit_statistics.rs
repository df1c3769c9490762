//! Monte-Carlo checks of the circuit engine against exact ensemble averages.

use fluctlab_core::bounds::{exact_brickwork_purity, wall_factor};
use fluctlab_core::fluxstats::Moments;
use fluctlab_core::rqc::{
    run_brickwork, Brickwork, ChargeSector, CircuitConfig, GateEnsemble, InitialState,
};
use fluctlab_core::rng::StreamSeeder;
use fluctlab_core::Subregion;

fn mean_purity(cfg: &CircuitConfig, region: &Subregion, trials: u64) -> Vec<Moments> {
    let mut acc = vec![Moments::default(); cfg.depth + 1];
    for trial in 0..trials {
        let out = run_brickwork(cfg, trial, std::slice::from_ref(region), 1).unwrap();
        for (m, &p) in acc.iter_mut().zip(&out[0].purity) {
            m.push(p);
        }
    }
    acc
}

#[test]
fn single_site_purity_matches_exact_average() {
    let cfg = CircuitConfig::haar(6, 2, 4, 2024);
    let region = Subregion::interval(0, 1, 6).unwrap();
    let stats = mean_purity(&cfg, &region, 100_000);
    for (t, m) in stats.iter().enumerate() {
        let exact = exact_brickwork_purity(6, 2, &region, t).unwrap();
        let se = m.stderr().max(1e-12);
        assert!((m.mean() - exact).abs() < 3.0 * se + 1e-12, "t={t}: {} vs {exact} (se {se})", m.mean());
    }
}

#[test]
fn aligned_pair_follows_pre_reunion_law() {
    // Sites {2,3,4,5} on a ring of 8; boundaries on even-layer gates at odd depth.
    let cfg = CircuitConfig::haar(8, 2, 3, 77);
    let region = Subregion::interval(2, 4, 8).unwrap();
    let stats = mean_purity(&cfg, &region, 40_000);
    let m = &stats[3];
    let law = wall_factor(2).powi(4); // two walker steps each side
    assert!((m.mean() - law).abs() < 3.0 * m.stderr(), "{} vs {law}", m.mean());
}

// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn single_site_entropy_is_translation_covariant() {
    let cfg = CircuitConfig::haar(6, 2, 5, 31);
    let sites = [Subregion::interval(0, 1, 6).unwrap(), Subregion::interval(3, 1, 6).unwrap()];
    let trials = 10_000;
    let mut s0 = Vec::with_capacity(trials);
    let mut s3 = Vec::with_capacity(trials);
    for trial in 0..trials as u64 {
        let out = run_brickwork(&cfg, trial, &sites, 5).unwrap();
        s0.push(*out[0].entropy.last().unwrap());
        s3.push(*out[1].entropy.last().unwrap());
    }
    // Same trials feed both samples, so use the independent-sample critical
    // value at alpha = 0.001 as a loose threshold.
    let crit = 1.95 * (2.0 / trials as f64).sqrt();
    assert!(ks_statistic(s0, s3) < crit);
}

#[test]
fn charge_stays_in_sector_for_both_patterns() {
    for init in [InitialState::HomogeneousHalfFilling, InitialState::StepFunction] {
        let cfg = CircuitConfig {
            n: 10,
            q: 2,
            depth: 100,
            ensemble: GateEnsemble::U1Conserving,
            initial_state: init,
            master_seed: 5,
        };
        let sector = ChargeSector { total_charge: 5 };
        let seeder = StreamSeeder::new(cfg.master_seed, "charge");
        for trial in 0..3 {
            let mut c = Brickwork::new(&cfg, seeder.stream(trial)).unwrap();
            for _ in 0..cfg.depth {
                c.step().unwrap();
                assert!(sector.leakage(c.state()) < 1e-12);
                assert!((c.state().norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }
}
