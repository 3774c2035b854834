//! Desk-scale chain experiment checks at n = 6 and n = 8.

use std::sync::Arc;

use approx::assert_relative_eq;
use gepurity::basis::SectorBasis;
use gepurity::chain::{self, ChainConfig, ChainSpec};
use gepurity::states::RngStreams;

#[test]
fn realized_spectra_are_reproducible_and_clean() {
    let sector = Arc::new(SectorBasis::sector(8, 0).unwrap());
    let spec = ChainSpec { n: 8, j: 0.59, eps: 1.0, disorder_width: 1.0, seed: 7 };
    let mut rng = RngStreams::new(spec.seed).stream(0);
    let eps = spec.draw_disorder(&mut rng);
    for &e in &eps {
        assert!((0.5..=1.5).contains(&e));
    }
    let h = chain::build_hamiltonian(&eps, spec.j, &sector).unwrap();
    assert_relative_eq!((&h - h.transpose()).norm(), 0.0, epsilon = 1e-14);
    let res = chain::diagonalize(&h, sector, 0).unwrap();
    assert!(res.energies.windows(2).all(|w| w[0] <= w[1]));
    assert!(!chain::has_degeneracy(&res.energies));
}

#[test]
fn records_satisfy_range_invariants() {
    let sector = Arc::new(SectorBasis::sector(8, 0).unwrap());
    let n0 = sector.dim() as f64;
    let spec = ChainSpec { n: 8, j: 1.0, eps: 1.0, disorder_width: 1.0, seed: 3 };
    let mut rng = RngStreams::new(spec.seed).stream(0);
    let eps = spec.draw_disorder(&mut rng);
    let h = chain::build_hamiltonian(&eps, spec.j, &sector).unwrap();
    let res = chain::diagonalize(&h, sector, 0).unwrap();
    let recs = chain::analyze_eigenvectors(&res).unwrap();
    assert_eq!(recs.len(), 70);
    for r in &recs {
        assert!(r.npc_z >= 1.0 - 1e-9 && r.npc_z <= n0 + 1e-9);
        assert!(r.p_loc >= -1e-9 && r.p_loc <= 1.0 + 1e-9);
        assert_eq!(r.a_f.len(), 4); // f = 2, 4, 6, 8
        assert!(r.a_f.iter().all(|&a| a >= 0.0));
    }
    // edge flags cover exactly the trimmed fraction
    let edge_count = recs.iter().filter(|r| r.edge).count();
    assert_eq!(edge_count, 14); // 7 at each end of 70 levels
}

#[test]
fn weak_coupling_is_more_localized_than_strong() {
    let config = |j: f64| ChainConfig {
        n: 8,
        ratios: vec![j],
        realizations: 10,
        master_seed: 99,
        eps: 1.0,
        bins: 10,
    };
    let weak = chain::run_ensemble(&config(0.05)).unwrap();
    let strong = chain::run_ensemble(&config(1.0)).unwrap();
    let mean_npc = |ds: &gepurity::chain::ExperimentDataset| {
        let hist = &ds.ratios[0].npc_hist;
        let total: u64 = hist.iter().sum();
        hist.iter()
            .enumerate()
            .map(|(i, &c)| (i as f64 + 1.5) * c as f64)
            .sum::<f64>()
            / total as f64
    };
    assert!(
        mean_npc(&weak) < mean_npc(&strong),
        "weak {} vs strong {}",
        mean_npc(&weak),
        mean_npc(&strong)
    );
    // gap-ratio ordering follows the localization crossover
    assert!(
        weak.ratios[0].level_stats.mean_gap_ratio < strong.ratios[0].level_stats.mean_gap_ratio
    );
}

#[test]
fn perturbative_regime_pairs_sit_at_distance_two() {
    // weak coupling mixes mostly distance-2 basis states, so A_2 dominates
    // A_4 for barely-delocalized eigenvectors
    let config = ChainConfig {
        n: 8,
        ratios: vec![0.05],
        realizations: 10,
        master_seed: 11,
        eps: 1.0,
        bins: 10,
    };
    let ds = chain::run_ensemble(&config).unwrap();
    let rd = &ds.ratios[0];
    // NPC bins [1,2) and [2,3): compare mean A_2 and A_4
    let (mut a2, mut a4, mut w) = (0.0, 0.0, 0.0);
    for b in 0..2usize {
        let c = rd.af_binned[0][b].count as f64;
        if c > 0.0 {
            a2 += rd.af_binned[0][b].mean * c;
            a4 += rd.af_binned[1][b].mean * c;
            w += c;
        }
    }
    assert!(w > 0.0, "no barely-delocalized eigenvectors found");
    assert!(a2 / w > a4 / w, "A_2 {} not above A_4 {}", a2 / w, a4 / w);
}

#[test]
fn binned_means_follow_the_sector_prediction_shape() {
    // binned P_loc decreases with NPC
    let config = ChainConfig {
        n: 8,
        ratios: vec![0.59],
        realizations: 20,
        master_seed: 17,
        eps: 1.0,
        bins: 10,
    };
    let ds = chain::run_ensemble(&config).unwrap();
    let points = chain::fit_points(&ds.ratios[0].ploc_binned);
    assert!(points.len() >= 10);
    let decreasing = points
        .windows(2)
        .filter(|w| w[1].1 <= w[0].1 + 0.02)
        .count();
    assert!(
        decreasing as f64 >= 0.9 * (points.len() - 1) as f64,
        "P_loc not decreasing against NPC: {points:?}"
    );
}
