//! Closed-form random-ensemble expectations against their Monte-Carlo
//! twins, at reduced sample counts (the full-scale sweep lives in the
//! acceptance suite).

use std::sync::Arc;

use gepurity::basis::{binomial, SectorBasis};
use gepurity::observables::ObservableSet;
use gepurity::random_expect as re;
use gepurity::states::{EnsembleKind, EnsembleSpec};

fn check_mc(set: &ObservableSet, spec: &EnsembleSpec, samples: u64, formula: f64, what: &str) {
    let (mean, se) = re::monte_carlo_expected_purity(set, spec, samples).unwrap();
    assert!(
        (mean - formula).abs() < 3.0 * se,
        "{what}: mc {mean} vs formula {formula} (se {se})"
    );
}

#[test]
fn local_purity_complex_haar() {
    for n in [2usize, 4, 6] {
        let dim = 1 << n;
        let set = ObservableSet::local_qubits(n);
        let spec = EnsembleSpec::new(
            EnsembleKind::HaarComplex,
            Arc::new(SectorBasis::full(n)),
            600 + n as u64,
        )
        .unwrap();
        check_mc(&set, &spec, 20_000, 3.0 / (dim as f64 + 1.0), &format!("local n={n}"));
    }
}

#[test]
fn spin_coherence_expectation() {
    for j2 in [2u64, 5, 10] {
        let j = j2 as f64 / 2.0; // spins 1, 5/2, 5
        let dim = (2.0 * j + 1.0) as usize;
        let set = ObservableSet::spin_j(j).unwrap();
        let spec = EnsembleSpec::new(
            EnsembleKind::HaarComplex,
            Arc::new(SectorBasis::full_qudit(1, dim as u8)),
            700 + j2,
        )
        .unwrap();
        check_mc(&set, &spec, 20_000, 1.0 / (2.0 * j), &format!("spin J={j}"));
    }
}

#[test]
fn real_ipr_expectation() {
    let dim = 16usize;
    let set = ObservableSet::diagonal_algebra(dim);
    let spec = EnsembleSpec::new(
        EnsembleKind::HaarReal,
        Arc::new(SectorBasis::full(4)),
        800,
    )
    .unwrap();
    let formula = re::expected_purity_real(&set, dim).unwrap();
    check_mc(&set, &spec, 30_000, formula, "real diag N=16");
    // the diagonal-purity bridge turns this into E IPR = 3/(N+2)
    let e_ipr = (formula * (dim as f64 - 1.0) + 1.0) / dim as f64;
    assert!((e_ipr - 3.0 / (dim as f64 + 2.0)).abs() < 1e-12);
}

#[test]
fn real_z_operators_on_full_space() {
    use gepurity::observables::Operator;
    use gepurity::pauli::{Pauli, PauliString};
    let n = 4usize;
    let dim = 1 << n;
    let ops: Vec<Operator> = (0..n)
        .map(|i| Operator::Pauli(PauliString::single(n, i, Pauli::Z)))
        .collect();
    let set = ObservableSet::new("z-only", ops, 1.0 / n as f64);
    let formula = re::expected_purity_real(&set, dim).unwrap();
    assert!((formula - 2.0 / (n as f64) * n as f64 / (dim as f64 + 2.0)).abs() < 1e-12);
    let spec = EnsembleSpec::new(EnsembleKind::HaarReal, Arc::new(SectorBasis::full(n)), 900).unwrap();
    check_mc(&set, &spec, 30_000, formula, "real z ops");
}

#[test]
fn sector_local_expectation() {
    let n = 6usize;
    let sector = Arc::new(SectorBasis::sector(n, 0).unwrap());
    let n0 = sector.dim() as f64;
    let set = ObservableSet::local_qubits(n);
    let formula = re::expected_purity_sector(&set, &sector, true).unwrap();
    assert!((formula - 2.0 / (n0 + 2.0)).abs() < 1e-12);
    let spec = EnsembleSpec::new(EnsembleKind::HaarReal, sector, 1000).unwrap();
    check_mc(&set, &spec, 30_000, formula, "sector local real");
}

#[test]
fn bilocal_sector_expectation_small() {
    for n in [6usize, 8] {
        let sector = Arc::new(SectorBasis::sector(n, 0).unwrap());
        let set = ObservableSet::q_block(n, 2).unwrap();
        let formula = re::bilocal_sector_expectation(n).unwrap();
        let spec = EnsembleSpec::new(EnsembleKind::HaarReal, sector, 1100 + n as u64).unwrap();
        check_mc(&set, &spec, 20_000, formula, &format!("bilocal n={n}"));
    }
}

#[test]
fn complex_sector_formula_against_mc() {
    // the complex-ensemble branch of the sector formula, cross-checked the
    // same way
    let n = 6usize;
    let sector = Arc::new(SectorBasis::sector(n, 0).unwrap());
    let set = ObservableSet::local_qubits(n);
    let formula = re::expected_purity_sector(&set, &sector, false).unwrap();
    let n0 = sector.dim() as f64;
    assert!((formula - 1.0 / (n0 + 1.0)).abs() < 1e-12); // alpha = 1 per z op
    let spec = EnsembleSpec::new(EnsembleKind::HaarComplex, sector, 1200).unwrap();
    check_mc(&set, &spec, 30_000, formula, "sector local complex");
}

#[test]
fn lambda_values() {
    assert_eq!(re::lambda_zz(12), -84);
    let by_sum: i128 = (0..=2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1i128 } else { -1 };
            sign * (binomial(2, k) * binomial(10, 6 - k)) as i128
        })
        .sum();
    assert_eq!(by_sum, -84);
}
