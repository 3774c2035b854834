//! Hamming-distance-resolved amplitude correlations: the distance-weighted
//! purity identity, A_f profiles, and the uncorrelation predictors that tie
//! local purity to the participation ratios of mutually unbiased bases.

use crate::basis::{hamming_bits, SectorBasis};
use crate::error::{Error, Result};
use crate::pauli::Pauli;
use crate::states::{change_basis, BasisLabel, PureState};

/// sum_{k<j} f_kj p_k p_j over the basis labels of `basis` (generalized
/// Hamming distance for d > 2). O(N^2).
pub fn weighted_pair_sum(basis: &SectorBasis, probs: &[f64]) -> f64 {
    let strings = basis.strings();
    debug_assert_eq!(strings.len(), probs.len());
    let mut acc = 0.0;
    if basis.local_dim() == 2 {
        for k in 0..strings.len() {
            let (sk, pk) = (strings[k], probs[k]);
            let mut inner = 0.0;
            for j in (k + 1)..strings.len() {
                inner += hamming_bits(sk, strings[j]) as f64 * probs[j];
            }
            acc += pk * inner;
        }
    } else {
        for k in 0..strings.len() {
            let a = basis.string(k);
            for j in (k + 1)..strings.len() {
                let f = crate::basis::hamming(&a, &basis.string(j)).expect("same basis");
                acc += f as f64 * probs[k] * probs[j];
            }
        }
    }
    acc
}

/// Per-distance pair sums: element f holds sum_{k<j, f_kj=f} p_k p_j.
pub fn pair_sums_by_distance(basis: &SectorBasis, probs: &[f64]) -> Vec<f64> {
    let strings = basis.strings();
    let mut sums = vec![0.0; basis.n() + 1];
    if basis.local_dim() == 2 {
        for k in 0..strings.len() {
            let (sk, pk) = (strings[k], probs[k]);
            for j in (k + 1)..strings.len() {
                sums[hamming_bits(sk, strings[j]) as usize] += pk * probs[j];
            }
        }
    } else {
        for k in 0..strings.len() {
            let a = basis.string(k);
            for j in (k + 1)..strings.len() {
                let f = crate::basis::hamming(&a, &basis.string(j)).expect("same basis");
                sums[f as usize] += probs[k] * probs[j];
            }
        }
    }
    sums
}

/// Unordered-pair counts per distance within `basis` (O(N^2) enumeration;
/// full qubit bases have the closed form in `basis::pair_count_by_distance`).
pub fn sector_pair_counts(basis: &SectorBasis) -> Vec<u64> {
    let strings = basis.strings();
    let mut counts = vec![0u64; basis.n() + 1];
    if basis.local_dim() == 2 {
        for k in 0..strings.len() {
            for j in (k + 1)..strings.len() {
                counts[hamming_bits(strings[k], strings[j]) as usize] += 1;
            }
        }
    } else {
        for k in 0..strings.len() {
            let a = basis.string(k);
            for j in (k + 1)..strings.len() {
                let f = crate::basis::hamming(&a, &basis.string(j)).expect("same basis");
                counts[f as usize] += 1;
            }
        }
    }
    counts
}

/// P_alpha = 1 - (4/n) sum_{k<j} f_kj |a_k^alpha|^2 |a_j^alpha|^2 for a full
/// qubit state expressed in the basis `label`.
pub fn hamming_weighted_purity(psi: &PureState, label: BasisLabel) -> Result<f64> {
    if psi.local_dim() != 2 {
        return Err(Error::UnsupportedLocalDim(psi.local_dim()));
    }
    let rotated = change_basis(psi, label)?;
    let probs = rotated.probabilities();
    Ok(1.0 - 4.0 / psi.n() as f64 * weighted_pair_sum(rotated.basis(), &probs))
}

/// Qudit generalization: 1 - 2d/(n(d-1)) * sum f p p, evaluated on the
/// state's own basis labels. The caller is responsible for having rotated
/// into a frame where every site marginal is diagonal (then this equals
/// P_loc); for d = 2 in the z basis it reduces to `hamming_weighted_purity`.
pub fn qudit_hamming_purity(psi: &PureState) -> f64 {
    let d = psi.local_dim() as f64;
    let n = psi.n() as f64;
    let probs = psi.probabilities();
    1.0 - 2.0 * d / (n * (d - 1.0)) * weighted_pair_sum(psi.basis(), &probs)
}

pub const DEGENERATE_ABAR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct HammingProfile {
    pub basis_label: String,
    /// A_f: average of |a_k|^2 |a_j|^2 over unordered pairs at distance f
    /// (index f = 0..n; empty buckets hold 0).
    pub a_f: Vec<f64>,
    /// unordered pair counts per distance
    pub n_f: Vec<u64>,
    /// unconstrained pair average
    pub a_bar: f64,
    /// w_f = A_f / A_bar, defined as 0 when A_bar vanishes
    pub w_f: Vec<f64>,
    /// set when A_bar ~ 0 (basis states), making w_f meaningless
    pub degenerate: bool,
}

impl HammingProfile {
    pub fn csv_header() -> &'static str {
        "f,n_f,A_f,w_f"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        (1..self.a_f.len())
            .filter(|&f| self.n_f[f] > 0)
            .map(|f| {
                format!(
                    "{},{},{},{}",
                    f,
                    self.n_f[f],
                    crate::report::fmt_g12(self.a_f[f]),
                    crate::report::fmt_g12(self.w_f[f])
                )
            })
            .collect()
    }
}

/// Bucket all unordered pairs of the state's basis by Hamming distance.
pub fn profile(psi: &PureState, label: &str) -> HammingProfile {
    let probs = psi.probabilities();
    let sums = pair_sums_by_distance(psi.basis(), &probs);
    let counts = sector_pair_counts(psi.basis());
    profile_from_sums(label, &sums, &counts)
}

pub fn profile_from_sums(label: &str, sums: &[f64], counts: &[u64]) -> HammingProfile {
    let total_pairs: u64 = counts.iter().sum();
    let total_sum: f64 = sums.iter().sum();
    let a_bar = if total_pairs > 0 { total_sum / total_pairs as f64 } else { 0.0 };
    let degenerate = a_bar <= DEGENERATE_ABAR;
    let a_f: Vec<f64> = sums
        .iter()
        .zip(counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let w_f = a_f
        .iter()
        .map(|&a| if degenerate { 0.0 } else { a / a_bar })
        .collect();
    HammingProfile {
        basis_label: label.to_string(),
        a_f,
        n_f: counts.to_vec(),
        a_bar,
        w_f,
        degenerate,
    }
}

/// Theorem-style predictor: P_loc under exact Hamming uncorrelation in all
/// three mutually unbiased qubit bases.
pub fn uncorrelated_prediction(npc_x: f64, npc_y: f64, npc_z: f64, dim: usize) -> f64 {
    let n = dim as f64;
    n / (n - 1.0) * (1.0 / npc_x + 1.0 / npc_y + 1.0 / npc_z) - 3.0 / (n - 1.0)
}

/// Uncorrelation predictor specialized to the S_z = 0 sector.
pub fn sector_prediction_sz0(npc_z: f64, n0: usize) -> f64 {
    let n0 = n0 as f64;
    n0 / (n0 - 1.0) / npc_z - 1.0 / (n0 - 1.0)
}

/// Exact identity in the single-excitation sector (all pairs at distance 2).
pub fn single_excitation_relation(npc_z: f64, n: usize) -> f64 {
    let n = n as f64;
    4.0 / n / npc_z + (n - 4.0) / n
}

/// True iff `psi` is an eigenvector of the collective parity operator
/// (tensor of sigma_z); sector states always are. When true, all transverse
/// single-site expectations vanish, so P_loc = P_z.
pub fn z2_symmetry_check(psi: &PureState) -> Result<bool> {
    if psi.local_dim() != 2 {
        return Err(Error::UnsupportedLocalDim(psi.local_dim()));
    }
    let strings = psi.basis().strings();
    let mut even = 0.0;
    let mut odd = 0.0;
    for (k, a) in psi.amps().iter().enumerate() {
        if strings[k].count_ones() % 2 == 0 {
            even += a.norm_sqr();
        } else {
            odd += a.norm_sqr();
        }
    }
    let is_eig = even.min(odd) <= 1e-9;
    if is_eig && psi.basis().is_full() {
        for i in 0..psi.n() {
            let sx = psi.single_site_expectation(i, Pauli::X)?;
            let sy = psi.single_site_expectation(i, Pauli::Y)?;
            if sx.abs() > 1e-9 || sy.abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "parity eigenstate with nonzero transverse expectation at site {i}"
                )));
            }
        }
    }
    Ok(is_eig)
}
