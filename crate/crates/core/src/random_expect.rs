//! Expected purities over random-state ensembles: closed forms for the
//! Haar (complex and real) measures on the full space and on magnetization
//! sectors, plus seeded Monte-Carlo estimators verifying each formula.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{binomial, SectorBasis, SectorConstraint};
use crate::error::{Error, Result};
use crate::observables::{CompiledSet, ObservableSet, Operator, SetKind};
use crate::states::EnsembleSpec;

/// E P_h = kappa_h dim(h)/(N + 1) for complex Haar states on dimension N.
pub fn expected_purity_haar(set: &ObservableSet, dim: usize) -> f64 {
    set.kappa() * set.dim_h() as f64 / (dim as f64 + 1.0)
}

/// E P_h = kappa_h 2 dim(h)/(N + 2) for real orthogonally-invariant states;
/// every operator must be real in the reference basis.
pub fn expected_purity_real(set: &ObservableSet, dim: usize) -> Result<f64> {
    if set.kind() == SetKind::Explicit {
        for (i, op) in set.ops().iter().enumerate() {
            if !op.is_real() {
                return Err(Error::ObservableContract(format!(
                    "operator {i} of {} is complex; the real-ensemble formula needs real operators",
                    set.label()
                )));
            }
        }
    }
    Ok(set.kappa() * 2.0 * set.dim_h() as f64 / (dim as f64 + 2.0))
}

/// Decomposition of a projected operator: Pi b Pi = alpha b' + beta 1 with
/// tr(b') = 0 and tr(b'^2) = N_S. `zero` marks operators annihilated by the
/// projection (detected structurally, never numerically).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProjectedOp {
    pub alpha_sq: f64,
    pub beta: f64,
    pub zero: bool,
}

impl ProjectedOp {
    const ZERO: Self = Self { alpha_sq: 0.0, beta: 0.0, zero: true };
}

/// tr(Pi Z_T Pi) for a z-type string with support set of size t, projected
/// onto the strings with `ones` ones out of n sites. Each term counts
/// strings with j ones inside the support (sign (-1)^j).
pub fn z_string_sector_trace(n: usize, t: usize, ones: usize) -> i128 {
    let mut tr: i128 = 0;
    for j in 0..=t.min(ones) {
        if ones - j > n - t {
            continue;
        }
        let term = (binomial(t, j) * binomial(n - t, ones - j)) as i128;
        tr += if j % 2 == 0 { term } else { -term };
    }
    tr
}

/// #{s in sector : s ^ flip in sector} for a flip set of size q: the flip
/// preserves magnetization iff exactly q/2 of the flipped sites hold a one.
pub fn flip_pair_count(n: usize, q: usize, ones: usize) -> u128 {
    if q % 2 != 0 || q / 2 > ones || ones - q / 2 > n - q {
        return 0;
    }
    binomial(q, q / 2) * binomial(n - q, ones - q / 2)
}

/// Project one operator onto a sector: beta = tr(Pi b Pi)/N_S and
/// alpha^2 = [tr((Pi b Pi)^2) - N_S beta^2]/N_S. Pauli-string traces are
/// evaluated combinatorially; no dense projector is ever formed.
pub fn project_operator(op: &Operator, sector: &SectorBasis) -> Result<ProjectedOp> {
    let n_s = sector.dim() as f64;
    match sector.constraint() {
        SectorConstraint::Full => {
            // Pi = 1: traceless normalized operators keep alpha = 1.
            Ok(ProjectedOp { alpha_sq: 1.0, beta: 0.0, zero: false })
        }
        SectorConstraint::FixedMagnetization(m) => {
            let n = sector.n();
            let ones = ((n as i64 - m) / 2) as usize;
            match op {
                Operator::Pauli(p) => {
                    if p.n() != n {
                        return Err(Error::DimensionMismatch(sector.dim(), 1 << p.n()));
                    }
                    let flip = p.flip_mask();
                    if flip == 0 {
                        let t = p.z_mask().count_ones() as usize;
                        if t == 0 {
                            return Err(Error::ObservableContract(
                                "identity operator cannot be projected".into(),
                            ));
                        }
                        let tr = z_string_sector_trace(n, t, ones) as f64 * p.coeff();
                        // signs square to one: tr((Pi b Pi)^2) = N_S coeff^2
                        let beta = tr / n_s;
                        let alpha_sq = p.coeff() * p.coeff() - beta * beta;
                        Ok(ProjectedOp { alpha_sq, beta, zero: false })
                    } else {
                        let q = flip.count_ones() as usize;
                        let count = flip_pair_count(n, q, ones);
                        if count == 0 {
                            return Ok(ProjectedOp::ZERO);
                        }
                        // off-diagonal: beta = 0;
                        // tr((Pi b Pi)^2) = sum_s |<s^flip|b|s>|^2 = coeff^2 count
                        let alpha_sq = p.coeff() * p.coeff() * count as f64 / n_s;
                        Ok(ProjectedOp { alpha_sq, beta: 0.0, zero: false })
                    }
                }
                Operator::DiagonalReal(v) => {
                    if v.len() != sector.dim() {
                        return Err(Error::DimensionMismatch(sector.dim(), v.len()));
                    }
                    let tr: f64 = v.iter().sum();
                    let tr_sq: f64 = v.iter().map(|x| x * x).sum();
                    let beta = tr / n_s;
                    Ok(ProjectedOp { alpha_sq: (tr_sq - n_s * beta * beta) / n_s, beta, zero: false })
                }
                Operator::SingleSite { .. } | Operator::Dense(_) => Err(Error::Config(
                    "sector projection supports Pauli and diagonal operators".into(),
                )),
            }
        }
    }
}

/// E P_h for Haar states drawn inside a sector:
/// kappa_h sum_i [alpha_i^2 w + beta_i^2] with the single-operator moment
/// w = 1/(N_S + 1) (complex) or 2/(N_S + 2) (real). In the real case,
/// operators that are imaginary in the reference basis have identically
/// zero expectation on real vectors and are skipped.
pub fn expected_purity_sector(set: &ObservableSet, sector: &SectorBasis, real: bool) -> Result<f64> {
    if set.kind() == SetKind::FullAlgebra {
        return Err(Error::Config("sector formula needs an explicit operator list".into()));
    }
    let n_s = sector.dim() as f64;
    let w = if real { 2.0 / (n_s + 2.0) } else { 1.0 / (n_s + 1.0) };
    let mut acc = 0.0;
    for op in set.ops() {
        if real && !op.is_real() {
            continue;
        }
        let proj = project_operator(op, sector)?;
        if proj.zero {
            continue;
        }
        acc += proj.alpha_sq * w + proj.beta * proj.beta;
    }
    Ok(set.kappa() * acc)
}

/// The two-site-block purity expectation on the S_z = 0 sector of an even
/// chain, written out through the combinatorial traces: a closed-form
/// convenience wrapper around `expected_purity_sector`.
pub fn bilocal_sector_expectation(n: usize) -> Result<f64> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Config(format!("need even n >= 4, got {n}")));
    }
    let sector = SectorBasis::sector(n, 0)?;
    let set = ObservableSet::q_block(n, 2)?;
    expected_purity_sector(&set, &sector, true)
}

/// tr(Pi sigma_z^(1) sigma_z^(2) Pi) on the S_z = 0 sector (lambda; -84 at
/// n = 12).
pub fn lambda_zz(n: usize) -> i128 {
    z_string_sector_trace(n, 2, n / 2)
}

/// Sample mean and standard error of P_h over `samples` seeded draws.
/// Deterministic for a given spec seed at any thread count: sample k always
/// uses stream k, and the reduction is an ordered pairwise sum.
pub fn monte_carlo_expected_purity(
    set: &ObservableSet,
    spec: &EnsembleSpec,
    samples: u64,
) -> Result<(f64, f64)> {
    if samples < 100 {
        return Err(Error::Config(format!("need at least 100 samples, got {samples}")));
    }
    if set.kind() == SetKind::FullAlgebra {
        return Ok((1.0, 0.0));
    }
    let compiled = CompiledSet::compile(set, &spec.basis)?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| compiled.purity(spec.sample_at(k).amps()))
        .collect();
    let mean = pairwise_sum(&values) / samples as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (samples as f64 - 1.0);
    Ok((mean, (var / samples as f64).sqrt()))
}

/// Order-fixed pairwise summation (bit-stable, thread-count independent).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
