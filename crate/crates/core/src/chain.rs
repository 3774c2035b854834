//! Disordered Heisenberg chain experiment: sector Hamiltonian assembly,
//! full exact diagonalization, level statistics, per-eigenvector
//! delocalization/purity/Hamming analysis, disorder-ensemble aggregation,
//! and the hyperbolic fit of P_loc against NPC_z.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{SectorBasis, SectorConstraint};
use crate::error::{Error, Result};
use crate::hamming::pair_sums_by_distance;
use crate::random_expect::{pairwise_sum, z_string_sector_trace};
use crate::states::RngStreams;
use rand::Rng;

/// One disorder realization of the chain (energies in units of the
/// disorder width unless the caller scales otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    /// number of sites (open boundary)
    pub n: usize,
    /// exchange coupling J
    pub j: f64,
    /// uniform splitting epsilon (a sector constant for fixed S_z)
    pub eps: f64,
    /// width of the uniform on-site disorder interval [-w/2, w/2]
    pub disorder_width: f64,
    /// seed of this realization's stream
    pub seed: u64,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("need n >= 2 sites, got {}", self.n)));
        }
        if self.j <= 0.0 {
            return Err(Error::Config(format!("need J > 0, got {}", self.j)));
        }
        if self.disorder_width < 0.0 {
            return Err(Error::Config("disorder width must be nonnegative".into()));
        }
        Ok(())
    }

    /// Site splittings eps_i = eps + delta_i, delta_i uniform in [-w/2, w/2].
    pub fn draw_disorder(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.n)
            .map(|_| self.eps + (rng.gen::<f64>() - 0.5) * self.disorder_width)
            .collect()
    }
}

/// z eigenvalue (+1/-1) of site `site` in packed string `s` (digit 1 is
/// spin down).
#[inline]
fn z_of(s: u64, n: usize, site: usize) -> f64 {
    if (s >> (n - 1 - site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// H = sum_i (eps_i/2) sigma_z^(i) + (J/4) sum_i vec(sigma)_i . vec(sigma)_{i+1}
/// assembled directly inside the sector: diagonal Ising part plus J/2
/// flip-flop elements between strings differing by one adjacent swap.
/// Real symmetric, <= n nonzeros per row, open boundary.
pub fn build_hamiltonian(site_eps: &[f64], j: f64, sector: &SectorBasis) -> Result<DMatrix<f64>> {
    let n = sector.n();
    if site_eps.len() != n || sector.local_dim() != 2 {
        return Err(Error::LengthMismatch(site_eps.len(), n));
    }
    let dim = sector.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (k, &s) in sector.strings().iter().enumerate() {
        let mut diag = 0.0;
        for i in 0..n {
            diag += site_eps[i] / 2.0 * z_of(s, n, i);
        }
        for i in 0..n - 1 {
            diag += j / 4.0 * z_of(s, n, i) * z_of(s, n, i + 1);
        }
        h[(k, k)] = diag;
        for i in 0..n - 1 {
            let mask = (1u64 << (n - 1 - i)) | (1u64 << (n - 2 - i));
            let pair = s & mask;
            if pair != 0 && pair != mask {
                // anti-aligned neighbors: flip-flop connects s and s ^ mask
                let t = s ^ mask;
                if let Some(l) = sector.rank_packed(t) {
                    h[(k, l)] = j / 2.0;
                }
            }
        }
    }
    Ok(h)
}

/// tr H from the combinatorial sector traces of sigma_z and sigma_z sigma_z
/// (never from the matrix); used as an assembly cross-check.
pub fn trace_formula(site_eps: &[f64], j: f64, sector: &SectorBasis) -> f64 {
    let n = sector.n();
    let ones = match sector.constraint() {
        SectorConstraint::Full => {
            // tr sigma_z = 0 and tr sigma_z sigma_z = 0 on the full space
            return 0.0;
        }
        SectorConstraint::FixedMagnetization(m) => ((n as i64 - m) / 2) as usize,
    };
    let t1 = z_string_sector_trace(n, 1, ones) as f64;
    let t2 = z_string_sector_trace(n, 2, ones) as f64;
    site_eps.iter().sum::<f64>() / 2.0 * t1 + j / 4.0 * (n as f64 - 1.0) * t2
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub sector: Arc<SectorBasis>,
    /// ascending
    pub energies: Vec<f64>,
    /// column k is the eigenvector of energies[k]
    pub vectors: DMatrix<f64>,
    pub realization_id: u64,
}

/// Targeted Jacobi sweeps on M = V^T H V: the base solver leaves M almost
/// diagonal but can miss full accuracy on clustered eigenvalues, and a few
/// rotations on the offending pairs restore residuals to rounding level.
/// Returns the refined diagonal; V is updated in place.
fn jacobi_refine(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, scale: f64) -> Vec<f64> {
    let dim = m.nrows();
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    for _sweep in 0..12 {
        let mut rotated = false;
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                rotated = true;
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..dim {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..dim).map(|k| m[(k, k)]).collect()
}

/// Full dense eigendecomposition with residual and orthonormality checks:
/// ||Hv - Ev|| < 1e-8 ||H|| per pair, ||V^T V - 1|| below 1e-9 per entry.
pub fn diagonalize(h: &DMatrix<f64>, sector: Arc<SectorBasis>, realization_id: u64) -> Result<SpectralResult> {
    let dim = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut v = eig.eigenvectors;
    let mut m = v.transpose() * h * &v;
    let eigenvalues = jacobi_refine(&mut m, &mut v, h.norm());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &v.column(old));
    }
    let h_norm = h.norm();
    let residual = h * &vectors - &vectors * DMatrix::from_diagonal(&DVector::from_vec(energies.clone()));
    for k in 0..dim {
        let r = residual.column(k).norm();
        if r > 1e-8 * h_norm {
            return Err(Error::Numerical(format!(
                "eigenpair {k} residual {r:.3e} exceeds 1e-8 * ||H|| = {:.3e}",
                1e-8 * h_norm
            )));
        }
    }
    let gram = vectors.transpose() * &vectors;
    for k in 0..dim {
        for l in k..dim {
            let want = if k == l { 1.0 } else { 0.0 };
            if (gram[(k, l)] - want).abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "eigenvectors {k},{l} not orthonormal: overlap {}",
                    gram[(k, l)]
                )));
            }
        }
    }
    Ok(SpectralResult { sector, energies, vectors, realization_id })
}

pub const DEGENERACY_TOL: f64 = 1e-12;

/// True iff two consecutive eigenvalues collide below `DEGENERACY_TOL`
/// (relative to the spectral span).
pub fn has_degeneracy(energies: &[f64]) -> bool {
    let span = (energies[energies.len() - 1] - energies[0]).max(1.0);
    energies.windows(2).any(|w| (w[1] - w[0]).abs() < DEGENERACY_TOL * span)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    /// mean consecutive-gap ratio over the central band
    pub mean_gap_ratio: f64,
    pub gap_ratio_se: f64,
    pub ratios_used: usize,
    /// spacings below threshold, excluded from the statistics
    pub degenerate_excluded: usize,
    /// normalized histogram (density) of locally-unfolded spacings
    pub spacing_density: Vec<f64>,
    pub spacing_bin_width: f64,
}

pub const EDGE_TRIM_FRACTION: f64 = 0.10;
pub const SPACING_HIST_MAX: f64 = 4.0;

/// Indices of the central band after dropping `EDGE_TRIM_FRACTION` of the
/// levels at each spectral edge.
pub fn central_band(len: usize) -> std::ops::Range<usize> {
    let trim = (len as f64 * EDGE_TRIM_FRACTION).floor() as usize;
    trim..len - trim
}

/// Consecutive-gap ratios r_k = min(s_k, s_{k+1})/max(s_k, s_{k+1}) over the
/// central band; returns (ratios, excluded_count).
pub fn gap_ratios(energies: &[f64]) -> (Vec<f64>, usize) {
    let band = central_band(energies.len());
    let central = &energies[band];
    let spacings: Vec<f64> = central.windows(2).map(|w| w[1] - w[0]).collect();
    let mut ratios = Vec::with_capacity(spacings.len());
    let mut excluded = 0;
    for w in spacings.windows(2) {
        if w[0] < DEGENERACY_TOL || w[1] < DEGENERACY_TOL {
            excluded += 1;
            continue;
        }
        ratios.push(w[0].min(w[1]) / w[0].max(w[1]));
    }
    (ratios, excluded)
}

pub const UNFOLD_DEGREE: usize = 7;

/// Unfolded nearest-neighbor spacings of the central band: the spectral
/// staircase is smoothed by a degree-7 polynomial least-squares fit (in a
/// rescaled energy variable) and spacings are taken in the smoothed
/// coordinate, giving mean spacing ~ 1.
pub fn unfolded_spacings(energies: &[f64]) -> Result<Vec<f64>> {
    let band = central_band(energies.len());
    let central = &energies[band];
    let m = central.len();
    if m < UNFOLD_DEGREE + 2 {
        return Err(Error::Config(format!("too few levels to unfold: {m}")));
    }
    let (lo, hi) = (central[0], central[m - 1]);
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    let x = |e: f64| 2.0 * (e - lo) / scale - 1.0;
    // least squares: staircase index vs polynomial in x
    let cols = UNFOLD_DEGREE + 1;
    let vander = DMatrix::<f64>::from_fn(m, cols, |r, c| x(central[r]).powi(c as i32));
    let y = DVector::<f64>::from_fn(m, |r, _| r as f64);
    let coeffs = vander
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Numerical(format!("unfolding solve failed: {e}")))?;
    let smooth = |e: f64| {
        let xv = x(e);
        (0..cols).map(|c| coeffs[c] * xv.powi(c as i32)).sum::<f64>()
    };
    Ok(central.windows(2).map(|w| smooth(w[1]) - smooth(w[0])).collect())
}

/// Gap-ratio and spacing statistics of one ascending spectrum.
pub fn level_statistics(energies: &[f64], bins: usize) -> Result<LevelStats> {
    if energies.len() < 50 {
        return Err(Error::Config(format!("need >= 50 levels, got {}", energies.len())));
    }
    let (ratios, excluded) = gap_ratios(energies);
    let mean = pairwise_sum(&ratios) / ratios.len() as f64;
    let sq: Vec<f64> = ratios.iter().map(|r| (r - mean) * (r - mean)).collect();
    let se = (pairwise_sum(&sq) / (ratios.len() as f64 - 1.0) / ratios.len() as f64).sqrt();
    let spacings = unfolded_spacings(energies)?;
    let (density, width) = spacing_density(&spacings, bins);
    Ok(LevelStats {
        mean_gap_ratio: mean,
        gap_ratio_se: se,
        ratios_used: ratios.len(),
        degenerate_excluded: excluded,
        spacing_density: density,
        spacing_bin_width: width,
    })
}

fn spacing_density(spacings: &[f64], bins: usize) -> (Vec<f64>, f64) {
    let width = SPACING_HIST_MAX / bins as f64;
    let mut counts = vec![0u64; bins];
    for &s in spacings {
        let b = (s / width) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    let total = spacings.len() as f64;
    (
        counts.iter().map(|&c| c as f64 / total / width).collect(),
        width,
    )
}

/// Poisson-statistics mean gap ratio, 2 ln 2 - 1.
pub const GAP_RATIO_POISSON: f64 = 0.38629436111989063;
/// GOE mean gap ratio (surmise value).
pub const GAP_RATIO_GOE: f64 = 0.5307;

/// Per-eigenvector diagnostics within the S_z sector.
#[derive(Debug, Clone)]
pub struct EigvecRecord {
    pub energy: f64,
    pub npc_z: f64,
    pub p_loc: f64,
    /// A_f at even distances f = 2, 4, ..., n (index f/2 - 1)
    pub a_f: Vec<f64>,
    /// true if the level falls outside the central 80% band
    pub edge: bool,
    pub realization_id: u64,
}

/// NPC_z, P_loc (= P_z for sector eigenvectors with real amplitudes, from
/// single-site sigma_z expectations), and the even-distance A_f profile of
/// every eigenvector.
pub fn analyze_eigenvectors(result: &SpectralResult) -> Result<Vec<EigvecRecord>> {
    let sector = &result.sector;
    let n = sector.n();
    let dim = sector.dim();
    let pair_counts: Vec<u64> = crate::hamming::sector_pair_counts(sector);
    let band = central_band(dim);
    let records: Vec<EigvecRecord> = (0..dim)
        .into_par_iter()
        .map(|k| {
            let col = result.vectors.column(k);
            let probs: Vec<f64> = col.iter().map(|a| a * a).collect();
            let ipr: f64 = probs.iter().map(|p| p * p).sum();
            let npc_z = 1.0 / ipr;
            // P_loc = (1/n) sum_i <sigma_z^(i)>^2 (transverse terms vanish
            // by magnetization symmetry and realness)
            let mut p_loc = 0.0;
            for i in 0..n {
                let e: f64 = sector
                    .strings()
                    .iter()
                    .zip(&probs)
                    .map(|(&s, &p)| z_of(s, n, i) * p)
                    .sum();
                p_loc += e * e;
            }
            p_loc /= n as f64;
            let sums = pair_sums_by_distance(sector, &probs);
            let a_f: Vec<f64> = (1..=n / 2)
                .map(|half| {
                    let f = 2 * half;
                    if pair_counts[f] > 0 {
                        sums[f] / pair_counts[f] as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            EigvecRecord {
                energy: result.energies[k],
                npc_z,
                p_loc,
                a_f,
                edge: !band.contains(&k),
                realization_id: result.realization_id,
            }
        })
        .collect();
    Ok(records)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChainConfig {
    pub n: usize,
    /// coupling ratios J / disorder_width; the sweep fixes the width at 1
    /// and varies J
    pub ratios: Vec<f64>,
    pub realizations: u64,
    pub master_seed: u64,
    /// uniform splitting (a constant inside the fixed-magnetization sector)
    pub eps: f64,
    /// bin count of the unfolded-spacing histogram
    pub bins: usize,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 2 != 0 || self.n > 14 {
            return Err(Error::Config(format!("need even n in 4..=14, got {}", self.n)));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|&r| r <= 0.0) {
            return Err(Error::Config("ratios must be positive and nonempty".into()));
        }
        if self.realizations < 1 {
            return Err(Error::Config("need at least one realization".into()));
        }
        if self.bins < 4 {
            return Err(Error::Config("need at least 4 histogram bins".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Default)]
pub struct BinStat {
    pub count: u64,
    pub mean: f64,
}

/// Moment summary of eigenvector components in the near-maximal NPC window.
#[derive(Debug, Clone, Serialize)]
pub struct InsetStats {
    pub vectors_used: usize,
    pub sample_variance: f64,
    pub excess_kurtosis: f64,
    /// window (exclusive) in NPC_z
    pub npc_window: (f64, f64),
}

pub const INSET_NPC_WINDOW: (f64, f64) = (300.0, 316.0);

#[derive(Debug, Clone, Serialize)]
pub struct RatioDataset {
    pub ratio: f64,
    /// eigenvector counts per unit NPC bin [i+1, i+2)
    pub npc_hist: Vec<u64>,
    /// binned mean P_loc per unit NPC bin, all eigenvectors
    pub ploc_binned: Vec<BinStat>,
    /// same, excluding spectral-edge eigenvectors
    pub ploc_binned_trim: Vec<BinStat>,
    /// binned mean A_f per unit NPC bin, one series per even f
    pub af_binned: Vec<Vec<BinStat>>,
    pub level_stats: LevelStats,
    pub inset: InsetStats,
    /// realizations that hit an exact degeneracy and were redrawn
    pub resampled: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentDataset {
    pub config: ChainConfig,
    pub sector_dim: usize,
    pub ratios: Vec<RatioDataset>,
}

const MAX_RESAMPLE: u64 = 64;

struct RealizationOutput {
    records: Vec<EigvecRecord>,
    gap_ratios: Vec<f64>,
    excluded: usize,
    spacings: Vec<f64>,
    resampled: u64,
}

fn run_realization(
    config: &ChainConfig,
    sector: &Arc<SectorBasis>,
    ratio: f64,
    ratio_idx: usize,
    realization: u64,
) -> Result<RealizationOutput> {
    let spec = ChainSpec {
        n: config.n,
        j: ratio, // disorder_width = 1 fixes the scale
        eps: config.eps,
        disorder_width: 1.0,
        seed: config.master_seed,
    };
    spec.validate()?;
    let streams = RngStreams::new(config.master_seed);
    let base = ((ratio_idx as u64 * config.realizations) + realization) * MAX_RESAMPLE;
    let mut resampled = 0;
    for attempt in 0..MAX_RESAMPLE {
        let mut rng = streams.stream(base + attempt);
        let site_eps = spec.draw_disorder(&mut rng);
        let h = build_hamiltonian(&site_eps, spec.j, sector)?;
        let tr: f64 = (0..sector.dim()).map(|k| h[(k, k)]).sum();
        let tr_formula = trace_formula(&site_eps, spec.j, sector);
        if (tr - tr_formula).abs() > 1e-9 * (1.0 + tr_formula.abs()) {
            return Err(Error::Numerical(format!(
                "trace check failed: matrix {tr} vs formula {tr_formula}"
            )));
        }
        let result = diagonalize(&h, sector.clone(), realization)?;
        if has_degeneracy(&result.energies) {
            resampled += 1;
            continue;
        }
        let records = analyze_eigenvectors(&result)?;
        let (ratios, excluded) = gap_ratios(&result.energies);
        let spacings = unfolded_spacings(&result.energies)?;
        return Ok(RealizationOutput { records, gap_ratios: ratios, excluded, spacings, resampled });
    }
    Err(Error::Numerical(format!(
        "realization {realization} at ratio {ratio} stayed degenerate after {MAX_RESAMPLE} draws"
    )))
}

/// Full disorder-ensemble sweep. Deterministic for a given config at any
/// worker count: realization r of ratio i always consumes stream
/// (i * realizations + r) * 64, and aggregation is an ordered reduction
/// over (ratio, realization).
pub fn run_ensemble(config: &ChainConfig) -> Result<ExperimentDataset> {
    config.validate()?;
    let sector = Arc::new(SectorBasis::sector(config.n, 0)?);
    let mut ratios_out = Vec::with_capacity(config.ratios.len());
    for (ratio_idx, &ratio) in config.ratios.iter().enumerate() {
        let outputs: Vec<Result<RealizationOutput>> = (0..config.realizations)
            .into_par_iter()
            .map(|r| run_realization(config, &sector, ratio, ratio_idx, r))
            .collect();
        let mut outputs_ok = Vec::with_capacity(outputs.len());
        for o in outputs {
            outputs_ok.push(o?);
        }
        ratios_out.push(aggregate_ratio(config, &sector, ratio, &outputs_ok)?);
    }
    Ok(ExperimentDataset { config: config.clone(), sector_dim: sector.dim(), ratios: ratios_out })
}

fn aggregate_ratio(
    config: &ChainConfig,
    sector: &SectorBasis,
    ratio: f64,
    outputs: &[RealizationOutput],
) -> Result<RatioDataset> {
    let dim = sector.dim();
    let n_bins = dim; // unit bins [1,2), [2,3), ..., [dim, dim+1)
    let bin_of = |npc: f64| ((npc - 1.0).floor() as usize).min(n_bins - 1);
    let half_n = config.n / 2;

    let mut npc_hist = vec![0u64; n_bins];
    let mut ploc_sum = vec![0.0f64; n_bins];
    let mut ploc_cnt = vec![0u64; n_bins];
    let mut ploc_sum_trim = vec![0.0f64; n_bins];
    let mut ploc_cnt_trim = vec![0u64; n_bins];
    let mut af_sum = vec![vec![0.0f64; n_bins]; half_n];
    let mut af_cnt = vec![vec![0u64; n_bins]; half_n];
    let mut inset_m2 = 0.0f64;
    let mut inset_m4 = 0.0f64;
    let mut inset_vals = 0u64;
    let mut inset_vecs = 0usize;
    let mut all_ratios = Vec::new();
    let mut all_spacings = Vec::new();
    let mut excluded = 0usize;
    let mut resampled = 0u64;

    for out in outputs {
        for rec in &out.records {
            let b = bin_of(rec.npc_z);
            npc_hist[b] += 1;
            ploc_sum[b] += rec.p_loc;
            ploc_cnt[b] += 1;
            if !rec.edge {
                ploc_sum_trim[b] += rec.p_loc;
                ploc_cnt_trim[b] += 1;
            }
            for (idx, &a) in rec.a_f.iter().enumerate() {
                af_sum[idx][b] += a;
                af_cnt[idx][b] += 1;
            }
            if rec.npc_z > INSET_NPC_WINDOW.0 && rec.npc_z < INSET_NPC_WINDOW.1 {
                inset_vecs += 1;
            }
        }
        all_ratios.extend_from_slice(&out.gap_ratios);
        all_spacings.extend_from_slice(&out.spacings);
        excluded += out.excluded;
        resampled += out.resampled;
    }

    // second pass over records for inset moments (components of the
    // selected eigenvectors are not stored; recompute from probabilities is
    // impossible here, so moments are accumulated during analysis instead).
    // The records carry only summaries, so the inset uses the identity
    // m2 = IPR-free: sum of squares of components of a normalized vector
    // is 1, giving variance 1/dim exactly per vector; the fourth moment is
    // the vector's IPR / dim-normalization.
    for out in outputs {
        for rec in &out.records {
            if rec.npc_z > INSET_NPC_WINDOW.0 && rec.npc_z < INSET_NPC_WINDOW.1 {
                inset_m2 += 1.0; // sum_k a_k^2 = 1 per vector
                inset_m4 += 1.0 / rec.npc_z; // sum_k a_k^4 = IPR
                inset_vals += dim as u64;
            }
        }
    }
    let (sample_variance, excess_kurtosis) = if inset_vals > 0 {
        let m2 = inset_m2 / inset_vals as f64;
        let m4 = inset_m4 / inset_vals as f64;
        (m2, m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };

    let mean = pairwise_sum(&all_ratios) / all_ratios.len() as f64;
    let sq: Vec<f64> = all_ratios.iter().map(|r| (r - mean) * (r - mean)).collect();
    let se = (pairwise_sum(&sq) / (all_ratios.len() as f64 - 1.0) / all_ratios.len() as f64).sqrt();
    let (density, width) = spacing_density(&all_spacings, config.bins);
    let level_stats = LevelStats {
        mean_gap_ratio: mean,
        gap_ratio_se: se,
        ratios_used: all_ratios.len(),
        degenerate_excluded: excluded,
        spacing_density: density,
        spacing_bin_width: width,
    };

    let to_stats = |sums: &[f64], cnts: &[u64]| -> Vec<BinStat> {
        sums.iter()
            .zip(cnts)
            .map(|(&s, &c)| BinStat { count: c, mean: if c > 0 { s / c as f64 } else { f64::NAN } })
            .collect()
    };
    Ok(RatioDataset {
        ratio,
        npc_hist,
        ploc_binned: to_stats(&ploc_sum, &ploc_cnt),
        ploc_binned_trim: to_stats(&ploc_sum_trim, &ploc_cnt_trim),
        af_binned: af_sum
            .iter()
            .zip(&af_cnt)
            .map(|(s, c)| to_stats(s, c))
            .collect(),
        level_stats,
        inset: InsetStats {
            vectors_used: inset_vecs,
            sample_variance,
            excess_kurtosis,
            npc_window: INSET_NPC_WINDOW,
        },
        resampled,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HyperbolaFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// root-sum-square residual of the fit
    pub residual: f64,
    /// set when the offset scan terminated at a bracket edge
    pub bracket_warning: bool,
}

/// Weighted least-squares fit of p = a/(x + b) + c over (x, p, weight)
/// triples: the inner problem is linear in (a, c) for fixed b, so b is
/// found by a refined scalar scan. Weighting bin means by their populations
/// reproduces the fit over the raw per-eigenvector scatter.
pub fn fit_hyperbola(points: &[(f64, f64, f64)]) -> Result<HyperbolaFit> {
    if points.len() < 10 {
        return Err(Error::Config(format!("need >= 10 bins to fit, got {}", points.len())));
    }
    if points.iter().any(|&(_, _, w)| w <= 0.0) {
        return Err(Error::Config("fit weights must be positive".into()));
    }
    let inner = |b: f64| -> Option<(f64, f64, f64)> {
        // regress p on u = 1/(x + b)
        let (mut sw, mut su, mut sp, mut suu, mut sup) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, p, w) in points {
            let denom = x + b;
            if denom <= 1e-9 {
                return None;
            }
            let u = 1.0 / denom;
            sw += w;
            su += w * u;
            sp += w * p;
            suu += w * u * u;
            sup += w * u * p;
        }
        let det = sw * suu - su * su;
        if det.abs() < 1e-30 {
            return None;
        }
        let a = (sw * sup - su * sp) / det;
        let c = (sp - a * su) / sw;
        let rss: f64 = points
            .iter()
            .map(|&(x, p, w)| {
                let e = p - a / (x + b) - c;
                w * e * e
            })
            .sum();
        Some((a, c, rss))
    };
    let (mut lo, mut hi) = (0.0f64, 200.0f64);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0); // (rss, b, a, c)
    let mut warn = false;
    for _ in 0..4 {
        let steps = 200;
        best = (f64::INFINITY, 0.0, 0.0, 0.0);
        for k in 0..=steps {
            let b = lo + (hi - lo) * k as f64 / steps as f64;
            if let Some((a, c, rss)) = inner(b) {
                if rss < best.0 {
                    best = (rss, b, a, c);
                }
            }
        }
        if !best.0.is_finite() {
            return Err(Error::Numerical("hyperbola scan found no valid offset".into()));
        }
        let step = (hi - lo) / steps as f64;
        if (best.1 - lo).abs() < step / 2.0 || (hi - best.1).abs() < step / 2.0 {
            warn = true; // optimum pinned at the bracket edge
            break;
        }
        lo = best.1 - step;
        hi = best.1 + step;
    }
    Ok(HyperbolaFit { a: best.2, b: best.1, c: best.3, residual: best.0.sqrt(), bracket_warning: warn })
}

/// The P_loc-vs-NPC points of a binned dataset (bin centers at i + 1.5),
/// dropping empty bins; weights are the bin populations so a fit over the
/// points equals a fit over every eigenvector.
pub fn fit_points(binned: &[BinStat]) -> Vec<(f64, f64, f64)> {
    binned
        .iter()
        .enumerate()
        .filter(|(_, s)| s.count > 0)
        .map(|(i, s)| (i as f64 + 1.5, s.mean, s.count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn two_site_hand_oracle() {
        let sector = Arc::new(SectorBasis::sector(2, 0).unwrap());
        let h = build_hamiltonian(&[0.0, 0.0], 1.0, &sector).unwrap();
        assert_relative_eq!(h[(0, 0)], -0.25, epsilon = 1e-14);
        assert_relative_eq!(h[(1, 1)], -0.25, epsilon = 1e-14);
        assert_relative_eq!(h[(0, 1)], 0.5, epsilon = 1e-14);
        let res = diagonalize(&h, sector, 0).unwrap();
        assert_relative_eq!(res.energies[0], -0.75, epsilon = 1e-12);
        assert_relative_eq!(res.energies[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn uniform_eps_is_sector_constant() {
        let sector = Arc::new(SectorBasis::sector(6, 0).unwrap());
        let h0 = build_hamiltonian(&vec![0.0; 6], 0.7, &sector).unwrap();
        let h1 = build_hamiltonian(&vec![3.1; 6], 0.7, &sector).unwrap();
        // identical matrices: the uniform part sums to (eps/2) * m = 0
        assert!((h1 - h0).norm() < 1e-12);

        let sector_m2 = Arc::new(SectorBasis::sector(6, 2).unwrap());
        let g0 = build_hamiltonian(&vec![0.0; 6], 0.7, &sector_m2).unwrap();
        let g1 = build_hamiltonian(&vec![3.1; 6], 0.7, &sector_m2).unwrap();
        let shift = &g1 - &g0;
        // constant shift (eps/2) * m = 3.1 on the m = 2 sector
        for k in 0..sector_m2.dim() {
            assert_relative_eq!(shift[(k, k)], 3.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn dense_pauli_oracle_matches_hamiltonian() {
        use crate::pauli::{Pauli, PauliString};
        let n = 4usize;
        let sector = Arc::new(SectorBasis::sector(n, 0).unwrap());
        let eps = [0.3, -0.1, 0.7, 0.2];
        let j = 0.9;
        let h = build_hamiltonian(&eps, j, &sector).unwrap();
        // assemble from Pauli strings on the full space and restrict
        let dim_full = 1 << n;
        let mut full = DMatrix::<f64>::zeros(dim_full, dim_full);
        let add = |acc: &mut DMatrix<f64>, p: PauliString, w: f64| {
            let d = p.to_dense();
            for r in 0..dim_full {
                for c in 0..dim_full {
                    acc[(r, c)] += w * d[(r, c)].re;
                }
            }
        };
        for i in 0..n {
            add(&mut full, PauliString::single(n, i, Pauli::Z), eps[i] / 2.0);
        }
        for i in 0..n - 1 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut ps = vec![Pauli::I; n];
                ps[i] = p;
                ps[i + 1] = p;
                add(&mut full, PauliString::new(&ps, 1.0), j / 4.0);
            }
        }
        let idx: Vec<usize> = sector.strings().iter().map(|&s| s as usize).collect();
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                assert_relative_eq!(h[(r, c)], full[(ir, ic)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn trace_matches_formula() {
        for (n, m) in [(6usize, 0i64), (6, 2), (8, 0)] {
            let sector = SectorBasis::sector(n, m).unwrap();
            let eps: Vec<f64> = (0..n).map(|i| 0.2 * i as f64 - 0.3).collect();
            let h = build_hamiltonian(&eps, 1.3, &sector).unwrap();
            let tr: f64 = (0..sector.dim()).map(|k| h[(k, k)]).sum();
            assert_relative_eq!(tr, trace_formula(&eps, 1.3, &sector), epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_coupling_gives_localized_spectrum() {
        let sector = Arc::new(SectorBasis::sector(6, 0).unwrap());
        let eps: Vec<f64> = (0..6).map(|i| 0.618 * (i as f64 + 1.0)).collect();
        // ChainSpec validation rejects J = 0, so realize the J -> 0 limit
        // by zeroing the off-diagonal part of an assembled H
        let mut h = build_hamiltonian(&eps, 1.0, &sector).unwrap();
        for k in 0..sector.dim() {
            for l in 0..sector.dim() {
                if k != l {
                    h[(k, l)] = 0.0;
                }
            }
        }
        let res = diagonalize(&h, sector, 0).unwrap();
        let recs = analyze_eigenvectors(&res).unwrap();
        for r in &recs {
            assert_relative_eq!(r.npc_z, 1.0, epsilon = 1e-9);
            assert_relative_eq!(r.p_loc, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectrum_invariant_under_global_shift() {
        let sector = Arc::new(SectorBasis::sector(6, 0).unwrap());
        let eps: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let shifted: Vec<f64> = eps.iter().map(|e| e + 2.5).collect();
        let ha = build_hamiltonian(&eps, 0.8, &sector).unwrap();
        let hb = build_hamiltonian(&shifted, 0.8, &sector).unwrap();
        let ea = diagonalize(&ha, sector.clone(), 0).unwrap().energies;
        let eb = diagonalize(&hb, sector, 0).unwrap().energies;
        for (a, b) in ea.iter().zip(&eb) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn ploc_matches_purity_engine() {
        use crate::observables::purity;
        use crate::states::PureState;
        use num_complex::Complex64;
        let sector = Arc::new(SectorBasis::sector(6, 0).unwrap());
        let streams = RngStreams::new(11);
        let mut rng = streams.stream(0);
        let spec = ChainSpec { n: 6, j: 0.6, eps: 1.0, disorder_width: 1.0, seed: 11 };
        let eps = spec.draw_disorder(&mut rng);
        let h = build_hamiltonian(&eps, spec.j, &sector).unwrap();
        let res = diagonalize(&h, sector.clone(), 0).unwrap();
        let recs = analyze_eigenvectors(&res).unwrap();
        let set = crate::observables::ObservableSet::local_qubits(6);
        for k in [0usize, 5, 10, 19] {
            let amps: Vec<Complex64> = res
                .vectors
                .column(k)
                .iter()
                .map(|&a| Complex64::new(a, 0.0))
                .collect();
            let psi = PureState::new(sector.clone(), amps).unwrap();
            assert_relative_eq!(recs[k].p_loc, purity(&psi, &set).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn poisson_gap_ratio() {
        // i.i.d. exponential spacings
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut energies = vec![0.0f64];
        for _ in 0..200_000 {
            let s: f64 = Exp1.sample(&mut rng);
            energies.push(energies.last().unwrap() + s);
        }
        let stats = level_statistics(&energies, 40).unwrap();
        let dev = (stats.mean_gap_ratio - GAP_RATIO_POISSON).abs();
        assert!(dev < 3.0 * stats.gap_ratio_se + 1e-3, "r = {}", stats.mean_gap_ratio);
    }

    #[test]
    fn goe_gap_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ratios = Vec::new();
        for _ in 0..60 {
            let dim = 200;
            let mut m = DMatrix::<f64>::zeros(dim, dim);
            for r in 0..dim {
                for c in r..dim {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    let v = if r == c { g * std::f64::consts::SQRT_2 } else { g };
                    m[(r, c)] = v;
                    m[(c, r)] = v;
                }
            }
            let mut ev = m.symmetric_eigen().eigenvalues.as_slice().to_vec();
            ev.sort_by(f64::total_cmp);
            let (r, _) = gap_ratios(&ev);
            ratios.extend(r);
        }
        let mean = pairwise_sum(&ratios) / ratios.len() as f64;
        let sq: Vec<f64> = ratios.iter().map(|r| (r - mean) * (r - mean)).collect();
        let se = (pairwise_sum(&sq) / (ratios.len() as f64 - 1.0) / ratios.len() as f64).sqrt();
        assert!(
            (mean - GAP_RATIO_GOE).abs() < 3.0 * se + 2e-3,
            "r = {mean} +- {se}"
        );
    }

    #[test]
    fn unfolded_spacings_have_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // a spectrum with a curved (Gaussian) level density
        let mut energies: Vec<f64> = (0..2000)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                g
            })
            .collect();
        energies.sort_by(f64::total_cmp);
        let s = unfolded_spacings(&energies).unwrap();
        let mean = pairwise_sum(&s) / s.len() as f64;
        assert_relative_eq!(mean, 1.0, epsilon = 0.05);
    }

    #[test]
    fn hyperbola_fit_recovers_synthetic_parameters() {
        let (a0, b0, c0) = (14.5, 12.2, -0.032);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<(f64, f64, f64)> = (0..60)
            .map(|k| {
                let x = 2.0 + 5.0 * k as f64;
                let noise: f64 = StandardNormal.sample(&mut rng);
                (x, a0 / (x + b0) + c0 + 1e-4 * noise, 1.0 + (k % 5) as f64)
            })
            .collect();
        let fit = fit_hyperbola(&points).unwrap();
        assert!((fit.a - a0).abs() < 0.5, "a = {}", fit.a);
        assert!((fit.b - b0).abs() < 0.5, "b = {}", fit.b);
        assert!((fit.c - c0).abs() < 0.005, "c = {}", fit.c);
    }

    #[test]
    fn hyperbola_fit_on_exact_sector_curve() {
        // p = N0/(N0-1)/x - 1/(N0-1) is itself of the fit form with b = 0
        let n0 = 924.0;
        let points: Vec<(f64, f64, f64)> = (0..40)
            .map(|k| {
                let x = 1.5 + 8.0 * k as f64;
                (x, n0 / (n0 - 1.0) / x - 1.0 / (n0 - 1.0), 1.0)
            })
            .collect();
        let fit = fit_hyperbola(&points).unwrap();
        assert!(fit.b.abs() < 0.05, "b = {}", fit.b);
        assert_relative_eq!(fit.c, -1.0 / (n0 - 1.0), epsilon = 1e-4);
        assert_relative_eq!(fit.a, n0 / (n0 - 1.0), epsilon = 1e-3);
    }

    #[test]
    fn small_ensemble_runs_and_is_deterministic() {
        let config = ChainConfig {
            n: 6,
            ratios: vec![0.3, 1.0],
            realizations: 3,
            master_seed: 5,
            eps: 1.0,
            bins: 8,
        };
        let a = run_ensemble(&config).unwrap();
        let b = run_ensemble(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.sector_dim, 20);
        for rd in &a.ratios {
            let total: u64 = rd.npc_hist.iter().sum();
            assert_eq!(total, 3 * 20);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ChainConfig {
            n: 6,
            ratios: vec![0.5],
            realizations: 1,
            master_seed: 0,
            eps: 1.0,
            bins: 10,
        };
        assert!(c.validate().is_ok());
        c.n = 7;
        assert!(c.validate().is_err());
        c.n = 6;
        c.ratios = vec![];
        assert!(c.validate().is_err());
    }
}
