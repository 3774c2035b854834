//! Pure states, random-state ensembles, and product-basis changes.
//!
//! Sampling is pure given (spec, stream index): every sample derives its own
//! ChaCha stream from the master seed, so ensembles are reproducible across
//! platforms and worker counts.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{SectorBasis, SectorConstraint};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

pub const NORM_TOL: f64 = 1e-12;

/// Seedable, splittable stream factory: stream k of a given master seed is
/// always the same generator, independent of how work is scheduled.
#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone)]
pub struct PureState {
    basis: Arc<SectorBasis>,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch(amps.len(), basis.dim()));
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized((norm2 - 1.0).abs()));
        }
        Ok(Self { basis, amps })
    }

    /// Normalize then construct; rejects only the zero vector.
    pub fn normalized(basis: Arc<SectorBasis>, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::Numerical("zero state vector".into()));
        }
        let inv = 1.0 / norm2.sqrt();
        amps.iter_mut().for_each(|a| *a *= inv);
        Ok(Self { basis, amps })
    }

    /// Basis state |index>.
    pub fn basis_state(basis: Arc<SectorBasis>, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { basis, amps }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn local_dim(&self) -> u8 {
        self.basis.local_dim()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.amps.iter().all(|a| a.im.abs() <= tol)
    }

    /// <sigma_alpha^(site)> for qubit states (full or sector basis).
    pub fn single_site_expectation(&self, site: usize, p: Pauli) -> Result<f64> {
        PauliString::single(self.n(), site, p).expectation(&self.basis, &self.amps)
    }

    /// Per-site Bloch vectors (<sx>, <sy>, <sz>); qubit full basis only.
    pub fn bloch_vectors(&self) -> Result<Vec<[f64; 3]>> {
        if self.local_dim() != 2 {
            return Err(Error::UnsupportedLocalDim(self.local_dim()));
        }
        (0..self.n())
            .map(|i| {
                Ok([
                    self.single_site_expectation(i, Pauli::X)?,
                    self.single_site_expectation(i, Pauli::Y)?,
                    self.single_site_expectation(i, Pauli::Z)?,
                ])
            })
            .collect()
    }

    /// Reduced density matrix of one site (full qudit basis).
    pub fn reduced_site(&self, site: usize) -> Result<DMatrix<Complex64>> {
        if !self.basis.is_full() {
            return Err(Error::SectorBasisUnsupported);
        }
        let d = self.local_dim() as usize;
        let n = self.n();
        let stride = (d as u64).pow((n - 1 - site) as u32);
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for (k, &a) in self.amps.iter().enumerate() {
            let u = (k as u64 / stride % d as u64) as usize;
            let base = k as u64 - u as u64 * stride;
            for v in 0..d {
                let kk = (base + v as u64 * stride) as usize;
                rho[(u, v)] += a * self.amps[kk].conj();
            }
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum EnsembleKind {
    /// Independent standard complex Gaussians, normalized (Haar on the
    /// basis dimension; restricting the basis to a sector gives the
    /// sector ensemble).
    HaarComplex,
    /// Independent real Gaussians, normalized (orthogonally invariant).
    HaarReal,
    /// A fixed probability multiset randomly permuted over basis labels,
    /// each amplitude dressed with an independent uniform phase.
    ShuffledProbabilities(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub basis: Arc<SectorBasis>,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, basis: Arc<SectorBasis>, seed: u64) -> Result<Self> {
        if let EnsembleKind::ShuffledProbabilities(probs) = &kind {
            if probs.len() != basis.dim() {
                return Err(Error::DimensionMismatch(probs.len(), basis.dim()));
            }
            if probs.iter().any(|&p| p < 0.0) {
                return Err(Error::Config("shuffled probabilities must be nonnegative".into()));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized((total - 1.0).abs()));
            }
        }
        Ok(Self { kind, basis, seed })
    }

    /// Sample number `index` of the ensemble (deterministic).
    pub fn sample_at(&self, index: u64) -> PureState {
        let mut rng = RngStreams::new(self.seed).stream(index);
        self.sample(&mut rng)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> PureState {
        let dim = self.basis.dim();
        loop {
            let amps: Vec<Complex64> = match &self.kind {
                EnsembleKind::HaarComplex => (0..dim)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect(),
                EnsembleKind::HaarReal => (0..dim)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
                    .collect(),
                EnsembleKind::ShuffledProbabilities(probs) => {
                    let mut shuffled = probs.clone();
                    shuffled.shuffle(rng);
                    shuffled
                        .into_iter()
                        .map(|p| {
                            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                            Complex64::from_polar(p.sqrt(), phi)
                        })
                        .collect()
                }
            };
            match PureState::normalized(self.basis.clone(), amps) {
                Ok(state) => return state,
                Err(_) => continue, // zero-norm draw; resample
            }
        }
    }
}

/// A product frame: one local unitary per site whose columns are the new
/// single-site basis states (column 0 <-> digit 0).
#[derive(Debug, Clone)]
pub struct LocalFrame {
    unitaries: Vec<DMatrix<Complex64>>,
    degenerate: Vec<bool>,
    axes: Option<Vec<[f64; 3]>>,
}

impl LocalFrame {
    pub fn from_unitaries(unitaries: Vec<DMatrix<Complex64>>, degenerate: Vec<bool>) -> Self {
        Self { unitaries, degenerate, axes: None }
    }

    pub fn unitaries(&self) -> &[DMatrix<Complex64>] {
        &self.unitaries
    }

    pub fn degenerate(&self) -> &[bool] {
        &self.degenerate
    }

    pub fn axes(&self) -> Option<&[[f64; 3]]> {
        self.axes.as_deref()
    }

    /// Frame of the qubit axis n = (sin t cos p, sin t sin p, cos t):
    /// columns are the +/- eigenvectors of n . sigma.
    pub fn from_axes(axes: Vec<[f64; 3]>, degenerate: Vec<bool>) -> Self {
        let unitaries = axes.iter().map(|a| axis_unitary(*a)).collect();
        Self { unitaries, degenerate, axes: Some(axes) }
    }
}

fn axis_unitary(axis: [f64; 3]) -> DMatrix<Complex64> {
    let [x, y, z] = axis;
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let eip = Complex64::from_polar(1.0, phi);
    DMatrix::from_row_slice(2, 2, &[
        Complex64::new(ct, 0.0),
        Complex64::new(-st, 0.0),
        eip * st,
        eip * ct,
    ])
}

pub const BLOCH_DEGENERATE_TOL: f64 = 1e-9;

/// The canonical product frame of a state: per site, the basis in which the
/// reduced density matrix is diagonal. For qubits this is the Bloch-vector
/// direction; a vanishing Bloch vector defaults to +z and is flagged.
pub fn canonical_frame(psi: &PureState) -> Result<LocalFrame> {
    if !psi.basis().is_full() {
        return Err(Error::SectorBasisUnsupported);
    }
    if psi.local_dim() == 2 {
        let mut axes = Vec::with_capacity(psi.n());
        let mut degenerate = Vec::with_capacity(psi.n());
        for bloch in psi.bloch_vectors()? {
            let norm = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
            if norm < BLOCH_DEGENERATE_TOL {
                axes.push([0.0, 0.0, 1.0]);
                degenerate.push(true);
            } else {
                axes.push([bloch[0] / norm, bloch[1] / norm, bloch[2] / norm]);
                degenerate.push(false);
            }
        }
        Ok(LocalFrame::from_axes(axes, degenerate))
    } else {
        let d = psi.local_dim() as usize;
        let mut unitaries = Vec::with_capacity(psi.n());
        let mut degenerate = Vec::with_capacity(psi.n());
        for site in 0..psi.n() {
            let rho = psi.reduced_site(site)?;
            let eig = nalgebra::SymmetricEigen::new(rho);
            // order columns by descending population
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap()
            });
            let mut u = DMatrix::<Complex64>::zeros(d, d);
            for (col, &src) in order.iter().enumerate() {
                u.set_column(col, &eig.eigenvectors.column(src));
            }
            let mut evs: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            evs.dedup_by(|a, b| (*a - *b).abs() < BLOCH_DEGENERATE_TOL);
            degenerate.push(evs.len() < d);
            unitaries.push(u);
        }
        Ok(LocalFrame::from_unitaries(unitaries, degenerate))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Z,
    X,
    Y,
}

impl BasisLabel {
    /// Per-site unitary whose columns are the labelled basis states.
    pub fn unitary(self) -> DMatrix<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            BasisLabel::Z => DMatrix::identity(2, 2),
            BasisLabel::X => DMatrix::from_row_slice(2, 2, &[
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
            ]),
            BasisLabel::Y => DMatrix::from_row_slice(2, 2, &[
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, -s),
            ]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisLabel::Z => "z",
            BasisLabel::X => "x",
            BasisLabel::Y => "y",
        }
    }
}

/// Amplitudes in the product basis given by the per-site unitaries of
/// `frame`: a' = (U_1 x ... x U_n)^dagger a, applied one site at a time.
pub fn change_basis_frame(psi: &PureState, frame: &LocalFrame) -> Result<PureState> {
    if !psi.basis().is_full() {
        return Err(Error::SectorBasisUnsupported);
    }
    if frame.unitaries().len() != psi.n() {
        return Err(Error::LengthMismatch(frame.unitaries().len(), psi.n()));
    }
    let d = psi.local_dim() as usize;
    let n = psi.n();
    let mut amps = psi.amps().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); d];
    for site in 0..n {
        let u = &frame.unitaries()[site];
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch(u.nrows(), d));
        }
        let stride = (d as u64).pow((n - 1 - site) as u32) as usize;
        let block = stride * d;
        let mut base = 0usize;
        while base < amps.len() {
            for off in 0..stride {
                for (row, slot) in scratch.iter_mut().enumerate() {
                    // row of U^dagger = conjugated column of U
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..d {
                        acc += u[(col, row)].conj() * amps[base + off + col * stride];
                    }
                    *slot = acc;
                }
                for (row, &v) in scratch.iter().enumerate() {
                    amps[base + off + row * stride] = v;
                }
            }
            base += block;
        }
    }
    PureState::new(psi.basis().clone(), amps)
}

/// Rotate a full qubit state into the x, y, or z product basis.
pub fn change_basis(psi: &PureState, label: BasisLabel) -> Result<PureState> {
    if label == BasisLabel::Z {
        return Ok(psi.clone());
    }
    if !psi.basis().is_full() {
        // x/y product bases do not respect magnetization sectors
        return Err(Error::SectorBasisUnsupported);
    }
    if psi.local_dim() != 2 {
        return Err(Error::UnsupportedLocalDim(psi.local_dim()));
    }
    let frame = LocalFrame::from_unitaries(
        vec![label.unitary(); psi.n()],
        vec![false; psi.n()],
    );
    change_basis_frame(psi, &frame)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub n: usize,
    pub d: u8,
    /// None for the full basis, Some(m) for a fixed-magnetization sector.
    pub sector: Option<i64>,
    pub amps: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state(psi: &PureState) -> Self {
        let sector = match psi.basis().constraint() {
            SectorConstraint::Full => None,
            SectorConstraint::FixedMagnetization(m) => Some(m),
        };
        Self {
            n: psi.n(),
            d: psi.local_dim(),
            sector,
            amps: psi.amps().iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn into_state(self) -> Result<PureState> {
        let basis = match self.sector {
            None => {
                if self.d == 2 {
                    SectorBasis::full(self.n)
                } else {
                    SectorBasis::full_qudit(self.n, self.d)
                }
            }
            Some(m) => SectorBasis::sector(self.n, m)?,
        };
        let amps = self.amps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        PureState::new(Arc::new(basis), amps)
    }
}
