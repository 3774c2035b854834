//! Observable sets and purity functionals.
//!
//! An `ObservableSet` is a traceless Hermitian operator basis {b_i} with
//! tr(b_i b_j) = N delta_ij plus the normalization kappa_h making the
//! maximal purity 1. Built-in sets cover the unilocal algebra, per-site
//! qubit/qudit observables, the diagonal (commutant) algebra, spin-J
//! angular momentum, and q-site block algebras. Expectations of Pauli
//! strings run in O(N) via bit masks; no dense N x N matrices are formed
//! for the built-in sets.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::hamming::weighted_pair_sum;
use crate::pauli::{Pauli, PauliString};
use crate::states::{change_basis_frame, BasisLabel, LocalFrame, PureState};

#[derive(Debug, Clone)]
pub enum Operator {
    Pauli(PauliString),
    /// Diagonal in the set's reference basis; entries are the diagonal.
    DiagonalReal(Vec<f64>),
    /// A single-site qudit operator embedded in the product space.
    SingleSite { site: usize, matrix: DMatrix<Complex64> },
    /// Explicit matrix (small dimensions: spin-J, unilocal sets).
    Dense(DMatrix<Complex64>),
}

impl Operator {
    /// Dense matrix over `dim` (oracle/validation scale only).
    pub fn to_dense(&self, dim: usize, n: usize, d: u8) -> DMatrix<Complex64> {
        match self {
            Operator::Pauli(p) => p.to_dense(),
            Operator::DiagonalReal(v) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    dim,
                    v.iter().map(|&x| Complex64::new(x, 0.0)),
                ))
            }
            Operator::SingleSite { site, matrix } => {
                let mut m = DMatrix::<Complex64>::identity(1, 1);
                for s in 0..n {
                    if s == *site {
                        m = m.kronecker(matrix);
                    } else {
                        let eye = DMatrix::<Complex64>::identity(d as usize, d as usize);
                        m = m.kronecker(&eye);
                    }
                }
                m
            }
            Operator::Dense(m) => m.clone(),
        }
    }

    /// True iff the matrix is real in the reference basis.
    pub fn is_real(&self) -> bool {
        match self {
            Operator::Pauli(p) => p.is_real(),
            Operator::DiagonalReal(_) => true,
            Operator::SingleSite { matrix, .. } | Operator::Dense(matrix) => {
                matrix.iter().all(|c| c.im == 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    /// Operators listed explicitly.
    Explicit,
    /// The full traceless algebra su(N); never materialized, purity is
    /// evaluated through tr(rho^2).
    FullAlgebra,
}

#[derive(Debug, Clone)]
pub struct ObservableSet {
    label: String,
    ops: Vec<Operator>,
    kappa: f64,
    dim_h: usize,
    kind: SetKind,
}

impl ObservableSet {
    pub fn new(label: impl Into<String>, ops: Vec<Operator>, kappa: f64) -> Self {
        let dim_h = ops.len();
        Self { label: label.into(), ops, kappa, dim_h, kind: SetKind::Explicit }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ops(&self) -> &[Operator] {
        &self.ops
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    /// su(N): all traceless observables. kappa = 1/(N-1), dim = N^2 - 1.
    pub fn all_observables(dim: usize) -> Self {
        Self {
            label: format!("all({dim})"),
            ops: Vec::new(),
            kappa: 1.0 / (dim as f64 - 1.0),
            dim_h: dim * dim - 1,
            kind: SetKind::FullAlgebra,
        }
    }

    /// Single-site qubit observables {sigma_x,y,z^(i)}; kappa = 1/n.
    pub fn local_qubits(n: usize) -> Self {
        let mut ops = Vec::with_capacity(3 * n);
        for site in 0..n {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                ops.push(Operator::Pauli(PauliString::single(n, site, p)));
            }
        }
        Self::new(format!("local({n})"), ops, 1.0 / n as f64)
    }

    /// Single-site qudit observables; kappa = 1/(n(d-1)).
    pub fn local_qudits(n: usize, d: u8) -> Self {
        if d == 2 {
            return Self::local_qubits(n);
        }
        let gens = su_generators(d as usize);
        let mut ops = Vec::new();
        for site in 0..n {
            for g in &gens {
                ops.push(Operator::SingleSite { site, matrix: g.clone() });
            }
        }
        Self::new(
            format!("local({n},d={d})"),
            ops,
            1.0 / (n as f64 * (d as f64 - 1.0)),
        )
    }

    /// All uni-local observables on subsystem A of a d_A x d_B split.
    pub fn unilocal_a(d_a: usize, d_b: usize) -> Self {
        let gens = su_generators(d_a);
        let eye_b = DMatrix::<Complex64>::identity(d_b, d_b);
        let ops = gens
            .into_iter()
            .map(|g| Operator::Dense(g.kronecker(&eye_b)))
            .collect();
        Self::new(format!("unilocal({d_a}x{d_b})"), ops, 1.0 / (d_a as f64 - 1.0))
    }

    /// Traceless diagonal observables in the reference basis; kappa chosen
    /// so that basis states have purity 1, making the diagonal purity a
    /// pure function of the IPR.
    pub fn diagonal_algebra(dim: usize) -> Self {
        let mut ops = Vec::with_capacity(dim - 1);
        for m in 1..dim {
            let c = (dim as f64 / (m as f64 * (m as f64 + 1.0))).sqrt();
            let mut diag = vec![0.0; dim];
            diag[..m].iter_mut().for_each(|x| *x = c);
            diag[m] = -(m as f64) * c;
            ops.push(Operator::DiagonalReal(diag));
        }
        Self::new(format!("diag({dim})"), ops, 1.0 / (dim as f64 - 1.0))
    }

    /// su(2) spin-J components b_l = sqrt(3/(J(J+1))) J_l on N = 2J + 1
    /// levels; kappa = (J+1)/(3J), maximal on spin coherent states.
    pub fn spin_j(j: f64) -> Result<Self> {
        let dim_f = 2.0 * j + 1.0;
        if j <= 0.0 || (dim_f - dim_f.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("invalid spin quantum number J = {j}")));
        }
        let dim = dim_f.round() as usize;
        let scale = (3.0 / (j * (j + 1.0))).sqrt();
        let mut jz = DMatrix::<Complex64>::zeros(dim, dim);
        let mut jp = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..dim {
            let m = j - k as f64; // basis ordered m = J .. -J
            jz[(k, k)] = Complex64::new(m, 0.0);
            if k > 0 {
                // <m+1 | J+ | m> with m = j - k
                let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
                jp[(k - 1, k)] = Complex64::new(amp, 0.0);
            }
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm) * Complex64::new(0.5, 0.0);
        let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
        let ops = vec![
            Operator::Dense(jx * Complex64::new(scale, 0.0)),
            Operator::Dense(jy * Complex64::new(scale, 0.0)),
            Operator::Dense(jz * Complex64::new(scale, 0.0)),
        ];
        Ok(Self::new(format!("spinJ({j})"), ops, (j + 1.0) / (3.0 * j)))
    }

    /// All nontrivial Pauli strings on disjoint q-site blocks of an n-qubit
    /// chain; kappa makes products of block states reach purity 1.
    pub fn q_block(n: usize, q: usize) -> Result<Self> {
        if q == 0 || n % q != 0 {
            return Err(Error::Config(format!("block size {q} does not divide n = {n}")));
        }
        let mut ops = Vec::new();
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for block in 0..n / q {
            for code in 1..(1usize << (2 * q)) {
                let mut paulis = vec![Pauli::I; n];
                for s in 0..q {
                    paulis[block * q + s] = letters[(code >> (2 * s)) & 3];
                }
                ops.push(Operator::Pauli(PauliString::new(&paulis, 1.0)));
            }
        }
        let kappa = q as f64 / (n as f64 * ((1u64 << q) as f64 - 1.0));
        Ok(Self::new(format!("block({n},q={q})"), ops, kappa))
    }

    /// Load a user-defined set of Pauli strings from JSON, enforcing the
    /// traceless/orthonormal contract structurally.
    pub fn from_json(json: &str) -> Result<Self> {
        let spec: ObservableSetJson = serde_json::from_str(json)?;
        if spec.ops.is_empty() {
            return Err(Error::ObservableContract("empty operator list".into()));
        }
        let n = spec.ops[0].string.len();
        let mut seen = std::collections::HashSet::new();
        let mut ops = Vec::with_capacity(spec.ops.len());
        for entry in &spec.ops {
            if entry.string.len() != n {
                return Err(Error::ObservableContract(format!(
                    "string {:?} has length {} != {}",
                    entry.string,
                    entry.string.len(),
                    n
                )));
            }
            let p = PauliString::parse(&entry.string, entry.coeff)?;
            if p.is_identity() {
                return Err(Error::ObservableContract(format!(
                    "identity string {:?} is not traceless",
                    entry.string
                )));
            }
            if (entry.coeff.abs() - 1.0).abs() > 1e-9 {
                return Err(Error::ObservableContract(format!(
                    "coefficient {} breaks tr(b^2) = N",
                    entry.coeff
                )));
            }
            if !seen.insert(entry.string.clone()) {
                return Err(Error::ObservableContract(format!(
                    "duplicate string {:?} breaks orthogonality",
                    entry.string
                )));
            }
            ops.push(Operator::Pauli(p));
        }
        Ok(Self::new(spec.label, ops, spec.kappa))
    }

    /// Check tracelessness, normalization tr(b^2) = N, and pairwise trace
    /// orthogonality by dense materialization (validation scale only).
    pub fn verify_contract(&self, dim: usize, n: usize, d: u8) -> Result<()> {
        let dense: Vec<_> = self.ops.iter().map(|op| op.to_dense(dim, n, d)).collect();
        for (i, m) in dense.iter().enumerate() {
            if m.trace().norm() > 1e-10 {
                return Err(Error::ObservableContract(format!("op {i} not traceless")));
            }
            let norm = (m.adjoint() * m).trace().re;
            if (norm - dim as f64).abs() > 1e-9 {
                return Err(Error::ObservableContract(format!(
                    "op {i} has tr(b^2) = {norm}, want {dim}"
                )));
            }
            if (m - m.adjoint()).norm() > 1e-10 {
                return Err(Error::ObservableContract(format!("op {i} not hermitian")));
            }
        }
        for i in 0..dense.len() {
            for j in (i + 1)..dense.len() {
                let inner = (dense[i].adjoint() * &dense[j]).trace();
                if inner.norm() > 1e-9 {
                    return Err(Error::ObservableContract(format!(
                        "ops {i},{j} not trace-orthogonal"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ObservableSetJson {
    pub label: String,
    pub kappa: f64,
    pub ops: Vec<PauliOpJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PauliOpJson {
    pub string: String,
    pub coeff: f64,
}

/// su(d) generators scaled to tr(g^2) = d (Gell-Mann family).
pub fn su_generators(d: usize) -> Vec<DMatrix<Complex64>> {
    let scale = (d as f64 / 2.0).sqrt();
    let mut gens = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = DMatrix::<Complex64>::zeros(d, d);
            sym[(j, k)] = Complex64::new(scale, 0.0);
            sym[(k, j)] = Complex64::new(scale, 0.0);
            gens.push(sym);
            let mut asym = DMatrix::<Complex64>::zeros(d, d);
            asym[(j, k)] = Complex64::new(0.0, -scale);
            asym[(k, j)] = Complex64::new(0.0, scale);
            gens.push(asym);
        }
    }
    for l in 1..d {
        let c = scale * (2.0 / (l as f64 * (l as f64 + 1.0))).sqrt();
        let mut diag = DMatrix::<Complex64>::zeros(d, d);
        for m in 0..l {
            diag[(m, m)] = Complex64::new(c, 0.0);
        }
        diag[(l, l)] = Complex64::new(-c * l as f64, 0.0);
        gens.push(diag);
    }
    gens
}

/// <psi|op|psi>.
pub fn expectation(op: &Operator, psi: &PureState) -> Result<f64> {
    match op {
        Operator::Pauli(p) => p.expectation(psi.basis(), psi.amps()),
        Operator::DiagonalReal(v) => {
            if v.len() != psi.dim() {
                return Err(Error::DimensionMismatch(psi.dim(), v.len()));
            }
            Ok(v.iter().zip(psi.amps()).map(|(d, a)| d * a.norm_sqr()).sum())
        }
        Operator::SingleSite { site, matrix } => {
            if !psi.basis().is_full() {
                return Err(Error::SectorBasisUnsupported);
            }
            let d = psi.local_dim() as usize;
            if matrix.nrows() != d {
                return Err(Error::DimensionMismatch(matrix.nrows(), d));
            }
            let n = psi.n();
            let stride = (d as u64).pow((n - 1 - site) as u32);
            let amps = psi.amps();
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &a) in amps.iter().enumerate() {
                let v = (k as u64 / stride % d as u64) as usize;
                let base = k as u64 - v as u64 * stride;
                for u in 0..d {
                    let ku = (base + u as u64 * stride) as usize;
                    acc += amps[ku].conj() * matrix[(u, v)] * a;
                }
            }
            Ok(acc.re)
        }
        Operator::Dense(m) => {
            if m.nrows() != psi.dim() {
                return Err(Error::DimensionMismatch(psi.dim(), m.nrows()));
            }
            let v = nalgebra::DVector::from_column_slice(psi.amps());
            Ok((v.adjoint() * m * v)[(0, 0)].re)
        }
    }
}

/// P_h = kappa_h sum_i <b_i>^2.
pub fn purity(psi: &PureState, set: &ObservableSet) -> Result<f64> {
    match set.kind() {
        SetKind::FullAlgebra => purity_all(psi),
        SetKind::Explicit => {
            let mut acc = 0.0;
            for op in set.ops() {
                let e = expectation(op, psi)?;
                acc += e * e;
            }
            Ok(set.kappa() * acc)
        }
    }
}

/// Purity relative to su(N): (N/(N-1)) (tr rho^2 - 1/N). Always 1 for a
/// normalized pure state; acts as the engine's self-test.
pub fn purity_all(psi: &PureState) -> Result<f64> {
    let n = psi.dim() as f64;
    let tr_rho2 = {
        let norm2: f64 = psi.probabilities().iter().sum();
        norm2 * norm2
    };
    Ok(n / (n - 1.0) * (tr_rho2 - 1.0 / n))
}

/// GE relative to all uni-local observables on A: (d_A/(d_A-1)) (1 - tr rho_A^2)
/// for a d_A x d_B split, via the reshaped Gram matrix.
pub fn bipartite_ge(psi: &PureState, d_a: usize, d_b: usize) -> Result<f64> {
    if d_a * d_b != psi.dim() {
        return Err(Error::DimensionMismatch(psi.dim(), d_a * d_b));
    }
    let m = DMatrix::from_fn(d_a, d_b, |r, c| psi.amps()[r * d_b + c]);
    let gram = &m * m.adjoint();
    let tr_rho_a2 = gram.iter().map(|x| x.norm_sqr()).sum::<f64>();
    Ok(d_a as f64 / (d_a as f64 - 1.0) * (1.0 - tr_rho_a2))
}

/// Inverse participation ratio sum_k |a_k|^4.
pub fn ipr(psi: &PureState) -> f64 {
    psi.probabilities().iter().map(|p| p * p).sum()
}

pub fn ipr_of_probs(probs: &[f64]) -> f64 {
    probs.iter().map(|p| p * p).sum()
}

/// Number of principal components, 1 <= NPC <= N.
pub fn npc(psi: &PureState) -> f64 {
    1.0 / ipr(psi)
}

/// Purity relative to the diagonal algebra: (N IPR - 1)/(N - 1).
pub fn purity_diagonal(psi: &PureState) -> f64 {
    let n = psi.dim() as f64;
    n / (n - 1.0) * ipr(psi) - 1.0 / (n - 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct MubPurities {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub p_loc: f64,
}

/// P_alpha = (1/n) sum_i <sigma_alpha^(i)>^2 and P_loc = P_x + P_y + P_z
/// for a full qubit state.
pub fn local_purity_mub(psi: &PureState) -> Result<MubPurities> {
    if psi.local_dim() != 2 || !psi.basis().is_full() {
        return Err(Error::SectorBasisUnsupported);
    }
    let n = psi.n();
    let mut sums = [0.0; 3];
    for site in 0..n {
        for (slot, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            let e = psi.single_site_expectation(site, p)?;
            sums[slot] += e * e;
        }
    }
    let inv_n = 1.0 / n as f64;
    let (p_x, p_y, p_z) = (sums[0] * inv_n, sums[1] * inv_n, sums[2] * inv_n);
    Ok(MubPurities { p_x, p_y, p_z, p_loc: p_x + p_y + p_z })
}

/// GE_loc as the expected Hamming distance between measurements on two
/// copies of the state in the given product frame. Evaluated as
/// 2d/(n(d-1)) sum_{k<k'} f_{kk'} p_k p_{k'}; never forms the two-copy space.
pub fn ge_two_copy(psi: &PureState, frame: &LocalFrame) -> Result<f64> {
    let rotated = change_basis_frame(psi, frame)?;
    let d = psi.local_dim() as f64;
    let n = psi.n() as f64;
    let probs = rotated.probabilities();
    Ok(2.0 * d / (n * (d - 1.0)) * weighted_pair_sum(rotated.basis(), &probs))
}

fn is_prime(d: u8) -> bool {
    if d < 2 {
        return false;
    }
    (2..d).all(|k| d % k != 0)
}

/// Per-site unitaries of the d+1 mutually unbiased product bases for prime
/// local dimension (x/y/z for qubits; quadratic Fourier family for odd d).
pub fn mub_unitaries(d: u8) -> Result<Vec<DMatrix<Complex64>>> {
    if !is_prime(d) {
        return Err(Error::UnsupportedLocalDim(d));
    }
    if d == 2 {
        return Ok(vec![
            BasisLabel::Z.unitary(),
            BasisLabel::X.unitary(),
            BasisLabel::Y.unitary(),
        ]);
    }
    let dd = d as usize;
    let mut bases = vec![DMatrix::<Complex64>::identity(dd, dd)];
    let norm = 1.0 / (dd as f64).sqrt();
    for a in 0..dd {
        let u = DMatrix::from_fn(dd, dd, |k, m| {
            let phase = std::f64::consts::TAU * ((a * k * k + m * k) % dd) as f64 / dd as f64;
            Complex64::from_polar(norm, phase)
        });
        bases.push(u);
    }
    Ok(bases)
}

/// GE_loc from the d+1 mutually unbiased product bases:
/// 2d/(n(d-1)) sum_alpha <F_alpha> - d.
pub fn mub_sum_form(psi: &PureState) -> Result<f64> {
    let d = psi.local_dim();
    if !psi.basis().is_full() {
        return Err(Error::SectorBasisUnsupported);
    }
    let n = psi.n();
    let mut total = 0.0;
    for u in mub_unitaries(d)? {
        let frame = LocalFrame::from_unitaries(vec![u; n], vec![false; n]);
        let rotated = change_basis_frame(psi, &frame)?;
        let probs = rotated.probabilities();
        total += weighted_pair_sum(rotated.basis(), &probs);
    }
    Ok(2.0 * d as f64 / (n as f64 * (d as f64 - 1.0)) * total - d as f64)
}

/// An observable set specialized against one basis: every operator becomes
/// either a diagonal sign pattern or an index permutation with phases, so a
/// purity evaluation is O(dim) per operator. Used by Monte-Carlo loops.
#[derive(Debug, Clone)]
pub enum CompiledOp {
    Diagonal(Vec<f64>),
    Permutation { target: Vec<u32>, phase: Vec<Complex64> },
    Dense(DMatrix<Complex64>),
    /// Identically zero on the basis (e.g. a flip leaving the sector).
    Zero,
}

pub const OUTSIDE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct CompiledSet {
    kappa: f64,
    ops: Vec<CompiledOp>,
}

impl CompiledSet {
    pub fn compile(set: &ObservableSet, basis: &Arc<SectorBasis>) -> Result<Self> {
        if set.kind() == SetKind::FullAlgebra {
            return Err(Error::Config("full algebra needs no compilation".into()));
        }
        let mut ops = Vec::with_capacity(set.ops().len());
        for op in set.ops() {
            ops.push(compile_op(op, basis)?);
        }
        Ok(Self { kappa: set.kappa(), ops })
    }

    pub fn purity(&self, amps: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for op in &self.ops {
            let e = match op {
                CompiledOp::Diagonal(diag) => diag
                    .iter()
                    .zip(amps)
                    .map(|(d, a)| d * a.norm_sqr())
                    .sum::<f64>(),
                CompiledOp::Permutation { target, phase } => {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (k, (&t, &ph)) in target.iter().zip(phase).enumerate() {
                        if t != OUTSIDE {
                            s += amps[t as usize].conj() * ph * amps[k];
                        }
                    }
                    s.re
                }
                CompiledOp::Dense(m) => {
                    let v = nalgebra::DVector::from_column_slice(amps);
                    (v.adjoint() * m * v)[(0, 0)].re
                }
                CompiledOp::Zero => 0.0,
            };
            acc += e * e;
        }
        self.kappa * acc
    }
}

fn compile_op(op: &Operator, basis: &Arc<SectorBasis>) -> Result<CompiledOp> {
    match op {
        Operator::Pauli(p) => {
            if basis.local_dim() != 2 || p.n() != basis.n() {
                return Err(Error::DimensionMismatch(basis.dim(), 1 << p.n()));
            }
            let flip = p.flip_mask();
            if flip == 0 {
                let diag = basis
                    .strings()
                    .iter()
                    .map(|&s| {
                        let sign = if (s & p.z_mask()).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        sign * p.coeff()
                    })
                    .collect();
                Ok(CompiledOp::Diagonal(diag))
            } else {
                let mut target = Vec::with_capacity(basis.dim());
                let mut phase = Vec::with_capacity(basis.dim());
                let mut any = false;
                for &s in basis.strings() {
                    match basis.rank_packed(s ^ flip) {
                        Some(t) => {
                            target.push(t as u32);
                            phase.push(p.phase(s));
                            any = true;
                        }
                        None => {
                            target.push(OUTSIDE);
                            phase.push(Complex64::new(0.0, 0.0));
                        }
                    }
                }
                if any {
                    Ok(CompiledOp::Permutation { target, phase })
                } else {
                    Ok(CompiledOp::Zero)
                }
            }
        }
        Operator::DiagonalReal(v) => {
            if v.len() != basis.dim() {
                return Err(Error::DimensionMismatch(basis.dim(), v.len()));
            }
            Ok(CompiledOp::Diagonal(v.clone()))
        }
        Operator::SingleSite { site, matrix } => {
            if !basis.is_full() {
                return Err(Error::SectorBasisUnsupported);
            }
            Ok(CompiledOp::Dense(
                Operator::SingleSite { site: *site, matrix: matrix.clone() }.to_dense(
                    basis.dim(),
                    basis.n(),
                    basis.local_dim(),
                ),
            ))
        }
        Operator::Dense(m) => {
            if m.nrows() != basis.dim() {
                return Err(Error::DimensionMismatch(basis.dim(), m.nrows()));
            }
            Ok(CompiledOp::Dense(m.clone()))
        }
    }
}
