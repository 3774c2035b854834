//! Pauli strings in mask form and their O(N) expectation values.
//!
//! A string acts on a packed basis label s as P|s> = c(s)|s ^ flip> with
//! flip = x_mask | y_mask and
//!   c(s) = coeff * i^{|Y|} * (-1)^{popcount(s & (y_mask | z_mask))},
//! using the convention digit 0 <-> sigma_z = +1 (site 1 = top bit).

use num_complex::Complex64;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    n: usize,
    coeff: f64,
    x_mask: u64,
    y_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(paulis: &[Pauli], coeff: f64) -> Self {
        let n = paulis.len();
        let (mut x, mut y, mut z) = (0u64, 0u64, 0u64);
        for (site, p) in paulis.iter().enumerate() {
            let bit = 1u64 << (n - 1 - site);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => y |= bit,
                Pauli::Z => z |= bit,
            }
        }
        Self { n, coeff, x_mask: x, y_mask: y, z_mask: z }
    }

    /// Parse site-order strings like "XIZY" (site 1 leftmost).
    pub fn parse(s: &str, coeff: f64) -> Result<Self> {
        let paulis: Vec<Pauli> = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Config(format!("bad Pauli letter {other:?} in {s:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(&paulis, coeff))
    }

    /// Single sigma_alpha on one site (0-based) of an n-site system.
    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        let mut paulis = vec![Pauli::I; n];
        paulis[site] = p;
        Self::new(&paulis, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask | self.y_mask | self.z_mask == 0
    }

    pub fn flip_mask(&self) -> u64 {
        self.x_mask | self.y_mask
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn y_mask(&self) -> u64 {
        self.y_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn num_y(&self) -> u32 {
        self.y_mask.count_ones()
    }

    /// True iff the matrix is real in the computational basis (even # of Y).
    pub fn is_real(&self) -> bool {
        self.num_y() % 2 == 0
    }

    pub fn paulis(&self) -> Vec<Pauli> {
        (0..self.n)
            .map(|site| {
                let bit = 1u64 << (self.n - 1 - site);
                if self.x_mask & bit != 0 {
                    Pauli::X
                } else if self.y_mask & bit != 0 {
                    Pauli::Y
                } else if self.z_mask & bit != 0 {
                    Pauli::Z
                } else {
                    Pauli::I
                }
            })
            .collect()
    }

    pub fn to_letters(&self) -> String {
        self.paulis()
            .iter()
            .map(|p| match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            })
            .collect()
    }

    /// Coefficient c(s) such that P|s> = c(s)|s ^ flip>.
    #[inline]
    pub fn phase(&self, s: u64) -> Complex64 {
        let iy = match self.num_y() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let sign = if (s & (self.y_mask | self.z_mask)).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        iy * (self.coeff * sign)
    }

    /// <psi|P|psi> for amplitudes over `basis`. Targets falling outside a
    /// sector basis contribute nothing (the operator is projected).
    pub fn expectation(&self, basis: &SectorBasis, amps: &[Complex64]) -> Result<f64> {
        if basis.local_dim() != 2 {
            return Err(Error::UnsupportedLocalDim(basis.local_dim()));
        }
        if self.n != basis.n() || amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch(amps.len(), 1 << self.n));
        }
        let flip = self.flip_mask();
        let mut acc = Complex64::new(0.0, 0.0);
        if flip == 0 {
            for (idx, &s) in basis.strings().iter().enumerate() {
                let sign = if (s & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += amps[idx].norm_sqr() * sign * self.coeff;
            }
        } else {
            for (idx, &s) in basis.strings().iter().enumerate() {
                if let Some(tgt) = basis.rank_packed(s ^ flip) {
                    acc += amps[tgt].conj() * self.phase(s) * amps[idx];
                }
            }
        }
        Ok(acc.re)
    }

    /// Dense matrix in the full 2^n basis (test oracle scale only).
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let flip = self.flip_mask();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for s in 0..dim as u64 {
            m[((s ^ flip) as usize, s as usize)] = self.phase(s);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_matrices() {
        let x = PauliString::parse("X", 1.0).unwrap().to_dense();
        assert_eq!(x[(0, 1)], c(1.0, 0.0));
        assert_eq!(x[(1, 0)], c(1.0, 0.0));
        let y = PauliString::parse("Y", 1.0).unwrap().to_dense();
        assert_eq!(y[(1, 0)], c(0.0, 1.0)); // Y|0> = i|1>
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        let z = PauliString::parse("Z", 1.0).unwrap().to_dense();
        assert_eq!(z[(0, 0)], c(1.0, 0.0));
        assert_eq!(z[(1, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn strings_are_hermitian_and_traceless() {
        for s in ["XZ", "YY", "IZY", "XYZ", "ZIY"] {
            let p = PauliString::parse(s, 1.0).unwrap();
            let m = p.to_dense();
            let diff = (&m - m.adjoint()).norm();
            assert!(diff < 1e-14, "{s} not hermitian");
            assert!(m.trace().norm() < 1e-14, "{s} not traceless");
            // tr(P^2) = N
            let sq = &m * &m;
            assert_relative_eq!(sq.trace().re, m.nrows() as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn expectation_matches_dense() {
        use crate::basis::SectorBasis;
        let basis = SectorBasis::full(3);
        // fixed non-trivial normalized state
        let mut amps: Vec<Complex64> = (0..8)
            .map(|k| c(0.3 + 0.1 * k as f64, 0.05 * (k as f64 - 3.0)))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let v = nalgebra::DVector::from_column_slice(&amps);
        for s in ["XIZ", "YZI", "ZZZ", "XYZ", "IIY", "ZXI"] {
            let p = PauliString::parse(s, 1.0).unwrap();
            let dense = (v.adjoint() * p.to_dense() * &v)[(0, 0)];
            let fast = p.expectation(&basis, &amps).unwrap();
            assert_relative_eq!(fast, dense.re, epsilon = 1e-12);
            assert!(dense.im.abs() < 1e-12);
        }
    }

    #[test]
    fn sector_expectation_projects() {
        use crate::basis::SectorBasis;
        let basis = SectorBasis::sector(4, 0).unwrap();
        let dim = basis.dim();
        let amps = vec![c(1.0 / (dim as f64).sqrt(), 0.0); dim];
        // single X flips out of the sector everywhere
        let p = PauliString::single(4, 1, Pauli::X);
        assert_eq!(p.expectation(&basis, &amps).unwrap(), 0.0);
        // adjacent XX keeps some pairs inside
        let mut ps = vec![Pauli::I; 4];
        ps[1] = Pauli::X;
        ps[2] = Pauli::X;
        let p2 = PauliString::new(&ps, 1.0);
        assert!(p2.expectation(&basis, &amps).unwrap() > 0.0);
    }
}
