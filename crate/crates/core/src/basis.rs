//! Basis bookkeeping for qubit/qudit product bases: sector enumeration,
//! combinatorial ranking, Hamming distances and pair counting.
//!
//! Conventions fixed here once and used everywhere:
//! - digit 1 <-> sigma_z eigenvalue -1 (spin down), digit 0 <-> +1;
//! - site 1 is the leftmost character in serialized strings and the
//!   most significant digit of the packed integer;
//! - canonical ordering of a basis is ascending packed-integer value.

use crate::error::{Error, Result};

/// Binomial coefficient in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// A product-basis label: one digit in {0, .., d-1} per site.
///
/// Digits are packed into a `u64` in base `d`, site 1 most significant.
/// For qubits this is the plain bit pattern of the string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupationString {
    packed: u64,
    n: usize,
    d: u8,
}

impl OccupationString {
    pub fn new(digits: &[u8], d: u8) -> Result<Self> {
        let mut packed = 0u64;
        for &v in digits {
            if v >= d {
                return Err(Error::Config(format!("digit {v} >= local dimension {d}")));
            }
            packed = packed * d as u64 + v as u64;
        }
        Ok(Self { packed, n: digits.len(), d })
    }

    /// Qubit string from its packed bit pattern.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        debug_assert!(n == 64 || bits < (1u64 << n));
        Self { packed: bits, n, d: 2 }
    }

    pub fn from_packed(packed: u64, n: usize, d: u8) -> Self {
        Self { packed, n, d }
    }

    pub fn packed(&self) -> u64 {
        self.packed
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn local_dim(&self) -> u8 {
        self.d
    }

    /// Digit at `site` (0-based; site 0 is the leftmost / most significant).
    pub fn digit(&self, site: usize) -> u8 {
        debug_assert!(site < self.n);
        if self.d == 2 {
            ((self.packed >> (self.n - 1 - site)) & 1) as u8
        } else {
            let mut v = self.packed;
            for _ in 0..(self.n - 1 - site) {
                v /= self.d as u64;
            }
            (v % self.d as u64) as u8
        }
    }

    pub fn digits(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.digit(i)).collect()
    }

    /// ASCII form, site 1 leftmost; this is the serialization format.
    pub fn to_ascii(&self) -> String {
        self.digits().iter().map(|v| char::from(b'0' + v)).collect()
    }

    pub fn from_ascii(s: &str, d: u8) -> Result<Self> {
        let digits: Vec<u8> = s
            .bytes()
            .map(|b| {
                b.checked_sub(b'0')
                    .filter(|&v| v < d)
                    .ok_or_else(|| Error::Config(format!("bad digit in occupation string {s:?}")))
            })
            .collect::<Result<_>>()?;
        Self::new(&digits, d)
    }

    /// Number of ones (qubit strings only).
    pub fn weight(&self) -> u32 {
        debug_assert_eq!(self.d, 2);
        self.packed.count_ones()
    }
}

/// Hamming distance: number of sites whose digits differ.
pub fn hamming(a: &OccupationString, b: &OccupationString) -> Result<u32> {
    if a.n != b.n || a.d != b.d {
        return Err(Error::LengthMismatch(a.n, b.n));
    }
    if a.d == 2 {
        Ok((a.packed ^ b.packed).count_ones())
    } else {
        Ok((0..a.n).filter(|&i| a.digit(i) != b.digit(i)).count() as u32)
    }
}

/// Hamming distance between packed qubit strings.
#[inline]
pub fn hamming_bits(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

/// Number of unordered pairs of n-qubit basis strings at Hamming distance f:
/// n_f = (N/2) C(n, f) for f >= 1, with N = 2^n. The f = 0 bucket is empty
/// since pairs are distinct.
pub fn pair_count_by_distance(n: usize, f: usize) -> u128 {
    assert!(f <= n, "distance out of range");
    if f == 0 {
        return 0;
    }
    (1u128 << n) / 2 * binomial(n, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SectorConstraint {
    Full,
    /// Total sigma_z eigenvalue m = sum_i (1 - 2 b_i); strings carry
    /// (n - m)/2 ones.
    FixedMagnetization(i64),
}

/// An ordered basis of occupation strings: the full product basis or one
/// fixed-magnetization sector. Strings ascend in packed-integer order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n: usize,
    d: u8,
    constraint: SectorConstraint,
    strings: Vec<u64>,
}

impl SectorBasis {
    /// Full qubit basis, dim 2^n.
    pub fn full(n: usize) -> Self {
        Self::full_qudit(n, 2)
    }

    /// Full qudit basis, dim d^n.
    pub fn full_qudit(n: usize, d: u8) -> Self {
        assert!(n >= 1 && d >= 2);
        let dim = (d as u64).pow(n as u32);
        Self {
            n,
            d,
            constraint: SectorConstraint::Full,
            strings: (0..dim).collect(),
        }
    }

    /// All n-qubit strings with (n - m)/2 ones, canonically ordered.
    pub fn sector(n: usize, m: i64) -> Result<Self> {
        if n < 1 || m.unsigned_abs() as usize > n || (n as i64 + m) % 2 != 0 {
            return Err(Error::InvalidSector { n, m });
        }
        let ones = ((n as i64 - m) / 2) as u32;
        let dim = binomial(n, ones as usize) as usize;
        let mut strings = Vec::with_capacity(dim);
        for i in 0..dim {
            strings.push(unrank_fixed_weight(n, ones, i as u128));
        }
        Ok(Self {
            n,
            d: 2,
            constraint: SectorConstraint::FixedMagnetization(m),
            strings,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> u8 {
        self.d
    }

    pub fn constraint(&self) -> SectorConstraint {
        self.constraint
    }

    pub fn dim(&self) -> usize {
        self.strings.len()
    }

    pub fn is_full(&self) -> bool {
        matches!(self.constraint, SectorConstraint::Full)
    }

    /// Packed strings in canonical order.
    pub fn strings(&self) -> &[u64] {
        &self.strings
    }

    pub fn string(&self, index: usize) -> OccupationString {
        OccupationString::from_packed(self.strings[index], self.n, self.d)
    }

    /// Position of `s` in canonical order. O(n) via the combinatorial
    /// number system for sectors, O(1) for full bases.
    pub fn rank(&self, s: &OccupationString) -> Result<usize> {
        if s.n != self.n || s.d != self.d {
            return Err(Error::LengthMismatch(s.n, self.n));
        }
        self.rank_packed(s.packed).ok_or(Error::NotInSector)
    }

    /// Rank of a packed string, or None if it lies outside the sector.
    #[inline]
    pub fn rank_packed(&self, packed: u64) -> Option<usize> {
        match self.constraint {
            SectorConstraint::Full => Some(packed as usize),
            SectorConstraint::FixedMagnetization(m) => {
                let ones = ((self.n as i64 - m) / 2) as u32;
                if packed.count_ones() != ones || packed >> self.n != 0 {
                    return None;
                }
                Some(rank_fixed_weight(packed) as usize)
            }
        }
    }

    pub fn unrank(&self, index: usize) -> OccupationString {
        self.string(index)
    }
}

/// Ordinal of a fixed-weight bit pattern among all patterns of the same
/// weight, in ascending numeric order (enumerative coding).
fn rank_fixed_weight(bits: u64) -> u128 {
    let mut rank: u128 = 0;
    let mut seen = 0usize;
    let mut rest = bits;
    while rest != 0 {
        let p = rest.trailing_zeros() as usize;
        seen += 1;
        rank += binomial(p, seen);
        rest &= rest - 1;
    }
    rank
}

/// Inverse of `rank_fixed_weight` for n-bit patterns with `ones` set bits.
fn unrank_fixed_weight(n: usize, ones: u32, mut ordinal: u128) -> u64 {
    let mut result = 0u64;
    let mut ones = ones as usize;
    for bit in (0..n).rev() {
        if ones == 0 {
            break;
        }
        let c = binomial(bit, ones);
        if ordinal >= c {
            ordinal -= c;
            result |= 1 << bit;
            ones -= 1;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sector_dims() {
        assert_eq!(SectorBasis::sector(12, 0).unwrap().dim(), 924);
        assert_eq!(SectorBasis::sector(6, 0).unwrap().dim(), 20);
        let s = SectorBasis::sector(2, 2).unwrap();
        assert_eq!(s.dim(), 1);
        // m = +2 is the fully polarized spin-up sector: all digits 0.
        assert_eq!(s.string(0).to_ascii(), "00");
        let down = SectorBasis::sector(2, -2).unwrap();
        assert_eq!(down.string(0).to_ascii(), "11");
    }

    #[test]
    fn sector_parity_error() {
        assert!(SectorBasis::sector(3, 0).is_err());
        assert!(SectorBasis::sector(4, 5).is_err());
    }

    #[test]
    fn sector_strings_sorted_and_sz0_brute_force() {
        for n in [2usize, 4, 6] {
            let basis = SectorBasis::sector(n, 0).unwrap();
            let brute: Vec<u64> = (0..1u64 << n)
                .filter(|s| s.count_ones() as usize == n / 2)
                .collect();
            assert_eq!(basis.strings(), &brute[..]);
        }
    }

    #[test]
    fn rank_examples() {
        let full = SectorBasis::full(3);
        assert_eq!(full.rank(&OccupationString::from_bits(0b101, 3)).unwrap(), 5);
        let s = SectorBasis::sector(4, 0).unwrap();
        assert_eq!(s.rank(&OccupationString::from_bits(0b0011, 4)).unwrap(), 0);
        assert_eq!(s.rank(&OccupationString::from_bits(0b1100, 4)).unwrap(), 5);
        assert!(s.rank(&OccupationString::from_bits(0b0001, 4)).is_err());
    }

    #[test]
    fn rank_unrank_bijective_all_sectors() {
        for n in 1..=14usize {
            for m in (-(n as i64)..=n as i64).step_by(2) {
                if (n as i64 + m) % 2 != 0 {
                    continue;
                }
                let basis = SectorBasis::sector(n, m).unwrap();
                for i in 0..basis.dim() {
                    assert_eq!(basis.rank(&basis.unrank(i)).unwrap(), i);
                }
            }
        }
    }

    #[test]
    fn hamming_examples() {
        let a = OccupationString::from_ascii("0011", 2).unwrap();
        let b = OccupationString::from_ascii("0101", 2).unwrap();
        assert_eq!(hamming(&a, &b).unwrap(), 2);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        let p = OccupationString::from_ascii("012", 3).unwrap();
        let q = OccupationString::from_ascii("021", 3).unwrap();
        assert_eq!(hamming(&p, &q).unwrap(), 2);
        let short = OccupationString::from_ascii("01", 2).unwrap();
        assert!(hamming(&a, &short).is_err());
    }

    #[test]
    fn pair_counts_examples_and_identities() {
        assert_eq!(pair_count_by_distance(2, 1), 4);
        assert_eq!(pair_count_by_distance(3, 3), 4);
        let weighted: u128 = (0..=3).map(|f| pair_count_by_distance(3, f) * f as u128).sum();
        assert_eq!(weighted, 3 * 64 / 4);
    }

    #[test]
    fn pair_counts_match_brute_force() {
        for n in 1..=6usize {
            let dim = 1u64 << n;
            let mut counts = vec![0u128; n + 1];
            for a in 0..dim {
                for b in (a + 1)..dim {
                    counts[hamming_bits(a, b) as usize] += 1;
                }
            }
            for f in 0..=n {
                assert_eq!(pair_count_by_distance(n, f), counts[f], "n={n} f={f}");
            }
            let total: u128 = counts.iter().sum();
            assert_eq!(total, (dim as u128) * (dim as u128 - 1) / 2);
            let weighted: u128 = (0..=n).map(|f| counts[f] * f as u128).sum();
            assert_eq!(weighted, n as u128 * (dim as u128).pow(2) / 4);
        }
    }

    #[test]
    fn ascii_round_trip() {
        let s = OccupationString::from_ascii("10110", 2).unwrap();
        assert_eq!(s.to_ascii(), "10110");
        assert_eq!(s.digit(0), 1);
        assert_eq!(s.digit(4), 0);
        assert_eq!(s.packed(), 0b10110);
    }

    proptest! {
        #[test]
        fn prop_rank_monotone(half in 1usize..=5, seed in 0u64..1000) {
            let basis = SectorBasis::sector(2 * half, 0).unwrap();
            let i = (seed as usize) % basis.dim();
            let j = (seed as usize * 7 + 3) % basis.dim();
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            prop_assert!(basis.strings()[lo] <= basis.strings()[hi]);
        }
    }
}
