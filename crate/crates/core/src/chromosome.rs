//! Fixed-length binary gene mask; gene `i` selects feature column `i`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("invalid hex digit '{0}'")]
    BadDigit(char),
    #[error("bit {bit} set but the mask only has {len} genes")]
    OutOfRange { bit: usize, len: usize },
    #[error("empty mask string")]
    Empty,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    len: usize,
    words: Vec<u64>,
}

impl Chromosome {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut c = Self::zeros(len);
        for i in 0..len {
            c.set(i, true);
        }
        c
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut c = Self::zeros(len);
        for &i in idx {
            c.set(i, true);
        }
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            c.set(i, b);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "gene {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, on: bool) {
        assert!(i < self.len, "gene {i} out of range {}", self.len);
        let bit = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of active genes in ascending order.
    pub fn active(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Bit string with gene 0 first, e.g. `011010`.
    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Hexadecimal integer with gene `i` as bit `i`, most significant digit
    /// first, padded to `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let mut nibble = 0u32;
                for b in 0..4 {
                    let i = d * 4 + b;
                    if i < self.len && self.get(i) {
                        nibble |= 1 << b;
                    }
                }
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    /// Parses [`Chromosome::to_hex`] output (an optional `0x` prefix is allowed).
    /// Digits may be fewer than the padded width; set bits past `len` are rejected.
    pub fn from_hex(s: &str, len: usize) -> Result<Self, MaskError> {
        let s = s.trim();
        let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        if s.is_empty() {
            return Err(MaskError::Empty);
        }
        let mut c = Self::zeros(len);
        for (d, ch) in s.chars().rev().enumerate() {
            let nibble = ch.to_digit(16).ok_or(MaskError::BadDigit(ch))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let i = d * 4 + b;
                    if i >= len {
                        return Err(MaskError::OutOfRange { bit: i, len });
                    }
                    c.set(i, true);
                }
            }
        }
        Ok(c)
    }

    /// Lexicographic order on the bit string, gene 0 first, `0 < 1`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for i in 0..self.len.min(other.len) {
            match (self.get(i), other.get(i)) {
                (false, true) => return Ordering::Less,
                (true, false) => return Ordering::Greater,
                _ => {}
            }
        }
        self.len.cmp(&other.len)
    }
}

impl fmt::Debug for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chromosome({:?})", self.active())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_layout() {
        let c = Chromosome::from_indices(315, &[0, 4, 314]);
        let h = c.to_hex();
        assert_eq!(h.len(), 79);
        assert!(h.ends_with("11"));
        assert!(h.starts_with('4'));
        assert_eq!(Chromosome::from_hex(&h, 315).unwrap(), c);
    }

    #[test]
    fn hex_rejects_bit_315() {
        let mut s = String::from("8");
        s.push_str(&"0".repeat(78));
        assert_eq!(
            Chromosome::from_hex(&s, 315),
            Err(MaskError::OutOfRange { bit: 315, len: 315 })
        );
        assert_eq!(Chromosome::from_hex("0xg", 8), Err(MaskError::BadDigit('g')));
    }

    #[test]
    fn bitstring_and_order() {
        let a = Chromosome::from_indices(6, &[1, 2, 4]);
        assert_eq!(a.to_bitstring(), "011010");
        let b = Chromosome::from_indices(6, &[0]);
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        assert_eq!(a.count_ones(), 3);
    }

    proptest! {
        #[test]
        fn hex_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..400)) {
            let c = Chromosome::from_bools(&bits);
            prop_assert_eq!(Chromosome::from_hex(&c.to_hex(), bits.len()).unwrap(), c.clone());
            prop_assert_eq!(c.active().len(), c.count_ones());
        }
    }
}
