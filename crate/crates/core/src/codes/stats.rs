use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use super::BinaryCode;
use crate::error::{Error, Result};

/// Largest `n` for which [`code_stats`] scans a code exhaustively.
pub const DEFAULT_SCAN_CAP: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeStats {
    /// Mean Hamming distance between the codewords of neighbouring indices.
    pub avg_neighbor_hamming: Ratio<u64>,
    /// Largest `r` with `H(f(i), f(i + k)) = k` for every `k <= r`.
    pub run_length: u64,
    pub is_gray: bool,
    pub is_monotone: bool,
}

/// A named property failure with its counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Violation {
    OutOfRange { index: usize, value: u64 },
    Duplicate { value: u64, first: usize, second: usize },
    Length { expected: usize, got: usize },
    Gray { index: usize, next: usize, distance: u32 },
    Monotone { earlier: usize, later: usize, earlier_weight: u32, later_weight: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { index, value } => {
                write!(f, "bijectivity: f({index}) = {value} is out of range")
            }
            Violation::Duplicate { value, first, second } => {
                write!(f, "bijectivity: f({first}) = f({second}) = {value}")
            }
            Violation::Length { expected, got } => {
                write!(f, "bijectivity: table has {got} entries, expected {expected}")
            }
            Violation::Gray { index, next, distance } => {
                write!(f, "gray: H(f({index}), f({next})) = {distance}")
            }
            Violation::Monotone { earlier, later, earlier_weight, later_weight } => write!(
                f,
                "monotone: h(f({later})) = {later_weight} < h(f({earlier})) - 1 = {}",
                *earlier_weight as i64 - 1
            ),
        }
    }
}

pub fn check_bijective(table: &[u64], n: u32) -> std::result::Result<(), Violation> {
    let size = 1usize << n;
    if table.len() != size {
        return Err(Violation::Length { expected: size, got: table.len() });
    }
    let mut seen = vec![usize::MAX; size];
    for (j, &b) in table.iter().enumerate() {
        if b as usize >= size {
            return Err(Violation::OutOfRange { index: j, value: b });
        }
        if seen[b as usize] != usize::MAX {
            return Err(Violation::Duplicate { value: b, first: seen[b as usize], second: j });
        }
        seen[b as usize] = j;
    }
    Ok(())
}

pub fn check_gray(table: &[u64]) -> std::result::Result<(), Violation> {
    for (i, w) in table.windows(2).enumerate() {
        let distance = (w[0] ^ w[1]).count_ones();
        if distance != 1 {
            return Err(Violation::Gray { index: i, next: i + 1, distance });
        }
    }
    Ok(())
}

/// `h(f(k)) >= h(f(j)) - 1` for all `j <= k`, checked with a suffix minimum.
pub fn check_monotone(table: &[u64]) -> std::result::Result<(), Violation> {
    let mut min_weight = u32::MAX;
    let mut min_at = 0;
    for j in (0..table.len()).rev() {
        let w = table[j].count_ones();
        if w < min_weight {
            min_weight = w;
            min_at = j;
        }
        if min_weight + 1 < w {
            return Err(Violation::Monotone {
                earlier: j,
                later: min_at,
                earlier_weight: w,
                later_weight: min_weight,
            });
        }
    }
    Ok(())
}

pub fn neighbor_hamming_sum(table: &[u64]) -> u64 {
    table.windows(2).map(|w| (w[0] ^ w[1]).count_ones() as u64).sum()
}

pub fn run_length(table: &[u64]) -> u64 {
    let len = table.len();
    let mut r = 0;
    for k in 1..len {
        let preserved = (0..len - k).all(|i| (table[i] ^ table[i + k]).count_ones() as usize == k);
        if !preserved {
            break;
        }
        r = k as u64;
    }
    r
}

/// `2^n / (2^n - 1) * (2 - (n + 2) / 2^n)`, the mean neighbour distance of
/// the standard code.
pub fn standard_avg_hamming_closed_form(n: u32) -> Ratio<u64> {
    let size = 1u64 << n;
    Ratio::new(2 * size - (n as u64 + 2), size - 1)
}

pub fn code_stats(code: &BinaryCode) -> Result<CodeStats> {
    code_stats_with_cap(code, DEFAULT_SCAN_CAP)
}

pub fn code_stats_with_cap(code: &BinaryCode, cap: u32) -> Result<CodeStats> {
    if code.bits() > cap {
        return Err(Error::TooManyBits { bits: code.bits(), cap });
    }
    if code.bits() == 0 {
        return Err(Error::InvalidArgument("code statistics need n >= 1".into()));
    }
    let table = code.table();
    let pairs = table.len() as u64 - 1;
    Ok(CodeStats {
        avg_neighbor_hamming: Ratio::new(neighbor_hamming_sum(&table), pairs),
        run_length: run_length(&table),
        is_gray: check_gray(&table).is_ok(),
        is_monotone: check_monotone(&table).is_ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_three_bits() {
        let s = code_stats(&BinaryCode::standard(3).unwrap()).unwrap();
        assert_eq!(s.avg_neighbor_hamming, Ratio::new(11, 7));
        assert_eq!(standard_avg_hamming_closed_form(3), Ratio::new(11, 7));
        assert_eq!(s.run_length, 0);
        assert!(!s.is_gray);
    }

    #[test]
    fn reflected_gray_stats() {
        for n in 2..=10 {
            let s = code_stats(&BinaryCode::reflected_gray(n).unwrap()).unwrap();
            assert_eq!(s.avg_neighbor_hamming, Ratio::from_integer(1));
            assert_eq!(s.run_length, 2, "n={n}");
            assert!(s.is_gray);
        }
    }

    #[test]
    fn monotone_gray_stats() {
        for n in 1..=12 {
            let s = code_stats(&BinaryCode::monotone_gray(n).unwrap()).unwrap();
            assert!(s.is_gray && s.is_monotone, "n={n}");
            assert_eq!(s.avg_neighbor_hamming, Ratio::from_integer(1));
        }
    }

    #[test]
    fn single_bit_run_length_is_capped() {
        let s = code_stats(&BinaryCode::reflected_gray(1).unwrap()).unwrap();
        assert_eq!(s.run_length, 1);
    }

    #[test]
    fn detects_faults() {
        assert!(matches!(check_bijective(&[0, 1, 1, 3], 2), Err(Violation::Duplicate { value: 1, first: 1, second: 2 })));
        assert!(matches!(check_bijective(&[0, 1, 2], 2), Err(Violation::Length { .. })));
        assert!(matches!(check_bijective(&[0, 1, 2, 4], 2), Err(Violation::OutOfRange { index: 3, .. })));
        assert_eq!(check_gray(&[0, 1, 2, 3]), Err(Violation::Gray { index: 1, next: 2, distance: 2 }));
        // weights 0 1 2 3 0: index 4 drops below 3 - 1
        let v = check_monotone(&[0b000, 0b001, 0b011, 0b111, 0b000]).unwrap_err();
        assert_eq!(v, Violation::Monotone { earlier: 3, later: 4, earlier_weight: 3, later_weight: 0 });
    }

    #[test]
    fn scan_cap() {
        let c = BinaryCode::standard(21).unwrap();
        assert!(matches!(code_stats(&c), Err(Error::TooManyBits { bits: 21, cap: 20 })));
    }
}
