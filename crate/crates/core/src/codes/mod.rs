//! Binary codes: bijections between the indices `0..2^n` of ordered data
//! representatives and the `n`-bit measurement outcomes of a circuit.
//!
//! Four codes are provided:
//!
//! * the standard code (binary counting),
//! * a random code (a seeded uniform permutation stored as a table),
//! * the reflected Gray code `j ^ (j >> 1)`,
//! * a monotone Gray code built with the Savage–Winkler recursion.
//!
//! Bit `i` of a [`Bitstring`] is the coefficient of `2^i`. Bitstrings render
//! most-significant bit first.

mod mgc;
mod stats;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mgc::monotone_gray_table;
pub use stats::{
    check_bijective, check_gray, check_monotone, code_stats, code_stats_with_cap, neighbor_hamming_sum,
    run_length, standard_avg_hamming_closed_form, CodeStats, Violation, DEFAULT_SCAN_CAP,
};

/// Largest bit count for which explicit code tables are materialized.
pub const DEFAULT_TABLE_CAP: u32 = 24;

/// Hard upper limit on bitstring length.
pub const MAX_BITS: u32 = 32;

/// An `n`-bit string. Bit `i` is the `2^i` place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    value: u64,
    len: u32,
}

impl Bitstring {
    pub fn new(value: u64, len: u32) -> Result<Self> {
        if len > MAX_BITS {
            return Err(Error::TooManyBits { bits: len, cap: MAX_BITS });
        }
        if len < 64 && value >> len != 0 {
            return Err(Error::IndexOutOfRange { index: value, bits: len });
        }
        Ok(Self { value, len })
    }

    pub fn zeros(len: u32) -> Self {
        Self { value: 0, len }
    }

    /// The integer whose standard binary representation this is.
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: u32) -> bool {
        i < self.len && (self.value >> i) & 1 == 1
    }

    /// Number of ones.
    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }

    pub fn xor(&self, other: &Bitstring) -> Result<Bitstring> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len as usize,
                right: other.len as usize,
            });
        }
        Ok(Bitstring { value: self.value ^ other.value, len: self.len })
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.len).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    /// Parses most-significant bit first, e.g. `"011"` is 3.
    fn from_str(s: &str) -> Result<Self> {
        let len = s.len() as u32;
        if len > MAX_BITS {
            return Err(Error::TooManyBits { bits: len, cap: MAX_BITS });
        }
        let mut value = 0u64;
        for c in s.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                other => return Err(Error::InvalidArgument(format!("'{other}' is not a binary digit"))),
            }
        }
        Ok(Self { value, len })
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming(a: &Bitstring, b: &Bitstring) -> Result<u32> {
    Ok(a.xor(b)?.weight())
}

fn check_index(j: u64, n: u32) -> Result<()> {
    if n > MAX_BITS {
        return Err(Error::TooManyBits { bits: n, cap: MAX_BITS });
    }
    if j >= 1u64 << n {
        return Err(Error::IndexOutOfRange { index: j, bits: n });
    }
    Ok(())
}

pub fn standard_encode(j: u64, n: u32) -> Result<Bitstring> {
    check_index(j, n)?;
    Ok(Bitstring { value: j, len: n })
}

pub fn standard_decode(b: &Bitstring) -> u64 {
    (0..b.len()).filter(|&i| b.bit(i)).map(|i| 1u64 << i).sum()
}

pub fn rgc_encode(j: u64, n: u32) -> Result<Bitstring> {
    check_index(j, n)?;
    Ok(Bitstring { value: gray(j), len: n })
}

/// Inverts the reflected Gray code from the most-significant bit down:
/// `sc_j = sc_{j+1} ^ rgc_j`.
pub fn rgc_decode(b: &Bitstring) -> u64 {
    gray_inverse(b.value())
}

#[inline]
pub(crate) fn gray(j: u64) -> u64 {
    j ^ (j >> 1)
}

#[inline]
pub(crate) fn gray_inverse(mut g: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

pub fn mgc_encode(j: u64, n: u32) -> Result<Bitstring> {
    check_index(j, n)?;
    let tables = mgc::cached(n)?;
    Ok(Bitstring { value: tables.forward[j as usize] as u64, len: n })
}

pub fn mgc_decode(b: &Bitstring) -> Result<u64> {
    let tables = mgc::cached(b.len())?;
    Ok(tables.inverse()[b.value() as usize] as u64)
}

/// Builds a seeded random code with the default table cap.
pub fn random_code_build(n: u32, seed: u64) -> Result<BinaryCode> {
    BinaryCode::random(n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeKind {
    #[serde(rename = "sc")]
    Standard,
    #[serde(rename = "rc")]
    Random,
    #[serde(rename = "rgc")]
    ReflectedGray,
    #[serde(rename = "mgc")]
    MonotoneGray,
}

impl CodeKind {
    pub const ALL: [CodeKind; 4] = [
        CodeKind::Random,
        CodeKind::Standard,
        CodeKind::ReflectedGray,
        CodeKind::MonotoneGray,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            CodeKind::Standard => "sc",
            CodeKind::Random => "rc",
            CodeKind::ReflectedGray => "rgc",
            CodeKind::MonotoneGray => "mgc",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc" | "standard" => Ok(CodeKind::Standard),
            "rc" | "random" => Ok(CodeKind::Random),
            "rgc" | "reflected-gray" => Ok(CodeKind::ReflectedGray),
            "mgc" | "monotone-gray" => Ok(CodeKind::MonotoneGray),
            other => Err(Error::InvalidArgument(format!("unknown code '{other}'"))),
        }
    }
}

/// Explicit forward and inverse tables for codes without a closed form.
#[derive(Debug)]
pub(crate) struct CodeTables {
    pub(crate) forward: Vec<u32>,
    inverse: OnceLock<Vec<u32>>,
}

impl CodeTables {
    pub(crate) fn new(forward: Vec<u32>) -> Self {
        Self { forward, inverse: OnceLock::new() }
    }

    pub(crate) fn inverse(&self) -> &[u32] {
        self.inverse.get_or_init(|| {
            let mut inv = vec![0u32; self.forward.len()];
            for (j, &b) in self.forward.iter().enumerate() {
                inv[b as usize] = j as u32;
            }
            inv
        })
    }
}

/// A bijection `[0, 2^n) -> {0,1}^n`. Immutable once built.
#[derive(Debug, Clone)]
pub struct BinaryCode {
    n: u32,
    kind: CodeKind,
    seed: Option<u64>,
    tables: Option<Arc<CodeTables>>,
}

impl BinaryCode {
    /// Builds a code of the given kind. `seed` is only read for [`CodeKind::Random`].
    pub fn new(kind: CodeKind, n: u32, seed: u64) -> Result<Self> {
        match kind {
            CodeKind::Standard => Self::standard(n),
            CodeKind::Random => Self::random(n, seed),
            CodeKind::ReflectedGray => Self::reflected_gray(n),
            CodeKind::MonotoneGray => Self::monotone_gray(n),
        }
    }

    pub fn standard(n: u32) -> Result<Self> {
        check_bits(n, MAX_BITS)?;
        Ok(Self { n, kind: CodeKind::Standard, seed: None, tables: None })
    }

    pub fn reflected_gray(n: u32) -> Result<Self> {
        check_bits(n, MAX_BITS)?;
        Ok(Self { n, kind: CodeKind::ReflectedGray, seed: None, tables: None })
    }

    pub fn monotone_gray(n: u32) -> Result<Self> {
        let tables = mgc::cached(n)?;
        Ok(Self { n, kind: CodeKind::MonotoneGray, seed: None, tables: Some(tables) })
    }

    pub fn random(n: u32, seed: u64) -> Result<Self> {
        Self::random_with_cap(n, seed, DEFAULT_TABLE_CAP)
    }

    /// Fisher–Yates shuffle of all `2^n` bitstrings driven by ChaCha8
    /// seeded from `seed`.
    pub fn random_with_cap(n: u32, seed: u64, cap: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("random code needs n >= 1".into()));
        }
        check_bits(n, cap.min(MAX_BITS))?;
        let mut table: Vec<u32> = (0..(1u32 << n)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        table.shuffle(&mut rng);
        Ok(Self {
            n,
            kind: CodeKind::Random,
            seed: Some(seed),
            tables: Some(Arc::new(CodeTables::new(table))),
        })
    }

    /// Wraps an arbitrary permutation table. Fails if `table` is not a
    /// bijection onto `n`-bit strings.
    pub fn from_table(kind: CodeKind, n: u32, table: Vec<u32>) -> Result<Self> {
        check_bits(n, DEFAULT_TABLE_CAP)?;
        let as_u64: Vec<u64> = table.iter().map(|&v| v as u64).collect();
        if let Err(v) = check_bijective(&as_u64, n) {
            return Err(Error::InvalidArgument(format!("table is not a bijection: {v}")));
        }
        Ok(Self { n, kind, seed: None, tables: Some(Arc::new(CodeTables::new(table))) })
    }

    pub fn bits(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> usize {
        1usize << self.n
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn encode(&self, j: u64) -> Result<Bitstring> {
        check_index(j, self.n)?;
        Ok(Bitstring { value: self.encode_value(j as usize), len: self.n })
    }

    pub fn decode(&self, b: &Bitstring) -> Result<u64> {
        if b.len() != self.n {
            return Err(Error::LengthMismatch { left: b.len() as usize, right: self.n as usize });
        }
        Ok(self.decode_value(b.value()) as u64)
    }

    /// Unchecked fast path: `j` must be below `2^n`.
    #[inline]
    pub fn encode_value(&self, j: usize) -> u64 {
        match &self.tables {
            Some(t) => t.forward[j] as u64,
            None => match self.kind {
                CodeKind::ReflectedGray => gray(j as u64),
                _ => j as u64,
            },
        }
    }

    /// Unchecked fast path: `b` must be below `2^n`.
    #[inline]
    pub fn decode_value(&self, b: u64) -> usize {
        match &self.tables {
            Some(t) => t.inverse()[b as usize] as usize,
            None => match self.kind {
                CodeKind::ReflectedGray => gray_inverse(b) as usize,
                _ => b as usize,
            },
        }
    }

    /// Forward table as integers, `table[j] = int(f(j))`.
    pub fn table(&self) -> Vec<u64> {
        (0..self.size()).map(|j| self.encode_value(j)).collect()
    }

    /// `lookup[int(b)] = f^-1(b)`, used to map circuit outcomes to representatives.
    pub fn decode_table(&self) -> Vec<u32> {
        match &self.tables {
            Some(t) => t.inverse().to_vec(),
            None => (0..self.size() as u64).map(|b| self.decode_value(b) as u32).collect(),
        }
    }
}

fn check_bits(n: u32, cap: u32) -> Result<()> {
    if n > cap {
        return Err(Error::TooManyBits { bits: n, cap });
    }
    Ok(())
}
