//! Monotone Gray code via the Savage–Winkler recursion.
//!
//! The code is a concatenation of paths `P(n, 0), P(n, 1)^R, P(n, 2), ...`,
//! where `P(n, j)` alternates between Hamming weights `j` and `j + 1`:
//!
//! ```text
//! P(1, 0) = [0, 1]
//! P(n, j) = 1 . pi_{n-1}(P(n-1, j-1))  ++  0 . P(n-1, j)
//! ```
//!
//! `pi_m` is a fixed permutation of bit positions (positions counted from
//! the leftmost, most-significant bit):
//!
//! ```text
//! pi_1 = (0)
//! x    = pi_{m-1} ++ (m-1)
//! pi_m = rotate_right((x[x[0]], x[x[1]], ..., x[x[m-1]]), 1)
//! ```
//!
//! For `n = 3` the result is `000 001 011 010 110 100 101 111`.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::{Arc, Mutex, OnceLock};

use super::{CodeTables, DEFAULT_TABLE_CAP};
use crate::error::{Error, Result};

fn position_permutation(m: usize) -> Vec<usize> {
    if m <= 1 {
        return vec![0];
    }
    let mut x = position_permutation(m - 1);
    x.push(m - 1);
    let mut y: Vec<usize> = (0..m).map(|k| x[x[k]]).collect();
    y.rotate_right(1);
    y
}

/// Applies `y[t] = x[perm[t]]` to an `m`-bit value whose position `t`
/// (from the left) is bit `m - 1 - t`.
fn permute_positions(value: u32, perm: &[usize]) -> u32 {
    let m = perm.len();
    let mut out = 0u32;
    for (t, &src) in perm.iter().enumerate() {
        if (value >> (m - 1 - src)) & 1 == 1 {
            out |= 1 << (m - 1 - t);
        }
    }
    out
}

struct Builder {
    perms: Vec<Vec<usize>>,
    memo: HashMap<(usize, usize), Rc<Vec<u32>>>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            perms: (0..=n).map(position_permutation).collect(),
            memo: HashMap::new(),
        }
    }

    fn path(&mut self, m: usize, j: usize) -> Rc<Vec<u32>> {
        if let Some(p) = self.memo.get(&(m, j)) {
            return Rc::clone(p);
        }
        let out = if m == 1 {
            if j == 0 {
                vec![0, 1]
            } else {
                Vec::new()
            }
        } else if j >= m {
            Vec::new()
        } else {
            let mut out = Vec::new();
            if j >= 1 {
                let lower = self.path(m - 1, j - 1);
                let perm = &self.perms[m - 1];
                let top = 1u32 << (m - 1);
                out.extend(lower.iter().map(|&x| top | permute_positions(x, perm)));
            }
            let upper = self.path(m - 1, j);
            out.extend(upper.iter().copied());
            out
        };
        let out = Rc::new(out);
        self.memo.insert((m, j), Rc::clone(&out));
        out
    }
}

/// The monotone Gray code as a forward table `table[j] = int(f(j))`.
pub fn monotone_gray_table(n: u32) -> Result<Vec<u32>> {
    if n > DEFAULT_TABLE_CAP {
        return Err(Error::TooManyBits { bits: n, cap: DEFAULT_TABLE_CAP });
    }
    if n == 0 {
        return Ok(vec![0]);
    }
    let n = n as usize;
    let mut builder = Builder::new(n);
    let mut table = Vec::with_capacity(1 << n);
    for level in 0..n {
        let path = builder.path(n, level);
        if level % 2 == 0 {
            table.extend(path.iter().copied());
        } else {
            table.extend(path.iter().rev().copied());
        }
    }
    debug_assert_eq!(table.len(), 1 << n);
    Ok(table)
}

type Cache = Mutex<HashMap<u32, Arc<CodeTables>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn cached(n: u32) -> Result<Arc<CodeTables>> {
    if let Some(t) = cache().lock().expect("mgc cache poisoned").get(&n) {
        return Ok(Arc::clone(t));
    }
    let tables = Arc::new(CodeTables::new(monotone_gray_table(n)?));
    let mut guard = cache().lock().expect("mgc cache poisoned");
    Ok(Arc::clone(guard.entry(n).or_insert(tables)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_permutations() {
        for m in 1..12 {
            let mut p = position_permutation(m);
            p.sort_unstable();
            assert_eq!(p, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn small_tables() {
        assert_eq!(monotone_gray_table(1).unwrap(), vec![0b0, 0b1]);
        assert_eq!(monotone_gray_table(2).unwrap(), vec![0b00, 0b01, 0b11, 0b10]);
        assert_eq!(
            monotone_gray_table(4).unwrap(),
            vec![
                0b0000, 0b0001, 0b0011, 0b0010, 0b0110, 0b0100, 0b1100, 0b1000, 0b1010, 0b1011, 0b1001,
                0b1101, 0b0101, 0b0111, 0b1111, 0b1110
            ]
        );
    }

    #[test]
    fn ends_at_expected_weight() {
        // odd n ends on all ones, even n on a weight n-1 string
        for n in 1..=10u32 {
            let t = monotone_gray_table(n).unwrap();
            let last = *t.last().unwrap();
            let expected = if n % 2 == 1 { n } else { n - 1 };
            assert_eq!(last.count_ones(), expected, "n={n}");
        }
    }

    #[test]
    fn over_cap() {
        assert!(monotone_gray_table(DEFAULT_TABLE_CAP + 1).is_err());
    }
}
