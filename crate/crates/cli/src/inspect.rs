//! `codes table` and `codes check`.

use num_rational::Ratio;
use qcbm::codes::{
    check_bijective, check_gray, check_monotone, neighbor_hamming_sum, run_length,
    standard_avg_hamming_closed_form, BinaryCode, CodeKind,
};

use crate::error::{CliError, Result};

/// Largest `n` the table renderer accepts.
pub const TABLE_MAX_BITS: u32 = 8;

/// Largest `n` the property check accepts.
pub const CHECK_MAX_BITS: u32 = 16;

/// Largest `n` for the exhaustive XOR-structure scan of the reflected code.
pub const XOR_SCAN_MAX_BITS: u32 = 12;

const TABLE_CODES: [(&str, CodeKind); 3] =
    [("f_SC", CodeKind::Standard), ("f_RGC", CodeKind::ReflectedGray), ("f_MGC", CodeKind::MonotoneGray)];

/// Index row followed by the standard, reflected Gray and monotone Gray
/// codewords, most significant bit first, columns right-aligned.
pub fn render_table(n: u32) -> Result<String> {
    if !(1..=TABLE_MAX_BITS).contains(&n) {
        return Err(CliError::Usage(format!("n must be in 1..={TABLE_MAX_BITS}, got {n}")));
    }
    let size = 1u64 << n;
    let width = (n as usize).max((size - 1).to_string().len());
    let label = TABLE_CODES.iter().map(|(l, _)| l.len()).max().unwrap_or(1);
    let mut out = format!("{:<label$}", "i");
    for j in 0..size {
        out.push_str(&format!(" {j:>width$}"));
    }
    out.push('\n');
    for (name, kind) in TABLE_CODES {
        let code = BinaryCode::new(kind, n, 0)?;
        out.push_str(&format!("{name:<label$}"));
        for j in 0..size {
            out.push_str(&format!(" {:>width$}", code.encode(j)?.to_string()));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The shipped code tables; the random code uses seed 0.
pub fn shipped_table(kind: CodeKind, n: u32) -> Result<Vec<u64>> {
    Ok(BinaryCode::new(kind, n, 0)?.table())
}

fn ratio(r: Ratio<u64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Runs the code property suite for `n = 1..=n_max` on tables supplied by
/// `tables`, so callers can substitute a faulty table.
pub fn check_codes<F>(n_max: u32, tables: F) -> Result<CheckReport>
where
    F: Fn(CodeKind, u32) -> Result<Vec<u64>>,
{
    if !(1..=CHECK_MAX_BITS).contains(&n_max) {
        return Err(CliError::Usage(format!("n-max must be in 1..={CHECK_MAX_BITS}, got {n_max}")));
    }
    let mut report = CheckReport::default();
    report.lines.push(format!("{:>2}  {:<4} {:<12} {:>10}  checks", "n", "code", "avg_hamming", "run_length"));
    for n in 1..=n_max {
        for kind in [CodeKind::Standard, CodeKind::ReflectedGray, CodeKind::MonotoneGray, CodeKind::Random] {
            let table = tables(kind, n)?;
            let mut ok: Vec<String> = Vec::new();
            let mut bad: Vec<String> = Vec::new();
            match check_bijective(&table, n) {
                Ok(()) => ok.push("bijective".into()),
                Err(v) => bad.push(v.to_string()),
            }
            let size = table.len() as u64;
            let avg = Ratio::new(neighbor_hamming_sum(&table), size.saturating_sub(1).max(1));
            let rl = run_length(&table);
            match kind {
                CodeKind::Standard => {
                    let expected = standard_avg_hamming_closed_form(n);
                    if avg == expected {
                        ok.push("closed-form".into());
                    } else {
                        bad.push(format!("average Hamming {} differs from closed form {}", ratio(avg), ratio(expected)));
                    }
                    let half = 1usize << (n - 1);
                    let split = (table[half - 1] ^ table[half]).count_ones();
                    if split == n {
                        ok.push(format!("split={n}"));
                    } else {
                        bad.push(format!("H(f({}), f({half})) = {split}, expected {n}", half - 1));
                    }
                }
                CodeKind::ReflectedGray | CodeKind::MonotoneGray => {
                    match check_gray(&table) {
                        Ok(()) => ok.push("gray".into()),
                        Err(v) => bad.push(v.to_string()),
                    }
                    if avg != Ratio::from_integer(1) {
                        bad.push(format!("average Hamming {} is not 1", ratio(avg)));
                    }
                    if kind == CodeKind::MonotoneGray {
                        match check_monotone(&table) {
                            Ok(()) => ok.push("monotone".into()),
                            Err(v) => bad.push(v.to_string()),
                        }
                    } else {
                        if n >= 2 && rl != 2 {
                            bad.push(format!("run length {rl}, expected 2"));
                        }
                        if n <= XOR_SCAN_MAX_BITS {
                            let broken = (0..table.len() - 1).find(|&i| {
                                let j = (!(i as u64)).trailing_zeros();
                                table[i] ^ table[i + 1] != 1 << j
                            });
                            match broken {
                                None => ok.push("xor-structure".into()),
                                Some(i) => bad.push(format!("f({i}) xor f({}) is not a single bit", i + 1)),
                            }
                        }
                    }
                }
                CodeKind::Random => {}
            }
            if !bad.is_empty() {
                ok.push("FAIL".into());
            }
            report.lines.push(format!("{n:>2}  {:<4} {:<12} {rl:>10}  {}", kind.short_name(), ratio(avg), ok.join(" ")));
            report.failures.extend(bad.into_iter().map(|what| format!("n={n} {}: {what}", kind.short_name())));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n1_table_gray_codes_equal_standard() {
        let t = render_table(1).unwrap();
        assert_eq!(t, "i     0 1\nf_SC  0 1\nf_RGC 0 1\nf_MGC 0 1\n");
    }

    #[test]
    fn n4_reflected_column_extends_n3() {
        let t = render_table(4).unwrap();
        let rgc: Vec<&str> = t.lines().nth(2).unwrap().split_whitespace().skip(1).collect();
        let n3 = ["000", "001", "011", "010", "110", "111", "101", "100"];
        for j in 0..8 {
            assert_eq!(rgc[j], format!("0{}", n3[j]));
            assert_eq!(rgc[15 - j], format!("1{}", n3[j]));
        }
    }

    #[test]
    fn out_of_range() {
        assert!(render_table(0).is_err());
        assert!(render_table(9).is_err());
        assert!(check_codes(17, shipped_table).is_err());
    }
}
