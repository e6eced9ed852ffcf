//! Holds the `acceptance` test target, which runs the ten desk-scale
//! acceptance criteria and prints one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test -p qcbm-repro --test acceptance
//! ```
