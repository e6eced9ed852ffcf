//! Aggregation of finished runs into figure data.
//!
//! Output files, all with a header row:
//!
//! - `loss_curves.csv`: `dataset,nu,n,code,layers,epoch,mean,se,runs`
//! - `q_by_n.csv`: `dataset,nu,code,layers,n,mean_q,se_q,runs,status`
//! - `q_by_nu.csv`: `dataset,n,code,layers,nu,mean_q,se_q,runs,status`
//! - `cells.csv`: `dataset,nu,n,layers,best_code,best_q,rc_q,sc_q,rgc_q,mgc_q,status`
//! - `wins.csv`: `dataset,cells,partial_cells,rc_best,sc_best,rgc_best,mgc_best,rgc_fraction`
//!
//! Standard errors use the sample standard deviation and are `NaN` for a
//! single run. A cell is `partial` when a code seen elsewhere for the same
//! dataset is missing or has fewer runs than the best-populated group.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use qcbm::codes::CodeKind;
use qcbm::data::DatasetKind;
use serde::Serialize;

use crate::error::{csv_err, io_err, CliError, Result};
use crate::run::{self, LOSS_FILE};
use crate::sweep::{read_rows, ReportRow, RESULTS_FILE};

pub const REPORT_DIR: &str = "report";

/// Finished runs with their per-epoch loss histories.
#[derive(Debug, Clone, PartialEq)]
pub struct Results {
    pub rows: Vec<ReportRow>,
    /// Parallel to `rows`; `None` when the loss file is unreadable.
    pub histories: Vec<Option<Vec<f64>>>,
}

/// Reads a sweep directory (with `results.csv`) or a single run directory.
pub fn load(dir: &Path) -> Result<Results> {
    let results = dir.join(RESULTS_FILE);
    if results.is_file() {
        let rows = read_rows(&results)?;
        if rows.is_empty() {
            return Err(CliError::NoResults(dir.to_path_buf()));
        }
        let histories = rows.iter().map(|r| run::read_losses(&dir.join(&r.run_dir).join(LOSS_FILE)).ok()).collect();
        return Ok(Results { rows, histories });
    }
    if run::is_complete(dir) {
        let r = run::load_run(dir)?;
        let row = ReportRow::from_run(&r, ".");
        return Ok(Results { rows: vec![row], histories: vec![Some(r.record.losses)] });
    }
    Err(CliError::NoResults(dir.to_path_buf()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub dataset: DatasetKind,
    pub nu: f64,
    pub n: usize,
    pub code: CodeKind,
    pub layers: usize,
    pub epoch: usize,
    pub mean: f64,
    pub se: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRow {
    pub dataset: DatasetKind,
    pub nu: f64,
    pub n: usize,
    pub code: CodeKind,
    pub layers: usize,
    pub mean_q: f64,
    pub se_q: f64,
    pub runs: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub dataset: DatasetKind,
    pub nu: f64,
    pub n: usize,
    pub layers: usize,
    pub best_code: CodeKind,
    pub best_q: f64,
    pub rc_q: Option<f64>,
    pub sc_q: Option<f64>,
    pub rgc_q: Option<f64>,
    pub mgc_q: Option<f64>,
    pub status: String,
}

impl CellRow {
    pub fn q(&self, code: CodeKind) -> Option<f64> {
        match code {
            CodeKind::Random => self.rc_q,
            CodeKind::Standard => self.sc_q,
            CodeKind::ReflectedGray => self.rgc_q,
            CodeKind::MonotoneGray => self.mgc_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinRow {
    pub dataset: DatasetKind,
    pub cells: usize,
    pub partial_cells: usize,
    pub rc_best: usize,
    pub sc_best: usize,
    pub rgc_best: usize,
    pub mgc_best: usize,
    pub rgc_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub curves: Vec<CurveRow>,
    pub q_scores: Vec<QRow>,
    pub cells: Vec<CellRow>,
    pub wins: Vec<WinRow>,
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn code_rank(c: CodeKind) -> usize {
    CodeKind::ALL.iter().position(|&k| k == c).expect("listed")
}

/// Sort key for a cell: dataset, width, qubits, depth. Positive floats
/// order the same as their bit patterns.
type CellKey = (String, u64, usize, usize);

fn cell_key(r: &ReportRow) -> CellKey {
    (r.dataset.to_string(), r.nu.to_bits(), r.n, r.layers)
}

pub fn build(results: &Results) -> Report {
    let mut groups: BTreeMap<(CellKey, usize), Vec<usize>> = BTreeMap::new();
    for (i, r) in results.rows.iter().enumerate() {
        groups.entry((cell_key(r), code_rank(r.code))).or_default().push(i);
    }

    // expected runs and codes per dataset family
    let mut expected_runs: BTreeMap<(String, u64), usize> = BTreeMap::new();
    let mut expected_codes: BTreeMap<(String, u64), BTreeSet<usize>> = BTreeMap::new();
    for ((key, code), idx) in &groups {
        let family = (key.0.clone(), key.1);
        let e = expected_runs.entry(family.clone()).or_default();
        *e = (*e).max(idx.len());
        expected_codes.entry(family).or_default().insert(*code);
    }

    let mut curves = Vec::new();
    let mut q_scores = Vec::new();
    for ((key, code), idx) in &groups {
        let first = &results.rows[idx[0]];
        let family = (key.0.clone(), key.1);
        let qs: Vec<f64> = idx.iter().map(|&i| results.rows[i].q_score).collect();
        let (mean_q, se_q) = mean_se(&qs);
        let expected = expected_runs[&family];
        let status = if idx.len() < expected { format!("partial {}/{}", idx.len(), expected) } else { "ok".into() };
        q_scores.push(QRow {
            dataset: first.dataset,
            nu: first.nu,
            n: first.n,
            code: CodeKind::ALL[*code],
            layers: first.layers,
            mean_q,
            se_q,
            runs: idx.len(),
            status,
        });

        let histories: Vec<&Vec<f64>> = idx.iter().filter_map(|&i| results.histories[i].as_ref()).collect();
        let epochs = histories.iter().map(|h| h.len()).max().unwrap_or(0);
        for e in 0..epochs {
            let vals: Vec<f64> = histories.iter().filter_map(|h| h.get(e).copied()).collect();
            let (mean, se) = mean_se(&vals);
            curves.push(CurveRow {
                dataset: first.dataset,
                nu: first.nu,
                n: first.n,
                code: CodeKind::ALL[*code],
                layers: first.layers,
                epoch: e + 1,
                mean,
                se,
                runs: vals.len(),
            });
        }
    }

    let mut by_cell: BTreeMap<CellKey, Vec<&QRow>> = BTreeMap::new();
    for q in &q_scores {
        by_cell.entry((q.dataset.to_string(), q.nu.to_bits(), q.n, q.layers)).or_default().push(q);
    }
    let mut cells = Vec::new();
    for (key, qs) in &by_cell {
        let family = (key.0.clone(), key.1);
        let best = qs.iter().min_by(|a, b| a.mean_q.total_cmp(&b.mean_q)).expect("nonempty group");
        let present: BTreeSet<usize> = qs.iter().map(|q| code_rank(q.code)).collect();
        let mut notes: Vec<String> = expected_codes[&family]
            .difference(&present)
            .map(|&c| format!("missing {}", CodeKind::ALL[c].short_name()))
            .collect();
        notes.extend(qs.iter().filter(|q| q.status != "ok").map(|q| format!("{} {}", q.code.short_name(), q.status)));
        let q_of = |c: CodeKind| qs.iter().find(|q| q.code == c).map(|q| q.mean_q);
        cells.push(CellRow {
            dataset: best.dataset,
            nu: best.nu,
            n: best.n,
            layers: best.layers,
            best_code: best.code,
            best_q: best.mean_q,
            rc_q: q_of(CodeKind::Random),
            sc_q: q_of(CodeKind::Standard),
            rgc_q: q_of(CodeKind::ReflectedGray),
            mgc_q: q_of(CodeKind::MonotoneGray),
            status: if notes.is_empty() { "ok".into() } else { format!("partial: {}", notes.join("; ")) },
        });
    }

    let mut wins: BTreeMap<String, WinRow> = BTreeMap::new();
    for c in &cells {
        let w = wins.entry(c.dataset.to_string()).or_insert(WinRow {
            dataset: c.dataset,
            cells: 0,
            partial_cells: 0,
            rc_best: 0,
            sc_best: 0,
            rgc_best: 0,
            mgc_best: 0,
            rgc_fraction: 0.0,
        });
        w.cells += 1;
        if c.status != "ok" {
            w.partial_cells += 1;
        }
        match c.best_code {
            CodeKind::Random => w.rc_best += 1,
            CodeKind::Standard => w.sc_best += 1,
            CodeKind::ReflectedGray => w.rgc_best += 1,
            CodeKind::MonotoneGray => w.mgc_best += 1,
        }
    }
    let wins = wins
        .into_values()
        .map(|mut w| {
            w.rgc_fraction = w.rgc_best as f64 / w.cells as f64;
            w
        })
        .collect();

    Report { curves, q_scores, cells, wins }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct QByNu<'a> {
    dataset: DatasetKind,
    n: usize,
    code: CodeKind,
    layers: usize,
    nu: f64,
    mean_q: f64,
    se_q: f64,
    runs: usize,
    status: &'a str,
}

#[derive(Serialize)]
struct QByN<'a> {
    dataset: DatasetKind,
    nu: f64,
    code: CodeKind,
    layers: usize,
    n: usize,
    mean_q: f64,
    se_q: f64,
    runs: usize,
    status: &'a str,
}

/// Writes the report files into `out` and returns their paths.
pub fn write(report: &Report, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = |name: &str| out.join(name);

    write_csv(&path("loss_curves.csv"), &report.curves)?;

    let mut by_n: Vec<&QRow> = report.q_scores.iter().collect();
    by_n.sort_by(|a, b| {
        (a.dataset.to_string(), a.nu.to_bits(), code_rank(a.code), a.layers, a.n).cmp(&(
            b.dataset.to_string(),
            b.nu.to_bits(),
            code_rank(b.code),
            b.layers,
            b.n,
        ))
    });
    let rows: Vec<QByN> = by_n
        .iter()
        .map(|q| QByN {
            dataset: q.dataset,
            nu: q.nu,
            code: q.code,
            layers: q.layers,
            n: q.n,
            mean_q: q.mean_q,
            se_q: q.se_q,
            runs: q.runs,
            status: &q.status,
        })
        .collect();
    write_csv(&path("q_by_n.csv"), &rows)?;

    let mut by_nu: Vec<&QRow> = report.q_scores.iter().collect();
    by_nu.sort_by(|a, b| {
        (a.dataset.to_string(), a.n, code_rank(a.code), a.layers, a.nu.to_bits()).cmp(&(
            b.dataset.to_string(),
            b.n,
            code_rank(b.code),
            b.layers,
            b.nu.to_bits(),
        ))
    });
    let rows: Vec<QByNu> = by_nu
        .iter()
        .map(|q| QByNu {
            dataset: q.dataset,
            n: q.n,
            code: q.code,
            layers: q.layers,
            nu: q.nu,
            mean_q: q.mean_q,
            se_q: q.se_q,
            runs: q.runs,
            status: &q.status,
        })
        .collect();
    write_csv(&path("q_by_nu.csv"), &rows)?;

    write_csv(&path("cells.csv"), &report.cells)?;
    write_csv(&path("wins.csv"), &report.wins)?;
    Ok(["loss_curves.csv", "q_by_n.csv", "q_by_nu.csv", "cells.csv", "wins.csv"].map(path).to_vec())
}

/// Loads `dir`, builds the report and writes it to `out` (default `dir/report`).
pub fn generate(dir: &Path, out: Option<&Path>) -> Result<Report> {
    let results = load(dir)?;
    let report = build(&results);
    let out = out.map_or_else(|| dir.join(REPORT_DIR), Path::to_path_buf);
    write(&report, &out)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(code: CodeKind, n: usize, layers: usize, seed: u64, q: f64) -> ReportRow {
        ReportRow {
            code,
            dataset: DatasetKind::GaussianMixture,
            n,
            layers,
            nu: 0.03,
            seed,
            q_score: q,
            final_loss: q,
            reference_loss: 0.01,
            epochs_to_reference: None,
            run_dir: format!("{code}-{n}-{layers}-{seed}"),
        }
    }

    #[test]
    fn mean_se_small_cases() {
        assert_eq!(mean_se(&[2.0]).0, 2.0);
        assert!(mean_se(&[2.0]).1.is_nan());
        let (m, s) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn winners_and_partial_cells() {
        let rows = vec![
            row(CodeKind::ReflectedGray, 8, 0, 0, 0.1),
            row(CodeKind::ReflectedGray, 8, 0, 1, 0.2),
            row(CodeKind::Standard, 8, 0, 0, 0.3),
            row(CodeKind::Standard, 8, 0, 1, 0.4),
            row(CodeKind::ReflectedGray, 8, 2, 0, 0.5),
            row(CodeKind::Standard, 8, 2, 0, 0.2),
            row(CodeKind::Standard, 8, 2, 1, 0.2),
        ];
        let histories = vec![None; rows.len()];
        let report = build(&Results { rows, histories });
        assert_eq!(report.cells.len(), 2);
        assert_eq!(report.cells[0].best_code, CodeKind::ReflectedGray);
        assert_eq!(report.cells[0].status, "ok");
        assert_eq!(report.cells[1].best_code, CodeKind::Standard);
        assert!(report.cells[1].status.contains("rgc partial 1/2"), "{}", report.cells[1].status);
        assert_eq!(report.wins[0].cells, 2);
        assert_eq!(report.wins[0].rgc_best, 1);
        assert_eq!(report.wins[0].partial_cells, 1);
        assert!(report.curves.is_empty());
    }
}
