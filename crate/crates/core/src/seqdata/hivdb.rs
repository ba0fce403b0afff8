//! Conversion of HIVdb genotype-phenotype tables into labeled FASTA.
//!
//! The table is tab separated. The first column is the isolate identifier,
//! one column per drug holds the fold resistance, and columns `P1..Pn` hold
//! the amino acid at each position relative to the wildtype (`-` = wildtype).

use serde::{Deserialize, Serialize};

use super::dataset::write_record;
use crate::error::{Error, Result};

/// Fold-resistance cutoffs for one drug.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceThresholds {
    pub low: f64,
    pub high: f64,
}

impl ResistanceThresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low > 0.0 && low <= high) {
            return Err(Error::invalid(format!(
                "thresholds must satisfy 0 < low <= high, got ({low}, {high})"
            )));
        }
        Ok(ResistanceThresholds { low, high })
    }

    /// 0 = susceptible, 1 = resistant (intermediate and high merged).
    pub fn classify(&self, fold: f64) -> usize {
        usize::from(fold >= self.low)
    }
}

/// Converts an HIVdb table into FASTA for `drug`; rows with a missing fold
/// value for that drug are skipped.
pub fn convert_hivdb(
    table: &str,
    reference: &str,
    thresholds: ResistanceThresholds,
    drug: &str,
) -> Result<String> {
    let reference: Vec<char> = reference
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_ascii_uppercase())
        .collect();
    let mut lines = table
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty table".into(),
    })?;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let drug_col = columns
        .iter()
        .position(|c| c.eq_ignore_ascii_case(drug))
        .ok_or(Error::Parse {
            line: 1,
            message: format!("no column for drug '{drug}'"),
        })?;
    let mut pos_cols: Vec<(usize, usize)> = columns
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let rest = c.strip_prefix('P').or_else(|| c.strip_prefix('p'))?;
            rest.parse::<usize>().ok().map(|p| (p, i))
        })
        .collect();
    pos_cols.sort_unstable();
    if pos_cols.len() != reference.len()
        || pos_cols.iter().enumerate().any(|(i, (p, _))| *p != i + 1)
    {
        return Err(Error::invalid(format!(
            "table has {} position columns but the reference has length {}",
            pos_cols.len(),
            reference.len()
        )));
    }

    let mut out = String::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() < columns.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        let fold_cell = cells[drug_col];
        if fold_cell.is_empty() || fold_cell.eq_ignore_ascii_case("na") {
            continue;
        }
        let fold: f64 = fold_cell.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("fold value '{fold_cell}' is not a number"),
        })?;
        let seq: String = pos_cols
            .iter()
            .zip(&reference)
            .map(|(&(_, col), &wt)| {
                // mixtures such as "IV" keep their first listed residue
                cells[col]
                    .chars()
                    .find(|c| c.is_ascii_alphabetic())
                    .map_or(wt, |c| c.to_ascii_uppercase())
            })
            .collect();
        write_record(&mut out, cells[0], Some(thresholds.classify(fold)), &seq);
    }
    Ok(out)
}
