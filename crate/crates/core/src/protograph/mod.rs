//! Protograph base matrices, PEXIT analysis and asymptotic decoding thresholds.

mod jfunc;
mod pexit;
mod threshold;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jfunc::JFunction;
pub use pexit::{pexit_converges, PexitConfig, PexitTrace};
pub use threshold::{
    gap_curve, threshold, threshold_db, threshold_report, OperatingContext, ThresholdReport,
    ThresholdSearch,
};

/// Structural limits a base matrix must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub max_parallel: u32,
    pub max_vn_degree: u32,
    pub max_degree2_columns: usize,
}

impl Default for DesignConstraints {
    fn default() -> Self {
        DesignConstraints {
            max_parallel: 3,
            max_vn_degree: 9,
            max_degree2_columns: 1,
        }
    }
}

/// `T(k) = ceil(k / D)`, the default bit level of protograph column `k` (1-based).
pub fn level_map(k: usize, d: usize) -> usize {
    k.div_ceil(d)
}

/// Levels `T(1), ..., T(D m)`.
pub fn default_levels(d: usize, m: usize) -> Vec<usize> {
    (1..=d * m).map(|k| level_map(k, d)).collect()
}

/// An `M x N` protograph with a bit level per column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    levels: Vec<usize>,
}

impl BaseMatrix {
    /// Builds a matrix from row-major entries and 1-based column levels.
    pub fn new(rows: usize, cols: usize, entries: Vec<u32>, levels: Vec<usize>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "base matrix must be non-empty".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if levels.len() != cols || levels.contains(&0) {
            return Err(Error::InvalidParameter(
                "need one level >= 1 per column".into(),
            ));
        }
        Ok(BaseMatrix {
            rows,
            cols,
            entries,
            levels,
        })
    }

    pub fn from_rows(rows: &[&[u32]], levels: Vec<usize>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged base matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), levels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u32) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [u32] {
        &mut self.entries
    }

    /// Bit level (1-based) of every column.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn col_sum(&self, col: usize) -> u32 {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    pub fn row_sum(&self, row: usize) -> u32 {
        self.entries[row * self.cols..(row + 1) * self.cols]
            .iter()
            .sum()
    }

    pub fn edge_count(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// `(N - M) / N`.
    pub fn design_rate(&self) -> f64 {
        (self.cols - self.rows) as f64 / self.cols as f64
    }

    /// Lists every constraint the matrix violates; empty means valid.
    pub fn violations(&self, limits: &DesignConstraints) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_entry() > limits.max_parallel {
            out.push(format!(
                "entry {} exceeds {} parallel edges",
                self.max_entry(),
                limits.max_parallel
            ));
        }
        let mut degree2 = 0;
        for c in 0..self.cols {
            let s = self.col_sum(c);
            if s > limits.max_vn_degree {
                out.push(format!(
                    "column {} has degree {s} > {}",
                    c + 1,
                    limits.max_vn_degree
                ));
            }
            if s < 2 {
                out.push(format!("column {} has degree {s} < 2", c + 1));
            }
            if s == 2 {
                degree2 += 1;
            }
        }
        if degree2 > limits.max_degree2_columns {
            out.push(format!(
                "{degree2} degree-2 columns (max {})",
                limits.max_degree2_columns
            ));
        }
        for r in 0..self.rows {
            if self.row_sum(r) < 2 {
                out.push(format!("row {} has degree {} < 2", r + 1, self.row_sum(r)));
            }
        }
        out
    }

    pub fn is_valid(&self, limits: &DesignConstraints) -> bool {
        self.violations(limits).is_empty()
    }

    pub fn validate(&self, limits: &DesignConstraints) -> Result<()> {
        let v = self.violations(limits);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

/// The published 3x16 robust protograph for rate 13/16 and 16-ASK.
///
/// Column blocks of four carry bit levels 2, 3, 4 and 1 respectively.
pub fn robust_base_matrix() -> BaseMatrix {
    let rows: [&[u32]; 3] = [
        &[3, 1, 1, 2, 1, 2, 2, 1, 0, 1, 1, 1, 3, 1, 1, 1],
        &[3, 2, 2, 0, 2, 2, 2, 2, 2, 0, 1, 1, 3, 2, 1, 2],
        &[3, 0, 0, 1, 0, 0, 0, 0, 1, 2, 3, 3, 3, 0, 0, 0],
    ];
    let levels = [2, 3, 4, 1].iter().flat_map(|&l| [l; 4]).collect();
    BaseMatrix::from_rows(&rows, levels).expect("static matrix is well formed")
}

/// Plain-text form: `M N`, then `M` rows of entries, then the `N` column levels.
impl fmt::Display for BaseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        writeln!(f, "{}", levels.join(" "))
    }
}

impl FromStr for BaseMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let parse_line = |line: Option<&str>, what: &str| -> Result<Vec<usize>> {
            line.ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad integer {t:?} in {what}")))
                })
                .collect()
        };
        let dims = parse_line(lines.next(), "dimension line")?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse("dimension line must be `M N`".into()));
        };
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let row = parse_line(lines.next(), &format!("row {}", r + 1))?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {cols}",
                    r + 1,
                    row.len()
                )));
            }
            entries.extend(row.into_iter().map(|v| v as u32));
        }
        let levels = parse_line(lines.next(), "level row")?;
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after level row".into()));
        }
        BaseMatrix::new(rows, cols, entries, levels).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_matrix_properties() {
        let a = robust_base_matrix();
        assert_eq!((a.rows(), a.cols()), (3, 16));
        assert!(
            a.is_valid(&DesignConstraints::default()),
            "{:?}",
            a.violations(&DesignConstraints::default())
        );
        assert_eq!(a.col_sum(0), 9);
        assert_eq!(a.col_sum(8), 3);
        assert_eq!(a.design_rate(), 13.0 / 16.0);
        assert_eq!(a.edge_count(), 65);
        assert_eq!(&a.levels()[..5], &[2, 2, 2, 2, 3]);
        assert_eq!(&a.levels()[12..], &[1, 1, 1, 1]);
    }

    #[test]
    fn level_mapping() {
        assert_eq!(level_map(1, 4), 1);
        assert_eq!(level_map(16, 4), 4);
        assert_eq!(level_map(5, 4), 2);
        assert_eq!(default_levels(2, 3), vec![1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn text_roundtrip() {
        let a = robust_base_matrix();
        let text = a.to_string();
        assert!(text.starts_with("3 16\n3 1 1 2"));
        assert_eq!(text.parse::<BaseMatrix>().unwrap(), a);
    }

    #[test]
    fn text_errors() {
        assert!("2 2\n1 1\n".parse::<BaseMatrix>().is_err());
        assert!("1 2\n1 1 1\n1 1\n".parse::<BaseMatrix>().is_err());
        assert!("1 2\n1 1\n1 x\n".parse::<BaseMatrix>().is_err());
        assert!("1 2\n1 1\n0 1\n".parse::<BaseMatrix>().is_err());
    }

    #[test]
    fn constraint_violations() {
        let limits = DesignConstraints::default();
        let a = BaseMatrix::from_rows(&[&[4, 1, 1], &[0, 1, 1]], vec![1, 1, 1]).unwrap();
        let v = a.violations(&limits);
        assert!(v.iter().any(|s| s.contains("parallel")));
        assert!(v.iter().any(|s| s.contains("degree-2")));
        let b = BaseMatrix::from_rows(&[&[1, 3], &[0, 3], &[0, 3], &[0, 1]], vec![1, 1]).unwrap();
        let v = b.violations(&limits);
        assert!(v.iter().any(|s| s.contains("degree 10")));
        assert!(v.iter().any(|s| s.contains("degree 1 < 2")));
    }
}
