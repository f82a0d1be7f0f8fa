//! Text formats for parity-check matrices.

use super::{Gf2Error, SparseBitMatrix};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// JSON form `{rows, cols, row_supports}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub row_supports: Vec<Vec<usize>>,
}

impl From<&SparseBitMatrix> for MatrixJson {
    fn from(m: &SparseBitMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_supports: m.row_supports().to_vec(),
        }
    }
}

impl TryFrom<MatrixJson> for SparseBitMatrix {
    type Error = Gf2Error;

    fn try_from(j: MatrixJson) -> Result<Self, Gf2Error> {
        SparseBitMatrix::from_row_supports(j.rows, j.cols, j.row_supports)
    }
}

#[derive(Debug, Error)]
pub enum AlistError {
    #[error("alist line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("alist row and column lists disagree at row {row}, column {col}")]
    Inconsistent { row: usize, col: usize },
    #[error(transparent)]
    Matrix(#[from] Gf2Error),
}

impl SparseBitMatrix {
    /// MacKay alist text. Indices are 1-based and short lists are padded with
    /// zeros to the maximum weight.
    pub fn to_alist(&self) -> String {
        let mut out = String::new();
        let (m, n) = self.shape();
        let col_w: Vec<usize> = (0..n).map(|c| self.col(c).len()).collect();
        let row_w: Vec<usize> = (0..m).map(|r| self.row(r).len()).collect();
        let max_c = self.max_col_weight();
        let max_r = self.max_row_weight();
        let join = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        writeln!(out, "{n} {m}").unwrap();
        writeln!(out, "{max_c} {max_r}").unwrap();
        writeln!(out, "{}", join(&mut col_w.iter().copied())).unwrap();
        writeln!(out, "{}", join(&mut row_w.iter().copied())).unwrap();
        for c in 0..n {
            let mut it = self
                .col(c)
                .iter()
                .map(|r| r + 1)
                .chain(std::iter::repeat(0))
                .take(max_c);
            writeln!(out, "{}", join(&mut it)).unwrap();
        }
        for r in 0..m {
            let mut it = self
                .row(r)
                .iter()
                .map(|c| c + 1)
                .chain(std::iter::repeat(0))
                .take(max_r);
            writeln!(out, "{}", join(&mut it)).unwrap();
        }
        out
    }

    pub fn from_alist(text: &str) -> Result<Self, AlistError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_nums = |what: &str| -> Result<(usize, Vec<usize>), AlistError> {
            let (ln, l) = lines.next().ok_or_else(|| AlistError::Parse {
                line: 0,
                msg: format!("unexpected end of input reading {what}"),
            })?;
            let nums = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|e| AlistError::Parse {
                        line: ln,
                        msg: format!("{what}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((ln, nums))
        };
        let (ln, dims) = next_nums("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(AlistError::Parse { line: ln, msg: "expected `cols rows`".into() });
        };
        next_nums("max weights")?;
        let (ln, col_w) = next_nums("column weights")?;
        if col_w.len() != n {
            return Err(AlistError::Parse { line: ln, msg: format!("expected {n} column weights") });
        }
        let (ln, row_w) = next_nums("row weights")?;
        if row_w.len() != m {
            return Err(AlistError::Parse { line: ln, msg: format!("expected {m} row weights") });
        }
        let mut col_lists = Vec::with_capacity(n);
        for &w in &col_w {
            let (ln, nums) = next_nums("column list")?;
            let idx: Vec<usize> = nums.into_iter().filter(|&x| x != 0).collect();
            if idx.len() != w || idx.iter().any(|&r| r > m) {
                return Err(AlistError::Parse { line: ln, msg: "bad column entry list".into() });
            }
            col_lists.push(idx);
        }
        let mut rows = Vec::with_capacity(m);
        for &w in &row_w {
            let (ln, nums) = next_nums("row list")?;
            let idx: Vec<usize> = nums.into_iter().filter(|&x| x != 0).map(|x| x - 1).collect();
            if idx.len() != w || idx.iter().any(|&c| c >= n) {
                return Err(AlistError::Parse { line: ln, msg: "bad row entry list".into() });
            }
            rows.push(idx);
        }
        let mat = SparseBitMatrix::from_row_supports(m, n, rows)?;
        for (c, list) in col_lists.iter().enumerate() {
            let mut list: Vec<usize> = list.iter().map(|r| r - 1).collect();
            list.sort_unstable();
            if list != mat.col(c) {
                let row = list.first().copied().unwrap_or(0);
                return Err(AlistError::Inconsistent { row, col: c });
            }
        }
        Ok(mat)
    }
}
