//! Sparse linear algebra over GF(2).
//!
//! [`BitVector`] and [`SparseBitMatrix`] have set-of-indices semantics. Vectors
//! are stored bit-packed because the simulation hot loops XOR them constantly;
//! matrices keep sorted per-row supports and a mirrored column index.
//!
//! Tensor products use row-major index ordering: in `kron(A, B)` the index of
//! `A` varies slowest, so entry `((i1, i2), (j1, j2))` sits at row
//! `i1 * B.rows + i2` and column `j1 * B.cols + j2`.

mod echelon;
mod io;

pub use echelon::{EchelonBasis, Reduction};
pub use io::{AlistError, MatrixJson};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("duplicate entry at row {row}, column {col}")]
    DuplicateEntry { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, Gf2Error>;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

/// A vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_tail();
        v
    }

    pub fn from_support<I: IntoIterator<Item = usize>>(len: usize, support: I) -> Result<Self> {
        let mut v = Self::zeros(len);
        for i in support {
            if i >= len {
                return Err(Gf2Error::IndexOutOfRange { index: i, len });
            }
            v.words[i / 64] |= 1 << (i % 64);
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }


    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Indices of the nonzero coordinates, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn support(&self) -> Vec<usize> {
        self.iter_ones().collect()
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Parity of the overlap of the two supports.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    /// Concatenation `(self ; other)`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        BitVector::from_support(
            self.len + other.len,
            self.iter_ones().chain(other.iter_ones().map(|i| i + self.len)),
        )
        .expect("indices in range by construction")
    }

    /// Sub-vector `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len);
        BitVector::from_support(
            len,
            self.iter_ones()
                .filter(|&i| i >= start && i < start + len)
                .map(|i| i - start),
        )
        .expect("indices in range by construction")
    }

    /// Lexicographic comparison of sorted supports.
    pub fn cmp_support(&self, other: &BitVector) -> std::cmp::Ordering {
        self.iter_ones().cmp(other.iter_ones())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({}; {:?})", self.len, self.support())
    }
}

#[derive(Serialize, Deserialize)]
struct BitVectorRepr {
    length: usize,
    support: Vec<usize>,
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BitVectorRepr {
            length: self.len,
            support: self.support(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = BitVectorRepr::deserialize(d)?;
        let mut sorted = r.support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(serde::de::Error::custom("duplicate index in support"));
        }
        BitVector::from_support(r.length, r.support).map_err(serde::de::Error::custom)
    }
}

/// An immutable sparse matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct SparseBitMatrix {
    rows: usize,
    cols: usize,
    row_supports: Vec<Vec<usize>>,
    col_supports: Vec<Vec<usize>>,
}

impl fmt::Debug for SparseBitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SparseBitMatrix({}x{}, nnz={})",
            self.rows,
            self.cols,
            self.nnz()
        )
    }
}

impl SparseBitMatrix {
    /// Builds a matrix from per-row column supports. Rows are sorted; duplicate
    /// or out-of-range entries are rejected.
    pub fn from_row_supports(rows: usize, cols: usize, mut supports: Vec<Vec<usize>>) -> Result<Self> {
        if supports.len() != rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "row support count",
                expected: rows,
                found: supports.len(),
            });
        }
        for (r, row) in supports.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(Gf2Error::DuplicateEntry { row: r, col: w[0] });
                }
            }
            if let Some(&c) = row.last() {
                if c >= cols {
                    return Err(Gf2Error::IndexOutOfRange { index: c, len: cols });
                }
            }
        }
        Ok(Self::from_sorted_unchecked(rows, cols, supports))
    }

    /// Builds from rows where repeated entries cancel in pairs (sum over GF(2)).
    pub fn from_row_sums(rows: usize, cols: usize, supports: Vec<Vec<usize>>) -> Result<Self> {
        let reduced = supports
            .into_iter()
            .map(|mut row| {
                row.sort_unstable();
                let mut out: Vec<usize> = Vec::with_capacity(row.len());
                for c in row {
                    if out.last() == Some(&c) {
                        out.pop();
                    } else {
                        out.push(c);
                    }
                }
                out
            })
            .collect();
        Self::from_row_supports(rows, cols, reduced)
    }

    fn from_sorted_unchecked(rows: usize, cols: usize, row_supports: Vec<Vec<usize>>) -> Self {
        let mut col_supports = vec![Vec::new(); cols];
        for (r, row) in row_supports.iter().enumerate() {
            for &c in row {
                col_supports[c].push(r);
            }
        }
        Self {
            rows,
            cols,
            row_supports,
            col_supports,
        }
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut supports = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    context: "dense row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            supports.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b & 1 == 1)
                    .map(|(c, _)| c)
                    .collect(),
            );
        }
        Self::from_row_supports(rows.len(), cols, supports)
    }

    /// Parses rows written as strings of `0`/`1` characters.
    pub fn from_bit_strings(rows: &[&str]) -> Result<Self> {
        let dense: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| r.bytes().filter(|b| *b == b'0' || *b == b'1').map(|b| b - b'0').collect())
            .collect();
        Self::from_dense(&dense)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sorted_unchecked(rows, cols, vec![Vec::new(); rows])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted_unchecked(n, n, (0..n).map(|i| vec![i]).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.row_supports.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_supports[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_supports[c]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.row_supports
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_supports[r].binary_search(&c).is_ok()
    }

    pub fn row_vector(&self, r: usize) -> BitVector {
        BitVector::from_support(self.cols, self.row_supports[r].iter().copied()).unwrap()
    }

    pub fn col_vector(&self, c: usize) -> BitVector {
        BitVector::from_support(self.rows, self.col_supports[c].iter().copied()).unwrap()
    }

    pub fn max_row_weight(&self) -> usize {
        self.row_supports.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_col_weight(&self) -> usize {
        self.col_supports.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.row_supports.iter().all(Vec::is_empty)
    }

    /// `M v`: bit `i` is the parity of the overlap of row `i` with `v`.
    pub fn mat_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                context: "mat_vec",
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = BitVector::zeros(self.rows);
        self.mat_vec_into(v, &mut out);
        Ok(out)
    }

    /// `M v` written into `out`; lengths are asserted rather than reported.
    pub fn mat_vec_into(&self, v: &BitVector, out: &mut BitVector) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        out.clear();
        if v.weight() * 4 < self.rows {
            // sparse input: accumulate columns
            for c in v.iter_ones() {
                for &r in &self.col_supports[c] {
                    out.flip(r);
                }
            }
        } else {
            for (r, row) in self.row_supports.iter().enumerate() {
                let parity = row.iter().fold(false, |acc, &c| acc ^ v.get(c));
                if parity {
                    out.flip(r);
                }
            }
        }
    }

    pub fn transpose(&self) -> SparseBitMatrix {
        Self::from_sorted_unchecked(self.cols, self.rows, self.col_supports.clone())
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut acc = BitVector::zeros(other.cols);
        let supports = self
            .row_supports
            .iter()
            .map(|row| {
                acc.clear();
                for &k in row {
                    for &c in &other.row_supports[k] {
                        acc.flip(c);
                    }
                }
                acc.support()
            })
            .collect();
        Ok(Self::from_sorted_unchecked(self.rows, other.cols, supports))
    }

    /// Kronecker product, left factor slowest-varying.
    pub fn kron(&self, other: &SparseBitMatrix) -> SparseBitMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut supports = Vec::with_capacity(rows);
        for a_row in &self.row_supports {
            for b_row in &other.row_supports {
                let mut row = Vec::with_capacity(a_row.len() * b_row.len());
                for &ja in a_row {
                    for &jb in b_row {
                        row.push(ja * other.cols + jb);
                    }
                }
                supports.push(row);
            }
        }
        Self::from_sorted_unchecked(rows, cols, supports)
    }

    /// Vertical concatenation.
    pub fn stack_rows(blocks: &[&SparseBitMatrix]) -> Result<SparseBitMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut supports = Vec::new();
        for b in blocks {
            if b.cols != cols {
                return Err(Gf2Error::DimensionMismatch {
                    context: "stack_rows",
                    expected: cols,
                    found: b.cols,
                });
            }
            supports.extend(b.row_supports.iter().cloned());
        }
        Ok(Self::from_sorted_unchecked(supports.len(), cols, supports))
    }

    /// Horizontal concatenation.
    pub fn stack_cols(blocks: &[&SparseBitMatrix]) -> Result<SparseBitMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut supports = vec![Vec::new(); rows];
        let mut offset = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Gf2Error::DimensionMismatch {
                    context: "stack_cols",
                    expected: rows,
                    found: b.rows,
                });
            }
            for (r, row) in b.row_supports.iter().enumerate() {
                supports[r].extend(row.iter().map(|c| c + offset));
            }
            offset += b.cols;
        }
        Ok(Self::from_sorted_unchecked(rows, offset, supports))
    }

    /// Block matrix from a grid of optional blocks; `None` is a zero block.
    ///
    /// Every block row needs at least one concrete block to fix its height and
    /// every block column one to fix its width.
    pub fn block(grid: &[Vec<Option<&SparseBitMatrix>>]) -> Result<SparseBitMatrix> {
        let nbr = grid.len();
        let nbc = grid.first().map_or(0, Vec::len);
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (i, brow) in grid.iter().enumerate() {
            if brow.len() != nbc {
                return Err(Gf2Error::DimensionMismatch {
                    context: "block grid width",
                    expected: nbc,
                    found: brow.len(),
                });
            }
            for (j, b) in brow.iter().enumerate() {
                if let Some(m) = b {
                    for (slot, val, ctx) in [
                        (&mut heights[i], m.rows, "block height"),
                        (&mut widths[j], m.cols, "block width"),
                    ] {
                        match slot {
                            Some(h) if *h != val => {
                                return Err(Gf2Error::DimensionMismatch {
                                    context: ctx,
                                    expected: *h,
                                    found: val,
                                })
                            }
                            _ => *slot = Some(val),
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights.into_iter().map(|h| h.unwrap_or(0)).collect();
        let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();
        let col_offsets: Vec<usize> = widths
            .iter()
            .scan(0, |acc, w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        let total_cols = widths.iter().sum();
        let mut supports = Vec::with_capacity(heights.iter().sum());
        for (i, brow) in grid.iter().enumerate() {
            for r in 0..heights[i] {
                let mut row = Vec::new();
                for (j, b) in brow.iter().enumerate() {
                    if let Some(m) = b {
                        row.extend(m.row_supports[r].iter().map(|c| c + col_offsets[j]));
                    }
                }
                supports.push(row);
            }
        }
        Ok(Self::from_sorted_unchecked(supports.len(), total_cols, supports))
    }

    /// Bit-packed dense copy of the rows.
    pub fn to_dense_rows(&self) -> Vec<BitVector> {
        (0..self.rows).map(|r| self.row_vector(r)).collect()
    }

    /// Matrix whose rows are the given vectors.
    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Result<Self> {
        let mut supports = Vec::with_capacity(rows.len());
        for v in rows {
            if v.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    context: "from_rows",
                    expected: cols,
                    found: v.len(),
                });
            }
            supports.push(v.support());
        }
        Ok(Self::from_sorted_unchecked(rows.len(), cols, supports))
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(rows: usize, cols: &[BitVector]) -> Result<Self> {
        Ok(Self::from_rows(rows, cols)?.transpose())
    }

    pub fn rank(&self) -> usize {
        rref(self).pivots.len()
    }

    /// Basis of the null space `{v : M v = 0}`, one vector per free column
    /// of the reduced row echelon form, in increasing free-column order.
    pub fn kernel_basis(&self) -> Vec<BitVector> {
        let r = rref(self);
        let mut is_pivot = vec![false; self.cols];
        for &p in &r.pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVector::zeros(self.cols);
                v.set(free, true);
                for (i, &p) in r.pivots.iter().enumerate() {
                    if r.rows[i].get(free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// Some `x` with `M x = b`, or `None` when `b` is outside the column space.
    /// Free variables are set to zero.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>> {
        if b.len() != self.rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "solve",
                expected: self.rows,
                found: b.len(),
            });
        }
        // eliminate [M | b]
        let aug_rows: Vec<BitVector> = (0..self.rows)
            .map(|r| {
                let mut v = BitVector::zeros(self.cols + 1);
                for &c in &self.row_supports[r] {
                    v.set(c, true);
                }
                if b.get(r) {
                    v.set(self.cols, true);
                }
                v
            })
            .collect();
        let r = rref_rows(aug_rows, self.cols + 1);
        if r.pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for (i, &p) in r.pivots.iter().enumerate() {
            if r.rows[i].get(self.cols) {
                x.set(p, true);
            }
        }
        Ok(Some(x))
    }

    pub fn in_image(&self, b: &BitVector) -> Result<bool> {
        Ok(self.solve(b)?.is_some())
    }
}

impl Serialize for SparseBitMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseBitMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        SparseBitMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

struct Rref {
    rows: Vec<BitVector>,
    pivots: Vec<usize>,
}

fn rref(m: &SparseBitMatrix) -> Rref {
    rref_rows(m.to_dense_rows(), m.cols)
}

/// Gauss-Jordan elimination on packed rows. Returns the nonzero rows of the
/// reduced form, each paired with its pivot column (ascending).
fn rref_rows(mut rows: Vec<BitVector>, cols: usize) -> Rref {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let (wi, bit) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (r..rows.len()).find(|&i| rows[i].words[wi] & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        let (head, tail) = rows.split_at_mut(r);
        let (pivot, tail) = tail.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(tail.iter_mut()) {
            if row.words[wi] & bit != 0 {
                for (a, b) in row.words[wi..].iter_mut().zip(&pivot.words[wi..]) {
                    *a ^= b;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Rref { rows, pivots }
}
