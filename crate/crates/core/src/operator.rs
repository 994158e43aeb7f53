//! Real linear operators consumed by GAMP.
//!
//! GAMP only needs four products: `A·x`, `Aᵀ·s`, `(A∘A)·v` and `(A∘A)ᵀ·v`.
//! [`RealMatrix`] is the dense form. [`BlockDiagonal`] exploits the structure
//! of the stacked quantize-and-forward system, whose rows for RRH `r` only
//! touch the channel coordinates of that RRH. All reductions run in a fixed
//! order, so results are bit-reproducible.

use crate::error::{Error, Result};

pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// out = A·x
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// out = Aᵀ·s
    fn apply_t(&self, s: &[f64], out: &mut [f64]);
    /// out = (A∘A)·v
    fn apply_sq(&self, v: &[f64], out: &mut [f64]);
    /// out = (A∘A)ᵀ·v
    fn apply_sq_t(&self, v: &[f64], out: &mut [f64]);
}

/// Dense row-major real matrix with its elementwise square cached.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    squared: Vec<f64>,
}

impl RealMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("RealMatrix::from_row_major", rows * cols, data.len()));
        }
        let squared = data.iter().map(|a| a * a).collect();
        Ok(Self {
            rows,
            cols,
            data,
            squared,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(rows, cols, data).expect("length matches by construction")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn mul(data: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(data.chunks_exact(cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn mul_t(data: &[f64], cols: usize, s: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (si, row) in s.iter().zip(data.chunks_exact(cols)) {
            if *si == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * si;
            }
        }
    }
}

impl LinearOperator for RealMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        Self::mul(&self.data, self.cols, x, out)
    }

    fn apply_t(&self, s: &[f64], out: &mut [f64]) {
        Self::mul_t(&self.data, self.cols, s, out)
    }

    fn apply_sq(&self, v: &[f64], out: &mut [f64]) {
        Self::mul(&self.squared, self.cols, v, out)
    }

    fn apply_sq_t(&self, v: &[f64], out: &mut [f64]) {
        Self::mul_t(&self.squared, self.cols, v, out)
    }
}

/// Block-diagonal operator up to a column permutation.
///
/// Block `k` occupies a contiguous band of rows and reads the global columns
/// listed in `columns[k]`. Every global column belongs to exactly one block.
#[derive(Debug, Clone)]
pub struct BlockDiagonal {
    blocks: Vec<RealMatrix>,
    columns: Vec<Vec<usize>>,
    row_offsets: Vec<usize>,
    rows: usize,
    cols: usize,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<RealMatrix>, columns: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.len() != columns.len() {
            return Err(Error::dims("BlockDiagonal blocks", blocks.len(), columns.len()));
        }
        let cols: usize = columns.iter().map(Vec::len).sum();
        let mut seen = vec![false; cols];
        let mut row_offsets = Vec::with_capacity(blocks.len());
        let mut rows = 0;
        for (block, cols_k) in blocks.iter().zip(&columns) {
            if block.cols != cols_k.len() {
                return Err(Error::dims("BlockDiagonal column map", block.cols, cols_k.len()));
            }
            for &c in cols_k {
                if c >= cols || seen[c] {
                    return Err(Error::config(format!(
                        "column {c} is out of range or assigned to two blocks"
                    )));
                }
                seen[c] = true;
            }
            row_offsets.push(rows);
            rows += block.rows;
        }
        Ok(Self {
            blocks,
            columns,
            row_offsets,
            rows,
            cols,
        })
    }

    pub fn blocks(&self) -> &[RealMatrix] {
        &self.blocks
    }

    /// Materialize the full dense matrix.
    pub fn to_dense(&self) -> RealMatrix {
        let mut data = vec![0.0; self.rows * self.cols];
        for ((block, cols_k), &r0) in self.blocks.iter().zip(&self.columns).zip(&self.row_offsets) {
            for i in 0..block.rows {
                for (j, &c) in cols_k.iter().enumerate() {
                    data[(r0 + i) * self.cols + c] = block.get(i, j);
                }
            }
        }
        RealMatrix::from_row_major(self.rows, self.cols, data).expect("sized above")
    }

    fn forward(&self, x: &[f64], out: &mut [f64], sq: bool) {
        let mut local = Vec::new();
        for ((block, cols_k), &r0) in self.blocks.iter().zip(&self.columns).zip(&self.row_offsets) {
            local.clear();
            local.extend(cols_k.iter().map(|&c| x[c]));
            let dst = &mut out[r0..r0 + block.rows];
            if sq {
                block.apply_sq(&local, dst);
            } else {
                block.apply(&local, dst);
            }
        }
    }

    fn backward(&self, s: &[f64], out: &mut [f64], sq: bool) {
        let mut local = Vec::new();
        for ((block, cols_k), &r0) in self.blocks.iter().zip(&self.columns).zip(&self.row_offsets) {
            local.resize(block.cols, 0.0);
            let src = &s[r0..r0 + block.rows];
            if sq {
                block.apply_sq_t(src, &mut local);
            } else {
                block.apply_t(src, &mut local);
            }
            for (&c, v) in cols_k.iter().zip(&local) {
                out[c] = *v;
            }
        }
    }
}

impl LinearOperator for BlockDiagonal {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.forward(x, out, false)
    }

    fn apply_t(&self, s: &[f64], out: &mut [f64]) {
        self.backward(s, out, false)
    }

    fn apply_sq(&self, v: &[f64], out: &mut [f64]) {
        self.forward(v, out, true)
    }

    fn apply_sq_t(&self, v: &[f64], out: &mut [f64]) {
        self.backward(v, out, true)
    }
}
