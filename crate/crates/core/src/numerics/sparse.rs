//! Compressed sparse rows for stencil operators, and an LU handle for the
//! shifted systems `(I/dt - A + s·G) x = b`.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Row-by-row builder; duplicate columns within a row are summed.
#[derive(Debug)]
pub struct CsrBuilder {
    m: CsrMatrix,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut m = CsrMatrix { n, row_ptr: Vec::with_capacity(n + 1), cols: Vec::with_capacity(nnz_hint), vals: Vec::with_capacity(nnz_hint) };
        m.row_ptr.push(0);
        Self { m, scratch: Vec::new() }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.m.n);
        self.scratch.push((col, val));
    }

    pub fn finish_row(&mut self) {
        self.scratch.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.scratch {
            if last == Some(c) {
                *self.m.vals.last_mut().unwrap() += v;
            } else {
                self.m.cols.push(c);
                self.m.vals.push(v);
                last = Some(c);
            }
        }
        self.scratch.clear();
        self.m.row_ptr.push(self.m.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.m.row_ptr.len(), self.m.n + 1, "every row must be finished");
        self.m
    }
}

impl CsrMatrix {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.row(i).filter(|&(c, _)| c == i).map(|e| e.1).sum()
    }

    /// `out = self·x`.
    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Largest positive off-diagonal entry (zero for a Z-matrix).
    pub fn max_offdiagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                if c != i {
                    m = m.max(v);
                }
            }
        }
        m
    }
}

/// Factorization of `d·I + Σ wₖ·Mₖ`.
pub struct ShiftedLu {
    lu: Lu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for ShiftedLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedLu").field("n", &self.n).finish()
    }
}

impl ShiftedLu {
    pub fn factor(diag: f64, terms: &[(f64, &CsrMatrix)]) -> Result<Self> {
        let n = terms.first().map(|t| t.1.n).ok_or_else(|| Error::Linear("no operator terms".into()))?;
        let nnz: usize = terms.iter().map(|t| t.1.vals.len()).sum();
        let mut triplets = Vec::with_capacity(nnz + n);
        for i in 0..n {
            triplets.push(Triplet::new(i, i, diag));
        }
        for &(w, m) in terms {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                for (c, v) in m.row(i) {
                    triplets.push(Triplet::new(i, c, w * v));
                }
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Linear(format!("assembly: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::Linear(format!("factorization: {e:?}")))?;
        Ok(Self { lu, n })
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        for (i, o) in out.iter_mut().enumerate() {
            *o = x[i];
        }
    }
}
