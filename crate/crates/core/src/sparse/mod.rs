//! Compressed sparse row matrices and a sparse LU factorization.

mod lu;
mod ordering;

pub use lu::SparseLu;
pub use ordering::{nested_dissection, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

/// Triplet accumulator.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sums duplicates in a canonical order, so the result does not depend on
    /// insertion order. Exact zeros are dropped.
    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then(a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        let n = self.entries.len();
        while k < n {
            let (i, j, _) = self.entries[k];
            let mut s = T::zero();
            while k < n && self.entries[k].0 == i && self.entries[k].1 == j {
                s += self.entries[k].2;
                k += 1;
            }
            if s != T::zero() {
                indices.push(j);
                values.push(s);
                indptr[i + 1] += 1;
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, T::one());
        }
        b.build()
    }

    pub fn from_triplets(nrows: usize, ncols: usize, entries: Vec<(usize, usize, T)>) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries,
        }
        .build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]);
        }
    }

    /// `y += alpha A x`
    pub fn matvec_add(&self, alpha: T, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi += alpha * self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.push(j, i, v);
            }
        }
        b.build()
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `sum_k alpha_k A_k` over matrices of equal shape.
    pub fn linear_combination(terms: &[(T, &CsrMatrix<T>)]) -> Result<Self> {
        let (nr, nc) = match terms.first() {
            Some((_, m)) => (m.nrows, m.ncols),
            None => return Err(Error::DimensionMismatch("empty linear combination".into())),
        };
        let mut b = TripletBuilder::new(nr, nc);
        for (a, m) in terms {
            if m.nrows != nr || m.ncols != nc {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} vs {}x{}",
                    m.nrows, m.ncols, nr, nc
                )));
            }
            for i in 0..m.nrows {
                for (j, v) in m.row(i) {
                    b.push(i, j, *a * v);
                }
            }
        }
        Ok(b.build())
    }

    /// Assembles a block matrix. `blocks` holds `(block_row, block_col, scale, matrix)`.
    pub fn from_blocks(
        row_sizes: &[usize],
        col_sizes: &[usize],
        blocks: &[(usize, usize, T, &CsrMatrix<T>)],
    ) -> Result<Self> {
        let offsets = |s: &[usize]| {
            let mut o = vec![0];
            for &x in s {
                o.push(o.last().unwrap() + x);
            }
            o
        };
        let ro = offsets(row_sizes);
        let co = offsets(col_sizes);
        let mut b = TripletBuilder::new(*ro.last().unwrap(), *co.last().unwrap());
        for &(bi, bj, a, m) in blocks {
            if bi >= row_sizes.len()
                || bj >= col_sizes.len()
                || m.nrows != row_sizes[bi]
                || m.ncols != col_sizes[bj]
            {
                return Err(Error::DimensionMismatch(format!(
                    "block ({bi},{bj}) is {}x{}, expected {:?}x{:?}",
                    m.nrows,
                    m.ncols,
                    row_sizes.get(bi),
                    col_sizes.get(bj)
                )));
            }
            for i in 0..m.nrows {
                for (j, v) in m.row(i) {
                    b.push(ro[bi] + i, co[bj] + j, a * v);
                }
            }
        }
        Ok(b.build())
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> T {
        let t = self.transpose();
        let mut m = T::zero();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m = m.max((v - t.get(i, j)).abs());
            }
            for (j, v) in t.row(i) {
                m = m.max((v - self.get(i, j)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Restricts to the given rows and columns, renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (k, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_map[j] != usize::MAX {
                    b.push(k, col_map[j], v);
                }
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> crate::dense::DenseMatrix<T> {
        let mut d = crate::dense::DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, 1.0),
                (1, 1, 2.0),
                (0, 0, 0.5),
                (0, 1, 1.0),
                (0, 1, -1.0),
            ],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn blocks_and_transpose() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 1.0), (1, 0, 2.0)]);
        let at = a.transpose();
        let m = CsrMatrix::from_blocks(&[2, 3], &[3, 2], &[(0, 0, 1.0, &a), (1, 1, -1.0, &at)])
            .unwrap();
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(2 + 2, 3), -1.0);
        assert_eq!(m.get(2, 4), -2.0);
        assert!(CsrMatrix::from_blocks(&[2], &[2], &[(0, 0, 1.0, &a)]).is_err());
    }

    proptest! {
        #[test]
        fn build_is_order_independent(entries in proptest::collection::vec((0usize..5, 0usize..5, -10i32..10), 0..40), seed in 0u64..1000) {
            let trip: Vec<(usize, usize, f64)> = entries.iter().map(|&(i, j, v)| (i, j, v as f64 * 0.1)).collect();
            let mut shuffled = trip.clone();
            let n = shuffled.len();
            if n > 1 {
                let mut s = seed;
                for k in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    shuffled.swap(k, (s >> 33) as usize % (k + 1));
                }
            }
            let a = CsrMatrix::from_triplets(5, 5, trip);
            let b = CsrMatrix::from_triplets(5, 5, shuffled);
            prop_assert_eq!(a, b);
        }
    }
}
