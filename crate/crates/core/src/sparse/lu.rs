//! Up-looking sparse LU without pivoting on a symmetrized pattern.
//!
//! Suitable for matrices whose symmetric part is positive definite. `L` is
//! unit lower triangular and stored by columns, `U` is stored by rows with its
//! diagonal kept separately; both are filled one step at a time by appending.

use super::{nested_dissection, CsrMatrix, Ordering};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    l_idx: Vec<Vec<u32>>,
    l_val: Vec<Vec<T>>,
    u_idx: Vec<Vec<u32>>,
    u_val: Vec<Vec<T>>,
    diag: Vec<T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn factor(a: &CsrMatrix<T>, ordering: Ordering) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "sparse LU of a {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::DimensionMismatch("matrix too large".into()));
        }
        // symmetrized pattern for the ordering
        let at = a.transpose();
        let sym = pattern_union(a, &at);
        let perm = match ordering {
            Ordering::Natural => (0..n).collect(),
            Ordering::NestedDissection(coords) => {
                if coords.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} coordinates for {} unknowns",
                        coords.len(),
                        n
                    )));
                }
                nested_dissection(&sym.0, &sym.1, &coords)
            }
        };
        let c = a.submatrix(&perm, &perm);
        let ct = c.transpose();
        let parent = etree(&c, &ct);

        let scale = a.max_abs();
        let tiny = scale * T::tol(64.0);
        let mut l_idx: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut l_val: Vec<Vec<T>> = vec![Vec::new(); n];
        let mut u_idx: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut u_val: Vec<Vec<T>> = vec![Vec::new(); n];
        let mut diag = vec![T::zero(); n];
        let mut x = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut mark = vec![NONE; n];
        let mut reach: Vec<usize> = Vec::new();

        for k in 0..n {
            reach.clear();
            let mut akk = T::zero();
            for (j, v) in c.row(k) {
                if j < k {
                    x[j] = v;
                } else if j == k {
                    akk = v;
                }
            }
            for (j, v) in ct.row(k) {
                if j < k {
                    y[j] = v;
                }
            }
            for &j0 in c.indices()[c.indptr()[k]..c.indptr()[k + 1]]
                .iter()
                .chain(&ct.indices()[ct.indptr()[k]..ct.indptr()[k + 1]])
            {
                let mut j = j0;
                while j < k && mark[j] != k {
                    mark[j] = k;
                    reach.push(j);
                    j = parent[j];
                }
            }
            reach.sort_unstable();
            let mut d = akk;
            for &j in &reach {
                // row k of L: solve x^T U = a_row^T
                let lj = x[j] / diag[j];
                x[j] = lj;
                for (&i, &u) in u_idx[j].iter().zip(&u_val[j]) {
                    x[i as usize] -= u * lj;
                }
                // column k of U: solve L y = a_col
                let uj = y[j];
                for (&i, &l) in l_idx[j].iter().zip(&l_val[j]) {
                    y[i as usize] -= l * uj;
                }
                d -= lj * uj;
            }
            if d.abs() <= tiny || !d.is_finite() {
                return Err(Error::ZeroPivot(perm[k]));
            }
            diag[k] = d;
            for &j in &reach {
                if x[j] != T::zero() {
                    l_idx[j].push(k as u32);
                    l_val[j].push(x[j]);
                }
                if y[j] != T::zero() {
                    u_idx[j].push(k as u32);
                    u_val[j].push(y[j]);
                }
                x[j] = T::zero();
                y[j] = T::zero();
            }
        }
        Ok(Self {
            n,
            perm,
            l_idx,
            l_val,
            u_idx,
            u_val,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U`, including the diagonal.
    pub fn fill(&self) -> usize {
        self.n
            + self.l_idx.iter().map(Vec::len).sum::<usize>()
            + self.u_idx.iter().map(Vec::len).sum::<usize>()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut z: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let zj = z[j];
            if zj != T::zero() {
                for (&i, &l) in self.l_idx[j].iter().zip(&self.l_val[j]) {
                    z[i as usize] -= l * zj;
                }
            }
        }
        for j in (0..n).rev() {
            let mut s = z[j];
            for (&i, &u) in self.u_idx[j].iter().zip(&self.u_val[j]) {
                s -= u * z[i as usize];
            }
            z[j] = s / self.diag[j];
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = z[k];
        }
    }
}

/// Pattern of `A + A^T` as `(indptr, indices)`, ignoring numerical cancellation.
fn pattern_union<T: Scalar>(a: &CsrMatrix<T>, at: &CsrMatrix<T>) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let mut indptr = vec![0];
    let mut indices = Vec::with_capacity(2 * a.nnz());
    for i in 0..n {
        let start = indices.len();
        indices.extend(a.row(i).map(|(j, _)| j));
        indices.extend(at.row(i).map(|(j, _)| j));
        indices[start..].sort_unstable();
        let mut w = start;
        for r in start..indices.len() {
            if r == start || indices[r] != indices[w - 1] {
                indices[w] = indices[r];
                w += 1;
            }
        }
        indices.truncate(w);
        indptr.push(indices.len());
    }
    (indptr, indices)
}

/// Elimination tree of the symmetrized pattern of `c`.
fn etree<T: Scalar>(c: &CsrMatrix<T>, ct: &CsrMatrix<T>) -> Vec<usize> {
    let n = c.nrows();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        let cols = c.indices()[c.indptr()[k]..c.indptr()[k + 1]].iter();
        let rows = ct.indices()[ct.indptr()[k]..ct.indptr()[k + 1]].iter();
        for &j in cols.chain(rows) {
            let mut i = j;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }
    parent
}
