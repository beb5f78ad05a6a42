//! Compressed sparse row matrix built from triplets.

use crate::Scalar;

/// Sparse matrix in CSR layout. Construction sorts triplets by `(row, col)`
/// and sums duplicates, so the stored values do not depend on insertion
/// order.
#[derive(Debug, Clone)]
pub struct CsrMat<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMat<T> {
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, T)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<T> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] = cols.len();
                last = Some((r, c));
            }
        }
        // rows with no entries inherit the running offset
        for r in 1..=nrows {
            if row_ptr[r] < row_ptr[r - 1] {
                row_ptr[r] = row_ptr[r - 1];
            }
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or(T::zero(), |(_, v)| v)
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.cols[k]] += self.vals[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    /// `self + alpha * other`, shapes must agree.
    pub fn add_scaled(&self, other: &Self, alpha: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<(usize, usize, T)> = self.iter().collect();
        t.extend(other.iter().map(|(r, c, v)| (r, c, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= alpha;
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.vals.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn to_dense(&self) -> super::DenseMat<T> {
        let mut d = super::DenseMat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            *d.at_mut(r, c) += v;
        }
        d
    }

    /// Max |A - Aᵀ| entry, for symmetry checks.
    pub fn asymmetry(&self) -> T {
        let t = self.transpose();
        let mut worst = T::zero();
        for (r, c, v) in self.iter() {
            worst = worst.max((v - t.get(r, c)).abs());
        }
        for (r, c, v) in t.iter() {
            worst = worst.max((v - self.get(r, c)).abs());
        }
        worst
    }
}

/// Symmetric 2x2 block matrix `[[a, b], [bᵀ, d]]`.
pub fn block_sym2x2<T: Scalar>(a: &CsrMat<T>, b: &CsrMat<T>, d: &CsrMat<T>) -> CsrMat<T> {
    assert_eq!(a.nrows(), a.ncols());
    assert_eq!(d.nrows(), d.ncols());
    assert_eq!(b.nrows(), a.nrows());
    assert_eq!(b.ncols(), d.nrows());
    let na = a.nrows();
    let n = na + d.nrows();
    let mut t = Vec::with_capacity(a.nnz() + 2 * b.nnz() + d.nnz());
    t.extend(a.iter());
    for (r, c, v) in b.iter() {
        t.push((r, na + c, v));
        t.push((na + c, r, v));
    }
    t.extend(d.iter().map(|(r, c, v)| (na + r, na + c, v)));
    CsrMat::from_triplets(n, n, t)
}

/// Stack two matrices with equal column counts on top of each other.
pub fn vstack<T: Scalar>(top: &CsrMat<T>, bottom: &CsrMat<T>) -> CsrMat<T> {
    assert_eq!(top.ncols(), bottom.ncols());
    let nt = top.nrows();
    let mut t: Vec<(usize, usize, T)> = top.iter().collect();
    t.extend(bottom.iter().map(|(r, c, v)| (nt + r, c, v)));
    CsrMat::from_triplets(nt + bottom.nrows(), top.ncols(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_in_canonical_order() {
        let a = CsrMat::from_triplets(
            2,
            2,
            vec![(1, 0, 3.0), (0, 0, 1.0), (1, 0, -1.0), (0, 1, 2.0)],
        );
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn matvec_and_transpose() {
        let a = CsrMat::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -2.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0]), vec![1.0, -1.0, 2.0]);
        let at = a.transpose();
        assert_eq!(at.get(2, 0), 2.0);
        assert_eq!(at.nnz(), 3);
    }

    #[test]
    fn blocks() {
        let a = CsrMat::from_triplets(1, 1, vec![(0, 0, 2.0)]);
        let b = CsrMat::from_triplets(1, 2, vec![(0, 1, 3.0)]);
        let d = CsrMat::from_triplets(2, 2, vec![(0, 0, 4.0), (1, 1, 5.0)]);
        let m = block_sym2x2(&a, &b, &d);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.asymmetry(), 0.0);
        let v = vstack(&b, &d);
        assert_eq!(v.nrows(), 3);
        assert_eq!(v.get(0, 1), 3.0);
        assert_eq!(v.get(2, 1), 5.0);
    }

    #[test]
    fn empty_rows_have_valid_pointers() {
        let a: CsrMat<f64> = CsrMat::from_triplets(4, 4, vec![(2, 1, 1.0)]);
        assert_eq!(a.mul_vec(&[1.0; 4]), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
