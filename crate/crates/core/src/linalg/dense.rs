//! Row-major dense matrix with a Cholesky factorization that reports the
//! offending pivot on failure.

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct DenseMat<T> {
    nrows: usize,
    ncols: usize,
    a: Vec<T>,
}

impl<T: Scalar> DenseMat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            a: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols);
            m.a[i * ncols..(i + 1) * ncols].copy_from_slice(row);
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.a[r * self.ncols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.a[r * self.ncols + c]
    }

    pub fn row_slice(&self, r: usize) -> &[T] {
        &self.a[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| super::dot(self.row_slice(r), x))
            .collect()
    }

    pub fn max_abs_diag(&self) -> T {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.at(i, i).abs())
            .fold(T::zero(), T::max)
    }

    /// In-place lower Cholesky `A = L Lᵀ`.
    ///
    /// A pivot below `pivot_floor` aborts with the offending column, which is
    /// how redundant pressure constraints are identified further up.
    pub fn cholesky_lower(mut self, pivot_floor: T) -> Result<CholFactor<T>, usize> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        for j in 0..n {
            let mut d = self.at(j, j);
            for k in 0..j {
                let l = self.at(j, k);
                d -= l * l;
            }
            if d <= pivot_floor {
                return Err(j);
            }
            let d = d.sqrt();
            *self.at_mut(j, j) = d;
            let inv = T::one() / d;
            for i in j + 1..n {
                let mut s = self.at(i, j);
                let (lo, hi) = self.a.split_at(i * n);
                let row_j = &lo[j * n..j * n + j];
                let row_i = &hi[..j];
                for k in 0..j {
                    s -= row_i[k] * row_j[k];
                }
                *self.at_mut(i, j) = s * inv;
            }
        }
        Ok(CholFactor { l: self })
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct CholFactor<T> {
    l: DenseMat<T>,
}

impl<T: Scalar> CholFactor<T> {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n();
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l.at(i, k) * x[k];
            }
            x[i] = s / self.l.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l.at(k, i) * x[k];
            }
            x[i] = s / self.l.at(i, i);
        }
        x
    }
}
