//! Banded Cholesky with reverse Cuthill-McKee reordering. This is the work
//! horse behind every positive definite block in the saddle-point solves.

use super::{rcm_order, CsrMat};
use crate::{Error, Result, Scalar};

/// Cholesky factor of an SPD matrix, stored inside its (permuted) band.
#[derive(Debug, Clone)]
pub struct BandChol<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
    /// new index -> original index
    perm: Vec<usize>,
    /// original index -> new index
    iperm: Vec<usize>,
}

impl<T: Scalar> BandChol<T> {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Factors a sparse SPD matrix. Fails with the original dof index of the
    /// first non-positive pivot.
    pub fn factor(a: &CsrMat<T>) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let perm = rcm_order(a);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut bw = 0usize;
        for (r, c, _) in a.iter() {
            bw = bw.max(iperm[r].abs_diff(iperm[c]));
        }
        bw = bw.min(n.saturating_sub(1));

        let mut f = Self {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
            perm,
            iperm,
        };
        for (r, c, v) in a.iter() {
            let (pr, pc) = (f.iperm[r], f.iperm[c]);
            if pc <= pr {
                // symmetric input: the mirrored entry writes the same value
                let k = f.idx(pr, pc);
                f.data[k] = v;
            }
        }

        let w = f.bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(f.bw);
            for j in lo..=i {
                let mut sum = f.data[i * w + (j + f.bw - i)];
                if j > lo {
                    let ri = &f.data[i * w + (lo + f.bw - i)..i * w + (j + f.bw - i)];
                    let rj = &f.data[j * w + (lo + f.bw - j)..j * w + (j + f.bw - j)];
                    for (x, y) in ri.iter().zip(rj) {
                        sum -= *x * *y;
                    }
                }
                if j < i {
                    f.data[i * w + (j + f.bw - i)] = sum / f.data[j * w + f.bw];
                } else {
                    if sum <= T::zero() {
                        return Err(Error::NotPositiveDefinite { dof: f.perm[i] });
                    }
                    f.data[i * w + f.bw] = sum.sqrt();
                }
            }
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Solves `A x = b` in the original dof numbering.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        debug_assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        // forward: L y = b
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = y[i];
            let row = &self.data[i * w + (lo + self.bw - i)..i * w + self.bw];
            for (l, yk) in row.iter().zip(&y[lo..i]) {
                s -= *l * *yk;
            }
            y[i] = s / self.data[i * w + self.bw];
        }
        // backward: Lᵀ x = y
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.data[k * w + (i + self.bw - k)] * y[k];
            }
            y[i] = s / self.data[i * w + self.bw];
        }
        let mut x = vec![T::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
