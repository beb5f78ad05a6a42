//! Small dense/sparse kernels shared by assembly, the direct solvers and the
//! stability diagnostics. Everything is deterministic: triplet sums happen in
//! canonical sorted order and no parallelism is used inside a factorization.

mod band;
mod csr;
mod dense;
mod eigen;
mod rcm;

pub use band::BandChol;
pub use csr::{block_sym2x2, vstack, CsrMat};
pub use dense::{CholFactor, DenseMat};
pub use eigen::sym_eigenvalues;
pub use rcm::rcm_order;

use crate::Scalar;

/// Dot product.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy<T: Scalar>(y: &mut [T], alpha: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
