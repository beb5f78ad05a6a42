//! Eigenvalues of a dense symmetric matrix: Householder tridiagonalization
//! followed by implicit-shift QL. Eigenvectors are never needed here, which
//! keeps the reduction at ~2/3 n^3 flops.

use super::DenseMat;
use crate::{Error, Result, Scalar};

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues<T: Scalar>(m: &DenseMat<T>) -> Result<Vec<T>> {
    assert_eq!(m.nrows(), m.ncols());
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a: Vec<Vec<T>> = (0..n).map(|r| m.row_slice(r).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut a, &mut d, &mut e);
    ql_implicit(&mut d, &mut e)?;
    d.sort_unstable_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));
    Ok(d)
}

/// Householder reduction to tridiagonal form (no eigenvector accumulation).
fn tridiagonalize<T: Scalar>(a: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = a.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale = a[i][..=l].iter().fold(T::zero(), |s, &x| s + x.abs());
            if scale == T::zero() {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] = a[i][k] / scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut f_acc = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in j + 1..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[i][j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j][k] = a[j][k] - f * e[k] - g * a[i][k];
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
        d[i] = h;
    }
    e[0] = T::zero();
    for i in 0..n {
        d[i] = a[i][i];
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix (diagonal `d`,
/// subdiagonal `e`). Eigenvalues land in `d`.
fn ql_implicit<T: Scalar>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::of(2.0);
    // absolute deflation floor: without it, clusters of (near-)zero
    // eigenvalues never satisfy the relative test
    let scale = d
        .iter()
        .chain(e.iter())
        .fold(T::zero(), |m, &x| m.max(x.abs()));
    let floor = T::epsilon() * scale;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd + floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNoConverge);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let denom = if g >= T::zero() {
                g + r.abs()
            } else {
                g - r.abs()
            };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + two * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = DenseMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = sym_eigenvalues(&a).unwrap();
        assert_relative_eq!(ev[0], 1.0, max_relative = 1e-13);
        assert_relative_eq!(ev[1], 3.0, max_relative = 1e-13);
    }

    #[test]
    fn path_laplacian_spectrum() {
        // 1D Dirichlet Laplacian: lambda_k = 2 - 2 cos(k pi / (n+1))
        let n = 24;
        let mut a = DenseMat::zeros(n, n);
        for i in 0..n {
            *a.at_mut(i, i) = 2.0;
            if i + 1 < n {
                *a.at_mut(i, i + 1) = -1.0;
                *a.at_mut(i + 1, i) = -1.0;
            }
        }
        let ev = sym_eigenvalues(&a).unwrap();
        for (k, &lam) in ev.iter().enumerate() {
            let exact =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(lam, exact, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_shortcut() {
        let a = DenseMat::from_rows(&[&[5.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let ev = sym_eigenvalues(&a).unwrap();
        assert_eq!(ev, vec![-1.0, 2.0, 5.0]);
    }
}
