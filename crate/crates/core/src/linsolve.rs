//! Direct solution of the symmetric indefinite saddle-point systems
//!
//! ```text
//!   [ G   -C ] [x]   [f]
//!   [-Cᵀ   0 ] [p] = [h]
//! ```
//!
//! where `G` (the primal block, displacement and flux) is symmetric positive
//! definite and `C` couples the pressure constraints. `G` gets a banded
//! Cholesky after bandwidth reduction; the pressure Schur complement
//! `S = Cᵀ G⁻¹ C` is factored densely. A vanishing pivot of `S` is exactly a
//! redundant constraint, and its column index names the pressure dof (the
//! element) carrying the spurious mode. One step of iterative refinement
//! keeps the constraint residual at rounding level, which the energy audit
//! depends on.
//!
//! All blocks are time independent for a fixed step size, so a factorization
//! is computed once per run and reused for every solve.

use crate::linalg::{axpy, BandChol, CholFactor, CsrMat, DenseMat};
use crate::{Error, Result, Scalar};

/// Relative pivot threshold: pivots of the pressure Schur complement below
/// `this * max diagonal` are reported as redundant constraints.
pub const SINGULAR_PIVOT_REL: f64 = 1e-12;

/// Saddle-point system description (both blocks are kept by the factor for
/// residual refinement).
#[derive(Debug, Clone)]
pub struct SaddleSystem<T> {
    /// SPD primal block.
    pub g: CsrMat<T>,
    /// Constraint coupling, primal x pressure.
    pub c: CsrMat<T>,
}

impl<T: Scalar> SaddleSystem<T> {
    pub fn new(g: CsrMat<T>, c: CsrMat<T>) -> Self {
        assert_eq!(g.nrows(), g.ncols());
        assert_eq!(c.nrows(), g.nrows());
        Self { g, c }
    }

    pub fn n_primal(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_constraint(&self) -> usize {
        self.c.ncols()
    }

    /// Factors the full system; reusable for any number of right-hand sides.
    pub fn factor(self) -> Result<SaddleFactor<T>> {
        let g_chol = BandChol::factor(&self.g)?;
        let np = self.n_constraint();
        let ct = self.c.transpose();

        // dense pressure Schur complement S = Cᵀ G⁻¹ C, built column by column
        let n = self.n_primal();
        let mut s = DenseMat::zeros(np, np);
        let mut col = vec![T::zero(); n];
        for j in 0..np {
            for v in &mut col {
                *v = T::zero();
            }
            for (r, v) in ct.row(j) {
                col[r] = v;
            }
            let z = g_chol.solve(&col);
            for i in 0..np {
                let mut acc = T::zero();
                for (r, v) in ct.row(i) {
                    acc += v * z[r];
                }
                *s.at_mut(i, j) = acc;
            }
        }
        let floor = T::of(SINGULAR_PIVOT_REL) * s.max_abs_diag();
        let s_chol = s
            .cholesky_lower(floor)
            .map_err(|col| Error::SingularPressurePivot { pressure_dof: col })?;
        Ok(SaddleFactor {
            sys: self,
            g_chol,
            s_chol,
        })
    }
}

/// Reusable factorization of a [`SaddleSystem`].
#[derive(Debug, Clone)]
pub struct SaddleFactor<T> {
    sys: SaddleSystem<T>,
    g_chol: BandChol<T>,
    s_chol: CholFactor<T>,
}

impl<T: Scalar> SaddleFactor<T> {
    pub fn system(&self) -> &SaddleSystem<T> {
        &self.sys
    }

    fn solve_once(&self, f: &[T], h: &[T]) -> (Vec<T>, Vec<T>) {
        let np = self.sys.n_constraint();
        let y = self.g_chol.solve(f);
        if np == 0 {
            return (y, Vec::new());
        }
        let cty = self.sys.c.tr_mul_vec(&y);
        let rhs_p: Vec<T> = (0..np).map(|i| -(h[i] + cty[i])).collect();
        let p = self.s_chol.solve(&rhs_p);
        let mut fx = f.to_vec();
        let cp = self.sys.c.mul_vec(&p);
        axpy(&mut fx, T::one(), &cp);
        let x = self.g_chol.solve(&fx);
        (x, p)
    }

    /// Solves for `(x, p)` with one step of iterative refinement.
    pub fn solve(&self, f: &[T], h: &[T]) -> (Vec<T>, Vec<T>) {
        debug_assert_eq!(f.len(), self.sys.n_primal());
        debug_assert_eq!(h.len(), self.sys.n_constraint());
        let (mut x, mut p) = self.solve_once(f, h);
        let (rf, rh) = self.residual(&x, &p, f, h);
        let (dx, dp) = self.solve_once(&rf, &rh);
        axpy(&mut x, T::one(), &dx);
        if !p.is_empty() {
            axpy(&mut p, T::one(), &dp);
        }
        (x, p)
    }

    /// Residual `(f - (G x - C p), h + Cᵀ x)` of a candidate solution.
    pub fn residual(&self, x: &[T], p: &[T], f: &[T], h: &[T]) -> (Vec<T>, Vec<T>) {
        let gx = self.sys.g.mul_vec(x);
        let mut rf: Vec<T> = f.iter().zip(&gx).map(|(&a, &b)| a - b).collect();
        if !p.is_empty() {
            let cp = self.sys.c.mul_vec(p);
            axpy(&mut rf, T::one(), &cp);
        }
        let ctx = self.sys.c.tr_mul_vec(x);
        let rh: Vec<T> = h.iter().zip(&ctx).map(|(&a, &b)| a + b).collect();
        (rf, rh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble, BcSpec, ElementKind, FluidBc, MassMode, MaterialParams, SkeletonBc,
    };
    use crate::linalg::norm2;
    use crate::mesh::{generate, MeshPattern, MeshSpec, Side};
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_spd() {
        let g = CsrMat::from_triplets(
            2,
            2,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        let c = CsrMat::zeros(2, 0);
        let f = SaddleSystem::new(g, c).factor().unwrap();
        // inverse of [[4,1],[1,3]] is [[3,-1],[-1,4]]/11
        let (x, _) = f.solve(&[1.0, 0.0], &[]);
        assert_relative_eq!(x[0], 3.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], -1.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let g = CsrMat::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let c = CsrMat::from_triplets(3, 1, vec![(0, 0, 1.0), (2, 0, -1.0)]);
        let f = SaddleSystem::new(g, c).factor().unwrap();
        let (x, p) = f.solve(&[0.0; 3], &[0.0]);
        assert!(x.iter().all(|&v| v == 0.0));
        assert!(p.iter().all(|&v| v == 0.0));
    }

    fn random_spd(n: usize, seed: u64) -> CsrMat<f64> {
        // deterministic fill: diagonally dominant symmetric matrix
        let mut state = seed;
        let mut rnd = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mut t = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.3 * rnd();
                t.push((i, j, v));
                t.push((j, i, v));
            }
            t.push((i, i, n as f64));
        }
        CsrMat::from_triplets(n, n, t)
    }

    #[test]
    fn manufactured_solution_50x50() {
        let g = random_spd(50, 7);
        let x_true: Vec<f64> = (0..50).map(|i| ((i * i) as f64 * 0.01).sin()).collect();
        let b = g.mul_vec(&x_true);
        let f = SaddleSystem::new(g, CsrMat::zeros(50, 0)).factor().unwrap();
        let (x, _) = f.solve(&b, &[]);
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10 * norm2(&x_true), "relative error {err:e}");
    }

    fn cantilever_limit_system(pattern: MeshPattern, kind: ElementKind) -> SaddleSystem<f64> {
        // incompressible-elasticity limit of the one-macroelement cantilever:
        // primal block is the skeleton mass, constraints couple through Q
        let n = if pattern == MeshPattern::UnionJack {
            2
        } else {
            1
        };
        let mesh = generate(MeshSpec::new(1.0, 1.0, n, n, pattern)).unwrap();
        let mat = MaterialParams::new(1.0e6, 0.3, 2000.0, 1000.0, 0.4, 1e-2).unwrap();
        let bc = BcSpec::new(vec![
            BcSpec::side(Side::Left, SkeletonBc::FullyFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Right, SkeletonBc::Free, FluidBc::Impermeable),
            BcSpec::side(Side::Bottom, SkeletonBc::Free, FluidBc::Impermeable),
            BcSpec::side(Side::Top, SkeletonBc::Free, FluidBc::Impermeable),
        ]);
        let (sys, _) = assemble(&mesh, kind, &mat, &bc, MassMode::Consistent).unwrap();
        SaddleSystem::new(sys.m, sys.q)
    }

    #[test]
    fn criss_limit_system_factors() {
        let sys = cantilever_limit_system(MeshPattern::Criss, ElementKind::P1Rt0);
        assert!(sys.factor().is_ok());
    }

    #[test]
    fn crisscross_p1_limit_system_is_singular() {
        let sys = cantilever_limit_system(MeshPattern::Crisscross, ElementKind::P1Rt0);
        match sys.factor() {
            Err(Error::SingularPressurePivot { .. }) => {}
            other => panic!(
                "expected a singular pressure pivot, got {:?}",
                other.map(|_| ())
            ),
        }
    }

    #[test]
    fn constraint_rows_are_satisfied() {
        let sys = cantilever_limit_system(MeshPattern::Criss, ElementKind::P2Rt0);
        let n = sys.n_primal();
        let np = sys.n_constraint();
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let h = vec![0.0; np];
        let fac = sys.factor().unwrap();
        let (x, p) = fac.solve(&f, &h);
        let ctx = fac.system().c.tr_mul_vec(&x);
        let scale = fac.system().c.frobenius_norm() * norm2(&x) + norm2(&f);
        assert!(
            norm2(&ctx) <= 1e-12 * scale,
            "constraint residual {:e}",
            norm2(&ctx)
        );
        // full residual small
        let (rf, rh) = fac.residual(&x, &p, &f, &h);
        assert!(norm2(&rf) <= 1e-12 * scale);
        assert!(norm2(&rh) <= 1e-12 * scale);
    }

    #[test]
    fn reciprocity_of_the_symmetric_solve() {
        let sys = cantilever_limit_system(MeshPattern::Criss, ElementKind::P1Rt0);
        let n = sys.n_primal();
        let np = sys.n_constraint();
        let fac = sys.factor().unwrap();
        let unit = |k: usize| {
            let mut f = vec![0.0; n];
            let mut h = vec![0.0; np];
            if k < n {
                f[k] = 1.0;
            } else {
                h[k - n] = 1.0;
            }
            (f, h)
        };
        let (fi, hi) = unit(1);
        let (fj, hj) = unit(n + np - 1);
        let (xi, pi) = fac.solve(&fi, &hi);
        let (xj, pj) = fac.solve(&fj, &hj);
        let full_i: Vec<f64> = xi.into_iter().chain(pi).collect();
        let full_j: Vec<f64> = xj.into_iter().chain(pj).collect();
        assert_relative_eq!(
            full_i[n + np - 1],
            full_j[1],
            max_relative = 1e-12,
            epsilon = 1e-15
        );
    }

    #[test]
    fn refactoring_is_bitwise_reproducible() {
        let sys = cantilever_limit_system(MeshPattern::UnionJack, ElementKind::P2Rt0);
        let n = sys.n_primal();
        let f: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let h = vec![0.0; sys.n_constraint()];
        let fac1 = sys.clone().factor().unwrap();
        let fac2 = sys.factor().unwrap();
        let (x1, p1) = fac1.solve(&f, &h);
        let (x2, p2) = fac2.solve(&f, &h);
        assert_eq!(x1, x2);
        assert_eq!(p1, p2);
    }
}
