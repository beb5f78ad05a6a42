//! Constant-average Newmark integration of the semi-discrete system.
//!
//! The mass conservation row makes the system a Hessenberg index-2 DAE: the
//! pressure is the algebraic variable and does not appear in the constraint.
//! Two consequences drive this module:
//!
//! - initial accelerations and pressure must be solved from the full system
//!   plus the time-differentiated constraint (anything else injects spurious
//!   pressure oscillations),
//! - with the constraint satisfied at every step, the pressure does no work,
//!   so a discrete energy balance holds exactly and doubles as an accuracy
//!   audit for the integrator.
//!
//! One step solves the symmetric system
//!
//! ```text
//!   [ Mb   M_f  -Qb ] [u']     [Pb]          Mb = M + dt^2/4 K
//!   [ M_fᵀ Ab   -Bb ] [q ]   = [Fb]          Ab = (1 + n g dt / (2 K_h)) A
//!   [-Qbᵀ  -Bbᵀ  0  ] [p ]n+1  [0 ]          Qb = dt/2 Q,  Bb = dt/2 B
//! ```
//!
//! and recovers displacement and accelerations from the trapezoidal update
//! formulas, never by re-solving momentum.

use crate::assembly::{LoadSet, MaterialParams, SystemMatrices};
use crate::linalg::{axpy, block_sym2x2, dot, norm2, vstack, CsrMat};
use crate::linsolve::{SaddleFactor, SaddleSystem};
use crate::mesh::Mesh;
use crate::{Error, Result, Scalar};

/// Discrete fields at one time level.
#[derive(Debug, Clone)]
pub struct State<T> {
    pub t: T,
    /// Skeleton displacement dofs (m).
    pub u: Vec<T>,
    /// Skeleton velocity dofs (m/s).
    pub v: Vec<T>,
    /// Skeleton acceleration dofs (m/s^2).
    pub a: Vec<T>,
    /// Edge-normal Darcy flux dofs (m/s).
    pub q: Vec<T>,
    /// Flux rate dofs (m/s^2).
    pub q_dot: Vec<T>,
    /// Elemental pressures (Pa).
    pub p: Vec<T>,
}

impl<T: Scalar> State<T> {
    pub fn zeros(n_disp: usize, n_vel: usize, n_pres: usize) -> Self {
        Self {
            t: T::zero(),
            u: vec![T::zero(); n_disp],
            v: vec![T::zero(); n_disp],
            a: vec![T::zero(); n_disp],
            q: vec![T::zero(); n_vel],
            q_dot: vec![T::zero(); n_vel],
            p: vec![T::zero(); n_pres],
        }
    }
}

/// Running energy bookkeeping (all Joules). Kinetic and strain terms are
/// state functions; damping, input and constraint work accumulate.
#[derive(Debug, Clone)]
pub struct EnergyLedger<T> {
    pub kinetic_skeleton: T,
    pub kinetic_fluid: T,
    pub strain: T,
    pub damping: T,
    pub input: T,
    pub constraint: T,
    /// Relative balance error of the last accepted step.
    pub balance_error: T,
    pub max_balance_error: T,
}

impl<T: Scalar> EnergyLedger<T> {
    pub fn new() -> Self {
        let z = T::zero();
        Self {
            kinetic_skeleton: z,
            kinetic_fluid: z,
            strain: z,
            damping: z,
            input: z,
            constraint: z,
            balance_error: z,
            max_balance_error: z,
        }
    }

    /// `E_Ks + E_Kf + E_S + E_D` (everything except the input work).
    pub fn lhs_total(&self) -> T {
        self.kinetic_skeleton + self.kinetic_fluid + self.strain + self.damping
    }
}

impl<T: Scalar> Default for EnergyLedger<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Slow dilatational wave speed estimate
/// `C0 = sqrt((lambda + 2G) / (rho - rho_f (2 - 1/n)))`.
///
/// The effective density under the radical equals
/// `rho_f (1-n)^2 / n + (1-n) rho_s`, positive for any physical parameter
/// set; the error path guards direct struct construction with nonphysical
/// values.
pub fn wave_speed<T: Scalar>(mat: &MaterialParams<T>) -> Result<T> {
    let n = mat.porosity;
    let eff = mat.mixture_density() - mat.fluid_density * (T::of(2.0) - T::one() / n);
    if eff <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "effective density {eff} under the wave-speed radical is not positive"
        )));
    }
    Ok((mat.constrained_modulus() / eff).sqrt())
}

/// CFL bound `dt <= dx_min / C0` with `dx_min` the shortest edge.
pub fn cfl_timestep<T: Scalar>(mesh: &Mesh<T>, mat: &MaterialParams<T>) -> Result<T> {
    Ok(mesh.shortest_edge() / wave_speed(mat)?)
}

/// Long-term consolidation settlement of a one-dimensional column under a
/// total applied stress `f`: `f L / (lambda + 2G)`.
pub fn terzaghi_settlement<T: Scalar>(mat: &MaterialParams<T>, f: T, length: T) -> T {
    f * length / mat.constrained_modulus()
}

/// Initial accelerations, flux rate and pressure for a medium starting from
/// rest under loads `(P0, F0)`: solves
///
/// ```text
///   M a0 + M_f qd0 - Q p0 = P0
///   M_fᵀ a0 + A qd0 - B p0 = F0
///   Qᵀ a0 + Bᵀ qd0         = 0
/// ```
pub fn consistent_initial_conditions<T: Scalar>(
    sys: &SystemMatrices<T>,
    p_load: &[T],
    f_load: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let g = block_sym2x2(&sys.m, &sys.m_f, &sys.a);
    let c = vstack(&sys.q, &sys.b);
    let factor = SaddleSystem::new(g, c).factor()?;
    let mut rhs: Vec<T> = p_load.to_vec();
    rhs.extend_from_slice(f_load);
    let h = vec![T::zero(); sys.q.ncols()];
    let (x, p) = factor.solve(&rhs, &h);
    let n_disp = sys.m.nrows();
    let (a0, qd0) = x.split_at(n_disp);
    Ok((a0.to_vec(), qd0.to_vec(), p))
}

/// Reusable Newmark stepper. The factorization is computed once; every step
/// is two banded and one dense triangular solve plus refinement.
pub struct Stepper<T> {
    sys: SystemMatrices<T>,
    loads: LoadSet<T>,
    dt: T,
    factor: SaddleFactor<T>,
    q_scale: T,
    b_scale: T,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(sys: SystemMatrices<T>, loads: LoadSet<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} must be positive"
            )));
        }
        let half_dt = dt * T::of(0.5);
        let m_bar = sys.m.add_scaled(&sys.k, dt * dt * T::of(0.25));
        let a_bar = sys.a.scaled(T::one() + sys.material.darcy_drag() * half_dt);
        let g = block_sym2x2(&m_bar, &sys.m_f, &a_bar);
        let c = vstack(&sys.q.scaled(half_dt), &sys.b.scaled(half_dt));
        let factor = SaddleSystem::new(g, c).factor()?;
        let q_scale = sys.q.frobenius_norm();
        let b_scale = sys.b.frobenius_norm();
        Ok(Self {
            sys,
            loads,
            dt,
            factor,
            q_scale,
            b_scale,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn system(&self) -> &SystemMatrices<T> {
        &self.sys
    }

    pub fn loads(&self) -> &LoadSet<T> {
        &self.loads
    }

    /// State at rest with consistent algebraic initialization.
    pub fn consistent_initial_state(&self) -> Result<State<T>> {
        let (p0, f0) = self.loads.eval(T::zero())?;
        let (a0, qd0, pres0) = consistent_initial_conditions(&self.sys, &p0, &f0)?;
        let mut s = State::zeros(self.sys.m.nrows(), self.sys.a.nrows(), self.sys.q.ncols());
        s.a = a0;
        s.q_dot = qd0;
        s.p = pres0;
        Ok(s)
    }

    /// State at rest with the naive pressure-free initialization: `p0 = 0`
    /// and accelerations solved from the momentum rows alone. This violates
    /// the differentiated constraint and is kept for demonstrating the
    /// step-to-step pressure oscillations it produces.
    pub fn naive_initial_state(&self) -> Result<State<T>> {
        let n_disp = self.sys.m.nrows();
        let n_vel = self.sys.a.nrows();
        let g = block_sym2x2(&self.sys.m, &self.sys.m_f, &self.sys.a);
        let factor = SaddleSystem::new(g, CsrMat::zeros(n_disp + n_vel, 0)).factor()?;
        let (p0, f0) = self.loads.eval(T::zero())?;
        let mut rhs = p0;
        rhs.extend_from_slice(&f0);
        let (x, _) = factor.solve(&rhs, &[]);
        let mut s = State::zeros(n_disp, n_vel, self.sys.q.ncols());
        s.a = x[..n_disp].to_vec();
        s.q_dot = x[n_disp..].to_vec();
        Ok(s)
    }

    /// Advances one step of `dt`.
    pub fn step(&self, s: &State<T>) -> Result<State<T>> {
        let dt = self.dt;
        let half_dt = dt * T::of(0.5);
        let two_over_dt = T::of(2.0) / dt;
        let t1 = s.t + dt;

        // predictors
        let mut u_tilde = s.u.clone();
        axpy(&mut u_tilde, half_dt, &s.v);
        let a_tilde: Vec<T> =
            s.a.iter()
                .zip(&s.v)
                .map(|(&a, &v)| -(a + two_over_dt * v))
                .collect();
        let qd_tilde: Vec<T> = s
            .q_dot
            .iter()
            .zip(&s.q)
            .map(|(&qd, &q)| -(qd + two_over_dt * q))
            .collect();

        let (p1_load, f1_load) = self.loads.eval(t1)?;

        // rhs of the condensed system, scaled by dt/2
        let m_at = self.sys.m.mul_vec(&a_tilde);
        let mf_qdt = self.sys.m_f.mul_vec(&qd_tilde);
        let k_ut = self.sys.k.mul_vec(&u_tilde);
        let n_disp = self.sys.m.nrows();
        let n_vel = self.sys.a.nrows();
        let mut rhs = vec![T::zero(); n_disp + n_vel];
        for i in 0..n_disp {
            rhs[i] = half_dt * (p1_load[i] - m_at[i] - mf_qdt[i] - k_ut[i]);
        }
        let mft_at = self.sys.m_f.tr_mul_vec(&a_tilde);
        let a_qdt = self.sys.a.mul_vec(&qd_tilde);
        for i in 0..n_vel {
            rhs[n_disp + i] = half_dt * (f1_load[i] - mft_at[i] - a_qdt[i]);
        }
        let h = vec![T::zero(); self.sys.q.ncols()];
        let (x, p1) = self.factor.solve(&rhs, &h);
        let (v1, q1) = x.split_at(n_disp);

        // trapezoidal recovery
        let mut u1 = u_tilde;
        axpy(&mut u1, half_dt, v1);
        let a1: Vec<T> = a_tilde
            .iter()
            .zip(v1)
            .map(|(&at, &v)| at + two_over_dt * v)
            .collect();
        let qd1: Vec<T> = qd_tilde
            .iter()
            .zip(q1)
            .map(|(&qt, &q)| qt + two_over_dt * q)
            .collect();

        Ok(State {
            t: t1,
            u: u1,
            v: v1.to_vec(),
            a: a1,
            q: q1.to_vec(),
            q_dot: qd1,
            p: p1,
        })
    }

    /// `(residual, scale)` of the mass-conservation row `Qᵀ u' + Bᵀ q = 0`.
    pub fn constraint_residual(&self, s: &State<T>) -> (T, T) {
        let mut r = self.sys.q.tr_mul_vec(&s.v);
        let bq = self.sys.b.tr_mul_vec(&s.q);
        axpy(&mut r, T::one(), &bq);
        let scale =
            self.q_scale * norm2(&s.v) + self.b_scale * norm2(&s.q) + T::min_positive_value();
        (norm2(&r), scale)
    }

    /// Accumulates one step into the ledger and refreshes the state-function
    /// terms. Must be called with the states bracketing the step.
    pub fn energy_update(
        &self,
        ledger: &mut EnergyLedger<T>,
        s0: &State<T>,
        s1: &State<T>,
    ) -> Result<()> {
        let sys = &self.sys;
        let dt = self.dt;
        let quarter = T::of(0.25);
        let half = T::of(0.5);

        let (pl0, fl0) = self.loads.eval(s0.t)?;
        let (pl1, fl1) = self.loads.eval(s1.t)?;

        ledger.kinetic_skeleton = half * dot(&s1.v, &sys.m.mul_vec(&s1.v));
        ledger.kinetic_fluid =
            dot(&s1.v, &sys.m_f.mul_vec(&s1.q)) + half * dot(&s1.q, &sys.a.mul_vec(&s1.q));
        // the exact discrete identity needs the half factor here
        ledger.strain = half * dot(&s1.u, &sys.k.mul_vec(&s1.u));

        let q_sum: Vec<T> = s1.q.iter().zip(&s0.q).map(|(&a, &b)| a + b).collect();
        let coef_d = sys.material.darcy_drag() * dt * quarter;
        ledger.damping += coef_d * dot(&q_sum, &sys.a.mul_vec(&q_sum));

        let v_sum: Vec<T> = s1.v.iter().zip(&s0.v).map(|(&a, &b)| a + b).collect();
        let p_sum: Vec<T> = pl1.iter().zip(&pl0).map(|(&a, &b)| a + b).collect();
        let f_sum: Vec<T> = fl1.iter().zip(&fl0).map(|(&a, &b)| a + b).collect();
        ledger.input += dt * quarter * (dot(&v_sum, &p_sum) + dot(&q_sum, &f_sum));

        // work of the constraint force: zero whenever the constraint rows hold
        let mut row = sys.q.tr_mul_vec(&v_sum);
        let bq = sys.b.tr_mul_vec(&q_sum);
        axpy(&mut row, T::one(), &bq);
        let p_half: Vec<T> =
            s1.p.iter()
                .zip(&s0.p)
                .map(|(&a, &b)| half * (a + b))
                .collect();
        ledger.constraint += -(dt * half) * dot(&row, &p_half);

        let err_abs = (ledger.lhs_total() - ledger.input).abs();
        let denom = ledger.input.abs();
        ledger.balance_error = if denom > T::zero() {
            err_abs / denom
        } else {
            err_abs
        };
        ledger.max_balance_error = ledger.max_balance_error.max(ledger.balance_error);
        Ok(())
    }
}

/// Newmark stepper for the pure elastodynamic subsystem `M u'' + K u = P`
/// (flux and pressure rows removed). The constant-average rule has no
/// algorithmic dissipation: under zero load the discrete mechanical energy
/// is a conserved quantity.
pub struct ElasticStepper<T> {
    pub m: CsrMat<T>,
    pub k: CsrMat<T>,
    dt: T,
    factor: SaddleFactor<T>,
}

impl<T: Scalar> ElasticStepper<T> {
    pub fn new(m: CsrMat<T>, k: CsrMat<T>, dt: T) -> Result<Self> {
        let m_bar = m.add_scaled(&k, dt * dt * T::of(0.25));
        let factor = SaddleSystem::new(m_bar, CsrMat::zeros(m.nrows(), 0)).factor()?;
        Ok(Self { m, k, dt, factor })
    }

    /// One step under the load `p1 = P(t_{n+1})`; returns the new `(u, v, a)`.
    pub fn step(&self, u: &[T], v: &[T], a: &[T], p1: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let dt = self.dt;
        let half_dt = dt * T::of(0.5);
        let two_over_dt = T::of(2.0) / dt;
        let mut u_tilde = u.to_vec();
        axpy(&mut u_tilde, half_dt, v);
        let a_tilde: Vec<T> = a
            .iter()
            .zip(v)
            .map(|(&a, &v)| -(a + two_over_dt * v))
            .collect();
        let m_at = self.m.mul_vec(&a_tilde);
        let k_ut = self.k.mul_vec(&u_tilde);
        let rhs: Vec<T> = (0..u.len())
            .map(|i| half_dt * (p1[i] - m_at[i] - k_ut[i]))
            .collect();
        let (v1, _) = self.factor.solve(&rhs, &[]);
        let mut u1 = u_tilde;
        axpy(&mut u1, half_dt, &v1);
        let a1: Vec<T> = a_tilde
            .iter()
            .zip(&v1)
            .map(|(&at, &v)| at + two_over_dt * v)
            .collect();
        (u1, v1, a1)
    }

    /// Total mechanical energy `1/2 vᵀMv + 1/2 uᵀKu`.
    pub fn energy(&self, u: &[T], v: &[T]) -> T {
        let half = T::of(0.5);
        half * dot(v, &self.m.mul_vec(v)) + half * dot(u, &self.k.mul_vec(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble, BcSpec, DofMap, ElementKind, FluidBc, LoadHistory, MassMode, SkeletonBc,
    };
    use crate::mesh::{generate, MeshPattern, MeshSpec, Side};
    use approx::assert_relative_eq;

    fn example1_material() -> MaterialParams<f64> {
        MaterialParams::new(14.516e6, 0.3, 2000.0, 1000.0, 0.33, 1e-2).unwrap()
    }

    fn column_bc(traction: f64, history: LoadHistory<f64>) -> BcSpec<f64> {
        BcSpec::new(vec![
            BcSpec::side(Side::Left, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Right, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Bottom, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(
                Side::Top,
                SkeletonBc::Traction {
                    traction: [0.0, traction],
                    history,
                },
                FluidBc::Drained {
                    pressure: 0.0,
                    history: LoadHistory::Step,
                },
            ),
        ])
    }

    #[test]
    fn wave_speed_example1() {
        let mat = example1_material();
        let eff = mat.mixture_density() - 1000.0 * (2.0 - 1.0 / 0.33);
        assert_relative_eq!(eff, 2700.3, max_relative = 1e-3);
        let c0 = wave_speed(&mat).unwrap();
        assert!((c0 - 85.1).abs() <= 0.1, "C0 = {c0}");
    }

    #[test]
    fn wave_speed_limits_and_errors() {
        // vanishing fluid density: C0 -> sqrt((lambda+2G)/rho)
        let mut mat = example1_material();
        mat.fluid_density = 1e-9;
        let c0 = wave_speed(&mat).unwrap();
        let expect = (mat.constrained_modulus() / mat.mixture_density()).sqrt();
        assert_relative_eq!(c0, expect, max_relative = 1e-9);
        // nonphysical direct construction reports the invalid combination
        let bad = MaterialParams {
            youngs_modulus: 1e6,
            poisson_ratio: 0.3,
            solid_density: -5000.0,
            fluid_density: 1000.0,
            porosity: 0.5,
            hydraulic_conductivity: 1e-2,
            gravity: 9.81,
        };
        assert!(matches!(wave_speed(&bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn cfl_example1_and_scaling() {
        let mat = example1_material();
        let mesh = generate(MeshSpec::new(0.1, 10.0, 1, 100, MeshPattern::Crisscross)).unwrap();
        // shortest edge of the crisscross column is the half-diagonal spoke
        assert_relative_eq!(
            mesh.shortest_edge(),
            0.1 / 2f64.sqrt(),
            max_relative = 1e-12
        );
        let dt = cfl_timestep(&mesh, &mat).unwrap();
        assert!((dt - 8.3e-4).abs() <= 0.02 * 8.3e-4, "dt = {dt:e}");
        // doubling the mesh dimensions doubles the bound
        let mesh2 = generate(MeshSpec::new(0.2, 20.0, 1, 100, MeshPattern::Crisscross)).unwrap();
        let dt2 = cfl_timestep(&mesh2, &mat).unwrap();
        assert_relative_eq!(dt2, 2.0 * dt, max_relative = 1e-12);
        // unit-square crisscross: shortest edge is the spoke of length sqrt(2)/2
        let unit = generate(MeshSpec::new(1.0, 1.0, 1, 1, MeshPattern::Crisscross)).unwrap();
        let min_edge = unit
            .edge_length
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min_edge, 2f64.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn terzaghi_arithmetic() {
        let mat = example1_material();
        assert_eq!(terzaghi_settlement(&mat, 0.0, 10.0), 0.0);
        let s = terzaghi_settlement(&mat, 3000.0, 10.0);
        assert_relative_eq!(s, 1.535e-3, max_relative = 1e-3);
        assert_relative_eq!(
            terzaghi_settlement(&mat, 6000.0, 10.0),
            2.0 * s,
            max_relative = 1e-14
        );
    }

    fn small_column_stepper(
        traction: f64,
        dt: f64,
    ) -> (Stepper<f64>, crate::assembly::DofMap<f64>) {
        let mesh = generate(MeshSpec::new(0.1, 1.0, 1, 10, MeshPattern::Crisscross)).unwrap();
        let bc = column_bc(traction, LoadHistory::Step);
        let (sys, dofs) = assemble(
            &mesh,
            ElementKind::P1Rt0,
            &example1_material(),
            &bc,
            MassMode::Consistent,
        )
        .unwrap();
        let loads = LoadSet::build(&mesh, &dofs, &bc).unwrap();
        (Stepper::new(sys, loads, dt).unwrap(), dofs)
    }

    #[test]
    fn zero_load_stays_at_rest() {
        let (stepper, _) = small_column_stepper(0.0, 1e-3);
        let mut s = stepper.consistent_initial_state().unwrap();
        assert!(s.p.iter().all(|&p| p == 0.0));
        assert!(s.a.iter().all(|&a| a == 0.0));
        for _ in 0..10 {
            s = stepper.step(&s).unwrap();
        }
        assert_eq!(norm2(&s.u), 0.0);
        assert_eq!(norm2(&s.v), 0.0);
        assert_eq!(norm2(&s.q), 0.0);
        assert_eq!(norm2(&s.p), 0.0);
    }

    #[test]
    fn consistent_ic_satisfies_all_blocks() {
        // two-triangle criss mesh with a vertical top traction
        let mesh = generate(MeshSpec::new(1.0, 1.0, 1, 1, MeshPattern::Criss)).unwrap();
        let bc = column_bc(-1000.0, LoadHistory::Step);
        let (sys, dofs) = assemble(
            &mesh,
            ElementKind::P1Rt0,
            &example1_material(),
            &bc,
            MassMode::Consistent,
        )
        .unwrap();
        let loads = LoadSet::build(&mesh, &dofs, &bc).unwrap();
        let (pl, fl) = loads.eval(0.0).unwrap();
        let (a0, qd0, p0) = consistent_initial_conditions(&sys, &pl, &fl).unwrap();
        let rhs_norm = norm2(&pl) + norm2(&fl) + 1e-30;
        let _ = dofs;
        // block 1
        let mut r1 = sys.m.mul_vec(&a0);
        axpy(&mut r1, 1.0, &sys.m_f.mul_vec(&qd0));
        axpy(&mut r1, -1.0, &sys.q.mul_vec(&p0));
        axpy(&mut r1, -1.0, &pl);
        assert!(norm2(&r1) <= 1e-10 * rhs_norm, "{:e}", norm2(&r1));
        // block 2
        let mut r2 = sys.m_f.tr_mul_vec(&a0);
        axpy(&mut r2, 1.0, &sys.a.mul_vec(&qd0));
        axpy(&mut r2, -1.0, &sys.b.mul_vec(&p0));
        axpy(&mut r2, -1.0, &fl);
        assert!(norm2(&r2) <= 1e-10 * rhs_norm, "{:e}", norm2(&r2));
        // differentiated constraint
        let mut r3 = sys.q.tr_mul_vec(&a0);
        axpy(&mut r3, 1.0, &sys.b.tr_mul_vec(&qd0));
        assert!(norm2(&r3) <= 1e-10 * rhs_norm, "{:e}", norm2(&r3));
    }

    #[test]
    fn constant_state_is_preserved() {
        // static drained solution under the constant load must not move
        let (stepper, dofs) = small_column_stepper(-3000.0, 1e-3);
        let sys = stepper.system();
        // drained steady state: K u = P, q = 0, p = 0
        let (pl, _) = stepper.loads().eval(0.0).unwrap();
        let kf = SaddleSystem::new(sys.k.clone(), CsrMat::zeros(dofs.n_disp, 0))
            .factor()
            .unwrap();
        let (u_static, _) = kf.solve(&pl, &[]);
        let mut s = State::zeros(dofs.n_disp, dofs.n_vel, dofs.n_pres);
        s.u = u_static.clone();
        let u_scale = norm2(&u_static);
        for _ in 0..10 {
            s = stepper.step(&s).unwrap();
            assert!(
                norm2(&s.v) <= 1e-9 * u_scale / stepper.dt(),
                "drift {:e}",
                norm2(&s.v)
            );
        }
        let diff: Vec<f64> = s.u.iter().zip(&u_static).map(|(&a, &b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-9 * u_scale, "{:e}", norm2(&diff));
        // the static top settlement is the uniaxial compression value
        let mesh = generate(MeshSpec::new(0.1, 1.0, 1, 10, MeshPattern::Crisscross)).unwrap();
        let top = mesh.nearest_node([0.0, 1.0]);
        let g = dofs.disp_dof[top][1].unwrap();
        let expect = -terzaghi_settlement(&example1_material(), 3000.0, 1.0);
        assert_relative_eq!(u_static[g], expect, max_relative = 1e-10);
    }

    #[test]
    fn ramp_load_starts_without_a_pressure_jump() {
        // replacing the step with a ramp removes the shock: the consistent
        // initialization is then homogeneous and the early response smooth
        let mesh = generate(MeshSpec::new(0.1, 1.0, 1, 10, MeshPattern::Crisscross)).unwrap();
        let bc = column_bc(-3000.0, LoadHistory::Ramp { rise: 0.05 });
        let (sys, dofs) = assemble(
            &mesh,
            ElementKind::P1Rt0,
            &example1_material(),
            &bc,
            MassMode::Consistent,
        )
        .unwrap();
        let loads = LoadSet::build(&mesh, &dofs, &bc).unwrap();
        let stepper = Stepper::new(sys, loads, 1e-3).unwrap();
        let s0 = stepper.consistent_initial_state().unwrap();
        assert_eq!(norm2(&s0.p), 0.0, "no load at t = 0 under a ramp");
        assert_eq!(norm2(&s0.a), 0.0);
        let early_tv = |stepper: &Stepper<f64>, mut s: State<f64>| {
            let mut tv = 0.0;
            for _ in 0..50 {
                let s1 = stepper.step(&s).unwrap();
                let dp: Vec<f64> = s1.p.iter().zip(&s.p).map(|(&a, &b)| a - b).collect();
                tv += norm2(&dp);
                s = s1;
            }
            (tv, s)
        };
        let (tv_ramp, end) = early_tv(&stepper, s0);
        assert!(
            end.p.iter().any(|&p| p > 100.0),
            "pressure built up under the ramp"
        );
        // against the step load, the ramped start moves the pressure far less
        let (step_stepper, _) = small_column_stepper(-3000.0, 1e-3);
        let s0_step = step_stepper.consistent_initial_state().unwrap();
        let (tv_step, _) = early_tv(&step_stepper, s0_step);
        assert!(
            tv_ramp < 0.5 * tv_step,
            "early pressure variation: ramp {tv_ramp:e} vs step {tv_step:e}"
        );
    }

    #[test]
    fn energy_ledger_balances_during_transient() {
        let (stepper, _) = small_column_stepper(-3000.0, 1e-4);
        let mut s = stepper.consistent_initial_state().unwrap();
        let mut ledger = EnergyLedger::new();
        for _ in 0..200 {
            let s1 = stepper.step(&s).unwrap();
            stepper.energy_update(&mut ledger, &s, &s1).unwrap();
            s = s1;
            let (r, scale) = stepper.constraint_residual(&s);
            assert!(r <= 1e-9 * scale, "constraint residual {r:e} vs {scale:e}");
        }
        assert!(
            ledger.max_balance_error <= 1e-9,
            "{:e}",
            ledger.max_balance_error
        );
        assert!(ledger.constraint.abs() <= 1e-9 * ledger.input.abs());
        assert!(ledger.damping > 0.0);
    }

    #[test]
    fn sdof_newmark_matches_closed_form() {
        // single mass-spring: m u'' + k u = 0, u(0) = 1
        let (m, k) = (2.0, 50.0);
        let dt = 0.01;
        let mc = CsrMat::from_triplets(1, 1, vec![(0, 0, m)]);
        let kc = CsrMat::from_triplets(1, 1, vec![(0, 0, k)]);
        let stepper = ElasticStepper::new(mc, kc, dt).unwrap();
        // closed-form recurrence: the trapezoidal relations solved exactly
        let step_exact = |u: f64, v: f64| {
            let v1 = ((m - dt * dt / 4.0 * k) * v - dt * k * u) / (m + dt * dt / 4.0 * k);
            let u1 = u + dt / 2.0 * (v + v1);
            (u1, v1)
        };
        let (mut u, mut v, mut a) = (vec![1.0], vec![0.0], vec![-k / m]);
        let (mut ue, mut ve) = (1.0, 0.0);
        let e0 = stepper.energy(&u, &v);
        for _ in 0..1000 {
            let (u1, v1, a1) = stepper.step(&u, &v, &a, &[0.0]);
            (u, v, a) = (u1, v1, a1);
            let (u1e, v1e) = step_exact(ue, ve);
            (ue, ve) = (u1e, v1e);
            assert_relative_eq!(u[0], ue, max_relative = 1e-9, epsilon = 1e-12);
            let e = stepper.energy(&u, &v);
            assert!(
                ((e - e0) / e0).abs() <= 1e-12,
                "energy drift {:e}",
                (e - e0) / e0
            );
        }
        // the scheme stays near the true harmonic amplitude
        assert!(u[0].abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn runs_in_single_precision() {
        // the whole pipeline is scalar-generic; a short f32 column run must
        // stay consistent to single-precision accuracy
        let mesh = generate(MeshSpec::new(0.1f32, 1.0, 1, 4, MeshPattern::Crisscross)).unwrap();
        let mat = MaterialParams::<f32>::new(14.516e6, 0.3, 2000.0, 1000.0, 0.33, 1e-2).unwrap();
        let bc = BcSpec::new(vec![
            BcSpec::side(Side::Left, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Right, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Bottom, SkeletonBc::NormalFixed, FluidBc::Impermeable),
            BcSpec::side(
                Side::Top,
                SkeletonBc::Traction {
                    traction: [0.0, -3000.0],
                    history: LoadHistory::Step,
                },
                FluidBc::Drained {
                    pressure: 0.0,
                    history: LoadHistory::Step,
                },
            ),
        ]);
        let (sys, _) =
            assemble(&mesh, ElementKind::P1Rt0, &mat, &bc, MassMode::Consistent).unwrap();
        let loads = LoadSet::build(
            &mesh,
            &DofMap::build(&mesh, ElementKind::P1Rt0, &bc).unwrap(),
            &bc,
        )
        .unwrap();
        let stepper = Stepper::new(sys, loads, 1e-3f32).unwrap();
        let mut s = stepper.consistent_initial_state().unwrap();
        let mut ledger = EnergyLedger::new();
        for _ in 0..50 {
            let s1 = stepper.step(&s).unwrap();
            stepper.energy_update(&mut ledger, &s, &s1).unwrap();
            s = s1;
        }
        assert!(s.p.iter().all(|p| p.is_finite()));
        assert!(
            ledger.max_balance_error < 1e-3,
            "{}",
            ledger.max_balance_error
        );
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let (stepper, _) = small_column_stepper(0.0, 1e-3);
        let sys = stepper.system().clone();
        let loads = stepper.loads().clone();
        assert!(Stepper::new(sys, loads, 0.0).is_err());
    }
}
