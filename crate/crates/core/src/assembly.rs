//! Assembly of the global coefficient matrices of the semi-discrete system
//!
//! ```text
//!   M u'' + M_f q' + K u           - Q p = P
//!   M_fᵀ u'' + A q' + (n g / K_h) A q - B p = F
//!   Qᵀ u' + Bᵀ q                         = 0
//! ```
//!
//! with nodal displacement, RT0 edge flux and elementwise constant pressure.
//! Essential boundary conditions (prescribed displacement components and
//! impermeable edges) are applied by dof elimination; prescribed traction and
//! pressure act through the load vectors.

use crate::basis::{quadrature, tabulate_nodal, tabulate_rt0, NodalKind, QuadratureRule};
use crate::linalg::{CsrMat, DenseMat};
use crate::mesh::{Mesh, Side};
use crate::{Error, Result, Scalar};
use std::fmt;
use std::str::FromStr;

/// Elastic, fluid and coupling constants of the mixture (all SI).
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams<T> {
    /// Young's modulus of the drained skeleton (Pa).
    pub youngs_modulus: T,
    pub poisson_ratio: T,
    /// Solid grain density (kg/m^3).
    pub solid_density: T,
    /// Pore fluid density (kg/m^3).
    pub fluid_density: T,
    pub porosity: T,
    /// Hydraulic conductivity (m/s).
    pub hydraulic_conductivity: T,
    /// Gravitational acceleration (m/s^2); only enters the Darcy drag.
    pub gravity: T,
}

impl<T: Scalar> MaterialParams<T> {
    pub fn new(
        youngs_modulus: T,
        poisson_ratio: T,
        solid_density: T,
        fluid_density: T,
        porosity: T,
        hydraulic_conductivity: T,
    ) -> Result<Self> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
            solid_density,
            fluid_density,
            porosity,
            hydraulic_conductivity,
            gravity: T::of(9.81),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let half = T::of(0.5);
        let ok = self.youngs_modulus > T::zero()
            && self.poisson_ratio > T::zero()
            && self.poisson_ratio < half
            && self.solid_density > T::zero()
            && self.fluid_density > T::zero()
            && self.porosity > T::zero()
            && self.porosity < T::one()
            && self.hydraulic_conductivity > T::zero()
            && self.gravity > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(format!("{self:?}")))
        }
    }

    /// Lame first parameter of the drained skeleton.
    pub fn lame_lambda(&self) -> T {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        e * nu / ((T::one() + nu) * (T::one() - T::of(2.0) * nu))
    }

    /// Shear modulus.
    pub fn shear_modulus(&self) -> T {
        self.youngs_modulus / (T::of(2.0) * (T::one() + self.poisson_ratio))
    }

    /// Plane-strain constrained modulus `lambda + 2 G`.
    pub fn constrained_modulus(&self) -> T {
        self.lame_lambda() + T::of(2.0) * self.shear_modulus()
    }

    /// Mixture density `n rho_f + (1 - n) rho_s`.
    pub fn mixture_density(&self) -> T {
        self.porosity * self.fluid_density + (T::one() - self.porosity) * self.solid_density
    }

    /// Darcy drag coefficient `n g / K_h` multiplying the `A` block.
    pub fn darcy_drag(&self) -> T {
        self.porosity * self.gravity / self.hydraulic_conductivity
    }

    /// Plane-strain elasticity matrix (rows: xx, yy, xy).
    fn elastic_matrix(&self) -> [[T; 3]; 3] {
        let lam = self.lame_lambda();
        let g = self.shear_modulus();
        let d = lam + T::of(2.0) * g;
        let z = T::zero();
        [[d, lam, z], [lam, d, z], [z, z, g]]
    }
}

/// Coupled element pair: nodal skeleton x RT0 flux x constant pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    P1Rt0,
    P2Rt0,
}

impl ElementKind {
    pub fn nodal(self) -> NodalKind {
        match self {
            ElementKind::P1Rt0 => NodalKind::P1,
            ElementKind::P2Rt0 => NodalKind::P2,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::P1Rt0 => "p1rt0",
            ElementKind::P2Rt0 => "p2rt0",
        })
    }
}

impl FromStr for ElementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1rt0" | "p1" => Ok(ElementKind::P1Rt0),
            "p2rt0" | "p2" => Ok(ElementKind::P2Rt0),
            other => Err(Error::InvalidParameter(format!(
                "unknown element kind `{other}`"
            ))),
        }
    }
}

/// Skeleton mass representation. Lumping touches only the skeleton mass
/// block `M`; the coupling `M_f` and the fluid block `A` stay consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    Consistent,
    /// Nodal (Lobatto) quadrature diagonal. On quadratic triangles the
    /// vertex weights vanish, which leaves the kinetic-energy matrix of the
    /// coupled system indefinite: runs are unbounded. Kept to demonstrate
    /// exactly that.
    LobattoLumped,
    /// HRZ diagonal scaling of the consistent diagonal.
    HintonLumped,
}

impl fmt::Display for MassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassMode::Consistent => "consistent",
            MassMode::LobattoLumped => "lobatto",
            MassMode::HintonLumped => "hinton",
        })
    }
}

impl FromStr for MassMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(MassMode::Consistent),
            "lobatto" => Ok(MassMode::LobattoLumped),
            "hinton" => Ok(MassMode::HintonLumped),
            other => Err(Error::UnknownLumping(other.to_string())),
        }
    }
}

/// Dimensionless load time history.
#[derive(Debug, Clone)]
pub enum LoadHistory<T> {
    /// Unit value from t = 0 on.
    Step,
    /// Linear rise to one over `rise` seconds.
    Ramp { rise: T },
    /// Piecewise-linear table; lookups outside the range are errors.
    Table(Vec<(T, T)>),
}

impl<T: Scalar> LoadHistory<T> {
    pub fn value(&self, t: T) -> Result<T> {
        match self {
            LoadHistory::Step => Ok(T::one()),
            LoadHistory::Ramp { rise } => Ok((t / *rise).min(T::one()).max(T::zero())),
            LoadHistory::Table(rows) => {
                let out_of_range = Error::LoadOutOfRange {
                    t: t.to_f64_lossy(),
                };
                let (first, last) = match (rows.first(), rows.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return Err(out_of_range),
                };
                if t < first.0 || t > last.0 {
                    return Err(out_of_range);
                }
                let mut prev = *first;
                for &(ti, vi) in rows.iter().skip(1) {
                    if t <= ti {
                        let w = if ti == prev.0 {
                            T::zero()
                        } else {
                            (t - prev.0) / (ti - prev.0)
                        };
                        return Ok(prev.1 + w * (vi - prev.1));
                    }
                    prev = (ti, vi);
                }
                Ok(last.1)
            }
        }
    }
}

/// Skeleton condition on a stretch of boundary.
#[derive(Debug, Clone)]
pub enum SkeletonBc<T> {
    Free,
    /// Displacement normal to the side is fixed (roller).
    NormalFixed,
    FullyFixed,
    /// Prescribed traction vector (Pa) scaled by a time history.
    Traction {
        traction: [T; 2],
        history: LoadHistory<T>,
    },
}

/// Fluid condition on a stretch of boundary.
#[derive(Debug, Clone)]
pub enum FluidBc<T> {
    /// `w . n = 0`, eliminates the edge dofs.
    Impermeable,
    /// Prescribed pressure (Pa) scaled by a time history; enters the fluid
    /// load vector weakly.
    Drained {
        pressure: T,
        history: LoadHistory<T>,
    },
}

/// One boundary region: a side, optionally restricted to a coordinate span
/// along it (x for bottom/top, y for left/right).
#[derive(Debug, Clone)]
pub struct BcRegion<T> {
    pub side: Side,
    pub span: Option<(T, T)>,
    pub skeleton: SkeletonBc<T>,
    pub fluid: FluidBc<T>,
}

/// Boundary conditions: every boundary edge must fall in exactly one region.
#[derive(Debug, Clone)]
pub struct BcSpec<T> {
    pub regions: Vec<BcRegion<T>>,
}

impl<T: Scalar> BcSpec<T> {
    pub fn new(regions: Vec<BcRegion<T>>) -> Self {
        Self { regions }
    }

    /// Whole-side region shorthand.
    pub fn side(side: Side, skeleton: SkeletonBc<T>, fluid: FluidBc<T>) -> BcRegion<T> {
        BcRegion {
            side,
            span: None,
            skeleton,
            fluid,
        }
    }

    fn region_contains_edge(&self, mesh: &Mesh<T>, region: &BcRegion<T>, e: usize) -> bool {
        if mesh.edge_side[e] != Some(region.side) {
            return false;
        }
        match region.span {
            None => true,
            Some((lo, hi)) => {
                let axis = match region.side {
                    Side::Bottom | Side::Top => 0,
                    Side::Left | Side::Right => 1,
                };
                let tol = T::of(1e-9)
                    * (mesh.spec.width * mesh.spec.width + mesh.spec.height * mesh.spec.height)
                        .sqrt();
                let [a, b] = mesh.edges[e];
                let (ca, cb) = (mesh.nodes[a][axis], mesh.nodes[b][axis]);
                ca >= lo - tol && ca <= hi + tol && cb >= lo - tol && cb <= hi + tol
            }
        }
    }

    /// Maps each boundary edge to the unique region covering it.
    pub fn edge_regions(&self, mesh: &Mesh<T>) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; mesh.n_edges()];
        for e in 0..mesh.n_edges() {
            if !mesh.is_boundary_edge(e) {
                continue;
            }
            for (r, region) in self.regions.iter().enumerate() {
                if self.region_contains_edge(mesh, region, e) {
                    if out[e].is_some() {
                        return Err(Error::BcCoverage(format!(
                            "boundary edge {e} covered by more than one region"
                        )));
                    }
                    out[e] = Some(r);
                }
            }
            if out[e].is_none() {
                return Err(Error::BcCoverage(format!(
                    "boundary edge {e} on side {:?} not covered by any region",
                    mesh.edge_side[e]
                )));
            }
        }
        Ok(out)
    }
}

/// Free-dof numbering. Displacement dofs live on nodes (P1) or nodes plus
/// edge midpoints (P2), flux dofs on edges, pressure dofs on elements.
/// Pressure is never constrained.
#[derive(Debug, Clone)]
pub struct DofMap<T> {
    pub kind: ElementKind,
    /// Per displacement-carrying node, per component.
    pub disp_dof: Vec<[Option<usize>; 2]>,
    pub n_disp: usize,
    /// Per mesh edge.
    pub vel_dof: Vec<Option<usize>>,
    pub n_vel: usize,
    pub n_pres: usize,
    /// Coordinates of displacement-carrying nodes.
    pub disp_node_pos: Vec<[T; 2]>,
}

impl<T: Scalar> DofMap<T> {
    /// Displacement node ids of one element in local order.
    pub fn element_disp_nodes(&self, mesh: &Mesh<T>, m: usize) -> Vec<usize> {
        let tri = mesh.triangles[m];
        match self.kind {
            ElementKind::P1Rt0 => tri.to_vec(),
            ElementKind::P2Rt0 => {
                let n = mesh.n_nodes();
                let te = mesh.tri_to_edge[m];
                vec![tri[0], tri[1], tri[2], n + te[0], n + te[1], n + te[2]]
            }
        }
    }

    pub fn build(mesh: &Mesh<T>, kind: ElementKind, bc: &BcSpec<T>) -> Result<Self> {
        let n_vertex = mesh.n_nodes();
        let n_disp_nodes = match kind {
            ElementKind::P1Rt0 => n_vertex,
            ElementKind::P2Rt0 => n_vertex + mesh.n_edges(),
        };
        let mut fixed = vec![[false; 2]; n_disp_nodes];
        let mut edge_fixed = vec![false; mesh.n_edges()];

        let edge_regions = bc.edge_regions(mesh)?;
        for e in 0..mesh.n_edges() {
            let Some(r) = edge_regions[e] else { continue };
            let region = &bc.regions[r];
            let normal_comp = match region.side {
                Side::Left | Side::Right => 0,
                Side::Bottom | Side::Top => 1,
            };
            let mut edge_nodes = vec![mesh.edges[e][0], mesh.edges[e][1]];
            if kind == ElementKind::P2Rt0 {
                edge_nodes.push(n_vertex + e);
            }
            match region.skeleton {
                SkeletonBc::Free | SkeletonBc::Traction { .. } => {}
                SkeletonBc::NormalFixed => {
                    for &n in &edge_nodes {
                        fixed[n][normal_comp] = true;
                    }
                }
                SkeletonBc::FullyFixed => {
                    for &n in &edge_nodes {
                        fixed[n] = [true, true];
                    }
                }
            }
            if matches!(region.fluid, FluidBc::Impermeable) {
                edge_fixed[e] = true;
            }
        }

        let mut disp_dof = vec![[None, None]; n_disp_nodes];
        let mut n_disp = 0;
        for (n, f) in fixed.iter().enumerate() {
            for c in 0..2 {
                if !f[c] {
                    disp_dof[n][c] = Some(n_disp);
                    n_disp += 1;
                }
            }
        }
        let mut vel_dof = vec![None; mesh.n_edges()];
        let mut n_vel = 0;
        for (e, &f) in edge_fixed.iter().enumerate() {
            if !f {
                vel_dof[e] = Some(n_vel);
                n_vel += 1;
            }
        }
        let mut disp_node_pos = mesh.nodes.clone();
        if kind == ElementKind::P2Rt0 {
            for e in 0..mesh.n_edges() {
                disp_node_pos.push(mesh.edge_midpoint(e));
            }
        }
        Ok(Self {
            kind,
            disp_dof,
            n_disp,
            vel_dof,
            n_vel,
            n_pres: mesh.n_triangles(),
            disp_node_pos,
        })
    }
}

/// The six global blocks, after dof elimination.
#[derive(Debug, Clone)]
pub struct SystemMatrices<T> {
    pub m: CsrMat<T>,
    pub m_f: CsrMat<T>,
    pub a: CsrMat<T>,
    pub k: CsrMat<T>,
    pub q: CsrMat<T>,
    pub b: CsrMat<T>,
    pub mass_mode: MassMode,
    pub material: MaterialParams<T>,
}

/// Dense symmetric element matrices, mirrored from the upper triangle so the
/// assembled blocks are exactly symmetric.
fn symmetric_fill<T: Scalar>(n: usize, mut f: impl FnMut(usize, usize) -> T) -> DenseMat<T> {
    let mut m = DenseMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            *m.at_mut(i, j) = v;
            *m.at_mut(j, i) = v;
        }
    }
    m
}

struct ElementMatrices<T> {
    m: DenseMat<T>,
    m_f: DenseMat<T>,
    a: DenseMat<T>,
    k: DenseMat<T>,
    q: Vec<T>,
    b: [T; 3],
}

fn element_matrices<T: Scalar>(
    mesh: &Mesh<T>,
    m: usize,
    kind: ElementKind,
    mat: &MaterialParams<T>,
    rule: &QuadratureRule<T>,
) -> Result<ElementMatrices<T>> {
    let verts = mesh.tri_coords(m);
    let signs = mesh.tri_signs(m);
    let area = mesh.tri_area[m];
    let nodal = tabulate_nodal(kind.nodal(), &verts, rule)?;
    let rt0 = tabulate_rt0(&verts, signs, rule)?;
    let nb = kind.nodal().n_basis();
    let nq = rule.points.len();
    let rho = mat.mixture_density();
    let rho_f = mat.fluid_density;
    let c_mat = mat.elastic_matrix();

    let w_a: Vec<T> = rule.weights.iter().map(|&w| w * area).collect();

    // strain-displacement rows for dof (i, comp): (e_xx, e_yy, gamma_xy)
    let b_row = |g: [T; 2], comp: usize| -> [T; 3] {
        if comp == 0 {
            [g[0], T::zero(), g[1]]
        } else {
            [T::zero(), g[1], g[0]]
        }
    };

    let m_e = symmetric_fill(2 * nb, |r, c| {
        if r % 2 != c % 2 {
            return T::zero();
        }
        let (i, j) = (r / 2, c / 2);
        let mut s = T::zero();
        for q in 0..nq {
            s += w_a[q] * nodal.values[q][i] * nodal.values[q][j];
        }
        rho * s
    });

    let mut mf_e = DenseMat::zeros(2 * nb, 3);
    for i in 0..nb {
        for j in 0..3 {
            let mut sx = T::zero();
            let mut sy = T::zero();
            for q in 0..nq {
                sx += w_a[q] * nodal.values[q][i] * rt0.values[q][j][0];
                sy += w_a[q] * nodal.values[q][i] * rt0.values[q][j][1];
            }
            *mf_e.at_mut(2 * i, j) = rho_f * sx;
            *mf_e.at_mut(2 * i + 1, j) = rho_f * sy;
        }
    }

    let coef_a = rho_f / mat.porosity;
    let a_e = symmetric_fill(3, |i, j| {
        let mut s = T::zero();
        for q in 0..nq {
            s += w_a[q]
                * (rt0.values[q][i][0] * rt0.values[q][j][0]
                    + rt0.values[q][i][1] * rt0.values[q][j][1]);
        }
        coef_a * s
    });

    let k_e = symmetric_fill(2 * nb, |r, c| {
        let (i, ci) = (r / 2, r % 2);
        let (j, cj) = (c / 2, c % 2);
        let mut s = T::zero();
        for q in 0..nq {
            let bi = b_row(nodal.grads[q][i], ci);
            let bj = b_row(nodal.grads[q][j], cj);
            let mut cbj = [T::zero(); 3];
            for r3 in 0..3 {
                cbj[r3] = c_mat[r3][0] * bj[0] + c_mat[r3][1] * bj[1] + c_mat[r3][2] * bj[2];
            }
            s += w_a[q] * (bi[0] * cbj[0] + bi[1] * cbj[1] + bi[2] * cbj[2]);
        }
        s
    });

    // Q column: volumetric coupling; entry for dof (i, c) is the integral of
    // the gradient component over the element
    let mut q_e = vec![T::zero(); 2 * nb];
    for i in 0..nb {
        for c in 0..2 {
            let mut s = T::zero();
            for q in 0..nq {
                s += w_a[q] * nodal.grads[q][i][c];
            }
            q_e[2 * i + c] = s;
        }
    }

    // B column: integral of the constant divergence is s_j l_j
    let mut b_e = [T::zero(); 3];
    for j in 0..3 {
        b_e[j] = rt0.divs[j] * area;
    }

    Ok(ElementMatrices {
        m: m_e,
        m_f: mf_e,
        a: a_e,
        k: k_e,
        q: q_e,
        b: b_e,
    })
}

/// Lobatto (nodal quadrature) lumped diagonal of the element mass, one value
/// per (node, component) dof: `rho * A / 3` at P1 vertices; zero at P2
/// vertices and `rho * A / 3` at P2 midside nodes.
pub fn lobatto_lumped_diagonal<T: Scalar>(kind: NodalKind, area: T, rho: T) -> Vec<T> {
    let third = rho * area / T::of(3.0);
    match kind {
        NodalKind::P1 => vec![third; 6],
        NodalKind::P2 => {
            let mut d = vec![T::zero(); 12];
            for k in 6..12 {
                d[k] = third;
            }
            d
        }
    }
}

/// HRZ lumping: scales the consistent diagonal so the total mass per
/// direction is preserved.
pub fn hrz_lumped_diagonal<T: Scalar>(consistent: &DenseMat<T>, area: T, rho: T) -> Vec<T> {
    let n = consistent.nrows();
    let total = rho * area;
    let mut diag: Vec<T> = (0..n).map(|i| consistent.at(i, i)).collect();
    for c in 0..2 {
        let s: T = (0..n / 2).map(|i| diag[2 * i + c]).sum();
        let scale = total / s;
        for i in 0..n / 2 {
            diag[2 * i + c] *= scale;
        }
    }
    diag
}

/// Diagonal element mass by the requested lumping method.
pub fn lump_mass<T: Scalar>(
    kind: NodalKind,
    consistent: &DenseMat<T>,
    area: T,
    rho: T,
    method: MassMode,
) -> Result<Vec<T>> {
    match method {
        MassMode::LobattoLumped => Ok(lobatto_lumped_diagonal(kind, area, rho)),
        MassMode::HintonLumped => Ok(hrz_lumped_diagonal(consistent, area, rho)),
        MassMode::Consistent => Err(Error::UnknownLumping(
            "consistent is not a lumping method".into(),
        )),
    }
}

/// Assembles the global blocks for the given element pair, material,
/// boundary conditions and mass representation.
pub fn assemble<T: Scalar>(
    mesh: &Mesh<T>,
    kind: ElementKind,
    mat: &MaterialParams<T>,
    bc: &BcSpec<T>,
    mass_mode: MassMode,
) -> Result<(SystemMatrices<T>, DofMap<T>)> {
    mat.validate()?;
    let dofs = DofMap::build(mesh, kind, bc)?;
    let rule = quadrature(kind.nodal().quadrature_degree())?;
    let nb = kind.nodal().n_basis();

    let mut tm = Vec::new();
    let mut tmf = Vec::new();
    let mut ta = Vec::new();
    let mut tk = Vec::new();
    let mut tq = Vec::new();
    let mut tb = Vec::new();

    for m in 0..mesh.n_triangles() {
        let em = element_matrices(mesh, m, kind, mat, &rule).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { tri: m, area },
            other => other,
        })?;
        let nodes = dofs.element_disp_nodes(mesh, m);
        let area = mesh.tri_area[m];
        let rho = mat.mixture_density();

        // skeleton mass in the requested representation
        let m_el = match mass_mode {
            MassMode::Consistent => em.m.clone(),
            MassMode::HintonLumped => {
                let d = hrz_lumped_diagonal(&em.m, area, rho);
                let mut md = DenseMat::zeros(2 * nb, 2 * nb);
                for (i, &v) in d.iter().enumerate() {
                    *md.at_mut(i, i) = v;
                }
                md
            }
            MassMode::LobattoLumped => {
                let mut md = DenseMat::zeros(2 * nb, 2 * nb);
                for (i, &v) in lobatto_lumped_diagonal(kind.nodal(), area, rho)
                    .iter()
                    .enumerate()
                {
                    *md.at_mut(i, i) = v;
                }
                md
            }
        };
        let mf_el = &em.m_f;

        // scatter, skipping eliminated dofs
        let disp_dof_of = |local: usize| -> Option<usize> {
            let (i, c) = (local / 2, local % 2);
            dofs.disp_dof[nodes[i]][c]
        };
        for li in 0..2 * nb {
            let Some(gi) = disp_dof_of(li) else { continue };
            for lj in 0..2 * nb {
                if let Some(gj) = disp_dof_of(lj) {
                    let vm = m_el.at(li, lj);
                    if vm != T::zero() {
                        tm.push((gi, gj, vm));
                    }
                    let vk = em.k.at(li, lj);
                    if vk != T::zero() {
                        tk.push((gi, gj, vk));
                    }
                }
            }
            for lj in 0..3 {
                if let Some(gj) = dofs.vel_dof[mesh.tri_to_edge[m][lj]] {
                    let v = mf_el.at(li, lj);
                    if v != T::zero() {
                        tmf.push((gi, gj, v));
                    }
                }
            }
            if em.q[li] != T::zero() {
                tq.push((gi, m, em.q[li]));
            }
        }
        for li in 0..3 {
            let Some(gi) = dofs.vel_dof[mesh.tri_to_edge[m][li]] else {
                continue;
            };
            for lj in 0..3 {
                if let Some(gj) = dofs.vel_dof[mesh.tri_to_edge[m][lj]] {
                    ta.push((gi, gj, em.a.at(li, lj)));
                }
            }
            tb.push((gi, m, em.b[li]));
        }
    }

    let np = dofs.n_pres;
    let sys = SystemMatrices {
        m: CsrMat::from_triplets(dofs.n_disp, dofs.n_disp, tm),
        m_f: CsrMat::from_triplets(dofs.n_disp, dofs.n_vel, tmf),
        a: CsrMat::from_triplets(dofs.n_vel, dofs.n_vel, ta),
        k: CsrMat::from_triplets(dofs.n_disp, dofs.n_disp, tk),
        q: CsrMat::from_triplets(dofs.n_disp, np, tq),
        b: CsrMat::from_triplets(dofs.n_vel, np, tb),
        mass_mode,
        material: *mat,
    };
    Ok((sys, dofs))
}

/// H1-seminorm matrix of the displacement space (unit material), used to
/// normalize the inf-sup eigenproblem.
pub fn assemble_h1_seminorm<T: Scalar>(
    mesh: &Mesh<T>,
    kind: ElementKind,
    dofs: &DofMap<T>,
) -> Result<CsrMat<T>> {
    let rule = quadrature(kind.nodal().quadrature_degree())?;
    let nb = kind.nodal().n_basis();
    let mut t = Vec::new();
    for m in 0..mesh.n_triangles() {
        let verts = mesh.tri_coords(m);
        let nodal = tabulate_nodal(kind.nodal(), &verts, &rule)?;
        let area = mesh.tri_area[m];
        let nodes = dofs.element_disp_nodes(mesh, m);
        let s_el = symmetric_fill(nb, |i, j| {
            let mut s = T::zero();
            for q in 0..rule.points.len() {
                s += rule.weights[q]
                    * area
                    * (nodal.grads[q][i][0] * nodal.grads[q][j][0]
                        + nodal.grads[q][i][1] * nodal.grads[q][j][1]);
            }
            s
        });
        for i in 0..nb {
            for j in 0..nb {
                let v = s_el.at(i, j);
                for c in 0..2 {
                    if let (Some(gi), Some(gj)) =
                        (dofs.disp_dof[nodes[i]][c], dofs.disp_dof[nodes[j]][c])
                    {
                        t.push((gi, gj, v));
                    }
                }
            }
        }
    }
    Ok(CsrMat::from_triplets(dofs.n_disp, dofs.n_disp, t))
}

/// Precomputed unit load vectors with their time histories. Evaluating at a
/// time `t` scales each part by its history value.
#[derive(Debug, Clone)]
pub struct LoadSet<T> {
    pub traction_parts: Vec<(LoadHistory<T>, Vec<T>)>,
    pub pressure_parts: Vec<(LoadHistory<T>, Vec<T>)>,
    n_disp: usize,
    n_vel: usize,
}

impl<T: Scalar> LoadSet<T> {
    pub fn build(mesh: &Mesh<T>, dofs: &DofMap<T>, bc: &BcSpec<T>) -> Result<Self> {
        let edge_regions = bc.edge_regions(mesh)?;
        let mut traction_parts = Vec::new();
        let mut pressure_parts = Vec::new();
        for (r, region) in bc.regions.iter().enumerate() {
            let edges: Vec<usize> = (0..mesh.n_edges())
                .filter(|&e| edge_regions[e] == Some(r))
                .collect();
            if let SkeletonBc::Traction { traction, history } = &region.skeleton {
                let mut p = vec![T::zero(); dofs.n_disp];
                for &e in &edges {
                    let l = mesh.edge_length[e];
                    let [n0, n1] = mesh.edges[e];
                    match dofs.kind {
                        ElementKind::P1Rt0 => {
                            let half = T::of(0.5);
                            for &n in &[n0, n1] {
                                for c in 0..2 {
                                    if let Some(g) = dofs.disp_dof[n][c] {
                                        p[g] += traction[c] * l * half;
                                    }
                                }
                            }
                        }
                        ElementKind::P2Rt0 => {
                            // consistent quadratic edge load: l/6, l/6, 4l/6
                            let sixth = T::of(1.0 / 6.0);
                            let mid = mesh.n_nodes() + e;
                            for (&n, wn) in
                                [n0, n1, mid].iter().zip([sixth, sixth, T::of(4.0 / 6.0)])
                            {
                                for c in 0..2 {
                                    if let Some(g) = dofs.disp_dof[n][c] {
                                        p[g] += traction[c] * l * wn;
                                    }
                                }
                            }
                        }
                    }
                }
                traction_parts.push((history.clone(), p));
            }
            if let FluidBc::Drained { pressure, history } = &region.fluid {
                let mut f = vec![T::zero(); dofs.n_vel];
                for &e in &edges {
                    if let Some(g) = dofs.vel_dof[e] {
                        // boundary normal component of the edge basis is one,
                        // so the weak pressure term contributes -p * l
                        f[g] -= *pressure * mesh.edge_length[e];
                    }
                }
                pressure_parts.push((history.clone(), f));
            }
        }
        Ok(Self {
            traction_parts,
            pressure_parts,
            n_disp: dofs.n_disp,
            n_vel: dofs.n_vel,
        })
    }

    /// `(P(t), F(t))`.
    pub fn eval(&self, t: T) -> Result<(Vec<T>, Vec<T>)> {
        let mut p = vec![T::zero(); self.n_disp];
        for (h, part) in &self.traction_parts {
            let s = h.value(t)?;
            for (pi, &v) in p.iter_mut().zip(part) {
                *pi += s * v;
            }
        }
        let mut f = vec![T::zero(); self.n_vel];
        for (h, part) in &self.pressure_parts {
            let s = h.value(t)?;
            for (fi, &v) in f.iter_mut().zip(part) {
                *fi += s * v;
            }
        }
        Ok((p, f))
    }
}

/// Traction and pressure load vectors at time `t`.
pub fn load_vectors<T: Scalar>(
    mesh: &Mesh<T>,
    dofs: &DofMap<T>,
    bc: &BcSpec<T>,
    t: T,
) -> Result<(Vec<T>, Vec<T>)> {
    LoadSet::build(mesh, dofs, bc)?.eval(t)
}
