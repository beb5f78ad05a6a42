//! Shape functions and quadrature on straight-edged triangles.
//!
//! Nodal P1/P2 bases are evaluated through barycentric coordinates (the
//! geometry stays sub-parametric for P2: straight edges, midside nodes at
//! edge midpoints). The lowest-order Raviart-Thomas basis attaches one vector
//! function to each edge,
//!
//! `W_j(x) = s_j * l_j / (2 A) * (x - x_j)`,
//!
//! with `x_j` the vertex opposite edge `j`; its normal component along its
//! own edge is identically one and vanishes along the other two, and its
//! divergence is the constant `s_j * l_j / A`.

use crate::{Error, Result, Scalar};

/// Nodal interpolation order for the skeleton displacement field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodalKind {
    P1,
    P2,
}

impl NodalKind {
    /// Shape functions per triangle: 3 vertices, plus 3 midside nodes for P2.
    pub fn n_basis(self) -> usize {
        match self {
            NodalKind::P1 => 3,
            NodalKind::P2 => 6,
        }
    }

    /// Gauss degree that integrates the element mass exactly.
    pub fn quadrature_degree(self) -> usize {
        match self {
            NodalKind::P1 => 2,
            NodalKind::P2 => 4,
        }
    }
}

/// Symmetric Gauss rule on a triangle, points in barycentric coordinates,
/// weights summing to one (scale by the element area at the use site).
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// Returns the 3-point (degree 2) or 6-point (degree 4) rule.
pub fn quadrature<T: Scalar>(degree: usize) -> Result<QuadratureRule<T>> {
    match degree {
        2 => {
            let a = T::of(2.0 / 3.0);
            let b = T::of(1.0 / 6.0);
            let w = T::of(1.0 / 3.0);
            Ok(QuadratureRule {
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![w, w, w],
                degree,
            })
        }
        4 => {
            let mut points = Vec::with_capacity(6);
            let mut weights = Vec::with_capacity(6);
            for (a, w) in [
                (0.445_948_490_915_965, 0.223_381_589_678_011),
                (0.091_576_213_509_771, 0.109_951_743_655_322),
            ] {
                let c = T::of(1.0 - 2.0 * a);
                let a = T::of(a);
                points.push([c, a, a]);
                points.push([a, c, a]);
                points.push([a, a, c]);
                weights.extend([T::of(w); 3]);
            }
            Ok(QuadratureRule {
                points,
                weights,
                degree,
            })
        }
        other => Err(Error::UnsupportedDegree(other)),
    }
}

impl<T: Scalar> QuadratureRule<T> {
    /// Physical coordinates of the rule points on a triangle.
    pub fn points_xy(&self, verts: &[[T; 2]; 3]) -> Vec<[T; 2]> {
        self.points
            .iter()
            .map(|l| {
                [
                    l[0] * verts[0][0] + l[1] * verts[1][0] + l[2] * verts[2][0],
                    l[0] * verts[0][1] + l[1] * verts[1][1] + l[2] * verts[2][1],
                ]
            })
            .collect()
    }

    /// `area * sum_i w_i f(x_i)` over the given triangle.
    pub fn integrate(&self, verts: &[[T; 2]; 3], mut f: impl FnMut([T; 2]) -> T) -> T {
        let area = triangle_area(verts);
        let mut acc = T::zero();
        for (p, &w) in self.points_xy(verts).iter().zip(&self.weights) {
            acc += w * f(*p);
        }
        area * acc
    }
}

pub fn triangle_area<T: Scalar>(verts: &[[T; 2]; 3]) -> T {
    let [p0, p1, p2] = verts;
    ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])) * T::of(0.5)
}

fn check_not_degenerate<T: Scalar>(verts: &[[T; 2]; 3]) -> Result<T> {
    let area = triangle_area(verts);
    let scale2 = (0..3)
        .map(|i| {
            let (p, q) = (verts[i], verts[(i + 1) % 3]);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        })
        .fold(T::zero(), T::max);
    if area.abs() <= T::of(1e-14) * scale2 {
        return Err(Error::DegenerateTriangle {
            tri: usize::MAX,
            area: area.to_f64_lossy(),
        });
    }
    Ok(area)
}

/// Barycentric coordinates and their (constant) Cartesian gradients.
/// Everything is computed relative to the first vertex so the conditioning
/// depends on the element shape, not on where it sits in the domain.
fn barycentric<T: Scalar>(verts: &[[T; 2]; 3], p: [T; 2]) -> Result<([T; 3], [[T; 2]; 3])> {
    let area = check_not_degenerate(verts)?;
    let inv2a = T::one() / (T::of(2.0) * area);
    let origin = verts[0];
    let local = |q: [T; 2]| [q[0] - origin[0], q[1] - origin[1]];
    let lv = [[T::zero(); 2], local(verts[1]), local(verts[2])];
    let lp = local(p);
    let mut lam = [T::zero(); 3];
    let mut grad = [[T::zero(); 2]; 3];
    for i in 0..3 {
        let (pi1, pi2) = (lv[(i + 1) % 3], lv[(i + 2) % 3]);
        let b = pi1[1] - pi2[1];
        let c = pi2[0] - pi1[0];
        let a = pi1[0] * pi2[1] - pi2[0] * pi1[1];
        lam[i] = (a + b * lp[0] + c * lp[1]) * inv2a;
        grad[i] = [b * inv2a, c * inv2a];
    }
    Ok((lam, grad))
}

/// Values and Cartesian gradients of the P1 or P2 shape functions at a point.
///
/// P2 ordering: three vertex functions, then the midside function of edge
/// `k` (opposite vertex `k`, i.e. between vertices `k+1` and `k+2`).
pub fn eval_nodal<T: Scalar>(
    kind: NodalKind,
    verts: &[[T; 2]; 3],
    p: [T; 2],
) -> Result<(Vec<T>, Vec<[T; 2]>)> {
    let (lam, dlam) = barycentric(verts, p)?;
    match kind {
        NodalKind::P1 => Ok((lam.to_vec(), dlam.to_vec())),
        NodalKind::P2 => {
            let four = T::of(4.0);
            let mut values = Vec::with_capacity(6);
            let mut grads = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(lam[i] * (T::of(2.0) * lam[i] - T::one()));
                let f = four * lam[i] - T::one();
                grads.push([f * dlam[i][0], f * dlam[i][1]]);
            }
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                values.push(four * lam[i] * lam[j]);
                grads.push([
                    four * (lam[i] * dlam[j][0] + lam[j] * dlam[i][0]),
                    four * (lam[i] * dlam[j][1] + lam[j] * dlam[i][1]),
                ]);
            }
            Ok((values, grads))
        }
    }
}

/// RT0 basis vectors and divergences at a point, for a triangle with the
/// given per-edge orientation signs (edge `j` opposite vertex `j`).
pub fn eval_rt0<T: Scalar>(
    verts: &[[T; 2]; 3],
    signs: [T; 3],
    p: [T; 2],
) -> Result<([[T; 2]; 3], [T; 3])> {
    let area = check_not_degenerate(verts)?;
    let mut values = [[T::zero(); 2]; 3];
    let mut divs = [T::zero(); 3];
    for j in 0..3 {
        let (a, b) = (verts[(j + 1) % 3], verts[(j + 2) % 3]);
        let lj = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let coef = signs[j] * lj / (T::of(2.0) * area);
        values[j] = [coef * (p[0] - verts[j][0]), coef * (p[1] - verts[j][1])];
        divs[j] = signs[j] * lj / area;
    }
    Ok((values, divs))
}

/// Tabulated nodal basis at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct NodalTable<T> {
    /// `values[q][i]`
    pub values: Vec<Vec<T>>,
    /// `grads[q][i]`
    pub grads: Vec<Vec<[T; 2]>>,
}

pub fn tabulate_nodal<T: Scalar>(
    kind: NodalKind,
    verts: &[[T; 2]; 3],
    rule: &QuadratureRule<T>,
) -> Result<NodalTable<T>> {
    let mut values = Vec::with_capacity(rule.points.len());
    let mut grads = Vec::with_capacity(rule.points.len());
    for p in rule.points_xy(verts) {
        let (v, g) = eval_nodal(kind, verts, p)?;
        values.push(v);
        grads.push(g);
    }
    Ok(NodalTable { values, grads })
}

/// Tabulated RT0 basis at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Rt0Table<T> {
    /// `values[q][j]`
    pub values: Vec<[[T; 2]; 3]>,
    /// constant on the element
    pub divs: [T; 3],
}

pub fn tabulate_rt0<T: Scalar>(
    verts: &[[T; 2]; 3],
    signs: [T; 3],
    rule: &QuadratureRule<T>,
) -> Result<Rt0Table<T>> {
    let mut values = Vec::with_capacity(rule.points.len());
    let mut divs = [T::zero(); 3];
    for p in rule.points_xy(verts) {
        let (v, d) = eval_rt0(verts, signs, p)?;
        values.push(v);
        divs = d;
    }
    Ok(Rt0Table { values, divs })
}
