//! Structured triangulations of rectangular domains.
//!
//! Three cell patterns are supported: criss (two triangles per cell, fixed
//! diagonal), crisscross (four triangles around a cell center) and union jack
//! (criss with the diagonal direction alternating in a checker arrangement).
//!
//! Edges carry a global orientation: the unit normal of edge `j` equals the
//! outward normal of the incident triangle with the smaller global index, so
//! boundary edges always point outward. The per-triangle sign `s_mj` is `+1`
//! for that triangle and `-1` for the neighbour, which is what makes the
//! edge-flux degrees of freedom single-valued across elements.

use crate::{Error, Result, Scalar};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Cell subdivision pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshPattern {
    /// Two triangles per cell, diagonal from bottom-left to top-right.
    Criss,
    /// Four triangles per cell meeting at the cell center.
    Crisscross,
    /// Criss with the diagonal direction alternating per cell parity.
    UnionJack,
}

impl MeshPattern {
    pub const ALL: [MeshPattern; 3] = [
        MeshPattern::Criss,
        MeshPattern::Crisscross,
        MeshPattern::UnionJack,
    ];

    pub fn triangles_per_cell(self) -> usize {
        match self {
            MeshPattern::Crisscross => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for MeshPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MeshPattern::Criss => "criss",
            MeshPattern::Crisscross => "crisscross",
            MeshPattern::UnionJack => "unionjack",
        };
        f.write_str(s)
    }
}

impl FromStr for MeshPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "criss" => Ok(MeshPattern::Criss),
            "crisscross" => Ok(MeshPattern::Crisscross),
            "unionjack" | "union_jack" | "union jack" => Ok(MeshPattern::UnionJack),
            other => Err(Error::InvalidMeshSpec(format!("unknown pattern `{other}`"))),
        }
    }
}

/// Named sides of the rectangle, used for boundary condition assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn bit(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
            Side::Bottom => 4,
            Side::Top => 8,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        };
        f.write_str(s)
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(Error::UnknownSide(other.to_string())),
        }
    }
}

/// Parameters of a structured mesh.
#[derive(Debug, Clone, Copy)]
pub struct MeshSpec<T> {
    pub width: T,
    pub height: T,
    pub nx: usize,
    pub ny: usize,
    pub pattern: MeshPattern,
}

impl<T: Scalar> MeshSpec<T> {
    pub fn new(width: T, height: T, nx: usize, ny: usize, pattern: MeshPattern) -> Self {
        Self {
            width,
            height,
            nx,
            ny,
            pattern,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > T::zero()) || !(self.height > T::zero()) {
            return Err(Error::InvalidMeshSpec(format!(
                "domain must have positive dimensions, got {} x {}",
                self.width, self.height
            )));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidMeshSpec(
                "cell counts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Triangulation with oriented edge topology.
///
/// Immutable after generation; all fields are plain data safe for shared
/// reads. Local edge `i` of a triangle is opposite local vertex `i`, and
/// vertex order is counterclockwise.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub spec: MeshSpec<T>,
    pub nodes: Vec<[T; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub tri_to_edge: Vec<[usize; 3]>,
    /// Incident triangles, smaller global index first.
    pub edge_to_tri: Vec<(usize, Option<usize>)>,
    /// Globally oriented unit normal of each edge.
    pub edge_normal: Vec<[T; 2]>,
    /// `s_mj` per (triangle, local edge).
    pub sign: Vec<[i8; 3]>,
    pub edge_length: Vec<T>,
    pub tri_area: Vec<T>,
    /// Boundary side of each edge (`None` for interior edges).
    pub edge_side: Vec<Option<Side>>,
    /// Bitset of sides each node lies on.
    node_side_bits: Vec<u8>,
}

/// Generates the structured triangulation described by `spec`.
///
/// Numbering is deterministic: grid nodes row-major bottom to top, cell
/// centers (crisscross) appended after the grid, triangles enumerated cell by
/// cell, edges in first-encounter order over triangle scan.
pub fn generate<T: Scalar>(spec: MeshSpec<T>) -> Result<Mesh<T>> {
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let fx = |i: usize| spec.width * T::of(i as f64) / T::of(nx as f64);
    let fy = |i: usize| spec.height * T::of(i as f64) / T::of(ny as f64);
    let half = T::of(0.5);

    let mut nodes: Vec<[T; 2]> = Vec::with_capacity((nx + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..=nx {
            nodes.push([fx(ix), fy(iy)]);
        }
    }
    let grid = |ix: usize, iy: usize| iy * (nx + 1) + ix;
    let n_grid = nodes.len();
    if spec.pattern == MeshPattern::Crisscross {
        for iy in 0..ny {
            for ix in 0..nx {
                nodes.push([(fx(ix) + fx(ix + 1)) * half, (fy(iy) + fy(iy + 1)) * half]);
            }
        }
    }

    let mut triangles: Vec<[usize; 3]> =
        Vec::with_capacity(nx * ny * spec.pattern.triangles_per_cell());
    for iy in 0..ny {
        for ix in 0..nx {
            let a = grid(ix, iy);
            let b = grid(ix + 1, iy);
            let c = grid(ix + 1, iy + 1);
            let d = grid(ix, iy + 1);
            match spec.pattern {
                MeshPattern::Criss => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                MeshPattern::UnionJack => {
                    if (ix + iy) % 2 == 0 {
                        triangles.push([a, b, c]);
                        triangles.push([a, c, d]);
                    } else {
                        triangles.push([a, b, d]);
                        triangles.push([b, c, d]);
                    }
                }
                MeshPattern::Crisscross => {
                    let e = n_grid + iy * nx + ix;
                    triangles.push([a, b, e]);
                    triangles.push([b, c, e]);
                    triangles.push([c, d, e]);
                    triangles.push([d, a, e]);
                }
            }
        }
    }

    // edge discovery in triangle scan order; local edge i is opposite vertex i
    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut edge_to_tri: Vec<(usize, Option<usize>)> = Vec::new();
    let mut tri_to_edge: Vec<[usize; 3]> = Vec::with_capacity(triangles.len());
    for (m, tri) in triangles.iter().enumerate() {
        let mut te = [0usize; 3];
        for i in 0..3 {
            let p = tri[(i + 1) % 3];
            let q = tri[(i + 2) % 3];
            let key = (p.min(q), p.max(q));
            let e = *edge_of.entry(key).or_insert_with(|| {
                edges.push([p, q]);
                edge_to_tri.push((m, None));
                edges.len() - 1
            });
            if edge_to_tri[e].0 != m && edge_to_tri[e].1.is_none() {
                edge_to_tri[e].1 = Some(m);
            }
            te[i] = e;
        }
        tri_to_edge.push(te);
    }

    let mut tri_area = Vec::with_capacity(triangles.len());
    for (m, tri) in triangles.iter().enumerate() {
        let [p0, p1, p2] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
        let area = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])) * half;
        if !(area > T::zero()) {
            return Err(Error::DegenerateTriangle {
                tri: m,
                area: area.to_f64_lossy(),
            });
        }
        tri_area.push(area);
    }

    let mut edge_length = Vec::with_capacity(edges.len());
    for e in &edges {
        let (p, q) = (nodes[e[0]], nodes[e[1]]);
        edge_length.push(((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt());
    }

    // global orientation: ê_j = outward normal of the first (smallest-index)
    // incident triangle, computed from that triangle's ccw vertex order
    let mut edge_normal = vec![[T::zero(); 2]; edges.len()];
    let mut sign = vec![[0i8; 3]; triangles.len()];
    for (m, te) in tri_to_edge.iter().enumerate() {
        for (i, &e) in te.iter().enumerate() {
            let p = nodes[triangles[m][(i + 1) % 3]];
            let q = nodes[triangles[m][(i + 2) % 3]];
            let owner = edge_to_tri[e].0 == m;
            sign[m][i] = if owner { 1 } else { -1 };
            if owner {
                // ccw traversal (p -> q): outward normal is the -90 degree rotation
                let len = edge_length[e];
                edge_normal[e] = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
            }
        }
    }

    // boundary classification by geometric tolerance
    let diag = (spec.width * spec.width + spec.height * spec.height).sqrt();
    let tol = T::of(1e-9) * diag;
    let on_side = |p: [T; 2], side: Side| -> bool {
        match side {
            Side::Left => p[0].abs() <= tol,
            Side::Right => (p[0] - spec.width).abs() <= tol,
            Side::Bottom => p[1].abs() <= tol,
            Side::Top => (p[1] - spec.height).abs() <= tol,
        }
    };
    let mut node_side_bits = vec![0u8; nodes.len()];
    for (n, &p) in nodes.iter().enumerate() {
        for side in Side::ALL {
            if on_side(p, side) {
                node_side_bits[n] |= side.bit();
            }
        }
    }
    let mut edge_side = vec![None; edges.len()];
    for (e, pair) in edges.iter().enumerate() {
        if edge_to_tri[e].1.is_some() {
            continue;
        }
        let found = Side::ALL
            .into_iter()
            .find(|&s| on_side(nodes[pair[0]], s) && on_side(nodes[pair[1]], s));
        match found {
            Some(s) => edge_side[e] = Some(s),
            None => {
                return Err(Error::InvalidMeshSpec(format!(
                    "boundary edge {e} lies on no domain side"
                )))
            }
        }
    }

    Ok(Mesh {
        spec,
        nodes,
        triangles,
        edges,
        tri_to_edge,
        edge_to_tri,
        edge_normal,
        sign,
        edge_length,
        tri_area,
        edge_side,
        node_side_bits,
    })
}

impl<T: Scalar> Mesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge indices lying on a given boundary side.
    pub fn boundary_edges(&self, side: Side) -> Vec<usize> {
        (0..self.n_edges())
            .filter(|&e| self.edge_side[e] == Some(side))
            .collect()
    }

    pub fn node_on_side(&self, node: usize, side: Side) -> bool {
        self.node_side_bits[node] & side.bit() != 0
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_to_tri[e].1.is_none()
    }

    /// Vertex coordinates of a triangle.
    pub fn tri_coords(&self, m: usize) -> [[T; 2]; 3] {
        let t = self.triangles[m];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn edge_midpoint(&self, e: usize) -> [T; 2] {
        let [a, b] = self.edges[e];
        let half = T::of(0.5);
        [
            (self.nodes[a][0] + self.nodes[b][0]) * half,
            (self.nodes[a][1] + self.nodes[b][1]) * half,
        ]
    }

    pub fn tri_centroid(&self, m: usize) -> [T; 2] {
        let [p0, p1, p2] = self.tri_coords(m);
        let third = T::of(1.0 / 3.0);
        [
            (p0[0] + p1[0] + p2[0]) * third,
            (p0[1] + p1[1] + p2[1]) * third,
        ]
    }

    /// Signs of the three edges of triangle `m` as scalars.
    pub fn tri_signs(&self, m: usize) -> [T; 3] {
        let s = self.sign[m];
        [T::of(s[0] as f64), T::of(s[1] as f64), T::of(s[2] as f64)]
    }

    pub fn shortest_edge(&self) -> T {
        self.edge_length.iter().copied().fold(T::infinity(), T::min)
    }

    /// Index of the node nearest to a point.
    pub fn nearest_node(&self, p: [T; 2]) -> usize {
        let mut best = (T::infinity(), 0usize);
        for (i, &q) in self.nodes.iter().enumerate() {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Index of the triangle whose centroid is nearest to a point.
    pub fn nearest_triangle(&self, p: [T; 2]) -> usize {
        let mut best = (T::infinity(), 0usize);
        for m in 0..self.n_triangles() {
            let c = self.tri_centroid(m);
            let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, m);
            }
        }
        best.1
    }

    /// Index of the edge whose midpoint is nearest to a point.
    pub fn nearest_edge(&self, p: [T; 2]) -> usize {
        let mut best = (T::infinity(), 0usize);
        for e in 0..self.n_edges() {
            let c = self.edge_midpoint(e);
            let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, e);
            }
        }
        best.1
    }

    /// Plain-text dump of the node, triangle and edge tables for debugging.
    pub fn export_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "# nodes {}", self.n_nodes()).unwrap();
        writeln!(s, "# id x y sides").unwrap();
        for (i, p) in self.nodes.iter().enumerate() {
            let sides: Vec<String> = Side::ALL
                .into_iter()
                .filter(|&sd| self.node_on_side(i, sd))
                .map(|sd| sd.to_string())
                .collect();
            writeln!(s, "{} {:.12e} {:.12e} {}", i, p[0], p[1], sides.join("+")).unwrap();
        }
        writeln!(s, "# triangles {}", self.n_triangles()).unwrap();
        writeln!(s, "# id v0 v1 v2 e0 e1 e2 s0 s1 s2 area").unwrap();
        for m in 0..self.n_triangles() {
            let t = self.triangles[m];
            let e = self.tri_to_edge[m];
            let sg = self.sign[m];
            writeln!(
                s,
                "{} {} {} {} {} {} {} {} {} {} {:.12e}",
                m, t[0], t[1], t[2], e[0], e[1], e[2], sg[0], sg[1], sg[2], self.tri_area[m]
            )
            .unwrap();
        }
        writeln!(s, "# edges {}", self.n_edges()).unwrap();
        writeln!(s, "# id n0 n1 length nx ny tri0 tri1 side").unwrap();
        for e in 0..self.n_edges() {
            let [a, b] = self.edges[e];
            let (t0, t1) = self.edge_to_tri[e];
            writeln!(
                s,
                "{} {} {} {:.12e} {:.12e} {:.12e} {} {} {}",
                e,
                a,
                b,
                self.edge_length[e],
                self.edge_normal[e][0],
                self.edge_normal[e][1],
                t0,
                t1.map_or(-1i64, |t| t as i64),
                self.edge_side[e].map_or("-".to_string(), |sd| sd.to_string()),
            )
            .unwrap();
        }
        s
    }
}
