//! Bulk finite element spaces: P2 velocity, P1 / P1+P0 pressure with an
//! optional enrichment by the characteristic function of the inner phase,
//! point location, interpolation and transfer between meshes.

use crate::error::{Error, Result};
use crate::geom::{self, BBox, Point};
use crate::interface::InterfacePolygon;
use crate::mesh::{BoundaryTag, BulkMesh, ElementLabel};
use std::collections::HashMap;

/// Degree-5 rule on triangles: (barycentric coordinates, weight relative to area).
pub fn quadrature7() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let b1 = (9.0 + 2.0 * s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let b2 = (9.0 - 2.0 * s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([b1, a1, a1], w1),
        ([a1, b1, a1], w1),
        ([a1, a1, b1], w1),
        ([b2, a2, a2], w2),
        ([a2, b2, a2], w2),
        ([a2, a2, b2], w2),
    ]
}

/// Gauss-Legendre on [0, 1]: (abscissa, weight).
pub fn gauss3_unit() -> [(f64, f64); 3] {
    let r = (0.6f64).sqrt();
    [(0.5 * (1.0 - r), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 * (1.0 + r), 5.0 / 18.0)]
}

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// Gradients of the barycentric coordinates on a triangle.
pub fn bary_gradients(p: &[Point; 3]) -> [Point; 3] {
    let det = geom::orient(p[0], p[1], p[2]);
    let g = |a: Point, b: Point| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    [g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])]
}

pub fn p2_gradients(l: [f64; 3], gl: &[Point; 3]) -> [Point; 6] {
    let lin = |i: usize| geom::scale(4.0 * l[i] - 1.0, gl[i]);
    let mix = |i: usize, j: usize| geom::scale(4.0, geom::add(geom::scale(l[i], gl[j]), geom::scale(l[j], gl[i])));
    [lin(0), lin(1), lin(2), mix(1, 2), mix(2, 0), mix(0, 1)]
}

/// Which velocity components of a node are prescribed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeConstraint {
    Free,
    Dirichlet,
    /// Normal component (given axis) vanishes.
    Normal(usize),
}

/// Continuous piecewise quadratic vector fields; dof index = 2 * node + component.
#[derive(Clone, Debug)]
pub struct P2Space {
    pub generation: u64,
    pub nodes: Vec<Point>,
    pub tri_nodes: Vec<[usize; 6]>,
    pub n_vertices: usize,
    pub constraint: Vec<NodeConstraint>,
}

impl P2Space {
    pub fn new(mesh: &BulkMesh) -> Self {
        let nv = mesh.vertices.len();
        let mut nodes = mesh.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut tri_nodes = Vec::with_capacity(mesh.num_triangles());
        for t in &mesh.triangles {
            let mut e = |a: usize, b: usize| {
                *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    nodes.push(geom::lerp(mesh.vertices[a], mesh.vertices[b], 0.5));
                    nodes.len() - 1
                })
            };
            let n3 = e(t[1], t[2]);
            let n4 = e(t[2], t[0]);
            let n5 = e(t[0], t[1]);
            tri_nodes.push([t[0], t[1], t[2], n3, n4, n5]);
        }
        let mut constraint = vec![NodeConstraint::Free; nodes.len()];
        let mut set = |n: usize, c: NodeConstraint| {
            constraint[n] = match (constraint[n], c) {
                (NodeConstraint::Dirichlet, _) | (_, NodeConstraint::Dirichlet) => NodeConstraint::Dirichlet,
                (NodeConstraint::Normal(a), NodeConstraint::Normal(b)) if a != b => NodeConstraint::Dirichlet,
                _ => c,
            };
        };
        for &(a, b, tag) in &mesh.boundary_edges {
            let m = mid[&(a.min(b), a.max(b))];
            let c = match tag {
                BoundaryTag::Dirichlet => NodeConstraint::Dirichlet,
                BoundaryTag::FreeSlip => {
                    let d = geom::sub(mesh.vertices[b], mesh.vertices[a]);
                    NodeConstraint::Normal(if d[0].abs() < d[1].abs() { 0 } else { 1 })
                }
            };
            for n in [a, b, m] {
                set(n, c);
            }
        }
        Self { generation: mesh.generation, nodes, tri_nodes, n_vertices: nv, constraint }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    /// True for dofs fixed by boundary conditions.
    pub fn fixed_dofs(&self) -> Vec<bool> {
        let mut f = vec![false; self.n_dofs()];
        for (n, c) in self.constraint.iter().enumerate() {
            match c {
                NodeConstraint::Free => {}
                NodeConstraint::Dirichlet => {
                    f[2 * n] = true;
                    f[2 * n + 1] = true;
                }
                NodeConstraint::Normal(r) => f[2 * n + r] = true,
            }
        }
        f
    }

    /// Boundary values: I2 g on Dirichlet nodes, zero normal part on free-slip nodes.
    pub fn boundary_values(&self, g: impl Fn(Point) -> Point) -> Vec<f64> {
        let mut v = vec![0.0; self.n_dofs()];
        for (n, c) in self.constraint.iter().enumerate() {
            if *c == NodeConstraint::Dirichlet {
                let x = g(self.nodes[n]);
                v[2 * n] = x[0];
                v[2 * n + 1] = x[1];
            }
        }
        v
    }

    pub fn interpolate(&self, f: impl Fn(Point) -> Point) -> Vec<f64> {
        let mut v = vec![0.0; self.n_dofs()];
        for (n, p) in self.nodes.iter().enumerate() {
            let x = f(*p);
            v[2 * n] = x[0];
            v[2 * n + 1] = x[1];
        }
        v
    }

    pub fn eval(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> Point {
        let phi = p2_values(bary);
        let mut u = [0.0; 2];
        for (i, &n) in self.tri_nodes[t].iter().enumerate() {
            u[0] += phi[i] * coeffs[2 * n];
            u[1] += phi[i] * coeffs[2 * n + 1];
        }
        u
    }

    pub fn eval_at(&self, mesh: &BulkMesh, coeffs: &[f64], p: Point) -> Result<Point> {
        let (t, l) = locate_point(mesh, p)?;
        Ok(self.eval(coeffs, t, l))
    }
}

/// Base pressure space kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureKind {
    P1,
    P1P0,
}

/// Pressure dofs: P1 vertex values, then P0 element values (if any), then the
/// enrichment coefficient (if any).
#[derive(Clone, Debug)]
pub struct PressureSpace {
    pub generation: u64,
    pub kind: PressureKind,
    pub xfem: bool,
    pub n_p1: usize,
    pub n_p0: usize,
}

impl PressureSpace {
    pub fn new(mesh: &BulkMesh, kind: PressureKind, xfem: bool) -> Self {
        let n_p0 = if kind == PressureKind::P1P0 { mesh.num_triangles() } else { 0 };
        Self { generation: mesh.generation, kind, xfem, n_p1: mesh.vertices.len(), n_p0 }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_p1 + self.n_p0 + usize::from(self.xfem)
    }

    pub fn xfem_dof(&self) -> Option<usize> {
        self.xfem.then(|| self.n_p1 + self.n_p0)
    }

    /// Value at a point of triangle t, excluding the enrichment part.
    pub fn eval_base(&self, mesh: &BulkMesh, coeffs: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        let tri = mesh.triangles[t];
        let mut p = bary[0] * coeffs[tri[0]] + bary[1] * coeffs[tri[1]] + bary[2] * coeffs[tri[2]];
        if self.n_p0 > 0 {
            p += coeffs[self.n_p1 + t];
        }
        p
    }
}

/// A coefficient vector bound to a mesh generation.
#[derive(Clone, Debug, PartialEq)]
pub struct FeFunction {
    pub generation: u64,
    pub values: Vec<f64>,
}

impl FeFunction {
    pub fn evaluate(&self, space: &P2Space, t: usize, bary: [f64; 3]) -> Result<Point> {
        if self.generation != space.generation {
            return Err(Error::StaleGeneration { expected: space.generation, found: self.generation });
        }
        Ok(space.eval(&self.values, t, bary))
    }
}

/// Containing triangle and barycentric coordinates; ties on shared edges go
/// to the lowest triangle id.
pub fn locate_point(mesh: &BulkMesh, p: Point) -> Result<(usize, [f64; 3])> {
    let scale = mesh.domain.width() + mesh.domain.height();
    let tol = 1e-12;
    let bb = BBox::of(&[p]).inflate(tol * scale);
    let mut best: Option<(usize, [f64; 3], f64)> = None;
    for t in mesh.grid.query(&bb) {
        let q = mesh.tri_points(t);
        let l = geom::barycentric(q[0], q[1], q[2], p);
        let m = l[0].min(l[1]).min(l[2]);
        if m >= -tol {
            return Ok((t, l));
        }
        if best.map(|b| m > b.2).unwrap_or(true) {
            best = Some((t, l, m));
        }
    }
    // points within round-off of the boundary of a large element
    match best {
        Some((t, l, m)) if m >= -1e-9 && mesh.domain.contains(p, tol * scale) => Ok((t, l)),
        _ => Err(Error::PointOutside(p[0], p[1])),
    }
}

/// Locations of all interface vertices.
pub fn locate_all(mesh: &BulkMesh, pts: &[Point]) -> Result<Vec<(usize, [f64; 3])>> {
    pts.iter().map(|&p| locate_point(mesh, p)).collect()
}

fn same_mesh(a: &BulkMesh, b: &BulkMesh) -> bool {
    a.triangles == b.triangles && a.vertices == b.vertices
}

/// Velocity interpolation I2 of a field given on another mesh.
pub fn transfer_velocity(old_mesh: &BulkMesh, old: &P2Space, coeffs: &[f64], new_mesh: &BulkMesh, new: &P2Space) -> Result<Vec<f64>> {
    if same_mesh(old_mesh, new_mesh) {
        return Ok(coeffs.to_vec());
    }
    let mut out = vec![0.0; new.n_dofs()];
    for (n, &p) in new.nodes.iter().enumerate() {
        let u = old.eval_at(old_mesh, coeffs, p)?;
        out[2 * n] = u[0];
        out[2 * n + 1] = u[1];
    }
    Ok(out)
}

/// Centroids of the nine congruent sub-triangles, in barycentric coordinates.
fn sub_centroids() -> [[f64; 3]; 9] {
    let mut out = [[0.0; 3]; 9];
    let mut k = 0;
    for i in 0..3 {
        for j in 0..3 - i {
            let (a, b) = ((i as f64 + 1.0 / 3.0) / 3.0, (j as f64 + 1.0 / 3.0) / 3.0);
            out[k] = [1.0 - a - b, a, b];
            k += 1;
        }
    }
    for i in 0..2 {
        for j in 0..2 - i {
            let (a, b) = ((i as f64 + 2.0 / 3.0) / 3.0, (j as f64 + 2.0 / 3.0) / 3.0);
            out[k] = [1.0 - a - b, a, b];
            k += 1;
        }
    }
    out
}

/// Elementwise mean projection I0 of a piecewise constant field, sampled at
/// nine sub-triangle centroids.
pub fn transfer_p0(old_mesh: &BulkMesh, values: &[f64], new_mesh: &BulkMesh) -> Result<Vec<f64>> {
    if same_mesh(old_mesh, new_mesh) {
        return Ok(values.to_vec());
    }
    let sc = sub_centroids();
    (0..new_mesh.num_triangles())
        .map(|t| {
            let p = new_mesh.tri_points(t);
            let mut s = 0.0;
            for l in &sc {
                let x = [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]];
                s += values[locate_point(old_mesh, x)?.0];
            }
            Ok(s / 9.0)
        })
        .collect()
}

/// Entries (d_r phi_a, chi of the inner phase) for all velocity dofs, by
/// clipping the interface polygon against cut triangles.
pub fn xfem_column(mesh: &BulkMesh, space: &P2Space, poly: &InterfacePolygon, labels: &[ElementLabel]) -> Vec<f64> {
    let mut col = vec![0.0; space.n_dofs()];
    let tol = 1e-14 * mesh.domain.area();
    for t in 0..mesh.num_triangles() {
        let p = mesh.tri_points(t);
        let (area, c) = match labels[t] {
            ElementLabel::Exterior => continue,
            ElementLabel::Interior => (mesh.area(t), mesh.barycenter(t)),
            ElementLabel::Interfacial => {
                let piece = geom::clip_polygon_by_triangle(&poly.vertices, &p);
                let (a, m) = geom::polygon_moments(&piece);
                if a.abs() <= tol {
                    continue;
                }
                (a, geom::scale(1.0 / a, m))
            }
        };
        // gradients of P2 basis functions are linear: exact by the centroid value
        let gl = bary_gradients(&p);
        let l = geom::barycentric(p[0], p[1], p[2], c);
        let g = p2_gradients(l, &gl);
        for (i, &n) in space.tri_nodes[t].iter().enumerate() {
            col[2 * n] += area * g[i][0];
            col[2 * n + 1] += area * g[i][1];
        }
    }
    col
}

/// Area of the inner phase inside the mesh, by the same clipping as the
/// enrichment column.
pub fn inner_phase_area(mesh: &BulkMesh, poly: &InterfacePolygon, labels: &[ElementLabel]) -> f64 {
    let mut area = 0.0;
    for t in 0..mesh.num_triangles() {
        area += match labels[t] {
            ElementLabel::Exterior => 0.0,
            ElementLabel::Interior => mesh.area(t),
            ElementLabel::Interfacial => geom::polygon_signed_area(&geom::clip_polygon_by_triangle(&poly.vertices, &mesh.tri_points(t))),
        };
    }
    area
}

/// The same entries by the divergence theorem: boundary flux of phi_a e_r
/// over each clipped piece, with Simpson's rule (exact for quadratics).
pub fn xfem_column_flux(mesh: &BulkMesh, space: &P2Space, poly: &InterfacePolygon, labels: &[ElementLabel]) -> Vec<f64> {
    let mut col = vec![0.0; space.n_dofs()];
    for t in 0..mesh.num_triangles() {
        let p = mesh.tri_points(t);
        let piece: Vec<Point> = match labels[t] {
            ElementLabel::Exterior => continue,
            ElementLabel::Interior => p.to_vec(),
            ElementLabel::Interfacial => geom::clip_polygon_by_triangle(&poly.vertices, &p),
        };
        let n = piece.len();
        for e in 0..n {
            let (a, b) = (piece[e], piece[(e + 1) % n]);
            let d = geom::sub(b, a);
            // outward normal times length for a CCW polygon
            let nl = [d[1], -d[0]];
            for (s, w) in [(0.0, 1.0 / 6.0), (0.5, 4.0 / 6.0), (1.0, 1.0 / 6.0)] {
                let x = geom::lerp(a, b, s);
                let phi = p2_values(geom::barycentric(p[0], p[1], p[2], x));
                for (i, &node) in space.tri_nodes[t].iter().enumerate() {
                    col[2 * node] += w * phi[i] * nl[0];
                    col[2 * node + 1] += w * phi[i] * nl[1];
                }
            }
        }
    }
    col
}

/// Sparse rows of N with N[k][(2a + r)] = integral over the polygon of
/// chi_k nu_r phi_a, computed exactly by splitting segments at element edges.
pub fn interface_normal_matrix(mesh: &BulkMesh, space: &P2Space, poly: &InterfacePolygon) -> Result<Vec<Vec<(usize, f64)>>> {
    let k = poly.len();
    let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
    for j in 0..k {
        let (ia, ib) = poly.seg(j);
        let (a, b) = poly.seg_points(j);
        let nu = poly.normal(j);
        let len = poly.seg_length(j);
        let mut cuts = vec![0.0, 1.0];
        for t in mesh.grid.query(&BBox::of(&[a, b])) {
            if let Some((s0, s1)) = geom::clip_segment_to_triangle(a, b, &mesh.tri_points(t)) {
                cuts.push(s0.clamp(0.0, 1.0));
                cuts.push(s1.clamp(0.0, 1.0));
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 - s0 < 1e-14 {
                continue;
            }
            let (t, _) = locate_point(mesh, geom::lerp(a, b, 0.5 * (s0 + s1)))?;
            let p = mesh.tri_points(t);
            for (g, wt) in gauss3_unit() {
                let s = s0 + g * (s1 - s0);
                let x = geom::lerp(a, b, s);
                let phi = p2_values(geom::barycentric(p[0], p[1], p[2], x));
                let dl = wt * (s1 - s0) * len;
                for (chi, row) in [(1.0 - s, ia), (s, ib)] {
                    for (i, &node) in space.tri_nodes[t].iter().enumerate() {
                        let v = dl * chi * phi[i];
                        *rows[row].entry(2 * node).or_default() += v * nu[0];
                        *rows[row].entry(2 * node + 1).or_default() += v * nu[1];
                    }
                }
            }
        }
    }
    Ok(rows
        .into_iter()
        .map(|m| {
            let mut v: Vec<(usize, f64)> = m.into_iter().collect();
            v.sort_by_key(|e| e.0);
            v
        })
        .collect())
}

/// Outward flux of a P2 field over the boundary of the domain (Simpson, exact).
pub fn boundary_flux(mesh: &BulkMesh, space: &P2Space, coeffs: &[f64]) -> f64 {
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    for tn in &space.tri_nodes {
        for (i, m) in [(1usize, 3usize), (2, 4), (0, 5)] {
            let (a, b) = (tn[i], tn[(i + 1) % 3]);
            mid.insert((a.min(b), a.max(b)), tn[m]);
        }
    }
    let mut flux = 0.0;
    for &(a, b, _) in &mesh.boundary_edges {
        let m = mid[&(a.min(b), a.max(b))];
        let d = geom::sub(mesh.vertices[b], mesh.vertices[a]);
        // boundary edges inherit the counterclockwise element orientation
        let nl = [d[1], -d[0]];
        for (n, w) in [(a, 1.0 / 6.0), (m, 4.0 / 6.0), (b, 1.0 / 6.0)] {
            flux += w * (coeffs[2 * n] * nl[0] + coeffs[2 * n + 1] * nl[1]);
        }
    }
    flux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;

    #[test]
    fn quadrature_weights_sum_to_one() {
        let s: f64 = quadrature7().iter().map(|q| q.1).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn locate_reference_point() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([0.0, 1.0], [0.0, 1.0]), 1).unwrap();
        let (t, l) = locate_point(&m, [0.75, 0.25]).unwrap();
        let p = m.tri_points(t);
        let x = [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]];
        assert!(geom::dist(x, [0.75, 0.25]) < 1e-15);
        assert!(locate_point(&m, [1.5, 0.5]).is_err());
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([0.0, 1.0], [0.0, 1.0]), 3).unwrap();
        let s = P2Space::new(&m);
        let u = s.interpolate(|p| [p[0] * p[0], p[0] * p[1] - 2.0 * p[1]]);
        let x = s.eval_at(&m, &u, [0.37, 0.61]).unwrap();
        assert!((x[0] - 0.37 * 0.37).abs() < 1e-14);
        assert!((x[1] - (0.37 * 0.61 - 1.22)).abs() < 1e-14);
    }

    #[test]
    fn expansion_field_column() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([-1.0, 1.0], [-1.0, 1.0]), 6).unwrap();
        let s = P2Space::new(&m);
        let poly = InterfacePolygon::make_circle([0.05, -0.02], 0.45, 24);
        let labels = m.classify_elements(&poly).unwrap();
        let col = xfem_column(&m, &s, &poly, &labels);
        let u = s.interpolate(|p| p);
        let v: f64 = col.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((v - 2.0 * poly.signed_area()).abs() < 1e-12, "{v}");
        let col2 = xfem_column_flux(&m, &s, &poly, &labels);
        let diff = col.iter().zip(&col2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn normal_matrix_integrates_constants() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([-1.0, 1.0], [-1.0, 1.0]), 5).unwrap();
        let s = P2Space::new(&m);
        let poly = InterfacePolygon::make_circle([0.0, 0.0], 0.5, 16);
        let n = interface_normal_matrix(&m, &s, &poly).unwrap();
        // constant field e_1 against chi_k nu: sum over k gives the integral of nu_1 = 0
        let u = s.interpolate(|p| [1.0 + p[0], 0.0]);
        let total: f64 = n.iter().map(|r| r.iter().map(|(d, v)| v * u[*d]).sum::<f64>()).sum();
        // integral of (1 + x) nu_1 over the polygon equals its enclosed area
        assert!((total - poly.signed_area()).abs() < 1e-13, "{total}");
    }
}
