//! Conforming triangulations of rectangular domains, interface-band refinement
//! by newest-vertex bisection, and element classification.
//!
//! Local vertex 0 of every triangle is its newest vertex; the edge (1, 2)
//! opposite to it is the refinement edge.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, BBox, Point};
use crate::interface::InterfacePolygon;
use crate::params::PhysicalParams;

/// Axis-aligned rectangle, optionally with a rectangular hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default)]
    pub hole: Option<[[f64; 2]; 2]>,
    /// Vertical walls carry free-slip conditions instead of Dirichlet data.
    #[serde(default)]
    pub free_slip_sides: bool,
}

impl Domain {
    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Self {
        Self { x, y, hole: None, free_slip_sides: false }
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn area(&self) -> f64 {
        let mut a = self.width() * self.height();
        if let Some(h) = self.hole {
            a -= (h[0][1] - h[0][0]) * (h[1][1] - h[1][0]);
        }
        a
    }

    /// Mesh size for `n` subdivisions of the shorter side.
    pub fn mesh_size(&self, n: usize) -> f64 {
        self.width().min(self.height()) / n as f64
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let inside_box =
            p[0] >= self.x[0] - tol && p[0] <= self.x[1] + tol && p[1] >= self.y[0] - tol && p[1] <= self.y[1] + tol;
        let in_hole = self
            .hole
            .map(|h| p[0] > h[0][0] + tol && p[0] < h[0][1] - tol && p[1] > h[1][0] + tol && p[1] < h[1][1] - tol)
            .unwrap_or(false);
        inside_box && !in_hole
    }

    fn tag_edge(&self, a: Point, b: Point) -> BoundaryTag {
        let tol = 1e-12 * (self.width() + self.height());
        let on_x = |x: f64| (a[0] - x).abs() < tol && (b[0] - x).abs() < tol;
        if self.free_slip_sides && (on_x(self.x[0]) || on_x(self.x[1])) {
            BoundaryTag::FreeSlip
        } else {
            BoundaryTag::Dirichlet
        }
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        let tol = 1e-12 * (self.width() + self.height());
        let outer = (p[0] - self.x[0]).abs() < tol
            || (p[0] - self.x[1]).abs() < tol
            || (p[1] - self.y[0]).abs() < tol
            || (p[1] - self.y[1]).abs() < tol;
        let hole = self.hole.map(|h| {
            let inx = p[0] >= h[0][0] - tol && p[0] <= h[0][1] + tol;
            let iny = p[1] >= h[1][0] - tol && p[1] <= h[1][1] + tol;
            inx && iny
                && ((p[0] - h[0][0]).abs() < tol
                    || (p[0] - h[0][1]).abs() < tol
                    || (p[1] - h[1][0]).abs() < tol
                    || (p[1] - h[1][1]).abs() < tol)
        });
        outer || hole.unwrap_or(false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Dirichlet,
    FreeSlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementLabel {
    Interior,
    Exterior,
    Interfacial,
}

pub type ElementClassification = Vec<ElementLabel>;

/// Uniform bucket grid over the triangles for point and box queries.
#[derive(Clone, Debug)]
pub struct TriGrid {
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl TriGrid {
    fn build(vertices: &[Point], triangles: &[[usize; 3]], domain: &Domain) -> Self {
        let nt = triangles.len().max(1);
        let aspect = domain.width() / domain.height();
        let ny = ((nt as f64 / 2.0 / aspect).sqrt().ceil() as usize).max(1);
        let nx = ((ny as f64 * aspect).ceil() as usize).max(1);
        let origin = [domain.x[0], domain.y[0]];
        let cell = [domain.width() / nx as f64, domain.height() / ny as f64];
        let mut counts = vec![0usize; nx * ny + 1];
        let ranges: Vec<[usize; 4]> = triangles
            .iter()
            .map(|t| {
                let bb = BBox::of(&[vertices[t[0]], vertices[t[1]], vertices[t[2]]]);
                Self::cell_range(origin, cell, [nx, ny], &bb)
            })
            .collect();
        for r in &ranges {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0; *start.last().unwrap()];
        for (t, r) in ranges.iter().enumerate() {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    let c = j * nx + i;
                    items[fill[c]] = t;
                    fill[c] += 1;
                }
            }
        }
        Self { origin, cell, dims: [nx, ny], start, items }
    }

    fn cell_range(origin: Point, cell: [f64; 2], dims: [usize; 2], bb: &BBox) -> [usize; 4] {
        let f = |v: f64, o: f64, c: f64, n: usize| (((v - o) / c).floor().max(0.0) as usize).min(n - 1);
        [
            f(bb.min[0], origin[0], cell[0], dims[0]),
            f(bb.max[0], origin[0], cell[0], dims[0]),
            f(bb.min[1], origin[1], cell[1], dims[1]),
            f(bb.max[1], origin[1], cell[1], dims[1]),
        ]
    }

    /// Triangles whose bounding boxes may overlap `bb`, sorted and unique.
    pub fn query(&self, bb: &BBox) -> Vec<usize> {
        let r = Self::cell_range(self.origin, self.cell, self.dims, bb);
        let mut out = Vec::new();
        for j in r[2]..=r[3] {
            for i in r[0]..=r[1] {
                let c = j * self.dims[0] + i;
                out.extend_from_slice(&self.items[self.start[c]..self.start[c + 1]]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug)]
pub struct BulkMesh {
    pub domain: Domain,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Neighbor across the edge opposite local vertex i.
    pub neighbors: Vec<[Option<usize>; 3]>,
    pub boundary_edges: Vec<(usize, usize, BoundaryTag)>,
    pub generation: u64,
    /// Subdivision count of the uniform base mesh.
    pub n_base: usize,
    pub grid: TriGrid,
}

impl BulkMesh {
    pub fn build_uniform(domain: &Domain, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("subdivision count must be positive".into()));
        }
        if domain.width() <= 0.0 || domain.height() <= 0.0 {
            return Err(Error::InvalidParameter("empty domain".into()));
        }
        let h = domain.mesh_size(n);
        let nx = (domain.width() / h).round() as usize;
        let ny = (domain.height() / h).round() as usize;
        if ((nx as f64) * h - domain.width()).abs() > 1e-9 * h || ((ny as f64) * h - domain.height()).abs() > 1e-9 * h {
            return Err(Error::InvalidParameter("domain sides are not commensurate with the mesh size".into()));
        }
        let hole_cells = match domain.hole {
            Some(hb) => {
                let cx = |x: f64| (x - domain.x[0]) / h;
                let cy = |y: f64| (y - domain.y[0]) / h;
                let r = [cx(hb[0][0]), cx(hb[0][1]), cy(hb[1][0]), cy(hb[1][1])];
                if r.iter().any(|v| (v - v.round()).abs() > 1e-9) {
                    return Err(Error::InvalidParameter("hole is not resolved by the mesh".into()));
                }
                Some(r.map(|v| v.round() as usize))
            }
            None => None,
        };
        let in_hole = |i: usize, j: usize| hole_cells.map(|r| i >= r[0] && i < r[1] && j >= r[2] && j < r[3]).unwrap_or(false);
        let mut index = vec![usize::MAX; (nx + 1) * (ny + 1)];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        for j in 0..ny {
            for i in 0..nx {
                if in_hole(i, j) {
                    continue;
                }
                let corners = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)];
                for &c in &corners {
                    if index[c] == usize::MAX {
                        let (ci, cj) = (c % (nx + 1), c / (nx + 1));
                        index[c] = vertices.len();
                        let x = if ci == nx { domain.x[1] } else { domain.x[0] + ci as f64 * h };
                        let y = if cj == ny { domain.y[1] } else { domain.y[0] + cj as f64 * h };
                        vertices.push([x, y]);
                    }
                }
                let [a, b, c, d] = corners.map(|c| index[c]);
                // right angle vertices first: hypotenuse a-c is the refinement edge
                triangles.push([b, c, a]);
                triangles.push([d, a, c]);
            }
        }
        Ok(Self::finalize(domain.clone(), vertices, triangles, 0, n))
    }

    fn finalize(domain: Domain, vertices: Vec<Point>, triangles: Vec<[usize; 3]>, generation: u64, n_base: usize) -> Self {
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(triangles.len() * 2);
        let mut neighbors = vec![[None; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                if let Some(&(s, k)) = edge_owner.get(&key) {
                    neighbors[t][i] = Some(s);
                    neighbors[s][k] = Some(t);
                } else {
                    edge_owner.insert(key, (t, i));
                }
            }
        }
        let mut boundary_edges = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                if neighbors[t][i].is_none() {
                    let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                    boundary_edges.push((a, b, domain.tag_edge(vertices[a], vertices[b])));
                }
            }
        }
        let grid = TriGrid::build(&vertices, &triangles, &domain);
        Self { domain, vertices, triangles, neighbors, boundary_edges, generation, n_base, grid }
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let tr = self.triangles[t];
        [self.vertices[tr[0]], self.vertices[tr[1]], self.vertices[tr[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        geom::triangle_area(p[0], p[1], p[2])
    }

    /// sqrt(2 |T|): the leg length for the isosceles right triangles produced here.
    pub fn size(&self, t: usize) -> f64 {
        (2.0 * self.area(t)).sqrt()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        geom::dist(p[0], p[1]).max(geom::dist(p[1], p[2])).max(geom::dist(p[2], p[0]))
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let p = self.tri_points(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Every interior edge shared by two triangles, every other edge on the boundary.
    pub fn is_conforming(&self) -> bool {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.iter().all(|(&(a, b), &c)| match c {
            2 => true,
            1 => {
                let m = geom::lerp(self.vertices[a], self.vertices[b], 0.5);
                self.domain.on_boundary(self.vertices[a]) && self.domain.on_boundary(self.vertices[b]) && self.domain.on_boundary(m)
            }
            _ => false,
        })
    }

    /// Triangles within distance `d` of some interface segment.
    fn band(&self, poly: &InterfacePolygon, d: f64) -> Vec<bool> {
        let mut mark = vec![false; self.num_triangles()];
        for j in 0..poly.len() {
            let (a, b) = poly.seg_points(j);
            let bb = BBox::of(&[a, b]).inflate(d);
            for t in self.grid.query(&bb) {
                if !mark[t] && geom::segment_triangle_distance(a, b, &self.tri_points(t)) <= d {
                    mark[t] = true;
                }
            }
        }
        mark
    }

    /// Refine marked triangles by newest-vertex bisection with conforming closure.
    pub fn refine(&self, marked: &[bool]) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut edge_marked: HashMap<(usize, usize), bool> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if marked[t] {
                edge_marked.insert(key(tri[1], tri[2]), true);
            }
        }
        let mut rounds = 0;
        loop {
            let mut changed = false;
            for tri in &self.triangles {
                let r = key(tri[1], tri[2]);
                if edge_marked.contains_key(&r) {
                    continue;
                }
                if edge_marked.contains_key(&key(tri[0], tri[1])) || edge_marked.contains_key(&key(tri[2], tri[0])) {
                    edge_marked.insert(r, true);
                    changed = true;
                }
            }
            rounds += 1;
            if !changed {
                break;
            }
            if rounds > 10_000 {
                return Err(Error::Refinement(rounds));
            }
        }
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out = Vec::with_capacity(self.triangles.len() * 2);
        let mut stack = Vec::new();
        for tri in &self.triangles {
            stack.push((*tri, true));
            while let Some((t, original)) = stack.pop() {
                let r = key(t[1], t[2]);
                // only edges of the previous mesh can be marked
                let split = original || edge_marked.contains_key(&r);
                if split && edge_marked.contains_key(&r) {
                    let m = *midpoint.entry(r).or_insert_with(|| {
                        vertices.push(geom::lerp(vertices[t[1]], vertices[t[2]], 0.5));
                        vertices.len() - 1
                    });
                    // children keep counterclockwise order; their refinement
                    // edges are the parent's remaining edges
                    stack.push(([m, t[2], t[0]], true));
                    stack.push(([m, t[0], t[1]], true));
                } else {
                    out.push(t);
                }
            }
        }
        Ok(Self::finalize(self.domain.clone(), vertices, out, self.generation, self.n_base))
    }

    /// Rebuild from the coarse base mesh and refine every triangle within
    /// one fine mesh size of the interface until its size is at most h_f.
    pub fn adapt_mesh(&self, poly: &InterfacePolygon, n_fine: usize, n_coarse: usize) -> Result<Self> {
        if n_fine < n_coarse || n_coarse == 0 {
            return Err(Error::InvalidParameter("need n_fine >= n_coarse >= 1".into()));
        }
        let h_f = self.domain.mesh_size(n_fine);
        let mut mesh = Self::build_uniform(&self.domain, n_coarse)?;
        let mut rounds = 0;
        loop {
            let band = mesh.band(poly, h_f);
            let marked: Vec<bool> =
                (0..mesh.num_triangles()).map(|t| band[t] && mesh.size(t) > h_f * (1.0 + 1e-9)).collect();
            if !marked.iter().any(|&m| m) {
                break;
            }
            mesh = mesh.refine(&marked)?;
            rounds += 1;
            if rounds > 64 {
                return Err(Error::Refinement(rounds));
            }
        }
        mesh.generation = self.generation + 1;
        Ok(mesh)
    }

    pub fn classify_elements(&self, poly: &InterfacePolygon) -> Result<ElementClassification> {
        if let Some((i, j)) = poly.find_self_intersection() {
            return Err(Error::Geometric(format!("interface segments {i} and {j} intersect")));
        }
        let mut labels = vec![ElementLabel::Exterior; self.num_triangles()];
        let mut cut = vec![false; self.num_triangles()];
        for j in 0..poly.len() {
            let (a, b) = poly.seg_points(j);
            for t in self.grid.query(&BBox::of(&[a, b])) {
                if !cut[t] && geom::segment_intersects_triangle(a, b, &self.tri_points(t)) {
                    cut[t] = true;
                }
            }
        }
        for t in 0..self.num_triangles() {
            labels[t] = if cut[t] {
                ElementLabel::Interfacial
            } else if geom::point_in_polygon(&poly.vertices, self.barycenter(t)) {
                ElementLabel::Interior
            } else {
                ElementLabel::Exterior
            };
        }
        Ok(labels)
    }

    pub fn write_vtk(&self, w: &mut impl std::io::Write, labels: Option<&[ElementLabel]>) -> std::io::Result<()> {
        let nv = self.vertices.len();
        let nt = self.num_triangles();
        writeln!(w, "# vtk DataFile Version 3.0\nbulk mesh generation {}\nASCII\nDATASET UNSTRUCTURED_GRID", self.generation)?;
        writeln!(w, "POINTS {nv} double")?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
        }
        writeln!(w, "CELLS {nt} {}", 4 * nt)?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "5")?;
        }
        if let Some(l) = labels {
            writeln!(w, "CELL_DATA {nt}\nSCALARS label int 1\nLOOKUP_TABLE default")?;
            for x in l {
                let v = match x {
                    ElementLabel::Interior => -1,
                    ElementLabel::Interfacial => 0,
                    ElementLabel::Exterior => 1,
                };
                writeln!(w, "{v}")?;
            }
        }
        Ok(())
    }
}

/// Elementwise density and viscosity: the phase value, or the average on
/// interfacial triangles.
pub fn piecewise_coefficients(labels: &[ElementLabel], params: &PhysicalParams) -> (Vec<f64>, Vec<f64>) {
    let pick = |l: &ElementLabel, minus: f64, plus: f64| match l {
        ElementLabel::Interior => minus,
        ElementLabel::Exterior => plus,
        ElementLabel::Interfacial => 0.5 * (minus + plus),
    };
    let rho = labels.iter().map(|l| pick(l, params.rho_minus, params.rho_plus)).collect();
    let mu = labels.iter().map(|l| pick(l, params.mu_minus, params.mu_plus)).collect();
    (rho, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_two() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([0.0, 1.0], [0.0, 1.0]), 2).unwrap();
        assert_eq!(m.num_triangles(), 8);
        for t in 0..8 {
            assert!((m.area(t) - 0.125).abs() < 1e-15);
        }
        assert!(m.is_conforming());
    }

    #[test]
    fn hole_corners_are_vertices() {
        let d = Domain { x: [-1.0, 1.0], y: [-1.0, 1.0], hole: Some([[-1.0 / 3.0, 1.0 / 3.0]; 2]), free_slip_sides: false };
        let m = BulkMesh::build_uniform(&d, 3).unwrap();
        for c in [[-1.0 / 3.0, -1.0 / 3.0], [1.0 / 3.0, -1.0 / 3.0], [1.0 / 3.0, 1.0 / 3.0], [-1.0 / 3.0, 1.0 / 3.0]] {
            assert!(m.vertices.iter().any(|v| geom::dist(*v, c) < 1e-14));
        }
        assert!((m.total_area() - d.area()).abs() < 1e-12);
        assert!(m.is_conforming());
    }

    #[test]
    fn positive_orientation() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([0.0, 1.0], [0.0, 2.0]), 4).unwrap();
        assert!((0..m.num_triangles()).all(|t| m.area(t) > 0.0));
    }

    #[test]
    fn classification_examples() {
        let m = BulkMesh::build_uniform(&Domain::rectangle([-1.0, 1.0], [-1.0, 1.0]), 8).unwrap();
        let c = InterfacePolygon::make_circle([0.0, 0.0], 0.5, 64);
        let l = m.classify_elements(&c).unwrap();
        for t in 0..m.num_triangles() {
            let b = m.barycenter(t);
            if b[0] > 0.8 && b[1] > 0.8 {
                assert_eq!(l[t], ElementLabel::Exterior);
            }
            if geom::norm(b) < 0.2 {
                assert_eq!(l[t], ElementLabel::Interior);
            }
        }
        assert!(l.iter().any(|x| *x == ElementLabel::Interfacial));
    }

    #[test]
    fn coefficients_take_three_values() {
        let p = PhysicalParams { rho_plus: 1000.0, rho_minus: 100.0, mu_plus: 10.0, mu_minus: 1.0, ..Default::default() };
        let (r, mu) = piecewise_coefficients(&[ElementLabel::Interfacial, ElementLabel::Interior], &p);
        assert_eq!(r[0], 550.0);
        assert_eq!(mu[1], 1.0);
    }
}
