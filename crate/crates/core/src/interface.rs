//! The closed interface polygon and its mass-lumped calculus.
//!
//! Segment `j` joins vertex `j` to vertex `j + 1 (mod K)`. Vertices are ordered
//! counterclockwise so that the segment normal `(t_y, -t_x)` points outward,
//! into the exterior phase.

use crate::error::{Error, Result};
use crate::geom::{self, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct InterfacePolygon {
    pub vertices: Vec<Point>,
}

/// Role of a nodal field living on the interface vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    Density,
    Surfactant,
    Curvature,
    Position,
}

/// Nodal values on the interface vertices at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceField {
    pub role: FieldRole,
    pub level: usize,
    pub values: Vec<f64>,
}

impl SurfaceField {
    pub fn new(role: FieldRole, level: usize, values: Vec<f64>) -> Self {
        Self { role, level, values }
    }

    /// Re-index onto the polygon of another time level. Connectivity is
    /// inherited from step to step, so this is the identity on coefficients.
    pub fn pushforward(&self, level: usize) -> Self {
        Self { role: self.role, level, values: self.values.clone() }
    }
}

impl InterfacePolygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn make_circle(center: Point, radius: f64, k_gamma: usize) -> Self {
        Self::make_ellipse(center, radius, radius, k_gamma)
    }

    /// Vertices at uniform parameter angle, the first at angle 0.
    pub fn make_ellipse(center: Point, a: f64, b: f64, k_gamma: usize) -> Self {
        let n = k_gamma.max(3);
        let vertices = (0..n)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + a * phi.cos(), center[1] + b * phi.sin()]
            })
            .collect();
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn seg(&self, j: usize) -> (usize, usize) {
        (j, (j + 1) % self.vertices.len())
    }

    #[inline]
    pub fn seg_points(&self, j: usize) -> (Point, Point) {
        let (a, b) = self.seg(j);
        (self.vertices[a], self.vertices[b])
    }

    pub fn seg_length(&self, j: usize) -> f64 {
        let (a, b) = self.seg_points(j);
        geom::dist(a, b)
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.seg_length(j)).collect()
    }

    pub fn tangent(&self, j: usize) -> Point {
        let (a, b) = self.seg_points(j);
        let d = geom::sub(b, a);
        geom::scale(1.0 / geom::norm(d), d)
    }

    pub fn normal(&self, j: usize) -> Point {
        let t = self.tangent(j);
        [t[1], -t[0]]
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths().iter().sum()
    }

    pub fn h_gamma(&self) -> f64 {
        self.lengths().into_iter().fold(0.0, f64::max)
    }

    /// Lumped vertex weights m_k = |Lambda_k| / 2.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let k = self.len();
        let l = self.lengths();
        (0..k).map(|i| 0.5 * (l[i] + l[(i + k - 1) % k])).collect()
    }

    /// W_k = sum over segments at vertex k of (L_j / 2) nu_j, so that
    /// <x, chi_k nu>^h = W_k . x_k.
    pub fn weighted_normals(&self) -> Vec<Point> {
        let k = self.len();
        let mut w = vec![[0.0, 0.0]; k];
        for j in 0..k {
            let (a, b) = self.seg_points(j);
            let d = geom::sub(b, a);
            // L nu = (d_y, -d_x)
            let ln = [0.5 * d[1], -0.5 * d[0]];
            let (ia, ib) = self.seg(j);
            w[ia] = geom::add(w[ia], ln);
            w[ib] = geom::add(w[ib], ln);
        }
        w
    }

    pub fn vertex_normals(&self) -> Vec<Point> {
        let m = self.lumped_weights();
        self.weighted_normals().into_iter().zip(m).map(|(w, mk)| geom::scale(1.0 / mk, w)).collect()
    }

    /// Lumped product of P1 scalar fields.
    pub fn lumped_inner(&self, eta: &[f64], zeta: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| {
                let (a, b) = self.seg(j);
                0.5 * self.seg_length(j) * (eta[a] * zeta[a] + eta[b] * zeta[b])
            })
            .sum()
    }

    /// Lumped product of piecewise data given by one-sided endpoint values per segment.
    pub fn lumped_inner_endpoint(&self, eta: &[[f64; 2]], zeta: &[[f64; 2]]) -> f64 {
        (0..self.len())
            .map(|j| 0.5 * self.seg_length(j) * (eta[j][0] * zeta[j][0] + eta[j][1] * zeta[j][1]))
            .sum()
    }

    pub fn lumped_integral(&self, eta: &[f64]) -> f64 {
        self.lumped_weights().iter().zip(eta).map(|(m, e)| m * e).sum()
    }

    pub fn signed_area(&self) -> f64 {
        geom::polygon_signed_area(&self.vertices)
    }

    pub fn enclosed_area(&self) -> Result<f64> {
        if let Some((i, j)) = self.find_self_intersection() {
            return Err(Error::Geometric(format!("interface segments {i} and {j} intersect")));
        }
        Ok(self.signed_area())
    }

    pub fn centroid(&self) -> Point {
        let (a, m) = geom::polygon_moments(&self.vertices);
        geom::scale(1.0 / a, m)
    }

    /// (max edge / min edge, h_Gamma)
    pub fn mesh_quality(&self) -> (f64, f64) {
        let l = self.lengths();
        let max = l.iter().cloned().fold(0.0, f64::max);
        let min = l.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min, max)
    }

    /// First pair of non-adjacent segments that touch, if any.
    pub fn find_self_intersection(&self) -> Option<(usize, usize)> {
        let k = self.len();
        let boxes: Vec<geom::BBox> = (0..k)
            .map(|j| {
                let (a, b) = self.seg_points(j);
                geom::BBox::of(&[a, b])
            })
            .collect();
        // sweep over x to avoid the full quadratic scan on large polygons
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| boxes[a].min[0].total_cmp(&boxes[b].min[0]));
        for (oi, &i) in order.iter().enumerate() {
            for &j in &order[oi + 1..] {
                if boxes[j].min[0] > boxes[i].max[0] {
                    break;
                }
                let adjacent = (i + 1) % k == j || (j + 1) % k == i;
                if adjacent || !boxes[i].overlaps(&boxes[j]) {
                    continue;
                }
                let (a, b) = self.seg_points(i);
                let (c, d) = self.seg_points(j);
                if geom::segments_intersect(a, b, c, d) {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }

    /// Assumption checks: positive lengths, simple, counterclockwise, and
    /// vertex normals spanning the plane.
    pub fn validate(&self) -> Result<()> {
        if self.len() < 3 {
            return Err(Error::Geometric("interface needs at least three vertices".into()));
        }
        if self.vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Geometric("non-finite interface vertex".into()));
        }
        let scale = self.perimeter();
        for j in 0..self.len() {
            if !(self.seg_length(j) > 1e-14 * scale) {
                return Err(Error::Geometric(format!("interface segment {j} has degenerated")));
            }
        }
        if let Some((i, j)) = self.find_self_intersection() {
            return Err(Error::Geometric(format!("interface segments {i} and {j} intersect")));
        }
        if !(self.signed_area() > 0.0) {
            return Err(Error::Geometric("interface is not counterclockwise".into()));
        }
        self.check_normal_span()
    }

    pub fn check_normal_span(&self) -> Result<()> {
        let mut g = [[0.0; 2]; 2];
        for w in self.vertex_normals() {
            g[0][0] += w[0] * w[0];
            g[0][1] += w[0] * w[1];
            g[1][1] += w[1] * w[1];
        }
        let tr = g[0][0] + g[1][1];
        let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        let (smax, smin) = (0.5 * tr + disc, 0.5 * tr - disc);
        // singular values of the normal matrix are square roots of these
        if !(smin.max(0.0).sqrt() > 1e-10 * smax.sqrt()) {
            return Err(Error::Geometric("vertex normals do not span the plane".into()));
        }
        Ok(())
    }

    /// Stiffness matrix of <grad_s u, grad_s v> as a periodic tridiagonal
    /// (diag, off) where off[j] couples vertex j and j + 1.
    pub fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.len();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k];
        for j in 0..k {
            let (a, b) = self.seg(j);
            let s = 1.0 / self.seg_length(j);
            diag[a] += s;
            diag[b] += s;
            off[j] = -s;
        }
        (diag, off)
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "k,x,y")?;
        for (k, p) in self.vertices.iter().enumerate() {
            writeln!(w, "{k},{:.17e},{:.17e}", p[0], p[1])?;
        }
        Ok(())
    }

    /// Legacy VTK polydata with optional point scalars.
    pub fn write_vtk(&self, w: &mut impl std::io::Write, scalars: &[(&str, &[f64])]) -> std::io::Result<()> {
        let k = self.len();
        writeln!(w, "# vtk DataFile Version 3.0\ninterface\nASCII\nDATASET POLYDATA")?;
        writeln!(w, "POINTS {k} double")?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
        }
        writeln!(w, "LINES {k} {}", 3 * k)?;
        for j in 0..k {
            let (a, b) = self.seg(j);
            writeln!(w, "2 {a} {b}")?;
        }
        if !scalars.is_empty() {
            writeln!(w, "POINT_DATA {k}")?;
            for (name, vals) in scalars {
                writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
                for v in vals.iter() {
                    writeln!(w, "{v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_from_circle() {
        let p = InterfacePolygon::make_circle([0.0, 0.0], 0.5, 4);
        assert!((p.perimeter() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((p.seg_length(0) - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn regular_polygon_area_and_quality() {
        let k = 37;
        let r = 0.7;
        let p = InterfacePolygon::make_circle([0.3, -0.2], r, k);
        let exact = 0.5 * k as f64 * r * r * (2.0 * std::f64::consts::PI / k as f64).sin();
        assert!((p.enclosed_area().unwrap() - exact).abs() < 1e-14);
        let (ratio, _) = p.mesh_quality();
        assert!((ratio - 1.0).abs() < 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn lumped_single_values() {
        let p = InterfacePolygon::make_circle([0.0, 0.0], 1.0, 12);
        let one = vec![1.0; 12];
        assert!((p.lumped_inner(&one, &one) - p.perimeter()).abs() < 1e-14);
    }

    #[test]
    fn collinear_vertex_normal() {
        let p = InterfacePolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]);
        let w = p.vertex_normals();
        assert!((w[1][0]).abs() < 1e-15 && (w[1][1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_orientation_rejected() {
        let mut p = InterfacePolygon::make_circle([0.0, 0.0], 1.0, 8);
        p.vertices.reverse();
        assert!(p.signed_area() < 0.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn self_intersection_found() {
        let p = InterfacePolygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(p.find_self_intersection().is_some());
        assert!(p.enclosed_area().is_err());
    }

    #[test]
    fn pushforward_is_identity() {
        let f = SurfaceField::new(FieldRole::Surfactant, 3, vec![1.0, 2.0, 3.0]);
        let g = f.pushforward(4).pushforward(3);
        assert_eq!(f, g);
    }
}
