//! Per-segment differential operators on the interface polygon.

use crate::geom::{self, Point};
use crate::interface::InterfacePolygon;

pub type Mat2 = [[f64; 2]; 2];

/// Local frame of one interface segment.
#[derive(Clone, Copy, Debug)]
pub struct SegmentFrame {
    pub q1: Point,
    pub q2: Point,
    pub t: Point,
    pub nu: Point,
    pub length: f64,
}

impl SegmentFrame {
    pub fn new(q1: Point, q2: Point) -> Self {
        let d = geom::sub(q2, q1);
        let length = geom::norm(d);
        let t = geom::scale(1.0 / length, d);
        Self { q1, q2, t, nu: [t[1], -t[0]], length }
    }

    pub fn of(poly: &InterfacePolygon, j: usize) -> Self {
        let (a, b) = poly.seg_points(j);
        Self::new(a, b)
    }

    /// Tangential projection Id - nu (x) nu.
    pub fn projection(&self) -> Mat2 {
        let n = self.nu;
        [[1.0 - n[0] * n[0], -n[0] * n[1]], [-n[1] * n[0], 1.0 - n[1] * n[1]]]
    }

    /// Columns (Q2 - Q1, nu).
    pub fn map_matrix(&self) -> Mat2 {
        let e = geom::sub(self.q2, self.q1);
        [[e[0], self.nu[0]], [e[1], self.nu[1]]]
    }

    /// Surface gradient of the hat function of the first and second vertex.
    pub fn hat_gradients(&self) -> [Point; 2] {
        let g = geom::scale(1.0 / self.length, self.t);
        [geom::scale(-1.0, g), g]
    }

    pub fn surface_gradient(&self, f1: f64, f2: f64) -> Point {
        geom::scale((f2 - f1) / self.length, self.t)
    }

    /// Full 2x2 surface gradient of a P1 vector field: (grad_s u)_{ij} = d_j u_i.
    pub fn vector_gradient(&self, u1: Point, u2: Point) -> Mat2 {
        let g0 = self.surface_gradient(u1[0], u2[0]);
        let g1 = self.surface_gradient(u1[1], u2[1]);
        [[g0[0], g0[1]], [g1[0], g1[1]]]
    }

    /// (D_s, div_s, deviatoric part) of a P1 vector field.
    pub fn rate_of_deformation(&self, u1: Point, u2: Point) -> (Mat2, f64, Mat2) {
        let g = self.vector_gradient(u1, u2);
        let p = self.projection();
        let sym = [[g[0][0], 0.5 * (g[0][1] + g[1][0])], [0.5 * (g[0][1] + g[1][0]), g[1][1]]];
        let d = matmul(&matmul(&p, &sym), &p);
        let div = trace(&matmul(&p, &g));
        let mut dev = d;
        for i in 0..2 {
            for j in 0..2 {
                dev[i][j] -= div * p[i][j];
            }
        }
        (d, div, dev)
    }

    /// Matrix Xi with Xi grad_s z = 1/2 grad_s pi[z^2] for P1 data (z1, z2).
    pub fn xi_matrix(&self, z1: f64, z2: f64) -> Mat2 {
        let m = self.map_matrix();
        let mt = transpose(&m);
        let mti = inverse(&mt);
        let lam = [[0.5 * (z1 + z2), 0.0], [0.0, 0.0]];
        matmul(&matmul(&mti, &lam), &mt)
    }
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn matvec(a: &Mat2, x: Point) -> Point {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

pub fn frobenius(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn inverse(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// Segment average of rho_Gamma if nonnegative on the closed segment, else 0.
pub fn rho_star(poly: &InterfacePolygon, rho_gamma: &[f64]) -> Vec<f64> {
    (0..poly.len())
        .map(|j| {
            let (a, b) = poly.seg(j);
            let (ra, rb) = (rho_gamma[a], rho_gamma[b]);
            if ra.min(rb) < 0.0 {
                0.0
            } else {
                0.5 * (ra + rb)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_along_axis() {
        let f = SegmentFrame::new([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(f.surface_gradient(0.0, 1.0), [1.0, 0.0]);
        assert_eq!(f.surface_gradient(2.0, 2.0), [0.0, 0.0]);
    }

    #[test]
    fn deformation_hand_value() {
        let f = SegmentFrame::new([0.0, 0.0], [1.0, 0.0]);
        let (d, div, dev) = f.rate_of_deformation([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(d, [[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(div, 1.0);
        assert!(dev.iter().flatten().all(|x| x.abs() <= 1e-14));
    }

    #[test]
    fn xi_hand_value() {
        let h = 0.3;
        let f = SegmentFrame::new([0.0, 0.0], [h, 0.0]);
        let xi = f.xi_matrix(1.0, 3.0);
        let g = matvec(&xi, f.surface_gradient(1.0, 3.0));
        assert!((g[0] - 4.0 / h).abs() < 1e-13 && g[1].abs() < 1e-13);
    }

    #[test]
    fn rho_star_cases() {
        let p = InterfacePolygon::make_circle([0.0, 0.0], 1.0, 3);
        let r = rho_star(&p, &[1.0, 3.0, -0.1]);
        assert_eq!(r[0], 2.0);
        assert_eq!(r[1], 0.0);
        assert_eq!(r[2], 0.0);
    }
}
