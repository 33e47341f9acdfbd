//! Radially expanding bubble with a known solution, and the error norms used
//! to measure convergence against it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, P2Space, PressureSpace};
use crate::geom::{self, Point};
use crate::interface::InterfacePolygon;
use crate::mesh::{BulkMesh, Domain};
use crate::params::PhysicalParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandingBubble {
    pub alpha: f64,
    pub r0: f64,
    pub rho_gamma0_bar: f64,
    pub gamma_bar: f64,
    pub mu_gamma_bar: f64,
    pub lambda_gamma_bar: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

impl ExpandingBubble {
    pub fn new(alpha: f64, r0: f64, rho_gamma0_bar: f64, p: &PhysicalParams) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter("initial radius must be positive".into()));
        }
        Ok(Self {
            alpha,
            r0,
            rho_gamma0_bar,
            gamma_bar: p.gamma_bar(),
            mu_gamma_bar: p.mu_gamma_bar,
            lambda_gamma_bar: p.lambda_gamma_bar,
            mu_plus: p.mu_plus,
            mu_minus: p.mu_minus,
        })
    }

    pub fn radius(&self, t: f64) -> f64 {
        (self.r0 * self.r0 + 2.0 * self.alpha * t).sqrt()
    }

    fn check(z: Point) -> Result<f64> {
        let n2 = geom::dot(z, z);
        if n2 == 0.0 {
            return Err(Error::InvalidParameter("expanding bubble evaluated at the origin".into()));
        }
        Ok(n2)
    }

    pub fn velocity(&self, z: Point) -> Result<Point> {
        Ok(geom::scale(self.alpha / Self::check(z)?, z))
    }

    /// Dirichlet data; equals the velocity.
    pub fn boundary(&self, z: Point) -> Result<Point> {
        self.velocity(z)
    }

    /// f1 = −α² z |z|⁻⁴.
    pub fn f1(&self, z: Point) -> Result<Point> {
        let n2 = Self::check(z)?;
        Ok(geom::scale(-self.alpha * self.alpha / (n2 * n2), z))
    }

    pub fn rho_gamma(&self, t: f64) -> f64 {
        self.r0 / self.radius(t) * self.rho_gamma0_bar
    }

    /// Pressure jump across the interface.
    pub fn theta(&self, t: f64) -> f64 {
        let r = self.radius(t);
        let a = self.alpha;
        (self.gamma_bar + a / (r * r) * (2.0 * self.mu_gamma_bar + self.lambda_gamma_bar)
            - a * a * self.r0 / (r * r * r) * self.rho_gamma0_bar)
            / r
            + 2.0 * a / (r * r) * (self.mu_plus - self.mu_minus)
    }

    /// Area of the inner phase within the domain; the hole must lie inside the bubble.
    pub fn inner_area(&self, domain: &Domain, t: f64) -> f64 {
        let r = self.radius(t);
        let hole = domain.hole.map(|h| (h[0][1] - h[0][0]) * (h[1][1] - h[1][0])).unwrap_or(0.0);
        std::f64::consts::PI * r * r - hole
    }

    /// The constant outer value of the mean-free pressure.
    pub fn pressure_outer(&self, domain: &Domain, t: f64) -> f64 {
        -self.theta(t) * self.inner_area(domain, t) / domain.area()
    }

    pub fn pressure(&self, domain: &Domain, z: Point, t: f64) -> f64 {
        let inside = geom::norm(z) < self.radius(t);
        self.pressure_outer(domain, t) + if inside { self.theta(t) } else { 0.0 }
    }
}

/// max_k ||q_k| − r|: distance of the vertices to the exact circle.
pub fn interface_error(poly: &InterfacePolygon, r: f64) -> f64 {
    poly.vertices.iter().map(|q| (geom::norm(*q) - r).abs()).fold(0.0, f64::max)
}

/// Maximum nodal deviation of U from the interpolated exact velocity.
pub fn velocity_error(space: &P2Space, u: &[f64], exact: &ExpandingBubble) -> Result<f64> {
    let mut e = 0.0f64;
    for (n, z) in space.nodes.iter().enumerate() {
        let v = exact.velocity(*z)?;
        e = e.max(geom::dist([u[2 * n], u[2 * n + 1]], v));
    }
    Ok(e)
}

/// Squared L² distance between the continuous part of the discrete pressure
/// and the constant outer value.
pub fn pressure_error_sq(mesh: &BulkMesh, pspace: &PressureSpace, p: &[f64], pc: f64) -> f64 {
    let quad = fem::quadrature7();
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let a = mesh.area(t);
        for (l, w) in quad.iter() {
            let d = pspace.eval_base(mesh, p, t, *l) - pc;
            s += a * w * d * d;
        }
    }
    s
}

/// Running accumulation of the four convergence errors over a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub x_err: f64,
    pub u_err: f64,
    pub pc_err: f64,
    pub theta_err: f64,
    #[serde(skip)]
    pc_sum: f64,
    #[serde(skip)]
    theta_sum: f64,
}

impl ErrorNorms {
    pub fn record(&mut self, tau: f64, x_err: f64, u_err: f64, pc_sq: f64, theta_diff: f64) {
        self.x_err = self.x_err.max(x_err);
        self.u_err = self.u_err.max(u_err);
        self.pc_sum += tau * pc_sq;
        self.theta_sum += tau * theta_diff * theta_diff;
        self.pc_err = self.pc_sum.sqrt();
        self.theta_err = self.theta_sum.sqrt();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bubble() -> ExpandingBubble {
        ExpandingBubble {
            alpha: 0.15,
            r0: 0.5,
            rho_gamma0_bar: 1.0,
            gamma_bar: 1.0,
            mu_gamma_bar: 1.0,
            lambda_gamma_bar: 1.0,
            mu_plus: 1.0,
            mu_minus: 1.0,
        }
    }

    #[test]
    fn radius_at_final_time() {
        assert!((bubble().radius(1.0) - 0.55f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn velocity_on_unit_circle() {
        let u = bubble().velocity([1.0, 0.0]).unwrap();
        assert!((u[0] - 0.15).abs() < 1e-16 && u[1] == 0.0);
        assert!(bubble().velocity([0.0, 0.0]).is_err());
    }

    #[test]
    fn initial_jump() {
        assert!((bubble().theta(0.0) - 5.42).abs() < 1e-13);
    }

    #[test]
    fn surface_density_dilutes() {
        assert!((bubble().rho_gamma(1.0) - 0.5 / 0.55f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn radius_ode() {
        let b = bubble();
        let (t, h) = (0.3, 1e-5);
        let fd = (b.radius(t + h) - b.radius(t - h)) / (2.0 * h);
        assert!((fd - b.alpha / b.radius(t)).abs() < 1e-8);
    }

    #[test]
    fn concentric_polygon_has_no_interface_error() {
        let p = InterfacePolygon::make_circle([0.0, 0.0], 0.6, 32);
        assert!(interface_error(&p, 0.6) < 1e-15);
    }

    #[test]
    fn divergence_free_away_from_origin() {
        let b = bubble();
        let (z, h) = ([0.4, -0.7], 1e-5);
        let dx = (b.velocity([z[0] + h, z[1]]).unwrap()[0] - b.velocity([z[0] - h, z[1]]).unwrap()[0]) / (2.0 * h);
        let dy = (b.velocity([z[0], z[1] + h]).unwrap()[1] - b.velocity([z[0], z[1] - h]).unwrap()[1]) / (2.0 * h);
        assert!((dx + dy).abs() < 1e-8);
    }
}
