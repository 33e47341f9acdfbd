//! Matrix and vector assembly for both fully discrete schemes.
//!
//! Velocity dofs are `2 * node + component`. Bulk element kernels run in
//! parallel and are scattered in element order, so results do not depend on
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fem::{self, P2Space, PressureKind, PressureSpace};
use crate::geom::{self, Point};
use crate::interface::InterfacePolygon;
use crate::mesh::{BulkMesh, ElementLabel};
use crate::params::PhysicalParams;
use crate::solver::{self, CsrMatrix};
use crate::surface::{self, SegmentFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gd,
    Bgn,
}

pub type Triplets = Vec<(usize, usize, f64)>;

/// Local P2 data of a point: the six global nodes of its triangle and the
/// basis function values there.
#[derive(Clone, Copy, Debug)]
pub struct PointBasis {
    pub nodes: [usize; 6],
    pub phi: [f64; 6],
}

pub fn point_bases(space: &P2Space, locs: &[(usize, [f64; 3])]) -> Vec<PointBasis> {
    locs.iter().map(|(t, l)| PointBasis { nodes: space.tri_nodes[*t], phi: fem::p2_values(*l) }).collect()
}

pub fn eval_bases(bases: &[PointBasis], coeffs: &[f64]) -> Vec<Point> {
    bases
        .iter()
        .map(|b| {
            let mut u = [0.0; 2];
            for (i, &n) in b.nodes.iter().enumerate() {
                u[0] += b.phi[i] * coeffs[2 * n];
                u[1] += b.phi[i] * coeffs[2 * n + 1];
            }
            u
        })
        .collect()
}

struct Element {
    area: f64,
    nodes: [usize; 6],
    /// basis gradients at each quadrature point
    grads: [[Point; 6]; 7],
}

fn element(mesh: &BulkMesh, space: &P2Space, t: usize, quad: &[([f64; 3], f64); 7]) -> Element {
    let p = mesh.tri_points(t);
    let gl = fem::bary_gradients(&p);
    let mut grads = [[[0.0; 2]; 6]; 7];
    for (q, (l, _)) in quad.iter().enumerate() {
        grads[q] = fem::p2_gradients(*l, &gl);
    }
    Element { area: mesh.area(t), nodes: space.tri_nodes[t], grads }
}

type Local = [[f64; 12]; 12];

fn assemble_local<F>(mesh: &BulkMesh, space: &P2Space, kernel: F) -> CsrMatrix
where
    F: Fn(usize, &Element, &[([f64; 3], f64); 7], &[[f64; 6]; 7]) -> Option<Local> + Sync,
{
    let quad = fem::quadrature7();
    let phis: [[f64; 6]; 7] = std::array::from_fn(|q| fem::p2_values(quad[q].0));
    let locals: Vec<Option<(Local, [usize; 6])>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let e = element(mesh, space, t, &quad);
            kernel(t, &e, &quad, &phis).map(|m| (m, e.nodes))
        })
        .collect();
    let mut trips = Vec::with_capacity(locals.len() * 144);
    for (m, nodes) in locals.iter().flatten() {
        for a in 0..12 {
            for b in 0..12 {
                if m[a][b] != 0.0 {
                    trips.push((2 * nodes[a / 2] + a % 2, 2 * nodes[b / 2] + b % 2, m[a][b]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.n_dofs(), space.n_dofs(), &trips)
}

/// (c u, xi) for an elementwise constant c.
pub fn mass_matrix(mesh: &BulkMesh, space: &P2Space, coef: &[f64]) -> CsrMatrix {
    assemble_local(mesh, space, |t, e, quad, phis| {
        if coef[t] == 0.0 {
            return None;
        }
        let mut m = [[0.0; 12]; 12];
        for (q, (_, w)) in quad.iter().enumerate() {
            let s = coef[t] * w * e.area;
            for a in 0..6 {
                for b in 0..6 {
                    let v = s * phis[q][a] * phis[q][b];
                    m[2 * a][2 * b] += v;
                    m[2 * a + 1][2 * b + 1] += v;
                }
            }
        }
        Some(m)
    })
}

/// 2 (mu D(u), D(xi)).
pub fn viscous_matrix(mesh: &BulkMesh, space: &P2Space, mu: &[f64]) -> CsrMatrix {
    assemble_local(mesh, space, |t, e, quad, _| {
        let mut m = [[0.0; 12]; 12];
        for (q, (_, w)) in quad.iter().enumerate() {
            let s = mu[t] * w * e.area;
            let g = &e.grads[q];
            for a in 0..6 {
                for b in 0..6 {
                    let gg = geom::dot(g[a], g[b]);
                    for r in 0..2 {
                        for c in 0..2 {
                            let mut v = g[b][r] * g[a][c];
                            if r == c {
                                v += gg;
                            }
                            m[2 * a + r][2 * b + c] += s * v;
                        }
                    }
                }
            }
        }
        Some(m)
    })
}

/// ½ (rho, [(w.∇)u].xi − [(w.∇)xi].u); exactly antisymmetric.
pub fn convection_matrix(mesh: &BulkMesh, space: &P2Space, rho: &[f64], w: &[f64]) -> CsrMatrix {
    assemble_local(mesh, space, |t, e, quad, phis| {
        if rho[t] == 0.0 {
            return None;
        }
        let mut m = [[0.0; 12]; 12];
        for (q, (_, wt)) in quad.iter().enumerate() {
            let mut wq = [0.0; 2];
            for (i, &n) in e.nodes.iter().enumerate() {
                wq[0] += phis[q][i] * w[2 * n];
                wq[1] += phis[q][i] * w[2 * n + 1];
            }
            let s = 0.5 * rho[t] * wt * e.area;
            let adv: [f64; 6] = std::array::from_fn(|b| geom::dot(wq, e.grads[q][b]));
            for a in 0..6 {
                for b in 0..6 {
                    let v = s * (phis[q][a] * adv[b] - phis[q][b] * adv[a]);
                    m[2 * a][2 * b] += v;
                    m[2 * a + 1][2 * b + 1] += v;
                }
            }
        }
        Some(m)
    })
}

/// (c f, xi) for a P2 field f and elementwise constant c.
pub fn load_vector(mesh: &BulkMesh, space: &P2Space, coef: &[f64], f: &[f64]) -> Vec<f64> {
    let quad = fem::quadrature7();
    let phis: [[f64; 6]; 7] = std::array::from_fn(|q| fem::p2_values(quad[q].0));
    let locals: Vec<Option<[f64; 12]>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            if coef[t] == 0.0 {
                return None;
            }
            let nodes = space.tri_nodes[t];
            let area = mesh.area(t);
            let mut v = [0.0; 12];
            for (q, (_, w)) in quad.iter().enumerate() {
                let mut fq = [0.0; 2];
                for (i, &n) in nodes.iter().enumerate() {
                    fq[0] += phis[q][i] * f[2 * n];
                    fq[1] += phis[q][i] * f[2 * n + 1];
                }
                for a in 0..6 {
                    v[2 * a] += coef[t] * w * area * phis[q][a] * fq[0];
                    v[2 * a + 1] += coef[t] * w * area * phis[q][a] * fq[1];
                }
            }
            Some(v)
        })
        .collect();
    let mut out = vec![0.0; space.n_dofs()];
    for (t, v) in locals.iter().enumerate() {
        if let Some(v) = v {
            let nodes = space.tri_nodes[t];
            for a in 0..12 {
                out[2 * nodes[a / 2] + a % 2] += v[a];
            }
        }
    }
    out
}

/// Pressure coupling B with B[i][(a, r)] = −(psi_i, d_r phi_a); the
/// enrichment row is minus the given volume column.
pub fn pressure_matrix(mesh: &BulkMesh, space: &P2Space, pspace: &PressureSpace, xfem_col: Option<&[f64]>) -> CsrMatrix {
    let quad = fem::quadrature7();
    let locals: Vec<(Vec<(usize, usize, f64)>,)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let e = element(mesh, space, t, &quad);
            let tri = mesh.triangles[t];
            let mut v = Vec::with_capacity(48);
            for i in 0..3 {
                for a in 0..6 {
                    let mut s = [0.0; 2];
                    for (q, (l, w)) in quad.iter().enumerate() {
                        s[0] += w * l[i] * e.grads[q][a][0];
                        s[1] += w * l[i] * e.grads[q][a][1];
                    }
                    for r in 0..2 {
                        v.push((tri[i], 2 * e.nodes[a] + r, -e.area * s[r]));
                    }
                }
            }
            if pspace.kind == PressureKind::P1P0 {
                for a in 0..6 {
                    let mut s = [0.0; 2];
                    for (q, (_, w)) in quad.iter().enumerate() {
                        s[0] += w * e.grads[q][a][0];
                        s[1] += w * e.grads[q][a][1];
                    }
                    for r in 0..2 {
                        v.push((pspace.n_p1 + t, 2 * e.nodes[a] + r, -e.area * s[r]));
                    }
                }
            }
            (v,)
        })
        .collect();
    let mut trips: Triplets = locals.into_iter().flat_map(|(v,)| v).collect();
    if let (Some(x), Some(col)) = (pspace.xfem_dof(), xfem_col) {
        for (d, &c) in col.iter().enumerate() {
            if c != 0.0 {
                trips.push((x, d, -c));
            }
        }
    }
    CsrMatrix::from_triplets(pspace.n_dofs(), space.n_dofs(), &trips)
}

/// Lumped surface mass with a nodal weight:
/// entries ½ L rho(Q_i) phi_k(Q_i) phi_l(Q_i) on both components.
pub fn rho_gamma_mass(poly: &InterfacePolygon, rho: &[f64], bases: &[PointBasis], n_dofs: usize) -> CsrMatrix {
    let mut trips = Vec::new();
    for j in 0..poly.len() {
        let len = poly.seg_length(j);
        let (a, b) = poly.seg(j);
        for q in [a, b] {
            let w = 0.5 * len * rho[q];
            if w == 0.0 {
                continue;
            }
            let pb = &bases[q];
            for k in 0..6 {
                for l in 0..6 {
                    let v = w * pb.phi[k] * pb.phi[l];
                    for r in 0..2 {
                        trips.push((2 * pb.nodes[l] + r, 2 * pb.nodes[k] + r, v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_dofs, n_dofs, &trips)
}

/// Surface mass across two polygons: weights and trial evaluations on the previous polygon, test
/// functions evaluated at the current vertex positions. Rows are test dofs.
pub fn rho_gamma_mass_prev(
    poly_prev: &InterfacePolygon,
    rho_prev: &[f64],
    bases_prev: &[PointBasis],
    bases_cur: &[PointBasis],
    n_dofs: usize,
) -> CsrMatrix {
    let mut trips = Vec::new();
    for j in 0..poly_prev.len() {
        let len = poly_prev.seg_length(j);
        let (a, b) = poly_prev.seg(j);
        for q in [a, b] {
            let w = 0.5 * len * rho_prev[q];
            if w == 0.0 {
                continue;
            }
            let (pp, pc) = (&bases_prev[q], &bases_cur[q]);
            for k in 0..6 {
                for l in 0..6 {
                    let v = w * pp.phi[k] * pc.phi[l];
                    for r in 0..2 {
                        trips.push((2 * pc.nodes[l] + r, 2 * pp.nodes[k] + r, v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_dofs, n_dofs, &trips)
}

/// Per-segment data shared by the two Ξ assemblies below: component-wise Λ matrices
/// and the hat gradients of the previous polygon.
fn xi_segment(poly_prev: &InterfacePolygon, ubar_prev_pts: &[Point], j: usize) -> (SegmentFrame, [surface::Mat2; 2], [Point; 2]) {
    let f = SegmentFrame::of(poly_prev, j);
    let (a, b) = poly_prev.seg(j);
    let lam = std::array::from_fn(|r| f.xi_matrix(ubar_prev_pts[a][r], ubar_prev_pts[b][r]));
    (f, lam, f.hat_gradients())
}

/// Vertex-test Ξ entries E3[(vertex i, dof (l, r))] of
/// ⟨rho* chi_i, Ξ(Ū_r) ∇_s π phi_l⟩, returned as (vertex, dof, vector).
pub fn xi_vertex_entries(
    poly_prev: &InterfacePolygon,
    rho_star: &[f64],
    ubar_prev_pts: &[Point],
    bases_prev: &[PointBasis],
) -> Vec<(usize, usize, Point)> {
    let mut out = Vec::new();
    for j in 0..poly_prev.len() {
        if rho_star[j] == 0.0 {
            continue;
        }
        let (f, lam, g) = xi_segment(poly_prev, ubar_prev_pts, j);
        let (a, b) = poly_prev.seg(j);
        let q = [a, b];
        let c = 0.5 * f.length * rho_star[j];
        for &vi in &q {
            for (jj, &vj) in q.iter().enumerate() {
                let pb = &bases_prev[vj];
                for l in 0..6 {
                    for r in 0..2 {
                        let lg = surface::matvec(&lam[r], g[jj]);
                        out.push((vi, 2 * pb.nodes[l] + r, geom::scale(c * pb.phi[l], lg)));
                    }
                }
            }
        }
    }
    out
}

/// Bulk-test Ξ entries E4[(node k, dof (l, r))] of
/// ⟨rho* phi_k, Ξ(Ū_r) ∇_s π phi_l⟩, returned as (node, dof, vector).
pub fn xi_bulk_entries(
    poly_prev: &InterfacePolygon,
    rho_star: &[f64],
    ubar_prev_pts: &[Point],
    bases_prev: &[PointBasis],
) -> Vec<(usize, usize, Point)> {
    let mut out = Vec::new();
    for j in 0..poly_prev.len() {
        if rho_star[j] == 0.0 {
            continue;
        }
        let (f, lam, g) = xi_segment(poly_prev, ubar_prev_pts, j);
        let (a, b) = poly_prev.seg(j);
        let q = [a, b];
        let c = 0.5 * f.length * rho_star[j];
        for &vi in &q {
            let pi = &bases_prev[vi];
            for (jj, &vj) in q.iter().enumerate() {
                let pj = &bases_prev[vj];
                for k in 0..6 {
                    for l in 0..6 {
                        for r in 0..2 {
                            let lg = surface::matvec(&lam[r], g[jj]);
                            out.push((pi.nodes[k], 2 * pj.nodes[l] + r, geom::scale(c * pi.phi[k] * pj.phi[l], lg)));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Right-hand side contribution −Σ_r ⟨rho* (V − Ū), Ξ(Ū_r) ∇_s π xi_r⟩ with
/// V the vertex velocities of the previous step, assembled from the vertex and bulk Ξ entries.
pub fn xi_rhs(
    poly_prev: &InterfacePolygon,
    rho_star: &[f64],
    ubar: &[f64],
    bases_prev: &[PointBasis],
    vertex_velocity: &[Point],
    n_dofs: usize,
) -> Vec<f64> {
    let ubar_pts = eval_bases(bases_prev, ubar);
    let mut rhs = vec![0.0; n_dofs];
    for (i, d, v) in xi_vertex_entries(poly_prev, rho_star, &ubar_pts, bases_prev) {
        rhs[d] -= geom::dot(vertex_velocity[i], v);
    }
    for (k, d, v) in xi_bulk_entries(poly_prev, rho_star, &ubar_pts, bases_prev) {
        rhs[d] += ubar[2 * k] * v[0] + ubar[2 * k + 1] * v[1];
    }
    rhs
}

/// Surface shear and dilatational viscosity on velocity dofs.
pub fn surface_viscosity_matrix(poly: &InterfacePolygon, psi: &[f64], params: &PhysicalParams, bases: &[PointBasis], n_dofs: usize) -> CsrMatrix {
    let mut trips = Vec::new();
    for j in 0..poly.len() {
        let f = SegmentFrame::of(poly, j);
        let (a, b) = poly.seg(j);
        let lam = 0.5 * f.length * (params.lambda_gamma_of(psi[a]) + params.lambda_gamma_of(psi[b]));
        let mu = 0.5 * f.length * (params.mu_gamma_of(psi[a]) + params.mu_gamma_of(psi[b]));
        if lam == 0.0 && mu == 0.0 {
            continue;
        }
        let s = f.hat_gradients();
        let t = f.t;
        let q = [a, b];
        for i in 0..2 {
            for jj in 0..2 {
                let dt = geom::dot(s[i], t) * geom::dot(s[jj], t);
                let kij: surface::Mat2 =
                    std::array::from_fn(|r| std::array::from_fn(|c| lam * s[i][r] * s[jj][c] + 2.0 * mu * dt * t[r] * t[c]));
                let (pi, pj) = (&bases[q[i]], &bases[q[jj]]);
                for k in 0..6 {
                    for l in 0..6 {
                        let w = pi.phi[k] * pj.phi[l];
                        for r in 0..2 {
                            for c in 0..2 {
                                trips.push((2 * pi.nodes[k] + r, 2 * pj.nodes[l] + c, w * kij[r][c]));
                            }
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_dofs, n_dofs, &trips)
}

/// Lumped ⟨∇_s π g, xi⟩ for nodal values g.
pub fn marangoni_rhs(poly: &InterfacePolygon, g: &[f64], bases: &[PointBasis], n_dofs: usize) -> Vec<f64> {
    let mut rhs = vec![0.0; n_dofs];
    for j in 0..poly.len() {
        let f = SegmentFrame::of(poly, j);
        let (a, b) = poly.seg(j);
        let grad = f.surface_gradient(g[a], g[b]);
        if grad == [0.0, 0.0] {
            continue;
        }
        for q in [a, b] {
            let pb = &bases[q];
            for k in 0..6 {
                for r in 0..2 {
                    rhs[2 * pb.nodes[k] + r] += 0.5 * f.length * grad[r] * pb.phi[k];
                }
            }
        }
    }
    rhs
}

/// Lumped numerical-diffusion weights ½ L (|P v(q1)| + |P v(q2)|) per segment.
pub fn diffusion_weights(poly: &InterfacePolygon, v: &[Point]) -> Vec<f64> {
    (0..poly.len())
        .map(|j| {
            let f = SegmentFrame::of(poly, j);
            let (a, b) = poly.seg(j);
            let p = f.projection();
            0.5 * f.length * (geom::norm(surface::matvec(&p, v[a])) + geom::norm(surface::matvec(&p, v[b])))
        })
        .collect()
}

/// −½ θ ⟨|P v| ∇_s rho, ∇_s π[Ū . xi]⟩ on velocity dofs.
pub fn diffusion_momentum_rhs(
    poly: &InterfacePolygon,
    rho: &[f64],
    v: &[Point],
    theta: f64,
    ubar_pts: &[Point],
    bases: &[PointBasis],
    n_dofs: usize,
) -> Vec<f64> {
    let mut rhs = vec![0.0; n_dofs];
    if theta == 0.0 {
        return rhs;
    }
    let w = diffusion_weights(poly, v);
    for j in 0..poly.len() {
        let f = SegmentFrame::of(poly, j);
        let (a, b) = poly.seg(j);
        let gr = f.surface_gradient(rho[a], rho[b]);
        let s = f.hat_gradients();
        for (i, q) in [a, b].into_iter().enumerate() {
            let c = -0.5 * theta * w[j] * geom::dot(gr, s[i]);
            let pb = &bases[q];
            for k in 0..6 {
                for r in 0..2 {
                    rhs[2 * pb.nodes[k] + r] += c * ubar_pts[q][r] * pb.phi[k];
                }
            }
        }
    }
    rhs
}

/// θ ⟨|P v| ∇_s rho, ∇_s chi_k⟩ per vertex.
pub fn diffusion_vertex_term(poly: &InterfacePolygon, rho: &[f64], v: &[Point], theta: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len()];
    if theta == 0.0 {
        return out;
    }
    let w = diffusion_weights(poly, v);
    for j in 0..poly.len() {
        let f = SegmentFrame::of(poly, j);
        let (a, b) = poly.seg(j);
        let gr = f.surface_gradient(rho[a], rho[b]);
        let s = f.hat_gradients();
        out[a] += theta * w[j] * geom::dot(gr, s[0]);
        out[b] += theta * w[j] * geom::dot(gr, s[1]);
    }
    out
}

/// Lumped ⟨c (v . ∇_s chi_k)⟩ for a segment-wise constant c and nodal vectors v.
pub fn transport_term(poly: &InterfacePolygon, c: &[f64], v: &[Point]) -> Vec<f64> {
    let mut out = vec![0.0; poly.len()];
    for j in 0..poly.len() {
        if c[j] == 0.0 {
            continue;
        }
        let f = SegmentFrame::of(poly, j);
        let (a, b) = poly.seg(j);
        let s = f.hat_gradients();
        let vs = geom::scale(0.5 * f.length, geom::add(v[a], v[b]));
        out[a] += c[j] * geom::dot(vs, s[0]);
        out[b] += c[j] * geom::dot(vs, s[1]);
    }
    out
}

/// Edge values Ψ*_ε per segment.
pub fn psi_star(poly: &InterfacePolygon, psi: &[f64], params: &PhysicalParams) -> Result<Vec<f64>> {
    (0..poly.len())
        .map(|j| {
            let (a, b) = poly.seg(j);
            params.psi_star(psi[a], psi[b])
        })
        .collect()
}

/// Periodic P1 stiffness of the polygon as a sparse matrix.
pub fn surface_stiffness(poly: &InterfacePolygon) -> CsrMatrix {
    let mut trips = Vec::with_capacity(4 * poly.len());
    for j in 0..poly.len() {
        let (a, b) = poly.seg(j);
        let w = 1.0 / poly.seg_length(j);
        trips.extend([(a, a, w), (b, b, w), (a, b, -w), (b, a, -w)]);
    }
    CsrMatrix::from_triplets(poly.len(), poly.len(), &trips)
}

/// New surface density: lumped mass balance with the transport and
/// diffusion terms of the second scheme (both vanish for the first).
pub fn update_rho_gamma(
    scheme: Scheme,
    poly_old: &InterfacePolygon,
    poly_new: &InterfacePolygon,
    rho: &[f64],
    v: &[Point],
    theta: f64,
    tau: f64,
) -> Vec<f64> {
    let m_old = poly_old.lumped_weights();
    let m_new = poly_new.lumped_weights();
    let (tr, nd) = match scheme {
        Scheme::Gd => (vec![0.0; rho.len()], vec![0.0; rho.len()]),
        Scheme::Bgn => (
            transport_term(poly_old, &surface::rho_star(poly_old, rho), v),
            diffusion_vertex_term(poly_old, rho, v, theta),
        ),
    };
    (0..rho.len()).map(|k| (m_old[k] * rho[k] - tau * tr[k] - tau * nd[k]) / m_new[k]).collect()
}

/// New surfactant concentration from (M_new / τ + D A_new) Ψ = M_old Ψ_old / τ − S.
pub fn update_psi(
    scheme: Scheme,
    poly_old: &InterfacePolygon,
    poly_new: &InterfacePolygon,
    psi: &[f64],
    v: &[Point],
    params: &PhysicalParams,
    tau: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let m_old = poly_old.lumped_weights();
    let m_new = poly_new.lumped_weights();
    let tr = match scheme {
        Scheme::Gd => vec![0.0; psi.len()],
        Scheme::Bgn => transport_term(poly_old, &psi_star(poly_old, psi, params)?, v),
    };
    let rhs: Vec<f64> = (0..psi.len()).map(|k| m_old[k] * psi[k] / tau - tr[k]).collect();
    if params.d_gamma == 0.0 {
        return Ok((0..psi.len()).map(|k| rhs[k] * tau / m_new[k]).collect());
    }
    let a = surface_stiffness(poly_new);
    let mut trips: Triplets = (0..psi.len()).map(|k| (k, k, m_new[k] / tau)).collect();
    for i in 0..a.nrows {
        for (j, v) in a.row(i) {
            trips.push((i, j, params.d_gamma * v));
        }
    }
    solver::solve_spd(&CsrMatrix::from_triplets(psi.len(), psi.len(), &trips), &rhs, tol)
}

/// Unknown blocks of the coupled system, in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub nu: usize,
    pub np: usize,
    pub k: usize,
    pub scheme: Scheme,
}

impl Layout {
    pub fn p0(&self) -> usize {
        self.nu
    }
    pub fn x0(&self) -> usize {
        self.nu + self.np
    }
    pub fn kappa0(&self) -> usize {
        self.x0() + 2 * self.k
    }
    pub fn n_kappa(&self) -> usize {
        match self.scheme {
            Scheme::Gd => 2 * self.k,
            Scheme::Bgn => self.k,
        }
    }
    pub fn total(&self) -> usize {
        self.kappa0() + self.n_kappa()
    }
}

/// Everything the coupled step needs at time level m.
pub struct StepData<'a> {
    pub scheme: Scheme,
    pub params: &'a PhysicalParams,
    pub tau: f64,
    pub mesh: &'a BulkMesh,
    pub space: &'a P2Space,
    pub pspace: &'a PressureSpace,
    pub labels: &'a [ElementLabel],
    /// Elementwise density and viscosity on the current mesh.
    pub rho: &'a [f64],
    pub mu: &'a [f64],
    /// Previous density projected onto the current mesh.
    pub rho_tilde: &'a [f64],
    /// Velocity of level m (and m − 1) interpolated onto the current mesh.
    pub ubar: &'a [f64],
    pub ubar_prev: &'a [f64],
    /// Prescribed values on fixed velocity dofs.
    pub boundary: &'a [f64],
    /// Interpolated force fields f1 and f2 at the new time.
    pub f1: &'a [f64],
    pub f2: &'a [f64],
    pub poly: &'a InterfacePolygon,
    pub poly_prev: &'a InterfacePolygon,
    pub rho_gamma: &'a [f64],
    pub rho_gamma_prev: &'a [f64],
    pub psi: &'a [f64],
    /// Scalar curvature (second scheme) or curvature vector, interleaved (first scheme).
    pub kappa: &'a [f64],
    pub numdiff_theta: f64,
}

pub struct CoupledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub fixed: Vec<Option<f64>>,
    pub layout: Layout,
    /// Surface viscosity block, kept for energy bookkeeping.
    pub surface_viscosity: CsrMatrix,
    /// Vertex velocities V − Ū of the previous step on the previous polygon.
    pub slip: Vec<Point>,
    pub bases: Vec<PointBasis>,
}

fn push_csr(trips: &mut Triplets, a: &CsrMatrix, r0: usize, c0: usize, scale: f64) {
    for i in 0..a.nrows {
        for (j, v) in a.row(i) {
            trips.push((r0 + i, c0 + j, scale * v));
        }
    }
}

pub fn assemble_coupled(d: &StepData) -> Result<CoupledSystem> {
    let p = d.params;
    let space = d.space;
    let nu = space.n_dofs();
    let k = d.poly.len();
    let layout = Layout { nu, np: d.pspace.n_dofs(), k, scheme: d.scheme };
    let n = layout.total();
    let tau = d.tau;
    let mut trips: Triplets = Vec::new();
    let mut rhs = vec![0.0; n];

    let locs = fem::locate_all(d.mesh, &d.poly.vertices)?;
    let bases = point_bases(space, &locs);
    let locs_prev = fem::locate_all(d.mesh, &d.poly_prev.vertices)?;
    let bases_prev = point_bases(space, &locs_prev);

    // bulk momentum
    let tm: Vec<f64> = d.rho.iter().zip(d.rho_tilde).map(|(a, b)| 0.5 * (a + b) / tau).collect();
    push_csr(&mut trips, &mass_matrix(d.mesh, space, &tm), 0, 0, 1.0);
    push_csr(&mut trips, &viscous_matrix(d.mesh, space, d.mu), 0, 0, 1.0);
    push_csr(&mut trips, &convection_matrix(d.mesh, space, d.rho, d.ubar), 0, 0, 1.0);
    let rt: Vec<f64> = d.rho_tilde.iter().map(|r| r / tau).collect();
    let ones = vec![1.0; d.rho.len()];
    for (i, v) in load_vector(d.mesh, space, &rt, d.ubar).into_iter().enumerate() {
        rhs[i] += v;
    }
    if d.f1.iter().any(|&x| x != 0.0) {
        for (i, v) in load_vector(d.mesh, space, d.rho, d.f1).into_iter().enumerate() {
            rhs[i] += v;
        }
    }
    if d.f2.iter().any(|&x| x != 0.0) {
        for (i, v) in load_vector(d.mesh, space, &ones, d.f2).into_iter().enumerate() {
            rhs[i] += v;
        }
    }

    // pressure coupling and continuity with the compatibility right-hand side
    let xcol = d.pspace.xfem.then(|| fem::xfem_column(d.mesh, space, d.poly, d.labels));
    let b = pressure_matrix(d.mesh, space, d.pspace, xcol.as_deref());
    push_csr(&mut trips, &b, layout.p0(), 0, 1.0);
    push_csr(&mut trips, &b.transpose(), 0, layout.p0(), 1.0);
    let flux = fem::boundary_flux(d.mesh, space, d.boundary);
    if flux != 0.0 {
        let omega = d.mesh.domain.area();
        let mut vol = vec![0.0; layout.np];
        for t in 0..d.mesh.num_triangles() {
            let a = d.mesh.area(t);
            for &v in &d.mesh.triangles[t] {
                vol[v] += a / 3.0;
            }
            if d.pspace.n_p0 > 0 {
                vol[d.pspace.n_p1 + t] = a;
            }
        }
        if let Some(x) = d.pspace.xfem_dof() {
            vol[x] = fem::inner_phase_area(d.mesh, d.poly, d.labels);
        }
        for (i, v) in vol.iter().enumerate() {
            rhs[layout.p0() + i] = -v / omega * flux;
        }
    }

    // surface density inertia
    let (rho_pos, rho_neg): (Vec<f64>, Vec<f64>) = match d.scheme {
        Scheme::Gd => (d.rho_gamma.to_vec(), vec![0.0; k]),
        Scheme::Bgn => (d.rho_gamma.iter().map(|r| r.max(0.0)).collect(), d.rho_gamma.iter().map(|r| r.min(0.0)).collect()),
    };
    if rho_pos.iter().any(|&r| r != 0.0) {
        push_csr(&mut trips, &rho_gamma_mass(d.poly, &rho_pos, &bases, nu), 0, 0, 1.0 / tau);
    }
    if rho_neg.iter().any(|&r| r != 0.0) {
        let m = rho_gamma_mass(d.poly, &rho_neg, &bases, nu);
        for (i, v) in m.matvec(d.ubar).into_iter().enumerate() {
            rhs[i] -= v / tau;
        }
    }
    let mut prev_terms: Vec<(Vec<f64>, &[f64])> = Vec::new();
    match d.scheme {
        Scheme::Gd => prev_terms.push((d.rho_gamma_prev.to_vec(), d.ubar)),
        Scheme::Bgn => {
            prev_terms.push((d.rho_gamma_prev.iter().map(|r| r.max(0.0)).collect(), d.ubar));
            prev_terms.push((d.rho_gamma_prev.iter().map(|r| r.min(0.0)).collect(), d.ubar_prev));
        }
    }
    for (w, u) in prev_terms {
        if w.iter().all(|&x| x == 0.0) {
            continue;
        }
        let m = rho_gamma_mass_prev(d.poly_prev, &w, &bases_prev, &bases, nu);
        for (i, v) in m.matvec(u).into_iter().enumerate() {
            rhs[i] += v / tau;
        }
    }

    // vertex velocities of the previous step relative to the bulk velocity
    let ubar_prev_pts = eval_bases(&bases_prev, d.ubar);
    let slip: Vec<Point> = (0..k)
        .map(|i| geom::sub(geom::scale(1.0 / tau, geom::sub(d.poly.vertices[i], d.poly_prev.vertices[i])), ubar_prev_pts[i]))
        .collect();
    if d.scheme == Scheme::Bgn {
        let rs = surface::rho_star(d.poly_prev, d.rho_gamma_prev);
        if rs.iter().any(|&r| r != 0.0) {
            let vel: Vec<Point> = (0..k).map(|i| geom::scale(1.0 / tau, geom::sub(d.poly.vertices[i], d.poly_prev.vertices[i]))).collect();
            for (i, v) in xi_rhs(d.poly_prev, &rs, d.ubar, &bases_prev, &vel, nu).into_iter().enumerate() {
                rhs[i] += v;
            }
        }
        if d.numdiff_theta > 0.0 {
            let ubar_pts = eval_bases(&bases, d.ubar);
            let v = diffusion_momentum_rhs(d.poly, d.rho_gamma, &slip, d.numdiff_theta, &ubar_pts, &bases, nu);
            for (i, x) in v.into_iter().enumerate() {
                rhs[i] += x;
            }
        }
    }

    // surface viscosity
    let sv = surface_viscosity_matrix(d.poly, d.psi, p, &bases, nu);
    push_csr(&mut trips, &sv, 0, 0, 1.0);

    // surface tension, Marangoni forces and the interface equations
    let g0 = p.eos.gamma0();
    let gam: Vec<f64> = match d.scheme {
        Scheme::Gd => d.psi.iter().map(|&r| p.eos.gamma(r)).collect::<Result<_>>()?,
        Scheme::Bgn => d.psi.iter().map(|&r| p.gamma_eps(r)).collect::<Result<_>>()?,
    };
    for (i, v) in marangoni_rhs(d.poly, &gam, &bases, nu).into_iter().enumerate() {
        rhs[i] += v;
    }
    let (diag, off) = d.poly.stiffness();
    let x0 = layout.x0();
    let c0 = layout.kappa0();
    match d.scheme {
        Scheme::Gd => {
            let m = d.poly.lumped_weights();
            for q in 0..k {
                let pb = &bases[q];
                for a in 0..6 {
                    for r in 0..2 {
                        let dof = 2 * pb.nodes[a] + r;
                        trips.push((dof, c0 + 2 * q + r, -g0 * m[q] * pb.phi[a]));
                        rhs[dof] += (gam[q] - g0) * m[q] * pb.phi[a] * d.kappa[2 * q + r];
                        // X_q − τ U(q_q) = q_q
                        trips.push((x0 + 2 * q + r, dof, -tau * pb.phi[a]));
                    }
                }
                for r in 0..2 {
                    trips.push((x0 + 2 * q + r, x0 + 2 * q + r, 1.0));
                    rhs[x0 + 2 * q + r] = d.poly.vertices[q][r];
                    // m κ + A X = 0
                    trips.push((c0 + 2 * q + r, c0 + 2 * q + r, m[q]));
                    trips.push((c0 + 2 * q + r, x0 + 2 * q + r, diag[q]));
                    let nx = (q + 1) % k;
                    trips.push((c0 + 2 * q + r, x0 + 2 * nx + r, off[q]));
                    trips.push((c0 + 2 * nx + r, x0 + 2 * q + r, off[q]));
                }
            }
        }
        Scheme::Bgn => {
            let nmat = fem::interface_normal_matrix(d.mesh, space, d.poly)?;
            let w = d.poly.weighted_normals();
            for q in 0..k {
                let c = (gam[q] - g0) * d.kappa[q];
                for &(dof, v) in &nmat[q] {
                    trips.push((dof, c0 + q, -g0 * v));
                    rhs[dof] += c * v;
                    // W . X − τ (N U) = W . q
                    trips.push((c0 + q, dof, -tau * v));
                }
                for r in 0..2 {
                    trips.push((c0 + q, x0 + 2 * q + r, w[q][r]));
                    // κ W + A X = 0
                    trips.push((x0 + 2 * q + r, c0 + q, w[q][r]));
                    trips.push((x0 + 2 * q + r, x0 + 2 * q + r, diag[q]));
                    let nx = (q + 1) % k;
                    trips.push((x0 + 2 * q + r, x0 + 2 * nx + r, off[q]));
                    trips.push((x0 + 2 * nx + r, x0 + 2 * q + r, off[q]));
                }
                rhs[c0 + q] = geom::dot(w[q], d.poly.vertices[q]);
            }
        }
    }

    // boundary conditions and pressure pins
    let mut fixed = vec![None; n];
    for (i, f) in space.fixed_dofs().into_iter().enumerate() {
        if f {
            fixed[i] = Some(d.boundary[i]);
        }
    }
    fixed[layout.p0()] = Some(0.0);
    if d.pspace.n_p0 > 0 {
        fixed[layout.p0() + d.pspace.n_p1] = Some(0.0);
    }
    Ok(CoupledSystem { matrix: CsrMatrix::from_triplets(n, n, &trips), rhs, fixed, layout, surface_viscosity: sv, slip, bases })
}

/// Shift the pressure so that its integral over the domain vanishes.
pub fn normalize_pressure(mesh: &BulkMesh, pspace: &PressureSpace, p: &mut [f64], inner_area: f64) {
    let omega = mesh.domain.area();
    let mut integral = 0.0;
    if pspace.n_p0 > 0 {
        let mut c0 = 0.0;
        for t in 0..mesh.num_triangles() {
            c0 += mesh.area(t) * p[pspace.n_p1 + t];
        }
        c0 /= omega;
        for t in 0..mesh.num_triangles() {
            p[pspace.n_p1 + t] -= c0;
        }
        for v in p[..pspace.n_p1].iter_mut() {
            *v += c0;
        }
    }
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t];
        integral += mesh.area(t) * (p[tri[0]] + p[tri[1]] + p[tri[2]]) / 3.0;
    }
    if let Some(x) = pspace.xfem_dof() {
        integral += p[x] * inner_area;
    }
    let c = integral / omega;
    for v in p[..pspace.n_p1].iter_mut() {
        *v -= c;
    }
}
