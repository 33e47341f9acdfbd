//! Operator checks shared by the integration tests and the acceptance binary.
//! Each returns the largest relative error seen, so callers choose the threshold.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bsflow::assembly::{self, Scheme};
use bsflow::fem::{self, P2Space};
use bsflow::geom::{self, Point};
use bsflow::interface::InterfacePolygon;
use bsflow::mesh::{BulkMesh, Domain};
use bsflow::params::{DiffusionWeight, EquationOfState, ForceField, PhysicalParams};
use bsflow::surface::{self, Mat2, SegmentFrame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_point(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    [r.gen_range(lo..hi), r.gen_range(lo..hi)]
}

/// A segment with length in [0.05, 2].
fn rand_segment(r: &mut ChaCha8Rng) -> (Point, Point) {
    loop {
        let a = rand_point(r, -1.0, 1.0);
        let b = rand_point(r, -1.0, 1.0);
        if geom::dist(a, b) > 0.05 {
            return (a, b);
        }
    }
}

/// Star-shaped closed polygon around `c` with radii in [r0, r1].
pub fn rand_polygon(r: &mut ChaCha8Rng, c: Point, r0: f64, r1: f64, k: usize) -> InterfacePolygon {
    let vertices = (0..k)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * (i as f64 + r.gen_range(-0.3..0.3)) / k as f64;
            let rad = r.gen_range(r0..r1);
            [c[0] + rad * phi.cos(), c[1] + rad * phi.sin()]
        })
        .collect();
    InterfacePolygon::new(vertices)
}

/// Ξ(z) ∇_s z = ½ ∇_s π[z²] on random segments with random nodal data.
pub fn xi_identity_error(samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (a, b) = rand_segment(&mut r);
        let (z1, z2) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let f = SegmentFrame::new(a, b);
        let lhs = surface::matvec(&f.xi_matrix(z1, z2), f.surface_gradient(z1, z2));
        let rhs = geom::scale(0.5, f.surface_gradient(z1 * z1, z2 * z2));
        let scale = (z1 * z1 + z2 * z2) / f.length;
        worst = worst.max(geom::dist(lhs, rhs) / scale.max(1.0));
    }
    worst
}

/// Largest entry of the deviatoric part of D_s over random segments and velocities.
pub fn deviatoric_max(samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (a, b) = rand_segment(&mut r);
        let f = SegmentFrame::new(a, b);
        let (_, _, dev) = f.rate_of_deformation(rand_point(&mut r, -1.0, 1.0), rand_point(&mut r, -1.0, 1.0));
        worst = worst.max(dev.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    worst
}

pub fn eos_family() -> Vec<EquationOfState> {
    vec![EquationOfState::linear(1.0, 0.5), EquationOfState::langmuir(24.5, 0.5, 3.0), EquationOfState::linear(0.2, 1.0)]
}

/// ⟨Ψ* η, ∇_s π F'_ε(Ψ)⟩ + ⟨η, ∇_s π γ_ε(Ψ)⟩ = 0 on random closed polygons,
/// random P1 vector fields η and concentrations including values below ε.
pub fn psi_star_sbp_error(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let eos = eos_family()[trial % 3];
        let params = PhysicalParams { eos, epsilon_reg: 1e-2, ..PhysicalParams::default() };
        let k = r.gen_range(3..40);
        let poly = rand_polygon(&mut r, [0.0, 0.0], 0.3, 1.0, k);
        let psi: Vec<f64> = (0..k)
            .map(|_| if r.gen_bool(0.2) { r.gen_range(-0.05..0.01) } else { r.gen_range(0.01..2.5) })
            .collect();
        let eta: Vec<Point> = (0..k).map(|_| rand_point(&mut r, -1.0, 1.0)).collect();
        let star = assembly::psi_star(&poly, &psi, &params).unwrap();
        let (mut sum, mut scale) = (0.0, 0.0);
        for j in 0..k {
            let f = SegmentFrame::of(&poly, j);
            let (a, b) = poly.seg(j);
            let eps = params.epsilon_reg;
            let gf = f.surface_gradient(eos.fprime_eps(eps, psi[a]).unwrap(), eos.fprime_eps(eps, psi[b]).unwrap());
            let gg = f.surface_gradient(eos.gamma_eps(eps, psi[a]).unwrap(), eos.gamma_eps(eps, psi[b]).unwrap());
            // η is P1 and the gradients are constant, so the midpoint value integrates exactly
            let em = geom::scale(0.5, geom::add(eta[a], eta[b]));
            let t1 = f.length * star[j] * geom::dot(em, gf);
            let t2 = f.length * geom::dot(em, gg);
            sum += t1 + t2;
            scale += t1.abs() + t2.abs();
        }
        worst = worst.max(sum.abs() / scale.max(1e-300));
    }
    worst
}

/// ⟨ζ, ∇_s.η⟩ + ⟨∇_s ζ, η⟩ = ⟨∇_s id, ∇_s π(ζη)⟩ with exact (two-point Gauss) integration.
pub fn jwb_error(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let k = r.gen_range(3..30);
        let c = rand_point(&mut r, -1.0, 1.0);
        let poly = rand_polygon(&mut r, c, 0.2, 1.5, k);
        let zeta: Vec<f64> = (0..k).map(|_| r.gen_range(-2.0..2.0)).collect();
        let eta: Vec<Point> = (0..k).map(|_| rand_point(&mut r, -2.0, 2.0)).collect();
        let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
        for j in 0..k {
            let f = SegmentFrame::of(&poly, j);
            let (a, b) = poly.seg(j);
            let (_, div, _) = f.rate_of_deformation(eta[a], eta[b]);
            let gz = f.surface_gradient(zeta[a], zeta[b]);
            let mut seg = 0.0;
            for s in gauss {
                let z = (1.0 - s) * zeta[a] + s * zeta[b];
                let e = geom::lerp(eta[a], eta[b], s);
                seg += 0.5 * f.length * (z * div + geom::dot(gz, e));
            }
            let prod = [geom::scale(zeta[a], eta[a]), geom::scale(zeta[b], eta[b])];
            let gp = f.vector_gradient(prod[0], prod[1]);
            let r_seg = f.length * surface::frobenius(&f.projection(), &gp);
            lhs += seg;
            rhs += r_seg;
            scale += seg.abs() + r_seg.abs();
        }
        worst = worst.max((lhs - rhs).abs() / scale.max(1e-300));
    }
    worst
}

/// A small random configuration: uniform mesh of the unit square, a polygon
/// inside it, and its previous position.
pub struct Config {
    pub mesh: BulkMesh,
    pub space: P2Space,
    pub poly: InterfacePolygon,
    pub poly_prev: InterfacePolygon,
    pub params: PhysicalParams,
}

pub fn rand_config(r: &mut ChaCha8Rng) -> Config {
    let n = r.gen_range(3..7);
    let mesh = BulkMesh::build_uniform(&Domain::rectangle([0.0, 1.0], [0.0, 1.0]), n).unwrap();
    let space = P2Space::new(&mesh);
    let k = r.gen_range(5..25);
    let poly_prev = rand_polygon(r, [0.5, 0.5], 0.15, 0.35, k);
    let poly = InterfacePolygon::new(poly_prev.vertices.iter().map(|q| geom::add(*q, rand_point(r, -0.03, 0.03))).collect());
    let params = PhysicalParams {
        mu_gamma_bar: r.gen_range(0.0..2.0),
        lambda_gamma_bar: r.gen_range(0.0..2.0),
        b_mu: r.gen_range(0.0..50.0),
        b_lambda: r.gen_range(0.0..50.0),
        theta_diffusion: DiffusionWeight::Zero,
        gravity_force: ForceField::Zero,
        ..PhysicalParams::default()
    };
    Config { mesh, space, poly, poly_prev, params }
}

fn rand_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn eval(c: &Config, u: &[f64], p: Point) -> Point {
    c.space.eval_at(&c.mesh, u, p).unwrap()
}

fn bases(c: &Config, poly: &InterfacePolygon) -> Vec<assembly::PointBasis> {
    assembly::point_bases(&c.space, &fem::locate_all(&c.mesh, &poly.vertices).unwrap())
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

/// Surface rate of deformation and divergence from nodal values, written out directly.
fn oracle_deformation(q1: Point, q2: Point, u1: Point, u2: Point) -> (Mat2, f64) {
    let e = geom::sub(q2, q1);
    let l = geom::norm(e);
    let t = [e[0] / l, e[1] / l];
    let du = [(u2[0] - u1[0]) / l, (u2[1] - u1[1]) / l];
    // ∇_s u = du ⊗ t, D_s = P sym(∇_s u) P with P = t ⊗ t
    let tgt = t[0] * du[0] + t[1] * du[1];
    let d = [[tgt * t[0] * t[0], tgt * t[0] * t[1]], [tgt * t[1] * t[0], tgt * t[1] * t[1]]];
    (d, du[0] * t[0] + du[1] * t[1])
}

/// Relative mismatch of the five surface assemblies against direct lumped
/// quadrature with velocities evaluated by point location, over random
/// configurations. Order: surface mass, two-polygon mass, vertex Ξ, bulk Ξ,
/// surface viscosity.
pub fn algorithm_errors(trials: usize, seed: u64) -> [f64; 5] {
    let mut r = rng(seed);
    let mut worst = [0.0f64; 5];
    for _ in 0..trials {
        let c = rand_config(&mut r);
        let nd = c.space.n_dofs();
        let k = c.poly.len();
        let (u, xi, ubar) = (rand_vec(&mut r, nd), rand_vec(&mut r, nd), rand_vec(&mut r, nd));
        let rho: Vec<f64> = (0..k).map(|_| r.gen_range(-0.2..2.0)).collect();
        let psi: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..2.0)).collect();
        let b_cur = bases(&c, &c.poly);
        let b_prev = bases(&c, &c.poly_prev);
        let q = &c.poly.vertices;
        let qp = &c.poly_prev.vertices;

        // surface mass
        let m = assembly::rho_gamma_mass(&c.poly, &rho, &b_cur, nd);
        let (mut o, mut s) = (0.0, 0.0);
        for j in 0..k {
            let (a, b) = c.poly.seg(j);
            for v in [a, b] {
                let t = 0.5 * c.poly.seg_length(j) * rho[v] * geom::dot(eval(&c, &u, q[v]), eval(&c, &xi, q[v]));
                o += t;
                s += t.abs();
            }
        }
        worst[0] = worst[0].max(rel(m.bilinear(&xi, &u), o, s));

        // two-polygon mass: weights and trial values on the previous polygon, test values at the new positions
        let m = assembly::rho_gamma_mass_prev(&c.poly_prev, &rho, &b_prev, &b_cur, nd);
        let (mut o, mut s) = (0.0, 0.0);
        for j in 0..k {
            let (a, b) = c.poly_prev.seg(j);
            for v in [a, b] {
                let t = 0.5 * c.poly_prev.seg_length(j) * rho[v] * geom::dot(eval(&c, &u, qp[v]), eval(&c, &xi, q[v]));
                o += t;
                s += t.abs();
            }
        }
        worst[1] = worst[1].max(rel(m.bilinear(&xi, &u), o, s));

        // vertex and bulk Ξ entries through the assembled right-hand side:
        // −Σ_r ⟨ρ* (V − Ū), Ξ(Ū_r) ∇_s π ξ_r⟩ on the previous polygon. For a
        // tangential argument Ξ(z) acts as multiplication by the segment mean of z.
        let vel: Vec<Point> = (0..k).map(|_| rand_point(&mut r, -1.0, 1.0)).collect();
        let rs: Vec<f64> = (0..k)
            .map(|j| {
                let (a, b) = c.poly_prev.seg(j);
                if rho[a] < 0.0 || rho[b] < 0.0 { 0.0 } else { 0.5 * (rho[a] + rho[b]) }
            })
            .collect();
        let rhs = assembly::xi_rhs(&c.poly_prev, &rs, &ubar, &b_prev, &vel, nd);
        let (mut o3, mut s3, mut o4, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..k {
            let (a, b) = c.poly_prev.seg(j);
            let l = c.poly_prev.seg_length(j);
            let t = geom::scale(1.0 / l, geom::sub(qp[b], qp[a]));
            let (ua, ub) = (eval(&c, &ubar, qp[a]), eval(&c, &ubar, qp[b]));
            let (xa, xb) = (eval(&c, &xi, qp[a]), eval(&c, &xi, qp[b]));
            let w: [Point; 2] = std::array::from_fn(|comp| {
                let mean = 0.5 * (ua[comp] + ub[comp]);
                geom::scale(mean * (xb[comp] - xa[comp]) / l, t)
            });
            for v in [a, b] {
                let uv = eval(&c, &ubar, qp[v]);
                for wr in w {
                    let t3 = -0.5 * l * rs[j] * geom::dot(vel[v], wr);
                    let t4 = 0.5 * l * rs[j] * geom::dot(uv, wr);
                    o3 += t3;
                    s3 += t3.abs();
                    o4 += t4;
                    s4 += t4.abs();
                }
            }
        }
        // split the check: the vertex-velocity part is linear in V, the bulk part is not
        let zero: Vec<Point> = vec![[0.0, 0.0]; k];
        let rhs4 = assembly::xi_rhs(&c.poly_prev, &rs, &ubar, &b_prev, &zero, nd);
        let dot = |v: &[f64]| v.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>();
        let rhs3: Vec<f64> = rhs.iter().zip(&rhs4).map(|(a, b)| a - b).collect();
        worst[2] = worst[2].max(rel(dot(&rhs3), o3, s3));
        worst[3] = worst[3].max(rel(dot(&rhs4), o4, s4));

        // surface viscosity
        let kmat = assembly::surface_viscosity_matrix(&c.poly, &psi, &c.params, &b_cur, nd);
        let (mut o, mut s) = (0.0, 0.0);
        for j in 0..k {
            let (a, b) = c.poly.seg(j);
            let l = c.poly.seg_length(j);
            let mu = 0.5 * (c.params.mu_gamma_of(psi[a]) + c.params.mu_gamma_of(psi[b]));
            let lam = 0.5 * (c.params.lambda_gamma_of(psi[a]) + c.params.lambda_gamma_of(psi[b]));
            let (du, divu) = oracle_deformation(q[a], q[b], eval(&c, &u, q[a]), eval(&c, &u, q[b]));
            let (dx, divx) = oracle_deformation(q[a], q[b], eval(&c, &xi, q[a]), eval(&c, &xi, q[b]));
            let t1 = l * 2.0 * mu * surface::frobenius(&du, &dx);
            let t2 = l * lam * divu * divx;
            o += t1 + t2;
            s += t1.abs() + t2.abs();
        }
        worst[4] = worst[4].max(rel(kmat.bilinear(&xi, &u), o, s));
    }
    worst
}

/// Largest |C_ij + C_ji| relative to max |C| and |vᵀ C v| relative to |v|² max|C|
/// for the convection block with random advecting fields.
pub fn convection_antisymmetry(trials: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut worst_entry, mut worst_form) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let c = rand_config(&mut r);
        let nd = c.space.n_dofs();
        let nt = c.mesh.num_triangles();
        let rho: Vec<f64> = (0..nt).map(|_| r.gen_range(0.0..1000.0)).collect();
        let w = rand_vec(&mut r, nd);
        let m = assembly::convection_matrix(&c.mesh, &c.space, &rho, &w);
        let cmax = (0..nd).flat_map(|i| m.row(i).map(|(_, v)| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
        for i in 0..nd {
            for (j, v) in m.row(i) {
                worst_entry = worst_entry.max((v + m.get(j, i)).abs() / cmax);
            }
        }
        let v = rand_vec(&mut r, nd);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        worst_form = worst_form.max(m.bilinear(&v, &v).abs() / (vv * cmax));
    }
    (worst_entry, worst_form)
}

/// The schemes as a list, for loops over both.
pub const SCHEMES: [Scheme; 2] = [Scheme::Gd, Scheme::Bgn];
