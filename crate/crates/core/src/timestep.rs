//! Simulation state, one fully discrete step of either scheme, diagnostics
//! and checkpoints.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{self, Scheme, StepData};
use crate::error::{Error, Result};
use crate::fem::{self, P2Space, PressureKind, PressureSpace};
use crate::geom::{self, Point};
use crate::interface::InterfacePolygon;
use crate::mesh::{self, BulkMesh, Domain, ElementLabel};
use crate::params::PhysicalParams;
use crate::solver;

/// Dirichlet data on the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Zero,
    /// g(z) = (rate * z_2, 0)
    Shear { rate: f64 },
    /// g(z) = alpha z / |z|^2
    Radial { alpha: f64 },
}

impl BoundaryData {
    pub fn eval(&self, z: Point) -> Point {
        match *self {
            BoundaryData::Zero => [0.0, 0.0],
            BoundaryData::Shear { rate } => [rate * z[1], 0.0],
            BoundaryData::Radial { alpha } => geom::scale(alpha / geom::dot(z, z), z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n_fine: usize,
    pub n_coarse: usize,
    pub tau: f64,
    pub xfem: bool,
    pub pressure: PressureKind,
    pub numdiff: bool,
    pub solver_tol: f64,
}

impl Discretization {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        if self.n_coarse == 0 || self.n_fine < self.n_coarse {
            return Err(Error::InvalidParameter("need n_fine >= n_coarse >= 1".into()));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::InvalidParameter("solver_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Initial data for a run.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub poly: InterfacePolygon,
    pub rho_gamma: Vec<f64>,
    pub psi: Vec<f64>,
    /// Start from the interpolated boundary field instead of rest.
    pub velocity_from_boundary: bool,
    /// Radius of a circular start, giving the scalar curvature −1/R.
    pub circle_radius: Option<f64>,
}

/// One bulk mesh together with its derived spaces.
#[derive(Clone, Debug)]
pub struct Level {
    pub mesh: Arc<BulkMesh>,
    pub space: Arc<P2Space>,
}

impl Level {
    fn new(mesh: BulkMesh) -> Self {
        let space = P2Space::new(&mesh);
        Self { mesh: Arc::new(mesh), space: Arc::new(space) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step: usize,
    pub t: f64,
    pub kinetic: f64,
    pub surface_kinetic: f64,
    pub interface_energy: f64,
    pub total_psi: f64,
    pub total_rho_gamma: f64,
    pub area: f64,
    pub min_psi: f64,
    pub max_psi: f64,
    pub min_rho_gamma: f64,
    pub max_rho_gamma: f64,
    pub edge_ratio: f64,
    pub dissipation: f64,
    /// Energy of the data entering the step.
    pub energy_old: f64,
    /// Energy after the step.
    pub energy_new: f64,
    pub residual: f64,
    pub pressure_jump: f64,
}

/// Discrete state at time level m with the carry-overs of level m − 1.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub scheme: Scheme,
    pub params: PhysicalParams,
    pub disc: Discretization,
    pub boundary: BoundaryData,
    pub m: usize,
    pub t: f64,
    /// Mesh adapted to the current interface, with labels and coefficients.
    pub current: Level,
    pub labels: Vec<ElementLabel>,
    pub rho: Vec<f64>,
    pub mu: Vec<f64>,
    pub poly: InterfacePolygon,
    pub rho_gamma: Vec<f64>,
    pub psi: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Velocity of level m and the mesh it lives on (adapted to level m − 1).
    pub u_level: Level,
    pub u: Vec<f64>,
    /// Pressure of level m on `u_level`.
    pub p: Vec<f64>,
    /// Density field of level m − 1 on `u_level`.
    pub rho_prev: Vec<f64>,
    pub poly_prev: InterfacePolygon,
    pub rho_gamma_prev: Vec<f64>,
    /// Velocity of level m − 1 and its mesh (adapted to level m − 2).
    pub u_prev_level: Level,
    pub u_prev: Vec<f64>,
    pub poly_prev2: InterfacePolygon,
}

fn adapt_to(domain: &Domain, disc: &Discretization, poly: &InterfacePolygon, generation: u64) -> Result<BulkMesh> {
    let base = BulkMesh::build_uniform(domain, disc.n_coarse)?;
    let mut m = base.adapt_mesh(poly, disc.n_fine, disc.n_coarse)?;
    m.generation = generation;
    Ok(m)
}

/// Vector curvature from ⟨κ, η⟩^h + ⟨∇_s id, ∇_s η⟩ = 0, interleaved.
pub fn curvature_vector(poly: &InterfacePolygon) -> Vec<f64> {
    let (diag, off) = poly.stiffness();
    let m = poly.lumped_weights();
    let k = poly.len();
    let mut out = vec![0.0; 2 * k];
    for q in 0..k {
        let (pv, nx) = ((q + k - 1) % k, (q + 1) % k);
        for r in 0..2 {
            let ax = diag[q] * poly.vertices[q][r] + off[q] * poly.vertices[nx][r] + off[pv] * poly.vertices[pv][r];
            out[2 * q + r] = -ax / m[q];
        }
    }
    out
}

/// Scalar curvature by projecting the vector curvature onto the weighted normals.
pub fn curvature_scalar(poly: &InterfacePolygon) -> Vec<f64> {
    let kv = curvature_vector(poly);
    let m = poly.lumped_weights();
    poly.weighted_normals()
        .iter()
        .enumerate()
        .map(|(q, w)| m[q] * geom::dot([kv[2 * q], kv[2 * q + 1]], *w) / geom::dot(*w, *w))
        .collect()
}

impl SimulationState {
    pub fn new(
        scheme: Scheme,
        params: PhysicalParams,
        disc: Discretization,
        domain: Domain,
        boundary: BoundaryData,
        init: InitialData,
    ) -> Result<Self> {
        params.validate()?;
        disc.validate()?;
        init.poly.validate()?;
        let k = init.poly.len();
        if init.rho_gamma.len() != k || init.psi.len() != k {
            return Err(Error::InvalidParameter("surface fields must have one value per interface vertex".into()));
        }
        let mesh = adapt_to(&domain, &disc, &init.poly, 0)?;
        let current = Level::new(mesh);
        let labels = current.mesh.classify_elements(&init.poly)?;
        let (rho, mu) = mesh::piecewise_coefficients(&labels, &params);
        let u = if init.velocity_from_boundary {
            current.space.interpolate(|z| boundary.eval(z))
        } else {
            current.space.boundary_values(|z| boundary.eval(z))
        };
        let kappa = match (scheme, init.circle_radius) {
            (Scheme::Gd, _) => curvature_vector(&init.poly),
            (Scheme::Bgn, Some(r)) => vec![-1.0 / r; k],
            (Scheme::Bgn, None) => curvature_scalar(&init.poly),
        };
        let np = PressureSpace::new(&current.mesh, disc.pressure, disc.xfem).n_dofs();
        Ok(Self {
            scheme,
            params,
            disc,
            boundary,
            m: 0,
            t: 0.0,
            u_level: current.clone(),
            u_prev_level: current.clone(),
            u_prev: u.clone(),
            u,
            p: vec![0.0; np],
            rho_prev: rho.clone(),
            current,
            labels,
            rho,
            mu,
            poly_prev: init.poly.clone(),
            poly_prev2: init.poly.clone(),
            poly: init.poly,
            rho_gamma_prev: init.rho_gamma.clone(),
            rho_gamma: init.rho_gamma,
            psi: init.psi,
            kappa,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.current.mesh.domain
    }

    pub fn pressure_space(&self) -> PressureSpace {
        PressureSpace::new(&self.u_level.mesh, self.disc.pressure, self.disc.xfem)
    }

    /// Enrichment coefficient of the current pressure.
    pub fn pressure_jump(&self) -> Option<f64> {
        self.pressure_space().xfem_dof().map(|x| self.p[x])
    }

    pub fn interface_energy(&self, psi: &[f64], poly: &InterfacePolygon) -> Result<f64> {
        let f: Vec<f64> = psi.iter().map(|&r| self.params.eos.f_eps(self.params.epsilon_reg, r)).collect::<Result<_>>()?;
        Ok(poly.lumped_integral(&f))
    }

    /// Diagnostics of the current level without step information.
    pub fn diagnostics(&self) -> Result<Diagnostics> {
        let space = &self.u_level.space;
        let rho = if Arc::ptr_eq(&self.u_level.mesh, &self.current.mesh) {
            self.rho.clone()
        } else {
            let labels = self.u_level.mesh.classify_elements(&self.poly_prev)?;
            mesh::piecewise_coefficients(&labels, &self.params).0
        };
        let kinetic = 0.5 * assembly::mass_matrix(&self.u_level.mesh, space, &rho).bilinear(&self.u, &self.u);
        let locs = fem::locate_all(&self.u_level.mesh, &self.poly.vertices)?;
        let uq = assembly::eval_bases(&assembly::point_bases(space, &locs), &self.u);
        let sk: Vec<f64> = uq.iter().zip(&self.rho_gamma).map(|(u, r)| r * geom::dot(*u, *u)).collect();
        let ie = self.interface_energy(&self.psi, &self.poly)?;
        let fold = |v: &[f64]| (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (min_psi, max_psi) = fold(&self.psi);
        let (min_rho_gamma, max_rho_gamma) = fold(&self.rho_gamma);
        Ok(Diagnostics {
            step: self.m,
            t: self.t,
            kinetic,
            surface_kinetic: 0.5 * self.poly.lumped_integral(&sk),
            interface_energy: ie,
            total_psi: self.poly.lumped_integral(&self.psi),
            total_rho_gamma: self.poly.lumped_integral(&self.rho_gamma),
            area: self.poly.signed_area(),
            min_psi,
            max_psi,
            min_rho_gamma,
            max_rho_gamma,
            edge_ratio: self.poly.mesh_quality().0,
            energy_new: kinetic + 0.5 * self.poly.lumped_integral(&sk) + ie,
            pressure_jump: self.pressure_jump().unwrap_or(0.0),
            ..Default::default()
        })
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<Diagnostics> {
        let tau = self.disc.tau;
        let t_new = self.t + tau;
        let cur = self.current.clone();
        let (mesh, space) = (&*cur.mesh, &*cur.space);
        if self.scheme == Scheme::Bgn {
            self.poly.check_normal_span()?;
        }
        let pspace = PressureSpace::new(mesh, self.disc.pressure, self.disc.xfem);
        let ubar = fem::transfer_velocity(&self.u_level.mesh, &self.u_level.space, &self.u, mesh, space)?;
        let ubar_prev = fem::transfer_velocity(&self.u_prev_level.mesh, &self.u_prev_level.space, &self.u_prev, mesh, space)?;
        let rho_tilde = fem::transfer_p0(&self.u_level.mesh, &self.rho_prev, mesh)?;
        let bvals = space.boundary_values(|z| self.boundary.eval(z));
        let f1 = if self.params.gravity_force.is_zero() {
            vec![0.0; space.n_dofs()]
        } else {
            space.interpolate(|z| self.params.gravity_force.eval(z, t_new))
        };
        let f2 = if self.params.extra_force.is_zero() {
            vec![0.0; space.n_dofs()]
        } else {
            space.interpolate(|z| self.params.extra_force.eval(z, t_new))
        };
        let theta = if self.scheme == Scheme::Bgn && self.disc.numdiff {
            self.params.theta_diffusion.eval(self.poly.h_gamma())
        } else {
            0.0
        };
        let data = StepData {
            scheme: self.scheme,
            params: &self.params,
            tau,
            mesh,
            space,
            pspace: &pspace,
            labels: &self.labels,
            rho: &self.rho,
            mu: &self.mu,
            rho_tilde: &rho_tilde,
            ubar: &ubar,
            ubar_prev: &ubar_prev,
            boundary: &bvals,
            f1: &f1,
            f2: &f2,
            poly: &self.poly,
            poly_prev: &self.poly_prev,
            rho_gamma: &self.rho_gamma,
            rho_gamma_prev: &self.rho_gamma_prev,
            psi: &self.psi,
            kappa: &self.kappa,
            numdiff_theta: theta,
        };
        let sys = assembly::assemble_coupled(&data)?;
        let (x, residual) = solver::solve_constrained(&sys.matrix, &sys.rhs, &sys.fixed, self.disc.solver_tol)?;
        if !(residual <= self.disc.solver_tol) {
            return Err(Error::Solver(format!("relative residual {residual:.3e} exceeds {:.1e}", self.disc.solver_tol)));
        }
        let lay = sys.layout;
        let u_new = x[..lay.nu].to_vec();
        let mut p_new = x[lay.p0()..lay.x0()].to_vec();
        assembly::normalize_pressure(mesh, &pspace, &mut p_new, fem::inner_phase_area(mesh, &self.poly, &self.labels));
        let verts: Vec<Point> = (0..lay.k).map(|q| [x[lay.x0() + 2 * q], x[lay.x0() + 2 * q + 1]]).collect();
        let kappa_new = x[lay.kappa0()..].to_vec();
        let poly_new = InterfacePolygon::new(verts);
        poly_new.validate()?;

        // transport velocity relative to the fluid at the old vertices
        let uq = assembly::eval_bases(&sys.bases, &u_new);
        let v: Vec<Point> = (0..lay.k)
            .map(|q| geom::sub(geom::scale(1.0 / tau, geom::sub(poly_new.vertices[q], self.poly.vertices[q])), uq[q]))
            .collect();
        let rho_gamma_new = assembly::update_rho_gamma(self.scheme, &self.poly, &poly_new, &self.rho_gamma, &v, theta, tau);
        let psi_new = assembly::update_psi(self.scheme, &self.poly, &poly_new, &self.psi, &v, &self.params, tau, self.disc.solver_tol)?;

        // energy bookkeeping for the step
        let visc = assembly::viscous_matrix(mesh, space, &self.mu);
        let m_tilde = assembly::mass_matrix(mesh, space, &rho_tilde);
        let m_rho = assembly::mass_matrix(mesh, space, &self.rho);
        let du: Vec<f64> = u_new.iter().zip(&ubar).map(|(a, b)| a - b).collect();
        let ubq = assembly::eval_bases(&sys.bases, &ubar);
        let m_old = self.poly.lumped_weights();
        let sk_old: f64 = (0..lay.k).map(|q| 0.5 * m_old[q] * self.rho_gamma[q] * geom::dot(ubq[q], ubq[q])).sum();
        let sk_new: f64 = (0..lay.k).map(|q| 0.5 * m_old[q] * self.rho_gamma[q] * geom::dot(uq[q], uq[q])).sum();
        let ie_old = self.interface_energy(&self.psi, &self.poly)?;
        let ie_new = self.interface_energy(&psi_new, &poly_new)?;
        let kin_new = 0.5 * m_rho.bilinear(&u_new, &u_new);
        let energy_old = 0.5 * m_tilde.bilinear(&ubar, &ubar) + sk_old + ie_old;
        let energy_new = kin_new + sk_new + ie_new;
        let dissipation = 0.5 * m_tilde.bilinear(&du, &du)
            + tau * visc.bilinear(&u_new, &u_new)
            + tau * sys.surface_viscosity.bilinear(&u_new, &u_new);

        // shift levels
        let next_mesh = adapt_to(&mesh.domain, &self.disc, &poly_new, mesh.generation + 1)?;
        let next = Level::new(next_mesh);
        let labels = next.mesh.classify_elements(&poly_new)?;
        let (rho, mu) = mesh::piecewise_coefficients(&labels, &self.params);
        self.u_prev_level = std::mem::replace(&mut self.u_level, cur);
        self.u_prev = std::mem::replace(&mut self.u, u_new);
        self.p = p_new;
        self.rho_prev = std::mem::replace(&mut self.rho, rho);
        self.mu = mu;
        self.labels = labels;
        self.current = next;
        self.poly_prev2 = std::mem::replace(&mut self.poly_prev, std::mem::replace(&mut self.poly, poly_new));
        self.rho_gamma_prev = std::mem::replace(&mut self.rho_gamma, rho_gamma_new);
        self.psi = psi_new;
        self.kappa = kappa_new;
        self.m += 1;
        self.t = t_new;

        let fold = |v: &[f64]| (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (min_psi, max_psi) = fold(&self.psi);
        let (min_rho_gamma, max_rho_gamma) = fold(&self.rho_gamma);
        let d = Diagnostics {
            step: self.m,
            t: self.t,
            kinetic: kin_new,
            surface_kinetic: sk_new,
            interface_energy: ie_new,
            total_psi: self.poly.lumped_integral(&self.psi),
            total_rho_gamma: self.poly.lumped_integral(&self.rho_gamma),
            area: self.poly.signed_area(),
            min_psi,
            max_psi,
            min_rho_gamma,
            max_rho_gamma,
            edge_ratio: self.poly.mesh_quality().0,
            dissipation,
            energy_old,
            energy_new,
            residual,
            pressure_jump: self.pressure_jump().unwrap_or(0.0),
        };
        let finite = [d.kinetic, d.surface_kinetic, d.interface_energy, d.total_psi, d.total_rho_gamma, d.area, d.dissipation]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Solver("non-finite diagnostics".into()));
        }
        Ok(d)
    }

    /// Write a checkpoint: magic, version, JSON header, then little-endian arrays.
    pub fn write_checkpoint(&self, w: &mut impl Write) -> Result<()> {
        let header = CheckpointHeader {
            scheme: self.scheme,
            params: self.params.clone(),
            disc: self.disc.clone(),
            boundary: self.boundary,
            domain: self.domain().clone(),
            m: self.m,
            t: self.t,
            generations: [self.current.mesh.generation, self.u_level.mesh.generation, self.u_prev_level.mesh.generation],
        };
        let h = serde_json::to_vec(&header)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(h.len() as u64).to_le_bytes())?;
        w.write_all(&h)?;
        let flat = |p: &InterfacePolygon| p.vertices.iter().flat_map(|v| *v).collect::<Vec<f64>>();
        for arr in [
            flat(&self.poly),
            flat(&self.poly_prev),
            flat(&self.poly_prev2),
            self.rho_gamma.clone(),
            self.rho_gamma_prev.clone(),
            self.psi.clone(),
            self.kappa.clone(),
            self.u.clone(),
            self.u_prev.clone(),
            self.p.clone(),
            self.rho_prev.clone(),
        ] {
            w.write_all(&(arr.len() as u64).to_le_bytes())?;
            for v in arr {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Config("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CHECKPOINT_VERSION {
            return Err(Error::Config("unsupported checkpoint version".into()));
        }
        let read_u64 = |r: &mut dyn Read| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let hl = read_u64(r)? as usize;
        let mut h = vec![0u8; hl];
        r.read_exact(&mut h)?;
        let header: CheckpointHeader = serde_json::from_slice(&h)?;
        let mut arrays = Vec::new();
        for _ in 0..11 {
            let n = read_u64(r)? as usize;
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(f64::from_bits(read_u64(r)?));
            }
            arrays.push(v);
        }
        let poly = |v: &[f64]| InterfacePolygon::new(v.chunks(2).map(|c| [c[0], c[1]]).collect());
        let [g0, g1, g2] = header.generations;
        let (p0, p1, p2) = (poly(&arrays[0]), poly(&arrays[1]), poly(&arrays[2]));
        let current = Level::new(adapt_to(&header.domain, &header.disc, &p0, g0)?);
        let u_level = Level::new(adapt_to(&header.domain, &header.disc, &p1, g1)?);
        let u_prev_level = Level::new(adapt_to(&header.domain, &header.disc, &p2, g2)?);
        let labels = current.mesh.classify_elements(&p0)?;
        let (rho, mu) = mesh::piecewise_coefficients(&labels, &header.params);
        let mut it = arrays.into_iter().skip(3);
        let mut next = || it.next().unwrap_or_default();
        Ok(Self {
            scheme: header.scheme,
            params: header.params,
            disc: header.disc,
            boundary: header.boundary,
            m: header.m,
            t: header.t,
            current,
            labels,
            rho,
            mu,
            poly: p0,
            poly_prev: p1,
            poly_prev2: p2,
            rho_gamma: next(),
            rho_gamma_prev: next(),
            psi: next(),
            kappa: next(),
            u: next(),
            u_prev: next(),
            p: next(),
            rho_prev: next(),
            u_level,
            u_prev_level,
        })
    }
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BSFLOWCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    scheme: Scheme,
    params: PhysicalParams,
    disc: Discretization,
    boundary: BoundaryData,
    domain: Domain,
    m: usize,
    t: f64,
    generations: [u64; 3],
}
