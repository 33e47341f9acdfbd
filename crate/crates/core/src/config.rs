//! Experiment configuration and the built-in presets.

use serde::{Deserialize, Serialize};

use crate::assembly::Scheme;
use crate::error::{Error, Result};
use crate::exact::ExpandingBubble;
use crate::fem::PressureKind;
use crate::interface::InterfacePolygon;
use crate::mesh::Domain;
use crate::params::{DiffusionWeight, EquationOfState, ForceField, PhysicalParams};
use crate::timestep::{BoundaryData, Discretization, InitialData};

pub const SCHEMA_VERSION: u32 = 1;

/// Initial surfactant profile on the interface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfactantProfile {
    Constant { value: f64 },
    /// floor + [z_1]_+
    RightHalf { floor: f64 },
}

impl SurfactantProfile {
    pub fn eval(&self, z: [f64; 2]) -> f64 {
        match *self {
            SurfactantProfile::Constant { value } => value,
            SurfactantProfile::RightHalf { floor } => floor + z[0].max(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub center: [f64; 2],
    pub radius: f64,
    /// Semi-axes of an elliptic start; overrides `radius` when present.
    #[serde(default)]
    pub ellipse: Option<[f64; 2]>,
    pub k_gamma: usize,
    pub psi: SurfactantProfile,
    pub rho_gamma: f64,
    pub velocity_from_boundary: bool,
}

impl InitialSpec {
    pub fn build(&self) -> Result<InitialData> {
        if self.k_gamma < 3 {
            return Err(Error::Config("k_gamma must be at least 3".into()));
        }
        let poly = match self.ellipse {
            Some([a, b]) => InterfacePolygon::make_ellipse(self.center, a, b, self.k_gamma),
            None => InterfacePolygon::make_circle(self.center, self.radius, self.k_gamma),
        };
        let psi = poly.vertices.iter().map(|&z| self.psi.eval(z)).collect();
        let k = poly.len();
        Ok(InitialData {
            poly,
            rho_gamma: vec![self.rho_gamma; k],
            psi,
            velocity_from_boundary: self.velocity_from_boundary,
            circle_radius: self.ellipse.is_none().then_some(self.radius),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSpec {
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Write diagnostics every this many steps (0: never).
    pub csv_every: usize,
    /// Write interface and mesh snapshots every this many steps (0: only first and last).
    pub snapshot_every: usize,
    /// Times at which interfaces are overlaid in the SVG plot.
    pub svg_times: Vec<f64>,
    #[serde(default)]
    pub checkpoint_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { csv_every: 1, snapshot_every: 0, svg_times: Vec::new(), checkpoint_every: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub scheme: Scheme,
    pub params: PhysicalParams,
    pub domain: Domain,
    pub boundary: BoundaryData,
    pub initial: InitialSpec,
    pub disc: Discretization,
    pub t_end: f64,
    #[serde(default)]
    pub exact: Option<ExactSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema version {}", self.schema_version)));
        }
        self.params.validate()?;
        self.disc.validate()?;
        if !(self.t_end >= self.disc.tau) {
            return Err(Error::Config("t_end must be at least tau".into()));
        }
        if self.initial.k_gamma < 3 {
            return Err(Error::Config("k_gamma must be at least 3".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Number of steps to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.disc.tau - 1e-9).ceil() as usize
    }

    pub fn exact_solution(&self) -> Result<Option<ExpandingBubble>> {
        self.exact
            .as_ref()
            .map(|e| ExpandingBubble::new(e.alpha, self.initial.radius, self.initial.rho_gamma, &self.params))
            .transpose()
    }

    /// Apply the discretization shorthand n·adapt_{k,l}: N_f = 2^k, N_c = 2^l,
    /// K_Γ = 2^k and τ = 1e-3 / n.
    pub fn with_adapt(mut self, n: usize, k: u32, l: u32) -> Self {
        self.disc.n_fine = 1 << k;
        self.disc.n_coarse = 1 << l;
        self.initial.k_gamma = 1 << k;
        self.disc.tau = 1e-3 / n as f64;
        self
    }
}

fn base_disc() -> Discretization {
    Discretization { n_fine: 32, n_coarse: 8, tau: 1e-3, xfem: true, pressure: PressureKind::P1, numdiff: false, solver_tol: 1e-10 }
}

pub const PRESETS: &[&str] = &["expanding", "shear2d", "shear2d-surfactant", "rising2d", "relax2d"];

/// Interface vertex count used with a uniform mesh of size 1/inv_h in the
/// expanding-bubble study: the power of two that keeps h_Γ ≤ h/3 up to T = 1,
/// where the circle has grown to radius sqrt(0.55).
pub fn expanding_k_gamma(inv_h: usize) -> usize {
    let circumference = 2.0 * std::f64::consts::PI * 0.55f64.sqrt();
    let target = 3.0 * circumference * inv_h as f64;
    1usize << (target.log2().ceil() as u32)
}

/// Expanding-bubble configuration on a uniform mesh of size 1/inv_h.
pub fn expanding(scheme: Scheme, inv_h: usize, tau: f64) -> ExperimentConfig {
    let alpha = 0.15;
    let params = PhysicalParams {
        rho_plus: 0.0,
        rho_minus: 0.0,
        mu_plus: 1.0,
        mu_minus: 1.0,
        eos: EquationOfState::constant(1.0),
        d_gamma: 0.0,
        mu_gamma_bar: 1.0,
        lambda_gamma_bar: 1.0,
        b_mu: 0.0,
        b_lambda: 0.0,
        epsilon_reg: 1e-8,
        theta_diffusion: DiffusionWeight::Zero,
        gravity_force: ForceField::RadialExpansion { alpha },
        extra_force: ForceField::Zero,
    };
    let n = 2 * inv_h;
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: "expanding".into(),
        scheme,
        params,
        domain: Domain { x: [-1.0, 1.0], y: [-1.0, 1.0], hole: Some([[-1.0 / 3.0, 1.0 / 3.0], [-1.0 / 3.0, 1.0 / 3.0]]), free_slip_sides: false },
        boundary: BoundaryData::Radial { alpha },
        initial: InitialSpec {
            center: [0.0, 0.0],
            radius: 0.5,
            ellipse: None,
            k_gamma: expanding_k_gamma(inv_h),
            psi: SurfactantProfile::Constant { value: 1.0 },
            rho_gamma: 1.0,
            velocity_from_boundary: true,
        },
        disc: Discretization { n_fine: n, n_coarse: n, tau, ..base_disc() },
        t_end: 1.0,
        exact: Some(ExactSpec { alpha }),
        output: OutputSpec { svg_times: vec![0.0, 0.5, 1.0], ..Default::default() },
    }
}

fn shear_params() -> PhysicalParams {
    PhysicalParams {
        rho_plus: 1.0,
        rho_minus: 1.0,
        mu_plus: 0.1,
        mu_minus: 0.1,
        eos: EquationOfState::constant(0.2),
        d_gamma: 0.1,
        mu_gamma_bar: 1.0,
        lambda_gamma_bar: 1.0,
        b_mu: 0.0,
        b_lambda: 0.0,
        epsilon_reg: 1e-8,
        theta_diffusion: DiffusionWeight::Zero,
        gravity_force: ForceField::Zero,
        extra_force: ForceField::Zero,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let shear = |scheme| ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        scheme,
        params: shear_params(),
        domain: Domain::rectangle([-5.0, 5.0], [-2.0, 2.0]),
        boundary: BoundaryData::Shear { rate: 0.5 },
        initial: InitialSpec {
            center: [0.0, 0.0],
            radius: 1.0,
            ellipse: None,
            k_gamma: 64,
            psi: SurfactantProfile::Constant { value: 1.0 },
            rho_gamma: 0.0,
            velocity_from_boundary: true,
        },
        disc: Discretization { n_fine: 64, n_coarse: 8, tau: 1e-2, ..base_disc() },
        t_end: 12.0,
        exact: None,
        output: OutputSpec { svg_times: vec![0.0, 4.0, 8.0, 12.0], ..Default::default() },
    };
    match name {
        "expanding" => Ok(expanding(Scheme::Bgn, 3, 1e-2)),
        "shear2d" => Ok(shear(Scheme::Bgn)),
        "shear2d-surfactant" => {
            let mut c = shear(Scheme::Bgn);
            c.params.eos = EquationOfState::linear(0.2, 0.5);
            c.params.mu_gamma_bar = 0.1;
            c.params.lambda_gamma_bar = 0.1;
            c.params.b_mu = 100.0;
            c.params.b_lambda = 100.0;
            c.initial.rho_gamma = 1.0;
            c.initial.psi = SurfactantProfile::RightHalf { floor: 1e-6 };
            Ok(c)
        }
        "rising2d" => Ok(ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            scheme: Scheme::Bgn,
            params: PhysicalParams {
                rho_plus: 1000.0,
                rho_minus: 100.0,
                mu_plus: 10.0,
                mu_minus: 1.0,
                eos: EquationOfState::linear(24.5, 0.5),
                d_gamma: 0.1,
                mu_gamma_bar: 0.1,
                lambda_gamma_bar: 0.1,
                b_mu: 0.0,
                b_lambda: 0.0,
                epsilon_reg: 1e-8,
                theta_diffusion: DiffusionWeight::Linear { factor: 0.05 },
                gravity_force: ForceField::Constant { value: [0.0, -0.98] },
                extra_force: ForceField::Zero,
            },
            domain: Domain { x: [0.0, 1.0], y: [0.0, 2.0], hole: None, free_slip_sides: true },
            boundary: BoundaryData::Zero,
            initial: InitialSpec {
                center: [0.5, 0.5],
                radius: 0.25,
                ellipse: None,
                k_gamma: 128,
                psi: SurfactantProfile::Constant { value: 1.0 },
                rho_gamma: 1.0,
                velocity_from_boundary: false,
            },
            disc: Discretization { n_fine: 128, n_coarse: 8, tau: 1e-3, numdiff: true, ..base_disc() },
            t_end: 3.0,
            exact: None,
            output: OutputSpec { svg_times: vec![0.0, 1.0, 2.0, 3.0], ..Default::default() },
        }),
        "relax2d" => {
            // ellipse relaxing to a circle: constant tension, no surface mass
            let mut c = shear(Scheme::Bgn);
            c.name = name.to_string();
            c.domain = Domain::rectangle([-1.0, 1.0], [-1.0, 1.0]);
            c.boundary = BoundaryData::Zero;
            c.params.eos = EquationOfState::constant(1.0);
            c.params.mu_plus = 1.0;
            c.params.mu_minus = 1.0;
            c.initial = InitialSpec {
                center: [0.0, 0.0],
                radius: 0.5,
                ellipse: Some([0.6, 0.35]),
                k_gamma: 32,
                psi: SurfactantProfile::Constant { value: 1.0 },
                rho_gamma: 0.0,
                velocity_from_boundary: false,
            };
            c.disc = Discretization { n_fine: 16, n_coarse: 16, tau: 1e-3, ..base_disc() };
            c.t_end = 0.5;
            c.output.svg_times = vec![0.0, 0.5];
            Ok(c)
        }
        _ => Err(Error::Config(format!("unknown preset '{name}' (known: {})", PRESETS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
            assert_eq!(c, back, "{name}");
        }
    }

    #[test]
    fn vertex_count_rule() {
        assert_eq!(expanding_k_gamma(3), 64);
        assert_eq!(expanding_k_gamma(6), 128);
        assert_eq!(expanding_k_gamma(12), 256);
    }

    #[test]
    fn surfactant_start() {
        let c = preset("shear2d-surfactant").unwrap();
        assert_eq!(c.initial.psi.eval([0.5, 0.2]), 1e-6 + 0.5);
        assert_eq!(c.initial.psi.eval([-0.5, 0.2]), 1e-6);
        assert_eq!(c.initial.rho_gamma, 1.0);
    }

    #[test]
    fn unknown_preset() {
        assert!(preset("nope").is_err());
    }
}
