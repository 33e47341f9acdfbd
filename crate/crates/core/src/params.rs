//! Physical parameters, the surface equation of state and its regularization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EosKind {
    Linear,
    Langmuir,
    Constant,
}

/// Surface tension as a function of surfactant concentration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationOfState {
    pub kind: EosKind,
    pub gamma_bar: f64,
    pub beta: f64,
    /// Saturation concentration; `f64::INFINITY` for the linear law.
    #[serde(with = "infinite_as_null")]
    pub psi_infinity: f64,
}

/// JSON has no infinity; an unbounded saturation is written as null.
mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl EquationOfState {
    pub fn linear(gamma_bar: f64, beta: f64) -> Self {
        let kind = if beta == 0.0 { EosKind::Constant } else { EosKind::Linear };
        Self { kind, gamma_bar, beta, psi_infinity: f64::INFINITY }
    }

    pub fn langmuir(gamma_bar: f64, beta: f64, psi_infinity: f64) -> Self {
        Self { kind: EosKind::Langmuir, gamma_bar, beta, psi_infinity }
    }

    pub fn constant(gamma_bar: f64) -> Self {
        Self { kind: EosKind::Constant, gamma_bar, beta: 0.0, psi_infinity: f64::INFINITY }
    }

    fn check(&self, r: f64) -> Result<()> {
        if self.kind == EosKind::Langmuir && !(r < self.psi_infinity) {
            return Err(Error::EosDomain { value: r, psi_infinity: self.psi_infinity });
        }
        Ok(())
    }

    /// Surface tension at zero concentration.
    pub fn gamma0(&self) -> f64 {
        self.gamma_bar
    }

    pub fn gamma(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(match self.kind {
            EosKind::Constant => self.gamma_bar,
            EosKind::Linear => self.gamma_bar * (1.0 - self.beta * r),
            EosKind::Langmuir => {
                self.gamma_bar * (1.0 + self.beta * self.psi_infinity * (1.0 - r / self.psi_infinity).ln())
            }
        })
    }

    /// Energy density F with gamma = F - r F'. Requires r > 0 unless the law is constant.
    pub fn f(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let (g, b) = (self.gamma_bar, self.beta);
        Ok(match self.kind {
            EosKind::Constant => g,
            EosKind::Linear => g * (1.0 + b * r * (r.ln() - 1.0)),
            EosKind::Langmuir => {
                let pi = self.psi_infinity;
                g * (1.0 + b * (r * r.ln() + (pi - r) * (pi - r).ln() - pi * pi.ln()))
            }
        })
    }

    pub fn fprime(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let (g, b) = (self.gamma_bar, self.beta);
        Ok(match self.kind {
            EosKind::Constant => 0.0,
            EosKind::Linear => g * b * r.ln(),
            EosKind::Langmuir => g * b * (r / (self.psi_infinity - r)).ln(),
        })
    }

    pub fn fsecond(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let (g, b) = (self.gamma_bar, self.beta);
        Ok(match self.kind {
            EosKind::Constant => 0.0,
            EosKind::Linear => g * b / r,
            EosKind::Langmuir => g * b * self.psi_infinity / (r * (self.psi_infinity - r)),
        })
    }

    /// Regularized energy: quadratic extension of F below `eps`.
    pub fn f_eps(&self, eps: f64, r: f64) -> Result<f64> {
        self.check(r)?;
        if r >= eps || self.kind == EosKind::Constant {
            return self.f(r);
        }
        let d = r - eps;
        Ok(self.f(eps)? + self.fprime(eps)? * d + 0.5 * self.fsecond(eps)? * d * d)
    }

    pub fn fprime_eps(&self, eps: f64, r: f64) -> Result<f64> {
        self.check(r)?;
        if r >= eps || self.kind == EosKind::Constant {
            return self.fprime(r);
        }
        Ok(self.fprime(eps)? + self.fsecond(eps)? * (r - eps))
    }

    /// Regularized tension, consistent with gamma_eps = F_eps - r F'_eps.
    pub fn gamma_eps(&self, eps: f64, r: f64) -> Result<f64> {
        self.check(r)?;
        if r >= eps || self.kind == EosKind::Constant {
            return self.gamma(r);
        }
        Ok(self.gamma(eps)? + 0.5 * self.fsecond(eps)? * (eps * eps - r * r))
    }

    /// Edge value of the concentration making the discrete chain rule exact.
    pub fn psi_star_eps(&self, eps: f64, a: f64, b: f64) -> Result<f64> {
        let fa = self.fprime_eps(eps, a)?;
        let fb = self.fprime_eps(eps, b)?;
        if (fb - fa).abs() <= 1e-14 * fa.abs().max(1.0) {
            return Ok(0.5 * (a + b));
        }
        let ga = self.gamma_eps(eps, a)?;
        let gb = self.gamma_eps(eps, b)?;
        Ok(-(gb - ga) / (fb - fa))
    }
}

/// Numerical diffusion weight as a function of the interface mesh size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionWeight {
    Zero,
    /// theta(s) = factor * s
    Linear { factor: f64 },
}

impl DiffusionWeight {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            DiffusionWeight::Zero => 0.0,
            DiffusionWeight::Linear { factor } => factor * s,
        }
    }
}

/// Body force density f1 (multiplied by the bulk density) or f2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceField {
    Zero,
    Constant { value: [f64; 2] },
    /// alpha^2 (1 - d) z |z|^{-2d} with d = 2
    RadialExpansion { alpha: f64 },
}

impl ForceField {
    pub fn eval(&self, z: [f64; 2], _t: f64) -> [f64; 2] {
        match *self {
            ForceField::Zero => [0.0, 0.0],
            ForceField::Constant { value } => value,
            ForceField::RadialExpansion { alpha } => {
                let r2 = z[0] * z[0] + z[1] * z[1];
                let s = -alpha * alpha / (r2 * r2);
                [s * z[0], s * z[1]]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForceField::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub eos: EquationOfState,
    pub d_gamma: f64,
    pub mu_gamma_bar: f64,
    pub lambda_gamma_bar: f64,
    pub b_mu: f64,
    pub b_lambda: f64,
    pub epsilon_reg: f64,
    pub theta_diffusion: DiffusionWeight,
    pub gravity_force: ForceField,
    pub extra_force: ForceField,
}

impl PhysicalParams {
    pub fn gamma_bar(&self) -> f64 {
        self.eos.gamma_bar
    }

    pub fn validate(&self) -> Result<()> {
        // bulk densities may vanish (generalized Stokes), viscosities may not
        if !(self.rho_plus >= 0.0 && self.rho_minus >= 0.0) {
            return Err(Error::InvalidParameter("bulk densities must be nonnegative".into()));
        }
        if !(self.mu_plus > 0.0 && self.mu_minus > 0.0) {
            return Err(Error::InvalidParameter("bulk viscosities must be positive".into()));
        }
        if !(self.eos.gamma_bar > 0.0) {
            return Err(Error::InvalidParameter("gamma_bar must be positive".into()));
        }
        if self.eos.beta < 0.0 {
            return Err(Error::InvalidParameter("beta must be nonnegative".into()));
        }
        if !(self.eos.psi_infinity > 0.0) {
            return Err(Error::InvalidParameter("psi_infinity must be positive".into()));
        }
        if self.d_gamma < 0.0 || self.mu_gamma_bar < 0.0 {
            return Err(Error::InvalidParameter("d_gamma and mu_gamma_bar must be nonnegative".into()));
        }
        if self.lambda_gamma_bar + 2.0 * self.mu_gamma_bar < 0.0 {
            return Err(Error::InvalidParameter("lambda_gamma_bar + 2 mu_gamma_bar must be nonnegative".into()));
        }
        if !(self.epsilon_reg > 0.0) {
            return Err(Error::InvalidParameter("epsilon_reg must be positive".into()));
        }
        Ok(())
    }

    pub fn mu_gamma_of(&self, r: f64) -> f64 {
        self.mu_gamma_bar * (1.0 + self.b_mu * r.max(0.0))
    }

    pub fn lambda_gamma_of(&self, r: f64) -> f64 {
        self.lambda_gamma_bar * (1.0 + self.b_lambda * r.max(0.0))
    }

    pub fn gamma_eps(&self, r: f64) -> Result<f64> {
        self.eos.gamma_eps(self.epsilon_reg, r)
    }

    pub fn psi_star(&self, a: f64, b: f64) -> Result<f64> {
        self.eos.psi_star_eps(self.epsilon_reg, a, b)
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            rho_plus: 1.0,
            rho_minus: 1.0,
            mu_plus: 1.0,
            mu_minus: 1.0,
            eos: EquationOfState::constant(1.0),
            d_gamma: 0.0,
            mu_gamma_bar: 0.0,
            lambda_gamma_bar: 0.0,
            b_mu: 0.0,
            b_lambda: 0.0,
            epsilon_reg: DEFAULT_EPSILON,
            theta_diffusion: DiffusionWeight::Zero,
            gravity_force: ForceField::Zero,
            extra_force: ForceField::Zero,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_gamma_value() {
        let eos = EquationOfState::linear(0.2, 0.5);
        assert!((eos.gamma(1.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn langmuir_at_zero_and_domain() {
        let eos = EquationOfState::langmuir(2.0, 0.3, 1.5);
        assert_eq!(eos.gamma(0.0).unwrap(), 2.0);
        assert!(eos.gamma(1.5).is_err());
        assert!(eos.f_eps(1e-8, 2.0).is_err());
    }

    #[test]
    fn f_and_gamma_relation() {
        for eos in [EquationOfState::linear(0.7, 0.5), EquationOfState::langmuir(1.3, 0.4, 2.0)] {
            for &r in &[0.01, 0.3, 0.9, 1.7] {
                let lhs = eos.gamma(r).unwrap();
                let rhs = eos.f(r).unwrap() - r * eos.fprime(r).unwrap();
                assert!((lhs - rhs).abs() < 1e-13, "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn regularized_identity_near_eps() {
        let eps = 1e-8;
        for eos in [EquationOfState::linear(0.7, 0.5), EquationOfState::langmuir(1.3, 0.4, 2.0)] {
            for &r in &[-0.5, -1e-3, 0.0, eps / 2.0, eps, 2.0 * eps, 0.4] {
                let g = eos.gamma_eps(eps, r).unwrap();
                let h = eos.f_eps(eps, r).unwrap() - r * eos.fprime_eps(eps, r).unwrap();
                // absolute near the switch point, relative where values grow like r^2 / eps
                let tol = if r >= 0.0 { 1e-14 } else { 4.0 * f64::EPSILON * g.abs() };
                assert!((g - h).abs() <= tol, "r={r}: {g} vs {h}");
            }
        }
    }

    #[test]
    fn negative_part_bound_linear() {
        let eps = 1e-3;
        let eos = EquationOfState::linear(2.0, 0.5);
        for &r in &[-1.0, -0.1, -1e-4, 0.0] {
            let bound = 0.5 / eps * eos.gamma_bar * eos.beta * r * r;
            assert!(eos.f_eps(eps, r).unwrap() >= bound);
        }
    }

    #[test]
    fn psi_star_branches() {
        let eos = EquationOfState::linear(1.0, 0.5);
        let e = std::f64::consts::E;
        let s = eos.psi_star_eps(1e-8, 1.0, e).unwrap();
        assert!((s - (e - 1.0)).abs() < 1e-12);
        assert_eq!(eos.psi_star_eps(1e-8, 0.3, 0.3).unwrap(), 0.3);
        let c = EquationOfState::constant(1.0);
        assert_eq!(c.psi_star_eps(1e-8, 0.2, 0.6).unwrap(), 0.4);
    }

    #[test]
    fn surface_viscosity_law() {
        let p = PhysicalParams { mu_gamma_bar: 0.1, b_mu: 100.0, ..Default::default() };
        assert!((p.mu_gamma_of(1.0) - 10.1).abs() < 1e-12);
        assert_eq!(p.mu_gamma_of(-1.0), 0.1);
        let q = PhysicalParams { mu_gamma_bar: 0.1, ..Default::default() };
        assert_eq!(q.mu_gamma_of(5.0), 0.1);
    }

    #[test]
    fn convexity_and_monotonicity() {
        for eos in [EquationOfState::linear(0.7, 0.5), EquationOfState::langmuir(1.3, 0.4, 2.0)] {
            let mut prev = eos.gamma(0.0).unwrap();
            for i in 1..190 {
                let r = i as f64 * 0.01;
                assert!(eos.fsecond(r).unwrap() >= 0.0);
                let g = eos.gamma(r).unwrap();
                assert!(g <= prev);
                prev = g;
            }
        }
    }
}
