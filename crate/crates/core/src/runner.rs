//! Experiment driver: runs a configuration, tracks conservation, energy and
//! exact-solution errors, and writes the output directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exact::{self, ErrorNorms, ExpandingBubble};
use crate::geom;
use crate::interface::InterfacePolygon;
use crate::output;
use crate::timestep::{Diagnostics, SimulationState};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub scheme: String,
    pub steps: usize,
    pub t_final: f64,
    /// Largest relative change of the total surface mass over one step.
    pub max_step_drift_rho_gamma: f64,
    pub max_step_drift_psi: f64,
    /// Largest relative deviation of the enclosed area from its initial value.
    pub max_area_drift: f64,
    pub area_initial: f64,
    pub area_final: f64,
    pub edge_ratio_final: f64,
    /// Largest value of E_new + dissipation − E_old relative to max(1, E_old); none before the first step.
    pub max_energy_excess: Option<f64>,
    pub min_rho_gamma: f64,
    pub min_psi: f64,
    pub taylor_deformation: f64,
    pub errors: Option<ErrorNorms>,
    pub failure: Option<String>,
}

/// (L − B) / (L + B) from the largest and smallest vertex distances to the centroid.
pub fn taylor_deformation(poly: &InterfacePolygon) -> f64 {
    let c = poly.centroid();
    let d: Vec<f64> = poly.vertices.iter().map(|&q| geom::dist(q, c)).collect();
    let l = d.iter().cloned().fold(0.0, f64::max);
    let b = d.iter().cloned().fold(f64::INFINITY, f64::min);
    (l - b) / (l + b)
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// A run in progress.
pub struct Run {
    pub config: ExperimentConfig,
    pub state: SimulationState,
    pub history: Vec<Diagnostics>,
    pub summary: RunSummary,
    /// Interfaces kept for plots, with their times.
    pub snapshots: Vec<(f64, InterfacePolygon)>,
    exact: Option<ExpandingBubble>,
    norms: ErrorNorms,
}

impl Run {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let init = config.initial.build()?;
        let state = SimulationState::new(config.scheme, config.params.clone(), config.disc.clone(), config.domain.clone(), config.boundary, init)?;
        let d0 = state.diagnostics()?;
        let exact = config.exact_solution()?;
        let summary = RunSummary {
            name: config.name.clone(),
            scheme: format!("{:?}", config.scheme).to_lowercase(),
            area_initial: d0.area,
            area_final: d0.area,
            edge_ratio_final: d0.edge_ratio,
            min_rho_gamma: d0.min_rho_gamma,
            min_psi: d0.min_psi,
            taylor_deformation: taylor_deformation(&state.poly),
            errors: exact.as_ref().map(|_| ErrorNorms::default()),
            ..Default::default()
        };
        let snapshots = vec![(0.0, state.poly.clone())];
        Ok(Self { config, state, history: vec![d0], summary, snapshots, exact, norms: ErrorNorms::default() })
    }

    pub fn step(&mut self) -> Result<&Diagnostics> {
        let prev = self.history.last().cloned().unwrap_or_default();
        let d = self.state.step()?;
        let s = &mut self.summary;
        s.steps = d.step;
        s.t_final = d.t;
        s.max_step_drift_rho_gamma = s.max_step_drift_rho_gamma.max(rel(d.total_rho_gamma, prev.total_rho_gamma));
        s.max_step_drift_psi = s.max_step_drift_psi.max(rel(d.total_psi, prev.total_psi));
        s.area_final = d.area;
        s.max_area_drift = s.max_area_drift.max(rel(d.area, s.area_initial));
        s.edge_ratio_final = d.edge_ratio;
        let excess = (d.energy_new + d.dissipation - d.energy_old) / d.energy_old.max(1.0);
        s.max_energy_excess = Some(s.max_energy_excess.map_or(excess, |m| m.max(excess)));
        s.min_rho_gamma = s.min_rho_gamma.min(d.min_rho_gamma);
        s.min_psi = s.min_psi.min(d.min_psi);
        s.taylor_deformation = taylor_deformation(&self.state.poly);
        if let Some(ex) = &self.exact {
            let st = &self.state;
            let t = st.t;
            let x_err = exact::interface_error(&st.poly, ex.radius(t));
            let u_err = exact::velocity_error(&st.u_level.space, &st.u, ex)?;
            let pspace = st.pressure_space();
            let pc = exact::pressure_error_sq(&st.u_level.mesh, &pspace, &st.p, ex.pressure_outer(st.domain(), t));
            let theta = st.pressure_jump().ok_or_else(|| Error::Config("pressure errors need the enriched pressure space".into()))?;
            self.norms.record(st.disc.tau, x_err, u_err, pc, theta - ex.theta(t));
            s.errors = Some(self.norms.clone());
        }
        let tau = self.config.disc.tau;
        if self.config.output.svg_times.iter().any(|&ts| ts > 0.0 && (ts - d.t).abs() < 0.5 * tau) {
            self.snapshots.push((d.t, self.state.poly.clone()));
        }
        self.history.push(d);
        Ok(self.history.last().unwrap())
    }

    /// Run to the configured end time; failures are recorded in the summary and returned.
    pub fn run_to_end(&mut self, mut on_step: impl FnMut(&Run) -> Result<()>) -> Result<()> {
        let n = self.config.n_steps();
        while self.summary.steps < n {
            if let Err(e) = self.step() {
                self.summary.failure = Some(e.to_string());
                return Err(e);
            }
            on_step(self)?;
        }
        Ok(())
    }
}

fn write_snapshot(dir: &Path, run: &Run) -> Result<()> {
    let st = &run.state;
    let tag = format!("{:06}", st.m);
    let mut f = BufWriter::new(File::create(dir.join(format!("interface_{tag}.csv")))?);
    output::write_interface_csv(&mut f, &st.poly, &st.rho_gamma, &st.psi)?;
    let mut f = BufWriter::new(File::create(dir.join(format!("interface_{tag}.vtk")))?);
    st.poly.write_vtk(&mut f, &[("rho_gamma", &st.rho_gamma), ("psi", &st.psi)])?;
    let mut f = BufWriter::new(File::create(dir.join(format!("mesh_{tag}.vtk")))?);
    st.current.mesh.write_vtk(&mut f, Some(&st.labels))?;
    Ok(())
}

fn write_outputs(dir: &Path, run: &Run) -> Result<()> {
    let every = run.config.output.csv_every.max(1);
    let rows: Vec<Diagnostics> = run.history.iter().filter(|d| d.step % every == 0 || d.step == run.summary.steps).cloned().collect();
    let mut f = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
    output::write_diagnostics(&mut f, &rows)?;
    let d = &run.config.domain;
    let curves: Vec<(f64, &InterfacePolygon)> = run.snapshots.iter().map(|(t, p)| (*t, p)).collect();
    fs::write(dir.join("interfaces.svg"), output::interfaces_svg((d.x, d.y), &curves))?;
    let energy: Vec<(f64, f64)> = run.history.iter().map(|d| (d.t, d.energy_new)).collect();
    fs::write(dir.join("energy.svg"), output::series_svg("energy", &energy))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&run.summary)?)?;
    Ok(())
}

/// Run a configuration and write its outputs into `dir`.
pub fn run_experiment(config: ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), config.to_json()?)?;
    let mut run = Run::new(config)?;
    write_snapshot(dir, &run)?;
    let snap = run.config.output.snapshot_every;
    let ck = run.config.output.checkpoint_every;
    let result = run.run_to_end(|r| {
        if snap > 0 && r.state.m % snap == 0 {
            write_snapshot(dir, r)?;
        }
        if ck > 0 && r.state.m % ck == 0 {
            let mut f = BufWriter::new(File::create(dir.join("checkpoint.bin"))?);
            r.state.write_checkpoint(&mut f)?;
        }
        Ok(())
    });
    if snap == 0 || run.state.m % snap != 0 {
        write_snapshot(dir, &run)?;
    }
    write_outputs(dir, &run)?;
    if result.is_err() {
        // the state at failure helps diagnosing geometric breakdowns
        let mut f = BufWriter::new(File::create(dir.join("failure_state.bin"))?);
        run.state.write_checkpoint(&mut f)?;
    }
    result.map(|_| run.summary)
}

/// One row of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub inv_h: usize,
    pub tau: f64,
    pub errors: ErrorNorms,
}

/// Expanding-bubble convergence rows, run without writing files.
pub fn convergence_study(scheme: crate::assembly::Scheme, rows: &[(usize, f64)], t_end: f64) -> Result<Vec<StudyRow>> {
    rows.iter()
        .map(|&(inv_h, tau)| {
            let mut c = crate::config::expanding(scheme, inv_h, tau);
            c.t_end = t_end;
            let mut run = Run::new(c)?;
            run.run_to_end(|_| Ok(()))?;
            Ok(StudyRow { inv_h, tau, errors: run.summary.errors.clone().unwrap_or_default() })
        })
        .collect()
}

pub const STUDY_HEADER: &str = "inv_h,tau,x_err,u_err,pc_err,theta_err";

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut s = format!("{STUDY_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:e},{:.4e},{:.4e},{:.4e},{:.4e}\n",
            r.inv_h, r.tau, r.errors.x_err, r.errors.u_err, r.errors.pc_err, r.errors.theta_err
        ));
    }
    s
}
