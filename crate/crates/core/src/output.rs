//! CSV, SVG and summary writers.

use std::fmt::Write as _;
use std::io::Write;

use crate::geom::Point;
use crate::interface::InterfacePolygon;
use crate::timestep::Diagnostics;

pub const DIAGNOSTICS_HEADER: &str = "step,t,kinetic,surface_kinetic,interface_energy,total_psi,total_rho_gamma,area,min_psi,max_psi,min_rho_gamma,max_rho_gamma,edge_ratio,dissipation,energy_old,energy_new,residual,pressure_jump";

pub fn diagnostics_row(d: &Diagnostics) -> String {
    let v = [
        d.t,
        d.kinetic,
        d.surface_kinetic,
        d.interface_energy,
        d.total_psi,
        d.total_rho_gamma,
        d.area,
        d.min_psi,
        d.max_psi,
        d.min_rho_gamma,
        d.max_rho_gamma,
        d.edge_ratio,
        d.dissipation,
        d.energy_old,
        d.energy_new,
        d.residual,
        d.pressure_jump,
    ];
    let mut s = d.step.to_string();
    for x in v {
        write!(s, ",{x:.16e}").unwrap();
    }
    s
}

pub fn write_diagnostics(w: &mut impl Write, rows: &[Diagnostics]) -> std::io::Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for d in rows {
        writeln!(w, "{}", diagnostics_row(d))?;
    }
    Ok(())
}

/// Interface vertices with per-vertex fields.
pub fn write_interface_csv(w: &mut impl Write, poly: &InterfacePolygon, rho_gamma: &[f64], psi: &[f64]) -> std::io::Result<()> {
    writeln!(w, "k,x,y,rho_gamma,psi")?;
    for (k, q) in poly.vertices.iter().enumerate() {
        writeln!(w, "{k},{:.16e},{:.16e},{:.16e},{:.16e}", q[0], q[1], rho_gamma[k], psi[k])?;
    }
    Ok(())
}

const COLORS: &[&str] = &["#1b4f72", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#17202a"];

/// Overlay of interface polygons inside the domain rectangle.
pub fn interfaces_svg(domain: ([f64; 2], [f64; 2]), curves: &[(f64, &InterfacePolygon)]) -> String {
    let (x, y) = domain;
    let width = 600.0;
    let s = width / (x[1] - x[0]);
    let height = s * (y[1] - y[0]);
    let map = |p: Point| ((p[0] - x[0]) * s, (y[1] - p[1]) * s);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{:.0}" viewBox="0 0 {width:.0} {height:.1}">"#, height + 20.0).unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{width:.1}" height="{height:.1}" fill="none" stroke="black"/>"#).unwrap();
    for (i, (t, poly)) in curves.iter().enumerate() {
        let pts: Vec<String> = poly.vertices.iter().map(|&p| map(p)).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let c = COLORS[i % COLORS.len()];
        writeln!(out, r#"<polygon points="{}" fill="none" stroke="{c}" stroke-width="1.2"/>"#, pts.join(" ")).unwrap();
        writeln!(out, r#"<text x="{:.0}" y="{:.0}" font-size="11" fill="{c}">t={t}</text>"#, 5.0 + 70.0 * i as f64, height + 15.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of a series against time.
pub fn series_svg(title: &str, data: &[(f64, f64)]) -> String {
    let (w, h, m) = (600.0, 300.0, 40.0);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#).unwrap();
    writeln!(out, r#"<text x="{m}" y="20" font-size="13">{title}</text>"#).unwrap();
    if data.len() >= 2 {
        let (t0, t1) = (data[0].0, data[data.len() - 1].0);
        let lo = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let hi = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let tspan = if t1 > t0 { t1 - t0 } else { 1.0 };
        let pts: Vec<String> = data
            .iter()
            .map(|&(t, v)| format!("{:.2},{:.2}", m + (t - t0) / tspan * (w - 2.0 * m), h - m - (v - lo) / span * (h - 2.0 * m)))
            .collect();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#, pts.join(" "), COLORS[0]).unwrap();
        writeln!(out, r#"<text x="{m}" y="{}" font-size="11">{lo:.6e}</text>"#, h - 10.0).unwrap();
        writeln!(out, r#"<text x="{m}" y="{}" font-size="11">{hi:.6e}</text>"#, m - 5.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
