//! Result writers: force–displacement history CSV, interface section CSV,
//! field snapshots in legacy VTK ASCII, law-curve and debug dumps.
//!
//! All writers are pure string builders with thin file wrappers, format
//! numbers with 17 significant digits (exact decimal round-trip for f64) and
//! emit rows in a fixed order, so identical runs produce byte-identical
//! files. When a config hash is supplied it is carried in a leading comment
//! line (CSV) or in the title line (VTK).

use crate::error::{Error, Result};
use crate::law::{InterfaceLaw, LjParams};
use crate::solver::{RunHistory, State, System};
use std::fmt::Write as _;
use std::path::Path;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Force–displacement history CSV.
///
/// Columns: `step,pseudo_time,u_bar,u_bar_over_hrms,reaction_force`, one row
/// per converged step. `u_bar` is in mm, the reaction in N (3D) or N/mm (2D).
pub fn history_csv(history: &RunHistory, sys: &System, hash: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(h) = hash {
        let _ = writeln!(s, "# config {h}");
    }
    s.push_str("step,pseudo_time,u_bar,u_bar_over_hrms,reaction_force\n");
    let lf = sys.scaling.length;
    let ff = sys.scaling.force_factor(sys.mesh.ndim);
    for r in &history.steps {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            num(r.pseudo_time),
            num(r.u_bar * lf),
            num(r.u_bar / history.h_rms),
            num(r.reaction * ff)
        );
    }
    s
}

pub fn write_history(history: &RunHistory, sys: &System, hash: Option<&str>, path: &Path) -> Result<()> {
    write_file(path, &history_csv(history, sys, hash))
}

/// One parsed history row: step, pseudo-time, u_bar, u_bar/h_rms, reaction.
pub type HistoryRow = (usize, f64, f64, f64, f64);

/// Parses a history CSV back, skipping comment lines.
pub fn parse_history_csv(text: &str) -> Result<Vec<HistoryRow>> {
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Invalid(format!("bad history row `{line}`")));
        }
        let p = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad number `{s}`")))
        };
        rows.push((
            f[0].parse::<usize>()
                .map_err(|_| Error::Invalid(format!("bad step `{}`", f[0])))?,
            p(f[1])?,
            p(f[2])?,
            p(f[3])?,
            p(f[4])?,
        ));
    }
    Ok(rows)
}

/// Selects the integration-point row of a section request.
///
/// The row index is `floor(position * n_elements)` (clamped); within the
/// selected element column the lower-side integration points are taken, the
/// documented lower-index tie-break.
pub fn section_csv(
    sys: &System,
    state: &State,
    axis: char,
    position: f64,
    hash: Option<&str>,
) -> Result<String> {
    if !(0.0..=1.0).contains(&position) {
        return Err(Error::Invalid(format!(
            "section position {position} outside [0, 1]"
        )));
    }
    if axis != 'x' && axis != 'y' {
        return Err(Error::Invalid(format!("section axis must be x or y, got {axis}")));
    }
    let n = sys.mesh.n_surface;
    let row = ((position * n as f64).floor() as usize).min(n - 1);

    // rows: (running coordinate, z, g*, p_n), scaled units
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
    for (idx, el) in sys.interface.iter().enumerate() {
        let (i, j) = (idx % n, idx / n);
        let gaps = el.gap_state(&state.u, sys.g_init);
        if sys.mesh.ndim == 2 {
            for (ip, gap) in el.ip.iter().zip(&gaps.ips) {
                rows.push((ip.coord[0], ip.z, gap.g_n_star, gap.p_n));
            }
        } else {
            // integration points are ordered (-,-), (+,-), (+,+), (-,+)
            let slots: [usize; 2] = match axis {
                'x' if i == row => [0, 3],
                'y' if j == row => [0, 1],
                _ => continue,
            };
            let along = if axis == 'x' { 1 } else { 0 };
            for slot in slots {
                let (ip, gap) = (&el.ip[slot], &gaps.ips[slot]);
                rows.push((ip.coord[along], ip.z, gap.g_n_star, gap.p_n));
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.dedup_by(|a, b| a.0 == b.0);

    let lf = sys.scaling.length;
    let sf = sys.scaling.stress;
    let mut s = String::new();
    if let Some(h) = hash {
        let _ = writeln!(s, "# config {h}");
    }
    s.push_str("coord,z,g_n_star,p_n,p_n_over_Estar\n");
    for (c, z, g, p) in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(c * lf),
            num(z * lf),
            num(g * lf),
            num(p * sf),
            num(p)
        );
    }
    Ok(s)
}

pub fn write_section(
    sys: &System,
    state: &State,
    axis: char,
    position: f64,
    hash: Option<&str>,
    path: &Path,
) -> Result<()> {
    write_file(path, &section_csv(sys, state, axis, position, hash)?)
}

/// Legacy VTK ASCII unstructured grid: undeformed points, bulk cells plus the
/// interface layer as line/quad cells, nodal displacement vectors, per-cell
/// modulus, phase and interface traction.
pub fn fields_vtk(sys: &System, state: &State, hash: Option<&str>) -> String {
    let mesh = &sys.mesh;
    let ndim = mesh.ndim;
    let lf = sys.scaling.length;
    let sf = sys.scaling.stress;

    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    match hash {
        Some(h) => {
            let _ = writeln!(s, "adhesive contact fields (config {h})");
        }
        None => s.push_str("adhesive contact fields\n"),
    }
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let npoints = mesh.coords.len();
    let _ = writeln!(s, "POINTS {npoints} double");
    for c in &mesh.coords {
        let _ = writeln!(s, "{} {} {}", num(c[0] * lf), num(c[1] * lf), num(c[2] * lf));
    }

    let nodes_per_bulk = if ndim == 2 { 4 } else { 8 };
    let pairs = if ndim == 2 { 2 } else { 4 };
    let ncells = mesh.bulk.len() + sys.interface.len();
    let total = mesh.bulk.len() * (nodes_per_bulk + 1) + sys.interface.len() * (pairs + 1);
    let _ = writeln!(s, "CELLS {ncells} {total}");
    for el in &mesh.bulk {
        let ids: Vec<String> = el.nodes[..nodes_per_bulk]
            .iter()
            .map(|n| n.to_string())
            .collect();
        let _ = writeln!(s, "{} {}", nodes_per_bulk, ids.join(" "));
    }
    for el in &sys.interface {
        let ids: Vec<String> = el.lower[..pairs].iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "{} {}", pairs, ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {ncells}");
    let bulk_type = if ndim == 2 { 9 } else { 12 };
    let ifc_type = if ndim == 2 { 3 } else { 9 };
    for _ in &mesh.bulk {
        let _ = writeln!(s, "{bulk_type}");
    }
    for _ in &sys.interface {
        let _ = writeln!(s, "{ifc_type}");
    }

    let _ = writeln!(s, "POINT_DATA {npoints}");
    s.push_str("VECTORS displacement double\n");
    for node in 0..npoints {
        let ux = state.u[node * ndim] * lf;
        let uy = state.u[node * ndim + 1] * lf;
        let uz = if ndim == 3 {
            state.u[node * ndim + 2] * lf
        } else {
            0.0
        };
        let _ = writeln!(s, "{} {} {}", num(ux), num(uy), num(uz));
    }

    let _ = writeln!(s, "CELL_DATA {ncells}");
    s.push_str("SCALARS youngs_modulus double 1\nLOOKUP_TABLE default\n");
    for el in &mesh.bulk {
        let _ = writeln!(s, "{}", num(sys.materials[el.material].youngs * sf));
    }
    for _ in &sys.interface {
        let _ = writeln!(s, "{}", num(0.0));
    }
    s.push_str("SCALARS phase double 1\nLOOKUP_TABLE default\n");
    for el in &mesh.bulk {
        let _ = writeln!(s, "{}", num(sys.materials[el.material].phase as f64));
    }
    for _ in &sys.interface {
        let _ = writeln!(s, "{}", num(-1.0));
    }
    s.push_str("SCALARS p_n double 1\nLOOKUP_TABLE default\n");
    for _ in &mesh.bulk {
        let _ = writeln!(s, "{}", num(0.0));
    }
    for el in &sys.interface {
        let gaps = el.gap_state(&state.u, sys.g_init);
        let mean = gaps.ips.iter().map(|g| g.p_n).sum::<f64>() / gaps.ips.len() as f64;
        let _ = writeln!(s, "{}", num(mean * sf));
    }
    s
}

pub fn write_fields(sys: &System, state: &State, hash: Option<&str>, path: &Path) -> Result<()> {
    write_file(path, &fields_vtk(sys, state, hash))
}

/// Law curve CSV with columns `g,p_n,dp_dg`, sweeping from deep penetration
/// past the truncation gap.
pub fn law_curve_csv(params: &LjParams, samples: usize) -> String {
    let mut s = String::from("g,p_n,dp_dg\n");
    let lo = -0.5 * params.g0;
    let hi = 1.2 * params.g_nc2;
    let n = samples.max(2);
    for k in 0..n {
        let g = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let _ = writeln!(s, "{},{},{}", num(g), num(params.traction(g)), num(params.tangent(g)));
    }
    s
}

/// Per-integration-point debug dump: coordinates, embedded data and the
/// current gap state, in physical units.
pub fn interface_debug_csv(sys: &System, state: &State, hash: Option<&str>) -> String {
    let lf = sys.scaling.length;
    let sf = sys.scaling.stress;
    let mut s = String::new();
    if let Some(h) = hash {
        let _ = writeln!(s, "# config {h}");
    }
    s.push_str("element,x,y,z,delta_gamma,p_max,g_n_star,p_n\n");
    for (idx, el) in sys.interface.iter().enumerate() {
        let gaps = el.gap_state(&state.u, sys.g_init);
        for (ip, gap) in el.ip.iter().zip(&gaps.ips) {
            let (dg, pm) = match &ip.law {
                InterfaceLaw::LennardJones(p) => (p.delta_gamma * sf * lf, p.p_max * sf),
                InterfaceLaw::Penalty { .. } => (0.0, 0.0),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                idx,
                num(ip.coord[0] * lf),
                num(ip.coord[1] * lf),
                num(ip.z * lf),
                num(dg),
                num(pm),
                num(gap.g_n_star * lf),
                num(gap.p_n * sf)
            );
        }
    }
    s
}

/// Geometry-only VTK dump (zero displacement).
pub fn mesh_vtk(sys: &System, hash: Option<&str>) -> String {
    let state = State::zero(sys);
    fields_vtk(sys, &state, hash)
}

/// Text report of one law parameterization, for the `check-law` subcommand.
pub fn law_report(params: &LjParams, k_cap: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "delta_gamma      = {}", num(params.delta_gamma));
    let _ = writeln!(s, "p_max            = {}", num(params.p_max));
    let _ = writeln!(s, "k_cap            = {}", num(k_cap));
    let _ = writeln!(s, "g0               = {}", num(params.g0));
    let _ = writeln!(s, "g_max            = {}", num(params.g_max));
    let _ = writeln!(s, "a1               = {}", num(params.a1));
    let _ = writeln!(s, "a2               = {}", num(params.a2));
    let _ = writeln!(s, "g_n0             = {}", num(params.g_n0));
    let _ = writeln!(s, "g_nc1            = {}", num(params.g_nc1));
    let _ = writeln!(s, "g_nc2            = {}", num(params.g_nc2));
    let _ = writeln!(s, "area_total       = {}", num(params.area_total));
    let _ = writeln!(s, "max_soft_slope   = {}", num(params.max_softening_slope()));

    let peak_err = (params.traction(params.g_max) - params.p_max).abs() / params.p_max;
    let _ = writeln!(s, "peak check       : |p(g_max) - p_max|/p_max = {}", num(peak_err));
    let analytic = |g: f64| params.a2 / g.powi(3) - params.a1 / g.powi(9);
    let big = 1e3 * params.g0;
    let quad = simpson(&analytic, params.g0, big, 1e-12, 40);
    let closed = params.area(params.g0, big);
    let _ = writeln!(
        s,
        "work check       : quadrature(g0..1e3 g0) = {}, antiderivative = {}, delta_gamma = {}",
        num(quad),
        num(closed),
        num(params.delta_gamma)
    );
    let lo = 16.0 * params.delta_gamma / (params.g0 * params.g0);
    let hi = (24.0 * 4f64.powf(5.0 / 3.0) - 8.0 * 4f64.powf(2.0 / 3.0)) * params.delta_gamma
        / (params.g0 * params.g0);
    let _ = writeln!(s, "admissible k_cap : ({}, {})", num(lo), num(hi));
    s
}

/// Adaptive Simpson quadrature used by the diagnostics report.
pub(crate) fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn whole(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, w: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let left = whole(f, a, 0.5 * (a + m), m);
        let right = whole(f, m, 0.5 * (m + b), b);
        if depth == 0 || (left + right - w).abs() <= 15.0 * tol {
            left + right + (left + right - w) / 15.0
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    recurse(f, a, b, whole(f, a, m, b), tol * (b - a).abs().max(1.0), depth)
}
