//! Zero-thickness interface elements with embedded surface data.
//!
//! Each element connects a segment (2D) or rectangle (3D) of the bulk top
//! surface to its fixed indenter-side partner nodes at the same coordinates.
//! The normal gap computed from the paired nodal displacements is corrected
//! point-wise by the embedded elevation, `g* = g_n + z`, so the mesh stays
//! nominally flat while the traction law sees the rough geometry. Every
//! integration point carries its own elevation and law coefficients, sampled
//! once from the scan grids at initialization — no interpolation, no contact
//! search.
//!
//! Tangential relative displacements are carried kinematically but produce
//! no traction (frictionless interface).

use crate::error::{Error, Result};
use crate::law::{InterfaceLaw, LjParams};
use crate::mesh::Mesh;
use crate::scan::{FieldKind, ScanGrid};
use nalgebra::{DMatrix, DVector};

/// Integration rule for the interface elements.
///
/// Nodal (Newton–Cotes) integration is the default: it decouples the node
/// pairs, which suppresses spurious traction oscillations under stiff laws,
/// and it makes integration points coincide with scan samples. The Gauss rule
/// is available for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceQuadrature {
    #[default]
    Nodal,
    Gauss,
}

/// Per-integration-point embedded data.
#[derive(Debug, Clone)]
pub struct IpData {
    /// Embedded elevation added to the kinematic gap.
    pub z: f64,
    /// Point-wise traction law.
    pub law: InterfaceLaw,
    /// Surface coordinate of the point, `(x, y)` (y unused in 2D).
    pub coord: [f64; 2],
    /// Shape function value of each node pair at this point.
    shape: [f64; 4],
    /// Quadrature weight times the (flat) element measure share.
    weight: f64,
}

/// Kinematic and constitutive state of one integration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpGap {
    /// Kinematic normal gap from the paired displacements.
    pub g_n: f64,
    /// Modified gap `g_n + z` fed to the law.
    pub g_n_star: f64,
    /// Normal traction (positive = attractive).
    pub p_n: f64,
    /// Law slope at `g_n_star`.
    pub dp_dg: f64,
}

/// Gap state of a whole element, one entry per integration point.
#[derive(Debug, Clone, PartialEq)]
pub struct GapState {
    pub ips: Vec<IpGap>,
}

/// Paired-node zero-thickness interface element (2+2 nodes in 2D, 4+4 in 3D).
#[derive(Debug, Clone)]
pub struct MpjrElement {
    pub ndim: usize,
    /// Deformable-side nodes (first 2 used in 2D).
    pub lower: [usize; 4],
    /// Indenter-side nodes, paired index-wise with `lower`.
    pub upper: [usize; 4],
    /// Flat element measure (length in 2D, area in 3D).
    pub measure: f64,
    pub ip: Vec<IpData>,
}

impl MpjrElement {
    pub fn node_pairs(&self) -> usize {
        if self.ndim == 2 {
            2
        } else {
            4
        }
    }

    /// Element DOF count; ordering is all lower nodes then all upper nodes,
    /// `ndim` components each.
    pub fn dof_count(&self) -> usize {
        2 * self.node_pairs() * self.ndim
    }

    /// Global DOF indices in element ordering.
    pub fn dofs(&self) -> Vec<usize> {
        let pairs = self.node_pairs();
        let mut dofs = Vec::with_capacity(self.dof_count());
        for node in self.lower[..pairs].iter().chain(self.upper[..pairs].iter()) {
            for c in 0..self.ndim {
                dofs.push(node * self.ndim + c);
            }
        }
        dofs
    }

    /// Normal gap contribution of the element DOF `k` (the row of the gap
    /// operator restricted to the normal direction).
    fn normal_gap_row(&self, ip: &IpData, k: usize) -> f64 {
        let pairs = self.node_pairs();
        let normal_comp = self.ndim - 1;
        let (node_slot, comp) = (k / self.ndim, k % self.ndim);
        if comp != normal_comp {
            return 0.0;
        }
        if node_slot < pairs {
            -ip.shape[node_slot]
        } else {
            ip.shape[node_slot - pairs]
        }
    }

    /// Evaluates gaps and law values at every integration point.
    ///
    /// `u` is the global displacement vector; `g_init` is the nominal
    /// separation at zero displacement and zero elevation.
    pub fn gap_state(&self, u: &[f64], g_init: f64) -> GapState {
        let pairs = self.node_pairs();
        let nc = self.ndim - 1;
        let ips = self
            .ip
            .iter()
            .map(|ip| {
                let mut rel = 0.0;
                for a in 0..pairs {
                    let up = u[self.upper[a] * self.ndim + nc];
                    let lo = u[self.lower[a] * self.ndim + nc];
                    rel += ip.shape[a] * (up - lo);
                }
                let g_n = g_init + rel;
                let g_n_star = g_n + ip.z;
                IpGap {
                    g_n,
                    g_n_star,
                    p_n: ip.law.traction(g_n_star),
                    dp_dg: ip.law.tangent(g_n_star),
                }
            })
            .collect();
        GapState { ips }
    }

    /// Element residual and consistent tangent.
    ///
    /// The residual is the interface virtual-work term `int B_n^T p_n dG`,
    /// the tangent its exact linearization `int B_n^T (dp/dg) B_n dG`; both
    /// use the element quadrature baked at construction. Only normal
    /// components couple.
    pub fn residual_tangent(&self, u: &[f64], g_init: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dof_count();
        let state = self.gap_state(u, g_init);
        let mut r = DVector::<f64>::zeros(n);
        let mut k = DMatrix::<f64>::zeros(n, n);
        for (ip, gap) in self.ip.iter().zip(&state.ips) {
            if gap.p_n == 0.0 && gap.dp_dg == 0.0 {
                continue;
            }
            let w = ip.weight;
            for p in 0..n {
                let bp = self.normal_gap_row(ip, p);
                if bp == 0.0 {
                    continue;
                }
                r[p] += w * bp * gap.p_n;
                if gap.dp_dg != 0.0 {
                    for q in 0..n {
                        let bq = self.normal_gap_row(ip, q);
                        if bq != 0.0 {
                            k[(p, q)] += w * bp * gap.dp_dg * bq;
                        }
                    }
                }
            }
        }
        (r, k)
    }

    /// Interface energy of the element at the given displacements.
    pub fn energy(&self, u: &[f64], g_init: f64) -> f64 {
        let state = self.gap_state(u, g_init);
        self.ip
            .iter()
            .zip(&state.ips)
            .map(|(ip, gap)| ip.weight * ip.law.energy(gap.g_n_star))
            .sum()
    }

    /// Total normal force transmitted by the element (positive = attractive).
    pub fn normal_force(&self, u: &[f64], g_init: f64) -> f64 {
        let state = self.gap_state(u, g_init);
        self.ip
            .iter()
            .zip(&state.ips)
            .map(|(ip, gap)| ip.weight * gap.p_n)
            .sum()
    }
}

const GP: f64 = 0.5773502691896257;

fn shape_1d(xi: f64) -> [f64; 4] {
    [0.5 * (1.0 - xi), 0.5 * (1.0 + xi), 0.0, 0.0]
}

fn shape_2d(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// Reference coordinates of the integration points for one element.
fn ip_reference(ndim: usize, quadrature: InterfaceQuadrature) -> Vec<[f64; 2]> {
    let c = match quadrature {
        InterfaceQuadrature::Nodal => 1.0,
        InterfaceQuadrature::Gauss => GP,
    };
    if ndim == 2 {
        vec![[-c, 0.0], [c, 0.0]]
    } else {
        vec![[-c, -c], [c, -c], [c, c], [-c, c]]
    }
}

/// Builds the interface layer over the mesh top surface, embedding elevation
/// and law coefficients from the scan grids.
///
/// All grids must share dimensions and cover the mesh length exactly, with
/// `(samples - 1)` divisible by the surface element count. Each integration
/// point receives the values of its nearest sample (exact coincidence under
/// nodal quadrature). `k_cap` is the shared tangent-slope cap.
pub fn build_interface_layer(
    mesh: &Mesh,
    height: &ScanGrid,
    peak_force: &ScanGrid,
    dissipation: &ScanGrid,
    k_cap: f64,
    quadrature: InterfaceQuadrature,
) -> Result<Vec<MpjrElement>> {
    check_kind(height, FieldKind::Height)?;
    check_kind(peak_force, FieldKind::PeakForce)?;
    check_kind(dissipation, FieldKind::Dissipation)?;
    for g in [peak_force, dissipation] {
        if (g.nx, g.ny) != (height.nx, height.ny) {
            return Err(Error::InterfaceLayer(format!(
                "grid dimensions differ: height {}x{}, {} {}x{}",
                height.nx, height.ny, g.kind, g.nx, g.ny
            )));
        }
    }
    if mesh.ndim == 2 && height.ny != 1 {
        return Err(Error::InterfaceLayer(format!(
            "2D interface needs profile grids (ny = 1), got ny = {}; extract a profile first",
            height.ny
        )));
    }
    if mesh.ndim == 3 && height.ny < 2 {
        return Err(Error::InterfaceLayer(
            "3D interface needs a full grid, got a profile".into(),
        ));
    }

    let n = mesh.n_surface;
    check_resolution(height.nx, n, "x")?;
    if mesh.ndim == 3 {
        check_resolution(height.ny, n, "y")?;
    }
    let extent = height.extent_x();
    if (extent - mesh.length).abs() > 1e-9 * mesh.length {
        return Err(Error::InterfaceLayer(format!(
            "grid extent {extent} does not match the mesh length {}",
            mesh.length
        )));
    }

    let h = mesh.surface_element_size();
    let npr = mesh.surface_points_per_side();
    let refs = ip_reference(mesh.ndim, quadrature);
    let mut elements = Vec::new();

    let columns = if mesh.ndim == 2 { n } else { n * n };
    for col in 0..columns {
        let (i, j) = (col % n, col / n);
        let (lower, upper, measure) = if mesh.ndim == 2 {
            (
                [mesh.surface_nodes[i], mesh.surface_nodes[i + 1], 0, 0],
                [mesh.upper_nodes[i], mesh.upper_nodes[i + 1], 0, 0],
                h,
            )
        } else {
            let q = j * npr + i;
            (
                [
                    mesh.surface_nodes[q],
                    mesh.surface_nodes[q + 1],
                    mesh.surface_nodes[q + npr + 1],
                    mesh.surface_nodes[q + npr],
                ],
                [
                    mesh.upper_nodes[q],
                    mesh.upper_nodes[q + 1],
                    mesh.upper_nodes[q + npr + 1],
                    mesh.upper_nodes[q + npr],
                ],
                h * h,
            )
        };

        let pairs = if mesh.ndim == 2 { 2 } else { 4 };
        let w = measure / pairs as f64;
        let mut ip = Vec::with_capacity(refs.len());
        for r in &refs {
            let (shape, x, y) = if mesh.ndim == 2 {
                let s = shape_1d(r[0]);
                let x = (i as f64 + 0.5 * (1.0 + r[0])) * h;
                (s, x, 0.0)
            } else {
                let s = shape_2d(r[0], r[1]);
                let x = (i as f64 + 0.5 * (1.0 + r[0])) * h;
                let y = (j as f64 + 0.5 * (1.0 + r[1])) * h;
                (s, x, y)
            };
            let gi = nearest_sample(x, height.dx, height.nx);
            let gj = if mesh.ndim == 2 {
                0
            } else {
                nearest_sample(y, height.dy, height.ny)
            };
            let z = height.value(gi, gj);
            let dg = dissipation.value(gi, gj);
            let pm = peak_force.value(gi, gj);
            let params = LjParams::derive(dg, pm, k_cap).map_err(|e| {
                Error::InterfaceLayer(format!("sample ({gi}, {gj}): {e}"))
            })?;
            ip.push(IpData {
                z,
                law: InterfaceLaw::LennardJones(params),
                coord: [x, y],
                shape,
                weight: w,
            });
        }
        elements.push(MpjrElement {
            ndim: mesh.ndim,
            lower,
            upper,
            measure,
            ip,
        });
    }
    Ok(elements)
}

/// Clones a layer with every law replaced by the adhesion-free penalty
/// comparison of the given stiffness.
pub fn penalty_layer(elements: &[MpjrElement], stiffness: f64) -> Vec<MpjrElement> {
    elements
        .iter()
        .map(|el| {
            let mut el = el.clone();
            for ip in &mut el.ip {
                ip.law = InterfaceLaw::Penalty { stiffness };
            }
            el
        })
        .collect()
}

/// Mean law parameters over a layer, used for the default initial separation
/// and for homogenized-law comparisons.
pub fn mean_adhesion(elements: &[MpjrElement]) -> Option<(f64, f64)> {
    let mut n = 0usize;
    let (mut dg, mut pm) = (0.0, 0.0);
    for el in elements {
        for ip in &el.ip {
            if let InterfaceLaw::LennardJones(p) = &ip.law {
                dg += p.delta_gamma;
                pm += p.p_max;
                n += 1;
            }
        }
    }
    (n > 0).then(|| (dg / n as f64, pm / n as f64))
}

fn nearest_sample(x: f64, dx: f64, n: usize) -> usize {
    let i = (x / dx).round();
    (i.max(0.0) as usize).min(n - 1)
}

fn check_kind(grid: &ScanGrid, kind: FieldKind) -> Result<()> {
    if grid.kind != kind {
        return Err(Error::InterfaceLayer(format!(
            "expected a {kind} grid, got {}",
            grid.kind
        )));
    }
    Ok(())
}

fn check_resolution(samples: usize, n_elements: usize, axis: &str) -> Result<()> {
    if !(samples - 1).is_multiple_of(n_elements) {
        return Err(Error::InterfaceLayer(format!(
            "{samples} samples along {axis} cannot map onto {n_elements} interface elements \
             (need samples - 1 divisible by the element count)"
        )));
    }
    Ok(())
}
