//! Structured graded meshes for a deformable layer under a nominally flat
//! interface.
//!
//! The interface sits on the top surface (y = 0 in 2D, z = 0 in 3D); the bulk
//! extends downward over the layer depth. Elements are uniform along the
//! surface and geometrically graded in depth, finest at the interface. The
//! indenter side of the interface is a duplicated set of nodes at the same
//! coordinates, so interface elements have zero thickness and node pairing is
//! fixed once and for all.

use crate::bulk;
use crate::error::{Error, Result};
use crate::scan::PhaseMask;

/// Bulk element: 4 nodes in 2D (only the first four indices are used) or
/// 8 nodes in 3D, plus an index into the material table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkElement {
    pub nodes: [usize; 8],
    pub material: usize,
}

/// Structured mesh of the deformable layer plus the indenter-side node set.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub ndim: usize,
    /// Node coordinates; the third component is unused in 2D.
    pub coords: Vec<[f64; 3]>,
    pub bulk: Vec<BulkElement>,
    /// Bulk nodes on the top surface, in grid order (`j * (n+1) + i` in 3D).
    pub surface_nodes: Vec<usize>,
    /// Indenter-side duplicates paired one-to-one with `surface_nodes`.
    pub upper_nodes: Vec<usize>,
    /// Bulk nodes on the clamped bottom face.
    pub bottom_nodes: Vec<usize>,
    /// Elements per side along the surface.
    pub n_surface: usize,
    /// Lateral size of the sample.
    pub length: f64,
    /// Layer depth (thickness in 2D).
    pub depth: f64,
    /// Graded layer thicknesses, interface side first.
    pub layers: Vec<f64>,
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    /// Bulk grid nodes, excluding the duplicated indenter-side nodes.
    pub fn bulk_node_count(&self) -> usize {
        self.coords.len() - self.upper_nodes.len()
    }

    pub fn dof_count(&self) -> usize {
        self.coords.len() * self.ndim
    }

    /// Nodes per side of the surface grid.
    pub fn surface_points_per_side(&self) -> usize {
        self.n_surface + 1
    }

    /// Uniform surface element size `L / n_surface`.
    pub fn surface_element_size(&self) -> f64 {
        self.length / self.n_surface as f64
    }

    /// Checks that every bulk element has a positive Jacobian by evaluating
    /// its stiffness with a dummy material.
    pub fn validate_jacobians(&self) -> Result<()> {
        let probe = bulk::Material::new(1.0, 0.0, 0)?;
        for (idx, el) in self.bulk.iter().enumerate() {
            let res = if self.ndim == 2 {
                bulk::quad4_stiffness(&self.quad_coords(el), &probe).map(|_| ())
            } else {
                bulk::hex8_stiffness(&self.hex_coords(el), &probe).map(|_| ())
            };
            res.map_err(|e| Error::Mesh(format!("element {idx}: {e}")))?;
        }
        Ok(())
    }

    pub fn quad_coords(&self, el: &BulkElement) -> [[f64; 2]; 4] {
        let mut c = [[0.0; 2]; 4];
        for a in 0..4 {
            let p = self.coords[el.nodes[a]];
            c[a] = [p[0], p[1]];
        }
        c
    }

    pub fn hex_coords(&self, el: &BulkElement) -> [[f64; 3]; 8] {
        let mut c = [[0.0; 3]; 8];
        for a in 0..8 {
            c[a] = self.coords[el.nodes[a]];
        }
        c
    }
}

/// Graded layer thicknesses covering `depth`, finest first.
///
/// The first layer starts at `h0` and successive layers grow by `grading`;
/// the count is the smallest number whose geometric sum covers the depth, and
/// all thicknesses are then rescaled so the sum equals `depth` exactly
/// (rescaling preserves the ratio between successive layers).
pub fn graded_layers(depth: f64, h0: f64, grading: f64) -> Result<Vec<f64>> {
    if !(depth > 0.0) || !(h0 > 0.0) {
        return Err(Error::Mesh(format!(
            "depth and base layer size must be positive, got {depth} and {h0}"
        )));
    }
    if !(grading >= 1.0) {
        return Err(Error::Mesh(format!("grading must be >= 1, got {grading}")));
    }
    let n = if grading == 1.0 {
        (depth / h0).ceil() as usize
    } else {
        // smallest n with h0 (r^n - 1)/(r - 1) >= depth
        let r = grading;
        let n = ((depth / h0 * (r - 1.0) + 1.0).ln() / r.ln()).ceil() as usize;
        n.max(1)
    };
    let n = n.max(1);
    let sum: f64 = (0..n).map(|k| grading.powi(k as i32)).sum();
    let scale = depth / (h0 * sum);
    Ok((0..n).map(|k| scale * h0 * grading.powi(k as i32)).collect())
}

/// Structured plane strain mesh: uniform columns along x, graded rows in
/// depth, clamped bottom edge, indenter-side nodes duplicated above y = 0.
pub fn generate_mesh_2d(
    length: f64,
    thickness: f64,
    n_surface: usize,
    grading: f64,
) -> Result<Mesh> {
    if !(length > 0.0) || !(thickness > 0.0) {
        return Err(Error::Mesh(format!(
            "length and thickness must be positive, got {length} and {thickness}"
        )));
    }
    if n_surface < 2 {
        return Err(Error::Mesh(format!(
            "need at least 2 surface elements, got {n_surface}"
        )));
    }
    let n = n_surface;
    let h0 = length / n as f64;
    let layers = graded_layers(thickness, h0, grading)?;
    let nl = layers.len();
    let npr = n + 1; // nodes per row

    let mut coords = Vec::with_capacity(npr * (nl + 1) + npr);
    let mut y = 0.0;
    for k in 0..=nl {
        let yk = if k == nl { -thickness } else { y };
        for i in 0..npr {
            coords.push([i as f64 * h0, yk, 0.0]);
        }
        if k < nl {
            y -= layers[k];
        }
    }
    let upper_base = coords.len();
    for i in 0..npr {
        coords.push([i as f64 * h0, 0.0, 0.0]);
    }

    let mut elements = Vec::with_capacity(n * nl);
    for k in 0..nl {
        for i in 0..n {
            let top = k * npr;
            let bot = (k + 1) * npr;
            elements.push(BulkElement {
                nodes: [bot + i, bot + i + 1, top + i + 1, top + i, 0, 0, 0, 0],
                material: 0,
            });
        }
    }

    let mesh = Mesh {
        ndim: 2,
        coords,
        bulk: elements,
        surface_nodes: (0..npr).collect(),
        upper_nodes: (upper_base..upper_base + npr).collect(),
        bottom_nodes: (nl * npr..(nl + 1) * npr).collect(),
        n_surface: n,
        length,
        depth: thickness,
        layers,
    };
    mesh.validate_jacobians()?;
    Ok(mesh)
}

/// Structured hexahedral mesh, the 3D analogue of [`generate_mesh_2d`]:
/// `n_surface x n_surface` columns, graded planes in depth.
pub fn generate_mesh_3d(length: f64, depth: f64, n_surface: usize, grading: f64) -> Result<Mesh> {
    if !(length > 0.0) || !(depth > 0.0) {
        return Err(Error::Mesh(format!(
            "length and depth must be positive, got {length} and {depth}"
        )));
    }
    if n_surface < 2 {
        return Err(Error::Mesh(format!(
            "need at least 2 surface elements per side, got {n_surface}"
        )));
    }
    let n = n_surface;
    let h0 = length / n as f64;
    let layers = graded_layers(depth, h0, grading)?;
    let nl = layers.len();
    let npr = n + 1;
    let plane = npr * npr;

    let mut coords = Vec::with_capacity(plane * (nl + 1) + plane);
    let mut z = 0.0;
    for k in 0..=nl {
        let zk = if k == nl { -depth } else { z };
        for j in 0..npr {
            for i in 0..npr {
                coords.push([i as f64 * h0, j as f64 * h0, zk]);
            }
        }
        if k < nl {
            z -= layers[k];
        }
    }
    let upper_base = coords.len();
    for j in 0..npr {
        for i in 0..npr {
            coords.push([i as f64 * h0, j as f64 * h0, 0.0]);
        }
    }

    let mut elements = Vec::with_capacity(n * n * nl);
    for k in 0..nl {
        let top = k * plane;
        let bot = (k + 1) * plane;
        for j in 0..n {
            for i in 0..n {
                let q = j * npr + i;
                elements.push(BulkElement {
                    nodes: [
                        bot + q,
                        bot + q + 1,
                        bot + q + npr + 1,
                        bot + q + npr,
                        top + q,
                        top + q + 1,
                        top + q + npr + 1,
                        top + q + npr,
                    ],
                    material: 0,
                });
            }
        }
    }

    let mesh = Mesh {
        ndim: 3,
        coords,
        bulk: elements,
        surface_nodes: (0..plane).collect(),
        upper_nodes: (upper_base..upper_base + plane).collect(),
        bottom_nodes: (nl * plane..(nl + 1) * plane).collect(),
        n_surface: n,
        length,
        depth,
        layers,
    };
    mesh.validate_jacobians()?;
    Ok(mesh)
}

/// Assigns per-element material ids by extruding the surface phase mask
/// through the depth: every element under surface column `(i, j)` gets the
/// phase sampled at that column, at every layer.
///
/// Material id = phase label (0 = matrix, 1 = inclusion), indexing a
/// two-entry material table. The mask resolution must be an integer multiple
/// of the surface element count; the sample taken for a column is the one at
/// `i * stride + stride / 2` (integer division).
pub fn assign_phases(mesh: &mut Mesh, mask: &PhaseMask) -> Result<()> {
    let n = mesh.n_surface;
    let stride_x = column_stride(mask.nx, n)?;
    let column_label: Box<dyn Fn(usize, usize) -> u8> = if mesh.ndim == 2 {
        if mask.ny != 1 {
            return Err(Error::Mesh(format!(
                "2D phase assignment needs a profile mask (ny = 1), got ny = {}",
                mask.ny
            )));
        }
        Box::new(move |i, _j| mask.label(i * stride_x + stride_x / 2, 0))
    } else {
        let stride_y = column_stride(mask.ny, n)?;
        Box::new(move |i, j| mask.label(i * stride_x + stride_x / 2, j * stride_y + stride_y / 2))
    };

    let columns_per_layer = if mesh.ndim == 2 { n } else { n * n };
    for (idx, el) in mesh.bulk.iter_mut().enumerate() {
        let col = idx % columns_per_layer;
        let (i, j) = (col % n, col / n);
        el.material = column_label(i, j) as usize;
    }
    Ok(())
}

fn column_stride(samples: usize, n_elements: usize) -> Result<usize> {
    if samples < 2 || !(samples - 1).is_multiple_of(n_elements) {
        return Err(Error::Mesh(format!(
            "{samples} mask samples cannot map onto {n_elements} surface element columns \
             (need samples - 1 divisible by the column count)"
        )));
    }
    Ok((samples - 1) / n_elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{segment_phases, FieldKind, ScanGrid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counting_2d() {
        // first layer = L/4 = 0.25, uniform grading, depth 0.5 -> 2 layers
        let mesh = generate_mesh_2d(1.0, 0.5, 4, 1.0).unwrap();
        assert_eq!(mesh.layers.len(), 2);
        assert_eq!(mesh.bulk.len(), 8);
        assert_eq!(mesh.bulk_node_count(), 15);
        assert_eq!(mesh.upper_nodes.len(), 5);
        assert_eq!(mesh.bottom_nodes.len(), 5);
    }

    #[test]
    fn counting_3d() {
        let mesh = generate_mesh_3d(1.0, 0.5, 2, 1.0).unwrap();
        assert_eq!(mesh.layers.len(), 1);
        assert_eq!(mesh.bulk.len(), 4);
        assert_eq!(mesh.bulk_node_count(), 18);
        assert_eq!(mesh.upper_nodes.len(), 9);
    }

    #[test]
    fn graded_layers_follow_geometric_series() {
        let layers = graded_layers(7.0, 1.0, 2.0).unwrap();
        // 1 + 2 + 4 = 7 covers exactly
        assert_eq!(layers.len(), 3);
        assert_relative_eq!(layers[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(layers[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(layers[2], 4.0, epsilon = 1e-12);

        // non-exact cover: ratios still follow the grading after rescale
        let layers = graded_layers(5.0, 1.0, 2.0).unwrap();
        assert_eq!(layers.len(), 3);
        assert_relative_eq!(layers.iter().sum::<f64>(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(layers[1] / layers[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(layers[2] / layers[1], 2.0, epsilon = 1e-12);

        assert!(graded_layers(1.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn top_surface_conforms_with_upper_nodes() {
        let mesh = generate_mesh_3d(2.0, 1.0, 4, 1.5).unwrap();
        assert_eq!(mesh.surface_nodes.len(), mesh.upper_nodes.len());
        for (lo, up) in mesh.surface_nodes.iter().zip(&mesh.upper_nodes) {
            assert_eq!(mesh.coords[*lo], mesh.coords[*up]);
            assert_eq!(mesh.coords[*lo][2], 0.0);
        }
        // refined-region element size is the uniform surface partition
        let h = mesh.surface_element_size();
        assert!((h - 0.5).abs() < 1e-14 * mesh.length);
        let c0 = mesh.coords[mesh.surface_nodes[0]];
        let c1 = mesh.coords[mesh.surface_nodes[1]];
        assert!((c1[0] - c0[0] - h).abs() < 1e-14 * mesh.length);
    }

    #[test]
    fn jacobians_positive_on_generated_meshes() {
        generate_mesh_2d(5e-3, 2e-4, 16, 1.3).unwrap();
        generate_mesh_3d(5e-3, 5e-3, 4, 2.0).unwrap();
    }

    #[test]
    fn bottom_row_sits_at_exact_depth() {
        let mesh = generate_mesh_2d(1.0, 0.37, 8, 1.7).unwrap();
        for id in &mesh.bottom_nodes {
            assert_eq!(mesh.coords[*id][1], -0.37);
        }
    }

    #[test]
    fn phases_extrude_through_depth() {
        // alternating-column mask on a profile with one sample per node
        let modulus = ScanGrid::from_values(
            5,
            1,
            0.25,
            0.25,
            FieldKind::Modulus,
            vec![60.0, 100.0, 60.0, 100.0, 60.0],
        )
        .unwrap();
        let (mask, _) = segment_phases(&modulus, 72.44).unwrap();
        let mut mesh = generate_mesh_2d(1.0, 0.5, 4, 1.0).unwrap();
        assign_phases(&mut mesh, &mask).unwrap();
        for (idx, el) in mesh.bulk.iter().enumerate() {
            let col = idx % 4;
            // stride 1: column sample = node i -> labels 1,0,1,0
            let expect = if col % 2 == 0 { 1 } else { 0 };
            assert_eq!(el.material, expect, "element {idx}");
        }
    }

    #[test]
    fn all_matrix_mask_gives_single_material() {
        let modulus =
            ScanGrid::from_values(5, 1, 0.25, 0.25, FieldKind::Modulus, vec![100.0; 5]).unwrap();
        let (mask, _) = segment_phases(&modulus, 72.44).unwrap();
        let mut mesh = generate_mesh_2d(1.0, 0.5, 4, 1.0).unwrap();
        assign_phases(&mut mesh, &mask).unwrap();
        assert!(mesh.bulk.iter().all(|el| el.material == 0));
    }

    #[test]
    fn random_mask_matches_bruteforce_column_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let values: Vec<f64> = (0..9).map(|_| rng.gen_range(40.0..140.0)).collect();
        let modulus =
            ScanGrid::from_values(9, 1, 0.125, 0.125, FieldKind::Modulus, values).unwrap();
        let (mask, _) = segment_phases(&modulus, 72.44).unwrap();
        let mut mesh = generate_mesh_2d(1.0, 0.3, 4, 1.2).unwrap();
        assign_phases(&mut mesh, &mask).unwrap();
        let stride = 2; // (9 - 1) / 4
        for (idx, el) in mesh.bulk.iter().enumerate() {
            let i = idx % 4;
            let expect = mask.label(i * stride + stride / 2, 0) as usize;
            assert_eq!(el.material, expect);
        }
        // mismatched resolution is rejected
        let bad = ScanGrid::from_values(6, 1, 0.2, 0.2, FieldKind::Modulus, vec![80.0; 6]).unwrap();
        let (bad_mask, _) = segment_phases(&bad, 72.44).unwrap();
        assert!(assign_phases(&mut mesh, &bad_mask).is_err());
    }
}
