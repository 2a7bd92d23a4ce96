//! Linear elastic bulk element kernels: bilinear quadrilateral in plane
//! strain and trilinear hexahedron, both with 2-point Gauss quadrature per
//! direction (exact for parallelepiped elements).

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Matrix3, SMatrix};

/// Isotropic linear elastic material of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Elastic modulus (force/area).
    pub youngs: f64,
    /// Poisson ratio, in `[0, 0.5)`.
    pub poisson: f64,
    /// Phase label (0 = matrix, 1 = inclusion).
    pub phase: u8,
}

impl Material {
    pub fn new(youngs: f64, poisson: f64, phase: u8) -> Result<Material> {
        if !(youngs > 0.0) || !youngs.is_finite() {
            return Err(Error::Invalid(format!(
                "elastic modulus must be positive, got {youngs}"
            )));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(Error::Invalid(format!(
                "poisson ratio must lie in [0, 0.5), got {poisson}"
            )));
        }
        Ok(Material {
            youngs,
            poisson,
            phase,
        })
    }

    /// Plane strain constitutive matrix (3x3, engineering shear).
    pub fn plane_strain_matrix(&self) -> Matrix3<f64> {
        let e = self.youngs;
        let nu = self.poisson;
        let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        Matrix3::new(
            c * (1.0 - nu),
            c * nu,
            0.0,
            c * nu,
            c * (1.0 - nu),
            0.0,
            0.0,
            0.0,
            c * (1.0 - 2.0 * nu) / 2.0,
        )
    }

    /// 3D constitutive matrix (6x6, Voigt order xx, yy, zz, xy, yz, zx).
    pub fn elasticity_matrix(&self) -> SMatrix<f64, 6, 6> {
        let e = self.youngs;
        let nu = self.poisson;
        let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let diag = c * (1.0 - nu);
        let off = c * nu;
        let shear = c * (1.0 - 2.0 * nu) / 2.0;
        let mut d = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                d[(i, j)] = if i == j { diag } else { off };
            }
            d[(i + 3, i + 3)] = shear;
        }
        d
    }
}

const GAUSS_1D: [f64; 2] = [-0.5773502691896257, 0.5773502691896257];

/// Corner order of the reference quadrilateral (counter-clockwise).
const QUAD_CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Corner order of the reference hexahedron (bottom face then top face).
const HEX_CORNERS: [(f64, f64, f64); 8] = [
    (-1.0, -1.0, -1.0),
    (1.0, -1.0, -1.0),
    (1.0, 1.0, -1.0),
    (-1.0, 1.0, -1.0),
    (-1.0, -1.0, 1.0),
    (1.0, -1.0, 1.0),
    (1.0, 1.0, 1.0),
    (-1.0, 1.0, 1.0),
];

fn quad_shape_derivs(xi: f64, eta: f64) -> [(f64, f64); 4] {
    let mut d = [(0.0, 0.0); 4];
    for (a, (xa, ya)) in QUAD_CORNERS.iter().enumerate() {
        d[a] = (0.25 * xa * (1.0 + ya * eta), 0.25 * ya * (1.0 + xa * xi));
    }
    d
}

fn hex_shape_derivs(xi: f64, eta: f64, zeta: f64) -> [(f64, f64, f64); 8] {
    let mut d = [(0.0, 0.0, 0.0); 8];
    for (a, (xa, ya, za)) in HEX_CORNERS.iter().enumerate() {
        d[a] = (
            0.125 * xa * (1.0 + ya * eta) * (1.0 + za * zeta),
            0.125 * ya * (1.0 + xa * xi) * (1.0 + za * zeta),
            0.125 * za * (1.0 + xa * xi) * (1.0 + ya * eta),
        );
    }
    d
}

/// Stiffness of a 4-node plane strain quadrilateral (unit thickness).
///
/// Node order matches [`QUAD_CORNERS`]; DOFs are `[u1 v1 ... u4 v4]`.
pub fn quad4_stiffness(coords: &[[f64; 2]; 4], material: &Material) -> Result<SMatrix<f64, 8, 8>> {
    let d = material.plane_strain_matrix();
    let mut k = SMatrix::<f64, 8, 8>::zeros();
    for &xi in &GAUSS_1D {
        for &eta in &GAUSS_1D {
            let dn = quad_shape_derivs(xi, eta);
            let mut jac = Matrix2::<f64>::zeros();
            for a in 0..4 {
                jac[(0, 0)] += dn[a].0 * coords[a][0];
                jac[(0, 1)] += dn[a].0 * coords[a][1];
                jac[(1, 0)] += dn[a].1 * coords[a][0];
                jac[(1, 1)] += dn[a].1 * coords[a][1];
            }
            let det = jac.determinant();
            if det <= 0.0 {
                return Err(Error::Mesh(format!(
                    "non-positive quad Jacobian {det:.3e}"
                )));
            }
            let inv = jac.try_inverse().expect("det checked above");
            let mut b = SMatrix::<f64, 3, 8>::zeros();
            for a in 0..4 {
                let dx = inv[(0, 0)] * dn[a].0 + inv[(0, 1)] * dn[a].1;
                let dy = inv[(1, 0)] * dn[a].0 + inv[(1, 1)] * dn[a].1;
                b[(0, 2 * a)] = dx;
                b[(1, 2 * a + 1)] = dy;
                b[(2, 2 * a)] = dy;
                b[(2, 2 * a + 1)] = dx;
            }
            k += b.transpose() * d * b * det;
        }
    }
    Ok(k)
}

/// Stiffness of an 8-node trilinear hexahedron.
///
/// Node order matches [`HEX_CORNERS`]; DOFs are `[u1 v1 w1 ... u8 v8 w8]`.
pub fn hex8_stiffness(
    coords: &[[f64; 3]; 8],
    material: &Material,
) -> Result<SMatrix<f64, 24, 24>> {
    let d = material.elasticity_matrix();
    let mut k = SMatrix::<f64, 24, 24>::zeros();
    for &xi in &GAUSS_1D {
        for &eta in &GAUSS_1D {
            for &zeta in &GAUSS_1D {
                let dn = hex_shape_derivs(xi, eta, zeta);
                let mut jac = Matrix3::<f64>::zeros();
                for a in 0..8 {
                    let (dxi, deta, dzeta) = dn[a];
                    for c in 0..3 {
                        jac[(0, c)] += dxi * coords[a][c];
                        jac[(1, c)] += deta * coords[a][c];
                        jac[(2, c)] += dzeta * coords[a][c];
                    }
                }
                let det = jac.determinant();
                if det <= 0.0 {
                    return Err(Error::Mesh(format!(
                        "non-positive hex Jacobian {det:.3e}"
                    )));
                }
                let inv = jac.try_inverse().expect("det checked above");
                let mut b = SMatrix::<f64, 6, 24>::zeros();
                for a in 0..8 {
                    let (dxi, deta, dzeta) = dn[a];
                    let dx = inv[(0, 0)] * dxi + inv[(0, 1)] * deta + inv[(0, 2)] * dzeta;
                    let dy = inv[(1, 0)] * dxi + inv[(1, 1)] * deta + inv[(1, 2)] * dzeta;
                    let dz = inv[(2, 0)] * dxi + inv[(2, 1)] * deta + inv[(2, 2)] * dzeta;
                    let c = 3 * a;
                    b[(0, c)] = dx;
                    b[(1, c + 1)] = dy;
                    b[(2, c + 2)] = dz;
                    b[(3, c)] = dy;
                    b[(3, c + 1)] = dx;
                    b[(4, c + 1)] = dz;
                    b[(4, c + 2)] = dy;
                    b[(5, c)] = dz;
                    b[(5, c + 2)] = dx;
                }
                k += b.transpose() * d * b * det;
            }
        }
    }
    Ok(k)
}
