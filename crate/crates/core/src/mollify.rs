//! Spherical mollification `c ↦ c * ρ_ε` on `S^{n-2}` by vertex quadrature.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::dist;
use crate::maps::PositionMap;
use crate::sphere::{Cells, SphereMesh};

/// Samples kept in [`Kernel::profile`] on `[0, 1]`.
pub const PROFILE_SAMPLES: usize = 257;

/// Standard bump `exp(-1/(1-r²))`, zero for `r ≥ 1`.
#[inline]
pub fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Kernel {
    pub epsilon: f64,
    /// Mean over vertices of `ε^{n-2} / ∫ρ(|x-y|/ε) dy`.
    pub d_epsilon: f64,
    pub d_epsilon_min: f64,
    pub d_epsilon_max: f64,
    pub profile: Vec<f64>,
    #[serde(skip)]
    rows: Vec<Vec<(u32, f64)>>,
}

impl Kernel {
    /// Total kernel mass seen from vertex `i`.
    pub fn mass_at(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Normalized weights `(j, W_ij)` with `Σ_j W_ij = 1`.
    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }
}

/// Builds `ρ_ε` on `mesh`, normalized per vertex so each row has mass one.
pub fn mollifier_kernel(epsilon: f64, mesh: &SphereMesh) -> Result<Kernel> {
    if !(epsilon > 0.0 && epsilon <= 0.3) {
        return Err(KakeyaError::param("epsilon", format!("{epsilon} is outside (0, 0.3]")));
    }
    if mesh.spacing() > epsilon / 4.0 {
        return Err(KakeyaError::MeshTooCoarse {
            spacing: mesh.spacing(),
            scale: epsilon,
        });
    }
    let pts: Vec<&[f64]> = mesh.vertices().collect();
    let w = mesh.weights();
    let scale = epsilon.powi(mesh.dim() as i32);
    let built: Vec<(Vec<(u32, f64)>, f64)> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            let mut mass = 0.0;
            for (j, y) in pts.iter().enumerate() {
                let r = dist(pts[i], y) / epsilon;
                if r < 1.0 {
                    let k = bump(r) * w[j];
                    mass += k;
                    row.push((j as u32, k));
                }
            }
            for e in &mut row {
                e.1 /= mass;
            }
            (row, scale / mass)
        })
        .collect();
    let d: Vec<f64> = built.iter().map(|b| b.1).collect();
    let rows = built.into_iter().map(|b| b.0).collect();
    let profile = (0..PROFILE_SAMPLES)
        .map(|i| bump(i as f64 / (PROFILE_SAMPLES - 1) as f64))
        .collect();
    Ok(Kernel {
        epsilon,
        d_epsilon: d.iter().sum::<f64>() / d.len() as f64,
        d_epsilon_min: d.iter().copied().fold(f64::INFINITY, f64::min),
        d_epsilon_max: d.iter().copied().fold(0.0, f64::max),
        profile,
        rows,
    })
}

/// Componentwise convolution of vertex samples with the kernel.
pub fn mollify_on_sphere(values: &[Vec<f64>], kernel: &Kernel) -> Result<Vec<Vec<f64>>> {
    if values.len() != kernel.len() {
        return Err(KakeyaError::LengthMismatch {
            expected: kernel.len(),
            actual: values.len(),
        });
    }
    let m = values.first().map_or(0, Vec::len);
    Ok((0..values.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; m];
            for &(j, wt) in kernel.row(i) {
                for (a, v) in acc.iter_mut().zip(&values[j as usize]) {
                    *a += wt * v;
                }
            }
            acc
        })
        .collect())
}

/// `c` evaluated at the mesh vertices.
pub fn boundary_values(map: &PositionMap, mesh: &SphereMesh) -> Result<Vec<Vec<f64>>> {
    if map.in_dim() != mesh.ambient_dim() {
        return Err(KakeyaError::Dimension {
            dim: mesh.dim(),
            context: "mesh sphere does not match the map's boundary sphere",
        });
    }
    Ok(mesh.vertices().map(|v| map.eval(v)).collect())
}

/// Largest tangential derivative norm of vertex samples.
///
/// On S¹ this is the central difference over one mesh step; on S² a
/// least-squares tangent-plane gradient over the one-ring, measured in the
/// operator norm.
pub fn gradient_norms(values: &[Vec<f64>], mesh: &SphereMesh) -> Vec<f64> {
    match mesh.cells() {
        Cells::Cycle(n) => {
            let n = *n;
            let step = mesh.spacing();
            (0..n)
                .map(|i| dist(&values[(i + 1) % n], &values[(i + n - 1) % n]) / (2.0 * step))
                .collect()
        }
        Cells::Triangles(_) => {
            let nb = mesh.neighbors();
            (0..mesh.len())
                .map(|i| {
                    let x = mesh.vertex(i);
                    let (e1, e2) = crate::regularity::tangent_frame([x[0], x[1], x[2]]);
                    // Normal equations for J in f_j - f_i ≈ J u_j.
                    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
                    let m = values[i].len();
                    let mut b1 = vec![0.0; m];
                    let mut b2 = vec![0.0; m];
                    for &j in &nb[i] {
                        let y = mesh.vertex(j);
                        let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
                        let chord = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        let arc = 2.0 * (chord / 2.0).asin();
                        let u1 = d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2];
                        let u2 = d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2];
                        let s = arc / (u1 * u1 + u2 * u2).sqrt();
                        let (u1, u2) = (u1 * s, u2 * s);
                        a11 += u1 * u1;
                        a12 += u1 * u2;
                        a22 += u2 * u2;
                        for k in 0..m {
                            let df = values[j][k] - values[i][k];
                            b1[k] += df * u1;
                            b2[k] += df * u2;
                        }
                    }
                    let det = a11 * a22 - a12 * a12;
                    // JᵀJ entries
                    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
                    for k in 0..m {
                        let j1 = (a22 * b1[k] - a12 * b2[k]) / det;
                        let j2 = (a11 * b2[k] - a12 * b1[k]) / det;
                        g11 += j1 * j1;
                        g12 += j1 * j2;
                        g22 += j2 * j2;
                    }
                    let tr = g11 + g22;
                    let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
                    (0.5 * (tr + disc)).max(0.0).sqrt()
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MollificationBounds {
    pub epsilon: f64,
    pub alpha: f64,
    pub sup_deviation: f64,
    pub grad_sup: f64,
    /// `sup_deviation / ε^α`
    pub sup_ratio: f64,
    /// `grad_sup / ε^{α-1}`
    pub grad_ratio: f64,
    pub d_epsilon: f64,
}

/// Deviation and gradient of the mollified boundary map at scale `epsilon`.
pub fn mollification_bounds(
    map: &PositionMap,
    epsilon: f64,
    alpha: f64,
    mesh: &SphereMesh,
) -> Result<MollificationBounds> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(KakeyaError::param("alpha", format!("{alpha} is outside (0, 1]")));
    }
    let kernel = mollifier_kernel(epsilon, mesh)?;
    let raw = boundary_values(map, mesh)?;
    let smooth = mollify_on_sphere(&raw, &kernel)?;
    let sup_deviation = raw
        .iter()
        .zip(&smooth)
        .map(|(a, b)| dist(a, b))
        .fold(0.0, f64::max);
    let grad_sup = gradient_norms(&smooth, mesh).into_iter().fold(0.0, f64::max);
    Ok(MollificationBounds {
        epsilon,
        alpha,
        sup_deviation,
        grad_sup,
        sup_ratio: sup_deviation / epsilon.powf(alpha),
        grad_ratio: grad_sup / epsilon.powf(alpha - 1.0),
        d_epsilon: kernel.d_epsilon,
    })
}
