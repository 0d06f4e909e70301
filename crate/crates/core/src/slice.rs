//! Horizontal slices of the Kakeya map and their signed volumes.
//!
//! At height `t` the boundary sphere traces `v ↦ c(v) + t·v`. Its signed
//! volume is a polynomial in `t` whose leading coefficient is the volume of
//! the unit ball, whatever `c` is.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::{cross3, det3, dist_point_segment_2d, dist_point_triangle, norm3, sub3};
use crate::maps::{Domain, PositionMap};
use crate::mollify::{boundary_values, mollifier_kernel, mollify_on_sphere};
use crate::sphere::SphereMesh;
use crate::winding::{LoopGeometry, SliceLoop, WindingField, WindingMethod};

/// Loops traced from a sphere mesh need at least this many vertices.
pub const MIN_MESH_LOOP_VERTICES: usize = 16;

/// Default number of uniform heights in a sweep.
pub const DEFAULT_T_STEPS: usize = 64;

/// Volume of the unit ball in `R^{n-1}`: the leading coefficient of SV.
pub fn orientation_constant(n: usize) -> Result<f64> {
    match n {
        3 => Ok(PI),
        4 => Ok(4.0 * PI / 3.0),
        _ => Err(KakeyaError::Dimension { dim: n, context: "slices exist for n = 3 and n = 4" }),
    }
}

/// `min_e ∫₀¹ |t^{n-1} + e(t)| dt` over polynomials `e` of degree ≤ n−2.
///
/// The minimiser is a shifted monic Chebyshev polynomial of the second kind,
/// giving `4^{-(n-1)}`.
pub fn monic_l1_minimum(n: usize) -> f64 {
    0.25f64.powi(n as i32 - 1)
}

/// Isoperimetric threshold `C_n + 0.02` with the sharp constant `C_n`.
pub fn isoperimetric_threshold(n: usize) -> Result<f64> {
    match n {
        3 => Ok(1.0 / (4.0 * PI).sqrt() + 0.02),
        4 => Ok((36.0 * PI).powf(-1.0 / 3.0) + 0.02),
        _ => Err(KakeyaError::Dimension { dim: n, context: "slices exist for n = 3 and n = 4" }),
    }
}

/// Boundary trace `v ↦ c(v)` (or its mollification) on a sphere mesh,
/// reusable across heights.
pub struct BoundaryTrace<'a> {
    mesh: &'a SphereMesh,
    values: Vec<Vec<f64>>,
    epsilon: Option<f64>,
}

impl<'a> BoundaryTrace<'a> {
    pub fn new(c: &PositionMap, mesh: &'a SphereMesh, epsilon: Option<f64>) -> Result<Self> {
        if c.domain() != Domain::Ball {
            return Err(KakeyaError::param("map", "slices need a ball-domain position map"));
        }
        if mesh.len() < MIN_MESH_LOOP_VERTICES {
            return Err(KakeyaError::param(
                "mesh",
                format!("slice loops need at least {MIN_MESH_LOOP_VERTICES} vertices"),
            ));
        }
        let mut values = boundary_values(c, mesh)?;
        if let Some(eps) = epsilon {
            values = mollify_on_sphere(&values, &mollifier_kernel(eps, mesh)?)?;
        }
        Ok(BoundaryTrace { mesh, values, epsilon })
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn mesh(&self) -> &SphereMesh {
        self.mesh
    }

    pub fn loop_at(&self, t: f64) -> Result<SliceLoop> {
        let point = |i: usize| -> Vec<f64> {
            let v = self.mesh.vertex(i);
            self.values[i].iter().zip(v).map(|(c, v)| c + t * v).collect()
        };
        match self.mesh.dim() {
            1 => SliceLoop::polyline(
                t,
                (0..self.mesh.len()).map(|i| { let p = point(i); [p[0], p[1]] }).collect(),
            ),
            _ => SliceLoop::mesh(
                t,
                (0..self.mesh.len()).map(|i| { let p = point(i); [p[0], p[1], p[2]] }).collect(),
                self.mesh.triangles().to_vec(),
            ),
        }
    }
}

/// `γ_t` (or `γ_{t,ε}` when `epsilon` is given), in mesh order.
pub fn slice_loop(c: &PositionMap, t: f64, mesh: &SphereMesh, epsilon: Option<f64>) -> Result<SliceLoop> {
    BoundaryTrace::new(c, mesh, epsilon)?.loop_at(t)
}

/// Shoelace area (planar) or divergence-theorem volume (meshes).
pub fn signed_volume_stokes(lp: &SliceLoop) -> f64 {
    if lp.is_degenerate() {
        return 0.0;
    }
    match lp.geometry() {
        LoopGeometry::Polyline(v) => {
            // Relative to the first vertex, so far-off loops keep their digits.
            let o = v[0];
            let mut s = 0.0;
            for i in 1..v.len() - 1 {
                let (a, b) = (v[i], v[i + 1]);
                s += (a[0] - o[0]) * (b[1] - o[1]) - (b[0] - o[0]) * (a[1] - o[1]);
            }
            s / 2.0
        }
        LoopGeometry::Mesh { vertices, triangles } => {
            let o = vertices[0];
            triangles
                .iter()
                .map(|t| det3(sub3(vertices[t[0]], o), sub3(vertices[t[1]], o), sub3(vertices[t[2]], o)))
                .sum::<f64>()
                / 6.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridVolume {
    pub value: f64,
    pub h: f64,
    pub masked_cells: usize,
}

fn field_method(lp: &SliceLoop) -> WindingMethod {
    match lp.ambient_dim() {
        2 => WindingMethod::Scanline,
        _ => WindingMethod::SolidAngle,
    }
}

/// `Σ wind · h^{n-1}` over unmasked cells.
pub fn signed_volume_grid(lp: &SliceLoop, h: f64) -> Result<GridVolume> {
    let field = WindingField::compute(lp, h, field_method(lp))?;
    Ok(GridVolume { value: field.integral(), h, masked_cells: field.masked_count() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SvMethod {
    Stokes,
    Grid { h: f64 },
}

impl SvMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SvMethod::Stokes => "stokes",
            SvMethod::Grid { .. } => "grid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SVProfile {
    pub t_values: Vec<f64>,
    pub sv_values: Vec<f64>,
    pub method: &'static str,
    pub mesh_resolution: usize,
    pub grid_spacing: Option<f64>,
    pub epsilon: Option<f64>,
}

impl SVProfile {
    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sv\n");
        for (t, v) in self.t_values.iter().zip(&self.sv_values) {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }

    /// Trapezoid rule for `∫ |SV(t)| dt` over the profile's heights.
    pub fn integral_abs(&self) -> f64 {
        self.t_values
            .windows(2)
            .zip(self.sv_values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs() + v[1].abs()))
            .sum()
    }
}

/// `steps` uniform heights from 0 to 1 inclusive.
pub fn uniform_t_grid(steps: usize) -> Vec<f64> {
    let d = (steps.max(2) - 1) as f64;
    (0..steps.max(2)).map(|i| i as f64 / d).collect()
}

fn check_t_grid(t_grid: &[f64], n: usize) -> Result<()> {
    if t_grid.len() < n {
        return Err(KakeyaError::param("t_grid", format!("need at least {n} heights")));
    }
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(KakeyaError::param("t_grid", "heights must lie in [0, 1]"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KakeyaError::param("t_grid", "heights must be strictly increasing"));
    }
    Ok(())
}

/// SV(t) at every height in `t_grid`.
pub fn sweep_signed_volume(
    c: &PositionMap,
    t_grid: &[f64],
    mesh: &SphereMesh,
    epsilon: Option<f64>,
    method: SvMethod,
) -> Result<SVProfile> {
    check_t_grid(t_grid, c.n())?;
    let trace = BoundaryTrace::new(c, mesh, epsilon)?;
    let sv_values = t_grid
        .par_iter()
        .map(|&t| {
            let lp = trace.loop_at(t)?;
            match method {
                SvMethod::Stokes => Ok(signed_volume_stokes(&lp)),
                SvMethod::Grid { h } => Ok(signed_volume_grid(&lp, h)?.value),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SVProfile {
        t_values: t_grid.to_vec(),
        sv_values,
        method: method.name(),
        mesh_resolution: mesh.len(),
        grid_spacing: match method {
            SvMethod::Grid { h } => Some(h),
            SvMethod::Stokes => None,
        },
        epsilon,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyFit {
    /// Constant term first.
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    #[serde(rename = "leading")]
    pub leading_coefficient: f64,
}

impl PolyFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }
}

/// Least-squares polynomial of degree `n − 1` through the profile.
pub fn fit_sv_polynomial(profile: &SVProfile, n: usize) -> Result<PolyFit> {
    orientation_constant(n)?;
    let m = profile.len();
    if m < 2 * n {
        return Err(KakeyaError::param("profile", format!("need at least {} points, got {m}", 2 * n)));
    }
    let a = DMatrix::from_fn(m, n, |i, j| profile.t_values[i].powi(j as i32));
    let b = DVector::from_column_slice(&profile.sv_values);
    let svd = a.clone().svd(true, true);
    let (smax, smin) = svd
        .singular_values
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if smin <= 1e-10 * smax {
        return Err(KakeyaError::IllConditioned {
            reason: format!("Vandermonde singular values span {smin:.3e}..{smax:.3e}; heights are too clustered"),
        });
    }
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| KakeyaError::IllConditioned { reason: e.to_string() })?;
    let r = &a * &x - b;
    let coefficients: Vec<f64> = x.iter().copied().collect();
    Ok(PolyFit {
        residual_rms: (r.norm_squared() / m as f64).sqrt(),
        leading_coefficient: coefficients[n - 1],
        coefficients,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBoundCheck {
    pub integral_abs_sv: f64,
    pub kappa: f64,
    pub passed: bool,
}

/// Compares `∫₀¹ |SV|` with the smallest value any polynomial sharing the
/// fitted leading coefficient can reach.
pub fn sv_lower_bound_check(fit: &PolyFit, profile: &SVProfile) -> Result<LowerBoundCheck> {
    let n = fit.coefficients.len();
    let expected = orientation_constant(n)?;
    let lead = fit.leading_coefficient.abs();
    if (lead - expected).abs() > 0.1 * expected {
        return Err(KakeyaError::Orientation { found: fit.leading_coefficient, expected });
    }
    let integral_abs_sv = profile.integral_abs();
    let kappa = lead * monic_l1_minimum(n);
    Ok(LowerBoundCheck { integral_abs_sv, kappa, passed: integral_abs_sv >= 0.95 * kappa })
}

/// Polyline length, or total triangle area for meshes.
pub fn loop_area(lp: &SliceLoop) -> f64 {
    match lp.geometry() {
        LoopGeometry::Polyline(v) => {
            (0..v.len()).map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            }).sum()
        }
        LoopGeometry::Mesh { vertices, triangles } => triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
            })
            .sum(),
    }
}

/// Measure of the `r`-neighbourhood of the loop, by counting cell centres.
///
/// Cells sit on the global lattice `(k + ½)h`, so the count is monotone in `r`.
pub fn neighborhood_measure(lp: &SliceLoop, r: f64, h: f64) -> Result<f64> {
    if !(r > 0.0 && h > 0.0) {
        return Err(KakeyaError::param("r", "radius and spacing must be positive"));
    }
    if h > r / 4.0 {
        return Err(KakeyaError::GridTooCoarse { h, radius: r });
    }
    let d = lp.ambient_dim();
    let (lo, hi) = lp.bbox();
    let k0: Vec<i64> = lo.iter().map(|x| ((x - r) / h).floor() as i64 - 1).collect();
    let ext: Vec<usize> = (0..d).map(|k| (((hi[k] + r) / h).ceil() as i64 + 1 - k0[k]) as usize + 1).collect();
    let total: usize = ext.iter().product();
    if total > 400_000_000 {
        return Err(KakeyaError::param("h", format!("grid of {total} cells is too large")));
    }
    let centre = |k: usize, i: usize| (k0[k] + i as i64) as f64 * h + 0.5 * h;
    let range = |k: usize, a: f64, b: f64| {
        let i0 = (((a - r) / h - 0.5).floor() as i64 - k0[k]).max(0) as usize;
        let i1 = ((((b + r) / h - 0.5).ceil() as i64 - k0[k]).max(0) as usize).min(ext[k] - 1);
        (i0, i1)
    };
    let mut hit = vec![false; total];
    match lp.geometry() {
        LoopGeometry::Polyline(v) => {
            let nv = v.len();
            for s in 0..nv {
                let (a, b) = (v[s], v[(s + 1) % nv]);
                let (x0, x1) = range(0, a[0].min(b[0]), a[0].max(b[0]));
                let (y0, y1) = range(1, a[1].min(b[1]), a[1].max(b[1]));
                for iy in y0..=y1 {
                    for ix in x0..=x1 {
                        let k = iy * ext[0] + ix;
                        if !hit[k] && dist_point_segment_2d([centre(0, ix), centre(1, iy)], a, b) <= r {
                            hit[k] = true;
                        }
                    }
                }
            }
        }
        LoopGeometry::Mesh { vertices, triangles } => {
            for t in triangles {
                let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                let rg: Vec<(usize, usize)> =
                    (0..3).map(|k| range(k, a[k].min(b[k]).min(c[k]), a[k].max(b[k]).max(c[k]))).collect();
                for iz in rg[2].0..=rg[2].1 {
                    for iy in rg[1].0..=rg[1].1 {
                        for ix in rg[0].0..=rg[0].1 {
                            let k = (iz * ext[1] + iy) * ext[0] + ix;
                            let p = [centre(0, ix), centre(1, iy), centre(2, iz)];
                            if !hit[k] && dist_point_triangle(p, a, b, c) <= r {
                                hit[k] = true;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(hit.iter().filter(|&&x| x).count() as f64 * h.powi(d as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsoperimetricCheck {
    pub lhs: f64,
    pub rhs_area: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// `‖wind‖_{L^{(n-1)/(n-2)}}` against the loop's area.
pub fn isoperimetric_check(lp: &SliceLoop, h: f64) -> Result<IsoperimetricCheck> {
    let n = lp.ambient_dim() + 1;
    let threshold = isoperimetric_threshold(n)?;
    let rhs_area = loop_area(lp);
    if lp.is_degenerate() || rhs_area == 0.0 {
        return Ok(IsoperimetricCheck { lhs: 0.0, rhs_area, ratio: 0.0, threshold, passed: true });
    }
    let q = (n - 1) as f64 / (n - 2) as f64;
    let field = WindingField::compute(lp, h, field_method(lp))?;
    let lhs = field.abs_power_sum(q).powf(1.0 / q);
    let ratio = lhs / rhs_area;
    Ok(IsoperimetricCheck { lhs, rhs_area, ratio, threshold, passed: ratio <= threshold })
}
