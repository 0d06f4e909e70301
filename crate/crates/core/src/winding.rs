//! Winding numbers of closed slice loops, circle-map degrees and the
//! degree integral.
//!
//! Planar loops are closed polylines; loops in R³ are closed oriented triangle
//! meshes. Counterclockwise (outward) orientation gives positive winding.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::{dist_point_segment_2d, dist_point_triangle, dot3, norm3, sub3};
use crate::sphere::{triangles_closed, SphereMesh};

/// Largest admissible distance between a real winding sum and its integer.
pub const ROUNDING_LIMIT: f64 = 0.1;

/// Boundary tolerance used when the caller has no grid.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LoopGeometry {
    Polyline(Vec<[f64; 2]>),
    Mesh {
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceLoop {
    t: f64,
    geometry: LoopGeometry,
    degenerate: bool,
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(KakeyaError::param("t", format!("{t} is outside [0, 1]")));
    }
    Ok(())
}

impl SliceLoop {
    /// Closed polyline; the edge from the last vertex back to the first is implicit.
    pub fn polyline(t: f64, vertices: Vec<[f64; 2]>) -> Result<Self> {
        check_t(t)?;
        if vertices.len() < 3 {
            return Err(KakeyaError::OpenLoop(format!(
                "a closed polyline needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(KakeyaError::param("vertices", "non-finite coordinate"));
        }
        let p0 = vertices[0];
        let degenerate = vertices.iter().all(|p| p == &p0);
        Ok(SliceLoop {
            t,
            geometry: LoopGeometry::Polyline(vertices),
            degenerate,
        })
    }

    /// Closed oriented triangle mesh in R³.
    pub fn mesh(t: f64, vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        check_t(t)?;
        if triangles.len() < 4 {
            return Err(KakeyaError::OpenLoop("a closed mesh needs at least 4 triangles".into()));
        }
        if triangles.iter().flatten().any(|&i| i >= vertices.len()) {
            return Err(KakeyaError::param("triangles", "vertex index out of range"));
        }
        if !triangles_closed(&triangles) {
            return Err(KakeyaError::OpenLoop(
                "every edge must be shared by two oppositely oriented triangles".into(),
            ));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(KakeyaError::param("vertices", "non-finite coordinate"));
        }
        let p0 = vertices[0];
        let degenerate = vertices.iter().all(|p| p == &p0);
        Ok(SliceLoop {
            t,
            geometry: LoopGeometry::Mesh {
                vertices,
                triangles,
            },
            degenerate,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn geometry(&self) -> &LoopGeometry {
        &self.geometry
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn ambient_dim(&self) -> usize {
        match self.geometry {
            LoopGeometry::Polyline(_) => 2,
            LoopGeometry::Mesh { .. } => 3,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match &self.geometry {
            LoopGeometry::Polyline(p) => p.len(),
            LoopGeometry::Mesh { vertices, .. } => vertices.len(),
        }
    }

    pub fn polyline_vertices(&self) -> Option<&[[f64; 2]]> {
        match &self.geometry {
            LoopGeometry::Polyline(p) => Some(p),
            LoopGeometry::Mesh { .. } => None,
        }
    }

    /// The same loop traversed backwards (inward-oriented for meshes).
    pub fn reversed(&self) -> SliceLoop {
        let geometry = match &self.geometry {
            LoopGeometry::Polyline(p) => LoopGeometry::Polyline(p.iter().rev().copied().collect()),
            LoopGeometry::Mesh {
                vertices,
                triangles,
            } => LoopGeometry::Mesh {
                vertices: vertices.clone(),
                triangles: triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
            },
        };
        SliceLoop {
            geometry,
            ..self.clone()
        }
    }

    pub fn translated(&self, w: &[f64]) -> SliceLoop {
        let geometry = match &self.geometry {
            LoopGeometry::Polyline(p) => {
                LoopGeometry::Polyline(p.iter().map(|q| [q[0] + w[0], q[1] + w[1]]).collect())
            }
            LoopGeometry::Mesh {
                vertices,
                triangles,
            } => LoopGeometry::Mesh {
                vertices: vertices
                    .iter()
                    .map(|q| [q[0] + w[0], q[1] + w[1], q[2] + w[2]])
                    .collect(),
                triangles: triangles.clone(),
            },
        };
        SliceLoop {
            geometry,
            ..self.clone()
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.ambient_dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut visit = |p: &[f64]| {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        };
        match &self.geometry {
            LoopGeometry::Polyline(p) => p.iter().for_each(|q| visit(q)),
            LoopGeometry::Mesh { vertices, .. } => vertices.iter().for_each(|q| visit(q)),
        }
        (lo, hi)
    }

    /// Euclidean distance from `p` to the loop.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        match &self.geometry {
            LoopGeometry::Polyline(v) => {
                let q = [p[0], p[1]];
                (0..v.len())
                    .map(|i| dist_point_segment_2d(q, v[i], v[(i + 1) % v.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
            LoopGeometry::Mesh {
                vertices,
                triangles,
            } => {
                let q = [p[0], p[1], p[2]];
                triangles
                    .iter()
                    .map(|t| dist_point_triangle(q, vertices[t[0]], vertices[t[1]], vertices[t[2]]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn check_boundary(lp: &SliceLoop, p: &[f64], tol: f64) -> Result<()> {
    let d = lp.distance_to(p);
    if d <= tol {
        return Err(KakeyaError::Boundary { distance: d, tolerance: tol });
    }
    Ok(())
}

fn round_winding(total: f64) -> Result<i64> {
    let r = total.round();
    let residual = (total - r).abs();
    if residual >= ROUNDING_LIMIT {
        return Err(KakeyaError::Consistency { residual });
    }
    Ok(r as i64)
}

/// Sum of signed angle increments over 2π, no boundary check.
fn angle_sum(v: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = v.len();
    let mut total = 0.0;
    let mut a = [v[n - 1][0] - p[0], v[n - 1][1] - p[1]];
    for q in v {
        let b = [q[0] - p[0], q[1] - p[1]];
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        a = b;
    }
    total / (2.0 * PI)
}

fn planar(lp: &SliceLoop) -> Result<&[[f64; 2]]> {
    lp.polyline_vertices().ok_or(KakeyaError::Dimension {
        dim: 3,
        context: "planar winding needs a polyline loop",
    })
}

/// Winding number by angle summation. `tol` defaults to [`DEFAULT_TOL`].
pub fn winding_number_2d(lp: &SliceLoop, p: [f64; 2], tol: Option<f64>) -> Result<i64> {
    let v = planar(lp)?;
    check_boundary(lp, &p, tol.unwrap_or(DEFAULT_TOL))?;
    if lp.is_degenerate() {
        return Ok(0);
    }
    round_winding(angle_sum(v, p))
}

const TIE_SLOPES: [f64; 2] = [0.006_180_339_887_498_949, 0.003_141_592_653_589_793];

/// Signed crossing count along the ray `p + s·(1, τ)`, `s > 0`.
///
/// An edge crossing the ray from its right side to its left counts +1. A
/// vertex exactly on the ray is retried with a second slope.
pub fn ray_crossing_oracle(lp: &SliceLoop, p: [f64; 2], tol: Option<f64>) -> Result<i64> {
    let v = planar(lp)?;
    check_boundary(lp, &p, tol.unwrap_or(DEFAULT_TOL))?;
    for tau in TIE_SLOPES {
        if let Some(w) = crossings(v, p, tau) {
            return Ok(w);
        }
    }
    Err(KakeyaError::DegenerateCrossing)
}

fn crossings(v: &[[f64; 2]], p: [f64; 2], tau: f64) -> Option<i64> {
    let side = |q: [f64; 2]| (q[1] - p[1]) - tau * (q[0] - p[0]);
    let mut w = 0;
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (fa, fb) = (side(a), side(b));
        if fa == 0.0 || fb == 0.0 {
            return None;
        }
        if (fa < 0.0) == (fb < 0.0) {
            continue;
        }
        let lam = fa / (fa - fb);
        let q = [a[0] + lam * (b[0] - a[0]), a[1] + lam * (b[1] - a[1])];
        let s = (q[0] - p[0]) + tau * (q[1] - p[1]);
        if s > 0.0 {
            w += if fa < 0.0 { 1 } else { -1 };
        }
    }
    Some(w)
}

/// Signed solid angle of triangle `abc` seen from the origin.
#[inline]
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
    let num = crate::geom::det3(a, b, c);
    let den = la * lb * lc + dot3(a, b) * lc + dot3(a, c) * lb + dot3(b, c) * la;
    2.0 * num.atan2(den)
}

fn solid_angle_sum(vertices: &[[f64; 3]], triangles: &[[usize; 3]], p: [f64; 3]) -> f64 {
    triangles
        .iter()
        .map(|t| {
            solid_angle(
                sub3(vertices[t[0]], p),
                sub3(vertices[t[1]], p),
                sub3(vertices[t[2]], p),
            )
        })
        .sum::<f64>()
        / (4.0 * PI)
}

/// Generalized winding number of a closed triangle mesh.
pub fn generalized_winding_3d(lp: &SliceLoop, p: [f64; 3], tol: Option<f64>) -> Result<i64> {
    let LoopGeometry::Mesh {
        vertices,
        triangles,
    } = lp.geometry()
    else {
        return Err(KakeyaError::Dimension {
            dim: 2,
            context: "solid-angle winding needs a triangle mesh",
        });
    };
    check_boundary(lp, &p, tol.unwrap_or(DEFAULT_TOL))?;
    if lp.is_degenerate() {
        return Ok(0);
    }
    round_winding(solid_angle_sum(vertices, triangles, p))
}

/// Degree of `f: S¹ → S¹` from samples taken in mesh order.
pub fn degree_circle_map(samples: &[[f64; 2]]) -> Result<i64> {
    if samples.len() < 3 {
        return Err(KakeyaError::param("samples", "need at least 3 samples"));
    }
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (samples[i], samples[(i + 1) % n]);
        let gap = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        if gap.abs() >= PI / 2.0 {
            return Err(KakeyaError::UnderResolved { gap: gap.abs() });
        }
        total += gap;
    }
    round_winding(total / (2.0 * PI))
}

/// `∬ 1{|f(y)-f(z)| > α₀} / |y-z|² dy dz` over the circle mesh.
pub fn nguyen_degree_bound(samples: &[[f64; 2]], alpha0: f64, mesh: &SphereMesh) -> Result<f64> {
    if mesh.dim() != 1 {
        return Err(KakeyaError::Dimension {
            dim: mesh.dim(),
            context: "the degree integral is implemented on S^1",
        });
    }
    if !(alpha0 > 0.0 && alpha0 < 3f64.sqrt()) {
        return Err(KakeyaError::param("alpha0", format!("{alpha0} is outside (0, sqrt 3)")));
    }
    if samples.len() != mesh.len() {
        return Err(KakeyaError::LengthMismatch {
            expected: mesh.len(),
            actual: samples.len(),
        });
    }
    let pts: Vec<&[f64]> = mesh.vertices().collect();
    let w = mesh.weights();
    let a2 = alpha0 * alpha0;
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in i + 1..pts.len() {
                let (fi, fj) = (samples[i], samples[j]);
                let df = (fi[0] - fj[0]).powi(2) + (fi[1] - fj[1]).powi(2);
                if df > a2 {
                    let d2 = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
                    acc += w[j] / d2;
                }
            }
            2.0 * w[i] * acc
        })
        .collect();
    Ok(rows.iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindingMethod {
    /// Angle summation per cell (planar reference).
    AngleSum,
    /// Tilted-ray crossing count per cell (independent planar oracle).
    RayCrossing,
    /// Row-wise crossing sweep, O(cells + edges·rows); the fast planar path.
    Scanline,
    /// Solid-angle summation per cell (meshes in R³).
    SolidAngle,
}

/// Regular grid of cubes of side `h`; cell `i` has centre `origin + (i + ½)h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub h: f64,
    pub extents: Vec<usize>,
}

impl GridSpec {
    /// Joint bounding box of the loops, inflated by `max(2h, 0.1)`.
    pub fn covering(loops: &[&SliceLoop], h: f64) -> Result<GridSpec> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(KakeyaError::param("h", "grid spacing must be positive"));
        }
        let Some(first) = loops.first() else {
            return Err(KakeyaError::Empty("loops"));
        };
        let (mut lo, mut hi) = first.bbox();
        for lp in &loops[1..] {
            if lp.ambient_dim() != lo.len() {
                return Err(KakeyaError::Dimension { dim: lp.ambient_dim(), context: "loops of mixed dimension" });
            }
            let (a, b) = lp.bbox();
            for k in 0..lo.len() {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
        }
        let pad = (2.0 * h).max(0.1);
        let grid = GridSpec {
            origin: lo.iter().map(|x| x - pad).collect(),
            h,
            extents: lo.iter().zip(&hi).map(|(a, b)| ((b - a + 2.0 * pad) / h).ceil() as usize).collect(),
        };
        if grid.len() > 400_000_000 {
            return Err(KakeyaError::param("h", format!("grid of {} cells is too large", grid.len())));
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.extents.len() as i32)
    }
}

/// Integer winding numbers at the centres of a regular grid around a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct WindingField {
    pub origin: Vec<f64>,
    pub h: f64,
    pub extents: Vec<usize>,
    values: Vec<i32>,
    masked: Vec<bool>,
}

impl WindingField {
    /// Grid over the loop's bounding box inflated by `max(2h, 0.1)`; cells
    /// within `h/2` of the loop are masked.
    pub fn compute(lp: &SliceLoop, h: f64, method: WindingMethod) -> Result<WindingField> {
        WindingField::compute_on(lp, &GridSpec::covering(&[lp], h)?, method)
    }

    /// Winding numbers of `lp` at the cell centres of a caller-chosen grid.
    pub fn compute_on(lp: &SliceLoop, grid: &GridSpec, method: WindingMethod) -> Result<WindingField> {
        let dim = lp.ambient_dim();
        let planar_method = method != WindingMethod::SolidAngle;
        if planar_method != (dim == 2) || grid.extents.len() != dim {
            return Err(KakeyaError::Dimension {
                dim,
                context: "winding method or grid does not match the loop dimension",
            });
        }
        let total = grid.len();
        let mut field = WindingField {
            origin: grid.origin.clone(),
            h: grid.h,
            extents: grid.extents.clone(),
            values: vec![0; total],
            masked: vec![false; total],
        };
        field.masked = field.near_mask(lp, grid.h / 2.0);
        if lp.is_degenerate() {
            return Ok(field);
        }
        match (method, lp.geometry()) {
            (WindingMethod::Scanline, LoopGeometry::Polyline(v)) => field.scanline(v),
            (WindingMethod::AngleSum, LoopGeometry::Polyline(v)) => {
                field.per_cell(|c| round_winding(angle_sum(v, [c[0], c[1]])))?
            }
            (WindingMethod::RayCrossing, LoopGeometry::Polyline(v)) => field.per_cell(|c| {
                let p = [c[0], c[1]];
                TIE_SLOPES
                    .iter()
                    .find_map(|&tau| crossings(v, p, tau))
                    .ok_or(KakeyaError::DegenerateCrossing)
            })?,
            (
                WindingMethod::SolidAngle,
                LoopGeometry::Mesh {
                    vertices,
                    triangles,
                },
            ) => field.per_cell(|c| round_winding(solid_angle_sum(vertices, triangles, [c[0], c[1], c[2]])))?,
            _ => unreachable!("dimension checked above"),
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn index_of(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for d in (0..self.dim()).rev() {
            k = k * self.extents[d] + idx[d];
        }
        k
    }

    fn unravel(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (d, e) in self.extents.iter().enumerate() {
            idx[d] = k % e;
            k /= e;
        }
        idx
    }

    pub fn cell_center(&self, k: usize) -> Vec<f64> {
        self.unravel(k)
            .iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + (i as f64 + 0.5) * self.h)
            .collect()
    }

    /// Winding at cell `k`, `None` when masked.
    pub fn value(&self, k: usize) -> Option<i32> {
        (!self.masked[k]).then_some(self.values[k])
    }

    pub fn is_masked(&self, k: usize) -> bool {
        self.masked[k]
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// `Σ wind · h^d` over unmasked cells.
    pub fn integral(&self) -> f64 {
        self.unmasked().map(|(_, w)| w as f64).sum::<f64>() * self.cell_volume()
    }

    /// `Σ |wind|^q · h^d` over unmasked cells.
    pub fn abs_power_sum(&self, q: f64) -> f64 {
        self.unmasked().map(|(_, w)| (w.abs() as f64).powf(q)).sum::<f64>() * self.cell_volume()
    }

    pub fn unmasked(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.values
            .iter()
            .zip(&self.masked)
            .enumerate()
            .filter(|(_, (_, &m))| !m)
            .map(|(k, (&w, _))| (k, w))
    }

    /// CSV with header `x,y[,z],wind,masked`; masked cells leave `wind` empty.
    pub fn to_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut out = String::new();
        out.push_str(&axes[..self.dim()].join(","));
        out.push_str(",wind,masked\n");
        for k in 0..self.len() {
            for c in self.cell_center(k) {
                out.push_str(&format!("{c},"));
            }
            match self.value(k) {
                Some(w) => out.push_str(&format!("{w},0\n")),
                None => out.push_str(",1\n"),
            }
        }
        out
    }

    /// Cell index range along axis `d` whose centres may lie within `r` of `[a, b]`.
    fn axis_range(&self, d: usize, a: f64, b: f64, r: f64) -> (usize, usize) {
        let lo = ((a.min(b) - r - self.origin[d]) / self.h - 0.5).floor().max(0.0) as usize;
        let hi = ((a.max(b) + r - self.origin[d]) / self.h - 0.5).ceil();
        let hi = (hi.max(0.0) as usize).min(self.extents[d].saturating_sub(1));
        (lo, hi)
    }

    /// Cells whose centre lies within `r` of the loop.
    pub fn near_mask(&self, lp: &SliceLoop, r: f64) -> Vec<bool> {
        let mut near = vec![false; self.len()];
        match lp.geometry() {
            LoopGeometry::Polyline(v) => {
                let n = v.len();
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let (x0, x1) = self.axis_range(0, a[0], b[0], r);
                    let (y0, y1) = self.axis_range(1, a[1], b[1], r);
                    for iy in y0..=y1 {
                        let cy = self.origin[1] + (iy as f64 + 0.5) * self.h;
                        for ix in x0..=x1 {
                            let cx = self.origin[0] + (ix as f64 + 0.5) * self.h;
                            if dist_point_segment_2d([cx, cy], a, b) <= r {
                                near[iy * self.extents[0] + ix] = true;
                            }
                        }
                    }
                }
            }
            LoopGeometry::Mesh {
                vertices,
                triangles,
            } => {
                for t in triangles {
                    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                    let mut rng = [(0, 0); 3];
                    for (d, slot) in rng.iter_mut().enumerate() {
                        let lo = a[d].min(b[d]).min(c[d]);
                        let hi = a[d].max(b[d]).max(c[d]);
                        *slot = self.axis_range(d, lo, hi, r);
                    }
                    for iz in rng[2].0..=rng[2].1 {
                        for iy in rng[1].0..=rng[1].1 {
                            for ix in rng[0].0..=rng[0].1 {
                                let p = [
                                    self.origin[0] + (ix as f64 + 0.5) * self.h,
                                    self.origin[1] + (iy as f64 + 0.5) * self.h,
                                    self.origin[2] + (iz as f64 + 0.5) * self.h,
                                ];
                                if dist_point_triangle(p, a, b, c) <= r {
                                    near[self.index_of(&[ix, iy, iz])] = true;
                                }
                            }
                        }
                    }
                }
            }
        }
        near
    }

    fn per_cell<F>(&mut self, f: F) -> Result<()>
    where
        F: Fn(&[f64]) -> Result<i64> + Sync,
    {
        let computed: Vec<Result<i32>> = (0..self.len())
            .into_par_iter()
            .map(|k| {
                if self.masked[k] {
                    Ok(0)
                } else {
                    f(&self.cell_center(k)).map(|w| w as i32)
                }
            })
            .collect();
        for (slot, r) in self.values.iter_mut().zip(computed) {
            *slot = r?;
        }
        Ok(())
    }

    fn scanline(&mut self, v: &[[f64; 2]]) {
        let (nx, ny) = (self.extents[0], self.extents[1]);
        let n = v.len();
        let rows: Vec<Vec<i32>> = (0..ny)
            .into_par_iter()
            .map(|iy| {
                let y = self.origin[1] + (iy as f64 + 0.5) * self.h;
                // Half-open rule: an edge counts when y ∈ [min y, max y).
                let mut hits: Vec<(f64, i32)> = Vec::new();
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let up = a[1] <= y && y < b[1];
                    let down = b[1] <= y && y < a[1];
                    if up || down {
                        let x = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        hits.push((x, if up { 1 } else { -1 }));
                    }
                }
                hits.sort_by(|p, q| p.0.total_cmp(&q.0));
                let mut row = vec![0i32; nx];
                // Winding at x counts crossings strictly to its right.
                let mut right: i32 = hits.iter().map(|h| h.1).sum();
                let mut next = 0;
                for (ix, slot) in row.iter_mut().enumerate() {
                    let x = self.origin[0] + (ix as f64 + 0.5) * self.h;
                    while next < hits.len() && hits[next].0 <= x {
                        right -= hits[next].1;
                        next += 1;
                    }
                    *slot = right;
                }
                row
            })
            .collect();
        for (iy, row) in rows.into_iter().enumerate() {
            for (ix, w) in row.into_iter().enumerate() {
                let k = iy * nx + ix;
                self.values[k] = if self.masked[k] { 0 } else { w };
            }
        }
    }
}
