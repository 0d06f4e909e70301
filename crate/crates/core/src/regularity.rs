//! Regularity estimators: Hölder exponent fits, net Lipschitz constants,
//! Slobodeckij seminorms and the McShane extension.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::{dist, linear_fit};
use crate::maps::{Domain, PositionMap};
use crate::geom::{cross3, norm3};
use crate::sphere::{fibonacci_sphere, SphereMesh};

/// Residual above which a log-log fit is flagged unreliable.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// `None` when the map has zero oscillation at every scale.
    pub exponent: Option<f64>,
    pub constant: f64,
    pub residual: f64,
    pub unreliable: bool,
    pub scales: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub samples: usize,
}

impl HolderEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.exponent.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub theta: f64,
    pub p: f64,
    pub value: f64,
    /// Pairs closer than this chordal distance are excluded.
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub holder: HolderEstimate,
    pub lipschitz_net_constant: Option<f64>,
    pub slobodeckij: Vec<SeminormEstimate>,
}

/// Default fit window for 2^14 samples per circle: 2^-10 .. 2^-4.
pub fn default_scales() -> Vec<f64> {
    dyadic_scales(10, 4)
}

/// Dyadic scales `2^-finest, ..., 2^-coarsest` in ascending order.
pub fn dyadic_scales(finest: i32, coarsest: i32) -> Vec<f64> {
    (coarsest..=finest).rev().map(|k| 2f64.powi(-k)).collect()
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 6 {
        return Err(KakeyaError::param("scales", "need at least 6 dyadic scales"));
    }
    for &s in scales {
        let e = s.log2();
        if !(s > 2f64.powi(-16) && s < 1.0) || (e - e.round()).abs() > 1e-9 {
            return Err(KakeyaError::param("scales", format!("{s} is not a dyadic scale in (2^-16, 1)")));
        }
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KakeyaError::param("scales", "must be strictly increasing"));
    }
    Ok(())
}

/// Hölder fit of `c` restricted to the boundary sphere of its domain
/// (`S^{n-2}` for ball maps, `S^{n-1}` for sphere maps).
///
/// Uses 2^14 samples per circle.
pub fn holder_estimate(map: &PositionMap, scales: &[f64]) -> Result<HolderEstimate> {
    holder_estimate_with(map, scales, 1 << 14)
}

pub fn holder_estimate_with(map: &PositionMap, scales: &[f64], samples: usize) -> Result<HolderEstimate> {
    check_scales(scales)?;
    let step = 2.0 * (PI / samples as f64).sin();
    if scales[0] < 2.0 * step {
        return Err(KakeyaError::MeshTooCoarse {
            spacing: step,
            scale: scales[0],
        });
    }
    let osc = if map.in_dim() == 2 {
        let values: Vec<Vec<f64>> = (0..samples)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / samples as f64;
                map.eval(&[a.cos(), a.sin()])
            })
            .collect();
        circle_oscillation(&values, scales)
    } else {
        // On S^2 the oscillation is taken along great circles through a
        // spread of normals; each circle is sampled as densely as S^1.
        let normals = fibonacci_sphere(GREAT_CIRCLES);
        let per_circle: Vec<Vec<f64>> = normals
            .par_iter()
            .map(|&nrm| {
                let (e1, e2) = tangent_frame(nrm);
                let values: Vec<Vec<f64>> = (0..samples)
                    .map(|i| {
                        let (s, c) = (2.0 * PI * i as f64 / samples as f64).sin_cos();
                        let x = [
                            c * e1[0] + s * e2[0],
                            c * e1[1] + s * e2[1],
                            c * e1[2] + s * e2[2],
                        ];
                        map.eval(&x)
                    })
                    .collect();
                circle_oscillation(&values, scales)
            })
            .collect();
        let mut osc = vec![0.0f64; scales.len()];
        for row in per_circle {
            for (o, b) in osc.iter_mut().zip(row) {
                *o = o.max(b);
            }
        }
        osc
    };
    let effective: Vec<f64> = scales.iter().map(|&h| effective_scale(h, samples)).collect();
    Ok(fit_oscillation(scales, &effective, osc, samples))
}

const GREAT_CIRCLES: usize = 48;

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`.
pub(crate) fn tangent_frame(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross3(n, a);
    let l = norm3(e1);
    let e1 = [e1[0] / l, e1[1] / l, e1[2] / l];
    (e1, cross3(n, e1))
}

/// `osc(h)` for equally spaced samples of a closed curve parametrized by
/// the unit circle: the largest increment over index gaps whose chord is ≤ h.
fn circle_oscillation(values: &[Vec<f64>], scales: &[f64]) -> Vec<f64> {
    let n = values.len();
    let gap = |h: f64| ((h / 2.0).min(1.0).asin() * n as f64 / PI).floor() as usize;
    let jmax = gap(*scales.last().unwrap()).max(1);
    let d: Vec<f64> = (1..=jmax)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| dist(&values[(i + j) % n], &values[i]))
                .fold(0.0, f64::max)
        })
        .collect();
    scales
        .iter()
        .map(|&h| d[..gap(h).min(d.len())].iter().copied().fold(0.0, f64::max))
        .collect()
}

/// Largest chord actually realized by the index gaps admitted at scale `h`.
fn effective_scale(h: f64, samples: usize) -> f64 {
    let j = ((h / 2.0).min(1.0).asin() * samples as f64 / PI).floor();
    2.0 * (j * PI / samples as f64).sin()
}

fn fit_oscillation(scales: &[f64], effective: &[f64], osc: Vec<f64>, samples: usize) -> HolderEstimate {
    let (xs, ys): (Vec<f64>, Vec<f64>) = effective
        .iter()
        .zip(&osc)
        .filter(|(_, &o)| o > 1e-300)
        .map(|(s, o)| (s.ln(), o.ln()))
        .unzip();
    if xs.len() < 2 {
        return HolderEstimate {
            exponent: None,
            constant: 0.0,
            residual: 0.0,
            unreliable: false,
            scales: scales.to_vec(),
            oscillations: osc,
            samples,
        };
    }
    let (slope, intercept, rms) = linear_fit(&xs, &ys);
    HolderEstimate {
        exponent: Some(slope.clamp(0.0, 1.0)),
        constant: intercept.exp(),
        residual: rms,
        unreliable: rms > FIT_RESIDUAL_LIMIT || slope <= 0.0 || xs.len() < scales.len(),
        scales: scales.to_vec(),
        oscillations: osc,
        samples,
    }
}

/// `[f]_{θ,p}` by vertex-pair quadrature on `mesh`, chordal distance,
/// excluding pairs closer than the shortest mesh edge.
pub fn slobodeckij_seminorm(values: &[Vec<f64>], theta: f64, p: f64, mesh: &SphereMesh) -> Result<SeminormEstimate> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(KakeyaError::param("theta", format!("{theta} is outside (0, 1)")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(KakeyaError::param("p", "must be >= 1"));
    }
    if mesh.len() < 64 {
        return Err(KakeyaError::param("mesh", "seminorm quadrature needs at least 64 vertices"));
    }
    if values.len() != mesh.len() {
        return Err(KakeyaError::LengthMismatch {
            expected: mesh.len(),
            actual: values.len(),
        });
    }
    // Nearest neighbours sit exactly at the shortest edge; keep them.
    let cutoff = mesh.min_chord() * (1.0 - 1e-9);
    let expo = theta * p + mesh.dim() as f64;
    let pts: Vec<&[f64]> = mesh.vertices().collect();
    let w = mesh.weights();
    let partial: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in i + 1..pts.len() {
                let d = dist(pts[i], pts[j]);
                if d < cutoff {
                    continue;
                }
                let diff = dist(&values[i], &values[j]);
                if diff == 0.0 {
                    continue;
                }
                acc += w[j] * diff.powf(p) / d.powf(expo);
            }
            2.0 * w[i] * acc
        })
        .collect();
    let total: f64 = partial.iter().sum();
    Ok(SeminormEstimate {
        theta,
        p,
        value: total.powf(1.0 / p),
        cutoff,
    })
}

/// Evaluates a ball-domain map on the boundary mesh and takes its seminorm.
pub fn map_seminorm(map: &PositionMap, theta: f64, p: f64, mesh: &SphereMesh) -> Result<SeminormEstimate> {
    slobodeckij_seminorm(&crate::mollify::boundary_values(map, mesh)?, theta, p, mesh)
}

/// `max |c(v) - c(v')| / |v - v'|` over all pairs of net samples.
pub fn lipschitz_constant_on_net(samples: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(KakeyaError::param("samples", "need at least 2 net points"));
    }
    let rows: Vec<std::result::Result<f64, (usize, usize)>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in i + 1..samples.len() {
                let d = dist(&samples[i].0, &samples[j].0);
                if d == 0.0 {
                    return Err((i, j));
                }
                best = best.max(dist(&samples[i].1, &samples[j].1) / d);
            }
            Ok(best)
        })
        .collect();
    let mut best: f64 = 0.0;
    for r in rows {
        match r {
            Ok(b) => best = best.max(b),
            Err((first, second)) => return Err(KakeyaError::DuplicatePoints { first, second }),
        }
    }
    Ok(best)
}

/// Coordinatewise McShane extension `c_i(x) = min_s c_i(s) + L|x - s|` of
/// ball samples, with `L` the net Lipschitz constant.
pub fn mcshane_extend(samples: &[(Vec<f64>, Vec<f64>)]) -> Result<PositionMap> {
    let Some(first) = samples.first() else {
        return Err(KakeyaError::Empty("net samples"));
    };
    let m = first.0.len();
    if !(2..=3).contains(&m) {
        return Err(KakeyaError::Dimension {
            dim: m + 1,
            context: "net samples must live in B^2 or B^3",
        });
    }
    for (v, c) in samples {
        if v.len() != m || c.len() != m {
            return Err(KakeyaError::LengthMismatch {
                expected: m,
                actual: if v.len() != m { v.len() } else { c.len() },
            });
        }
    }
    let lip = if samples.len() == 1 {
        0.0
    } else {
        lipschitz_constant_on_net(samples)?
    };
    PositionMap::grid_sampled(
        samples.iter().map(|s| s.0.clone()).collect(),
        samples.iter().map(|s| s.1.clone()).collect(),
        lip,
    )
}

/// Hölder fit, optional net Lipschitz constant and seminorms in one report.
pub fn regularity_report(
    map: &PositionMap,
    scales: &[f64],
    net: Option<&[Vec<f64>]>,
    seminorms: &[(f64, f64)],
    mesh: &SphereMesh,
) -> Result<RegularityReport> {
    let holder = holder_estimate(map, scales)?;
    let lipschitz_net_constant = match net {
        Some(points) => {
            let samples: Vec<(Vec<f64>, Vec<f64>)> =
                points.iter().map(|v| (v.clone(), map.eval(v))).collect();
            Some(lipschitz_constant_on_net(&samples)?)
        }
        None => None,
    };
    let slobodeckij = if map.domain() == Domain::Ball {
        seminorms
            .iter()
            .map(|&(theta, p)| map_seminorm(map, theta, p, mesh))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(RegularityReport {
        holder,
        lipschitz_net_constant,
        slobodeckij,
    })
}
