//! Passing from mollified slices back to the original ones: the
//! normalised-difference inequality, collar agreement of winding numbers,
//! and the collar/exterior split of the swept winding integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::{dist, norm};
use crate::maps::PositionMap;
use crate::regularity::{default_scales, holder_estimate};
use crate::slice::{loop_area, signed_volume_stokes, BoundaryTrace};
use crate::sphere::SphereMesh;
use crate::winding::{GridSpec, SliceLoop, WindingField, WindingMethod};

/// Violations are counted beyond this slack.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Successive Cauchy gaps must shrink by this factor.
pub const GAP_RATIO: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangleCheck {
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen; negative when every sample holds strictly.
    pub max_excess: f64,
}

/// Random triples `(x, a, b)` in `[-1, 1]^dim` ordered so `|a − x| ≤ |b − x|`.
pub fn random_triples(dim: usize, count: usize, seed: u64) -> Vec<[Vec<f64>; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    (0..count)
        .map(|_| {
            let x = point(&mut rng);
            let mut a = point(&mut rng);
            let mut b = point(&mut rng);
            if dist(&a, &x) > dist(&b, &x) {
                std::mem::swap(&mut a, &mut b);
            }
            [x, a, b]
        })
        .collect()
}

/// Both sides of `|Â − B̂| ≤ |Â − B/|A|| + |B̂ − A/|B||` with `A = a − x`, `B = b − x`.
pub fn normalized_difference(x: &[f64], a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let av: Vec<f64> = a.iter().zip(x).map(|(p, q)| p - q).collect();
    let bv: Vec<f64> = b.iter().zip(x).map(|(p, q)| p - q).collect();
    let (na, nb) = (norm(&av), norm(&bv));
    if na == 0.0 || nb == 0.0 {
        return Err(KakeyaError::param("triples", "a and b must differ from x"));
    }
    if na > nb {
        return Err(KakeyaError::param("triples", "need |a - x| <= |b - x|"));
    }
    let scaled = |u: &[f64], s: f64| -> Vec<f64> { u.iter().map(|p| p / s).collect() };
    let lhs = dist(&scaled(&av, na), &scaled(&bv, nb));
    let rhs = dist(&scaled(&av, na), &scaled(&bv, na)) + dist(&scaled(&bv, nb), &scaled(&av, nb));
    Ok((lhs, rhs))
}

pub fn triangle_inequality_check(triples: &[[Vec<f64>; 3]]) -> Result<TriangleCheck> {
    let excess: Vec<f64> = triples
        .par_iter()
        .map(|[x, a, b]| normalized_difference(x, a, b).map(|(l, r)| l - r))
        .collect::<Result<_>>()?;
    Ok(TriangleCheck {
        samples: triples.len(),
        violations: excess.iter().filter(|&&e| e > TRIANGLE_SLACK).count(),
        max_excess: excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Collar exponent `δ'` and constant `H` from the measured Hölder fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Collar {
    pub delta_prime: f64,
    pub constant: f64,
}

impl Collar {
    /// `δ'` is the measured exponent and `H` twice the fitted constant; a
    /// constant map gets an empty collar.
    pub fn measured(c: &PositionMap) -> Result<Collar> {
        let est = holder_estimate(c, &default_scales())?;
        Ok(match est.exponent {
            Some(a) if a > 0.0 => Collar { delta_prime: a, constant: 2.0 * est.constant },
            _ => Collar { delta_prime: 1.0, constant: 0.0 },
        })
    }

    pub fn width(&self, epsilon: f64) -> f64 {
        self.constant * epsilon.powf(self.delta_prime)
    }
}

fn method_for(lp: &SliceLoop) -> WindingMethod {
    if lp.ambient_dim() == 2 {
        WindingMethod::Scanline
    } else {
        WindingMethod::SolidAngle
    }
}

/// Per-slice comparison of `wind_{t,ε}` with `wind_t` on one grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceComparison {
    pub t: f64,
    pub epsilon: f64,
    pub collar_width: f64,
    /// Cells unmasked for both loops and outside the collar.
    pub compared: usize,
    pub collar_cells: usize,
    pub masked_cells: usize,
    pub mismatches: usize,
    /// Fraction of cells unmasked for both loops where the windings agree.
    pub agreement_fraction: f64,
    #[serde(skip)]
    pub(crate) sums: SliceSums,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct SliceSums {
    total: f64,
    collar_part: f64,
    collar_measure: f64,
    abs_total: f64,
    stokes: f64,
    area: f64,
    agree: usize,
    both_unmasked: usize,
}

fn compare_slice(raw: &SliceLoop, moll: &SliceLoop, epsilon: f64, width: f64, h: f64) -> Result<SliceComparison> {
    let grid = GridSpec::covering(&[raw, moll], h)?;
    let method = method_for(raw);
    let w0 = WindingField::compute_on(raw, &grid, method)?;
    let w1 = WindingField::compute_on(moll, &grid, method)?;
    let collar = if width > 0.0 { w0.near_mask(raw, width) } else { vec![false; grid.len()] };
    let vol = grid.cell_volume();
    let mut out = SliceComparison {
        t: raw.t(),
        epsilon,
        collar_width: width,
        compared: 0,
        collar_cells: 0,
        masked_cells: 0,
        mismatches: 0,
        agreement_fraction: 1.0,
        sums: SliceSums::default(),
    };
    let s = &mut out.sums;
    for (k, &in_collar) in collar.iter().enumerate().take(grid.len()) {
        if in_collar {
            out.collar_cells += 1;
            s.collar_measure += vol;
        }
        let Some(b) = w1.value(k) else {
            out.masked_cells += 1;
            continue;
        };
        s.total += b as f64 * vol;
        s.abs_total += b.abs() as f64 * vol;
        if in_collar {
            s.collar_part += b as f64 * vol;
        }
        if let Some(a) = w0.value(k) {
            s.both_unmasked += 1;
            if a == b {
                s.agree += 1;
            }
            if !collar[k] {
                out.compared += 1;
                if a != b {
                    out.mismatches += 1;
                }
            }
        }
    }
    s.stokes = signed_volume_stokes(moll);
    s.area = loop_area(moll);
    if s.both_unmasked > 0 {
        out.agreement_fraction = s.agree as f64 / s.both_unmasked as f64;
    }
    Ok(out)
}

/// Compares windings of `γ_t` and `γ_{t,ε}` outside the `H·ε^{δ'}` collar of `γ_t`.
///
/// `collar` defaults to [`Collar::measured`].
pub fn winding_agreement(
    c: &PositionMap,
    t: f64,
    epsilon: f64,
    collar: Option<Collar>,
    h: f64,
    mesh: &SphereMesh,
) -> Result<SliceComparison> {
    let collar = match collar {
        Some(k) => k,
        None => Collar::measured(c)?,
    };
    let raw = BoundaryTrace::new(c, mesh, None)?.loop_at(t)?;
    let moll = BoundaryTrace::new(c, mesh, Some(epsilon))?.loop_at(t)?;
    compare_slice(&raw, &moll, epsilon, collar.width(epsilon), h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub delta_prime: f64,
    pub collar_constant: f64,
    pub collar_widths: Vec<f64>,
    /// `∫₀¹ ∫ wind_{t,ε}` from the grid fields.
    pub total_integral: Vec<f64>,
    /// The same totals from Stokes on the mollified loops.
    pub stokes_integral: Vec<f64>,
    /// Collar part of the total.
    pub i1: Vec<f64>,
    /// Exterior part of the total.
    pub i2: Vec<f64>,
    /// `∫₀¹ |collar_t| dt`.
    pub collar_measure: Vec<f64>,
    pub max_loop_area: Vec<f64>,
    pub calibration_constant: f64,
    /// `C · collar_measure^{1/(n-1)} · max_loop_area`.
    pub i1_bound: Vec<f64>,
    pub i1_bound_holds: bool,
    pub agreement_region_fraction: Vec<f64>,
    pub agreement_monotone: bool,
    pub mismatches_outside_collar: Vec<usize>,
    /// Largest per-slice `∫ |wind_{t,ε}|`.
    pub wind_l1_max: Vec<f64>,
    pub gaps: Vec<f64>,
    pub gap_ratios: Vec<f64>,
    /// Largest `|grid total − Stokes total|`; gaps below twice this are resolution noise.
    pub noise_floor: f64,
    pub cauchy: bool,
}

fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    ts.windows(2).zip(ys.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

/// Splits `∫₀¹ ∫ wind_{t,ε}` into collar and exterior parts for each ε and
/// tests the totals for Cauchy behaviour.
pub fn convergence_split(
    c: &PositionMap,
    epsilons: &[f64],
    t_grid: &[f64],
    h: f64,
    mesh: &SphereMesh,
) -> Result<ConvergenceReport> {
    if epsilons.len() < 3 {
        return Err(KakeyaError::param("epsilons", "need at least 3 scales"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(KakeyaError::param("epsilons", "scales must be strictly descending"));
    }
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(KakeyaError::param("t_grid", "need increasing heights in [0, 1]"));
    }
    let collar = Collar::measured(c)?;
    let raw = BoundaryTrace::new(c, mesh, None)?;
    let raw_loops: Vec<SliceLoop> = t_grid.iter().map(|&t| raw.loop_at(t)).collect::<Result<_>>()?;
    let n = c.n();

    let mut rows: Vec<Vec<SliceComparison>> = Vec::new();
    for &eps in epsilons {
        let trace = BoundaryTrace::new(c, mesh, Some(eps))?;
        let width = collar.width(eps);
        let row = raw_loops
            .par_iter()
            .map(|lp| compare_slice(lp, &trace.loop_at(lp.t())?, eps, width, h))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    let integrate = |row: &[SliceComparison], f: fn(&SliceSums) -> f64| {
        trapezoid(t_grid, &row.iter().map(|s| f(&s.sums)).collect::<Vec<_>>())
    };
    let total: Vec<f64> = rows.iter().map(|r| integrate(r, |s| s.total)).collect();
    let stokes: Vec<f64> = rows.iter().map(|r| integrate(r, |s| s.stokes)).collect();
    let i1: Vec<f64> = rows.iter().map(|r| integrate(r, |s| s.collar_part)).collect();
    let collar_measure: Vec<f64> = rows.iter().map(|r| integrate(r, |s| s.collar_measure)).collect();
    let max_area: Vec<f64> =
        rows.iter().map(|r| r.iter().map(|s| s.sums.area).fold(0.0, f64::max)).collect();
    let wind_l1_max: Vec<f64> =
        rows.iter().map(|r| r.iter().map(|s| s.sums.abs_total).fold(0.0, f64::max)).collect();
    let agreement: Vec<f64> = rows
        .iter()
        .map(|r| {
            let (a, b) = r.iter().fold((0, 0), |(a, b), s| (a + s.sums.agree, b + s.sums.both_unmasked));
            if b == 0 { 1.0 } else { a as f64 / b as f64 }
        })
        .collect();

    let p = 1.0 / (n - 1) as f64;
    let scale: Vec<f64> = collar_measure.iter().zip(&max_area).map(|(m, a)| m.powf(p) * a).collect();
    let calibration_constant = if scale[0] > 0.0 { i1[0].abs() / scale[0] } else { 0.0 };
    let i1_bound: Vec<f64> = scale.iter().map(|s| calibration_constant * s).collect();
    let i1_bound_holds = i1.iter().zip(&i1_bound).all(|(v, b)| v.abs() <= b * (1.0 + 1e-9) + 1e-12);

    let gaps: Vec<f64> = total.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let gap_ratios: Vec<f64> = gaps.windows(2).map(|g| g[0] / g[1]).collect();
    let noise_floor = total.iter().zip(&stokes).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let cauchy = gaps.windows(2).all(|g| g[0] >= GAP_RATIO * g[1] || g[1] <= 2.0 * noise_floor);

    Ok(ConvergenceReport {
        epsilons: epsilons.to_vec(),
        delta_prime: collar.delta_prime,
        collar_constant: collar.constant,
        collar_widths: epsilons.iter().map(|&e| collar.width(e)).collect(),
        i2: total.iter().zip(&i1).map(|(t, a)| t - a).collect(),
        total_integral: total,
        stokes_integral: stokes,
        i1,
        collar_measure,
        max_loop_area: max_area,
        calibration_constant,
        i1_bound,
        i1_bound_holds,
        agreement_monotone: agreement.windows(2).all(|w| w[1] >= w[0] - 0.02),
        agreement_region_fraction: agreement,
        mismatches_outside_collar: rows.iter().map(|r| r.iter().map(|s| s.mismatches).sum()).collect(),
        wind_l1_max,
        gaps,
        gap_ratios,
        noise_floor,
        cauchy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Domain;
    use crate::slice::uniform_t_grid;
    use crate::sphere::sample_sphere;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn triangle_fuzz() {
        for dim in [2, 3] {
            let r = triangle_inequality_check(&random_triples(dim, 1_000_000, dim as u64)).unwrap();
            assert_eq!(r.violations, 0);
            assert_eq!(r.samples, 1_000_000);
        }
    }

    #[test]
    fn triangle_degenerate_cases() {
        let x = vec![0.0, 0.0];
        let (lhs, rhs) = normalized_difference(&x, &[1.0, 1.0], &[3.0, 3.0]).unwrap();
        assert!(lhs.abs() <= 1e-12);
        assert!(rhs > 0.0);
        let (lhs, rhs) = normalized_difference(&x, &[0.4, -0.2], &[0.4, -0.2]).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
        assert!(triangle_inequality_check(&[[x.clone(), x.clone(), vec![1.0, 0.0]]]).is_err());
        assert!(triangle_inequality_check(&[[x, vec![2.0, 0.0], vec![1.0, 0.0]]]).is_err());
    }

    #[test]
    fn zero_map_agrees_everywhere() {
        let mesh = sample_sphere(1, 1024).unwrap();
        let z = PositionMap::zero(3, Domain::Ball).unwrap();
        let a = winding_agreement(&z, 0.6, 0.1, None, 0.01, &mesh).unwrap();
        assert_eq!(a.mismatches, 0);
        assert_eq!(a.collar_cells, 0);
        assert_eq!(a.agreement_fraction, 1.0);
    }

    #[test]
    fn lacunary_agrees_outside_collar() {
        let mesh = sample_sphere(1, 4096).unwrap();
        let c = PositionMap::lacunary(3, Domain::Ball, 0.8, 12, 0).unwrap();
        let a = winding_agreement(&c, 0.7, 0.05, None, 0.01, &mesh).unwrap();
        assert_eq!(a.mismatches, 0);
        assert!(a.collar_cells > 0);
        assert!(a.compared > 0);
    }

    #[test]
    fn zero_and_radial_totals() {
        let mesh = sample_sphere(1, 2048).unwrap();
        let grid = uniform_t_grid(33);
        let z = PositionMap::zero(3, Domain::Ball).unwrap();
        let r = convergence_split(&z, &[0.1, 0.05, 0.025], &grid, 0.005, &mesh).unwrap();
        assert!(r.i1.iter().all(|&v| v == 0.0));
        assert!(r.total_integral.windows(2).all(|w| w[0] == w[1]));
        assert!((r.total_integral[0] - PI / 3.0).abs() < 0.01);
        assert!(r.cauchy);
        let rad = PositionMap::radial(3, Domain::Ball, 0.5).unwrap();
        let r = convergence_split(&rad, &[0.1, 0.05, 0.025], &grid, 0.005, &mesh).unwrap();
        for v in &r.stokes_integral {
            assert!((v - 13.0 * PI / 12.0).abs() < 2e-3, "{v}");
        }
        assert!(r.cauchy);
        assert!(convergence_split(&rad, &[0.05, 0.1, 0.025], &grid, 0.005, &mesh).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn no_mismatch_outside_collar(seed in 0u64..100, ti in 0usize..3, ei in 0usize..2) {
            let mesh = sample_sphere(1, 2048).unwrap();
            let c = PositionMap::lacunary(3, Domain::Ball, 0.6, 12, seed).unwrap();
            let t = [0.25, 0.5, 0.75][ti];
            let eps = [0.1, 0.05][ei];
            let a = winding_agreement(&c, t, eps, None, 0.01, &mesh).unwrap();
            prop_assert_eq!(a.mismatches, 0);
        }
    }
}
