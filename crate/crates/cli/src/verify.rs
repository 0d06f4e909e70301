//! The `core` invariant suite: quick checks against closed-form answers.
//! `--n 4` runs the subset that exists in dimension four.

use std::f64::consts::PI;

use kakeya_core::convergence::{random_triples, triangle_inequality_check};
use kakeya_core::maps::{Domain, PositionMap};
use kakeya_core::measure::{delta_net, line_kakeya_cover, rasterize_image_measure};
use kakeya_core::mollify::mollifier_kernel;
use kakeya_core::slice::{
    fit_sv_polynomial, isoperimetric_check, orientation_constant, signed_volume_grid, signed_volume_stokes,
    slice_loop, sv_lower_bound_check, sweep_signed_volume, uniform_t_grid, SvMethod,
};
use kakeya_core::sphere::sample_sphere;
use kakeya_core::winding::{
    degree_circle_map, generalized_winding_3d, nguyen_degree_bound, ray_crossing_oracle, winding_number_2d,
    SliceLoop, WindingField, WindingMethod,
};
use kakeya_core::Result;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::VerifyArgs;
use crate::{CliError, CommandResult};

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: Value,
}

type CheckFn = fn(u64) -> Result<(bool, Value)>;

fn run(name: &'static str, seed: u64, f: CheckFn) -> Check {
    match f(seed) {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: json!({ "error": e.to_string() }) },
    }
}

pub fn run_suite(a: &VerifyArgs) -> std::result::Result<CommandResult, CliError> {
    let checks: &[(&'static str, CheckFn)] = match a.common.n {
        3 => &[
            ("circle_measure", circle_measure),
            ("circle_winding", circle_winding),
            ("winding_methods_agree", winding_methods_agree),
            ("signed_volume_identity", sv_identity_3),
            ("sv_lower_bound", sv_lower_bound),
            ("stokes_matches_grid", stokes_matches_grid),
            ("isoperimetric_circle", isoperimetric_3),
            ("mollifier_unit_mass", mollifier_mass),
            ("circle_map_degree", circle_map_degree),
            ("degree_bound_constant", degree_bound_constant),
            ("triangle_inequality", triangle_3),
            ("line_kakeya_zero_map", line_kakeya_3),
            ("cone_measure", cone_measure),
            ("delta_net_separation", net_separation),
        ],
        _ => &[
            ("sphere_measure", sphere_measure),
            ("solid_angle_winding", solid_angle_winding),
            ("signed_volume_identity", sv_identity_4),
            ("stokes_matches_grid", stokes_matches_grid_4),
            ("isoperimetric_sphere", isoperimetric_4),
            ("triangle_inequality", triangle_4),
            ("line_kakeya_zero_map", line_kakeya_4),
        ],
    };
    let results: Vec<Check> = checks.iter().map(|&(name, f)| run(name, a.common.seed, f)).collect();
    let failed = results.iter().filter(|c| !c.passed).count();
    Ok(CommandResult {
        results: json!({
            "suite": "core",
            "n": a.common.n,
            "total": results.len(),
            "passed": results.len() - failed,
            "failed": failed,
            "all_passed": failed == 0,
            "checks": results,
        }),
        report_suffix: ".json",
    })
}

fn polygon(k: usize, r: f64, turns: f64) -> Result<SliceLoop> {
    let v = (0..k)
        .map(|i| {
            let a = 2.0 * PI * turns * i as f64 / k as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    SliceLoop::polyline(0.5, v)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn circle_measure(_: u64) -> Result<(bool, Value)> {
    let m = sample_sphere(1, 1024)?.total_measure();
    Ok((rel(m, 2.0 * PI) < 1e-9, json!({ "measure": m })))
}

fn sphere_measure(_: u64) -> Result<(bool, Value)> {
    let mesh = sample_sphere(2, 642)?;
    let m = mesh.total_measure();
    Ok((mesh.is_closed() && rel(m, 4.0 * PI) < 1e-2, json!({ "measure": m, "closed": mesh.is_closed() })))
}

fn circle_winding(_: u64) -> Result<(bool, Value)> {
    let once = polygon(256, 1.0, 1.0)?;
    let twice = polygon(256, 1.0, 2.0)?;
    let w = [
        winding_number_2d(&once, [0.1, 0.2], None)?,
        ray_crossing_oracle(&once, [0.1, 0.2], None)?,
        winding_number_2d(&once, [2.0, 0.0], None)?,
        winding_number_2d(&twice, [0.0, 0.0], None)?,
    ];
    Ok((w == [1, 1, 0, 2], json!({ "windings": w })))
}

fn winding_methods_agree(seed: u64) -> Result<(bool, Value)> {
    let mesh = sample_sphere(1, 512)?;
    let mut mismatches = 0usize;
    let mut compared = 0usize;
    for k in 0..8 {
        let c = PositionMap::lacunary(3, Domain::Ball, 0.7, 8, seed.wrapping_add(k))?;
        let lp = slice_loop(&c, 0.3 + 0.05 * k as f64, &mesh, Some(0.05))?;
        let a = WindingField::compute(&lp, 0.05, WindingMethod::AngleSum)?;
        let r = WindingField::compute(&lp, 0.05, WindingMethod::RayCrossing)?;
        let s = WindingField::compute(&lp, 0.05, WindingMethod::Scanline)?;
        for i in 0..a.len() {
            if let (Some(x), Some(y), Some(z)) = (a.value(i), r.value(i), s.value(i)) {
                compared += 1;
                mismatches += usize::from(x != y || x != z);
            }
        }
    }
    Ok((mismatches == 0 && compared > 0, json!({ "compared": compared, "mismatches": mismatches })))
}

fn sv_fit(n: usize, mesh_res: usize, steps: usize) -> Result<(Vec<f64>, f64)> {
    let c = PositionMap::zero(n, Domain::Ball)?;
    let mesh = sample_sphere(n - 2, mesh_res)?;
    let profile = sweep_signed_volume(&c, &uniform_t_grid(steps), &mesh, None, SvMethod::Stokes)?;
    let fit = fit_sv_polynomial(&profile, n)?;
    Ok((fit.coefficients, fit.residual_rms))
}

fn sv_identity_3(_: u64) -> Result<(bool, Value)> {
    let (coef, rms) = sv_fit(3, 2048, 33)?;
    let expect = [0.0, 0.0, 1024.0 * (2.0 * PI / 2048.0).sin()];
    let err = coef.iter().zip(expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((err < 1e-4 && rms < 1e-5, json!({ "coefficients": coef, "residual_rms": rms, "max_error": err })))
}

fn sv_identity_4(_: u64) -> Result<(bool, Value)> {
    let (coef, rms) = sv_fit(4, 642, 17)?;
    let lead = *coef.last().unwrap_or(&0.0);
    let target = orientation_constant(4)?;
    let lower = coef[..coef.len() - 1].iter().map(|a| a.abs()).fold(0.0, f64::max);
    Ok((rel(lead, target) < 0.02 && lower < 1e-6, json!({ "coefficients": coef, "residual_rms": rms })))
}

fn sv_lower_bound(_: u64) -> Result<(bool, Value)> {
    let c = PositionMap::radial(3, Domain::Ball, 0.5)?;
    let mesh = sample_sphere(1, 1024)?;
    let profile = sweep_signed_volume(&c, &uniform_t_grid(65), &mesh, None, SvMethod::Stokes)?;
    let fit = fit_sv_polynomial(&profile, 3)?;
    let check = sv_lower_bound_check(&fit, &profile)?;
    Ok((check.passed, json!(check)))
}

fn stokes_matches_grid(_: u64) -> Result<(bool, Value)> {
    let c = PositionMap::radial(3, Domain::Ball, 0.5)?;
    let lp = slice_loop(&c, 0.5, &sample_sphere(1, 1024)?, None)?;
    let stokes = signed_volume_stokes(&lp);
    let grid = signed_volume_grid(&lp, 0.005)?;
    Ok((rel(grid.value, stokes) < 0.01, json!({ "stokes": stokes, "grid": grid })))
}

fn stokes_matches_grid_4(_: u64) -> Result<(bool, Value)> {
    let c = PositionMap::zero(4, Domain::Ball)?;
    let lp = slice_loop(&c, 0.5, &sample_sphere(2, 162)?, None)?;
    let stokes = signed_volume_stokes(&lp);
    let grid = signed_volume_grid(&lp, 0.05)?;
    // |wind| <= 1 for this loop, so masked cells bound the discrepancy.
    let slack = grid.masked_cells as f64 * 0.05f64.powi(3);
    Ok(((grid.value - stokes).abs() <= slack, json!({ "stokes": stokes, "grid": grid, "masked_volume": slack })))
}

fn isoperimetric_3(_: u64) -> Result<(bool, Value)> {
    let check = isoperimetric_check(&polygon(1024, 1.0, 1.0)?, 0.01)?;
    let tight = (check.ratio - 1.0 / (4.0 * PI).sqrt()).abs() < 0.01 / (4.0 * PI).sqrt();
    Ok((check.passed && tight, json!(check)))
}

fn isoperimetric_4(_: u64) -> Result<(bool, Value)> {
    let c = PositionMap::zero(4, Domain::Ball)?;
    let lp = slice_loop(&c, 0.5, &sample_sphere(2, 162)?, None)?;
    let check = isoperimetric_check(&lp, 0.05)?;
    Ok((check.passed, json!(check)))
}

fn solid_angle_winding(_: u64) -> Result<(bool, Value)> {
    let c = PositionMap::zero(4, Domain::Ball)?;
    let lp = slice_loop(&c, 0.5, &sample_sphere(2, 162)?, None)?;
    let inside = generalized_winding_3d(&lp, [0.05, -0.02, 0.01], None)?;
    let outside = generalized_winding_3d(&lp, [1.0, 0.0, 0.0], None)?;
    Ok((inside.abs() == 1 && outside == 0, json!({ "inside": inside, "outside": outside })))
}

fn mollifier_mass(_: u64) -> Result<(bool, Value)> {
    let mesh = sample_sphere(1, 1024)?;
    let k = mollifier_kernel(0.05, &mesh)?;
    let worst = (0..mesh.len()).map(|i| (k.mass_at(i) - 1.0).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-8, json!({ "max_mass_error": worst })))
}

fn circle_map_degree(_: u64) -> Result<(bool, Value)> {
    let samples: Vec<[f64; 2]> = (0..256)
        .map(|i| {
            let a = 3.0 * 2.0 * PI * i as f64 / 256.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let d = degree_circle_map(&samples)?;
    Ok((d == 3, json!({ "degree": d })))
}

fn degree_bound_constant(_: u64) -> Result<(bool, Value)> {
    let mesh = sample_sphere(1, 256)?;
    let samples = vec![[1.0, 0.0]; mesh.len()];
    let v = nguyen_degree_bound(&samples, 1.0, &mesh)?;
    Ok((v == 0.0, json!({ "value": v })))
}

fn triangle(dim: usize, seed: u64) -> Result<(bool, Value)> {
    let check = triangle_inequality_check(&random_triples(dim, 2000, seed))?;
    Ok((check.violations == 0, json!(check)))
}

fn triangle_3(seed: u64) -> Result<(bool, Value)> {
    triangle(3, seed)
}

fn triangle_4(seed: u64) -> Result<(bool, Value)> {
    triangle(4, seed)
}

fn line_kakeya(n: usize) -> Result<(bool, Value)> {
    let c = PositionMap::zero(n, Domain::Sphere)?;
    let mut x = vec![0.0; n];
    x[0] = 2.0;
    let cover = line_kakeya_cover(&c, &x, 1e-9)?;
    Ok((cover.residual < 1e-6 && (cover.s - 2.0).abs() < 1e-6, json!(cover)))
}

fn line_kakeya_3(_: u64) -> Result<(bool, Value)> {
    line_kakeya(3)
}

fn line_kakeya_4(_: u64) -> Result<(bool, Value)> {
    line_kakeya(4)
}

fn cone_measure(_: u64) -> Result<(bool, Value)> {
    let est = rasterize_image_measure(&PositionMap::zero(3, Domain::Ball)?, 0.01)?;
    Ok((rel(est.value, PI / 3.0) < 0.1, json!(est)))
}

fn net_separation(seed: u64) -> Result<(bool, Value)> {
    let net = delta_net(2, 0.05, Some(seed))?;
    let mut min = f64::INFINITY;
    for i in 0..net.len() {
        for j in 0..i {
            min = min.min(kakeya_core::geom::dist(&net[i], &net[j]));
        }
    }
    Ok((min >= 0.05 && net.len() > 100, json!({ "points": net.len(), "min_separation": min })))
}
