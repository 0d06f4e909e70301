use kakeya_core::maps::{Domain, PositionMap, Variant};
use kakeya_core::measure::{
    build_tube_family, cone_coverage_check, delta_net, lipschitz_tube_experiment, line_kakeya_cover,
    rasterize_image_measure, tube_union_volume,
};
use kakeya_core::mollify::mollification_bounds;
use kakeya_core::regularity::{dyadic_scales, regularity_report};
use kakeya_core::slice::{
    fit_sv_polynomial, isoperimetric_check, loop_area, neighborhood_measure, orientation_constant,
    signed_volume_stokes, slice_loop, sv_lower_bound_check, sweep_signed_volume, uniform_t_grid, SvMethod,
};
use kakeya_core::sphere::{sample_sphere, SphereMesh};
use kakeya_core::winding::{WindingField, WindingMethod};
use kakeya_core::KakeyaError;
use serde_json::{json, Value};

use crate::args::*;
use crate::report::{gnuplot_field, gnuplot_lines, OutputSet};
use crate::{CliError, CommandResult};

pub fn default_out(command: &str) -> String {
    match command {
        "sweep" => "sv.csv".into(),
        "slice" => "wind.csv".into(),
        other => format!("{}.json", other.replace('-', "_")),
    }
}

fn finite(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(flag, format!("{flag} must be finite, got {v}")))
    }
}

fn parse_map(spec: &str, n: usize, domain: Domain) -> Result<PositionMap, CliError> {
    PositionMap::parse(spec, n, domain).map_err(|e| CliError::invalid("--map", format!("`{spec}`: {e}")))
}

fn boundary_mesh(command: &'static str, n: usize, resolution: u32) -> Result<SphereMesh, CliError> {
    sample_sphere(n - 2, resolution as usize).map_err(CliError::core(command))
}

fn spread(xs: &[f64]) -> Option<f64> {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    (xs.len() >= 2 && lo > 0.0).then(|| hi / lo)
}

pub fn sweep(a: &SweepArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "sweep";
    let core = CliError::core(CMD);
    let n = a.common.n as usize;
    let c = parse_map(&a.map, n, Domain::Ball)?;
    let mesh = boundary_mesh(CMD, n, a.mesh)?;
    if let Some(e) = a.epsilon {
        finite("--epsilon", e)?;
    }
    let method = match a.method {
        SvMethodArg::Stokes => SvMethod::Stokes,
        SvMethodArg::Grid => SvMethod::Grid { h: finite("--h", a.h)? },
    };
    let profile = sweep_signed_volume(&c, &uniform_t_grid(a.t_steps as usize), &mesh, a.epsilon, method).map_err(&core)?;
    let fit = fit_sv_polynomial(&profile, n).map_err(&core)?;
    let lower_bound = match sv_lower_bound_check(&fit, &profile) {
        Ok(b) => json!(b),
        Err(e @ KakeyaError::Orientation { .. }) => json!({ "error": e.to_string() }),
        Err(e) => return Err(core(e)),
    };
    let csv = set.name(".csv");
    set.add(".csv", profile.to_csv());
    set.add(".gp", gnuplot_lines(&csv, "signed volume", "t", &[(2, "SV(t)")], false));
    Ok(CommandResult {
        results: json!({
            "csv": csv,
            "rows": profile.len(),
            "method": profile.method,
            "mesh_resolution": profile.mesh_resolution,
            "grid_spacing": profile.grid_spacing,
            "epsilon": profile.epsilon,
            "orientation_constant": orientation_constant(n).map_err(&core)?,
            "integral_abs_sv": profile.integral_abs(),
            "fit": fit,
            "lower_bound": lower_bound,
        }),
        report_suffix: ".fit.json",
    })
}

pub fn slice(a: &SliceArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "slice";
    let core = CliError::core(CMD);
    let n = a.common.n as usize;
    let c = parse_map(&a.map, n, Domain::Ball)?;
    let mesh = boundary_mesh(CMD, n, a.mesh)?;
    finite("--t", a.t)?;
    finite("--h", a.h)?;
    let method = match (a.method, n) {
        (None, 3) => WindingArg::Scanline,
        (None, _) => WindingArg::SolidAngle,
        (Some(WindingArg::SolidAngle), 3) => {
            return Err(CliError::invalid("--method", "solid-angle winding needs --n 4"));
        }
        (Some(WindingArg::SolidAngle), _) => WindingArg::SolidAngle,
        (Some(m), 3) => m,
        (Some(_), _) => return Err(CliError::invalid("--method", "--n 4 slices support only solid-angle winding")),
    };
    let wm = match method {
        WindingArg::AngleSum => WindingMethod::AngleSum,
        WindingArg::Ray => WindingMethod::RayCrossing,
        WindingArg::Scanline => WindingMethod::Scanline,
        WindingArg::SolidAngle => WindingMethod::SolidAngle,
    };
    let lp = slice_loop(&c, a.t, &mesh, a.epsilon).map_err(&core)?;
    let field = WindingField::compute(&lp, a.h, wm).map_err(&core)?;
    let sv_stokes = signed_volume_stokes(&lp);
    let sv_grid = field.integral();
    let iso = isoperimetric_check(&lp, a.h).map_err(&core)?;
    let neighborhood = match a.r {
        Some(r) => json!({ "r": r, "measure": neighborhood_measure(&lp, finite("--r", r)?, a.h).map_err(&core)? }),
        None => Value::Null,
    };
    let csv = set.name(".csv");
    set.add(".csv", field.to_csv());
    if n == 3 {
        set.add(".gp", gnuplot_field(&csv, &format!("winding field at t = {}", a.t)));
    }
    Ok(CommandResult {
        results: json!({
            "csv": csv,
            "t": a.t,
            "epsilon": a.epsilon,
            "method": wm,
            "vertices": lp.vertex_count(),
            "degenerate": lp.is_degenerate(),
            "grid": { "h": a.h, "cells": field.len(), "masked": field.masked_count() },
            "sv_stokes": sv_stokes,
            "sv_grid": sv_grid,
            "sv_difference": (sv_grid - sv_stokes).abs(),
            "loop_area": loop_area(&lp),
            "isoperimetric": iso,
            "neighborhood": neighborhood,
        }),
        report_suffix: ".json",
    })
}

pub fn measure(a: &MeasureArgs) -> Result<CommandResult, CliError> {
    let c = parse_map(&a.map, a.common.n as usize, Domain::Ball)?;
    let est = rasterize_image_measure(&c, finite("--h", a.h)?).map_err(CliError::core("measure"))?;
    Ok(CommandResult { results: json!(est), report_suffix: ".json" })
}

pub fn tubes(a: &TubesArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "tubes";
    let core = CliError::core(CMD);
    let c = parse_map(&a.map, a.common.n as usize, Domain::Ball)?;
    let delta = finite("--delta", a.delta)?;
    let h = finite("--h", a.h.unwrap_or(delta / 4.0))?;
    let family = build_tube_family(&c, delta, a.shuffle.then_some(a.common.seed)).map_err(&core)?;
    let union = tube_union_volume(&family, h).map_err(&core)?;
    set.add(".family.csv", family.to_csv());
    let mut results = json!({
        "family": family.sidecar(),
        "family_csv": set.name(".family.csv"),
        "min_separation": family.min_separation(),
        "lipschitz_constant": family.lipschitz_constant().map_err(&core)?,
        "union": union,
    });
    if !a.l_values.is_empty() {
        for &l in &a.l_values {
            finite("--l-values", l)?;
        }
        let rows = lipschitz_tube_experiment(&c, &a.l_values, delta, h).map_err(&core)?;
        let mut csv = String::from("L,union_volume,scaled_volume,tubes\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{},{}\n", r.l, r.union_volume, r.scaled_volume, r.tubes));
        }
        let name = set.name(".csv");
        set.add(".csv", csv);
        set.add(".gp", gnuplot_lines(&name, "tube union volume", "L", &[(2, "volume"), (3, "scaled")], false));
        let scaled: Vec<f64> = rows.iter().map(|r| r.scaled_volume).collect();
        results["rows"] = json!(rows);
        results["rows_csv"] = json!(name);
        results["scaled_spread"] = json!(spread(&scaled));
    }
    Ok(CommandResult { results, report_suffix: ".json" })
}

pub fn moll(a: &MollArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "moll";
    let core = CliError::core(CMD);
    let n = a.common.n as usize;
    let c = parse_map(&a.map, n, Domain::Ball)?;
    let mesh = boundary_mesh(CMD, n, a.mesh)?;
    let alpha = match (a.alpha, c.variant()) {
        (Some(al), _) => finite("--alpha", al)?,
        (None, Variant::Lacunary { alpha, .. }) => *alpha,
        (None, _) => 1.0,
    };
    finite("--t", a.t)?;
    let mut rows = Vec::with_capacity(a.epsilons.len());
    let mut csv = String::from("epsilon,sup_deviation,sup_ratio,grad_sup,grad_ratio,length,length_ratio\n");
    for &eps in &a.epsilons {
        let b = mollification_bounds(&c, finite("--epsilons", eps)?, alpha, &mesh).map_err(&core)?;
        let length = loop_area(&slice_loop(&c, a.t, &mesh, Some(eps)).map_err(&core)?);
        let length_ratio = length * eps.powf(1.0 - alpha);
        csv.push_str(&format!(
            "{eps},{},{},{},{},{length},{length_ratio}\n",
            b.sup_deviation, b.sup_ratio, b.grad_sup, b.grad_ratio
        ));
        rows.push(json!({ "bounds": b, "length": length, "length_ratio": length_ratio }));
    }
    let name = set.name(".csv");
    set.add(".csv", csv);
    set.add(".gp", gnuplot_lines(&name, "mollification", "epsilon", &[(2, "sup deviation"), (4, "grad sup")], true));
    let ratio = |key: &str, sub: Option<&str>| -> Vec<f64> {
        rows.iter()
            .filter_map(|r| match sub {
                Some(s) => r[s][key].as_f64(),
                None => r[key].as_f64(),
            })
            .collect()
    };
    Ok(CommandResult {
        results: json!({
            "alpha": alpha,
            "t": a.t,
            "csv": name,
            "rows": rows,
            "sup_ratio_spread": spread(&ratio("sup_ratio", Some("bounds"))),
            "length_ratio_spread": spread(&ratio("length_ratio", None)),
        }),
        report_suffix: ".json",
    })
}

pub fn regularity(a: &RegularityArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "regularity";
    let core = CliError::core(CMD);
    let n = a.common.n as usize;
    let c = parse_map(&a.map, n, Domain::Ball)?;
    if a.finest <= a.coarsest {
        return Err(CliError::invalid("--finest", "--finest must exceed --coarsest"));
    }
    let scales = dyadic_scales(a.finest, a.coarsest);
    let mesh = boundary_mesh(CMD, n, a.mesh)?;
    let net = match a.delta {
        Some(d) => Some(delta_net(c.in_dim(), finite("--delta", d)?, None).map_err(&core)?),
        None => None,
    };
    let p = finite("--p", a.p)?;
    let seminorms = a.theta.iter().map(|&th| finite("--theta", th).map(|th| (th, p))).collect::<Result<Vec<_>, _>>()?;
    let rep = regularity_report(&c, &scales, net.as_deref(), &seminorms, &mesh).map_err(&core)?;
    let mut csv = String::from("scale,oscillation\n");
    for (s, o) in rep.holder.scales.iter().zip(&rep.holder.oscillations) {
        csv.push_str(&format!("{s},{o}\n"));
    }
    let name = set.name(".csv");
    set.add(".csv", csv);
    set.add(".gp", gnuplot_lines(&name, "oscillation", "scale", &[(2, "osc")], true));
    let mut results = json!(rep);
    results["csv"] = json!(name);
    results["net_points"] = json!(net.as_ref().map(Vec::len));
    Ok(CommandResult { results, report_suffix: ".json" })
}

pub fn line_kakeya(a: &LineKakeyaArgs, set: &mut OutputSet) -> Result<CommandResult, CliError> {
    const CMD: &str = "line-kakeya";
    let core = CliError::core(CMD);
    let n = a.common.n as usize;
    if a.x.len() != n {
        return Err(CliError::invalid("--x", format!("--x needs {n} coordinates, got {}", a.x.len())));
    }
    for &xi in &a.x {
        finite("--x", xi)?;
    }
    let tol = finite("--tol", a.tol)?;
    let base = parse_map(&a.map, n, Domain::Sphere)?;
    let sup = finite("--sup", a.sup)?;
    let maps = match a.trials {
        Some(k) => (0..k as u64)
            .map(|i| PositionMap::polynomial(n, Domain::Sphere, a.degree, a.common.seed.wrapping_add(i), sup))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&core)?,
        None => vec![base.clone()],
    };
    let mut rows = Vec::with_capacity(maps.len());
    let mut csv = String::from("trial,");
    csv.push_str(&(1..=n).map(|i| format!("v{i}")).collect::<Vec<_>>().join(","));
    csv.push_str(",s,residual,method\n");
    let mut solved = 0usize;
    let mut max_residual: f64 = 0.0;
    for (trial, c) in maps.iter().enumerate() {
        match line_kakeya_cover(c, &a.x, tol) {
            Ok(cover) => {
                solved += 1;
                max_residual = max_residual.max(cover.residual);
                let v: Vec<String> = cover.v.iter().map(f64::to_string).collect();
                csv.push_str(&format!("{trial},{},{},{},{}\n", v.join(","), cover.s, cover.residual, cover.method));
                rows.push(json!({ "map": c.label(), "cover": cover }));
            }
            Err(e @ KakeyaError::NoFixedPoint { .. }) => rows.push(json!({ "map": c.label(), "error": e.to_string() })),
            Err(e) => return Err(core(e)),
        }
    }
    let name = set.name(".csv");
    set.add(".csv", csv);
    let cone = match a.cap {
        Some(r) => json!(cone_coverage_check(&base, finite("--cap", r)?, a.samples as usize, a.common.seed, tol).map_err(&core)?),
        None => Value::Null,
    };
    Ok(CommandResult {
        results: json!({
            "csv": name,
            "x": a.x,
            "trials": maps.len(),
            "solved": solved,
            "max_residual": max_residual,
            "rows": rows,
            "cone": cone,
        }),
        report_suffix: ".json",
    })
}
