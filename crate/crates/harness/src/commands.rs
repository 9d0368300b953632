//! One function per subcommand: run the library, tabulate, write, and report tasks.

use std::fs::File;
use std::time::Instant;

use capillary::droplet::{
    dividing_radius, laplace_radius_estimate, laplace_sweep, mechanical_balance_residuals,
    pressure_jump, solve_droplet_with, solve_for_radius, supersaturated_far_field, DividingRule,
    NucleusKind, SolveOptions, SweepOptions, DEFAULT_TAIL_THICKNESSES,
};
use capillary::eos::EosModel;
use capillary::planar::{
    discrete_energy_stationarity, interface_thickness, interface_thickness_quadrature,
    planar_profile, sigma_integral, sigma_quadrature, CapillarityParams, DensityProfile, Geometry,
    MIN_POINTS,
};
use capillary::sharp::{
    convergence_table, pressure_jump_sharp, richardson_limit, sigma_sharp, ConvergenceRow,
    FamilyShape, RegularizedFamily, SharpModel, TestFunction,
};
use capillary::CapillaryError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    CoexistJob, DistributionJob, DropletJob, Format, Job, LaplaceJob, PlanarJob, SharpJob,
    SigmaSource, TestFunctionKind,
};
use crate::error::{HarnessError, Result};
use crate::manifest::TaskRecord;
use crate::output::OutputDir;
use crate::table::{Cell, Table};

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

fn params(temperature: f64, lambda: f64) -> std::result::Result<CapillarityParams, CapillaryError> {
    CapillarityParams::new(lambda, temperature)
}

/// Runs `job`, writing its outputs into `out`. Numerical failures become failed tasks;
/// only I/O and input-file problems are returned as errors.
pub fn run_job(job: &Job, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    match job {
        Job::Coexist(j) => coexist(j, format, out),
        Job::Planar(j) => planar(j, format, out),
        Job::Droplet(j) => droplet(j, format, out),
        Job::Laplace(j) => laplace(j, format, out),
        Job::Sharp(j) => sharp(j, format, out),
        Job::Distribution(j) => distribution(j, format, out),
    }
}

fn coexist(job: &CoexistJob, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    let eos = EosModel::van_der_waals();
    let results: Vec<_> = job
        .temperatures
        .par_iter()
        .map(|&t| timed(|| eos.maxwell_coexistence(t)))
        .collect();
    let mut table = Table::new(&[
        "T",
        "rho_v",
        "rho_l",
        "gap",
        "P_sat",
        "mu_sat",
        "residuals",
        "status",
    ]);
    let mut tasks = Vec::new();
    for (&t, (res, secs)) in job.temperatures.iter().zip(results) {
        let name = format!("coexist[T={t}]");
        match res {
            Ok(c) => {
                let residual = c.residual_pressure.max(c.residual_mu);
                table.push(vec![
                    t.into(),
                    c.rho_v.into(),
                    c.rho_l.into(),
                    c.gap().into(),
                    c.p_sat.into(),
                    c.mu_sat.into(),
                    residual.into(),
                    "ok".into(),
                ]);
                tasks.push(
                    TaskRecord::ok(name, secs)
                        .residual("pressure", c.residual_pressure)
                        .residual("chemical_potential", c.residual_mu),
                );
            }
            Err(e) => {
                let mut row = vec![Cell::Num(t)];
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.push(format!("error: {e}").into());
                table.push(row);
                tasks.push(TaskRecord::failed(name, e, secs));
            }
        }
    }
    out.write_table("coexistence", &table, format)?;
    Ok(tasks)
}

#[derive(Serialize)]
struct Refinement {
    points: usize,
    sigma_integral: f64,
    rel_change: f64,
}

#[derive(Serialize)]
struct PlanarReport {
    temperature: f64,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile_in: Option<String>,
    rho_v: f64,
    rho_l: f64,
    p_sat: f64,
    mu_sat: f64,
    sigma_integral: f64,
    sigma_quadrature: f64,
    rel_discrepancy: f64,
    thickness: f64,
    thickness_quadrature: f64,
    stationarity_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<Refinement>,
}

fn planar(job: &PlanarJob, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    let input = match &job.profile_in {
        Some(path) => {
            let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
            Some(crate::table::read_profile_csv(f)?)
        }
        None => None,
    };
    let (res, secs) = timed(|| -> std::result::Result<_, CapillaryError> {
        let p = params(job.temperature, job.lambda)?;
        let coex = p.coexistence()?;
        let profile = match &input {
            Some((x, rho)) => DensityProfile::new(x.clone(), rho.clone(), Geometry::Planar, p)?,
            None => planar_profile(p, job.points)?,
        };
        let s_int = sigma_integral(&profile)?;
        let s_quad = sigma_quadrature(p, &coex)?;
        let refinement = if input.is_none() && job.points / 2 >= MIN_POINTS {
            let n = job.points / 2;
            let coarse = sigma_integral(&planar_profile(p, n)?)?;
            Some(Refinement {
                points: n,
                sigma_integral: coarse,
                rel_change: (coarse - s_int).abs() / s_int,
            })
        } else {
            None
        };
        let report = PlanarReport {
            temperature: job.temperature,
            lambda: job.lambda,
            points: input.is_none().then_some(job.points),
            profile_in: job.profile_in.as_ref().map(|p| p.display().to_string()),
            rho_v: coex.rho_v,
            rho_l: coex.rho_l,
            p_sat: coex.p_sat,
            mu_sat: coex.mu_sat,
            sigma_integral: s_int,
            sigma_quadrature: s_quad,
            rel_discrepancy: (s_int - s_quad).abs() / (0.5 * (s_int + s_quad)),
            thickness: interface_thickness(&profile)?,
            thickness_quadrature: interface_thickness_quadrature(p, &coex)?,
            stationarity_max: discrete_energy_stationarity(&profile)?,
            refinement,
        };
        Ok((profile, report))
    });
    let (profile, report) = match res {
        Ok(v) => v,
        Err(e) => return Ok(vec![TaskRecord::failed("planar", e, secs)]),
    };
    if input.is_none() {
        let mut table = Table::new(&["coordinate", "density"]);
        for (x, r) in profile.coordinate().iter().zip(profile.density()) {
            table.push(vec![(*x).into(), (*r).into()]);
        }
        out.write_table("profile", &table, format)?;
    }
    out.write_json("surface_tension.json", &report)?;
    Ok(vec![TaskRecord::ok("planar", secs)
        .residual("sigma_rel_discrepancy", report.rel_discrepancy)
        .residual(
            "thickness_rel_discrepancy",
            (report.thickness - report.thickness_quadrature).abs() / report.thickness_quadrature,
        )
        .residual("stationarity_max", report.stationarity_max)])
}

#[derive(Serialize)]
struct DropletReport {
    kind: NucleusKind,
    rule: DividingRule,
    temperature: f64,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    supersaturation: Option<f64>,
    rho_inf: f64,
    r_max: f64,
    rho_center: f64,
    rho_core_bulk: f64,
    mu_b: f64,
    r_div: f64,
    r_max_slope: f64,
    r_equimolar: f64,
    h_s: f64,
    p_in: f64,
    p_out: f64,
    delta_p: f64,
    sigma_planar: f64,
    sigma_laplace: f64,
    laplace_rel_error: f64,
    sigma_local_integral: f64,
    curvature_integral: f64,
    shoot_mismatch: f64,
    match_radius: f64,
    match_level: f64,
    mechanical_balance_max: f64,
}

fn droplet(job: &DropletJob, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    let (res, secs) = timed(|| -> std::result::Result<_, CapillaryError> {
        let p = params(job.temperature, job.lambda)?;
        let coex = p.coexistence()?;
        let rho_inf = match (job.rho_inf, job.supersaturation) {
            (Some(r), _) => r,
            (None, Some(q)) => supersaturated_far_field(p, job.kind, q)?,
            (None, None) => unreachable!("resolution fills one of rho_inf and supersaturation"),
        };
        let sigma = sigma_quadrature(p, &coex)?;
        let r_max = match job.r_max {
            Some(r) => r,
            None => {
                let th = interface_thickness_quadrature(p, &coex)?;
                laplace_radius_estimate(p, rho_inf, job.kind, sigma)?
                    + DEFAULT_TAIL_THICKNESSES * th
            }
        };
        let opts = SolveOptions {
            grid_spacing: job.grid_spacing,
            rule: job.rule,
        };
        let sol = solve_droplet_with(p, rho_inf, r_max, job.kind, opts)?;
        let delta_p = pressure_jump(&sol);
        let sigma_laplace = delta_p / sol.h_s;
        let balance = mechanical_balance_residuals(&sol)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let report = DropletReport {
            kind: job.kind,
            rule: job.rule,
            temperature: job.temperature,
            lambda: job.lambda,
            supersaturation: job.supersaturation,
            rho_inf,
            r_max: sol.r_max(),
            rho_center: sol.rho_center,
            rho_core_bulk: sol.rho_core_bulk,
            mu_b: sol.mu_b,
            r_div: sol.r_div,
            r_max_slope: dividing_radius(&sol, DividingRule::MaxSlope)?,
            r_equimolar: dividing_radius(&sol, DividingRule::Equimolar)?,
            h_s: sol.h_s,
            p_in: sol.p_in,
            p_out: sol.p_out,
            delta_p,
            sigma_planar: sigma,
            sigma_laplace,
            laplace_rel_error: (sigma_laplace - sigma).abs() / sigma,
            sigma_local_integral: sol.sigma_local_integral,
            curvature_integral: sol.curvature_integral,
            shoot_mismatch: sol.shoot_mismatch,
            match_radius: sol.match_radius,
            match_level: sol.match_level,
            mechanical_balance_max: balance,
        };
        Ok((sol, report))
    });
    let (sol, report) = match res {
        Ok(v) => v,
        Err(e) => return Ok(vec![TaskRecord::failed("droplet", e, secs)]),
    };
    let mut table = Table::new(&["r", "density", "slope"]);
    for ((r, rho), s) in sol
        .profile
        .coordinate()
        .iter()
        .zip(sol.profile.density())
        .zip(&sol.slope)
    {
        table.push(vec![(*r).into(), (*rho).into(), (*s).into()]);
    }
    out.write_table("droplet_profile", &table, format)?;
    out.write_json("droplet.json", &report)?;
    Ok(vec![TaskRecord::ok("droplet", secs)
        .residual("shoot_mismatch", report.shoot_mismatch)
        .residual("mechanical_balance_max", report.mechanical_balance_max)
        .residual("laplace_rel_error", report.laplace_rel_error)])
}

#[derive(Serialize)]
struct LaplaceFit<'a> {
    targets: &'a [f64],
    #[serde(flatten)]
    report: &'a capillary::droplet::LaplaceReport,
}

fn laplace(job: &LaplaceJob, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    let (res, secs) = timed(|| -> std::result::Result<_, CapillaryError> {
        let p = params(job.temperature, job.lambda)?;
        let targets = match (&job.radii, &job.radii_thickness) {
            (Some(r), _) => r.clone(),
            (None, Some(m)) => {
                let th = interface_thickness_quadrature(p, &p.coexistence()?)?;
                m.iter().map(|k| k * th).collect()
            }
            (None, None) => unreachable!("resolution fills one of radii and radii_thickness"),
        };
        let opts = SweepOptions {
            kind: job.kind,
            rule: job.rule,
            tail_thicknesses: job.tail_thicknesses,
            radius_tol: job.radius_tol,
            grid_spacing: job.grid_spacing,
        };
        let report = laplace_sweep(p, &targets, opts)?;
        Ok((targets, report))
    });
    let (targets, report) = match res {
        Ok(v) => v,
        Err(e) => return Ok(vec![TaskRecord::failed("laplace-fit", e, secs)]),
    };
    let mut table = Table::new(&[
        "R_div",
        "H_s",
        "P_in",
        "P_out",
        "delta_P",
        "sigma_local_integral",
        "R_target",
        "rho_inf",
        "curvature_integral",
        "laplace_rel_error",
        "fit_residual",
    ]);
    let mut tasks = Vec::new();
    for q in &report.points {
        table.push(vec![
            q.r_div.into(),
            q.h_s.into(),
            q.p_in.into(),
            q.p_out.into(),
            q.delta_p.into(),
            q.sigma_local_integral.into(),
            q.target.into(),
            q.rho_inf.into(),
            q.curvature_integral.into(),
            q.laplace_rel_error.into(),
            q.fit_residual.into(),
        ]);
        tasks.push(
            TaskRecord::ok(format!("radius[{}]", q.target), None)
                .residual("radius_rel_miss", (q.r_div - q.target).abs() / q.target)
                .residual("laplace_rel_error", q.laplace_rel_error),
        );
    }
    for f in &report.failures {
        tasks.push(TaskRecord::failed(
            format!("radius[{}]", f.target),
            &f.error,
            None,
        ));
    }
    tasks.push(
        TaskRecord::ok("laplace-fit", secs)
            .residual("sigma_fit_rel_error", report.sigma_fit_rel_error),
    );
    out.write_table("laplace_sweep", &table, format)?;
    out.write_json(
        "laplace_fit.json",
        &LaplaceFit {
            targets: &targets,
            report: &report,
        },
    )?;
    Ok(tasks)
}

fn convergence_rows_table(rows: &[ConvergenceRow]) -> Table {
    let mut table = Table::new(&[
        "epsilon",
        "pairing",
        "surface_value",
        "abs_error",
        "observed_order",
    ]);
    for r in rows {
        table.push(vec![
            r.epsilon.into(),
            r.pairing.into(),
            r.surface_value.into(),
            r.abs_error.into(),
            r.observed_order.into(),
        ]);
    }
    table
}

fn family(
    geometry: Geometry,
    shape: FamilyShape,
    center: f64,
    rho_v: f64,
    rho_l: f64,
    epsilons: &[f64],
) -> std::result::Result<RegularizedFamily, CapillaryError> {
    RegularizedFamily::new(epsilons[0], center, rho_v, rho_l, geometry, shape)
}

#[derive(Serialize)]
struct CrossModelPoint {
    kind: NucleusKind,
    target_thicknesses: f64,
    r_div: f64,
    h_s: f64,
    delta_p_diffuse: f64,
    delta_p_sharp: f64,
    rel_difference: f64,
}

#[derive(Serialize)]
struct CrossModel {
    planar_thickness: f64,
    tolerance: f64,
    max_rel_difference: f64,
    points: Vec<CrossModelPoint>,
}

#[derive(Serialize)]
struct Calibration {
    sigma_source: SigmaSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    sigma: f64,
    rho_v: f64,
    rho_l: f64,
    mu: f64,
    sigma_round_trip: f64,
    round_trip_rel_error: f64,
    geometry: Geometry,
    shape: FamilyShape,
    center: f64,
    support: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_model: Option<CrossModel>,
}

/// Radii, in planar thicknesses, of the diffuse nuclei compared against the sharp model.
const CROSS_MODEL_RADII: [f64; 2] = [20.0, 40.0];

fn cross_model(
    p: CapillarityParams,
    sigma: f64,
    model: &SharpModel,
    tol: f64,
) -> std::result::Result<CrossModel, CapillaryError> {
    let th = interface_thickness_quadrature(p, &p.coexistence()?)?;
    let cases: Vec<(NucleusKind, f64)> = [NucleusKind::Droplet, NucleusKind::Bubble]
        .iter()
        .flat_map(|k| CROSS_MODEL_RADII.iter().map(move |m| (*k, *m)))
        .collect();
    let points = cases
        .par_iter()
        .map(|&(kind, m)| {
            let opts = SweepOptions {
                kind,
                ..SweepOptions::default()
            };
            let sol = solve_for_radius(p, m * th, sigma, th, &opts)?;
            let diffuse = pressure_jump(&sol);
            let sharp = pressure_jump_sharp(model, sol.h_s);
            Ok(CrossModelPoint {
                kind,
                target_thicknesses: m,
                r_div: sol.r_div,
                h_s: sol.h_s,
                delta_p_diffuse: diffuse,
                delta_p_sharp: sharp,
                rel_difference: (sharp - diffuse).abs() / diffuse.abs(),
            })
        })
        .collect::<std::result::Result<Vec<_>, CapillaryError>>()?;
    Ok(CrossModel {
        planar_thickness: th,
        tolerance: tol,
        max_rel_difference: points.iter().fold(0.0, |m, q| m.max(q.rel_difference)),
        points,
    })
}

fn sharp(job: &SharpJob, format: Format, out: &mut OutputDir) -> Result<Vec<TaskRecord>> {
    let (res, secs) = timed(|| -> std::result::Result<_, CapillaryError> {
        let (sigma, rho_v, rho_l, p) = match job.sigma_source {
            SigmaSource::Planar => {
                let p = params(
                    job.temperature.unwrap_or_default(),
                    job.lambda.unwrap_or_default(),
                )?;
                let coex = p.coexistence()?;
                (sigma_quadrature(p, &coex)?, coex.rho_v, coex.rho_l, Some(p))
            }
            SigmaSource::Value => (
                job.sigma.unwrap_or_default(),
                job.rho_v.unwrap_or_default(),
                job.rho_l.unwrap_or_default(),
                None,
            ),
        };
        let model = SharpModel::calibrated(sigma, rho_v, rho_l)?;
        let back = sigma_sharp(&model);
        Ok((
            model,
            p,
            Calibration {
                sigma_source: job.sigma_source,
                temperature: job.temperature,
                lambda: job.lambda,
                sigma,
                rho_v,
                rho_l,
                mu: model.mu,
                sigma_round_trip: back,
                round_trip_rel_error: (back - sigma).abs() / sigma,
                geometry: job.geometry,
                shape: job.shape,
                center: job.center,
                support: job.support.clone(),
                cross_model: None,
            },
        ))
    });
    let (model, p, mut calibration) = match res {
        Ok(v) => v,
        Err(e) => return Ok(vec![TaskRecord::failed("calibration", e, secs)]),
    };
    let mut tasks = vec![TaskRecord::ok("calibration", secs)
        .residual("round_trip_rel_error", calibration.round_trip_rel_error)];

    let (rows, secs) = timed(|| {
        let fam = family(
            job.geometry,
            job.shape,
            job.center,
            model.rho_v,
            model.rho_l,
            &job.epsilons,
        )?;
        let phi = TestFunction::constant(1.0, job.support[0], job.support[1])?;
        convergence_table(&fam, &phi, &job.epsilons)
    });
    match rows {
        Ok(rows) => {
            tasks.push(convergence_task("convergence", &rows, secs));
            out.write_table("convergence", &convergence_rows_table(&rows), format)?;
        }
        Err(e) => tasks.push(TaskRecord::failed("convergence", e, secs)),
    }

    if let (Some(p), Some(tol)) = (p, job.cross_model_tol) {
        let (res, secs) = timed(|| cross_model(p, calibration.sigma, &model, tol));
        match res {
            Ok(cm) => {
                let mut task = TaskRecord::ok("cross-model", secs)
                    .residual("max_rel_difference", cm.max_rel_difference);
                if cm.max_rel_difference > tol {
                    task = TaskRecord::failed(
                        "cross-model",
                        format!(
                            "sharp and diffuse pressure jumps differ by {:.3e} > {tol:e}",
                            cm.max_rel_difference
                        ),
                        secs,
                    )
                    .residual("max_rel_difference", cm.max_rel_difference);
                }
                tasks.push(task);
                calibration.cross_model = Some(cm);
            }
            Err(e) => tasks.push(TaskRecord::failed("cross-model", e, secs)),
        }
    }
    out.write_json("sharp_calibration.json", &calibration)?;
    Ok(tasks)
}

fn convergence_task(name: &str, rows: &[ConvergenceRow], secs: f64) -> TaskRecord {
    let last = rows.last().expect("at least one epsilon");
    let mut task = TaskRecord::ok(name, secs).residual("last_abs_error", last.abs_error);
    if let Some(order) = last.observed_order {
        task = task.residual("last_observed_order", order);
    }
    task
}

#[derive(Serialize)]
struct DistributionSummary<'a> {
    #[serde(flatten)]
    job: &'a DistributionJob,
    surface_value: f64,
    last_abs_error: f64,
    observed_orders: Vec<Option<f64>>,
    /// Second-order extrapolation of the last two pairings.
    richardson_limit: Option<f64>,
    richardson_abs_error: Option<f64>,
}

fn distribution(
    job: &DistributionJob,
    format: Format,
    out: &mut OutputDir,
) -> Result<Vec<TaskRecord>> {
    let (rows, secs) = timed(|| {
        let fam = family(
            job.geometry,
            job.shape,
            job.center,
            job.rho_v,
            job.rho_l,
            &job.epsilons,
        )?;
        let (lo, hi) = (job.support[0], job.support[1]);
        let phi = match job.test_function {
            TestFunctionKind::Constant => TestFunction::constant(1.0, lo, hi)?,
            TestFunctionKind::Bump => TestFunction::bump(lo, hi)?,
        };
        convergence_table(&fam, &phi, &job.epsilons)
    });
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return Ok(vec![TaskRecord::failed("pairing", e, secs)]),
    };
    let limit = richardson_limit(&rows, 2.0);
    let surface_value = rows[0].surface_value;
    let summary = DistributionSummary {
        job,
        surface_value,
        last_abs_error: rows[rows.len() - 1].abs_error,
        observed_orders: rows.iter().map(|r| r.observed_order).collect(),
        richardson_limit: limit,
        richardson_abs_error: limit.map(|l| (l - surface_value).abs()),
    };
    out.write_table("distribution", &convergence_rows_table(&rows), format)?;
    out.write_json("distribution_summary.json", &summary)?;
    Ok(vec![convergence_task("pairing", &rows, secs)])
}
