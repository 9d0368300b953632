mod common;

use capillary::droplet::*;
use capillary::planar::*;
use capillary::{CapillaryError, EosModel};

fn params(lambda: f64, t: f64) -> CapillarityParams {
    CapillarityParams::new(lambda, t).unwrap()
}

fn droplet(rho_factor: f64, r_max: f64) -> DropletSolution {
    let p = params(1.0, 0.9);
    let coex = p.coexistence().unwrap();
    solve_droplet(p, coex.rho_v * rho_factor, r_max, NucleusKind::Droplet).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Tanh guess at the Laplace radius for the relaxation oracle.
fn laplace_guess(t: f64, lambda: f64, rho_inf: f64, h: f64, n: usize) -> Vec<f64> {
    let p = params(lambda, t);
    let coex = p.coexistence().unwrap();
    let sigma = sigma_quadrature(p, &coex).unwrap();
    let thickness = interface_thickness_quadrature(p, &coex).unwrap();
    let (_, hi) = common::spinodal_scan(t, 100_000);
    let mu_b = common::mu(rho_inf, t);
    let core = common::bisect(|r| common::mu(r, t) - mu_b, hi, 2.999);
    let r0 = 2.0 * sigma / (common::p(core, t) - common::p(rho_inf, t));
    let w = thickness / (2.0 * 0.8_f64.atanh());
    (0..=n)
        .map(|i| {
            let r = h * i as f64;
            rho_inf + (core - rho_inf) * 0.5 * (1.0 - ((r - r0) / w).tanh())
        })
        .collect()
}

/// Steepest point of a uniformly sampled profile, by a parabola through the largest
/// central difference and its neighbours.
fn max_slope_radius(h: f64, rho: &[f64]) -> f64 {
    let d: Vec<f64> = (1..rho.len() - 1)
        .map(|i| (rho[i + 1] - rho[i - 1]).abs())
        .collect();
    let k = (1..d.len() - 1)
        .max_by(|a, b| d[*a].total_cmp(&d[*b]))
        .unwrap();
    let shift = 0.5 * (d[k - 1] - d[k + 1]) / (d[k - 1] - 2.0 * d[k] + d[k + 1]);
    h * ((k + 1) as f64 + shift)
}

#[test]
fn shooting_matches_relaxation_oracle() {
    let (t, lambda) = (0.9, 1.0);
    let p = params(lambda, t);
    let rho_inf = p.coexistence().unwrap().rho_v * 1.05;
    let r_max = 120.0;
    let mut diffs = Vec::new();
    for &h in &[0.08, 0.04] {
        let sol = solve_droplet_with(
            p,
            rho_inf,
            r_max,
            NucleusKind::Droplet,
            SolveOptions {
                grid_spacing: Some(h),
                ..Default::default()
            },
        )
        .unwrap();
        let n = sol.profile.len() - 1;
        let guess = laplace_guess(t, lambda, rho_inf, h, n);
        let relaxed = common::relax_nucleus(t, lambda, rho_inf, h, &guess).unwrap();
        let diff = common::max_abs_diff(&relaxed, sol.profile.density());
        let r_relax = max_slope_radius(h, &relaxed);
        assert!(
            ((r_relax - sol.r_div) / sol.r_div).abs() < 1e-3,
            "{r_relax} vs {}",
            sol.r_div
        );
        diffs.push(diff);
    }
    assert!(diffs[0] < 1e-3, "{diffs:?}");
    let ratio = diffs[0] / diffs[1];
    assert!(ratio > 3.0 && ratio < 5.0, "{diffs:?}");
}

#[test]
fn radial_equation_residual_is_second_order() {
    let p = params(1.0, 0.9);
    let rho_inf = p.coexistence().unwrap().rho_v * 1.05;
    let mut c = Vec::new();
    for &h in &[0.1, 0.05] {
        let sol = solve_droplet_with(
            p,
            rho_inf,
            120.0,
            NucleusKind::Droplet,
            SolveOptions {
                grid_spacing: Some(h),
                ..Default::default()
            },
        )
        .unwrap();
        c.push(max_abs(&radial_residuals(&sol)) / (h * h));
    }
    assert!((c[0] / c[1] - 1.0).abs() < 0.1, "C = {c:?}");
}

#[test]
fn mechanical_balance_and_exact_pressure_identity() {
    for sol in [droplet(1.05, 120.0), {
        let p = params(1.0, 0.9);
        let rho_inf = p.coexistence().unwrap().rho_l * 0.99;
        solve_droplet(p, rho_inf, 150.0, NucleusKind::Bubble).unwrap()
    }] {
        assert!(max_abs(&mechanical_balance_residuals(&sol)) < 1e-6);
        let t = 0.9;
        let r0 = sol.rho_center;
        let identity =
            common::p(r0, t) - common::p(sol.rho_inf, t) - r0 * (common::mu(r0, t) - sol.mu_b);
        assert!((sol.curvature_integral - identity).abs() < 1e-9 * identity.abs().max(1e-3));
    }
}

#[test]
fn droplet_invariants() {
    let sol = droplet(1.05, 120.0);
    let rho = sol.profile.density();
    assert!(sol.rho_center > sol.rho_inf);
    assert!(sol.p_in > sol.p_out);
    assert!(sol.h_s > 0.0 && (sol.h_s - 2.0 / sol.r_div).abs() < 1e-15);
    assert!(pressure_jump(&sol) > 0.0);
    assert!(sol.slope[0].abs() < 1e-12);
    assert!((rho[rho.len() - 1] - sol.rho_inf).abs() <= TOL_BULK);
    assert!(sol.shoot_mismatch <= TOL_SHOOT);
    assert!(rho.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(sol.profile.geometry(), Geometry::Spherical);
    assert!((sol.r_max() - 120.0).abs() < 0.1);
}

#[test]
fn bubble_invariants() {
    let p = params(1.0, 0.9);
    let rho_inf = p.coexistence().unwrap().rho_l * 0.99;
    let sol = solve_droplet(p, rho_inf, 150.0, NucleusKind::Bubble).unwrap();
    assert!(sol.rho_center < sol.rho_inf);
    // the interior is the vapor, yet it is still at the higher pressure
    assert!(sol.p_in > sol.p_out);
    assert!(sol.h_s < 0.0);
    assert!(pressure_jump(&sol) < 0.0);
    let laplace = pressure_jump(&sol) / sol.h_s;
    let sigma = sigma_quadrature(p, &p.coexistence().unwrap()).unwrap();
    assert!(((laplace - sigma) / sigma).abs() < 0.05);
    assert!(sol.profile.density().windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn root_lambda_scaling_of_radial_solution() {
    let t = 0.9;
    let coex = params(1.0, t).coexistence().unwrap();
    let rho_inf = coex.rho_v * 1.05;
    let a = solve_droplet(params(1.0, t), rho_inf, 100.0, NucleusKind::Droplet).unwrap();
    let b = solve_droplet(params(4.0, t), rho_inf, 200.0, NucleusKind::Droplet).unwrap();
    let interp = b.profile.interpolant();
    for (r, rho) in a.profile.coordinate().iter().zip(a.profile.density()) {
        assert!((interp.density_at(2.0 * r) - rho).abs() < 1e-6, "r = {r}");
    }
    assert!((b.r_div / a.r_div - 2.0).abs() < 1e-6);
    assert!((pressure_jump(&b) - pressure_jump(&a)).abs() < 1e-9);
}

#[test]
fn dividing_rules_on_synthetic_sphere() {
    let (r0, w, h) = (30.0, 0.5, 0.05);
    let p = params(1.0, 0.9);
    let n = 1201;
    let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let rho: Vec<f64> = r
        .iter()
        .map(|x| 0.4 + 1.2 * 0.5 * (1.0 - ((x - r0) / w).tanh()))
        .collect();
    let prof = DensityProfile::new(r.clone(), rho, Geometry::Spherical, p).unwrap();
    for rule in [DividingRule::MaxSlope, DividingRule::Equimolar] {
        let got = dividing_radius_of_profile(&prof, rule).unwrap();
        assert!((got - r0).abs() < h, "{rule:?}: {got}");
    }

    let wavy: Vec<f64> = r.iter().map(|x| 1.0 + 0.1 * x.sin()).collect();
    let bad = DensityProfile::new(r.clone(), wavy, Geometry::Spherical, p).unwrap();
    assert!(matches!(
        dividing_radius_of_profile(&bad, DividingRule::MaxSlope),
        Err(CapillaryError::NonMonotone)
    ));
    let planar = DensityProfile::new(r, vec![1.0; n], Geometry::Planar, p).unwrap();
    assert!(matches!(
        dividing_radius_of_profile(&planar, DividingRule::Equimolar),
        Err(CapillaryError::Geometry { .. })
    ));
}

#[test]
fn dividing_rules_converge_for_large_droplets() {
    // the two rules differ by O(thickness^2 / R)
    let p = params(1.0, 0.9);
    let th = interface_thickness_quadrature(p, &p.coexistence().unwrap()).unwrap();
    let mut gaps = Vec::new();
    for &(factor, r_max) in &[(1.08, 120.0), (1.04, 160.0), (1.02, 250.0)] {
        let sol = droplet(factor, r_max);
        let eq = dividing_radius(&sol, DividingRule::Equimolar).unwrap();
        let ms = dividing_radius(&sol, DividingRule::MaxSlope).unwrap();
        assert!((eq - ms).abs() * ms < th * th, "R = {ms}: {eq}");
        gaps.push((eq - ms).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn no_droplet_at_or_beyond_the_branch_ends() {
    let p = params(1.0, 0.9);
    let coex = p.coexistence().unwrap();
    let (lo, hi) = EosModel::van_der_waals().spinodal(0.9).unwrap();
    for (rho, kind) in [
        (coex.rho_v, NucleusKind::Droplet),
        (coex.rho_v * 0.9, NucleusKind::Droplet),
        (lo + 1e-3, NucleusKind::Droplet),
        (coex.rho_l, NucleusKind::Bubble),
        (hi - 1e-3, NucleusKind::Bubble),
    ] {
        let err = solve_droplet(p, rho, 200.0, kind).unwrap_err();
        assert!(
            matches!(err, CapillaryError::NoSolution { .. }),
            "{rho}: {err:?}"
        );
    }
    assert!(solve_droplet(p, coex.rho_v * 1.05, -1.0, NucleusKind::Droplet).is_err());
}

#[test]
fn laplace_sweep_at_lower_temperature() {
    let p = params(1.0, 0.8);
    let coex = p.coexistence().unwrap();
    let th = interface_thickness_quadrature(p, &coex).unwrap();
    let targets: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|m| m * th).collect();
    let report = laplace_sweep(p, &targets, SweepOptions::default()).unwrap();
    assert!(report.failures.is_empty());
    assert!(report.sigma_fit_rel_error < 0.02);
    let errs: Vec<f64> = report.points.iter().map(|q| q.laplace_rel_error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(*errs.last().unwrap() <= 0.02);
    for q in &report.points {
        assert!((q.r_div - q.target).abs() <= 0.01 * q.target);
    }
    // curved-layer integral tends to the planar value
    let local: Vec<f64> = report
        .points
        .iter()
        .map(|q| (q.sigma_local_integral - report.sigma_planar).abs())
        .collect();
    assert!(local.windows(2).all(|w| w[1] < w[0]), "{local:?}");
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let p = params(1.0, 0.9);
    let th = interface_thickness_quadrature(p, &p.coexistence().unwrap()).unwrap();
    let targets: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|m| m * th).collect();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| laplace_sweep(p, &targets, SweepOptions::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn sweep_rejects_under_determined_input() {
    let p = params(1.0, 0.9);
    assert!(matches!(
        laplace_sweep(p, &[40.0], SweepOptions::default()),
        Err(CapillaryError::DegenerateFit(_))
    ));
    assert!(matches!(
        laplace_sweep(p, &[40.0, 41.0, 42.0, 43.0], SweepOptions::default()),
        Err(CapillaryError::InvalidParameter(_))
    ));
}

#[test]
fn far_field_and_radius_estimate() {
    let p = params(1.0, 0.9);
    let coex = p.coexistence().unwrap();
    let (lo, hi) = common::spinodal_scan(0.9, 100_000);
    let d = supersaturated_far_field(p, NucleusKind::Droplet, 0.25).unwrap();
    assert!((d - (coex.rho_v + 0.25 * (lo - coex.rho_v))).abs() < 1e-6);
    let b = supersaturated_far_field(p, NucleusKind::Bubble, 0.25).unwrap();
    assert!((b - (coex.rho_l - 0.25 * (coex.rho_l - hi))).abs() < 1e-6);
    assert!(supersaturated_far_field(p, NucleusKind::Droplet, 1.0).is_err());

    // the bulk estimate is the large-radius limit; it should land within a few percent
    let sigma = sigma_quadrature(p, &coex).unwrap();
    let th = interface_thickness_quadrature(p, &coex).unwrap();
    for kind in [NucleusKind::Droplet, NucleusKind::Bubble] {
        let rho_inf = supersaturated_far_field(p, kind, 0.05).unwrap();
        let est = laplace_radius_estimate(p, rho_inf, kind, sigma).unwrap();
        let sol = solve_droplet(p, rho_inf, est + 40.0 * th, kind).unwrap();
        assert!(
            (sol.r_div / est - 1.0).abs() < 0.05,
            "{kind:?}: {} vs {est}",
            sol.r_div
        );
    }
    assert!(laplace_radius_estimate(p, coex.rho_v, NucleusKind::Droplet, sigma).is_err());
    assert!(laplace_radius_estimate(p, 0.5 * (lo + hi), NucleusKind::Bubble, sigma).is_err());
}
