//! Spherical droplets and bubbles of the square-gradient fluid.
//!
//! A nucleus in equilibrium with a metastable far field `rho_inf` solves
//!
//! ```text
//! lambda (rho'' + (2 / r) rho') = mu(rho) - mu(rho_inf),   rho'(0) = 0,   rho(inf) = rho_inf.
//! ```
//!
//! The solution is a saddle of the grand potential and is found by shooting from the
//! center with bisection on the overshoot / undershoot dichotomy. Large nuclei have a
//! core that is exponentially close to the bulk phase at the same chemical potential, so
//! the shooting parameter is the radius at which the linearized core solution
//! `y = A sinh(k r) / (k r)` reaches a fixed small deviation, rather than the center
//! density itself. Far from the interface the trajectory is continued with the
//! linearized decaying tail `(rho - rho_inf) ~ exp(-k r) / r`.
//!
//! Curvature follows `H_s = -div n` with `n` pointing towards increasing density:
//! `H_s = 2 / R` for a liquid droplet and `-2 / R` for a vapor bubble, and the pressure
//! jump is reported as `P_l - P_v`, so Laplace's law reads `P_l - P_v = sigma H_s` for
//! both kinds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::{bisect, CoexistenceState, EosModel};
use crate::error::{CapillaryError, Result};
use crate::interp::hermite;
use crate::ode::{integrate, Flow, Step, StepControl};
use crate::planar::{
    index_derivative, interface_thickness_quadrature, sigma_quadrature, CapillarityParams,
    DensityProfile, Geometry,
};
use crate::quadrature::simpson_samples;

/// Far-field mismatch tolerance `|rho(r_max) - rho_inf|`.
pub const TOL_SHOOT: f64 = 1e-9;

/// Default far-field extent beyond the nucleus, in planar interface thicknesses.
pub const DEFAULT_TAIL_THICKNESSES: f64 = 40.0;

/// Deviation from the core bulk density at which shooting trajectories are launched.
const LAUNCH_DEVIATION: f64 = 1e-9;

/// Relative agreement of the two bracketing trajectories required at the matching radius.
const MATCH_AGREEMENT: f64 = 1e-3;

/// Largest acceptable far-field deviation at the matching radius, relative to the
/// density contrast.
const MATCH_LEVEL_MAX: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NucleusKind {
    /// Liquid droplet in supersaturated vapor.
    Droplet,
    /// Vapor bubble in superheated liquid.
    Bubble,
}

impl NucleusKind {
    pub fn name(self) -> &'static str {
        match self {
            NucleusKind::Droplet => "droplet",
            NucleusKind::Bubble => "bubble",
        }
    }

    /// Sign of `H_s` for this kind.
    pub fn curvature_sign(self) -> f64 {
        match self {
            NucleusKind::Droplet => 1.0,
            NucleusKind::Bubble => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DividingRule {
    /// Radius of steepest density gradient.
    #[default]
    MaxSlope,
    /// Radius of the equal-mass step profile.
    Equimolar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Output grid spacing; defaults to a tenth of the shortest decay length.
    pub grid_spacing: Option<f64>,
    pub rule: DividingRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grid_spacing: None,
            rule: DividingRule::MaxSlope,
        }
    }
}

/// Equilibrium nucleus with its bulk pressures and curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletSolution {
    pub profile: DensityProfile,
    /// `d rho / dr` at every profile node.
    pub slope: Vec<f64>,
    pub rho_center: f64,
    pub rho_inf: f64,
    /// Chemical potential `mu(rho_inf)` shared by the whole nucleus.
    pub mu_b: f64,
    /// Bulk density at `mu_b` on the branch of the core phase.
    pub rho_core_bulk: f64,
    pub r_div: f64,
    /// Signed sum of principal curvatures at `r_div`.
    pub h_s: f64,
    pub p_in: f64,
    pub p_out: f64,
    pub kind: NucleusKind,
    /// `lambda int rho'^2 dr` across the curved layer.
    pub sigma_local_integral: f64,
    /// `lambda int (2 / r) rho'^2 dr`, the exact pressure balance of the curved layer.
    pub curvature_integral: f64,
    /// `|rho(r_max) - rho_inf|`.
    pub shoot_mismatch: f64,
    /// Radius beyond which the analytic far-field tail is used.
    pub match_radius: f64,
    /// `|rho - rho_inf|` at the matching radius.
    pub match_level: f64,
    /// Converged shooting parameter (launch radius; negative values start at the center
    /// with a larger core deviation).
    pub launch: f64,
}

impl DropletSolution {
    pub fn r_max(&self) -> f64 {
        let r = self.profile.coordinate();
        r[r.len() - 1]
    }
}

/// Radial problem at fixed far-field density.
#[derive(Debug, Clone, Copy)]
struct Radial {
    eos: EosModel,
    t: f64,
    lambda: f64,
    /// +1 when the core is denser than the far field.
    sign: f64,
    mu_b: f64,
    rho_core: f64,
    /// `mu(rho_core) - mu_b`, rounding level.
    core_offset: f64,
    k_core: f64,
    k_far: f64,
    /// Deviation from the core density at which the far field is reached.
    y_inf: f64,
    /// Deviation of the unstable root of `mu = mu_b`.
    y_unstable: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Overshoot,
    Undershoot,
    Reached,
}

/// Output grid filled while integrating; state is `[y, y', int y'^2, int 2 y'^2 / r]`.
#[derive(Debug, Clone)]
struct Recorder {
    h: f64,
    states: Vec<[f64; 4]>,
    capacity: usize,
}

impl Recorder {
    fn new(h: f64, n: usize) -> Self {
        Self {
            h,
            states: Vec::with_capacity(n),
            capacity: n,
        }
    }

    fn next_radius(&self) -> f64 {
        self.h * self.states.len() as f64
    }

    fn push_step(&mut self, step: &Step<4>) {
        while self.states.len() < self.capacity {
            let r = self.next_radius();
            if r > step.t1 {
                break;
            }
            let mut s = [0.0; 4];
            for (c, v) in s.iter_mut().enumerate() {
                *v = hermite(
                    step.t0, step.t1, step.y0[c], step.y1[c], step.f0[c], step.f1[c], r,
                )
                .0;
            }
            self.states.push(s);
        }
    }
}

/// `ln(sinh(x) / x)` without overflow.
fn ln_sinhc(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0
    } else if x < 20.0 {
        (x.sinh() / x).ln()
    } else {
        x - std::f64::consts::LN_2 - x.ln() + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// `d/dr ln(sinh(k r) / (k r))`.
fn dln_sinhc(k: f64, r: f64) -> f64 {
    let x = k * r;
    if x < 1e-4 {
        k * x / 3.0
    } else {
        k / x.tanh() - 1.0 / r
    }
}

impl Radial {
    fn new(
        params: CapillarityParams,
        rho_inf: f64,
        kind: NucleusKind,
    ) -> Result<(Self, CoexistenceState)> {
        let eos = EosModel::van_der_waals();
        let t = params.temperature;
        let coex = params.coexistence()?;
        let (lo, hi) = eos.spinodal(t)?;
        let kind_name = kind.name();
        match kind {
            NucleusKind::Droplet => {
                if !(rho_inf > coex.rho_v) {
                    return Err(CapillaryError::NoSolution {
                        kind: kind_name,
                        reason: format!(
                            "far-field density {rho_inf} is not supersaturated (rho_v = {}); the critical radius is unbounded",
                            coex.rho_v
                        ),
                    });
                }
                if !(rho_inf < lo) {
                    return Err(CapillaryError::NoSolution {
                        kind: kind_name,
                        reason: format!(
                            "far-field density {rho_inf} lies beyond the vapor spinodal {lo}"
                        ),
                    });
                }
            }
            NucleusKind::Bubble => {
                if !(rho_inf < coex.rho_l) {
                    return Err(CapillaryError::NoSolution {
                        kind: kind_name,
                        reason: format!(
                            "far-field density {rho_inf} is not superheated (rho_l = {}); the critical radius is unbounded",
                            coex.rho_l
                        ),
                    });
                }
                if !(rho_inf > hi) {
                    return Err(CapillaryError::NoSolution {
                        kind: kind_name,
                        reason: format!(
                            "far-field density {rho_inf} lies beyond the liquid spinodal {hi}"
                        ),
                    });
                }
            }
        }
        let mu_b = eos.mu(rho_inf, t);
        let rho_unstable = bisect(|r| eos.mu(r, t) - mu_b, lo, hi, 200);
        let (rho_core, sign) = match kind {
            NucleusKind::Droplet => (bisect(|r| eos.mu(r, t) - mu_b, hi, 3.0, 200), 1.0),
            NucleusKind::Bubble => (bisect(|r| eos.mu(r, t) - mu_b, 0.0, lo, 200), -1.0),
        };
        let lambda = params.lambda;
        let radial = Self {
            eos,
            t,
            lambda,
            sign,
            mu_b,
            rho_core,
            core_offset: eos.mu(rho_core, t) - mu_b,
            k_core: (eos.dmu(rho_core, t) / lambda).sqrt(),
            k_far: (eos.dmu(rho_inf, t) / lambda).sqrt(),
            y_inf: (rho_core - rho_inf).abs(),
            y_unstable: (rho_core - rho_unstable).abs(),
        };
        Ok((radial, coex))
    }

    #[inline]
    fn density(&self, y: f64) -> f64 {
        self.rho_core - self.sign * y
    }

    /// `y'' + 2 y' / r` required by the field equation at deviation `y`.
    #[inline]
    fn forcing(&self, y: f64) -> f64 {
        let dmu = if y < 1e-4 {
            self.eos.mu_increment(self.rho_core, -self.sign * y, self.t) + self.core_offset
        } else {
            self.eos.mu(self.density(y), self.t) - self.mu_b
        };
        -self.sign * dmu / self.lambda
    }

    #[inline]
    fn rhs(&self, r: f64, s: &[f64; 4]) -> [f64; 4] {
        let g = self.forcing(s[0]);
        let yp = s[1];
        if r == 0.0 {
            [yp, g / 3.0, yp * yp, 0.0]
        } else {
            [yp, g - 2.0 * yp / r, yp * yp, 2.0 * yp * yp / r]
        }
    }

    fn decay_length(&self) -> f64 {
        1.0 / self.k_core.max(self.k_far)
    }

    /// Smallest shooting parameter: a center deviation just short of the unstable root.
    fn min_parameter(&self) -> f64 {
        -((self.y_unstable * (1.0 - 1e-9)) / LAUNCH_DEVIATION).ln() / self.k_core
    }

    /// Launch radius and state for shooting parameter `p`.
    fn launch(&self, p: f64) -> (f64, [f64; 4]) {
        if p >= 0.0 {
            let y = LAUNCH_DEVIATION;
            (p, [y, y * dln_sinhc(self.k_core, p), 0.0, 0.0])
        } else {
            let y0 = LAUNCH_DEVIATION * (-self.k_core * p).exp();
            (0.0, [y0.min(self.y_unstable), 0.0, 0.0, 0.0])
        }
    }

    fn control(&self) -> StepControl {
        StepControl {
            rtol: 1e-11,
            atol: 1e-15,
            h_init: 1e-3 * self.decay_length(),
            h_max: 0.2 * self.decay_length(),
            max_steps: 5_000_000,
        }
    }

    fn shoot(&self, p: f64, r_max: f64, mut recorder: Option<&mut Recorder>) -> Result<Outcome> {
        let (r0, s0) = self.launch(p);
        if let Some(rec) = recorder.as_deref_mut() {
            // analytic linear core before the launch radius
            let ln_launch = ln_sinhc(self.k_core * r0);
            while rec.states.len() < rec.capacity && rec.next_radius() < r0 {
                let r = rec.next_radius();
                let y = s0[0] * (ln_sinhc(self.k_core * r) - ln_launch).exp();
                rec.states
                    .push([y, y * dln_sinhc(self.k_core, r), 0.0, 0.0]);
            }
        }
        let mut outcome = Outcome::Reached;
        let y_inf = self.y_inf;
        let end = integrate(
            |r, s| self.rhs(r, s),
            r0,
            s0,
            r_max,
            self.control(),
            |step| {
                if let Some(rec) = recorder.as_deref_mut() {
                    rec.push_step(step);
                }
                if step.y1[0] >= y_inf {
                    outcome = Outcome::Overshoot;
                    Flow::Stop
                } else if step.y1[1] <= 0.0 && step.t1 > 0.0 {
                    outcome = Outcome::Undershoot;
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            },
        )?;
        let _ = end;
        Ok(outcome)
    }
}

/// Equilibrium droplet (or bubble) in contact with the far-field density `rho_inf`,
/// on `[0, r_max]`.
pub fn solve_droplet(
    params: CapillarityParams,
    rho_inf: f64,
    r_max: f64,
    kind: NucleusKind,
) -> Result<DropletSolution> {
    solve_droplet_with(params, rho_inf, r_max, kind, SolveOptions::default())
}

pub fn solve_droplet_with(
    params: CapillarityParams,
    rho_inf: f64,
    r_max: f64,
    kind: NucleusKind,
    options: SolveOptions,
) -> Result<DropletSolution> {
    let (radial, _coex) = Radial::new(params, rho_inf, kind)?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(CapillaryError::domain("r_max", r_max, "(0, inf)"));
    }
    let xi = radial.decay_length();
    if r_max < 20.0 * xi {
        return Err(CapillaryError::InvalidParameter(format!(
            "r_max = {r_max} is too small for decay length {xi}"
        )));
    }
    let h = options.grid_spacing.unwrap_or(0.1 * xi);
    if !(h > 0.0 && h < 0.05 * r_max) {
        return Err(CapillaryError::domain("grid spacing", h, "(0, r_max / 20)"));
    }

    // bracket: undershoot at the smallest parameter; launching at the domain edge never
    // undershoots
    let mut p_lo = radial.min_parameter();
    let mut p_hi = r_max;
    if radial.shoot(p_lo, r_max, None)? != Outcome::Undershoot {
        return Err(CapillaryError::Bracket(format!(
            "trajectory launched next to the unstable density {} does not undershoot",
            radial.density(radial.y_unstable)
        )));
    }
    let mut hi_outcome = Outcome::Reached;
    for _ in 0..400 {
        let mid = 0.5 * (p_lo + p_hi);
        if mid <= p_lo || mid >= p_hi {
            break;
        }
        match radial.shoot(mid, r_max, None)? {
            Outcome::Undershoot => p_lo = mid,
            o => {
                p_hi = mid;
                hi_outcome = o;
            }
        }
    }
    if hi_outcome != Outcome::Overshoot {
        return Err(CapillaryError::NoSolution {
            kind: kind.name(),
            reason: format!("the critical nucleus does not fit within r_max = {r_max}"),
        });
    }

    let n = (r_max / h).floor() as usize + 1;
    let mut rec_lo = Recorder::new(h, n);
    let mut rec_hi = Recorder::new(h, n);
    radial.shoot(p_lo, r_max, Some(&mut rec_lo))?;
    radial.shoot(p_hi, r_max, Some(&mut rec_hi))?;
    let common = rec_lo.states.len().min(rec_hi.states.len());
    let y_inf = radial.y_inf;

    // last node where both trajectories agree relative to the remaining far-field gap
    let mut j_m = None;
    for j in 1..common {
        let (a, b) = (rec_lo.states[j], rec_hi.states[j]);
        let gap = y_inf - 0.5 * (a[0] + b[0]);
        let agree = (a[0] - b[0]).abs() <= MATCH_AGREEMENT * gap;
        if gap > 0.0 && agree && a[1] > 0.0 && b[1] > 0.0 {
            j_m = Some(j);
        } else if j_m.is_some() {
            break;
        }
    }
    let j_m =
        j_m.ok_or_else(|| CapillaryError::Bracket("bracketing trajectories never agree".into()))?;
    let match_level = y_inf - 0.5 * (rec_lo.states[j_m][0] + rec_hi.states[j_m][0]);
    if match_level > MATCH_LEVEL_MAX * y_inf {
        return Err(CapillaryError::Bracket(format!(
            "shooting could not resolve the separatrix: far-field gap {match_level:e} at r = {}",
            j_m as f64 * h
        )));
    }

    let r_m = j_m as f64 * h;
    let mut y = Vec::with_capacity(n);
    let mut yp = Vec::with_capacity(n);
    for j in 0..=j_m {
        let (a, b) = (rec_lo.states[j], rec_hi.states[j]);
        y.push(0.5 * (a[0] + b[0]));
        yp.push(0.5 * (a[1] + b[1]));
    }
    let (i0, i2) = {
        let (a, b) = (rec_lo.states[j_m], rec_hi.states[j_m]);
        (0.5 * (a[2] + b[2]), 0.5 * (a[3] + b[3]))
    };
    for j in j_m + 1..n {
        let r = j as f64 * h;
        let d = match_level * (r_m / r) * (-radial.k_far * (r - r_m)).exp();
        y.push(y_inf - d);
        yp.push(d * (radial.k_far + 1.0 / r));
    }

    let r: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let rho: Vec<f64> = y.iter().map(|v| radial.density(*v)).collect();
    let slope: Vec<f64> = yp.iter().map(|v| -radial.sign * v).collect();
    let profile = DensityProfile::new(r, rho, Geometry::Spherical, params)?;

    let rho_center = profile.density()[0];
    let rho_end = profile.density()[n - 1];
    let eos = radial.eos;
    let p_in = eos.p(rho_center, radial.t);
    let p_out = eos.p(rho_end, radial.t);
    let r_div = dividing_radius_samples(
        profile.coordinate(),
        profile.density(),
        &slope,
        options.rule,
    )?;
    Ok(DropletSolution {
        h_s: kind.curvature_sign() * 2.0 / r_div,
        slope,
        rho_center,
        rho_inf,
        mu_b: radial.mu_b,
        rho_core_bulk: radial.rho_core,
        r_div,
        p_in,
        p_out,
        kind,
        sigma_local_integral: params.lambda * i0,
        curvature_integral: params.lambda * i2,
        shoot_mismatch: (rho_end - rho_inf).abs(),
        match_radius: r_m,
        match_level,
        launch: 0.5 * (p_lo + p_hi),
        profile,
    })
}

/// Dividing-surface radius of a converged nucleus.
pub fn dividing_radius(sol: &DropletSolution, rule: DividingRule) -> Result<f64> {
    dividing_radius_samples(
        sol.profile.coordinate(),
        sol.profile.density(),
        &sol.slope,
        rule,
    )
}

/// Dividing-surface radius of any spherical profile; slopes come from finite differences.
pub fn dividing_radius_of_profile(profile: &DensityProfile, rule: DividingRule) -> Result<f64> {
    if profile.geometry() != Geometry::Spherical {
        return Err(CapillaryError::Geometry {
            expected: "spherical",
            found: profile.geometry().name(),
        });
    }
    let ru = index_derivative(profile.density());
    let xu = index_derivative(profile.coordinate());
    let slope: Vec<f64> = ru.iter().zip(&xu).map(|(a, b)| a / b).collect();
    dividing_radius_samples(profile.coordinate(), profile.density(), &slope, rule)
}

fn dividing_radius_samples(
    r: &[f64],
    rho: &[f64],
    slope: &[f64],
    rule: DividingRule,
) -> Result<f64> {
    let rising = rho.windows(2).all(|w| w[1] >= w[0]);
    let falling = rho.windows(2).all(|w| w[1] <= w[0]);
    if !(rising || falling) || rho[0] == rho[rho.len() - 1] {
        return Err(CapillaryError::NonMonotone);
    }
    match rule {
        DividingRule::MaxSlope => {
            let n = slope.len();
            let i = (0..n)
                .max_by(|a, b| slope[*a].abs().total_cmp(&slope[*b].abs()))
                .unwrap_or(0);
            if i == 0 || i + 1 >= n {
                return Ok(r[i]);
            }
            // vertex of the parabola through the three samples around the peak
            let (f0, f1, f2) = (slope[i - 1].abs(), slope[i].abs(), slope[i + 1].abs());
            let (x0, x1, x2) = (r[i - 1], r[i], r[i + 1]);
            let d01 = (f1 - f0) / (x1 - x0);
            let d12 = (f2 - f1) / (x2 - x1);
            let curv = (d12 - d01) / (x2 - x0);
            if curv >= 0.0 {
                return Ok(x1);
            }
            let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
            Ok(vertex.clamp(x0, x2))
        }
        DividingRule::Equimolar => {
            let rho_in = rho[0];
            let rho_out = rho[rho.len() - 1];
            let f: Vec<f64> = r
                .iter()
                .zip(rho)
                .map(|(x, d)| (d - rho_out) * x * x)
                .collect();
            let excess = simpson_samples(r, &f);
            Ok((3.0 * excess / (rho_in - rho_out)).cbrt())
        }
    }
}

/// `P_l - P_v` across the nucleus (positive for droplets, negative for bubbles).
pub fn pressure_jump(sol: &DropletSolution) -> f64 {
    match sol.kind {
        NucleusKind::Droplet => sol.p_in - sol.p_out,
        NucleusKind::Bubble => sol.p_out - sol.p_in,
    }
}

/// Pointwise residual `lambda (rho'' + 2 rho' / r) - (mu(rho) - mu_b)` on the interior
/// nodes, with second-order central differences.
pub fn radial_residuals(sol: &DropletSolution) -> Vec<f64> {
    let eos = EosModel::van_der_waals();
    let params = sol.profile.params();
    let r = sol.profile.coordinate();
    let rho = sol.profile.density();
    (1..r.len() - 1)
        .map(|i| {
            let h0 = r[i] - r[i - 1];
            let h1 = r[i + 1] - r[i];
            let d2 = 2.0 * (h0 * rho[i + 1] - (h0 + h1) * rho[i] + h1 * rho[i - 1])
                / (h0 * h1 * (h0 + h1));
            let d1 = (rho[i + 1] - rho[i - 1]) / (h0 + h1);
            params.lambda * (d2 + 2.0 * d1 / r[i]) - (eos.mu(rho[i], params.temperature) - sol.mu_b)
        })
        .collect()
}

/// Residual of the integrated mechanical balance along the radius,
/// `P(rho(r)) - P_inf - lambda [rho lap(rho) - rho'^2 / 2] - lambda int_r^inf (2 / s) rho'^2 ds`,
/// with `lambda lap(rho) = mu(rho) - mu_b` from the field equation.
pub fn mechanical_balance_residuals(sol: &DropletSolution) -> Vec<f64> {
    let eos = EosModel::van_der_waals();
    let params = sol.profile.params();
    let t = params.temperature;
    let r = sol.profile.coordinate();
    let rho = sol.profile.density();
    let n = r.len();
    let f: Vec<f64> = (0..n)
        .map(|i| {
            if r[i] > 0.0 {
                2.0 * sol.slope[i] * sol.slope[i] / r[i]
            } else {
                0.0
            }
        })
        .collect();
    // cumulative integral from the far end inwards, trapezoid with end correction
    let mut tail = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let h = r[i + 1] - r[i];
        let (fp0, fp1) = (
            if i > 0 {
                (f[i + 1] - f[i - 1]) / (r[i + 1] - r[i - 1])
            } else {
                (f[1] - f[0]) / h
            },
            if i + 2 < n {
                (f[i + 2] - f[i]) / (r[i + 2] - r[i])
            } else {
                (f[i + 1] - f[i]) / h
            },
        );
        tail[i] = tail[i + 1] + 0.5 * h * (f[i] + f[i + 1]) + h * h * (fp0 - fp1) / 12.0;
    }
    let p_inf = eos.p(rho[n - 1], t);
    (0..n)
        .map(|i| {
            let lap_term = rho[i] * (eos.mu(rho[i], t) - sol.mu_b);
            eos.p(rho[i], t)
                - p_inf
                - (lap_term - 0.5 * params.lambda * sol.slope[i] * sol.slope[i])
                - params.lambda * tail[i]
        })
        .collect()
}

/// Laplace-sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub kind: NucleusKind,
    pub rule: DividingRule,
    /// Far-field extent beyond each target radius, in planar thicknesses.
    pub tail_thicknesses: f64,
    /// Relative tolerance on hitting each target radius.
    pub radius_tol: f64,
    pub grid_spacing: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            kind: NucleusKind::Droplet,
            rule: DividingRule::MaxSlope,
            tail_thicknesses: DEFAULT_TAIL_THICKNESSES,
            radius_tol: 0.01,
            grid_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub target: f64,
    pub r_div: f64,
    pub h_s: f64,
    pub p_in: f64,
    pub p_out: f64,
    /// `P_l - P_v`.
    pub delta_p: f64,
    pub rho_inf: f64,
    pub sigma_local_integral: f64,
    pub curvature_integral: f64,
    /// `|delta_p / H_s - sigma_planar| / sigma_planar`.
    pub laplace_rel_error: f64,
    /// `delta_p - sigma_fit H_s`.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub target: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub kind: NucleusKind,
    pub temperature: f64,
    pub lambda: f64,
    pub rule: DividingRule,
    pub sigma_planar: f64,
    pub planar_thickness: f64,
    /// Least-squares slope of `delta_p` against `H_s` through the origin.
    pub sigma_fit: f64,
    pub sigma_fit_rel_error: f64,
    pub points: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
}

/// Far-field density for supersaturation fraction `q` in `(0, 1)`, measured from
/// coexistence towards the spinodal.
fn far_field(coex: &CoexistenceState, spinodal: (f64, f64), kind: NucleusKind, q: f64) -> f64 {
    match kind {
        NucleusKind::Droplet => coex.rho_v + q * (spinodal.0 - coex.rho_v),
        NucleusKind::Bubble => coex.rho_l - q * (coex.rho_l - spinodal.1),
    }
}

/// Pressure jump of the bulk phases at the chemical potential of far field `rho_inf`.
fn bulk_jump(t: f64, rho_inf: f64, kind: NucleusKind, spinodal: (f64, f64)) -> f64 {
    let eos = EosModel::van_der_waals();
    let mu_b = eos.mu(rho_inf, t);
    match kind {
        NucleusKind::Droplet => {
            let core = bisect(|r| eos.mu(r, t) - mu_b, spinodal.1, 3.0, 200);
            eos.p(core, t) - eos.p(rho_inf, t)
        }
        NucleusKind::Bubble => {
            let core = bisect(|r| eos.mu(r, t) - mu_b, 0.0, spinodal.0, 200);
            eos.p(core, t) - eos.p(rho_inf, t)
        }
    }
}

/// Far-field density a fraction `q` in `(0, 1)` of the way from coexistence to the
/// spinodal on the metastable branch of the outer phase.
pub fn supersaturated_far_field(
    params: CapillarityParams,
    kind: NucleusKind,
    q: f64,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(CapillaryError::domain("supersaturation", q, "(0, 1)"));
    }
    let coex = params.coexistence()?;
    let spin = EosModel::van_der_waals().spinodal(params.temperature)?;
    Ok(far_field(&coex, spin, kind, q))
}

/// Bulk Laplace estimate `2 sigma / |P_core - P_inf|` of the radius of the nucleus in
/// equilibrium with far field `rho_inf`.
pub fn laplace_radius_estimate(
    params: CapillarityParams,
    rho_inf: f64,
    kind: NucleusKind,
    sigma_planar: f64,
) -> Result<f64> {
    let t = params.temperature;
    let spin = EosModel::van_der_waals().spinodal(t)?;
    let coex = params.coexistence()?;
    let metastable = match kind {
        NucleusKind::Droplet => rho_inf > coex.rho_v && rho_inf < spin.0,
        NucleusKind::Bubble => rho_inf < coex.rho_l && rho_inf > spin.1,
    };
    if !metastable {
        return Err(CapillaryError::NoSolution {
            kind: kind.name(),
            reason: format!("far field {rho_inf} is not on the metastable branch"),
        });
    }
    Ok(2.0 * sigma_planar / bulk_jump(t, rho_inf, kind, spin).abs())
}

/// Solves for the nucleus whose dividing radius hits `target` within `options.radius_tol`.
pub fn solve_for_radius(
    params: CapillarityParams,
    target: f64,
    sigma_planar: f64,
    thickness: f64,
    options: &SweepOptions,
) -> Result<DropletSolution> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(CapillaryError::domain("target radius", target, "(0, inf)"));
    }
    let eos = EosModel::van_der_waals();
    let t = params.temperature;
    let coex = params.coexistence()?;
    let spin = eos.spinodal(t)?;
    let kind = options.kind;
    let r_max = target + options.tail_thicknesses * thickness;
    let solve_opts = SolveOptions {
        grid_spacing: options.grid_spacing,
        rule: options.rule,
    };
    let solve = |q: f64| {
        solve_droplet_with(
            params,
            far_field(&coex, spin, kind, q),
            r_max,
            kind,
            solve_opts,
        )
    };

    // Laplace estimate |P_core - P_inf| = 2 sigma / R fixes the starting supersaturation
    let want = 2.0 * sigma_planar / target;
    let q_est = bisect(
        |q| bulk_jump(t, far_field(&coex, spin, kind, q), kind, spin).abs() - want,
        0.0,
        1.0,
        200,
    );

    // radius decreases with supersaturation; search in ln q
    let mut lo: Option<(f64, f64)> = None; // (ln q, R) with R > target
    let mut hi: Option<(f64, f64)> = None; // (ln q, R) with R < target
    let mut best: Option<DropletSolution> = None;
    let mut lnq = q_est.ln();
    let mut last_err = None;
    for _ in 0..60 {
        let q = lnq.exp().min(0.999);
        match solve(q) {
            Ok(sol) => {
                let r = sol.r_div;
                if (r - target).abs() <= options.radius_tol * target {
                    return Ok(sol);
                }
                if r > target {
                    lo = Some((lnq, r));
                } else {
                    hi = Some((lnq, r));
                }
                if best
                    .as_ref()
                    .is_none_or(|b| (b.r_div - target).abs() > (r - target).abs())
                {
                    best = Some(sol);
                }
            }
            Err(CapillaryError::NoSolution { .. }) => {
                // too little supersaturation: the nucleus does not fit in the domain
                lo = Some((lnq, f64::INFINITY));
            }
            Err(e) => {
                last_err = Some(e);
                hi = Some((lnq, 0.0));
            }
        }
        lnq = match (lo, hi) {
            (Some((a, ra)), Some((b, rb))) => {
                if ra.is_finite() && rb > 0.0 {
                    // secant on ln R against ln q, safeguarded to the inner half of the bracket
                    let s = (target.ln() - ra.ln()) / (rb.ln() - ra.ln());
                    a + s.clamp(0.1, 0.9) * (b - a)
                } else {
                    0.5 * (a + b)
                }
            }
            (Some((a, _)), None) => a + 0.5,
            (None, Some((b, _))) => b - 0.5,
            (None, None) => lnq,
        };
    }
    Err(last_err.unwrap_or_else(|| CapillaryError::NoConvergence {
        what: "radius targeting",
        iterations: 60,
        residuals: vec![best.map_or(f64::NAN, |b| b.r_div - target)],
    }))
}

/// Laplace's law across a set of target radii: for each target the far-field density is
/// tuned until the dividing radius matches, then `delta_p` is fitted against `H_s`.
pub fn laplace_sweep(
    params: CapillarityParams,
    targets: &[f64],
    options: SweepOptions,
) -> Result<LaplaceReport> {
    if targets.len() < 3 {
        return Err(CapillaryError::DegenerateFit(format!(
            "{} target radii cannot determine a fit",
            targets.len()
        )));
    }
    let min = targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if targets.len() < 4 || !(max >= 8.0 * min) || !(min > 0.0) {
        return Err(CapillaryError::InvalidParameter(format!(
            "a Laplace sweep needs at least 4 positive radii spanning a factor of 8 (got {} spanning {})",
            targets.len(),
            max / min
        )));
    }
    let coex = params.coexistence()?;
    let sigma_planar = sigma_quadrature(params, &coex)?;
    let thickness = interface_thickness_quadrature(params, &coex)?;
    let solutions: Vec<Result<DropletSolution>> = targets
        .par_iter()
        .map(|&target| solve_for_radius(params, target, sigma_planar, thickness, &options))
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (target, res) in targets.iter().zip(solutions) {
        match res {
            Ok(sol) => {
                let delta_p = pressure_jump(&sol);
                points.push(SweepPoint {
                    target: *target,
                    r_div: sol.r_div,
                    h_s: sol.h_s,
                    p_in: sol.p_in,
                    p_out: sol.p_out,
                    delta_p,
                    rho_inf: sol.rho_inf,
                    sigma_local_integral: sol.sigma_local_integral,
                    curvature_integral: sol.curvature_integral,
                    laplace_rel_error: (delta_p / sol.h_s - sigma_planar).abs() / sigma_planar,
                    fit_residual: 0.0,
                });
            }
            Err(e) => failures.push(SweepFailure {
                target: *target,
                error: e.to_string(),
            }),
        }
    }
    if points.len() < 3 {
        return Err(CapillaryError::DegenerateFit(format!(
            "only {} of {} radii converged",
            points.len(),
            targets.len()
        )));
    }
    let sigma_fit = fit_through_origin(
        &points.iter().map(|p| p.h_s).collect::<Vec<_>>(),
        &points.iter().map(|p| p.delta_p).collect::<Vec<_>>(),
    )?;
    for p in &mut points {
        p.fit_residual = p.delta_p - sigma_fit * p.h_s;
    }
    Ok(LaplaceReport {
        kind: options.kind,
        temperature: params.temperature,
        lambda: params.lambda,
        rule: options.rule,
        sigma_planar,
        planar_thickness: thickness,
        sigma_fit,
        sigma_fit_rel_error: (sigma_fit - sigma_planar).abs() / sigma_planar,
        points,
        failures,
    })
}

/// Least-squares slope of `y = s x` without intercept.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(CapillaryError::DegenerateFit(
            "mismatched or empty samples".into(),
        ));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(CapillaryError::DegenerateFit(
            "all abscissae are zero".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(sxy / sxx)
}
