//! Zero-thickness interfaces whose capillary energy is linear in `|grad rho|`.
//!
//! The surface tension of such an interface is `sigma = (mu / 2)(rho_l^2 - rho_v^2)`.
//! Smeared versions of the density jump are used to check that `rho |grad rho|`
//! concentrates on the limit surface with weight `[rho^2 / 2]`.
//!
//! Sign conventions: [`pressure_jump_sharp`] returns `P_l - P_v = sigma H_s`, the same
//! orientation as the diffuse Laplace law. Integrating the normal equilibrium equation
//! `dP/dx3 + mu rho H_s drho/dx3 = 0` across the layer instead yields
//! `P_v - P_l = (mu / 2)(rho_l^2 - rho_v^2) H_s`; [`normal_ode_jump`] reports that
//! integral as written. The two statements differ by a sign.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CapillaryError, Result};
use crate::planar::{DensityProfile, Geometry};
use crate::quadrature::adaptive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpModel {
    /// First-gradient energy coefficient.
    pub mu: f64,
    pub rho_v: f64,
    pub rho_l: f64,
}

impl SharpModel {
    pub fn new(mu: f64, rho_v: f64, rho_l: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CapillaryError::domain("mu", mu, "(0, inf)"));
        }
        check_jump(rho_v, rho_l)?;
        Ok(Self { mu, rho_v, rho_l })
    }

    /// Model whose surface tension equals `sigma` for the given bulks.
    pub fn calibrated(sigma: f64, rho_v: f64, rho_l: f64) -> Result<Self> {
        Self::new(calibrate_mu(sigma, rho_v, rho_l)?, rho_v, rho_l)
    }

    /// Jump of `rho^2 / 2` across the interface.
    pub fn half_square_jump(&self) -> f64 {
        0.5 * (self.rho_l * self.rho_l - self.rho_v * self.rho_v)
    }
}

fn check_jump(rho_v: f64, rho_l: f64) -> Result<()> {
    if !(rho_v >= 0.0 && rho_l > rho_v && rho_l.is_finite()) {
        return Err(CapillaryError::DegenerateJump { rho_v, rho_l });
    }
    Ok(())
}

/// `sigma = (mu / 2)(rho_l^2 - rho_v^2)`.
pub fn sigma_sharp(model: &SharpModel) -> f64 {
    model.mu * model.half_square_jump()
}

/// `mu = 2 sigma / (rho_l^2 - rho_v^2)`.
pub fn calibrate_mu(sigma_target: f64, rho_v: f64, rho_l: f64) -> Result<f64> {
    if !(sigma_target > 0.0 && sigma_target.is_finite()) {
        return Err(CapillaryError::domain("sigma", sigma_target, "(0, inf)"));
    }
    if !(rho_l > rho_v) {
        return Err(CapillaryError::DegenerateJump { rho_v, rho_l });
    }
    Ok(2.0 * sigma_target / (rho_l * rho_l - rho_v * rho_v))
}

/// Laplace law of the sharp model, `P_l - P_v = sigma H_s`.
pub fn pressure_jump_sharp(model: &SharpModel, h_s: f64) -> f64 {
    sigma_sharp(model) * h_s
}

fn check_fields(profile: &DensityProfile, fields: &[&[f64]]) -> Result<()> {
    for f in fields {
        if f.len() != profile.len() {
            return Err(CapillaryError::InvalidParameter(format!(
                "field length {} does not match profile length {}",
                f.len(),
                profile.len()
            )));
        }
    }
    Ok(())
}

fn check_bulks(profile: &DensityProfile, model: &SharpModel) -> Result<()> {
    let tol = 1e-6 * (model.rho_l - model.rho_v);
    let rho = profile.density();
    let lo = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo < model.rho_v - tol || hi > model.rho_l + tol {
        return Err(CapillaryError::InvalidProfile(format!(
            "profile range [{lo}, {hi}] exceeds the model bulks [{}, {}]",
            model.rho_v, model.rho_l
        )));
    }
    Ok(())
}

/// Segment residuals of the normal equilibrium equation
/// `dP/dx3 + mu rho H_s drho/dx3 = 0`, in the conservative form
/// `[(P_{i+1} - P_i) + mu Hbar_i (rho_{i+1}^2 - rho_i^2) / 2] / (x_{i+1} - x_i)`
/// with `Hbar_i` the segment mean curvature.
pub fn sharp_equilibrium_residual(
    profile: &DensityProfile,
    model: &SharpModel,
    pressure: &[f64],
    curvature: &[f64],
) -> Result<Vec<f64>> {
    check_fields(profile, &[pressure, curvature])?;
    check_bulks(profile, model)?;
    let x = profile.coordinate();
    let rho = profile.density();
    Ok((0..x.len() - 1)
        .map(|i| {
            let h_bar = 0.5 * (curvature[i] + curvature[i + 1]);
            let source = 0.5 * model.mu * h_bar * (rho[i + 1] * rho[i + 1] - rho[i] * rho[i]);
            (pressure[i + 1] - pressure[i] + source) / (x[i + 1] - x[i])
        })
        .collect())
}

/// Pressure field solving the discrete normal equation exactly, starting from `p_start`
/// at the first node.
pub fn manufactured_pressure(
    profile: &DensityProfile,
    model: &SharpModel,
    curvature: &[f64],
    p_start: f64,
) -> Result<Vec<f64>> {
    check_fields(profile, &[curvature])?;
    let rho = profile.density();
    let mut p = Vec::with_capacity(rho.len());
    p.push(p_start);
    for i in 0..rho.len() - 1 {
        let h_bar = 0.5 * (curvature[i] + curvature[i + 1]);
        let source = 0.5 * model.mu * h_bar * (rho[i + 1] * rho[i + 1] - rho[i] * rho[i]);
        p.push(p[i] - source);
    }
    Ok(p)
}

/// `int mu rho H_s (drho/dx3) dx3` taken from the low-density end to the high-density
/// end of the profile. By the normal equation this equals `P_v - P_l`; for constant
/// `H_s` it is `(mu / 2)(rho_l^2 - rho_v^2) H_s` whatever the profile shape.
pub fn normal_ode_jump(
    profile: &DensityProfile,
    model: &SharpModel,
    curvature: &[f64],
) -> Result<f64> {
    check_fields(profile, &[curvature])?;
    check_bulks(profile, model)?;
    let rho = profile.density();
    let mut acc: f64 = (0..rho.len() - 1)
        .map(|i| {
            let h_bar = 0.5 * (curvature[i] + curvature[i + 1]);
            0.5 * model.mu * h_bar * (rho[i + 1] * rho[i + 1] - rho[i] * rho[i])
        })
        .sum();
    if rho[0] > rho[rho.len() - 1] {
        acc = -acc;
    }
    Ok(acc)
}

/// Shape of a regularized density jump, as a function of the stretched normal
/// coordinate `z` (density increasing with `z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyShape {
    /// `rho^2` follows a tanh, so the weight `rho |rho'|` is even about the center.
    #[default]
    SymmetricTanh,
    /// `rho` itself follows a tanh; the weight `rho |rho'|` is skewed towards the liquid.
    Tanh,
    /// Gumbel-type profile `rho_v + drho exp(-exp(-z))`, deliberately asymmetric.
    ExpSkew,
}

/// One-parameter family of smooth profiles converging to a density jump as
/// `epsilon -> 0`. Planar families have vapor at low `x3`; spherical families carry
/// liquid inside the radius `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedFamily {
    pub epsilon: f64,
    pub center: f64,
    pub rho_v: f64,
    pub rho_l: f64,
    pub geometry: Geometry,
    pub shape: FamilyShape,
}

impl RegularizedFamily {
    pub fn new(
        epsilon: f64,
        center: f64,
        rho_v: f64,
        rho_l: f64,
        geometry: Geometry,
        shape: FamilyShape,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CapillaryError::domain("epsilon", epsilon, "(0, inf)"));
        }
        check_jump(rho_v, rho_l)?;
        if geometry == Geometry::Spherical && !(center > 0.0) {
            return Err(CapillaryError::domain("radius", center, "(0, inf)"));
        }
        Ok(Self {
            epsilon,
            center,
            rho_v,
            rho_l,
            geometry,
            shape,
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(
            epsilon,
            self.center,
            self.rho_v,
            self.rho_l,
            self.geometry,
            self.shape,
        )
    }

    fn stretched(&self, s: f64) -> f64 {
        match self.geometry {
            Geometry::Planar => (s - self.center) / self.epsilon,
            Geometry::Spherical => (self.center - s) / self.epsilon,
        }
    }

    /// Density and `d rho / dz` in the stretched coordinate.
    fn shape_values(&self, z: f64) -> (f64, f64) {
        let gap = self.rho_l - self.rho_v;
        match self.shape {
            FamilyShape::SymmetricTanh => {
                let mean = 0.5 * (self.rho_l * self.rho_l + self.rho_v * self.rho_v);
                let half = 0.5 * (self.rho_l * self.rho_l - self.rho_v * self.rho_v);
                let th = z.tanh();
                let rho = (mean + half * th).sqrt();
                let sech2 = 1.0 - th * th;
                (rho, half * sech2 / (2.0 * rho))
            }
            FamilyShape::Tanh => {
                let th = z.tanh();
                (
                    self.rho_v + 0.5 * gap * (1.0 + th),
                    0.5 * gap * (1.0 - th * th),
                )
            }
            FamilyShape::ExpSkew => {
                let e = (-z).exp();
                if e > 1e3 {
                    // exp(-e) underflows: deep in the vapor
                    return (self.rho_v, 0.0);
                }
                let g = (-e).exp();
                (self.rho_v + gap * g, gap * e * g)
            }
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        self.shape_values(self.stretched(s)).0
    }

    /// `|d rho / ds|` along the coordinate.
    pub fn gradient_norm(&self, s: f64) -> f64 {
        self.shape_values(self.stretched(s)).1.abs() / self.epsilon
    }

    /// Samples the family on `n` uniform nodes of `[a, b]`.
    pub fn sample(
        &self,
        a: f64,
        b: f64,
        n: usize,
        params: crate::planar::CapillarityParams,
    ) -> Result<DensityProfile> {
        let n = n.max(2);
        let x: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        let rho = x.iter().map(|s| self.density(*s)).collect();
        DensityProfile::new(x, rho, self.geometry, params)
    }
}

type Field = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth test function with compact support `[lo, hi]` along the interface normal.
#[derive(Clone)]
pub struct TestFunction {
    lo: f64,
    hi: f64,
    field: Field,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("support", &(self.lo, self.hi))
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    /// `field` is evaluated only inside the support; outside it the function is zero.
    pub fn new<F>(lo: f64, hi: f64, field: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(CapillaryError::InvalidParameter(format!(
                "test function support [{lo}, {hi}] is empty"
            )));
        }
        Ok(Self {
            lo,
            hi,
            field: Arc::new(field),
        })
    }

    /// Equal to `value` on the whole support.
    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, move |_| value)
    }

    /// Standard `C^inf` bump `exp(1 - 1 / (1 - z^2))` on `[lo, hi]`, scaled to 1 at the
    /// midpoint.
    pub fn bump(lo: f64, hi: f64) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Self::new(lo, hi, move |x| {
            let z = (x - mid) / half;
            if z.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - z * z)).exp()
            }
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.field)(x)
        }
    }
}

/// Maximum tolerated mismatch between the family and its bulks at the box edges,
/// relative to the density jump.
const LEAK_TOL: f64 = 1e-13;

/// `<rho |grad rho|, phi> = int rho |grad rho| phi dv` over the support of `phi`
/// (per unit area for planar families, with the `4 pi r^2` shell weight for spherical
/// ones).
pub fn distribution_pairing(family: &RegularizedFamily, phi: &TestFunction) -> Result<f64> {
    let (mut a, b) = phi.support();
    if family.geometry == Geometry::Spherical {
        a = a.max(0.0);
    }
    let gap = family.rho_l - family.rho_v;
    let (bulk_a, bulk_b) = match family.geometry {
        Geometry::Planar => (family.rho_v, family.rho_l),
        Geometry::Spherical => (family.rho_l, family.rho_v),
    };
    let mut mismatch = (family.density(b) - bulk_b).abs();
    // the sphere's center is not a box edge unless the support starts off-center
    if family.geometry == Geometry::Planar || a > 0.0 {
        mismatch = mismatch.max((family.density(a) - bulk_a).abs());
    } else {
        mismatch = mismatch.max((family.density(0.0) - bulk_a).abs());
    }
    if mismatch > LEAK_TOL * gap || !(family.center > a && family.center < b) {
        return Err(CapillaryError::SupportOverflow { mismatch });
    }
    let integrand = |s: f64| {
        let w = family.density(s) * family.gradient_norm(s) * phi.eval(s);
        match family.geometry {
            Geometry::Planar => w,
            Geometry::Spherical => 4.0 * PI * s * s * w,
        }
    };
    // split at the layer so the adaptive rule sees the ramp from both sides
    let c = family.center;
    let eps = family.epsilon;
    let mut cuts = vec![a];
    for k in [-8.0, -2.0, 0.0, 2.0, 8.0] {
        let p = c + k * eps;
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.push(b);
    cuts.iter()
        .zip(cuts.iter().skip(1))
        .map(|(lo, hi)| adaptive(integrand, *lo, *hi, 1e-300, 1e-14))
        .sum()
}

/// Limit value `int_Sigma [rho^2 / 2] phi ds` of the pairing as `epsilon -> 0`.
pub fn surface_value(family: &RegularizedFamily, phi: &TestFunction) -> f64 {
    let jump = 0.5 * (family.rho_l * family.rho_l - family.rho_v * family.rho_v);
    let c = family.center;
    match family.geometry {
        Geometry::Planar => jump * phi.eval(c),
        Geometry::Spherical => 4.0 * PI * c * c * jump * phi.eval(c),
    }
}

/// One row of an epsilon-refinement table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub pairing: f64,
    pub surface_value: f64,
    pub abs_error: f64,
    /// `log(e_prev / e) / log(eps_prev / eps)`; absent on the first row or when the
    /// errors are at rounding level.
    pub observed_order: Option<f64>,
}

/// Pairings of `family` rescaled to each epsilon, with errors against the surface value.
pub fn convergence_table(
    family: &RegularizedFamily,
    phi: &TestFunction,
    epsilons: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let limit = surface_value(family, phi);
    let floor = 1e-13 * limit.abs().max(1e-300);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let fam = family.with_epsilon(eps)?;
        let pairing = distribution_pairing(&fam, phi)?;
        let abs_error = (pairing - limit).abs();
        let observed_order = rows.last().and_then(|prev| {
            (prev.abs_error > floor && abs_error > floor && prev.epsilon != eps)
                .then(|| (prev.abs_error / abs_error).ln() / (prev.epsilon / eps).ln())
        });
        rows.push(ConvergenceRow {
            epsilon: eps,
            pairing,
            surface_value: limit,
            abs_error,
            observed_order,
        });
    }
    Ok(rows)
}

/// Richardson extrapolation to `epsilon = 0` from the last two rows, assuming error
/// order `order` and a constant refinement ratio.
pub fn richardson_limit(rows: &[ConvergenceRow], order: f64) -> Option<f64> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (&rows[n - 2], &rows[n - 1]);
    let r = (a.epsilon / b.epsilon).powf(order);
    Some((r * b.pairing - a.pairing) / (r - 1.0))
}
