//! Flat liquid-vapor interfaces in the square-gradient model.
//!
//! With constant capillarity coefficient `lambda` the flat equilibrium
//! `lambda rho'' = mu(rho) - mu_sat` integrates once to
//! `(lambda / 2) rho'^2 = dOmega(rho)`, where
//! `dOmega(rho) = rho alpha(rho) - mu_sat rho + P_sat` is the excess grand potential.
//! The profile is obtained as `x(rho)` by quadrature and the surface tension
//! `sigma = lambda int rho'^2 dx` is evaluated both on the sampled profile and as
//! `int sqrt(2 lambda dOmega) drho`.

use serde::{Deserialize, Serialize};

use crate::eos::{bisect, CoexistenceState, EosModel};
use crate::error::{CapillaryError, Result};
use crate::quadrature::{adaptive, gl16, simpson_samples};

/// Plateau tolerance: profile ends lie within this distance of the bulk densities.
pub const TOL_BULK: f64 = 1e-8;

/// Default number of profile nodes.
pub const DEFAULT_POINTS: usize = 512;

/// Smallest admissible profile length.
pub const MIN_POINTS: usize = 16;

/// Distance from the bulk densities at which planar profiles are truncated.
const TAIL_OFFSET: f64 = 0.1 * TOL_BULK;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapillarityParams {
    /// Capillarity coefficient, constant across the layer.
    pub lambda: f64,
    pub temperature: f64,
}

impl CapillarityParams {
    pub fn new(lambda: f64, temperature: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CapillaryError::domain("lambda", lambda, "(0, inf)"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(CapillaryError::domain(
                "temperature",
                temperature,
                "(0, inf)",
            ));
        }
        Ok(Self {
            lambda,
            temperature,
        })
    }

    pub fn coexistence(&self) -> Result<CoexistenceState> {
        EosModel::van_der_waals().maxwell_coexistence(self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Planar,
    Spherical,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Planar => "planar",
            Geometry::Spherical => "spherical",
        }
    }
}

/// Density sampled along the interface normal (`x3` for planar, `r` for spherical).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    coordinate: Vec<f64>,
    density: Vec<f64>,
    geometry: Geometry,
    params: CapillarityParams,
}

impl DensityProfile {
    pub fn new(
        coordinate: Vec<f64>,
        density: Vec<f64>,
        geometry: Geometry,
        params: CapillarityParams,
    ) -> Result<Self> {
        if coordinate.len() != density.len() {
            return Err(CapillaryError::InvalidProfile(format!(
                "coordinate and density lengths differ ({} vs {})",
                coordinate.len(),
                density.len()
            )));
        }
        if coordinate.len() < MIN_POINTS {
            return Err(CapillaryError::InvalidProfile(format!(
                "profile needs at least {MIN_POINTS} samples, got {}",
                coordinate.len()
            )));
        }
        if coordinate.iter().chain(&density).any(|v| !v.is_finite()) {
            return Err(CapillaryError::InvalidProfile("non-finite sample".into()));
        }
        if coordinate.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CapillaryError::InvalidProfile(
                "coordinates must be strictly increasing".into(),
            ));
        }
        if geometry == Geometry::Spherical && coordinate[0] < 0.0 {
            return Err(CapillaryError::InvalidProfile(
                "spherical radii must be non-negative".into(),
            ));
        }
        Ok(Self {
            coordinate,
            density,
            geometry,
            params,
        })
    }

    pub fn coordinate(&self) -> &[f64] {
        &self.coordinate
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn params(&self) -> CapillarityParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.coordinate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinate.is_empty()
    }

    /// Density derivative along the coordinate at every node.
    pub fn slope(&self) -> Vec<f64> {
        let xs = index_derivative(&self.coordinate);
        let rs = index_derivative(&self.density);
        rs.iter().zip(&xs).map(|(r, x)| r / x).collect()
    }

    /// Smooth interpolant of the profile, accurate to fourth order on smoothly
    /// graded grids.
    pub fn interpolant(&self) -> ProfileInterpolant {
        ProfileInterpolant::new(&self.coordinate, &self.density)
    }

    pub(crate) fn is_strictly_monotone(&self) -> bool {
        let inc = self.density.windows(2).all(|w| w[1] > w[0]);
        let dec = self.density.windows(2).all(|w| w[1] < w[0]);
        inc || dec
    }

    fn require(&self, geometry: Geometry) -> Result<()> {
        if self.geometry != geometry {
            return Err(CapillaryError::Geometry {
                expected: geometry.name(),
                found: self.geometry.name(),
            });
        }
        Ok(())
    }
}

/// Surface tension from the two independent planar routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTensionReport {
    /// `lambda int rho'^2 dx` on the sampled profile.
    pub sigma_integral: f64,
    /// `int sqrt(2 lambda dOmega) drho` by adaptive quadrature.
    pub sigma_quadrature: f64,
    pub rel_discrepancy: f64,
}

/// Excess grand potential relative to the coexisting bulks, evaluated from the nearer
/// bulk so it stays accurate deep in the exponential tails.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExcessPotential {
    eos: EosModel,
    coex: CoexistenceState,
}

impl ExcessPotential {
    pub(crate) fn new(coex: CoexistenceState) -> Self {
        Self {
            eos: EosModel::van_der_waals(),
            coex,
        }
    }

    fn direct(&self, rho: f64) -> f64 {
        let t = self.coex.temperature;
        rho * self.eos.alpha(rho, t) - self.coex.mu_sat * rho + self.coex.p_sat
    }

    /// Value at `rho_v + offset` (`offset >= 0`).
    pub(crate) fn above_vapor(&self, offset: f64) -> f64 {
        if offset > 0.05 * self.coex.gap() {
            return self.direct(self.coex.rho_v + offset);
        }
        self.eos
            .omega_increment(self.coex.rho_v, offset, self.coex.temperature)
    }

    /// Value at `rho_l - offset` (`offset >= 0`).
    pub(crate) fn below_liquid(&self, offset: f64) -> f64 {
        if offset > 0.05 * self.coex.gap() {
            return self.direct(self.coex.rho_l - offset);
        }
        self.eos
            .omega_increment(self.coex.rho_l, -offset, self.coex.temperature)
    }

    pub(crate) fn at(&self, rho: f64) -> f64 {
        let dv = rho - self.coex.rho_v;
        let dl = self.coex.rho_l - rho;
        if dv <= dl {
            self.above_vapor(dv)
        } else {
            self.below_liquid(dl)
        }
    }
}

/// `dOmega(rho) = rho alpha(rho) - mu_sat rho + P_sat`; zero at both bulks, positive between.
pub fn excess_grand_potential(rho: f64, coex: &CoexistenceState) -> Result<f64> {
    if !(rho >= coex.rho_v - TOL_BULK && rho <= coex.rho_l + TOL_BULK) {
        return Err(CapillaryError::domain(
            "density",
            rho,
            "[rho_v, rho_l] of the coexistence state",
        ));
    }
    let clamped = rho.clamp(coex.rho_v, coex.rho_l);
    Ok(ExcessPotential::new(*coex).at(clamped))
}

/// Density at which `dOmega` peaks, i.e. the unstable root of `mu(rho) = mu_sat`.
/// The flat profile has its steepest slope there.
pub(crate) fn max_slope_density(coex: &CoexistenceState) -> Result<f64> {
    let eos = EosModel::van_der_waals();
    let (lo, hi) = eos.spinodal(coex.temperature)?;
    let t = coex.temperature;
    Ok(bisect(|r| eos.mu(r, t) - coex.mu_sat, lo, hi, 200))
}

/// Tanh map between the grid parameter `u` and density.
#[derive(Debug, Clone, Copy)]
struct TanhMap {
    rho_v: f64,
    gap: f64,
}

impl TanhMap {
    fn offset_vapor(&self, u: f64) -> f64 {
        self.gap / (1.0 + (-2.0 * u).exp())
    }
    fn offset_liquid(&self, u: f64) -> f64 {
        self.gap / (1.0 + (2.0 * u).exp())
    }
    fn density(&self, u: f64) -> f64 {
        if u <= 0.0 {
            self.rho_v + self.offset_vapor(u)
        } else {
            self.rho_v + self.gap - self.offset_liquid(u)
        }
    }
    fn ddu(&self, u: f64) -> f64 {
        let c = u.cosh();
        0.5 * self.gap / (c * c)
    }
    fn inverse(&self, rho: f64) -> f64 {
        (2.0 * (rho - self.rho_v) / self.gap - 1.0).atanh()
    }
}

/// Equilibrium flat profile on `n_points` nodes, vapor at negative `x3`, centered so the
/// steepest point sits at `x3 = 0`.
pub fn planar_profile(params: CapillarityParams, n_points: usize) -> Result<DensityProfile> {
    let coex = params.coexistence()?;
    planar_profile_with(params, &coex, n_points)
}

pub(crate) fn planar_profile_with(
    params: CapillarityParams,
    coex: &CoexistenceState,
    n_points: usize,
) -> Result<DensityProfile> {
    if n_points < MIN_POINTS {
        return Err(CapillaryError::InvalidParameter(format!(
            "planar profile needs at least {MIN_POINTS} points, got {n_points}"
        )));
    }
    let map = TanhMap {
        rho_v: coex.rho_v,
        gap: coex.gap(),
    };
    let omega = ExcessPotential::new(*coex);
    let root_lambda = params.lambda.sqrt();
    // dx/du = (drho/du) / sqrt(2 dOmega / lambda); smooth, tending to constants in the tails
    let dxdu = |u: f64| -> f64 {
        let w = if u <= 0.0 {
            omega.above_vapor(map.offset_vapor(u))
        } else {
            omega.below_liquid(map.offset_liquid(u))
        };
        map.ddu(u) * root_lambda / (2.0 * w.max(f64::MIN_POSITIVE)).sqrt()
    };
    let u_end = 0.5 * (map.gap / TAIL_OFFSET - 1.0).ln();
    let du = 2.0 * u_end / (n_points - 1) as f64;
    let us: Vec<f64> = (0..n_points).map(|i| -u_end + du * i as f64).collect();

    let rule = gl16();
    let mut x = Vec::with_capacity(n_points);
    let mut acc = 0.0;
    x.push(0.0);
    for w in us.windows(2) {
        acc += rule.integrate(dxdu, w[0], w[1]);
        x.push(acc);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CapillaryError::NoConvergence {
            what: "planar profile quadrature",
            iterations: n_points,
            residuals: vec![acc],
        });
    }
    let u_c = map.inverse(max_slope_density(coex)?);
    let k = (((u_c + u_end) / du).floor() as usize).min(n_points - 2);
    let x_c = x[k] + rule.integrate(dxdu, us[k], u_c);
    for v in &mut x {
        *v -= x_c;
    }
    let density: Vec<f64> = us.iter().map(|&u| map.density(u)).collect();
    DensityProfile::new(x, density, Geometry::Planar, params)
}

/// `sigma = lambda int rho'^2 dx3` on a sampled flat profile.
pub fn sigma_integral(profile: &DensityProfile) -> Result<f64> {
    profile.require(Geometry::Planar)?;
    Ok(profile.params.lambda * gradient_square_integral(profile.coordinate(), profile.density()))
}

/// `int rho'^2 dx` with both samples treated as smooth functions of the node index.
pub(crate) fn gradient_square_integral(x: &[f64], rho: &[f64]) -> f64 {
    let xu = index_derivative(x);
    let ru = index_derivative(rho);
    let f: Vec<f64> = ru.iter().zip(&xu).map(|(r, x)| r * r / x).collect();
    let idx: Vec<f64> = (0..f.len()).map(|i| i as f64).collect();
    simpson_samples(&idx, &f)
}

/// `sigma = sqrt(lambda) int_{rho_v}^{rho_l} sqrt(2 dOmega) drho`.
pub fn sigma_quadrature(params: CapillarityParams, coex: &CoexistenceState) -> Result<f64> {
    check_params_match(params, coex)?;
    let omega = ExcessPotential::new(*coex);
    let integral = adaptive(
        |rho| (2.0 * omega.at(rho).max(0.0)).sqrt(),
        coex.rho_v,
        coex.rho_l,
        0.0,
        1e-14,
    )?;
    Ok(params.lambda.sqrt() * integral)
}

fn check_params_match(params: CapillarityParams, coex: &CoexistenceState) -> Result<()> {
    if params.temperature != coex.temperature {
        return Err(CapillaryError::InvalidParameter(format!(
            "parameter temperature {} differs from coexistence temperature {}",
            params.temperature, coex.temperature
        )));
    }
    Ok(())
}

/// Both surface-tension routes for one `(lambda, T)` pair.
pub fn surface_tension_report(
    params: CapillarityParams,
    n_points: usize,
) -> Result<SurfaceTensionReport> {
    let coex = params.coexistence()?;
    let profile = planar_profile_with(params, &coex, n_points)?;
    let sigma_integral = sigma_integral(&profile)?;
    let sigma_quadrature = sigma_quadrature(params, &coex)?;
    let mean = 0.5 * (sigma_integral + sigma_quadrature);
    Ok(SurfaceTensionReport {
        sigma_integral,
        sigma_quadrature,
        rel_discrepancy: (sigma_integral - sigma_quadrature).abs() / mean,
    })
}

/// 10-90 thickness of a monotone profile, measured between the crossings of
/// `rho_lo + 0.1 drho` and `rho_lo + 0.9 drho` with the profile's end densities as bulks.
pub fn interface_thickness(profile: &DensityProfile) -> Result<f64> {
    profile.require(Geometry::Planar)?;
    if !profile.is_strictly_monotone() {
        return Err(CapillaryError::NonMonotone);
    }
    let rho = profile.density();
    let (a, b) = (rho[0], rho[rho.len() - 1]);
    let (lo, hi) = (a.min(b), a.max(b));
    let gap = hi - lo;
    let interp = profile.interpolant();
    let x10 = interp.crossing(lo + 0.1 * gap)?;
    let x90 = interp.crossing(lo + 0.9 * gap)?;
    Ok((x90 - x10).abs())
}

/// 10-90 thickness from `x(rho) = int drho / sqrt(2 dOmega / lambda)`, without sampling.
pub fn interface_thickness_quadrature(
    params: CapillarityParams,
    coex: &CoexistenceState,
) -> Result<f64> {
    check_params_match(params, coex)?;
    let omega = ExcessPotential::new(*coex);
    let gap = coex.gap();
    let integral = adaptive(
        |rho| 1.0 / (2.0 * omega.at(rho)).sqrt(),
        coex.rho_v + 0.1 * gap,
        coex.rho_v + 0.9 * gap,
        0.0,
        1e-13,
    )?;
    Ok(params.lambda.sqrt() * integral)
}

/// Gradient of the discretized functional
/// `sum_i w_i [rho_i alpha(rho_i) - mu_sat rho_i] + sum_i (lambda / 2) (rho_{i+1} - rho_i)^2 / h_i`
/// with respect to each interior node, divided by the node's dual cell width.
pub fn stationarity_residuals(
    profile: &DensityProfile,
    coex: &CoexistenceState,
) -> Result<Vec<f64>> {
    profile.require(Geometry::Planar)?;
    check_params_match(profile.params, coex)?;
    let eos = EosModel::van_der_waals();
    let t = coex.temperature;
    let lambda = profile.params.lambda;
    let x = profile.coordinate();
    let rho = profile.density();
    let n = x.len();
    let mut out = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let flux = (rho[i + 1] - rho[i]) / h1 - (rho[i] - rho[i - 1]) / h0;
        let lap = flux / (0.5 * (h0 + h1));
        let bulk = if rho[i] > 0.0 && rho[i] < 3.0 {
            eos.mu(rho[i], t) - coex.mu_sat
        } else {
            return Err(CapillaryError::domain("density", rho[i], "(0, 3)"));
        };
        out.push(bulk - lambda * lap);
    }
    Ok(out)
}

/// Max-norm of [`stationarity_residuals`] for the profile's own coexistence state.
pub fn discrete_energy_stationarity(profile: &DensityProfile) -> Result<f64> {
    let coex = profile.params.coexistence()?;
    let r = stationarity_residuals(profile, &coex)?;
    Ok(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Derivative of samples with respect to their index: sixth-order central differences in
/// the interior, lower-order stencils near the ends.
pub(crate) fn index_derivative(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    if n < 3 {
        d[0] = v[1] - v[0];
        d[1] = d[0];
        return d;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = if i >= 3 && i + 3 < n {
            (45.0 * (v[i + 1] - v[i - 1]) - 9.0 * (v[i + 2] - v[i - 2]) + (v[i + 3] - v[i - 3]))
                / 60.0
        } else if i >= 2 && i + 2 < n {
            (8.0 * (v[i + 1] - v[i - 1]) - (v[i + 2] - v[i - 2])) / 12.0
        } else if i >= 1 && i + 1 < n {
            0.5 * (v[i + 1] - v[i - 1])
        } else if i == 0 {
            -1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]
        } else {
            1.5 * v[n - 1] - 2.0 * v[n - 2] + 0.5 * v[n - 3]
        };
    }
    d
}

/// Hermite interpolation of `(x, rho)` as functions of the node index.
#[derive(Debug, Clone)]
pub struct ProfileInterpolant {
    x: Vec<f64>,
    rho: Vec<f64>,
    xu: Vec<f64>,
    ru: Vec<f64>,
}

impl ProfileInterpolant {
    fn new(x: &[f64], rho: &[f64]) -> Self {
        Self {
            x: x.to_vec(),
            rho: rho.to_vec(),
            xu: index_derivative(x),
            ru: index_derivative(rho),
        }
    }

    fn at_index(&self, s: f64) -> (f64, f64) {
        let n = self.x.len();
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let herm = |v: &[f64], d: &[f64]| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * v[i]
                + (t3 - 2.0 * t2 + t) * d[i]
                + (-2.0 * t3 + 3.0 * t2) * v[i + 1]
                + (t3 - t2) * d[i + 1]
        };
        (herm(&self.x, &self.xu), herm(&self.rho, &self.ru))
    }

    fn index_of(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= self.x[n - 1] {
            return (n - 1) as f64;
        }
        let i = self
            .x
            .partition_point(|v| *v <= x)
            .saturating_sub(1)
            .min(n - 2);
        let (mut a, mut b) = (i as f64, (i + 1) as f64);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.at_index(m).0 < x {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Density at coordinate `x`; end values are held outside the sampled range.
    pub fn density_at(&self, x: f64) -> f64 {
        self.at_index(self.index_of(x)).1
    }

    /// Coordinate where a monotone profile crosses `level`.
    pub fn crossing(&self, level: f64) -> Result<f64> {
        let n = self.rho.len();
        let i = (0..n - 1)
            .find(|&i| (self.rho[i] - level) * (self.rho[i + 1] - level) <= 0.0)
            .ok_or(CapillaryError::NonMonotone)?;
        let up = self.rho[i + 1] > self.rho[i];
        let (mut a, mut b) = (i as f64, (i + 1) as f64);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let below = self.at_index(m).1 < level;
            if below == up {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(self.at_index(0.5 * (a + b)).0)
    }
}
