//! Homogeneous fluid thermodynamics in reduced van der Waals units.
//!
//! Densities, temperatures and pressures are scaled by their critical values, so the
//! critical point sits at `(rho, T, P) = (1, 1, 1)` and the isotherm reads
//!
//! ```text
//! P(rho, T) = 8 T rho / (3 - rho) - 3 rho^2,    0 < rho < 3.
//! ```
//!
//! The specific free energy `alpha(rho)` satisfies `P = rho^2 d(alpha)/d(rho)` and is
//! fixed by the gauge `alpha(1, T) = 0`. Only differences of `alpha` (and of the
//! chemical potential `mu = alpha + P / rho`) enter the interface problems, so the
//! temperature-dependent constant is dropped. All computations are isothermal.

use serde::{Deserialize, Serialize};

use crate::error::{CapillaryError, Result};
use crate::quadrature::gl16;

/// Tolerance on the pressure and chemical-potential residuals of a coexistence state.
pub const TOL_COEX: f64 = 1e-10;

/// Upper bound of the reduced density (hard-core limit of the reduced form).
pub const RHO_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EosKind {
    #[default]
    VanDerWaalsReduced,
}

/// Equation of state of the homogeneous fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EosModel {
    pub kind: EosKind,
}

/// Coexisting bulk phases at one subcritical temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceState {
    pub temperature: f64,
    pub rho_v: f64,
    pub rho_l: f64,
    pub p_sat: f64,
    pub mu_sat: f64,
    /// `|P(rho_v) - P(rho_l)|` at the returned densities.
    pub residual_pressure: f64,
    /// `|mu(rho_v) - mu(rho_l)|` at the returned densities.
    pub residual_mu: f64,
}

impl CoexistenceState {
    pub fn gap(&self) -> f64 {
        self.rho_l - self.rho_v
    }
}

fn check_state(rho: f64, t: f64) -> Result<()> {
    if !(rho > 0.0 && rho < RHO_MAX) {
        return Err(CapillaryError::domain("density", rho, "(0, 3)"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(CapillaryError::domain("temperature", t, "(0, inf)"));
    }
    Ok(())
}

fn check_subcritical(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(CapillaryError::domain("temperature", t, "(0, 1)"));
    }
    if t >= 1.0 || !t.is_finite() {
        return Err(CapillaryError::Supercritical { temperature: t });
    }
    Ok(())
}

impl EosModel {
    pub const fn van_der_waals() -> Self {
        Self {
            kind: EosKind::VanDerWaalsReduced,
        }
    }

    /// Thermodynamic pressure `P(rho, T)`.
    pub fn pressure(&self, rho: f64, t: f64) -> Result<f64> {
        check_state(rho, t)?;
        Ok(self.p(rho, t))
    }

    /// Specific (per unit mass) Helmholtz free energy in the `alpha(1, T) = 0` gauge.
    pub fn free_energy(&self, rho: f64, t: f64) -> Result<f64> {
        check_state(rho, t)?;
        Ok(self.alpha(rho, t))
    }

    /// Homogeneous chemical potential `mu = d(rho alpha)/d(rho) = alpha + P / rho`.
    pub fn chemical_potential(&self, rho: f64, t: f64) -> Result<f64> {
        check_state(rho, t)?;
        Ok(self.mu(rho, t))
    }

    /// `dP/drho`.
    pub fn pressure_derivative(&self, rho: f64, t: f64) -> Result<f64> {
        check_state(rho, t)?;
        Ok(self.dp(rho, t))
    }

    /// `dmu/drho = (1 / rho) dP/drho`.
    pub fn chemical_potential_derivative(&self, rho: f64, t: f64) -> Result<f64> {
        check_state(rho, t)?;
        Ok(self.dmu(rho, t))
    }

    // Unchecked kernels. Callers guarantee 0 < rho < 3 and t > 0.

    #[inline]
    pub(crate) fn p(&self, rho: f64, t: f64) -> f64 {
        match self.kind {
            EosKind::VanDerWaalsReduced => 8.0 * t * rho / (3.0 - rho) - 3.0 * rho * rho,
        }
    }

    #[inline]
    pub(crate) fn dp(&self, rho: f64, t: f64) -> f64 {
        match self.kind {
            EosKind::VanDerWaalsReduced => {
                let h = 3.0 - rho;
                24.0 * t / (h * h) - 6.0 * rho
            }
        }
    }

    #[inline]
    pub(crate) fn alpha(&self, rho: f64, t: f64) -> f64 {
        match self.kind {
            EosKind::VanDerWaalsReduced => {
                8.0 * t / 3.0 * (2.0 * rho / (3.0 - rho)).ln() - 3.0 * rho + 3.0
            }
        }
    }

    #[inline]
    pub(crate) fn mu(&self, rho: f64, t: f64) -> f64 {
        match self.kind {
            EosKind::VanDerWaalsReduced => {
                let h = 3.0 - rho;
                8.0 * t / 3.0 * (2.0 * rho / h).ln() + 8.0 * t / h - 6.0 * rho + 3.0
            }
        }
    }

    #[inline]
    pub(crate) fn dmu(&self, rho: f64, t: f64) -> f64 {
        match self.kind {
            EosKind::VanDerWaalsReduced => {
                let h = 3.0 - rho;
                24.0 * t / (rho * h * h) - 6.0
            }
        }
    }

    /// Number of Gauss-Legendre panels keeping the poles of `dmu` at 0 and 3 at least
    /// four panel lengths away from every panel.
    fn panels(lo: f64, hi: f64) -> usize {
        let len = (hi - lo).abs();
        let dist = lo.min(hi).min(RHO_MAX - lo.max(hi)).max(1e-300);
        ((4.0 * len / dist).ceil() as usize).clamp(1, 512)
    }

    /// `mu(base + offset) - mu(base)` without cancellation for small offsets.
    pub(crate) fn mu_increment(&self, base: f64, offset: f64, t: f64) -> f64 {
        if offset == 0.0 {
            return 0.0;
        }
        let end = base + offset;
        let n = Self::panels(base, end);
        gl16().integrate_composite(|s| self.dmu(s, t), base, end, n)
    }

    /// `omega(base + offset) - omega(base) - offset * omega'(base)` where
    /// `omega = rho alpha - mu(base) rho`, i.e. `int_0^offset (offset - s) mu'(base + s) ds`.
    ///
    /// When `base` is a coexisting bulk density this is the excess grand potential
    /// evaluated without the cancellation that plagues the direct formula near the bulk.
    pub(crate) fn omega_increment(&self, base: f64, offset: f64, t: f64) -> f64 {
        if offset == 0.0 {
            return 0.0;
        }
        let end = base + offset;
        let n = Self::panels(base, end);
        gl16().integrate_composite(|s| (end - s) * self.dmu(s, t), base, end, n)
    }

    /// Densities bounding the mechanically unstable branch, where `dP/drho = 0`.
    pub fn spinodal(&self, t: f64) -> Result<(f64, f64)> {
        check_subcritical(t)?;
        // dP/drho = 0  <=>  rho (3 - rho)^2 = 4 T; the cubic peaks at rho = 1 with value 4.
        let g = |r: f64| r * (3.0 - r) * (3.0 - r) - 4.0 * t;
        let lo = bisect(g, 0.0, 1.0, 200);
        let hi = bisect(g, 1.0, RHO_MAX, 200);
        Ok((lo, hi))
    }

    /// Coexisting densities from simultaneous equality of pressure and chemical potential.
    pub fn maxwell_coexistence(&self, t: f64) -> Result<CoexistenceState> {
        check_subcritical(t)?;
        let (lo, hi) = self.spinodal(t)?;
        let newton = self.coexistence_newton(t, lo, hi, 0.5 * lo, 0.5 * (hi + RHO_MAX));
        let (rho_v, rho_l) = match newton {
            Some(pair) => pair,
            None => {
                let (v, l) = self.coexistence_bisection(t, lo, hi);
                self.coexistence_newton(t, lo, hi, v, l).unwrap_or((v, l))
            }
        };
        let residual_pressure = (self.p(rho_v, t) - self.p(rho_l, t)).abs();
        let residual_mu = (self.mu(rho_v, t) - self.mu(rho_l, t)).abs();
        if !(residual_pressure <= TOL_COEX && residual_mu <= TOL_COEX)
            || !(rho_v < lo && hi < rho_l)
        {
            return Err(CapillaryError::NoConvergence {
                what: "Maxwell construction",
                iterations: 0,
                residuals: vec![residual_pressure, residual_mu],
            });
        }
        Ok(CoexistenceState {
            temperature: t,
            rho_v,
            rho_l,
            p_sat: 0.5 * (self.p(rho_v, t) + self.p(rho_l, t)),
            mu_sat: 0.5 * (self.mu(rho_v, t) + self.mu(rho_l, t)),
            residual_pressure,
            residual_mu,
        })
    }

    /// Damped 2D Newton on `(rho_v, rho_l)`, confined to the two stable branches.
    fn coexistence_newton(
        &self,
        t: f64,
        lo: f64,
        hi: f64,
        mut v: f64,
        mut l: f64,
    ) -> Option<(f64, f64)> {
        let residual =
            |v: f64, l: f64| (self.p(v, t) - self.p(l, t), self.mu(v, t) - self.mu(l, t));
        let norm = |(a, b): (f64, f64)| a.abs().max(b.abs());
        let mut f = residual(v, l);
        for _ in 0..200 {
            if norm(f) <= 1e-14 {
                return Some((v, l));
            }
            let (dpv, dpl) = (self.dp(v, t), self.dp(l, t));
            let (j11, j12, j21, j22) = (dpv, -dpl, dpv / v, -dpl / l);
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dv = -(j22 * f.0 - j12 * f.1) / det;
            let dl = -(-j21 * f.0 + j11 * f.1) / det;
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let (nv, nl) = (v + step * dv, l + step * dl);
                if nv > 0.0 && nv < lo && nl > hi && nl < RHO_MAX {
                    let nf = residual(nv, nl);
                    if norm(nf) < norm(f) || norm(nf) <= 1e-14 {
                        v = nv;
                        l = nl;
                        f = nf;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // Newton stalled at rounding level: accept if already within tolerance.
                return (norm(f) <= 0.01 * TOL_COEX).then_some((v, l));
            }
        }
        (norm(f) <= 0.01 * TOL_COEX).then_some((v, l))
    }

    /// Bisection on the saturation pressure: both branches are solved for `P = p` and the
    /// chemical-potential difference, monotone in `p`, is driven to zero.
    fn coexistence_bisection(&self, t: f64, lo: f64, hi: f64) -> (f64, f64) {
        let branch_v = |p: f64| bisect(|r| self.p(r, t) - p, 0.0, lo, 200);
        let branch_l = |p: f64| bisect(|r| self.p(r, t) - p, hi, RHO_MAX, 200);
        let gap = |p: f64| self.mu(branch_l(p), t) - self.mu(branch_v(p), t);
        let p_lo = self.p(hi, t).max(0.0);
        let p_hi = self.p(lo, t);
        let p = bisect(gap, p_lo, p_hi, 200);
        (branch_v(p), branch_l(p))
    }
}

/// Bisection for a sign change of `f` on `[a, b]`, carried to floating-point resolution.
///
/// Endpoints may be singular for `f`; only interior midpoints are evaluated unless an
/// endpoint is the final answer.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, max_iter: usize) -> f64 {
    // orientation is sampled just inside the bracket
    let probe_a = a + (b - a) * 1e-15;
    let fa_sign = f(probe_a).is_sign_negative();
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.is_sign_negative() == fa_sign {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
