//! Gauss-Legendre rules, adaptive panel refinement and sampled-data integration.

use std::sync::OnceLock;

use crate::error::{CapillaryError, Result};

/// Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with a single panel.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate_composite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        panels: usize,
    ) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.integrate(&f, lo, hi)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Adaptive bisection on Gauss-Legendre panels.
///
/// A panel is accepted when its 16-point value agrees with the sum over its two halves
/// to `max(abs_tol, rel_tol * |value|)` scaled by the panel's share of the interval.
/// Panels whose error stops shrinking under bisection have reached the rounding noise of
/// the integrand and are accepted as they are.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_DEPTH: usize = 48;
    const MAX_PANELS: usize = 2_000_000;
    if a == b {
        return Ok(0.0);
    }
    let rule = gl16();
    let whole = rule.integrate(&f, a, b);
    let scale = whole.abs();
    let mut stack = vec![(a, b, whole, f64::INFINITY, 0usize)];
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    let mut panels = 0usize;
    let span = (b - a).abs();
    while let Some((lo, hi, coarse, parent_err, depth)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(CapillaryError::NoConvergence {
                what: "adaptive quadrature",
                iterations: panels,
                residuals: vec![worst],
            });
        }
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let fine = left + right;
        if !fine.is_finite() {
            return Err(CapillaryError::NoConvergence {
                what: "adaptive quadrature (non-finite integrand)",
                iterations: panels,
                residuals: vec![lo, hi],
            });
        }
        let err = (fine - coarse).abs();
        let share = (hi - lo).abs() / span;
        let tol = abs_tol.max(rel_tol * scale) * share.max(1e-12);
        let stalled = depth >= 8 && err > 0.9 * parent_err;
        if err <= tol || depth >= MAX_DEPTH || stalled {
            if err > tol && !stalled {
                worst = worst.max(err);
            }
            total += fine;
        } else {
            stack.push((lo, mid, left, err, depth + 1));
            stack.push((mid, hi, right, err, depth + 1));
        }
    }
    if !total.is_finite() {
        return Err(CapillaryError::NoConvergence {
            what: "adaptive quadrature",
            iterations: panels,
            residuals: vec![total],
        });
    }
    if worst > 1e3 * abs_tol.max(rel_tol * scale) {
        return Err(CapillaryError::NoConvergence {
            what: "adaptive quadrature",
            iterations: panels,
            residuals: vec![worst],
        });
    }
    Ok(total)
}

/// Composite Simpson-type rule on arbitrary strictly increasing abscissae.
///
/// Pairs of intervals are integrated with the exact quadratic through three samples;
/// a trailing odd interval uses the quadratic through the last three samples.
pub fn simpson_samples(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (x[1] - x[0]) * (y[0] + y[1]),
        _ => {}
    }
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        acc += quadratic_panel(
            x[i],
            x[i + 1],
            x[i + 2],
            y[i],
            y[i + 1],
            y[i + 2],
            x[i],
            x[i + 2],
        );
        i += 2;
    }
    if i + 1 < n {
        // one interval left: [x[i], x[i+1]] with the quadratic through i-1, i, i+1
        acc += quadratic_panel(
            x[i - 1],
            x[i],
            x[i + 1],
            y[i - 1],
            y[i],
            y[i + 1],
            x[i],
            x[i + 1],
        );
    }
    acc
}

/// Integral over `[lo, hi]` of the quadratic interpolating three samples.
#[allow(clippy::too_many_arguments)]
fn quadratic_panel(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, lo: f64, hi: f64) -> f64 {
    // Lagrange basis integrated in closed form via shifted coordinates t = x - x1.
    let a = x0 - x1;
    let c = x2 - x1;
    let (t0, t1) = (lo - x1, hi - x1);
    let m1 = (
        t1 - t0,
        (t1 * t1 - t0 * t0) / 2.0,
        (t1.powi(3) - t0.powi(3)) / 3.0,
    );
    // L0 = t (t - c) / (a (a - c)), L1 = (t - a)(t - c) / (a c), L2 = t (t - a) / (c (c - a))
    let i0 = (m1.2 - c * m1.1) / (a * (a - c));
    let i1 = (m1.2 - (a + c) * m1.1 + a * c * m1.0) / (a * c);
    let i2 = (m1.2 - a * m1.1) / (c * (c - a));
    y0 * i0 + y1 * i1 + y2 * i2
}

/// Trapezoid rule on arbitrary abscissae.
pub fn trapezoid_samples(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
