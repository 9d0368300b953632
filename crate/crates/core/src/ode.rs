//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

use crate::error::{CapillaryError, Result};

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted step, with derivatives at both ends for Hermite dense output.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Endpoint<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub steps: usize,
    /// True when the step callback requested the stop.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` towards `t_end`, calling `on_step` after every
/// accepted step. Integration ends at `t_end` or when `on_step` returns [`Flow::Stop`].
pub fn integrate<const N: usize, F, C>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    control: StepControl,
    mut on_step: C,
) -> Result<Endpoint<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    C: FnMut(&Step<N>) -> Flow,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = control.h_init.min(control.h_max).min(t_end - t0);
    let mut steps = 0;
    let mut rejections = 0usize;
    while t < t_end {
        if steps >= control.max_steps {
            return Err(CapillaryError::NoConvergence {
                what: "Dormand-Prince integration",
                iterations: steps,
                residuals: vec![t, h],
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let t_new = if last { t_end } else { t + h };
        let k7 = rhs(t_new, &y_new);

        let mut err = 0.0_f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            let step = Step {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                f0: k1,
                f1: k7,
            };
            t = t_new;
            y = y_new;
            k1 = k7;
            steps += 1;
            rejections = 0;
            if on_step(&step) == Flow::Stop {
                return Ok(Endpoint {
                    t,
                    y,
                    steps,
                    stopped: true,
                });
            }
        } else {
            rejections += 1;
            if rejections > 60 {
                return Err(CapillaryError::NoConvergence {
                    what: "Dormand-Prince step control",
                    iterations: steps,
                    residuals: vec![t, h, err],
                });
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(control.h_max);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(CapillaryError::NoConvergence {
                what: "Dormand-Prince step size underflow",
                iterations: steps,
                residuals: vec![t, h],
            });
        }
    }
    Ok(Endpoint {
        t,
        y,
        steps,
        stopped: false,
    })
}
