//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch-Carlson slopes).

use crate::error::{CapillaryError, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` must be strictly increasing with at least two samples.
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(CapillaryError::InvalidProfile(format!(
                "interpolation needs matching arrays of length >= 2 (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CapillaryError::InvalidProfile(
                "interpolation abscissae must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    // weighted harmonic mean keeps the interpolant monotone
                    let h0 = x[i] - x[i - 1];
                    let h1 = x[i + 1] - x[i];
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
            d[n - 1] = end_slope(
                x[n - 1] - x[n - 2],
                x[n - 2] - x[n - 3],
                delta[n - 2],
                delta[n - 3],
            );
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Evaluates the interpolant; outside the sample range the end values are held.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Cubic Hermite interpolation on one interval from values and derivatives at both ends.
#[inline]
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1;
    let dv = ((6.0 * s2 - 6.0 * s) * y0
        + (3.0 * s2 - 4.0 * s + 1.0) * h * d0
        + (-6.0 * s2 + 6.0 * s) * y1
        + (3.0 * s2 - 2.0 * s) * h * d1)
        / h;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_cubics_closely() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| t.tanh()).collect();
        let f = MonotoneCubic::new(&x, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(f.eval(*a), *b);
        }
        assert!((f.eval(1.234) - 1.234_f64.tanh()).abs() < 1e-4);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(MonotoneCubic::new(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(
            steps in proptest::collection::vec((0.01f64..1.0, 0.0f64..1.0), 3..30),
            probes in proptest::collection::vec(0.0f64..1.0, 1..50),
        ) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let f = MonotoneCubic::new(&x, &y).unwrap();
            let span = x.last().unwrap();
            let mut ts: Vec<f64> = probes.iter().map(|p| p * span).collect();
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let vals: Vec<f64> = ts.iter().map(|t| f.eval(*t)).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }
}
