//! Brute-force reference computations, written independently of the library kernels.

#![allow(dead_code)]

/// Reduced van der Waals pressure.
pub fn p(rho: f64, t: f64) -> f64 {
    8.0 * t * rho / (3.0 - rho) - 3.0 * rho * rho
}

/// Free energy per unit mass with `alpha(1) = 0`.
pub fn alpha(rho: f64, t: f64) -> f64 {
    8.0 * t / 3.0 * (2.0 * rho / (3.0 - rho)).ln() - 3.0 * rho + 3.0
}

pub fn mu(rho: f64, t: f64) -> f64 {
    alpha(rho, t) + p(rho, t) / rho
}

pub fn dp(rho: f64, t: f64) -> f64 {
    24.0 * t / ((3.0 - rho) * (3.0 - rho)) - 6.0 * rho
}

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Spinodal densities from a sign-change scan of `dP/drho` on `n` points, refined by
/// bisection.
pub fn spinodal_scan(t: f64, n: usize) -> (f64, f64) {
    let h = 2.99 / n as f64;
    let mut roots = Vec::new();
    let mut prev = dp(0.005, t);
    for i in 1..=n {
        let x = 0.005 + h * i as f64;
        let cur = dp(x, t);
        if (cur > 0.0) != (prev > 0.0) {
            roots.push(bisect(|r| dp(r, t), x - h, x));
        }
        prev = cur;
    }
    assert_eq!(roots.len(), 2, "expected two spinodal roots at T = {t}");
    (roots[0], roots[1])
}

/// Coexistence by the equal-area rule in the specific volume:
/// `int_{v_l}^{v_v} (P(v) - P_sat) dv = 0`, trapezoid on `n` points, bisection on `P_sat`.
pub fn equal_area(t: f64, n: usize) -> (f64, f64, f64) {
    let (lo, hi) = spinodal_scan(t, 200_000);
    let p_lo = p(lo, t);
    // keeps the vapor volume resolvable by a uniform grid; P_sat is far above this floor
    let p_hi = p(hi, t).max(1e-3);
    let roots = |ps: f64| {
        let rv = bisect(|r| p(r, t) - ps, 1e-12, lo);
        let rl = bisect(|r| p(r, t) - ps, hi, 2.999_999);
        (rv, rl)
    };
    let area = |ps: f64| {
        let (rv, rl) = roots(ps);
        let (vl, vv) = (1.0 / rl, 1.0 / rv);
        let h = (vv - vl) / n as f64;
        let f = |v: f64| p(1.0 / v, t) - ps;
        let mut s = 0.5 * (f(vl) + f(vv));
        for i in 1..n {
            s += f(vl + h * i as f64);
        }
        s * h
    };
    let ps = bisect(area, p_hi, p_lo);
    let (rv, rl) = roots(ps);
    (rv, rl, ps)
}

/// `sigma = int sqrt(2 lambda dOmega) drho` by the trapezoid rule on `n` intervals, with
/// `dOmega` from its defining formula.
pub fn sigma_trapezoid(t: f64, lambda: f64, rho_v: f64, rho_l: f64, n: usize) -> f64 {
    let mu_sat = mu(rho_v, t);
    let p_sat = p(rho_v, t);
    let f = |r: f64| {
        let omega = r * alpha(r, t) - mu_sat * r + p_sat;
        (2.0 * lambda * omega.max(0.0)).sqrt()
    };
    let h = (rho_l - rho_v) / n as f64;
    let mut s = 0.5 * (f(rho_v) + f(rho_l));
    for i in 1..n {
        s += f(rho_v + h * i as f64);
    }
    s * h
}

/// Synthetic tanh interface `rho_v + (rho_l - rho_v)(1 + tanh(x / w)) / 2` on `n` nodes of
/// `[-a, a]`.
pub fn tanh_profile(rho_v: f64, rho_l: f64, w: f64, a: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n)
        .map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64)
        .collect();
    let rho = x
        .iter()
        .map(|s| rho_v + 0.5 * (rho_l - rho_v) * (1.0 + (s / w).tanh()))
        .collect();
    (x, rho)
}

/// Critical nucleus by Newton relaxation of the discretized radial equation
/// `lambda (rho'' + 2 rho' / r) = mu(rho) - mu_b` on `r_i = i h`, `i = 0..=n`, with
/// `rho'(0) = 0` and `rho(r_n) = rho_inf`. Starts from the tanh `guess`.
pub fn relax_nucleus(
    t: f64,
    lambda: f64,
    rho_inf: f64,
    h: f64,
    guess: &[f64],
) -> Result<Vec<f64>, String> {
    let n = guess.len() - 1;
    let mu_b = mu(rho_inf, t);
    let mut rho = guess.to_vec();
    rho[n] = rho_inf;
    let c = lambda / (h * h);
    let residual = |rho: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        f[0] = 6.0 * c * (rho[1] - rho[0]) - (mu(rho[0], t) - mu_b);
        for i in 1..n {
            let r = h * i as f64;
            f[i] = c * (rho[i + 1] - 2.0 * rho[i] + rho[i - 1])
                + lambda * (rho[i + 1] - rho[i - 1]) / (h * r)
                - (mu(rho[i], t) - mu_b);
        }
        f
    };
    let norm = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut f = residual(&rho);
    for _ in 0..100 {
        let fnorm = norm(&f);
        if fnorm < 1e-13 {
            return Ok(rho);
        }
        // tridiagonal Jacobian, Thomas algorithm
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let dmu = |r: f64| dp(r, t) / r;
        diag[0] = -6.0 * c - dmu(rho[0]);
        upper[0] = 6.0 * c;
        for i in 1..n {
            let r = h * i as f64;
            lower[i] = c - lambda / (h * r);
            diag[i] = -2.0 * c - dmu(rho[i]);
            upper[i] = c + lambda / (h * r);
        }
        let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        for i in 1..n {
            let m = lower[i] / diag[i - 1];
            diag[i] -= m * upper[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut delta = vec![0.0; n];
        delta[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            delta[i] = (rhs[i] - upper[i] * delta[i + 1]) / diag[i];
        }
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = rho
                .iter()
                .enumerate()
                .map(|(i, v)| if i < n { v + step * delta[i] } else { *v })
                .collect();
            if trial.iter().all(|v| *v > 0.0 && *v < 3.0) {
                let ft = residual(&trial);
                if norm(&ft) < fnorm {
                    rho = trial;
                    f = ft;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-8 {
                // no further descent: accept rounding-level residuals
                if fnorm < 1e-10 {
                    return Ok(rho);
                }
                return Err(format!("line search stalled at residual {fnorm:e}"));
            }
        }
    }
    Err("Newton relaxation did not converge".into())
}

/// Max |a - b| over paired samples.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
