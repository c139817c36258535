//! Adaptive Gauss-Legendre quadrature for the coefficient integrals.
//!
//! Panels are refined by bisection until the 16- versus 32-point
//! difference on each panel meets the tolerance; integrands peak near the
//! Fermi surface, so callers seed the panel list with a breakpoint there.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, xs: &[f64], ws: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let hal = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(ws.iter()) {
        acc += w * f(mid + hal * x);
    }
    acc * hal
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub n_panels: usize,
}

/// Integrate `f` over the union of the intervals delimited by
/// `breakpoints` (ascending), refining panels until the per-panel 16/32
/// point difference is below `rel_tol * |total| + abs_tol` scaled by the
/// panel fraction.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::Parameter("need at least one interval".into()));
    }
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Parameter("breakpoints must be ascending".into()));
        }
    }
    let (x16, w16) = gauss_legendre(16);
    let (x32, w32) = gauss_legendre(32);
    // first pass for the scale
    let mut rough = 0.0;
    for w in breakpoints.windows(2) {
        rough += panel(&f, w[0], w[1], &x16, &w16);
    }
    let scale = rough.abs().max(abs_tol);
    let total_len: f64 = breakpoints.last().unwrap() - breakpoints.first().unwrap();

    let mut stack: Vec<(f64, f64, usize)> =
        breakpoints.windows(2).map(|w| (w[0], w[1], 0usize)).collect();
    let mut value = 0.0;
    let mut err = 0.0;
    let mut n_panels = 0;
    while let Some((a, b, depth)) = stack.pop() {
        let coarse = panel(&f, a, b, &x16, &w16);
        let fine = panel(&f, a, b, &x32, &w32);
        let diff = (fine - coarse).abs();
        let budget = (rel_tol * scale + abs_tol) * ((b - a) / total_len).max(1e-6);
        // stop when converged, rounding-limited, or too deep
        let floor = 1e-15 * (coarse.abs() + fine.abs() + scale);
        if diff <= budget.max(floor) || depth >= 16 {
            value += fine;
            err += diff;
            n_panels += 1;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    Ok(QuadResult { value, error_estimate: err, n_panels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let (x, w) = gauss_legendre(16);
        // degree-31 polynomial integrated exactly
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_relative_eq!(val, 2.0 / 31.0, max_relative = 1e-13);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // Lorentzian peak at 1: integral over [0, 10] known analytically
        let g = 1e-3;
        let f = |x: f64| g / ((x - 1.0) * (x - 1.0) + g * g);
        let r = integrate_adaptive(f, &[0.0, 1.0, 10.0], 1e-12, 0.0).unwrap();
        let exact = ((10.0 - 1.0) / g).atan() - ((0.0 - 1.0) / g).atan();
        assert_relative_eq!(r.value, exact, max_relative = 1e-10);
        assert!(r.n_panels > 4);
    }

    #[test]
    fn adaptive_gaussian_tail() {
        let f = |x: f64| (-x * x / 2.0).exp();
        let r = integrate_adaptive(f, &[-12.0, 0.0, 12.0], 1e-13, 0.0).unwrap();
        assert_relative_eq!(r.value, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(integrate_adaptive(|x| x, &[1.0], 1e-6, 0.0).is_err());
        assert!(integrate_adaptive(|x| x, &[1.0, 0.5], 1e-6, 0.0).is_err());
    }
}
