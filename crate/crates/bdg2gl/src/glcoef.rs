//! Ginzburg-Landau coefficients by quadrature: the gradient matrix
//! `Lambda0`, the thermal mass `Lambda2`, the quartic coupling `Lambda3`,
//! the finite-`h` kinetic symbol `G(hq)` and the finite-`h` surrogates
//! for the mass and quartic terms.
//!
//! All integrands are radial in `|p|` because the pair form factor is
//! even (d = 1) or taken radial (d = 2, 3); the angular factors reduce to
//! sphere areas and the `p_i p_j` average `delta_ij |p|^2 / d`.

use crate::error::{Error, Result};
use crate::gapeq::{t_star_eval, GapData};
use crate::model::{chi_beta, g1_over_z, gl_weights, xi_beta, Potential};
use crate::quad::integrate_adaptive;
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// Quadrature bookkeeping attached to a coefficient set.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureMeta {
    pub p_max: f64,
    pub rel_tol: f64,
    pub n_panels: usize,
    /// Estimated magnitude of the dropped `|p| > p_max` tail.
    pub tail_bound: f64,
}

/// The Ginzburg-Landau coefficients at the critical temperature.
#[derive(Debug, Clone, Serialize)]
pub struct GLCoefficients {
    /// `d x d` positive-definite gradient matrix (diagonal here: the
    /// form factor is radial).
    pub lambda0: Vec<Vec<f64>>,
    pub lambda2: f64,
    pub lambda3: f64,
    pub dim: usize,
    pub beta_c: f64,
    pub quadrature: QuadratureMeta,
}

impl GLCoefficients {
    pub fn lambda0_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.lambda0[i][j])
    }

    /// Smallest eigenvalue of `Lambda0` (all positive for a valid set).
    pub fn lambda0_min_eig(&self) -> f64 {
        self.lambda0_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Radial description of the pair form factor with the model scalars
/// needed by every coefficient integral.
pub struct TStarModel<'a> {
    pub t: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub beta_c: f64,
    pub mu: f64,
    pub dim: usize,
}

impl<'a> TStarModel<'a> {
    pub fn from_gap(gap: &'a GapData, pot: &'a Potential, mu: f64) -> Self {
        let beta_c = gap.beta_c;
        TStarModel {
            t: Box::new(move |p: f64| t_star_eval(gap, pot, p).unwrap_or(0.0)),
            beta_c,
            mu,
            dim: 1,
        }
    }

    fn sphere_area(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            3 => 4.0 * PI,
            _ => unreachable!(),
        }
    }

    /// Cutoff where the thermal weights have decayed to `e^{-60}`.
    pub fn p_max(&self) -> f64 {
        (self.mu.max(0.0) + 60.0 / self.beta_c).sqrt() + 1.0
    }

    fn breakpoints(&self) -> Vec<f64> {
        let p_max = self.p_max();
        if self.mu > 0.0 && self.mu.sqrt() < p_max {
            vec![0.0, self.mu.sqrt(), p_max]
        } else {
            vec![0.0, p_max]
        }
    }

    /// Radial integral `S_{d-1} (2 pi)^{-d} \int_0^{p_max} f(p) p^{d-1} dp`.
    fn radial_integral<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64) -> Result<(f64, usize)> {
        let d = self.dim as i32;
        let r = integrate_adaptive(
            |p| f(p) * p.powi(d - 1),
            &self.breakpoints(),
            rel_tol,
            1e-300,
        )?;
        let norm = self.sphere_area() / (2.0 * PI).powi(d);
        Ok((norm * r.value, r.n_panels))
    }
}

/// Compute `Lambda0`, `Lambda2`, `Lambda3` at `beta_c` by adaptive
/// quadrature, verifying the positivity invariants before returning.
pub fn gl_coefficients(model: &TStarModel, rel_tol: f64) -> Result<GLCoefficients> {
    let bc = model.beta_c;
    let mu = model.mu;
    let d = model.dim as f64;
    let t = &model.t;

    let (lam0_scalar, n0) = model.radial_integral(
        |p| {
            let tv = t(p);
            let z = bc * (p * p - mu);
            let (g1, g2) = gl_weights(z);
            bc * bc / 16.0 * tv * tv * (g1 + 2.0 * bc * p * p * g2 / d)
        },
        rel_tol,
    )?;
    let (lam2, n2) = model.radial_integral(
        |p| {
            let tv = t(p);
            let w = 0.5 * bc * (p * p - mu);
            let sech = 1.0 / w.cosh();
            bc / 8.0 * tv * tv * sech * sech
        },
        rel_tol,
    )?;
    let (lam3, n3) = model.radial_integral(
        |p| {
            let tv = t(p);
            let z = bc * (p * p - mu);
            bc * bc / 16.0 * tv.powi(4) * bc * g1_over_z(z)
        },
        rel_tol,
    )?;

    let p_max = model.p_max();
    let tailw = (-bc * (p_max * p_max - mu)).exp();
    let tail_bound = tailw * t(p_max) * t(p_max);

    let mut lambda0 = vec![vec![0.0; model.dim]; model.dim];
    for (i, row) in lambda0.iter_mut().enumerate() {
        row[i] = lam0_scalar;
    }
    let coef = GLCoefficients {
        lambda0,
        lambda2: lam2,
        lambda3: lam3,
        dim: model.dim,
        beta_c: bc,
        quadrature: QuadratureMeta {
            p_max,
            rel_tol,
            n_panels: n0 + n2 + n3,
            tail_bound,
        },
    };
    if coef.lambda2 <= 0.0 || coef.lambda3 <= 0.0 || coef.lambda0_min_eig() <= 0.0 {
        return Err(Error::Numerical(format!(
            "coefficient positivity failed (Lambda0 min eig {:.3e}, Lambda2 {:.3e}, Lambda3 {:.3e}); refine the quadrature",
            coef.lambda0_min_eig(),
            coef.lambda2,
            coef.lambda3
        )));
    }
    Ok(coef)
}

/// `Lambda0` evaluated at an inverse temperature `beta` away from
/// `beta_c` (the intermediate matrix of the kinetic-symbol expansion).
pub fn lambda0_at_beta(model: &TStarModel, beta: f64, rel_tol: f64) -> Result<f64> {
    let mu = model.mu;
    let d = model.dim as f64;
    let t = &model.t;
    let (val, _) = model.radial_integral(
        |p| {
            let tv = t(p);
            let z = beta * (p * p - mu);
            let (g1, g2) = gl_weights(z);
            beta * beta / 16.0 * tv * tv * (g1 + 2.0 * beta * p * p * g2 / d)
        },
        rel_tol,
    )?;
    Ok(val)
}

/// The finite-`h` kinetic symbol
/// `G(u) = (1/(4 (2 pi)^d)) \int (f_beta(p,p) - f_beta(p + u/2, p - u/2)) t(p)^2 dp`
/// for a center-of-mass momentum vector `u = h q`; `G(0) = 0` and `G` is
/// even, with Hessian `2 Lambda0(beta)` at the origin.
pub fn g_symbol(model: &TStarModel, beta: f64, u: &[f64], rel_tol: f64) -> Result<f64> {
    if u.len() != model.dim {
        return Err(Error::Parameter(format!(
            "u has dimension {}, model dimension is {}",
            u.len(),
            model.dim
        )));
    }
    let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if unorm * unorm > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!("|u|^2 = {} exceeds 1", unorm * unorm)));
    }
    let mu = model.mu;
    let t = &model.t;
    match model.dim {
        1 => {
            let uu = u[0];
            let r = integrate_adaptive(
                |p| {
                    let tv = t(p);
                    let ep = p * p - mu;
                    let e1 = (p + uu / 2.0) * (p + uu / 2.0) - mu;
                    let e2 = (p - uu / 2.0) * (p - uu / 2.0) - mu;
                    (chi_beta(ep, beta) - xi_beta(e1, e2, beta)) * tv * tv
                },
                &model.breakpoints(),
                rel_tol,
                1e-300,
            )?;
            // even integrand: double the half line, then 1/(4 (2 pi))
            Ok(2.0 * r.value / (4.0 * 2.0 * PI))
        }
        2 | 3 => {
            let (xs, ws) = crate::quad::gauss_legendre(32);
            let d = model.dim;
            let r = integrate_adaptive(
                |p| {
                    let tv = t(p);
                    let ep = p * p - mu;
                    let chi = chi_beta(ep, beta);
                    let mut ang = 0.0;
                    let mut wsum = 0.0;
                    for (x, w) in xs.iter().zip(ws.iter()) {
                        // cos(theta) in [-1, 1]; measure sin(theta) d theta
                        // for d = 3 is d(cos); uniform angle for d = 2
                        let (c, wfac) = if d == 3 {
                            (*x, *w)
                        } else {
                            let th = 0.5 * PI * (x + 1.0);
                            (th.cos(), *w * 0.5 * PI / (PI / 2.0) * 0.5)
                        };
                        let e1 = p * p + p * unorm * c + 0.25 * unorm * unorm - mu;
                        let e2 = p * p - p * unorm * c + 0.25 * unorm * unorm - mu;
                        ang += wfac * (chi - xi_beta(e1, e2, beta));
                        wsum += wfac;
                    }
                    let pd = if d == 3 { p * p } else { p };
                    tv * tv * ang / wsum * pd
                },
                &model.breakpoints(),
                rel_tol,
                1e-300,
            )?;
            let area = model.sphere_area();
            Ok(area * r.value / (4.0 * (2.0 * PI).powi(d as i32)))
        }
        _ => unreachable!(),
    }
}

/// Richardson-extrapolated central-difference Hessian of `G` at the
/// origin; equals `2 Lambda0(beta)` entrywise.
pub fn g_symbol_hessian(model: &TStarModel, beta: f64, step: f64, rel_tol: f64) -> Result<DMatrix<f64>> {
    let d = model.dim;
    let gval = |u: &[f64]| g_symbol(model, beta, u, rel_tol);
    let mut hess = DMatrix::<f64>::zeros(d, d);
    let second = |s: f64, i: usize| -> Result<f64> {
        let mut up = vec![0.0; d];
        up[i] = s;
        let gp = gval(&up)?;
        up[i] = -s;
        let gm = gval(&up)?;
        Ok((gp + gm) / (s * s)) // G(0) = 0 identically
    };
    for i in 0..d {
        let d1 = second(step, i)?;
        let d2 = second(step / 2.0, i)?;
        hess[(i, i)] = (4.0 * d2 - d1) / 3.0;
    }
    let mixed = |s: f64, i: usize, j: usize| -> Result<f64> {
        let mut u = vec![0.0; d];
        u[i] = s;
        u[j] = s;
        let gpp = gval(&u)?;
        u[j] = -s;
        let gpm = gval(&u)?;
        u[i] = -s;
        let gmm = gval(&u)?;
        u[j] = s;
        let gmp = gval(&u)?;
        Ok((gpp - gpm - gmp + gmm) / (4.0 * s * s))
    };
    for i in 0..d {
        for j in (i + 1)..d {
            let d1 = mixed(step, i, j)?;
            let d2 = mixed(step / 2.0, i, j)?;
            let v = (4.0 * d2 - d1) / 3.0;
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Finite-`h` thermal mass surrogate: the positive coefficient
/// `(1/(4 (2 pi)^d)) \int t^2 (f_beta(p,p) - f_{beta_c}(p,p)) dp`
/// with `beta = beta_c (1 + D h^2)`; asymptotically `Lambda2 D h^2`.
pub fn lambda2_tilde(model: &TStarModel, big_d: f64, h: f64, rel_tol: f64) -> Result<f64> {
    if h > 1.0 {
        return Err(Error::Parameter(format!("h must be <= 1, got {h}")));
    }
    let bc = model.beta_c;
    let beta = bc * (1.0 + big_d * h * h);
    let mu = model.mu;
    let t = &model.t;
    let (val, _) = model.radial_integral(
        |p| {
            let tv = t(p);
            let e = p * p - mu;
            tv * tv * (chi_beta(e, beta) - chi_beta(e, bc)) / 4.0
        },
        rel_tol,
    )?;
    Ok(val)
}

/// Closed-form route to the quartic coefficient through the Matsubara
/// bracket `W(e) = tanh(beta e/2)/(2 e^3) - beta/(4 e^2 cosh^2(beta e/2))`
/// (the removable point handled by a series). Algebraically
/// `beta^2 g1(beta e) / (16 e) = W(e)/8`, so the prefactor `1/8` makes
/// this integral identical to the quartic coefficient integral.
pub fn lambda3_closed(model: &TStarModel, rel_tol: f64) -> Result<f64> {
    let beta = model.beta_c;
    let mu = model.mu;
    let t = &model.t;
    let (val, _) = model.radial_integral(
        |p| {
            let tv = t(p);
            let e = p * p - mu;
            tv.powi(4) * matsubara_quartic_bracket(e, beta) / 8.0
        },
        rel_tol,
    )?;
    Ok(val)
}

/// `W(e) = tanh(beta e / 2)/(2 e^3) - beta / (4 e^2 cosh^2(beta e / 2))`,
/// with the series branch for `|beta e| < 1e-3`.
pub fn matsubara_quartic_bracket(e: f64, beta: f64) -> f64 {
    let z = beta * e;
    if z.abs() < 1e-3 {
        let w = 0.5 * z;
        let w2 = w * w;
        beta.powi(3) / 8.0 * (1.0 / 3.0 - 4.0 / 15.0 * w2 + 17.0 / 105.0 * w2 * w2)
    } else {
        let w = 0.5 * z;
        w.tanh() / (2.0 * e * e * e) - beta / (4.0 * e * e * w.cosh().powi(2))
    }
}
