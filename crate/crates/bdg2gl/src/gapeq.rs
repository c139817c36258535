//! Critical temperature, pair eigenfunction and the pair form factor:
//! the Birman-Schwinger spectral problem on the reflection-symmetric
//! subspace.
//!
//! `T_c` is the unique temperature at which the lowest eigenvalue of
//! `ell_T = 1 - V^{1/2} k_T V^{1/2}` on even functions crosses zero; the
//! zero mode is `phi_star` and `alpha_star = k_{T_c} V^{1/2} phi_star`
//! normalized so `||V^{1/2} alpha_star|| = 1`.

use crate::error::{Error, Result};
use crate::linear::ell_t_matrix;
use crate::model::{chi_beta, LatticeGrid, Potential};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

/// Output of the gap-equation solve on one lattice.
#[derive(Debug, Clone, Serialize)]
pub struct GapData {
    pub tc: f64,
    pub beta_c: f64,
    /// Zero mode of `ell_{T_c}`, real, even, `delta`-normalized, sign
    /// fixed so that its inner product with `V^{1/2} alpha_star` is
    /// positive.
    pub phi_star: Vec<f64>,
    /// `k_{T_c} V^{1/2} phi_star`, rescaled to `||V^{1/2} alpha|| = 1`.
    pub alpha_star: Vec<f64>,
    /// Spectral gap: second-smallest eigenvalue of `ell_{T_c}` on the
    /// even subspace.
    pub theta: f64,
    /// Smallest eigenvalue of `ell_{T_c}` on the odd subspace.
    pub min_eig_odd: f64,
    /// Residual `|lambda_min(ell_{T_c})|` after bisection.
    pub zero_mode_residual: f64,
    #[serde(skip)]
    pub grid: LatticeGrid,
}

/// Orthonormal basis of the even (reflection-symmetric) subspace in
/// position space: `j = 0`, `j = n/2`, and `(e_j + e_{n-j})/sqrt(2)`.
fn even_basis(n: usize) -> DMatrix<f64> {
    let dim = n / 2 + 1;
    let mut q = DMatrix::<f64>::zeros(n, dim);
    q[(0, 0)] = 1.0;
    q[(n / 2, 1)] = 1.0;
    let s = 0.5_f64.sqrt();
    for j in 1..n / 2 {
        q[(j, j + 1)] = s;
        q[(n - j, j + 1)] = s;
    }
    q
}

/// Orthonormal basis of the odd subspace: `(e_j - e_{n-j})/sqrt(2)`.
fn odd_basis(n: usize) -> DMatrix<f64> {
    let dim = n / 2 - 1;
    let mut q = DMatrix::<f64>::zeros(n, dim);
    let s = 0.5_f64.sqrt();
    for j in 1..n / 2 {
        q[(j, j - 1)] = s;
        q[(n - j, j - 1)] = -s;
    }
    q
}

fn sorted_eigs(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = a.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(se.eigenvectors.nrows(), idx.len(), |r, c| {
        se.eigenvectors[(r, idx[c])]
    });
    (vals, vecs)
}

/// Smallest eigenvalue of `ell_T` on the even subspace, with its
/// eigenvector mapped back to the full lattice.
pub fn lowest_eig_ellt(
    pot: &Potential,
    grid: &LatticeGrid,
    temperature: f64,
    mu: f64,
) -> Result<(f64, Vec<f64>)> {
    if temperature <= 0.0 {
        return Err(Error::Parameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let ell = ell_t_matrix(pot, grid, 1.0 / temperature, mu)?;
    let q = even_basis(grid.n);
    let restricted = q.transpose() * &ell * &q;
    let (vals, vecs) = sorted_eigs(&restricted);
    let v_full = &q * vecs.column(0);
    Ok((vals[0], v_full.as_slice().to_vec()))
}

/// All even-sector eigenvalues of `ell_T` (ascending) plus the lowest
/// eigenvector; used by the bisection and the gap check.
fn even_spectrum(
    pot: &Potential,
    grid: &LatticeGrid,
    beta: f64,
    mu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ell = ell_t_matrix(pot, grid, beta, mu)?;
    let q = even_basis(grid.n);
    let restricted = q.transpose() * &ell * &q;
    let (vals, vecs) = sorted_eigs(&restricted);
    let v_full = &q * vecs.column(0);
    Ok((vals, v_full.as_slice().to_vec()))
}

/// Apply `k_T = chi_beta(-Delta - mu)` to a lattice function (spectrally).
pub fn apply_kt_function(grid: &LatticeGrid, beta: f64, mu: f64, f: &[f64]) -> Vec<f64> {
    let n = grid.n;
    // project on cosine/sine modes directly; n <= 512 keeps this cheap
    let mut out = vec![0.0; n];
    for i in 0..n {
        let m = grid.m_of(i) as f64;
        let chi = chi_beta(grid.disp(grid.m_of(i), mu), beta);
        // coefficient c_m = (1/n) sum_j f_j e^{-2 pi i m j / n}
        let mut cr = 0.0;
        let mut ci = 0.0;
        for (j, fj) in f.iter().enumerate() {
            let ang = 2.0 * PI * m * j as f64 / n as f64;
            cr += fj * ang.cos();
            ci -= fj * ang.sin();
        }
        cr /= n as f64;
        ci /= n as f64;
        for (j, oj) in out.iter_mut().enumerate() {
            let ang = 2.0 * PI * m * j as f64 / n as f64;
            *oj += chi * (cr * ang.cos() - ci * ang.sin());
        }
        let _ = i;
    }
    out
}

/// Find the critical temperature by bisection on the lowest even
/// eigenvalue of `ell_T`, then assemble the gap data.
pub fn find_tc(pot: &Potential, grid: &LatticeGrid, mu: f64, tol: f64) -> Result<GapData> {
    if tol <= 0.0 {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    let scale = mu.abs().max(pot.norm_linf).max(1e-3);
    let mut t_lo = 1e-4 * scale;
    let mut t_hi = 10.0 * scale;
    let (lam_lo, _) = even_spectrum(pot, grid, 1.0 / t_lo, mu).map(|(v, w)| (v[0], w))?;
    if lam_lo >= 0.0 {
        return Err(Error::AssumptionViolation(format!(
            "(A3) fails numerically for this V, mu: lowest eigenvalue at T = {t_lo:.3e} is {lam_lo:.3e} >= 0"
        )));
    }
    let mut lam_hi = even_spectrum(pot, grid, 1.0 / t_hi, mu)?.0[0];
    let mut expand = 0;
    while lam_hi <= 0.0 && expand < 8 {
        t_hi *= 4.0;
        lam_hi = even_spectrum(pot, grid, 1.0 / t_hi, mu)?.0[0];
        expand += 1;
    }
    if lam_hi <= 0.0 {
        return Err(Error::AssumptionViolation(
            "no sign change of the lowest eigenvalue up to very high temperature".into(),
        ));
    }
    let mut tc = 0.5 * (t_lo + t_hi);
    let mut lam_mid;
    let mut vals;
    let mut vec0;
    loop {
        tc = 0.5 * (t_lo + t_hi);
        let (v, w) = even_spectrum(pot, grid, 1.0 / tc, mu)?;
        vals = v;
        vec0 = w;
        lam_mid = vals[0];
        if lam_mid.abs() <= tol || (t_hi - t_lo) < 1e-15 * tc {
            break;
        }
        if lam_mid < 0.0 {
            t_lo = tc;
        } else {
            t_hi = tc;
        }
    }
    if lam_mid.abs() > tol {
        return Err(Error::Convergence { iterations: 0, residual: lam_mid.abs() });
    }
    let theta = vals[1];
    if theta < 10.0 * tol {
        return Err(Error::AssumptionViolation(format!(
            "(A4) simplicity at risk: gap to the second even eigenvalue is {theta:.3e}"
        )));
    }
    // odd-sector positivity (not covered by the symmetric-subspace T_c)
    let ell = ell_t_matrix(pot, grid, 1.0 / tc, mu)?;
    let qo = odd_basis(grid.n);
    let odd = qo.transpose() * &ell * &qo;
    let min_eig_odd = odd
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig_odd <= 0.0 {
        return Err(Error::AssumptionViolation(format!(
            "odd-sector eigenvalue {min_eig_odd:.3e} <= 0 at T_c: even-sector pairing is not dominant"
        )));
    }

    // delta-normalize the zero mode
    let delta = grid.delta();
    let nrm = (delta * vec0.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let mut phi_star: Vec<f64> = vec0.iter().map(|x| x / nrm).collect();
    // canonical sign: positive overlap with V^{1/2}
    let mut ip = 0.0;
    for (j, p) in phi_star.iter().enumerate() {
        ip += pot.eval_sqrt(grid.wrap_disp(j, 0))? * p;
    }
    if ip < 0.0 {
        phi_star.iter_mut().for_each(|x| *x = -*x);
    }

    let beta_c = 1.0 / tc;
    let alpha_star = alpha_star_from_phi(pot, grid, beta_c, mu, &phi_star)?;

    Ok(GapData {
        tc,
        beta_c,
        phi_star,
        alpha_star,
        theta,
        min_eig_odd,
        zero_mode_residual: lam_mid.abs(),
        grid: grid.clone(),
    })
}

/// `alpha_star = k_{T_c} V^{1/2} phi_star`, rescaled to unit
/// `||V^{1/2} alpha_star||`.
pub fn alpha_star_from_phi(
    pot: &Potential,
    grid: &LatticeGrid,
    beta_c: f64,
    mu: f64,
    phi_star: &[f64],
) -> Result<Vec<f64>> {
    let n = grid.n;
    let mut vphi = vec![0.0; n];
    for j in 0..n {
        vphi[j] = pot.eval_sqrt(grid.wrap_disp(j, 0))? * phi_star[j];
    }
    let mut alpha = apply_kt_function(grid, beta_c, mu, &vphi);
    let delta = grid.delta();
    let mut nrm2 = 0.0;
    for (j, a) in alpha.iter().enumerate() {
        let v = pot.eval(grid.wrap_disp(j, 0))?;
        nrm2 += delta * v * a * a;
    }
    let nrm = nrm2.sqrt();
    if nrm < 1e-300 {
        return Err(Error::Numerical("alpha_star collapsed to zero".into()));
    }
    alpha.iter_mut().for_each(|x| *x /= nrm);
    Ok(alpha)
}

/// Pair form factor `t_star(p) = 2 (2 pi)^{-1/2} delta sum_r (V alpha)(r) cos(p r)`
/// over signed displacement representatives; real, even, evaluable at any
/// continuum momentum.
pub fn t_star_eval(gap: &GapData, pot: &Potential, p: f64) -> Result<f64> {
    let grid = &gap.grid;
    let n = grid.n;
    let n2 = (n / 2) as i64;
    let delta = grid.delta();
    let mut acc = 0.0;
    for w in -n2..n2 {
        let r = w as f64 * delta;
        let j = w.rem_euclid(n as i64) as usize;
        acc += pot.eval(r)? * gap.alpha_star[j] * (p * r).cos();
    }
    Ok(2.0 / (2.0 * PI).sqrt() * delta * acc)
}

/// Sample `t_star` on a uniform momentum grid.
pub fn t_star_sampled(gap: &GapData, pot: &Potential, p_grid: &[f64]) -> Result<Vec<f64>> {
    p_grid.iter().map(|&p| t_star_eval(gap, pot, p)).collect()
}

/// Residual of the defining eigenvalue equation,
/// `||alpha - k_{T_c} V alpha||_{L^2(delta)}`.
pub fn alpha_star_residual(gap: &GapData, pot: &Potential, mu: f64) -> Result<f64> {
    let grid = &gap.grid;
    let n = grid.n;
    let mut valpha = vec![0.0; n];
    for j in 0..n {
        valpha[j] = pot.eval(grid.wrap_disp(j, 0))? * gap.alpha_star[j];
    }
    let back = apply_kt_function(grid, gap.beta_c, mu, &valpha);
    let delta = grid.delta();
    let mut acc = 0.0;
    for j in 0..n {
        let d = gap.alpha_star[j] - back[j];
        acc += delta * d * d;
    }
    Ok(acc.sqrt())
}
