//! The linear maps of the Birman-Schwinger analysis: the two-sided
//! multiplier `K_T`, its center-of-mass-frozen version `k_T`, the
//! operators `L_T = 1 - V^{1/2} K_T V^{1/2}` and
//! `ell_T = 1 - V^{1/2} k_T V^{1/2}` as per-line blocks, the projections
//! `P`, `lambda_kappa`, `P_kappa`, and the spectral-gap diagnostics.
//!
//! In the plane-wave-pair representation a kernel coefficient at centered
//! indices `(m, l)` is acted on diagonally: `K_T` multiplies by
//! `Xi_beta(e_m, e_l)` with `e_m = (2 pi h m)^2 - mu`, `k_T` by
//! `chi_beta(p^2 - mu)` with `p = pi h (m - l)`, and `lambda_kappa` masks
//! by `(hq)^2 <= kappa` with `q = 2 pi (m + l)`. The projection `P` is
//! rank one in the relative momentum within each fixed-`q` line.

use crate::error::{Error, Result};
use crate::model::{chi_beta, xi_beta, LatticeGrid, Potential};
use crate::opcalc::{com_rel_fourier, fourier_to_position, FourierKernel, PeriodicKernel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Entrywise action of `K_T` in the Fourier representation.
pub fn apply_kt_two_sided(fk: &FourierKernel, beta: f64, mu: f64) -> FourierKernel {
    let grid = fk.grid.clone();
    fk.map_multiplier(|m, l| {
        let em = grid.disp(m, mu);
        let el = grid.disp(l, mu);
        xi_beta(em, el, beta)
    })
}

/// Entrywise action of `k_T` (relative-momentum multiplier only).
pub fn apply_kt_frozen(fk: &FourierKernel, beta: f64, mu: f64) -> FourierKernel {
    let h = fk.grid.h();
    fk.map_multiplier(|m, l| {
        let p = PI * h * (m - l) as f64;
        chi_beta(p * p - mu, beta)
    })
}

/// `K_T(sigma)` on a position-space kernel.
pub fn kt_apply(sigma: &PeriodicKernel, beta: f64, mu: f64) -> PeriodicKernel {
    fourier_to_position(&apply_kt_two_sided(&com_rel_fourier(sigma), beta, mu))
}

/// `k_T(sigma)` on a position-space kernel.
pub fn kt_frozen_apply(sigma: &PeriodicKernel, beta: f64, mu: f64) -> PeriodicKernel {
    fourier_to_position(&apply_kt_frozen(&com_rel_fourier(sigma), beta, mu))
}

/// Truncated Matsubara form of the `K_T` multiplier,
/// `-(2/beta) sum_{n=-N}^{N-1} 1/((i w_n - e_m)(i w_n + e_l))`;
/// test oracle for the closed multiplier.
pub fn kt_multiplier_matsubara(em: f64, el: f64, beta: f64, n_max: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in -(n_max as i64)..(n_max as i64) {
        let w = PI * (2 * n + 1) as f64 / beta;
        let a = Complex64::new(-em, w);
        let b = Complex64::new(el, w);
        acc += (a * b).inv();
    }
    (-2.0 / beta * acc).re
}

/// The diagonal of the `-Delta_X / (1 - Delta_X)` comparison multiplier,
/// used by the `K_T - k_T` diagnostics.
pub fn com_smoothing_multiplier(q: f64) -> f64 {
    q * q / (1.0 + q * q)
}

/// One fixed-`q` line of the staggered dual lattice: the entries
/// `(row, col)` of the coefficient matrix that share `s = m + l`, in
/// increasing relative momentum `p = 2 pi h (s/2 - l)` order, together
/// with the index into the matching `phi`-transform table.
#[derive(Debug, Clone)]
pub struct QLine {
    pub s: i64,
    /// `(row, col, phi_index)` triples; `phi_index` addresses the integer
    /// table for even `s` and the half-shifted table for odd `s`.
    pub entries: Vec<(usize, usize, usize)>,
}

/// Enumerate all `2n - 1` lines `s = m + l` of an `n x n` coefficient grid.
pub fn q_lines(n: usize) -> Vec<QLine> {
    let n2 = (n / 2) as i64;
    let mut lines = Vec::with_capacity(2 * n - 1);
    for s in -(n as i64)..=(n as i64 - 2) {
        let m_lo = (-n2).max(s - n2 + 1);
        let m_hi = (n2 - 1).min(s + n2);
        let mut entries = Vec::with_capacity((m_hi - m_lo + 1) as usize);
        for m in m_lo..=m_hi {
            let l = s - m;
            let i = (m + n2) as usize;
            let j = (l + n2) as usize;
            // relative momentum index: t = (m - l)/2 for even s,
            // u = (m - l - 1)/2 for odd s
            let phi_index = if s.rem_euclid(2) == 0 {
                ((m - l) / 2 + n2) as usize
            } else {
                ((m - l - 1) / 2 + n2) as usize
            };
            entries.push((i, j, phi_index));
        }
        // order by increasing p = pi h (m - l): m ascending does that
        lines.push(QLine { s, entries });
    }
    lines
}

/// Discrete Fourier transforms of a relative-coordinate profile over the
/// signed displacement representatives: `table_int[t]` holds the
/// coefficient at `p = 2 pi h t`, `table_half[u]` at `p = 2 pi h (u + 1/2)`,
/// both with the `(2 pi)^{-1/2} delta` normalization that makes each
/// fixed-`q` line an exactly unit-normalized vector for a
/// `delta`-normalized profile.
#[derive(Debug, Clone)]
pub struct RelTransform {
    pub table_int: Vec<Complex64>,
    pub table_half: Vec<Complex64>,
}

impl RelTransform {
    pub fn new(grid: &LatticeGrid, profile: &[f64]) -> Result<Self> {
        let n = grid.n;
        if profile.len() != n {
            return Err(Error::Parameter("profile length must match grid".into()));
        }
        let delta = grid.delta();
        let c = delta / (2.0 * PI).sqrt();
        let n2 = (n / 2) as i64;
        let mut table_int = vec![Complex64::new(0.0, 0.0); n];
        let mut table_half = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            let t = idx as i64 - n2;
            let mut acc_i = Complex64::new(0.0, 0.0);
            let mut acc_h = Complex64::new(0.0, 0.0);
            for w in -n2..n2 {
                let val = profile[w.rem_euclid(n as i64) as usize];
                let ang_i = -2.0 * PI * (t as f64) * (w as f64) / n as f64;
                let ang_h = -2.0 * PI * (t as f64 + 0.5) * (w as f64) / n as f64;
                acc_i += Complex64::from_polar(val, ang_i);
                acc_h += Complex64::from_polar(val, ang_h);
            }
            table_int[idx] = acc_i * c;
            table_half[idx] = acc_h * c;
        }
        Ok(RelTransform { table_int, table_half })
    }

    pub fn value(&self, line_s: i64, phi_index: usize) -> Complex64 {
        if line_s.rem_euclid(2) == 0 {
            self.table_int[phi_index]
        } else {
            self.table_half[phi_index]
        }
    }
}

/// The projections of the Lyapunov-Schmidt reduction: `P` (rank one in
/// the relative coordinate, built from `phi_star`), the center-of-mass
/// band limit `lambda_kappa = 1((hq)^2 <= kappa)`, and their product
/// `P_kappa = lambda_kappa P`.
///
/// Each fixed-`q` line sees a window of the relative momentum grid; the
/// windowed `phi` samples are renormalized per line so that `P` is an
/// exact orthogonal projection on the lattice. For a profile that decays
/// below rounding inside the window the renormalization factor is `1` to
/// machine precision on every line that `lambda_kappa` keeps.
#[derive(Debug, Clone)]
pub struct ProjectionSet {
    pub grid: LatticeGrid,
    pub phi_star: Vec<f64>,
    pub kappa: f64,
    pub lines: Vec<QLine>,
    /// Per-line unit vectors (plain Euclidean normalization).
    line_vecs: Vec<Vec<Complex64>>,
    /// Per-line `2 pi h ||phi-window||^2` before renormalization; `1` up
    /// to the window truncation.
    pub line_weights: Vec<f64>,
}

impl ProjectionSet {
    pub fn new(grid: &LatticeGrid, phi_star: &[f64], kappa: f64) -> Result<Self> {
        if kappa <= 0.0 || kappa > 1.0 {
            return Err(Error::Parameter(format!("kappa must lie in (0, 1], got {kappa}")));
        }
        let delta = grid.delta();
        let nrm = delta * phi_star.iter().map(|x| x * x).sum::<f64>();
        if (nrm - 1.0).abs() > 1e-8 {
            return Err(Error::Parameter(format!(
                "phi_star must be delta-normalized (got ||phi||^2 = {nrm})"
            )));
        }
        let phi_tr = RelTransform::new(grid, phi_star)?;
        let lines = q_lines(grid.n);
        let w = 2.0 * PI * grid.h();
        let mut line_vecs = Vec::with_capacity(lines.len());
        let mut line_weights = Vec::with_capacity(lines.len());
        for line in &lines {
            let mut v: Vec<Complex64> = line
                .entries
                .iter()
                .map(|&(_, _, t)| phi_tr.value(line.s, t))
                .collect();
            let nsq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            line_weights.push(w * nsq);
            let nv = nsq.sqrt();
            if nv > 1e-150 {
                v.iter_mut().for_each(|z| *z /= nv);
            }
            line_vecs.push(v);
        }
        Ok(ProjectionSet {
            grid: grid.clone(),
            phi_star: phi_star.to_vec(),
            kappa,
            lines,
            line_vecs,
            line_weights,
        })
    }

    /// `lambda_kappa` mask for line `s`.
    pub fn mask(&self, s: i64) -> bool {
        let hq = 2.0 * PI * self.grid.h() * s as f64;
        hq * hq <= self.kappa
    }

    /// Unit vector of the relative profile on line index `li`.
    pub fn line_vec(&self, li: usize) -> &[Complex64] {
        &self.line_vecs[li]
    }

    /// Apply `P` (relative rank-one per line) to Fourier coefficients.
    pub fn apply_p(&self, fk: &FourierKernel) -> FourierKernel {
        self.apply_impl(fk, false)
    }

    /// Apply `P_kappa = lambda_kappa P`.
    pub fn apply_p_kappa(&self, fk: &FourierKernel) -> FourierKernel {
        self.apply_impl(fk, true)
    }

    fn apply_impl(&self, fk: &FourierKernel, masked: bool) -> FourierKernel {
        let n = self.grid.n;
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (line, v) in self.lines.iter().zip(self.line_vecs.iter()) {
            if masked && !self.mask(line.s) {
                continue;
            }
            let mut c = Complex64::new(0.0, 0.0);
            for (&(i, j, _), w) in line.entries.iter().zip(v.iter()) {
                c += w.conj() * fk.coeffs[(i, j)];
            }
            for (&(i, j, _), w) in line.entries.iter().zip(v.iter()) {
                out[(i, j)] = w * c;
            }
        }
        FourierKernel { grid: self.grid.clone(), coeffs: out }
    }

    /// Apply `lambda_kappa` alone.
    pub fn apply_lambda_kappa(&self, fk: &FourierKernel) -> FourierKernel {
        let n = self.grid.n;
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for line in &self.lines {
            if !self.mask(line.s) {
                continue;
            }
            for &(i, j, _) in &line.entries {
                out[(i, j)] = fk.coeffs[(i, j)];
            }
        }
        FourierKernel { grid: self.grid.clone(), coeffs: out }
    }

    /// hZ-Fourier coefficients of the extracted center-of-mass profile,
    /// `Psi-hat(q = 2 pi s) = sqrt(2 pi h) <w_line, sigma_line>` masked by
    /// `lambda_kappa`, indexed by `s + n` in a `2n` vector. The
    /// normalization makes `||Psi||_{H^s_h} = ||P_kappa sigma||_{H^s_h}`
    /// exact on the lattice.
    pub fn project_com_profile(&self, fk: &FourierKernel) -> Vec<Complex64> {
        let n = self.grid.n;
        let scale = (2.0 * PI * self.grid.h()).sqrt();
        let mut hat = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (line, v) in self.lines.iter().zip(self.line_vecs.iter()) {
            if !self.mask(line.s) {
                continue;
            }
            let mut c = Complex64::new(0.0, 0.0);
            for (&(i, j, _), w) in line.entries.iter().zip(v.iter()) {
                c += w.conj() * fk.coeffs[(i, j)];
            }
            hat[(line.s + n as i64) as usize] = c * scale;
        }
        hat
    }

    /// Expand center-of-mass coefficients back into the product-form
    /// coefficient matrix `Psi-hat(s) * w_line`, the exact lattice version
    /// of `Psi(X) phi_star(r)` within the `kappa` band.
    pub fn expand_com_profile(&self, hat: &[Complex64]) -> FourierKernel {
        let n = self.grid.n;
        let scale = 1.0 / (2.0 * PI * self.grid.h()).sqrt();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (line, v) in self.lines.iter().zip(self.line_vecs.iter()) {
            if !self.mask(line.s) {
                continue;
            }
            let c = hat[(line.s + n as i64) as usize] * scale;
            for (&(i, j, _), w) in line.entries.iter().zip(v.iter()) {
                out[(i, j)] = w * c;
            }
        }
        FourierKernel { grid: self.grid.clone(), coeffs: out }
    }
}

/// `ell_T = 1 - V^{1/2} k_T V^{1/2}` as a dense matrix acting on
/// relative-coordinate lattice functions (the `q = 0` fiber).
pub fn ell_t_matrix(
    pot: &Potential,
    grid: &LatticeGrid,
    beta: f64,
    mu: f64,
) -> Result<DMatrix<f64>> {
    let n = grid.n;
    // k_T = chi_beta(-Delta - mu): circulant; first row by inverse DFT of
    // the momentum diagonal
    let mut row = vec![0.0; n];
    for (d, rd) in row.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            let m = grid.m_of(i) as f64;
            let chi = chi_beta(grid.disp(grid.m_of(i), mu), beta);
            acc += chi * (2.0 * PI * m * d as f64 / n as f64).cos();
        }
        *rd = acc / n as f64;
    }
    let mut v = DVector::<f64>::zeros(n);
    for j in 0..n {
        v[j] = pot.eval_sqrt(grid.wrap_disp(j, 0))?;
    }
    let mut out = DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        for k in 0..n {
            out[(j, k)] -= v[j] * row[(j + n - k) % n] * v[k];
        }
    }
    Ok(out)
}

/// One per-`q` block of `L_T = 1 - V^{1/2} K_T V^{1/2}` in the relative
/// momentum basis of its line.
#[derive(Debug, Clone)]
pub struct LtBlock {
    pub s: i64,
    pub matrix: DMatrix<f64>,
}

/// Materialize every per-`q` block of `L_T`. Block-diagonality over `q`
/// is exact because both `V^{1/2}` and `K_T` commute with center-of-mass
/// translations.
pub fn build_lt_blocks(
    pot: &Potential,
    grid: &LatticeGrid,
    beta: f64,
    mu: f64,
) -> Result<Vec<LtBlock>> {
    let n = grid.n;
    let n2 = (n / 2) as i64;
    // signed-representative DFT of the V^{1/2} samples
    let mut sv = vec![0.0; n];
    for (k, svk) in sv.iter_mut().enumerate() {
        let mut acc = 0.0;
        for w in -n2..n2 {
            let vv = pot.eval_sqrt(w as f64 * grid.delta())?;
            acc += vv * (2.0 * PI * k as f64 * w as f64 / n as f64).cos();
        }
        *svk = acc / n as f64;
    }
    let lines = q_lines(n);
    let mut blocks = Vec::with_capacity(lines.len());
    for line in &lines {
        let len = line.entries.len();
        let mut w_mat = DMatrix::<f64>::zeros(len, len);
        for (a, &(ia, _, _)) in line.entries.iter().enumerate() {
            for (b, &(ib, _, _)) in line.entries.iter().enumerate() {
                // t_a - t_b = m_a - m_b regardless of line parity
                let dm = (ia as i64 - ib as i64).rem_euclid(n as i64) as usize;
                w_mat[(a, b)] = sv[dm];
            }
        }
        let mut wd = w_mat.clone();
        for (a, &(i, j, _)) in line.entries.iter().enumerate() {
            let m = i as i64 - n2;
            let l = j as i64 - n2;
            let d = xi_beta(grid.disp(m, mu), grid.disp(l, mu), beta);
            wd.column_mut(a).scale_mut(d);
        }
        let mat = DMatrix::<f64>::identity(len, len) - wd * w_mat;
        blocks.push(LtBlock { s: line.s, matrix: mat });
    }
    Ok(blocks)
}

/// Orthonormal basis of the complement of a unit vector (columns of a
/// Householder reflector).
pub fn orthonormal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut u = v.clone();
    u[0] -= 1.0;
    let nu = u.norm();
    if nu < 1e-14 {
        // v == e1: complement is e2..en
        let mut q = DMatrix::<f64>::zeros(n, n - 1);
        for i in 1..n {
            q[(i, i - 1)] = 1.0;
        }
        return q;
    }
    let u = u / nu;
    let mut q = DMatrix::<f64>::zeros(n, n - 1);
    for col in 1..n {
        for row in 0..n {
            let e = if row == col { 1.0 } else { 0.0 };
            q[(row, col - 1)] = e - 2.0 * u[row] * u[col];
        }
    }
    q
}

fn min_eig_sym(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral-gap diagnostics at the critical temperature.
#[derive(Debug, Clone, Serialize)]
pub struct GapDiagnostics {
    /// Smallest eigenvalue of `ell_{T_c}` off the zero mode.
    pub theta: f64,
    /// `min spec(P_perp L_{T_c} P_perp)` over the kernel space.
    pub min_eig_pperp: f64,
    /// `min spec(P_kappa_perp L_{T_c} P_kappa_perp)`.
    pub min_eig_pkappaperp: f64,
    pub kappa: f64,
    /// `min_eig_pkappaperp / kappa`, the implicit constant of the
    /// `>= kappa P_kappa_perp` lower bound.
    pub kappa_constant: f64,
}

/// Compute the restricted minimum eigenvalues behind the spectral-gap
/// assumptions. All three must be strictly positive; a non-positive
/// value flags a numerical violation of the gap assumptions.
pub fn gap_diagnostics(
    pot: &Potential,
    grid: &LatticeGrid,
    beta_c: f64,
    mu: f64,
    phi_star: &[f64],
    kappa: f64,
) -> Result<GapDiagnostics> {
    let ell = ell_t_matrix(pot, grid, beta_c, mu)?;
    let phi = DVector::from_column_slice(phi_star) * grid.delta().sqrt(); // unit 2-norm
    let q = orthonormal_complement(&phi);
    let theta = min_eig_sym(&(q.transpose() * &ell * &q));

    let blocks = build_lt_blocks(pot, grid, beta_c, mu)?;
    let ps = ProjectionSet::new(grid, phi_star, kappa)?;
    let mut min_pperp = f64::INFINITY;
    let mut min_pkperp = f64::INFINITY;
    for (li, block) in blocks.iter().enumerate() {
        let line = &ps.lines[li];
        debug_assert_eq!(line.s, block.s);
        let len = line.entries.len();
        if len == 1 {
            continue; // the complement within a single-entry line is trivial
        }
        let v = ps.line_vec(li);
        let im_mass: f64 = v.iter().map(|z| z.im * z.im).sum();
        if im_mass < 1e-20 {
            let phiv = DVector::<f64>::from_iterator(len, v.iter().map(|z| z.re));
            let qc = orthonormal_complement(&phiv);
            let m = qc.transpose() * &block.matrix * &qc;
            let me = min_eig_sym(&m);
            min_pperp = min_pperp.min(me);
            if ps.mask(block.s) {
                min_pkperp = min_pkperp.min(me);
            } else {
                min_pkperp = min_pkperp.min(min_eig_sym(&block.matrix));
            }
        } else {
            // phi picks up a complex phase on this line (wrap edge):
            // bound from the full block
            let me = min_eig_sym(&block.matrix);
            min_pperp = min_pperp.min(me);
            min_pkperp = min_pkperp.min(me);
        }
    }
    Ok(GapDiagnostics {
        theta,
        min_eig_pperp: min_pperp,
        min_eig_pkappaperp: min_pkperp,
        kappa,
        kappa_constant: min_pkperp / kappa,
    })
}
