//! Physical parameters, interaction potentials, lattice grids and the
//! scalar special functions shared by every other module.
//!
//! All energies are in units where `hbar = 2m = 1`, so the free
//! dispersion is `p^2 - mu`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Removable-singularity switch radius used by `xi_beta` and `gl_weights`.
pub const EPS_SWITCH: f64 = 1e-4;

/// Exponent-rescaling threshold for the Ginzburg-Landau weight functions.
pub const Z_BIG: f64 = 30.0;

/// Fermionic Matsubara frequency `omega_n = pi (2n + 1) / beta`.
pub fn matsubara_freq(n: i64, beta: f64) -> Result<f64> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::Parameter(format!(
            "matsubara_freq requires beta > 0, got {beta}"
        )));
    }
    Ok(PI * (2 * n + 1) as f64 / beta)
}

/// `sinh(x)/x` with a series branch near the removable point.
fn sinhc(x: f64) -> f64 {
    if x.abs() < EPS_SWITCH {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// `ln cosh(t)`, stable for arbitrarily large `t`.
fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln |sinh(x)|` for `x != 0`, stable for large `x`.
fn ln_sinh_abs(x: f64) -> f64 {
    let a = x.abs();
    a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2
}

/// The two-energy kernel
/// `Xi_beta(E, E') = (tanh(beta E / 2) + tanh(beta E' / 2)) / (E + E')`
/// with the value `(beta/2) / cosh^2(beta E / 2)` at the removable point
/// `E' = -E`.
///
/// Implemented through the cancellation-free rearrangement
/// `Xi = (beta/2) sinhc(a + b) sech(a) sech(b)` with `a = beta E / 2`,
/// `b = beta E' / 2`, which is strictly positive and symmetric.
pub fn xi_beta(e1: f64, e2: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    let a = 0.5 * beta * e1;
    let b = 0.5 * beta * e2;
    let x = a + b;
    if a.abs() < 350.0 && b.abs() < 350.0 {
        0.5 * beta * sinhc(x) / (a.cosh() * b.cosh())
    } else if x.abs() < 1.0 {
        // near-cancelling huge arguments: keep sinhc separate
        0.5 * beta * sinhc(x) * (-(ln_cosh(a) + ln_cosh(b))).exp()
    } else {
        let ln_mag = ln_sinh_abs(x) - ln_cosh(a) - ln_cosh(b);
        0.5 * beta * ln_mag.exp() / x.abs() * 1.0_f64.copysign(1.0)
    }
}

/// `chi_beta(E) = tanh(beta E / 2) / E`, the diagonal of `Xi_beta`.
pub fn chi_beta(e: f64, beta: f64) -> f64 {
    xi_beta(e, e, beta)
}

/// `f_beta(p, q) = Xi_beta(|p|^2 - mu, |q|^2 - mu)` for momentum vectors.
pub fn f_beta(p: &[f64], q: &[f64], beta: f64, mu: f64) -> f64 {
    let ep: f64 = p.iter().map(|x| x * x).sum::<f64>() - mu;
    let eq: f64 = q.iter().map(|x| x * x).sum::<f64>() - mu;
    xi_beta(ep, eq, beta)
}

/// Scalar version of `f_beta` for one-dimensional momenta.
pub fn f_beta_1d(p: f64, q: f64, beta: f64, mu: f64) -> f64 {
    xi_beta(p * p - mu, q * q - mu, beta)
}

/// The Ginzburg-Landau weight functions
/// `g1(z) = (e^{2z} - 2 z e^z - 1) / (z^2 (1 + e^z)^2)` and
/// `g2(z) = 2 e^z (e^z - 1) / (z (e^z + 1)^3)`.
///
/// `g1` is odd and `g2` is even. Near `z = 0` series branches are used;
/// beyond `|z| = Z_BIG` the quotients are rescaled by the dominant
/// exponential so no intermediate overflows.
pub fn gl_weights(z: f64) -> (f64, f64) {
    (g1_weight(z), g2_weight(z))
}

fn g1_weight(z: f64) -> f64 {
    let az = z.abs();
    if az < EPS_SWITCH {
        let z2 = z * z;
        z / 12.0 - z * z2 / 60.0 + 17.0 * z * z2 * z2 / 6720.0
    } else if az <= Z_BIG {
        // g1(z) = (sinh z - z) / (2 z^2 cosh^2(z/2)), cancellation-free
        // for |z| above the series radius
        let c = (0.5 * z).cosh();
        (z.sinh() - z) / (2.0 * z * z * c * c)
    } else {
        let w = az;
        let ew = (-w).exp();
        let val = (1.0 - 2.0 * w * ew - ew * ew) / (w * w * (1.0 + ew) * (1.0 + ew));
        val.copysign(z)
    }
}

fn g2_weight(z: f64) -> f64 {
    let az = z.abs();
    if az == 0.0 {
        0.25
    } else if az < EPS_SWITCH {
        let z2 = z * z;
        0.25 - z2 / 12.0 + 17.0 * z2 * z2 / 960.0
    } else if az <= Z_BIG {
        // g2(z) = tanh(z/2) / (2 z cosh^2(z/2))
        let c = (0.5 * z).cosh();
        (0.5 * z).tanh() / (2.0 * z * c * c)
    } else {
        let w = az;
        let ew = (-w).exp();
        let d = 1.0 + ew;
        2.0 * ew * (1.0 - ew) / (w * d * d * d)
    }
}

/// `g1(z)/z`, even and positive, with the series branch radius `1e-3`
/// used by the coefficient quadratures.
pub fn g1_over_z(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 / 12.0 - z2 / 60.0 + 17.0 * z2 * z2 / 6720.0
    } else {
        g1_weight(z) / z
    }
}

/// Interaction potential `V >= 0`, reflection symmetric, `L^1 \cap L^inf`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `v0 exp(-x^2 / (2 a^2))`
    Gaussian { v0: f64, a: f64 },
    /// Values sampled on a symmetric uniform grid `[-x_max, x_max]`.
    Table { x_max: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    pub dim: usize,
    /// Cached `L^1` norm over `R^dim`.
    pub norm_l1: f64,
    /// Cached `L^inf` norm.
    pub norm_linf: f64,
    /// Cached `sup |x|^2 V(x)`.
    pub norm_x2v: f64,
}

impl Potential {
    pub fn gaussian(v0: f64, a: f64, dim: usize) -> Result<Self> {
        if v0 <= 0.0 || a <= 0.0 {
            return Err(Error::Parameter(format!(
                "gaussian potential needs v0 > 0 and a > 0, got v0={v0}, a={a}"
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        // sup of x^2 v0 e^{-x^2/(2a^2)} is at |x|^2 = 2a^2
        let norm_x2v = 2.0 * a * a * v0 * (-1.0_f64).exp();
        Ok(Potential {
            kind: PotentialKind::Gaussian { v0, a },
            dim,
            norm_l1: v0 * (a * (2.0 * PI).sqrt()).powi(dim as i32),
            norm_linf: v0,
            norm_x2v,
        })
    }

    /// Build a tabulated potential from samples on a symmetric grid.
    /// The sample count must be odd so that `x = 0` is a grid point.
    pub fn table(x_max: f64, values: Vec<f64>) -> Result<Self> {
        if x_max <= 0.0 || values.len() < 3 || values.len() % 2 == 0 {
            return Err(Error::Parameter(
                "table potential needs x_max > 0 and an odd number (>= 3) of samples".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter(
                "table potential samples must be finite and nonnegative".into(),
            ));
        }
        let m = values.len();
        for i in 0..m {
            let v = values[i];
            let w = values[m - 1 - i];
            if (v - w).abs() > 1e-12 * v.abs().max(w.abs()).max(1.0) {
                return Err(Error::Parameter(
                    "table potential must be reflection symmetric".into(),
                ));
            }
        }
        let dx = 2.0 * x_max / (m - 1) as f64;
        // trapezoid on the grid; endpoints carry half weight
        let mut l1 = 0.0;
        for (i, v) in values.iter().enumerate() {
            let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
            l1 += w * v * dx;
        }
        let linf = values.iter().cloned().fold(0.0, f64::max);
        let x2v = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = -x_max + i as f64 * dx;
                x * x * v
            })
            .fold(0.0, f64::max);
        Ok(Potential {
            kind: PotentialKind::Table { x_max, values },
            dim: 1,
            norm_l1: l1,
            norm_linf: linf,
            norm_x2v: x2v,
        })
    }

    /// Pointwise evaluation. For the Gaussian kind `x` may be any real
    /// number (the radius in d > 1); table lookups outside the grid are
    /// a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.kind {
            PotentialKind::Gaussian { v0, a } => Ok(v0 * (-x * x / (2.0 * a * a)).exp()),
            PotentialKind::Table { x_max, values } => {
                if x.abs() > *x_max * (1.0 + 1e-12) {
                    return Err(Error::Domain(format!(
                        "table potential queried at |x| = {} > x_max = {}",
                        x.abs(),
                        x_max
                    )));
                }
                let m = values.len();
                let dx = 2.0 * x_max / (m - 1) as f64;
                let t = ((x + x_max) / dx).clamp(0.0, (m - 1) as f64);
                let i = (t.floor() as usize).min(m - 2);
                let frac = t - i as f64;
                Ok(values[i] * (1.0 - frac) + values[i + 1] * frac)
            }
        }
    }

    /// `V^{1/2}(x)`.
    pub fn eval_sqrt(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.sqrt())
    }

    /// Fourier transform with the symmetric convention
    /// `(2 pi)^{-d/2} \int V(x) e^{-i k x} dx`; closed form for the
    /// Gaussian kind (`v0 a^d e^{-a^2 k^2 / 2}`), quadrature for tables.
    pub fn fourier(&self, k: f64) -> f64 {
        match &self.kind {
            PotentialKind::Gaussian { v0, a } => {
                v0 * a.powi(self.dim as i32) * (-0.5 * a * a * k * k).exp()
            }
            PotentialKind::Table { x_max, values } => {
                let m = values.len();
                let dx = 2.0 * x_max / (m - 1) as f64;
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let x = -x_max + i as f64 * dx;
                    let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                    acc += w * v * (k * x).cos() * dx;
                }
                acc / (2.0 * PI).sqrt()
            }
        }
    }

    /// Write the two-column plain text table format.
    pub fn write_table<W: std::io::Write>(&self, mut w: W, n_samples: usize) -> Result<()> {
        writeln!(w, "# bdg2gl-potential v1")?;
        let x_max = match &self.kind {
            PotentialKind::Gaussian { a, .. } => 8.0 * a,
            PotentialKind::Table { x_max, .. } => *x_max,
        };
        let m = if n_samples % 2 == 0 { n_samples + 1 } else { n_samples };
        let dx = 2.0 * x_max / (m - 1) as f64;
        for i in 0..m {
            let x = -x_max + i as f64 * dx;
            writeln!(w, "{:.17e} {:.17e}", x, self.eval(x)?)?;
        }
        Ok(())
    }

    /// Parse the two-column plain text table format.
    pub fn read_table<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty potential table".into()))??;
        if header.trim() != "# bdg2gl-potential v1" {
            return Err(Error::Config(format!(
                "unexpected potential table header: {header:?}"
            )));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad table line: {line:?}")))?;
            let v: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad table line: {line:?}")))?;
            xs.push(x);
            vs.push(v);
        }
        if xs.len() < 3 {
            return Err(Error::Config("potential table has fewer than 3 samples".into()));
        }
        let x_max = xs.last().unwrap().abs().max(xs[0].abs());
        Potential::table(x_max, vs)
    }
}

/// The physical problem instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chemical potential.
    pub mu: f64,
    /// Spatial dimension, 1..=3. The kernel pipeline runs in d = 1.
    pub dim: usize,
    /// Temperature-offset constant `D > 0` of the near-critical regime.
    pub big_d: f64,
    /// Scale parameter `h <= 1`.
    pub h: f64,
    /// Inverse critical temperature; filled in by the gap-equation solver.
    pub beta_c: f64,
}

impl ModelParams {
    pub fn new(mu: f64, dim: usize, big_d: f64, h: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if big_d <= 0.0 {
            return Err(Error::Parameter(format!("D must be positive, got {big_d}")));
        }
        if h <= 0.0 || h > 1.0 {
            return Err(Error::Parameter(format!("h must lie in (0, 1], got {h}")));
        }
        Ok(ModelParams { mu, dim, big_d, h, beta_c: f64::NAN })
    }

    pub fn with_beta_c(mut self, beta_c: f64) -> Self {
        self.beta_c = beta_c;
        self
    }

    /// Inverse temperature `beta = beta_c (1 + D h^2)`, exactly.
    pub fn beta(&self) -> f64 {
        self.beta_c * (1.0 + self.big_d * self.h * self.h)
    }

    /// Temperature `T = 1 / beta`.
    pub fn temperature(&self) -> f64 {
        1.0 / self.beta()
    }
}

/// Uniform periodic lattice: `n` sites on a torus of circumference `len`.
///
/// The kernel pipeline places the whole problem on one period, so the
/// relative and center-of-mass grids coincide: spacing `delta = len / n`,
/// relative momenta `2 pi m / len` for centered integers `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub n: usize,
    pub len: f64,
}

impl LatticeGrid {
    pub fn new(n: usize, len: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::Parameter(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if n > 512 {
            return Err(Error::Parameter(format!(
                "grid size {n} exceeds the dense-kernel limit 512"
            )));
        }
        if len <= 0.0 || !len.is_finite() {
            return Err(Error::Parameter(format!("box length must be positive, got {len}")));
        }
        Ok(LatticeGrid { n, len })
    }

    /// Torus of circumference `1/h` for the scale parameter `h`.
    pub fn torus(n: usize, h: f64) -> Result<Self> {
        if h <= 0.0 {
            return Err(Error::Parameter(format!("h must be positive, got {h}")));
        }
        Self::new(n, 1.0 / h)
    }

    /// Effective scale parameter of this torus (`1 / len`).
    pub fn h(&self) -> f64 {
        1.0 / self.len
    }

    /// Lattice spacing `delta = len / n = 1 / (h n)`.
    pub fn delta(&self) -> f64 {
        self.len / self.n as f64
    }

    /// Position of site `j`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.delta()
    }

    /// Centered momentum index for storage row `i` (fftshift layout:
    /// `m = i - n/2`).
    pub fn m_of(&self, i: usize) -> i64 {
        i as i64 - (self.n / 2) as i64
    }

    /// Relative momentum `2 pi m / len` of centered index `m`.
    pub fn k_of_m(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.len
    }

    /// Dispersion `k_m^2 - mu`.
    pub fn disp(&self, m: i64, mu: f64) -> f64 {
        let k = self.k_of_m(m);
        k * k - mu
    }

    /// Signed displacement `x_j - x_k` wrapped to `[-len/2, len/2)`.
    pub fn wrap_disp(&self, j: usize, k: usize) -> f64 {
        let mut d = self.x(j) - self.x(k);
        let half = 0.5 * self.len;
        while d >= half {
            d -= self.len;
        }
        while d < -half {
            d += self.len;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matsubara_examples() {
        assert_relative_eq!(matsubara_freq(0, PI).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(matsubara_freq(-1, 2.0).unwrap(), -PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(matsubara_freq(1, 2.0).unwrap(), 3.0 * PI / 2.0, max_relative = 1e-15);
        assert!(matsubara_freq(0, 0.0).is_err());
        assert!(matsubara_freq(0, -1.0).is_err());
    }

    #[test]
    fn xi_beta_examples() {
        // limit value beta/2 / cosh^2(0)
        assert_relative_eq!(xi_beta(0.0, 0.0, 2.0), 1.0, max_relative = 1e-14);
        // removable branch E' = -E
        let c = 1.0_f64.cosh();
        assert_relative_eq!(xi_beta(1.0, -1.0, 2.0), 1.0 / (c * c), max_relative = 1e-14);
        // reduces to chi_beta
        assert_relative_eq!(xi_beta(1.0, 1.0, 2.0), 1.0_f64.tanh(), max_relative = 1e-14);
        assert_relative_eq!(chi_beta(0.0, 2.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(chi_beta(2.0, 1.0), 1.0_f64.tanh() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(chi_beta(-2.0, 1.0), chi_beta(2.0, 1.0), max_relative = 1e-15);
    }

    #[test]
    fn xi_beta_symmetry_positivity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10_000 {
            let e1 = rng.gen_range(-15.0..15.0);
            let e2 = rng.gen_range(-15.0..15.0);
            let beta = rng.gen_range(0.05..20.0);
            let a = xi_beta(e1, e2, beta);
            let b = xi_beta(e2, e1, beta);
            assert!(a > 0.0, "xi_beta must be positive: {a} at ({e1},{e2},{beta})");
            assert!((a - b).abs() <= 1e-12 * a.abs(), "symmetry failed");
        }
    }

    #[test]
    fn xi_beta_branch_agreement_at_switch() {
        let beta = 2.0;
        for &e in &[0.3, 1.0, -2.0] {
            // |E + E'| exactly at the switch radius: direct path
            let e2 = -e + EPS_SWITCH * 2.0 / beta;
            let branch = xi_beta(e, e2, beta);
            // naive quotient, well conditioned for moderate |E|
            let direct = ((0.5 * beta * e).tanh() + (0.5 * beta * e2).tanh()) / (e + e2);
            assert_relative_eq!(direct, branch, max_relative = 5e-11);
            // slightly inside the radius: series path against the exact
            // rearranged quotient
            let e3 = -e + EPS_SWITCH / beta;
            let inside = xi_beta(e, e3, beta);
            let a = 0.5 * beta * e;
            let b = 0.5 * beta * e3;
            let x: f64 = a + b;
            let exact = 0.5 * beta * (x.sinh() / x) / (a.cosh() * b.cosh());
            assert_relative_eq!(inside, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn xi_beta_huge_arguments() {
        // log-space path agrees with the analytic value where it does not
        // underflow: for large same-sign energies both tanh factors are 1
        let v = xi_beta(400.0, 360.0, 2.0);
        assert_relative_eq!(v, 2.0 / 760.0, max_relative = 1e-10);
        // genuine underflow region degrades gracefully to zero
        let w = xi_beta(900.0, -899.9, 2.0);
        assert!(w >= 0.0 && w.is_finite());
        assert!(xi_beta(1000.0, -999.0, 1.0) < 1e-300);
    }

    #[test]
    fn lemma_4_4_inequality_random() {
        // f_beta(p,q) <= (f_beta(p,p) + f_beta(q,q)) / 2 with slack >= -1e-14
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..10_000 {
            let p = [rng.gen_range(-4.0..4.0)];
            let q = [rng.gen_range(-4.0..4.0)];
            let beta = rng.gen_range(0.1..30.0);
            let mu = rng.gen_range(-2.0..3.0);
            let lhs = f_beta(&p, &q, beta, mu);
            let rhs = 0.5 * (f_beta(&p, &p, beta, mu) + f_beta(&q, &q, beta, mu));
            assert!(
                rhs - lhs >= -1e-14 * rhs.abs().max(1.0),
                "Lemma 4.4 violated: lhs={lhs}, rhs={rhs}"
            );
        }
    }

    #[test]
    fn f_beta_diagonal_is_chi() {
        let mu = 1.3;
        let beta = 2.7;
        let p = [0.8];
        assert_relative_eq!(
            f_beta(&p, &p, beta, mu),
            chi_beta(0.64 - mu, beta),
            max_relative = 1e-14
        );
        // |p|^2 = mu gives beta/2
        let pf = [mu.sqrt()];
        assert_relative_eq!(f_beta(&pf, &pf, beta, mu), beta / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn gl_weights_frozen_oracle_values() {
        // high-precision reference evaluations (40-digit arithmetic)
        let (g1, g2) = gl_weights(1.0);
        assert_relative_eq!(g1, 0.06889329077704605342747, max_relative = 1e-14);
        assert_relative_eq!(g2, 0.181715495345896818885, max_relative = 1e-14);
        let (g1, g2) = gl_weights(0.5);
        assert_relative_eq!(g1, 0.03965980080845856083399, max_relative = 1e-14);
        assert_relative_eq!(g2, 0.2302271794092829622375, max_relative = 1e-14);
        let (g1, g2) = gl_weights(2.5);
        assert_relative_eq!(g1, 0.07964240915711553807228, max_relative = 1e-14);
        assert_relative_eq!(g2, 0.04757426867634725421897, max_relative = 1e-14);
        // rescaled branch
        let (g1, g2) = gl_weights(30.5);
        assert_relative_eq!(g1, 0.001074979844124078815698, max_relative = 1e-13);
        assert_relative_eq!(g2, 3.721760808282907492301e-15, max_relative = 1e-12);
    }

    #[test]
    fn gl_weights_zero_limits_via_series() {
        // series oracle: limits (0, 1/4)
        let (g1, g2) = gl_weights(0.0);
        assert_eq!(g1, 0.0);
        assert_relative_eq!(g2, 0.25, max_relative = 1e-15);
        for &z in &[1e-9, 1e-6, 1e-5] {
            let (g1, g2) = gl_weights(z);
            assert_relative_eq!(g1 / z, 1.0 / 12.0, max_relative = 1e-9);
            assert_relative_eq!(g2, 0.25, max_relative = 1e-9);
        }
    }

    #[test]
    fn gl_weights_parity_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let z = rng.gen_range(-60.0..60.0);
            let (g1p, g2p) = gl_weights(z);
            let (g1m, g2m) = gl_weights(-z);
            assert!((g1p + g1m).abs() <= 1e-13 * g1p.abs().max(1e-300));
            assert!((g2p - g2m).abs() <= 1e-13 * g2p.abs().max(1e-300));
            if z != 0.0 {
                assert!(g1p / z > 0.0, "g1(z)/z must be positive");
            }
        }
    }

    #[test]
    fn gl_weights_monotone_decay_log_grid() {
        let mut prev = gl_weights(1.0);
        for i in 1..22 {
            let z = 1.0 * (1.3_f64).powi(i);
            let cur = gl_weights(z);
            if z > 6.0 {
                assert!(cur.0 < prev.0, "g1 must decay for large z");
            }
            assert!(cur.1 < prev.1, "g2 must decay at z = {z}");
            prev = cur;
        }
        assert!(gl_weights(200.0).0 < 1e-3);
        assert!(gl_weights(200.0).1 < 1e-80);
    }

    #[test]
    fn g1_over_z_series_matches_direct() {
        assert_relative_eq!(g1_over_z(0.0), 1.0 / 12.0, max_relative = 1e-15);
        // both branches near the 1e-3 radius
        assert_relative_eq!(g1_over_z(2e-3), g1_weight(2e-3) / 2e-3, max_relative = 1e-12);
        assert_relative_eq!(g1_over_z(0.5), g1_weight(0.5) / 0.5, max_relative = 1e-15);
        assert_relative_eq!(g1_over_z(-0.5), g1_over_z(0.5), max_relative = 1e-15);
    }

    #[test]
    fn potential_gaussian_examples() {
        let v = Potential::gaussian(1.0, 1.0, 1).unwrap();
        assert_relative_eq!(v.eval(0.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(v.eval(1.5).unwrap(), v.eval(-1.5).unwrap(), max_relative = 1e-15);
        assert_relative_eq!(v.norm_l1, (2.0 * PI).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(v.norm_linf, 1.0, max_relative = 1e-15);
        assert!(v.norm_x2v.is_finite());
        assert!(Potential::gaussian(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn potential_table_rejects_negative_and_asymmetric() {
        assert!(Potential::table(1.0, vec![0.1, -0.2, 0.1]).is_err());
        assert!(Potential::table(1.0, vec![0.1, 0.2, 0.3]).is_err());
        let v = Potential::table(1.0, vec![0.1, 0.7, 0.1]).unwrap();
        assert_relative_eq!(v.eval(0.0).unwrap(), 0.7, max_relative = 1e-15);
        assert!(v.eval(1.5).is_err());
    }

    #[test]
    fn potential_table_roundtrip() {
        let v = Potential::gaussian(2.0, 0.7, 1).unwrap();
        let mut buf = Vec::new();
        v.write_table(&mut buf, 257).unwrap();
        let w = Potential::read_table(std::io::BufReader::new(&buf[..])).unwrap();
        // linear interpolation on 257 samples is accurate to O(dx^2)
        for &x in &[0.0, 0.3, -1.1, 2.2] {
            assert_relative_eq!(v.eval(x).unwrap(), w.eval(x).unwrap(), max_relative = 5e-3);
        }
    }

    #[test]
    fn beta_h_relation_exact() {
        let p = ModelParams::new(1.0, 1, 1.5, 0.2).unwrap().with_beta_c(3.0);
        assert_eq!(p.beta(), 3.0 * (1.0 + 1.5 * 0.04));
        assert!(p.beta() > p.beta_c);
        for &h in &[1e-3, 0.05, 0.3, 1.0] {
            let p = ModelParams::new(0.5, 1, 2.0, h).unwrap().with_beta_c(2.0);
            assert!(p.beta() > p.beta_c, "temperature must be below T_c for h > 0");
        }
    }

    #[test]
    fn grid_basics() {
        let g = LatticeGrid::torus(8, 0.25).unwrap();
        assert_eq!(g.len, 4.0);
        assert_relative_eq!(g.delta(), 0.5);
        assert_relative_eq!(g.h(), 0.25);
        assert_eq!(g.m_of(0), -4);
        assert_eq!(g.m_of(7), 3);
        assert_relative_eq!(g.k_of_m(1), 2.0 * PI / 4.0);
        assert_relative_eq!(g.wrap_disp(7, 0), -0.5);
        assert!(LatticeGrid::new(6, 1.0).is_err());
        assert!(LatticeGrid::new(1024, 1.0).is_err());
    }
}
