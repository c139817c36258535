//! Lattice laboratory for the BdG -> Ginzburg-Landau correspondence.
//!
//! The crate discretizes the full chain linking the microscopic
//! Bogoliubov-de Gennes equation of BCS theory to the macroscopic
//! Ginzburg-Landau equation near the critical temperature: critical
//! temperature and pair wave function, Ginzburg-Landau coefficients by
//! quadrature, nonlinear BdG solutions on a periodic lattice, and the
//! asymptotic factorization of the Cooper-pair kernel into a slow order
//! parameter times a fast pair profile, together with the scaling
//! diagnostics that make the correspondence quantitative.
//!
//! Everything lives on a one-dimensional torus of circumference `1/h`
//! with `n` lattice sites; two-point kernels are dense `n x n` matrices
//! and all operator functions are evaluated exactly by eigendecomposition.
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod gapeq;
pub mod glcoef;
pub mod quad;
pub mod linear;
pub mod model;
pub mod opcalc;

pub use error::{Error, Result};
