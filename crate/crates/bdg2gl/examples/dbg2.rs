use bdg2gl::model::LatticeGrid;
use bdg2gl::opcalc::*;
use bdg2gl::linear::*;
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    let g = LatticeGrid::torus(32, 0.25).unwrap();
    let n = g.n;
    let delta = g.delta();
    // kt diff q0 test
    let k = PeriodicKernel::from_relative(&g, |r| (-(r / 0.35) * (r / 0.35)).exp());
    let a = kt_apply(&k, 2.0, 1.0);
    let b = kt_frozen_apply(&k, 2.0, 1.0);
    println!("kt diff = {:e} vs norm {:e}", a.l2h_distance(&b), norm(&k, NormKind::L2h).unwrap());

    // product reproduction
    let mut phi: Vec<f64> = (0..n).map(|j| (-(g.wrap_disp(j, 0) / 0.35).powi(2)).exp()).collect();
    let nrm = (delta * phi.iter().map(|x| x * x).sum::<f64>()).sqrt();
    phi.iter_mut().for_each(|x| *x /= nrm);
    let psi: Vec<Complex64> = (0..2 * n)
        .map(|i| {
            let x = i as f64 * delta / 2.0;
            Complex64::new(1.0 + 0.3 * (2.0 * PI * g.h() * x).cos(), 0.0)
        })
        .collect();
    let kk = PeriodicKernel::product(&g, &psi, &phi).unwrap();
    let fk = com_rel_fourier(&kk);
    let ps = ProjectionSet::new(&g, &phi, 1.0).unwrap();
    let pk = ps.apply_p(&fk);
    let d: f64 = (&fk.coeffs - &pk.coeffs).iter().map(|z| z.norm_sqr()).sum::<f64>();
    println!("P reproduction defect = {:e}", d.sqrt());
    // which lines have defect?
    let n2 = (n/2) as i64;
    let mut by_s = std::collections::BTreeMap::<i64, f64>::new();
    for i in 0..n { for j in 0..n {
        let s = (i as i64 - n2) + (j as i64 - n2);
        *by_s.entry(s).or_default() += (fk.coeffs[(i,j)] - pk.coeffs[(i,j)]).norm_sqr();
    }}
    for (s, v) in by_s { if v > 1e-24 { println!("  line {s}: defect^2 {v:e}"); } }
    // line weights
    for (li, w) in ps.line_weights.iter().enumerate() {
        let s = li as i64 - n as i64;
        if (-3..=3).contains(&s) { println!("  weight s={s}: {w}"); }
    }
}
