// Quick timing probe for dense symmetric eigendecompositions.
use nalgebra::DMatrix;
use std::time::Instant;

fn main() {
    for &n in &[128usize, 256, 512] {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = ((i * 31 + j * 17) % 101) as f64 / 101.0;
                a[(i, j)] = v;
            }
        }
        let a = (&a + a.transpose()) * 0.5;
        let t0 = Instant::now();
        let e = a.clone().symmetric_eigen();
        let dt = t0.elapsed();
        println!("n = {n}: symmetric_eigen {:.3} s (trace check {:.3e})", dt.as_secs_f64(),
                 e.eigenvalues.sum() - a.trace());
    }
}
