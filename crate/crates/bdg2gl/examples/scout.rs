// Parameter scouting: critical temperature across couplings and boxes.
use bdg2gl::gapeq::find_tc;
use bdg2gl::model::{LatticeGrid, Potential};

fn main() {
    for &(v0, a, mu) in &[(2.0, 0.5, 1.0), (3.0, 0.5, 1.0), (5.0, 0.5, 1.0), (3.0, 0.8, 1.0), (2.0, 0.8, 0.5)] {
        let pot = Potential::gaussian(v0, a, 1).unwrap();
        let grid = LatticeGrid::new(256, 20.0).unwrap();
        match find_tc(&pot, &grid, mu, 1e-10) {
            Ok(g) => println!(
                "v0={v0} a={a} mu={mu}: Tc={:.8} theta={:.4} odd={:.4}",
                g.tc, g.theta, g.min_eig_odd
            ),
            Err(e) => println!("v0={v0} a={a} mu={mu}: {e}"),
        }
        // pipeline torus at h = 0.2, n = 256
        let grid2 = LatticeGrid::torus(256, 0.2).unwrap();
        match find_tc(&pot, &grid2, mu, 1e-10) {
            Ok(g) => println!("   torus h=0.2: Tc={:.8} theta={:.4} odd={:.4}", g.tc, g.theta, g.min_eig_odd),
            Err(e) => println!("   torus h=0.2: {e}"),
        }
    }
}
