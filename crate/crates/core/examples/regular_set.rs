//! CKN scores on a space-time lattice around a perturbed Beltrami flow and the widest
//! paraboloid of regular points.

use nslab::experiments::{preset, regularity_map, simulate};

fn main() -> nslab::Result<()> {
    let cfg = preset("regular-set")?;
    let sim = simulate(&cfg)?;
    let u = sim.velocity()?;
    let map = regularity_map(&u, &cfg)?;
    println!("radii {:?}", map.points[0].scan.radii);
    println!("{:>5} {:>22} {:>26} {}", "t", "x", "scores", "pass");
    for p in &map.points {
        let scores: Vec<String> = p.scan.scores.iter().map(|s| format!("{s:.3e}")).collect();
        println!("{:>5.2} [{:>6.3} {:>6.3} {:>6.3}] {:>26} {}", p.t, p.x[0], p.x[1], p.x[2], scores.join(" "), p.scan.pass);
    }
    println!("eps* = {}, all regular: {}, widest aperture = {:?}", map.eps_star, map.all_pass(), map.alpha_hat);
    Ok(())
}
