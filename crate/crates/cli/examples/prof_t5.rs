use bestguess::dist::Dist1D;
use bestguess::joint::JointValuation;
use std::time::Instant;

fn main() {
    let two = Dist1D::discrete(vec![(1.0, 0.75), (4.0, 0.25)]).unwrap();
    let uni = Dist1D::Discrete(Dist1D::uniform(0.0, 1.0).unwrap().discretize(3).unwrap());
    for (name, f, n, k) in [
        ("two n1k6", &two, 1usize, 6usize),
        ("two n2k3", &two, 2, 3),
        ("two n3k2", &two, 3, 2),
        ("uni n1k3", &uni, 1, 3),
        ("uni n2k2", &uni, 2, 2),
        ("uni n3k1", &uni, 3, 1),
    ] {
        let fj = JointValuation::iid(f.clone(), n, k).unwrap();
        let t = Instant::now();
        match bestguess::oracle::rev_dsic(&fj) {
            Ok(r) => println!("{name}: rev={:.6} in {:.2?}", r.lp.value, t.elapsed()),
            Err(e) => println!("{name}: {e} in {:.2?}", t.elapsed()),
        }
    }
    let t = Instant::now();
    let grid = bestguess::mc::spb_w_grid(&two, 3, 6).unwrap();
    let sweep = bestguess::spb_sweep(&two, 3, 6, &grid, bestguess::TieRule::UniformRandom, 20_000, 42).unwrap();
    println!("sweep n3k6: argmax w={} in {:.2?}", sweep.rows[sweep.argmax].w, t.elapsed());
}
