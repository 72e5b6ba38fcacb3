fn main() {
    // reproduce instance p2-0008 l=9
    use bestguess_cli::config::ExperimentConfig;
    let cfg = ExperimentConfig::new("p2", 42).resolve().unwrap();
    let corpus = bestguess_cli::gen::gen_corpus(&cfg).unwrap();
    let inst = corpus[8].build().unwrap();
    let prod = inst.joint.row_product(0).unwrap();
    let f = prod.coord(0);
    println!("{f:?}");
    let r = bestguess::r_of(f).unwrap();
    let (a, c) = bestguess::a_c_ell(f, 9).unwrap();
    println!("r={r:.17} a={a:.17} c={c:.17}");
    println!("t = 9r = {:.17}", 9.0 * r);
    println!("upper slack = {}", 2.0*r + c - a);
}
