//! Oracle-level inequality properties on small random corpora: the
//! adjusted-vs-exclusive aggregate bound, the separate-sale logarithmic
//! bound, the iid revenue bracketing, the Bayesian upper bound, and the
//! determinism of threshold bundling menus.

use bestguess::dist::Dist1D;
use bestguess::joint::JointValuation;
use bestguess::mech::{bund_optimize, m_beta_w};
use bestguess::menu::{Menu, MenuEntry};
use bestguess::oracle::{bg_quantities, rev_1bidder, rev_bic, rev_dsic, srev};
use bestguess::product::ProductDist;
use bestguess::rng;
use rand::Rng;

fn random_discrete(
    stream: &mut bestguess::rng::Stream,
    max_atoms: usize,
    max_value: f64,
) -> Dist1D {
    let n = stream.gen_range(2..=max_atoms);
    let mut values: Vec<f64> = Vec::new();
    while values.len() < n {
        // quarter-grid values keep float comparisons exact
        let v = (stream.gen_range(0..=(4.0 * max_value) as u32) as f64) / 4.0;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values.sort_by(f64::total_cmp);
    let mut probs: Vec<f64> = (0..n).map(|_| stream.gen_range(1..=8) as f64).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    let fix = 1.0 - probs.iter().sum::<f64>();
    probs[n - 1] += fix;
    Dist1D::discrete(values.into_iter().zip(probs).collect()).unwrap()
}

/// Random item-independent model: either an independent grid or an iid
/// model (both factorize across columns).
fn random_item_independent(
    stream: &mut bestguess::rng::Stream,
    n: usize,
    k: usize,
) -> JointValuation {
    if stream.gen_bool(0.5) {
        JointValuation::iid(random_discrete(stream, 2, 3.0), n, k).unwrap()
    } else {
        let cells = (0..n)
            .map(|_| (0..k).map(|_| random_discrete(stream, 2, 3.0)).collect())
            .collect();
        JointValuation::grid(cells).unwrap()
    }
}

#[test]
fn adjusted_sum_is_within_factor_eight_of_exclusive_sum() {
    // BG^A <= 8 BGR on item-independent instances
    let mut stream = rng::root(0x52);
    for _ in 0..60 {
        let n = stream.gen_range(1..=2);
        let k = stream.gen_range(1..=2);
        let fj = random_item_independent(&mut stream, n, k);
        let q = bg_quantities(&fj).unwrap();
        assert!(
            q.bg_a <= 8.0 * q.bgr_exact + 1e-9,
            "BG_A {} > 8 * BGR {}",
            q.bg_a,
            q.bgr_exact
        );
    }
}

#[test]
fn separate_sale_carries_a_log_fraction_of_optimal() {
    // SREV * log2(k+1) / REV stays positive and bounded; the envelope is
    // reported, the universal constant is not asserted
    let mut stream = rng::root(0x53);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..40 {
        let n = stream.gen_range(1..=2);
        let k = stream.gen_range(1..=2);
        let fj = random_item_independent(&mut stream, n, k);
        let rev = rev_dsic(&fj).unwrap().lp.value;
        if rev <= 1e-12 {
            continue;
        }
        let s = srev(&fj).unwrap();
        assert!(s <= rev + 1e-7, "SREV {s} exceeds REV {rev}");
        let ratio = s * ((k + 1) as f64).log2() / rev;
        assert!(ratio > 0.0 && ratio.is_finite());
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    println!("separate-sale ratio envelope: [{lo:.4}, {hi:.4}]");
    assert!(lo > 0.01, "envelope floor {lo}");
}

#[test]
fn iid_revenue_brackets_against_k_a_k() {
    // REV(L^k) / (k A_k(L)) positive and bounded across the corpus
    let mut stream = rng::root(0x54);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..40 {
        let k = stream.gen_range(1..=3);
        let f = random_discrete(&mut stream, 3, 4.0);
        let r = bestguess::r_of(&f).unwrap();
        if r <= 1e-12 {
            continue;
        }
        let (a_k, _) = bestguess::a_c_ell(&f, k as u32).unwrap();
        let l = ProductDist::iid(f, k).unwrap().enumerate().unwrap();
        let rev = rev_1bidder(&l).unwrap().lp.value;
        let ratio = rev / (k as f64 * a_k);
        assert!(ratio.is_finite() && ratio > 0.0, "ratio {ratio}");
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    println!("iid bracketing envelope: [{lo:.4}, {hi:.4}]");
    assert!(lo > 0.01 && hi < 100.0, "envelope [{lo}, {hi}]");
}

#[test]
fn bayesian_bounded_by_adjusted_sum_plus_separate_sale() {
    // REV_Bayesian <= BG^A + SREV for independent bidders
    let mut stream = rng::root(0x55);
    for _ in 0..25 {
        let n = stream.gen_range(1..=2);
        let k = stream.gen_range(1..=2);
        let fj = random_item_independent(&mut stream, n, k);
        let bic = rev_bic(&fj).unwrap().lp.value;
        let q = bg_quantities(&fj).unwrap();
        assert!(
            bic <= q.bg_a + q.srev + 1e-7,
            "BIC {} > BG_A {} + SREV {}",
            bic,
            q.bg_a,
            q.srev
        );
    }
}

#[test]
fn bundling_menu_is_deterministic_and_ic() {
    // the optimized bundling mechanism induces a deterministic menu whose
    // assignments survive exhaustive deviation checks
    let mut stream = rng::root(0x56);
    for _ in 0..30 {
        let k = stream.gen_range(1..=3);
        let coords: Vec<Dist1D> = (0..k)
            .map(|_| random_discrete(&mut stream, 3, 4.0))
            .collect();
        let prod = ProductDist::new(coords).unwrap();
        let l = prod.enumerate().unwrap();
        let beta: Vec<f64> = (0..k)
            .map(|_| stream.gen_range(0..=8) as f64 / 4.0)
            .collect();
        let opt = bund_optimize(&l, &beta).unwrap();

        let mut entries = Vec::new();
        for (z, _) in l.iter() {
            let (q, pay) = m_beta_w(&opt.params.beta_bar, opt.params.w_bar, z);
            assert!(q.iter().all(|&v| v == 0.0 || v == 1.0));
            entries.push(MenuEntry {
                alloc: q,
                price: pay,
            });
        }
        let menu = Menu::new(k, entries).unwrap();
        assert!(menu.is_deterministic());

        // exhaustive deviations: reporting z2 never beats reporting z
        for (z, _) in l.iter() {
            let (q, pay) = m_beta_w(&opt.params.beta_bar, opt.params.w_bar, z);
            let truthful: f64 =
                q.iter().zip(z).map(|(q, v)| q * v).sum::<f64>() - pay;
            for (z2, _) in l.iter() {
                let (q2, pay2) = m_beta_w(&opt.params.beta_bar, opt.params.w_bar, z2);
                let dev: f64 =
                    q2.iter().zip(z).map(|(q, v)| q * v).sum::<f64>() - pay2;
                assert!(dev <= truthful + 1e-9);
            }
        }
    }
}
