//! Concrete n-bidder mechanisms: Vickrey second-price, the threshold
//! bundling family `M_{beta,w}`, its optimization over the bundling
//! parameter region, and second-price bundling with the surcharge rule.

use crate::derived::{a_c_ell, hat_of, r_of};
use crate::dist::Dist1D;
use crate::error::{Error, Result};
use crate::joint::{second_highest, TopTwo, ValuationMatrix};
use crate::product::DiscreteKd;
use crate::rng::Stream;
use rand::Rng;

/// Allocation probabilities (n by k) plus per-bidder payments.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub q: Vec<Vec<f64>>,
    pub s: Vec<f64>,
}

impl Outcome {
    pub fn empty(n: usize, k: usize) -> Self {
        Outcome {
            q: vec![vec![0.0; k]; n],
            s: vec![0.0; n],
        }
    }

    pub fn revenue(&self) -> f64 {
        self.s.iter().sum()
    }

    /// Max violation of the per-item column-sum <= 1 feasibility.
    pub fn column_sum_violation(&self) -> f64 {
        let k = self.q.first().map_or(0, |r| r.len());
        (0..k)
            .map(|j| self.q.iter().map(|r| r[j]).sum::<f64>() - 1.0)
            .fold(0.0, f64::max)
    }

    /// Utility of bidder `i` with true values `v` under this outcome.
    pub fn utility(&self, i: usize, v: &[f64]) -> f64 {
        self.q[i]
            .iter()
            .zip(v)
            .map(|(q, x)| q * x)
            .sum::<f64>()
            - self.s[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    LowestIndex,
    UniformRandom,
}

/// Per-item exclusion threshold. `strict` admits bids strictly above the
/// value; `at_left_limit` marks the closure point `a - 0`, admitting bids
/// at `a` while still charging `a`. The closure points are what make the
/// bundling sup attainable on discrete supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub value: f64,
    pub inclusive: bool,
}

impl Cutoff {
    pub fn strict(value: f64) -> Self {
        Cutoff {
            value,
            inclusive: false,
        }
    }

    pub fn at_left_limit(value: f64) -> Self {
        Cutoff {
            value,
            inclusive: true,
        }
    }

    pub fn admits(&self, z: f64) -> bool {
        if self.inclusive {
            z >= self.value
        } else {
            z > self.value
        }
    }
}

pub fn strict_cutoffs(beta: &[f64]) -> Vec<Cutoff> {
    beta.iter().map(|&b| Cutoff::strict(b)).collect()
}

/// The take-or-leave bundle mechanism `M_{beta,w}` for one bidder: if the
/// surplus of the items bid strictly above their thresholds reaches `w`,
/// the bidder gets exactly those items for the thresholds plus the
/// surcharge; otherwise nothing.
pub fn m_beta_w(beta: &[Cutoff], w: f64, z: &[f64]) -> (Vec<f64>, f64) {
    let k = z.len();
    debug_assert_eq!(beta.len(), k);
    let mut surplus = 0.0;
    let mut threshold_sum = 0.0;
    let mut q = vec![0.0; k];
    for j in 0..k {
        if beta[j].admits(z[j]) {
            surplus += z[j] - beta[j].value;
            threshold_sum += beta[j].value;
            q[j] = 1.0;
        }
    }
    if surplus >= w {
        (q, w + threshold_sum)
    } else {
        (vec![0.0; k], 0.0)
    }
}

/// Convenience wrapper for a plain threshold vector.
pub fn m_beta_w_plain(beta: &[f64], w: f64, z: &[f64]) -> (Vec<f64>, f64) {
    m_beta_w(&strict_cutoffs(beta), w, z)
}

/// Optimized bundling parameters: either `(beta, w)` with a surcharge, or a
/// raised threshold vector with no surcharge.
#[derive(Debug, Clone, PartialEq)]
pub struct BundlingParams {
    pub beta_bar: Vec<Cutoff>,
    pub w_bar: f64,
}

impl BundlingParams {
    /// Checks membership in the parameter region for the `beta` the params
    /// were optimized against.
    pub fn in_region_of(&self, beta: &[f64]) -> bool {
        let equals_beta = self
            .beta_bar
            .iter()
            .zip(beta)
            .all(|(c, b)| !c.inclusive && c.value == *b);
        let raised = self.w_bar == 0.0
            && self
                .beta_bar
                .iter()
                .zip(beta)
                .all(|(c, b)| c.value >= *b);
        equals_beta || raised
    }
}

#[derive(Debug, Clone)]
pub struct BundOpt {
    pub params: BundlingParams,
    pub revenue: f64,
}

/// Optimal bundling revenue over the region
/// `{(beta, w) : w >= 0} u {(beta_bar, 0) : beta_bar >= beta}`.
///
/// The surcharge branch is piecewise constant between achievable surplus
/// values, so those values are a complete candidate set. The raised
/// threshold branch has expected payment `sum_j t^j Pr{z^j above t^j}`,
/// which separates per coordinate; its sup is attained in the closure by
/// left-limit cutoffs at support values above `beta`, so the optimum is
/// exact for every discrete input (no heuristic search is needed).
pub fn bund_optimize(l: &DiscreteKd, beta: &[f64]) -> Result<BundOpt> {
    if beta.len() != l.k() {
        return Err(Error::InvalidInstance("beta length mismatch".into()));
    }
    let k = l.k();
    let strict = strict_cutoffs(beta);

    // surcharge branch: candidate w values are the achievable surpluses
    let mut surpluses: Vec<f64> = l
        .points()
        .iter()
        .map(|z| {
            (0..k)
                .filter(|&j| z[j] > beta[j])
                .map(|j| z[j] - beta[j])
                .sum()
        })
        .collect();
    surpluses.push(0.0);
    surpluses.sort_by(f64::total_cmp);
    surpluses.dedup();
    let mut best_w = 0.0;
    let mut best_w_rev = 0.0;
    for &w in &surpluses {
        let rev = l.expected(|z| m_beta_w(&strict, w, z).1);
        if rev > best_w_rev {
            best_w_rev = rev;
            best_w = w;
        }
    }

    // raised threshold branch (w = 0): per-coordinate argmax
    let mut bar = Vec::with_capacity(k);
    let mut bar_rev = 0.0;
    for j in 0..k {
        let mut best_c = Cutoff::strict(beta[j]);
        let mut best_r = beta[j] * l.marginal_survival(j, beta[j]);
        for a in l.coord_values(j) {
            if a > beta[j] {
                let r = a * l.marginal_pr_geq(j, a);
                if r > best_r {
                    best_r = r;
                    best_c = Cutoff::at_left_limit(a);
                }
            }
        }
        bar.push(best_c);
        bar_rev += best_r;
    }

    // ties prefer the surcharge branch, which keeps beta itself
    let opt = if best_w_rev >= bar_rev {
        BundOpt {
            params: BundlingParams {
                beta_bar: strict,
                w_bar: best_w,
            },
            revenue: best_w_rev,
        }
    } else {
        BundOpt {
            params: BundlingParams {
                beta_bar: bar,
                w_bar: 0.0,
            },
            revenue: bar_rev,
        }
    };
    debug_assert!(opt.params.in_region_of(beta));
    Ok(opt)
}

/// Per-item winners under the tie rule. Uniform tie-breaking consumes the
/// stream even for untied columns, so the draw is reproducible per matrix.
pub fn pick_winners(x: &ValuationMatrix, tie: TieRule, rng: &mut Stream) -> Vec<usize> {
    let (n, k) = (x.n(), x.k());
    (0..k)
        .map(|j| {
            let col = x.column(j);
            let top = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..n).filter(|&i| col[i] == top).collect();
            match tie {
                TieRule::LowestIndex => ties[0],
                TieRule::UniformRandom => ties[rng.gen_range(0..ties.len())],
            }
        })
        .collect()
}

pub fn vickrey_given_winners(x: &ValuationMatrix, winners: &[usize]) -> Outcome {
    let mut out = Outcome::empty(x.n(), x.k());
    for (j, &w) in winners.iter().enumerate() {
        out.q[w][j] = 1.0;
        out.s[w] += second_highest(&x.column(j));
    }
    out
}

/// Vickrey second-price: each item to its highest bidder at the
/// second-highest bid.
pub fn vickrey(x: &ValuationMatrix, tie: TieRule, rng: &mut Stream) -> Outcome {
    vickrey_given_winners(x, &pick_winners(x, tie, rng))
}

pub fn spb_given_winners(x: &ValuationMatrix, w: f64, winners: &[usize]) -> Outcome {
    let (n, k) = (x.n(), x.k());
    let mut out = Outcome::empty(n, k);
    for i in 0..n {
        let bundle: Vec<usize> = (0..k).filter(|&j| winners[j] == i).collect();
        if bundle.is_empty() {
            continue;
        }
        let mut surplus = 0.0;
        let mut second_sum = 0.0;
        for &j in &bundle {
            let snd = second_highest(&x.column(j));
            surplus += x.get(i, j) - snd;
            second_sum += snd;
        }
        // accepts exactly when the bundle value covers the offer
        if surplus >= w {
            for &j in &bundle {
                out.q[i][j] = 1.0;
            }
            out.s[i] = w + second_sum;
        }
    }
    out
}

/// Second-price bundling: a max bidder per item (tie rule), then one
/// take-or-leave bundle offer per bidder at second prices plus the
/// surcharge `w`.
pub fn spb(x: &ValuationMatrix, w: f64, tie: TieRule, rng: &mut Stream) -> Outcome {
    spb_given_winners(x, w, &pick_winners(x, tie, rng))
}

/// The surcharge rule: case split on `E(V_F)` against `r` and `C_m` of the
/// max-of-n distribution, with the gap-probability construction in the
/// small-`C` case.
pub fn spb_choose_w(f: &Dist1D, n: u32, k: u32) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInstance("n and k must be positive".into()));
    }
    let m = k.div_ceil(n);
    let hat = hat_of(f, n)?;
    let r_hat = r_of(&hat)?;
    let (_, c_m) = a_c_ell(&hat, m)?;
    let top = TopTwo::new(f, n)?;
    let e_v = top.e_second();

    // Case 1: second prices alone already compare with the benchmark
    if e_v >= 0.2 * r_hat.max(c_m / 80.0) {
        return Ok(0.0);
    }
    // Case 2
    if c_m >= 80.0 * r_hat {
        return Ok(0.25 * m as f64 * c_m);
    }
    let u = find_surcharge_u(&hat, r_hat)?;
    let q0 = top.pr_gap_geq(u / 2.0);
    let mq0 = m as f64 * q0;
    Ok(if mq0 <= 1.0 {
        u / 2.0
    } else {
        mq0.floor() * u / 2.0
    })
}

/// Smallest grid value with `u * Pr{X > u} >= (4/5) r`, refining the grid
/// tenfold up to three times.
fn find_surcharge_u(hat: &Dist1D, r_hat: f64) -> Result<f64> {
    let target = 0.8 * r_hat;
    let mut grid: Vec<f64> = match hat.as_discrete() {
        Some(d) => {
            let mut g = vec![0.0];
            g.extend(d.values().iter().copied().filter(|v| *v > 0.0));
            g
        }
        None => {
            let pts = 10_000;
            (0..=pts)
                .map(|i| hat.quantile(i as f64 / pts as f64))
                .filter(|x| x.is_finite())
                .collect()
        }
    };
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for refinement in 0..=3 {
        if let Some(&u) = grid
            .iter()
            .find(|&&u| u > 0.0 && u * hat.survival(u) >= target - 1e-15)
        {
            return Ok(u);
        }
        if refinement == 3 {
            break;
        }
        let mut finer = Vec::with_capacity(grid.len() * 10);
        for w in grid.windows(2) {
            finer.push(w[0]);
            for s in 1..10 {
                finer.push(w[0] + (w[1] - w[0]) * s as f64 / 10.0);
            }
        }
        finer.push(*grid.last().unwrap());
        grid = finer;
    }
    Err(Error::SurchargeGridExhausted(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::ProductDist;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn two_point() -> Dist1D {
        Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn m_beta_w_examples() {
        let beta = [1.0, 1.0];
        let (q, pay) = m_beta_w_plain(&beta, 2.0, &[3.0, 2.0]);
        assert_eq!(q, vec![1.0, 1.0]);
        assert_abs_diff_eq!(pay, 4.0);

        let (q, pay) = m_beta_w_plain(&beta, 2.0, &[1.5, 1.2]);
        assert_eq!(q, vec![0.0, 0.0]);
        assert_eq!(pay, 0.0);

        // exact threshold excluded under the strict test
        let (q, pay) = m_beta_w_plain(&beta, 0.0, &[1.0, 5.0]);
        assert_eq!(q, vec![0.0, 1.0]);
        assert_abs_diff_eq!(pay, 1.0);
    }

    #[test]
    fn left_limit_cutoff_admits_equality() {
        let beta = [Cutoff::at_left_limit(2.0)];
        let (q, pay) = m_beta_w(&beta, 0.0, &[2.0]);
        assert_eq!(q, vec![1.0]);
        assert_abs_diff_eq!(pay, 2.0);
    }

    #[test]
    fn bund_point_mass_example() {
        let l = DiscreteKd::from_parts(vec![vec![2.0, 3.0]], vec![1.0]).unwrap();
        let opt = bund_optimize(&l, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(opt.revenue, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.params.w_bar, 3.0);
        assert!(opt.params.beta_bar.iter().all(|c| !c.inclusive));
    }

    #[test]
    fn bund_unreachable_beta_gives_zero() {
        let l = ProductDist::iid(two_point(), 2)
            .unwrap()
            .enumerate()
            .unwrap();
        let opt = bund_optimize(&l, &[5.0, 5.0]).unwrap();
        assert_eq!(opt.revenue, 0.0);
    }

    #[test]
    fn bund_two_item_zero_beta() {
        // surcharge branch at w = 3 earns 3 * Pr{sum >= 3} = 2.25 and wins
        let l = ProductDist::iid(two_point(), 2)
            .unwrap()
            .enumerate()
            .unwrap();
        let opt = bund_optimize(&l, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(opt.revenue, 2.25, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.params.w_bar, 3.0);
    }

    #[test]
    fn bund_dominates_sampled_feasible_points() {
        let l = ProductDist::new(vec![two_point(), two_point()])
            .unwrap()
            .enumerate()
            .unwrap();
        let beta = [1.0, 0.0];
        let opt = bund_optimize(&l, &beta).unwrap();
        let feasible = [
            (strict_cutoffs(&beta), 0.7),
            (strict_cutoffs(&beta), 1.3),
            (strict_cutoffs(&[1.5, 0.9]), 0.0),
            (strict_cutoffs(&[1.0, 1.7]), 0.0),
            (vec![Cutoff::at_left_limit(2.0), Cutoff::strict(0.0)], 0.0),
        ];
        for (bar, w) in feasible {
            let rev = l.expected(|z| m_beta_w(&bar, w, z).1);
            assert!(opt.revenue >= rev - 1e-12, "{rev} beats {}", opt.revenue);
        }
    }

    #[test]
    fn vickrey_examples() {
        let x = ValuationMatrix::new(vec![vec![3.0, 1.0], vec![2.0, 4.0]]).unwrap();
        let mut s = rng::root(0);
        let out = vickrey(&x, TieRule::LowestIndex, &mut s);
        assert_abs_diff_eq!(out.revenue(), 3.0);
        assert_eq!(out.q[0], vec![1.0, 0.0]);
        assert_eq!(out.q[1], vec![0.0, 1.0]);

        // all-equal column, lowest-index: bidder 0 wins at the common value
        let x = ValuationMatrix::new(vec![vec![2.0], vec![2.0]]).unwrap();
        let out = vickrey(&x, TieRule::LowestIndex, &mut s);
        assert_eq!(out.q[0], vec![1.0]);
        assert_abs_diff_eq!(out.s[0], 2.0);

        // single bidder pays nothing
        let x = ValuationMatrix::new(vec![vec![5.0, 1.0]]).unwrap();
        let out = vickrey(&x, TieRule::LowestIndex, &mut s);
        assert_eq!(out.revenue(), 0.0);
        assert_eq!(out.q[0], vec![1.0, 1.0]);
    }

    #[test]
    fn spb_examples() {
        let x = ValuationMatrix::new(vec![vec![3.0, 1.0], vec![2.0, 4.0]]).unwrap();
        let mut s = rng::root(0);
        let out = spb(&x, 1.0, TieRule::LowestIndex, &mut s);
        assert_abs_diff_eq!(out.s[0], 3.0);
        assert_abs_diff_eq!(out.s[1], 2.0);
        assert_abs_diff_eq!(out.revenue(), 5.0);

        // bidder 0's surplus 1 < 2: rejects; bidder 1 accepts
        let out = spb(&x, 2.0, TieRule::LowestIndex, &mut s);
        assert_eq!(out.q[0], vec![0.0, 0.0]);
        assert_abs_diff_eq!(out.revenue(), 3.0);
    }

    #[test]
    fn spb_at_zero_matches_vickrey_under_shared_ties() {
        let x = ValuationMatrix::new(vec![vec![2.0, 2.0, 1.0], vec![2.0, 1.0, 1.0]]).unwrap();
        for seed in 0..20 {
            let mut s1 = rng::root(seed);
            let mut s2 = rng::root(seed);
            let a = vickrey(&x, TieRule::UniformRandom, &mut s1);
            let b = spb(&x, 0.0, TieRule::UniformRandom, &mut s2);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spb_choose_w_point_mass_is_case1() {
        let f = Dist1D::point_mass(1.0).unwrap();
        assert_eq!(spb_choose_w(&f, 2, 3).unwrap(), 0.0);
        assert_eq!(spb_choose_w(&f, 3, 6).unwrap(), 0.0);
    }

    #[test]
    fn spb_choose_w_heavy_c_case() {
        // force Case 2 with C_m >= 80 r: point masses are Case 1, so build a
        // near-deterministic high-value distribution with tiny E(V_F)
        let f = Dist1D::discrete(vec![(0.0, 0.992), (100.0, 0.008)]).unwrap();
        let n = 2;
        let k = 40;
        let m = (k + n - 1) / n;
        let hat = hat_of(&f, n).unwrap();
        let r_hat = r_of(&hat).unwrap();
        let (_, c_m) = a_c_ell(&hat, m).unwrap();
        let top = TopTwo::new(&f, n).unwrap();
        assert!(top.e_second() < 0.2 * r_hat.max(c_m / 80.0), "not case 2");
        let w = spb_choose_w(&f, n, k).unwrap();
        if c_m >= 80.0 * r_hat {
            assert_abs_diff_eq!(w, 0.25 * m as f64 * c_m, epsilon = 1e-12);
        } else {
            assert!(w > 0.0);
        }
    }

    #[test]
    fn surcharge_grid_refinement_fills_atom_gaps() {
        // no support atom satisfies u * Pr{>u} >= 0.8: the atoms give
        // 1 * 0.5 and 2 * 0; refinement must find a point below the first
        // atom where the survival is still 1
        let hat = two_point();
        let u = find_surcharge_u(&hat, 1.0).unwrap();
        assert!(u > 0.0 && u < 1.0, "u = {u}");
        assert!(u * hat.survival(u) >= 0.8 - 1e-12);
    }
}
