//! Monopoly-revenue quantities derived from a one-dimensional distribution:
//! the revenue sup `r_F`, the truncated-tail benchmark `A_l`, the truncated
//! mean `C_l`, the max-of-n distribution `F-hat`, the closed-form revenue
//! benchmark `k * A_m(F-hat)` and the binomial tail `b_{n,k}`.

use crate::dist::{DiscreteDist, Dist1D};
use crate::error::{Error, Result};

/// Compensated (Kahan) accumulator for long sums of small terms.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Monopoly revenue sup_{x>=0} x * Pr{X >= x}.
///
/// For discrete distributions the sup is attained at an atom under the
/// `>=` convention (posted price at the atom, accepted at equality). For
/// parametric families a closed form is used where one exists, otherwise a
/// bracketed grid-plus-golden-section maximization to relative tolerance
/// 1e-9.
pub fn r_of(f: &Dist1D) -> Result<f64> {
    match f {
        Dist1D::Discrete(d) => Ok(discrete_r(d)),
        Dist1D::PointMass { value } => Ok(*value),
        Dist1D::Uniform { lo, hi } => {
            let x = (hi / 2.0).clamp(*lo, *hi);
            Ok((x * (hi - x) / (hi - lo)).max(*lo))
        }
        Dist1D::Exponential { rate } => Ok(1.0 / (std::f64::consts::E * rate)),
        Dist1D::EqualRevenue { scale, truncation } => match truncation {
            Some(_) => Ok(*scale),
            // Every price x >= scale earns exactly `scale` out to infinity:
            // there is no bracketed maximizer and the mean is infinite.
            None => Err(Error::InfiniteRevenue(
                "untruncated equal-revenue tail".into(),
            )),
        },
        Dist1D::IidMax { .. } => numeric_r(f),
    }
}

fn discrete_r(d: &DiscreteDist) -> f64 {
    d.atoms()
        .filter(|(v, _)| *v >= 0.0)
        .map(|(v, _)| v * d.pr_geq(v))
        .fold(0.0, f64::max)
}

fn numeric_r(f: &Dist1D) -> Result<f64> {
    let hi = match f.upper_bound() {
        Some(b) => b,
        // Tail-safe bracket: beyond the 1 - 1e-13 quantile the revenue
        // x * survival(x) is negligible for the families we support.
        None => 2.0 * f.quantile(1.0 - 1e-13),
    };
    if !hi.is_finite() || hi <= 0.0 {
        return Err(Error::InfiniteRevenue("unbounded revenue bracket".into()));
    }
    let g = |x: f64| x * f.survival(x);
    // Coarse grid, then golden-section refinement around the best cell.
    let grid = 4096;
    let mut best_i = 0usize;
    let mut best = 0.0f64;
    for i in 0..=grid {
        let x = hi * i as f64 / grid as f64;
        let v = g(x);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = hi * best_i.saturating_sub(1) as f64 / grid as f64;
    let mut b = hi * (best_i + 1).min(grid) as f64 / grid as f64;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > 1e-13 * hi.max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = g(x1);
        }
    }
    // Atoms of the base family (e.g. a truncation point) are maximized with
    // the >= convention.
    let mut r = best.max(f1).max(f2);
    for x in f.breakpoints_within(0.0, hi * (1.0 + 1e-12)) {
        r = r.max(x * f.pr_geq(x));
    }
    if let Some(ub) = f.upper_bound() {
        r = r.max(ub * f.pr_geq(ub));
    }
    Ok(r)
}

/// Distribution of the maximum of `n` iid draws of `f`.
///
/// Discrete inputs stay discrete: atom `a` keeps probability
/// `F(a)^n - F(a-)^n`.
pub fn hat_of(f: &Dist1D, n: u32) -> Result<Dist1D> {
    if n == 0 {
        return Err(Error::InvalidDistribution("hat_of with n = 0".into()));
    }
    if n == 1 {
        return Ok(f.clone());
    }
    match f {
        Dist1D::Discrete(d) => {
            let atoms: Vec<(f64, f64)> = d
                .values()
                .iter()
                .map(|&v| {
                    let p = d.cdf(v).powi(n as i32) - d.cdf_left(v).powi(n as i32);
                    (v, p)
                })
                .filter(|&(_, p)| p > 0.0)
                .collect();
            let hat = if d.is_shift_derived() {
                DiscreteDist::new_shift_derived(atoms)?
            } else {
                DiscreteDist::new(atoms)?
            };
            Ok(Dist1D::Discrete(hat))
        }
        Dist1D::PointMass { value } => Ok(Dist1D::PointMass { value: *value }),
        Dist1D::IidMax { base, n: m } => Ok(Dist1D::IidMax {
            base: base.clone(),
            n: m.checked_mul(n)
                .ok_or_else(|| Error::InvalidDistribution("iid-max power overflow".into()))?,
        }),
        _ => Ok(Dist1D::IidMax {
            base: Box::new(f.clone()),
            n,
        }),
    }
}

/// Adaptive Simpson quadrature with interval splitting at CDF breakpoints.
fn integrate_survival(f: &Dist1D, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut pts = vec![lo];
    pts.extend(f.breakpoints_within(lo, hi));
    pts.push(hi);
    let g = |x: f64| f.survival(x);
    let mut total = KahanSum::default();
    for w in pts.windows(2) {
        total.add(adaptive_simpson(&g, w[0], w[1], tol / (pts.len() - 1) as f64));
    }
    total.value()
}

fn adaptive_simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        g: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = (a + m) / 2.0;
        let rm = (m + b) / 2.0;
        let flm = g(lm);
        let frm = g(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth >= 48 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(g, a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1)
                + rec(g, m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1)
        }
    }
    let m = (a + b) / 2.0;
    let (fa, fb, fm) = (g(a), g(b), g(m));
    let whole = simpson(a, fa, b, fb, fm);
    rec(g, a, fa, b, fb, m, fm, whole, tol, 0)
}

/// Exact integral of the piecewise-constant survival of a discrete
/// distribution over `[0, hi]`.
fn discrete_survival_integral(d: &DiscreteDist, hi: f64) -> f64 {
    let mut acc = KahanSum::default();
    let mut x = 0.0f64;
    // survival Pr{X > x} is constant between consecutive positive atoms
    let mut tail = (1.0 - d.cdf(0.0)).max(0.0);
    for (v, p) in d.atoms() {
        if v <= 0.0 {
            continue;
        }
        let seg_end = v.min(hi);
        if seg_end > x {
            acc.add(tail * (seg_end - x));
            x = seg_end;
        }
        tail -= p;
        if x >= hi {
            break;
        }
    }
    acc.value()
}

/// `(A_l, C_l)`: the truncated-tail benchmark
/// `A_l = r + int_0^{l r} (1 - F)` and the truncated mean
/// `C_l = int_0^{l r} x dF` (atoms at the endpoint included).
///
/// Exact summation for discrete inputs; adaptive quadrature (absolute
/// tolerance 1e-9) otherwise.
pub fn a_c_ell(f: &Dist1D, ell: u32) -> Result<(f64, f64)> {
    if ell == 0 {
        return Err(Error::InvalidDistribution("a_c_ell with l = 0".into()));
    }
    let r = r_of(f)?;
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let t = ell as f64 * r;
    match f {
        Dist1D::Discrete(d) => {
            let a = r + discrete_survival_integral(d, t);
            let mut c = KahanSum::default();
            for (v, p) in d.atoms() {
                if v >= 0.0 && v <= t {
                    c.add(v * p);
                }
            }
            Ok((a, c.value()))
        }
        _ => {
            let tail = integrate_survival(f, 0.0, t, 1e-9);
            let a = r + tail;
            // int_0^t x dF = int_0^t (1-F) dx - t * Pr{X > t}
            let c = tail - t * f.survival(t);
            Ok((a, c.max(0.0)))
        }
    }
}

/// `r`, `A_l`, `C_l` bundled together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub r: f64,
    pub a_ell: f64,
    pub c_ell: f64,
    pub ell: u32,
}

impl DerivedQuantities {
    pub fn compute(f: &Dist1D, ell: u32) -> Result<Self> {
        let r = r_of(f)?;
        let (a_ell, c_ell) = a_c_ell(f, ell)?;
        Ok(Self { r, a_ell, c_ell, ell })
    }

    /// `r + C_l <= A_l <= 2r + C_l`, checked at `tol`.
    pub fn property_p2_slack(&self) -> (f64, f64) {
        (
            self.a_ell - (self.r + self.c_ell),
            2.0 * self.r + self.c_ell - self.a_ell,
        )
    }
}

/// The closed-form revenue benchmark `k * A_m(F-hat)` with `m = ceil(k/n)`
/// and `F-hat` the distribution of the maximum of `n` iid draws of `F`.
pub fn closed_form_revenue(f: &Dist1D, n: u32, k: u32) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInstance("n and k must be positive".into()));
    }
    let m = k.div_ceil(n);
    let hat = hat_of(f, n)?;
    let (a_m, _) = a_c_ell(&hat, m)?;
    Ok(k as f64 * a_m)
}

/// Exact binomial tail `b_{n,k} = Pr{ Bin(k, 1/n) >= ceil(k/n) }`, computed
/// in log space with compensated summation so the terms survive for
/// n, k up to a few hundred.
pub fn fact7_b(n: u32, k: u32) -> Result<f64> {
    if n < 2 || k < 2 {
        return Err(Error::InvalidInstance("fact7_b requires n, k >= 2".into()));
    }
    let m = k.div_ceil(n);
    if m == 1 {
        // 1 - (1 - 1/n)^k without cancellation
        return Ok(-(k as f64 * (-1.0 / n as f64).ln_1p()).exp_m1());
    }
    let ln_fact: Vec<f64> = {
        let mut v = vec![0.0f64; k as usize + 1];
        let mut acc = KahanSum::default();
        for i in 1..=k as usize {
            acc.add((i as f64).ln());
            v[i] = acc.value();
        }
        v
    };
    let ln_p = -(n as f64).ln();
    let ln_q = (-1.0 / n as f64).ln_1p();
    let mut sum = KahanSum::default();
    for l in m..=k {
        let (l, k) = (l as usize, k as usize);
        let ln_term = ln_fact[k] - ln_fact[l] - ln_fact[k - l]
            + l as f64 * ln_p
            + (k - l) as f64 * ln_q;
        sum.add(ln_term.exp());
    }
    Ok(sum.value().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_point() -> Dist1D {
        Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn r_of_examples() {
        assert_abs_diff_eq!(r_of(&Dist1D::uniform(0.0, 1.0).unwrap()).unwrap(), 0.25);
        assert_abs_diff_eq!(r_of(&two_point()).unwrap(), 1.0);
        assert_abs_diff_eq!(r_of(&Dist1D::point_mass(7.0).unwrap()).unwrap(), 7.0);
        assert_abs_diff_eq!(
            r_of(&Dist1D::equal_revenue(1.0, Some(8.0)).unwrap()).unwrap(),
            1.0
        );
        assert!(matches!(
            r_of(&Dist1D::equal_revenue(1.0, None).unwrap()),
            Err(Error::InfiniteRevenue(_))
        ));
    }

    #[test]
    fn hat_of_examples() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        assert_eq!(hat_of(&u, 1).unwrap(), u);

        let hat = hat_of(&two_point(), 2).unwrap();
        let d = hat.as_discrete().unwrap();
        assert_eq!(d.values(), &[1.0, 2.0]);
        assert_abs_diff_eq!(d.probs()[0], 0.25);
        assert_abs_diff_eq!(d.probs()[1], 0.75);
    }

    #[test]
    fn r_of_hat_uniform_matches_grid_oracle() {
        // independent oracle: maximize x (1 - x^2) on a 1e-6 grid
        let mut oracle = 0.0f64;
        let steps = 1_000_000;
        for i in 0..=steps {
            let x = i as f64 / steps as f64;
            oracle = oracle.max(x * (1.0 - x * x));
        }
        let hat = hat_of(&Dist1D::uniform(0.0, 1.0).unwrap(), 2).unwrap();
        let r = r_of(&hat).unwrap();
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-6);
        // analytic value 2 / (3 sqrt 3)
        assert_abs_diff_eq!(r, 2.0 / (3.0 * 3.0f64.sqrt()), epsilon = 1e-9);
    }

    #[test]
    fn a_c_ell_uniform() {
        let (a, c) = a_c_ell(&Dist1D::uniform(0.0, 1.0).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(a, 15.0 / 32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c, 1.0 / 32.0, epsilon = 1e-9);
    }

    #[test]
    fn a_c_ell_with_zero_atom() {
        // F = {0 w.p. 4/7, 3 w.p. 3/7}: r = 9/7, survival 3/7 on [0,3),
        // A_9 = 9/7 + 3 * 3/7 = 18/7, C_9 = 3 * 3/7 = 9/7
        let f = Dist1D::discrete(vec![(0.0, 4.0 / 7.0), (3.0, 3.0 / 7.0)]).unwrap();
        let (a, c) = a_c_ell(&f, 9).unwrap();
        assert_abs_diff_eq!(a, 18.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 9.0 / 7.0, epsilon = 1e-12);
        let q = DerivedQuantities::compute(&f, 9).unwrap();
        let (lo, hi) = q.property_p2_slack();
        assert!(lo >= -1e-12 && hi >= -1e-12);
    }

    #[test]
    fn a_c_ell_point_mass() {
        // direct numeric check of the definition: r = 1,
        // A_3 = r + int_0^3 (1 - F) = 1 + 1 = 2, C_3 = 1
        let (a, c) = a_c_ell(&Dist1D::point_mass(1.0).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let pm = Dist1D::point_mass(1.0).unwrap();
        // m = 2, A_2(point mass at 1) = 2, so 6 * 2 = 12
        assert_abs_diff_eq!(closed_form_revenue(&pm, 3, 6).unwrap(), 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            closed_form_revenue(&Dist1D::uniform(0.0, 1.0).unwrap(), 1, 1).unwrap(),
            15.0 / 32.0,
            epsilon = 1e-9
        );
        // n = k gives m = 1 and k * A_1(F-hat)
        let f = two_point();
        let hat = hat_of(&f, 3).unwrap();
        let (a1, _) = a_c_ell(&hat, 1).unwrap();
        assert_abs_diff_eq!(
            closed_form_revenue(&f, 3, 3).unwrap(),
            3.0 * a1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fact7_examples() {
        // exact binomial-sum oracle for small cases
        assert_abs_diff_eq!(fact7_b(2, 2).unwrap(), 0.75, epsilon = 1e-12);
        let b = fact7_b(10, 5).unwrap();
        assert_abs_diff_eq!(b, 1.0 - 0.9f64.powi(5), epsilon = 1e-12);
        assert!(b >= 5.0 / (10.0 * std::f64::consts::E));
        assert!(fact7_b(3, 30).unwrap() >= 1.0 / 14.0);
        // no underflow blowups at the guard boundary
        let b = fact7_b(200, 200).unwrap();
        assert!(b > 0.0 && b <= 1.0);
    }

    proptest! {
        // Property P2 on random discrete distributions.
        #[test]
        fn property_p2_random_discrete(
            vals in proptest::collection::vec(0.01f64..50.0, 2..5),
            weights in proptest::collection::vec(0.05f64..1.0, 2..5),
            ell in 1u32..21,
        ) {
            let n = vals.len().min(weights.len());
            let total: f64 = weights[..n].iter().sum();
            let mut atoms: Vec<(f64, f64)> = vals[..n]
                .iter()
                .zip(&weights[..n])
                .map(|(&v, &w)| (v, w / total))
                .collect();
            let fix: f64 = 1.0 - atoms.iter().map(|a| a.1).sum::<f64>();
            atoms.last_mut().unwrap().1 += fix;
            if let Ok(f) = Dist1D::discrete(atoms) {
                let q = DerivedQuantities::compute(&f, ell).unwrap();
                let (lo, hi) = q.property_p2_slack();
                prop_assert!(lo >= -1e-9, "A_l < r + C_l by {lo}");
                prop_assert!(hi >= -1e-9, "A_l > 2r + C_l by {hi}");
            }
        }

        // F-hat stochastically dominates F.
        #[test]
        fn hat_dominates(n in 1u32..6, x in 0.0f64..3.0) {
            let f = Dist1D::discrete(vec![(0.5, 0.3), (1.0, 0.4), (2.5, 0.3)]).unwrap();
            let hat = hat_of(&f, n).unwrap();
            prop_assert!(hat.cdf(x) <= f.cdf(x) + 1e-12);
        }
    }
}
