//! 1-bidder mechanisms as menus: the buyer picks a utility-maximizing
//! (allocation, price) entry. Two transformations operate on them: the
//! profitable-menu transform (delete unprofitable entries, rescale prices)
//! and the threshold lifting that turns an arbitrary mechanism into an
//! exclusive one.

use crate::error::{Error, Result};
use crate::oracle::TypeMechanism;
use crate::product::DiscreteKd;

#[derive(Debug, Clone, PartialEq)]
pub struct MenuEntry {
    pub alloc: Vec<f64>,
    pub price: f64,
}

/// A finite menu; always contains the null entry (zero allocation, price 0)
/// so walking away is possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    k: usize,
    entries: Vec<MenuEntry>,
}

impl Menu {
    pub fn new(k: usize, mut entries: Vec<MenuEntry>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInstance("menu over zero items".into()));
        }
        for e in &entries {
            if e.alloc.len() != k {
                return Err(Error::InvalidInstance("menu entry arity mismatch".into()));
            }
            if e.alloc.iter().any(|q| !(0.0..=1.0 + 1e-12).contains(q)) {
                return Err(Error::InvalidInstance(
                    "menu allocations must lie in [0,1]".into(),
                ));
            }
        }
        let null = MenuEntry {
            alloc: vec![0.0; k],
            price: 0.0,
        };
        if !entries.iter().any(|e| e == &null) {
            entries.push(null);
        }
        // drop exact duplicates
        let mut dedup: Vec<MenuEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            if !dedup.contains(&e) {
                dedup.push(e);
            }
        }
        Ok(Menu { k, entries: dedup })
    }

    pub fn null_only(k: usize) -> Self {
        Menu::new(k, Vec::new()).expect("null menu")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[MenuEntry] {
        &self.entries
    }

    pub fn is_deterministic(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.alloc.iter().all(|&q| q == 0.0 || q == 1.0))
    }

    /// Utility-maximizing entry for bid `z`; ties break to the lowest
    /// price, then the lexicographically smallest allocation.
    pub fn best_response(&self, z: &[f64]) -> (&MenuEntry, f64) {
        let mut best = &self.entries[0];
        let mut best_u = utility(best, z);
        for e in &self.entries[1..] {
            let u = utility(e, z);
            if u > best_u
                || (u == best_u
                    && (e.price < best.price
                        || (e.price == best.price && lex_less(&e.alloc, &best.alloc))))
            {
                best = e;
                best_u = u;
            }
        }
        (best, best_u)
    }

    /// Expected price paid under best responses.
    pub fn expected_revenue(&self, l: &DiscreteKd) -> f64 {
        l.expected(|z| self.best_response(z).0.price)
    }

    /// Expected price minus the value credited for items allocated at or
    /// below their thresholds.
    pub fn expected_adjusted_revenue(&self, l: &DiscreteKd, beta: &[f64]) -> f64 {
        l.expected(|z| {
            let e = self.best_response(z).0;
            let credit: f64 = (0..self.k)
                .filter(|&j| z[j] <= beta[j])
                .map(|j| e.alloc[j] * z[j])
                .sum();
            e.price - credit
        })
    }

    /// The same menu with every price scaled by `1 - eps`. The sup revenue
    /// of a menu is approached by such discounts: entries tied in utility
    /// resolve toward the higher (discounted) price, so exact-indifference
    /// buyers accept.
    pub fn discounted(&self, eps: f64) -> Menu {
        let entries = self
            .entries
            .iter()
            .map(|e| MenuEntry {
                alloc: e.alloc.clone(),
                price: e.price * (1.0 - eps),
            })
            .collect();
        Menu::new(self.k, entries).expect("discounted menu")
    }

    /// One entry per support type of an LP solution.
    pub fn from_type_mechanism(m: &TypeMechanism) -> Result<Menu> {
        let k = m.types.first().map_or(0, |t| t.len());
        let entries = m
            .alloc
            .iter()
            .zip(&m.pay)
            .map(|(q, s)| MenuEntry {
                alloc: q.clone(),
                price: *s,
            })
            .collect();
        Menu::new(k, entries)
    }

    /// Realizes the menu as a type map on a support (best response per
    /// point).
    pub fn to_type_mechanism(&self, l: &DiscreteKd) -> TypeMechanism {
        let mut alloc = Vec::with_capacity(l.len());
        let mut pay = Vec::with_capacity(l.len());
        for (z, _) in l.iter() {
            let e = self.best_response(z).0;
            alloc.push(e.alloc.clone());
            pay.push(e.price);
        }
        TypeMechanism {
            types: l.points().to_vec(),
            probs: l.probs().to_vec(),
            alloc,
            pay,
        }
    }
}

fn utility(e: &MenuEntry, z: &[f64]) -> f64 {
    e.alloc.iter().zip(z).map(|(q, v)| q * v).sum::<f64>() - e.price
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Parameters of the profitable-menu transform; requires `a > 1`,
/// `0 < b < 1` and `a b > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub a: f64,
    pub b: f64,
}

impl TransformParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 1.0 && b > 0.0 && b < 1.0 && a * b > 1.0) {
            return Err(Error::InvalidInstance(format!(
                "transform needs a > 1, b in (1/a, 1); got a={a}, b={b}"
            )));
        }
        Ok(TransformParams { a, b })
    }

    pub fn c(&self) -> f64 {
        1.0 - 1.0 / (1.0 + self.a * (1.0 - self.b))
    }
}

impl Default for TransformParams {
    fn default() -> Self {
        TransformParams { a: 4.0, b: 0.75 }
    }
}

/// Keeps exactly the profitable entries (price at least `a` times the
/// threshold value of the allocation), rescales their prices by `b`, and
/// retains the null entry. Input menus are finite, so the closure taken in
/// the construction is the entry set itself.
pub fn profitable_transform(menu: &Menu, beta: &[f64], params: &TransformParams) -> Result<Menu> {
    if beta.len() != menu.k() {
        return Err(Error::InvalidInstance("beta length mismatch".into()));
    }
    let entries = menu
        .entries()
        .iter()
        .filter(|e| {
            let threshold_value: f64 = e.alloc.iter().zip(beta).map(|(q, b)| q * b).sum();
            e.price >= params.a * threshold_value
        })
        .map(|e| MenuEntry {
            alloc: e.alloc.clone(),
            price: params.b * e.price,
        })
        .collect();
    Menu::new(menu.k(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiVariant {
    /// Bid shifted down by the thresholds and priced up by them.
    Shifted,
    /// Plain per-item posted prices at the thresholds.
    PostedThresholds,
}

#[derive(Debug, Clone)]
pub struct PhiResult {
    pub menu: Menu,
    pub revenue: f64,
    pub variant: PhiVariant,
}

/// Lifts a mechanism for the shifted upper distribution into an exclusive
/// mechanism for `L`: evaluates both the shifted lifting (map the bid to
/// `max(z - beta, 0)`, run `m`, charge the thresholds on top) and plain
/// posted thresholds, and returns the better.
///
/// `m` must be defined on the support of the shifted lift of `l`
/// (typically an LP solution on exactly that support); it is converted to
/// a 0-exclusive mechanism first, which makes the result exclusive at
/// `beta` by construction.
pub fn phi_beta(m: &TypeMechanism, beta: &[f64], l: &DiscreteKd) -> Result<PhiResult> {
    let k = l.k();
    if beta.len() != k {
        return Err(Error::InvalidInstance("beta length mismatch".into()));
    }
    let m0 = m.zero_exclusive();

    // shifted variant
    let mut shifted_revenue = 0.0;
    let mut defined = true;
    for (z, p) in l.iter() {
        let mapped: Vec<f64> = (0..k)
            .map(|j| if z[j] > beta[j] { z[j] - beta[j] } else { 0.0 })
            .collect();
        match m0.lookup(&mapped) {
            Some((q, s)) => {
                let tops: f64 = q.iter().zip(beta).map(|(q, b)| q * b).sum();
                shifted_revenue += p * (s + tops);
            }
            None => {
                defined = false;
                break;
            }
        }
    }
    if !defined {
        return Err(Error::InvalidInstance(
            "mechanism is not defined on the shifted support".into(),
        ));
    }
    let shifted_menu = {
        let entries = m0
            .alloc
            .iter()
            .zip(&m0.pay)
            .map(|(q, s)| MenuEntry {
                alloc: q.clone(),
                price: s + q.iter().zip(beta).map(|(q, b)| q * b).sum::<f64>(),
            })
            .collect();
        Menu::new(k, entries)?
    };

    // posted-threshold variant: sells item j above beta^j at beta^j
    let posted_revenue: f64 = (0..k)
        .map(|j| beta[j] * l.marginal_survival(j, beta[j]))
        .sum();
    let posted_menu = {
        let entries = (0..(1usize << k.min(16)))
            .map(|s| MenuEntry {
                alloc: (0..k)
                    .map(|j| if s & (1 << j) != 0 { 1.0 } else { 0.0 })
                    .collect(),
                price: (0..k)
                    .filter(|j| s & (1 << j) != 0)
                    .map(|j| beta[j])
                    .sum(),
            })
            .collect();
        Menu::new(k, entries)?
    };

    Ok(if shifted_revenue > posted_revenue {
        PhiResult {
            menu: shifted_menu,
            revenue: shifted_revenue,
            variant: PhiVariant::Shifted,
        }
    } else {
        PhiResult {
            menu: posted_menu,
            revenue: posted_revenue,
            variant: PhiVariant::PostedThresholds,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist1D;
    use crate::oracle::{rev_1bidder, rev_x};
    use crate::product::ProductDist;
    use approx::assert_abs_diff_eq;

    fn bundle_menu(price: f64) -> Menu {
        Menu::new(
            2,
            vec![MenuEntry {
                alloc: vec![1.0, 1.0],
                price,
            }],
        )
        .unwrap()
    }

    fn point_kd(z: &[f64]) -> DiscreteKd {
        DiscreteKd::from_parts(vec![z.to_vec()], vec![1.0]).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let menu = bundle_menu(3.0);
        let (e, u) = menu.best_response(&[2.0, 2.0]);
        assert_eq!(e.alloc, vec![1.0, 1.0]);
        assert_abs_diff_eq!(u, 1.0);

        // tie at utility 0 resolves to the null entry (lower price)
        let (e, u) = menu.best_response(&[1.0, 1.0]);
        assert_eq!(e.alloc, vec![0.0, 0.0]);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn dominated_entry_never_selected() {
        let menu = Menu::new(
            1,
            vec![
                MenuEntry {
                    alloc: vec![1.0],
                    price: 2.0,
                },
                MenuEntry {
                    alloc: vec![1.0],
                    price: 5.0,
                },
            ],
        )
        .unwrap();
        for z in [0.0, 1.0, 3.0, 10.0] {
            let (e, _) = menu.best_response(&[z]);
            assert_ne!(e.price, 5.0);
        }
    }

    #[test]
    fn indifferent_buyer_needs_a_discount() {
        let menu = bundle_menu(5.0);
        let l = point_kd(&[2.0, 3.0]);
        assert_eq!(menu.expected_revenue(&l), 0.0);
        let eps = 1e-9;
        let r = menu.discounted(eps).expected_revenue(&l);
        assert_abs_diff_eq!(r, 5.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_beta_adjusted_equals_plain_for_zero_exclusive_menus() {
        let l = ProductDist::iid(
            Dist1D::discrete(vec![(0.0, 0.25), (1.0, 0.25), (2.0, 0.5)]).unwrap(),
            2,
        )
        .unwrap()
        .enumerate()
        .unwrap();
        let solved = rev_1bidder_zero_exclusive(&l);
        let menu = Menu::from_type_mechanism(&solved).unwrap();
        let beta = [0.0, 0.0];
        assert_abs_diff_eq!(
            menu.expected_revenue(&l),
            menu.expected_adjusted_revenue(&l, &beta),
            epsilon = 1e-12
        );
    }

    fn rev_1bidder_zero_exclusive(l: &DiscreteKd) -> TypeMechanism {
        let opts = crate::oracle::OneBidderOpts {
            zero_exclusive: true,
            ..Default::default()
        };
        crate::oracle::rev_1bidder_opts(l, &opts).unwrap().mechanism
    }

    #[test]
    fn exclusive_menu_adjusted_equals_plain() {
        // the posted-threshold menu never allocates at or below beta
        let beta = [1.0, 1.0];
        let prod = ProductDist::iid(
            Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap(),
            2,
        )
        .unwrap();
        let l = prod.enumerate().unwrap();
        let m = Menu::null_only(2);
        let upper = prod.lift_plus(&beta).unwrap().shift(&beta).unwrap();
        let phi = phi_beta(
            &m.to_type_mechanism(&upper.enumerate().unwrap()),
            &beta,
            &l,
        )
        .unwrap();
        assert_eq!(phi.variant, PhiVariant::PostedThresholds);
        assert_abs_diff_eq!(
            phi.menu.expected_revenue(&l),
            phi.menu.expected_adjusted_revenue(&l, &beta),
            epsilon = 1e-12
        );
    }

    #[test]
    fn transform_keeps_and_rescales_profitable_entries() {
        let params = TransformParams::default();
        assert_abs_diff_eq!(params.c(), 0.5);
        let beta = [0.5, 0.0];
        // entry with beta . q = 0.5
        let cheap = MenuEntry {
            alloc: vec![1.0, 1.0],
            price: 1.0,
        };
        let rich = MenuEntry {
            alloc: vec![1.0, 1.0],
            price: 4.0,
        };
        let menu = Menu::new(2, vec![cheap, rich]).unwrap();
        let out = profitable_transform(&menu, &beta, &params).unwrap();
        // 1 < 4 * 0.5: deleted; 4 >= 2: kept at 3; null kept
        assert_eq!(out.entries().len(), 2);
        assert!(out
            .entries()
            .iter()
            .any(|e| e.alloc == vec![1.0, 1.0] && (e.price - 3.0).abs() < 1e-12));
        assert!(out
            .entries()
            .iter()
            .any(|e| e.alloc == vec![0.0, 0.0] && e.price == 0.0));
    }

    #[test]
    fn phi_point_mass_example() {
        let beta = [1.0, 1.0];
        let prod = ProductDist::new(vec![
            Dist1D::point_mass(2.0).unwrap(),
            Dist1D::point_mass(3.0).unwrap(),
        ])
        .unwrap();
        let l = prod.enumerate().unwrap();
        // mechanism for the shifted support that never sells
        let null = Menu::null_only(2);
        let upper = prod.lift_plus(&beta).unwrap().shift(&beta).unwrap();
        let phi = phi_beta(
            &null.to_type_mechanism(&upper.enumerate().unwrap()),
            &beta,
            &l,
        )
        .unwrap();
        assert_eq!(phi.variant, PhiVariant::PostedThresholds);
        assert_abs_diff_eq!(phi.revenue, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_output_is_beta_exclusive() {
        let f = Dist1D::discrete(vec![(1.0, 0.4), (2.0, 0.4), (4.0, 0.2)]).unwrap();
        let prod = ProductDist::iid(f, 2).unwrap();
        let l = prod.enumerate().unwrap();
        let beta = [1.0, 2.0];
        let upper = prod.lift_plus(&beta).unwrap().shift(&beta).unwrap();
        let m = rev_1bidder(&upper.enumerate().unwrap()).unwrap().mechanism;
        let phi = phi_beta(&m, &beta, &l).unwrap();
        // evaluated on the support, no item at or below its threshold is
        // ever allocated
        for (z, _) in l.iter() {
            let e = phi.menu.best_response(z).0;
            for j in 0..2 {
                if z[j] <= beta[j] {
                    assert_eq!(e.alloc[j], 0.0, "allocated item {j} at z {z:?}");
                }
            }
        }
        // and the lifted mechanism earns at least half the exclusive optimum
        let revx = rev_x(&l, &beta).unwrap().lp.value;
        assert!(
            phi.revenue >= revx / 2.0 - 1e-9,
            "phi {} < half of {}",
            phi.revenue,
            revx
        );
    }

    #[test]
    fn menu_ic_is_structural() {
        // picking the argmax entry is incentive compatible by definition:
        // the utility from any other support point's choice is never higher
        let l = ProductDist::iid(
            Dist1D::discrete(vec![(1.0, 0.5), (3.0, 0.5)]).unwrap(),
            2,
        )
        .unwrap()
        .enumerate()
        .unwrap();
        let menu = Menu::new(
            2,
            vec![
                MenuEntry {
                    alloc: vec![1.0, 0.0],
                    price: 0.9,
                },
                MenuEntry {
                    alloc: vec![1.0, 1.0],
                    price: 3.4,
                },
            ],
        )
        .unwrap();
        for (z, _) in l.iter() {
            let (own, u_own) = menu.best_response(z);
            let _ = own;
            for (z2, _) in l.iter() {
                let other = menu.best_response(z2).0;
                let u_cross = other
                    .alloc
                    .iter()
                    .zip(z)
                    .map(|(q, v)| q * v)
                    .sum::<f64>()
                    - other.price;
                assert!(u_own >= u_cross - 1e-12);
            }
        }
    }
}
