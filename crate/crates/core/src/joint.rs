//! n-bidder k-item valuation models: independent cell grids, the iid
//! shorthand, and explicit finite joints, together with the order-statistic
//! quantities (second prices, max/second-max pairs) they induce.

use crate::dist::{DiscreteDist, Dist1D};
use crate::error::{Error, Result};
use crate::product::{DiscreteKd, ProductDist, MAX_SUPPORT_TYPES};
use crate::rng::Stream;

/// One realized n-by-k matrix of nonnegative bids.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationMatrix {
    rows: Vec<Vec<f64>>,
}

impl ValuationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInstance("empty valuation matrix".into()));
        }
        let k = rows[0].len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInstance("ragged valuation matrix".into()));
        }
        if rows
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidInstance(
                "valuations must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Replaces bidder `i`'s row, e.g. to evaluate a deviation.
    pub fn with_row(&self, i: usize, row: Vec<f64>) -> ValuationMatrix {
        let mut rows = self.rows.clone();
        rows[i] = row;
        ValuationMatrix { rows }
    }
}

/// Second-highest entry of a column under the multiset convention
/// (duplicates count); a singleton column has second price 0.
pub fn second_highest(column: &[f64]) -> f64 {
    match column.len() {
        0 => 0.0,
        1 => 0.0,
        _ => {
            let mut top = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            for &v in column {
                if v > top {
                    second = top;
                    top = v;
                } else if v > second {
                    second = v;
                }
            }
            second
        }
    }
}

/// Componentwise maximum of the other bidders' rows; empty input gives the
/// zero vector.
pub fn best_of_others(others: &[&[f64]], k: usize) -> Vec<f64> {
    let mut b = vec![0.0; k];
    for row in others {
        for j in 0..k {
            if row[j] > b[j] {
                b[j] = row[j];
            }
        }
    }
    b
}

/// An n-bidder k-item valuation model.
#[derive(Debug, Clone, PartialEq)]
pub enum JointValuation {
    /// Fully independent grid of per-cell distributions (n rows, k columns).
    Grid { cells: Vec<Vec<Dist1D>> },
    /// All n*k cells iid according to `f`.
    Iid { f: Dist1D, n: usize, k: usize },
    /// Explicit finite joint over matrices.
    Joint {
        outcomes: Vec<(ValuationMatrix, f64)>,
    },
}

impl JointValuation {
    pub fn grid(cells: Vec<Vec<Dist1D>>) -> Result<Self> {
        if cells.is_empty() || cells[0].is_empty() {
            return Err(Error::InvalidInstance("empty grid".into()));
        }
        let k = cells[0].len();
        if cells.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInstance("ragged grid".into()));
        }
        Ok(JointValuation::Grid { cells })
    }

    pub fn iid(f: Dist1D, n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidInstance("iid model needs n, k >= 1".into()));
        }
        Ok(JointValuation::Iid { f, n, k })
    }

    pub fn joint(outcomes: Vec<(ValuationMatrix, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInstance("empty joint".into()));
        }
        let (n, k) = (outcomes[0].0.n(), outcomes[0].0.k());
        if outcomes.iter().any(|(m, _)| m.n() != n || m.k() != k) {
            return Err(Error::InvalidInstance("mixed matrix shapes".into()));
        }
        let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInstance(format!(
                "joint probabilities sum to {total}"
            )));
        }
        if outcomes.iter().any(|(_, p)| *p < 0.0) {
            return Err(Error::InvalidInstance("negative probability".into()));
        }
        Ok(JointValuation::Joint { outcomes })
    }

    pub fn n(&self) -> usize {
        match self {
            JointValuation::Grid { cells } => cells.len(),
            JointValuation::Iid { n, .. } => *n,
            JointValuation::Joint { outcomes } => outcomes[0].0.n(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            JointValuation::Grid { cells } => cells[0].len(),
            JointValuation::Iid { k, .. } => *k,
            JointValuation::Joint { outcomes } => outcomes[0].0.k(),
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&Dist1D> {
        match self {
            JointValuation::Grid { cells } => Some(&cells[i][j]),
            JointValuation::Iid { f, .. } => {
                let _ = (i, j);
                Some(f)
            }
            JointValuation::Joint { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            JointValuation::Grid { cells } => cells
                .iter()
                .flatten()
                .all(|c| c.as_discrete().is_some() || matches!(c, Dist1D::PointMass { .. })),
            JointValuation::Iid { f, .. } => {
                f.as_discrete().is_some() || matches!(f, Dist1D::PointMass { .. })
            }
            JointValuation::Joint { .. } => true,
        }
    }

    /// Cell distribution as a discrete atom list (point masses coerce).
    fn discrete_cell(&self, i: usize, j: usize) -> Result<DiscreteDist> {
        let c = self
            .cell(i, j)
            .ok_or_else(|| Error::InvalidInstance("no cell view of explicit joint".into()))?;
        match c {
            Dist1D::Discrete(d) => Ok(d.clone()),
            Dist1D::PointMass { value } => DiscreteDist::new(vec![(*value, 1.0)]),
            _ => Err(Error::DiscretizeFirst(format!("cell ({i},{j})"))),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> ValuationMatrix {
        match self {
            JointValuation::Grid { cells } => ValuationMatrix {
                rows: cells
                    .iter()
                    .map(|row| row.iter().map(|c| c.sample(rng)).collect())
                    .collect(),
            },
            JointValuation::Iid { f, n, k } => ValuationMatrix {
                rows: (0..*n)
                    .map(|_| (0..*k).map(|_| f.sample(rng)).collect())
                    .collect(),
            },
            JointValuation::Joint { outcomes } => {
                let u: f64 = rand::Rng::gen(rng);
                let mut acc = 0.0;
                for (m, p) in outcomes {
                    acc += p;
                    if u < acc {
                        return m.clone();
                    }
                }
                outcomes.last().unwrap().0.clone()
            }
        }
    }

    /// Full support enumeration with probabilities.
    pub fn enumerate(&self) -> Result<Vec<(ValuationMatrix, f64)>> {
        match self {
            JointValuation::Joint { outcomes } => Ok(outcomes.clone()),
            _ => {
                let (n, k) = (self.n(), self.k());
                let cells: Vec<Vec<DiscreteDist>> = (0..n)
                    .map(|i| (0..k).map(|j| self.discrete_cell(i, j)).collect())
                    .collect::<Result<_>>()?;
                let flat: Vec<&DiscreteDist> = cells.iter().flatten().collect();
                let total: usize = flat
                    .iter()
                    .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
                    .unwrap_or(usize::MAX);
                if total > MAX_SUPPORT_TYPES {
                    return Err(Error::SizeGuard {
                        what: "joint support matrices",
                        count: total,
                        limit: MAX_SUPPORT_TYPES,
                    });
                }
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; flat.len()];
                loop {
                    let mut rows = vec![vec![0.0; k]; n];
                    let mut p = 1.0;
                    for (c, d) in flat.iter().enumerate() {
                        rows[c / k][c % k] = d.values()[idx[c]];
                        p *= d.probs()[idx[c]];
                    }
                    out.push((ValuationMatrix { rows }, p));
                    let mut c = 0;
                    loop {
                        if c == flat.len() {
                            return Ok(out);
                        }
                        idx[c] += 1;
                        if idx[c] < flat[c].len() {
                            break;
                        }
                        idx[c] = 0;
                        c += 1;
                    }
                }
            }
        }
    }

    /// Bidder `i`'s row distribution when it is independent of the others
    /// (grid and iid models).
    pub fn row_product(&self, i: usize) -> Result<ProductDist> {
        match self {
            JointValuation::Grid { cells } => {
                ProductDist::new(cells[i].to_vec())
            }
            JointValuation::Iid { f, k, .. } => ProductDist::iid(f.clone(), *k),
            JointValuation::Joint { .. } => Err(Error::InvalidInstance(
                "explicit joint has no independent row product".into(),
            )),
        }
    }

    /// Distinct rows bidder `i` takes on the support, with marginal
    /// probabilities. This is the deviation grid for incentive checks.
    pub fn bidder_types(&self, i: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        match self {
            JointValuation::Joint { outcomes } => {
                let mut types: Vec<(Vec<f64>, f64)> = Vec::new();
                for (m, p) in outcomes {
                    let row = m.row(i).to_vec();
                    match types.iter_mut().find(|(r, _)| r == &row) {
                        Some((_, q)) => *q += p,
                        None => types.push((row, *p)),
                    }
                }
                Ok(types)
            }
            _ => {
                let kd = self.row_product(i)?.enumerate()?;
                Ok(kd
                    .iter()
                    .map(|(z, p)| (z.to_vec(), p))
                    .collect())
            }
        }
    }

    /// Enumerates `x_{-i}`: the other bidders' rows (in bidder order, bidder
    /// `i` omitted) with their marginal probability.
    pub fn others_profiles(&self, i: usize) -> Result<Vec<(Vec<Vec<f64>>, f64)>> {
        match self {
            JointValuation::Joint { outcomes } => {
                let mut profiles: Vec<(Vec<Vec<f64>>, f64)> = Vec::new();
                for (m, p) in outcomes {
                    let rows: Vec<Vec<f64>> = (0..m.n())
                        .filter(|&r| r != i)
                        .map(|r| m.row(r).to_vec())
                        .collect();
                    match profiles.iter_mut().find(|(r, _)| r == &rows) {
                        Some((_, q)) => *q += p,
                        None => profiles.push((rows, *p)),
                    }
                }
                Ok(profiles)
            }
            _ => {
                let n = self.n();
                let per_bidder: Vec<Vec<(Vec<f64>, f64)>> = (0..n)
                    .filter(|&r| r != i)
                    .map(|r| self.bidder_types(r))
                    .collect::<Result<_>>()?;
                let total: usize = per_bidder.iter().map(|t| t.len()).product();
                if total > MAX_SUPPORT_TYPES {
                    return Err(Error::SizeGuard {
                        what: "opponent profiles",
                        count: total,
                        limit: MAX_SUPPORT_TYPES,
                    });
                }
                let mut out = Vec::with_capacity(total.max(1));
                if per_bidder.is_empty() {
                    out.push((Vec::new(), 1.0));
                    return Ok(out);
                }
                let mut idx = vec![0usize; per_bidder.len()];
                loop {
                    let mut rows = Vec::with_capacity(per_bidder.len());
                    let mut p = 1.0;
                    for (b, types) in per_bidder.iter().enumerate() {
                        rows.push(types[idx[b]].0.clone());
                        p *= types[idx[b]].1;
                    }
                    out.push((rows, p));
                    let mut b = 0;
                    loop {
                        if b == per_bidder.len() {
                            return Ok(out);
                        }
                        idx[b] += 1;
                        if idx[b] < per_bidder[b].len() {
                            break;
                        }
                        idx[b] = 0;
                        b += 1;
                    }
                }
            }
        }
    }

    /// Conditional distribution of bidder `i`'s row given the others' rows.
    pub fn conditional(&self, i: usize, others: &[Vec<f64>]) -> Result<DiscreteKd> {
        match self {
            JointValuation::Joint { outcomes } => {
                let mut points: Vec<Vec<f64>> = Vec::new();
                let mut probs: Vec<f64> = Vec::new();
                for (m, p) in outcomes {
                    if *p == 0.0 {
                        continue;
                    }
                    let rows: Vec<&[f64]> = (0..m.n())
                        .filter(|&r| r != i)
                        .map(|r| m.row(r))
                        .collect();
                    if rows.len() == others.len()
                        && rows
                            .iter()
                            .zip(others)
                            .all(|(a, b)| a.iter().eq(b.iter()))
                    {
                        let row = m.row(i).to_vec();
                        match points.iter().position(|q| q == &row) {
                            Some(idx) => probs[idx] += p,
                            None => {
                                points.push(row);
                                probs.push(*p);
                            }
                        }
                    }
                }
                let total: f64 = probs.iter().sum();
                if total <= 0.0 {
                    return Err(Error::ZeroProbabilityCondition);
                }
                for p in &mut probs {
                    *p /= total;
                }
                DiscreteKd::from_parts(points, probs)
            }
            _ => self.row_product(i)?.enumerate(),
        }
    }

    /// Whether the model factorizes across items (columns independent).
    pub fn is_item_independent(&self) -> bool {
        match self {
            JointValuation::Grid { .. } | JointValuation::Iid { .. } => true,
            JointValuation::Joint { outcomes } => {
                let k = self.k();
                // marginal distribution of each column
                let mut col_marginals: Vec<Vec<(Vec<f64>, f64)>> = vec![Vec::new(); k];
                for (m, p) in outcomes {
                    for (j, marg) in col_marginals.iter_mut().enumerate() {
                        let col = m.column(j);
                        match marg.iter_mut().find(|(c, _)| c == &col) {
                            Some((_, q)) => *q += p,
                            None => marg.push((col, *p)),
                        }
                    }
                }
                // joint probability must equal the product of column marginals,
                // on support and off support alike; checking the support and
                // total mass conservation suffices for finite joints
                let mut product_mass = 0.0;
                for (m, p) in outcomes {
                    let mut q = 1.0;
                    for (j, marg) in col_marginals.iter().enumerate() {
                        let col = m.column(j);
                        q *= marg
                            .iter()
                            .find(|(c, _)| c == &col)
                            .map(|(_, w)| *w)
                            .unwrap_or(0.0);
                    }
                    if (q - p).abs() > 1e-9 {
                        return false;
                    }
                    product_mass += q;
                }
                (product_mass - 1.0).abs() < 1e-9
            }
        }
    }

    /// Whether the bidders' rows are mutually independent.
    pub fn is_bidder_independent(&self) -> bool {
        match self {
            JointValuation::Grid { .. } | JointValuation::Iid { .. } => true,
            JointValuation::Joint { outcomes } => {
                let n = self.n();
                let marginals: Vec<Vec<(Vec<f64>, f64)>> = (0..n)
                    .map(|i| self.bidder_types(i).unwrap_or_default())
                    .collect();
                let mut product_mass = 0.0;
                for (m, p) in outcomes {
                    let mut q = 1.0;
                    for (i, marg) in marginals.iter().enumerate() {
                        let row = m.row(i);
                        q *= marg
                            .iter()
                            .find(|(r, _)| r.as_slice() == row)
                            .map(|(_, w)| *w)
                            .unwrap_or(0.0);
                    }
                    if (q - p).abs() > 1e-9 {
                        return false;
                    }
                    product_mass += q;
                }
                (product_mass - 1.0).abs() < 1e-9
            }
        }
    }
}

/// Expected second prices per item and in total.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondPriceStats {
    pub per_item: Vec<f64>,
    pub total: f64,
    /// Standard error of `total` when Monte Carlo was used; `None` for exact
    /// enumeration.
    pub stderr: Option<f64>,
}

/// `E[X^{j[2nd]}]` per item and the total, exactly for discrete models,
/// by Monte Carlo (with reported standard error) otherwise.
pub fn second_price_stats(
    fj: &JointValuation,
    mc_samples: usize,
    seed: u64,
) -> Result<SecondPriceStats> {
    if fj.is_discrete() {
        if let Ok(stats) = exact_second_price(fj) {
            return Ok(stats);
        }
    }
    // Monte Carlo fallback, also used when the exact path trips a size guard.
    let mut rng = crate::rng::substream(seed, 0);
    let k = fj.k();
    let mut per_item = vec![0.0; k];
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..mc_samples.max(2) {
        let x = fj.sample(&mut rng);
        let mut tot = 0.0;
        for (j, acc) in per_item.iter_mut().enumerate() {
            let v = second_highest(&x.column(j));
            *acc += v;
            tot += v;
        }
        let delta = tot - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (tot - mean);
    }
    let n = mc_samples.max(2) as f64;
    for acc in &mut per_item {
        *acc /= n;
    }
    Ok(SecondPriceStats {
        per_item,
        total: mean,
        stderr: Some((m2 / (n - 1.0) / n).sqrt()),
    })
}

fn exact_second_price(fj: &JointValuation) -> Result<SecondPriceStats> {
    let k = fj.k();
    match fj {
        JointValuation::Joint { outcomes } => {
            let mut per_item = vec![0.0; k];
            for (m, p) in outcomes {
                for (j, acc) in per_item.iter_mut().enumerate() {
                    *acc += p * second_highest(&m.column(j));
                }
            }
            let total = per_item.iter().sum();
            Ok(SecondPriceStats {
                per_item,
                total,
                stderr: None,
            })
        }
        _ => {
            let n = fj.n();
            let mut per_item = vec![0.0; k];
            for (j, acc) in per_item.iter_mut().enumerate() {
                let col: Vec<DiscreteDist> = (0..n)
                    .map(|i| fj.discrete_cell(i, j))
                    .collect::<Result<_>>()?;
                let combos: usize = col
                    .iter()
                    .try_fold(1usize, |a, d| a.checked_mul(d.len()))
                    .unwrap_or(usize::MAX);
                if combos > MAX_SUPPORT_TYPES {
                    return Err(Error::SizeGuard {
                        what: "column support",
                        count: combos,
                        limit: MAX_SUPPORT_TYPES,
                    });
                }
                let mut idx = vec![0usize; n];
                'outer: loop {
                    let mut p = 1.0;
                    let mut vals = Vec::with_capacity(n);
                    for (i, d) in col.iter().enumerate() {
                        vals.push(d.values()[idx[i]]);
                        p *= d.probs()[idx[i]];
                    }
                    *acc += p * second_highest(&vals);
                    let mut i = 0;
                    loop {
                        if i == n {
                            break 'outer;
                        }
                        idx[i] += 1;
                        if idx[i] < col[i].len() {
                            break;
                        }
                        idx[i] = 0;
                        i += 1;
                    }
                }
            }
            let total = per_item.iter().sum();
            Ok(SecondPriceStats {
                per_item,
                total,
                stderr: None,
            })
        }
    }
}

/// Joint law of `(W_F, V_F)`: the maximum and second maximum of `n` iid
/// draws of `F`. A single draw has `V = 0` by the empty-competitor
/// convention.
#[derive(Debug, Clone)]
pub struct TopTwo {
    /// `(w, v, prob)` triples for discrete `F`; empty for continuous.
    pairs: Vec<(f64, f64, f64)>,
    f: Dist1D,
    n: u32,
}

impl TopTwo {
    pub fn new(f: &Dist1D, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("top-two of zero draws".into()));
        }
        let pairs = match f {
            Dist1D::Discrete(d) => Self::discrete_pairs(d, n),
            Dist1D::PointMass { value } => {
                let v2 = if n >= 2 { *value } else { 0.0 };
                vec![(*value, v2, 1.0)]
            }
            _ => Vec::new(),
        };
        Ok(Self {
            pairs,
            f: f.clone(),
            n,
        })
    }

    fn discrete_pairs(d: &DiscreteDist, n: u32) -> Vec<(f64, f64, f64)> {
        if n == 1 {
            return d.atoms().map(|(v, p)| (v, 0.0, p)).collect();
        }
        let ni = n as i32;
        let mut pairs = Vec::new();
        for (a, pa) in d.atoms() {
            // second max below the top: exactly one draw at `a`, the other
            // n-1 draws all <= b with maximum exactly b < a
            for (b, _) in d.atoms().filter(|&(b, _)| b < a) {
                let p = n as f64
                    * pa
                    * (d.cdf(b).powi(ni - 1) - d.cdf_left(b).powi(ni - 1));
                if p > 0.0 {
                    pairs.push((a, b, p));
                }
            }
            // tie at the top: at least two draws equal to `a`
            let p_tie = d.cdf(a).powi(ni)
                - d.cdf_left(a).powi(ni)
                - n as f64 * pa * d.cdf_left(a).powi(ni - 1);
            if p_tie > 1e-300 {
                pairs.push((a, a, p_tie.max(0.0)));
            }
        }
        pairs
    }

    pub fn is_exact(&self) -> bool {
        !self.pairs.is_empty()
    }

    pub fn e_max(&self) -> f64 {
        if self.is_exact() {
            self.pairs.iter().map(|(w, _, p)| w * p).sum()
        } else {
            self.moment(|w, _| w)
        }
    }

    pub fn e_second(&self) -> f64 {
        if self.is_exact() {
            self.pairs.iter().map(|(_, v, p)| v * p).sum()
        } else {
            self.moment(|_, v| v)
        }
    }

    /// `Pr{W - V >= t}` for `t > 0`.
    pub fn pr_gap_geq(&self, t: f64) -> f64 {
        if self.is_exact() {
            return self
                .pairs
                .iter()
                .filter(|(w, v, _)| w - v >= t - 1e-12)
                .map(|(_, _, p)| p)
                .sum();
        }
        if self.n == 1 {
            return self.f.pr_geq(t);
        }
        // continuous case: the maximum is unique a.s., so
        // Pr{W - V >= t} = n * int F(Q(p) - t)^{n-1} dp
        let f = &self.f;
        let n = self.n;
        quad01(|p| f.cdf(f.quantile(p) - t).powi(n as i32 - 1)) * n as f64
    }

    fn moment(&self, pick: impl Fn(f64, f64) -> f64) -> f64 {
        // Monte Carlo only reached for continuous F without closed forms;
        // a fixed internal stream keeps the value deterministic.
        let mut rng = crate::rng::substream(0x746f70, 0);
        let samples = 200_000;
        let mut acc = 0.0;
        let mut draws = vec![0.0f64; self.n as usize];
        for _ in 0..samples {
            for d in draws.iter_mut() {
                *d = self.f.sample(&mut rng);
            }
            draws.sort_by(|a, b| b.total_cmp(a));
            let w = draws[0];
            let v = if self.n >= 2 { draws[1] } else { 0.0 };
            acc += pick(w, v);
        }
        acc / samples as f64
    }
}

fn quad01(g: impl Fn(f64) -> f64) -> f64 {
    // composite Simpson on [0,1]; integrands here are bounded and piecewise
    // monotone, 4096 panels keep the error well under 1e-9
    let n = 4096;
    let h = 1.0 / n as f64;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> Dist1D {
        Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn second_highest_conventions() {
        assert_eq!(second_highest(&[3.0, 2.0]), 2.0);
        assert_eq!(second_highest(&[5.0]), 0.0);
        assert_eq!(second_highest(&[2.0, 2.0, 1.0]), 2.0);
    }

    #[test]
    fn deterministic_matrix_second_price() {
        let m = ValuationMatrix::new(vec![vec![3.0, 1.0], vec![2.0, 4.0]]).unwrap();
        let fj = JointValuation::joint(vec![(m, 1.0)]).unwrap();
        let s = second_price_stats(&fj, 0, 0).unwrap();
        assert_eq!(s.per_item, vec![2.0, 1.0]);
        assert_eq!(s.total, 3.0);
        assert!(s.stderr.is_none());
    }

    #[test]
    fn iid_two_point_second_price() {
        // 4 equally likely outcomes; second max is 2 only when both draws are 2
        let fj = JointValuation::iid(two_point(), 2, 1).unwrap();
        let s = second_price_stats(&fj, 0, 0).unwrap();
        assert_abs_diff_eq!(s.total, 1.25, epsilon = 1e-12);
    }

    #[test]
    fn continuous_second_price_mc() {
        // E[min of two uniforms] = 1/3
        let fj = JointValuation::iid(Dist1D::uniform(0.0, 1.0).unwrap(), 2, 1).unwrap();
        let s = second_price_stats(&fj, 100_000, 42).unwrap();
        let se = s.stderr.unwrap();
        assert!((s.total - 1.0 / 3.0).abs() < 4.0 * se, "total {}", s.total);
    }

    #[test]
    fn top_two_discrete() {
        let t = TopTwo::new(&two_point(), 2).unwrap();
        assert!(t.is_exact());
        assert_abs_diff_eq!(t.e_second(), 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.e_max(), 1.75, epsilon = 1e-12);
        // gap >= 1 exactly when draws differ: prob 1/2
        assert_abs_diff_eq!(t.pr_gap_geq(1.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn top_two_continuous_quadrature() {
        let t = TopTwo::new(&Dist1D::uniform(0.0, 1.0).unwrap(), 2).unwrap();
        // Pr{W - V >= t} = (1-t)^2 for two uniforms
        assert_abs_diff_eq!(t.pr_gap_geq(0.25), 0.5625, epsilon = 1e-6);
    }

    #[test]
    fn conditional_of_joint() {
        let m1 = ValuationMatrix::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let m2 = ValuationMatrix::new(vec![vec![2.0], vec![1.0]]).unwrap();
        let m3 = ValuationMatrix::new(vec![vec![2.0], vec![2.0]]).unwrap();
        let fj =
            JointValuation::joint(vec![(m1, 0.25), (m2, 0.25), (m3, 0.5)]).unwrap();
        let cond = fj.conditional(0, &[vec![1.0]]).unwrap();
        assert_eq!(cond.len(), 2);
        assert_abs_diff_eq!(cond.probs()[0], 0.5);
        assert!(fj.conditional(0, &[vec![7.0]]).is_err());
    }

    #[test]
    fn item_and_bidder_independence_detection() {
        let fj = JointValuation::iid(two_point(), 2, 2).unwrap();
        assert!(fj.is_item_independent());
        assert!(fj.is_bidder_independent());

        // perfectly correlated columns
        let lo = ValuationMatrix::new(vec![vec![1.0, 1.0]]).unwrap();
        let hi = ValuationMatrix::new(vec![vec![2.0, 2.0]]).unwrap();
        let fj = JointValuation::joint(vec![(lo, 0.5), (hi, 0.5)]).unwrap();
        assert!(!fj.is_item_independent());
    }

    #[test]
    fn iid_marginals_match_f() {
        let fj = JointValuation::iid(two_point(), 3, 2).unwrap();
        for i in 0..3 {
            let prod = fj.row_product(i).unwrap();
            for c in prod.coords() {
                assert_eq!(c, &two_point());
            }
        }
    }
}
