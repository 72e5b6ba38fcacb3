//! Exact optimal-revenue oracles on finite discrete type spaces.
//!
//! Every oracle builds a linear program with one incentive constraint per
//! ordered pair of support types, solves it, and re-verifies the returned
//! point by direct substitution before reporting it: solver output is never
//! trusted on its own.

use crate::error::{Error, Result};
use crate::joint::{best_of_others, JointValuation, ValuationMatrix};
use crate::lp::{self, LpProblem, LpStatus};
use crate::product::{DiscreteKd, MAX_SUPPORT_TYPES};

/// Re-verification tolerance for all oracle LPs.
pub const VERIFY_TOL: f64 = 1e-7;

/// Guard on profile counts for the n-bidder oracles.
pub const MAX_PROFILES: usize = 2_000;

/// Guard on LP variable counts; the cut-generating simplex keeps row
/// counts small, so columns dominate memory and pivot cost.
pub const MAX_LP_VARS: usize = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of a revenue LP: the optimum plus the residual of the
/// re-verification pass.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub value: f64,
    pub status: OracleStatus,
    pub tolerance: f64,
    pub max_residual: f64,
}

impl LpResult {
    fn checked(value: f64, max_residual: f64) -> Result<Self> {
        if max_residual > VERIFY_TOL {
            return Err(Error::Lp(format!(
                "solution failed re-verification: residual {max_residual:.3e}"
            )));
        }
        Ok(LpResult {
            value,
            status: OracleStatus::Optimal,
            tolerance: VERIFY_TOL,
            max_residual,
        })
    }
}

/// A 1-bidder mechanism read off an LP solution: per support type, an
/// allocation vector and a payment.
#[derive(Debug, Clone)]
pub struct TypeMechanism {
    pub types: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    pub alloc: Vec<Vec<f64>>,
    pub pay: Vec<f64>,
}

impl TypeMechanism {
    pub fn expected_revenue(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.pay)
            .map(|(p, s)| p * s)
            .sum()
    }

    /// Allocation/payment for a support type, matched exactly.
    pub fn lookup(&self, z: &[f64]) -> Option<(&[f64], f64)> {
        self.types
            .iter()
            .position(|t| t.as_slice() == z)
            .map(|i| (self.alloc[i].as_slice(), self.pay[i]))
    }

    /// Sets `q^j(z) = 0` whenever `z^j <= 0`, the standard conversion to a
    /// 0-exclusive mechanism (payments unchanged, utilities unaffected).
    pub fn zero_exclusive(&self) -> TypeMechanism {
        let mut out = self.clone();
        for (t, q) in out.types.iter().zip(out.alloc.iter_mut()) {
            for j in 0..t.len() {
                if t[j] <= 0.0 {
                    q[j] = 0.0;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct OneBidderResult {
    pub lp: LpResult,
    pub mechanism: TypeMechanism,
}

/// Options for the 1-bidder revenue LP.
#[derive(Debug, Clone, Default)]
pub struct OneBidderOpts {
    /// Force `q^j(z) = 0` whenever `z^j <= beta^j` (beta-exclusive).
    pub exclusion: Option<Vec<f64>>,
    /// Keep the feasible set but maximize the beta-adjusted objective.
    pub adjusted: Option<Vec<f64>>,
    /// Require payments `s(z) >= 0` (no positive transfers).
    pub npt: bool,
    /// Force `q^j(z) = 0` whenever `z^j <= 0`.
    pub zero_exclusive: bool,
}

/// Optimal IR-IC revenue for a 1-bidder k-item discrete distribution.
pub fn rev_1bidder(l: &DiscreteKd) -> Result<OneBidderResult> {
    rev_1bidder_opts(l, &OneBidderOpts::default())
}

/// Optimal beta-exclusive revenue `REV^X(L, beta)`.
pub fn rev_x(l: &DiscreteKd, beta: &[f64]) -> Result<OneBidderResult> {
    rev_1bidder_opts(
        l,
        &OneBidderOpts {
            exclusion: Some(beta.to_vec()),
            ..Default::default()
        },
    )
}

/// Optimal beta-adjusted revenue `REV^A(L, beta)`.
pub fn rev_a(l: &DiscreteKd, beta: &[f64]) -> Result<OneBidderResult> {
    rev_1bidder_opts(
        l,
        &OneBidderOpts {
            adjusted: Some(beta.to_vec()),
            ..Default::default()
        },
    )
}

pub fn rev_1bidder_opts(l: &DiscreteKd, opts: &OneBidderOpts) -> Result<OneBidderResult> {
    let t_count = l.len();
    let k = l.k();
    if t_count > MAX_SUPPORT_TYPES {
        return Err(Error::SizeGuard {
            what: "1-bidder support types",
            count: t_count,
            limit: MAX_SUPPORT_TYPES,
        });
    }
    if let Some(beta) = &opts.exclusion {
        if beta.len() != k {
            return Err(Error::InvalidInstance("beta length mismatch".into()));
        }
    }
    if let Some(beta) = &opts.adjusted {
        if beta.len() != k {
            return Err(Error::InvalidInstance("beta length mismatch".into()));
        }
    }

    // Variables: kept allocation entries q_{t,j} in [0,1], then utilities
    // u_t >= 0 with s_t = q_t . z_t - u_t substituted out.
    let dropped = |t: usize, j: usize| -> bool {
        let z = &l.points()[t];
        if opts.zero_exclusive && z[j] <= 0.0 {
            return true;
        }
        match &opts.exclusion {
            Some(beta) => z[j] <= beta[j],
            None => false,
        }
    };
    let mut q_index = vec![usize::MAX; t_count * k];
    let mut n_q = 0usize;
    for t in 0..t_count {
        for j in 0..k {
            if !dropped(t, j) {
                q_index[t * k + j] = n_q;
                n_q += 1;
            }
        }
    }
    let u_index = |t: usize| n_q + t;
    let n_vars = n_q + t_count;
    if n_vars > MAX_LP_VARS {
        return Err(Error::SizeGuard {
            what: "1-bidder LP variables",
            count: n_vars,
            limit: MAX_LP_VARS,
        });
    }

    let mut p = LpProblem::new(n_vars);
    for (t, (z, prob)) in l.iter().enumerate() {
        for j in 0..k {
            let qi = q_index[t * k + j];
            if qi == usize::MAX {
                continue;
            }
            let obj_coeff = match &opts.adjusted {
                Some(beta) if z[j] <= beta[j] => 0.0,
                _ => prob * z[j],
            };
            p.objective[qi] = obj_coeff;
            p.add_row(vec![(qi, 1.0)], 1.0);
        }
        p.objective[u_index(t)] = -prob;
    }
    // IC rows: u_t >= u_{t'} + q_{t'} . (z_t - z_{t'})
    for t in 0..t_count {
        for t2 in 0..t_count {
            if t == t2 {
                continue;
            }
            let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(k + 2);
            for j in 0..k {
                let qi = q_index[t2 * k + j];
                if qi != usize::MAX {
                    let d = l.points()[t][j] - l.points()[t2][j];
                    if d != 0.0 {
                        coeffs.push((qi, d));
                    }
                }
            }
            coeffs.push((u_index(t2), 1.0));
            coeffs.push((u_index(t), -1.0));
            p.add_lazy_row(coeffs, 0.0);
        }
    }
    if opts.npt {
        // s_t >= 0  <=>  u_t - q_t . z_t <= 0
        for (t, (z, _)) in l.iter().enumerate() {
            let mut coeffs = vec![(u_index(t), 1.0)];
            for j in 0..k {
                let qi = q_index[t * k + j];
                if qi != usize::MAX && z[j] != 0.0 {
                    coeffs.push((qi, -z[j]));
                }
            }
            p.add_row(coeffs, 0.0);
        }
    }

    let sol = lp::solve(&p)?;
    if sol.status == LpStatus::Unbounded {
        return Err(Error::Lp("1-bidder revenue LP unbounded".into()));
    }

    let mut alloc = vec![vec![0.0; k]; t_count];
    let mut pay = vec![0.0; t_count];
    for (t, (z, _)) in l.iter().enumerate() {
        let mut value = 0.0;
        for j in 0..k {
            let qi = q_index[t * k + j];
            if qi != usize::MAX {
                alloc[t][j] = sol.x[qi].clamp(0.0, 1.0);
                value += alloc[t][j] * z[j];
            }
        }
        pay[t] = value - sol.x[u_index(t)];
    }
    let mechanism = TypeMechanism {
        types: l.points().to_vec(),
        probs: l.probs().to_vec(),
        alloc,
        pay,
    };
    let residual = verify_one_bidder(l, &mechanism, opts);
    let lp = LpResult::checked(sol.objective, residual)?;
    Ok(OneBidderResult { lp, mechanism })
}

/// Direct-substitution residual for a 1-bidder mechanism under `opts`.
fn verify_one_bidder(l: &DiscreteKd, m: &TypeMechanism, opts: &OneBidderOpts) -> f64 {
    let k = l.k();
    let mut worst = 0.0f64;
    let utility = |t: usize, at: usize| -> f64 {
        let z = &m.types[t];
        let q = &m.alloc[at];
        (0..k).map(|j| q[j] * z[j]).sum::<f64>() - m.pay[at]
    };
    for t in 0..m.types.len() {
        worst = worst.max(-utility(t, t)); // IR
        for j in 0..k {
            worst = worst.max(m.alloc[t][j] - 1.0).max(-m.alloc[t][j]);
            if let Some(beta) = &opts.exclusion {
                if m.types[t][j] <= beta[j] {
                    worst = worst.max(m.alloc[t][j].abs());
                }
            }
            if opts.zero_exclusive && m.types[t][j] <= 0.0 {
                worst = worst.max(m.alloc[t][j].abs());
            }
        }
        if opts.npt {
            worst = worst.max(-m.pay[t]);
        }
        for t2 in 0..m.types.len() {
            if t != t2 {
                worst = worst.max(utility(t, t2) - utility(t, t)); // IC
            }
        }
    }
    worst
}

/// n-bidder solution keyed by profile index; profiles enumerate the product
/// of the per-bidder type grids in mixed-radix order.
#[derive(Debug, Clone)]
pub struct ProfileMechanism {
    pub grids: Vec<Vec<Vec<f64>>>,
    pub profile_probs: Vec<f64>,
    /// `alloc[s][i][j]`
    pub alloc: Vec<Vec<Vec<f64>>>,
    /// `pay[s][i]`
    pub pay: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct NBidderResult {
    pub lp: LpResult,
    pub mechanism: ProfileMechanism,
}

struct ProfileSpace {
    grids: Vec<Vec<Vec<f64>>>,
    strides: Vec<usize>,
    total: usize,
}

impl ProfileSpace {
    fn build(fj: &JointValuation) -> Result<Self> {
        let n = fj.n();
        let mut grids = Vec::with_capacity(n);
        for i in 0..n {
            let types = fj.bidder_types(i)?;
            grids.push(types.into_iter().map(|(row, _)| row).collect::<Vec<_>>());
        }
        let mut strides = vec![0usize; n];
        let mut total = 1usize;
        for i in (0..n).rev() {
            strides[i] = total;
            total = total
                .checked_mul(grids[i].len())
                .ok_or(Error::SizeGuard {
                    what: "profile grid",
                    count: usize::MAX,
                    limit: MAX_PROFILES,
                })?;
        }
        if total > MAX_PROFILES {
            return Err(Error::SizeGuard {
                what: "profile grid",
                count: total,
                limit: MAX_PROFILES,
            });
        }
        Ok(Self {
            grids,
            strides,
            total,
        })
    }

    fn index_of(&self, types: &[usize]) -> usize {
        types
            .iter()
            .zip(&self.strides)
            .map(|(t, s)| t * s)
            .sum()
    }

    fn type_indices(&self, mut s: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(self.grids.iter())
            .map(|(stride, grid)| {
                let t = s / stride;
                s %= stride;
                debug_assert!(t < grid.len());
                t
            })
            .collect()
    }

    fn matrix(&self, s: usize) -> Vec<Vec<f64>> {
        self.type_indices(s)
            .iter()
            .enumerate()
            .map(|(i, &t)| self.grids[i][t].clone())
            .collect()
    }

    /// Joint probability of each profile. Off-support profiles of a
    /// correlated joint get probability zero but still carry feasibility
    /// and incentive constraints.
    fn profile_probs(&self, fj: &JointValuation) -> Result<Vec<f64>> {
        let mut probs = vec![0.0f64; self.total];
        match fj {
            JointValuation::Joint { outcomes } => {
                for (m, p) in outcomes {
                    let idx: Option<Vec<usize>> = (0..m.n())
                        .map(|i| {
                            self.grids[i]
                                .iter()
                                .position(|row| row.as_slice() == m.row(i))
                        })
                        .collect();
                    match idx {
                        Some(idx) => probs[self.index_of(&idx)] += p,
                        None => return Err(Error::OutOfSupport),
                    }
                }
            }
            _ => {
                let per_bidder: Vec<Vec<f64>> = (0..fj.n())
                    .map(|i| {
                        fj.bidder_types(i)
                            .map(|t| t.into_iter().map(|(_, p)| p).collect())
                    })
                    .collect::<Result<_>>()?;
                for s in 0..self.total {
                    let idx = self.type_indices(s);
                    probs[s] = idx
                        .iter()
                        .zip(&per_bidder)
                        .map(|(&t, ps)| ps[t])
                        .product();
                }
            }
        }
        Ok(probs)
    }
}

/// Optimal DSIR-DSIC revenue over the support grid.
pub fn rev_dsic(fj: &JointValuation) -> Result<NBidderResult> {
    let n = fj.n();
    let k = fj.k();
    let space = ProfileSpace::build(fj)?;
    let probs = space.profile_probs(fj)?;
    let s_count = space.total;

    // Variables: q_{s,i,j} then u_{s,i} (utility substitution).
    let q_idx = |s: usize, i: usize, j: usize| (s * n + i) * k + j;
    let u_idx = |s: usize, i: usize| s_count * n * k + s * n + i;
    let n_vars = s_count * n * k + s_count * n;
    if n_vars > MAX_LP_VARS {
        return Err(Error::SizeGuard {
            what: "DSIC LP variables",
            count: n_vars,
            limit: MAX_LP_VARS,
        });
    }
    let mut p = LpProblem::new(n_vars);

    for s in 0..s_count {
        let mat = space.matrix(s);
        for i in 0..n {
            for j in 0..k {
                p.objective[q_idx(s, i, j)] = probs[s] * mat[i][j];
            }
            p.objective[u_idx(s, i)] = -probs[s];
        }
        for j in 0..k {
            let coeffs: Vec<(usize, f64)> = (0..n).map(|i| (q_idx(s, i, j), 1.0)).collect();
            p.add_row(coeffs, 1.0);
        }
    }

    // DSIC rows for every bidder, opponent assignment and ordered type pair.
    for i in 0..n {
        let own = space.grids[i].len();
        let others_total = s_count / own;
        let mut others_idx = vec![0usize; n];
        for o in 0..others_total {
            // decode `o` into type indices for all bidders except i
            let mut rem = o;
            for i2 in (0..n).rev() {
                if i2 == i {
                    others_idx[i2] = 0;
                    continue;
                }
                let len = space.grids[i2].len();
                others_idx[i2] = rem % len;
                rem /= len;
            }
            for t in 0..own {
                for t2 in 0..own {
                    if t == t2 {
                        continue;
                    }
                    let mut truth_idx = others_idx.clone();
                    truth_idx[i] = t;
                    let mut dev_idx = others_idx.clone();
                    dev_idx[i] = t2;
                    let s_truth = space.index_of(&truth_idx);
                    let s_dev = space.index_of(&dev_idx);
                    // u(truth) >= x_t . q(dev) - pay(dev)
                    //          =  u(dev) + (x_t - x_{t2}) . q(dev)
                    let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(k + 2);
                    for j in 0..k {
                        let d = space.grids[i][t][j] - space.grids[i][t2][j];
                        if d != 0.0 {
                            coeffs.push((q_idx(s_dev, i, j), d));
                        }
                    }
                    coeffs.push((u_idx(s_dev, i), 1.0));
                    coeffs.push((u_idx(s_truth, i), -1.0));
                    p.add_lazy_row(coeffs, 0.0);
                }
            }
        }
    }

    let sol = lp::solve(&p)?;
    if sol.status == LpStatus::Unbounded {
        return Err(Error::Lp("DSIC revenue LP unbounded".into()));
    }

    let mut alloc = vec![vec![vec![0.0; k]; n]; s_count];
    let mut pay = vec![vec![0.0; n]; s_count];
    for s in 0..s_count {
        let mat = space.matrix(s);
        for i in 0..n {
            let mut value = 0.0;
            for j in 0..k {
                alloc[s][i][j] = sol.x[q_idx(s, i, j)].clamp(0.0, 1.0);
                value += alloc[s][i][j] * mat[i][j];
            }
            pay[s][i] = value - sol.x[u_idx(s, i)];
        }
    }
    let mechanism = ProfileMechanism {
        grids: space.grids,
        profile_probs: probs,
        alloc,
        pay,
    };
    let residual = verify_profile_mechanism(&mechanism, k);
    let lp = LpResult::checked(sol.objective, residual)?;
    Ok(NBidderResult { lp, mechanism })
}

fn verify_profile_mechanism(m: &ProfileMechanism, k: usize) -> f64 {
    let n = m.grids.len();
    let strides: Vec<usize> = {
        let mut strides = vec![0usize; n];
        let mut total = 1usize;
        for i in (0..n).rev() {
            strides[i] = total;
            total *= m.grids[i].len();
        }
        strides
    };
    let s_count = m.alloc.len();
    let mut worst = 0.0f64;
    for s in 0..s_count {
        for j in 0..k {
            let col: f64 = (0..n).map(|i| m.alloc[s][i][j]).sum();
            worst = worst.max(col - 1.0);
        }
        // decode type indices
        let mut rem = s;
        let idx: Vec<usize> = strides
            .iter()
            .zip(m.grids.iter())
            .map(|(stride, g)| {
                let t = rem / stride;
                rem %= stride;
                t % g.len()
            })
            .collect();
        for i in 0..n {
            let own = &m.grids[i][idx[i]];
            let value: f64 = (0..k).map(|j| m.alloc[s][i][j] * own[j]).sum();
            let u_truth = value - m.pay[s][i];
            worst = worst.max(-u_truth); // DSIR
            for t2 in 0..m.grids[i].len() {
                if t2 == idx[i] {
                    continue;
                }
                let s_dev = (s as isize
                    + (t2 as isize - idx[i] as isize) * strides[i] as isize)
                    as usize;
                let dev_value: f64 = (0..k).map(|j| m.alloc[s_dev][i][j] * own[j]).sum();
                let u_dev = dev_value - m.pay[s_dev][i];
                worst = worst.max(u_dev - u_truth); // DSIC
            }
        }
    }
    worst
}

/// Optimal BIR-BIC revenue; requires mutually independent bidders.
pub fn rev_bic(fj: &JointValuation) -> Result<NBidderResult> {
    if !fj.is_bidder_independent() {
        return Err(Error::CorrelatedBidders);
    }
    let n = fj.n();
    let k = fj.k();
    let space = ProfileSpace::build(fj)?;
    let s_count = space.total;
    let type_probs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            fj.bidder_types(i)
                .map(|t| t.into_iter().map(|(_, p)| p).collect())
        })
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = (0..s_count)
        .map(|s| {
            space
                .type_indices(s)
                .iter()
                .zip(&type_probs)
                .map(|(&t, ps)| ps[t])
                .product()
        })
        .collect();

    // Variables: q_{s,i,j}, then payments split into s+ and s-.
    let q_idx = |s: usize, i: usize, j: usize| (s * n + i) * k + j;
    let sp_idx = |s: usize, i: usize| s_count * n * k + s * n + i;
    let sm_idx = |s: usize, i: usize| s_count * n * k + s_count * n + s * n + i;
    let n_vars = s_count * n * k + 2 * s_count * n;
    if n_vars > MAX_LP_VARS {
        return Err(Error::SizeGuard {
            what: "BIC LP variables",
            count: n_vars,
            limit: MAX_LP_VARS,
        });
    }
    let mut p = LpProblem::new(n_vars);

    for s in 0..s_count {
        for i in 0..n {
            p.objective[sp_idx(s, i)] = probs[s];
            p.objective[sm_idx(s, i)] = -probs[s];
        }
        for j in 0..k {
            let coeffs: Vec<(usize, f64)> = (0..n).map(|i| (q_idx(s, i, j), 1.0)).collect();
            p.add_row(coeffs, 1.0);
        }
    }

    // Interim constraints per bidder and own type (pair).
    for i in 0..n {
        let own = space.grids[i].len();
        let others_total = s_count / own;
        // enumerate opponent assignments with their probability
        let mut others: Vec<(Vec<usize>, f64)> = Vec::with_capacity(others_total);
        {
            let mut idx = vec![0usize; n];
            loop {
                let mut prob = 1.0;
                for i2 in 0..n {
                    if i2 != i {
                        prob *= type_probs[i2][idx[i2]];
                    }
                }
                others.push((idx.clone(), prob));
                // odometer over bidders != i
                let mut advanced = false;
                for i2 in (0..n).rev() {
                    if i2 == i {
                        continue;
                    }
                    idx[i2] += 1;
                    if idx[i2] < space.grids[i2].len() {
                        advanced = true;
                        break;
                    }
                    idx[i2] = 0;
                }
                if !advanced {
                    break;
                }
            }
        }
        for t in 0..own {
            // BIR: -E[x_t . q(t,o) - s(t,o)] <= 0
            let mut bir: Vec<(usize, f64)> = Vec::new();
            for (o_idx, o_prob) in &others {
                let mut full = o_idx.clone();
                full[i] = t;
                let s_t = space.index_of(&full);
                for j in 0..k {
                    let v = space.grids[i][t][j];
                    if v != 0.0 {
                        bir.push((q_idx(s_t, i, j), -o_prob * v));
                    }
                }
                bir.push((sp_idx(s_t, i), *o_prob));
                bir.push((sm_idx(s_t, i), -*o_prob));
            }
            p.add_row(bir, 0.0);
            for t2 in 0..own {
                if t == t2 {
                    continue;
                }
                // BIC: E[utility(t -> t2)] - E[utility(t -> t)] <= 0
                let mut row: Vec<(usize, f64)> = Vec::new();
                for (o_idx, o_prob) in &others {
                    let mut truth = o_idx.clone();
                    truth[i] = t;
                    let mut dev = o_idx.clone();
                    dev[i] = t2;
                    let s_truth = space.index_of(&truth);
                    let s_dev = space.index_of(&dev);
                    for j in 0..k {
                        let v = space.grids[i][t][j];
                        if v != 0.0 {
                            row.push((q_idx(s_dev, i, j), o_prob * v));
                            row.push((q_idx(s_truth, i, j), -o_prob * v));
                        }
                    }
                    row.push((sp_idx(s_dev, i), -o_prob));
                    row.push((sm_idx(s_dev, i), *o_prob));
                    row.push((sp_idx(s_truth, i), *o_prob));
                    row.push((sm_idx(s_truth, i), -*o_prob));
                }
                p.add_lazy_row(row, 0.0);
            }
        }
    }

    let sol = lp::solve(&p)?;
    if sol.status == LpStatus::Unbounded {
        return Err(Error::Lp("BIC revenue LP unbounded".into()));
    }

    let mut alloc = vec![vec![vec![0.0; k]; n]; s_count];
    let mut pay = vec![vec![0.0; n]; s_count];
    for s in 0..s_count {
        for i in 0..n {
            for j in 0..k {
                alloc[s][i][j] = sol.x[q_idx(s, i, j)].clamp(0.0, 1.0);
            }
            pay[s][i] = sol.x[sp_idx(s, i)] - sol.x[sm_idx(s, i)];
        }
    }
    let mechanism = ProfileMechanism {
        grids: space.grids,
        profile_probs: probs,
        alloc,
        pay,
    };
    let residual = verify_bic(&mechanism, &type_probs, k, sol.objective);
    let lp = LpResult::checked(sol.objective, residual)?;
    Ok(NBidderResult { lp, mechanism })
}

fn verify_bic(m: &ProfileMechanism, type_probs: &[Vec<f64>], k: usize, _value: f64) -> f64 {
    let n = m.grids.len();
    let mut strides = vec![0usize; n];
    let mut total = 1usize;
    for i in (0..n).rev() {
        strides[i] = total;
        total *= m.grids[i].len();
    }
    let mut worst = 0.0f64;
    for s in 0..total {
        for j in 0..k {
            let col: f64 = (0..n).map(|i| m.alloc[s][i][j]).sum();
            worst = worst.max(col - 1.0);
        }
    }
    // interim utilities
    for i in 0..n {
        let own = m.grids[i].len();
        let interim = |t: usize, report: usize| -> f64 {
            let mut acc = 0.0;
            for s in 0..total {
                let mut rem = s;
                let mut o_prob = 1.0;
                let mut own_t = 0usize;
                for (i2, stride) in strides.iter().enumerate() {
                    let ti = rem / stride;
                    rem %= stride;
                    if i2 == i {
                        own_t = ti;
                    } else {
                        o_prob *= type_probs[i2][ti];
                    }
                }
                if own_t != report {
                    continue;
                }
                let value: f64 = (0..k)
                    .map(|j| m.alloc[s][i][j] * m.grids[i][t][j])
                    .sum();
                acc += o_prob * (value - m.pay[s][i]);
            }
            acc
        };
        for t in 0..own {
            let u_truth = interim(t, t);
            worst = worst.max(-u_truth);
            for t2 in 0..own {
                if t != t2 {
                    worst = worst.max(interim(t, t2) - u_truth);
                }
            }
        }
    }
    worst
}

/// Exact optimal deterministic 1-bidder revenue by enumerating bundle-price
/// menus. Candidate prices for a bundle are the achievable bundle values
/// minus a tiny undercut (the buyer breaks ties toward lower prices, so the
/// undercut realizes the sup), plus "not offered".
pub fn drev_1bidder(l: &DiscreteKd) -> Result<f64> {
    const MAX_MENUS: usize = 4_000_000;
    const EPS: f64 = 1e-9;
    let k = l.k();
    if k > 3 {
        return Err(Error::SizeGuard {
            what: "drev items",
            count: k,
            limit: 3,
        });
    }
    for j in 0..k {
        let atoms = l.coord_values(j).len();
        if atoms > 4 {
            return Err(Error::SizeGuard {
                what: "drev atoms per item",
                count: atoms,
                limit: 4,
            });
        }
    }
    let bundles: Vec<usize> = (1..(1usize << k)).collect();
    // achievable bundle values across the coordinate grids
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(bundles.len());
    for &s in &bundles {
        let mut sums = vec![0.0f64];
        for j in 0..k {
            if s & (1 << j) != 0 {
                let vals = l.coord_values(j);
                let mut next = Vec::with_capacity(sums.len() * vals.len());
                for &acc in &sums {
                    for &v in &vals {
                        next.push(acc + v);
                    }
                }
                sums = next;
            }
        }
        sums.sort_by(f64::total_cmp);
        sums.dedup();
        let mut c: Vec<f64> = sums.into_iter().map(|v| (v - EPS).max(0.0)).collect();
        c.push(f64::INFINITY); // bundle not offered
        candidates.push(c);
    }
    let combos: usize = candidates
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .unwrap_or(usize::MAX);
    if combos > MAX_MENUS {
        return Err(Error::SizeGuard {
            what: "drev price menus",
            count: combos,
            limit: MAX_MENUS,
        });
    }

    // bundle values per type
    let t_count = l.len();
    let mut value = vec![vec![0.0f64; bundles.len()]; t_count];
    for (t, (z, _)) in l.iter().enumerate() {
        for (bi, &s) in bundles.iter().enumerate() {
            value[t][bi] = (0..k)
                .filter(|j| s & (1 << j) != 0)
                .map(|j| z[j])
                .sum();
        }
    }

    let mut best = 0.0f64;
    let mut idx = vec![0usize; bundles.len()];
    let mut prices = vec![0.0f64; bundles.len()];
    loop {
        for (bi, c) in candidates.iter().enumerate() {
            prices[bi] = c[idx[bi]];
        }
        let mut revenue = 0.0;
        for (t, (_, prob)) in l.iter().enumerate() {
            // empty bundle: utility 0 at price 0; ties go to the lower price
            let mut best_u = 0.0f64;
            let mut chosen = 0.0f64;
            for bi in 0..bundles.len() {
                if prices[bi].is_infinite() {
                    continue;
                }
                let u = value[t][bi] - prices[bi];
                if u > best_u {
                    best_u = u;
                    chosen = prices[bi];
                } else if u == best_u && prices[bi] < chosen {
                    chosen = prices[bi];
                }
            }
            revenue += prob * chosen;
        }
        best = best.max(revenue);
        // odometer
        let mut bi = 0;
        loop {
            if bi == bundles.len() {
                return Ok(best);
            }
            idx[bi] += 1;
            if idx[bi] < candidates[bi].len() {
                break;
            }
            idx[bi] = 0;
            bi += 1;
        }
    }
}

/// Conditional slice shifted left by `beta` as a raw finite joint (negative
/// coordinates allowed).
pub fn shifted_kd(kd: &DiscreteKd, beta: &[f64]) -> Result<DiscreteKd> {
    let points = kd
        .points()
        .iter()
        .map(|z| z.iter().zip(beta).map(|(v, b)| v - b).collect())
        .collect();
    DiscreteKd::from_parts(points, kd.probs().to_vec())
}

/// The aggregate best-guess quantities of a discrete instance.
#[derive(Debug, Clone, Copy)]
pub struct BgQuantities {
    /// `sum_i E_{x_{-i}} REV^X(X_i | x_{-i}, B(x_{-i}))`
    pub bgr_exact: f64,
    /// `sum_i E_{x_{-i}} REV^A(X_i | x_{-i}, B(x_{-i}))`
    pub bg_a: f64,
    /// `sum_j` optimal single-item revenue (selling separately, optimally)
    pub srev: f64,
}

pub fn bg_quantities(fj: &JointValuation) -> Result<BgQuantities> {
    let k = fj.k();
    let mut bgr_exact = 0.0;
    let mut bg_a = 0.0;
    for i in 0..fj.n() {
        for (others, prob) in fj.others_profiles(i)? {
            if prob == 0.0 {
                continue;
            }
            let beta = best_of_others(
                &others.iter().map(|r| r.as_slice()).collect::<Vec<_>>(),
                k,
            );
            let cond = fj.conditional(i, &others)?;
            bgr_exact += prob * rev_x(&cond, &beta)?.lp.value;
            bg_a += prob * rev_a(&cond, &beta)?.lp.value;
        }
    }
    Ok(BgQuantities {
        bgr_exact,
        bg_a,
        srev: srev(fj)?,
    })
}

/// `FX_beta = sum_i E_{x_{-i}} REV((X_i - beta) | x_{-i})`.
pub fn fx_beta(fj: &JointValuation, beta: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..fj.n() {
        for (others, prob) in fj.others_profiles(i)? {
            if prob == 0.0 {
                continue;
            }
            let cond = fj.conditional(i, &others)?;
            let shifted = shifted_kd(&cond, beta)?;
            total += prob * rev_1bidder(&shifted)?.lp.value;
        }
    }
    Ok(total)
}

/// Revenue of selling each item separately and optimally (DSIC per item).
pub fn srev(fj: &JointValuation) -> Result<f64> {
    let k = fj.k();
    let mut total = 0.0;
    for j in 0..k {
        let col_fj = column_model(fj, j)?;
        total += rev_dsic(&col_fj)?.lp.value;
    }
    Ok(total)
}

fn column_model(fj: &JointValuation, j: usize) -> Result<JointValuation> {
    match fj {
        JointValuation::Grid { cells } => JointValuation::grid(
            cells.iter().map(|row| vec![row[j].clone()]).collect(),
        ),
        JointValuation::Iid { f, n, .. } => JointValuation::iid(f.clone(), *n, 1),
        JointValuation::Joint { outcomes } => {
            let mut cols: Vec<(ValuationMatrix, f64)> = Vec::new();
            for (m, p) in outcomes {
                let col = ValuationMatrix::new(
                    m.column(j).into_iter().map(|v| vec![v]).collect(),
                )?;
                match cols.iter_mut().find(|(c, _)| c == &col) {
                    Some((_, q)) => *q += p,
                    None => cols.push((col, *p)),
                }
            }
            JointValuation::joint(cols)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist1D;
    use crate::product::ProductDist;
    use approx::assert_abs_diff_eq;

    fn two_point() -> Dist1D {
        Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    fn kd(coords: Vec<Dist1D>) -> DiscreteKd {
        ProductDist::new(coords).unwrap().enumerate().unwrap()
    }

    fn point_kd(z: &[f64]) -> DiscreteKd {
        DiscreteKd::from_parts(vec![z.to_vec()], vec![1.0]).unwrap()
    }

    #[test]
    fn rev_single_item_matches_posted_price_oracle() {
        // independent oracle: best posted price over atoms
        let oracle = (1.0f64 * 1.0).max(2.0 * 0.5);
        let r = rev_1bidder(&kd(vec![two_point()])).unwrap();
        assert_abs_diff_eq!(r.lp.value, oracle, epsilon = 1e-8);
    }

    #[test]
    fn rev_point_mass_extracts_full_surplus() {
        let r = rev_1bidder(&point_kd(&[2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(r.lp.value, 5.0, epsilon = 1e-8);
        let r = rev_1bidder(&point_kd(&[1.0, 2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(r.lp.value, 7.0, epsilon = 1e-8);
    }

    #[test]
    fn rev_x_excludes_items() {
        let r = rev_x(&point_kd(&[2.0, 3.0]), &[2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r.lp.value, 3.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_beta_collapses_to_plain_revenue() {
        let l = kd(vec![two_point(), two_point()]);
        let plain = rev_1bidder(&l).unwrap().lp.value;
        let x = rev_x(&l, &[0.0, 0.0]).unwrap().lp.value;
        let a = rev_a(&l, &[0.0, 0.0]).unwrap().lp.value;
        assert_abs_diff_eq!(plain, x, epsilon = 1e-7);
        assert_abs_diff_eq!(plain, a, epsilon = 1e-7);
    }

    #[test]
    fn dsic_two_bidder_single_item() {
        // Myerson posted price 2 sells with prob 3/4
        let fj = JointValuation::iid(two_point(), 2, 1).unwrap();
        let r = rev_dsic(&fj).unwrap();
        assert_abs_diff_eq!(r.lp.value, 1.5, epsilon = 1e-7);
    }

    #[test]
    fn dsic_one_bidder_equals_rev() {
        let fj = JointValuation::iid(two_point(), 1, 2).unwrap();
        let d = rev_dsic(&fj).unwrap().lp.value;
        let l = kd(vec![two_point(), two_point()]);
        let r = rev_1bidder(&l).unwrap().lp.value;
        assert_abs_diff_eq!(d, r, epsilon = 1e-7);
    }

    #[test]
    fn dsic_dominates_second_price() {
        let fj = JointValuation::iid(two_point(), 2, 2).unwrap();
        let r = rev_dsic(&fj).unwrap().lp.value;
        let e2 = crate::joint::second_price_stats(&fj, 0, 0).unwrap().total;
        assert!(r >= e2 - 1e-7, "REV {r} < E[X2nd] {e2}");
    }

    #[test]
    fn bic_basics() {
        let fj = JointValuation::iid(two_point(), 1, 1).unwrap();
        let b = rev_bic(&fj).unwrap().lp.value;
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-7);

        let fj = JointValuation::iid(two_point(), 2, 1).unwrap();
        let d = rev_dsic(&fj).unwrap().lp.value;
        let b = rev_bic(&fj).unwrap().lp.value;
        assert!(b >= d - 1e-7, "BIC {b} < DSIC {d}");
    }

    #[test]
    fn bic_rejects_correlated_bidders() {
        let m1 = ValuationMatrix::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let m2 = ValuationMatrix::new(vec![vec![2.0], vec![2.0]]).unwrap();
        let fj = JointValuation::joint(vec![(m1, 0.5), (m2, 0.5)]).unwrap();
        assert!(matches!(rev_bic(&fj), Err(Error::CorrelatedBidders)));
    }

    #[test]
    fn drev_examples() {
        let d = drev_1bidder(&point_kd(&[2.0, 3.0])).unwrap();
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-6);
        let d = drev_1bidder(&kd(vec![two_point()])).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-6);
        // deterministic menus cannot beat the LP optimum
        let l = kd(vec![two_point(), two_point()]);
        let dr = drev_1bidder(&l).unwrap();
        let r = rev_1bidder(&l).unwrap().lp.value;
        assert!(dr <= r + 1e-7);
    }

    #[test]
    fn bgr_exact_two_bidder_example() {
        let fj = JointValuation::iid(two_point(), 2, 1).unwrap();
        let q = bg_quantities(&fj).unwrap();
        assert_abs_diff_eq!(q.bgr_exact, 1.0, epsilon = 1e-7);
        // SREV of the single column equals the Myerson revenue 1.5
        assert_abs_diff_eq!(q.srev, 1.5, epsilon = 1e-7);
    }

    #[test]
    fn fx_beta_with_shift() {
        let fj = JointValuation::iid(two_point(), 1, 1).unwrap();
        // single bidder, beta = 1: REV of {0 w.p. 1/2, 1 w.p. 1/2} = 1/2
        let v = fx_beta(&fj, &[1.0]).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-7);
    }
}
