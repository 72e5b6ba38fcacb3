//! Monte Carlo revenue estimation.
//!
//! Samples are drawn in fixed-size batches, one counter-derived substream
//! per batch index, and batch moments are merged in index order, so an
//! estimate depends only on `(seed, n_samples, mechanism)` and never on
//! worker count or scheduling.

use crate::derived::{hat_of, r_of};
use crate::dist::Dist1D;
use crate::error::{Error, Result};
use crate::joint::JointValuation;
use crate::mech::{pick_winners, spb_given_winners, spb_choose_w, TieRule};
use crate::reduction::{MechDescriptor, PreparedMech};
use crate::rng;
use rayon::prelude::*;

const BATCH: usize = 4096;

/// A Monte Carlo mean with its standard error; reproducible from the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2
                + other.m2
                + delta * delta * self.n as f64 * other.n as f64 / n as f64,
        }
    }

    fn estimate(self, seed: u64) -> Estimate {
        let n = self.n.max(2) as f64;
        Estimate {
            mean: self.mean,
            stderr: (self.m2 / (n - 1.0) / n).sqrt(),
            n_samples: self.n,
            seed,
        }
    }
}

/// Estimates the expected revenue of a mechanism on a sampleable model.
/// Tie randomness is drawn from the same stream as the valuations.
pub fn estimate_revenue(
    desc: &MechDescriptor,
    fj: &JointValuation,
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let prep = PreparedMech::prepare(desc, fj)?;
    estimate_prepared(&prep, fj, n_samples, seed)
}

pub fn estimate_prepared(
    prep: &PreparedMech,
    fj: &JointValuation,
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInstance("zero samples".into()));
    }
    let n_batches = n_samples.div_ceil(BATCH);
    let batches: Vec<Result<Moments>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::substream(seed, b as u64);
            let count = BATCH.min(n_samples - b * BATCH);
            let mut m = Moments::default();
            for _ in 0..count {
                let x = fj.sample(&mut stream);
                let out = prep.run(&x, &mut stream)?;
                m.push(out.revenue());
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for b in batches {
        total = total.merge(b?);
    }
    Ok(total.estimate(seed))
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub w: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// index of the revenue-maximizing grid point
    pub argmax: usize,
}

/// Estimates SPB revenue across a surcharge grid with common random
/// numbers: every `w` sees the same sample matrices and the same tie
/// draws, so grid comparisons are low-variance.
pub fn spb_sweep(
    f: &Dist1D,
    n: usize,
    k: usize,
    w_grid: &[f64],
    tie: TieRule,
    n_samples: usize,
    seed: u64,
) -> Result<SweepResult> {
    if w_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let fj = JointValuation::iid(f.clone(), n, k)?;
    let n_batches = n_samples.div_ceil(BATCH);
    let batches: Vec<Vec<Moments>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::substream(seed, b as u64);
            let count = BATCH.min(n_samples - b * BATCH);
            let mut per_w = vec![Moments::default(); w_grid.len()];
            for _ in 0..count {
                let x = fj.sample(&mut stream);
                let winners = pick_winners(&x, tie, &mut stream);
                for (wi, &w) in w_grid.iter().enumerate() {
                    per_w[wi].push(spb_given_winners(&x, w, &winners).revenue());
                }
            }
            per_w
        })
        .collect();
    let mut merged = vec![Moments::default(); w_grid.len()];
    for batch in batches {
        for (wi, m) in batch.into_iter().enumerate() {
            merged[wi] = merged[wi].merge(m);
        }
    }
    let rows: Vec<SweepRow> = w_grid
        .iter()
        .zip(merged)
        .map(|(&w, m)| SweepRow {
            w,
            estimate: m.estimate(seed),
        })
        .collect();
    let argmax = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.estimate.mean.total_cmp(&b.1.estimate.mean))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SweepResult { rows, argmax })
}

/// A 64-point log-spaced surcharge grid around the chosen `w`, always
/// containing 0 and the chosen point itself.
pub fn spb_w_grid(f: &Dist1D, n: u32, k: u32) -> Result<Vec<f64>> {
    let chosen = spb_choose_w(f, n, k)?;
    let anchor = if chosen > 0.0 {
        chosen
    } else {
        // scale from the benchmark quantities when the rule says w = 0
        k as f64 * r_of(&hat_of(f, n)?)?
    };
    let mut grid = vec![0.0, chosen];
    let lo = anchor / 32.0;
    let hi = anchor * 32.0;
    let steps = 62;
    for i in 0..=steps {
        grid.push(lo * (hi / lo).powf(i as f64 / steps as f64));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}
