//! One-dimensional value distributions.
//!
//! The exact oracles only consume discrete distributions; the parametric
//! families exist for sampling, quadrature and for `discretize`. Negative
//! support is allowed only on distributions produced by the shift transform.

use crate::error::{Error, Result};
use crate::rng::Stream;
use rand::Rng;

/// Discrete distribution given by strictly increasing atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    values: Vec<f64>,
    probs: Vec<f64>,
    shift_derived: bool,
}

impl DiscreteDist {
    /// Builds a discrete distribution over nonnegative atoms.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(atoms, false)
    }

    /// Builds a discrete distribution that may carry negative atoms
    /// (used by the shift transform).
    pub fn new_shift_derived(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(atoms, true)
    }

    fn build(mut atoms: Vec<(f64, f64)>, shift_derived: bool) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge duplicate values so callers can pass unsorted raw atom lists.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            if !v.is_finite() || !p.is_finite() {
                return Err(Error::InvalidDistribution("non-finite atom".into()));
            }
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        if merged.iter().any(|a| a.1 <= 0.0 || a.1 > 1.0 + 1e-12) {
            return Err(Error::InvalidDistribution(
                "atom probabilities must lie in (0,1]".into(),
            ));
        }
        if !shift_derived && merged[0].0 < 0.0 {
            return Err(Error::InvalidDistribution(
                "negative atom on a distribution not marked shift-derived".into(),
            ));
        }
        Ok(Self {
            values: merged.iter().map(|a| a.0).collect(),
            probs: merged.iter().map(|a| a.1).collect(),
            shift_derived,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_shift_derived(&self) -> bool {
        self.shift_derived
    }

    /// Pr{X <= x}.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (v, p) in self.atoms() {
            if v <= x {
                acc += p;
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Pr{X < x}.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (v, p) in self.atoms() {
            if v < x {
                acc += p;
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Pr{X >= x}.
    pub fn pr_geq(&self, x: f64) -> f64 {
        (1.0 - self.cdf_left(x)).max(0.0)
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (v, p) in self.atoms() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        *self.values.last().unwrap()
    }

    /// Shifts every atom left by `c`; the result is marked shift-derived.
    pub fn shifted(&self, c: f64) -> DiscreteDist {
        DiscreteDist {
            values: self.values.iter().map(|v| v - c).collect(),
            probs: self.probs.clone(),
            shift_derived: true,
        }
    }
}

/// A one-dimensional value distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Dist1D {
    Discrete(DiscreteDist),
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    /// Equal-revenue tail with x * Pr{X >= x} = scale on [scale, truncation];
    /// a truncation point puts the remaining mass in an atom there.
    EqualRevenue { scale: f64, truncation: Option<f64> },
    PointMass { value: f64 },
    /// Distribution of the maximum of `n` iid draws of `base`.
    IidMax { base: Box<Dist1D>, n: u32 },
}

impl Dist1D {
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Dist1D::Discrete(DiscreteDist::new(atoms)?))
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "point mass at {value}"
            )));
        }
        Ok(Dist1D::PointMass { value })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "uniform[{lo},{hi}]"
            )));
        }
        Ok(Dist1D::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "exponential rate {rate}"
            )));
        }
        Ok(Dist1D::Exponential { rate })
    }

    pub fn equal_revenue(scale: f64, truncation: Option<f64>) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "equal-revenue scale {scale}"
            )));
        }
        if let Some(t) = truncation {
            if !t.is_finite() || t <= scale {
                return Err(Error::InvalidDistribution(format!(
                    "equal-revenue truncation {t} <= scale {scale}"
                )));
            }
        }
        Ok(Dist1D::EqualRevenue { scale, truncation })
    }

    pub fn as_discrete(&self) -> Option<&DiscreteDist> {
        match self {
            Dist1D::Discrete(d) => Some(d),
            _ => None,
        }
    }

    /// Discrete view: native atoms, or a point mass as a single atom.
    pub fn to_discrete(&self) -> Option<DiscreteDist> {
        match self {
            Dist1D::Discrete(d) => Some(d.clone()),
            Dist1D::PointMass { value } => DiscreteDist::new(vec![(*value, 1.0)]).ok(),
            _ => None,
        }
    }

    pub fn is_shift_derived(&self) -> bool {
        matches!(self, Dist1D::Discrete(d) if d.is_shift_derived())
    }

    /// Pr{X <= x}, right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Dist1D::Discrete(d) => d.cdf(x),
            Dist1D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Dist1D::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Dist1D::EqualRevenue { scale, truncation } => {
                if x < *scale {
                    0.0
                } else if truncation.map_or(false, |t| x >= t) {
                    1.0
                } else {
                    1.0 - scale / x
                }
            }
            Dist1D::PointMass { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Dist1D::IidMax { base, n } => base.cdf(x).powi(*n as i32),
        }
    }

    /// Pr{X < x}.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Dist1D::Discrete(d) => d.cdf_left(x),
            Dist1D::EqualRevenue { scale, truncation } => {
                if x <= *scale {
                    0.0
                } else if truncation.map_or(false, |t| x > t) {
                    1.0
                } else {
                    1.0 - scale / x
                }
            }
            Dist1D::PointMass { value } => {
                if x > *value {
                    1.0
                } else {
                    0.0
                }
            }
            Dist1D::IidMax { base, n } => base.cdf_left(x).powi(*n as i32),
            _ => self.cdf(x),
        }
    }

    /// Pr{X > x}.
    pub fn survival(&self, x: f64) -> f64 {
        (1.0 - self.cdf(x)).max(0.0)
    }

    /// Pr{X >= x}.
    pub fn pr_geq(&self, x: f64) -> f64 {
        (1.0 - self.cdf_left(x)).max(0.0)
    }

    /// inf { x : F(x) >= p }.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Dist1D::Discrete(d) => {
                let mut acc = 0.0;
                for (v, q) in d.atoms() {
                    acc += q;
                    if acc >= p - 1e-15 {
                        return v;
                    }
                }
                *d.values().last().unwrap()
            }
            Dist1D::Uniform { lo, hi } => lo + p * (hi - lo),
            Dist1D::Exponential { rate } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-p).ln_1p() / rate
                }
            }
            Dist1D::EqualRevenue { scale, truncation } => {
                let x = if p >= 1.0 {
                    f64::INFINITY
                } else {
                    scale / (1.0 - p)
                };
                match truncation {
                    Some(t) => x.min(*t).max(*scale),
                    None => x.max(*scale),
                }
            }
            Dist1D::PointMass { value } => *value,
            Dist1D::IidMax { base, n } => base.quantile(p.powf(1.0 / *n as f64)),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match self {
            Dist1D::Discrete(d) => d.sample(rng),
            Dist1D::PointMass { value } => *value,
            Dist1D::IidMax { base, n } => {
                let mut best = f64::NEG_INFINITY;
                for _ in 0..*n {
                    best = best.max(base.sample(rng));
                }
                best
            }
            _ => {
                let u: f64 = rng.gen();
                self.quantile(u)
            }
        }
    }

    /// Least upper bound of the support, if finite.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            Dist1D::Discrete(d) => d.values().last().copied(),
            Dist1D::Uniform { hi, .. } => Some(*hi),
            Dist1D::Exponential { .. } => None,
            Dist1D::EqualRevenue { truncation, .. } => *truncation,
            Dist1D::PointMass { value } => Some(*value),
            Dist1D::IidMax { base, .. } => base.upper_bound(),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match self {
            Dist1D::Discrete(d) => d.values()[0],
            Dist1D::Uniform { lo, .. } => *lo,
            Dist1D::Exponential { .. } => 0.0,
            Dist1D::EqualRevenue { scale, .. } => *scale,
            Dist1D::PointMass { value } => *value,
            Dist1D::IidMax { base, .. } => base.lower_bound(),
        }
    }

    /// Points where the CDF is non-smooth inside `[lo, hi]`, used to split
    /// quadrature intervals.
    pub(crate) fn breakpoints_within(&self, lo: f64, hi: f64) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            Dist1D::Discrete(d) => d.values().to_vec(),
            Dist1D::Uniform { lo: a, hi: b } => vec![*a, *b],
            Dist1D::Exponential { .. } => vec![],
            Dist1D::EqualRevenue { scale, truncation } => {
                let mut v = vec![*scale];
                if let Some(t) = truncation {
                    v.push(*t);
                }
                v
            }
            Dist1D::PointMass { value } => vec![*value],
            Dist1D::IidMax { base, .. } => base.breakpoints_within(lo, hi),
        };
        let mut pts: Vec<f64> = raw.into_iter().filter(|x| *x > lo && *x < hi).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Quantile-grid discretization: one atom per probability slab of width
    /// 1/n, placed at the slab-midpoint quantile. Discrete inputs pass
    /// through unchanged.
    pub fn discretize(&self, n_atoms: usize) -> Result<DiscreteDist> {
        if let Some(d) = self.as_discrete() {
            return Ok(d.clone());
        }
        if n_atoms == 0 {
            return Err(Error::InvalidDistribution("discretize to 0 atoms".into()));
        }
        let p = 1.0 / n_atoms as f64;
        let atoms: Vec<(f64, f64)> = (0..n_atoms)
            .map(|i| (self.quantile((i as f64 + 0.5) * p), p))
            .collect();
        DiscreteDist::new(atoms)
    }
}

pub const DEFAULT_DISCRETIZE_ATOMS: usize = 64;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn discrete_validation() {
        assert!(DiscreteDist::new(vec![(1.0, 0.5), (2.0, 0.5)]).is_ok());
        assert!(DiscreteDist::new(vec![(1.0, 0.5), (2.0, 0.6)]).is_err());
        assert!(DiscreteDist::new(vec![(-1.0, 0.5), (2.0, 0.5)]).is_err());
        assert!(DiscreteDist::new_shift_derived(vec![(-1.0, 0.5), (2.0, 0.5)]).is_ok());
        // duplicates merge
        let d = DiscreteDist::new(vec![(1.0, 0.25), (1.0, 0.25), (2.0, 0.5)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d.probs()[0], 0.5);
    }

    #[test]
    fn cdf_conventions() {
        let d = Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(d.cdf(1.0), 0.5);
        assert_eq!(d.cdf_left(1.0), 0.0);
        assert_eq!(d.pr_geq(1.0), 1.0);
        assert_eq!(d.survival(1.0), 0.5);
        assert_eq!(d.cdf(2.0), 1.0);
        assert_eq!(d.pr_geq(2.0), 0.5);

        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.cdf(0.25), 0.25);
        assert_abs_diff_eq!(u.quantile(0.25), 0.25);

        let er = Dist1D::equal_revenue(1.0, Some(10.0)).unwrap();
        assert_abs_diff_eq!(er.cdf(2.0), 0.5);
        assert_abs_diff_eq!(er.cdf(10.0), 1.0);
        assert_abs_diff_eq!(er.pr_geq(10.0), 0.1); // atom at the truncation point
    }

    #[test]
    fn iid_max_cdf_is_power() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        let m = Dist1D::IidMax {
            base: Box::new(u),
            n: 2,
        };
        assert_abs_diff_eq!(m.cdf(0.5), 0.25);
        assert_abs_diff_eq!(m.quantile(0.25), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sampling_matches_cdf() {
        let d = Dist1D::discrete(vec![(1.0, 0.25), (3.0, 0.75)]).unwrap();
        let mut s = rng::root(11);
        let n = 20_000;
        let hits = (0..n).filter(|_| d.sample(&mut s) == 1.0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.25).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn discretize_uniform() {
        let u = Dist1D::uniform(0.0, 1.0).unwrap();
        let d = u.discretize(4).unwrap();
        assert_eq!(d.values(), &[0.125, 0.375, 0.625, 0.875]);
        assert!(d.probs().iter().all(|&p| p == 0.25));
    }
}
