//! Products of per-item distributions, the lift and shift transforms, and
//! general finite k-dimensional supports used by the exact oracles.

use crate::dist::{DiscreteDist, Dist1D};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Guard on enumerated support sizes for exact oracle paths.
pub const MAX_SUPPORT_TYPES: usize = 10_000;

/// A product of per-item one-dimensional distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDist {
    coords: Vec<Dist1D>,
}

impl ProductDist {
    pub fn new(coords: Vec<Dist1D>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDistribution("empty product".into()));
        }
        Ok(Self { coords })
    }

    /// `k` iid copies of `f`.
    pub fn iid(f: Dist1D, k: usize) -> Result<Self> {
        Self::new(vec![f; k.max(1)])
    }

    pub fn k(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Dist1D] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> &Dist1D {
        &self.coords[j]
    }

    pub fn all_discrete(&self) -> bool {
        self.coords.iter().all(|c| c.to_discrete().is_some())
    }

    fn discrete_coords(&self, op: &str) -> Result<Vec<DiscreteDist>> {
        self.coords
            .iter()
            .map(|c| {
                c.to_discrete()
                    .ok_or_else(|| Error::DiscretizeFirst(op.to_string()))
            })
            .collect()
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.k() {
            return Err(Error::InvalidInstance(format!(
                "beta has length {}, product has {} items",
                beta.len(),
                self.k()
            )));
        }
        if beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidInstance("beta must be nonnegative".into()));
        }
        Ok(())
    }

    /// Per-coordinate probabilities `xi^j = Pr{Y^j > beta^j}`.
    pub fn xi(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        Ok(self
            .coords
            .iter()
            .zip(beta)
            .map(|(c, b)| c.survival(*b))
            .collect())
    }

    fn lift(&self, beta: &[f64], floor_at_beta: bool) -> Result<ProductDist> {
        self.check_beta(beta)?;
        let coords = self.discrete_coords("lift")?;
        let lifted = coords
            .iter()
            .zip(beta)
            .map(|(d, &b)| {
                let xi: f64 = d.atoms().filter(|&(v, _)| v > b).map(|(_, p)| p).sum();
                let floor = if floor_at_beta { b } else { 0.0 };
                let mut atoms: Vec<(f64, f64)> = Vec::new();
                if 1.0 - xi > 0.0 {
                    atoms.push((floor, 1.0 - xi));
                }
                atoms.extend(d.atoms().filter(|&(v, _)| v > b));
                Ok(Dist1D::Discrete(DiscreteDist::new(atoms)?))
            })
            .collect::<Result<Vec<_>>>()?;
        ProductDist::new(lifted)
    }

    /// `L+_beta`: each coordinate keeps its upper conditional `Y^j | Y^j > beta^j`
    /// with probability `xi^j` and otherwise collapses to an atom at `beta^j`.
    pub fn lift_plus(&self, beta: &[f64]) -> Result<ProductDist> {
        self.lift(beta, true)
    }

    /// `L-_beta`: as `lift_plus` but the collapsed atom sits at 0.
    pub fn lift_minus(&self, beta: &[f64]) -> Result<ProductDist> {
        self.lift(beta, false)
    }

    /// Shifts the origin to `beta` coordinatewise; resulting coordinates are
    /// marked shift-derived and may carry negative atoms.
    pub fn shift(&self, beta: &[f64]) -> Result<ProductDist> {
        self.check_beta(beta)?;
        let coords = self.discrete_coords("shift")?;
        let shifted = coords
            .iter()
            .zip(beta)
            .map(|(d, &b)| Dist1D::Discrete(d.shifted(b)))
            .collect();
        ProductDist::new(shifted)
    }

    pub fn sample(&self, rng: &mut Stream) -> Vec<f64> {
        self.coords.iter().map(|c| c.sample(rng)).collect()
    }

    /// Enumerates the full product support into a finite joint.
    pub fn enumerate(&self) -> Result<DiscreteKd> {
        let coords = self.discrete_coords("enumerate support")?;
        let total: usize = coords
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
            .unwrap_or(usize::MAX);
        if total > MAX_SUPPORT_TYPES {
            return Err(Error::SizeGuard {
                what: "product support",
                count: total,
                limit: MAX_SUPPORT_TYPES,
            });
        }
        let mut points = Vec::with_capacity(total);
        let mut probs = Vec::with_capacity(total);
        let mut idx = vec![0usize; coords.len()];
        loop {
            let mut point = Vec::with_capacity(coords.len());
            let mut p = 1.0;
            for (j, d) in coords.iter().enumerate() {
                point.push(d.values()[idx[j]]);
                p *= d.probs()[idx[j]];
            }
            points.push(point);
            probs.push(p);
            // odometer increment
            let mut j = 0;
            loop {
                if j == coords.len() {
                    return DiscreteKd::from_parts(points, probs);
                }
                idx[j] += 1;
                if idx[j] < coords[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }
}

/// A finite k-dimensional value distribution: explicit support points with
/// probabilities. Conditional slices of correlated joints land here, so no
/// product structure is assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKd {
    k: usize,
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl DiscreteKd {
    pub fn from_parts(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidDistribution(
                "joint support and probabilities must be nonempty and aligned".into(),
            ));
        }
        let k = points[0].len();
        if k == 0 || points.iter().any(|p| p.len() != k) {
            return Err(Error::InvalidDistribution(
                "ragged joint support".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "joint probabilities sum to {total}"
            )));
        }
        if probs.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        Ok(Self { k, points, probs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .iter()
            .map(|p| p.as_slice())
            .zip(self.probs.iter().copied())
    }

    /// Pr{Z^j > t} under the joint.
    pub fn marginal_survival(&self, j: usize, t: f64) -> f64 {
        self.iter()
            .filter(|(z, _)| z[j] > t)
            .map(|(_, p)| p)
            .sum()
    }

    /// Pr{Z^j >= t}.
    pub fn marginal_pr_geq(&self, j: usize, t: f64) -> f64 {
        self.iter()
            .filter(|(z, _)| z[j] >= t)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn expected(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter().map(|(z, p)| p * f(z)).sum()
    }

    /// Distinct values of coordinate `j`, ascending.
    pub fn coord_values(&self, j: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.points.iter().map(|p| p[j]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> Dist1D {
        Dist1D::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn lift_examples() {
        let l = ProductDist::new(vec![two_point()]).unwrap();
        let minus = l.lift_minus(&[1.0]).unwrap();
        let d = minus.coord(0).as_discrete().unwrap();
        assert_eq!(d.values(), &[0.0, 2.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);

        let plus = l.lift_plus(&[1.0]).unwrap();
        let d = plus.coord(0).as_discrete().unwrap();
        assert_eq!(d.values(), &[1.0, 2.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn shift_of_lift_plus_is_nonnegative() {
        let l = ProductDist::new(vec![two_point(), two_point()]).unwrap();
        let beta = [1.0, 2.0];
        let shifted = l.lift_plus(&beta).unwrap().shift(&beta).unwrap();
        for c in shifted.coords() {
            let d = c.as_discrete().unwrap();
            assert!(d.is_shift_derived());
            assert!(d.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn lift_preserves_upper_conditional() {
        let l = ProductDist::new(vec![
            Dist1D::discrete(vec![(0.5, 0.2), (1.0, 0.3), (3.0, 0.5)]).unwrap(),
        ])
        .unwrap();
        let beta = [1.0];
        for lifted in [l.lift_plus(&beta).unwrap(), l.lift_minus(&beta).unwrap()] {
            let d = lifted.coord(0).as_discrete().unwrap();
            let upper: Vec<(f64, f64)> = d.atoms().filter(|&(v, _)| v > 1.0).collect();
            assert_eq!(upper, vec![(3.0, 0.5)]);
        }
    }

    #[test]
    fn enumerate_product() {
        let l = ProductDist::new(vec![two_point(), two_point()]).unwrap();
        let kd = l.enumerate().unwrap();
        assert_eq!(kd.len(), 4);
        assert_abs_diff_eq!(kd.probs().iter().sum::<f64>(), 1.0);
        assert_abs_diff_eq!(kd.marginal_survival(0, 1.0), 0.5);
        assert_abs_diff_eq!(kd.marginal_pr_geq(1, 1.0), 1.0);
    }

    #[test]
    fn xi_matches_survival() {
        let l = ProductDist::new(vec![two_point(), two_point()]).unwrap();
        let xi = l.xi(&[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(xi[0], 0.5);
        assert_abs_diff_eq!(xi[1], 0.0);
    }

    #[test]
    fn continuous_lift_requires_discretize() {
        let l = ProductDist::new(vec![Dist1D::uniform(0.0, 1.0).unwrap()]).unwrap();
        assert!(matches!(
            l.lift_plus(&[0.5]),
            Err(Error::DiscretizeFirst(_))
        ));
    }
}
