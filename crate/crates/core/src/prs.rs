//! Predictive random sets in ranking form.
//!
//! A random set here is a nested family of rank sublevel sets: a rank
//! function r(u) scores how deep a point of the auxiliary space sits, and
//! the set swallows everything with rank below a random threshold. All
//! belief computations then reduce to the law of r(V) under the reference
//! distribution of the auxiliary variable V. The plausibility of a singleton
//! u is the upper tail P{r(V) >= r(u)}, which is uniformly distributed when
//! u is drawn from the reference law, the property that makes the inferences
//! calibrated.

use crate::error::{Error, Result};
use crate::numerics::Tabulated;

type RankFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

enum RankLaw {
    /// Closed-form cdf of r(V).
    Cdf(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Monte Carlo reference law from draws of r(V).
    Empirical(Tabulated),
}

pub struct RankingPrs {
    dim: usize,
    rank: RankFn,
    law: RankLaw,
}

impl RankingPrs {
    /// Centered interval set on one uniform coordinate: rank |u - 1/2|,
    /// whose reference cdf is R(t) = 2t.
    pub fn default_1d() -> Self {
        Self {
            dim: 1,
            rank: Box::new(|u: &[f64]| (u[0] - 0.5).abs()),
            law: RankLaw::Cdf(Box::new(|t: f64| (2.0 * t).clamp(0.0, 1.0))),
        }
    }

    /// Centered square on two uniform coordinates: rank max_i |u_i - 1/2|,
    /// reference cdf R(t) = (2t)^2.
    pub fn square_2d() -> Self {
        Self {
            dim: 2,
            rank: Box::new(|u: &[f64]| (u[0] - 0.5).abs().max((u[1] - 0.5).abs())),
            law: RankLaw::Cdf(Box::new(|t: f64| {
                let s = (2.0 * t).clamp(0.0, 1.0);
                s * s
            })),
        }
    }

    /// Elliptical set fitted to reference draws (row-major, `dim` 1 or 2):
    /// rank is the squared Mahalanobis distance from the draw mean, and the
    /// reference law is the empirical law of the draws' own ranks.
    pub fn ellipse_from_draws(draws: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Domain(format!("elliptical set supports dimension 1 or 2, got {dim}")));
        }
        if draws.is_empty() || draws.len() % dim != 0 {
            return Err(Error::Domain("draw buffer does not match the dimension".into()));
        }
        let n = draws.len() / dim;
        if n < 8 {
            return Err(Error::Domain(format!("need at least 8 reference draws, got {n}")));
        }
        let mut mean = vec![0.0; dim];
        for row in draws.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        // Covariance, then its inverse as the quadratic form of the rank.
        let rank: RankFn = if dim == 1 {
            let mut var = 0.0;
            for row in draws.chunks_exact(1) {
                var += (row[0] - mean[0]) * (row[0] - mean[0]);
            }
            var /= (n - 1) as f64;
            if !(var > 1e-300) {
                return Err(Error::DegenerateDesign("reference draws have no spread".into()));
            }
            let c = mean[0];
            Box::new(move |u: &[f64]| (u[0] - c) * (u[0] - c) / var)
        } else {
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for row in draws.chunks_exact(2) {
                let dx = row[0] - mean[0];
                let dy = row[1] - mean[1];
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
            }
            let m = (n - 1) as f64;
            let (sxx, sxy, syy) = (sxx / m, sxy / m, syy / m);
            let det = sxx * syy - sxy * sxy;
            if !(det > 1e-300) {
                return Err(Error::DegenerateDesign(
                    "reference draws are numerically collinear".into(),
                ));
            }
            // Inverse covariance entries.
            let (ixx, ixy, iyy) = (syy / det, -sxy / det, sxx / det);
            let (cx, cy) = (mean[0], mean[1]);
            Box::new(move |u: &[f64]| {
                let dx = u[0] - cx;
                let dy = u[1] - cy;
                ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy
            })
        };
        let rank_draws: Vec<f64> = draws.chunks_exact(dim).map(|row| rank(row)).collect();
        Ok(Self {
            dim,
            rank,
            law: RankLaw::Empirical(Tabulated::from_samples(rank_draws)?),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Domain(format!(
                "rank input has dimension {}, set has {}",
                u.len(),
                self.dim
            )));
        }
        Ok((self.rank)(u))
    }

    /// R(t) = P{r(V) <= t} under the reference law.
    pub fn law_cdf(&self, t: f64) -> f64 {
        match &self.law {
            RankLaw::Cdf(r) => r(t).clamp(0.0, 1.0),
            RankLaw::Empirical(tab) => tab.cdf(t),
        }
    }

    /// P{r(V) >= t}: the probability the random set reaches depth t.
    pub fn rank_tail(&self, t: f64) -> f64 {
        1.0 - self.law_cdf(t)
    }

    /// Plausibility of the singleton u.
    pub fn singleton_plausibility(&self, u: &[f64]) -> Result<f64> {
        Ok(self.rank_tail(self.rank(u)?))
    }

    /// Probability that the random set misses a constraint whose sublevel
    /// sets first become nonempty at threshold t0; `nonempty` must be
    /// monotone (false below t0, true above), and `t_hi` an upper bound on
    /// the search range.
    pub fn conflict_probability<F: Fn(f64) -> bool>(&self, nonempty: F, t_hi: f64) -> Result<f64> {
        if !(t_hi > 0.0 && t_hi.is_finite()) {
            return Err(Error::Domain(format!("conflict search bound must be positive, got {t_hi}")));
        }
        if nonempty(0.0) {
            return Ok(self.law_cdf(0.0));
        }
        if !nonempty(t_hi) {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0, t_hi);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if nonempty(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(self.law_cdf(0.5 * (lo + hi)))
    }

    /// Singleton plausibility after stretching the set just enough to reach
    /// the constraint (threshold t0): the rank is floored at t0.
    pub fn elastic_plausibility(&self, r: f64, t0: f64) -> f64 {
        self.rank_tail(r.max(t0))
    }

    /// Singleton plausibility conditioned on no conflict: the plain tail
    /// renormalized by the mass beyond t0. Never below the elastic value.
    pub fn normalized_plausibility(&self, r: f64, t0: f64) -> f64 {
        let denom = self.rank_tail(t0);
        if denom <= 0.0 {
            return 0.0;
        }
        (self.rank_tail(r.max(t0)) / denom).min(1.0)
    }
}
