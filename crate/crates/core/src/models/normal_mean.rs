//! Two normal observations with a common mean, rotated into a sum component
//! that carries the parameter and a difference component that does not.
//!
//! The model is the textbook case for conditioning: x1, x2 iid N(theta, 1)
//! give y1 = x1 + x2 ~ N(2 theta, 2) and y2 = x1 - x2 ~ N(0, 2),
//! independent. A marginal analysis keeps a two-dimensional random set and
//! pays for it, conflict with the observed y2 has to be patched by
//! stretching or renormalizing, while conditioning on the y2 coordinate
//! collapses everything onto the informative axis.

use crate::engine::{BForm, ScalarIm};
use crate::error::Result;
use crate::numerics::special::std_normal_cdf;
use crate::numerics::Dist1D;
use crate::prs::RankingPrs;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug)]
pub struct NormalMean {
    y1: f64,
    y2: f64,
}

impl NormalMean {
    pub fn from_pair(x1: f64, x2: f64) -> Self {
        Self { y1: x1 + x2, y2: x1 - x2 }
    }

    pub fn from_components(y1: f64, y2: f64) -> Result<Self> {
        if !(y1.is_finite() && y2.is_finite()) {
            return Err(crate::Error::Data(format!("components must be finite, got ({y1}, {y2})")));
        }
        Ok(Self { y1, y2 })
    }

    pub fn simulate<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> Self {
        let d = Dist1D::normal(theta, 1.0).expect("unit scale");
        Self::from_pair(d.sample(rng), d.sample(rng))
    }

    pub fn estimate(&self) -> f64 {
        0.5 * self.y1
    }

    fn scalar_im(&self) -> ScalarIm {
        // y1/2 = theta + V with V ~ N(0, 1/2).
        let cond = Dist1D::normal(0.0, FRAC_1_SQRT_2).expect("fixed scale");
        ScalarIm::new(0.5 * self.y1, BForm::Location, Box::new(cond)).expect("finite statistic")
    }

    /// Singleton plausibility after conditioning on the difference axis.
    pub fn conditional_pl(&self, theta: f64) -> f64 {
        self.scalar_im().cpl(theta).expect("closed-form law")
    }

    pub fn conditional_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        self.scalar_im().interval(alpha)
    }

    // Rank coordinates of the marginal two-dimensional analysis.
    fn ranks(&self, theta: f64) -> (f64, f64) {
        let r_theta = (std_normal_cdf(FRAC_1_SQRT_2 * (self.y1 - 2.0 * theta)) - 0.5).abs();
        let r_fixed = (std_normal_cdf(FRAC_1_SQRT_2 * self.y2) - 0.5).abs();
        (r_theta.max(r_fixed), r_fixed)
    }

    /// Marginal-analysis plausibility with the stretched (elastic) set.
    pub fn baseline_pl_elastic(&self, theta: f64) -> f64 {
        let (rank, t0) = self.ranks(theta);
        RankingPrs::square_2d().elastic_plausibility(rank, t0)
    }

    /// Marginal-analysis plausibility renormalized on the no-conflict event.
    pub fn baseline_pl(&self, theta: f64) -> f64 {
        let (rank, t0) = self.ranks(theta);
        RankingPrs::square_2d().normalized_plausibility(rank, t0)
    }

    /// Probability that the marginal random set misses the observed
    /// difference coordinate entirely.
    pub fn conflict_probability(&self) -> f64 {
        let (_, t0) = self.ranks(self.estimate());
        RankingPrs::square_2d().law_cdf(t0)
    }
}
