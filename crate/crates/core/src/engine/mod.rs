//! Scalar inferential engine.
//!
//! A scalar model reduces to a statistic T, a conditional law F for the
//! auxiliary variable behind T, and a combination form: location (T = theta
//! + V) or scale (T = theta V). With the centered-interval random set on
//! the probability scale, beliefs and plausibilities of one-sided and
//! interval assertions have closed forms in F, evaluated here.

mod cond;

pub use cond::CondCdf;

use crate::error::{Error, Result};
use crate::numerics::Dist1D;
use crate::rt;

/// One-dimensional conditional law: cdf and quantile on the V axis.
pub trait Cond1D: Send + Sync {
    fn cdf(&self, v: f64) -> Result<f64>;
    fn quantile(&self, p: f64) -> Result<f64>;
}

impl Cond1D for CondCdf {
    fn cdf(&self, v: f64) -> Result<f64> {
        CondCdf::cdf(self, v)
    }
    fn quantile(&self, p: f64) -> Result<f64> {
        CondCdf::quantile(self, p)
    }
}

impl Cond1D for Dist1D {
    fn cdf(&self, v: f64) -> Result<f64> {
        Ok(Dist1D::cdf(self, v))
    }
    fn quantile(&self, p: f64) -> Result<f64> {
        Dist1D::quantile(self, p)
    }
}

/// Law of exp(W) when the inner law is that of W. Lets densities built on
/// a log axis serve as the law of the ratio itself.
pub struct LogAxis<C>(pub C);

impl<C: Cond1D> Cond1D for LogAxis<C> {
    fn cdf(&self, v: f64) -> Result<f64> {
        if v <= 0.0 {
            Ok(0.0)
        } else {
            self.0.cdf(v.ln())
        }
    }
    fn quantile(&self, p: f64) -> Result<f64> {
        self.0.quantile(p).map(f64::exp)
    }
}

/// How the statistic combines parameter and auxiliary variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BForm {
    /// T = theta + V.
    Location,
    /// T = theta V, with theta and T positive.
    Scale,
}

/// Assertions about a scalar parameter.
#[derive(Clone, Copy, Debug)]
pub enum Assertion {
    Le(f64),
    Ge(f64),
    Within(f64, f64),
}

pub struct ScalarIm {
    t_obs: f64,
    form: BForm,
    cond: Box<dyn Cond1D>,
}

impl ScalarIm {
    pub fn new(t_obs: f64, form: BForm, cond: Box<dyn Cond1D>) -> Result<Self> {
        if !t_obs.is_finite() {
            return Err(Error::Domain(format!("statistic must be finite, got {t_obs}")));
        }
        if form == BForm::Scale && t_obs <= 0.0 {
            return Err(Error::Domain(format!(
                "scale-form statistic must be positive, got {t_obs}"
            )));
        }
        Ok(Self { t_obs, form, cond })
    }

    pub fn t_obs(&self) -> f64 {
        self.t_obs
    }

    /// Conditional cdf of the auxiliary variable at v.
    pub fn cond_cdf(&self, v: f64) -> Result<f64> {
        self.cond.cdf(v)
    }

    /// The auxiliary value that would pair T with the given theta.
    /// Decreasing in theta under both forms.
    pub fn residual(&self, theta: f64) -> Result<f64> {
        match self.form {
            BForm::Location => Ok(self.t_obs - theta),
            BForm::Scale => {
                if theta <= 0.0 {
                    Err(Error::ParamDomain(format!(
                        "scale parameter must be positive, got {theta}"
                    )))
                } else {
                    Ok(self.t_obs / theta)
                }
            }
        }
    }

    /// Plausibility of the singleton theta.
    pub fn cpl(&self, theta: f64) -> Result<f64> {
        let f = self.cond.cdf(self.residual(theta)?)?;
        Ok(1.0 - (1.0 - 2.0 * f).abs())
    }

    /// Belief in an assertion (the complement's plausibility shortfall).
    pub fn cbel(&self, a: &Assertion) -> Result<f64> {
        match *a {
            Assertion::Le(s) => {
                let f = self.cond.cdf(self.residual(s)?)?;
                Ok((1.0 - 2.0 * f).max(0.0))
            }
            Assertion::Ge(s) => {
                let f = self.cond.cdf(self.residual(s)?)?;
                Ok((2.0 * f - 1.0).max(0.0))
            }
            Assertion::Within(a, b) => {
                self.check_pair(a, b)?;
                let fa = self.cond.cdf(self.residual(a)?)?;
                let fb = self.cond.cdf(self.residual(b)?)?;
                Ok(2.0 * (fa - 0.5).min(0.5 - fb).max(0.0))
            }
        }
    }

    /// Plausibility of an assertion.
    pub fn cpl_assertion(&self, a: &Assertion) -> Result<f64> {
        match *a {
            Assertion::Le(s) => {
                let f = self.cond.cdf(self.residual(s)?)?;
                Ok((2.0 * (1.0 - f)).min(1.0))
            }
            Assertion::Ge(s) => {
                let f = self.cond.cdf(self.residual(s)?)?;
                Ok((2.0 * f).min(1.0))
            }
            Assertion::Within(a, b) => {
                self.check_pair(a, b)?;
                let fa = self.cond.cdf(self.residual(a)?)?;
                let fb = self.cond.cdf(self.residual(b)?)?;
                Ok(1.0 - 2.0 * (fb - 0.5).max(0.5 - fa).max(0.0))
            }
        }
    }

    fn check_pair(&self, a: f64, b: f64) -> Result<()> {
        if a > b {
            return Err(Error::Domain(format!("assertion interval [{a}, {b}] is reversed")));
        }
        Ok(())
    }

    /// Equal-tailed plausibility interval at level alpha: the theta with
    /// cpl(theta) > alpha.
    pub fn interval(&self, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ParamDomain(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let q_lo = self.cond.quantile(0.5 * alpha)?;
        let q_hi = self.cond.quantile(1.0 - 0.5 * alpha)?;
        match self.form {
            BForm::Location => Ok((self.t_obs - q_hi, self.t_obs - q_lo)),
            BForm::Scale => Ok((self.t_obs / q_hi, self.t_obs / q_lo)),
        }
    }
}

/// A one-dimensional grid, linear or logarithmic.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log_scale: bool,
}

impl GridSpec {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n, log_scale: false }
    }

    pub fn logarithmic(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n, log_scale: true }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if self.n < 2 || !(self.lo < self.hi) {
            return Err(Error::Config(format!(
                "grid needs at least 2 points and lo < hi, got n={}, [{}, {}]",
                self.n, self.lo, self.hi
            )));
        }
        if self.log_scale && self.lo <= 0.0 {
            return Err(Error::Config("logarithmic grid needs positive bounds".into()));
        }
        let (a, b) = if self.log_scale { (self.lo.ln(), self.hi.ln()) } else { (self.lo, self.hi) };
        let step = (b - a) / (self.n - 1) as f64;
        // The requested endpoints are returned exactly, not via exp(ln ..).
        Ok((0..self.n)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i == self.n - 1 {
                    self.hi
                } else {
                    let t = a + step * i as f64;
                    if self.log_scale { t.exp() } else { t }
                }
            })
            .collect())
    }
}

/// One evaluated grid point of a plausibility scan.
#[derive(Clone, Debug)]
pub struct RegionPoint {
    pub theta: Vec<f64>,
    pub cpl: f64,
    pub inside: bool,
}

/// Evaluate a plausibility function over a one- or two-axis grid and flag
/// the points above level alpha. Points are evaluated in parallel when the
/// runtime allows it; output order follows the grid (last axis fastest).
pub fn plausibility_region<F>(cpl: F, axes: &[GridSpec], alpha: f64) -> Result<Vec<RegionPoint>>
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync,
{
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Config(format!("grids must have 1 or 2 axes, got {}", axes.len())));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParamDomain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let mut thetas: Vec<Vec<f64>> = Vec::new();
    match axes {
        [a] => {
            for x in a.points()? {
                thetas.push(vec![x]);
            }
        }
        [a, b] => {
            let xs = a.points()?;
            let ys = b.points()?;
            for &x in &xs {
                for &y in &ys {
                    thetas.push(vec![x, y]);
                }
            }
        }
        _ => unreachable!(),
    }
    let evaluated = rt::map_collect(thetas, |theta| {
        let pl = cpl(&theta)?;
        Ok(RegionPoint { inside: pl > alpha, cpl: pl, theta })
    });
    evaluated.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use rand::Rng;

    fn normal_im(t: f64) -> ScalarIm {
        let cond = Dist1D::normal(0.0, 1.0).unwrap();
        ScalarIm::new(t, BForm::Location, Box::new(cond)).unwrap()
    }

    #[test]
    fn closed_forms_match_random_set_simulation() {
        // Simulate the centered random interval on the probability scale
        // and score assertions geometrically.
        let t = 0.4;
        let im = normal_im(t);
        let law = Dist1D::normal(0.0, 1.0).unwrap();
        let mut rng = RngStream::new(41, 0).rng();
        let n = 50_000;
        let (mut bel_le, mut pl_le, mut bel_win, mut pl_win) = (0usize, 0usize, 0usize, 0usize);
        let (s, a, b) = (1.0, -0.2, 0.9);
        for _ in 0..n {
            let u: f64 = rng.random();
            let r = (u - 0.5).abs();
            let lower = t - law.quantile(0.5 + r).unwrap();
            let upper = t - law.quantile(0.5 - r).unwrap();
            if upper <= s {
                bel_le += 1;
            }
            if lower <= s {
                pl_le += 1;
            }
            if a <= lower && upper <= b {
                bel_win += 1;
            }
            if lower <= b && upper >= a {
                pl_win += 1;
            }
        }
        let n = n as f64;
        let checks = [
            (bel_le as f64 / n, im.cbel(&Assertion::Le(s)).unwrap()),
            (pl_le as f64 / n, im.cpl_assertion(&Assertion::Le(s)).unwrap()),
            (bel_win as f64 / n, im.cbel(&Assertion::Within(a, b)).unwrap()),
            (pl_win as f64 / n, im.cpl_assertion(&Assertion::Within(a, b)).unwrap()),
        ];
        for (mc, exact) in checks {
            let se = (exact * (1.0 - exact) / n).sqrt().max(1e-4);
            assert!((mc - exact).abs() < 4.0 * se, "mc {mc} exact {exact}");
        }
    }

    #[test]
    fn duality_and_subadditivity() {
        let im = normal_im(-0.7);
        for i in -8..=8 {
            let s = 0.4 * i as f64;
            let bel_le = im.cbel(&Assertion::Le(s)).unwrap();
            let bel_ge = im.cbel(&Assertion::Ge(s)).unwrap();
            let pl_le = im.cpl_assertion(&Assertion::Le(s)).unwrap();
            let pl_ge = im.cpl_assertion(&Assertion::Ge(s)).unwrap();
            assert!((bel_le + pl_ge - 1.0).abs() < 1e-12);
            assert!((bel_ge + pl_le - 1.0).abs() < 1e-12);
            assert!(bel_le + bel_ge <= 1.0 + 1e-12);
            assert!(pl_le + pl_ge >= 1.0 - 1e-12);
            assert!(bel_le <= pl_le + 1e-12);
        }
    }

    #[test]
    fn singleton_plausibility_matches_degenerate_interval() {
        let im = normal_im(1.3);
        for i in -5..=5 {
            let s = 0.5 * i as f64;
            let a = im.cpl(s).unwrap();
            let b = im.cpl_assertion(&Assertion::Within(s, s)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn intervals_nest_and_hit_the_level() {
        let im = normal_im(0.8);
        let (l5, u5) = im.interval(0.05).unwrap();
        let (l20, u20) = im.interval(0.20).unwrap();
        assert!(l5 < l20 && u20 < u5, "nesting");
        for (lo, hi, alpha) in [(l5, u5, 0.05), (l20, u20, 0.20)] {
            assert!((im.cpl(lo).unwrap() - alpha).abs() < 1e-9);
            assert!((im.cpl(hi).unwrap() - alpha).abs() < 1e-9);
            let mid = 0.5 * (lo + hi);
            assert!(im.cpl(mid).unwrap() > alpha);
        }
    }

    #[test]
    fn scale_form_uses_ratio_residuals() {
        // V = exp(W) with W standard normal: a log-normal scale law.
        let inner = CondCdf::build(|w: f64| -0.5 * w * w, 0.0, 1.0).unwrap();
        let im = ScalarIm::new(2.0, BForm::Scale, Box::new(LogAxis(inner))).unwrap();
        let (lo, hi) = im.interval(0.10).unwrap();
        assert!(0.0 < lo && lo < hi);
        // cpl peaks where the ratio equals the median of V (1 here).
        let peak = im.cpl(2.0).unwrap();
        assert!((peak - 1.0).abs() < 1e-8, "peak {peak}");
        assert!(im.cpl(lo * 0.8).unwrap() < 0.10);
        assert!(im.cpl(hi * 1.2).unwrap() < 0.10);
        assert!(im.cpl(-1.0).is_err());
    }

    #[test]
    fn region_scan_flags_the_plateau() {
        let im = normal_im(0.0);
        let grid = GridSpec::linear(-4.0, 4.0, 81);
        let pts = plausibility_region(|th| im.cpl(th[0]), &[grid], 0.10).unwrap();
        assert_eq!(pts.len(), 81);
        let inside: Vec<f64> =
            pts.iter().filter(|p| p.inside).map(|p| p.theta[0]).collect();
        let (lo, hi) = im.interval(0.10).unwrap();
        for th in &inside {
            assert!(*th > lo - 1e-9 && *th < hi + 1e-9);
        }
        // Grid ordering is preserved.
        for w in pts.windows(2) {
            assert!(w[0].theta[0] < w[1].theta[0]);
        }
    }

    #[test]
    fn two_axis_region_order_and_shape() {
        let f = |th: &[f64]| Ok((-(th[0] * th[0] + th[1] * th[1])).exp());
        let axes = [GridSpec::linear(-1.0, 1.0, 5), GridSpec::logarithmic(0.1, 10.0, 3)];
        let pts = plausibility_region(f, &axes, 0.5).unwrap();
        assert_eq!(pts.len(), 15);
        assert_eq!(pts[0].theta, vec![-1.0, 0.1]);
        assert!((pts[1].theta[1] - 1.0).abs() < 1e-12, "log axis midpoint");
        assert_eq!(pts[14].theta, vec![1.0, 10.0]);
    }

    #[test]
    fn rejects_bad_configuration() {
        let im = normal_im(0.0);
        assert!(im.interval(0.0).is_err());
        assert!(im.interval(1.0).is_err());
        assert!(im.cbel(&Assertion::Within(2.0, 1.0)).is_err());
        assert!(ScalarIm::new(
            -1.0,
            BForm::Scale,
            Box::new(Dist1D::normal(0.0, 1.0).unwrap())
        )
        .is_err());
        assert!(GridSpec::linear(1.0, 0.0, 10).points().is_err());
        assert!(GridSpec::logarithmic(-1.0, 1.0, 10).points().is_err());
        assert!(GridSpec::linear(0.0, 1.0, 1).points().is_err());
    }
}
