//! Location inference for Student-t samples with known degrees of freedom.
//!
//! The sample is fit by maximum likelihood; the conditional law of the
//! fitted location around the truth, given the fit residuals, is an
//! unnormalized product density handled by the quadrature engine. The
//! anchor used for the decomposition does not matter: fitting by MLE or
//! pinning the first observation give the same plausibilities, a fact the
//! tests exercise directly.

use crate::engine::{BForm, CondCdf, ScalarIm};
use crate::error::{Error, Result};
use crate::numerics::Dist1D;
use rand::Rng;

/// Maximum likelihood location for a t sample with known df.
///
/// A global scan over the data range picks the basin, then guarded Newton
/// steps on the score polish the root.
pub fn t_location_mle(x: &[f64], nu: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Data("empty sample".into()));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::ParamDomain(format!("df must be positive, got {nu}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("sample contains non-finite values".into()));
    }
    if x.len() == 1 {
        return Ok(x[0]);
    }
    let objective = |m: f64| -> f64 {
        -x.iter().map(|&v| ((v - m) * (v - m) / nu).ln_1p()).sum::<f64>()
    };
    let score = |m: f64| -> f64 {
        x.iter().map(|&v| (v - m) / (nu + (v - m) * (v - m))).sum::<f64>()
    };
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(lo);
    }
    // Global scan; the score is positive below the data and negative above,
    // so the best basin is interior and brackets a root.
    const GRID: usize = 200;
    let step = (hi - lo) / GRID as f64;
    let mut best = (objective(lo), 0usize);
    for i in 1..=GRID {
        let obj = objective(lo + step * i as f64);
        if obj > best.0 {
            best = (obj, i);
        }
    }
    let mut a = lo + step * best.1.saturating_sub(1) as f64;
    let mut b = (lo + step * (best.1 + 1) as f64).min(hi);
    let (mut sa, mut sb) = (score(a), score(b));
    // Widen until the score changes sign across the bracket.
    while sa < 0.0 && a > lo {
        a = (a - step).max(lo);
        sa = score(a);
    }
    while sb > 0.0 && b < hi {
        b = (b + step).min(hi);
        sb = score(b);
    }
    if sa < 0.0 || sb > 0.0 {
        return Err(Error::Estimation("likelihood scan found no interior mode".into()));
    }
    let mut m = 0.5 * (a + b);
    for iter in 0..100 {
        let s = score(m);
        if s > 0.0 {
            a = m;
        } else {
            b = m;
        }
        // Newton step from the current point, bisection when it strays.
        let curv: f64 = x
            .iter()
            .map(|&v| {
                let z = v - m;
                (z * z - nu) / ((nu + z * z) * (nu + z * z))
            })
            .sum();
        let newton = if curv < 0.0 { m - s / ((1.0 + nu) * curv) } else { f64::NAN };
        let next = if newton.is_finite() && newton > a && newton < b && iter % 4 != 3 {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - m).abs() <= 1e-12 * (1.0 + m.abs()) {
            return Ok(next);
        }
        m = next;
    }
    Ok(m)
}

/// Observed information of the t location at `m`.
pub fn observed_information(x: &[f64], nu: f64, m: f64) -> f64 {
    (nu + 1.0)
        * x.iter()
            .map(|&v| {
                let z = v - m;
                (nu - z * z) / ((nu + z * z) * (nu + z * z))
            })
            .sum::<f64>()
}

pub struct StudentTIm {
    im: ScalarIm,
    estimate: f64,
    obs_info: f64,
}

fn conditional_law(residuals: Vec<f64>, nu: f64, hint: f64) -> Result<CondCdf> {
    let logf = move |v: f64| {
        -0.5 * (nu + 1.0)
            * residuals.iter().map(|&h| ((v + h) * (v + h) / nu).ln_1p()).sum::<f64>()
    };
    CondCdf::build(logf, 0.0, hint)
}

impl StudentTIm {
    /// Fit by maximum likelihood and condition on the fit residuals.
    pub fn build(x: &[f64], nu: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Data("need at least two observations".into()));
        }
        let estimate = t_location_mle(x, nu)?;
        let obs_info = observed_information(x, nu, estimate);
        if !(obs_info > 0.0) {
            return Err(Error::Estimation(format!(
                "observed information not positive at the fit: {obs_info}"
            )));
        }
        let residuals: Vec<f64> = x.iter().map(|v| v - estimate).collect();
        let cond = conditional_law(residuals, nu, obs_info.sqrt().recip())?;
        Ok(Self {
            im: ScalarIm::new(estimate, BForm::Location, Box::new(cond))?,
            estimate,
            obs_info,
        })
    }

    /// Same construction anchored at the first observation instead of the
    /// fit. Plausibilities agree with `build` identically; only the
    /// bookkeeping differs.
    pub fn build_anchored(x: &[f64], nu: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Data("need at least two observations".into()));
        }
        let estimate = t_location_mle(x, nu)?;
        let obs_info = observed_information(x, nu, estimate);
        let residuals: Vec<f64> = x.iter().map(|v| v - x[0]).collect();
        let spread = obs_info.abs().sqrt().recip().max(1e-3);
        let cond = conditional_law(residuals, nu, spread)?;
        Ok(Self {
            im: ScalarIm::new(x[0], BForm::Location, Box::new(cond))?,
            estimate,
            obs_info,
        })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn cpl(&self, theta: f64) -> Result<f64> {
        self.im.cpl(theta)
    }

    /// Conditional cdf of the location residual.
    pub fn cond_cdf(&self, v: f64) -> Result<f64> {
        self.im.cond_cdf(v)
    }

    pub fn interval(&self, alpha: f64) -> Result<(f64, f64)> {
        self.im.interval(alpha)
    }

    /// Wald interval from the observed information at the fit.
    pub fn mle_interval(&self, alpha: f64) -> Result<(f64, f64)> {
        let z = Dist1D::normal(0.0, 1.0)?.quantile(1.0 - 0.5 * alpha)?;
        let half = z / self.obs_info.sqrt();
        Ok((self.estimate - half, self.estimate + half))
    }
}

/// Equal-tailed credible interval under a flat location prior.
pub fn bayes_flat_interval(x: &[f64], nu: f64, alpha: f64) -> Result<(f64, f64)> {
    if x.len() < 2 {
        return Err(Error::Data("need at least two observations".into()));
    }
    let center = t_location_mle(x, nu)?;
    let info = observed_information(x, nu, center);
    let hint = if info > 0.0 { info.sqrt().recip() } else { 1.0 };
    let data = x.to_vec();
    let post = CondCdf::build(
        move |th: f64| {
            -0.5 * (nu + 1.0)
                * data.iter().map(|&v| ((v - th) * (v - th) / nu).ln_1p()).sum::<f64>()
        },
        center,
        hint,
    )?;
    Ok((post.quantile(0.5 * alpha)?, post.quantile(1.0 - 0.5 * alpha)?))
}

pub fn simulate<R: Rng + ?Sized>(theta: f64, nu: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let d = Dist1D::student_t(nu).expect("validated df");
    (0..n).map(|_| theta + d.sample(rng)).collect()
}
