//! Correlation of a standard bivariate normal pair.
//!
//! Rotating each pair to its sum and difference splits the sample into two
//! independent chi-square pieces scaled by 1 + theta and 1 - theta. On the
//! log scale that is a two-component scale family, and the log ratio T is a
//! location statistic for zeta(theta) = log((1 + theta)/(1 - theta)). The
//! orthogonal combination H is parameter-free at an anchor theta0, and the
//! law of the ratio residual given H is an explicit one-dimensional density
//! handled by quadrature. Anchoring at the plug-in estimate gives the local
//! fit used for intervals and coverage.

use crate::engine::{BForm, CondCdf, ScalarIm};
use crate::error::{Error, Result};
use crate::numerics::quad;
use rand::Rng;
use rand_distr::StandardNormal;

/// Log odds map zeta(theta) = log((1 + theta)/(1 - theta)).
pub fn zeta(theta: f64) -> Result<f64> {
    if !(theta > -1.0 && theta < 1.0) {
        return Err(Error::ParamDomain(format!(
            "correlation must be inside (-1, 1), got {theta}"
        )));
    }
    Ok(((1.0 + theta) / (1.0 - theta)).ln())
}

/// Inverse of `zeta`.
pub fn theta_from_zeta(z: f64) -> f64 {
    (0.5 * z).tanh()
}

#[derive(Clone, Copy, Debug)]
pub struct BvnData {
    pub n: usize,
    /// Half the summed squares of the pair sums: (1 + theta) chi-square.
    pub x1: f64,
    /// Half the summed squares of the pair differences.
    pub x2: f64,
}

impl BvnData {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Data("no pairs".into()));
        }
        let mut x1 = 0.0;
        let mut x2 = 0.0;
        for &(a, b) in pairs {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Data("pairs must be finite".into()));
            }
            x1 += 0.5 * (a + b) * (a + b);
            x2 += 0.5 * (a - b) * (a - b);
        }
        Self::from_sufficient(pairs.len(), x1, x2)
    }

    pub fn from_sufficient(n: usize, x1: f64, x2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data("sample size must be positive".into()));
        }
        if !(x1 > 0.0 && x1.is_finite() && x2 > 0.0 && x2.is_finite()) {
            return Err(Error::Data(format!(
                "quadratic statistics must be positive and finite: {x1}, {x2}"
            )));
        }
        Ok(Self { n, x1, x2 })
    }

    /// Log ratio statistic T = log(X1/X2).
    pub fn t_stat(&self) -> f64 {
        (self.x1 / self.x2).ln()
    }

    /// Plug-in estimate tanh(T/2).
    pub fn estimate(&self) -> f64 {
        theta_from_zeta(self.t_stat())
    }

    /// Anchor companion (1+t0) log(X1/(1+t0)) + (1-t0) log(X2/(1-t0)),
    /// parameter-free when theta = t0.
    pub fn h_stat(&self, theta0: f64) -> Result<f64> {
        if !(theta0 > -1.0 && theta0 < 1.0) {
            return Err(Error::ParamDomain(format!(
                "anchor must be inside (-1, 1), got {theta0}"
            )));
        }
        Ok((1.0 + theta0) * (self.x1 / (1.0 + theta0)).ln()
            + (1.0 - theta0) * (self.x2 / (1.0 - theta0)).ln())
    }
}

pub struct BvnLocalIm {
    im: ScalarIm,
    theta0: f64,
}

impl BvnLocalIm {
    /// Local fit anchored at theta0.
    pub fn at(data: BvnData, theta0: f64) -> Result<Self> {
        let h0 = data.h_stat(theta0)?;
        let n = data.n as f64;
        // Residual density given the companion: exp of
        //   -(n t0 / 2) v - cosh(v/2) exp((h0 - t0 v)/2).
        let logf = move |v: f64| {
            -0.5 * n * theta0 * v - (0.5 * v).cosh() * (0.5 * (h0 - theta0 * v)).exp()
        };
        let center = data.t_stat() - zeta(theta0)?;
        let hint = (3.0 / n.sqrt()).clamp(1e-3, 1.0);
        let cond = CondCdf::build(logf, center, hint)?;
        let im = ScalarIm::new(data.t_stat(), BForm::Location, Box::new(cond))?;
        Ok(Self { im, theta0 })
    }

    /// Local fit anchored at the plug-in estimate.
    pub fn at_estimate(data: BvnData) -> Result<Self> {
        Self::at(data, data.estimate().clamp(-0.999_999, 0.999_999))
    }

    pub fn anchor(&self) -> f64 {
        self.theta0
    }

    pub fn cpl(&self, theta: f64) -> Result<f64> {
        self.im.cpl(zeta(theta)?)
    }

    /// Conditional cdf of the residual on the log-odds axis.
    pub fn cond_cdf(&self, v: f64) -> Result<f64> {
        self.im.cond_cdf(v)
    }

    pub fn interval(&self, alpha: f64) -> Result<(f64, f64)> {
        let (zl, zh) = self.im.interval(alpha)?;
        Ok((theta_from_zeta(zl), theta_from_zeta(zh)))
    }
}

/// Root-determinant-information prior computed numerically. The
/// correlation is embedded in the three-parameter family that also frees
/// the two scale components of the pair; per-pair scores at unit scales
/// are central differences of the log density, their covariance under the
/// model law is a nested quadrature, and log sqrt(det) of the resulting
/// 3x3 matrix is tabulated on a log-odds grid. The table does not depend
/// on the sample size.
#[derive(Clone)]
pub struct JeffreysPrior {
    zeta_lo: f64,
    step: f64,
    log_det: Vec<f64>,
}

/// One-pair log density of the scale-embedded correlation family, up to a
/// constant that the differencing cancels.
fn pair_log_density(s1: f64, s2: f64, r: f64, y1: f64, y2: f64) -> f64 {
    let omr2 = 1.0 - r * r;
    let (z1, z2) = (y1 / s1, y2 / s2);
    -s1.ln() - s2.ln() - 0.5 * omr2.ln()
        - (z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2) / (2.0 * omr2)
}

/// Differenced scores at unit scales. The scale step is flat; the
/// correlation step shrinks with 1 - r^2 so the O(step^2) truncation
/// tracks the growing curvature near the ends while the ~1e-16/step
/// rounding stays far below the score.
fn pair_scores(r: f64, y1: f64, y2: f64) -> [f64; 3] {
    const DS: f64 = 1e-4;
    let dr = 1e-4 * (1.0 - r * r);
    let ld = pair_log_density;
    [
        (ld(1.0 + DS, 1.0, r, y1, y2) - ld(1.0 - DS, 1.0, r, y1, y2)) / (2.0 * DS),
        (ld(1.0, 1.0 + DS, r, y1, y2) - ld(1.0, 1.0 - DS, r, y1, y2)) / (2.0 * DS),
        (ld(1.0, 1.0, r + dr, y1, y2) - ld(1.0, 1.0, r - dr, y1, y2)) / (2.0 * dr),
    ]
}

/// E[s_j s_k] under the unit-scale law with correlation r, integrating the
/// conditional split y2 = r y1 + sqrt(1 - r^2) v of the pair law. The
/// range is cut at |t| = 14 in both normal axes: the weight there is
/// ~3e-43 against a polynomial payload, below any tolerance in play, and
/// an unbounded range would march the quadrature into the weight's
/// underflow cliff where panels can never meet a relative target.
fn score_moment(r: f64, j: usize, k: usize) -> Result<f64> {
    const RANGE: f64 = 14.0;
    let root = (1.0 - r * r).sqrt();
    let w = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    quad(
        |y1: f64| {
            let inner = quad(
                |v: f64| {
                    let s = pair_scores(r, y1, r * y1 + root * v);
                    w(v) * s[j] * s[k]
                },
                -RANGE,
                RANGE,
                1e-9,
            );
            // A poisoned value makes the outer pass fail loudly instead of
            // silently dropping the panel.
            w(y1) * inner.unwrap_or(f64::NAN)
        },
        -RANGE,
        RANGE,
        1e-8,
    )
}

impl JeffreysPrior {
    // Even count: the grid straddles zeta = 0 instead of landing on it.
    // At exactly zero correlation two of the cross moments vanish
    // identically and the quadrature would be left chasing differencing
    // jitter around zero.
    const NODES: usize = 400;
    const ZETA_SPAN: f64 = 6.0;

    pub fn compute() -> Result<Self> {
        let zeta_lo = -Self::ZETA_SPAN;
        let step = 2.0 * Self::ZETA_SPAN / (Self::NODES - 1) as f64;
        let mut log_det = Vec::with_capacity(Self::NODES);
        for i in 0..Self::NODES {
            let theta = theta_from_zeta(zeta_lo + step * i as f64);
            // Swapping the pair leaves the unit-scale law invariant and
            // exchanges the two scale scores, so four distinct entries
            // fill the matrix.
            let a = score_moment(theta, 0, 0)?;
            let b = score_moment(theta, 0, 1)?;
            let c = score_moment(theta, 0, 2)?;
            let d = score_moment(theta, 2, 2)?;
            let det = a * (a * d - c * c) - b * (b * d - c * c) + c * (b - a) * c;
            if !(det.is_finite() && det > 0.0) {
                return Err(Error::NonConvergence(format!(
                    "information determinant degenerate at theta = {theta}: {det}"
                )));
            }
            log_det.push(det.ln());
        }
        Ok(Self { zeta_lo, step, log_det })
    }

    /// Log information determinant at theta, interpolated on the log-odds
    /// axis (linear continuation beyond the table; the curve is
    /// asymptotically linear there).
    pub fn log_det_info(&self, theta: f64) -> Result<f64> {
        let z = zeta(theta)?;
        let last = self.log_det.len() - 1;
        let pos = (z - self.zeta_lo) / self.step;
        let (i, frac) = if pos <= 0.0 {
            (0, pos)
        } else if pos >= last as f64 {
            (last - 1, pos - (last - 1) as f64)
        } else {
            (pos.floor() as usize, pos - pos.floor())
        };
        Ok(self.log_det[i] + frac * (self.log_det[i + 1] - self.log_det[i]))
    }

    pub fn log_prior(&self, theta: f64) -> Result<f64> {
        Ok(0.5 * self.log_det_info(theta)?)
    }
}

/// Equal-tailed posterior interval under the root-determinant prior.
pub fn bayes_interval(data: BvnData, prior: &JeffreysPrior, alpha: f64) -> Result<(f64, f64)> {
    let n = data.n as f64;
    let (x1, x2) = (data.x1, data.x2);
    let prior = prior.clone();
    let log_post = move |theta: f64| -> f64 {
        let lp = match prior.log_prior(theta) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let (s1, s2) = (1.0 + theta, 1.0 - theta);
        lp + (0.5 * n - 1.0) * ((x1 / s1).ln() + (x2 / s2).ln())
            - 0.5 * (x1 / s1 + x2 / s2)
            - s1.ln()
            - s2.ln()
    };
    let eps = 1e-9;
    let post = CondCdf::build_bounded(log_post, -1.0 + eps, 1.0 - eps)?;
    Ok((post.quantile(0.5 * alpha)?, post.quantile(1.0 - 0.5 * alpha)?))
}

pub fn simulate<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Result<BvnData> {
    if !(theta > -1.0 && theta < 1.0) {
        return Err(Error::ParamDomain(format!(
            "correlation must be inside (-1, 1), got {theta}"
        )));
    }
    let root = (1.0 - theta * theta).sqrt();
    let mut x1 = 0.0;
    let mut x2 = 0.0;
    for _ in 0..n {
        let za: f64 = rng.sample(StandardNormal);
        let zb: f64 = rng.sample(StandardNormal);
        let a = za;
        let b = theta * za + root * zb;
        x1 += 0.5 * (a + b) * (a + b);
        x2 += 0.5 * (a - b) * (a - b);
    }
    BvnData::from_sufficient(n, x1, x2)
}
