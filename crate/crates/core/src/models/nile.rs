//! Two-sample reciprocal-rate model: one sample has mean theta, the other
//! mean 1/theta.
//!
//! The sum pair (S1, S2) is sufficient. T = sqrt(S1/S2) estimates theta as
//! a scale parameter, and H = sqrt(S1 S2) is parameter-free, so inference
//! conditions the law of V = T/theta on the observed H. On the log axis the
//! conditional density is exp((n1 - n2) w - 2 h cosh w), a shape the
//! quadrature engine handles directly.

use crate::engine::{BForm, CondCdf, LogAxis, ScalarIm};
use crate::error::{Error, Result};
use crate::numerics::special::beta_inc;
use rand::Rng;
use rand_distr::{Distribution, Exp};

#[derive(Clone, Copy, Debug)]
pub struct NileData {
    pub n1: usize,
    pub n2: usize,
    pub s1: f64,
    pub s2: f64,
}

impl NileData {
    pub fn from_samples(x1: &[f64], x2: &[f64]) -> Result<Self> {
        for (name, x) in [("first", x1), ("second", x2)] {
            if x.is_empty() {
                return Err(Error::Data(format!("{name} sample is empty")));
            }
            if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Data(format!(
                    "{name} sample must be positive and finite"
                )));
            }
        }
        Ok(Self {
            n1: x1.len(),
            n2: x2.len(),
            s1: x1.iter().sum(),
            s2: x2.iter().sum(),
        })
    }

    pub fn from_sufficient(n1: usize, n2: usize, s1: f64, s2: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Data("sample sizes must be positive".into()));
        }
        if !(s1 > 0.0 && s1.is_finite() && s2 > 0.0 && s2.is_finite()) {
            return Err(Error::Data(format!("sums must be positive and finite: {s1}, {s2}")));
        }
        Ok(Self { n1, n2, s1, s2 })
    }

    /// Scale statistic sqrt(S1/S2).
    pub fn t_stat(&self) -> f64 {
        (self.s1 / self.s2).sqrt()
    }

    /// Parameter-free companion sqrt(S1 S2).
    pub fn h_stat(&self) -> f64 {
        (self.s1 * self.s2).sqrt()
    }
}

pub struct NileIm {
    im: ScalarIm,
    data: NileData,
    log_normalizer: f64,
}

impl NileIm {
    pub fn build(data: NileData) -> Result<Self> {
        let d = data.n1 as f64 - data.n2 as f64;
        let h = data.h_stat();
        // Mode of the log-axis density and curvature there.
        let w_star = (d / (2.0 * h)).asinh();
        let hint = (2.0 * h * w_star.cosh()).sqrt().recip();
        let cond = CondCdf::build(move |w: f64| d * w - 2.0 * h * w.cosh(), w_star, hint)?;
        let log_normalizer = cond.log_normalizer();
        let im = ScalarIm::new(data.t_stat(), BForm::Scale, Box::new(LogAxis(cond)))?;
        Ok(Self { im, data, log_normalizer })
    }

    pub fn data(&self) -> NileData {
        self.data
    }

    /// Log of the integral of the unnormalized conditional density.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn cpl(&self, theta: f64) -> Result<f64> {
        self.im.cpl(theta)
    }

    pub fn interval(&self, alpha: f64) -> Result<(f64, f64)> {
        self.im.interval(alpha)
    }

    /// Conditional cdf of the ratio V = T/theta.
    pub fn cond_cdf(&self, v: f64) -> Result<f64> {
        self.im.cond_cdf(v)
    }
}

/// Marginal cdf of V = T/theta, ignoring the conditioning: V^2/(1 + V^2)
/// follows a Beta(n1, n2) law.
pub fn naive_cdf(n1: usize, n2: usize, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    beta_inc(n1 as f64, n2 as f64, v * v / (1.0 + v * v))
}

pub fn naive_pl(data: &NileData, theta: f64) -> Result<f64> {
    if theta <= 0.0 {
        return Err(Error::ParamDomain(format!(
            "scale parameter must be positive, got {theta}"
        )));
    }
    let f = naive_cdf(data.n1, data.n2, data.t_stat() / theta);
    Ok(1.0 - (1.0 - 2.0 * f).abs())
}

fn naive_quantile(n1: usize, n2: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ParamDomain(format!("probability must be in (0, 1), got {p}")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while naive_cdf(n1, n2, hi) < p {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket("naive quantile bracket blew up".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if naive_cdf(n1, n2, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn naive_interval(data: &NileData, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParamDomain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let t = data.t_stat();
    let q_lo = naive_quantile(data.n1, data.n2, 0.5 * alpha)?;
    let q_hi = naive_quantile(data.n1, data.n2, 1.0 - 0.5 * alpha)?;
    Ok((t / q_hi, t / q_lo))
}

pub fn simulate<R: Rng + ?Sized>(
    theta: f64,
    n1: usize,
    n2: usize,
    rng: &mut R,
) -> Result<NileData> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::ParamDomain(format!(
            "scale parameter must be positive, got {theta}"
        )));
    }
    // Means theta and 1/theta, so rates 1/theta and theta.
    let e1 = Exp::new(1.0 / theta).map_err(|e| Error::ParamDomain(e.to_string()))?;
    let e2 = Exp::new(theta).map_err(|e| Error::ParamDomain(e.to_string()))?;
    let s1: f64 = (0..n1).map(|_| e1.sample(rng)).sum();
    let s2: f64 = (0..n2).map(|_| e2.sample(rng)).sum();
    NileData::from_sufficient(n1, n2, s1, s2)
}
