//! Normalized cdf and quantile machinery for one-dimensional conditional
//! densities given only as an unnormalized log-density.
//!
//! `build` locates the effective support by doubling steps away from a
//! caller-supplied center, rescans it on a coarse grid to fix the log
//! shift and tighten the bounds, and integrates the shifted density once
//! for the normalizer. `cdf` is then an adaptive partial integral, while
//! `quantile` lazily lays down a cumulative checkpoint grid, validated
//! against the normalizer, so repeated quantile calls cost one panel solve.

use crate::error::{Error, Result};
use crate::numerics::quad::{gk15, quad};
use std::sync::OnceLock;

type LogDensity = Box<dyn Fn(f64) -> f64 + Send + Sync>;

// Log densities this far below the peak are treated as numerically zero.
const LOG_CUTOFF: f64 = 34.5;
const RESCAN_POINTS: usize = 65;

struct Checkpoints {
    xs: Vec<f64>,
    /// cum[i] = integral of the shifted density over [lo, xs[i]].
    cum: Vec<f64>,
}

pub struct CondCdf {
    logf: LogDensity,
    lo: f64,
    hi: f64,
    shift: f64,
    z: f64,
    checkpoints: OnceLock<Result<Checkpoints>>,
}

fn eval_log<F: Fn(f64) -> f64 + ?Sized>(logf: &F, x: f64) -> Result<f64> {
    let y = logf(x);
    if y.is_nan() || y == f64::INFINITY {
        Err(Error::Integrand { abscissa: x })
    } else {
        Ok(y)
    }
}

// Walk outward from the center in doubling steps until the log density has
// fallen LOG_CUTOFF below the running maximum and stopped rising.
fn expand_support<F: Fn(f64) -> f64 + ?Sized>(
    logf: &F,
    center: f64,
    f_center: f64,
    hint: f64,
    dir: f64,
) -> Result<f64> {
    let mut best = f_center;
    let mut prev = f_center;
    let mut step = hint;
    for _ in 0..80 {
        let x = center + dir * step;
        let f = eval_log(logf, x)?;
        if f > best {
            best = f;
        }
        if f < best - LOG_CUTOFF && f <= prev {
            return Ok(x);
        }
        prev = f;
        step *= 2.0;
    }
    Err(Error::NonConvergence(
        "log density did not fall off within the support search range".into(),
    ))
}

impl CondCdf {
    /// Build from an unnormalized log density with unbounded support.
    /// `center` must have positive density; `scale_hint` sets the initial
    /// step of the support search and need only be right to a few orders
    /// of magnitude.
    pub fn build<F>(logf: F, center: f64, scale_hint: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !center.is_finite() {
            return Err(Error::Domain(format!("support center must be finite, got {center}")));
        }
        if !(scale_hint > 0.0 && scale_hint.is_finite()) {
            return Err(Error::Domain(format!("scale hint must be positive, got {scale_hint}")));
        }
        let f_center = eval_log(&logf, center)?;
        if f_center == f64::NEG_INFINITY {
            return Err(Error::Domain("support center has zero density".into()));
        }
        let hi = expand_support(&logf, center, f_center, scale_hint, 1.0)?;
        let lo = expand_support(&logf, center, f_center, scale_hint, -1.0)?;
        Self::finish(Box::new(logf), lo, hi)
    }

    /// Build on a fixed finite interval, for densities with hard bounds.
    pub fn build_bounded<F>(logf: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("invalid density bounds [{lo}, {hi}]")));
        }
        Self::finish(Box::new(logf), lo, hi)
    }

    fn finish(logf: LogDensity, lo0: f64, hi0: f64) -> Result<Self> {
        // Rescan for the peak, then drop the numerically dead flanks.
        let step = (hi0 - lo0) / (RESCAN_POINTS - 1) as f64;
        let mut vals = [0.0; RESCAN_POINTS];
        let mut shift = f64::NEG_INFINITY;
        for (i, v) in vals.iter_mut().enumerate() {
            *v = eval_log(&logf, lo0 + step * i as f64)?;
            if *v > shift {
                shift = *v;
            }
        }
        if shift == f64::NEG_INFINITY {
            return Err(Error::Domain("density is zero on the whole support".into()));
        }
        let cutoff = shift - LOG_CUTOFF - 5.0;
        let first = vals.iter().position(|v| *v > cutoff).expect("peak exists");
        let last = vals.iter().rposition(|v| *v > cutoff).expect("peak exists");
        let lo = lo0 + step * (first.saturating_sub(1)) as f64;
        let hi = lo0 + step * (last + 1).min(RESCAN_POINTS - 1) as f64;

        let z = quad(|x| ((logf)(x) - shift).exp(), lo, hi, 1e-12)?;
        if !(z.is_finite() && z > 1e-300) {
            return Err(Error::NonConvergence(format!("density normalizer degenerate: {z}")));
        }
        Ok(Self { logf, lo, hi, shift, z, checkpoints: OnceLock::new() })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Log of the integral of the unnormalized density.
    pub fn log_normalizer(&self) -> f64 {
        self.shift + self.z.ln()
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        if v <= self.lo {
            return Ok(0.0);
        }
        if v >= self.hi {
            return Ok(1.0);
        }
        let part = quad(|x| ((self.logf)(x) - self.shift).exp(), self.lo, v, 1e-11)?;
        Ok((part / self.z).clamp(0.0, 1.0))
    }

    fn build_checkpoints(&self) -> Result<Checkpoints> {
        for n_panels in [256usize, 512, 1024, 2048] {
            let step = (self.hi - self.lo) / n_panels as f64;
            let mut xs = Vec::with_capacity(n_panels + 1);
            let mut cum = Vec::with_capacity(n_panels + 1);
            xs.push(self.lo);
            cum.push(0.0);
            let mut total = 0.0;
            for i in 0..n_panels {
                let a = self.lo + step * i as f64;
                let b = if i + 1 == n_panels { self.hi } else { self.lo + step * (i + 1) as f64 };
                let (val, _, _) = gk15(&|x| ((self.logf)(x) - self.shift).exp(), a, b)?;
                total += val;
                xs.push(b);
                cum.push(total);
            }
            // The fixed grid must reproduce the adaptive normalizer; if it
            // cannot, the density has structure finer than the grid.
            if (total - self.z).abs() <= 1e-9 * self.z {
                return Ok(Checkpoints { xs, cum });
            }
        }
        Err(Error::NonConvergence(
            "quantile grid disagrees with the density normalizer".into(),
        ))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ParamDomain(format!(
                "quantile probability must be in (0, 1), got {p}"
            )));
        }
        let cp = self
            .checkpoints
            .get_or_init(|| self.build_checkpoints())
            .as_ref()
            .map_err(Clone::clone)?;
        let target = p * self.z;
        let j = cp.cum.partition_point(|c| *c < target).clamp(1, cp.xs.len() - 1);
        let (mut lo, mut hi) = (cp.xs[j - 1], cp.xs[j]);
        let base = cp.cum[j - 1];
        let g = |v: f64| -> Result<f64> {
            let (val, _, _) = gk15(&|x| ((self.logf)(x) - self.shift).exp(), cp.xs[j - 1], v)?;
            Ok(base + val - target)
        };
        let (mut glo, mut ghi) = (g(lo)?, g(hi)?);
        for iter in 0..100 {
            let mut v = if iter % 2 == 0 && ghi > glo {
                lo + (hi - lo) * (-glo) / (ghi - glo)
            } else {
                0.5 * (lo + hi)
            };
            if !(v > lo && v < hi) {
                v = 0.5 * (lo + hi);
            }
            if v <= lo || v >= hi {
                break;
            }
            let gv = g(v)?;
            if gv.abs() <= 1e-12 * self.z {
                return Ok(v);
            }
            if gv < 0.0 {
                lo = v;
                glo = gv;
            } else {
                hi = v;
                ghi = gv;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
