//! Associations between data, parameters, and auxiliary variables.
//!
//! The central construction is for componentwise scale families
//! x_i = g_i(theta) u_i, worked multiplicatively: log x = log g(theta)
//! + log u. A linear functional eta(u) = C log u with C orthogonal to the
//! columns of the Jacobian d log g(theta0) is unchanged (to first order at
//! theta0, exactly when the orthogonality holds for all theta) by moving
//! theta, so eta(u) is observable from the data and can be conditioned on.
//! `eta_at` builds such a C with orthonormal rows by deterministic
//! Gram-Schmidt; `diffeq_residual` measures, by finite differences of
//! log g alone, how far that invariance actually holds at a given theta.

use crate::error::{Error, Result};

type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// A data-generating map x = a(theta, u).
pub struct Association {
    pub theta_dim: usize,
    pub u_dim: usize,
    pub x_dim: usize,
    forward: Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>,
}

impl Association {
    pub fn new<F>(theta_dim: usize, u_dim: usize, x_dim: usize, forward: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { theta_dim, u_dim, x_dim, forward: Box::new(forward) }
    }

    pub fn forward(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.theta_dim || u.len() != self.u_dim {
            return Err(Error::Domain(format!(
                "association expects dims ({}, {}), got ({}, {})",
                self.theta_dim,
                self.u_dim,
                theta.len(),
                u.len()
            )));
        }
        let x = (self.forward)(theta, u);
        if x.len() != self.x_dim {
            return Err(Error::ModelInconsistency(format!(
                "association produced dimension {}, declared {}",
                x.len(),
                self.x_dim
            )));
        }
        Ok(x)
    }
}

/// Componentwise scale family x_i = g_i(theta) u_i, described on the log
/// scale by `log_g` and its m-by-p Jacobian `dlog_g` (rows indexed by
/// component, columns by parameter).
pub struct ScaleFamily {
    pub m: usize,
    pub p: usize,
    log_g: VecFn,
    dlog_g: JacFn,
}

fn fd_step(t: f64) -> f64 {
    (1e-5 * t.abs()).max(1e-5)
}

impl ScaleFamily {
    pub fn new<G, J>(m: usize, p: usize, log_g: G, dlog_g: J) -> Result<Self>
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        if p == 0 || m <= p {
            return Err(Error::Domain(format!(
                "scale family needs more components than parameters, got m={m}, p={p}"
            )));
        }
        Ok(Self { m, p, log_g: Box::new(log_g), dlog_g: Box::new(dlog_g) })
    }

    pub fn log_g(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let v = (self.log_g)(theta);
        if v.len() != self.m || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::ParamDomain(format!(
                "log scale vector is invalid at theta {theta:?}"
            )));
        }
        Ok(v)
    }

    pub fn dlog_g(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let j = (self.dlog_g)(theta);
        if j.len() != self.m || j.iter().any(|r| r.len() != self.p) {
            return Err(Error::ModelInconsistency("Jacobian has the wrong shape".into()));
        }
        Ok(j)
    }

    /// Central finite-difference check of `dlog_g` against `log_g`.
    pub fn verify_gradient(&self, theta: &[f64]) -> Result<()> {
        let jac = self.dlog_g(theta)?;
        for j in 0..self.p {
            let h = fd_step(theta[j]);
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[j] += h;
            dn[j] -= h;
            let (gu, gd) = (self.log_g(&up)?, self.log_g(&dn)?);
            for i in 0..self.m {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                let diff = (fd - jac[i][j]).abs();
                if diff > 1e-6 * (1.0 + jac[i][j].abs()) {
                    return Err(Error::ModelInconsistency(format!(
                        "Jacobian entry ({i}, {j}) is {} but finite differences give {fd}",
                        jac[i][j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Orthonormal rows spanning the orthogonal complement of the Jacobian
    /// columns at `theta0`: the directions of log u observable from log x.
    pub fn eta_at(&self, theta0: &[f64]) -> Result<EtaSpec> {
        if theta0.len() != self.p {
            return Err(Error::Domain(format!(
                "anchor has dimension {}, family has {}",
                theta0.len(),
                self.p
            )));
        }
        let jac = self.dlog_g(theta0)?;
        // Columns of the Jacobian as vectors in component space.
        let mut protected: Vec<Vec<f64>> = Vec::with_capacity(self.p);
        for j in 0..self.p {
            let col: Vec<f64> = (0..self.m).map(|i| jac[i][j]).collect();
            let scale = norm(&col);
            let r = orthogonalize(col, &protected);
            if norm(&r) <= 1e-10 * (1.0 + scale) {
                return Err(Error::DegenerateDesign(format!(
                    "scale Jacobian is rank-deficient at theta {theta0:?}"
                )));
            }
            protected.push(normalize(r));
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(self.m - self.p);
        for i in 0..self.m {
            if rows.len() == self.m - self.p {
                break;
            }
            let mut e = vec![0.0; self.m];
            e[i] = 1.0;
            let mut r = orthogonalize(e, &protected);
            r = orthogonalize(r, &rows);
            if norm(&r) > 1e-8 {
                rows.push(normalize(r));
            }
        }
        if rows.len() != self.m - self.p {
            return Err(Error::DegenerateDesign(
                "could not span the observable complement".into(),
            ));
        }
        Ok(EtaSpec { c: rows, theta0: theta0.to_vec(), log_g0: self.log_g(theta0)? })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    for x in &mut v {
        *x /= n;
    }
    v
}

// Project out an orthonormal set, twice over for numerical orthogonality.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for _ in 0..2 {
        for b in basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (x, c) in v.iter_mut().zip(b) {
                *x -= dot * c;
            }
        }
    }
    v
}

/// The conditioning directions produced by `ScaleFamily::eta_at`.
pub struct EtaSpec {
    /// Orthonormal rows, each orthogonal to the Jacobian columns at theta0.
    pub c: Vec<Vec<f64>>,
    pub theta0: Vec<f64>,
    pub log_g0: Vec<f64>,
}

impl EtaSpec {
    /// eta(u) = C log u, evaluated on an already-logged input.
    pub fn eta(&self, log_u: &[f64]) -> Vec<f64> {
        self.c
            .iter()
            .map(|row| row.iter().zip(log_u).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// The observed value of eta under the anchor: C (log x - log g(theta0)).
    pub fn h_from_data(&self, log_x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = log_x.iter().zip(&self.log_g0).map(|(a, b)| a - b).collect();
        self.eta(&centered)
    }
}

/// How far the conditioned directions drift with theta: the largest entry of
/// d/dtheta [C log g(theta)], estimated by central finite differences of
/// `log_g` alone. Zero (to noise) at the anchor by construction; zero on a
/// whole grid exactly when the conditioning is parameter-free.
pub fn diffeq_residual(family: &ScaleFamily, eta: &EtaSpec, theta: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..family.p {
        let h = fd_step(theta[j]);
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (gu, gd) = (family.log_g(&up)?, family.log_g(&dn)?);
        for row in &eta.c {
            let d: f64 = row
                .iter()
                .enumerate()
                .map(|(i, c)| c * (gu[i] - gd[i]) / (2.0 * h))
                .sum();
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Check that a fitting statistic is location equivariant:
/// stat(x + c) = stat(x) + c for each probe offset.
pub fn check_location_equivariance<F>(stat: F, x: &[f64], offsets: &[f64]) -> Result<()>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let base = stat(x)?;
    for &c in offsets {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let got = stat(&shifted)?;
        let discrepancy = (got - base - c).abs();
        if discrepancy > 1e-8 * (1.0 + c.abs()) {
            return Err(Error::NotEquivariant { offset: c, discrepancy });
        }
    }
    Ok(())
}
