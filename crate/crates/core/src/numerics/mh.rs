//! Random-walk Metropolis sampler for one- and two-dimensional
//! log-densities, with automatic proposal scaling.
//!
//! The proposal is an independent Gaussian step per coordinate, a caller
//! supplied base scale per coordinate times one global multiplier. Pilot
//! rounds double or halve the multiplier until the pilot acceptance rate
//! lands in [0.2, 0.5]; then the chain discards a burn-in and records every
//! subsequent state with no thinning.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct MhOptions {
    /// Draws kept after burn-in.
    pub steps: usize,
    pub burn_in: usize,
    /// Length of each tuning round.
    pub pilot_steps: usize,
    /// Tuning rounds allowed before giving up.
    pub max_pilot_rounds: usize,
    /// Starting value of the global proposal multiplier.
    pub init_scale: f64,
}

impl Default for MhOptions {
    fn default() -> Self {
        Self {
            steps: 4000,
            burn_in: 2000,
            pilot_steps: 1000,
            max_pilot_rounds: 30,
            init_scale: 1.0,
        }
    }
}

/// Chain output; `draws` is row-major with `dim` coordinates per state.
#[derive(Clone, Debug)]
pub struct MhRun {
    pub draws: Vec<f64>,
    pub dim: usize,
    /// Acceptance rate over the kept phase.
    pub acceptance: f64,
    /// Tuned global proposal multiplier.
    pub scale: f64,
}

impl MhRun {
    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    pub fn coordinate(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(j < self.dim);
        self.draws.iter().skip(j).step_by(self.dim).copied()
    }
}

struct Walker<'a, F, R> {
    log_density: &'a F,
    scales: &'a [f64],
    x: Vec<f64>,
    logf: f64,
    rng: &'a mut R,
}

impl<F: Fn(&[f64]) -> f64, R: Rng> Walker<'_, F, R> {
    // One proposal; returns whether it was accepted.
    fn step(&mut self, mult: f64) -> bool {
        let mut cand = self.x.clone();
        for (c, s) in cand.iter_mut().zip(self.scales) {
            let z: f64 = self.rng.sample(StandardNormal);
            *c += mult * s * z;
        }
        let logf_cand = (self.log_density)(&cand);
        // u on (0, 1] so the log is always defined.
        let u: f64 = 1.0 - self.rng.random::<f64>();
        if logf_cand - self.logf > u.ln() {
            self.x = cand;
            self.logf = logf_cand;
            true
        } else {
            false
        }
    }
}

/// Sample `opts.steps` states from the density `exp(log_density)`.
///
/// `init` fixes the dimension (1 or 2) and must have finite log-density;
/// `scales` gives one base proposal scale per coordinate.
pub fn mh_sample<F, R>(
    log_density: F,
    init: &[f64],
    scales: &[f64],
    opts: &MhOptions,
    rng: &mut R,
) -> Result<MhRun>
where
    F: Fn(&[f64]) -> f64,
    R: Rng,
{
    let dim = init.len();
    if dim == 0 || dim > 2 {
        return Err(Error::Domain(format!(
            "sampler supports dimension 1 or 2, got {dim}"
        )));
    }
    if scales.len() != dim || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::ParamDomain(
            "proposal scales must match the dimension and be positive".into(),
        ));
    }
    if opts.steps == 0 || opts.pilot_steps == 0 || !(opts.init_scale > 0.0) {
        return Err(Error::ParamDomain("sampler options must be positive".into()));
    }
    let logf0 = log_density(init);
    if !logf0.is_finite() {
        return Err(Error::MhInit);
    }

    let mut walker = Walker {
        log_density: &log_density,
        scales,
        x: init.to_vec(),
        logf: logf0,
        rng,
    };

    // Tune the global multiplier on short pilot rounds.
    let mut mult = opts.init_scale;
    let mut tuned = false;
    for _ in 0..opts.max_pilot_rounds {
        let mut accepted = 0usize;
        for _ in 0..opts.pilot_steps {
            if walker.step(mult) {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / opts.pilot_steps as f64;
        if rate < 0.2 {
            mult *= 0.5;
        } else if rate > 0.5 {
            mult *= 2.0;
        } else {
            tuned = true;
            break;
        }
    }
    if !tuned {
        return Err(Error::NonConvergence(
            "proposal tuning did not reach the target acceptance band".into(),
        ));
    }

    for _ in 0..opts.burn_in {
        walker.step(mult);
    }

    let mut draws = Vec::with_capacity(opts.steps * dim);
    let mut accepted = 0usize;
    for _ in 0..opts.steps {
        if walker.step(mult) {
            accepted += 1;
        }
        draws.extend_from_slice(&walker.x);
    }
    Ok(MhRun {
        draws,
        dim,
        acceptance: accepted as f64 / opts.steps as f64,
        scale: mult,
    })
}
