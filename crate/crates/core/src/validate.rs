//! Repeated-sampling diagnostics: interval coverage and length, and the
//! distribution of the plausibility of the true parameter.
//!
//! Replications are keyed by their index through the stream splitter, so
//! results are identical no matter how the work is scheduled. A handful of
//! numerically failed replications is tolerated and reported; more than one
//! per thousand aborts the run.

use crate::error::{Error, Result};
use crate::models::bvn::{self, BvnLocalIm, JeffreysPrior};
use crate::models::nile::{self, NileIm};
use crate::models::normal_mean::NormalMean;
use crate::models::student_t::{self, StudentTIm};
use crate::numerics::RngStream;
use crate::rt;
use std::sync::{Arc, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Conditional fit, anchored globally.
    Cim,
    /// Conditional fit, anchored at the plug-in estimate.
    Lcim,
    /// Wald interval from observed information.
    Mle,
    /// Flat-prior posterior.
    BayesFlat,
    /// Root-information-prior posterior.
    BayesJeffreys,
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    NormalMean,
    StudentT { nu: f64, n: usize },
    Nile { n1: usize, n2: usize },
    Gamma2 { n: usize },
    BvnCorr { n: usize },
    VarComp { groups: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub truth: f64,
    /// When set, each replication draws its own truth uniformly from this
    /// list and the scalar `truth` is ignored.
    pub truth_set: Option<Vec<f64>>,
    pub method: Method,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Distinguishes experiments sharing a seed.
    pub stream_index: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct CoverageResult {
    pub coverage: f64,
    pub mean_length: f64,
    /// Binomial standard error of the coverage estimate.
    pub mc_se: f64,
    pub reps: usize,
    pub failures: usize,
}

fn check_spec(spec: &ExperimentSpec) -> Result<()> {
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {}", spec.alpha)));
    }
    if spec.reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let truths: &[f64] = match &spec.truth_set {
        Some(set) if set.is_empty() => {
            return Err(Error::Config("truth set must be nonempty".into()));
        }
        Some(set) => set,
        None => std::slice::from_ref(&spec.truth),
    };
    match spec.model {
        ModelSpec::Nile { n1, n2 } => {
            if n1 == 0 || n2 == 0 {
                return Err(Error::Config("sample sizes must be positive".into()));
            }
            for &t in truths {
                if !(t > 0.0) {
                    return Err(Error::Config(format!(
                        "scale truth must be positive, got {t}"
                    )));
                }
            }
        }
        ModelSpec::BvnCorr { n } => {
            if n < 2 {
                return Err(Error::Config("need at least two pairs".into()));
            }
            for &t in truths {
                if !(t > -1.0 && t < 1.0) {
                    return Err(Error::Config(format!(
                        "correlation truth must be inside (-1, 1), got {t}"
                    )));
                }
            }
        }
        ModelSpec::StudentT { nu, n } => {
            if !(nu > 0.0) || n < 2 {
                return Err(Error::Config(format!(
                    "need positive df and at least two observations, got nu={nu}, n={n}"
                )));
            }
        }
        ModelSpec::Gamma2 { .. } | ModelSpec::VarComp { .. } => {
            return Err(Error::Config(
                "model has two parameters; scan a plausibility region instead".into(),
            ));
        }
        ModelSpec::NormalMean => {}
    }
    Ok(())
}

/// The replication's truth: the scalar, or a uniform pick from the set.
/// Drawn first so the choice is part of the replication's stream.
fn rep_truth<R: rand::Rng>(spec: &ExperimentSpec, rng: &mut R) -> f64 {
    match &spec.truth_set {
        Some(set) => set[rng.random_range(0..set.len())],
        None => spec.truth,
    }
}

fn jeffreys() -> Result<Arc<JeffreysPrior>> {
    static CACHE: OnceLock<Result<Arc<JeffreysPrior>>> = OnceLock::new();
    CACHE.get_or_init(|| JeffreysPrior::compute().map(Arc::new)).clone()
}

fn unsupported(spec: &ExperimentSpec) -> Error {
    Error::Config(format!(
        "method {:?} is not defined for model {:?}",
        spec.method, spec.model
    ))
}

fn rep_interval(
    spec: &ExperimentSpec,
    prior: Option<&JeffreysPrior>,
    rep: u64,
) -> Result<(f64, (f64, f64))> {
    let mut rng = RngStream::new(spec.seed, spec.stream_index).substream(rep).rng();
    let truth = rep_truth(spec, &mut rng);
    let interval = match spec.model {
        ModelSpec::NormalMean => {
            let data = NormalMean::simulate(truth, &mut rng);
            match spec.method {
                Method::Cim => data.conditional_interval(spec.alpha),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::StudentT { nu, n } => {
            let x = student_t::simulate(truth, nu, n, &mut rng);
            match spec.method {
                Method::Cim => StudentTIm::build(&x, nu)?.interval(spec.alpha),
                Method::Mle => StudentTIm::build(&x, nu)?.mle_interval(spec.alpha),
                Method::BayesFlat => student_t::bayes_flat_interval(&x, nu, spec.alpha),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::Nile { n1, n2 } => {
            let data = nile::simulate(truth, n1, n2, &mut rng)?;
            match spec.method {
                Method::Cim => NileIm::build(data)?.interval(spec.alpha),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::BvnCorr { n } => {
            let data = bvn::simulate(truth, n, &mut rng)?;
            match spec.method {
                Method::Lcim => BvnLocalIm::at_estimate(data)?.interval(spec.alpha),
                Method::BayesJeffreys => {
                    let prior = prior.expect("prior prepared for this method");
                    bvn::bayes_interval(data, prior, spec.alpha)
                }
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::Gamma2 { .. } | ModelSpec::VarComp { .. } => Err(unsupported(spec)),
    }?;
    Ok((truth, interval))
}

fn rep_pl_at_truth(spec: &ExperimentSpec, rep: u64) -> Result<f64> {
    let mut rng = RngStream::new(spec.seed, spec.stream_index).substream(rep).rng();
    let truth = rep_truth(spec, &mut rng);
    match spec.model {
        ModelSpec::NormalMean => {
            let data = NormalMean::simulate(truth, &mut rng);
            match spec.method {
                Method::Cim => Ok(data.conditional_pl(truth)),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::StudentT { nu, n } => {
            let x = student_t::simulate(truth, nu, n, &mut rng);
            match spec.method {
                Method::Cim => StudentTIm::build(&x, nu)?.cpl(truth),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::Nile { n1, n2 } => {
            let data = nile::simulate(truth, n1, n2, &mut rng)?;
            match spec.method {
                Method::Cim => NileIm::build(data)?.cpl(truth),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::BvnCorr { n } => {
            let data = bvn::simulate(truth, n, &mut rng)?;
            match spec.method {
                Method::Lcim => BvnLocalIm::at_estimate(data)?.cpl(truth),
                _ => Err(unsupported(spec)),
            }
        }
        ModelSpec::Gamma2 { .. } | ModelSpec::VarComp { .. } => Err(unsupported(spec)),
    }
}

fn prepare_prior(spec: &ExperimentSpec) -> Result<Option<Arc<JeffreysPrior>>> {
    match (&spec.model, spec.method) {
        (ModelSpec::BvnCorr { .. }, Method::BayesJeffreys) => Ok(Some(jeffreys()?)),
        _ => Ok(None),
    }
}

/// Collect per-replication outputs, tolerating at most one failure per
/// thousand replications.
fn collect_reps<T: Send>(results: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut failed = 0usize;
    let mut first = String::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                if failed == 0 {
                    first = e.to_string();
                }
                failed += 1;
            }
        }
    }
    let allowed = (total / 1000).max(1);
    if failed > allowed || ok.is_empty() {
        return Err(Error::RepFailures { failed, total, first });
    }
    Ok((ok, failed))
}

/// Coverage and mean length of the interval at level `alpha` over
/// replications drawn at the true parameter.
pub fn run_coverage(spec: &ExperimentSpec) -> Result<CoverageResult> {
    check_spec(spec)?;
    let prior = prepare_prior(spec)?;
    let reps: Vec<u64> = (0..spec.reps as u64).collect();
    let results = rt::map_collect(reps, |rep| rep_interval(spec, prior.as_deref(), rep));
    let (items, failures) = collect_reps(results)?;
    let m = items.len() as f64;
    let covered = items
        .iter()
        .filter(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
        .count() as f64;
    let coverage = covered / m;
    let mean_length = items.iter().map(|(_, (lo, hi))| hi - lo).sum::<f64>() / m;
    Ok(CoverageResult {
        coverage,
        mean_length,
        mc_se: (coverage * (1.0 - coverage) / m).sqrt(),
        reps: items.len(),
        failures,
    })
}

/// Plausibility of the truth across replications; valid constructions make
/// these uniform (or stochastically larger).
pub fn pl_at_truth(spec: &ExperimentSpec) -> Result<Vec<f64>> {
    check_spec(spec)?;
    let reps: Vec<u64> = (0..spec.reps as u64).collect();
    let results = rt::map_collect(reps, |rep| rep_pl_at_truth(spec, rep));
    let (pls, _) = collect_reps(results)?;
    Ok(pls)
}

/// Two-sided Kolmogorov-Smirnov distance from the uniform law.
pub fn ks_statistic(pls: &[f64]) -> f64 {
    let mut sorted = pls.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, p) in sorted.iter().enumerate() {
        d = d.max(p - i as f64 / n).max((i + 1) as f64 / n - p);
    }
    d
}

/// Asymptotic 1% critical value for the two-sided KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Largest amount by which the empirical cdf exceeds the uniform cdf.
/// Around 1/n or below when the sample is stochastically above the uniform
/// (the final step to 1 alone contributes up to 1/n); compare against a
/// one-sided band such as the DKW radius, which dominates that step.
pub fn ecdf_excess(pls: &[f64]) -> f64 {
    let mut sorted = pls.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 / n - p)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-replication interval table as CSV bytes. The content is a pure
/// function of the spec: replication streams are index-keyed and rows are
/// emitted in index order, so any scheduling produces identical bytes.
pub fn coverage_csv(spec: &ExperimentSpec) -> Result<Vec<u8>> {
    check_spec(spec)?;
    let prior = prepare_prior(spec)?;
    let reps: Vec<u64> = (0..spec.reps as u64).collect();
    let results = rt::map_collect(reps, |rep| {
        rep_interval(spec, prior.as_deref(), rep).map(|iv| (rep, iv))
    });
    let mut out = String::from("rep,lo,hi,length,covered\n");
    for r in results {
        let (rep, (truth, (lo, hi))) = r?;
        let covered = u8::from(lo <= truth && truth <= hi);
        out.push_str(&format!("{rep},{lo},{hi},{},{covered}\n", hi - lo));
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_spec(reps: usize) -> ExperimentSpec {
        ExperimentSpec {
            model: ModelSpec::NormalMean,
            truth: 1.3,
            truth_set: None,
            method: Method::Cim,
            alpha: 0.10,
            reps,
            seed: 90,
            stream_index: 0,
        }
    }

    #[test]
    fn normal_mean_coverage_and_constant_length() {
        let res = run_coverage(&normal_spec(2000)).unwrap();
        assert_eq!(res.failures, 0);
        assert!((res.coverage - 0.90).abs() < 3.0 * res.mc_se.max(0.005), "{res:?}");
        // Every interval has the same closed-form width.
        let z = crate::numerics::Dist1D::normal(0.0, 1.0)
            .unwrap()
            .quantile(0.95)
            .unwrap();
        let want = 2.0 * z * std::f64::consts::FRAC_1_SQRT_2;
        assert!((res.mean_length - want).abs() < 1e-9, "{} vs {want}", res.mean_length);
    }

    #[test]
    fn truth_plausibility_is_uniform_for_exact_models() {
        let pls = pl_at_truth(&normal_spec(2000)).unwrap();
        assert_eq!(pls.len(), 2000);
        let ks = ks_statistic(&pls);
        assert!(ks < ks_critical_1pct(2000), "ks {ks}");
    }

    #[test]
    fn student_t_methods_cover_roughly() {
        for method in [Method::Cim, Method::Mle, Method::BayesFlat] {
            let spec = ExperimentSpec {
                model: ModelSpec::StudentT { nu: 5.0, n: 10 },
                truth: -0.4,
                truth_set: None,
                method,
                alpha: 0.20,
                reps: 250,
                seed: 91,
                stream_index: 3,
            };
            let res = run_coverage(&spec).unwrap();
            assert!(
                (res.coverage - 0.80).abs() < 0.09,
                "{method:?}: coverage {}",
                res.coverage
            );
        }
    }

    #[test]
    fn csv_is_deterministic_and_rectangular() {
        let spec = normal_spec(64);
        let a = coverage_csv(&spec).unwrap();
        let b = coverage_csv(&spec).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 65);
        assert_eq!(lines[0], "rep,lo,hi,length,covered");
        assert!(lines[1].starts_with("0,"));
        let mut other = spec.clone();
        other.stream_index = 1;
        assert_ne!(coverage_csv(&other).unwrap(), b);
    }

    #[test]
    fn ks_helpers_behave() {
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&grid) < 0.001);
        assert!(ecdf_excess(&grid) <= 0.0005 + 1e-12);
        let lump = vec![0.5; 100];
        assert!((ks_statistic(&lump) - 0.5).abs() < 1e-12);
        // A sample stochastically above uniform stays within the final-step
        // allowance of 1/n; one below it pokes far over the line.
        let above: Vec<f64> = grid.iter().map(|p| p.powf(0.8)).collect();
        assert!(ecdf_excess(&above) <= 1.0 / 1000.0 + 1e-12);
        let below: Vec<f64> = grid.iter().map(|p| p.powf(1.25)).collect();
        assert!(ecdf_excess(&below) > 0.05);
    }

    #[test]
    fn truth_sets_mix_per_replication() {
        // The pivot makes coverage invariant to the truth, so a mixture over
        // truths must reproduce the scalar behaviour exactly in distribution.
        let mut spec = normal_spec(400);
        spec.truth_set = Some(vec![-3.0, 0.5, 8.0]);
        let res = run_coverage(&spec).unwrap();
        assert!((res.coverage - 0.90).abs() < 3.0 * res.mc_se.max(0.005), "{res:?}");
        assert_eq!(coverage_csv(&spec).unwrap(), coverage_csv(&spec).unwrap());
        spec.truth_set = Some(vec![]);
        assert!(matches!(run_coverage(&spec), Err(Error::Config(_))));
        // Every member of the set must satisfy the model's domain checks.
        let mut nile = normal_spec(10);
        nile.model = ModelSpec::Nile { n1: 5, n2: 5 };
        nile.truth = 1.0;
        nile.truth_set = Some(vec![1.0, -2.0]);
        assert!(matches!(run_coverage(&nile), Err(Error::Config(_))));
    }

    #[test]
    fn failures_above_the_cap_abort() {
        // One observation per replication cannot be fit: every rep fails.
        let spec = ExperimentSpec {
            model: ModelSpec::StudentT { nu: 5.0, n: 2 },
            truth: 0.0,
            truth_set: None,
            method: Method::Cim,
            alpha: 0.10,
            reps: 5,
            seed: 92,
            stream_index: 0,
        };
        // n = 2 is allowed; force failures instead with an unsupported pair.
        let bad = ExperimentSpec { method: Method::BayesJeffreys, ..spec };
        match run_coverage(&bad) {
            Err(Error::RepFailures { failed, total, .. }) => {
                assert_eq!((failed, total), (5, 5));
            }
            other => panic!("expected replication failures, got {other:?}"),
        }
    }

    #[test]
    fn config_errors_are_refused_up_front() {
        let mut spec = normal_spec(10);
        spec.alpha = 1.5;
        assert!(matches!(run_coverage(&spec), Err(Error::Config(_))));
        let gamma = ExperimentSpec {
            model: ModelSpec::Gamma2 { n: 10 },
            ..normal_spec(10)
        };
        assert!(matches!(run_coverage(&gamma), Err(Error::Config(_))));
        let vc = ExperimentSpec {
            model: ModelSpec::VarComp { groups: vec![3, 3, 4] },
            ..normal_spec(10)
        };
        assert!(matches!(pl_at_truth(&vc), Err(Error::Config(_))));
        let nile = ExperimentSpec {
            model: ModelSpec::Nile { n1: 5, n2: 5 },
            truth: -2.0,
            ..normal_spec(10)
        };
        assert!(matches!(run_coverage(&nile), Err(Error::Config(_))));
    }
}
