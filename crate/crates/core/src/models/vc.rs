//! One-way random effects: grouped responses with a between-group and a
//! within-group variance.
//!
//! Contrasts orthogonal to the grand mean turn the response into
//! independent chi-square blocks X_l = (lambda_l a + e) U_l, one per
//! distinct eigenvalue lambda_l of the projected group design. That is a
//! componentwise scale family in (a, e), so the observable directions of
//! log U at an anchor come from the association layer; the two remaining
//! coordinates are sampled from their conditional density by the chain
//! sampler and scored with the elastic ellipse random set.

use crate::assoc::ScaleFamily;
use crate::engine::{GridSpec, RegionPoint};
use crate::error::{Error, Result};
use crate::numerics::{mh_sample, Dist1D, MhOptions, MhRun, RngStream};
use crate::prs::RankingPrs;
use crate::rt;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Grouped design, reduced to eigenvalue blocks of the contrast space.
pub struct VcDesign {
    group_sizes: Vec<usize>,
    n: usize,
    /// Distinct block eigenvalues, descending; the smallest is usually 0.
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    /// (N-1) x N map from the response to contrast coordinates, rows
    /// grouped by eigenvalue block.
    contrast: DMatrix<f64>,
    /// Row ranges of `contrast` per block.
    segments: Vec<(usize, usize)>,
}

/// Block sums of squares, one per distinct eigenvalue.
#[derive(Clone, Debug)]
pub struct VcSufficient {
    pub x: Vec<f64>,
}

fn helmert(n: usize) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        let m = (j + 1) as f64;
        let s = (m * (m + 1.0)).sqrt();
        for i in 0..=j {
            k[(i, j)] = 1.0 / s;
        }
        k[(j + 1, j)] = -m / s;
    }
    k
}

impl VcDesign {
    pub fn new(group_sizes: &[usize]) -> Result<Self> {
        let n: usize = group_sizes.iter().sum();
        if group_sizes.len() < 2 || group_sizes.iter().any(|&s| s == 0) || n < 3 {
            return Err(Error::DegenerateDesign(format!(
                "need at least two nonempty groups and three observations, got {group_sizes:?}"
            )));
        }
        Self::with_basis(group_sizes, helmert(n))
    }

    /// Same reduction through a caller-supplied contrast basis: columns
    /// must be orthonormal and orthogonal to the constant vector. The
    /// block statistics do not depend on the choice; tests exercise that.
    pub(crate) fn with_basis(group_sizes: &[usize], k: DMatrix<f64>) -> Result<Self> {
        let n: usize = group_sizes.iter().sum();
        if k.nrows() != n || k.ncols() != n - 1 {
            return Err(Error::DegenerateDesign(format!(
                "contrast basis must be {n} x {}, got {} x {}",
                n - 1,
                k.nrows(),
                k.ncols()
            )));
        }
        let gram = k.transpose() * &k;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > 1e-10 {
                    return Err(Error::DegenerateDesign(
                        "contrast basis is not orthonormal".into(),
                    ));
                }
            }
        }
        for j in 0..n - 1 {
            if k.column(j).sum().abs() > 1e-10 {
                return Err(Error::DegenerateDesign(
                    "contrast basis is not centered".into(),
                ));
            }
        }
        // K' Z for the group indicator Z, then the block matrix K'ZZ'K.
        let g = group_sizes.len();
        let mut ktz = DMatrix::zeros(n - 1, g);
        let mut row0 = 0;
        for (gi, &sz) in group_sizes.iter().enumerate() {
            for r in 0..n - 1 {
                let mut s = 0.0;
                for i in row0..row0 + sz {
                    s += k[(i, r)];
                }
                ktz[(r, gi)] = s;
            }
            row0 += sz;
        }
        let m = &ktz * ktz.transpose();
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n - 1).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let lam_max = eig.eigenvalues[order[0]].max(1.0);
        // Cluster the sorted eigenvalues; tiny ones are the zero block.
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        let mut raw_sums: Vec<f64> = Vec::new();
        for &idx in &order {
            let lam = eig.eigenvalues[idx].max(0.0);
            let lam = if lam <= 1e-10 * lam_max { 0.0 } else { lam };
            match raw_sums.last_mut() {
                Some(sum)
                    if (lam - *sum / *multiplicities.last().unwrap() as f64).abs()
                        <= 1e-8 * lam_max =>
                {
                    *sum += lam;
                    *multiplicities.last_mut().unwrap() += 1;
                }
                _ => {
                    raw_sums.push(lam);
                    multiplicities.push(1);
                }
            }
        }
        for (sum, &mult) in raw_sums.iter().zip(&multiplicities) {
            eigenvalues.push(sum / mult as f64);
        }
        if eigenvalues.len() < 2 {
            return Err(Error::DegenerateDesign(
                "design has a single eigenvalue block; the two variances are confounded"
                    .into(),
            ));
        }
        let mut contrast = DMatrix::zeros(n - 1, n);
        for (r, &idx) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(idx);
            for i in 0..n {
                let mut s = 0.0;
                for q in 0..n - 1 {
                    s += col[q] * k[(i, q)];
                }
                contrast[(r, i)] = s;
            }
        }
        let mut segments = Vec::with_capacity(multiplicities.len());
        let mut start = 0;
        for &mult in &multiplicities {
            segments.push((start, mult));
            start += mult;
        }
        Ok(Self {
            group_sizes: group_sizes.to_vec(),
            n,
            eigenvalues,
            multiplicities,
            contrast,
            segments,
        })
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Number of distinct eigenvalue blocks.
    pub fn blocks(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reduce a response vector to its block sums of squares.
    pub fn sufficient(&self, y: &[f64]) -> Result<VcSufficient> {
        if y.len() != self.n {
            return Err(Error::Data(format!(
                "response has length {}, design expects {}",
                y.len(),
                self.n
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("response must be finite".into()));
        }
        let yv = DMatrix::from_column_slice(self.n, 1, y);
        let c = &self.contrast * yv;
        let x: Vec<f64> = self
            .segments
            .iter()
            .map(|&(start, len)| (start..start + len).map(|r| c[(r, 0)] * c[(r, 0)]).sum())
            .collect();
        // A block at rounding level relative to the response (a constant
        // response, or one constant within the contrast span) has no usable
        // variation and would only feed log(0) into the chart.
        let scale: f64 = y.iter().map(|v| v * v).sum();
        if x.iter().any(|v| !(*v > 1e-24 * scale)) {
            return Err(Error::Data(
                "a contrast block has no variation; response is degenerate".into(),
            ));
        }
        Ok(VcSufficient { x })
    }

    /// Draw the block statistics directly: X_l is (lambda_l a + e) times a
    /// chi-square with the block multiplicity.
    pub fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<VcSufficient> {
        let g = self.block_scales(theta)?;
        let x = self
            .multiplicities
            .iter()
            .zip(&g)
            .map(|(&r, &gl)| Ok(gl * Dist1D::chisq(r as f64)?.sample(rng)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(VcSufficient { x })
    }

    /// Draw a full response vector (grand mean zero).
    pub fn simulate_response<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let [a, e] = validated_theta(theta)?;
        let (sa, se) = (a.sqrt(), e.sqrt());
        let mut y = Vec::with_capacity(self.n);
        for &sz in &self.group_sizes {
            let b: f64 = sa * rng.sample::<f64, _>(StandardNormal);
            for _ in 0..sz {
                y.push(b + se * rng.sample::<f64, _>(StandardNormal));
            }
        }
        Ok(y)
    }

    /// Per-block scales lambda_l a + e.
    pub fn block_scales(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let [a, e] = validated_theta(theta)?;
        Ok(self.eigenvalues.iter().map(|&lam| lam * a + e).collect())
    }

    /// The block statistics as a componentwise scale family in the two
    /// variances. Needs at least three blocks; with two, every direction
    /// of log U is tied to the parameters and nothing can be conditioned.
    pub fn scale_family(&self) -> Result<ScaleFamily> {
        let lam = self.eigenvalues.clone();
        let lam2 = self.eigenvalues.clone();
        ScaleFamily::new(
            self.blocks(),
            2,
            move |t: &[f64]| lam.iter().map(|&l| (l * t[0] + t[1]).ln()).collect(),
            move |t: &[f64]| {
                lam2.iter()
                    .map(|&l| {
                        let g = l * t[0] + t[1];
                        vec![l / g, 1.0 / g]
                    })
                    .collect()
            },
        )
    }
}

fn validated_theta(theta: &[f64]) -> Result<[f64; 2]> {
    if theta.len() != 2 {
        return Err(Error::ParamDomain(format!(
            "expected (between, within) variances, got {} values",
            theta.len()
        )));
    }
    let (a, e) = (theta[0], theta[1]);
    if !(a >= 0.0 && a.is_finite() && e > 0.0 && e.is_finite()) {
        return Err(Error::ParamDomain(format!(
            "variances must satisfy between >= 0 and within > 0, got ({a}, {e})"
        )));
    }
    Ok([a, e])
}

/// Completion of the conditioning rows to a full chart on log-U space: the
/// extra coordinates are the sum of all blocks but the last, and the last
/// block alone. Returns the chart matrix and its inverse.
pub(crate) fn build_b(c_rows: &[Vec<f64>], blocks: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if c_rows.len() + 2 != blocks {
        return Err(Error::TauChoice(format!(
            "{} conditioning rows cannot complete a {blocks}-block chart",
            c_rows.len()
        )));
    }
    let mut b = DMatrix::zeros(blocks, blocks);
    for (r, row) in c_rows.iter().enumerate() {
        if row.len() != blocks {
            return Err(Error::TauChoice("conditioning row has the wrong length".into()));
        }
        for (j, &v) in row.iter().enumerate() {
            b[(r, j)] = v;
        }
    }
    for j in 0..blocks - 1 {
        b[(blocks - 2, j)] = 1.0;
    }
    b[(blocks - 1, blocks - 1)] = 1.0;
    let lu = b.clone().lu();
    let det = lu.determinant();
    if det.abs() < 1e-9 {
        return Err(Error::TauChoice(format!(
            "chart completion is singular (det {det:.2e}); conditioning rows overlap the free coordinates"
        )));
    }
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::TauChoice("chart completion is not invertible".into()))?;
    Ok((b, inv))
}

/// Sampler and stream configuration for the conditional chain.
#[derive(Clone, Debug)]
pub struct VcOptions {
    pub mh: MhOptions,
    pub stream: RngStream,
}

impl VcOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { mh: MhOptions::default(), stream: RngStream::new(seed, 0) }
    }
}

/// The conditional chain over the two free log-U coordinates at an anchor,
/// along with the observed coordinates. The first coordinate is the sum of
/// all blocks but the last, the second the last block.
pub fn vc_tau_chain(
    design: &VcDesign,
    suff: &VcSufficient,
    theta0: &[f64],
    opts: &VcOptions,
) -> Result<(MhRun, [f64; 2])> {
    let blocks = design.blocks();
    if suff.x.len() != blocks {
        return Err(Error::Data(format!(
            "sufficient statistics have {} blocks, design has {blocks}",
            suff.x.len()
        )));
    }
    if suff.x.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Data("block statistics must be positive".into()));
    }
    let g = design.block_scales(theta0)?;
    let w_obs: Vec<f64> = suff.x.iter().zip(&g).map(|(x, gl)| (x / gl).ln()).collect();
    let c_rows: Vec<Vec<f64>> = if blocks > 2 {
        design.scale_family()?.eta_at(theta0)?.c
    } else {
        Vec::new()
    };
    let h0: Vec<f64> = c_rows
        .iter()
        .map(|row| row.iter().zip(&w_obs).map(|(a, b)| a * b).sum())
        .collect();
    let (_, inv) = build_b(&c_rows, blocks)?;
    let tau_obs = [w_obs[..blocks - 1].iter().sum::<f64>(), w_obs[blocks - 1]];
    let mult: Vec<f64> = design.multiplicities.iter().map(|&r| r as f64).collect();
    let logf = move |tau: &[f64]| -> f64 {
        let mut lf = 0.0;
        for l in 0..blocks {
            let mut w = 0.0;
            for (j, &h) in h0.iter().enumerate() {
                w += inv[(l, j)] * h;
            }
            w += inv[(l, blocks - 2)] * tau[0] + inv[(l, blocks - 1)] * tau[1];
            if w > 700.0 {
                return f64::NEG_INFINITY;
            }
            lf += 0.5 * mult[l] * w - 0.5 * w.exp();
        }
        lf
    };
    // Rough marginal spreads of the two chart coordinates.
    let scales = [
        design.multiplicities[..blocks - 1]
            .iter()
            .map(|&r| 2.0 / r as f64)
            .sum::<f64>()
            .sqrt(),
        (2.0 / design.multiplicities[blocks - 1] as f64).sqrt(),
    ];
    let mut rng = opts.stream.rng();
    let run = mh_sample(logf, &tau_obs, &scales, &opts.mh, &mut rng)?;
    Ok((run, tau_obs))
}

/// Plausibility of the anchor itself: the rank tail of the observed free
/// coordinates within the conditional chain.
pub fn vc_cpl(
    design: &VcDesign,
    suff: &VcSufficient,
    theta0: &[f64],
    opts: &VcOptions,
) -> Result<f64> {
    let (run, tau_obs) = vc_tau_chain(design, suff, theta0, opts)?;
    let prs = RankingPrs::ellipse_from_draws(&run.draws, 2)?;
    prs.singleton_plausibility(&tau_obs)
}

/// Plausibility scan over a (between, within) grid. Each grid point gets
/// its own derived stream, so the scan is reproducible and does not depend
/// on evaluation order.
pub fn vc_region(
    design: &VcDesign,
    suff: &VcSufficient,
    axes: &[GridSpec],
    alpha: f64,
    opts: &VcOptions,
) -> Result<Vec<RegionPoint>> {
    if axes.len() != 2 {
        return Err(Error::Config(format!(
            "variance scan needs two axes, got {}",
            axes.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParamDomain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let xs = axes[0].points()?;
    let ys = axes[1].points()?;
    let mut jobs: Vec<(u64, Vec<f64>)> = Vec::with_capacity(xs.len() * ys.len());
    for &a in &xs {
        for &e in &ys {
            jobs.push((jobs.len() as u64, vec![a, e]));
        }
    }
    let points = rt::map_collect(jobs, |(idx, theta)| {
        let local = VcOptions { mh: opts.mh.clone(), stream: opts.stream.substream(idx) };
        let pl = vc_cpl(design, suff, &theta, &local)?;
        Ok(RegionPoint { inside: pl > alpha, cpl: pl, theta })
    });
    points.into_iter().collect()
}
