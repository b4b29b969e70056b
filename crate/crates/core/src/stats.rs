//! Replication driver and estimators: repeated end-to-end simulations into a
//! sample tensor, plus the distributional checks (KS against the normal law,
//! k-statistics, rank correlation, trend and slope screens) used to compare
//! simulations with the closed-form predictions.

use crate::counts::{run_count_process, CountError};
use crate::dynamics::{sample_trajectory, DynamicsError, OnOffParams, Trajectory};
use crate::graphs::SmallGraph;
use crate::rcm::{ConnectionModel, RcmError};
use crate::rng::{derive_key, stream_rng, tag};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("paired slices must have equal nonzero length")]
    LengthMismatch,
    #[error("bad experiment config: {0}")]
    BadConfig(&'static str),
    #[error("index out of range: {0}")]
    BadIndex(usize),
    #[error("alpha must lie in (0,1), got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Rcm(#[from] RcmError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// One repeated-simulation experiment: a model, activity rates, the motifs to
/// count, the observation grid, and how many independent replications to run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: ConnectionModel,
    pub params: OnOffParams,
    pub motifs: Vec<SmallGraph>,
    pub grid: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    pub eps_cut: f64,
}

/// Raw counts from repeated simulations, `raw[rep][motif][grid index]`.
#[derive(Clone, Debug)]
pub struct SampleTensor {
    pub grid: Vec<f64>,
    pub n_motifs: usize,
    pub raw: Vec<Vec<Vec<f64>>>,
}

impl SampleTensor {
    pub fn n_reps(&self) -> usize {
        self.raw.len()
    }

    /// All replications of one `(motif, time)` coordinate.
    pub fn column(&self, motif: usize, time: usize) -> Result<Vec<f64>, StatsError> {
        if motif >= self.n_motifs {
            return Err(StatsError::BadIndex(motif));
        }
        if time >= self.grid.len() {
            return Err(StatsError::BadIndex(time));
        }
        Ok(self.raw.iter().map(|rep| rep[motif][time]).collect())
    }

    /// Per-replication linear functional with weights laid out motif-major:
    /// `weights[motif * grid_len + time]`.
    pub fn project(&self, weights: &[f64]) -> Result<Vec<f64>, StatsError> {
        if weights.len() != self.n_motifs * self.grid.len() {
            return Err(StatsError::LengthMismatch);
        }
        Ok(self
            .raw
            .iter()
            .map(|rep| {
                let mut acc = 0.0;
                for (k, series) in rep.iter().enumerate() {
                    for (j, v) in series.iter().enumerate() {
                        acc += weights[k * self.grid.len() + j] * v;
                    }
                }
                acc
            })
            .collect())
    }

    /// Affine rescale: `(raw - center[motif][time]) / scale[motif]`.
    pub fn normalized(
        &self,
        centers: &[Vec<f64>],
        scales: &[f64],
    ) -> Result<SampleTensor, StatsError> {
        if centers.len() != self.n_motifs || scales.len() != self.n_motifs {
            return Err(StatsError::LengthMismatch);
        }
        if centers.iter().any(|c| c.len() != self.grid.len()) {
            return Err(StatsError::LengthMismatch);
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(StatsError::BadConfig("scales must be positive"));
        }
        let raw = self
            .raw
            .iter()
            .map(|rep| {
                rep.iter()
                    .enumerate()
                    .map(|(k, series)| {
                        series
                            .iter()
                            .enumerate()
                            .map(|(j, v)| (v - centers[k][j]) / scales[k])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(SampleTensor {
            grid: self.grid.clone(),
            n_motifs: self.n_motifs,
            raw,
        })
    }
}

/// Run the full pipeline `replications` times. Each replication draws its
/// cloud, potential edges, and trajectories from streams derived from
/// `(master_seed, replication index)`, so results are reproducible and
/// independent of scheduling.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<SampleTensor, StatsError> {
    if cfg.replications == 0 {
        return Err(StatsError::BadConfig("replications must be positive"));
    }
    if cfg.motifs.is_empty() {
        return Err(StatsError::BadConfig("need at least one motif"));
    }
    if cfg.grid.is_empty() || cfg.grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(StatsError::BadConfig("grid must be nondecreasing and nonempty"));
    }
    if cfg.grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(StatsError::BadConfig("grid times must be finite and nonnegative"));
    }
    let horizon = *cfg.grid.last().unwrap();
    let raw: Result<Vec<Vec<Vec<f64>>>, StatsError> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut point_rng = stream_rng(cfg.master_seed, &[tag::REPLICATION, rep, tag::POINTS]);
            let points = cfg.model.sample_points(&mut point_rng)?;
            let edge_seed = derive_key(cfg.master_seed, &[tag::REPLICATION, rep, tag::EDGES]);
            let potential = cfg
                .model
                .sample_potential_edges(&points, edge_seed, cfg.eps_cut)?;
            let mut traj_rng =
                stream_rng(cfg.master_seed, &[tag::REPLICATION, rep, tag::TRAJECTORY]);
            let trajectories: Result<Vec<Trajectory>, DynamicsError> = (0..points.len())
                .map(|_| sample_trajectory(&cfg.params, horizon, &mut traj_rng))
                .collect();
            let process = run_count_process(&cfg.motifs, &potential, &trajectories?, &cfg.grid)?;
            Ok(process.values)
        })
        .collect();
    Ok(SampleTensor {
        grid: cfg.grid.clone(),
        n_motifs: cfg.motifs.len(),
        raw: raw?,
    })
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample mean with its standard error.
pub fn mean_with_se(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    let m = mean(xs)?;
    let v = sample_variance(xs)?;
    Ok((m, (v / xs.len() as f64).sqrt()))
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: xs.len() });
    }
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0))
}

/// Unbiased sample covariance.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StatsError::LengthMismatch);
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    Ok(xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() as f64 - 1.0))
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let c = sample_covariance(xs, ys)?;
    let vx = sample_variance(xs)?;
    let vy = sample_variance(ys)?;
    Ok(c / (vx * vy).sqrt())
}

/// Leave-one-out standard error of an arbitrary paired statistic.
pub fn jackknife_se_paired(
    xs: &[f64],
    ys: &[f64],
    stat: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<f64, StatsError> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    let mut bx = Vec::with_capacity(n - 1);
    let mut by = Vec::with_capacity(n - 1);
    let mut thetas = Vec::with_capacity(n);
    for skip in 0..n {
        bx.clear();
        by.clear();
        for i in 0..n {
            if i != skip {
                bx.push(xs[i]);
                by.push(ys[i]);
            }
        }
        thetas.push(stat(&bx, &by));
    }
    let tbar = thetas.iter().sum::<f64>() / n as f64;
    let ss = thetas.iter().map(|t| (t - tbar) * (t - tbar)).sum::<f64>();
    Ok(((n as f64 - 1.0) / n as f64 * ss).sqrt())
}

/// Central moments and the unbiased cumulant estimators through order four.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub k3: f64,
    pub k4: f64,
}

pub fn moment_summary(xs: &[f64]) -> Result<MomentSummary, StatsError> {
    let n = xs.len();
    if n < 4 {
        return Err(StatsError::TooFew { need: 4, got: n });
    }
    let nf = n as f64;
    let m = mean(xs)?;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let k2 = nf / (nf - 1.0) * m2;
    let k3 = nf * nf * m3 / ((nf - 1.0) * (nf - 2.0));
    let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
        / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Ok(MomentSummary {
        n,
        mean: m,
        variance: k2,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        k3,
        k4,
    })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // Ties share the average rank of their run.
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: xs.len().min(ys.len()) });
    }
    correlation(&ranks(xs), &ranks(ys))
}

pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StatsError::TooFew { need: 2, got: xs.len().min(ys.len()) });
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(StatsError::BadConfig("degenerate abscissae"));
    }
    Ok(sxy / sxx)
}

/// Two-sided Kolmogorov-Smirnov distance of a sample against a model CDF.
pub fn ks_statistic(sample: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    Ok(d)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

pub fn ks_statistic_standard_normal(sample: &[f64]) -> Result<f64, StatsError> {
    ks_statistic(sample, &standard_normal_cdf)
}

/// Limit law of the scaled KS distance: `P(sqrt(n) D_n <= x)`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.05 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 1..200u32 {
        let term = (-2.0 * (k as f64 * x) * (k as f64 * x)).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (1.0 - 2.0 * s).clamp(0.0, 1.0)
}

/// Critical KS distance at level `alpha` for sample size `n`, from the limit
/// law by bisection.
pub fn ks_critical(alpha: f64, n: usize) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if n == 0 {
        return Err(StatsError::TooFew { need: 1, got: 0 });
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.2, 4.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / (n as f64).sqrt())
}

/// How a check row compares its observed value to the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    AbsWithin,
    RelWithin,
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

/// Accumulated check rows with a conjunctive verdict; every tolerance is
/// recorded next to the value it gates.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ComparisonReport {
    pub title: String,
    pub rows: Vec<CheckRow>,
}

impl ComparisonReport {
    pub fn new(title: &str) -> Self {
        ComparisonReport {
            title: title.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push_abs(&mut self, name: &str, observed: f64, target: f64, tol: f64) {
        self.rows.push(CheckRow {
            name: name.to_string(),
            observed,
            target,
            tolerance: tol,
            kind: CheckKind::AbsWithin,
            pass: (observed - target).abs() <= tol,
        });
    }

    pub fn push_rel(&mut self, name: &str, observed: f64, target: f64, rel: f64) {
        self.rows.push(CheckRow {
            name: name.to_string(),
            observed,
            target,
            tolerance: rel,
            kind: CheckKind::RelWithin,
            pass: (observed - target).abs() <= rel * target.abs(),
        });
    }

    pub fn push_at_most(&mut self, name: &str, observed: f64, limit: f64) {
        self.rows.push(CheckRow {
            name: name.to_string(),
            observed,
            target: limit,
            tolerance: 0.0,
            kind: CheckKind::AtMost,
            pass: observed <= limit,
        });
    }

    pub fn push_at_least(&mut self, name: &str, observed: f64, limit: f64) {
        self.rows.push(CheckRow {
            name: name.to_string(),
            observed,
            target: limit,
            tolerance: 0.0,
            kind: CheckKind::AtLeast,
            pass: observed >= limit,
        });
    }

    pub fn merge(&mut self, other: ComparisonReport) {
        self.rows.extend(other.rows);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("== {} ==\n", self.title);
        for r in &self.rows {
            let cmp = match r.kind {
                CheckKind::AbsWithin => format!("|{:+.6e} - {:+.6e}| <= {:.3e}", r.observed, r.target, r.tolerance),
                CheckKind::RelWithin => format!(
                    "|{:+.6e} - {:+.6e}| <= {:.3e} rel",
                    r.observed, r.target, r.tolerance
                ),
                CheckKind::AtMost => format!("{:+.6e} <= {:+.6e}", r.observed, r.target),
                CheckKind::AtLeast => format!("{:+.6e} >= {:+.6e}", r.observed, r.target),
            };
            out.push_str(&format!(
                "  [{}] {:<44} {}\n",
                if r.pass { "ok" } else { "FAIL" },
                r.name,
                cmp
            ));
        }
        out
    }
}

/// Distributional screen of an already standardized sample: KS against the
/// standard normal plus mean, skewness, and excess-kurtosis windows at four
/// asymptotic standard errors.
pub fn gaussianity_check(
    name: &str,
    standardized: &[f64],
    alpha: f64,
) -> Result<ComparisonReport, StatsError> {
    let n = standardized.len();
    if n < 8 {
        return Err(StatsError::TooFew { need: 8, got: n });
    }
    let nf = n as f64;
    let mut rep = ComparisonReport::new(name);
    let ks = ks_statistic_standard_normal(standardized)?;
    rep.push_at_most("ks distance", ks, ks_critical(alpha, n)?);
    let ms = moment_summary(standardized)?;
    rep.push_abs("mean", ms.mean, 0.0, 4.0 / nf.sqrt());
    rep.push_abs("skewness", ms.skewness, 0.0, 4.0 * (6.0 / nf).sqrt());
    rep.push_abs("excess kurtosis", ms.excess_kurtosis, 0.0, 4.0 * (24.0 / nf).sqrt());
    Ok(rep)
}

/// Ladder screen: values trend upward with the labels and the last one
/// clears a floor.
pub fn increasing_trend_check(
    name: &str,
    labels: &[f64],
    values: &[f64],
    min_last: f64,
) -> Result<ComparisonReport, StatsError> {
    let mut rep = ComparisonReport::new(name);
    rep.push_at_least("rank correlation with ladder", spearman(labels, values)?, 0.8);
    rep.push_at_least("final value", *values.last().unwrap(), min_last);
    Ok(rep)
}

/// Ladder screen for decaying magnitudes: downward trend plus a log-log
/// slope window.
pub fn decay_slope_check(
    name: &str,
    labels: &[f64],
    magnitudes: &[f64],
    slope_lo: f64,
    slope_hi: f64,
) -> Result<(f64, ComparisonReport), StatsError> {
    if labels.len() != magnitudes.len() || labels.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: labels.len().min(magnitudes.len()) });
    }
    if magnitudes.iter().any(|m| *m <= 0.0) || labels.iter().any(|l| *l <= 0.0) {
        return Err(StatsError::BadConfig("log-log slope needs positive data"));
    }
    let lx: Vec<f64> = labels.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = magnitudes.iter().map(|y| y.ln()).collect();
    let slope = least_squares_slope(&lx, &ly)?;
    let mut rep = ComparisonReport::new(name);
    rep.push_at_most("rank correlation with ladder", spearman(labels, magnitudes)?, -0.8);
    rep.push_at_least("log-log slope (lower)", slope, slope_lo);
    rep.push_at_most("log-log slope (upper)", slope, slope_hi);
    Ok((slope, rep))
}

/// Self-test of the estimators on synthetic standard normal draws; must pass
/// before any simulation-backed conclusion is trusted.
pub fn calibration_gaussian(seed: u64, n: usize) -> Result<ComparisonReport, StatsError> {
    use rand::Rng;
    let mut rng = stream_rng(seed, &[tag::CHECK]);
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.sample(rand_distr::StandardNormal);
            u
        })
        .collect();
    let mut rep = gaussianity_check("calibration: standard normal draws", &xs, 0.01)?;
    let ms = moment_summary(&xs)?;
    let nf = n as f64;
    rep.push_abs("variance", ms.variance, 1.0, 4.0 * (2.0 / nf).sqrt());
    rep.push_abs("k3", ms.k3, 0.0, 4.0 * (6.0 / nf).sqrt());
    rep.push_abs("k4", ms.k4, 0.0, 4.0 * (24.0 / nf).sqrt());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rcm::Profile;
    use approx::assert_relative_eq;

    #[test]
    fn moment_summary_hand_values() {
        let ms = moment_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(ms.mean, 2.5);
        assert_relative_eq!(ms.variance, 5.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(ms.k3, 0.0, epsilon = 1e-12);
        // n=4: k4 = 16 (5 m4 - 9 m2^2) / 6 with m2 = 1.25, m4 = 2.5625.
        assert_relative_eq!(ms.k4, -10.0 / 3.0, max_relative = 1e-12);
        assert!(moment_summary(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn ks_critical_matches_reference_quantiles() {
        // Asymptotic quantiles of the scaled KS law.
        assert_relative_eq!(ks_critical(0.05, 1).unwrap(), 1.3581, max_relative = 1e-3);
        assert_relative_eq!(ks_critical(0.01, 1).unwrap(), 1.6276, max_relative = 1e-3);
        assert_relative_eq!(
            ks_critical(0.01, 1000).unwrap(),
            1.6276 / 1000f64.sqrt(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn kolmogorov_cdf_anchors() {
        assert_relative_eq!(kolmogorov_cdf(1.3581), 0.95, max_relative = 1e-3);
        assert_eq!(kolmogorov_cdf(0.0), 0.0);
        assert!(kolmogorov_cdf(4.0) > 0.99999);
    }

    #[test]
    fn ks_statistic_detects_location_shift() {
        use rand::Rng;
        let mut rng = stream_rng(7, &[tag::CHECK, 1]);
        let good: Vec<f64> = (0..4000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let bad: Vec<f64> = good.iter().map(|x| x + 0.3).collect();
        let crit = ks_critical(0.01, good.len()).unwrap();
        assert!(ks_statistic_standard_normal(&good).unwrap() < crit);
        assert!(ks_statistic_standard_normal(&bad).unwrap() > crit);
    }

    #[test]
    fn spearman_orders() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let inc = [2.0, 2.5, 7.0, 9.0, 11.0];
        let dec = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_relative_eq!(spearman(&xs, &inc).unwrap(), 1.0);
        assert_relative_eq!(spearman(&xs, &dec).unwrap(), -1.0);
        // Ties get average ranks.
        let tied = [1.0, 1.0, 2.0, 3.0, 4.0];
        assert!(spearman(&xs, &tied).unwrap() > 0.9);
    }

    #[test]
    fn jackknife_mean_matches_closed_form() {
        let xs = [0.4, 1.9, -2.2, 0.7, 3.1, -0.6, 1.2, 0.0];
        let ys = xs;
        let se = jackknife_se_paired(&xs, &ys, &|a, _| mean(a).unwrap()).unwrap();
        let want = (sample_variance(&xs).unwrap() / xs.len() as f64).sqrt();
        assert_relative_eq!(se, want, max_relative = 1e-12);
    }

    #[test]
    fn slope_and_median() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert_relative_eq!(least_squares_slope(&xs, &ys).unwrap(), 2.0);
        assert_relative_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_relative_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }

    #[test]
    fn calibration_suite_passes() {
        let rep = calibration_gaussian(99, 5000).unwrap();
        assert!(rep.all_pass(), "{}", rep.render());
    }

    #[test]
    fn gaussianity_check_rejects_skewed_samples() {
        use rand::Rng;
        let mut rng = stream_rng(11, &[tag::CHECK, 2]);
        let xs: Vec<f64> = (0..4000)
            .map(|_| {
                let e: f64 = rng.sample(rand_distr::Exp1);
                e - 1.0
            })
            .collect();
        let rep = gaussianity_check("exponential sample", &xs, 0.01).unwrap();
        assert!(!rep.all_pass());
    }

    #[test]
    fn trend_checks() {
        let labels = [125.0, 250.0, 500.0, 1000.0];
        let inc = increasing_trend_check("up", &labels, &[0.5, 0.7, 0.85, 0.95], 0.9).unwrap();
        assert!(inc.all_pass());
        let flat = increasing_trend_check("flat", &labels, &[0.5, 0.4, 0.45, 0.3], 0.9).unwrap();
        assert!(!flat.all_pass());

        // Magnitudes decaying like n^(-1/2).
        let mags: Vec<f64> = labels.iter().map(|n| 3.0 / n.sqrt()).collect();
        let (slope, rep) = decay_slope_check("decay", &labels, &mags, -0.8, -0.2).unwrap();
        assert_relative_eq!(slope, -0.5, max_relative = 1e-9);
        assert!(rep.all_pass());
    }

    #[test]
    fn report_rendering_and_serialization() {
        let mut rep = ComparisonReport::new("demo");
        rep.push_rel("value", 1.02, 1.0, 0.05);
        rep.push_at_most("distance", 0.2, 0.1);
        assert!(!rep.all_pass());
        let text = rep.render();
        assert!(text.contains("[ok]") && text.contains("[FAIL]"));
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"AtMost\""));
    }

    #[test]
    fn replications_are_reproducible() {
        let cfg = ExperimentConfig {
            model: ConnectionModel::new(40.0, 0.02, 1, Profile::Indicator).unwrap(),
            params: OnOffParams::new(1.0, 1.0).unwrap(),
            motifs: vec![SmallGraph::preset("edge").unwrap()],
            grid: vec![0.0, 0.5, 1.0],
            replications: 6,
            master_seed: 31,
            eps_cut: 1e-9,
        };
        let a = run_replications(&cfg).unwrap();
        let b = run_replications(&cfg).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.n_reps(), 6);
        assert_eq!(a.column(0, 2).unwrap().len(), 6);

        let mut other = cfg.clone();
        other.master_seed = 32;
        let c = run_replications(&other).unwrap();
        assert_ne!(a.raw, c.raw);

        // Projection onto the last grid time reproduces the column.
        let w = [0.0, 0.0, 1.0];
        assert_eq!(a.project(&w).unwrap(), a.column(0, 2).unwrap());
    }

    #[test]
    fn normalized_tensor_layout() {
        let t = SampleTensor {
            grid: vec![0.0, 1.0],
            n_motifs: 2,
            raw: vec![
                vec![vec![2.0, 4.0], vec![10.0, 20.0]],
                vec![vec![6.0, 8.0], vec![30.0, 40.0]],
            ],
        };
        let centers = vec![vec![2.0, 2.0], vec![10.0, 10.0]];
        let scales = vec![2.0, 10.0];
        let z = t.normalized(&centers, &scales).unwrap();
        assert_eq!(z.raw[0][0], vec![0.0, 1.0]);
        assert_eq!(z.raw[1][1], vec![2.0, 3.0]);
        assert!(t.normalized(&centers, &[1.0]).is_err());
        assert!(t.normalized(&centers, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn empirical_moments_match_exact_count_law() {
        // Small dense model: mean and variance of the edge count against the
        // closed-form values, three standard errors.
        use crate::theory::Engine;
        let n = 80.0;
        let nu = 0.02;
        let cfg = ExperimentConfig {
            model: ConnectionModel::new(n, nu, 1, Profile::Indicator).unwrap(),
            params: OnOffParams::new(1.0, 1.0).unwrap(),
            motifs: vec![SmallGraph::preset("edge").unwrap()],
            grid: vec![0.0, 0.4],
            replications: 1500,
            master_seed: 77,
            eps_cut: 1e-9,
        };
        let samples = run_replications(&cfg).unwrap();
        let engine = Engine::new(Profile::Indicator, 1).unwrap();
        let want_mean = engine
            .expected_count(n, nu, &cfg.motifs[0], &cfg.params)
            .unwrap();
        let col = samples.column(0, 1).unwrap();
        let (m, se) = mean_with_se(&col).unwrap();
        assert!((m - want_mean).abs() < 3.0 * se, "mean {m} want {want_mean} se {se}");
        let want_var = engine
            .covariance_counts(n, nu, 0.4, 0.4, &cfg.motifs[0], &cfg.motifs[0], &cfg.params)
            .unwrap();
        let v = sample_variance(&col).unwrap();
        assert!((v - want_var).abs() < 0.15 * want_var, "var {v} want {want_var}");
    }
}
