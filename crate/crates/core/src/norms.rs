//! Path norms, weighted Hölder seminorms, Monte Carlo statistics and log-log
//! rate fits.

use crate::drift::{DriftSpec, QExponent};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Number of batches used for batch-means standard errors.
const BATCHES: usize = 16;

/// A Monte Carlo estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Per-path difference trajectories D_t = X_t - X^n_t on a shared grid, for M
/// Monte Carlo paths.
#[derive(Debug, Clone)]
pub struct PairedSample {
    /// Node times shared by every path.
    pub times: Vec<f64>,
    pub dimension: usize,
    /// One flat node-major array per path.
    pub diffs: Vec<Vec<f64>>,
    /// Scheme step count this sample was measured at.
    pub n: usize,
}

impl PairedSample {
    pub fn new(times: Vec<f64>, dimension: usize, diffs: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if diffs.len() < 2 {
            return Err(Error::EmptySample);
        }
        let expect = times.len() * dimension;
        if diffs.iter().any(|d| d.len() != expect) {
            return Err(Error::GridMismatch(
                "paired sample paths have unequal lengths".into(),
            ));
        }
        Ok(Self {
            times,
            dimension,
            diffs,
            n,
        })
    }

    pub fn paths(&self) -> usize {
        self.diffs.len()
    }

    fn node_abs(&self, path: usize, k: usize) -> f64 {
        let d = self.dimension;
        let row = &self.diffs[path][k * d..(k + 1) * d];
        row.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Batch-means estimate: applies `statistic` to ~16 contiguous path batches
/// and to the whole sample.
fn batch_means<F>(paths: usize, statistic: F) -> McEstimate
where
    F: Fn(std::ops::Range<usize>) -> f64,
{
    let value = statistic(0..paths);
    let b = BATCHES.min(paths);
    if b < 2 {
        return McEstimate { value, stderr: 0.0 };
    }
    let mut batch_values = Vec::with_capacity(b);
    for i in 0..b {
        let lo = i * paths / b;
        let hi = (i + 1) * paths / b;
        batch_values.push(statistic(lo..hi));
    }
    let mean = batch_values.iter().sum::<f64>() / b as f64;
    let var = batch_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (b as f64 - 1.0);
    McEstimate {
        value,
        stderr: (var / b as f64).sqrt(),
    }
}

/// L^p-of-sup norm: ((1/M) sum_paths (sup_t |D_t|)^p)^(1/p).
pub fn sup_lp_norm(sample: &PairedSample, p: f64) -> Result<McEstimate> {
    if sample.diffs.is_empty() {
        return Err(Error::EmptySample);
    }
    if p < 2.0 {
        return Err(Error::InvalidSpec(format!("p must be >= 2, got {p}")));
    }
    let sups: Vec<f64> = (0..sample.paths())
        .into_par_iter()
        .map(|i| {
            (0..sample.times.len())
                .map(|k| sample.node_abs(i, k))
                .fold(0.0f64, f64::max)
        })
        .collect();
    Ok(batch_means(sample.paths(), |range| {
        let m = (range.end - range.start) as f64;
        (sups[range].iter().map(|s| s.powf(p)).sum::<f64>() / m).powf(1.0 / p)
    }))
}

/// Sup-of-L^p norm: sup over nodes of the per-node Monte Carlo L^p mean.
/// Always bounded by `sup_lp_norm` on the same sample.
pub fn lp_sup_norm(sample: &PairedSample, p: f64) -> Result<f64> {
    if sample.diffs.is_empty() {
        return Err(Error::EmptySample);
    }
    if p < 2.0 {
        return Err(Error::InvalidSpec(format!("p must be >= 2, got {p}")));
    }
    let m = sample.paths() as f64;
    Ok((0..sample.times.len())
        .into_par_iter()
        .map(|k| {
            let mean = (0..sample.paths())
                .map(|i| sample.node_abs(i, k).powf(p))
                .sum::<f64>()
                / m;
            mean.powf(1.0 / p)
        })
        .reduce(|| 0.0, f64::max))
}

/// Precomputed node-pair weights for the weighted Hölder seminorm
/// sup_{s < t} |D_t - D_s| / ((t - s)^gamma w(s, t)^(1/q)).
///
/// All O(N^2) pairs are used for grids up to 1025 nodes; beyond that the
/// dyadic-span subset (t - s = 2^j steps) keeps the scan near-linear while
/// still capturing the sup for Hölder-type paths up to a bounded factor.
/// For q = inf the control weight is identically 1.
#[derive(Debug, Clone)]
pub struct HolderPairWeights {
    /// (left node, right node, reciprocal denominator).
    pairs: Vec<(usize, usize, f64)>,
    /// Pairs whose control vanishes; increments there must vanish too.
    zero_weight: Vec<(usize, usize)>,
}

const FULL_SCAN_MAX_NODES: usize = 1025;

impl HolderPairWeights {
    pub fn new(times: &[f64], gamma: f64, spec: &DriftSpec) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        let n = times.len();
        let mut index_pairs = Vec::new();
        if n <= FULL_SCAN_MAX_NODES {
            for i in 0..n {
                for j in (i + 1)..n {
                    index_pairs.push((i, j));
                }
            }
        } else {
            let mut span = 1usize;
            while span < n {
                for i in 0..(n - span) {
                    index_pairs.push((i, i + span));
                }
                span *= 2;
            }
        }
        let mut pairs = Vec::with_capacity(index_pairs.len());
        let mut zero_weight = Vec::new();
        for (i, j) in index_pairs {
            let (s, t) = (times[i], times[j]);
            let control_root = match spec.q {
                QExponent::Finite(qv) => spec.control(s, t)?.powf(1.0 / qv),
                QExponent::Infinite => 1.0,
            };
            let denom = (t - s).powf(gamma) * control_root;
            if denom > 0.0 {
                pairs.push((i, j, 1.0 / denom));
            } else {
                zero_weight.push((i, j));
            }
        }
        Ok(Self { pairs, zero_weight })
    }

    /// Evaluates the seminorm of one flat node-major difference array.
    pub fn seminorm(&self, values: &[f64], dimension: usize) -> Result<f64> {
        let abs_inc = |i: usize, j: usize| -> f64 {
            let a = &values[i * dimension..(i + 1) * dimension];
            let b = &values[j * dimension..(j + 1) * dimension];
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        for &(i, j) in &self.zero_weight {
            let inc = abs_inc(i, j);
            if inc > 1e-12 {
                return Err(Error::DegenerateWeight {
                    s: i as f64,
                    t: j as f64,
                    increment: inc,
                });
            }
        }
        Ok(self
            .pairs
            .iter()
            .map(|&(i, j, inv)| abs_inc(i, j) * inv)
            .fold(0.0, f64::max))
    }
}

/// Weighted Hölder seminorm of a single difference path.
pub fn weighted_holder_seminorm(
    times: &[f64],
    values: &[f64],
    dimension: usize,
    gamma: f64,
    spec: &DriftSpec,
) -> Result<f64> {
    HolderPairWeights::new(times, gamma, spec)?.seminorm(values, dimension)
}

/// Monte Carlo L^p lift of the per-path weighted seminorm over a sample.
pub fn weighted_holder_lp(
    sample: &PairedSample,
    gamma: f64,
    p: f64,
    spec: &DriftSpec,
) -> Result<McEstimate> {
    let weights = HolderPairWeights::new(&sample.times, gamma, spec)?;
    let per_path: Vec<f64> = sample
        .diffs
        .par_iter()
        .map(|d| weights.seminorm(d, sample.dimension))
        .collect::<Result<_>>()?;
    Ok(batch_means(sample.paths(), |range| {
        let m = (range.end - range.start) as f64;
        (per_path[range].iter().map(|s| s.powf(p)).sum::<f64>() / m).powf(1.0 / p)
    }))
}

/// Log-log least-squares fit of error against step count.
#[derive(Debug, Clone)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    /// Empirical decay rate: error ~ n^(-rate). This is the negated OLS slope
    /// on (ln n, ln error).
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub stderr_slope: f64,
}

/// Ordinary least squares on (ln n, ln error).
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, e)) = points.iter().find(|&&(n, e)| n <= 0.0 || e <= 0.0) {
        return Err(Error::DegenerateFit(format!(
            "non-positive point (n = {n}, error = {e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all step counts equal".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let stderr_slope = if m > 2.0 {
        (ss_res / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        points: points.to_vec(),
        rate: -slope,
        intercept,
        r_squared,
        stderr_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{SpaceKind, SpaceProfile, TimeKind, TimeProfile};

    fn sample_from_fn<F: Fn(usize, f64) -> f64>(m: usize, nodes: usize, f: F) -> PairedSample {
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let diffs = (0..m)
            .map(|i| times.iter().map(|&t| f(i, t)).collect())
            .collect();
        PairedSample::new(times, 1, diffs, 8).unwrap()
    }

    #[test]
    fn zero_difference_gives_zero_norms() {
        let s = sample_from_fn(8, 17, |_, _| 0.0);
        assert_eq!(sup_lp_norm(&s, 2.0).unwrap().value, 0.0);
        assert_eq!(lp_sup_norm(&s, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_identity_path() {
        // D_t = t on [0, 1]: both norms are 1 for every p.
        let s = sample_from_fn(4, 33, |_, t| t);
        for p in [2.0, 4.0] {
            assert!((sup_lp_norm(&s, p).unwrap().value - 1.0).abs() < 1e-12);
            assert!((lp_sup_norm(&s, p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_offsets_match_direct_arithmetic() {
        let offsets = [0.5, -1.5, 2.0, 0.25];
        let s = sample_from_fn(4, 9, |i, _| offsets[i]);
        let p = 3.0;
        let expect =
            (offsets.iter().map(|c| c.abs().powf(p)).sum::<f64>() / 4.0).powf(1.0 / p);
        assert!((sup_lp_norm(&s, p).unwrap().value - expect).abs() < 1e-12);
    }

    #[test]
    fn norm_ordering_holds() {
        let s = sample_from_fn(10, 33, |i, t| (t * (i as f64 + 1.0)).sin());
        let lp_sup = lp_sup_norm(&s, 2.0).unwrap();
        let sup_lp = sup_lp_norm(&s, 2.0).unwrap().value;
        assert!(lp_sup <= sup_lp + 1e-12);
    }

    fn unit_spec(q: crate::drift::QExponent) -> DriftSpec {
        // A |h|_alpha = 1 with flat time factor: control(s, t) = t - s.
        DriftSpec::new(
            SpaceProfile::new(SpaceKind::Constant { level: 1.0 }),
            TimeProfile::new(TimeKind::One, 1.0).unwrap(),
            1.0,
            0.5,
            q,
            1,
        )
        .unwrap()
    }

    #[test]
    fn weighted_seminorm_constant_path_is_zero() {
        let spec = unit_spec(crate::drift::QExponent::Finite(2.0));
        let times: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
        let vals = vec![3.0; 9];
        assert_eq!(
            weighted_holder_seminorm(&times, &vals, 1, 0.3, &spec).unwrap(),
            0.0
        );
    }

    #[test]
    fn weighted_seminorm_identity_path_with_cancelling_weights() {
        // D_t = t, q = 1, gamma small: ratio = (t-s) / ((t-s)^g (t-s)) -> 1
        // as gamma -> 0; at gamma = 1e-6 the sup is within 1e-4 of 1.
        let spec = DriftSpec::new(
            SpaceProfile::new(SpaceKind::Constant { level: 1.0 }),
            TimeProfile::new(TimeKind::One, 1.0).unwrap(),
            1.0,
            0.7,
            crate::drift::QExponent::Finite(1.2),
            1,
        )
        .unwrap();
        let times: Vec<f64> = (0..65).map(|k| k as f64 / 64.0).collect();
        let vals: Vec<f64> = times.clone();
        let gamma = 1e-6;
        let got = weighted_holder_seminorm(&times, &vals, 1, gamma, &spec).unwrap();
        // With q = 1.2 the weight is (t-s)^(1/1.2), so the ratio is
        // (t-s)^(1 - gamma - 1/1.2), maximized at t-s = 1.
        assert!((got - 1.0).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn weighted_seminorm_degenerate_weight_detection() {
        // Zero amplitude: control vanishes on every pair, so any non-constant
        // path must be rejected.
        let spec = DriftSpec::new(
            SpaceProfile::new(SpaceKind::Zero),
            TimeProfile::new(TimeKind::One, 1.0).unwrap(),
            0.0,
            0.5,
            crate::drift::QExponent::Finite(2.0),
            1,
        )
        .unwrap();
        let times: Vec<f64> = (0..5).map(|k| k as f64 / 4.0).collect();
        let constant = vec![1.0; 5];
        assert_eq!(
            weighted_holder_seminorm(&times, &constant, 1, 0.3, &spec).unwrap(),
            0.0
        );
        let moving: Vec<f64> = times.clone();
        assert!(matches!(
            weighted_holder_seminorm(&times, &moving, 1, 0.3, &spec),
            Err(Error::DegenerateWeight { .. })
        ));
    }

    #[test]
    fn rate_fit_exact_power_law() {
        let fit = rate_fit(&[(2.0, 0.5), (4.0, 0.25), (8.0, 0.125)]).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.stderr_slope < 1e-12);
    }

    #[test]
    fn rate_fit_flat_errors() {
        let fit = rate_fit(&[(2.0, 0.3), (4.0, 0.3), (8.0, 0.3)]).unwrap();
        assert!(fit.rate.abs() < 1e-12);
    }

    #[test]
    fn rate_fit_noisy_power_law() {
        // e_n = 3 n^-0.75 (1 + u_n), |u_n| <= 0.05.
        let noise = [0.05, -0.04, 0.03, -0.05, 0.02, 0.04];
        let points: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let n = 2f64.powi(i as i32 + 2);
                (n, 3.0 * n.powf(-0.75) * (1.0 + noise[i]))
            })
            .collect();
        let fit = rate_fit(&points).unwrap();
        assert!(fit.rate > 0.65 && fit.rate < 0.85, "rate = {}", fit.rate);
    }

    #[test]
    fn rate_fit_rejects_degenerate_input() {
        assert!(matches!(
            rate_fit(&[(2.0, 0.1), (4.0, 0.2)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            rate_fit(&[(4.0, 0.1), (4.0, 0.2), (4.0, 0.3)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            rate_fit(&[(2.0, 0.1), (4.0, 0.0), (8.0, 0.3)]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn dyadic_span_scan_tracks_full_scan() {
        // On a grid just above the full-scan cutoff the dyadic subset must
        // stay within a bounded factor of the full maximum.
        let spec = unit_spec(crate::drift::QExponent::Finite(2.0));
        let nodes = 1200;
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 / (nodes - 1) as f64).collect();
        let vals: Vec<f64> = times.iter().map(|&t| (20.0 * t).sin() * t.sqrt()).collect();
        let fast = weighted_holder_seminorm(&times, &vals, 1, 0.2, &spec).unwrap();
        let mut full: f64 = 0.0;
        for i in 0..nodes {
            for j in (i + 1)..nodes {
                let w = (times[j] - times[i]).powf(0.2) * (times[j] - times[i]).sqrt();
                full = full.max((vals[j] - vals[i]).abs() / w);
            }
        }
        assert!(fast <= full * (1.0 + 1e-12));
        assert!(fast >= 0.5 * full, "fast {fast} vs full {full}");
    }
}
