//! Monte Carlo verification of stochastic-sewing scaling bounds on
//! occupation-time germs.
//!
//! The central object is the two-parameter functional
//!
//!   A_(s,t) = int_s^t [b(r, B_(kappa_n(r))) - b(r, B_r)] dr,
//!
//! whose L^p decay in n drives the scheme's convergence rate. Germs are
//! evaluated by a composite rule on a fine dyadic grid aligned with the
//! kappa mesh (state frozen at left fine nodes, time factor integrated
//! exactly), so additivity in (s, u, t) holds to quadrature tolerance.

use crate::brownian::{sample_path, BrownianPath, GridSpec};
use crate::drift::{time_integral, DriftSpec, SpaceProfile, TimeProfile};
use crate::error::{Error, Result};
use crate::kolmogorov::{heat_apply_raw, SpaceGrid};
use crate::norms::{rate_fit, McEstimate, RateFit};
use rayon::prelude::*;
use std::collections::HashMap;

/// Spatial map of a germ integrand, applied component-wise.
///
/// `Identity` (h(x) = x) falls outside the bounded drift families but admits
/// an exact variance law, which makes it the canonical quadrature oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialMap {
    Identity,
    Profile(SpaceProfile),
}

/// The integrand field A g(t) h(x) used by germ evaluators.
#[derive(Debug, Clone, Copy)]
pub struct GermField {
    pub map: SpatialMap,
    pub time: TimeProfile,
    pub amplitude: f64,
}

impl GermField {
    pub fn from_drift(spec: &DriftSpec) -> Self {
        Self {
            map: SpatialMap::Profile(spec.space),
            time: spec.time,
            amplitude: spec.amplitude,
        }
    }

    pub fn linear(time: TimeProfile, amplitude: f64) -> Self {
        Self {
            map: SpatialMap::Identity,
            time,
            amplitude,
        }
    }

    fn eval_space(&self, x: f64) -> f64 {
        match self.map {
            SpatialMap::Identity => x,
            SpatialMap::Profile(p) => p.eval(x),
        }
    }

    fn weight(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.amplitude * time_integral(&self.time, 1.0, s, t)?)
    }
}

fn germ_mesh(path: &BrownianPath, n: usize, s: f64, t: f64) -> Result<(usize, usize, usize)> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidSpec(format!("kappa mesh {n} is not dyadic")));
    }
    let fine_steps = path.grid().steps();
    if fine_steps < 4 * n {
        return Err(Error::TooCoarse(format!(
            "germ quadrature needs a grid of at least 4n = {} steps, path has {fine_steps}",
            4 * n
        )));
    }
    let i0 = path.grid().node_index(s)?;
    let i1 = path.grid().node_index(t)?;
    if i0 > i1 {
        return Err(Error::Domain(format!("need s <= t, got {s} > {t}")));
    }
    Ok((i0, i1, fine_steps / n))
}

/// Pathwise occupation-time germ over [s, t] for one driving path.
///
/// `s`, `t` must be nodes of the path's grid, which must be at least four
/// times finer than the kappa mesh.
pub fn occupation_germ(
    field: &GermField,
    path: &BrownianPath,
    n: usize,
    s: f64,
    t: f64,
) -> Result<Vec<f64>> {
    let (i0, i1, per_cell) = germ_mesh(path, n, s, t)?;
    let d = path.grid().dimension;
    let mut acc = vec![0.0; d];
    if field.amplitude == 0.0 {
        return Ok(acc);
    }
    for j in i0..i1 {
        let j_kappa = j - (j % per_cell);
        if j_kappa == j {
            continue; // integrand vanishes on kappa nodes
        }
        let w = field.weight(path.grid().node_time(j), path.grid().node_time(j + 1))?;
        let frozen = path.node(j_kappa);
        let current = path.node(j);
        for c in 0..d {
            acc[c] += w * (field.eval_space(frozen[c]) - field.eval_space(current[c]));
        }
    }
    Ok(acc)
}

/// Deterministic conditional germ: the heat-semigroup representation of
/// E[A_(s,t) | B_(s_minus) = x_base] in one dimension,
///
///   int_s^t [P_(kappa_n(r) - s_minus) - P_(r - s_minus)] b(r, .)(x_base) dr,
///
/// evaluated by heat application on the supplied grid and a composite rule
/// over the path's fine mesh. Requires s_minus strictly before kappa_n(s) so
/// both semigroup times stay positive.
pub fn conditional_germ(
    spec: &DriftSpec,
    x_base: f64,
    path_grid: &GridSpec,
    n: usize,
    s_minus: f64,
    s: f64,
    t: f64,
    grid: &SpaceGrid,
) -> Result<f64> {
    if spec.dimension != 1 {
        return Err(Error::InvalidSpec("conditional germ is one-dimensional".into()));
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidSpec(format!("kappa mesh {n} is not dyadic")));
    }
    let fine_steps = path_grid.steps();
    if fine_steps < 4 * n {
        return Err(Error::TooCoarse(format!(
            "germ quadrature needs at least 4n = {} steps",
            4 * n
        )));
    }
    let i0 = path_grid.node_index(s)?;
    let i1 = path_grid.node_index(t)?;
    let per_cell = fine_steps / n;
    let kappa_s = path_grid.node_time(i0 - (i0 % per_cell));
    if !(s_minus >= 0.0 && s_minus < kappa_s) {
        return Err(Error::Domain(format!(
            "s_minus = {s_minus} must lie strictly before kappa_n(s) = {kappa_s}"
        )));
    }
    if x_base.abs() > grid.radius {
        return Err(Error::Domain(format!(
            "x_base = {x_base} outside the grid [-{r}, {r}]",
            r = grid.radius
        )));
    }
    if spec.amplitude == 0.0 {
        return Ok(0.0);
    }

    let h: Vec<f64> = grid.sample(|x| spec.space.eval(x));
    // Heat evaluations P_(time(idx) - s_minus) h at x_base, cached by fine
    // node index; reads interpolate linearly between grid nodes.
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let read = |idx: usize, cache: &mut HashMap<usize, f64>| -> Result<f64> {
        if let Some(&v) = cache.get(&idx) {
            return Ok(v);
        }
        let theta = path_grid.node_time(idx) - s_minus;
        let smoothed = heat_apply_raw(&h, grid, theta)?;
        let pos = (x_base + grid.radius) / grid.dx();
        let j = (pos.floor() as usize).min(grid.points() - 2);
        let frac = pos - j as f64;
        let v = smoothed[j] * (1.0 - frac) + smoothed[j + 1] * frac;
        cache.insert(idx, v);
        Ok(v)
    };

    let mut acc = 0.0;
    for j in i0..i1 {
        let j_kappa = j - (j % per_cell);
        if j_kappa == j {
            continue;
        }
        let w = spec.amplitude
            * time_integral(&spec.time, 1.0, path_grid.node_time(j), path_grid.node_time(j + 1))?;
        let frozen = read(j_kappa, &mut cache)?;
        let moving = read(j, &mut cache)?;
        acc += w * (frozen - moving);
    }
    Ok(acc)
}

/// delta A_(s,u,t) = A_(s,t) - A_(s,u) - A_(u,t) for any germ evaluator.
pub fn delta_check<F>(germ: F, s: f64, u: f64, t: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<Vec<f64>>,
{
    if !(s <= u && u <= t) {
        return Err(Error::Domain(format!("need s <= u <= t, got {s}, {u}, {t}")));
    }
    let whole = germ(s, t)?;
    let left = germ(s, u)?;
    let right = germ(u, t)?;
    Ok(whole
        .iter()
        .zip(left.iter().zip(&right))
        .map(|(w, (l, r))| w - l - r)
        .collect())
}

/// One Monte Carlo cell of a germ scaling study.
#[derive(Debug, Clone, Copy)]
pub struct GermStudyRow {
    pub n: usize,
    /// Position of the (s, t) pair in the requested interval list; endpoints
    /// are snapped per mesh, so the index is the stable cell key.
    pub interval_index: usize,
    pub s: f64,
    pub t: f64,
    pub norm: McEstimate,
}

/// Germ scaling study: L^p norms across (n, interval) with per-axis fits.
#[derive(Debug, Clone)]
pub struct GermScalingStudy {
    pub rows: Vec<GermStudyRow>,
    /// Decay exponent in n at the first interval (norm ~ n^-rate).
    pub n_fit: Option<RateFit>,
    /// Fit over interval lengths at the last n; `rate` is the negated growth
    /// exponent, so a norm growing like (t-s)^e reports rate = -e.
    pub span_fit: Option<RateFit>,
}

/// Runs the Monte Carlo germ study.
///
/// Paths are sampled at level log2(fine_factor * n) per mesh size, one
/// stream per Monte Carlo path; streams are shared across cells so the
/// n-axis is coupled through common noise.
pub fn germ_scaling_study(
    field: &GermField,
    horizon: f64,
    p: f64,
    n_list: &[usize],
    intervals: &[(f64, f64)],
    paths: usize,
    fine_factor: usize,
    seed: u64,
) -> Result<GermScalingStudy> {
    if n_list.is_empty() || intervals.is_empty() {
        return Err(Error::InvalidSpec("empty study axes".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || !n_list.iter().all(|n| n.is_power_of_two()) {
        return Err(Error::InvalidSpec(
            "n_list must be strictly increasing dyadic".into(),
        ));
    }
    if fine_factor < 4 || !fine_factor.is_power_of_two() {
        return Err(Error::InvalidSpec(
            "fine_factor must be a power of two >= 4".into(),
        ));
    }
    if paths < 100 {
        return Err(Error::InvalidSpec(format!(
            "germ studies need at least 100 paths, got {paths}"
        )));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let level = (n * fine_factor).trailing_zeros();
        let grid = GridSpec::new(horizon, level, 1)?;
        // Snap interval endpoints to the fine grid.
        for (interval_index, &(s_raw, t_raw)) in intervals.iter().enumerate() {
            let i0 = ((s_raw / horizon * grid.steps() as f64).round() as usize).min(grid.steps());
            let i1 = ((t_raw / horizon * grid.steps() as f64).round() as usize).min(grid.steps());
            if i0 >= i1 {
                return Err(Error::Domain(format!(
                    "interval ({s_raw}, {t_raw}) collapses on the level-{level} grid"
                )));
            }
            let s = grid.node_time(i0);
            let t = grid.node_time(i1);
            let values: Vec<f64> = (0..paths)
                .into_par_iter()
                .map(|stream| {
                    let path = sample_path(seed, stream as u64, grid);
                    occupation_germ(field, &path, n, s, t)
                        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                })
                .collect::<Result<_>>()?;
            let norm = batch_lp(&values, p);
            rows.push(GermStudyRow {
                n,
                interval_index,
                s,
                t,
                norm,
            });
        }
    }

    let first_interval: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.interval_index == 0)
        .map(|r| (r.n as f64, r.norm.value))
        .collect();
    let n_fit = fit_if_meaningful(&first_interval);

    let last_n = *n_list.last().unwrap();
    let span_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n == last_n)
        .map(|r| (r.t - r.s, r.norm.value))
        .collect();
    let span_fit = fit_if_meaningful(&span_points);

    Ok(GermScalingStudy {
        rows,
        n_fit,
        span_fit,
    })
}

fn fit_if_meaningful(points: &[(f64, f64)]) -> Option<RateFit> {
    if points.len() < 3 || points.iter().any(|&(_, e)| e <= 1e-14) {
        return None;
    }
    rate_fit(points).ok()
}

fn batch_lp(values: &[f64], p: f64) -> McEstimate {
    let lp = |slice: &[f64]| -> f64 {
        (slice.iter().map(|v| v.powf(p)).sum::<f64>() / slice.len() as f64).powf(1.0 / p)
    };
    let value = lp(values);
    let b = 16.min(values.len());
    if b < 2 {
        return McEstimate { value, stderr: 0.0 };
    }
    let mut batch_values = Vec::with_capacity(b);
    for i in 0..b {
        let lo = i * values.len() / b;
        let hi = (i + 1) * values.len() / b;
        batch_values.push(lp(&values[lo..hi]));
    }
    let mean = batch_values.iter().sum::<f64>() / b as f64;
    let var =
        batch_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b as f64 - 1.0);
    McEstimate {
        value,
        stderr: (var / b as f64).sqrt(),
    }
}
