//! Experiment runners: rate studies, Picard diagnostics, PDE sweeps, sewing
//! scaling checks and trajectory dumps.
//!
//! Every runner is deterministic given (config, seed): Monte Carlo work is
//! sharded by stream id, gathered into stream-indexed slots and reduced in a
//! fixed order, so the worker count never changes any output byte.

use crate::config::{ExperimentConfig, ExperimentKind, FieldChoice};
use crate::manifest::{write_csv, CsvArtifact, Manifest};
use emlab_core::brownian::{sample_path, GridSpec};
use emlab_core::drift::{DriftSpec, QExponent, TimeKind};
use emlab_core::kolmogorov::{lambda_sweep, SpaceGrid};
use emlab_core::norms::{
    rate_fit, sup_lp_norm, weighted_holder_lp, McEstimate, PairedSample, RateFit,
};
use emlab_core::schemes::{em_polygonal, picard_sequence, reference_solution};
use emlab_core::sewing::{germ_scaling_study, GermField};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Errors surfaced by experiment runners.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error(transparent)]
    Runtime(#[from] emlab_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A finished run: the manifest (already written) and where it lives.
#[derive(Debug)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Threshold below which a metric is treated as exactly zero (machine noise).
const EXACT_EPS: f64 = 1e-12;

/// L^p mean with a 16-batch standard error over a value list.
fn batch_lp(values: &[f64], p: f64) -> McEstimate {
    let lp = |slice: &[f64]| -> f64 {
        (slice.iter().map(|v| v.powf(p)).sum::<f64>() / slice.len() as f64).powf(1.0 / p)
    };
    let value = lp(values);
    let b = 16usize.min(values.len());
    if b < 2 {
        return McEstimate { value, stderr: 0.0 };
    }
    let mut bv = Vec::with_capacity(b);
    for i in 0..b {
        bv.push(lp(&values[i * values.len() / b..(i + 1) * values.len() / b]));
    }
    let mean = bv.iter().sum::<f64>() / b as f64;
    let var = bv.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b as f64 - 1.0);
    McEstimate {
        value,
        stderr: (var / b as f64).sqrt(),
    }
}

fn require_spec(config: &ExperimentConfig) -> Result<&DriftSpec, RunError> {
    config.field.spec().ok_or_else(|| {
        RunError::Config(vec![
            "this experiment needs a proper drift spec, not the linear map".into(),
        ])
    })
}

/// Dispatches a validated configuration to its runner.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    std::fs::create_dir_all(out_dir)?;
    match config.kind {
        ExperimentKind::Rate => run_rate(config, out_dir),
        ExperimentKind::Picard => run_picard(config, out_dir),
        ExperimentKind::PdeCheck => run_pde_check(config, out_dir),
        ExperimentKind::SewingCheck => run_sewing_check(config, out_dir),
        ExperimentKind::Simulate => run_simulate(config, out_dir),
    }
}

/// Strong-rate experiment: couples each scheme level to a fine reference on
/// shared noise, measures sup-L^p errors (and the weighted-Hölder diagnostic
/// when q is finite) and fits log-log rates.
fn run_rate(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let spec = require_spec(config)?;
    let d = spec.dimension;
    let m = config.mc_paths;
    let ref_grid = GridSpec::new(config.horizon, config.ref_level, d)?;

    // One fine path per stream drives the reference and every scheme level.
    let per_stream: Vec<Vec<Vec<f64>>> = (0..m)
        .into_par_iter()
        .map(|stream| -> emlab_core::Result<Vec<Vec<f64>>> {
            let path = sample_path(config.seed, stream as u64, ref_grid);
            let reference = reference_solution(spec, &path, config.ref_level, &config.x0)?;
            let mut diffs = Vec::with_capacity(config.levels.len());
            for &level in &config.levels {
                let scheme = em_polygonal(spec, &path, 1usize << level, &config.x0)?;
                let restricted = reference.restrict_to_level(level)?;
                let diff: Vec<f64> = restricted
                    .iter()
                    .zip(scheme.states())
                    .map(|(r, s)| r - s)
                    .collect();
                diffs.push(diff);
            }
            Ok(diffs)
        })
        .collect::<emlab_core::Result<_>>()?;

    let mut metric_rows = Vec::new();
    let mut sup_points = Vec::new();
    let mut weighted_points = Vec::new();
    for (li, &level) in config.levels.iter().enumerate() {
        let n = 1usize << level;
        let grid = GridSpec::new(config.horizon, level, d)?;
        let times: Vec<f64> = (0..grid.nodes()).map(|k| grid.node_time(k)).collect();
        let diffs: Vec<Vec<f64>> = per_stream.iter().map(|s| s[li].clone()).collect();
        let sample = PairedSample::new(times, d, diffs, n)?;
        let sup = sup_lp_norm(&sample, config.p)?;
        metric_rows.push(format!(
            "{n},{},{},sup_lp,{},{}",
            fmt(config.p),
            fmt(config.gamma),
            fmt(sup.value),
            fmt(sup.stderr)
        ));
        sup_points.push((n as f64, sup.value));
        if spec.q.is_finite() {
            let wh = weighted_holder_lp(&sample, config.gamma, config.p, spec)?;
            metric_rows.push(format!(
                "{n},{},{},weighted_holder,{},{}",
                fmt(config.p),
                fmt(config.gamma),
                fmt(wh.value),
                fmt(wh.stderr)
            ));
            weighted_points.push((n as f64, wh.value));
        }
    }

    let theory = theory_rate(spec);
    let exact = sup_points.iter().all(|&(_, e)| e < EXACT_EPS);
    let fittable =
        |pts: &[(f64, f64)]| pts.len() >= 3 && pts.iter().all(|&(_, e)| e > EXACT_EPS);
    let sup_fit = if fittable(&sup_points) {
        Some(rate_fit(&sup_points)?)
    } else {
        None
    };
    let weighted_fit = if fittable(&weighted_points) {
        Some(rate_fit(&weighted_points)?)
    } else {
        None
    };

    let mut fit_rows = Vec::new();
    for (name, fit) in [("sup_lp", &sup_fit), ("weighted_holder", &weighted_fit)] {
        if let Some(f) = fit {
            fit_rows.push(format!(
                "{name},{},{},{},{},{}",
                fmt(f.rate),
                fmt(f.intercept),
                fmt(f.r_squared),
                fmt(f.stderr_slope),
                fmt(theory)
            ));
        }
    }

    write_csv(
        &out_dir.join("metrics.csv"),
        "n,p,gamma,metric,value,stderr",
        metric_rows,
    )?;
    write_csv(
        &out_dir.join("fits.csv"),
        "metric,rate,intercept,r_squared,stderr_slope,theory_rate",
        fit_rows,
    )?;

    let mut gates = Vec::new();
    if let Some(min_rate) = config.gates.min_rate {
        let ok = sup_fit.as_ref().map_or(false, |f| f.rate >= min_rate);
        gates.push(("min_rate".to_string(), ok));
    }
    if let Some(min_r2) = config.gates.min_r2 {
        let ok = sup_fit.as_ref().map_or(false, |f| f.r_squared >= min_r2);
        gates.push(("min_r2".to_string(), ok));
    }
    if let Some(min_w) = config.gates.min_weighted_rate {
        let ok = weighted_fit.as_ref().map_or(false, |f| f.rate >= min_w);
        gates.push(("min_weighted_rate".to_string(), ok));
    }

    finish(
        config,
        out_dir,
        start,
        if exact { "exact" } else { "ok" },
        vec![
            csv("metrics", "metrics.csv", "n,p,gamma,metric,value,stderr"),
            csv(
                "fits",
                "fits.csv",
                "metric,rate,intercept,r_squared,stderr_slope,theory_rate",
            ),
        ],
        gates,
        (0, m as u64),
    )
}

/// The established strong rate for this drift class: (1 + alpha)/2 for
/// q >= 2 (including q = inf), 1 - 1/q below 2.
fn theory_rate(spec: &DriftSpec) -> f64 {
    match spec.q {
        QExponent::Infinite => (1.0 + spec.alpha) / 2.0,
        QExponent::Finite(q) if q >= 2.0 => (1.0 + spec.alpha) / 2.0,
        QExponent::Finite(q) => 1.0 - 1.0 / q,
    }
}

/// Picard experiment: iterates against the coupled reference and records
/// per-iteration distances and successive differences.
fn run_picard(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let spec = require_spec(config)?;
    let d = spec.dimension;
    let m = config.mc_paths;
    let k_iter = config.picard_iterations;
    let level = *config.levels.iter().max().ok_or_else(|| {
        RunError::Config(vec!["picard needs a non-empty levels list".into()])
    })?;
    let ref_grid = GridSpec::new(config.horizon, config.ref_level, d)?;

    struct StreamStats {
        distances: Vec<f64>,
        successive: Vec<f64>,
    }

    let stats: Vec<StreamStats> = (0..m)
        .into_par_iter()
        .map(|stream| -> emlab_core::Result<StreamStats> {
            let path = sample_path(config.seed, stream as u64, ref_grid);
            let reference = reference_solution(spec, &path, config.ref_level, &config.x0)?;
            let ref_nodes = reference.restrict_to_level(level)?;
            let seq = picard_sequence(spec, &path, &config.x0, level, k_iter)?;
            let nodes = (1usize << level) + 1;
            let sup_to_ref = |states: &[f64]| -> f64 {
                let mut sup = 0.0f64;
                for k in 0..nodes {
                    let mut acc = 0.0;
                    for c in 0..d {
                        let diff = states[k * d + c] - ref_nodes[k * d + c];
                        acc += diff * diff;
                    }
                    sup = sup.max(acc.sqrt());
                }
                sup
            };
            let distances = seq.iter().map(|it| sup_to_ref(it.states())).collect();
            let successive = seq
                .windows(2)
                .map(|w| w[1].sup_distance(&w[0]))
                .collect::<emlab_core::Result<Vec<f64>>>()?;
            Ok(StreamStats {
                distances,
                successive,
            })
        })
        .collect::<emlab_core::Result<_>>()?;

    let mut rows = Vec::new();
    let mut distance_estimates = Vec::with_capacity(k_iter + 1);
    for it in 0..=k_iter {
        let vals: Vec<f64> = stats.iter().map(|s| s.distances[it]).collect();
        let est = batch_lp(&vals, config.p);
        rows.push(format!(
            "{it},distance,{},{}",
            fmt(est.value),
            fmt(est.stderr)
        ));
        distance_estimates.push(est);
    }
    for it in 1..=k_iter {
        let vals: Vec<f64> = stats.iter().map(|s| s.successive[it - 1]).collect();
        let est = batch_lp(&vals, config.p);
        rows.push(format!(
            "{it},successive_diff,{},{}",
            fmt(est.value),
            fmt(est.stderr)
        ));
    }

    // Pathwise contraction ratios pooled over iterations >= 2.
    let mut ratios = Vec::new();
    for s in &stats {
        for k in 2..s.successive.len() {
            if s.successive[k - 1] > 1e-14 {
                ratios.push(s.successive[k] / s.successive[k - 1]);
            }
        }
    }
    let median_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ratios[ratios.len() / 2]
    };
    rows.push(format!("0,ratio_median,{},0", fmt(median_ratio)));

    write_csv(&out_dir.join("picard.csv"), "iteration,metric,value,stderr", rows)?;

    let mut gates = Vec::new();
    if let Some(max_ratio) = config.gates.max_median_ratio {
        gates.push(("max_median_ratio".to_string(), median_ratio <= max_ratio));
    }
    if config.gates.monotone_distance {
        let ok = distance_estimates.windows(2).all(|w| {
            w[1].value <= w[0].value + 2.0 * (w[0].stderr + w[1].stderr) + EXACT_EPS
        });
        gates.push(("monotone_distance".to_string(), ok));
    }

    finish(
        config,
        out_dir,
        start,
        "ok",
        vec![csv("picard", "picard.csv", "iteration,metric,value,stderr")],
        gates,
        (0, m as u64),
    )
}

/// Spatial half-width for the PDE solver: the configured radius, or the
/// boundary-safety bound derived from the drift.
fn pde_radius(config: &ExperimentConfig, spec: &DriftSpec) -> f64 {
    if let Some(r) = config.pde.radius {
        return r;
    }
    let horizon = config.horizon;
    let dtau = horizon / config.pde.time_steps as f64;
    let g_max = match spec.time.kind {
        TimeKind::One => 1.0,
        TimeKind::Power { beta } => (dtau / 2.0).powf(-beta),
    };
    let sup_b = spec.amplitude.abs() * spec.h_sup() * g_max;
    4.0 * (1.0 + sup_b * horizon + horizon.sqrt()) * (1.0 + 1e-9)
}

/// Damping sweep for the Kolmogorov solution with forcing f = b.
fn run_pde_check(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let spec = require_spec(config)?;
    if spec.dimension != 1 {
        return Err(RunError::Config(vec![
            "pde-check requires drift.dimension = 1".into(),
        ]));
    }
    let grid = SpaceGrid::new(pde_radius(config, spec), config.pde.space_cells)?;
    let rows = lambda_sweep(
        spec,
        spec,
        &config.lambda_list,
        config.pde.tol,
        config.pde.max_iterations,
        grid,
        config.pde.time_steps,
    )?;

    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                fmt(r.lambda),
                fmt(r.sup_grad),
                r.iterations,
                fmt(r.residual)
            )
        })
        .collect();
    write_csv(
        &out_dir.join("pde.csv"),
        "lambda,sup_grad,iterations,residual",
        csv_rows,
    )?;

    let trivial = rows.iter().all(|r| r.sup_grad < EXACT_EPS);
    let mut gates = Vec::new();
    if config.gates.monotone_gradient {
        let ok = trivial || rows.windows(2).all(|w| w[1].sup_grad < w[0].sup_grad);
        gates.push(("monotone_gradient".to_string(), ok));
    }
    if let Some(max_grad) = config.gates.max_final_gradient {
        let ok = rows.last().map_or(false, |r| r.sup_grad < max_grad);
        gates.push(("max_final_gradient".to_string(), ok));
    }

    finish(
        config,
        out_dir,
        start,
        if trivial { "trivial" } else { "ok" },
        vec![csv("pde", "pde.csv", "lambda,sup_grad,iterations,residual")],
        gates,
        (0, 0),
    )
}

/// Occupation-germ scaling study across mesh sizes and intervals.
fn run_sewing_check(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let field = match &config.field {
        FieldChoice::Spec(spec) => GermField::from_drift(spec),
        FieldChoice::Linear { time, amplitude } => GermField::linear(*time, *amplitude),
    };
    // Higher moments need more paths; scale the budget with ceil(p/2).
    let paths = config.mc_paths * ((config.p / 2.0).ceil() as usize).max(1);
    let study = germ_scaling_study(
        &field,
        config.horizon,
        config.p,
        &config.sewing.n_list,
        &config.sewing.intervals,
        paths,
        config.sewing.fine_factor,
        config.seed,
    )?;

    let fit_exponent = study.n_fit.as_ref().map(|f: &RateFit| f.rate);
    let rows: Vec<String> = study
        .rows
        .iter()
        .map(|r| {
            format!(
                "occupation,{},{},{},{},{},{},{}",
                r.n,
                fmt(r.s),
                fmt(r.t),
                fmt(config.p),
                fmt(r.norm.value),
                fmt(r.norm.stderr),
                fit_exponent.map(fmt).unwrap_or_default()
            )
        })
        .collect();
    write_csv(
        &out_dir.join("sewing.csv"),
        "kind,n,s,t,p,norm,stderr,fit_exponent",
        rows,
    )?;

    let trivial = study.rows.iter().all(|r| r.norm.value < 1e-14);
    let mut gates = Vec::new();
    if let Some(min_exp) = config.gates.min_n_exponent {
        let ok = trivial || fit_exponent.map_or(false, |e| e >= min_exp);
        gates.push(("min_n_exponent".to_string(), ok));
    }
    if let (Some(target), Some(rtol)) = (config.gates.variance_target, config.gates.variance_rtol)
    {
        // Variance gate reads the first study cell at p = 2.
        let ok = study
            .rows
            .first()
            .map_or(false, |r| (r.norm.value * r.norm.value - target).abs() <= rtol * target);
        gates.push(("variance".to_string(), ok));
    }

    finish(
        config,
        out_dir,
        start,
        if trivial { "trivial" } else { "ok" },
        vec![csv(
            "sewing",
            "sewing.csv",
            "kind,n,s,t,p,norm,stderr,fit_exponent",
        )],
        gates,
        (0, paths as u64),
    )
}

/// Dumps one polygonal-scheme trajectory for a single stream.
fn run_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let spec = require_spec(config)?;
    let d = spec.dimension;
    let level = *config.levels.iter().max().ok_or_else(|| {
        RunError::Config(vec!["simulate needs a non-empty levels list".into()])
    })?;
    let grid = GridSpec::new(config.horizon, level, d)?;
    let path = sample_path(config.seed, 0, grid);
    let traj = em_polygonal(spec, &path, 1usize << level, &config.x0)?;

    let header = {
        let mut h = String::from("t");
        for c in 1..=d {
            h.push_str(&format!(",X_{c}"));
        }
        h
    };
    let rows: Vec<String> = (0..grid.nodes())
        .map(|k| {
            let mut row = fmt(grid.node_time(k));
            for c in 0..d {
                row.push(',');
                row.push_str(&fmt(traj.node(k)[c]));
            }
            row
        })
        .collect();
    write_csv(&out_dir.join("trajectory.csv"), &header, rows)?;

    finish(
        config,
        out_dir,
        start,
        "ok",
        vec![csv("trajectory", "trajectory.csv", &header)],
        Vec::new(),
        (0, 1),
    )
}

fn csv(name: &str, file: &str, schema: &str) -> CsvArtifact {
    CsvArtifact {
        name: name.into(),
        file: file.into(),
        schema: schema.into(),
    }
}

fn finish(
    config: &ExperimentConfig,
    out_dir: &Path,
    start: Instant,
    status: &str,
    csvs: Vec<CsvArtifact>,
    gates: Vec<(String, bool)>,
    streams: (u64, u64),
) -> Result<RunOutput, RunError> {
    let manifest = Manifest {
        experiment: config.kind.as_str().to_string(),
        seed: config.seed,
        streams,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status: status.to_string(),
        csvs,
        gates,
        config_echo: config.echo(),
    };
    manifest.write(out_dir)?;
    Ok(RunOutput {
        manifest,
        out_dir: out_dir.to_path_buf(),
    })
}
