//! Euler-Maruyama schemes and Picard iteration, all driven by one coupled
//! Brownian path.
//!
//! The polygonal scheme freezes the state at the left mesh point but
//! integrates the drift's time factor exactly over each step; the classical
//! scheme freezes both. For separable drift the per-step time integral has a
//! closed form, so no quadrature error contaminates rate measurements.

use crate::brownian::{BrownianPath, GridSpec};
use crate::drift::{DriftSpec, TimeKind};
use crate::error::{Error, Result};

/// Which construction produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeTag {
    Polygonal,
    Classical,
    Reference,
    Picard(usize),
}

/// How the classical scheme treats g(0) = inf on its first step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstStepRule {
    /// Surface the frozen-time singularity as an error (default behavior).
    Reject,
    /// Replace g(0) by the step average (n/T) int_0^(T/n) g.
    StepAverage,
}

/// A solution trajectory sampled on a uniform dyadic grid.
#[derive(Debug, Clone)]
pub struct DiscretePath {
    grid: GridSpec,
    /// Flat node-major states: states[k * d + c].
    states: Vec<f64>,
    pub tag: SchemeTag,
    pub x0: Vec<f64>,
}

impl DiscretePath {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn node(&self, k: usize) -> &[f64] {
        let d = self.grid.dimension;
        &self.states[k * d..(k + 1) * d]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Values restricted to the nodes of a coarser dyadic level.
    pub fn restrict_to_level(&self, level: u32) -> Result<Vec<f64>> {
        if level > self.grid.level {
            return Err(Error::TooCoarse(format!(
                "cannot restrict level {} to finer level {level}",
                self.grid.level
            )));
        }
        let d = self.grid.dimension;
        let stride = 1usize << (self.grid.level - level);
        let nodes = (1usize << level) + 1;
        let mut out = Vec::with_capacity(nodes * d);
        for k in 0..nodes {
            out.extend_from_slice(self.node(k * stride));
        }
        Ok(out)
    }

    /// Pathwise sup over nodes of the Euclidean distance to another path on
    /// the same grid.
    pub fn sup_distance(&self, other: &DiscretePath) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("sup_distance".into()));
        }
        let d = self.grid.dimension;
        let mut sup = 0.0f64;
        for k in 0..self.grid.nodes() {
            let mut acc = 0.0;
            for c in 0..d {
                let diff = self.states[k * d + c] - other.states[k * d + c];
                acc += diff * diff;
            }
            sup = sup.max(acc.sqrt());
        }
        Ok(sup)
    }
}

fn check_scheme_inputs(
    spec: &DriftSpec,
    path: &BrownianPath,
    n: usize,
    x0: &[f64],
) -> Result<(u32, GridSpec)> {
    if x0.len() != spec.dimension || path.grid().dimension != spec.dimension {
        return Err(Error::GridMismatch(format!(
            "dimensions disagree: x0 = {}, path = {}, spec = {}",
            x0.len(),
            path.grid().dimension,
            spec.dimension
        )));
    }
    if (spec.horizon() - path.grid().horizon).abs() > 1e-12 * spec.horizon() {
        return Err(Error::GridMismatch(format!(
            "horizons disagree: spec {} vs path {}",
            spec.horizon(),
            path.grid().horizon
        )));
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidSpec(format!("step count {n} is not dyadic")));
    }
    let level = n.trailing_zeros();
    if level > path.level() {
        return Err(Error::TooCoarse(format!(
            "scheme needs path level >= {level}, path has {}",
            path.level()
        )));
    }
    let grid = GridSpec::new(path.grid().horizon, level, spec.dimension)?;
    Ok((level, grid))
}

/// Polygonal Euler-Maruyama: state frozen at the left node, drift time factor
/// integrated exactly over each step.
pub fn em_polygonal(
    spec: &DriftSpec,
    path: &BrownianPath,
    n: usize,
    x0: &[f64],
) -> Result<DiscretePath> {
    let (level, grid) = check_scheme_inputs(spec, path, n, x0)?;
    let d = spec.dimension;
    let stride = 1usize << (path.level() - level);
    let mut states = vec![0.0; grid.nodes() * d];
    states[..d].copy_from_slice(x0);
    // The drift accumulator is kept apart from the noise so that X_k is
    // formed as x0 + D_k + B_k; for zero drift the output is then the
    // Brownian path shifted by x0 exactly.
    let mut drift_acc = vec![0.0; d];
    for k in 0..grid.steps() {
        let t0 = grid.node_time(k);
        let t1 = grid.node_time(k + 1);
        let gi = spec.drift_time_integral(t0, t1)?;
        let b1 = path.node((k + 1) * stride);
        for c in 0..d {
            drift_acc[c] += gi * spec.space.eval(states[k * d + c]);
            states[(k + 1) * d + c] = x0[c] + drift_acc[c] + b1[c];
        }
    }
    Ok(DiscretePath {
        grid,
        states,
        tag: SchemeTag::Polygonal,
        x0: x0.to_vec(),
    })
}

/// Classical Euler-Maruyama: both time and state frozen at the left node.
pub fn em_classical(
    spec: &DriftSpec,
    path: &BrownianPath,
    n: usize,
    x0: &[f64],
    first_step: FirstStepRule,
) -> Result<DiscretePath> {
    let (level, grid) = check_scheme_inputs(spec, path, n, x0)?;
    let d = spec.dimension;
    let stride = 1usize << (path.level() - level);
    let mut states = vec![0.0; grid.nodes() * d];
    states[..d].copy_from_slice(x0);
    let mut drift_acc = vec![0.0; d];
    let singular_start = matches!(spec.time.kind, TimeKind::Power { beta } if beta > 0.0);
    for k in 0..grid.steps() {
        let t0 = grid.node_time(k);
        let t1 = grid.node_time(k + 1);
        let dt = t1 - t0;
        let coeff = if k == 0 && singular_start {
            match first_step {
                FirstStepRule::Reject => {
                    return Err(Error::Domain(
                        "classical scheme evaluates g(0) = inf on the first step; \
                         enable the step-average rule or use the polygonal scheme"
                            .into(),
                    ))
                }
                FirstStepRule::StepAverage => spec.drift_time_integral(t0, t1)?,
            }
        } else {
            spec.amplitude * spec.time.eval(t0)? * dt
        };
        let b1 = path.node((k + 1) * stride);
        for c in 0..d {
            drift_acc[c] += coeff * spec.space.eval(states[k * d + c]);
            states[(k + 1) * d + c] = x0[c] + drift_acc[c] + b1[c];
        }
    }
    Ok(DiscretePath {
        grid,
        states,
        tag: SchemeTag::Classical,
        x0: x0.to_vec(),
    })
}

/// Fine-grid proxy for the strong solution: the polygonal scheme at
/// n = 2^ref_level on the (bridge-refined) path.
pub fn reference_solution(
    spec: &DriftSpec,
    path: &BrownianPath,
    ref_level: u32,
    x0: &[f64],
) -> Result<DiscretePath> {
    if ref_level > path.level() {
        return Err(Error::TooCoarse(format!(
            "reference level {ref_level} exceeds path level {}",
            path.level()
        )));
    }
    let mut out = em_polygonal(spec, path, 1usize << ref_level, x0)?;
    out.tag = SchemeTag::Reference;
    Ok(out)
}

/// The zeroth Picard iterate x0 + B on the given dyadic level.
pub fn picard_initial(path: &BrownianPath, x0: &[f64], level: u32) -> Result<DiscretePath> {
    if level > path.level() {
        return Err(Error::TooCoarse(format!(
            "picard level {level} exceeds path level {}",
            path.level()
        )));
    }
    let d = path.grid().dimension;
    if x0.len() != d {
        return Err(Error::GridMismatch("x0 dimension".into()));
    }
    let grid = GridSpec::new(path.grid().horizon, level, d)?;
    let stride = 1usize << (path.level() - level);
    let mut states = vec![0.0; grid.nodes() * d];
    for k in 0..grid.nodes() {
        let b = path.node(k * stride);
        for c in 0..d {
            states[k * d + c] = x0[c] + b[c];
        }
    }
    Ok(DiscretePath {
        grid,
        states,
        tag: SchemeTag::Picard(0),
        x0: x0.to_vec(),
    })
}

/// One Picard step: integrates the drift along the previous iterate (state
/// frozen at left nodes, time factor exact) and re-adds the noise.
pub fn picard_step(
    spec: &DriftSpec,
    path: &BrownianPath,
    prev: &DiscretePath,
) -> Result<DiscretePath> {
    let grid = *prev.grid();
    if grid.dimension != spec.dimension
        || (grid.horizon - spec.horizon()).abs() > 1e-12 * grid.horizon
    {
        return Err(Error::GridMismatch("picard_step spec/grid".into()));
    }
    if path.level() < grid.level || path.grid().dimension != grid.dimension {
        return Err(Error::GridMismatch("picard_step path/grid".into()));
    }
    let d = grid.dimension;
    let stride = 1usize << (path.level() - grid.level);
    let mut states = vec![0.0; grid.nodes() * d];
    states[..d].copy_from_slice(&prev.x0);
    let mut drift_acc = vec![0.0; d];
    for k in 0..grid.steps() {
        let t0 = grid.node_time(k);
        let t1 = grid.node_time(k + 1);
        let gi = spec.drift_time_integral(t0, t1)?;
        let prev_state = prev.node(k);
        for c in 0..d {
            drift_acc[c] += gi * spec.space.eval(prev_state[c]);
        }
        let b = path.node((k + 1) * stride);
        for c in 0..d {
            states[(k + 1) * d + c] = prev.x0[c] + drift_acc[c] + b[c];
        }
    }
    let index = match prev.tag {
        SchemeTag::Picard(i) => i + 1,
        _ => 1,
    };
    Ok(DiscretePath {
        grid,
        states,
        tag: SchemeTag::Picard(index),
        x0: prev.x0.clone(),
    })
}

/// The Picard sequence [X^(0), ..., X^(K)] on one grid.
pub fn picard_sequence(
    spec: &DriftSpec,
    path: &BrownianPath,
    x0: &[f64],
    level: u32,
    iterations: usize,
) -> Result<Vec<DiscretePath>> {
    let mut seq = Vec::with_capacity(iterations + 1);
    seq.push(picard_initial(path, x0, level)?);
    for _ in 0..iterations {
        let next = picard_step(spec, path, seq.last().unwrap())?;
        seq.push(next);
    }
    Ok(seq)
}
