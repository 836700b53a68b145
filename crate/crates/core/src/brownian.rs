//! Seedable Brownian paths on dyadic grids with bridge refinement.
//!
//! Paths are built level by level: the endpoint first, then midpoints via the
//! Brownian-bridge law, each draw keyed by (seed, stream, level, position,
//! component). Two consequences:
//!
//! * a path at level L' restricted to level-L nodes is bit-identical to the
//!   path sampled directly at level L, for any L < L';
//! * refining a path is equivalent to sampling it at the finer level, so a
//!   coarse scheme and a fine reference genuinely share one driving noise.

use crate::error::{Error, Result};
use crate::rng;

/// A uniform dyadic grid on [0, T] with 2^level steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub level: u32,
    pub dimension: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, level: u32, dimension: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        if level > 30 {
            return Err(Error::InvalidSpec(format!(
                "level {level} too deep (max 30)"
            )));
        }
        Ok(Self {
            horizon,
            level,
            dimension,
        })
    }

    /// Number of steps, n = 2^level.
    pub fn steps(&self) -> usize {
        1usize << self.level
    }

    /// Number of nodes, 2^level + 1.
    pub fn nodes(&self) -> usize {
        self.steps() + 1
    }

    /// Step width T / 2^level.
    pub fn step_width(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    /// Node time t_k = k T / 2^level; computed identically everywhere.
    pub fn node_time(&self, k: usize) -> f64 {
        k as f64 * self.horizon / self.steps() as f64
    }

    /// Maps a time to its node index, or errors if t is not a node.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let x = t / self.horizon * self.steps() as f64;
        let k = x.round();
        if k < 0.0 || k > self.steps() as f64 || (x - k).abs() > 1e-9 {
            return Err(Error::NonNodeQuery {
                t,
                level: self.level,
            });
        }
        Ok(k as usize)
    }
}

/// The left mesh point kappa_n(t) = floor(n t / T) T / n, clamped to <= t,
/// with kappa_n(T) = T.
pub fn kappa(n: usize, t: f64, horizon: f64) -> f64 {
    debug_assert!(n >= 1 && t >= 0.0 && t <= horizon * (1.0 + 1e-12));
    let x = n as f64 * t / horizon;
    let mut k = x.floor();
    // Snap to the next integer when t sits on a mesh point up to roundoff.
    if x - k > 1.0 - 1e-9 {
        k += 1.0;
    }
    let v = k * horizon / n as f64;
    if v > t {
        t
    } else {
        v
    }
}

/// A Brownian trajectory stored at every node of its dyadic grid.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    grid: GridSpec,
    /// Flat node-major values: values[k * d + c] is component c at node k.
    values: Vec<f64>,
    seed: u64,
    stream_id: u64,
}

impl BrownianPath {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn level(&self) -> u32 {
        self.grid.level
    }

    /// Value (d-vector) at node index k.
    pub fn node(&self, k: usize) -> &[f64] {
        let d = self.grid.dimension;
        &self.values[k * d..(k + 1) * d]
    }

    /// Value at a node time; errors on non-node queries (no interpolation).
    pub fn value_at(&self, t: f64) -> Result<&[f64]> {
        Ok(self.node(self.grid.node_index(t)?))
    }

    /// Increment B_t - B_s between two node times.
    pub fn increment(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let a = self.grid.node_index(s)?;
        let b = self.grid.node_index(t)?;
        if a > b {
            return Err(Error::Domain(format!("need s <= t, got {s} > {t}")));
        }
        Ok(self
            .node(b)
            .iter()
            .zip(self.node(a))
            .map(|(x, y)| x - y)
            .collect())
    }
}

/// Bridge midpoint draw for (level, position, component).
#[inline]
fn bridge_normal(seed: u64, stream_id: u64, level: u32, position: usize, component: usize) -> f64 {
    rng::standard_normal(
        seed,
        stream_id,
        [level as u64, position as u64, component as u64],
    )
}

/// Samples a Brownian path on the given grid.
///
/// Construction is hierarchical: the endpoint is drawn at level 0, then each
/// level inserts bridge midpoints, so paths at different levels from the same
/// (seed, stream_id) nest exactly. The resulting node increments are i.i.d.
/// N(0, h I_d).
pub fn sample_path(seed: u64, stream_id: u64, grid: GridSpec) -> BrownianPath {
    let d = grid.dimension;
    let nodes = grid.nodes();
    let mut values = vec![0.0; nodes * d];

    // Level 0: endpoint B_T ~ N(0, T I_d).
    let sqrt_t = grid.horizon.sqrt();
    let last = (nodes - 1) * d;
    for c in 0..d {
        values[last + c] = sqrt_t * bridge_normal(seed, stream_id, 0, 0, c);
    }

    fill_bridge_levels(&mut values, &grid, seed, stream_id, 1);

    BrownianPath {
        grid,
        values,
        seed,
        stream_id,
    }
}

/// Fills midpoints for levels from_level..=grid.level into `values`, which
/// already holds the coarser nodes at their final (stride) positions.
fn fill_bridge_levels(
    values: &mut [f64],
    grid: &GridSpec,
    seed: u64,
    stream_id: u64,
    from_level: u32,
) {
    let d = grid.dimension;
    for level in from_level..=grid.level {
        // Parent spacing at this level, in node indices of the final grid.
        let stride = 1usize << (grid.level - level + 1);
        let half = stride / 2;
        let parent_dt = grid.horizon / (1u64 << (level - 1)) as f64;
        let sd = (parent_dt / 4.0).sqrt();
        let pairs = 1usize << (level - 1);
        for j in 0..pairs {
            let left = j * stride;
            let mid = left + half;
            let right = left + stride;
            for c in 0..d {
                let noise = bridge_normal(seed, stream_id, level, j, c);
                values[mid * d + c] =
                    0.5 * (values[left * d + c] + values[right * d + c]) + sd * noise;
            }
        }
    }
}

/// Refines a path to a finer dyadic level via the Brownian-bridge law.
///
/// Existing node values are preserved exactly; the result is bit-identical to
/// sampling directly at the target level.
pub fn refine_bridge(path: &BrownianPath, target_level: u32) -> Result<BrownianPath> {
    if target_level < path.grid.level {
        return Err(Error::InvalidSpec(format!(
            "target level {target_level} below path level {}",
            path.grid.level
        )));
    }
    if target_level == path.grid.level {
        return Ok(path.clone());
    }
    let grid = GridSpec::new(path.grid.horizon, target_level, path.grid.dimension)?;
    let d = grid.dimension;
    let mut values = vec![0.0; grid.nodes() * d];
    let stride = 1usize << (target_level - path.grid.level);
    for k in 0..path.grid.nodes() {
        let src = &path.values[k * d..(k + 1) * d];
        values[k * stride * d..(k * stride + 1) * d].copy_from_slice(src);
    }
    fill_bridge_levels(
        &mut values,
        &grid,
        path.seed,
        path.stream_id,
        path.grid.level + 1,
    );
    Ok(BrownianPath {
        grid,
        values,
        seed: path.seed,
        stream_id: path.stream_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_path_has_two_nodes_and_starts_at_zero() {
        let grid = GridSpec::new(1.0, 0, 1).unwrap();
        let p = sample_path(42, 0, grid);
        assert_eq!(p.grid().nodes(), 2);
        assert_eq!(p.node(0), &[0.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let grid = GridSpec::new(1.0, 4, 2).unwrap();
        let a = sample_path(7, 3, grid);
        let b = sample_path(7, 3, grid);
        assert_eq!(a.values, b.values);
        let c = sample_path(7, 4, grid);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn refinement_preserves_existing_nodes_bitwise() {
        let grid = GridSpec::new(1.0, 2, 1).unwrap();
        let coarse = sample_path(11, 5, grid);
        let fine = refine_bridge(&coarse, 3).unwrap();
        for k in 0..coarse.grid().nodes() {
            assert_eq!(coarse.node(k), fine.node(2 * k));
        }
        // No-op refinement returns an identical path.
        let same = refine_bridge(&coarse, 2).unwrap();
        assert_eq!(coarse.values, same.values);
    }

    #[test]
    fn direct_sampling_equals_refinement() {
        let coarse_grid = GridSpec::new(2.0, 3, 2).unwrap();
        let fine_grid = GridSpec::new(2.0, 6, 2).unwrap();
        let coarse = sample_path(9, 1, coarse_grid);
        let refined = refine_bridge(&coarse, 6).unwrap();
        let direct = sample_path(9, 1, fine_grid);
        assert_eq!(refined.values, direct.values);
    }

    #[test]
    fn kappa_floor_values() {
        assert_eq!(kappa(4, 0.3, 1.0), 0.25);
        assert_eq!(kappa(4, 0.0, 1.0), 0.0);
        assert_eq!(kappa(4, 0.999, 1.0), 0.75);
        assert_eq!(kappa(4, 1.0, 1.0), 1.0);
        // Exact mesh points map to themselves despite float noise.
        for k in 0..=10 {
            let t = k as f64 * 0.7 / 10.0;
            let kt = kappa(10, t, 0.7);
            assert!((kt - t).abs() < 1e-15, "kappa({t}) = {kt}");
        }
    }

    #[test]
    fn kappa_is_idempotent_and_left_of_t() {
        for i in 1..200 {
            let t = i as f64 / 200.0;
            let k1 = kappa(8, t, 1.0);
            assert!(k1 <= t && t - k1 < 1.0 / 8.0 + 1e-12);
            assert_eq!(kappa(8, k1, 1.0), k1);
        }
    }

    #[test]
    fn node_queries() {
        let grid = GridSpec::new(1.0, 3, 2).unwrap();
        let p = sample_path(1, 1, grid);
        assert_eq!(p.value_at(0.0).unwrap(), &[0.0, 0.0]);
        assert_eq!(p.increment(0.5, 0.5).unwrap(), vec![0.0, 0.0]);
        let full = p.increment(0.0, 1.0).unwrap();
        assert_eq!(&full[..], p.value_at(1.0).unwrap());
        assert!(matches!(
            p.value_at(0.3),
            Err(Error::NonNodeQuery { .. })
        ));
    }

    #[test]
    fn endpoint_variance_is_t() {
        // Monte Carlo moment oracle: Var(B_1) over many streams.
        let grid = GridSpec::new(1.0, 4, 1).unwrap();
        let m = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for s in 0..m {
            let p = sample_path(123, s as u64, grid);
            let b1 = p.node(grid.nodes() - 1)[0];
            sum += b1;
            sumsq += b1 * b1;
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        assert!(var > 0.97 && var < 1.03, "var = {var}");
    }

    #[test]
    fn bridge_midpoint_conditional_variance() {
        // Midpoint of (0, 1) given endpoints has variance 1/4.
        let grid = GridSpec::new(1.0, 0, 1).unwrap();
        let m = 100_000;
        let mut sumsq = 0.0;
        for s in 0..m {
            let p = sample_path(77, s as u64, grid);
            let fine = refine_bridge(&p, 1).unwrap();
            let resid = fine.node(1)[0] - 0.5 * (p.node(0)[0] + p.node(1)[0]);
            sumsq += resid * resid;
        }
        let var = sumsq / m as f64;
        assert!((var - 0.25).abs() < 0.01, "var = {var}");
    }

    #[test]
    fn increment_moments_and_independence() {
        let grid = GridSpec::new(1.0, 2, 1).unwrap();
        let m = 20_000;
        let h = grid.step_width();
        let mut mean = [0.0; 4];
        let mut var = [0.0; 4];
        let mut cross = 0.0;
        for s in 0..m {
            let p = sample_path(5, s as u64, grid);
            let mut incs = [0.0; 4];
            for k in 0..4 {
                incs[k] = p.node(k + 1)[0] - p.node(k)[0];
                mean[k] += incs[k];
                var[k] += incs[k] * incs[k];
            }
            cross += incs[0] * incs[3];
        }
        let se_mean = (h / m as f64).sqrt();
        for k in 0..4 {
            let mk = mean[k] / m as f64;
            let vk = var[k] / m as f64 - mk * mk;
            assert!(mk.abs() < 3.0 * se_mean, "mean[{k}] = {mk}");
            let se_var = h * (2.0 / m as f64).sqrt();
            assert!((vk - h).abs() < 3.0 * se_var, "var[{k}] = {vk}");
        }
        // Disjoint increments are uncorrelated.
        let corr = cross / m as f64 / h;
        assert!(corr.abs() < 3.0 / (m as f64).sqrt(), "corr = {corr}");
    }
}
