//! Flat dotted-key experiment configuration.
//!
//! One experiment per file; lines are `key = value`, `#` starts a comment.
//! Values are scalars, comma-separated lists, or `s:t;s:t` interval lists.
//! Unknown keys are rejected; every violated invariant produces its own
//! line-referenced error.

use emlab_core::drift::{
    DriftSpec, QExponent, SpaceKind, SpaceProfile, TimeKind, TimeProfile,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Rate,
    Picard,
    PdeCheck,
    SewingCheck,
    Simulate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Rate => "rate",
            ExperimentKind::Picard => "picard",
            ExperimentKind::PdeCheck => "pde-check",
            ExperimentKind::SewingCheck => "sewing-check",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

/// The drift field of an experiment: a proper drift spec, or the identity
/// spatial map (sewing studies only, where it serves as the exact-variance
/// quadrature oracle).
#[derive(Debug, Clone)]
pub enum FieldChoice {
    Spec(DriftSpec),
    Linear { time: TimeProfile, amplitude: f64 },
}

impl FieldChoice {
    pub fn spec(&self) -> Option<&DriftSpec> {
        match self {
            FieldChoice::Spec(s) => Some(s),
            FieldChoice::Linear { .. } => None,
        }
    }
}

/// PDE solver grid and iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct PdeSettings {
    pub space_cells: usize,
    pub time_steps: usize,
    pub tol: f64,
    pub max_iterations: usize,
    /// Spatial half-width; derived from the drift when absent.
    pub radius: Option<f64>,
}

/// Sewing study axes.
#[derive(Debug, Clone)]
pub struct SewingSettings {
    pub n_list: Vec<usize>,
    pub intervals: Vec<(f64, f64)>,
    pub fine_factor: usize,
}

/// Acceptance gates; each is evaluated only when present.
#[derive(Debug, Clone, Default)]
pub struct Gates {
    pub min_rate: Option<f64>,
    pub min_r2: Option<f64>,
    pub min_weighted_rate: Option<f64>,
    pub max_median_ratio: Option<f64>,
    pub monotone_distance: bool,
    pub monotone_gradient: bool,
    pub max_final_gradient: Option<f64>,
    pub min_n_exponent: Option<f64>,
    pub variance_target: Option<f64>,
    pub variance_rtol: Option<f64>,
}

/// A fully validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub field: FieldChoice,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub levels: Vec<u32>,
    pub ref_level: u32,
    pub mc_paths: usize,
    pub p: f64,
    pub gamma: f64,
    pub lambda_list: Vec<f64>,
    pub seed: u64,
    pub picard_iterations: usize,
    pub pde: PdeSettings,
    pub sewing: SewingSettings,
    pub gates: Gates,
    /// Default output directory; the CLI --out flag overrides it.
    pub out_dir: Option<String>,
    /// Raw key-value view for canonical echoing.
    raw: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "drift.space.kind",
    "drift.space.params",
    "drift.space.shift",
    "drift.time.kind",
    "drift.time.beta",
    "drift.amplitude",
    "drift.alpha",
    "drift.q",
    "drift.dimension",
    "horizon",
    "x0",
    "levels",
    "ref_level",
    "mc_paths",
    "p",
    "gamma",
    "lambda_list",
    "seed",
    "out_dir",
    "picard.iterations",
    "pde.grid.space",
    "pde.grid.time",
    "pde.tol",
    "pde.max_iterations",
    "pde.radius",
    "sewing.n_list",
    "sewing.intervals",
    "sewing.fine_factor",
    "gate.min_rate",
    "gate.min_r2",
    "gate.min_weighted_rate",
    "gate.max_median_ratio",
    "gate.monotone_distance",
    "gate.monotone_gradient",
    "gate.max_final_gradient",
    "gate.min_n_exponent",
    "gate.variance_target",
    "gate.variance_rtol",
];

struct Parser {
    entries: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Parser {
    fn parse(text: &str) -> Self {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {line_no}: expected `key = value`"));
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                errors.push(format!("line {line_no}: unknown key `{key}`"));
                continue;
            }
            if let Some((prev_line, _)) = entries.get(&key) {
                errors.push(format!(
                    "line {line_no}: key `{key}` already set on line {prev_line}"
                ));
                continue;
            }
            entries.insert(key, (line_no, value));
        }
        Self { entries, errors }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn err(&mut self, key: &str, msg: impl std::fmt::Display) {
        let line = self.line_of(key);
        if line > 0 {
            self.errors.push(format!("line {line}: {msg}"));
        } else {
            self.errors.push(format!("key `{key}`: {msg}"));
        }
    }

    fn f64_opt(&mut self, key: &str) -> Option<f64> {
        let v = self.get(key)?.to_string();
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.err(key, format!("`{v}` is not a finite number"));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.f64_opt(key).unwrap_or(default)
    }

    fn usize_opt(&mut self, key: &str) -> Option<usize> {
        let v = self.get(key)?.to_string();
        match v.parse::<usize>() {
            Ok(x) => Some(x),
            _ => {
                self.err(key, format!("`{v}` is not a non-negative integer"));
                None
            }
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        self.usize_opt(key).unwrap_or(default)
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.get(key) {
            None => default,
            Some("true") => true,
            Some("false") => false,
            Some(v) => {
                let v = v.to_string();
                self.err(key, format!("`{v}` is not true/false"));
                default
            }
        }
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        let Some(v) = self.get(key) else {
            return default.to_vec();
        };
        let v = v.to_string();
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.err(key, format!("`{part}` is not a finite number"));
                    return default.to_vec();
                }
            }
        }
        out
    }

    fn usize_list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        let Some(v) = self.get(key) else {
            return default.to_vec();
        };
        let v = v.to_string();
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse::<usize>() {
                Ok(x) => out.push(x),
                _ => {
                    self.err(key, format!("`{part}` is not an integer"));
                    return default.to_vec();
                }
            }
        }
        out
    }
}

/// Parses and validates a configuration, reporting one line-referenced error
/// per violated invariant.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let mut p = Parser::parse(text);

    let kind = match p.get("experiment") {
        Some("rate") => ExperimentKind::Rate,
        Some("picard") => ExperimentKind::Picard,
        Some("pde-check") => ExperimentKind::PdeCheck,
        Some("sewing-check") => ExperimentKind::SewingCheck,
        Some("simulate") => ExperimentKind::Simulate,
        Some(v) => {
            let v = v.to_string();
            p.err(
                "experiment",
                format!("`{v}` is not one of rate|picard|pde-check|sewing-check|simulate"),
            );
            ExperimentKind::Rate
        }
        None => {
            p.errors.push("key `experiment` is required".into());
            ExperimentKind::Rate
        }
    };

    let horizon = p.f64_or("horizon", 1.0);
    if horizon <= 0.0 {
        p.err("horizon", "horizon must be positive");
    }

    // Drift block.
    let space_kind_name = p.get("drift.space.kind").unwrap_or("zero").to_string();
    let params = p.f64_list("drift.space.params", &[]);
    let default_shift = match space_kind_name.as_str() {
        // Place the start point at a non-trivial point of h by default.
        "weierstrass" | "capped_power" => 0.3,
        _ => 0.0,
    };
    let shift = p.f64_or("drift.space.shift", default_shift);
    let space_kind = match space_kind_name.as_str() {
        "zero" => Some(SpaceKind::Zero),
        "constant" => {
            if params.len() == 1 {
                Some(SpaceKind::Constant { level: params[0] })
            } else {
                p.err("drift.space.params", "constant needs params = level");
                None
            }
        }
        "smooth" => {
            if params.len() == 1 {
                Some(SpaceKind::Smooth {
                    wavenumber: params[0],
                })
            } else {
                p.err("drift.space.params", "smooth needs params = wavenumber");
                None
            }
        }
        "capped_power" => {
            if params.len() == 2 {
                Some(SpaceKind::CappedPower {
                    exponent: params[0],
                    cap: params[1],
                })
            } else {
                p.err("drift.space.params", "capped_power needs params = exponent,cap");
                None
            }
        }
        "weierstrass" => {
            // Term count defaults to 12: the tail is below machine precision
            // for base 2 at the exponents in use.
            let terms = if params.len() == 3 { params[2] } else { 12.0 };
            if (params.len() == 2 || params.len() == 3) && params[0] >= 2.0 && terms >= 1.0 {
                Some(SpaceKind::Weierstrass {
                    base: params[0] as u32,
                    exponent: params[1],
                    terms: terms as u32,
                })
            } else {
                p.err(
                    "drift.space.params",
                    "weierstrass needs params = base,exponent[,terms] (base >= 2, terms >= 1)",
                );
                None
            }
        }
        "linear" => None, // handled below
        other => {
            let other = other.to_string();
            p.err(
                "drift.space.kind",
                format!(
                    "`{other}` is not one of zero|constant|smooth|capped_power|weierstrass|linear"
                ),
            );
            None
        }
    };

    let time_kind = match p.get("drift.time.kind").unwrap_or("one") {
        "one" => TimeKind::One,
        "power" => TimeKind::Power {
            beta: p.f64_or("drift.time.beta", 0.0),
        },
        other => {
            let other = other.to_string();
            p.err("drift.time.kind", format!("`{other}` is not one|power"));
            TimeKind::One
        }
    };
    let time = match TimeProfile::new(time_kind, horizon) {
        Ok(t) => t,
        Err(e) => {
            p.err("drift.time.beta", e);
            TimeProfile::new(TimeKind::One, 1.0).unwrap()
        }
    };

    let amplitude = p.f64_or("drift.amplitude", 1.0);
    let alpha = p.f64_or("drift.alpha", 0.5);
    let mut drift_pre_ok = true;
    if !(alpha > 0.0 && alpha < 1.0) {
        p.err("drift.alpha", format!("alpha = {alpha} must lie in (0, 1)"));
        drift_pre_ok = false;
    }
    let q = match p.get("drift.q") {
        None | Some("inf") => QExponent::Infinite,
        Some(v) => {
            let v = v.to_string();
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() => QExponent::Finite(x),
                _ => {
                    p.err("drift.q", format!("`{v}` is not a number or `inf`"));
                    drift_pre_ok = false;
                    QExponent::Infinite
                }
            }
        }
    };
    if let (QExponent::Finite(qv), TimeKind::Power { beta }) = (q, time_kind) {
        if beta * qv >= 1.0 {
            p.err(
                "drift.time.beta",
                format!("beta * q = {} >= 1: the time factor is not q-integrable", beta * qv),
            );
            drift_pre_ok = false;
        }
    }
    let dimension = p.usize_or("drift.dimension", 1);

    let field = if space_kind_name == "linear" {
        if kind != ExperimentKind::SewingCheck {
            p.err(
                "drift.space.kind",
                "the linear (identity) map is only valid for sewing-check",
            );
        }
        Some(FieldChoice::Linear { time, amplitude })
    } else if !drift_pre_ok {
        None
    } else {
        // Remaining invariants (q admissibility against alpha, boundedness
        // for q = inf) are enforced by the drift constructor.
        space_kind.and_then(|sk| {
            match DriftSpec::new(
                SpaceProfile::with_shift(sk, shift),
                time,
                amplitude,
                alpha,
                q,
                dimension,
            ) {
                Ok(spec) => Some(FieldChoice::Spec(spec)),
                Err(e) => {
                    p.err("drift.q", e);
                    None
                }
            }
        })
    };

    // Scheme/monte-carlo block with defaults.
    let levels = {
        let raw = p.usize_list("levels", &[4, 5, 6, 7, 8, 9]);
        let mut lv: Vec<u32> = raw.iter().map(|&l| l as u32).collect();
        let sorted = lv.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            p.err("levels", "levels must be strictly increasing");
            lv.sort_unstable();
            lv.dedup();
        }
        lv
    };
    let max_level = levels.iter().copied().max().unwrap_or(0);
    let ref_level = p.usize_or("ref_level", max_level as usize + 6) as u32;
    if matches!(kind, ExperimentKind::Rate | ExperimentKind::Picard)
        && ref_level < max_level + 6
    {
        p.err(
            "ref_level",
            format!(
                "ref_level = {ref_level} violates the separation rule: \
                 need max(levels) + 6 = {}",
                max_level + 6
            ),
        );
    }
    if ref_level > 30 {
        p.err("ref_level", "levels beyond 30 are not supported");
    }
    let mc_paths = p.usize_or("mc_paths", 1000);
    if mc_paths == 0 {
        p.err("mc_paths", "need at least one path");
    }
    if matches!(kind, ExperimentKind::Rate | ExperimentKind::SewingCheck) && mc_paths < 100 {
        p.err("mc_paths", format!("{kind:?} needs mc_paths >= 100"));
    }
    let pval = p.f64_or("p", 2.0);
    if pval < 2.0 {
        p.err("p", "p must be >= 2");
    }
    let gamma = p.f64_or("gamma", 0.05);
    if !(gamma > 0.0 && gamma < 1.0) {
        p.err("gamma", "gamma must lie in (0, 1)");
    }
    let lambda_list = p.f64_list("lambda_list", &[1.0, 4.0, 16.0, 64.0, 256.0]);
    if lambda_list.windows(2).any(|w| w[0] >= w[1]) || lambda_list.iter().any(|&l| l <= 0.0) {
        p.err("lambda_list", "lambda values must be positive and increasing");
    }
    let seed = p.usize_or("seed", 0) as u64;

    let x0 = {
        let raw = p.f64_list("x0", &[0.0]);
        if raw.len() == 1 && dimension > 1 {
            vec![raw[0]; dimension]
        } else {
            raw
        }
    };
    if x0.len() != dimension {
        p.err(
            "x0",
            format!("x0 has {} components, drift.dimension = {dimension}", x0.len()),
        );
    }

    let picard_iterations = p.usize_or("picard.iterations", 8);
    if kind == ExperimentKind::Picard && picard_iterations < 1 {
        p.err("picard.iterations", "need at least one iteration");
    }

    let pde = PdeSettings {
        space_cells: p.usize_or("pde.grid.space", 512),
        time_steps: p.usize_or("pde.grid.time", 64),
        tol: p.f64_or("pde.tol", 1e-7),
        max_iterations: p.usize_or("pde.max_iterations", 200),
        radius: p.f64_opt("pde.radius"),
    };

    let sewing = {
        let n_list = p.usize_list("sewing.n_list", &[8, 16, 32, 64, 128]);
        if n_list.windows(2).any(|w| w[0] >= w[1])
            || !n_list.iter().all(|n| n.is_power_of_two())
        {
            p.err("sewing.n_list", "n_list must be strictly increasing powers of two");
        }
        let intervals = match p.get("sewing.intervals") {
            None => vec![(0.0, horizon)],
            Some(v) => {
                let v = v.to_string();
                let mut out = Vec::new();
                for pair in v.split(';') {
                    let parts: Vec<&str> = pair.split(':').collect();
                    let parsed = (parts.len() == 2)
                        .then(|| {
                            Some((
                                parts[0].trim().parse::<f64>().ok()?,
                                parts[1].trim().parse::<f64>().ok()?,
                            ))
                        })
                        .flatten();
                    match parsed {
                        Some((s, t)) if s < t && s >= 0.0 && t <= horizon => out.push((s, t)),
                        _ => p.err(
                            "sewing.intervals",
                            format!("`{pair}` is not a valid `s:t` pair inside [0, {horizon}]"),
                        ),
                    }
                }
                out
            }
        };
        let fine_factor = p.usize_or("sewing.fine_factor", 8);
        if !fine_factor.is_power_of_two() || fine_factor < 4 {
            p.err("sewing.fine_factor", "fine_factor must be a power of two >= 4");
        }
        SewingSettings {
            n_list,
            intervals,
            fine_factor,
        }
    };

    let gates = Gates {
        min_rate: p.f64_opt("gate.min_rate"),
        min_r2: p.f64_opt("gate.min_r2"),
        min_weighted_rate: p.f64_opt("gate.min_weighted_rate"),
        max_median_ratio: p.f64_opt("gate.max_median_ratio"),
        monotone_distance: p.bool_or("gate.monotone_distance", false),
        monotone_gradient: p.bool_or("gate.monotone_gradient", false),
        max_final_gradient: p.f64_opt("gate.max_final_gradient"),
        min_n_exponent: p.f64_opt("gate.min_n_exponent"),
        variance_target: p.f64_opt("gate.variance_target"),
        variance_rtol: p.f64_opt("gate.variance_rtol"),
    };

    let out_dir = p.get("out_dir").map(|s| s.to_string());

    if !p.errors.is_empty() {
        return Err(std::mem::take(&mut p.errors));
    }

    let raw: BTreeMap<String, String> = p
        .entries
        .iter()
        .map(|(k, (_, v))| (k.clone(), v.clone()))
        .collect();

    Ok(ExperimentConfig {
        kind,
        field: field.expect("field must exist when no errors were recorded"),
        horizon,
        x0,
        levels,
        ref_level,
        mc_paths,
        p: pval,
        gamma,
        lambda_list,
        seed,
        picard_iterations,
        pde,
        sewing,
        gates,
        out_dir,
        raw,
    })
}

impl ExperimentConfig {
    /// Canonical echo of the configuration: every key that was set, in
    /// sorted order, plus the effective seed. Re-parsing the echo reproduces
    /// the run (`out_dir` is environmental and excluded).
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut seen_seed = false;
        for (k, v) in &self.raw {
            if k == "out_dir" {
                continue;
            }
            if k == "seed" {
                seen_seed = true;
                let _ = writeln!(out, "seed = {}", self.seed);
                continue;
            }
            let _ = writeln!(out, "{k} = {v}");
        }
        if !seen_seed {
            let _ = writeln!(out, "seed = {}", self.seed);
        }
        out
    }

    /// Applies the environment seed override when present.
    pub fn apply_env_seed(&mut self) -> Result<(), String> {
        match std::env::var("EMLAB_SEED") {
            Ok(v) => {
                let seed = v
                    .parse::<u64>()
                    .map_err(|_| format!("EMLAB_SEED = `{v}` is not a u64"))?;
                self.seed = seed;
                Ok(())
            }
            Err(_) => Ok(()),
        }
    }
}
