//! Flat `key = value` configuration with dotted namespaces.
//!
//! Every key has a documented default and an allowed range checked at load.
//! Unknown keys, blocks and duplicates are errors. [`Config::snapshot`]
//! writes every key in table order, so a snapshot read back yields the same
//! configuration.

use std::path::Path;

use edgesplat_core::edge::StrengthMode;
use edgesplat_core::slam::SlamParams;

use crate::error::{Error, Result};
use crate::formats::csv::format_real;
use crate::formats::{kv, read_string};

/// Simulator settings used by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub contrast_threshold: f64,
    pub frame_dt_us: u64,
    /// Noise events per ideal event; mutually exclusive with `noise_rate`.
    pub noise_ratio: f64,
    /// Noise events per pixel per second.
    pub noise_rate: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { contrast_threshold: 0.2, frame_dt_us: 1000, noise_ratio: 0.0, noise_rate: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub association_tolerance_us: u64,
    /// Similarity instead of rigid alignment; for diagnostics only.
    pub scale_alignment: bool,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            association_tolerance_us: edgesplat_core::metrics::DEFAULT_ASSOCIATION_TOLERANCE_US,
            scale_alignment: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Config {
    pub seed: u64,
    pub slam: SlamParams,
    pub sim: SimParams,
    pub eval: EvalParams,
}

type Setter = fn(&mut Config, &str) -> std::result::Result<(), String>;

/// One configuration key.
pub struct Field {
    pub key: &'static str,
    /// Allowed values, as shown in error messages and the format docs.
    pub range: &'static str,
    pub doc: &'static str,
    get: fn(&Config) -> String,
    set: Setter,
}

fn parse_real(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("expected a finite number, got '{v}'"))
}

fn parse_uint(v: &str) -> std::result::Result<u64, String> {
    v.parse::<u64>().map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn strength_name(s: StrengthMode) -> String {
    match s {
        StrengthMode::PatchContrast => "patch_contrast".into(),
        StrengthMode::TemporalDifference => "temporal_difference".into(),
    }
}

fn parse_strength(v: &str) -> std::result::Result<StrengthMode, String> {
    match v {
        "patch_contrast" => Ok(StrengthMode::PatchContrast),
        "temporal_difference" => Ok(StrengthMode::TemporalDifference),
        _ => Err(format!("expected patch_contrast or temporal_difference, got '{v}'")),
    }
}

macro_rules! real {
    ($key:literal, $range:literal, |$x:ident| $ok:expr, $doc:literal, |$c:ident| $place:expr) => {
        Field {
            key: $key,
            range: $range,
            doc: $doc,
            get: |$c: &Config| format_real($place),
            set: |$c: &mut Config, v: &str| {
                let $x = parse_real(v)?;
                if !($ok) {
                    return Err(format!("{} is out of range {}", v, $range));
                }
                $place = $x;
                Ok(())
            },
        }
    };
}

macro_rules! uint {
    ($key:literal, $ty:ty, $range:literal, |$x:ident| $ok:expr, $doc:literal, |$c:ident| $place:expr) => {
        Field {
            key: $key,
            range: $range,
            doc: $doc,
            get: |$c: &Config| format!("{}", $place),
            set: |$c: &mut Config, v: &str| {
                let $x = parse_uint(v)?;
                if !($ok) {
                    return Err(format!("{} is out of range {}", v, $range));
                }
                $place = <$ty>::try_from($x).map_err(|_| format!("{v} is too large"))?;
                Ok(())
            },
        }
    };
}

const MAX_SIGMA: f64 = 64.0;

pub static FIELDS: &[Field] = &[
    uint!("seed", u64, "any u64", |_x| true, "Seed of every random choice; `--seed` overrides it.", |c| c.seed),
    // Edge detection.
    uint!(
        "detector.window",
        usize,
        "[2, 64]",
        |x| (2..=64).contains(&x),
        "Consecutive event maps per detection.",
        |c| c.slam.detector.window
    ),
    uint!("detector.patch_size", usize, "[2, 1024]", |x| (2..=1024).contains(&x), "Patch side in pixels.", |c| c
        .slam
        .detector
        .patch_size),
    real!(
        "detector.overlap",
        "[0, 1)",
        |x| (0.0..1.0).contains(&x),
        "Fractional overlap of neighboring patches.",
        |c| c.slam.detector.overlap
    ),
    real!(
        "detector.sigma",
        "(0, 64]",
        |x| x > 0.0 && x <= MAX_SIGMA,
        "Gaussian window of the temporal difference, pixels.",
        |c| c.slam.detector.sigma
    ),
    real!(
        "detector.tau_percentile",
        "(0, 100)",
        |x| x > 0.0 && x < 100.0,
        "Percentile of patch contrasts used as the edge threshold.",
        |c| c.slam.detector.tau_percentile
    ),
    real!(
        "detector.smooth_sigma",
        "(0, 64]",
        |x| x > 0.0 && x <= MAX_SIGMA,
        "Smoothing of the raw edge map, pixels.",
        |c| c.slam.detector.smooth_sigma
    ),
    real!(
        "detector.keep_percentile",
        "[0, 100]",
        |x| (0.0..=100.0).contains(&x),
        "Percentile of nonzero smoothed strengths kept.",
        |c| c.slam.detector.keep_percentile
    ),
    uint!(
        "detector.closing_radius",
        usize,
        "[0, 64]",
        |x| x <= 64,
        "Disc radius of the morphological closing, pixels.",
        |c| c.slam.detector.closing_radius
    ),
    Field {
        key: "detector.strength",
        range: "patch_contrast | temporal_difference",
        doc: "What a classified patch writes into the raw edge map.",
        get: |c| strength_name(c.slam.detector.strength),
        set: |c, v| {
            c.slam.detector.strength = parse_strength(v)?;
            Ok(())
        },
    },
    // Initialization.
    real!("init.confidence_min", "(0, 1]", |x| x > 0.0 && x <= 1.0, "Edge confidence needed for an edge point.", |c| c
        .slam
        .init
        .confidence_min),
    uint!("init.knn", usize, "[2, 256]", |x| (2..=256).contains(&x), "Neighbors used for edge normals.", |c| c
        .slam
        .init
        .knn),
    uint!(
        "init.tile_size",
        usize,
        "[2, 4096]",
        |x| (2..=4096).contains(&x),
        "Side of the top-level fitting tiles, pixels.",
        |c| c.slam.init.tiles.tile_size
    ),
    real!(
        "init.angle_threshold",
        "(0, 1.5707963267948966]",
        |x| x > 0.0 && x <= core::f64::consts::FRAC_PI_2,
        "Normal spread (radians) above which a tile is split.",
        |c| c.slam.init.tiles.angle_threshold
    ),
    uint!("init.max_depth", usize, "[0, 16]", |x| x <= 16, "Maximum tile subdivision depth.", |c| c
        .slam
        .init
        .tiles
        .max_depth),
    uint!(
        "init.n_total",
        usize,
        "[1, 1000000]",
        |x| (1..=1_000_000).contains(&x),
        "Total number of initial Gaussians.",
        |c| c.slam.init.n_total
    ),
    real!("init.r_edge", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Fraction of the budget placed along edges.", |c| c
        .slam
        .init
        .r_edge),
    real!("init.d_min", "(0, 1000)", |x| x > 0.0 && x < 1000.0, "Nearest sampled depth, meters.", |c| c
        .slam
        .init
        .d_min),
    real!(
        "init.d_max",
        "(0, 1000]",
        |x| x > 0.0 && x <= 1000.0,
        "Farthest sampled depth, meters; must exceed init.d_min.",
        |c| c.slam.init.d_max
    ),
    real!("init.opacity", "(0, 1)", |x| x > 0.0 && x < 1.0, "Initial opacity.", |c| c.slam.init.opacity),
    real!("init.color", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Initial gray value.", |c| c.slam.init.color),
    real!(
        "init.base_scale_px",
        "(0, 64]",
        |x| x > 0.0 && x <= 64.0,
        "Projected standard deviation of new Gaussians, pixels.",
        |c| c.slam.init.base_scale_px
    ),
    // Loss.
    real!(
        "loss.beta",
        "[0, 1000]",
        |x| (0.0..=1000.0).contains(&x),
        "Extra weight of edge pixels in the event loss.",
        |c| c.slam.supervision.weights.beta
    ),
    real!("loss.lambda", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Weight of the DSSIM term.", |c| c
        .slam
        .supervision
        .weights
        .lambda),
    // Optimization loop.
    uint!(
        "loop.chunk_duration_us",
        u64,
        "[1000, 10000000]",
        |x| (1000..=10_000_000).contains(&x),
        "Chunk length, microseconds.",
        |c| c.slam.chunk_duration
    ),
    uint!(
        "loop.window",
        usize,
        "[1, 64]",
        |x| (1..=64).contains(&x),
        "Chunks refined jointly by bundle adjustment.",
        |c| c.slam.window
    ),
    uint!(
        "loop.n_samples",
        usize,
        "[1, 256]",
        |x| (1..=256).contains(&x),
        "Sampled intervals per loss evaluation.",
        |c| c.slam.supervision.n_samples
    ),
    uint!("loop.tracking_iterations", usize, "[0, 100000]", |x| x <= 100_000, "Tracking iterations per chunk.", |c| c
        .slam
        .tracking_iterations),
    uint!(
        "loop.mapping_iterations",
        usize,
        "[0, 100000]",
        |x| x <= 100_000,
        "Bundle adjustment iterations per chunk.",
        |c| c.slam.mapping_iterations
    ),
    uint!(
        "loop.dt_min_us",
        u64,
        "[1, 10000000]",
        |x| (1..=10_000_000).contains(&x),
        "Shortest sampled interval, microseconds.",
        |c| c.slam.supervision.dt_min
    ),
    uint!(
        "loop.dt_max_us",
        u64,
        "[1, 10000000]",
        |x| (1..=10_000_000).contains(&x),
        "Longest sampled interval, microseconds; at least loop.dt_min_us.",
        |c| c.slam.supervision.dt_max
    ),
    real!("loop.contrast_threshold", "(0, 10]", |x| x > 0.0 && x <= 10.0, "Log-brightness step of one event.", |c| c
        .slam
        .supervision
        .contrast_threshold),
    real!("loop.background", "(0, 1]", |x| x > 0.0 && x <= 1.0, "Brightness behind all Gaussians.", |c| c
        .slam
        .supervision
        .background),
    real!("loop.divergence_factor", "(1, 1e6]", |x| x > 1.0 && x <= 1e6, "Loss growth that aborts tracking.", |c| c
        .slam
        .divergence_factor),
    real!(
        "loop.lr_decay",
        "(0, 1]",
        |x| x > 0.0 && x <= 1.0,
        "Learning-rate fraction reached at the end of each run.",
        |c| c.slam.lr_decay
    ),
    real!(
        "lr.pose_translation",
        "[0, 1]",
        |x| (0.0..=1.0).contains(&x),
        "Step size of pose translations, meters.",
        |c| c.slam.learning_rates.pose_translation
    ),
    real!("lr.pose_rotation", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of pose rotations, radians.", |c| c
        .slam
        .learning_rates
        .pose_rotation),
    real!("lr.mean", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of Gaussian means, meters.", |c| c
        .slam
        .learning_rates
        .mean),
    real!("lr.scale", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of log scales.", |c| c
        .slam
        .learning_rates
        .scale),
    real!("lr.rotation", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of Gaussian quaternions.", |c| c
        .slam
        .learning_rates
        .rotation),
    real!("lr.opacity", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of opacity logits.", |c| c
        .slam
        .learning_rates
        .opacity),
    real!("lr.color", "[0, 1]", |x| (0.0..=1.0).contains(&x), "Step size of gray values.", |c| c
        .slam
        .learning_rates
        .color),
    real!("adam.beta1", "[0, 1)", |x| (0.0..1.0).contains(&x), "First-moment decay.", |c| c.slam.adam.beta1),
    real!("adam.beta2", "[0, 1)", |x| (0.0..1.0).contains(&x), "Second-moment decay.", |c| c.slam.adam.beta2),
    real!("adam.epsilon", "(0, 1]", |x| x > 0.0 && x <= 1.0, "Denominator floor.", |c| c.slam.adam.epsilon),
    // Simulator.
    real!(
        "sim.contrast_threshold",
        "(0, 10]",
        |x| x > 0.0 && x <= 10.0,
        "Log-brightness step of one simulated event.",
        |c| c.sim.contrast_threshold
    ),
    uint!(
        "sim.frame_dt_us",
        u64,
        "[1, 1000000]",
        |x| (1..=1_000_000).contains(&x),
        "Spacing of rendered frames, microseconds.",
        |c| c.sim.frame_dt_us
    ),
    real!("sim.noise_ratio", "[0, 100]", |x| (0.0..=100.0).contains(&x), "Noise events per ideal event.", |c| c
        .sim
        .noise_ratio),
    real!("sim.noise_rate", "[0, 1e6]", |x| (0.0..=1e6).contains(&x), "Noise events per pixel per second.", |c| c
        .sim
        .noise_rate),
    // Evaluation.
    uint!(
        "eval.association_tolerance_us",
        u64,
        "[0, 10000000]",
        |x| x <= 10_000_000,
        "Largest timestamp gap of an associated pose pair.",
        |c| c.eval.association_tolerance_us
    ),
    Field {
        key: "eval.scale_alignment",
        range: "true | false",
        doc: "Align with a similarity transform; for diagnostics only.",
        get: |c| c.eval.scale_alignment.to_string(),
        set: |c, v| {
            c.eval.scale_alignment = parse_bool(v)?;
            Ok(())
        },
    },
];

pub fn field(key: &str) -> Option<&'static Field> {
    FIELDS.iter().find(|f| f.key == key)
}

impl Config {
    /// Sets one key from its textual value, with range checks.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = field(key).ok_or_else(|| Error::config(key, "unknown key"))?;
        (f.set)(self, value).map_err(|m| Error::config(key, m))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        field(key).map(|f| (f.get)(self))
    }

    /// Checks constraints that span several keys, then the full parameter set.
    pub fn validate(&self) -> Result<()> {
        let s = &self.slam;
        if s.init.d_min >= s.init.d_max {
            return Err(Error::config("init.d_max", "must exceed init.d_min"));
        }
        if s.supervision.dt_min > s.supervision.dt_max {
            return Err(Error::config("loop.dt_max_us", "must be at least loop.dt_min_us"));
        }
        if s.supervision.dt_max > s.chunk_duration {
            return Err(Error::config("loop.dt_max_us", "must not exceed loop.chunk_duration_us"));
        }
        if self.sim.noise_ratio > 0.0 && self.sim.noise_rate > 0.0 {
            return Err(Error::config("sim.noise_rate", "cannot be combined with sim.noise_ratio"));
        }
        s.validate().map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let blocks = kv::parse(source, text)?;
        if let Some(b) = blocks.get(1) {
            return Err(Error::config(format!("[{}]", b.name), "blocks are not allowed; use dotted keys"));
        }
        let mut c = Config::default();
        for e in &blocks[0].entries {
            c.set(&e.key, &e.value)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&path.display().to_string(), &read_string(path)?)
    }

    /// Every key with its effective value, one per line, in table order.
    pub fn snapshot(&self) -> String {
        let mut s = String::from("# effective configuration\n");
        for f in FIELDS {
            s.push_str(f.key);
            s.push_str(" = ");
            s.push_str(&(f.get)(self));
            s.push('\n');
        }
        s
    }
}

/// Markdown table of every key with its default and allowed range.
pub fn reference_table() -> String {
    let defaults = Config::default();
    let mut s = String::from("| Key | Default | Allowed | Meaning |\n|-----|---------|---------|---------|\n");
    for f in FIELDS {
        s.push_str(&format!("| `{}` | `{}` | {} | {} |\n", f.key, (f.get)(&defaults), f.range, f.doc));
    }
    s
}
