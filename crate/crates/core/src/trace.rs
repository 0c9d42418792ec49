//! Synthetic Modbus-style delay trace generator.
//!
//! Produces reproducible (condition, delay) datasets from a documented
//! ground-truth surface, standing in for bench measurements. The noiseless
//! delay mixes linear per-feature costs with a saturating queuing term in
//! the channel loading, so the surface is smooth, strictly increasing in
//! every feature, and distinctly non-linear:
//!
//! ```text
//! mean = base + prop·length + c_gain·(contention − 1) + d_gain·devices
//!        + r_gain·rungs + base·(loading/(1 − loading))^shape
//! ```
//!
//! Observed delays multiply the mean by lognormal noise with unit median and
//! a configurable coefficient of variation; positivity of delays is
//! structural, never clamped.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, DelaySample, NetworkCondition};
use crate::rng;

/// Generated loading values must stay below this so the queuing term cannot
/// blow up; measured data may still carry loading up to 1.
pub const LOADING_RANGE_CAP: f64 = 0.95;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("config line {line}: {msg}")]
    Kv { line: usize, msg: String },
    #[error("loading must be < 1 for the queuing term, got {0}")]
    LoadingSaturated(f64),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Per-feature sampling intervals (inclusive).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureRanges {
    pub loading: (f64, f64),
    pub length_m: (f64, f64),
    pub contention: (f64, f64),
    pub devices: (u32, u32),
    pub plc_rungs: (u32, u32),
}

impl Default for FeatureRanges {
    fn default() -> Self {
        Self {
            loading: (0.05, 0.9),
            length_m: (10.0, 500.0),
            contention: (1.0, 8.0),
            devices: (1, 32),
            plc_rungs: (0, 200),
        }
    }
}

/// Generator configuration. `new(n_samples, seed)` fills in the default
/// surface; individual fields can then be overridden directly or from a
/// `key = value` text via [`GenConfig::apply_kv_str`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GenConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub base_delay_ms: f64,
    pub propagation_ms_per_m: f64,
    /// Queuing delay grows as `(loading/(1 − loading))^load_exponent`.
    pub load_exponent: f64,
    pub contention_gain_ms: f64,
    pub device_gain_ms: f64,
    pub rung_gain_ms: f64,
    /// Coefficient of variation of the multiplicative lognormal noise.
    pub noise_cv: f64,
    pub ranges: FeatureRanges,
}

impl GenConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            base_delay_ms: 5.0,
            propagation_ms_per_m: 0.004,
            load_exponent: 2.0,
            contention_gain_ms: 1.5,
            device_gain_ms: 0.25,
            rung_gain_ms: 0.02,
            noise_cv: 0.08,
            ranges: FeatureRanges::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |msg: String| Err(TraceError::Config(msg));
        if self.n_samples < 1 {
            return bad("n_samples must be ≥ 1".into());
        }
        for (name, v) in [
            ("base_delay_ms", self.base_delay_ms),
            ("propagation_ms_per_m", self.propagation_ms_per_m),
            ("contention_gain_ms", self.contention_gain_ms),
            ("device_gain_ms", self.device_gain_ms),
            ("rung_gain_ms", self.rung_gain_ms),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return bad(format!("{name} must be a positive number, got {v}"));
            }
        }
        if !self.load_exponent.is_finite() || self.load_exponent <= 1.0 {
            return bad(format!("load_exponent must be > 1, got {}", self.load_exponent));
        }
        if !self.noise_cv.is_finite() || !(0.0..1.0).contains(&self.noise_cv) {
            return bad(format!("noise_cv must be in [0, 1), got {}", self.noise_cv));
        }
        let r = &self.ranges;
        if !(r.loading.0 <= r.loading.1 && r.loading.0 >= 0.0 && r.loading.1 <= LOADING_RANGE_CAP) {
            return bad(format!(
                "loading range [{}, {}] must lie within [0, {LOADING_RANGE_CAP}] to keep the queuing term finite",
                r.loading.0, r.loading.1
            ));
        }
        if !(r.length_m.0 > 0.0 && r.length_m.0 <= r.length_m.1 && r.length_m.1.is_finite()) {
            return bad(format!(
                "length_m range [{}, {}] must be positive and ordered",
                r.length_m.0, r.length_m.1
            ));
        }
        if !(r.contention.0 >= 1.0 && r.contention.0 <= r.contention.1 && r.contention.1.is_finite())
        {
            return bad(format!(
                "contention range [{}, {}] must be ≥ 1 and ordered",
                r.contention.0, r.contention.1
            ));
        }
        if !(r.devices.0 >= 1 && r.devices.0 <= r.devices.1) {
            return bad(format!(
                "devices range [{}, {}] must be ≥ 1 and ordered",
                r.devices.0, r.devices.1
            ));
        }
        if r.plc_rungs.0 > r.plc_rungs.1 {
            return bad(format!(
                "plc_rungs range [{}, {}] must be ordered",
                r.plc_rungs.0, r.plc_rungs.1
            ));
        }
        Ok(())
    }

    /// Apply `key = value` lines (`#` comments and blank lines ignored).
    /// Keys follow the field names; ranges use `<feature>_min`/`<feature>_max`.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<(), TraceError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.trim();
            if stripped.is_empty() || stripped.starts_with('#') {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| TraceError::Kv {
                line,
                msg: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            self.apply_kv(key, value)
                .map_err(|msg| TraceError::Kv { line, msg })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("cannot parse `{value}` for key `{key}`"))
        }
        match key {
            "n_samples" => self.n_samples = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "base_delay_ms" => self.base_delay_ms = num(key, value)?,
            "propagation_ms_per_m" => self.propagation_ms_per_m = num(key, value)?,
            "load_exponent" => self.load_exponent = num(key, value)?,
            "contention_gain_ms" => self.contention_gain_ms = num(key, value)?,
            "device_gain_ms" => self.device_gain_ms = num(key, value)?,
            "rung_gain_ms" => self.rung_gain_ms = num(key, value)?,
            "noise_cv" => self.noise_cv = num(key, value)?,
            "loading_min" => self.ranges.loading.0 = num(key, value)?,
            "loading_max" => self.ranges.loading.1 = num(key, value)?,
            "length_min" => self.ranges.length_m.0 = num(key, value)?,
            "length_max" => self.ranges.length_m.1 = num(key, value)?,
            "contention_min" => self.ranges.contention.0 = num(key, value)?,
            "contention_max" => self.ranges.contention.1 = num(key, value)?,
            "devices_min" => self.ranges.devices.0 = num(key, value)?,
            "devices_max" => self.ranges.devices.1 = num(key, value)?,
            "plc_rungs_min" => self.ranges.plc_rungs.0 = num(key, value)?,
            "plc_rungs_max" => self.ranges.plc_rungs.1 = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

/// The CSV comment line stamped onto every generated trace.
pub fn csv_comment(cfg: &GenConfig) -> String {
    format!("synthetic trace, seed={}", cfg.seed)
}

/// Noiseless ground-truth delay for a condition.
pub fn mean_delay(cond: &NetworkCondition, cfg: &GenConfig) -> Result<f64, TraceError> {
    if cond.loading >= 1.0 {
        return Err(TraceError::LoadingSaturated(cond.loading));
    }
    let queuing = cfg.base_delay_ms * (cond.loading / (1.0 - cond.loading)).powf(cfg.load_exponent);
    Ok(cfg.base_delay_ms
        + cfg.propagation_ms_per_m * cond.length_m
        + cfg.contention_gain_ms * (cond.contention - 1.0)
        + cfg.device_gain_ms * f64::from(cond.devices)
        + cfg.rung_gain_ms * f64::from(cond.plc_rungs)
        + queuing)
}

/// Generate a dataset: conditions sampled uniformly over the configured
/// ranges, delays = `mean_delay × lognormal(unit median, noise_cv)`.
///
/// Rows appear in generation order. Per row the draw order is fixed:
/// loading, length, contention, devices, plc_rungs, then the noise normal —
/// all from one ChaCha8 stream seeded with `cfg.seed`.
pub fn generate(cfg: &GenConfig) -> Result<Dataset, TraceError> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    // Unit median: ln-space mean 0. CV c ⇒ ln-space std √(ln(1+c²)).
    let ln_std = (1.0 + cfg.noise_cv * cfg.noise_cv).ln().sqrt();
    let r = &cfg.ranges;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let loading = rng.random_range(r.loading.0..=r.loading.1);
        let length_m = rng.random_range(r.length_m.0..=r.length_m.1);
        let contention = rng.random_range(r.contention.0..=r.contention.1);
        let devices = rng.random_range(r.devices.0..=r.devices.1);
        let plc_rungs = rng.random_range(r.plc_rungs.0..=r.plc_rungs.1);
        let cond = NetworkCondition::new(loading, length_m, contention, devices, plc_rungs)
            .expect("validated ranges only produce valid conditions");
        let mean = mean_delay(&cond, cfg)?;
        let z: f64 = rng.sample(StandardNormal);
        let delay = mean * (ln_std * z).exp();
        samples.push(DelaySample::new(cond, delay).expect("positive mean times lognormal noise"));
    }
    Ok(Dataset::new(samples)?)
}
