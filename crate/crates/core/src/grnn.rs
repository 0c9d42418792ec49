//! The GRNN delay estimator: stored training patterns plus a Gaussian
//! kernel-weighted average.
//!
//! Fitting is pattern storage — there is no iterative weight learning. An
//! estimate for query `q` is
//!
//! ```text
//! Ŷ(q) = Σⱼ yʲ · exp(−dⱼ/2) / Σⱼ exp(−dⱼ/2),   dⱼ = Σₖ ((qₖ − pⱼₖ)/σₖ)²
//! ```
//!
//! over z-scored features. With an isotropic σ the exponent reduces to the
//! classic squared-Euclidean-over-2σ² form; per-feature σ lets the tuner
//! widen the bandwidth of weakly informative features.
//!
//! Weights are evaluated in max-shifted form, `exp(−(dⱼ − d_min)/2)`, which
//! is exact in real arithmetic and keeps the denominator ≥ 1: the naive form
//! underflows to 0/0 once σ is small or the query is far from every pattern.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{normalize, Dataset, NetworkCondition, NormStats, FEATURE_COUNT};
use crate::numfmt::SigFig17Formatter;

/// Smallest admissible smoothing component (normalized-feature units).
pub const SIGMA_MIN: f64 = 1e-4;
/// Largest admissible smoothing component (normalized-feature units).
pub const SIGMA_MAX: f64 = 10.0;

/// Version tag of the model persistence format.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GrnnError {
    #[error("sigma component {index} = {value} outside [{SIGMA_MIN}, {SIGMA_MAX}]")]
    SigmaOutOfBounds { index: usize, value: f64 },
    #[error("sigma needs 1 (isotropic) or {FEATURE_COUNT} (per-feature) components, got {0}")]
    SigmaLen(usize),
    #[error("leave-one-out needs at least 2 patterns, got {n}")]
    LooNeedsTwo { n: usize },
    #[error("model has no patterns")]
    NoPatterns,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported model schema version {found} (this build reads version {supported})")]
    SchemaVersion { found: u32, supported: u32 },
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Kernel smoothing parameters: one shared value or one per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Sigma {
    values: Vec<f64>,
}

impl Sigma {
    pub fn isotropic(value: f64) -> Result<Self, GrnnError> {
        Self::from_values(vec![value])
    }

    pub fn per_feature(values: [f64; FEATURE_COUNT]) -> Result<Self, GrnnError> {
        Self::from_values(values.to_vec())
    }

    /// Length must be 1 or [`FEATURE_COUNT`]; every component must lie in
    /// `[SIGMA_MIN, SIGMA_MAX]`.
    pub fn from_values(values: Vec<f64>) -> Result<Self, GrnnError> {
        if values.len() != 1 && values.len() != FEATURE_COUNT {
            return Err(GrnnError::SigmaLen(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || !(SIGMA_MIN..=SIGMA_MAX).contains(&value) {
                return Err(GrnnError::SigmaOutOfBounds { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_isotropic(&self) -> bool {
        self.values.len() == 1
    }

    #[inline]
    fn for_feature(&self, k: usize) -> f64 {
        if self.values.len() == 1 {
            self.values[0]
        } else {
            self.values[k]
        }
    }
}

/// Sigma-scaled squared distance between two z-scored feature vectors:
/// `Σₖ ((qₖ − pₖ)/σₖ)²`. The isotropic case is exactly `‖q − p‖²/σ²`.
pub fn distance_sq(
    query_z: &[f64; FEATURE_COUNT],
    pattern_z: &[f64; FEATURE_COUNT],
    sigma: &Sigma,
) -> f64 {
    let mut acc = 0.0;
    for k in 0..FEATURE_COUNT {
        let scaled = (query_z[k] - pattern_z[k]) / sigma.for_feature(k);
        acc += scaled * scaled;
    }
    acc
}

/// One stored training sample: z-scored features and the raw target delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pattern {
    pub features: [f64; FEATURE_COUNT],
    pub target_ms: f64,
}

/// A fitted GRNN: the pattern table, the smoothing parameters, and the
/// normalization stats frozen from the training dataset.
///
/// Immutable after `fit`; estimation methods are pure reads and safe to call
/// from any number of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GrnnModel {
    patterns: Vec<Pattern>,
    sigma: Sigma,
    norm_stats: NormStats,
}

impl GrnnModel {
    /// Store one pattern per training sample, z-scored with the training
    /// stats. Duplicate rows are retained — the kernel sum runs over all of
    /// them, so duplicates simply carry double weight.
    pub fn fit(train: &Dataset, sigma: Sigma) -> GrnnModel {
        let norm_stats = train.norm_stats().clone();
        let patterns = train
            .samples()
            .iter()
            .map(|s| Pattern {
                features: normalize(&s.condition, &norm_stats),
                target_ms: s.delay_ms,
            })
            .collect();
        GrnnModel {
            patterns,
            sigma,
            norm_stats,
        }
    }

    /// Rebuild a model from stored parts (persistence, surgery in tests).
    pub fn from_parts(
        patterns: Vec<Pattern>,
        sigma: Sigma,
        norm_stats: NormStats,
    ) -> Result<Self, GrnnError> {
        if patterns.is_empty() {
            return Err(GrnnError::NoPatterns);
        }
        for (i, p) in patterns.iter().enumerate() {
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(GrnnError::InvalidModel(format!(
                    "pattern {i} has a non-finite feature"
                )));
            }
            if !p.target_ms.is_finite() || p.target_ms <= 0.0 {
                return Err(GrnnError::InvalidModel(format!(
                    "pattern {i} target must be > 0 and finite, got {}",
                    p.target_ms
                )));
            }
        }
        Ok(Self {
            patterns,
            sigma,
            norm_stats,
        })
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn sigma(&self) -> &Sigma {
        &self.sigma
    }

    pub fn norm_stats(&self) -> &NormStats {
        &self.norm_stats
    }

    /// Estimated delay (ms) for a raw condition. Always a convex combination
    /// of the stored targets: `min yʲ ≤ Ŷ ≤ max yʲ`.
    pub fn estimate(&self, cond: &NetworkCondition) -> f64 {
        self.estimate_z(&normalize(cond, &self.norm_stats))
    }

    /// Estimate at an already z-scored query.
    pub fn estimate_z(&self, query_z: &[f64; FEATURE_COUNT]) -> f64 {
        shifted_average(&self.sigma, query_z, self.patterns.iter())
    }

    /// Elementwise [`Self::estimate`], order preserved. Parallel inside, but
    /// each entry is computed independently, so the output is bitwise equal
    /// to a sequential loop.
    pub fn estimate_batch(&self, conds: &[NetworkCondition]) -> Vec<f64> {
        conds.par_iter().map(|c| self.estimate(c)).collect()
    }

    /// Leave-one-out estimates: entry `i` evaluates the kernel average at
    /// pattern `i`'s features with pattern `i` removed from both sums.
    pub fn loo_estimates(&self) -> Result<Vec<f64>, GrnnError> {
        let n = self.patterns.len();
        if n < 2 {
            return Err(GrnnError::LooNeedsTwo { n });
        }
        Ok((0..n)
            .into_par_iter()
            .map(|i| {
                let query = &self.patterns[i].features;
                let rest = self
                    .patterns
                    .iter()
                    .enumerate()
                    .filter(move |(j, _)| *j != i)
                    .map(|(_, p)| p);
                shifted_average(&self.sigma, query, rest)
            })
            .collect())
    }

    // --- persistence ---

    /// Serialize to the single-document JSON format. Floats carry 17
    /// significant digits, so `from_json(to_json())` is bit-exact.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            sigma: self.sigma.values.clone(),
            norm_stats: NormStatsFile {
                means: *self.norm_stats.means(),
                stds: *self.norm_stats.stds(),
            },
            patterns: self
                .patterns
                .iter()
                .map(|p| {
                    let mut row = [0.0; FEATURE_COUNT + 1];
                    row[..FEATURE_COUNT].copy_from_slice(&p.features);
                    row[FEATURE_COUNT] = p.target_ms;
                    row
                })
                .collect(),
        };
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFig17Formatter);
        file.serialize(&mut ser).expect("in-memory serialization cannot fail");
        String::from_utf8(buf).expect("model json is ascii")
    }

    pub fn from_json(text: &str) -> Result<Self, GrnnError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(GrnnError::SchemaVersion {
                found: file.schema_version,
                supported: MODEL_SCHEMA_VERSION,
            });
        }
        let sigma = Sigma::from_values(file.sigma)?;
        let norm_stats = NormStats::new(file.norm_stats.means, file.norm_stats.stds)
            .map_err(|e| GrnnError::InvalidModel(e.to_string()))?;
        let patterns = file
            .patterns
            .into_iter()
            .map(|row| {
                let mut features = [0.0; FEATURE_COUNT];
                features.copy_from_slice(&row[..FEATURE_COUNT]);
                Pattern {
                    features,
                    target_ms: row[FEATURE_COUNT],
                }
            })
            .collect();
        Self::from_parts(patterns, sigma, norm_stats)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GrnnError> {
        let path = path.as_ref();
        let io_err = |source| GrnnError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        file.write_all(self.to_json().as_bytes()).map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GrnnError> {
        let path = path.as_ref();
        let io_err = |source| GrnnError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut text = String::new();
        File::open(path)
            .map_err(io_err)?
            .read_to_string(&mut text)
            .map_err(io_err)?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    sigma: Vec<f64>,
    norm_stats: NormStatsFile,
    patterns: Vec<[f64; FEATURE_COUNT + 1]>,
}

#[derive(Serialize, Deserialize)]
struct NormStatsFile {
    means: [f64; FEATURE_COUNT],
    stds: [f64; FEATURE_COUNT],
}

/// Max-shifted kernel average over `patterns`. Shifting by the smallest
/// distance makes the largest weight exactly 1, so the denominator never
/// underflows; the shift cancels between numerator and denominator.
fn shifted_average<'a>(
    sigma: &Sigma,
    query_z: &[f64; FEATURE_COUNT],
    patterns: impl Iterator<Item = &'a Pattern>,
) -> f64 {
    let scored: Vec<(f64, f64)> = patterns
        .map(|p| (distance_sq(query_z, &p.features, sigma), p.target_ms))
        .collect();
    debug_assert!(!scored.is_empty());
    let d_min = scored.iter().map(|&(d, _)| d).fold(f64::INFINITY, f64::min);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(d, y) in &scored {
        let w = (-(d - d_min) / 2.0).exp();
        num += y * w;
        den += w;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DelaySample;

    fn cond(
        loading: f64,
        length_m: f64,
        contention: f64,
        devices: u32,
        plc_rungs: u32,
    ) -> NetworkCondition {
        NetworkCondition::new(loading, length_m, contention, devices, plc_rungs).unwrap()
    }

    fn dataset(rows: &[(f64, f64, f64, u32, u32, f64)]) -> Dataset {
        Dataset::new(
            rows.iter()
                .map(|&(l, m, c, d, r, y)| DelaySample::new(cond(l, m, c, d, r), y).unwrap())
                .collect(),
        )
        .unwrap()
    }

    /// Literal two-pass evaluation of the kernel average, no shift. The
    /// independent oracle for the max-shifted implementation.
    fn literal_estimate(model: &GrnnModel, query_z: &[f64; FEATURE_COUNT]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for p in model.patterns() {
            let w = (-distance_sq(query_z, &p.features, model.sigma()) / 2.0).exp();
            num += p.target_ms * w;
            den += w;
        }
        num / den
    }

    #[test]
    fn sigma_bounds_are_enforced() {
        assert!(Sigma::isotropic(1.0).is_ok());
        assert!(Sigma::isotropic(SIGMA_MIN).is_ok());
        assert!(Sigma::isotropic(SIGMA_MAX).is_ok());
        assert!(matches!(
            Sigma::isotropic(0.0),
            Err(GrnnError::SigmaOutOfBounds { .. })
        ));
        assert!(matches!(
            Sigma::isotropic(10.5),
            Err(GrnnError::SigmaOutOfBounds { .. })
        ));
        assert!(matches!(
            Sigma::from_values(vec![1.0, 1.0]),
            Err(GrnnError::SigmaLen(2))
        ));
    }

    #[test]
    fn distance_identity_is_zero() {
        let z = [0.3, -1.2, 0.0, 2.0, -0.5];
        assert_eq!(distance_sq(&z, &z, &Sigma::isotropic(0.7).unwrap()), 0.0);
    }

    #[test]
    fn distance_unit_displacement() {
        let q = [1.0, 0.0, 0.0, 0.0, 0.0];
        let p = [0.0; 5];
        assert_eq!(distance_sq(&q, &p, &Sigma::isotropic(1.0).unwrap()), 1.0);
    }

    #[test]
    fn distance_per_feature_hand_value() {
        // q−p = (1,2,0,0,0) with σ = (1,2,1,1,1): 1² + (2/2)² = 2.
        let q = [1.0, 2.0, 0.0, 0.0, 0.0];
        let p = [0.0; 5];
        let sigma = Sigma::per_feature([1.0, 2.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(distance_sq(&q, &p, &sigma), 2.0);
    }

    #[test]
    fn fit_stores_one_pattern_per_sample() {
        let ds = dataset(&[
            (0.1, 50.0, 1.0, 2, 5, 8.0),
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.9, 200.0, 3.0, 8, 20, 30.0),
        ]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(0.5).unwrap());
        assert_eq!(model.len(), 3);
        let again = GrnnModel::fit(&ds, Sigma::isotropic(0.5).unwrap());
        assert_eq!(model, again);
    }

    #[test]
    fn duplicate_rows_are_both_retained() {
        let ds = dataset(&[
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.2, 80.0, 1.0, 2, 0, 8.0),
        ]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(0.5).unwrap());
        assert_eq!(model.len(), 3);
        assert_eq!(model.patterns()[0], model.patterns()[1]);
    }

    #[test]
    fn duplicate_features_with_conflicting_targets_average() {
        // Identical feature vectors share weight 1 after the shift, so the
        // kernel sum averages their targets; no deduplication happens.
        let ds = dataset(&[
            (0.5, 100.0, 2.0, 4, 10, 10.0),
            (0.5, 100.0, 2.0, 4, 10, 20.0),
            (0.1, 400.0, 6.0, 20, 150, 40.0),
        ]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(SIGMA_MIN).unwrap());
        let est = model.estimate(&cond(0.5, 100.0, 2.0, 4, 10));
        assert!((est - 15.0).abs() < 1e-9, "{est}");
    }

    #[test]
    fn single_pattern_estimate_returns_its_target() {
        let ds = dataset(&[(0.5, 100.0, 2.0, 4, 10, 12.0)]);
        for sigma in [SIGMA_MIN, 0.7, SIGMA_MAX] {
            let model = GrnnModel::fit(&ds, Sigma::isotropic(sigma).unwrap());
            assert_eq!(model.estimate(&cond(0.9, 400.0, 7.0, 30, 200)), 12.0);
            assert_eq!(model.estimate(&cond(0.5, 100.0, 2.0, 4, 10)), 12.0);
        }
    }

    #[test]
    fn equidistant_patterns_average_their_targets() {
        // Two patterns symmetric in loading only; the midpoint query is
        // equidistant, so the weights match and the estimate is the mean.
        let ds = dataset(&[(0.2, 100.0, 2.0, 4, 10, 10.0), (0.8, 100.0, 2.0, 4, 10, 20.0)]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(0.9).unwrap());
        let mid = model.estimate(&cond(0.5, 100.0, 2.0, 4, 10));
        assert!((mid - 15.0).abs() < 1e-12, "{mid}");
    }

    #[test]
    fn shifted_matches_literal_oracle_on_random_patterns() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(41);
        for _ in 0..50 {
            let rows: Vec<(f64, f64, f64, u32, u32, f64)> = (0..5)
                .map(|_| {
                    (
                        rng.random_range(0.05..0.9),
                        rng.random_range(10.0..500.0),
                        rng.random_range(1.0..8.0),
                        rng.random_range(1..=32),
                        rng.random_range(0..=200),
                        rng.random_range(5.0..50.0),
                    )
                })
                .collect();
            let ds = dataset(&rows);
            let model = GrnnModel::fit(&ds, Sigma::isotropic(0.7).unwrap());
            let q = [
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            ];
            let fast = model.estimate_z(&q);
            let slow = literal_estimate(&model, &q);
            assert!(
                ((fast - slow) / slow).abs() < 1e-10,
                "fast {fast} vs literal {slow}"
            );
        }
    }

    #[test]
    fn batch_is_bitwise_equal_to_loop() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(7);
        let rows: Vec<(f64, f64, f64, u32, u32, f64)> = (0..20)
            .map(|_| {
                (
                    rng.random_range(0.05..0.9),
                    rng.random_range(10.0..500.0),
                    rng.random_range(1.0..8.0),
                    rng.random_range(1..=32),
                    rng.random_range(0..=200),
                    rng.random_range(5.0..50.0),
                )
            })
            .collect();
        let ds = dataset(&rows);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(0.4).unwrap());
        let queries: Vec<NetworkCondition> = (0..100)
            .map(|_| {
                cond(
                    rng.random_range(0.0..1.0),
                    rng.random_range(1.0..600.0),
                    rng.random_range(1.0..9.0),
                    rng.random_range(1..=40),
                    rng.random_range(0..=250),
                )
            })
            .collect();
        let batch = model.estimate_batch(&queries);
        let looped: Vec<f64> = queries.iter().map(|c| model.estimate(c)).collect();
        assert_eq!(batch.len(), looped.len());
        for (a, b) in batch.iter().zip(&looped) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(model.estimate_batch(&[]).is_empty());
        assert_eq!(
            model.estimate_batch(&queries[..1])[0].to_bits(),
            model.estimate(&queries[0]).to_bits()
        );
    }

    #[test]
    fn loo_with_two_patterns_swaps_targets() {
        let ds = dataset(&[(0.2, 100.0, 2.0, 4, 10, 10.0), (0.8, 100.0, 2.0, 4, 10, 20.0)]);
        for sigma in [SIGMA_MIN, 1.0, SIGMA_MAX] {
            let model = GrnnModel::fit(&ds, Sigma::isotropic(sigma).unwrap());
            let loo = model.loo_estimates().unwrap();
            assert_eq!(loo, vec![20.0, 10.0]);
        }
    }

    #[test]
    fn loo_requires_two_patterns() {
        let ds = dataset(&[(0.5, 100.0, 2.0, 4, 10, 12.0)]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(1.0).unwrap());
        assert!(matches!(
            model.loo_estimates(),
            Err(GrnnError::LooNeedsTwo { n: 1 })
        ));
    }

    #[test]
    fn loo_matches_rebuild_without_sample_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(13);
        let rows: Vec<(f64, f64, f64, u32, u32, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.05..0.9),
                    rng.random_range(10.0..500.0),
                    rng.random_range(1.0..8.0),
                    rng.random_range(1..=32),
                    rng.random_range(0..=200),
                    rng.random_range(5.0..50.0),
                )
            })
            .collect();
        let ds = dataset(&rows);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(0.8).unwrap());
        let loo = model.loo_estimates().unwrap();
        for (i, loo_i) in loo.iter().enumerate() {
            let remaining: Vec<Pattern> = model
                .patterns()
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| *p)
                .collect();
            let reduced = GrnnModel::from_parts(
                remaining,
                model.sigma().clone(),
                model.norm_stats().clone(),
            )
            .unwrap();
            let oracle = reduced.estimate_z(&model.patterns()[i].features);
            assert!(
                ((loo_i - oracle) / oracle).abs() < 1e-10,
                "loo[{i}] = {loo_i} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn loo_duplicate_pair_memorizes_at_tiny_sigma() {
        // Each duplicate's nearest remaining pattern is its twin, so at the
        // small-σ limit the LOO estimate is the shared target.
        let ds = dataset(&[
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.1, 400.0, 6.0, 20, 150, 40.0),
        ]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(SIGMA_MIN).unwrap());
        let loo = model.loo_estimates().unwrap();
        assert!((loo[0] - 12.0).abs() < 1e-9 * 12.0, "{loo:?}");
        assert!((loo[1] - 12.0).abs() < 1e-9 * 12.0, "{loo:?}");
    }

    #[test]
    fn far_query_with_tiny_sigma_stays_bounded() {
        let ds = dataset(&[(0.1, 20.0, 1.0, 1, 0, 8.0), (0.6, 300.0, 5.0, 16, 120, 25.0)]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(SIGMA_MIN).unwrap());
        let est = model.estimate(&cond(1.0, 1.0e5, 50.0, 4000, 100_000));
        assert!(est.is_finite());
        assert!((8.0..=25.0).contains(&est), "{est}");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let ds = dataset(&[
            (0.1, 50.0, 1.0, 2, 5, 8.0),
            (0.5, 100.0, 2.0, 4, 10, 12.0),
            (0.9, 200.0, 3.0, 8, 20, 30.0),
        ]);
        let model = GrnnModel::fit(
            &ds,
            Sigma::per_feature([0.3, 1.0 / 3.0, 2.5, SIGMA_MIN, SIGMA_MAX]).unwrap(),
        );
        let text = model.to_json();
        let back = GrnnModel::from_json(&text).unwrap();
        assert_eq!(model, back);
        // PartialEq on f64 is fine here only because values round-trip
        // bit-exactly; double-check one field at the bit level.
        assert_eq!(
            model.patterns()[1].features[1].to_bits(),
            back.patterns()[1].features[1].to_bits()
        );
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn json_rejects_unknown_schema_version() {
        let ds = dataset(&[(0.5, 100.0, 2.0, 4, 10, 12.0)]);
        let model = GrnnModel::fit(&ds, Sigma::isotropic(1.0).unwrap());
        let text = model.to_json().replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(matches!(
            GrnnModel::from_json(&text),
            Err(GrnnError::SchemaVersion { found: 2, .. })
        ));
    }
}
