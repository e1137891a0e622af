//! Rhythm features of the autonomic and trigger hubs, computed from an
//! annotated beat series.
//!
//! All heart-rate-variability descriptors use normal-to-normal (NN) intervals
//! only, i.e. intervals whose two flanking beats are both `Normal`. A feature
//! that cannot be computed on a record is reported as unavailable (missing),
//! never as zero.

use std::collections::BTreeMap;
use std::path::Path;

use crate::config::KeyValues;
use crate::dataset::{BeatSeries, BeatType};
use crate::stats;
use crate::{Error, Result};

pub const MIN_HEART_RATE: &str = "min_heart_rate";
pub const MEAN_RR: &str = "mean_rr";
pub const SDANN: &str = "sdann";
pub const POINCARE_SD2: &str = "poincare_sd2";
pub const HRV_INDEX: &str = "hrv_index";
pub const TURBULENCE_ONSET: &str = "turbulence_onset";
pub const BIGEMINY: &str = "ventricular_bigeminy";
pub const TRIGEMINY: &str = "ventricular_trigeminy";
pub const NSVT: &str = "nsvt";
pub const PAC: &str = "pac";
pub const PAC_COUPLETS: &str = "pac_couplets";

/// Every feature produced by [`compute_feature_row`], autonomic hub first.
pub const RHYTHM_FEATURES: [&str; 11] = [
    MIN_HEART_RATE,
    MEAN_RR,
    SDANN,
    POINCARE_SD2,
    HRV_INDEX,
    TURBULENCE_ONSET,
    BIGEMINY,
    TRIGEMINY,
    NSVT,
    PAC,
    PAC_COUPLETS,
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub min_hr_window_s: f64,
    pub sdann_segment_s: f64,
    pub hrv_index_threshold_ms: f64,
    pub nsvt_min_beats: usize,
    pub nsvt_max_beats: usize,
    /// NSVT beats must exceed this instantaneous rate.
    pub nsvt_min_rate_bpm: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_hr_window_s: 60.0,
            sdann_segment_s: 300.0,
            hrv_index_threshold_ms: 50.0,
            nsvt_min_beats: 3,
            nsvt_max_beats: 29,
            nsvt_min_rate_bpm: 100.0,
        }
    }
}

impl FeatureConfig {
    pub const KEYS: &'static [&'static str] = &[
        "min_hr_window_s",
        "sdann_segment_s",
        "hrv_index_threshold_ms",
        "nsvt_min_beats",
        "nsvt_max_beats",
        "nsvt_min_rate_bpm",
    ];

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(Self::KEYS)?;
        let d = FeatureConfig::default();
        let cfg = FeatureConfig {
            min_hr_window_s: kv.parsed("min_hr_window_s")?.unwrap_or(d.min_hr_window_s),
            sdann_segment_s: kv.parsed("sdann_segment_s")?.unwrap_or(d.sdann_segment_s),
            hrv_index_threshold_ms: kv
                .parsed("hrv_index_threshold_ms")?
                .unwrap_or(d.hrv_index_threshold_ms),
            nsvt_min_beats: kv.parsed("nsvt_min_beats")?.unwrap_or(d.nsvt_min_beats),
            nsvt_max_beats: kv.parsed("nsvt_max_beats")?.unwrap_or(d.nsvt_max_beats),
            nsvt_min_rate_bpm: kv
                .parsed("nsvt_min_rate_bpm")?
                .unwrap_or(d.nsvt_min_rate_bpm),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn to_text(&self) -> String {
        format!(
            "min_hr_window_s = {}\nsdann_segment_s = {}\nhrv_index_threshold_ms = {}\nnsvt_min_beats = {}\nnsvt_max_beats = {}\nnsvt_min_rate_bpm = {}\n",
            self.min_hr_window_s,
            self.sdann_segment_s,
            self.hrv_index_threshold_ms,
            self.nsvt_min_beats,
            self.nsvt_max_beats,
            self.nsvt_min_rate_bpm
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_hr_window_s > 0.0
            && self.sdann_segment_s > 0.0
            && self.hrv_index_threshold_ms >= 0.0)
        {
            return Err(Error::Config(
                "window, segment and threshold must be positive".into(),
            ));
        }
        if self.nsvt_min_beats < 2 || self.nsvt_max_beats < self.nsvt_min_beats {
            return Err(Error::Config(
                "NSVT bounds must satisfy 2 <= min <= max".into(),
            ));
        }
        if !(self.nsvt_min_rate_bpm > 0.0) {
            return Err(Error::Config("NSVT rate must be positive".into()));
        }
        Ok(())
    }
}

/// Interval between two consecutive beats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrInterval {
    pub onset_ms: f64,
    pub rr_ms: f64,
    pub before: BeatType,
    pub after: BeatType,
}

impl RrInterval {
    pub fn end_ms(&self) -> f64 {
        self.onset_ms + self.rr_ms
    }

    pub fn is_nn(&self) -> bool {
        self.before == BeatType::Normal && self.after == BeatType::Normal
    }
}

/// Intervals between consecutive beats; interval `i` spans beats `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RrSeries {
    intervals: Vec<RrInterval>,
}

impl RrSeries {
    pub fn intervals(&self) -> &[RrInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn nn_intervals(&self) -> impl Iterator<Item = &RrInterval> {
        self.intervals.iter().filter(|i| i.is_nn())
    }

    /// Pairs of adjacent intervals that are both normal-to-normal.
    pub fn nn_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.intervals
            .windows(2)
            .filter(|w| w[0].is_nn() && w[1].is_nn())
            .map(|w| (w[0].rr_ms, w[1].rr_ms))
    }

    fn span(&self) -> Option<(f64, f64)> {
        Some((
            self.intervals.first()?.onset_ms,
            self.intervals.last()?.end_ms(),
        ))
    }
}

pub fn to_rr(series: &BeatSeries) -> Result<RrSeries> {
    let beats = series.beats();
    if beats.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "RR series needs at least 2 beats, got {}",
            beats.len()
        )));
    }
    let intervals = beats
        .windows(2)
        .map(|w| RrInterval {
            onset_ms: w[0].time_ms,
            rr_ms: w[1].time_ms - w[0].time_ms,
            before: w[0].kind,
            after: w[1].kind,
        })
        .collect();
    Ok(RrSeries { intervals })
}

/// Mean NN interval in milliseconds.
pub fn mean_rr(rr: &RrSeries) -> Result<f64> {
    let nn: Vec<f64> = rr.nn_intervals().map(|i| i.rr_ms).collect();
    stats::mean(&nn).ok_or_else(|| Error::InsufficientData("no normal-to-normal intervals".into()))
}

/// Lowest heart rate (bpm) over sliding windows of `window_s` seconds.
///
/// Windows start at each NN interval onset and must end within the record.
/// A window's rate is 60000 over the mean of the NN intervals lying entirely
/// inside it.
pub fn min_heart_rate(rr: &RrSeries, window_s: f64) -> Result<f64> {
    let window = window_s * 1000.0;
    let (start, end) = rr
        .span()
        .ok_or_else(|| Error::InsufficientData("empty RR series".into()))?;
    if end - start < window {
        return Err(Error::InsufficientData(format!(
            "record spans {:.0} ms, shorter than the {window:.0} ms window",
            end - start
        )));
    }
    let nn: Vec<&RrInterval> = rr.nn_intervals().collect();
    let mut prefix = Vec::with_capacity(nn.len() + 1);
    prefix.push(0.0);
    for i in &nn {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + i.rr_ms);
    }

    let mut best_mean: Option<f64> = None;
    let mut j = 0;
    for (i, first) in nn.iter().enumerate() {
        let w_start = first.onset_ms;
        let w_end = w_start + window;
        if w_end > end {
            break;
        }
        j = j.max(i);
        while j < nn.len() && nn[j].end_ms() <= w_end {
            j += 1;
        }
        if j > i {
            let m = (prefix[j] - prefix[i]) / (j - i) as f64;
            best_mean = Some(best_mean.map_or(m, |b: f64| b.max(m)));
        }
    }
    best_mean.map(|m| 60_000.0 / m).ok_or_else(|| {
        Error::InsufficientData("no window contains a normal-to-normal interval".into())
    })
}

/// Standard deviation of the mean NN interval over consecutive full segments
/// of `segment_s` seconds; the trailing partial segment is dropped.
pub fn sdann(rr: &RrSeries, segment_s: f64) -> Result<f64> {
    let means = segment_means(rr, segment_s)?;
    stats::std_dev(&means).ok_or_else(|| {
        Error::InsufficientData("SDANN needs at least 2 segments with NN intervals".into())
    })
}

fn segment_means(rr: &RrSeries, segment_s: f64) -> Result<Vec<f64>> {
    let seg = segment_s * 1000.0;
    let (start, end) = rr
        .span()
        .ok_or_else(|| Error::InsufficientData("empty RR series".into()))?;
    let n_full = ((end - start) / seg).floor() as usize;
    if n_full < 2 {
        return Err(Error::InsufficientData(format!(
            "SDANN needs 2 full {seg:.0} ms segments, record spans {:.0} ms",
            end - start
        )));
    }
    let mut sums = vec![0.0; n_full];
    let mut counts = vec![0usize; n_full];
    for i in rr.nn_intervals() {
        let k = ((i.onset_ms - start) / seg).floor() as usize;
        if k < n_full {
            sums[k] += i.rr_ms;
            counts[k] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect())
}

/// Poincaré plot dispersions, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poincare {
    /// Dispersion perpendicular to the identity line (short term).
    pub sd1: f64,
    /// Dispersion along the identity line (long term).
    pub sd2: f64,
}

/// SD1 and SD2 of the scatter of adjacent NN pairs `(RRᵢ, RRᵢ₊₁)`.
///
/// `SD1² = var((RRᵢ₊₁ − RRᵢ)/√2)` and `SD2² = 2·SDNN² − SD1²`, where `SDNN²`
/// is the mean of the two coordinate variances of the scatter.
pub fn poincare(rr: &RrSeries) -> Result<Poincare> {
    let pairs: Vec<(f64, f64)> = rr.nn_pairs().collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(
            "Poincaré analysis needs at least 3 consecutive NN intervals".into(),
        ));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs
        .iter()
        .map(|p| (p.1 - p.0) / std::f64::consts::SQRT_2)
        .collect();
    let sd1_sq = stats::variance(&d).unwrap_or(0.0);
    let sdnn_sq = 0.5 * (stats::variance(&x).unwrap_or(0.0) + stats::variance(&y).unwrap_or(0.0));
    Ok(Poincare {
        sd1: sd1_sq.max(0.0).sqrt(),
        sd2: (2.0 * sdnn_sq - sd1_sq).max(0.0).sqrt(),
    })
}

pub fn poincare_sd2(rr: &RrSeries) -> Result<f64> {
    poincare(rr).map(|p| p.sd2)
}

/// Percentage of successive NN differences whose magnitude exceeds
/// `threshold_ms` (pNN50 at the default threshold).
pub fn hrv_index(rr: &RrSeries, threshold_ms: f64) -> Result<f64> {
    let mut total = 0usize;
    let mut above = 0usize;
    for (a, b) in rr.nn_pairs() {
        total += 1;
        if (b - a).abs() > threshold_ms {
            above += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData(
            "needs at least 2 consecutive NN intervals".into(),
        ));
    }
    Ok(100.0 * above as f64 / total as f64)
}

/// Mean turbulence onset (percent) over PVCs with full sinus context.
///
/// A PVC qualifies when the three beats before it and the three after it are
/// normal. Per PVC, `TO = 100·((RR₊₁ + RR₊₂) − (RR₋₂ + RR₋₁)) / (RR₋₂ + RR₋₁)`
/// where the coupling interval and the compensatory pause are excluded.
pub fn turbulence_onset(series: &BeatSeries, rr: &RrSeries) -> Result<f64> {
    let beats = series.beats();
    let iv = rr.intervals();
    if iv.len() + 1 != beats.len() {
        return Err(Error::Dimension {
            expected: beats.len().saturating_sub(1),
            got: iv.len(),
        });
    }
    let normal = |k: usize| beats[k].kind == BeatType::Normal;
    let mut values = Vec::new();
    for p in 3..beats.len().saturating_sub(3) {
        if beats[p].kind != BeatType::Pvc {
            continue;
        }
        if !(normal(p - 3)
            && normal(p - 2)
            && normal(p - 1)
            && normal(p + 1)
            && normal(p + 2)
            && normal(p + 3))
        {
            continue;
        }
        let before = iv[p - 3].rr_ms + iv[p - 2].rr_ms;
        let after = iv[p + 1].rr_ms + iv[p + 2].rr_ms;
        values.push(100.0 * (after - before) / before);
    }
    stats::mean(&values).ok_or_else(|| Error::InsufficientData("no PVC with sinus context".into()))
}

/// Ectopic beat and pattern counts of one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TriggerCounts {
    pub bigeminy_episodes: usize,
    pub trigeminy_episodes: usize,
    pub nsvt_episodes: usize,
    pub pac_count: usize,
    /// Runs of exactly two consecutive PACs.
    pub pac_couplets: usize,
}

pub fn detect_triggers(series: &BeatSeries) -> TriggerCounts {
    detect_triggers_with(series, &FeatureConfig::default())
}

/// Counts trigger events. Episodes are maximal, non-overlapping matches
/// taken left to right:
///
/// - bigeminy: at least 3 consecutive `N V` pairs;
/// - trigeminy: at least 3 consecutive `N N V` triplets;
/// - NSVT: a maximal run of `nsvt_min_beats..=nsvt_max_beats` PVCs whose
///   every inner interval is faster than `nsvt_min_rate_bpm`.
pub fn detect_triggers_with(series: &BeatSeries, config: &FeatureConfig) -> TriggerCounts {
    use BeatType::{Normal as N, Pac as A, Pvc as V};
    let beats = series.beats();
    let kinds: Vec<BeatType> = beats.iter().map(|b| b.kind).collect();

    let nsvt_max_rr = 60_000.0 / config.nsvt_min_rate_bpm;
    let mut nsvt = 0;
    let mut pac_couplets = 0;
    let mut i = 0;
    while i < kinds.len() {
        let kind = kinds[i];
        let mut j = i;
        while j < kinds.len() && kinds[j] == kind {
            j += 1;
        }
        let run = j - i;
        match kind {
            V if (config.nsvt_min_beats..=config.nsvt_max_beats).contains(&run) => {
                let fast = beats[i..j]
                    .windows(2)
                    .all(|w| w[1].time_ms - w[0].time_ms < nsvt_max_rr);
                if fast {
                    nsvt += 1;
                }
            }
            A if run == 2 => pac_couplets += 1,
            _ => {}
        }
        i = j;
    }

    TriggerCounts {
        bigeminy_episodes: count_repeats(&kinds, &[N, V], 3),
        trigeminy_episodes: count_repeats(&kinds, &[N, N, V], 3),
        nsvt_episodes: nsvt,
        pac_count: kinds.iter().filter(|&&k| k == A).count(),
        pac_couplets,
    }
}

/// Number of maximal, non-overlapping runs of at least `min_repeats`
/// back-to-back copies of `unit`, scanning left to right.
fn count_repeats(kinds: &[BeatType], unit: &[BeatType], min_repeats: usize) -> usize {
    let matches_at = |pos: usize| kinds.get(pos..pos + unit.len()) == Some(unit);
    let mut episodes = 0;
    let mut i = 0;
    while i < kinds.len() {
        let mut reps = 0;
        while matches_at(i + reps * unit.len()) {
            reps += 1;
        }
        if reps >= min_repeats {
            episodes += 1;
            i += reps * unit.len();
        } else {
            i += 1;
        }
    }
    episodes
}

/// Every rhythm feature of one record; features that cannot be computed
/// are `None`.
pub fn compute_feature_row(
    series: &BeatSeries,
    config: &FeatureConfig,
) -> BTreeMap<String, Option<f64>> {
    let mut row: BTreeMap<String, Option<f64>> = RHYTHM_FEATURES
        .iter()
        .map(|n| (n.to_string(), None))
        .collect();
    let Ok(rr) = to_rr(series) else {
        return row;
    };
    let mut put = |name: &str, value: Result<f64>| {
        row.insert(name.to_string(), value.ok().filter(|v| v.is_finite()));
    };
    put(MIN_HEART_RATE, min_heart_rate(&rr, config.min_hr_window_s));
    put(MEAN_RR, mean_rr(&rr));
    put(SDANN, sdann(&rr, config.sdann_segment_s));
    put(POINCARE_SD2, poincare_sd2(&rr));
    put(HRV_INDEX, hrv_index(&rr, config.hrv_index_threshold_ms));
    put(TURBULENCE_ONSET, turbulence_onset(series, &rr));
    let t = detect_triggers_with(series, config);
    put(BIGEMINY, Ok(t.bigeminy_episodes as f64));
    put(TRIGEMINY, Ok(t.trigeminy_episodes as f64));
    put(NSVT, Ok(t.nsvt_episodes as f64));
    put(PAC, Ok(t.pac_count as f64));
    put(PAC_COUPLETS, Ok(t.pac_couplets as f64));
    row
}
