//! Synthetic cohorts and beat series with known ground truth.
//!
//! Real cohorts are private, so every statistical test of the pipeline runs on
//! data from here. Features within a hub share one latent factor; the
//! positive class is shifted by `delta` (in within-class standard deviations)
//! on the informative features only.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::beats::{Beat, BeatSeries, BeatType};
use super::cohort::{FeatureMatrix, PatientRecord};
use super::hubs::{Hub, HubMap};
use crate::config::KeyValues;
use crate::stats::{derive_seed, rng};
use crate::{Error, Result};

/// How the planted signal relates features to the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalShape {
    /// Positive-class mean shift: a single sigmoid neuron suffices.
    Linear,
    /// Informative features act in pairs, positives on the diagonal quadrants
    /// and negatives on the anti-diagonal; class means coincide, so no linear
    /// separator does better than chance.
    Xor,
}

impl std::str::FromStr for SignalShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(SignalShape::Linear),
            "xor" => Ok(SignalShape::Xor),
            other => Err(Error::Config(format!("unknown signal shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HubComposition {
    pub informative: usize,
    pub noise: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_patients: usize,
    pub n_positives: usize,
    /// Indexed by [`Hub::index`].
    pub hubs: [HubComposition; 3],
    pub delta: f64,
    pub signal: SignalShape,
    /// Share of each feature's variance explained by its hub's latent factor.
    pub hub_correlation: f64,
    /// Fraction of patients with at least one missing cell.
    pub missing_fraction: f64,
}

impl Default for SynthSpec {
    /// Cohort shape of 186 patients with 44 positives and 7/6/5 informative
    /// features per hub.
    fn default() -> Self {
        SynthSpec {
            n_patients: 186,
            n_positives: 44,
            hubs: [
                HubComposition {
                    informative: 7,
                    noise: 2,
                },
                HubComposition {
                    informative: 6,
                    noise: 2,
                },
                HubComposition {
                    informative: 5,
                    noise: 3,
                },
            ],
            delta: 1.0,
            signal: SignalShape::Linear,
            hub_correlation: 0.3,
            missing_fraction: 0.0,
        }
    }
}

impl SynthSpec {
    pub const KEYS: &'static [&'static str] = &[
        "n_patients",
        "n_positives",
        "substrate_informative",
        "substrate_noise",
        "ans_informative",
        "ans_noise",
        "triggers_informative",
        "triggers_noise",
        "delta",
        "signal",
        "hub_correlation",
        "missing_fraction",
    ];

    /// Overrides defaults from `key = value` entries; unknown keys are left
    /// for the caller to check.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut spec = SynthSpec::default();
        if let Some(v) = kv.parsed("n_patients")? {
            spec.n_patients = v;
        }
        if let Some(v) = kv.parsed("n_positives")? {
            spec.n_positives = v;
        }
        for hub in Hub::ALL {
            let prefix = hub.as_str().to_lowercase();
            if let Some(v) = kv.parsed(&format!("{prefix}_informative"))? {
                spec.hubs[hub.index()].informative = v;
            }
            if let Some(v) = kv.parsed(&format!("{prefix}_noise"))? {
                spec.hubs[hub.index()].noise = v;
            }
        }
        if let Some(v) = kv.parsed("delta")? {
            spec.delta = v;
        }
        if let Some(v) = kv.parsed("signal")? {
            spec.signal = v;
        }
        if let Some(v) = kv.parsed("hub_correlation")? {
            spec.hub_correlation = v;
        }
        if let Some(v) = kv.parsed("missing_fraction")? {
            spec.missing_fraction = v;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_positives > self.n_patients {
            return Err(Error::Config(format!(
                "n_positives ({}) exceeds n_patients ({})",
                self.n_positives, self.n_patients
            )));
        }
        if self.n_patients == 0 {
            return Err(Error::Config("n_patients must be positive".into()));
        }
        if self.hubs.iter().all(|h| h.informative + h.noise == 0) {
            return Err(Error::Config("cohort needs at least one feature".into()));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if !(0.0..1.0).contains(&self.hub_correlation) {
            return Err(Error::Config(format!(
                "hub_correlation must lie in [0, 1), got {}",
                self.hub_correlation
            )));
        }
        if !(0.0..=1.0).contains(&self.missing_fraction) {
            return Err(Error::Config(format!(
                "missing_fraction must lie in [0, 1], got {}",
                self.missing_fraction
            )));
        }
        Ok(())
    }
}

/// A generated cohort together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub records: Vec<PatientRecord>,
    /// Hub-tagged; incomplete rows included.
    pub matrix: FeatureMatrix,
    pub hub_map: HubMap,
    /// Names of the features that carry planted signal.
    pub informative: Vec<String>,
}

fn feature_name(hub: Hub, k: usize) -> String {
    let prefix = match hub {
        Hub::Substrate => "sub",
        Hub::Ans => "ans",
        Hub::Triggers => "trg",
    };
    format!("{prefix}_{:02}", k + 1)
}

pub fn generate_synthetic_cohort(spec: &SynthSpec, seed: u64) -> Result<SyntheticCohort> {
    spec.validate()?;
    let mut label_rng = rng(derive_seed(seed, 0));
    let mut feature_rng = rng(derive_seed(seed, 1));
    let mut missing_rng = rng(derive_seed(seed, 2));

    let n = spec.n_patients;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut label_rng);
    let mut labels = vec![0u8; n];
    for &i in &order[..spec.n_positives] {
        labels[i] = 1;
    }

    let mut names = Vec::new();
    let mut hub_map = HubMap::new();
    let mut informative = Vec::new();
    for hub in Hub::ALL {
        let comp = spec.hubs[hub.index()];
        for k in 0..comp.informative + comp.noise {
            let name = feature_name(hub, k);
            hub_map.insert(name.clone(), hub);
            if k < comp.informative {
                informative.push(name.clone());
            }
            names.push(name);
        }
    }

    let loading = spec.hub_correlation.sqrt();
    let unique = (1.0 - spec.hub_correlation).sqrt();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::with_capacity(n);
    for &label in &labels {
        let mut row = Vec::with_capacity(names.len());
        for hub in Hub::ALL {
            let comp = spec.hubs[hub.index()];
            let factor: f64 = StandardNormal.sample(&mut feature_rng);
            let shifts = planted_shifts(spec, comp.informative, label, &mut feature_rng);
            for k in 0..comp.informative + comp.noise {
                let e: f64 = StandardNormal.sample(&mut feature_rng);
                let shift = shifts.get(k).copied().unwrap_or(0.0);
                row.push(Some(loading * factor + unique * e + shift));
            }
        }
        rows.push(row);
    }

    let n_incomplete = (spec.missing_fraction * n as f64).round() as usize;
    if n_incomplete > 0 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut missing_rng);
        let n_cols = names.len();
        for &r in &idx[..n_incomplete.min(n)] {
            let n_blank = missing_rng.random_range(1..=n_cols.min(3));
            let mut cols: Vec<usize> = (0..n_cols).collect();
            cols.shuffle(&mut missing_rng);
            for &c in &cols[..n_blank] {
                rows[r][c] = None;
            }
        }
    }

    let ids: Vec<String> = (0..n).map(|i| format!("P{:04}", i + 1)).collect();
    let matrix = FeatureMatrix::new(ids, names, rows, labels)?;
    let matrix = super::cohort::assign_hubs(&matrix, &hub_map)?;
    Ok(SyntheticCohort {
        records: matrix.records(),
        matrix,
        hub_map,
        informative,
    })
}

fn planted_shifts<R: Rng>(
    spec: &SynthSpec,
    n_informative: usize,
    label: u8,
    rng: &mut R,
) -> Vec<f64> {
    let d = spec.delta;
    let y = f64::from(label);
    match spec.signal {
        SignalShape::Linear => vec![d * y; n_informative],
        SignalShape::Xor => {
            let mut shifts = Vec::with_capacity(n_informative);
            let mut k = 0;
            while k + 1 < n_informative {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let t = if label == 1 { s } else { -s };
                shifts.push(s * d / 2.0);
                shifts.push(t * d / 2.0);
                k += 2;
            }
            if k < n_informative {
                shifts.push(d * y);
            }
            shifts
        }
    }
}

/// Parameters for [`synthesize_beat_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSynthSpec {
    pub duration_ms: f64,
    pub mean_rr_ms: f64,
    /// Standard deviation of the beat-to-beat (AR(1)) fluctuation.
    pub rr_jitter_ms: f64,
    /// Amplitude of a slow sinusoidal drift of the sinus rate.
    pub drift_ms: f64,
    pub drift_period_ms: f64,
    /// Per sinus beat probability of an isolated PVC.
    pub pvc_probability: f64,
    pub pac_probability: f64,
    pub pac_couplet_probability: f64,
    /// Relative change of the two post-PVC sinus intervals, in percent.
    pub turbulence_percent: f64,
    pub bigeminy_runs: usize,
    pub trigeminy_runs: usize,
    pub nsvt_runs: usize,
}

impl Default for BeatSynthSpec {
    fn default() -> Self {
        BeatSynthSpec {
            duration_ms: 1_800_000.0,
            mean_rr_ms: 850.0,
            rr_jitter_ms: 25.0,
            drift_ms: 40.0,
            drift_period_ms: 600_000.0,
            pvc_probability: 0.005,
            pac_probability: 0.004,
            pac_couplet_probability: 0.001,
            turbulence_percent: -2.0,
            bigeminy_runs: 1,
            trigeminy_runs: 1,
            nsvt_runs: 1,
        }
    }
}

/// Generates a sinus rhythm with ectopic events: isolated PVCs followed by a
/// compensatory pause and turbulence, PACs and PAC couplets, plus scheduled
/// bigeminy, trigeminy and NSVT runs.
pub fn synthesize_beat_series(spec: &BeatSynthSpec, seed: u64) -> Result<BeatSeries> {
    if !(spec.duration_ms > 0.0 && spec.mean_rr_ms > 0.0) {
        return Err(Error::Config(
            "beat synthesis needs positive duration and mean RR".into(),
        ));
    }
    let mut rng = rng(seed);
    let mut scheduled: Vec<(f64, Episode)> = Vec::new();
    for (count, kind) in [
        (spec.bigeminy_runs, Episode::Bigeminy),
        (spec.trigeminy_runs, Episode::Trigeminy),
        (spec.nsvt_runs, Episode::Nsvt),
    ] {
        for _ in 0..count {
            scheduled.push((rng.random_range(0.0..spec.duration_ms * 0.9), kind));
        }
    }
    scheduled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut scheduled = scheduled.into_iter().peekable();

    let mut beats = vec![Beat::new(0.0, BeatType::Normal)];
    let mut t = 0.0;
    let mut ar = 0.0;
    let mut since_event = 0usize;
    let rho: f64 = 0.7;
    let innov = spec.rr_jitter_ms * (1.0 - rho * rho).sqrt();
    let floor = spec.mean_rr_ms * 0.3;

    let push = |beats: &mut Vec<Beat>, t: &mut f64, rr: f64, kind: BeatType| {
        *t += rr.max(floor);
        beats.push(Beat::new(*t, kind));
    };

    while t < spec.duration_ms {
        let z: f64 = StandardNormal.sample(&mut rng);
        ar = rho * ar + innov * z;
        let base = spec.mean_rr_ms
            + spec.drift_ms * (2.0 * std::f64::consts::PI * t / spec.drift_period_ms).sin()
            + ar;
        let base = base.max(floor);

        if since_event >= 4 {
            if let Some(&(start, kind)) = scheduled.peek() {
                if t >= start {
                    scheduled.next();
                    match kind {
                        Episode::Bigeminy => {
                            for _ in 0..4 {
                                push(&mut beats, &mut t, 0.6 * base, BeatType::Pvc);
                                push(&mut beats, &mut t, 1.4 * base, BeatType::Normal);
                            }
                        }
                        Episode::Trigeminy => {
                            for _ in 0..3 {
                                push(&mut beats, &mut t, base, BeatType::Normal);
                                push(&mut beats, &mut t, 0.6 * base, BeatType::Pvc);
                                push(&mut beats, &mut t, 1.4 * base, BeatType::Normal);
                            }
                        }
                        Episode::Nsvt => {
                            let n = rng.random_range(3..=8);
                            for _ in 0..n {
                                push(&mut beats, &mut t, 450.0, BeatType::Pvc);
                            }
                            push(&mut beats, &mut t, 1.5 * base, BeatType::Normal);
                        }
                    }
                    since_event = 0;
                    continue;
                }
            }
            let u: f64 = rng.random();
            if u < spec.pvc_probability {
                let coupling = 0.6 * base;
                push(&mut beats, &mut t, coupling, BeatType::Pvc);
                push(&mut beats, &mut t, 2.0 * base - coupling, BeatType::Normal);
                let factor = 1.0 + spec.turbulence_percent / 100.0;
                push(&mut beats, &mut t, base * factor, BeatType::Normal);
                push(&mut beats, &mut t, base * factor, BeatType::Normal);
                since_event = 0;
                continue;
            }
            let u = u - spec.pvc_probability;
            if u >= 0.0 && u < spec.pac_probability {
                push(&mut beats, &mut t, 0.75 * base, BeatType::Pac);
                push(&mut beats, &mut t, base, BeatType::Normal);
                since_event = 0;
                continue;
            }
            let u = u - spec.pac_probability;
            if u >= 0.0 && u < spec.pac_couplet_probability {
                push(&mut beats, &mut t, 0.75 * base, BeatType::Pac);
                push(&mut beats, &mut t, 0.7 * base, BeatType::Pac);
                push(&mut beats, &mut t, base, BeatType::Normal);
                since_event = 0;
                continue;
            }
        }
        push(&mut beats, &mut t, base, BeatType::Normal);
        since_event += 1;
    }
    while beats.last().is_some_and(|b| b.time_ms > spec.duration_ms) {
        beats.pop();
    }
    BeatSeries::new(beats, spec.duration_ms)
}

#[derive(Debug, Clone, Copy)]
enum Episode {
    Bigeminy,
    Trigeminy,
    Nsvt,
}
