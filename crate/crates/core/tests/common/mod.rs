//! Random case generators and pipeline helpers shared by the integration
//! tests and the acceptance harness.

#![allow(dead_code)]

use std::cell::RefCell;

use arrhythmia_risk::dataset::{
    assign_hubs, generate_synthetic_cohort, synthesize_beat_series, Beat, BeatSeries,
    BeatSynthSpec, BeatType, FeatureMatrix, Hub, SynthSpec, SyntheticCohort,
};
use arrhythmia_risk::evaluation::{FittedModel, Model, NeuralPipeline, Pipeline, ProtocolConfig};
use arrhythmia_risk::neural::{
    init_network, Network, NetworkSpec, Sample, SubnetSpec, TrainingSet,
};
use arrhythmia_risk::selection::centered_target;
use arrhythmia_risk::stats::rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::oracles::Beats;

pub fn beats_of(series: &BeatSeries) -> Beats {
    series
        .beats()
        .iter()
        .map(|b| (b.time_ms, b.kind.code()))
        .collect()
}

/// Random beat series for the oracle comparisons. Even seeds use the
/// physiological synthesizer with randomized ectopy; odd seeds splice
/// random chunks of patterns (bigeminy, trigeminy, V runs, PAC couplets,
/// isolated ectopy) with independent RR intervals of 300 to 1200 ms.
pub fn random_beat_series(seed: u64) -> BeatSeries {
    let mut g = rng(seed);
    if seed.is_multiple_of(2) {
        let spec = BeatSynthSpec {
            duration_ms: g.random_range(660_000.0..1_500_000.0),
            mean_rr_ms: g.random_range(600.0..1000.0),
            rr_jitter_ms: g.random_range(5.0..60.0),
            pvc_probability: g.random_range(0.0..0.05),
            pac_probability: g.random_range(0.0..0.03),
            pac_couplet_probability: g.random_range(0.0..0.01),
            turbulence_percent: g.random_range(-6.0..3.0),
            bigeminy_runs: g.random_range(0..3),
            trigeminy_runs: g.random_range(0..3),
            nsvt_runs: g.random_range(0..3),
            ..BeatSynthSpec::default()
        };
        return synthesize_beat_series(&spec, seed).expect("synthesizer");
    }
    let chunks = ["N", "N", "N", "N", "V", "A", "O", "AA", "AAA", "NV", "NNV"];
    let target_ms = g.random_range(500_000.0..900_000.0);
    let mut codes = String::new();
    let mut t = 0.0;
    while t < target_ms {
        let chunk = chunks[g.random_range(0..chunks.len())];
        let reps = if chunk.len() >= 2 && chunk != "AA" && chunk != "AAA" {
            g.random_range(1..5)
        } else {
            1
        };
        let piece = if g.random_bool(0.05) {
            "V".repeat(g.random_range(2..35))
        } else {
            chunk.repeat(reps)
        };
        for _ in piece.chars() {
            t += g.random_range(300.0..1200.0);
        }
        codes.push_str(&piece);
    }
    let mut time = 0.0;
    let beats = codes
        .chars()
        .enumerate()
        .map(|(i, c)| {
            if i > 0 {
                // Ventricular runs are usually fast so NSVT rate checks pass and fail.
                time += if c == 'V' {
                    g.random_range(350.0..800.0)
                } else {
                    g.random_range(300.0..1200.0)
                };
            }
            Beat::new(time, BeatType::from_code(&c.to_string()).unwrap())
        })
        .collect();
    BeatSeries::from_beats(beats).expect("valid series")
}

/// Random standardized-scale instance of up to 25 rows and 12 columns.
/// Columns stay at least 3 fewer than rows: with more, the last ranking steps
/// are exact ties (every residual column spans the same one-dimensional
/// remainder) and their order is arbitrary.
pub fn selection_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut g = rng(seed);
    let n = g.random_range(4..=25);
    let p = g.random_range(1..=(n - 3).min(12));
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(g.random_bool(0.4))).collect();
    labels[0] = 0;
    labels[1] = 1;
    let y = centered_target(&labels);
    let cols = (0..p)
        .map(|_| {
            let shift: f64 = g.random_range(-1.0..1.0);
            (0..n)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(&mut g);
                    z + shift * y[i]
                })
                .collect()
        })
        .collect();
    (cols, y)
}

/// Random gradient-check case: a conventional or ad hoc topology, random
/// parameters, 3 to 15 rows with replication weights 1 to 3 and a weight
/// decay that is zero or log-uniform in [1e-4, 1].
pub fn gradient_case(seed: u64) -> (Network, TrainingSet, f64) {
    let mut g = rng(seed);
    let spec = if seed.is_multiple_of(2) {
        NetworkSpec::Conventional {
            n_inputs: g.random_range(1..=6),
            n_hidden: g.random_range(0..=4),
        }
    } else {
        let n_subnets = g.random_range(1..=3);
        let subnets = Hub::ALL[..n_subnets]
            .iter()
            .map(|&hub| SubnetSpec {
                hub,
                n_inputs: g.random_range(1..=4),
                n_hidden: g.random_range(0..=3),
            })
            .collect();
        NetworkSpec::Adhoc { subnets }
    };
    let net = init_network(&spec, g.random_range(0.1..2.0), seed).expect("network");
    let n = g.random_range(3..=15);
    let samples = (0..n)
        .map(|_| Sample {
            x: (0..spec.n_inputs())
                .map(|_| StandardNormal.sample(&mut g))
                .collect(),
            y: f64::from(u8::from(g.random_bool(0.4))),
            replication: g.random_range(1..=3),
        })
        .collect();
    let lambda = if g.random_bool(0.2) {
        0.0
    } else {
        10f64.powf(g.random_range(-4.0..0.0))
    };
    (net, TrainingSet { samples }, lambda)
}

/// Fast protocol settings for repeated cross-test runs: small grids, one
/// restart and short optimizer budgets.
pub fn light_protocol(seed: u64) -> ProtocolConfig {
    let mut cfg = ProtocolConfig {
        cv_folds: 3,
        hidden_candidates: vec![0, 1],
        weight_decays: vec![1e-3],
        seed,
        ..ProtocolConfig::default()
    };
    cfg.selection.n_probe_realizations = 20;
    cfg.training.n_restarts = 1;
    cfg.training.gd.epochs = 50;
    cfg.training.bfgs.max_iterations = 100;
    cfg
}

/// Complete synthetic cohort of the default shape (186 × 25, 44 positive).
pub fn planted_cohort(seed: u64) -> SyntheticCohort {
    generate_synthetic_cohort(&SynthSpec::default(), seed).expect("synthetic cohort")
}

/// Copy of the cohort matrix with `row`'s features replaced by large
/// values and its label flipped.
pub fn perturb_row(cohort: &SyntheticCohort, row: usize) -> FeatureMatrix {
    let m = &cohort.matrix;
    let rows = (0..m.n_rows())
        .map(|r| {
            if r == row {
                (0..m.n_features())
                    .map(|c| Some(1e3 * (c as f64 + 1.0)))
                    .collect()
            } else {
                m.row_cells(r).to_vec()
            }
        })
        .collect();
    let mut labels = m.labels().to_vec();
    labels[row] = 1 - labels[row];
    let plain = FeatureMatrix::new(
        m.patient_ids().to_vec(),
        m.feature_names().to_vec(),
        rows,
        labels,
    )
    .expect("matrix");
    assign_hubs(&plain, &cohort.hub_map).expect("hubs")
}

/// Wraps a [`NeuralPipeline`] and records every fitted network, in fold order.
pub struct RecordingPipeline {
    pub inner: NeuralPipeline,
    pub fitted: RefCell<Vec<FittedModel>>,
}

impl RecordingPipeline {
    pub fn new(inner: NeuralPipeline) -> Self {
        RecordingPipeline {
            inner,
            fitted: RefCell::new(Vec::new()),
        }
    }
}

impl Pipeline for RecordingPipeline {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> arrhythmia_risk::Result<Box<dyn Model>> {
        let model = self.inner.fit_model(train, seed)?;
        self.fitted.borrow_mut().push(model.clone());
        Ok(Box::new(model))
    }
}
