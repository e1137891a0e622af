//! Cohort ingestion, hub assignment, scaling and synthetic data.

mod beats;
mod cohort;
mod hubs;
mod synth;

pub use beats::{load_beat_series, write_beat_series, Beat, BeatSeries, BeatType};
pub use cohort::{
    assign_hubs, filter_complete, load_cohort, read_cohort, standardize, write_cohort,
    write_cohort_to, FeatureMatrix, PatientRecord, ScalingParams,
};
pub use hubs::{Hub, HubMap};
pub use synth::{
    generate_synthetic_cohort, synthesize_beat_series, BeatSynthSpec, HubComposition, SignalShape,
    SynthSpec, SyntheticCohort,
};
