use std::fmt;
use std::str::FromStr;

use log::{info, warn};

use super::folds::{make_folds, FoldPlan};
use super::metrics::{
    aggregate, compare_classifiers, metrics, summarize, ConfusionMatrix, Metrics, Summary,
};
use crate::config::KeyValues;
use crate::dataset::{FeatureMatrix, Hub, ScalingParams};
use crate::neural::{
    assemble_and_finetune, pretrain_subnetworks, train_all_restarts, train_with_restarts, HubTask,
    Network, NetworkSpec, TrainingConfig, TrainingSet,
};
use crate::selection::{select_per_hub, SelectionConfig, SelectionReport};
use crate::stats::derive_seed;
use crate::{Error, Result};

/// One point of the complexity grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub n_hidden: usize,
    pub weight_decay: f64,
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h={} lambda={}", self.n_hidden, self.weight_decay)
    }
}

/// Every hidden count paired with every weight decay.
pub fn candidate_grid(hidden: &[usize], weight_decays: &[f64]) -> Vec<Candidate> {
    hidden
        .iter()
        .flat_map(|&n_hidden| {
            weight_decays.iter().map(move |&weight_decay| Candidate {
                n_hidden,
                weight_decay,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub candidate: Candidate,
    pub n_params: usize,
    /// Per fold validation MSE.
    pub fold_mse: Vec<f64>,
    /// Mean of `fold_mse`; `None` when training failed.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityChoice {
    pub best: Candidate,
    pub scores: Vec<CandidateScore>,
}

/// Which restart's validation error scores a cross-validation fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvScoring {
    /// The restart with the smallest training cost, as in final training.
    TrainingCost,
    /// The smallest validation MSE over all restarts.
    MinValidation,
}

impl CvScoring {
    pub fn as_str(self) -> &'static str {
        match self {
            CvScoring::TrainingCost => "training_cost",
            CvScoring::MinValidation => "min_validation",
        }
    }
}

impl FromStr for CvScoring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training_cost" => Ok(CvScoring::TrainingCost),
            "min_validation" => Ok(CvScoring::MinValidation),
            other => Err(Error::Config(format!(
                "unknown cv restart score `{other}` (training_cost or min_validation)"
            ))),
        }
    }
}

/// K-fold cross-validation over `candidates` for a conventional network on
/// `data`. Each fold trains every restart on the other folds (oversampled
/// when configured) and scores the fold by validation MSE, the restart being
/// picked by `scoring`. The lowest mean over folds wins, ties going to fewer
/// parameters and then smaller decay. Restart seeds depend on the fold only,
/// so all candidates share them.
pub fn cross_validate_complexity(
    data: &TrainingSet,
    candidates: &[Candidate],
    plan: &FoldPlan,
    config: &TrainingConfig,
    scoring: CvScoring,
) -> Result<ComplexityChoice> {
    if candidates.is_empty() {
        return Err(Error::Config("no complexity candidates".into()));
    }
    if plan.n_rows() != data.len() {
        return Err(Error::Dimension {
            expected: data.len(),
            got: plan.n_rows(),
        });
    }
    let n_inputs = data.samples.first().map_or(0, |s| s.x.len());
    let folds: Vec<(TrainingSet, TrainingSet)> = (0..plan.k())
        .map(|f| {
            (
                subset(data, &plan.train_rows(f)),
                subset(data, &plan.test_rows(f)),
            )
        })
        .collect();

    let mut scores = Vec::with_capacity(candidates.len());
    for &candidate in candidates {
        let spec = NetworkSpec::Conventional {
            n_inputs,
            n_hidden: candidate.n_hidden,
        };
        let evaluate = || -> Result<Vec<f64>> {
            let mut fold_mse = Vec::with_capacity(folds.len());
            for (f, (train, valid)) in folds.iter().enumerate() {
                let cfg = TrainingConfig {
                    weight_decay: candidate.weight_decay,
                    seed: derive_seed(config.seed, f as u64),
                    ..config.clone()
                };
                let restarts = train_all_restarts(&spec, train, &cfg)?;
                let mse = match scoring {
                    CvScoring::TrainingCost => {
                        let kept = restarts
                            .iter()
                            .reduce(|best, t| if t.cost < best.cost { t } else { best })
                            .expect("at least one restart");
                        valid.mse(&kept.network)?
                    }
                    CvScoring::MinValidation => {
                        let mut best = f64::INFINITY;
                        for t in &restarts {
                            best = best.min(valid.mse(&t.network)?);
                        }
                        best
                    }
                };
                fold_mse.push(mse);
            }
            Ok(fold_mse)
        };
        let (fold_mse, score) = match evaluate() {
            Ok(v) => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (v, Some(mean))
            }
            Err(e) => {
                warn!("candidate {candidate} failed: {e}");
                (Vec::new(), None)
            }
        };
        scores.push(CandidateScore {
            candidate,
            n_params: spec.n_params(),
            fold_mse,
            score,
        });
    }

    let best = scores
        .iter()
        .filter(|s| s.score.is_some())
        .min_by(|a, b| {
            a.score
                .partial_cmp(&b.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.n_params.cmp(&b.n_params))
                .then(
                    a.candidate
                        .weight_decay
                        .total_cmp(&b.candidate.weight_decay),
                )
        })
        .map(|s| s.candidate)
        .ok_or_else(|| Error::Diverged("every complexity candidate failed".into()))?;
    Ok(ComplexityChoice { best, scores })
}

fn subset(data: &TrainingSet, rows: &[usize]) -> TrainingSet {
    TrainingSet {
        samples: rows.iter().map(|&r| data.samples[r].clone()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Conventional,
    Adhoc,
}

impl Architecture {
    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::Adhoc => "adhoc",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where feature selection runs during cross-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Inside every training fold, on training rows only.
    PerFold,
    /// Once on the whole cohort (or from a supplied list), reused by every fold.
    Global,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::PerFold => "per_fold",
            SelectionMode::Global => "global",
        }
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_fold" => Ok(SelectionMode::PerFold),
            "global" => Ok(SelectionMode::Global),
            other => Err(Error::Config(format!(
                "unknown selection mode `{other}` (per_fold or global)"
            ))),
        }
    }
}

/// Everything the evaluation protocol needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// K of the complexity-selection cross-validation.
    pub cv_folds: usize,
    /// K' of the cross-test.
    pub test_folds: usize,
    pub stratified: bool,
    pub cv_scoring: CvScoring,
    pub hidden_candidates: Vec<usize>,
    pub weight_decays: Vec<f64>,
    /// Output at or above which an implant is recommended.
    pub threshold: f64,
    pub selection_mode: SelectionMode,
    pub selection: SelectionConfig,
    pub training: TrainingConfig,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            cv_folds: 10,
            test_folds: 10,
            stratified: true,
            cv_scoring: CvScoring::TrainingCost,
            hidden_candidates: vec![0, 1, 2, 3],
            weight_decays: vec![1e-4, 1e-3, 1e-2],
            threshold: 0.5,
            selection_mode: SelectionMode::PerFold,
            selection: SelectionConfig::default(),
            training: TrainingConfig::default(),
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub const KEYS: &'static [&'static str] = &[
        "cv_folds",
        "test_folds",
        "stratified",
        "cv_restart_score",
        "hidden_candidates",
        "weight_decays",
        "threshold",
        "selection_mode",
    ];

    /// Applies protocol, selection and training keys from `kv`.
    pub fn update_from(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parsed("cv_folds")? {
            self.cv_folds = v;
        }
        if let Some(v) = kv.parsed("test_folds")? {
            self.test_folds = v;
        }
        if let Some(v) = kv.parsed("stratified")? {
            self.stratified = v;
        }
        if let Some(v) = kv.parsed("cv_restart_score")? {
            self.cv_scoring = v;
        }
        if let Some(v) = kv.parsed_list("hidden_candidates")? {
            self.hidden_candidates = v;
        }
        if let Some(v) = kv.parsed_list("weight_decays")? {
            self.weight_decays = v;
        }
        if let Some(v) = kv.parsed("threshold")? {
            self.threshold = v;
        }
        if let Some(v) = kv.parsed("selection_mode")? {
            self.selection_mode = v;
        }
        self.selection.update_from(kv)?;
        self.training.update_from(kv)?;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cv_folds < 2 || self.test_folds < 2 {
            return Err(Error::Config("fold counts must be at least 2".into()));
        }
        if self.hidden_candidates.is_empty() || self.weight_decays.is_empty() {
            return Err(Error::Config("the complexity grid is empty".into()));
        }
        if self.weight_decays.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::Config("weight decays must be >= 0".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config("threshold must lie in (0, 1)".into()));
        }
        self.selection.validate()?;
        self.training.validate()
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        candidate_grid(&self.hidden_candidates, &self.weight_decays)
    }
}

/// A model fitted on training rows that scores unseen rows.
pub trait Model {
    /// One probability per row of `matrix`.
    fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>>;

    /// Input features, in network input order.
    fn features(&self) -> Vec<String> {
        Vec::new()
    }

    /// Short description of the chosen complexity.
    fn complexity(&self) -> String {
        String::new()
    }
}

/// Fits a [`Model`] using only the rows it is given.
pub trait Pipeline {
    fn name(&self) -> String;

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> Result<Box<dyn Model>>;
}

/// A standardize-then-network model.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub architecture: Architecture,
    pub scaling: ScalingParams,
    pub network: Network,
    /// Chosen complexity per hub (`None` for the conventional network).
    pub complexity: Vec<(Option<Hub>, Candidate)>,
    /// Selection run on the training rows, when selection was per fold.
    pub selection: Option<SelectionReport>,
}

impl Model for FittedModel {
    fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        matrix
            .dense_rows(&self.scaling.feature_names)?
            .iter()
            .map(|row| self.network.forward(&self.scaling.apply_dense(row)))
            .collect()
    }

    fn features(&self) -> Vec<String> {
        self.scaling.feature_names.clone()
    }

    fn complexity(&self) -> String {
        self.complexity
            .iter()
            .map(|(hub, c)| match hub {
                Some(h) => format!("{h}:h={}/lambda={}", c.n_hidden, c.weight_decay),
                None => format!("h={}/lambda={}", c.n_hidden, c.weight_decay),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Selection, standardization, complexity cross-validation and training of
/// one architecture.
#[derive(Debug, Clone)]
pub struct NeuralPipeline {
    pub architecture: Architecture,
    pub config: ProtocolConfig,
    /// Features to use in place of per-fold selection.
    pub fixed_features: Option<Vec<String>>,
}

impl NeuralPipeline {
    pub fn new(architecture: Architecture, config: ProtocolConfig) -> Self {
        NeuralPipeline {
            architecture,
            config,
            fixed_features: None,
        }
    }

    pub fn with_features(mut self, features: Vec<String>) -> Self {
        self.fixed_features = Some(features);
        self
    }

    /// Like [`Pipeline::fit`] but returns the concrete model.
    pub fn fit_model(&self, train: &FeatureMatrix, seed: u64) -> Result<FittedModel> {
        let cfg = &self.config;
        let (features, selection) = match &self.fixed_features {
            Some(f) => (f.clone(), None),
            None => {
                let sel_cfg = SelectionConfig {
                    seed: derive_seed(seed, 0),
                    ..cfg.selection.clone()
                };
                let report =
                    select_per_hub(train, &sel_cfg).map_err(|e| e.in_stage("feature selection"))?;
                (features_or_fallback(&report)?, Some(report))
            }
        };
        if features.is_empty() {
            return Err(Error::InsufficientData("no input features".into()));
        }
        let features = match self.architecture {
            Architecture::Conventional => features,
            Architecture::Adhoc => order_by_hub(train, &features)?
                .into_iter()
                .flat_map(|(_, f)| f)
                .collect(),
        };
        let scaling = ScalingParams::fit(train, &features)?;
        let rows: Vec<Vec<f64>> = train
            .dense_rows(&features)?
            .iter()
            .map(|r| scaling.apply_dense(r))
            .collect();
        let data = TrainingSet::new(rows, train.labels())?;
        let plan = make_folds(
            train.labels(),
            cfg.cv_folds,
            cfg.stratified,
            derive_seed(seed, 1),
        )?;
        let training = TrainingConfig {
            seed: derive_seed(seed, 2),
            ..cfg.training.clone()
        };
        let candidates = cfg.candidates();

        let (network, complexity) = match self.architecture {
            Architecture::Conventional => {
                let choice =
                    cross_validate_complexity(&data, &candidates, &plan, &training, cfg.cv_scoring)
                        .map_err(|e| e.in_stage("complexity selection"))?;
                let spec = NetworkSpec::Conventional {
                    n_inputs: features.len(),
                    n_hidden: choice.best.n_hidden,
                };
                let final_cfg = TrainingConfig {
                    weight_decay: choice.best.weight_decay,
                    seed: derive_seed(seed, 3),
                    ..cfg.training.clone()
                };
                let trained = train_with_restarts(&spec, &data, &final_cfg)
                    .map_err(|e| e.in_stage("training"))?;
                (trained.network, vec![(None, choice.best)])
            }
            Architecture::Adhoc => {
                let groups = order_by_hub(train, &features)?;
                let mut tasks = Vec::with_capacity(groups.len());
                let mut complexity = Vec::with_capacity(groups.len());
                let mut start = 0;
                for (hub, names) in &groups {
                    let hub_data = data.slice_inputs(start..start + names.len());
                    start += names.len();
                    let choice = cross_validate_complexity(
                        &hub_data,
                        &candidates,
                        &plan,
                        &training,
                        cfg.cv_scoring,
                    )
                    .map_err(|e| e.in_stage(format!("complexity selection for hub {hub}")))?;
                    complexity.push((Some(*hub), choice.best));
                    tasks.push(HubTask {
                        hub: *hub,
                        data: hub_data,
                        n_hidden: choice.best.n_hidden,
                        weight_decay: choice.best.weight_decay,
                    });
                }
                let pre_cfg = TrainingConfig {
                    seed: derive_seed(seed, 3),
                    ..cfg.training.clone()
                };
                let subnets = pretrain_subnetworks(&tasks, &pre_cfg)
                    .map_err(|e| e.in_stage("subnetwork pretraining"))?;
                let fine_cfg = TrainingConfig {
                    weight_decay: complexity
                        .iter()
                        .map(|(_, c)| c.weight_decay)
                        .fold(f64::INFINITY, f64::min),
                    seed: derive_seed(seed, 4),
                    ..cfg.training.clone()
                };
                let trained = assemble_and_finetune(&subnets, &data, &fine_cfg)
                    .map_err(|e| e.in_stage("fine-tuning"))?;
                (trained.network, complexity)
            }
        };
        Ok(FittedModel {
            architecture: self.architecture,
            scaling,
            network,
            complexity,
            selection,
        })
    }
}

impl Pipeline for NeuralPipeline {
    fn name(&self) -> String {
        self.architecture.to_string()
    }

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> Result<Box<dyn Model>> {
        Ok(Box::new(self.fit_model(train, seed)?))
    }
}

/// Selected features, or the best-ranked one when nothing passes the risk
/// threshold.
pub fn features_or_fallback(report: &SelectionReport) -> Result<Vec<String>> {
    let selected = report.selected();
    if !selected.is_empty() {
        return Ok(selected);
    }
    let best = report
        .best_ranked()
        .ok_or_else(|| Error::InsufficientData("no rankable feature".into()))?;
    warn!("no feature passes the risk threshold; falling back to `{best}`");
    Ok(vec![best])
}

/// Groups `features` by hub in hub order, keeping their relative order.
/// Hubs without features are left out.
fn order_by_hub(matrix: &FeatureMatrix, features: &[String]) -> Result<Vec<(Hub, Vec<String>)>> {
    let untagged: Vec<String> = features
        .iter()
        .filter(|f| matrix.hub_of(f).is_none())
        .cloned()
        .collect();
    if !untagged.is_empty() {
        return Err(Error::UnmappedFeatures(untagged));
    }
    let mut groups = Vec::new();
    for hub in Hub::ALL {
        let names: Vec<String> = features
            .iter()
            .filter(|f| matrix.hub_of(f) == Some(hub))
            .cloned()
            .collect();
        if names.is_empty() {
            warn!("hub {hub} has no selected feature; its subnetwork is omitted");
        } else {
            groups.push((hub, names));
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub test_rows: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub features: Vec<String>,
    pub complexity: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossTestResult {
    pub name: String,
    pub folds: Vec<FoldOutcome>,
    /// Sum of the per-fold matrices.
    pub pooled: ConfusionMatrix,
    pub pooled_metrics: Metrics,
    pub npv: Summary,
    pub ppv: Summary,
    pub implant_reduction: Summary,
    pub correct: Summary,
}

impl CrossTestResult {
    pub fn correct_per_fold(&self) -> Vec<f64> {
        self.folds
            .iter()
            .map(|f| f.confusion.correct() as f64)
            .collect()
    }
}

/// K'-fold cross-test: fits `pipeline` on all folds but one, scores the
/// held-out fold at `threshold`, and repeats so every row is scored once.
/// Fold `f` is fitted with seed `derive_seed(seed, f)`.
pub fn cross_test(
    matrix: &FeatureMatrix,
    plan: &FoldPlan,
    pipeline: &dyn Pipeline,
    threshold: f64,
    seed: u64,
) -> Result<CrossTestResult> {
    plan.check()?;
    if plan.n_rows() != matrix.n_rows() {
        return Err(Error::Dimension {
            expected: matrix.n_rows(),
            got: plan.n_rows(),
        });
    }
    let mut scored = vec![false; matrix.n_rows()];
    let mut folds = Vec::with_capacity(plan.k());
    for f in 0..plan.k() {
        let test_rows = plan.test_rows(f);
        let train = matrix.select_rows(&plan.train_rows(f));
        let test = matrix.select_rows(&test_rows);
        let stage = format!("{} fold {}", pipeline.name(), f + 1);
        let model = pipeline
            .fit(&train, derive_seed(seed, f as u64))
            .map_err(|e| e.in_stage(stage.clone()))?;
        let probabilities = model
            .predict(&test)
            .map_err(|e| e.in_stage(stage.clone()))?;
        let predicted: Vec<bool> = probabilities.iter().map(|&p| p >= threshold).collect();
        let confusion = ConfusionMatrix::from_predictions(test.labels(), &predicted);
        let m = metrics(&confusion);
        if m.npv.is_none() || m.ppv.is_none() {
            warn!("{stage}: NPV or PPV undefined (zero denominator); excluded from the fold mean");
        }
        for &r in &test_rows {
            if scored[r] {
                return Err(Error::Config(format!("row {r} held out twice")));
            }
            scored[r] = true;
        }
        info!("{stage}: {confusion:?}");
        folds.push(FoldOutcome {
            fold: f,
            test_rows,
            probabilities,
            confusion,
            metrics: m,
            features: model.features(),
            complexity: model.complexity(),
        });
    }
    if let Some(r) = scored.iter().position(|s| !s) {
        return Err(Error::Config(format!("row {r} never held out")));
    }
    let pooled = aggregate(&folds.iter().map(|f| f.confusion).collect::<Vec<_>>())?;
    let col = |get: fn(&Metrics) -> Option<f64>| {
        summarize(&folds.iter().map(|f| get(&f.metrics)).collect::<Vec<_>>())
    };
    Ok(CrossTestResult {
        name: pipeline.name(),
        pooled,
        pooled_metrics: metrics(&pooled),
        npv: col(|m| m.npv),
        ppv: col(|m| m.ppv),
        implant_reduction: col(|m| m.implant_reduction),
        correct: col(|m| Some(m.correctly_classified as f64)),
        folds,
    })
}

/// Cross-test results of both architectures on shared folds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub config: ProtocolConfig,
    pub n_patients: usize,
    pub n_positive: usize,
    pub plan: FoldPlan,
    /// Selection on the whole cohort, in global mode when computed here.
    pub global_selection: Option<SelectionReport>,
    /// Features shared by all folds in global mode.
    pub global_features: Option<Vec<String>>,
    pub conventional: CrossTestResult,
    pub adhoc: CrossTestResult,
    /// One-sided sign-flip p-value for "ad hoc classifies more patients
    /// correctly than conventional".
    pub p_value: f64,
}

/// Selection, complexity selection and cross-test for the conventional and
/// ad hoc networks on identical folds. `features` overrides global selection.
pub fn run_full_protocol(
    matrix: &FeatureMatrix,
    config: &ProtocolConfig,
    features: Option<Vec<String>>,
) -> Result<EvaluationReport> {
    config.validate()?;
    if !matrix.is_complete() {
        return Err(Error::InsufficientData(
            "cohort has missing values; filter it first".into(),
        ));
    }
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyCohort);
    }
    let seed = config.seed;
    let plan = make_folds(
        matrix.labels(),
        config.test_folds,
        config.stratified,
        derive_seed(seed, 1),
    )?;

    let (global_selection, global_features) = match (config.selection_mode, features) {
        (_, Some(f)) => {
            matrix.column_indices(&f)?;
            (None, Some(f))
        }
        (SelectionMode::Global, None) => {
            let sel_cfg = SelectionConfig {
                seed: derive_seed(seed, 2),
                ..config.selection.clone()
            };
            let report =
                select_per_hub(matrix, &sel_cfg).map_err(|e| e.in_stage("feature selection"))?;
            let f = features_or_fallback(&report)?;
            (Some(report), Some(f))
        }
        (SelectionMode::PerFold, None) => (None, None),
    };

    let fold_seed = derive_seed(seed, 3);
    let run = |arch: Architecture| {
        let mut p = NeuralPipeline::new(arch, config.clone());
        p.fixed_features = global_features.clone();
        info!("cross-test of the {arch} network");
        cross_test(matrix, &plan, &p, config.threshold, fold_seed)
    };
    let conventional = run(Architecture::Conventional)?;
    let adhoc = run(Architecture::Adhoc)?;
    let p_value = compare_classifiers(&conventional.correct_per_fold(), &adhoc.correct_per_fold())?;
    Ok(EvaluationReport {
        config: config.clone(),
        n_patients: matrix.n_rows(),
        n_positive: matrix.n_positive(),
        plan,
        global_selection,
        global_features,
        conventional,
        adhoc,
        p_value,
    })
}
