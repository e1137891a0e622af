use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use super::network::{
    adhoc_blocks, forward_backward, forward_params, init_network, Network, NetworkSpec, SubnetSpec,
    Workspace,
};
use super::optim::{bfgs, gradient_descent, BfgsConfig, GdConfig, Objective};
use crate::config::KeyValues;
use crate::dataset::Hub;
use crate::stats::{derive_seed, rng};
use crate::{Error, Result};

/// One training row; `replication` counts how many times it enters the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
    pub replication: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub samples: Vec<Sample>,
}

impl TrainingSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: &[u8]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Config(format!("label {l} is not 0 or 1")));
        }
        Ok(TrainingSet {
            samples: rows
                .into_iter()
                .zip(labels)
                .map(|(x, &l)| Sample {
                    x,
                    y: f64::from(l),
                    replication: 1,
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| f64::from(s.replication)).sum()
    }

    /// Weighted count of positive rows.
    pub fn positive_weight(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.y == 1.0)
            .map(|s| f64::from(s.replication))
            .sum()
    }

    /// The same rows restricted to input columns `range`.
    pub fn slice_inputs(&self, range: std::ops::Range<usize>) -> TrainingSet {
        TrainingSet {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    x: s.x[range.clone()].to_vec(),
                    ..s.clone()
                })
                .collect(),
        }
    }

    /// Unweighted mean squared error of `net` over the rows.
    pub fn mse(&self, net: &Network) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::InsufficientData("no rows".into()));
        }
        let mut total = 0.0;
        for s in &self.samples {
            let e = net.forward(&s.x)? - s.y;
            total += e * e;
        }
        Ok(total / self.len() as f64)
    }

    /// Weighted fraction of rows classified correctly at threshold 0.5.
    pub fn accuracy(&self, net: &Network) -> Result<f64> {
        let mut correct = 0.0;
        for s in &self.samples {
            let pred = if net.forward(&s.x)? >= 0.5 { 1.0 } else { 0.0 };
            if pred == s.y {
                correct += f64::from(s.replication);
            }
        }
        Ok(correct / self.total_weight())
    }
}

/// Replicates minority-class rows until both classes carry equal weight.
///
/// Every minority row gets `⌊n_major / n_minor⌋` copies and
/// `n_major mod n_minor` of them, drawn without replacement, one extra.
/// Rows are expected to start with replication 1.
pub fn oversample(data: &TrainingSet, seed: u64) -> Result<TrainingSet> {
    let pos: Vec<usize> = (0..data.len())
        .filter(|&i| data.samples[i].y == 1.0)
        .collect();
    let neg: Vec<usize> = (0..data.len())
        .filter(|&i| data.samples[i].y != 1.0)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientData(
            "oversampling needs both classes".into(),
        ));
    }
    let (minority, n_major) = if pos.len() <= neg.len() {
        (pos, neg.len())
    } else {
        (neg, pos.len())
    };
    let copies = n_major / minority.len();
    let extra = n_major % minority.len();
    let mut out = data.clone();
    let mut chosen = minority.clone();
    chosen.shuffle(&mut rng(seed));
    for &i in &minority {
        out.samples[i].replication = copies as u32;
    }
    for &i in &chosen[..extra] {
        out.samples[i].replication += 1;
    }
    Ok(out)
}

/// Which restart an ensemble of trainings keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartMetric {
    /// Lowest training cost.
    Cost,
    /// Highest training accuracy, ties broken by cost.
    Accuracy,
}

impl std::str::FromStr for RestartMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost" => Ok(RestartMetric::Cost),
            "accuracy" => Ok(RestartMetric::Accuracy),
            other => Err(Error::Config(format!("unknown restart metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// λ in `Σ replication·(f(x) − y)² + λ‖weights‖²`.
    pub weight_decay: f64,
    pub gd: GdConfig,
    pub bfgs: BfgsConfig,
    pub n_restarts: usize,
    pub init_scale: f64,
    pub seed: u64,
    pub oversample: bool,
    /// Restart selection for the fine-tuned ad hoc network.
    pub adhoc_restart_metric: RestartMetric,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            weight_decay: 1e-3,
            gd: GdConfig::default(),
            bfgs: BfgsConfig::default(),
            n_restarts: 5,
            init_scale: 0.3,
            seed: 0,
            oversample: true,
            adhoc_restart_metric: RestartMetric::Cost,
        }
    }
}

impl TrainingConfig {
    pub const KEYS: &'static [&'static str] = &[
        "weight_decay",
        "learning_rate",
        "momentum",
        "gd_epochs",
        "bfgs_max_iterations",
        "bfgs_gradient_tolerance",
        "armijo",
        "restarts",
        "init_scale",
        "oversample",
        "adhoc_restart_metric",
    ];

    pub fn update_from(&mut self, kv: &KeyValues) -> Result<()> {
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.parsed($key)? {
                    $field = v;
                }
            };
        }
        set!("weight_decay", self.weight_decay);
        set!("learning_rate", self.gd.learning_rate);
        set!("momentum", self.gd.momentum);
        set!("gd_epochs", self.gd.epochs);
        set!("bfgs_max_iterations", self.bfgs.max_iterations);
        set!("bfgs_gradient_tolerance", self.bfgs.gradient_tolerance);
        set!("armijo", self.bfgs.armijo);
        set!("restarts", self.n_restarts);
        set!("init_scale", self.init_scale);
        set!("oversample", self.oversample);
        set!("adhoc_restart_metric", self.adhoc_restart_metric);
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        if !(self.gd.learning_rate > 0.0) || !(0.0..1.0).contains(&self.gd.momentum) {
            return Err(Error::Config(
                "learning rate must be > 0 and momentum in [0, 1)".into(),
            ));
        }
        if !(self.bfgs.gradient_tolerance > 0.0)
            || !(self.bfgs.armijo > 0.0 && self.bfgs.armijo < 1.0)
        {
            return Err(Error::Config("BFGS tolerances must be positive".into()));
        }
        if self.n_restarts == 0 {
            return Err(Error::Config("need at least one restart".into()));
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::Config("init scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Weight-decayed least-squares cost of a network on a training set.
pub(crate) struct LeastSquares<'a> {
    spec: &'a NetworkSpec,
    data: &'a TrainingSet,
    lambda: f64,
    decay: Vec<bool>,
}

impl<'a> LeastSquares<'a> {
    pub(crate) fn new(spec: &'a NetworkSpec, data: &'a TrainingSet, lambda: f64) -> Result<Self> {
        let n_in = spec.n_inputs();
        if let Some(s) = data.samples.iter().find(|s| s.x.len() != n_in) {
            return Err(Error::Dimension {
                expected: n_in,
                got: s.x.len(),
            });
        }
        Ok(LeastSquares {
            spec,
            data,
            lambda,
            decay: spec.decay_mask(),
        })
    }

    fn decay_term(&self, p: &[f64]) -> f64 {
        self.lambda
            * p.iter()
                .zip(&self.decay)
                .filter(|(_, d)| **d)
                .map(|(w, _)| w * w)
                .sum::<f64>()
    }
}

impl Objective for LeastSquares<'_> {
    fn dim(&self) -> usize {
        self.spec.n_params()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let mut ws = Workspace::new(self.spec);
        let mut total = 0.0;
        for s in &self.data.samples {
            let e = forward_params(self.spec, p, &s.x, &mut ws) - s.y;
            total += f64::from(s.replication) * e * e;
        }
        total + self.decay_term(p)
    }

    fn value_and_gradient(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        let mut ws = Workspace::new(self.spec);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for s in &self.data.samples {
            let w = f64::from(s.replication);
            let out = forward_backward(self.spec, p, &s.x, &mut ws, |o| 2.0 * w * (o - s.y), grad);
            let e = out - s.y;
            total += w * e * e;
        }
        for ((g, w), d) in grad.iter_mut().zip(p).zip(&self.decay) {
            if *d {
                *g += 2.0 * self.lambda * w;
            }
        }
        total + self.decay_term(p)
    }
}

/// `Σ replication·(f(x) − y)² + λ·Σ weights²` (biases are not decayed).
pub fn cost(net: &Network, data: &TrainingSet, lambda: f64) -> Result<f64> {
    Ok(LeastSquares::new(net.spec(), data, lambda)?.value(net.params()))
}

/// Gradient of [`cost`] with respect to the parameters, by backpropagation.
pub fn gradient(net: &Network, data: &TrainingSet, lambda: f64) -> Result<Vec<f64>> {
    let obj = LeastSquares::new(net.spec(), data, lambda)?;
    let mut g = vec![0.0; obj.dim()];
    obj.value_and_gradient(net.params(), &mut g);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub network: Network,
    /// Training cost (on the possibly oversampled set) of `network`.
    pub cost: f64,
}

/// Momentum gradient descent for the configured epochs, then BFGS. Returns the
/// lowest-cost parameters seen, the starting point included.
pub fn train(net: &Network, data: &TrainingSet, config: &TrainingConfig) -> Result<Trained> {
    let obj = LeastSquares::new(net.spec(), data, config.weight_decay)?;
    let start = obj.value(net.params());
    if !start.is_finite() {
        return Err(Error::Diverged("non-finite initial cost".into()));
    }
    let scale = 1.0 / data.total_weight().max(1.0);
    let gd = gradient_descent(&obj, net.params(), &config.gd, scale)?;
    let (mut best_x, mut best) = if gd.value <= start {
        (gd.x, gd.value)
    } else {
        (net.params().to_vec(), start)
    };
    if config.bfgs.max_iterations > 0 {
        let q = bfgs(&obj, &best_x, &config.bfgs)?;
        if q.value < best {
            best = q.value;
            best_x = q.x;
        }
    }
    Ok(Trained {
        network: Network::new(net.spec().clone(), best_x)?,
        cost: best,
    })
}

fn prepare(data: &TrainingSet, config: &TrainingConfig) -> Result<TrainingSet> {
    if config.oversample {
        oversample(data, derive_seed(config.seed, u64::MAX))
    } else {
        Ok(data.clone())
    }
}

/// Trains `n_restarts` independently initialized networks (restart `r` is
/// seeded with `derive_seed(seed, r)`). Restarts that diverge are logged and
/// skipped.
pub fn train_all_restarts(
    spec: &NetworkSpec,
    data: &TrainingSet,
    config: &TrainingConfig,
) -> Result<Vec<Trained>> {
    config.validate()?;
    let data = prepare(data, config)?;
    let mut results = Vec::with_capacity(config.n_restarts);
    let mut last_err = None;
    for r in 0..config.n_restarts {
        let net = init_network(spec, config.init_scale, derive_seed(config.seed, r as u64))?;
        match train(&net, &data, config) {
            Ok(t) => results.push(t),
            Err(e) => {
                warn!("restart {r} aborted: {e}");
                last_err = Some(e);
            }
        }
    }
    if results.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Diverged("no restart completed".into())));
    }
    Ok(results)
}

/// The restart with the smallest training cost.
pub fn train_with_restarts(
    spec: &NetworkSpec,
    data: &TrainingSet,
    config: &TrainingConfig,
) -> Result<Trained> {
    let all = train_all_restarts(spec, data, config)?;
    Ok(all
        .into_iter()
        .reduce(|best, t| if t.cost < best.cost { t } else { best })
        .expect("train_all_restarts returns at least one result"))
}

/// One hub's pretraining job.
#[derive(Debug, Clone)]
pub struct HubTask {
    pub hub: Hub,
    pub data: TrainingSet,
    pub n_hidden: usize,
    pub weight_decay: f64,
}

/// Trains one single-output network per hub against the shared labels.
/// Hubs without inputs are skipped with a warning.
pub fn pretrain_subnetworks(
    tasks: &[HubTask],
    config: &TrainingConfig,
) -> Result<Vec<(Hub, Network)>> {
    let mut out = Vec::with_capacity(tasks.len());
    for task in tasks {
        let n_inputs = task.data.samples.first().map_or(0, |s| s.x.len());
        if n_inputs == 0 {
            warn!(
                "hub {} has no input features; its subnetwork is omitted",
                task.hub
            );
            continue;
        }
        let spec = NetworkSpec::Conventional {
            n_inputs,
            n_hidden: task.n_hidden,
        };
        let cfg = TrainingConfig {
            weight_decay: task.weight_decay,
            seed: derive_seed(config.seed, 100 + task.hub.index() as u64),
            ..config.clone()
        };
        let trained = train_with_restarts(&spec, &task.data, &cfg)
            .map_err(|e| e.in_stage(format!("hub {}", task.hub)))?;
        out.push((task.hub, trained.network));
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no hub has input features".into()));
    }
    Ok(out)
}

/// Builds an ad hoc network from pretrained subnetworks; the output neuron
/// gets uniform weights in `[-output_scale, output_scale]`.
pub fn assemble(subnets: &[(Hub, Network)], output_scale: f64, seed: u64) -> Result<Network> {
    let mut specs = Vec::with_capacity(subnets.len());
    let mut params = Vec::new();
    for (hub, net) in subnets {
        match net.spec() {
            NetworkSpec::Conventional { n_inputs, n_hidden } => specs.push(SubnetSpec {
                hub: *hub,
                n_inputs: *n_inputs,
                n_hidden: *n_hidden,
            }),
            NetworkSpec::Adhoc { .. } => {
                return Err(Error::Config(
                    "subnetworks must be conventional networks".into(),
                ));
            }
        }
        params.extend_from_slice(net.params());
    }
    let mut g = rng(seed);
    for _ in 0..=subnets.len() {
        params.push(if output_scale > 0.0 {
            g.random_range(-output_scale..=output_scale)
        } else {
            0.0
        });
    }
    Network::new(NetworkSpec::Adhoc { subnets: specs }, params)
}

/// Subnetworks of an ad hoc net with their hubs, plus the output neuron parameters.
pub type AdhocParts = (Vec<(Hub, Network)>, Vec<f64>);

/// Splits an ad hoc network back into its subnetworks and output neuron.
pub fn disassemble(net: &Network) -> Option<AdhocParts> {
    let NetworkSpec::Adhoc { subnets } = net.spec() else {
        return None;
    };
    let (blocks, out) = adhoc_blocks(subnets, net.params());
    let nets = subnets
        .iter()
        .zip(blocks)
        .map(|(s, p)| {
            let spec = NetworkSpec::Conventional {
                n_inputs: s.n_inputs,
                n_hidden: s.n_hidden,
            };
            Network::new(spec, p.to_vec()).map(|n| (s.hub, n))
        })
        .collect::<Result<Vec<_>>>()
        .ok()?;
    Some((nets, out.to_vec()))
}

/// Assembles the ad hoc network with the pretrained subnetworks as starting
/// values and trains all parameters jointly. Restarts differ in the output
/// neuron initialization; the kept restart follows `adhoc_restart_metric`.
pub fn assemble_and_finetune(
    subnets: &[(Hub, Network)],
    data: &TrainingSet,
    config: &TrainingConfig,
) -> Result<Trained> {
    config.validate()?;
    let prepared = prepare(data, config)?;
    let mut best: Option<(Trained, f64)> = None;
    let mut last_err = None;
    for r in 0..config.n_restarts {
        let init = assemble(
            subnets,
            config.init_scale,
            derive_seed(config.seed, 1000 + r as u64),
        )?;
        let trained = match train(&init, &prepared, config) {
            Ok(t) => t,
            Err(e) => {
                warn!("fine-tuning restart {r} aborted: {e}");
                last_err = Some(e);
                continue;
            }
        };
        let score = match config.adhoc_restart_metric {
            RestartMetric::Cost => -trained.cost,
            RestartMetric::Accuracy => prepared.accuracy(&trained.network)?,
        };
        let better = match &best {
            None => true,
            Some((b, s)) => score > *s || (score == *s && trained.cost < b.cost),
        };
        if better {
            best = Some((trained, score));
        }
    }
    best.map(|(t, _)| t).ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Diverged("no fine-tuning restart completed".into()))
    })
}
