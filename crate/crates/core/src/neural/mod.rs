//! Least-squares sigmoid networks: the conventional single-hidden-layer
//! topology and the three-hub ad hoc topology, with their training loops.

mod network;
mod optim;
mod train;

pub use network::{init_network, sigmoid, Network, NetworkSpec, SubnetSpec};
pub use optim::{bfgs, gradient_descent, BfgsConfig, GdConfig, Objective, OptimResult};
pub use train::{
    assemble, assemble_and_finetune, cost, disassemble, gradient, oversample, pretrain_subnetworks,
    train, train_all_restarts, train_with_restarts, HubTask, RestartMetric, Sample, Trained,
    TrainingConfig, TrainingSet,
};
