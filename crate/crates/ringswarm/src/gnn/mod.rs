//! Decentralized goal assignment: synthetic labeled graphs, the
//! message-passing network, its losses, training with manual reverse-mode
//! differentiation, decentralized ring inference, and evaluation.

pub mod dataset_io;
pub mod eval;
pub mod forward;
pub mod graph;
pub mod losses;
pub mod params;
pub mod tape;
pub mod train;

pub use eval::{eval_assignment, EvalMetrics};
pub use forward::{
    decentralized_infer, gnn_forward, local_views, AgentLocalView, DecentralizedRun,
    SoftAssignment,
};
pub use graph::{build_graph, gen_dataset, pad_ghost_goals, AgentGoalGraph, LabeledGraph, GHOST_COST};
pub use losses::{loss_ce, loss_diversity, loss_total, loss_validity};
pub use params::{GnnParams, D_H, G_MAX, K_ROUNDS};
pub use train::{gradient_check, train, Hyper, Optimizer};
