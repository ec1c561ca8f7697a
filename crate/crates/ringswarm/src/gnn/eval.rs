//! Optimality / diversity evaluation over random graphs, with ghost-goal
//! padding for configurations with fewer goals than the training setup.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::GnnError;
use crate::lsa::solve_lsa;

use super::forward::gnn_forward;
use super::graph::{gen_graph, pad_ghost_goals, GHOST_COST};
use super::params::GnnParams;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalMetrics {
    /// Share of trials whose hard assignment cost equals the Hungarian
    /// optimum (relative tolerance 1e-9).
    pub optimality_pct: f64,
    /// Share of trials with no two agents on the same real goal.
    pub diversity_pct: f64,
}

/// Evaluate a trained network on fresh random graphs. Graphs with fewer
/// real goals than the network's candidate budget are ghost-padded.
pub fn eval_assignment(
    params: &GnnParams,
    n_a: usize,
    n_g: usize,
    trials: usize,
    seed: u64,
) -> Result<EvalMetrics, GnnError> {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut optimal = 0usize;
    let mut diverse = 0usize;

    for _ in 0..trials {
        let lg = gen_graph(n_a, n_g, params.g_max, &mut rng)?;
        let graph = if n_g < params.g_max {
            pad_ghost_goals(&lg.graph, params.g_max, GHOST_COST)
        } else {
            lg.graph.clone()
        };

        let (soft, _) = gnn_forward(params, &graph);
        let chosen = soft.hard();

        let cost_matrix = graph.full_cost_matrix();
        let predicted_cost: f64 = chosen.iter().enumerate().map(|(i, &g)| cost_matrix.at(i, g)).sum();
        let (_, optimum) = solve_lsa(&cost_matrix).map_err(|e| GnnError::DegenerateInput(e.to_string()))?;
        if (predicted_cost - optimum).abs() <= 1e-9 * optimum.abs().max(1.0) {
            optimal += 1;
        }

        let mut collision = false;
        let real = graph.n_real_goals();
        for i in 0..n_a {
            for j in i + 1..n_a {
                if chosen[i] == chosen[j] && chosen[i] < real {
                    collision = true;
                }
            }
        }
        if !collision {
            diverse += 1;
        }
    }

    Ok(EvalMetrics {
        optimality_pct: 100.0 * optimal as f64 / trials as f64,
        diversity_pct: 100.0 * diverse as f64 / trials as f64,
    })
}
