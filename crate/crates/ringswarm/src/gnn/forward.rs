//! Network forward passes.
//!
//! Two routes share the same architecture:
//!
//! * `forward_tape` — f64 autodiff path used for training and gradient
//!   checks; no quantization.
//! * `gnn_forward` — inference path whose hidden states pass through f32
//!   after every round, exactly as the wire protocol transmits them, so
//!   `decentralized_infer` is bit-identical to it by construction.

use crate::error::GnnError;
use crate::wire::{self, WireMessage};

use super::graph::AgentGoalGraph;
use super::params::{GnnParams, Mlp, PAD_COST};
use super::tape::{LossMeta, NodeId, Tape};

/// Per-agent probability rows over all goals (zero outside the agent's
/// candidate support).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    pub rows: Vec<Vec<f64>>,
}

impl SoftAssignment {
    pub fn n_agents(&self) -> usize {
        self.rows.len()
    }

    /// Row-wise argmax, ties broken by lowest goal index.
    pub fn hard(&self) -> Vec<usize> {
        self.rows.iter().map(|row| argmax(row)).collect()
    }

    /// One-hot matrix form of `hard()`.
    pub fn hard_matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut out = vec![0.0; row.len()];
                out[argmax(row)] = 1.0;
                out
            })
            .collect()
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Candidate costs in slot order (candidates are listed by shared goal
/// index, so neighbors exchanging hidden states line up goal-by-goal),
/// padded to g_max.
fn slot_costs(graph: &AgentGoalGraph, agent: usize, g_max: usize) -> Vec<f64> {
    let mut costs = graph.costs[agent].clone();
    costs.truncate(g_max);
    costs.resize(g_max, PAD_COST);
    costs
}

/// Per-goal channel group `g` of a hidden/message vector.
fn slot(h: &[f64], g: usize, c: usize) -> &[f64] {
    &h[g * c..(g + 1) * c]
}

/// Trailing slot-independent channels of a hidden/message vector.
fn globals(h: &[f64], g_max: usize, c: usize) -> &[f64] {
    &h[g_max * c..]
}

fn round_f32(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = *x as f32 as f64;
    }
}

// ---------------------------------------------------------------------------
// Plain (inference) path
// ---------------------------------------------------------------------------

fn mlp_apply(m: &Mlp, x: &[f64]) -> Vec<f64> {
    let hidden: Vec<f64> = matvec_plain(&m.w1.data, m.w1.rows, m.w1.cols, x)
        .iter()
        .zip(&m.b1)
        .map(|(v, b)| (v + b).tanh())
        .collect();
    matvec_plain(&m.w2.data, m.w2.rows, m.w2.cols, &hidden)
        .iter()
        .zip(&m.b2)
        .map(|(v, b)| v + b)
        .collect()
}

fn matvec_plain(w: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|i| w[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn encode_agent(params: &GnnParams, graph: &AgentGoalGraph, agent: usize) -> Vec<f64> {
    let (x, y) = (graph.agent_positions[agent].x, graph.agent_positions[agent].y);
    let costs = slot_costs(graph, agent, params.g_max);
    let mut h = Vec::with_capacity(params.d_h);
    for g in 0..params.g_max {
        h.extend(mlp_apply(&params.enc, &[costs[g], x, y]).iter().map(|v| v.tanh()));
    }
    h.extend(mlp_apply(&params.enc_g, &[x, y]).iter().map(|v| v.tanh()));
    debug_assert_eq!(h.len(), params.d_h);
    round_f32(&mut h);
    h
}

/// Message computed by the receiver from one neighbor's hidden state:
/// the same per-slot layout as the hidden state itself.
fn message_vec(params: &GnnParams, h: &[f64]) -> Vec<f64> {
    let c = params.channels();
    let glob = globals(h, params.g_max, c);
    let mut m = Vec::with_capacity(params.d_h);
    for g in 0..params.g_max {
        let mut input = slot(h, g, c).to_vec();
        input.extend_from_slice(glob);
        m.extend(mlp_apply(&params.msg, &input));
    }
    m.extend(mlp_apply(&params.msg_g, glob));
    m
}

/// Mean over the per-goal channel groups: the order-invariant summary of an
/// agent's own options that feeds its global channels.
fn slot_pool(h: &[f64], g_max: usize, c: usize) -> Vec<f64> {
    let mut pool = vec![0.0; c];
    for g in 0..g_max {
        for (p, v) in pool.iter_mut().zip(slot(h, g, c)) {
            *p += v / g_max as f64;
        }
    }
    pool
}

fn update_agent(params: &GnnParams, msg_left: &[f64], msg_right: &[f64], own: &[f64]) -> Vec<f64> {
    let c = params.channels();
    let agg: Vec<f64> = msg_left.iter().zip(msg_right).map(|(a, b)| a + b).collect();
    let own_glob = globals(own, params.g_max, c);
    let agg_glob = globals(&agg, params.g_max, c);
    // Pooled views of the agent's own slots and of the aggregated slot
    // messages let each per-slot rule read off how good the agent's (and
    // its neighbors') alternatives are.
    let own_pool = slot_pool(own, params.g_max, c);
    let agg_pool = slot_pool(&agg, params.g_max, c);
    let mut h = Vec::with_capacity(params.d_h);
    for g in 0..params.g_max {
        let mut input = slot(own, g, c).to_vec();
        input.extend_from_slice(slot(&agg, g, c));
        input.extend_from_slice(&own_pool);
        input.extend_from_slice(&agg_pool);
        input.extend_from_slice(own_glob);
        input.extend_from_slice(agg_glob);
        h.extend(mlp_apply(&params.upd, &input).iter().map(|v| v.tanh()));
    }
    let mut input = own_glob.to_vec();
    input.extend_from_slice(agg_glob);
    input.extend_from_slice(&own_pool);
    input.extend_from_slice(&agg_pool);
    h.extend(mlp_apply(&params.upd_g, &input).iter().map(|v| v.tanh()));
    round_f32(&mut h);
    h
}

fn decode_agent(params: &GnnParams, graph: &AgentGoalGraph, agent: usize, h: &[f64]) -> Vec<f64> {
    let c = params.channels();
    let glob = globals(h, params.g_max, c);
    let scores: Vec<f64> = (0..graph.candidate_goals[agent].len())
        .map(|g| {
            let mut input = slot(h, g, c).to_vec();
            input.extend_from_slice(glob);
            mlp_apply(&params.dec, &input)[0]
        })
        .collect();
    masked_softmax_row(graph, agent, &scores)
}

fn masked_softmax_row(graph: &AgentGoalGraph, agent: usize, scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut row = vec![0.0; graph.n_goals];
    for (slot, &g) in graph.candidate_goals[agent].iter().enumerate() {
        row[g] = exps[slot] / total;
    }
    row
}

/// Centralized forward pass. Hidden states are truncated to f32 after the
/// encoder and after every round, mirroring the wire. `hidden_trace[r][i]`
/// is exactly what agent `i` transmits in round `r`.
pub fn gnn_forward(params: &GnnParams, graph: &AgentGoalGraph) -> (SoftAssignment, Vec<Vec<Vec<f64>>>) {
    let n_a = graph.n_agents();
    let mut hidden: Vec<Vec<f64>> = (0..n_a).map(|i| encode_agent(params, graph, i)).collect();
    let mut trace = Vec::with_capacity(params.k_rounds);
    for _ in 0..params.k_rounds {
        trace.push(hidden.clone());
        let messages: Vec<Vec<f64>> = hidden.iter().map(|h| message_vec(params, h)).collect();
        hidden = (0..n_a)
            .map(|i| {
                let (left, right) = graph.ring_neighbors[i];
                update_agent(params, &messages[left], &messages[right], &hidden[i])
            })
            .collect();
    }
    let rows = (0..n_a).map(|i| decode_agent(params, graph, i, &hidden[i])).collect();
    (SoftAssignment { rows }, trace)
}

// ---------------------------------------------------------------------------
// Tape (training) path
// ---------------------------------------------------------------------------

/// Leaf ids of every parameter tensor, in `GnnParams::tensors()` order.
pub struct StagedParams {
    pub leaves: Vec<NodeId>,
    shapes: Vec<(usize, usize)>,
}

pub fn stage_params(tape: &mut Tape, params: &GnnParams) -> StagedParams {
    let tensors = params.tensors();
    let mut leaves = Vec::with_capacity(tensors.len());
    let mut shapes = Vec::with_capacity(tensors.len());
    for (_, shape, data) in tensors {
        leaves.push(tape.leaf(data.to_vec()));
        shapes.push(shape);
    }
    StagedParams { leaves, shapes }
}

impl StagedParams {
    fn mlp(&self, base: usize) -> (NodeId, NodeId, NodeId, NodeId) {
        (
            self.leaves[base],
            self.leaves[base + 1],
            self.leaves[base + 2],
            self.leaves[base + 3],
        )
    }

    fn shape(&self, idx: usize) -> (usize, usize) {
        self.shapes[idx]
    }

    /// Accumulate leaf gradients into a flat per-tensor buffer set.
    pub fn grads(&self, tape: &Tape) -> Vec<Vec<f64>> {
        self.leaves.iter().map(|&id| tape.grad(id).to_vec()).collect()
    }
}

fn mlp_tape(
    tape: &mut Tape,
    staged: &StagedParams,
    base: usize,
    x: NodeId,
) -> NodeId {
    let (w1, b1, w2, b2) = staged.mlp(base);
    let (r1, c1) = staged.shape(base);
    let (r2, c2) = staged.shape(base + 2);
    let z1 = tape.matvec(w1, r1, c1, x);
    let z1 = tape.add(z1, b1);
    let h = tape.tanh(z1);
    let z2 = tape.matvec(w2, r2, c2, h);
    tape.add(z2, b2)
}

// Tensor base indices in GnnParams::tensors() order.
const ENC: usize = 0;
const ENC_G: usize = 4;
const MSG: usize = 8;
const MSG_G: usize = 12;
const UPD: usize = 16;
const UPD_G: usize = 20;
const DEC: usize = 24;

/// Weight-shared layer over all goal slots at once: one segmented matvec
/// per matrix instead of one matvec per slot.
fn mlp_tape_seg(
    tape: &mut Tape,
    staged: &StagedParams,
    base: usize,
    x: NodeId,
    n: usize,
) -> NodeId {
    let (w1, b1, w2, b2) = staged.mlp(base);
    let (r1, c1) = staged.shape(base);
    let (r2, c2) = staged.shape(base + 2);
    let z1 = tape.matvec_seg(w1, r1, c1, x, n);
    let z1 = tape.add_tiled(z1, b1);
    let h = tape.tanh(z1);
    let z2 = tape.matvec_seg(w2, r2, c2, h, n);
    tape.add_tiled(z2, b2)
}

/// Training-path forward: returns the per-agent candidate-space softmax
/// nodes. No f32 quantization so the loss is smooth in the parameters.
/// Per-goal slots live as one stacked node per agent (`g_max` segments of
/// `channels()` floats), so each weight-shared layer is a single op.
pub fn forward_tape(
    tape: &mut Tape,
    staged: &StagedParams,
    params: &GnnParams,
    graph: &AgentGoalGraph,
) -> Vec<NodeId> {
    let n_a = graph.n_agents();
    let g_max = params.g_max;
    let c = params.channels();

    // slots[i] = stacked per-goal channel groups, glob[i] = the rest.
    let mut slots: Vec<NodeId> = Vec::with_capacity(n_a);
    let mut glob: Vec<NodeId> = Vec::with_capacity(n_a);
    for i in 0..n_a {
        let (x, y) = (graph.agent_positions[i].x, graph.agent_positions[i].y);
        let costs = slot_costs(graph, i, g_max);
        let feat = tape.leaf(costs.iter().flat_map(|&cost| [cost, x, y]).collect());
        let z = mlp_tape_seg(tape, staged, ENC, feat, g_max);
        slots.push(tape.tanh(z));
        let feat = tape.leaf(vec![x, y]);
        let z = mlp_tape(tape, staged, ENC_G, feat);
        glob.push(tape.tanh(z));
    }

    for _ in 0..params.k_rounds {
        let msg_slots: Vec<NodeId> = (0..n_a)
            .map(|j| {
                let input = tape.zip_stack(vec![(slots[j], c)], vec![glob[j]], g_max);
                mlp_tape_seg(tape, staged, MSG, input, g_max)
            })
            .collect();
        let msg_glob: Vec<NodeId> = (0..n_a)
            .map(|j| mlp_tape(tape, staged, MSG_G, glob[j]))
            .collect();

        let mut next_slots = Vec::with_capacity(n_a);
        let mut next_glob = Vec::with_capacity(n_a);
        for i in 0..n_a {
            let (left, right) = graph.ring_neighbors[i];
            let agg_glob = tape.sum_vecs(vec![msg_glob[left], msg_glob[right]]);
            let agg_slots = tape.sum_vecs(vec![msg_slots[left], msg_slots[right]]);
            // Pooled means over channel groups, matching `update_agent`.
            let own_pool = tape.seg_mean(slots[i], g_max);
            let agg_pool = tape.seg_mean(agg_slots, g_max);
            let input = tape.zip_stack(
                vec![(slots[i], c), (agg_slots, c)],
                vec![own_pool, agg_pool, glob[i], agg_glob],
                g_max,
            );
            let z = mlp_tape_seg(tape, staged, UPD, input, g_max);
            next_slots.push(tape.tanh(z));
            let input = tape.concat(vec![glob[i], agg_glob, own_pool, agg_pool]);
            let z = mlp_tape(tape, staged, UPD_G, input);
            next_glob.push(tape.tanh(z));
        }
        slots = next_slots;
        glob = next_glob;
    }

    (0..n_a)
        .map(|i| {
            let input = tape.zip_stack(vec![(slots[i], c)], vec![glob[i]], g_max);
            let scores = mlp_tape_seg(tape, staged, DEC, input, g_max);
            let n_cand = graph.candidate_goals[i].len();
            let scores = if n_cand < g_max {
                tape.prefix(scores, n_cand)
            } else {
                scores
            };
            tape.softmax(scores)
        })
        .collect()
}

/// Loss node for one labeled graph on the tape.
pub fn loss_tape(
    tape: &mut Tape,
    rows: Vec<NodeId>,
    graph: &AgentGoalGraph,
    y: Vec<Vec<f64>>,
    alpha: f64,
    eps: f64,
) -> NodeId {
    let meta = LossMeta {
        candidates: graph.candidate_goals.clone(),
        y,
        n_goals: graph.n_goals,
        alpha,
        eps,
    };
    tape.assign_loss(rows, meta)
}

// ---------------------------------------------------------------------------
// Decentralized path
// ---------------------------------------------------------------------------

/// What one agent knows locally: its own position, its candidate goals and
/// costs, and its two ring links. Assembled from an `AgentGoalGraph` here,
/// or from registration output in the mission simulator.
#[derive(Debug, Clone)]
pub struct AgentLocalView {
    pub position: (f64, f64),
    pub candidate_goals: Vec<usize>,
    pub costs: Vec<f64>,
    pub neighbors: (usize, usize),
}

pub fn local_views(graph: &AgentGoalGraph) -> Vec<AgentLocalView> {
    (0..graph.n_agents())
        .map(|i| AgentLocalView {
            position: (graph.agent_positions[i].x, graph.agent_positions[i].y),
            candidate_goals: graph.candidate_goals[i].clone(),
            costs: graph.costs[i].clone(),
            neighbors: graph.ring_neighbors[i],
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DecentralizedRun {
    /// Chosen goal index per agent (argmax of its own row).
    pub chosen: Vec<usize>,
    pub soft: SoftAssignment,
    /// Hidden-state messages sent per agent.
    pub messages_per_agent: usize,
    /// Framed hidden-state bytes sent per agent.
    pub hidden_bytes_per_agent: usize,
}

/// Run the assignment with hidden vectors moving only across ring links as
/// framed wire messages. Bit-identical to `gnn_forward` on the same graph.
pub fn decentralized_infer(
    params: &GnnParams,
    views: &[AgentLocalView],
    n_goals: usize,
) -> Result<DecentralizedRun, GnnError> {
    let n_a = views.len();
    let graph_like = AgentGoalGraph {
        agent_positions: views
            .iter()
            .map(|v| crate::geometry::Point2::new(v.position.0, v.position.1))
            .collect(),
        goal_positions: Vec::new(),
        n_goals,
        ring_neighbors: views.iter().map(|v| v.neighbors).collect(),
        candidate_goals: views.iter().map(|v| v.candidate_goals.clone()).collect(),
        costs: views.iter().map(|v| v.costs.clone()).collect(),
    };

    let mut hidden: Vec<Vec<f64>> = (0..n_a)
        .map(|i| encode_agent(params, &graph_like, i))
        .collect();

    // FIFO queue per directed link (receiver, sender-side slot).
    let mut messages_per_agent = 0usize;
    let mut hidden_bytes_per_agent = 0usize;

    for round in 0..params.k_rounds {
        // Send: every agent frames its current hidden to both neighbors.
        let mut inboxes: Vec<Vec<(usize, Vec<u8>)>> = vec![Vec::new(); n_a];
        for (i, view) in views.iter().enumerate() {
            let values: Vec<f32> = hidden[i].iter().map(|&v| v as f32).collect();
            let msg = wire::encode_message(
                &WireMessage::HiddenState {
                    round: round as u8,
                    values,
                },
                wire::DEFAULT_IMAGE_EXTENT,
            )?;
            let (left, right) = view.neighbors;
            inboxes[left].push((i, msg.clone()));
            inboxes[right].push((i, msg.clone()));
            if i == 0 {
                messages_per_agent += 2;
                hidden_bytes_per_agent += 2 * msg.len();
            }
        }
        // Receive and update: left message first, then right.
        let mut next = Vec::with_capacity(n_a);
        for (i, view) in views.iter().enumerate() {
            let (left, right) = view.neighbors;
            let decode_from = |sender: usize| -> Result<Vec<f64>, GnnError> {
                let (_, bytes) = inboxes[i]
                    .iter()
                    .find(|(s, _)| *s == sender)
                    .expect("ring neighbor must have sent");
                match wire::decode_message(bytes, wire::DEFAULT_IMAGE_EXTENT)? {
                    WireMessage::HiddenState { values, .. } => {
                        Ok(values.iter().map(|&v| v as f64).collect())
                    }
                    _ => Err(GnnError::Wire(crate::error::WireError::Malformed(
                        "expected hidden state".into(),
                    ))),
                }
            };
            let h_left = decode_from(left)?;
            let h_right = decode_from(right)?;
            let m_left = message_vec(params, &h_left);
            let m_right = message_vec(params, &h_right);
            next.push(update_agent(params, &m_left, &m_right, &hidden[i]));
        }
        hidden = next;
    }

    let rows: Vec<Vec<f64>> = (0..n_a)
        .map(|i| decode_agent(params, &graph_like, i, &hidden[i]))
        .collect();
    let soft = SoftAssignment { rows };
    Ok(DecentralizedRun {
        chosen: soft.hard(),
        soft,
        messages_per_agent,
        hidden_bytes_per_agent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::graph::gen_dataset;
    use crate::gnn::params::GnnParams;

    #[test]
    fn zero_weights_give_uniform_rows() {
        let params = GnnParams::zeros(12, 2, 10);
        let lg = &gen_dataset(5, 10, 1, 10, 1).unwrap()[0];
        let (soft, _) = gnn_forward(&params, &lg.graph);
        for row in &soft.rows {
            for &v in row {
                assert!((v - 0.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_deterministic() {
        let params = GnnParams::reference(3);
        let lg = &gen_dataset(5, 10, 1, 10, 2).unwrap()[0];
        let (a, t1) = gnn_forward(&params, &lg.graph);
        let (b, t2) = gnn_forward(&params, &lg.graph);
        assert_eq!(a, b);
        assert_eq!(t1, t2);
    }

    #[test]
    fn rows_sum_to_one_on_support() {
        let params = GnnParams::reference(4);
        for lg in gen_dataset(5, 10, 10, 10, 3).unwrap() {
            let (soft, _) = gnn_forward(&params, &lg.graph);
            for (i, row) in soft.rows.iter().enumerate() {
                let support: f64 = lg.graph.candidate_goals[i].iter().map(|&g| row[g]).sum();
                assert!((support - 1.0).abs() < 1e-6);
                for (g, &v) in row.iter().enumerate() {
                    if !lg.graph.candidate_goals[i].contains(&g) {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn goal_relabeling_keeps_decisions() {
        // Candidate features are positional (slot-ordered); renaming the
        // goal ids without touching slot order must not change anything.
        let params = GnnParams::reference(5);
        let lg = &gen_dataset(5, 10, 1, 10, 7).unwrap()[0];
        let (orig, _) = gnn_forward(&params, &lg.graph);

        let mut relabeled = lg.graph.clone();
        for cands in relabeled.candidate_goals.iter_mut() {
            for g in cands.iter_mut() {
                *g = (*g + 3) % 10; // bijective rename, slot order intact
            }
        }
        let (renamed, _) = gnn_forward(&params, &relabeled);
        for i in 0..5 {
            for g in 0..10 {
                assert!(
                    (orig.rows[i][g] - renamed.rows[i][(g + 3) % 10]).abs() < 1e-12,
                    "row {i} goal {g}"
                );
            }
        }
    }

    #[test]
    fn decoder_scale_keeps_argmax() {
        let mut params = GnnParams::reference(6);
        let lg = &gen_dataset(5, 10, 1, 10, 9).unwrap()[0];
        let (a, _) = gnn_forward(&params, &lg.graph);
        for v in params.dec.w2.data.iter_mut() {
            *v *= 3.0;
        }
        for v in params.dec.b2.iter_mut() {
            *v *= 3.0;
        }
        let (b, _) = gnn_forward(&params, &lg.graph);
        assert_eq!(a.hard(), b.hard());
    }

    #[test]
    fn decentralized_matches_centralized_bitwise() {
        let params = GnnParams::reference(8);
        for (idx, lg) in gen_dataset(5, 10, 25, 10, 11).unwrap().iter().enumerate() {
            let (central, _) = gnn_forward(&params, &lg.graph);
            let run = decentralized_infer(&params, &local_views(&lg.graph), lg.graph.n_goals)
                .unwrap();
            assert_eq!(run.soft, central, "graph {idx}");
            assert_eq!(run.chosen, central.hard());
            assert_eq!(run.messages_per_agent, 2 * params.k_rounds);
            // Framed hidden message: 3 frame bytes + 1 round byte + 4 * d_h.
            assert_eq!(
                run.hidden_bytes_per_agent,
                2 * params.k_rounds * (4 + 4 * params.d_h)
            );
        }
    }

    #[test]
    fn per_round_hidden_bytes_match_paper_form() {
        let params = GnnParams::reference(1);
        assert_eq!(params.d_h, 32);
        let lg = &gen_dataset(5, 10, 1, 10, 1).unwrap()[0];
        let run = decentralized_infer(&params, &local_views(&lg.graph), 10).unwrap();
        let per_round = run.hidden_bytes_per_agent / params.k_rounds;
        // 2 links * (frame 3 + round 1 + 128 payload floats); the float body
        // alone is 2 * 4 * d_h = 256.
        assert_eq!(per_round, 2 * (3 + 1 + 128));
        let float_body = 2 * 4 * params.d_h;
        assert_eq!(float_body, 256);
    }

    #[test]
    fn tape_and_plain_forward_agree_modulo_quantization() {
        let params = GnnParams::reference(13);
        let lg = &gen_dataset(5, 10, 1, 10, 17).unwrap()[0];
        let mut tape = Tape::new();
        let staged = stage_params(&mut tape, &params);
        let rows = forward_tape(&mut tape, &staged, &params, &lg.graph);
        let (plain, _) = gnn_forward(&params, &lg.graph);
        for (i, &r) in rows.iter().enumerate() {
            let tape_row = tape.value(r);
            for (slot, &g) in lg.graph.candidate_goals[i].iter().enumerate() {
                assert!(
                    (tape_row[slot] - plain.rows[i][g]).abs() < 1e-4,
                    "agent {i} slot {slot}"
                );
            }
        }
    }
}
