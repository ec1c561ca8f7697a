//! Agent/goal graphs for assignment: ring adjacency by angular order,
//! capped nearest-neighbor candidate goals, ghost-goal padding, and
//! Hungarian-labeled synthetic dataset generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GnnError;
use crate::geometry::Point2;
use crate::lsa::{solve_lsa, CostMatrix};

/// Fixed high cost assigned to ghost goals: ten times the unit square's
/// diameter, so a ghost is never preferred over any real goal.
pub const GHOST_COST: f64 = 14.142135623730951;

/// Agents and goals on the unit square with ring adjacency and per-agent
/// candidate goals. Goal indices `>= n_real_goals` denote ghost goals,
/// which have no position and a fixed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentGoalGraph {
    pub agent_positions: Vec<Point2>,
    pub goal_positions: Vec<Point2>,
    /// Total goal count including ghosts.
    pub n_goals: usize,
    /// (left, right) ring neighbor of each agent.
    pub ring_neighbors: Vec<(usize, usize)>,
    /// Candidate goal indices per agent, ascending.
    pub candidate_goals: Vec<Vec<usize>>,
    /// Euclidean distance (or ghost cost) per candidate, parallel to
    /// `candidate_goals`.
    pub costs: Vec<Vec<f64>>,
}

impl AgentGoalGraph {
    pub fn n_agents(&self) -> usize {
        self.agent_positions.len()
    }

    pub fn n_real_goals(&self) -> usize {
        self.goal_positions.len()
    }

    /// Full cost to an arbitrary goal index (real or ghost).
    pub fn full_cost(&self, agent: usize, goal: usize) -> f64 {
        if goal < self.goal_positions.len() {
            self.agent_positions[agent].dist(&self.goal_positions[goal])
        } else {
            GHOST_COST
        }
    }

    /// Full n_agents x n_goals cost matrix, ghosts included.
    pub fn full_cost_matrix(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.n_agents() * self.n_goals);
        for i in 0..self.n_agents() {
            for g in 0..self.n_goals {
                data.push(self.full_cost(i, g));
            }
        }
        CostMatrix::new(self.n_agents(), self.n_goals, data).expect("cost matrix is well-formed")
    }
}

/// Ring order and candidate goals for the given positions. Agents are
/// linked cyclically by their angle about the centroid of agent positions
/// (ties broken by index); candidates are the `g_max` nearest goals.
pub fn build_graph(
    agent_positions: &[Point2],
    goal_positions: &[Point2],
    g_max: usize,
) -> Result<AgentGoalGraph, GnnError> {
    let n_a = agent_positions.len();
    if n_a < 2 {
        return Err(GnnError::DegenerateInput(format!(
            "need at least 2 agents, got {n_a}"
        )));
    }
    for i in 0..n_a {
        for j in i + 1..n_a {
            if agent_positions[i] == agent_positions[j] {
                return Err(GnnError::DegenerateInput(format!(
                    "agents {i} and {j} coincide; ring order undefined"
                )));
            }
        }
    }

    let cx = agent_positions.iter().map(|p| p.x).sum::<f64>() / n_a as f64;
    let cy = agent_positions.iter().map(|p| p.y).sum::<f64>() / n_a as f64;
    let mut order: Vec<usize> = (0..n_a).collect();
    order.sort_by(|&a, &b| {
        let ang_a = (agent_positions[a].y - cy).atan2(agent_positions[a].x - cx);
        let ang_b = (agent_positions[b].y - cy).atan2(agent_positions[b].x - cx);
        ang_a.partial_cmp(&ang_b).unwrap().then(a.cmp(&b))
    });
    let mut ring_neighbors = vec![(0usize, 0usize); n_a];
    for (pos, &agent) in order.iter().enumerate() {
        let left = order[(pos + n_a - 1) % n_a];
        let right = order[(pos + 1) % n_a];
        ring_neighbors[agent] = (left, right);
    }

    let mut candidate_goals = Vec::with_capacity(n_a);
    let mut costs = Vec::with_capacity(n_a);
    for a in agent_positions {
        let mut by_dist: Vec<(usize, f64)> = goal_positions
            .iter()
            .enumerate()
            .map(|(g, p)| (g, a.dist(p)))
            .collect();
        by_dist.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
        by_dist.truncate(g_max);
        by_dist.sort_by_key(|&(g, _)| g);
        candidate_goals.push(by_dist.iter().map(|&(g, _)| g).collect());
        costs.push(by_dist.iter().map(|&(_, d)| d).collect());
    }

    Ok(AgentGoalGraph {
        agent_positions: agent_positions.to_vec(),
        goal_positions: goal_positions.to_vec(),
        n_goals: goal_positions.len(),
        ring_neighbors,
        candidate_goals,
        costs,
    })
}

/// Append `n_target - n_real` virtual high-cost goals to every agent's
/// candidate set. No-op when the graph already has `n_target` goals.
pub fn pad_ghost_goals(graph: &AgentGoalGraph, n_target: usize, ghost_cost: f64) -> AgentGoalGraph {
    let mut out = graph.clone();
    if graph.n_goals >= n_target {
        return out;
    }
    for i in 0..out.n_agents() {
        for g in graph.n_goals..n_target {
            out.candidate_goals[i].push(g);
            out.costs[i].push(ghost_cost);
        }
    }
    out.n_goals = n_target;
    out
}

/// A graph with its centralized Hungarian optimum as labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub graph: AgentGoalGraph,
    /// Optimal goal index per agent.
    pub label: Vec<usize>,
}

impl LabeledGraph {
    /// One-hot n_a x n_goals label matrix.
    pub fn y_matrix(&self) -> Vec<Vec<f64>> {
        let n_g = self.graph.n_goals;
        self.label
            .iter()
            .map(|&g| {
                let mut row = vec![0.0; n_g];
                row[g] = 1.0;
                row
            })
            .collect()
    }
}

/// Relabel goals by the bijection `perm` (old goal id -> new goal id),
/// reordering candidate slots, costs, positions, and the label to match.
/// Agents, ring links, and all geometry are untouched, so the relabeled
/// graph is the same assignment problem under different goal names.
pub fn relabel_goals(lg: &LabeledGraph, perm: &[usize]) -> LabeledGraph {
    let graph = &lg.graph;
    assert_eq!(perm.len(), graph.n_goals);
    assert_eq!(
        graph.n_goals,
        graph.n_real_goals(),
        "relabeling a ghost-padded graph is unsupported"
    );
    let mut goal_positions = vec![Point2::new(0.0, 0.0); graph.n_goals];
    for (old, &new) in perm.iter().enumerate() {
        goal_positions[new] = graph.goal_positions[old];
    }
    let mut candidate_goals = Vec::with_capacity(graph.n_agents());
    let mut costs = Vec::with_capacity(graph.n_agents());
    for i in 0..graph.n_agents() {
        let mut slots: Vec<(usize, f64)> = graph.candidate_goals[i]
            .iter()
            .zip(&graph.costs[i])
            .map(|(&g, &c)| (perm[g], c))
            .collect();
        slots.sort_by_key(|&(g, _)| g);
        candidate_goals.push(slots.iter().map(|&(g, _)| g).collect());
        costs.push(slots.iter().map(|&(_, c)| c).collect());
    }
    LabeledGraph {
        graph: AgentGoalGraph {
            agent_positions: graph.agent_positions.clone(),
            goal_positions,
            n_goals: graph.n_goals,
            ring_neighbors: graph.ring_neighbors.clone(),
            candidate_goals,
            costs,
        },
        label: lg.label.iter().map(|&g| perm[g]).collect(),
    }
}

/// Apply the `k`-th element of the unit square's symmetry group (4 rotations
/// x optional reflection, k in 0..8) to every agent and goal position.
/// Isometries leave all pairwise distances — and hence costs, candidates,
/// and labels — unchanged; message aggregation sums both ring neighbors, so
/// orientation reversal is also harmless.
pub fn dihedral_positions(lg: &LabeledGraph, k: usize) -> LabeledGraph {
    let map = |p: &Point2| -> Point2 {
        let (x, y) = if k & 4 != 0 { (p.y, p.x) } else { (p.x, p.y) };
        Point2::new(
            if k & 1 != 0 { 1.0 - x } else { x },
            if k & 2 != 0 { 1.0 - y } else { y },
        )
    };
    let mut out = lg.clone();
    out.graph.agent_positions = lg.graph.agent_positions.iter().map(map).collect();
    out.graph.goal_positions = lg.graph.goal_positions.iter().map(map).collect();
    out
}

/// Sample one labeled graph from the given RNG.
pub fn gen_graph(
    n_a: usize,
    n_g: usize,
    g_max: usize,
    rng: &mut impl Rng,
) -> Result<LabeledGraph, GnnError> {
    assert!(n_a <= n_g, "labels need n_a <= n_g");
    let agents: Vec<Point2> = (0..n_a)
        .map(|_| Point2::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let goals: Vec<Point2> = (0..n_g)
        .map(|_| Point2::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let graph = build_graph(&agents, &goals, g_max)?;
    let (assignment, _) = solve_lsa(&graph.full_cost_matrix())
        .map_err(|e| GnnError::DegenerateInput(e.to_string()))?;
    Ok(LabeledGraph {
        graph,
        label: assignment.as_slice().to_vec(),
    })
}

/// Reproducible synthetic dataset: i.i.d. uniform positions, Hungarian
/// labels on the full Euclidean cost matrix.
pub fn gen_dataset(
    n_a: usize,
    n_g: usize,
    count: usize,
    g_max: usize,
    seed: u64,
) -> Result<Vec<LabeledGraph>, GnnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| gen_graph(n_a, n_g, g_max, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::losses::loss_validity;

    #[test]
    fn ring_by_angle_unit_circle() {
        let agents = vec![
            Point2::new(1.0, 0.0),
            Point2::new(-0.5, 0.866),
            Point2::new(-0.5, -0.866),
        ];
        let goals = vec![Point2::new(0.0, 0.0)];
        let g = build_graph(&agents, &goals, 10).unwrap();
        // Cycle 0 -> 1 -> 2 -> 0 by increasing angle from -pi.
        assert_eq!(g.ring_neighbors[0], (2, 1));
        assert_eq!(g.ring_neighbors[1], (0, 2));
        assert_eq!(g.ring_neighbors[2], (1, 0));
    }

    #[test]
    fn ring_square_corners() {
        let agents = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let g = build_graph(&agents, &[Point2::new(0.5, 0.5)], 10).unwrap();
        // Angles about the center: corner cycle 2 -> 3 -> 0 -> 1 -> 2.
        assert_eq!(g.ring_neighbors[2], (1, 3));
        assert_eq!(g.ring_neighbors[3], (2, 0));
        assert_eq!(g.ring_neighbors[0], (3, 1));
        assert_eq!(g.ring_neighbors[1], (0, 2));
    }

    #[test]
    fn cap_not_binding_sees_all_goals() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lg = gen_graph(5, 10, 10, &mut rng).unwrap();
        for cands in &lg.graph.candidate_goals {
            assert_eq!(cands, &(0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn candidate_costs_are_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lg = gen_graph(4, 8, 5, &mut rng).unwrap();
        for (i, cands) in lg.graph.candidate_goals.iter().enumerate() {
            assert!(cands.len() <= 5);
            for (slot, &g) in cands.iter().enumerate() {
                let want = lg.graph.agent_positions[i].dist(&lg.graph.goal_positions[g]);
                assert!((lg.graph.costs[i][slot] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_agents_rejected() {
        let p = Point2::new(0.5, 0.5);
        assert!(build_graph(&[p, p], &[Point2::new(0.1, 0.1)], 10).is_err());
    }

    #[test]
    fn dataset_deterministic() {
        let a = gen_dataset(5, 10, 3, 10, 99).unwrap();
        let b = gen_dataset(5, 10, 3, 10, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_are_valid_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dataset = gen_dataset(5, 10, 50, 10, 7).unwrap();
        for lg in &dataset {
            // One-hot rows, injective columns.
            let mut seen = vec![false; lg.graph.n_goals];
            for &g in &lg.label {
                assert!(!seen[g], "duplicate column in label");
                seen[g] = true;
            }
            // Label cost beats 1000 random valid assignments.
            let c = lg.graph.full_cost_matrix();
            let label_cost: f64 = lg
                .label
                .iter()
                .enumerate()
                .map(|(i, &g)| c.at(i, g))
                .sum();
            for _ in 0..1000 {
                let mut cols: Vec<usize> = (0..lg.graph.n_goals).collect();
                for i in (1..cols.len()).rev() {
                    cols.swap(i, rng.gen_range(0..=i));
                }
                let random_cost: f64 = (0..5).map(|i| c.at(i, cols[i])).sum();
                assert!(label_cost <= random_cost + 1e-9);
            }
        }
    }

    #[test]
    fn label_validity_when_square() {
        let dataset = gen_dataset(5, 5, 20, 10, 3).unwrap();
        for lg in &dataset {
            assert!(loss_validity(&lg.y_matrix()) <= 1e-12);
        }
    }

    #[test]
    fn relabeling_preserves_the_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lg = gen_graph(5, 10, 10, &mut rng).unwrap();
        let perm: Vec<usize> = vec![3, 1, 4, 0, 9, 2, 8, 7, 5, 6];
        let re = relabel_goals(&lg, &perm);
        // Same geometry under new names: costs agree goal-by-goal...
        for i in 0..5 {
            for (slot, &g) in lg.graph.candidate_goals[i].iter().enumerate() {
                let new_slot = re.graph.candidate_goals[i]
                    .iter()
                    .position(|&h| h == perm[g])
                    .unwrap();
                assert_eq!(lg.graph.costs[i][slot], re.graph.costs[i][new_slot]);
            }
        }
        // ...and the relabeled label is the relabeled graph's optimum.
        let (opt, best) = solve_lsa(&re.graph.full_cost_matrix()).unwrap();
        let relabeled_cost: f64 = re
            .label
            .iter()
            .enumerate()
            .map(|(i, &g)| re.graph.full_cost(i, g))
            .sum();
        assert!((relabeled_cost - best).abs() <= 1e-9, "{opt:?}");
    }

    #[test]
    fn ghost_padding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lg = gen_graph(5, 5, 10, &mut rng).unwrap();
        let unchanged = pad_ghost_goals(&lg.graph, 5, GHOST_COST);
        assert_eq!(unchanged, lg.graph);
        let padded = pad_ghost_goals(&lg.graph, 10, GHOST_COST);
        assert_eq!(padded.n_goals, 10);
        for i in 0..5 {
            assert_eq!(padded.candidate_goals[i].len(), lg.graph.candidate_goals[i].len() + 5);
            for slot in lg.graph.candidate_goals[i].len()..padded.candidate_goals[i].len() {
                assert_eq!(padded.costs[i][slot], GHOST_COST);
            }
        }
        // The Hungarian optimum never selects a ghost when n_a <= n_real.
        let (assignment, _) = solve_lsa(&padded.full_cost_matrix()).unwrap();
        for &g in assignment.as_slice() {
            assert!(g < 5, "optimum picked a ghost");
        }
    }
}
