//! End-to-end mission simulation: synthetic scene, spiral scouting with a
//! detection trigger, per-agent views through a stochastic detector
//! stand-in, ring registration, decentralized goal assignment, and a
//! deterministic mission report.

pub mod config;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boxicp::{ring_register, BoxSet};
use crate::error::SimError;
use crate::geometry::{corners, BoundingBox, Point2, SimilarityTransform};
use crate::gnn::forward::AgentLocalView;
use crate::gnn::{decentralized_infer, GnnParams, GHOST_COST};
use crate::lsa::{solve_lsa, CostMatrix};
use crate::wire::{self, WireMessage};

pub use config::{DetectorConfig, MissionConfig, ScoutConfig};

/// Ground-truth whale boxes in world coordinates of a virtual overhead frame.
#[derive(Debug, Clone)]
pub struct Scene {
    pub boxes: Vec<BoundingBox>,
    pub ids: Vec<u32>,
    pub extent: f64,
}

impl Scene {
    pub fn centers(&self) -> Vec<Point2> {
        self.boxes.iter().map(|b| b.center()).collect()
    }
}

/// Sample a pod-formation scene: boxes strung along a random line through
/// the frame center with uneven spacing, lateral wobble, and strongly
/// varied sizes and aspects. Rotationally regular scatters alias under
/// large view rotations (a cyclic shift of matches can undercut the true
/// one), so registration benchmarks and missions both use formations.
pub fn gen_scene(count: usize, extent: f64, rng: &mut impl Rng) -> Result<Scene, SimError> {
    if count == 0 {
        return Err(SimError::Scene("scene needs at least one box".into()));
    }
    let dir = rng.gen_range(0.0..std::f64::consts::PI);
    let (sn, cs) = dir.sin_cos();
    let half_len = 0.31 * extent;
    let mid = Point2::new(
        0.5 * extent + rng.gen_range(-0.04 * extent..=0.04 * extent),
        0.5 * extent + rng.gen_range(-0.04 * extent..=0.04 * extent),
    );

    // Uneven along-line stations, normalized to [-1, 1].
    let gaps: Vec<f64> = (0..count).map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = gaps.iter().sum();
    let mut stations = Vec::with_capacity(count);
    let mut acc = 0.0;
    for g in &gaps {
        stations.push(2.0 * (acc + g / 2.0) / total - 1.0);
        acc += g;
    }

    let mut boxes = Vec::with_capacity(count);
    for (i, &st) in stations.iter().enumerate() {
        let lateral = rng.gen_range(-0.05 * extent..=0.05 * extent);
        let c = Point2::new(
            mid.x + st * half_len * cs - lateral * sn,
            mid.y + st * half_len * sn + lateral * cs,
        );
        // Log-uniform lengths, aspect alternating between headings.
        let len = 0.03 * extent * (0.22 * extent / (0.03 * extent)).powf(rng.gen::<f64>());
        let aspect = rng.gen_range(0.3..0.6);
        let (w, h) = if i % 2 == 0 {
            (len, len * aspect)
        } else {
            (len * aspect, len)
        };
        let cx = c.x.clamp(0.08 * extent + w / 2.0, 0.92 * extent - w / 2.0);
        let cy = c.y.clamp(0.08 * extent + h / 2.0, 0.92 * extent - h / 2.0);
        boxes.push(BoundingBox::new(
            cx - w / 2.0,
            cy - h / 2.0,
            cx + w / 2.0,
            cy + h / 2.0,
        )?);
    }
    Ok(Scene {
        boxes,
        ids: (0..count as u32).collect(),
        extent,
    })
}

/// Stochastic detector stand-in: per-box keep probability, isotropic
/// Gaussian corner jitter, optional false positives (off by default).
#[derive(Debug, Clone, Copy)]
pub struct SyntheticDetector {
    pub s_det: f64,
    pub jitter_px: f64,
    pub false_positive_rate: f64,
}

/// One agent's observation of the scene.
#[derive(Debug, Clone)]
pub struct AgentView {
    /// world -> image transform.
    pub transform: SimilarityTransform,
    pub observed: BoxSet,
}

fn gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Observe the scene through a view transform and the synthetic detector:
/// each box is kept independently, its corners mapped and jittered, and
/// the result re-boxed as the axis-aligned hull in the view frame.
pub fn render_view(
    scene: &Scene,
    transform: &SimilarityTransform,
    detector: &SyntheticDetector,
    rng: &mut impl Rng,
) -> Result<AgentView, SimError> {
    let mut boxes = Vec::new();
    let mut ids = Vec::new();
    for (b, &id) in scene.boxes.iter().zip(&scene.ids) {
        if rng.gen::<f64>() >= detector.s_det {
            continue;
        }
        let moved: Vec<Point2> = corners(b)
            .iter()
            .map(|p| {
                let q = transform.apply(*p);
                Point2::new(
                    q.x + gauss(rng, detector.jitter_px),
                    q.y + gauss(rng, detector.jitter_px),
                )
            })
            .collect();
        boxes.push(BoundingBox::hull_of(&moved)?);
        ids.push(id);
    }
    Ok(AgentView {
        transform: *transform,
        observed: BoxSet::new(boxes, ids),
    })
}

/// Archimedean spiral `r = spacing * phi / (2 pi)` sampled uniformly in phi.
pub fn spiral_waypoints(
    center: Point2,
    spacing: f64,
    turns: usize,
    points_per_turn: usize,
) -> Vec<Point2> {
    assert!(spacing > 0.0 && turns >= 1 && points_per_turn >= 1);
    let total = turns * points_per_turn;
    (0..=total)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / points_per_turn as f64;
            let r = spacing * phi / (2.0 * std::f64::consts::PI);
            Point2::new(center.x + r * phi.cos(), center.y + r * phi.sin())
        })
        .collect()
}

/// True iff the detected fraction of the buffer reaches the threshold.
pub fn detection_trigger(buffer: &[bool], threshold: f64) -> Result<bool, SimError> {
    if buffer.is_empty() {
        return Err(SimError::EmptyBuffer);
    }
    assert!(threshold > 0.0 && threshold <= 1.0);
    let hits = buffer.iter().filter(|&&b| b).count();
    Ok(hits as f64 / buffer.len() as f64 >= threshold)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AgentCounters {
    pub box_announce_bytes: usize,
    pub hidden_state_bytes: usize,
    pub goal_claim_bytes: usize,
    pub messages_sent: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MissionReport {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub detection_triggered: bool,
    pub scout_frames: usize,
    pub consensus_ok: bool,
    /// Consensus goal label assigned to each agent.
    pub assigned_goals: Vec<u32>,
    /// Assigned box center in each agent's own frame, for handoff to an
    /// external tracker.
    pub assigned_centers: Vec<(f64, f64)>,
    pub distinct_real_goals: usize,
    /// Whether the decentralized assignment's total cost equals the
    /// centralized Hungarian optimum on the true costs.
    pub optimal: bool,
    pub per_agent: Vec<AgentCounters>,
}

fn sub_rng(seed: u64, stream: &str) -> ChaCha8Rng {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(stream.as_bytes());
    let digest = hasher.finalize();
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(digest[0..8].try_into().unwrap()))
}

fn sample_pose(
    cfg: &MissionConfig,
    extent: f64,
    scene: &Scene,
    rng: &mut impl Rng,
) -> Result<SimilarityTransform, SimError> {
    let center = Point2::new(extent / 2.0, extent / 2.0);
    for _ in 0..1000 {
        let theta = rng.gen_range(-cfg.agents.max_rotation..=cfg.agents.max_rotation);
        let scale = rng.gen_range(cfg.agents.min_scale..=cfg.agents.max_scale);
        let max_t = cfg.agents.max_translation_frac * extent;
        let shift = Point2::new(rng.gen_range(-max_t..=max_t), rng.gen_range(-max_t..=max_t));
        // Rotate/scale about the frame center, then shift.
        let (sn, cs) = theta.sin_cos();
        let t_x = center.x - scale * (cs * center.x - sn * center.y) + shift.x;
        let t_y = center.y - scale * (sn * center.x + cs * center.y) + shift.y;
        let pose = SimilarityTransform::new(theta, t_x, t_y, scale)?;
        let in_frame = scene.boxes.iter().all(|b| {
            corners(b).iter().all(|p| {
                let q = pose.apply(*p);
                q.x >= 0.0 && q.x <= extent && q.y >= 0.0 && q.y <= extent
            })
        });
        if in_frame {
            return Ok(pose);
        }
    }
    Err(SimError::Scene("could not sample an in-frame pose".into()))
}

/// Run the full mission: scout until the detection trigger fires, render
/// one view per agent, reach identity consensus over the ring, assign
/// goals with the decentralized network, and report. Deterministic under
/// the config seed.
pub fn run_mission(cfg: &MissionConfig, params: &GnnParams) -> Result<MissionReport, SimError> {
    let seed = cfg.seed;
    let extent = cfg.scene.extent;
    let scene = gen_scene(cfg.scene.whales, extent, &mut sub_rng(seed, "scene"))?;

    // Scouting: spiral until the recent-frame buffer trips the trigger.
    let mut detector_rng = sub_rng(seed, "detector");
    let waypoints = spiral_waypoints(
        Point2::new(extent / 2.0, extent / 2.0),
        cfg.scout.spacing,
        cfg.scout.turns,
        cfg.scout.points_per_turn,
    );
    let centers = scene.centers();
    let mut buffer: Vec<bool> = Vec::new();
    let mut detection_triggered = false;
    let mut scout_frames = 0;
    for wp in &waypoints {
        scout_frames += 1;
        let near = centers.iter().any(|c| c.dist(wp) <= cfg.scout.sensing_radius);
        let detected = near && detector_rng.gen::<f64>() < cfg.detector.s_det;
        buffer.push(detected);
        if buffer.len() > cfg.scout.buffer_len {
            buffer.remove(0);
        }
        if buffer.len() == cfg.scout.buffer_len && detection_trigger(&buffer, cfg.scout.threshold)? {
            detection_triggered = true;
            break;
        }
    }
    if !detection_triggered {
        return Err(SimError::ScoutTimeout);
    }

    // Registration phase: every agent observes the whole scene (perfect
    // detection, as the consensus step assumes), with configured jitter.
    let n_agents = cfg.agents.count;
    let reg_detector = SyntheticDetector {
        s_det: 1.0,
        jitter_px: cfg.detector.jitter_px,
        false_positive_rate: 0.0,
    };
    let mut views = Vec::with_capacity(n_agents);
    let mut poses = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let mut rng = sub_rng(seed, &format!("agent{i}"));
        let pose = sample_pose(cfg, extent, &scene, &mut rng)?;
        let mut view = render_view(&scene, &pose, &reg_detector, &mut rng)?;
        // Detector output order is arbitrary: shuffle, local ids by slot.
        let n = view.observed.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.gen_range(0..=k));
        }
        view.observed.boxes = perm.iter().map(|&k| view.observed.boxes[k]).collect();
        view.observed.ids = (0..n as u32).collect();
        poses.push(pose);
        views.push(view);
    }

    // Each agent announces its boxes to its ring successor through the
    // codec; registration consumes the quantized sets.
    let mut per_agent: Vec<AgentCounters> = (0..n_agents)
        .map(|_| AgentCounters {
            box_announce_bytes: 0,
            hidden_state_bytes: 0,
            goal_claim_bytes: 0,
            messages_sent: 0,
        })
        .collect();
    let mut received_sets = Vec::with_capacity(n_agents);
    for (i, view) in views.iter().enumerate() {
        let msg = wire::encode_message(
            &WireMessage::BoxAnnounce {
                boxes: view.observed.clone(),
            },
            extent,
        )?;
        per_agent[i].box_announce_bytes += msg.len();
        per_agent[i].messages_sent += 1;
        match wire::decode_message(&msg, extent)? {
            WireMessage::BoxAnnounce { boxes } => received_sets.push(boxes),
            _ => unreachable!(),
        }
    }

    let ring = ring_register(&received_sets)?;
    let consensus_ok = ring.consensus_ok;

    // Goal costs: pixel distance from each agent's frame center to its
    // consensus-labeled box centers, normalized by the frame extent.
    let n_goals_real = scene.boxes.len();
    let frame_center = Point2::new(extent / 2.0, extent / 2.0);
    let g_max = params.g_max;
    // Ghost-pad up to the network's candidate width when the scene is small.
    let n_goals_total = n_goals_real.max(g_max);

    // Full per-agent cost vectors over consensus goal labels 0..n_real.
    let mut full_costs = vec![vec![GHOST_COST; n_goals_total]; n_agents];
    for (i, view) in views.iter().enumerate() {
        for (b, bbox) in view.observed.boxes.iter().enumerate() {
            let label = ring.labels[i][b] as usize;
            full_costs[i][label] = frame_center.dist(&bbox.center()) / extent;
        }
    }

    let local: Vec<AgentLocalView> = (0..n_agents)
        .map(|i| {
            // Candidates: up to g_max cheapest goals, listed by goal index.
            let mut by_cost: Vec<(usize, f64)> = full_costs[i]
                .iter()
                .cloned()
                .enumerate()
                .filter(|&(g, _)| g < n_goals_real)
                .collect();
            by_cost.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            by_cost.truncate(g_max);
            by_cost.sort_by_key(|&(g, _)| g);
            let mut candidate_goals: Vec<usize> = by_cost.iter().map(|&(g, _)| g).collect();
            let mut costs: Vec<f64> = by_cost.iter().map(|&(_, c)| c).collect();
            for g in n_goals_real..n_goals_total {
                candidate_goals.push(g);
                costs.push(GHOST_COST);
            }
            // The agent's effective world position over the scene, unit-scaled.
            let world = poses[i].inverse().apply(frame_center);
            AgentLocalView {
                position: (world.x / extent, world.y / extent),
                candidate_goals,
                costs,
                neighbors: (
                    (i + n_agents - 1) % n_agents,
                    (i + 1) % n_agents,
                ),
            }
        })
        .collect();

    let run = decentralized_infer(params, &local, n_goals_total)?;
    for counters in per_agent.iter_mut() {
        counters.hidden_state_bytes = run.hidden_bytes_per_agent;
        counters.messages_sent += run.messages_per_agent;
    }

    // Each agent claims its goal on the ring.
    let mut assigned_goals = Vec::with_capacity(n_agents);
    let mut assigned_centers = Vec::with_capacity(n_agents);
    for (i, &goal) in run.chosen.iter().enumerate() {
        let claim = wire::encode_message(
            &WireMessage::GoalClaim {
                agent: i as u8,
                goal: goal as u8,
            },
            extent,
        )?;
        per_agent[i].goal_claim_bytes += claim.len();
        per_agent[i].messages_sent += 1;
        assigned_goals.push(goal as u32);
        let center = views[i]
            .observed
            .boxes
            .iter()
            .enumerate()
            .find(|(b, _)| ring.labels[i][*b] as usize == goal)
            .map(|(_, bbox)| {
                let c = bbox.center();
                (c.x, c.y)
            })
            .unwrap_or((f64::NAN, f64::NAN));
        assigned_centers.push(center);
    }

    let mut distinct = std::collections::BTreeSet::new();
    let mut distinct_real_goals = 0;
    for &g in &run.chosen {
        if g < n_goals_real && distinct.insert(g) {
            distinct_real_goals += 1;
        }
    }

    // Centralized Hungarian on the true cost matrix for the optimality flag.
    let flat: Vec<f64> = full_costs.iter().flatten().cloned().collect();
    let cost_matrix = CostMatrix::new(n_agents, n_goals_total, flat)
        .map_err(|e| SimError::Config(e.to_string()))?;
    let (_, optimum) = solve_lsa(&cost_matrix).map_err(|e| SimError::Config(e.to_string()))?;
    let predicted: f64 = run
        .chosen
        .iter()
        .enumerate()
        .map(|(i, &g)| cost_matrix.at(i, g))
        .sum();
    let optimal = (predicted - optimum).abs() <= 1e-9 * optimum.abs().max(1.0);

    Ok(MissionReport {
        version: 1,
        config_hash: cfg.hash(),
        seed,
        detection_triggered,
        scout_frames,
        consensus_ok,
        assigned_goals,
        assigned_centers,
        distinct_real_goals,
        optimal,
        per_agent,
    })
}
