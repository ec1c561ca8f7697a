//! Full mission: spiral scouting until the detector triggers, per-agent
//! views of the scene, ring registration into shared labels, decentralized
//! goal assignment over the wire, and a deterministic JSON report.

use ringswarm::gnn::GnnParams;
use ringswarm::sim::{run_mission, MissionConfig};

fn main() {
    let cfg = MissionConfig::default();
    // Randomly initialized weights; `ringswarm train` produces a file that
    // `ringswarm simulate --params` loads instead.
    let params = GnnParams::reference(cfg.seed);

    let report = run_mission(&cfg, &params).unwrap();
    println!(
        "detection after {} scout frames, consensus_ok = {}",
        report.scout_frames, report.consensus_ok
    );
    println!(
        "assigned goals {:?} ({} distinct, optimal = {})",
        report.assigned_goals, report.distinct_real_goals, report.optimal
    );
    for (i, agent) in report.per_agent.iter().enumerate() {
        println!(
            "agent {i}: {} messages, {} box bytes, {} hidden bytes, {} claim bytes",
            agent.messages_sent,
            agent.box_announce_bytes,
            agent.hidden_state_bytes,
            agent.goal_claim_bytes
        );
    }

    // Identical config + seed means a byte-identical report.
    let again = run_mission(&cfg, &params).unwrap();
    println!(
        "rerun with same seed is byte-identical: {}",
        serde_json::to_vec(&report).unwrap() == serde_json::to_vec(&again).unwrap()
    );
}
