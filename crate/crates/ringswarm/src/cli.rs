//! Command implementations behind the `ringswarm` binary. Each command is
//! a plain function over parsed arguments so tests and examples can call
//! them without spawning a process.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxicp::{box_icp, BoxSet, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::SimError;
use crate::geometry::{corners, BoundingBox, Point2, SimilarityTransform};
use crate::gnn::{
    self, dataset_io, eval_assignment, params as gnn_params, train, GnnParams, Hyper, Optimizer,
};
use crate::sim::{self, MissionConfig};
use crate::wire::bandwidth_estimate;

pub const ASSIGN_CSV_METRIC_COL: &str = "metric";
pub const REG_CSV_HEADER: &str =
    "jitter_px,pairs,perfect_match_pct,mean_iterations,mean_final_cost";
pub const BANDWIDTH_CSV_HEADER: &str =
    "boxes,hidden_dim,payload_bytes,frame_overhead_bytes,latency_seconds";
pub const MISSION_CSV_HEADER: &str =
    "agent,goal,center_x,center_y,box_announce_bytes,hidden_state_bytes,goal_claim_bytes,messages_sent";

#[derive(Debug, Parser)]
#[command(name = "ringswarm", about = "Ring-coupled multi-agent coordination toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled assignment dataset.
    GenDataset(GenDatasetArgs),
    /// Train the goal-assignment network on a dataset.
    Train(TrainArgs),
    /// Sweep assignment quality across goal counts.
    EvalAssign(EvalAssignArgs),
    /// Sweep registration quality across corner-jitter levels.
    EvalRegistration(EvalRegistrationArgs),
    /// Run the end-to-end mission and emit a report.
    Simulate(SimulateArgs),
    /// Tabulate per-exchange payload sizes and link latency.
    Bandwidth(BandwidthArgs),
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub count: usize,
    #[arg(long, default_value_t = 5)]
    pub agents: usize,
    #[arg(long, default_value_t = 10)]
    pub goals: usize,
    #[arg(long, default_value_t = gnn_params::G_MAX)]
    pub g_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = gnn_params::D_H)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = gnn_params::K_ROUNDS)]
    pub rounds: usize,
    #[arg(long, default_value_t = Hyper::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = Hyper::default().batch)]
    pub batch: usize,
    #[arg(long, default_value_t = Hyper::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = Hyper::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// "adam" (default) or "sgd".
    #[arg(long, default_value = "adam")]
    pub optimizer: String,
    /// Re-present each graph under a fresh goal relabeling every epoch.
    #[arg(long, default_value_t = false)]
    pub augment: bool,
    /// Warm-start from a saved parameter file instead of a fresh
    /// initialization; used for multi-phase recipes (cross-entropy first,
    /// then an assignment-loss polish).
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalAssignArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub agents: usize,
    #[arg(long, default_value_t = 5)]
    pub min_goals: usize,
    #[arg(long, default_value_t = 10)]
    pub max_goals: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Optional CSV output path; the table always prints to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalRegistrationArgs {
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = 9)]
    pub boxes: usize,
    #[arg(long, default_value_t = 4096.0)]
    pub extent: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub max_rotation: f64,
    #[arg(long, default_value_t = 0.1)]
    pub shear: f64,
    /// Comma-separated corner-jitter sigmas in pixels.
    #[arg(long, default_value = "0.0,1.0,2.0,4.0", value_delimiter = ',')]
    pub jitter: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Mission TOML; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trained network parameters; falls back to an untrained network.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-agent CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[arg(long, default_value = "5,10,20,40", value_delimiter = ',')]
    pub boxes: Vec<usize>,
    #[arg(long, default_value = "16,32,64", value_delimiter = ',')]
    pub hidden_dim: Vec<usize>,
    /// Link speed in bits per second.
    #[arg(long, default_value_t = 1_000_000.0)]
    pub bps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write_text(path: &std::path::Path, text: &str) -> Result<(), SimError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_gen_dataset(args: &GenDatasetArgs) -> Result<(), SimError> {
    let dataset = gnn::gen_dataset(args.agents, args.goals, args.count, args.g_max, args.seed)
        .map_err(|e| SimError::Config(e.to_string()))?;
    dataset_io::save_dataset_file(&dataset, args.g_max, &args.out)?;
    println!(
        "wrote {} graphs ({} agents, {} goals, g_max {}) to {}",
        dataset.len(),
        args.agents,
        args.goals,
        args.g_max,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), SimError> {
    let (dataset, g_max) = dataset_io::load_dataset_file(&args.dataset)
        .map_err(|e| SimError::Config(e.to_string()))?;
    let optimizer = match args.optimizer.as_str() {
        "adam" => Optimizer::adam(),
        "sgd" => Optimizer::Sgd,
        other => return Err(SimError::Config(format!("unknown optimizer '{other}'"))),
    };
    let hyper = Hyper {
        lr: args.lr,
        epochs: args.epochs,
        batch: args.batch,
        seed: args.seed,
        alpha: args.alpha,
        optimizer,
        augment: args.augment,
        ..Hyper::default()
    };
    let mut params = match &args.init {
        Some(path) => gnn_params::load_params_file(path).map_err(SimError::AssignmentFailed)?,
        None => GnnParams::init(args.hidden_dim, args.rounds, g_max, args.seed),
    };
    let curve = train(&mut params, &dataset, &hyper).map_err(SimError::AssignmentFailed)?;
    for (epoch, loss) in curve.iter().enumerate() {
        println!("epoch {:>3}  mean loss {:.6}", epoch + 1, loss);
    }
    gnn_params::save_params_file(&params, &args.out)?;
    println!("wrote {} parameters to {}", params.n_params(), args.out.display());
    Ok(())
}

pub fn assign_sweep_csv(
    params: &GnnParams,
    n_a: usize,
    min_goals: usize,
    max_goals: usize,
    trials: usize,
    seed: u64,
) -> Result<String, SimError> {
    assert!(min_goals <= max_goals && n_a <= min_goals);
    let mut header = ASSIGN_CSV_METRIC_COL.to_string();
    let mut opt_row = "optimality_pct".to_string();
    let mut div_row = "diversity_pct".to_string();
    for n_g in min_goals..=max_goals {
        let m = eval_assignment(params, n_a, n_g, trials, seed).map_err(SimError::AssignmentFailed)?;
        header.push_str(&format!(",{n_g}"));
        opt_row.push_str(&format!(",{:.1}", m.optimality_pct));
        div_row.push_str(&format!(",{:.1}", m.diversity_pct));
    }
    Ok(format!("{header}\n{opt_row}\n{div_row}\n"))
}

pub fn cmd_eval_assign(args: &EvalAssignArgs) -> Result<(), SimError> {
    let params = gnn_params::load_params_file(&args.params).map_err(SimError::AssignmentFailed)?;
    let csv = assign_sweep_csv(
        &params,
        args.agents,
        args.min_goals,
        args.max_goals,
        args.trials,
        args.seed,
    )?;
    print!("{csv}");
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    Ok(())
}

/// One synthetic registration trial: a scene viewed twice, the second view
/// under a random similarity plus bounded shear and corner jitter, boxes
/// shuffled. Returns whether the recovered matching is exactly correct,
/// plus iteration count and final cost.
pub fn registration_trial(
    boxes: usize,
    extent: f64,
    max_rotation: f64,
    shear: f64,
    jitter_px: f64,
    rng: &mut impl Rng,
) -> Result<(bool, usize, f64), SimError> {
    let scene = sim::gen_scene(boxes, extent, rng)?;
    let theta = rng.gen_range(-max_rotation..=max_rotation);
    let scale = rng.gen_range(0.8..=1.25);
    let center = Point2::new(extent / 2.0, extent / 2.0);
    // Rotate/scale about the frame center plus a bounded net translation,
    // the geometry of two overhead views of the same spot.
    let (sn, cs) = theta.sin_cos();
    let dx = rng.gen_range(-0.14 * extent..=0.14 * extent);
    let dy = rng.gen_range(-0.14 * extent..=0.14 * extent);
    let t = SimilarityTransform::new(
        theta,
        center.x - scale * (cs * center.x - sn * center.y) + dx,
        center.y - scale * (sn * center.x + cs * center.y) + dy,
        scale,
    )?;
    let k = rng.gen_range(-shear..=shear);

    let mut moved_boxes = Vec::with_capacity(boxes);
    for b in &scene.boxes {
        let pts: Vec<Point2> = corners(b)
            .iter()
            .map(|p| {
                // Shear about the frame center, then the similarity, then jitter.
                let sheared = Point2::new(p.x + k * (p.y - center.y), p.y);
                let q = t.apply(sheared);
                Point2::new(
                    q.x + jitter_px * rng.gen_range(-1.0..=1.0),
                    q.y + jitter_px * rng.gen_range(-1.0..=1.0),
                )
            })
            .collect();
        moved_boxes.push(BoundingBox::hull_of(&pts)?);
    }
    let mut perm: Vec<usize> = (0..boxes).collect();
    for i in (1..boxes).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let shuffled: Vec<BoundingBox> = perm.iter().map(|&i| moved_boxes[i]).collect();
    let set1 = BoxSet::new(scene.boxes.clone(), scene.ids.clone());
    let set2 = BoxSet::new(shuffled, perm.iter().map(|&i| i as u32).collect());

    let reg = box_icp(&set1, &set2, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let correct = (0..boxes).all(|i| set2.ids[reg.matching.col(i)] == set1.ids[i]);
    Ok((correct, reg.iterations, reg.final_cost))
}

pub fn registration_sweep_csv(args: &EvalRegistrationArgs) -> Result<String, SimError> {
    let mut csv = format!("{REG_CSV_HEADER}\n");
    for &jitter in &args.jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut perfect = 0usize;
        let mut iters = 0usize;
        let mut cost = 0.0;
        for _ in 0..args.pairs {
            let (ok, it, c) = registration_trial(
                args.boxes,
                args.extent,
                args.max_rotation,
                args.shear,
                jitter,
                &mut rng,
            )?;
            perfect += ok as usize;
            iters += it;
            cost += c;
        }
        csv.push_str(&format!(
            "{},{},{:.1},{:.2},{:.4}\n",
            jitter,
            args.pairs,
            100.0 * perfect as f64 / args.pairs as f64,
            iters as f64 / args.pairs as f64,
            cost / args.pairs as f64,
        ));
    }
    Ok(csv)
}

pub fn cmd_eval_registration(args: &EvalRegistrationArgs) -> Result<(), SimError> {
    let csv = registration_sweep_csv(args)?;
    print!("{csv}");
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    Ok(())
}

pub fn mission_csv(report: &sim::MissionReport) -> String {
    let mut csv = format!("{MISSION_CSV_HEADER}\n");
    for (i, c) in report.per_agent.iter().enumerate() {
        let (x, y) = report.assigned_centers[i];
        csv.push_str(&format!(
            "{},{},{:.2},{:.2},{},{},{},{}\n",
            i,
            report.assigned_goals[i],
            x,
            y,
            c.box_announce_bytes,
            c.hidden_state_bytes,
            c.goal_claim_bytes,
            c.messages_sent,
        ));
    }
    csv
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), SimError> {
    let cfg = match &args.config {
        Some(path) => MissionConfig::load(path)?,
        None => MissionConfig::default(),
    };
    let params = match &args.params {
        Some(path) => gnn_params::load_params_file(path).map_err(SimError::AssignmentFailed)?,
        None => GnnParams::reference(cfg.seed),
    };
    let report = sim::run_mission(&cfg, &params)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if let Some(out) = &args.out {
        write_text(out, &json)?;
    }
    if let Some(out) = &args.csv {
        write_text(out, &mission_csv(&report))?;
    }
    Ok(())
}

pub fn bandwidth_csv(boxes: &[usize], hidden_dims: &[usize], bps: f64) -> String {
    let mut csv = format!("{BANDWIDTH_CSV_HEADER}\n");
    for &n_w in boxes {
        for &d_h in hidden_dims {
            let est = bandwidth_estimate(n_w, d_h, bps);
            csv.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                n_w, d_h, est.bytes, est.frame_overhead, est.latency_seconds
            ));
        }
    }
    csv
}

pub fn cmd_bandwidth(args: &BandwidthArgs) -> Result<(), SimError> {
    let csv = bandwidth_csv(&args.boxes, &args.hidden_dim, args.bps);
    print!("{csv}");
    if let Some(out) = &args.out {
        write_text(out, &csv)?;
    }
    Ok(())
}

/// Dispatch a parsed command line. Errors carry a phase-tagged message.
pub fn run(cli: &Cli) -> Result<(), SimError> {
    match &cli.command {
        Command::GenDataset(a) => cmd_gen_dataset(a),
        Command::Train(a) => cmd_train(a),
        Command::EvalAssign(a) => cmd_eval_assign(a),
        Command::EvalRegistration(a) => cmd_eval_registration(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bandwidth(a) => cmd_bandwidth(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_csv_contains_reference_row() {
        let csv = bandwidth_csv(&[20], &[32], 1_000_000.0);
        assert!(csv.starts_with(BANDWIDTH_CSV_HEADER));
        assert!(csv.contains("20,32,308,"), "csv was: {csv}");
    }

    #[test]
    fn registration_sweep_header_stable() {
        assert_eq!(
            REG_CSV_HEADER,
            "jitter_px,pairs,perfect_match_pct,mean_iterations,mean_final_cost"
        );
    }

    #[test]
    fn registration_trial_clean_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (ok, _, cost) =
                registration_trial(9, 4096.0, std::f64::consts::FRAC_PI_4, 0.0, 0.0, &mut rng)
                    .unwrap();
            assert!(ok);
            // Residual reflects only re-hulling of rotated boxes; it must
            // stay well under the box scale.
            assert!(cost < 0.05 * 4096.0, "cost {cost}");
        }
    }

    #[test]
    fn registration_trial_rotation_free_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let (ok, _, cost) = registration_trial(9, 4096.0, 0.0, 0.0, 0.0, &mut rng).unwrap();
            assert!(ok);
            assert!(cost < 1e-6, "cost {cost}");
        }
    }

    #[test]
    fn assign_sweep_csv_shape() {
        let params = GnnParams::init(12, 2, 10, 0);
        let csv = assign_sweep_csv(&params, 5, 5, 10, 10, 0).unwrap();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "metric,5,6,7,8,9,10");
        assert!(lines[1].starts_with("optimality_pct,"));
        assert!(lines[2].starts_with("diversity_pct,"));
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 7);
        }
    }

    #[test]
    fn cli_parses_all_subcommands() {
        for argv in [
            vec!["ringswarm", "gen-dataset", "--out", "d.bin"],
            vec!["ringswarm", "train", "--dataset", "d.bin", "--out", "p.bin"],
            vec!["ringswarm", "eval-assign", "--params", "p.bin"],
            vec!["ringswarm", "eval-registration"],
            vec!["ringswarm", "simulate"],
            vec!["ringswarm", "bandwidth"],
        ] {
            Cli::try_parse_from(argv).unwrap();
        }
    }
}
