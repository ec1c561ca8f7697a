use ringswarm::gnn::dataset_io::load_dataset_file;
use ringswarm::gnn::forward::{argmax, gnn_forward};
use ringswarm::gnn::graph::gen_dataset;
use ringswarm::gnn::train::{train, Hyper, Optimizer};
use ringswarm::gnn::{eval_assignment, GnnParams};

fn metrics(params: &GnnParams, tag: &str) {
    let fresh = gen_dataset(5, 10, 1000, 10, 1).unwrap();
    let mut hit = 0usize;
    for lg in &fresh {
        let (soft, _) = gnn_forward(params, &lg.graph);
        for (i, row) in soft.rows.iter().enumerate() {
            hit += (argmax(row) == lg.label[i]) as usize;
        }
    }
    let m = eval_assignment(params, 5, 10, 1000, 1).unwrap();
    println!(
        "{tag}: per-agent acc {:.3}  opt@10 {:.1}  div@10 {:.1}",
        hit as f64 / (fresh.len() * 5) as f64,
        m.optimality_pct,
        m.diversity_pct
    );
}

fn main() {
    // args: lr batch epochs [lr2 epochs2 ...] — sequential CE phases.
    let a: Vec<String> = std::env::args().skip(1).collect();
    let (ds, _) = load_dataset_file(std::path::Path::new("/tmp/ds.bin")).unwrap();
    let k: usize = std::env::var("PROBE_K").map(|v| v.parse().unwrap()).unwrap_or(5);
    let mut params = GnnParams::init(32, k, 10, 0);
    let t0 = std::time::Instant::now();
    let batch: usize = a[1].parse().unwrap();
    let mut i = 0;
    let mut phase = 0;
    while i + 1 < a.len() + 1 {
        let lr: f64 = a[if phase == 0 { 0 } else { i }].parse().unwrap();
        let epochs: usize = a[if phase == 0 { 2 } else { i + 1 }].parse().unwrap();
        let h = Hyper { lr, epochs, batch, alpha: 0.0, augment: true, seed: phase as u64 + 1, optimizer: Optimizer::adam(), ..Hyper::default() };
        let c = train(&mut params, &ds, &h).unwrap();
        println!("phase{phase} lr {lr} epochs {epochs} batch {batch}: loss {:.4} ({:?})", c.last().unwrap(), t0.elapsed());
        metrics(&params, &format!("phase{phase}"));
        i = if phase == 0 { 3 } else { i + 2 };
        phase += 1;
        if i >= a.len() { break; }
    }
    for n_g in 5..=10 {
        let m = eval_assignment(&params, 5, n_g, 1000, 1).unwrap();
        println!("n_g={n_g}: opt {:.1} div {:.1}", m.optimality_pct, m.diversity_pct);
    }
    ringswarm::gnn::params::save_params_file(&params, std::path::Path::new("/tmp/params_probe.bin")).unwrap();
}
