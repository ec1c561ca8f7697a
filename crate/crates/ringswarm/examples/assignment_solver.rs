//! Exact linear sum assignment: solve a small cost matrix and confirm the
//! result against the brute-force oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringswarm::lsa::{brute_force_lsa, solve_lsa, CostMatrix};

fn main() {
    let costs = CostMatrix::from_rows(&[
        vec![4.0, 1.0, 3.0],
        vec![2.0, 0.0, 5.0],
        vec![3.0, 2.0, 2.0],
    ])
    .unwrap();
    let (assignment, total) = solve_lsa(&costs).unwrap();
    println!("assignment (row -> column): {:?}", assignment.as_slice());
    println!("total cost: {total}");

    // Cross-check against exhaustive search on random rectangular matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    for _ in 0..100 {
        let rows = rng.gen_range(1..=5);
        let cols = rng.gen_range(rows..=6);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..10.0)).collect();
        let m = CostMatrix::new(rows, cols, data).unwrap();
        let (_, fast) = solve_lsa(&m).unwrap();
        let (_, slow) = brute_force_lsa(&m).unwrap();
        if (fast - slow).abs() < 1e-12 {
            agree += 1;
        }
    }
    println!("matches brute force on {agree}/100 random matrices");
}
