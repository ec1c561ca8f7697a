//! Assignment losses: validity, diversity, weighted cross-entropy, and the
//! blended total, with hand-derived gradients for the training path.
//!
//! All functions take a full n_agents x n_goals matrix; rows may be soft
//! probabilities or hard one-hot vectors.

/// Structural validity: Euclidean norm of (1 - column sums) plus the
/// Euclidean norm over agents of (1 - row 2-norm).
pub fn loss_validity(a: &[Vec<f64>]) -> f64 {
    let n_g = a[0].len();
    let mut col_term = 0.0;
    for g in 0..n_g {
        let cs: f64 = a.iter().map(|row| row[g]).sum();
        col_term += (1.0 - cs) * (1.0 - cs);
    }
    let mut row_term = 0.0;
    for row in a {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row_term += (1.0 - norm) * (1.0 - norm);
    }
    col_term.sqrt() + row_term.sqrt()
}

/// Sum of pairwise cosine similarities over all unordered agent pairs.
pub fn loss_diversity(a: &[Vec<f64>], eps: f64) -> f64 {
    assert!(eps > 0.0);
    let n_a = a.len();
    let norms: Vec<f64> = a
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt().max(eps))
        .collect();
    let mut total = 0.0;
    for i in 0..n_a {
        for j in i + 1..n_a {
            let dot: f64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
            total += dot / (norms[i] * norms[j]);
        }
    }
    total
}

/// Weighted binary cross-entropy against one-hot labels, with the 0.9/0.1
/// positive/negative weights and means over all entries.
pub fn loss_ce(a: &[Vec<f64>], y: &[Vec<f64>], eps: f64) -> f64 {
    assert!(eps > 0.0);
    let n = (a.len() * a[0].len()) as f64;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (arow, yrow) in a.iter().zip(y) {
        for (&av, &yv) in arow.iter().zip(yrow) {
            pos += yv * (av + eps).ln();
            neg += (1.0 - yv) * (1.0 - av + eps).ln();
        }
    }
    -0.9 * pos / n - 0.1 * neg / n
}

/// Blend: `alpha * (validity + diversity) + (1 - alpha) * ce`, evaluating
/// the structural terms on `structural` (the soft matrix during training,
/// the hard matrix for reporting) and the cross-entropy on the soft matrix.
pub fn loss_total(
    soft: &[Vec<f64>],
    structural: &[Vec<f64>],
    y: &[Vec<f64>],
    alpha: f64,
    eps: f64,
) -> f64 {
    assert!((0.0..=1.0).contains(&alpha));
    alpha * (loss_validity(structural) + loss_diversity(structural, eps))
        + (1.0 - alpha) * loss_ce(soft, y, eps)
}

const GUARD: f64 = 1e-12;

/// Training loss (all terms on the soft matrix) and its gradient w.r.t.
/// every matrix entry. Verified against finite differences in tests.
pub fn loss_total_grad(
    a: &[Vec<f64>],
    y: &[Vec<f64>],
    alpha: f64,
    eps: f64,
) -> (f64, Vec<Vec<f64>>) {
    let n_a = a.len();
    let n_g = a[0].len();
    let mut grad = vec![vec![0.0; n_g]; n_a];

    // Validity.
    let col_sums: Vec<f64> = (0..n_g).map(|g| a.iter().map(|r| r[g]).sum()).collect();
    let row_norms: Vec<f64> = a
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let v1 = col_sums.iter().map(|&c| (1.0 - c) * (1.0 - c)).sum::<f64>().sqrt();
    let v2 = row_norms.iter().map(|&n| (1.0 - n) * (1.0 - n)).sum::<f64>().sqrt();
    if v1 > GUARD {
        for row in grad.iter_mut() {
            for (g, slot) in row.iter_mut().enumerate() {
                *slot += alpha * (col_sums[g] - 1.0) / v1;
            }
        }
    }
    if v2 > GUARD {
        for i in 0..n_a {
            if row_norms[i] > GUARD {
                let coeff = alpha * (row_norms[i] - 1.0) / (v2 * row_norms[i]);
                for g in 0..n_g {
                    grad[i][g] += coeff * a[i][g];
                }
            }
        }
    }

    // Diversity.
    let clamped: Vec<f64> = row_norms.iter().map(|&n| n.max(eps)).collect();
    let mut div = 0.0;
    for i in 0..n_a {
        for j in i + 1..n_a {
            let dot: f64 = a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum();
            let s = dot / (clamped[i] * clamped[j]);
            div += s;
            for g in 0..n_g {
                let mut gi = a[j][g] / (clamped[i] * clamped[j]);
                let mut gj = a[i][g] / (clamped[i] * clamped[j]);
                if row_norms[i] > eps {
                    gi -= s * a[i][g] / (row_norms[i] * clamped[i]);
                }
                if row_norms[j] > eps {
                    gj -= s * a[j][g] / (row_norms[j] * clamped[j]);
                }
                grad[i][g] += alpha * gi;
                grad[j][g] += alpha * gj;
            }
        }
    }

    // Cross-entropy.
    let n = (n_a * n_g) as f64;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for i in 0..n_a {
        for g in 0..n_g {
            let av = a[i][g];
            let yv = y[i][g];
            pos += yv * (av + eps).ln();
            neg += (1.0 - yv) * (1.0 - av + eps).ln();
            grad[i][g] += (1.0 - alpha)
                * (-0.9 * yv / (n * (av + eps)) + 0.1 * (1.0 - yv) / (n * (1.0 - av + eps)));
        }
    }
    let ce = -0.9 * pos / n - 0.1 * neg / n;

    let value = alpha * (v1 + v2 + div) + (1.0 - alpha) * ce;
    (value, grad)
}
