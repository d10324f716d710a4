//! Cross-metric agreement: Pearson correlation over vectorized upper
//! triangles and column-wise Spearman rank correlation.

use crate::error::{Error, Result};
use crate::eval::DistanceMatrix;

fn pearson(x: &[f64], y: &[f64], context: &str) -> Result<f64> {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::DegenerateCorrelation(format!(
            "zero variance in {context}"
        )));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

fn check_pair(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<usize> {
    let n = a.n();
    if b.n() != n || a.values.dim() != b.values.dim() {
        return Err(Error::DimensionMismatch(
            "correlation needs matrices of identical shape".into(),
        ));
    }
    if n < 3 {
        return Err(Error::DimensionMismatch(format!(
            "correlation needs at least 3 tracks, got {n}"
        )));
    }
    Ok(n)
}

/// Pearson correlation between the vectorized strict upper triangles of two
/// distance matrices.
pub fn pearson_upper(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64> {
    let n = check_pair(a, b)?;
    let mut xs = Vec::with_capacity(n * (n - 1) / 2);
    let mut ys = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            xs.push(a.values[(i, j)]);
            ys.push(b.values[(i, j)]);
        }
    }
    pearson(&xs, &ys, "upper triangle")
}

/// Ranks with ties resolved to the average of the positions they occupy
/// (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        // Positions pos..end hold equal values; each gets the mean rank.
        let rank = (pos + 1 + end) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = rank;
        }
        pos = end;
    }
    ranks
}

/// Spearman rank correlation per matrix column, averaged over columns.
///
/// For each column the n-1 off-diagonal entries are ranked (average ranks
/// for ties) and the two rankings are compared with Pearson correlation.
pub fn spearman_avg(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64> {
    let n = check_pair(a, b)?;
    let mut total = 0.0;
    for j in 0..n {
        let col_a: Vec<f64> = (0..n).filter(|&i| i != j).map(|i| a.values[(i, j)]).collect();
        let col_b: Vec<f64> = (0..n).filter(|&i| i != j).map(|i| b.values[(i, j)]).collect();
        let ranks_a = average_ranks(&col_a);
        let ranks_b = average_ranks(&col_b);
        total += pearson(&ranks_a, &ranks_b, &format!("ranks of column {j}"))?;
    }
    Ok(total / n as f64)
}
