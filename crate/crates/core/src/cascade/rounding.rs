use crate::error::{Error, Result};

/// Entries closer than this at the top-k boundary count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// `1` where `x_i ≥ 0.5 − ξ/2`, else `0`. The result may not have `k` ones.
pub fn round_threshold(x: &[f64], xi_round: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&xi_round) {
        return Err(Error::InvalidArgument(format!("ξ = {xi_round} must lie in [0, 1)")));
    }
    let cut = 0.5 - 0.5 * xi_round;
    Ok(x.iter().map(|&v| if v >= cut { 1.0 } else { 0.0 }).collect())
}

/// Indicator of the `k` largest entries. Fails when the `k`-th and
/// `(k+1)`-th largest are within [`TIE_TOL`].
pub fn round_topk(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k > x.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds dimension {}", x.len())));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    if k > 0 && k < x.len() && x[order[k - 1]] - x[order[k]] <= TIE_TOL {
        return Err(Error::Ambiguous { value: x[order[k - 1]] });
    }
    let mut y = vec![0.0; x.len()];
    order[..k].iter().for_each(|&i| y[i] = 1.0);
    Ok(y)
}
