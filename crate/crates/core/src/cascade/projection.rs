/// Euclidean projection onto `{0 ≤ x ≤ 1, Σx = k}`.
///
/// The projection is `clamp(y − τ, 0, 1)` for the shift `τ` at which the sum
/// equals `k`. The sum is nonincreasing in `τ`, so `τ` is bracketed and
/// bisected; once the clamp pattern is identified `τ` is solved exactly from
/// the free coordinates.
pub fn project_capped_simplex(y: &[f64], k: usize) -> Vec<f64> {
    assert!(k <= y.len(), "k must not exceed the dimension");
    let kf = k as f64;
    let clamp = |tau: f64| -> Vec<f64> { y.iter().map(|v| (v - tau).clamp(0.0, 1.0)).collect() };
    let sum = |tau: f64| -> f64 { y.iter().map(|v| (v - tau).clamp(0.0, 1.0)).sum() };
    if k == y.len() {
        return vec![1.0; y.len()];
    }
    if k == 0 {
        return vec![0.0; y.len()];
    }
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (min - 1.0, max);
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        tau = 0.5 * (lo + hi);
        let s = sum(tau);
        if (s - kf).abs() <= 1e-12 {
            break;
        }
        if s > kf {
            lo = tau;
        } else {
            hi = tau;
        }
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs().max(lo.abs())) {
            break;
        }
    }

    // Solve τ exactly on the identified pattern.
    let x = clamp(tau);
    let (mut free_sum, mut free, mut ones) = (0.0, 0usize, 0usize);
    for (v, xi) in y.iter().zip(&x) {
        if *xi >= 1.0 {
            ones += 1;
        } else if *xi > 0.0 {
            free += 1;
            free_sum += v;
        }
    }
    if free > 0 {
        let exact = (free_sum + ones as f64 - kf) / free as f64;
        let candidate = clamp(exact);
        let consistent = y.iter().zip(&x).zip(&candidate).all(|((_, a), b)| {
            (*a >= 1.0) == (*b >= 1.0) && (*a <= 0.0) == (*b <= 0.0)
        });
        if consistent && (candidate.iter().sum::<f64>() - kf).abs() <= (sum(tau) - kf).abs() {
            return candidate;
        }
    }
    x
}
