//! Wynn's epsilon algorithm for accelerating partial sums.

/// Extrapolated limit of `sums`: last entry of the highest even column of the
/// epsilon table.
pub(crate) fn wynn_epsilon(sums: &[f64]) -> f64 {
    let Some(&last) = sums.last() else { return 0.0 };
    if sums.len() < 3 {
        return last;
    }
    let mut prev = vec![0.0; sums.len() + 1];
    let mut cur = sums.to_vec();
    let mut best = last;
    let mut column = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let scale = cur[i + 1].abs().max(cur[i].abs());
            if column % 2 == 0 && d.abs() <= 4.0 * f64::EPSILON * scale {
                // The column has converged to machine precision.
                return cur[i + 1];
            }
            let e = prev[i + 1] + 1.0 / d;
            if !e.is_finite() {
                return best;
            }
            next.push(e);
        }
        prev = cur;
        cur = next;
        column += 1;
        if column % 2 == 0 {
            best = *cur.last().expect("column is nonempty");
        }
    }
    best
}
