//! Exact Euclidean projections onto the structured polytopes.

/// Projection onto the box `[-1, 1]^d`.
pub fn project_cube(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// Projection onto the l1 ball of the given radius by soft thresholding.
///
/// The threshold `θ` solves `Σ max(|u_i| − θ, 0) = radius`; it is located
/// from the sorted magnitudes.
pub fn project_l1_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = u.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return u.to_vec();
    }
    let mut mags: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (k + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    u.iter()
        .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}

/// Pool-adjacent-violators for `min ‖v − y‖²` subject to `v_1 ≥ v_2 ≥ … ≥ v_n`.
pub fn isotonic_decreasing(y: &[f64]) -> Vec<f64> {
    // (sum, count) per block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 >= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

/// Projection onto the permutahedron `conv{π(w) : π ∈ S_d}`.
///
/// Sort `u` in decreasing order, subtract the decreasingly sorted weights,
/// fit a decreasing isotonic regression to the difference and remove it.
pub fn project_permutahedron(u: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), w.len());
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
    let mut w_desc = w.to_vec();
    w_desc.sort_by(|a, b| b.total_cmp(a));
    let sorted: Vec<f64> = order.iter().map(|&i| u[i]).collect();
    let diff: Vec<f64> = sorted.iter().zip(&w_desc).map(|(s, w)| s - w).collect();
    let v = isotonic_decreasing(&diff);
    let mut x = vec![0.0; u.len()];
    for (k, &i) in order.iter().enumerate() {
        x[i] = sorted[k] - v[k];
    }
    x
}
