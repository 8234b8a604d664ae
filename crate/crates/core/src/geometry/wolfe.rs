//! Wolfe's min-norm-point algorithm over a finite point set.
//!
//! Finds the point of `conv(points)` closest to the origin. The corral `S`
//! is kept affinely independent; each minor cycle moves the current convex
//! combination toward the affine minimizer of `S` and drops points whose
//! weight reaches zero. Optimality is certified by the Frank-Wolfe gap
//! `‖x‖² − min_k ⟨x, p_k⟩`.

use nalgebra::{DMatrix, DVector};

use crate::{dot, Error, Result};

#[derive(Clone, Debug)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Convex weights indexed like the input points.
    pub weights: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

pub const MAX_MAJOR_ITER: usize = 10_000;

const WEIGHT_EPS: f64 = 1e-14;

fn combine(points: &[Vec<f64>], corral: &[usize], lambda: &[f64]) -> Vec<f64> {
    let dim = points[0].len();
    let mut x = vec![0.0; dim];
    for (&k, &l) in corral.iter().zip(lambda) {
        for (xi, pi) in x.iter_mut().zip(&points[k]) {
            *xi += l * pi;
        }
    }
    x
}

/// Affine minimizer of the corral: `argmin ‖Σ α_i p_i‖` over `Σ α_i = 1`.
/// Solves `(G + 11ᵀ) y = 1` and normalizes, which is valid whenever the
/// corral is affinely independent (the matrix is then positive definite).
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        dot(&points[corral[i]], &points[corral[j]]) + 1.0
    });
    let ones = DVector::from_element(k, 1.0);
    let y = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ones),
        None => gram.lu().solve(&ones)?,
    };
    let total: f64 = y.iter().sum();
    if !total.is_finite() || total.abs() < 1e-300 {
        return None;
    }
    Some(y.iter().map(|v| v / total).collect())
}

/// Runs Wolfe's algorithm. The stopping rule is
/// `gap ≤ tol · max(1, max_k ‖p_k‖²)` so that the tolerance is meaningful
/// for both unit-scale and large-coordinate inputs.
pub fn min_norm_point(points: &[Vec<f64>], tol: f64) -> Result<MinNormPoint> {
    if points.is_empty() {
        return Err(Error::invalid("min-norm point of an empty set"));
    }
    let scale = points
        .iter()
        .map(|p| dot(p, p))
        .fold(1.0_f64, f64::max);
    let threshold = tol * scale;

    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    let mut gap = f64::INFINITY;

    for iter in 0..MAX_MAJOR_ITER {
        let xx = dot(&x, &x);
        let (j, xp) = points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        gap = (xx - xp).max(0.0);
        if gap <= threshold || xx <= threshold * threshold || corral.contains(&j) {
            return finish(points, corral, lambda, x, gap, threshold, iter);
        }
        corral.push(j);
        lambda.push(0.0);

        loop {
            let Some(alpha) = affine_minimizer(points, &corral) else {
                // Numerically dependent corral: undo the insertion and stop.
                corral.pop();
                lambda.pop();
                return finish(points, corral, lambda, x, gap, threshold, iter);
            };
            if alpha.iter().all(|&a| a > WEIGHT_EPS) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (&l, &a) in lambda.iter().zip(&alpha) {
                if a <= WEIGHT_EPS && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            // Drop at least the blocking point.
            let min_pos = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_l = Vec::with_capacity(corral.len());
            for (i, (&c, &l)) in corral.iter().zip(&lambda).enumerate() {
                if i != min_pos && l > WEIGHT_EPS {
                    keep_c.push(c);
                    keep_l.push(l);
                }
            }
            let total: f64 = keep_l.iter().sum();
            corral = keep_c;
            lambda = keep_l.into_iter().map(|l| l / total).collect();
        }
        x = combine(points, &corral, &lambda);
    }
    Err(Error::Solver {
        message: format!("min-norm point did not converge in {MAX_MAJOR_ITER} iterations"),
        best: x,
        gap,
    })
}

fn finish(
    points: &[Vec<f64>],
    corral: Vec<usize>,
    lambda: Vec<f64>,
    x: Vec<f64>,
    gap: f64,
    threshold: f64,
    iterations: usize,
) -> Result<MinNormPoint> {
    if gap > threshold && dot(&x, &x) > threshold * threshold {
        // Stalled on a degenerate corral; accept only if the gap is within
        // a few orders of the requested tolerance.
        if gap > threshold * 1e3 {
            return Err(Error::Solver {
                message: "min-norm point stalled on a degenerate corral".into(),
                best: x,
                gap,
            });
        }
    }
    let mut weights = vec![0.0; points.len()];
    for (&c, &l) in corral.iter().zip(&lambda) {
        weights[c] += l;
    }
    Ok(MinNormPoint {
        point: x,
        weights,
        gap,
        iterations,
    })
}
