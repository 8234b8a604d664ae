//! Small-scale convex geometry over explicit vertex lists.
//!
//! Every routine works on a [`VertexSet`] and reduces to either a dense
//! simplex LP over convex weights or a min-norm-point problem. Tolerance
//! defaults: LP feasibility `1e-9`, projection gap `1e-8`.

pub mod closed_form;
pub mod simplex;
pub mod wolfe;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
pub use simplex::{LinearProgram, LpOptions, LpOutcome, PivotRule};

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-8;
/// Max-norm residual allowed on a hull-membership witness.
pub const MEMBERSHIP_RESIDUAL_TOL: f64 = 1e-8;
const DISTINCT_TOL: f64 = 1e-12;

/// A finite list of distinct points of equal dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct VertexSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for VertexSet {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        VertexSet::new(points)
    }
}

impl From<VertexSet> for Vec<Vec<f64>> {
    fn from(v: VertexSet) -> Self {
        v.points
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("vertex set must contain at least one point"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::invalid("vertices must have dimension ≥ 1"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vertex coordinates must be finite"));
        }
    }
    Ok(dim)
}

fn max_norm_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl VertexSet {
    /// Validates equal dimensions, finiteness and pairwise distinctness.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = check_points(&points)?;
        for i in 0..points.len() {
            for j in 0..i {
                if max_norm_dist(&points[i], &points[j]) <= DISTINCT_TOL {
                    return Err(Error::invalid(format!("vertices {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { dim, points })
    }

    /// Builds a set from points that may repeat, keeping first occurrences.
    pub fn dedup(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = check_points(&points)?;
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if kept.iter().all(|q| max_norm_dist(q, &p) > DISTINCT_TOL) {
                kept.push(p);
            }
        }
        Ok(Self { dim, points: kept })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// The set with vertex `i` removed.
    pub fn without(&self, i: usize) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::invalid(format!("vertex index {i} out of range")));
        }
        if self.len() == 1 {
            return Err(Error::invalid("cannot remove the only vertex"));
        }
        let points = self
            .points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, p)| p.clone())
            .collect();
        Ok(Self {
            dim: self.dim,
            points,
        })
    }

    /// `Σ λ_i v_i`.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (w, p) in weights.iter().zip(&self.points) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += w * pi;
            }
        }
        x
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.len(),
            });
        }
        Ok(())
    }
}

/// Result of a convex-hull membership test.
#[derive(Clone, Debug, PartialEq)]
pub struct HullMembership {
    pub inside: bool,
    /// Convex weights `λ` with `V λ ≈ u`, present when inside.
    pub coefficients: Option<Vec<f64>>,
    /// Max-norm violation of `V λ = u`.
    pub residual: f64,
}

/// Rows `V λ = u` and `1ᵀλ = 1` over `n` weight columns, padded with `extra`
/// zero columns on the right.
fn convex_combination_lp(u: &[f64], vs: &VertexSet, extra: usize) -> LinearProgram {
    let n = vs.len();
    let mut lp = LinearProgram::new(n + extra);
    for (k, &target) in u.iter().enumerate() {
        let mut row: Vec<f64> = vs.points().iter().map(|p| p[k]).collect();
        row.resize(n + extra, 0.0);
        lp.add_eq(row, target);
    }
    let mut ones = vec![1.0; n];
    ones.resize(n + extra, 0.0);
    lp.add_eq(ones, 1.0);
    lp
}

/// Decides `u ∈ conv(V)` by LP feasibility and returns a witness.
pub fn hull_membership(u: &[f64], vs: &VertexSet) -> Result<HullMembership> {
    hull_membership_with(u, vs, &LpOptions::default())
}

pub fn hull_membership_with(
    u: &[f64],
    vs: &VertexSet,
    opts: &LpOptions,
) -> Result<HullMembership> {
    vs.check_dim(u)?;
    let lp = convex_combination_lp(u, vs, 0);
    match lp.solve_with(opts) {
        LpOutcome::Optimal { x, .. } => {
            let residual = crate::sub(&vs.combine(&x), u)
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            let inside = residual <= MEMBERSHIP_RESIDUAL_TOL;
            Ok(HullMembership {
                inside,
                coefficients: inside.then_some(x),
                residual,
            })
        }
        LpOutcome::Infeasible { infeasibility } => Ok(HullMembership {
            inside: false,
            coefficients: None,
            residual: infeasibility,
        }),
        other => Err(Error::Internal(format!(
            "hull membership LP ended with {other:?}"
        ))),
    }
}

/// Euclidean projection of `u` onto `conv(V)` by Wolfe's algorithm, returning
/// the projection and its distance from `u`.
pub fn project_onto_hull(u: &[f64], vs: &VertexSet, tol: f64) -> Result<(Vec<f64>, f64)> {
    vs.check_dim(u)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("projection tolerance must be positive"));
    }
    let shifted: Vec<Vec<f64>> = vs.points().iter().map(|p| crate::sub(p, u)).collect();
    let mnp = wolfe::min_norm_point(&shifted, tol).map_err(|e| match e {
        Error::Solver { message, best, gap } => Error::Solver {
            message,
            best: best.iter().zip(u).map(|(b, ui)| b + ui).collect(),
            gap,
        },
        other => other,
    })?;
    // Rebuild from weights for accuracy on the original coordinates.
    let x = vs.combine(&mnp.weights);
    let d = crate::dist(&x, u);
    Ok((x, d))
}

/// `min ‖x − z‖` over `x ∈ conv(V1)`, `z ∈ conv(V2)`, via the min-norm point of
/// the Minkowski difference.
pub fn hull_distance(v1: &VertexSet, v2: &VertexSet, tol: f64) -> Result<f64> {
    if v1.dim() != v2.dim() {
        return Err(Error::DimensionMismatch {
            expected: v1.dim(),
            found: v2.dim(),
        });
    }
    let diffs: Vec<Vec<f64>> = v1
        .points()
        .iter()
        .flat_map(|a| v2.points().iter().map(move |b| crate::sub(a, b)))
        .collect();
    let mnp = wolfe::min_norm_point(&diffs, tol)?;
    Ok(crate::norm(&mnp.point))
}

/// Whether `conv{v_i, v_j}` is an edge of `conv(V)`: some functional `a`
/// satisfies `a·v_i = a·v_j ≥ a·v_k + 1` for every other `k`.
pub fn is_edge(i: usize, j: usize, vs: &VertexSet) -> Result<bool> {
    let n = vs.len();
    if i >= n || j >= n {
        return Err(Error::invalid(format!(
            "edge indices ({i}, {j}) out of range for {n} vertices"
        )));
    }
    if i == j {
        return Err(Error::invalid("edge endpoints must differ"));
    }
    let d = vs.dim();
    let others: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
    // a = a⁺ − a⁻ in columns 0..2d, one surplus per other vertex.
    let mut lp = LinearProgram::new(2 * d + others.len());
    let split = |diff: &[f64], row: &mut [f64]| {
        for (k, &v) in diff.iter().enumerate() {
            row[k] = v;
            row[d + k] = -v;
        }
    };
    let mut row = vec![0.0; lp.num_vars()];
    split(&crate::sub(vs.get(i), vs.get(j)), &mut row);
    lp.add_eq(row, 0.0);
    for (s, &k) in others.iter().enumerate() {
        let mut row = vec![0.0; lp.num_vars()];
        split(&crate::sub(vs.get(i), vs.get(k)), &mut row);
        row[2 * d + s] = -1.0;
        lp.add_eq(row, 1.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { .. } => Ok(true),
        LpOutcome::Infeasible { .. } => Ok(false),
        other => Err(Error::Internal(format!("edge LP ended with {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> VertexSet {
        VertexSet::new(vec![
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn rejects_duplicates_and_ragged() {
        assert!(VertexSet::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).is_err());
        assert!(VertexSet::new(vec![vec![0.0, 1.0], vec![0.0]]).is_err());
        assert!(VertexSet::new(vec![]).is_err());
        let d = VertexSet::dedup(vec![vec![1.0], vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn membership_centroid_of_square() {
        let m = hull_membership(&[0.0, 0.0], &square()).unwrap();
        assert!(m.inside);
        let lam = m.coefficients.unwrap();
        assert_abs_diff_eq!(lam.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(lam.iter().all(|&l| l >= -1e-9));
        assert!(m.residual <= 1e-12);
    }

    #[test]
    fn membership_outside_square() {
        let m = hull_membership(&[2.0, 0.0], &square()).unwrap();
        assert!(!m.inside);
        assert!(m.coefficients.is_none());
    }

    #[test]
    fn membership_edge_midpoint() {
        let tri = VertexSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let m = hull_membership(&[0.5, 0.5], &tri).unwrap();
        let lam = m.coefficients.unwrap();
        assert_abs_diff_eq!(lam[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lam[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(lam[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn membership_dimension_mismatch() {
        assert!(matches!(
            hull_membership(&[0.0], &square()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let sq = square();
        for v in sq.points() {
            let (x, d) = project_onto_hull(v, &sq, 1e-8).unwrap();
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(x[0], v[0], epsilon = 1e-12);
        }
        let (x, d) = project_onto_hull(&[2.0, 0.5], &sq, 1e-8).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn projection_rejects_bad_tol() {
        assert!(project_onto_hull(&[0.0, 0.0], &square(), 0.0).is_err());
    }

    #[test]
    fn single_vertex_hull() {
        let one = VertexSet::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(hull_membership(&[1.0, 2.0], &one).unwrap().inside);
        assert!(!hull_membership(&[1.0, 2.5], &one).unwrap().inside);
        let (x, d) = project_onto_hull(&[4.0, 6.0], &one, 1e-8).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert_abs_diff_eq!(d, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_examples() {
        let sq = square();
        assert_abs_diff_eq!(hull_distance(&sq, &sq, 1e-8).unwrap(), 0.0, epsilon = 1e-10);
        let a = VertexSet::new(vec![vec![0.0, 0.0]]).unwrap();
        let b = VertexSet::new(vec![vec![3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(hull_distance(&a, &b, 1e-8).unwrap(), 5.0, epsilon = 1e-12);
        let shifted =
            VertexSet::new(sq.points().iter().map(|p| vec![p[0] + 3.0, p[1]]).collect()).unwrap();
        assert_abs_diff_eq!(hull_distance(&sq, &shifted, 1e-8).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn square_edges() {
        let sq = square();
        assert!(is_edge(0, 1, &sq).unwrap());
        assert!(is_edge(0, 2, &sq).unwrap());
        assert!(!is_edge(0, 3, &sq).unwrap());
        assert!(!is_edge(1, 2, &sq).unwrap());
        assert!(is_edge(0, 0, &sq).is_err());
        assert!(is_edge(0, 9, &sq).is_err());
    }

    #[test]
    fn cross_polytope_diagonal_is_not_edge() {
        let cross = VertexSet::new(vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ])
        .unwrap();
        assert!(!is_edge(0, 1, &cross).unwrap());
        assert!(!is_edge(2, 3, &cross).unwrap());
        assert!(is_edge(0, 2, &cross).unwrap());
        assert!(is_edge(1, 3, &cross).unwrap());
    }
}
