//! Link functions from surrogate reports back to outcomes.
//!
//! [`map_link`] projects onto the polytope and returns the nearest vertex.
//! [`low_noise_link`] instead measures the distance to each scaled copy
//! `P^y_α = conv{(1−α) v_y + α v_ŷ}` and returns the nearest one. Ties within
//! `tau` go to the lowest outcome index.

use rayon::prelude::*;

use crate::embedding::Embedding;
use crate::geometry::{self, VertexSet, DEFAULT_PROJECTION_TOL};
use crate::{Error, Result};

pub const DEFAULT_TIE_TOL: f64 = 1e-9;
/// Hull distances at or below this count as touching.
pub const DISJOINT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct LinkDecision {
    pub outcome: usize,
    pub distance: f64,
    /// Another outcome is within the tie tolerance of the minimum.
    pub tie: bool,
}

fn decide(distances: &[f64], tau: f64) -> LinkDecision {
    let best = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let mut within = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= best + tau)
        .map(|(i, _)| i);
    let outcome = within.next().expect("at least one outcome");
    LinkDecision {
        outcome,
        distance: distances[outcome],
        tie: within.next().is_some(),
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) {
        return Err(Error::invalid("tie tolerance must be nonnegative"));
    }
    Ok(())
}

/// `argmin_y ‖Proj_P(u) − v_y‖`.
pub fn map_link(embedding: &Embedding, u: &[f64], tau: f64) -> Result<LinkDecision> {
    check_tau(tau)?;
    embedding.check_point(u)?;
    let x = embedding.polytope().project(u)?;
    let distances: Vec<f64> = (0..embedding.num_outcomes())
        .map(|y| crate::dist(&x, embedding.vertex(y)))
        .collect();
    Ok(decide(&distances, tau))
}

/// The scaled sub-polytopes `P^y_α`, one per outcome.
#[derive(Clone, Debug)]
pub struct ScaledFamily {
    alpha: f64,
    members: Vec<VertexSet>,
}

impl ScaledFamily {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn members(&self) -> &[VertexSet] {
        &self.members
    }

    pub fn member(&self, y: usize) -> &VertexSet {
        &self.members[y]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Member `y` has vertices `(1−α) v_y + α v_ŷ` for every `ŷ`; coincident
/// points (only at `α = 0`) are merged.
pub fn scaled_family(embedding: &Embedding, alpha: f64) -> Result<ScaledFamily> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let n = embedding.num_outcomes();
    let members = (0..n)
        .map(|y| {
            let vy = embedding.vertex(y);
            let pts = (0..n)
                .map(|yh| {
                    vy.iter()
                        .zip(embedding.vertex(yh))
                        .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
                        .collect()
                })
                .collect();
            VertexSet::dedup(pts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaledFamily { alpha, members })
}

/// `argmin_y dist(u, P^y_α)`.
pub fn low_noise_link(family: &ScaledFamily, u: &[f64], tau: f64) -> Result<LinkDecision> {
    check_tau(tau)?;
    let distances = family
        .members
        .iter()
        .map(|m| geometry::project_onto_hull(u, m, DEFAULT_PROJECTION_TOL).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    Ok(decide(&distances, tau))
}

/// One row of the pairwise member-distance table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDistance {
    pub y: usize,
    pub yhat: usize,
    pub distance: f64,
}

/// Hull distances between all member pairs `y < ŷ`, in lexicographic order.
pub fn pairwise_distances(family: &ScaledFamily) -> Result<Vec<PairDistance>> {
    let n = family.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|y| (y + 1..n).map(move |yh| (y, yh)))
        .collect();
    pairs
        .par_iter()
        .map(|&(y, yhat)| {
            let distance = geometry::hull_distance(
                &family.members[y],
                &family.members[yhat],
                DEFAULT_PROJECTION_TOL,
            )?;
            Ok(PairDistance { y, yhat, distance })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disjointness {
    pub min_distance: f64,
    pub witness_pair: (usize, usize),
}

impl Disjointness {
    /// Every pair of members is separated by more than [`DISJOINT_TOL`].
    pub fn holds(&self) -> bool {
        self.min_distance > DISJOINT_TOL
    }
}

/// Smallest pairwise member distance and the pair attaining it.
pub fn pairwise_disjointness(family: &ScaledFamily) -> Result<Disjointness> {
    if family.len() < 2 {
        return Err(Error::invalid("disjointness needs at least two outcomes"));
    }
    let rows = pairwise_distances(family)?;
    let best = rows
        .iter()
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .expect("n ≥ 2");
    Ok(Disjointness {
        min_distance: best.distance,
        witness_pair: (best.y, best.yhat),
    })
}

/// Bisection for the supremum of `α` at which the scaled family stays
/// pairwise disjoint. The result `α*` is disjoint at `α* − tol` and
/// intersecting at `α* + tol`.
pub fn alpha_threshold(embedding: &Embedding, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    let disjoint = |alpha: f64| -> Result<bool> {
        Ok(pairwise_disjointness(&scaled_family(embedding, alpha)?)?.holds())
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if disjoint(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Polytope;
    use approx::assert_abs_diff_eq;

    fn cube2() -> Embedding {
        Embedding::with_default_labels(Polytope::build_unit_cube(2).unwrap())
    }

    #[test]
    fn map_link_examples() {
        let e = cube2();
        for y in 0..4 {
            let d = map_link(&e, e.vertex(y), DEFAULT_TIE_TOL).unwrap();
            assert_eq!(d.outcome, y);
            assert_abs_diff_eq!(d.distance, 0.0);
            assert!(!d.tie);
        }
        let d = map_link(&e, &[0.0, 0.0], DEFAULT_TIE_TOL).unwrap();
        assert_eq!(d.outcome, 0);
        assert!(d.tie);
        // (1, −1) is vertex 1 in binary order
        let d = map_link(&e, &[0.9, -0.8], DEFAULT_TIE_TOL).unwrap();
        assert_eq!(d.outcome, 1);
        assert!(map_link(&e, &[0.0, 0.0], -1.0).is_err());
        // outside points are projected first
        assert_eq!(map_link(&e, &[5.0, 4.0], 0.0).unwrap().outcome, 3);
    }

    #[test]
    fn scaled_family_examples() {
        let e = cube2();
        let f0 = scaled_family(&e, 0.0).unwrap();
        for y in 0..4 {
            assert_eq!(f0.member(y).points(), &[e.vertex(y).to_vec()]);
        }
        let f1 = scaled_family(&e, 1.0).unwrap();
        for y in 0..4 {
            assert_eq!(f1.member(y).points(), e.polytope().vertices().points());
        }
        let f = scaled_family(&e, 0.25).unwrap();
        let m = f.member(3);
        let expected = [[0.5, 0.5], [1.0, 0.5], [0.5, 1.0], [1.0, 1.0]];
        for (p, q) in m.points().iter().zip(expected) {
            assert_abs_diff_eq!(p[0], q[0], epsilon = 1e-15);
            assert_abs_diff_eq!(p[1], q[1], epsilon = 1e-15);
        }
        assert!(scaled_family(&e, 1.5).is_err());
    }

    #[test]
    fn low_noise_link_examples() {
        let e = cube2();
        let f = scaled_family(&e, 0.25).unwrap();
        for y in 0..4 {
            let d = low_noise_link(&f, e.vertex(y), DEFAULT_TIE_TOL).unwrap();
            assert_eq!(d.outcome, y);
            assert_abs_diff_eq!(d.distance, 0.0, epsilon = 1e-12);
        }
        // Nearest member corners: (±0.5, ±0.5); distances from (0.1, 0.05).
        let u = [0.1, 0.05];
        let d = low_noise_link(&f, &u, DEFAULT_TIE_TOL).unwrap();
        let oracle: Vec<f64> = [[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]]
            .iter()
            .map(|c| crate::dist(&u, c))
            .collect();
        let best = (0..4)
            .min_by(|&a, &b| oracle[a].total_cmp(&oracle[b]))
            .unwrap();
        assert_eq!(d.outcome, best);
        assert_abs_diff_eq!(d.distance, oracle[best], epsilon = 1e-10);
    }

    #[test]
    fn disjointness_examples() {
        let e = cube2();
        let quarter = pairwise_disjointness(&scaled_family(&e, 0.25).unwrap()).unwrap();
        assert!(quarter.holds());
        assert_abs_diff_eq!(quarter.min_distance, 1.0, epsilon = 1e-10);
        let half = pairwise_disjointness(&scaled_family(&e, 0.5).unwrap()).unwrap();
        assert!(half.min_distance <= 1e-10, "{half:?}");
        assert!(!half.holds());
        let perm = Embedding::with_default_labels(Polytope::build_permutahedron(3).unwrap());
        assert!(pairwise_disjointness(&scaled_family(&perm, 0.30).unwrap())
            .unwrap()
            .holds());
    }

    #[test]
    fn member_distance_table_is_lexicographic() {
        let rows = pairwise_distances(&scaled_family(&cube2(), 0.25).unwrap()).unwrap();
        let pairs: Vec<(usize, usize)> = rows.iter().map(|r| (r.y, r.yhat)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }
}
