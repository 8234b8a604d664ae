use std::collections::BTreeSet;

use approx::assert_abs_diff_eq;
use polyembed::geometry::closed_form::{project_cube, project_l1_ball, project_permutahedron};
use polyembed::geometry::{self, hull_membership, project_onto_hull, VertexSet};
use polyembed::polytope::{permutahedron_weights, Polytope};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn test_polytopes() -> Vec<Polytope> {
    vec![
        Polytope::build_unit_cube(2).unwrap(),
        Polytope::build_unit_cube(3).unwrap(),
        Polytope::build_cross_polytope(2).unwrap(),
        Polytope::build_cross_polytope(3).unwrap(),
        Polytope::build_permutahedron(3).unwrap(),
        Polytope::build_permutahedron(4).unwrap(),
    ]
}

/// The runner-up vertex for a generic linear functional is always adjacent to
/// the maximizer, so (best, second) pairs over many directions enumerate the
/// edges.
fn direction_oracle_edges(p: &Polytope, draws: usize) -> BTreeSet<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut edges = BTreeSet::new();
    for _ in 0..draws {
        let a: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut scored: Vec<(f64, usize)> = (0..p.num_vertices())
            .map(|i| (p.vertex(i).iter().zip(&a).map(|(x, y)| x * y).sum(), i))
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        if scored[0].0 - scored[1].0 < 1e-9 || scored[1].0 - scored[2].0 < 1e-9 {
            continue;
        }
        let (i, j) = (scored[0].1, scored[1].1);
        edges.insert((i.min(j), i.max(j)));
    }
    edges
}

#[test]
fn lp_edges_match_direction_oracle() {
    for p in test_polytopes() {
        let lp: BTreeSet<(usize, usize)> = p.edges().unwrap().into_iter().collect();
        let oracle = direction_oracle_edges(&p, 200_000);
        assert_eq!(lp, oracle, "{:?} d={}", p.kind(), p.dim());
    }
}

#[test]
fn edge_counts() {
    // 2^{d−1} d for cubes, 2d(d−1) for cross-polytopes, d!(d−1)/2 for permutahedra
    let counts: Vec<usize> = test_polytopes().iter().map(|p| p.edges().unwrap().len()).collect();
    assert_eq!(counts, vec![4, 12, 4, 12, 6, 36]);
}

#[test]
fn closed_form_neighbors_match_lp() {
    for p in test_polytopes() {
        for i in 0..p.num_vertices() {
            assert_eq!(p.neighbors(i).unwrap(), p.lp_neighbors(i).unwrap(), "{:?} vertex {i}", p.kind());
        }
    }
}

#[test]
fn permutahedron_projection_of_ones_against_barycentric_grid() {
    let p = Polytope::build_permutahedron(3).unwrap();
    let u = [1.0, 1.0, 1.0];
    let x = p.project(&u).unwrap();
    let d = polyembed_dist(&x, &u);
    assert_abs_diff_eq!(d, 2.0 / 3f64.sqrt(), epsilon = 1e-12);

    // Oracle: every convex combination with weights in steps of 1/20.
    let steps = 20usize;
    let mut best = f64::INFINITY;
    let mut w = vec![0usize; 6];
    fn rec(k: usize, left: usize, w: &mut Vec<usize>, steps: usize, p: &Polytope, u: &[f64], best: &mut f64) {
        if k == 5 {
            w[5] = left;
            let mut x = [0.0; 3];
            for (i, &wi) in w.iter().enumerate() {
                for c in 0..3 {
                    x[c] += wi as f64 / steps as f64 * p.vertex(i)[c];
                }
            }
            *best = best.min(polyembed_dist(&x, u));
            return;
        }
        for a in 0..=left {
            w[k] = a;
            rec(k + 1, left - a, w, steps, p, u, best);
        }
    }
    rec(0, steps, &mut w, steps, &p, &u, &mut best);
    assert!((best - d).abs() < 1e-9, "grid {best} vs projection {d}");
}

fn polyembed_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn vs(p: &Polytope) -> VertexSet {
    p.vertices().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cube_clamp_matches_wolfe(u in prop::collection::vec(-3.0f64..3.0, 3)) {
        let p = Polytope::build_unit_cube(3).unwrap();
        let (x, d) = project_onto_hull(&u, &vs(&p), 1e-10).unwrap();
        let c = project_cube(&u);
        prop_assert!(polyembed_dist(&x, &c) < 1e-6);
        prop_assert!((d - polyembed_dist(&c, &u)).abs() < 1e-8);
    }

    #[test]
    fn l1_ball_matches_wolfe(u in prop::collection::vec(-3.0f64..3.0, 3)) {
        let p = Polytope::build_cross_polytope(3).unwrap();
        let (x, d) = project_onto_hull(&u, &vs(&p), 1e-10).unwrap();
        let c = project_l1_ball(&u, 1.0);
        prop_assert!(polyembed_dist(&x, &c) < 1e-6);
        prop_assert!((d - polyembed_dist(&c, &u)).abs() < 1e-8);
    }

    #[test]
    fn permutahedron_pav_matches_wolfe(u in prop::collection::vec(-2.0f64..2.0, 4)) {
        let p = Polytope::build_permutahedron(4).unwrap();
        let (x, d) = project_onto_hull(&u, &vs(&p), 1e-10).unwrap();
        let c = project_permutahedron(&u, &permutahedron_weights(4));
        prop_assert!(polyembed_dist(&x, &c) < 1e-6);
        prop_assert!((d - polyembed_dist(&c, &u)).abs() < 1e-8);
    }

    #[test]
    fn projection_is_inside_and_idempotent(u in prop::collection::vec(-3.0f64..3.0, 3), which in 0usize..3) {
        let p = [
            Polytope::build_unit_cube(3).unwrap(),
            Polytope::build_cross_polytope(3).unwrap(),
            Polytope::build_permutahedron(3).unwrap(),
        ][which].clone();
        let x = p.project(&u).unwrap();
        prop_assert!(hull_membership(&x, p.vertices()).unwrap().inside);
        let again = p.project(&x).unwrap();
        prop_assert!(polyembed_dist(&x, &again) < 1e-9);
    }

    #[test]
    fn projection_satisfies_variational_inequality(u in prop::collection::vec(-3.0f64..3.0, 3)) {
        // ⟨u − x, v − x⟩ ≤ 0 for every vertex v.
        let p = Polytope::build_permutahedron(3).unwrap();
        let x = p.project(&u).unwrap();
        for v in p.vertices().points() {
            let s: f64 = (0..3).map(|k| (u[k] - x[k]) * (v[k] - x[k])).sum();
            prop_assert!(s <= 1e-9, "{s}");
        }
    }

    #[test]
    fn membership_agrees_with_projection_distance(u in prop::collection::vec(-1.5f64..1.5, 2)) {
        let p = Polytope::build_cross_polytope(2).unwrap();
        let inside = hull_membership(&u, p.vertices()).unwrap().inside;
        let l1: f64 = u.iter().map(|v| v.abs()).sum();
        prop_assume!((l1 - 1.0).abs() > 1e-7);
        prop_assert_eq!(inside, l1 < 1.0);
    }

    #[test]
    fn hull_distance_is_symmetric_and_bounded(shift in prop::collection::vec(-3.0f64..3.0, 2)) {
        let sq = vs(&Polytope::build_unit_cube(2).unwrap());
        let moved = VertexSet::new(sq.points().iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect()).unwrap();
        let d1 = geometry::hull_distance(&sq, &moved, 1e-10).unwrap();
        let d2 = geometry::hull_distance(&moved, &sq, 1e-10).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-8);
        // Oracle: the gap between two axis-aligned squares.
        let gx = (shift[0].abs() - 2.0).max(0.0);
        let gy = (shift[1].abs() - 2.0).max(0.0);
        prop_assert!((d1 - (gx * gx + gy * gy).sqrt()).abs() < 1e-7);
    }
}
