//! Named polytopes and their vertex/edge combinatorics.
//!
//! Vertex orderings are fixed because the outcome ↔ vertex bijection depends
//! on them:
//!
//! * cube `{−1,1}^d`: index `i` has coordinate `k` equal to `+1` iff bit `k`
//!   of `i` is set;
//! * permutahedron: permutations of `w` in lexicographic order;
//! * cross-polytope: vertex `2i` is `e_i`, vertex `2i+1` is `−e_i`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, closed_form, VertexSet, DEFAULT_PROJECTION_TOL};
use crate::{Error, Result};

pub const MAX_CUBE_DIM: usize = 16;
pub const MAX_PERMUTAHEDRON_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolytopeKind {
    Cube,
    Permutahedron,
    #[serde(rename = "cross")]
    CrossPolytope,
    Generic,
}

impl PolytopeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolytopeKind::Cube => "cube",
            PolytopeKind::Permutahedron => "permutahedron",
            PolytopeKind::CrossPolytope => "cross",
            PolytopeKind::Generic => "generic",
        }
    }
}

impl std::str::FromStr for PolytopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(PolytopeKind::Cube),
            "permutahedron" => Ok(PolytopeKind::Permutahedron),
            "cross" | "cross-polytope" | "crosspolytope" => Ok(PolytopeKind::CrossPolytope),
            "generic" => Ok(PolytopeKind::Generic),
            other => Err(Error::invalid(format!("unknown polytope kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Polytope {
    kind: PolytopeKind,
    vertices: VertexSet,
    /// Sorted generating vector of a permutahedron.
    weights: Option<Vec<f64>>,
    /// Neighbor lists certified by edge LPs (generic polytopes only).
    edge_cache: Option<Vec<Vec<usize>>>,
}

/// `w = (0, 1/(βd), …, (d−1)/(βd))` with `β = (d−1)/2`; sums to one.
pub fn permutahedron_weights(d: usize) -> Vec<f64> {
    let beta = (d as f64 - 1.0) / 2.0;
    (0..d).map(|k| k as f64 / (beta * d as f64)).collect()
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// Position of a permutation of `0..d` in lexicographic order.
fn lehmer_index(perm: &[usize]) -> usize {
    let d = perm.len();
    (0..d)
        .map(|k| {
            let smaller = perm[k + 1..].iter().filter(|&&x| x < perm[k]).count();
            smaller * factorial(d - 1 - k)
        })
        .sum()
}

impl Polytope {
    /// `conv({−1,1}^d)` in binary vertex order.
    pub fn build_unit_cube(d: usize) -> Result<Self> {
        if !(1..=MAX_CUBE_DIM).contains(&d) {
            return Err(Error::invalid(format!(
                "cube dimension must be in 1..={MAX_CUBE_DIM}, got {d}"
            )));
        }
        let points = (0..1usize << d)
            .map(|i| {
                (0..d)
                    .map(|k| if i >> k & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Ok(Self {
            kind: PolytopeKind::Cube,
            vertices: VertexSet::new(points)?,
            weights: None,
            edge_cache: None,
        })
    }

    /// Permutahedron of [`permutahedron_weights`]`(d)`; `d!` vertices on the
    /// hyperplane `Σu = 1`.
    pub fn build_permutahedron(d: usize) -> Result<Self> {
        if !(2..=MAX_PERMUTAHEDRON_DIM).contains(&d) {
            return Err(Error::invalid(format!(
                "permutahedron dimension must be in 2..={MAX_PERMUTAHEDRON_DIM}, got {d}"
            )));
        }
        let w = permutahedron_weights(d);
        let points = (0..d)
            .permutations(d)
            .map(|perm| perm.iter().map(|&r| w[r]).collect())
            .collect();
        Ok(Self {
            kind: PolytopeKind::Permutahedron,
            vertices: VertexSet::new(points)?,
            weights: Some(w),
            edge_cache: None,
        })
    }

    /// `conv{±e_i}` with `2i ↦ e_i`, `2i+1 ↦ −e_i`.
    pub fn build_cross_polytope(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("cross-polytope dimension must be ≥ 1"));
        }
        let mut points = Vec::with_capacity(2 * d);
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; d];
                v[i] = sign;
                points.push(v);
            }
        }
        Ok(Self {
            kind: PolytopeKind::CrossPolytope,
            vertices: VertexSet::new(points)?,
            weights: None,
            edge_cache: None,
        })
    }

    /// Wraps an arbitrary vertex list, rejecting any point that lies in the
    /// hull of the others. Edges are certified eagerly.
    pub fn from_vertices(vertices: VertexSet) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a polytope needs at least two vertices"));
        }
        for i in 0..vertices.len() {
            let rest = vertices.without(i)?;
            if geometry::hull_membership(vertices.get(i), &rest)?.inside {
                return Err(Error::invalid(format!(
                    "vertex {i} ({:?}) is not extreme: it lies in the hull of the others",
                    vertices.get(i)
                )));
            }
        }
        let edge_cache = Some(lp_neighbor_lists(&vertices)?);
        Ok(Self {
            kind: PolytopeKind::Generic,
            vertices,
            weights: None,
            edge_cache,
        })
    }

    pub fn build(kind: PolytopeKind, d: usize) -> Result<Self> {
        match kind {
            PolytopeKind::Cube => Self::build_unit_cube(d),
            PolytopeKind::Permutahedron => Self::build_permutahedron(d),
            PolytopeKind::CrossPolytope => Self::build_cross_polytope(d),
            PolytopeKind::Generic => Err(Error::invalid(
                "generic polytopes are built from an explicit vertex list",
            )),
        }
    }

    pub fn kind(&self) -> PolytopeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.vertices.dim()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        self.vertices.get(i)
    }

    /// Generating vector for permutahedra.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Per-coordinate `(min, max)` over the vertices.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|k| {
                self.vertices
                    .points()
                    .iter()
                    .map(|p| p[k])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .collect()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_vertices() {
            return Err(Error::invalid(format!(
                "vertex index {i} out of range for {} vertices",
                self.num_vertices()
            )));
        }
        Ok(())
    }

    /// Vertices sharing an edge with vertex `i`, in increasing order.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        let n = self.num_vertices();
        let mut out = match self.kind {
            PolytopeKind::Cube => (0..self.dim()).map(|k| i ^ (1 << k)).collect(),
            PolytopeKind::CrossPolytope => (0..n).filter(|&j| j != i && j != i ^ 1).collect(),
            PolytopeKind::Permutahedron => {
                let d = self.dim();
                let mut perm = (0..d).permutations(d).nth(i).expect("index checked");
                let mut out = Vec::with_capacity(d - 1);
                for r in 0..d - 1 {
                    let a = perm.iter().position(|&x| x == r).unwrap();
                    let b = perm.iter().position(|&x| x == r + 1).unwrap();
                    perm.swap(a, b);
                    out.push(lehmer_index(&perm));
                    perm.swap(a, b);
                }
                out
            }
            PolytopeKind::Generic => self.edge_cache.as_ref().expect("generic cache")[i].clone(),
        };
        out.sort_unstable();
        Ok(out)
    }

    /// Neighbors certified by edge LPs regardless of kind.
    pub fn lp_neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        (0..self.num_vertices())
            .filter(|&j| j != i)
            .filter_map(|j| match geometry::is_edge(i, j, &self.vertices) {
                Ok(true) => Some(Ok(j)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    pub fn is_edge(&self, i: usize, j: usize) -> Result<bool> {
        self.check_index(j)?;
        Ok(i != j && self.neighbors(i)?.binary_search(&j).is_ok())
    }

    /// All edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for i in 0..self.num_vertices() {
            for j in self.neighbors(i)? {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        Ok(out)
    }

    /// Euclidean projection onto the polytope, using the exact closed form
    /// when one exists.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(match self.kind {
            PolytopeKind::Cube => closed_form::project_cube(u),
            PolytopeKind::CrossPolytope => closed_form::project_l1_ball(u, 1.0),
            PolytopeKind::Permutahedron => {
                closed_form::project_permutahedron(u, self.weights.as_ref().unwrap())
            }
            PolytopeKind::Generic => {
                geometry::project_onto_hull(u, &self.vertices, DEFAULT_PROJECTION_TOL)?.0
            }
        })
    }

    pub fn to_file(&self) -> PolytopeFile {
        PolytopeFile {
            kind: self.kind.as_str().to_string(),
            dim: self.dim(),
            vertices: self.vertices.points().to_vec(),
        }
    }

    pub fn from_file(file: &PolytopeFile) -> Result<Self> {
        let kind: PolytopeKind = file.kind.parse()?;
        if kind == PolytopeKind::Generic {
            let vs = VertexSet::new(file.vertices.clone())?;
            if vs.dim() != file.dim {
                return Err(Error::DimensionMismatch {
                    expected: file.dim,
                    found: vs.dim(),
                });
            }
            return Self::from_vertices(vs);
        }
        let p = Self::build(kind, file.dim)?;
        if !file.vertices.is_empty() {
            let same = file.vertices.len() == p.num_vertices()
                && file
                    .vertices
                    .iter()
                    .zip(p.vertices.points())
                    .all(|(a, b)| a.len() == b.len() && crate::dist(a, b) <= 1e-12);
            if !same {
                return Err(Error::invalid(format!(
                    "vertex list does not match the canonical {} ordering",
                    kind.as_str()
                )));
            }
        }
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolytopeFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("polytope JSON: {e}")))?;
        Self::from_file(&file)
    }
}

fn lp_neighbor_lists(vs: &VertexSet) -> Result<Vec<Vec<usize>>> {
    let n = vs.len();
    let mut lists = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if geometry::is_edge(i, j, vs)? {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    for l in &mut lists {
        l.sort_unstable();
    }
    Ok(lists)
}

/// On-disk polytope description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub kind: String,
    pub dim: usize,
    #[serde(default)]
    pub vertices: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_vertex_order_and_counts() {
        let c1 = Polytope::build_unit_cube(1).unwrap();
        assert_eq!(c1.vertices().points(), &[vec![-1.0], vec![1.0]]);
        let c2 = Polytope::build_unit_cube(2).unwrap();
        assert_eq!(c2.num_vertices(), 4);
        assert_eq!(c2.vertex(1), &[1.0, -1.0]);
        assert_eq!(c2.vertex(2), &[-1.0, 1.0]);
        let c3 = Polytope::build_unit_cube(3).unwrap();
        assert_eq!(c3.edges().unwrap().len(), 12);
        for i in 0..8 {
            assert_eq!(c3.neighbors(i).unwrap().len(), 3);
        }
        assert!(Polytope::build_unit_cube(0).is_err());
        assert!(Polytope::build_unit_cube(17).is_err());
    }

    #[test]
    fn permutahedron_vertices() {
        let p2 = Polytope::build_permutahedron(2).unwrap();
        assert_eq!(p2.vertices().points(), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p3 = Polytope::build_permutahedron(3).unwrap();
        assert_eq!(p3.num_vertices(), 6);
        let t = 1.0 / 3.0;
        let expected = [
            [0.0, t, 2.0 * t],
            [0.0, 2.0 * t, t],
            [t, 0.0, 2.0 * t],
            [t, 2.0 * t, 0.0],
            [2.0 * t, 0.0, t],
            [2.0 * t, t, 0.0],
        ];
        for (v, e) in p3.vertices().points().iter().zip(expected) {
            for (a, b) in v.iter().zip(e) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        for i in 0..6 {
            assert_eq!(p3.neighbors(i).unwrap().len(), 2);
        }
        assert!(Polytope::build_permutahedron(1).is_err());
        assert!(Polytope::build_permutahedron(7).is_err());
    }

    #[test]
    fn permutahedron_vertices_on_simplex_plane() {
        for d in 2..=6 {
            let p = Polytope::build_permutahedron(d).unwrap();
            assert_eq!(p.num_vertices(), factorial(d));
            for v in p.vertices().points() {
                assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cross_polytope_layout() {
        let c1 = Polytope::build_cross_polytope(1).unwrap();
        assert_eq!(c1.vertices().points(), &[vec![1.0], vec![-1.0]]);
        let c2 = Polytope::build_cross_polytope(2).unwrap();
        assert_eq!(
            c2.vertices().points(),
            &[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0]
            ]
        );
        assert!(!c2.is_edge(0, 1).unwrap());
        assert!(!c2.is_edge(2, 3).unwrap());
        assert_eq!(c2.edges().unwrap().len(), 4);
        let c3 = Polytope::build_cross_polytope(3).unwrap();
        assert_eq!(c3.neighbors(0).unwrap(), vec![2, 3, 4, 5]);
    }

    #[test]
    fn generic_validation() {
        let tri = VertexSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = Polytope::from_vertices(tri).unwrap();
        assert_eq!(p.edges().unwrap().len(), 3);
        let with_centroid = VertexSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        let err = Polytope::from_vertices(with_centroid).unwrap_err();
        assert!(err.to_string().contains("vertex 3"), "{err}");
        let single = VertexSet::new(vec![vec![0.0]]).unwrap();
        assert!(Polytope::from_vertices(single).is_err());
    }

    #[test]
    fn generic_permutahedron_matches_builder() {
        let built = Polytope::build_permutahedron(3).unwrap();
        let mut pts = built.vertices().points().to_vec();
        pts.reverse();
        let generic = Polytope::from_vertices(VertexSet::new(pts.clone()).unwrap()).unwrap();
        for v in built.vertices().points() {
            assert!(pts.iter().any(|p| crate::dist(p, v) < 1e-15));
        }
        for i in 0..6 {
            assert_eq!(generic.neighbors(i).unwrap().len(), 2);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = Polytope::build_cross_polytope(2).unwrap();
        let text = serde_json::to_string(&p.to_file()).unwrap();
        let q = Polytope::from_json(&text).unwrap();
        assert_eq!(q.kind(), PolytopeKind::CrossPolytope);
        assert_eq!(q.vertices(), p.vertices());
        let bad = r#"{"kind":"cube","dim":2,"vertices":[[1,1],[0,0],[1,0],[0,1]]}"#;
        assert!(Polytope::from_json(bad).is_err());
        let generic = r#"{"kind":"generic","dim":2,"vertices":[[0,0],[1,0],[0,1]]}"#;
        assert_eq!(Polytope::from_json(generic).unwrap().num_vertices(), 3);
        let short = r#"{"kind":"cube","dim":3}"#;
        assert_eq!(Polytope::from_json(short).unwrap().num_vertices(), 8);
    }
}
