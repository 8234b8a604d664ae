//! Classification of hull points by what their embedding fibers say about the
//! linked outcome.
//!
//! For `u ∈ P` linked to `y* = ψ(u)`, the fiber `φ⁻¹(u)` is a polytope of
//! distributions. The point is
//!
//! * `Hallucination` if some fiber distribution gives `y*` zero mass,
//! * `Inconsistent` if some fiber distribution puts strictly more mass on
//!   another outcome,
//! * `Boundary` if the best competitor only ties `y*`,
//! * `Strict` otherwise.
//!
//! When several apply, the first in that list wins.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{sample_simplex_with, seeded_rng, Distribution, Embedding};
use crate::geometry::{self, LinearProgram, LpOutcome};
use crate::links::{map_link, DEFAULT_TIE_TOL};
use crate::polytope::PolytopeKind;
use crate::{Error, Result};

pub const DEFAULT_GAP_TOL: f64 = 1e-7;
/// Fiber mass on the linked outcome at or below this counts as zero.
pub const HALLUCINATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Strict,
    Inconsistent,
    Hallucination,
    Boundary,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Strict,
        Category::Inconsistent,
        Category::Hallucination,
        Category::Boundary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Strict => "strict",
            Category::Inconsistent => "inconsistent",
            Category::Hallucination => "hallucination",
            Category::Boundary => "boundary",
        }
    }

    /// Fill colour used in SVG maps.
    pub fn color(self) -> &'static str {
        match self {
            Category::Strict => "#f5f5dc",
            Category::Inconsistent => "#ffb6c1",
            Category::Hallucination => "#a52a2a",
            Category::Boundary => "#808080",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown region category `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionClass {
    pub category: Category,
    pub linked_outcome: usize,
    /// `max p_z − p_linked` over the fiber, for every `z ≠ linked`.
    pub gaps: BTreeMap<usize, f64>,
    /// `min p_linked` over the fiber.
    pub min_linked_mass: f64,
}

/// Classifies a hull point. Points outside the hull give
/// [`Error::OutsideHull`].
pub fn classify_point(embedding: &Embedding, u: &[f64], tol: f64) -> Result<RegionClass> {
    if !(tol >= 0.0) {
        return Err(Error::invalid("gap tolerance must be nonnegative"));
    }
    embedding.check_point(u)?;
    let linked_outcome = map_link(embedding, u, DEFAULT_TIE_TOL)?.outcome;
    // The fiber LP also rejects points outside the hull.
    let (min_linked_mass, _) = embedding.min_weight_in_fiber(u, linked_outcome)?;
    let gaps = (0..embedding.num_outcomes())
        .filter(|&z| z != linked_outcome)
        .map(|z| Ok((z, embedding.preimage_gap(u, z, linked_outcome)?.value)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let category = if min_linked_mass <= HALLUCINATION_TOL {
        Category::Hallucination
    } else if gaps.values().any(|&g| g > tol) {
        Category::Inconsistent
    } else if gaps.values().any(|&g| g.abs() <= tol) {
        Category::Boundary
    } else {
        Category::Strict
    };
    Ok(RegionClass {
        category,
        linked_outcome,
        gaps,
        min_linked_mass,
    })
}

/// A point in `⋂_y conv(V ∖ v_y)` and, for each outcome `y`, a fiber
/// distribution at that point with `p_y = 0`.
#[derive(Clone, Debug)]
pub struct HallucinationWitness {
    pub point: Vec<f64>,
    pub witnesses: Vec<Distribution>,
}

/// Solves one feasibility LP over `n` stacked distributions `p^y`, each with
/// its own coordinate `y` removed, all embedding to a common point.
pub fn hallucination_witness(embedding: &Embedding) -> Result<HallucinationWitness> {
    let n = embedding.num_outcomes();
    let d = embedding.dim();
    if n < d + 2 {
        return Err(Error::invalid(format!(
            "hallucination witness needs more than d + 1 outcomes (n = {n}, d = {d})"
        )));
    }
    let block = n - 1;
    // Column of outcome `i` inside block `y`.
    let col = |y: usize, i: usize| -> usize { y * block + if i < y { i } else { i - 1 } };
    let mut lp = LinearProgram::new(n * block);
    for y in 1..n {
        for k in 0..d {
            let mut row = vec![0.0; n * block];
            for i in (0..n).filter(|&i| i != y) {
                row[col(y, i)] += embedding.vertex(i)[k];
            }
            for i in 1..n {
                row[col(0, i)] -= embedding.vertex(i)[k];
            }
            lp.add_eq(row, 0.0);
        }
    }
    for y in 0..n {
        let mut row = vec![0.0; n * block];
        row[y * block..(y + 1) * block].fill(1.0);
        lp.add_eq(row, 1.0);
    }
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        other => {
            return Err(Error::Internal(format!(
                "hallucination witness LP ended with {other:?}"
            )))
        }
    };
    let witnesses: Vec<Distribution> = (0..n)
        .map(|y| {
            let mut p = vec![0.0; n];
            for i in (0..n).filter(|&i| i != y) {
                p[i] = x[col(y, i)];
            }
            Distribution::from_lp(&p)
        })
        .collect();
    let point = embedding.embed(&witnesses[0])?;
    for (y, w) in witnesses.iter().enumerate() {
        let back = embedding.embed(w)?;
        if crate::dist(&back, &point) > 1e-8 || w.probs()[y] != 0.0 {
            return Err(Error::Internal(format!(
                "hallucination witness for outcome {y} failed verification"
            )));
        }
    }
    Ok(HallucinationWitness { point, witnesses })
}

/// Targets defining the rays probed from `v_y`: the other vertices, midpoints
/// of pairs of them, and a few seeded random convex combinations.
fn probe_targets(embedding: &Embedding, y: usize) -> Vec<Vec<f64>> {
    let n = embedding.num_outcomes();
    let others: Vec<usize> = (0..n).filter(|&i| i != y).collect();
    let mut targets: Vec<Vec<f64>> = others.iter().map(|&i| embedding.vertex(i).to_vec()).collect();
    for (a, &i) in others.iter().enumerate() {
        for &j in &others[a + 1..] {
            targets.push(
                embedding
                    .vertex(i)
                    .iter()
                    .zip(embedding.vertex(j))
                    .map(|(p, q)| 0.5 * (p + q))
                    .collect(),
            );
        }
    }
    let mut rng = seeded_rng(0x5eed ^ y as u64);
    for _ in 0..16 {
        let w = sample_simplex_with(&mut rng, others.len());
        let mut t = vec![0.0; embedding.dim()];
        for (&i, wi) in others.iter().zip(w.probs()) {
            for (tk, vk) in t.iter_mut().zip(embedding.vertex(i)) {
                *tk += wi * vk;
            }
        }
        targets.push(t);
    }
    targets
}

/// Lower-bound estimate of the radius of the strict region around `v_y`.
///
/// Points at radii `k · resolution`, `k = 1, 2, …`, are placed on rays from
/// `v_y` toward interior targets (so they stay inside `P`). The result is the
/// largest radius on that grid such that every probe at or below it
/// classifies `Strict` with linked outcome `y`.
pub fn vertex_calibration_radius(embedding: &Embedding, y: usize, resolution: f64) -> Result<f64> {
    embedding.check_outcome(y)?;
    if !(resolution > 0.0) {
        return Err(Error::invalid("resolution must be positive"));
    }
    let vy = embedding.vertex(y).to_vec();
    let rays: Vec<(Vec<f64>, f64)> = probe_targets(embedding, y)
        .into_iter()
        .filter_map(|t| {
            let dir = crate::sub(&t, &vy);
            let len = crate::norm(&dir);
            (len > 1e-12).then(|| (dir.iter().map(|v| v / len).collect(), len))
        })
        .collect();
    let strict_at = |u: &[f64]| -> Result<bool> {
        let c = classify_point(embedding, u, DEFAULT_GAP_TOL)?;
        Ok(c.category == Category::Strict && c.linked_outcome == y)
    };
    let mut k = 0usize;
    loop {
        let r = (k + 1) as f64 * resolution;
        let ring: Vec<Vec<f64>> = rays
            .iter()
            .filter(|(_, len)| r <= *len)
            .map(|(dir, _)| vy.iter().zip(dir).map(|(v, d)| v + r * d).collect())
            .collect();
        if ring.is_empty() {
            break;
        }
        let ok = ring
            .par_iter()
            .map(|u| strict_at(u))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        if !ok {
            break;
        }
        k += 1;
    }
    Ok(k as f64 * resolution)
}

/// Points per axis for region maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub tol: f64,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::invalid("grid needs at least two points per axis"));
        }
        Ok(Self {
            points_per_axis,
            tol: DEFAULT_GAP_TOL,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionRow {
    /// Position in the grid, one index per grid axis.
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
    pub category: Category,
    pub outcome: usize,
}

#[derive(Clone, Debug)]
pub struct RegionTable {
    pub dim: usize,
    pub labels: Vec<String>,
    pub points_per_axis: usize,
    /// Grid axis extents `(lo, hi)`, in grid coordinates.
    pub extents: Vec<(f64, f64)>,
    pub rows: Vec<RegionRow>,
}

impl RegionTable {
    pub fn counts(&self) -> BTreeMap<Category, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.category).or_insert(0) += 1;
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("category".into());
        header.push("outcome".into());
        let io = |e: csv::Error| Error::Internal(format!("csv: {e}"));
        wr.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.coords.iter().map(|c| format!("{c}")).collect();
            rec.push(r.category.as_str().into());
            rec.push(self.labels[r.outcome].clone());
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Internal(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Heat map with one square cell per grid point. Only two-axis grids.
    pub fn to_svg(&self) -> Result<String> {
        if self.extents.len() != 2 {
            return Err(Error::invalid("SVG output needs a two-axis grid"));
        }
        const SIZE: f64 = 600.0;
        const MARGIN: f64 = 20.0;
        let n = self.points_per_axis;
        let cell = SIZE / n as f64;
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {w} {w}\">\n",
            w = SIZE + 2.0 * MARGIN
        ));
        s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        for r in &self.rows {
            let (i, j) = (r.index[0], r.index[1]);
            let x = MARGIN + i as f64 * cell;
            let y = MARGIN + (n - 1 - j) as f64 * cell;
            s.push_str(&format!(
                "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{c:.3}\" height=\"{c:.3}\" fill=\"{f}\"><title>{cat} {lab}</title></rect>\n",
                c = cell,
                f = r.category.color(),
                cat = r.category,
                lab = self.labels[r.outcome],
            ));
        }
        for (k, c) in Category::ALL.iter().enumerate() {
            let y = 14.0 + 14.0 * k as f64;
            s.push_str(&format!(
                "<rect x=\"4\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/><text x=\"18\" y=\"{:.1}\" font-size=\"10\" font-family=\"sans-serif\">{}</text>\n",
                y - 9.0,
                c.color(),
                y,
                c
            ));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Grid axes: an origin and one direction per grid axis; a grid point with
/// parameters `s` sits at `origin + Σ s_k axis_k`.
struct GridFrame {
    origin: Vec<f64>,
    axes: Vec<Vec<f64>>,
    extents: Vec<(f64, f64)>,
}

fn grid_frame(embedding: &Embedding) -> Result<GridFrame> {
    let p = embedding.polytope();
    let d = p.dim();
    if p.kind() == PolytopeKind::Permutahedron && d == 3 {
        let n = p.num_vertices() as f64;
        let mut c = vec![0.0; 3];
        for v in p.vertices().points() {
            for k in 0..3 {
                c[k] += v[k] / n;
            }
        }
        let s2 = std::f64::consts::SQRT_2;
        let s6 = 6f64.sqrt();
        let axes = vec![vec![1.0 / s2, -1.0 / s2, 0.0], vec![1.0 / s6, 1.0 / s6, -2.0 / s6]];
        let extents = axes
            .iter()
            .map(|a| {
                let r = p
                    .vertices()
                    .points()
                    .iter()
                    .map(|v| crate::dot(&crate::sub(v, &c), a).abs())
                    .fold(0.0, f64::max);
                (-r, r)
            })
            .collect();
        return Ok(GridFrame {
            origin: c,
            axes,
            extents,
        });
    }
    if d != 2 && d != 3 {
        return Err(Error::invalid(format!(
            "region maps support dimensions 2 and 3, got {d}"
        )));
    }
    let axes = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        })
        .collect();
    Ok(GridFrame {
        origin: vec![0.0; d],
        axes,
        extents: p.bounding_box(),
    })
}

/// Classifies every grid point inside the hull. Rows follow grid index order
/// with the first axis varying slowest.
pub fn map_regions(embedding: &Embedding, grid: &GridSpec) -> Result<RegionTable> {
    let frame = grid_frame(embedding)?;
    let n = grid.points_per_axis;
    if n < 2 {
        return Err(Error::invalid("grid needs at least two points per axis"));
    }
    let axes = frame.axes.len();
    let total = n.pow(axes as u32);
    let point_of = |flat: usize| -> (Vec<usize>, Vec<f64>) {
        let mut index = vec![0; axes];
        let mut rest = flat;
        for k in (0..axes).rev() {
            index[k] = rest % n;
            rest /= n;
        }
        let mut u = frame.origin.clone();
        for (k, &i) in index.iter().enumerate() {
            let (lo, hi) = frame.extents[k];
            let s = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            for (uc, ac) in u.iter_mut().zip(&frame.axes[k]) {
                *uc += s * ac;
            }
        }
        (index, u)
    };
    let vertices = embedding.polytope().vertices();
    let rows = (0..total)
        .into_par_iter()
        .map(|flat| -> Result<Option<RegionRow>> {
            let (index, coords) = point_of(flat);
            if !geometry::hull_membership(&coords, vertices)?.inside {
                return Ok(None);
            }
            match classify_point(embedding, &coords, grid.tol) {
                Ok(c) => Ok(Some(RegionRow {
                    index,
                    coords,
                    category: c.category,
                    outcome: c.linked_outcome,
                })),
                // Rounding can put a membership-accepted point a hair outside
                // the exact fiber LP.
                Err(Error::OutsideHull { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(RegionTable {
        dim: embedding.dim(),
        labels: embedding.labels().to_vec(),
        points_per_axis: n,
        extents: frame.extents,
        rows,
    })
}
