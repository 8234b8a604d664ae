//! Mode elicitation from several cross-polytope problem instances.
//!
//! Each instance places the `2d` outcomes on the vertices `±e_i` of a
//! `d`-dimensional cross-polytope, one outcome pair per diagonal. For the pair
//! `(a, b)` on `(e_i, −e_i)` the report coordinate `u_i = p_a − p_b`, so its
//! sign says which of the two outcomes is more likely. A round-robin schedule
//! of `2d − 1` perfect matchings covers every pair once, after which the mode
//! is the set of outcomes that never lose a comparison.
//!
//! Noisy reports can contradict each other. The relation-table path then keeps
//! the largest subset of outcomes on which the reports form a total preorder
//! and reads the maxima off that subset.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{seeded_rng, Distribution, Embedding};
use crate::polytope::Polytope;
use crate::{Error, Result};

pub const DEFAULT_COMPARISON_TOL: f64 = 1e-9;
/// Largest outcome count searched exactly by [`largest_total_order_subset`].
pub const EXACT_SUBSET_LIMIT: usize = 12;

/// How `p_a` compares with `p_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "=")]
    Equal,
}

impl Relation {
    pub fn flip(self) -> Self {
        match self {
            Relation::Less => Relation::Greater,
            Relation::Greater => Relation::Less,
            Relation::Equal => Relation::Equal,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Greater => ">",
            Relation::Equal => "=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One pairwise comparison, with `a < b` by outcome index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub instance: usize,
    pub a: usize,
    pub b: usize,
    #[serde(rename = "rel")]
    pub relation: Relation,
}

impl ComparisonReport {
    /// Builds a report for `p_a ? p_b`, swapping to canonical order if needed.
    pub fn new(instance: usize, a: usize, b: usize, relation: Relation) -> Self {
        if a <= b {
            Self { instance, a, b, relation }
        } else {
            Self {
                instance,
                a: b,
                b: a,
                relation: relation.flip(),
            }
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// A cross-polytope instance. Vertex `2i` is `e_i` and `2i + 1` is `−e_i`;
/// `outcomes[v]` is the global outcome placed on vertex `v`.
#[derive(Clone, Debug)]
pub struct CrossInstance {
    embedding: Embedding,
    outcomes: Vec<usize>,
}

impl CrossInstance {
    /// `outcomes` must be a permutation of `0..2d`; `labels` are global.
    pub fn new(outcomes: Vec<usize>, labels: &[String]) -> Result<Self> {
        let n = outcomes.len();
        if n < 2 || n % 2 != 0 {
            return Err(Error::invalid(format!(
                "a cross-polytope instance needs an even number ≥ 2 of outcomes, got {n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::invalid(format!("{} labels for {n} outcomes", labels.len())));
        }
        let mut seen = vec![false; n];
        for &o in &outcomes {
            if o >= n || std::mem::replace(&mut seen[o], true) {
                return Err(Error::invalid("instance outcomes must be a permutation"));
            }
        }
        let polytope = Polytope::build_cross_polytope(n / 2)?;
        let local = outcomes.iter().map(|&o| labels[o].clone()).collect();
        Ok(Self {
            embedding: Embedding::new(polytope, local)?,
            outcomes,
        })
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn dim(&self) -> usize {
        self.outcomes.len() / 2
    }

    /// Global outcome pair on diagonal `i`, as `(on e_i, on −e_i)`.
    pub fn diagonal(&self, i: usize) -> (usize, usize) {
        (self.outcomes[2 * i], self.outcomes[2 * i + 1])
    }

    /// Embeds a distribution over the global outcomes.
    pub fn embed(&self, p: &Distribution) -> Result<Vec<f64>> {
        if p.len() != self.outcomes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.outcomes.len(),
                found: p.len(),
            });
        }
        let local: Vec<f64> = self.outcomes.iter().map(|&o| p.probs()[o]).collect();
        Ok(self.embedding.polytope().vertices().combine(&local))
    }

    /// One report per diagonal pair from the distances to its two vertices.
    pub fn extract_comparisons(
        &self,
        instance: usize,
        u: &[f64],
        tau: f64,
    ) -> Result<Vec<ComparisonReport>> {
        if !(tau >= 0.0) {
            return Err(Error::invalid("comparison tolerance must be nonnegative"));
        }
        self.embedding.check_point(u)?;
        Ok((0..self.dim())
            .map(|i| {
                let (a, b) = self.diagonal(i);
                let da = crate::dist(u, self.embedding.vertex(2 * i));
                let db = crate::dist(u, self.embedding.vertex(2 * i + 1));
                // (db² − da²) / 4 is exactly u_i for the pair (e_i, −e_i).
                let s = (db * db - da * da) / 4.0;
                let rel = if s.abs() <= tau {
                    Relation::Equal
                } else if s > 0.0 {
                    Relation::Greater
                } else {
                    Relation::Less
                };
                ComparisonReport::new(instance, a, b, rel)
            })
            .collect())
    }
}

/// `m` perfect matchings on `2d` outcomes and the instances they induce.
#[derive(Clone, Debug)]
pub struct InstancePlan {
    pairings: Vec<Vec<(usize, usize)>>,
    instances: Vec<CrossInstance>,
    labels: Vec<String>,
}

impl InstancePlan {
    /// Pair `i` of matching `j` goes on diagonal `i` of instance `j`.
    pub fn from_pairings(pairings: Vec<Vec<(usize, usize)>>, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let instances = pairings
            .iter()
            .map(|m| {
                if m.len() * 2 != n {
                    return Err(Error::invalid("every matching must cover all outcomes"));
                }
                let outcomes = m.iter().flat_map(|&(a, b)| [a, b]).collect();
                CrossInstance::new(outcomes, &labels)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pairings,
            instances,
            labels,
        })
    }

    pub fn pairings(&self) -> &[Vec<(usize, usize)>] {
        &self.pairings
    }

    pub fn instances(&self) -> &[CrossInstance] {
        &self.instances
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_outcomes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }
}

/// Circle-method one-factorization of `n` outcomes into `n − 1` matchings.
///
/// Outcome `0` stays fixed while `1..n` rotate; round `r` pairs `0` with the
/// first rotated entry and folds the rest end to end.
pub fn round_robin_plan(n_outcomes: usize) -> Result<InstancePlan> {
    round_robin_plan_with_labels(crate::embedding::default_labels(n_outcomes))
}

pub fn round_robin_plan_with_labels(labels: Vec<String>) -> Result<InstancePlan> {
    let n = labels.len();
    if n < 4 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "round-robin plans need an even number ≥ 4 of outcomes, got {n} (pad with a zero-probability outcome)"
        )));
    }
    let m = n - 1;
    let pairings = (0..m)
        .map(|r| {
            let arr: Vec<usize> = (0..m).map(|k| 1 + (k + r) % m).collect();
            let mut matching = vec![(0, arr[0])];
            for k in 1..n / 2 {
                let (x, y) = (arr[k], arr[m - k]);
                matching.push((x.min(y), x.max(y)));
            }
            matching
        })
        .collect();
    InstancePlan::from_pairings(pairings, labels)
}

fn check_reports(reports: &[ComparisonReport], n: usize) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::invalid("no comparison reports"));
    }
    for r in reports {
        if r.a >= n || r.b >= n || r.a == r.b {
            return Err(Error::invalid(format!(
                "report on invalid pair ({}, {}) for {n} outcomes",
                r.a, r.b
            )));
        }
    }
    Ok(())
}

/// Relations seen per unordered pair, indexed `[min][max]`, as a `p_min ? p_max`
/// bit set (bit 0 `<`, bit 1 `>`, bit 2 `=`).
fn relation_bits(reports: &[ComparisonReport], n: usize) -> Vec<Vec<u8>> {
    let mut seen = vec![vec![0u8; n]; n];
    for r in reports {
        let c = ComparisonReport::new(r.instance, r.a, r.b, r.relation);
        seen[c.a][c.b] |= match c.relation {
            Relation::Less => 1,
            Relation::Greater => 2,
            Relation::Equal => 4,
        };
    }
    seen
}

/// Outcomes that no report ranks strictly below another outcome.
///
/// Requires every unordered pair to be reported and no pair to carry two
/// different relations; the latter gives [`Error::Inconsistent`].
pub fn find_maxes(reports: &[ComparisonReport], n: usize) -> Result<Vec<usize>> {
    check_reports(reports, n)?;
    let seen = relation_bits(reports, n);
    for a in 0..n {
        for b in a + 1..n {
            match seen[a][b] {
                0 => {
                    return Err(Error::invalid(format!("pair ({a}, {b}) was never compared")))
                }
                1 | 2 | 4 => {}
                _ => return Err(Error::Inconsistent { a, b }),
            }
        }
    }
    let mut beaten = vec![false; n];
    for a in 0..n {
        for b in a + 1..n {
            match seen[a][b] {
                1 => beaten[a] = true,
                2 => beaten[b] = true,
                _ => {}
            }
        }
    }
    Ok((0..n).filter(|&y| !beaten[y]).collect())
}

/// `m[i][k] = 1` when some report says `p_i ≤ p_k`; the diagonal is seeded
/// with ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationTable {
    m: Vec<Vec<u8>>,
    contradicted: Vec<Vec<bool>>,
}

impl RelationTable {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn get(&self, i: usize, k: usize) -> u8 {
        self.m[i][k]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.m
    }

    /// The pair received two different relations.
    pub fn is_contradicted(&self, i: usize, k: usize) -> bool {
        self.contradicted[i][k]
    }

    fn le(&self, i: usize, k: usize) -> bool {
        self.m[i][k] == 1
    }

    /// Whether `x` can join `members` without breaking totality, transitivity
    /// or contradiction-freeness.
    fn extends(&self, members: &[usize], x: usize) -> bool {
        for &s in members {
            if self.contradicted[s][x] || !(self.le(s, x) || self.le(x, s)) {
                return false;
            }
        }
        let with: Vec<usize> = members.iter().copied().chain([x]).collect();
        for &i in &with {
            for &j in &with {
                if !self.le(i, j) {
                    continue;
                }
                for &k in &with {
                    if (i == x || j == x || k == x) && self.le(j, k) && !self.le(i, k) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Number of broken pair or triple conditions that involve `x` in `set`.
    fn violations(&self, set: &[usize], x: usize) -> usize {
        let mut count = 0;
        for &s in set.iter().filter(|&&s| s != x) {
            if self.contradicted[s][x] || !(self.le(s, x) || self.le(x, s)) {
                count += 1;
            }
        }
        for &i in set {
            for &j in set {
                for &k in set {
                    if (i == x || j == x || k == x)
                        && self.le(i, j)
                        && self.le(j, k)
                        && !self.le(i, k)
                    {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

/// Builds the table from reports over `n` outcomes. `Equal` sets both
/// directions.
pub fn relation_table(reports: &[ComparisonReport], n: usize) -> Result<RelationTable> {
    check_reports(reports, n)?;
    let mut m = vec![vec![0u8; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    for r in reports {
        match r.relation {
            Relation::Less => m[r.a][r.b] = 1,
            Relation::Greater => m[r.b][r.a] = 1,
            Relation::Equal => {
                m[r.a][r.b] = 1;
                m[r.b][r.a] = 1;
            }
        }
    }
    let seen = relation_bits(reports, n);
    let mut contradicted = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let bad = seen[a][b].count_ones() > 1;
            contradicted[a][b] = bad;
            contradicted[b][a] = bad;
        }
    }
    Ok(RelationTable { m, contradicted })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TotalOrderSubset {
    pub members: Vec<usize>,
    /// Found by greedy deletion rather than exact search.
    pub heuristic: bool,
}

/// Largest outcome subset on which the table is a total preorder free of
/// contradicted pairs.
///
/// Exact include/exclude search with a size bound up to
/// [`EXACT_SUBSET_LIMIT`] outcomes; beyond that, repeatedly drops the outcome
/// with the most violations. Among equally large exact answers the one
/// keeping the lowest indices wins.
pub fn largest_total_order_subset(table: &RelationTable) -> TotalOrderSubset {
    let n = table.len();
    if n <= EXACT_SUBSET_LIMIT {
        let mut best = Vec::new();
        let mut current = Vec::new();
        search(table, 0, &mut current, &mut best);
        return TotalOrderSubset {
            members: best,
            heuristic: false,
        };
    }
    let mut set: Vec<usize> = (0..n).collect();
    loop {
        let scores: Vec<usize> = set.iter().map(|&x| table.violations(&set, x)).collect();
        let worst = (0..set.len()).max_by_key(|&i| (scores[i], std::cmp::Reverse(set[i])));
        match worst {
            Some(i) if scores[i] > 0 => {
                set.remove(i);
            }
            _ => break,
        }
    }
    TotalOrderSubset {
        members: set,
        heuristic: true,
    }
}

fn search(table: &RelationTable, next: usize, current: &mut Vec<usize>, best: &mut Vec<usize>) {
    let n = table.len();
    if current.len() + (n - next) <= best.len() {
        return;
    }
    if next == n {
        *best = current.clone();
        return;
    }
    if table.extends(current, next) {
        current.push(next);
        search(table, next + 1, current, best);
        current.pop();
    }
    search(table, next + 1, current, best);
}

/// Elements of `subset` that every other element is `≤`.
pub fn subset_maxes(table: &RelationTable, subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .copied()
        .filter(|&y| subset.iter().all(|&z| table.get(z, y) == 1))
        .collect()
}

/// Simulated report error: each instance's report is moved by a uniform
/// random point of the ball of the given radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub radius: f64,
    pub seed: u64,
}

fn perturb(u: &mut [f64], radius: f64, seed: u64) {
    let mut rng = seeded_rng(seed);
    let dir: Vec<f64> = u.iter().map(|_| rng.sample(StandardNormal)).collect();
    let norm = crate::norm(&dir);
    if norm == 0.0 {
        return;
    }
    let r = radius * rng.random::<f64>().powf(1.0 / u.len() as f64);
    for (x, d) in u.iter_mut().zip(dir) {
        *x += r * d / norm;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum AggregationPath {
    FindMaxes,
    RelationTable { subset: Vec<usize>, heuristic: bool, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub reports: Vec<Vec<ComparisonReport>>,
    pub instance_reports: Vec<Vec<f64>>,
    pub path: AggregationPath,
}

/// Runs the whole plan on `p`: embed under every instance, optionally perturb,
/// compare diagonals, and aggregate.
pub fn elicit_mode_end_to_end(
    p: &Distribution,
    plan: &InstancePlan,
    noise: Option<&NoiseSpec>,
    tau: f64,
) -> Result<(Vec<usize>, Diagnostics)> {
    let n = plan.num_outcomes();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    if let Some(ns) = noise {
        if !(ns.radius >= 0.0) {
            return Err(Error::invalid("noise radius must be nonnegative"));
        }
    }
    let per_instance = plan
        .instances()
        .par_iter()
        .enumerate()
        .map(|(j, inst)| {
            let mut u = inst.embed(p)?;
            if let Some(ns) = noise {
                perturb(&mut u, ns.radius, ns.seed ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            }
            let reports = inst.extract_comparisons(j, &u, tau)?;
            Ok((u, reports))
        })
        .collect::<Result<Vec<_>>>()?;
    let (instance_reports, reports): (Vec<_>, Vec<_>) = per_instance.into_iter().unzip();
    let flat: Vec<ComparisonReport> = reports.iter().flatten().copied().collect();
    let (mode, path) = match find_maxes(&flat, n) {
        Ok(m) if is_total_preorder(&flat, n)? => (m, AggregationPath::FindMaxes),
        other => {
            let reason = match other {
                Err(e) => e.to_string(),
                Ok(_) => "reports are not transitive".to_string(),
            };
            let table = relation_table(&flat, n)?;
            let s = largest_total_order_subset(&table);
            (
                subset_maxes(&table, &s.members),
                AggregationPath::RelationTable {
                    subset: s.members,
                    heuristic: s.heuristic,
                    reason,
                },
            )
        }
    };
    Ok((
        mode,
        Diagnostics {
            reports,
            instance_reports,
            path,
        },
    ))
}

fn is_total_preorder(reports: &[ComparisonReport], n: usize) -> Result<bool> {
    let table = relation_table(reports, n)?;
    let all: Vec<usize> = (0..n).collect();
    let mut members = Vec::with_capacity(n);
    for &x in &all {
        if !table.extends(&members, x) {
            return Ok(false);
        }
        members.push(x);
    }
    Ok(true)
}
