//! Distributions over outcomes and the polytope embedding `φ(p) = Σ p_y v_y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::geometry::{LinearProgram, LpOptions, LpOutcome};
use crate::polytope::Polytope;
use crate::{Error, Result};

/// Seeded generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SUM_TOL: f64 = 1e-12;

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution over zero outcomes"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("weights must be nonnegative with positive sum"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Clamps LP round-off (`x_i ≥ −tiny`) and renormalizes.
    pub(crate) fn from_lp(x: &[f64]) -> Self {
        let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        Self(clipped.into_iter().map(|v| v / total).collect())
    }

    pub fn point_mass(n: usize, y: usize) -> Result<Self> {
        if y >= n {
            return Err(Error::invalid(format!("outcome {y} out of range for {n}")));
        }
        let mut p = vec![0.0; n];
        p[y] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_prob(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Outcomes within `tau` of the largest probability.
    pub fn mode(&self, tau: f64) -> Vec<usize> {
        let top = self.max_prob();
        (0..self.len()).filter(|&y| self.0[y] >= top - tau).collect()
    }

    /// `max_y p_y ≥ 1 − α`.
    pub fn in_low_noise(&self, alpha: f64) -> bool {
        self.max_prob() >= 1.0 - alpha
    }

    /// `λ p + (1 − λ) q`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        ))
    }
}

/// Uniform draw from the simplex (exponential spacings).
pub fn sample_simplex_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Distribution {
    assert!(n >= 1, "simplex over zero outcomes");
    if n == 1 {
        return Distribution(vec![1.0]);
    }
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    Distribution(draws.into_iter().map(|e| e / total).collect())
}

pub fn sample_simplex(n: usize, seed: u64) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::invalid("simplex over zero outcomes"));
    }
    Ok(sample_simplex_with(&mut seeded_rng(seed), n))
}

/// `(1 − α) δ_y + α q` with `q` uniform on the simplex.
pub fn sample_low_noise_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    alpha: f64,
    y: usize,
) -> Distribution {
    let q = sample_simplex_with(rng, n);
    let mut p: Vec<f64> = q.0.iter().map(|v| alpha * v).collect();
    p[y] += 1.0 - alpha;
    Distribution(p)
}

pub fn sample_low_noise(n: usize, alpha: f64, y: usize, seed: u64) -> Result<Distribution> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if y >= n {
        return Err(Error::invalid(format!("outcome {y} out of range for {n}")));
    }
    Ok(sample_low_noise_with(&mut seeded_rng(seed), n, alpha, y))
}

/// Spreadsheet-style labels `a, b, …, z, aa, ab, …`.
pub fn default_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|mut i| {
            let mut s = Vec::new();
            loop {
                s.push(b'a' + (i % 26) as u8);
                if i < 26 {
                    break;
                }
                i = i / 26 - 1;
            }
            s.reverse();
            String::from_utf8(s).unwrap()
        })
        .collect()
}

/// Maximum of `p_z − p_y` over the fiber `φ⁻¹(u)`.
#[derive(Clone, Debug)]
pub struct PreimageBound {
    pub target: (usize, usize),
    pub value: f64,
    pub witness: Distribution,
}

/// Outcome labels bound positionally to the vertices of a polytope.
#[derive(Clone, Debug)]
pub struct Embedding {
    polytope: Polytope,
    labels: Vec<String>,
}

impl Embedding {
    pub fn new(polytope: Polytope, labels: Vec<String>) -> Result<Self> {
        if labels.len() != polytope.num_vertices() {
            return Err(Error::invalid(format!(
                "{} labels for {} vertices",
                labels.len(),
                polytope.num_vertices()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("duplicate outcome label `{l}`")));
            }
        }
        Ok(Self { polytope, labels })
    }

    pub fn with_default_labels(polytope: Polytope) -> Self {
        let labels = default_labels(polytope.num_vertices());
        Self { polytope, labels }
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, y: usize) -> &str {
        &self.labels[y]
    }

    pub fn num_outcomes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn vertex(&self, y: usize) -> &[f64] {
        self.polytope.vertex(y)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::invalid(format!("unknown outcome `{label}`")))
    }

    pub(crate) fn check_outcome(&self, y: usize) -> Result<()> {
        if y >= self.num_outcomes() {
            return Err(Error::invalid(format!(
                "outcome {y} out of range for {} outcomes",
                self.num_outcomes()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// `φ(p) = Σ p_i v_i`.
    pub fn embed(&self, p: &Distribution) -> Result<Vec<f64>> {
        if p.len() != self.num_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_outcomes(),
                found: p.len(),
            });
        }
        Ok(self.polytope.vertices().combine(p.probs()))
    }

    /// `Σp_i v_i = u, Σp = 1, p ≥ 0` with the given cost.
    fn fiber_lp(&self, u: &[f64], cost: Vec<f64>) -> LinearProgram {
        let n = self.num_outcomes();
        let mut lp = LinearProgram::new(n);
        for (k, &target) in u.iter().enumerate() {
            lp.add_eq((0..n).map(|i| self.vertex(i)[k]).collect(), target);
        }
        lp.add_eq(vec![1.0; n], 1.0);
        lp.set_cost(cost);
        lp
    }

    /// Minimizes `cost · p` over the fiber `φ⁻¹(u)`.
    pub fn optimize_over_fiber(
        &self,
        u: &[f64],
        cost: Vec<f64>,
        opts: &LpOptions,
    ) -> Result<(f64, Distribution)> {
        self.check_point(u)?;
        let lp = self.fiber_lp(u, cost);
        match lp.solve_with(opts) {
            LpOutcome::Optimal { x, objective } => {
                let witness = Distribution::from_lp(&x);
                let back = self.polytope.vertices().combine(witness.probs());
                let residual = crate::dist(&back, u);
                if residual > 1e-8 {
                    return Err(Error::Internal(format!(
                        "fiber witness re-embeds with residual {residual:.3e}"
                    )));
                }
                Ok((objective, witness))
            }
            LpOutcome::Infeasible { infeasibility } => Err(Error::OutsideHull {
                residual: infeasibility,
            }),
            other => Err(Error::Internal(format!("fiber LP ended with {other:?}"))),
        }
    }

    /// `max {p_z − p_y : p ∈ φ⁻¹(u)}` with a maximizing witness.
    pub fn preimage_gap(&self, u: &[f64], z: usize, y: usize) -> Result<PreimageBound> {
        self.preimage_gap_with(u, z, y, &LpOptions::default())
    }

    pub fn preimage_gap_with(
        &self,
        u: &[f64],
        z: usize,
        y: usize,
        opts: &LpOptions,
    ) -> Result<PreimageBound> {
        self.check_outcome(z)?;
        self.check_outcome(y)?;
        if z == y {
            return Err(Error::invalid("preimage gap needs two distinct outcomes"));
        }
        let mut cost = vec![0.0; self.num_outcomes()];
        cost[z] = -1.0;
        cost[y] = 1.0;
        let (_, witness) = self.optimize_over_fiber(u, cost, opts)?;
        let value = witness.probs()[z] - witness.probs()[y];
        Ok(PreimageBound {
            target: (z, y),
            value,
            witness,
        })
    }

    /// `min {p_y : p ∈ φ⁻¹(u)}` with a minimizing witness.
    pub fn min_weight_in_fiber(&self, u: &[f64], y: usize) -> Result<(f64, Distribution)> {
        self.check_outcome(y)?;
        let mut cost = vec![0.0; self.num_outcomes()];
        cost[y] = 1.0;
        let (_, witness) = self.optimize_over_fiber(u, cost, &LpOptions::default())?;
        Ok((witness.probs()[y], witness))
    }
}

/// Distribution file: `{"labels": [...], "p": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub labels: Vec<String>,
    pub p: Vec<f64>,
}

impl DistributionFile {
    pub fn parse(text: &str) -> Result<(Vec<String>, Distribution)> {
        let file: DistributionFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("distribution JSON: {e}")))?;
        if file.labels.len() != file.p.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} probabilities",
                file.labels.len(),
                file.p.len()
            )));
        }
        let p = Distribution::new(file.p)?;
        Ok((file.labels, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cube2() -> Embedding {
        Embedding::with_default_labels(Polytope::build_unit_cube(2).unwrap())
    }

    fn cross2() -> Embedding {
        Embedding::with_default_labels(Polytope::build_cross_polytope(2).unwrap())
    }

    #[test]
    fn labels_are_spreadsheet_style() {
        assert_eq!(default_labels(3), vec!["a", "b", "c"]);
        let l = default_labels(30);
        assert_eq!(l[25], "z");
        assert_eq!(l[26], "aa");
        assert_eq!(l[29], "ad");
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.4, 0.4, 0.1, 0.1]).is_ok());
    }

    #[test]
    fn embed_examples() {
        let e = cube2();
        for y in 0..4 {
            let p = Distribution::point_mass(4, y).unwrap();
            assert_eq!(e.embed(&p).unwrap(), e.vertex(y));
        }
        let u = e.embed(&Distribution::uniform(4).unwrap()).unwrap();
        assert_eq!(u, vec![0.0, 0.0]);
        let u = cross2()
            .embed(&Distribution::new(vec![0.4, 0.4, 0.1, 0.1]).unwrap())
            .unwrap();
        assert_abs_diff_eq!(u[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 0.0, epsilon = 1e-15);
        assert!(e.embed(&Distribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn mode_examples() {
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(p.mode(0.0), vec![0]);
        assert_eq!(Distribution::uniform(4).unwrap().mode(1e-12), vec![0, 1, 2, 3]);
        let p = Distribution::new(vec![0.4, 0.4, 0.1, 0.1]).unwrap();
        assert_eq!(p.mode(1e-9), vec![0, 1]);
    }

    #[test]
    fn low_noise_membership() {
        assert!(Distribution::point_mass(3, 1).unwrap().in_low_noise(0.0));
        assert!(!Distribution::uniform(4).unwrap().in_low_noise(0.25));
        assert!(Distribution::new(vec![0.8, 0.1, 0.1]).unwrap().in_low_noise(0.25));
    }

    #[test]
    fn gap_at_vertex_is_minus_one() {
        let e = cube2();
        for y in 0..4 {
            for z in (0..4).filter(|&z| z != y) {
                let b = e.preimage_gap(e.vertex(y), z, y).unwrap();
                assert_abs_diff_eq!(b.value, -1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gap_at_cube_center_is_one_half() {
        // At the origin antipodal masses match (p_0 = p_3, p_1 = p_2), so
        // p_z ≤ ½ with witness ½δ_z + ½δ_antipode, and the gap against the
        // antipode itself is 0.
        let e = cube2();
        for y in 0..4 {
            for z in (0..4).filter(|&z| z != y) {
                let b = e.preimage_gap(&[0.0, 0.0], z, y).unwrap();
                let expected = if y == 3 - z { 0.0 } else { 0.5 };
                assert_abs_diff_eq!(b.value, expected, epsilon = 1e-12);
                let back = e.embed(&b.witness).unwrap();
                assert!(crate::norm(&back) < 1e-12);
            }
        }
    }

    #[test]
    fn gap_errors() {
        let e = cube2();
        assert!(matches!(
            e.preimage_gap(&[2.0, 0.0], 0, 1),
            Err(Error::OutsideHull { .. })
        ));
        assert!(e.preimage_gap(&[0.0, 0.0], 1, 1).is_err());
        assert!(e.preimage_gap(&[0.0, 0.0], 7, 1).is_err());
    }

    #[test]
    fn sampling_basics() {
        assert_eq!(sample_simplex(1, 3).unwrap().probs(), &[1.0]);
        let p = sample_simplex(4, 42).unwrap();
        assert_abs_diff_eq!(p.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(p, sample_simplex(4, 42).unwrap());
        let q = sample_low_noise(4, 0.0, 2, 1).unwrap();
        assert_eq!(q.probs(), &[0.0, 0.0, 1.0, 0.0]);
        let mut rng = seeded_rng(5);
        for _ in 0..1000 {
            let p = sample_low_noise_with(&mut rng, 4, 0.25, 0);
            assert!(p.probs()[0] >= 0.75);
            assert!(p.in_low_noise(0.25));
            assert!(Distribution::new(p.probs().to_vec()).is_ok());
        }
        assert!(sample_low_noise(4, 1.0, 0, 1).is_err());
    }

    #[test]
    fn dirichlet_mean_is_uniform() {
        let mut rng = seeded_rng(2024);
        let mut acc = [0.0; 4];
        let draws = 100_000;
        for _ in 0..draws {
            let p = sample_simplex_with(&mut rng, 4);
            for (a, v) in acc.iter_mut().zip(p.probs()) {
                *a += v;
            }
        }
        for a in acc {
            assert!((a / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn distribution_file_parsing() {
        let (labels, p) =
            DistributionFile::parse(r#"{"labels":["a","b"],"p":[0.25,0.75]}"#).unwrap();
        assert_eq!(labels, vec!["a", "b"]);
        assert_eq!(p.probs(), &[0.25, 0.75]);
        assert!(DistributionFile::parse(r#"{"labels":["a"],"p":[0.25,0.75]}"#).is_err());
    }
}
