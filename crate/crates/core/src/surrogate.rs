//! Bregman generators and the surrogate loss they induce on an embedding.
//!
//! For a strictly convex `G : R^d → R` the divergence is
//! `D_G(x ‖ u) = G(x) − G(u) − ⟨∇G(u), x − u⟩` and the induced loss is
//! `L(u, y) = D_G(v_y ‖ u)`. With this orientation the expected loss equals
//! `D_G(φ(p) ‖ u)` plus a constant, so `φ(p)` is its unique minimizer.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::embedding::{seeded_rng, Distribution, Embedding};
use crate::{Error, Result};

/// A strictly convex function on all of `R^d`.
pub trait BregmanGenerator: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `∇²G(x) v`. Defaults to central differences of the gradient.
    fn hessian_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let scale = crate::norm(v);
        if scale == 0.0 {
            return vec![0.0; x.len()];
        }
        let h = 1e-5 / scale;
        let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
        self.gradient(&plus)
            .iter()
            .zip(self.gradient(&minus))
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect()
    }

    /// Dimension the generator is restricted to, if any.
    fn dim(&self) -> Option<usize> {
        None
    }
}

/// `G(x) = ½‖x‖²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredEuclidean;

impl BregmanGenerator for SquaredEuclidean {
    fn name(&self) -> String {
        "sqeuclid".into()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * crate::dot(x, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn hessian_vec(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }
}

/// `G(x) = ½ xᵀ diag(a) x` with `a > 0`.
#[derive(Clone, Debug)]
pub struct DiagonalQuadratic {
    diag: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || diag.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid(
                "diagonal quadratic generator needs positive finite entries",
            ));
        }
        Ok(Self { diag })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

impl BregmanGenerator for DiagonalQuadratic {
    fn name(&self) -> String {
        let entries: Vec<String> = self.diag.iter().map(|a| a.to_string()).collect();
        format!("diagquad:{}", entries.join(","))
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.diag).map(|(v, a)| a * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.diag).map(|(v, a)| a * v).collect()
    }

    fn hessian_vec(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.diag).map(|(v, a)| a * v).collect()
    }

    fn dim(&self) -> Option<usize> {
        Some(self.diag.len())
    }
}

/// `D_G(x ‖ u) = G(x) − G(u) − ⟨∇G(u), x − u⟩`.
pub fn bregman(generator: &dyn BregmanGenerator, x: &[f64], u: &[f64]) -> f64 {
    let g = generator.gradient(u);
    let lin: f64 = g.iter().zip(x.iter().zip(u)).map(|(gi, (xi, ui))| gi * (xi - ui)).sum();
    generator.value(x) - generator.value(u) - lin
}

/// Shared handle to a generator that passed validation.
#[derive(Clone, Debug)]
pub struct Generator(Arc<dyn BregmanGenerator>);

impl Generator {
    pub fn squared_euclidean() -> Self {
        Self(Arc::new(SquaredEuclidean))
    }

    pub fn diagonal_quadratic(diag: Vec<f64>) -> Result<Self> {
        Ok(Self(Arc::new(DiagonalQuadratic::new(diag)?)))
    }

    /// Registers a user generator after checking, in dimension `dim`, that its
    /// gradient matches central differences (relative error ≤ 1e−5) and that
    /// the divergence is positive on random distinct pairs.
    pub fn register(generator: Arc<dyn BregmanGenerator>, dim: usize, seed: u64) -> Result<Self> {
        validate_generator(generator.as_ref(), dim, seed)?;
        Ok(Self(generator))
    }

    /// Parses `sqeuclid` or `diagquad:a1,...,ad`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "sqeuclid" {
            return Ok(Self::squared_euclidean());
        }
        if let Some(rest) = spec.strip_prefix("diagquad:") {
            let diag = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("diagquad entries: {e}")))?;
            return Self::diagonal_quadratic(diag);
        }
        Err(Error::invalid(format!(
            "unknown generator `{spec}` (expected sqeuclid or diagquad:a1,...,ad)"
        )))
    }

    pub fn inner(&self) -> &dyn BregmanGenerator {
        self.0.as_ref()
    }

    pub fn name(&self) -> String {
        self.0.name()
    }
}

fn central_difference(generator: &dyn BregmanGenerator, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h;
            b[k] -= h;
            (generator.value(&a) - generator.value(&b)) / (2.0 * h)
        })
        .collect()
}

pub fn validate_generator(generator: &dyn BregmanGenerator, dim: usize, seed: u64) -> Result<()> {
    if let Some(d) = generator.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
    }
    let mut rng = seeded_rng(seed);
    let draw = |rng: &mut crate::embedding::SeededRng| -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
    };
    for _ in 0..100 {
        let x = draw(&mut rng);
        let g = generator.gradient(&x);
        let fd = central_difference(generator, &x, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            if (a - b).abs() > 1e-5 * a.abs().max(1.0) {
                return Err(Error::invalid(format!(
                    "generator `{}` gradient disagrees with finite differences ({a} vs {b})",
                    generator.name()
                )));
            }
        }
    }
    for _ in 0..1000 {
        let x = draw(&mut rng);
        let u = draw(&mut rng);
        if crate::dist(&x, &u) > 1e-9 && !(bregman(generator, &x, &u) > 0.0) {
            return Err(Error::invalid(format!(
                "generator `{}` is not strictly convex: D(x‖u) ≤ 0 at x={x:?}, u={u:?}",
                generator.name()
            )));
        }
    }
    Ok(())
}

/// The loss `L(u, y) = D_G(v_y ‖ u)` on an embedding.
#[derive(Clone, Debug)]
pub struct InducedLoss {
    generator: Generator,
    embedding: Embedding,
}

impl InducedLoss {
    pub fn new(generator: Generator, embedding: Embedding) -> Result<Self> {
        if let Some(d) = generator.inner().dim() {
            if d != embedding.dim() {
                return Err(Error::DimensionMismatch {
                    expected: embedding.dim(),
                    found: d,
                });
            }
        }
        Ok(Self {
            generator,
            embedding,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn loss(&self, u: &[f64], y: usize) -> Result<f64> {
        self.embedding.check_outcome(y)?;
        self.embedding.check_point(u)?;
        Ok(bregman(self.generator.inner(), self.embedding.vertex(y), u))
    }

    /// `∇_u L(u, y) = ∇²G(u)(u − v_y)`.
    pub fn gradient(&self, u: &[f64], y: usize) -> Result<Vec<f64>> {
        self.embedding.check_outcome(y)?;
        self.embedding.check_point(u)?;
        let diff = crate::sub(u, self.embedding.vertex(y));
        Ok(self.generator.inner().hessian_vec(u, &diff))
    }

    fn check_dist(&self, p: &Distribution) -> Result<()> {
        if p.len() != self.embedding.num_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.embedding.num_outcomes(),
                found: p.len(),
            });
        }
        Ok(())
    }

    pub fn expected_loss(&self, u: &[f64], p: &Distribution) -> Result<f64> {
        self.check_dist(p)?;
        let mut total = 0.0;
        for (y, &py) in p.probs().iter().enumerate() {
            if py > 0.0 {
                total += py * self.loss(u, y)?;
            }
        }
        Ok(total)
    }

    pub fn expected_gradient(&self, u: &[f64], p: &Distribution) -> Result<Vec<f64>> {
        self.check_dist(p)?;
        let mut g = vec![0.0; u.len()];
        for (y, &py) in p.probs().iter().enumerate() {
            if py > 0.0 {
                for (gi, v) in g.iter_mut().zip(self.gradient(u, y)?) {
                    *gi += py * v;
                }
            }
        }
        Ok(g)
    }

    /// The unique expected-loss minimizer `φ(p)`.
    pub fn minimizer(&self, p: &Distribution) -> Result<Vec<f64>> {
        let u = self.embedding.embed(p)?;
        debug_assert!(crate::norm(&self.expected_gradient(&u, p)?) <= 1e-8);
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Polytope;
    use approx::assert_abs_diff_eq;

    fn loss_on(p: Polytope, g: Generator) -> InducedLoss {
        InducedLoss::new(g, Embedding::with_default_labels(p)).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let sq = SquaredEuclidean;
        assert_abs_diff_eq!(bregman(&sq, &[1.0, 1.0], &[0.0, 0.0]), 1.0);
        assert_abs_diff_eq!(bregman(&sq, &[0.3, -2.0], &[0.3, -2.0]), 0.0);
        let q = DiagonalQuadratic::new(vec![2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(bregman(&q, &[1.0, 0.0], &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn loss_examples() {
        let l = loss_on(Polytope::build_unit_cube(2).unwrap(), Generator::squared_euclidean());
        assert_abs_diff_eq!(l.loss(&[1.0, 1.0], 3).unwrap(), 0.0);
        assert_abs_diff_eq!(l.loss(&[0.0, 0.0], 3).unwrap(), 1.0);
        assert!(l.loss(&[0.0, 0.0], 4).is_err());
        let l = loss_on(
            Polytope::build_cross_polytope(2).unwrap(),
            Generator::squared_euclidean(),
        );
        assert_abs_diff_eq!(l.loss(&[0.5, 0.0], 1).unwrap(), 1.125);
    }

    #[test]
    fn expected_loss_examples() {
        let l = loss_on(Polytope::build_unit_cube(2).unwrap(), Generator::squared_euclidean());
        let uni = Distribution::uniform(4).unwrap();
        assert_abs_diff_eq!(l.expected_loss(&[0.0, 0.0], &uni).unwrap(), 1.0);
        let p = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let u = l.minimizer(&p).unwrap();
        let shifted = [u[0] + 0.1, u[1]];
        assert!(l.expected_loss(&u, &p).unwrap() < l.expected_loss(&shifted, &p).unwrap());
        let delta = Distribution::point_mass(4, 2).unwrap();
        assert_abs_diff_eq!(
            l.expected_loss(&[0.2, 0.3], &delta).unwrap(),
            l.loss(&[0.2, 0.3], 2).unwrap()
        );
    }

    #[test]
    fn gradient_examples() {
        let l = loss_on(Polytope::build_unit_cube(2).unwrap(), Generator::squared_euclidean());
        assert_eq!(l.gradient(&[1.0, 1.0], 3).unwrap(), vec![0.0, 0.0]);
        let tri = Polytope::from_vertices(
            crate::geometry::VertexSet::new(vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ])
            .unwrap(),
        )
        .unwrap();
        let l = loss_on(tri, Generator::squared_euclidean());
        assert_eq!(l.gradient(&[1.0, 1.0], 0).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Generator::diagonal_quadratic(vec![2.0, 0.5, 1.5]).unwrap();
        let l = loss_on(Polytope::build_unit_cube(3).unwrap(), g);
        let mut rng = seeded_rng(11);
        for _ in 0..50 {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y = rng.random_range(0..8);
            let an = l.gradient(&u, y).unwrap();
            let h = 1e-5;
            for k in 0..3 {
                let mut a = u.clone();
                let mut b = u.clone();
                a[k] += h;
                b[k] -= h;
                let fd = (l.loss(&a, y).unwrap() - l.loss(&b, y).unwrap()) / (2.0 * h);
                assert!((an[k] - fd).abs() <= 1e-5 * an[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn parse_generators() {
        assert_eq!(Generator::parse("sqeuclid").unwrap().name(), "sqeuclid");
        let g = Generator::parse("diagquad:2,1").unwrap();
        assert_eq!(g.inner().dim(), Some(2));
        assert!(Generator::parse("diagquad:2,-1").is_err());
        assert!(Generator::parse("entropy").is_err());
        let l = InducedLoss::new(
            g,
            Embedding::with_default_labels(Polytope::build_unit_cube(3).unwrap()),
        );
        assert!(l.is_err());
    }

    #[derive(Debug)]
    struct Concave;

    impl BregmanGenerator for Concave {
        fn name(&self) -> String {
            "concave".into()
        }
        fn value(&self, x: &[f64]) -> f64 {
            -0.5 * crate::dot(x, x)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|v| -v).collect()
        }
    }

    #[derive(Debug)]
    struct WrongGradient;

    impl BregmanGenerator for WrongGradient {
        fn name(&self) -> String {
            "wrong".into()
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * crate::dot(x, x)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|v| 2.0 * v).collect()
        }
    }

    #[test]
    fn registration_rejects_bad_generators() {
        assert!(Generator::register(Arc::new(Concave), 2, 0).is_err());
        assert!(Generator::register(Arc::new(WrongGradient), 2, 0).is_err());
        assert!(Generator::register(Arc::new(SquaredEuclidean), 3, 0).is_ok());
    }
}
