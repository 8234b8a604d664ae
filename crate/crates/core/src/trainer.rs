//! Featureless stochastic gradient descent on the empirical surrogate loss.
//!
//! Iterates start at the vertex centroid and are clamped to a box twice the
//! size of the polytope's bounding box. Minibatch runs report the running
//! average of the iterates; full-batch runs report the last iterate.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{seeded_rng, Distribution};
use crate::surrogate::InducedLoss;
use crate::{Error, Result};

const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `η / √t`
    #[default]
    InvSqrt,
    /// `η / t`
    InvT,
}

impl Schedule {
    pub fn step(self, lr: f64, t: usize) -> f64 {
        match self {
            Schedule::InvSqrt => lr / (t as f64).sqrt(),
            Schedule::InvT => lr / t as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            learning_rate: 1.0,
            schedule: Schedule::InvSqrt,
            seed: 0,
            batch: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainTrace {
    pub final_report: Vec<f64>,
    /// Batch loss at the iterate before each step.
    pub loss_curve: Vec<f64>,
    /// Batch gradient norm at the iterate before each step.
    pub grad_norm_curve: Vec<f64>,
    /// Outcomes drawn during training, in order.
    #[serde(skip)]
    pub samples: Vec<usize>,
}

/// Normalized counts of `samples` over `n` outcomes.
pub fn empirical_distribution(samples: &[usize], n: usize) -> Result<Distribution> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let mut counts = vec![0.0; n];
    for &y in samples {
        *counts
            .get_mut(y)
            .ok_or_else(|| Error::invalid(format!("sample outcome {y} out of range for {n}")))? +=
            1.0;
    }
    Distribution::from_weights(&counts)
}

struct Clamp {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Clamp {
    fn new(loss: &InducedLoss) -> Self {
        let (lo, hi) = loss
            .embedding()
            .polytope()
            .bounding_box()
            .into_iter()
            .map(|(a, b)| {
                let (c, h) = (0.5 * (a + b), (b - a));
                (c - h, c + h)
            })
            .unzip();
        Self { lo, hi }
    }

    fn apply(&self, u: &mut [f64]) {
        for ((x, lo), hi) in u.iter_mut().zip(&self.lo).zip(&self.hi) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

fn centroid(loss: &InducedLoss) -> Vec<f64> {
    let e = loss.embedding();
    let n = e.num_outcomes() as f64;
    let mut c = vec![0.0; e.dim()];
    for y in 0..e.num_outcomes() {
        for (ck, vk) in c.iter_mut().zip(e.vertex(y)) {
            *ck += vk / n;
        }
    }
    c
}

/// Shared descent loop. `batch_at(t)` returns the batch loss and gradient at
/// `u` for step `t` (1-based).
fn descend<F>(loss: &InducedLoss, cfg: &TrainConfig, average: bool, mut batch_at: F) -> Result<TrainTrace>
where
    F: FnMut(usize, &[f64]) -> Result<(f64, Vec<f64>)>,
{
    let clamp = Clamp::new(loss);
    let mut u = centroid(loss);
    let mut avg = vec![0.0; u.len()];
    let mut trace = TrainTrace {
        final_report: Vec::new(),
        loss_curve: Vec::with_capacity(cfg.steps),
        grad_norm_curve: Vec::with_capacity(cfg.steps),
        samples: Vec::new(),
    };
    for t in 1..=cfg.steps {
        let (value, grad) = batch_at(t, &u)?;
        let gnorm = crate::norm(&grad);
        trace.loss_curve.push(value);
        trace.grad_norm_curve.push(gnorm);
        let initial = trace.loss_curve[0];
        if !value.is_finite() || !gnorm.is_finite() || value > DIVERGENCE_FACTOR * initial {
            trace.final_report = u;
            return Err(Error::Diverged {
                step: t,
                trace: Box::new(trace),
            });
        }
        let eta = cfg.schedule.step(cfg.learning_rate, t);
        for (x, g) in u.iter_mut().zip(&grad) {
            *x -= eta * g;
        }
        clamp.apply(&mut u);
        for (a, x) in avg.iter_mut().zip(&u) {
            *a += (x - *a) / t as f64;
        }
    }
    trace.final_report = if average { avg } else { u };
    Ok(trace)
}

fn minibatch(loss: &InducedLoss, u: &[f64], ys: &[usize]) -> Result<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = vec![0.0; u.len()];
    for &y in ys {
        value += loss.loss(u, y)?;
        for (g, gi) in grad.iter_mut().zip(loss.gradient(u, y)?) {
            *g += gi;
        }
    }
    let k = ys.len() as f64;
    grad.iter_mut().for_each(|g| *g /= k);
    Ok((value / k, grad))
}

/// SGD with outcomes drawn from `p`. The drawn outcomes are kept in
/// [`TrainTrace::samples`].
pub fn sgd_minimize(loss: &InducedLoss, p: &Distribution, cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = loss.embedding().num_outcomes();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let sampler = WeightedIndex::new(p.probs())
        .map_err(|e| Error::invalid(format!("cannot sample from distribution: {e}")))?;
    let mut rng = seeded_rng(cfg.seed);
    let mut drawn = Vec::with_capacity(cfg.steps * cfg.batch);
    let mut trace = descend(loss, cfg, true, |_, u| {
        let start = drawn.len();
        drawn.extend((0..cfg.batch).map(|_| sampler.sample(&mut rng)));
        minibatch(loss, u, &drawn[start..])
    })?;
    trace.samples = drawn;
    Ok(trace)
}

/// Training on a fixed sample set. A batch at least as large as the set means
/// exact full-batch descent; smaller batches resample the set with
/// replacement.
pub fn fit_samples(loss: &InducedLoss, samples: &[usize], cfg: &TrainConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    let n = loss.embedding().num_outcomes();
    let p_hat = empirical_distribution(samples, n)?;
    if cfg.batch >= samples.len() {
        let mut trace = descend(loss, cfg, false, |_, u| {
            Ok((loss.expected_loss(u, &p_hat)?, loss.expected_gradient(u, &p_hat)?))
        })?;
        trace.samples = samples.to_vec();
        return Ok(trace);
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut drawn = Vec::with_capacity(cfg.steps * cfg.batch);
    let mut trace = descend(loss, cfg, true, |_, u| {
        let start = drawn.len();
        drawn.extend((0..cfg.batch).map(|_| samples[rng.random_range(0..samples.len())]));
        minibatch(loss, u, &drawn[start..])
    })?;
    trace.samples = drawn;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;
    use crate::polytope::Polytope;
    use crate::surrogate::Generator;

    fn square_loss() -> InducedLoss {
        let e = Embedding::with_default_labels(Polytope::build_unit_cube(2).unwrap());
        InducedLoss::new(Generator::squared_euclidean(), e).unwrap()
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(empirical_distribution(&[2, 2, 2], 3).unwrap().probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(empirical_distribution(&[0, 1], 2).unwrap().probs(), &[0.5, 0.5]);
        assert!(empirical_distribution(&[3], 2).is_err());
        assert!(empirical_distribution(&[], 2).is_err());
    }

    #[test]
    fn point_mass_converges_to_vertex() {
        let l = square_loss();
        let cfg = TrainConfig::default();
        let t = sgd_minimize(&l, &Distribution::point_mass(4, 2).unwrap(), &cfg).unwrap();
        assert!(crate::dist(&t.final_report, &[-1.0, 1.0]) < 1e-3);
        assert_eq!(t.loss_curve.len(), cfg.steps);
    }

    #[test]
    fn config_validation() {
        let l = square_loss();
        let p = Distribution::uniform(4).unwrap();
        for bad in [
            TrainConfig { steps: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { batch: 0, ..Default::default() },
        ] {
            assert!(sgd_minimize(&l, &p, &bad).is_err());
        }
    }

    #[derive(Debug)]
    struct SteepExp;

    impl crate::surrogate::BregmanGenerator for SteepExp {
        fn name(&self) -> String {
            "steep-exp".into()
        }

        fn value(&self, x: &[f64]) -> f64 {
            x.iter().map(|v| (20.0 * v).exp()).sum()
        }

        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|v| 20.0 * (20.0 * v).exp()).collect()
        }
    }

    #[test]
    fn blow_up_reports_divergence_with_trace() {
        // One dimension keeps the finite-difference check well conditioned.
        let e = Embedding::with_default_labels(Polytope::build_unit_cube(1).unwrap());
        let g = Generator::register(std::sync::Arc::new(SteepExp), 1, 1).unwrap();
        let l = InducedLoss::new(g, e).unwrap();
        let cfg = TrainConfig { steps: 20, batch: 1, ..Default::default() };
        match fit_samples(&l, &[1], &cfg) {
            Err(Error::Diverged { step, trace }) => {
                assert_eq!(step, 2);
                assert_eq!(trace.loss_curve.len(), 2);
                assert_eq!(trace.final_report, vec![2.0]);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
