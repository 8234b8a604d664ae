//! Command implementations behind the `polyembed` binary.
//!
//! Every command writes its primary output to a caller-supplied writer so the
//! same code paths run under tests and from the binary.

pub mod hamming;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyembed::embedding::{
    default_labels, sample_low_noise_with, sample_simplex, seeded_rng, Distribution, DistributionFile,
    Embedding,
};
use polyembed::links::{
    alpha_threshold, low_noise_link, pairwise_distances, pairwise_disjointness, scaled_family,
    DEFAULT_TIE_TOL,
};
use polyembed::multi_instance::{
    elicit_mode_end_to_end, round_robin_plan_with_labels, NoiseSpec, DEFAULT_COMPARISON_TOL,
};
use polyembed::polytope::{Polytope, PolytopeKind};
use polyembed::regions::{classify_point, hallucination_witness, map_regions, GridSpec, DEFAULT_GAP_TOL};
use polyembed::surrogate::{Generator, InducedLoss};
use polyembed::trainer::{empirical_distribution, sgd_minimize, Schedule, TrainConfig, TrainTrace};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property violation: {0}")]
    Property(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl From<polyembed::Error> for CliError {
    fn from(e: polyembed::Error) -> Self {
        use polyembed::Error as E;
        match e {
            E::InvalidInput(_) | E::DimensionMismatch { .. } | E::OutsideHull { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "polyembed", version, about = "Polytope embeddings, surrogate losses and their links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify a grid of hull points into strict, inconsistent and hallucination regions.
    Regions(RegionsArgs),
    /// Find a point every outcome's preimage reaches with zero mass on that outcome.
    HallucinationWitness(TargetArgs),
    /// Check disjointness of the scaled family and Monte Carlo calibration of its link.
    LowNoise(LowNoiseArgs),
    /// Bisect for the largest alpha keeping the scaled family disjoint.
    AlphaSearch(AlphaSearchArgs),
    /// Elicit the mode from pairwise comparisons over a round-robin plan of cross-polytopes.
    MultiInstance(MultiInstanceArgs),
    /// Fit the induced surrogate by stochastic gradient descent.
    Train(TrainArgs),
    /// Expected Hamming losses of the eight outcomes of {-1,1}^3 under p_eps.
    HammingExample(HammingArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// cube, permutahedron, cross, or file:PATH
    #[arg(long, default_value = "cube")]
    pub polytope: String,
    /// Ambient dimension; ignored for file:PATH.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Distribution JSON whose labels name the outcomes.
    #[arg(long)]
    pub dist: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RegionsArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Points per grid axis.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Gap tolerance separating strict from boundary points.
    #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
    pub tol: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render an SVG heatmap (two-axis grids only).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct LowNoiseArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub alpha: f64,
    /// Also report the disjointness threshold.
    #[arg(long)]
    pub alpha_search: bool,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
    pub tau: f64,
    /// Write the pairwise distance table (y,yhat,distance) as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AlphaSearchArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct MultiInstanceArgs {
    /// Distribution JSON; its labels name the outcomes.
    #[arg(long, conflicts_with = "probs")]
    pub dist: Option<PathBuf>,
    /// Comma-separated probabilities, labelled a, b, c, ...
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    /// Draw p uniformly from the simplex over this many outcomes.
    #[arg(long, default_value_t = 8)]
    pub outcomes: usize,
    /// Radius of the uniform ball perturbation of each instance report.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_COMPARISON_TOL)]
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    InvSqrt,
    InvT,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Comma-separated probabilities when no --dist is given.
    #[arg(long, value_delimiter = ',', conflicts_with = "dist")]
    pub probs: Option<Vec<f64>>,
    /// sqeuclid or diagquad:a1,...,ad
    #[arg(long, default_value = "sqeuclid")]
    pub generator: String,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::InvSqrt)]
    pub schedule: ScheduleArg,
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the trace (step,loss,grad_norm) as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HammingArgs {
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub epsilon: f64,
}

/// Renders argv as a single provenance line.
pub fn invocation_line<I, S>(args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut parts = vec!["polyembed".to_string()];
    for a in args.into_iter().skip(1) {
        let a = a.as_ref();
        if a.is_empty() || a.chars().any(|c| c.is_whitespace() || c == '\'' || c == '"') {
            parts.push(format!("'{}'", a.replace('\'', "'\\''")));
        } else {
            parts.push(a.to_string());
        }
    }
    parts.join(" ")
}

pub fn run(cli: &Cli, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Regions(a) => run_regions(a, invocation, out),
        Command::HallucinationWitness(a) => run_witness(a, invocation, out),
        Command::LowNoise(a) => run_low_noise(a, invocation, out),
        Command::AlphaSearch(a) => run_alpha_search(a, invocation, out),
        Command::MultiInstance(a) => run_multi_instance(a, invocation, out),
        Command::Train(a) => run_train(a, invocation, out),
        Command::HammingExample(a) => run_hamming(a, invocation, out),
    }
}

fn read_dist(path: &Path) -> Result<(Vec<String>, Distribution), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(DistributionFile::parse(&text)?)
}

pub fn build_polytope(spec: &str, dim: Option<usize>) -> Result<Polytope, CliError> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        return Ok(Polytope::from_json(&text)?);
    }
    let kind: PolytopeKind = spec.parse()?;
    if kind == PolytopeKind::Generic {
        return Err(CliError::Usage("generic polytopes are read with file:PATH".into()));
    }
    let d = dim.ok_or_else(|| CliError::Usage(format!("--dim is required for {spec}")))?;
    Ok(Polytope::build(kind, d)?)
}

fn build_embedding(t: &TargetArgs) -> Result<(Embedding, Option<Distribution>), CliError> {
    let polytope = build_polytope(&t.polytope, t.dim)?;
    match &t.dist {
        Some(path) => {
            let (labels, p) = read_dist(path)?;
            Ok((Embedding::new(polytope, labels)?, Some(p)))
        }
        None => Ok((Embedding::with_default_labels(polytope), None)),
    }
}

fn header(invocation: &str) -> String {
    format!("# invocation: {invocation}\n")
}

fn write_json_line(out: &mut dyn Write, v: &serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{v}")?;
    Ok(())
}

pub fn run_regions(a: &RegionsArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (e, _) = build_embedding(&a.target)?;
    if !(a.tol >= 0.0) {
        return Err(CliError::Usage("--tol must be nonnegative".into()));
    }
    let grid = GridSpec { tol: a.tol, ..GridSpec::new(a.grid)? };
    let table = map_regions(&e, &grid)?;
    let csv = format!("{}{}", header(invocation), table.to_csv()?);
    if let Some(svg) = &a.svg {
        if e.dim() != 2 {
            return Err(CliError::Usage("--svg needs a two-dimensional polytope".into()));
        }
        fs::write(svg, table.to_svg()?)?;
    }
    match &a.out {
        Some(path) => {
            fs::write(path, csv)?;
            let counts: serde_json::Map<String, serde_json::Value> = table
                .counts()
                .into_iter()
                .map(|(c, k)| (c.as_str().to_string(), json!(k)))
                .collect();
            write_json_line(
                out,
                &json!({ "invocation": invocation, "points": table.rows.len(), "counts": counts }),
            )
        }
        None => {
            out.write_all(csv.as_bytes())?;
            Ok(())
        }
    }
}

pub fn run_witness(a: &TargetArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (e, _) = build_embedding(a)?;
    let w = hallucination_witness(&e)?;
    let c = classify_point(&e, &w.point, DEFAULT_GAP_TOL)?;
    let witnesses: Vec<_> = w
        .witnesses
        .iter()
        .enumerate()
        .map(|(y, p)| json!({ "outcome": e.label(y), "p": p.probs() }))
        .collect();
    write_json_line(
        out,
        &json!({
            "invocation": invocation,
            "point": w.point,
            "linked_outcome": e.label(c.linked_outcome),
            "category": c.category.as_str(),
            "witnesses": witnesses,
        }),
    )
}

pub fn run_alpha_search(a: &AlphaSearchArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (e, _) = build_embedding(&a.target)?;
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let alpha = alpha_threshold(&e, a.tol)?;
    write_json_line(out, &json!({ "invocation": invocation, "alpha_star": alpha, "tol": a.tol }))
}

pub fn run_low_noise(a: &LowNoiseArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (e, _) = build_embedding(&a.target)?;
    if !(0.0..1.0).contains(&a.alpha) {
        return Err(CliError::Usage(format!("--alpha must lie in [0, 1), got {}", a.alpha)));
    }
    let family = scaled_family(&e, a.alpha)?;
    let pairs = pairwise_distances(&family)?;
    let disjoint = pairwise_disjointness(&family)?;
    if let Some(path) = &a.out {
        let mut s = header(invocation);
        s.push_str("y,yhat,distance\n");
        for p in &pairs {
            s.push_str(&format!("{},{},{}\n", e.label(p.y), e.label(p.yhat), p.distance));
        }
        fs::write(path, s)?;
    }
    let threshold = if a.alpha_search {
        Some(alpha_threshold(&e, 1e-4)?)
    } else {
        None
    };
    let mut report = json!({
        "invocation": invocation,
        "alpha": a.alpha,
        "min_distance": disjoint.min_distance,
        "closest_pair": [e.label(disjoint.witness_pair.0), e.label(disjoint.witness_pair.1)],
        "disjoint": disjoint.holds(),
        "pairs": pairs
            .iter()
            .map(|p| json!({ "y": e.label(p.y), "yhat": e.label(p.yhat), "distance": p.distance }))
            .collect::<Vec<_>>(),
    });
    if let Some(t) = threshold {
        report["alpha_star"] = json!(t);
    }
    if !disjoint.holds() {
        report["hypothesis_violation"] = json!(true);
        report["calibration"] = serde_json::Value::Null;
        return write_json_line(out, &report);
    }

    let n = e.num_outcomes();
    let mut rng = seeded_rng(a.seed);
    let draws: Vec<Distribution> = (0..a.trials)
        .map(|_| {
            let y = rng.random_range(0..n);
            sample_low_noise_with(&mut rng, n, a.alpha, y)
        })
        .collect();
    let outcomes = draws
        .par_iter()
        .map(|p| {
            let mode = p.mode(0.0);
            if mode.len() != 1 {
                return Ok(None);
            }
            let d = low_noise_link(&family, &e.embed(p)?, a.tau)?;
            Ok(Some(d.outcome == mode[0]))
        })
        .collect::<polyembed::Result<Vec<Option<bool>>>>()?;
    let unique = outcomes.iter().flatten().count();
    let correct = outcomes.iter().flatten().filter(|&&ok| ok).count();
    let first_miss = outcomes.iter().position(|o| *o == Some(false));
    report["calibration"] = json!({
        "draws": a.trials,
        "seed": a.seed,
        "unique_mode_draws": unique,
        "correct": correct,
        "rate": if unique == 0 { 1.0 } else { correct as f64 / unique as f64 },
    });
    write_json_line(out, &report)?;
    match first_miss {
        Some(i) => Err(CliError::Property(format!(
            "{} of {unique} unique-mode draws mislinked (first at draw {i})",
            unique - correct
        ))),
        None => Ok(()),
    }
}

pub fn run_multi_instance(a: &MultiInstanceArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (labels, p) = match (&a.dist, &a.probs) {
        (Some(path), _) => read_dist(path)?,
        (None, Some(probs)) => (default_labels(probs.len()), Distribution::new(probs.clone())?),
        (None, None) => (default_labels(a.outcomes), sample_simplex(a.outcomes, a.seed)?),
    };
    if !(a.noise >= 0.0) {
        return Err(CliError::Usage("--noise must be nonnegative".into()));
    }
    let plan = round_robin_plan_with_labels(labels.clone())?;
    let noise = (a.noise > 0.0).then_some(NoiseSpec { radius: a.noise, seed: a.seed });
    let (mode, diag) = elicit_mode_end_to_end(&p, &plan, noise.as_ref(), a.tau)?;

    write_json_line(
        out,
        &json!({ "invocation": invocation, "labels": labels, "p": p.probs(), "noise": a.noise, "seed": a.seed }),
    )?;
    for (j, pairs) in plan.pairings().iter().enumerate() {
        let named: Vec<_> = pairs.iter().map(|&(x, y)| [&labels[x], &labels[y]]).collect();
        write_json_line(out, &json!({ "plan_instance": j, "pairs": named }))?;
    }
    for r in diag.reports.iter().flatten() {
        writeln!(out, "{}", r.to_json_line())?;
    }
    let names: Vec<&str> = mode.iter().map(|&y| labels[y].as_str()).collect();
    write_json_line(out, &json!({ "mode": names, "aggregation": diag.path }))
}

fn trace_csv(invocation: &str, t: &TrainTrace) -> String {
    let mut s = header(invocation);
    s.push_str("step,loss,grad_norm\n");
    for (k, (l, g)) in t.loss_curve.iter().zip(&t.grad_norm_curve).enumerate() {
        s.push_str(&format!("{},{l},{g}\n", k + 1));
    }
    s
}

pub fn run_train(a: &TrainArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let (e, from_file) = build_embedding(&a.target)?;
    let p = match (from_file, &a.probs) {
        (Some(p), _) => p,
        (None, Some(probs)) => Distribution::new(probs.clone())?,
        (None, None) => return Err(CliError::Usage("train needs --dist or --probs".into())),
    };
    let loss = InducedLoss::new(Generator::parse(&a.generator)?, e)?;
    let cfg = TrainConfig {
        steps: a.steps,
        learning_rate: a.lr,
        schedule: match a.schedule {
            ScheduleArg::InvSqrt => Schedule::InvSqrt,
            ScheduleArg::InvT => Schedule::InvT,
        },
        seed: a.seed,
        batch: a.batch,
    };
    let trace = match sgd_minimize(&loss, &p, &cfg) {
        Ok(t) => t,
        Err(polyembed::Error::Diverged { step, trace }) => {
            if let Some(path) = &a.out {
                fs::write(path, trace_csv(invocation, &trace))?;
            }
            return Err(CliError::Solver(format!("training diverged at step {step}")));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &a.out {
        fs::write(path, trace_csv(invocation, &trace))?;
    }
    let e = loss.embedding();
    let p_hat = empirical_distribution(&trace.samples, e.num_outcomes())?;
    let target = e.embed(&p_hat)?;
    let distance = trace
        .final_report
        .iter()
        .zip(&target)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let linked = polyembed::links::map_link(e, &trace.final_report, DEFAULT_TIE_TOL)?;
    write_json_line(
        out,
        &json!({
            "invocation": invocation,
            "generator": loss.generator().name(),
            "config": cfg,
            "final_report": trace.final_report,
            "final_loss": trace.loss_curve.last(),
            "empirical_p": p_hat.probs(),
            "empirical_embedding": target,
            "distance_to_empirical_embedding": distance,
            "linked_outcome": e.label(linked.outcome),
        }),
    )
}

pub fn run_hamming(a: &HammingArgs, invocation: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let r = hamming::hamming_example(a.epsilon)?;
    out.write_all(header(invocation).as_bytes())?;
    out.write_all(r.to_csv().as_bytes())?;
    if r.minimizer != 0 || !r.hallucination {
        return Err(CliError::Property(format!(
            "expected y1 with zero mass as minimizer, got {}",
            r.rows[r.minimizer].label
        )));
    }
    Ok(())
}
