//! Hamming loss on `{−1, 1}³` under the distribution family
//! `p_ε = (0, ⅓−ε, ⅓−ε, ⅓−ε, 0, 0, 0, 3ε)`, where the Bayes-optimal report is
//! an outcome that never occurs.

use serde::Serialize;

use crate::CliError;

/// `ε` must stay strictly below this for `y₁` to be the unique minimizer.
pub const EPSILON_BOUND: f64 = 1.0 / 12.0;

/// Outcomes `y₁ … y₈` in table order.
pub const OUTCOMES: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [-1, 1, 1],
    [-1, -1, 1],
    [1, -1, -1],
    [-1, 1, -1],
    [-1, -1, -1],
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HammingRow {
    pub label: String,
    pub vector: [i8; 3],
    pub prob: f64,
    pub expected_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HammingReport {
    pub epsilon: f64,
    pub rows: Vec<HammingRow>,
    /// Index of the expected-loss minimizer, lowest index on ties.
    pub minimizer: usize,
    /// The minimizer has zero probability.
    pub hallucination: bool,
}

pub fn hamming_distance(a: &[i8; 3], b: &[i8; 3]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

pub fn p_epsilon(epsilon: f64) -> [f64; 8] {
    let t = 1.0 / 3.0 - epsilon;
    [0.0, t, t, t, 0.0, 0.0, 0.0, 3.0 * epsilon]
}

pub fn hamming_example(epsilon: f64) -> Result<HammingReport, CliError> {
    if !(0.0..EPSILON_BOUND).contains(&epsilon) {
        return Err(CliError::Usage(format!(
            "epsilon must lie in [0, 1/12), got {epsilon}"
        )));
    }
    let p = p_epsilon(epsilon);
    let rows: Vec<HammingRow> = OUTCOMES
        .iter()
        .enumerate()
        .map(|(k, yk)| HammingRow {
            label: format!("y{}", k + 1),
            vector: *yk,
            prob: p[k],
            expected_loss: OUTCOMES
                .iter()
                .zip(&p)
                .map(|(y, &w)| w * f64::from(hamming_distance(yk, y)))
                .sum(),
        })
        .collect();
    let mut minimizer = 0;
    for (k, r) in rows.iter().enumerate() {
        if r.expected_loss < rows[minimizer].expected_loss {
            minimizer = k;
        }
    }
    Ok(HammingReport {
        epsilon,
        hallucination: rows[minimizer].prob == 0.0,
        rows,
        minimizer,
    })
}

impl HammingReport {
    /// CSV body: `outcome,vector,p,expected_loss` followed by a summary
    /// comment line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("outcome,vector,p,expected_loss\n");
        for r in &self.rows {
            let v = r.vector.map(|c| c.to_string()).join(" ");
            s.push_str(&format!("{},({}),{},{}\n", r.label, v, r.prob, r.expected_loss));
        }
        let m = &self.rows[self.minimizer];
        s.push_str(&format!(
            "# minimizer: {} expected_loss={} p={} hallucination={}\n",
            m.label, m.expected_loss, m.prob, self.hallucination
        ));
        s
    }
}
