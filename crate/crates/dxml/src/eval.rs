//! Precision@k ranking evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::forest::{predict_forest, ForestModel};
use crate::sparse::Dataset;

/// Fraction of the top-k ranked labels that are relevant. The denominator is
/// always `k`, even when fewer than `k` labels are relevant or ranked.
pub fn precision_at_k(ranking: &[usize], relevant: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("precision@k needs k >= 1".into()));
    }
    let hits = ranking
        .iter()
        .take(k)
        .filter(|label| relevant.contains(label))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Evaluation summary: mean precision at each requested cutoff plus timing
/// and model-size measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub p_at: BTreeMap<usize, f64>,
    pub n_test: usize,
    pub predict_seconds: f64,
    pub predict_ms_per_sample: f64,
    pub train_seconds: Option<f64>,
    pub model_bytes: Option<u64>,
}

impl EvalReport {
    /// One machine-readable JSON line, timing included.
    pub fn to_json_line(&self) -> String {
        let mut value = self.metrics_json();
        value["predict_seconds"] = json!(self.predict_seconds);
        value["predict_ms_per_sample"] = json!(self.predict_ms_per_sample);
        if let Some(train_seconds) = self.train_seconds {
            value["train_seconds"] = json!(train_seconds);
        }
        value.to_string()
    }

    /// The deterministic part as JSON: metrics, counts, and model size, but
    /// no wall-clock measurements.
    pub fn to_metrics_json_line(&self) -> String {
        self.metrics_json().to_string()
    }

    fn metrics_json(&self) -> serde_json::Value {
        let p_at: BTreeMap<String, f64> = self
            .p_at
            .iter()
            .map(|(&k, &v)| (k.to_string(), v))
            .collect();
        let mut value = json!({
            "type": "eval",
            "n_test": self.n_test,
            "p_at": p_at,
        });
        if let Some(model_bytes) = self.model_bytes {
            value["model_bytes"] = json!(model_bytes);
        }
        value
    }

    /// The deterministic table: precision per cutoff, instance count, and
    /// model size. `eval` prints exactly this on stdout.
    pub fn metrics_table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (k, value) in &self.p_at {
            let _ = writeln!(out, "P@{:<2} {:.4} ({:.2}%)", k, value, value * 100.0);
        }
        let _ = writeln!(out, "n_test               {}", self.n_test);
        if let Some(bytes) = self.model_bytes {
            let _ = writeln!(out, "model bytes          {}", bytes);
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.metrics_table())?;
        if let Some(train_seconds) = self.train_seconds {
            writeln!(f, "train seconds        {:.3}", train_seconds)?;
        }
        writeln!(f, "predict seconds      {:.3}", self.predict_seconds)?;
        writeln!(f, "test ms / sample     {:.4}", self.predict_ms_per_sample)
    }
}

/// Evaluate a model on a test set at the given precision cutoffs.
pub fn evaluate(model: &ForestModel, test: &Dataset, ks: &[usize]) -> Result<EvalReport> {
    if model.d_x != test.d_x() {
        return Err(Error::DimensionMismatch {
            expected: model.d_x,
            found: test.d_x(),
            context: "model feature dimension vs test data",
        });
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidConfig(
            "evaluation needs at least one cutoff k >= 1".into(),
        ));
    }
    let max_k = *ks.iter().max().unwrap();
    let n = test.n();

    let started = Instant::now();
    let per_sample: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ranked: Vec<usize> = predict_forest(model, test.features.row(i), max_k)
                .into_iter()
                .map(|(label, _)| label)
                .collect();
            let relevant: Vec<usize> = test
                .labels
                .row(i)
                .iter()
                .map(|(col, _)| col as usize)
                .collect();
            ks.iter()
                .map(|&k| precision_at_k(&ranked, &relevant, k).expect("k >= 1"))
                .collect()
        })
        .collect();
    let predict_seconds = started.elapsed().as_secs_f64();

    let mut p_at = BTreeMap::new();
    for (slot, &k) in ks.iter().enumerate() {
        let sum: f64 = per_sample.iter().map(|row| row[slot]).sum();
        p_at.insert(k, sum / n as f64);
    }

    Ok(EvalReport {
        p_at,
        n_test: n,
        predict_seconds,
        predict_ms_per_sample: predict_seconds * 1000.0 / n as f64,
        train_seconds: None,
        model_bytes: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_label_relevant() {
        assert_eq!(precision_at_k(&[5, 1, 2], &[2, 5], 1).unwrap(), 1.0);
    }

    #[test]
    fn two_of_three_relevant() {
        let p = precision_at_k(&[5, 1, 2], &[2, 5], 3).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_truth_gives_zero() {
        for k in 1..=5 {
            assert_eq!(precision_at_k(&[5, 1, 2], &[], k).unwrap(), 0.0);
        }
    }

    #[test]
    fn k_zero_is_an_error() {
        assert!(precision_at_k(&[1], &[1], 0).is_err());
    }

    #[test]
    fn short_ranking_counts_missing_as_misses() {
        // Denominator stays k even if the ranking runs out.
        assert_eq!(precision_at_k(&[7], &[7], 5).unwrap(), 0.2);
    }
}
