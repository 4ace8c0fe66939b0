//! Accuracy metrics against ground-truth labels. All comparisons use the
//! late-rise corner.

use serde::{Deserialize, Serialize};

use crate::at_provider::PinTiming;
use crate::corner::Corner;
use crate::error::{Error, Result};
use crate::sdf::{DelayLabels, Quantity};
use crate::slack_engine::{compute_tns_wns, SlackReport};
use crate::timing_graph::TimingGraph;

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} predictions, {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Argument("empty input".into()));
    }
    Ok(())
}

/// `1 - MSE / Var(truth)` with population variance.
pub fn r2_score(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let var = truth.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::Metric("R2 is undefined for constant ground truth".into()));
    }
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    Ok(1.0 - mse / var)
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// `None` when fewer than two labeled pins or constant labels.
    pub at_r2: Option<f64>,
    pub rat_mae: Option<f64>,
    pub slack_mae: Option<f64>,
    /// Estimated minus label-derived.
    pub tns_delta: f64,
    pub wns_delta: f64,
    pub n_pins: usize,
    pub n_endpoints: usize,
    /// Constrained endpoints without a late-rise RAT label.
    pub endpoints_missing_labels: usize,
}

impl EvalSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// One-line `key=value` summary.
    pub fn line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("na".to_string(), |x| format!("{x:.6}"));
        format!(
            "at_r2={} rat_mae={} slack_mae={} tns_delta={:.6} wns_delta={:.6} n_pins={} n_endpoints={} missing_labels={}",
            opt(self.at_r2),
            opt(self.rat_mae),
            opt(self.slack_mae),
            self.tns_delta,
            self.wns_delta,
            self.n_pins,
            self.n_endpoints,
            self.endpoints_missing_labels
        )
    }
}

/// Compare an estimated report and the ATs it used with label RAT and AT.
/// Label slack at an endpoint is label RAT minus label AT; label TNS/WNS are
/// computed from those slacks over the endpoints that have both.
pub fn evaluate(
    graph: &TimingGraph,
    report: &SlackReport,
    labels: &DelayLabels,
    timing: &PinTiming,
) -> Result<EvalSummary> {
    let lr = Corner::LateRise;
    let (mut at_p, mut at_t) = (Vec::new(), Vec::new());
    for (i, n) in graph.nodes.iter().enumerate() {
        if let Some(v) = labels.get(&n.name, Quantity::At, lr) {
            at_p.push(timing.at[i][lr.index()]);
            at_t.push(v);
        }
    }
    let at_r2 = match r2_score(&at_p, &at_t) {
        Ok(v) => Some(v),
        Err(Error::Metric(_)) | Err(Error::Argument(_)) => None,
        Err(e) => return Err(e),
    };

    let mut endpoints: Vec<_> = report.endpoints.iter().collect();
    endpoints.sort_by_key(|e| e.endpoint);
    let (mut rat_p, mut rat_t) = (Vec::new(), Vec::new());
    let (mut slack_p, mut slack_t) = (Vec::new(), Vec::new());
    let mut missing = 0;
    for e in &endpoints {
        let Some(rat) = labels.get(&e.name, Quantity::Rat, lr) else {
            missing += 1;
            continue;
        };
        rat_p.push(e.rat_corrected);
        rat_t.push(rat);
        if let Some(at) = labels.get(&e.name, Quantity::At, lr) {
            slack_p.push(e.slack_corrected);
            slack_t.push(rat - at);
        }
    }
    let (tns_l, wns_l) = compute_tns_wns(slack_t.iter().copied());
    Ok(EvalSummary {
        at_r2,
        rat_mae: mae(&rat_p, &rat_t).ok(),
        slack_mae: mae(&slack_p, &slack_t).ok(),
        tns_delta: report.tns - tns_l,
        wns_delta: report.wns - wns_l,
        n_pins: at_t.len(),
        n_endpoints: rat_t.len(),
        endpoints_missing_labels: missing,
    })
}
