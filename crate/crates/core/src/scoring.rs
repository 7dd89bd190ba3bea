//! Error rates against known truth, ROC curves and AUC.

use serde::{Deserialize, Serialize};

use crate::error::{GcarError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub fnp: f64,
    pub fdp: f64,
    pub mcp: f64,
    pub n_selected: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(GcarError::DimensionMismatch { expected: b, got: a });
    }
    if a == 0 {
        return Err(GcarError::InvalidParameter("no cases to score".into()));
    }
    Ok(())
}

/// FNP = FN / #declared null, FDP = FP / max(1, #declared non-null),
/// MCP = (FN + FP) / J. An empty side contributes 0.
///
/// Accepts any selection vector, so externally computed decisions can be
/// scored the same way.
pub fn error_rates(selected: &[bool], truth: &[bool]) -> Result<ErrorRates> {
    check_len(selected.len(), truth.len())?;
    let (mut fp, mut fneg, mut n_sel) = (0usize, 0usize, 0usize);
    for (&s, &t) in selected.iter().zip(truth) {
        n_sel += s as usize;
        fp += (s && !t) as usize;
        fneg += (!s && t) as usize;
    }
    let n = selected.len();
    let n_null = n - n_sel;
    Ok(ErrorRates {
        fnp: if n_null == 0 { 0.0 } else { fneg as f64 / n_null as f64 },
        fdp: fp as f64 / n_sel.max(1) as f64,
        mcp: (fneg + fp) as f64 / n as f64,
        n_selected: n_sel,
        false_pos: fp,
        false_neg: fneg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Cases with score ≥ threshold are declared non-null.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from (0, 0) to (1, 1), one point per distinct score. Tied
/// scores enter together, so ties produce a straight segment.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<Vec<RocPoint>> {
    check_len(scores.len(), truth.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(GcarError::InvalidParameter("NaN score".into()));
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(GcarError::InvalidParameter(
            "ROC needs at least one active and one null case".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(pts)
}

/// Trapezoid-rule area under an ROC curve.
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub threshold: f64,
    pub rates: ErrorRates,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
}

/// Error rates at `threshold` (selection rule p ≥ threshold) plus ROC/AUC.
pub fn score(probs: &[f64], truth: &[bool], threshold: f64) -> Result<ScoreSummary> {
    let sel: Vec<bool> = probs.iter().map(|&p| p >= threshold).collect();
    let rates = error_rates(&sel, truth)?;
    let roc = roc_curve(probs, truth)?;
    Ok(ScoreSummary {
        threshold,
        rates,
        auc: auc(&roc),
        roc,
    })
}
