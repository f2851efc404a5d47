//! Reconstruction quality metrics, error maps, and report aggregation.

use crate::error::{Error, Result};
use crate::field::ScalarField;

fn check_pair(truth: &ScalarField, pred: &ScalarField, mask: Option<&[u8]>) -> Result<()> {
    truth.same_shape(pred)?;
    if let Some(m) = mask {
        if m.len() != truth.len() {
            return Err(Error::BadMask(format!(
                "mask has {} entries, grid has {} pixels",
                m.len(),
                truth.len()
            )));
        }
        if let Some(pos) = m.iter().position(|&x| x > 1) {
            return Err(Error::BadMask(format!(
                "entry {} at flat index {pos} is neither 0 nor 1",
                m[pos]
            )));
        }
        if m.iter().all(|&x| x == 0) {
            return Err(Error::EmptyMask);
        }
    }
    Ok(())
}

#[inline]
fn selected(mask: Option<&[u8]>, i: usize) -> bool {
    mask.is_none_or(|m| m[i] == 1)
}

/// ||truth - pred||_2 / ||truth||_2 over the selected pixels.
pub fn relative_l2(truth: &ScalarField, pred: &ScalarField, mask: Option<&[u8]>) -> Result<f64> {
    check_pair(truth, pred, mask)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&t, &p)) in truth.values().iter().zip(pred.values()).enumerate() {
        if selected(mask, i) {
            num += (t - p) * (t - p);
            den += t * t;
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroTruthNorm);
    }
    Ok((num / den).sqrt())
}

/// Root-mean-square error over the selected pixels.
pub fn rmse(truth: &ScalarField, pred: &ScalarField, mask: Option<&[u8]>) -> Result<f64> {
    check_pair(truth, pred, mask)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (&t, &p)) in truth.values().iter().zip(pred.values()).enumerate() {
        if selected(mask, i) {
            sum += (t - p) * (t - p);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((sum / count as f64).sqrt())
}

/// Pixel-wise squared error; carries the truth's validity mask and geometry.
pub fn error_map(truth: &ScalarField, pred: &ScalarField) -> Result<ScalarField> {
    truth.same_shape(pred)?;
    let values = truth
        .values()
        .iter()
        .zip(pred.values())
        .map(|(&t, &p)| (t - p) * (t - p))
        .collect();
    truth.with_values(values)
}

/// Squared error compressed for display: (min(err, cap) / cap)^gamma in [0, 1].
pub fn scaled_error_map(
    truth: &ScalarField,
    pred: &ScalarField,
    cap: f64,
    gamma: f64,
) -> Result<ScalarField> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::InvalidArgument(format!("cap must be > 0, got {cap}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    let raw = error_map(truth, pred)?;
    raw.map(|e| (e.min(cap) / cap).powf(gamma))
}

/// Pixel-wise sqrt(mean squared error) over a set of (truth, prediction)
/// pairs; a single pair reduces to the absolute error.
pub fn average_error_map(pairs: &[(&ScalarField, &ScalarField)]) -> Result<ScalarField> {
    let (first_truth, _) = pairs
        .first()
        .ok_or_else(|| Error::InvalidArgument("average error map needs at least one pair".into()))?;
    let mut acc = vec![0.0f64; first_truth.len()];
    for (truth, pred) in pairs {
        first_truth.same_shape(truth)?;
        truth.same_shape(pred)?;
        for (a, (&t, &p)) in acc.iter_mut().zip(truth.values().iter().zip(pred.values())) {
            *a += (t - p) * (t - p);
        }
    }
    let n = pairs.len() as f64;
    first_truth.with_values(acc.into_iter().map(|s| (s / n).sqrt()).collect())
}

/// One scored cell: a metric value for (experiment, sensor count, split, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub experiment: String,
    pub sensor_count: usize,
    pub split: String,
    pub metric: String,
    pub seed: u64,
    pub value: f64,
}

/// An aggregated report row: mean and population standard deviation over the
/// seeds of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub sensor_count: usize,
    pub split: String,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

/// Group records by (experiment, split, metric, sensor count) and aggregate
/// over seeds. Returns rows in a deterministic order plus human-readable
/// warnings for thin or ragged cells.
pub fn aggregate_table(records: &[EvalRecord]) -> (Vec<ReportRow>, Vec<String>) {
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<(String, String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        cells
            .entry((
                r.experiment.clone(),
                r.split.clone(),
                r.metric.clone(),
                r.sensor_count,
            ))
            .or_default()
            .push(r.value);
    }
    let mut rows = Vec::with_capacity(cells.len());
    let mut warnings = Vec::new();
    // Ragged groups: within one (experiment, split, metric), every sensor
    // count should aggregate the same number of seeds.
    let mut group_sizes: BTreeMap<(String, String, String), Vec<(usize, usize)>> = BTreeMap::new();
    for ((experiment, split, metric, sensor_count), values) in &cells {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if n == 1 {
            warnings.push(format!(
                "cell {experiment}/{split}/{metric}/n={sensor_count} aggregates a single seed; sd is 0 by construction"
            ));
        }
        group_sizes
            .entry((experiment.clone(), split.clone(), metric.clone()))
            .or_default()
            .push((*sensor_count, n));
        rows.push(ReportRow {
            experiment: experiment.clone(),
            sensor_count: *sensor_count,
            split: split.clone(),
            metric: metric.clone(),
            mean,
            sd: var.sqrt(),
            n,
        });
    }
    for ((experiment, split, metric), sizes) in group_sizes {
        let max_n = sizes.iter().map(|&(_, n)| n).max().unwrap_or(0);
        for (count, n) in sizes {
            if n < max_n {
                warnings.push(format!(
                    "cell {experiment}/{split}/{metric}/n={count} has {n} seeds where siblings have {max_n}"
                ));
            }
        }
    }
    (rows, warnings)
}

/// Render rows as CSV with the pinned header.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("experiment,sensor_count,split,metric,mean,sd,n\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.experiment, r.sensor_count, r.split, r.metric, r.mean, r.sd, r.n
        ));
    }
    out
}
