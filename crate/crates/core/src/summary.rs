//! Per-cell statistics over sweep results.

use std::collections::BTreeMap;

use crate::harness::ResultRow;
use crate::metrics::{classify_trial, TangleClass};

/// Quantile with linear interpolation between order statistics. `None` for
/// empty input.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

pub fn interquartile_range(values: &[f64]) -> Option<f64> {
    Some(quantile(values, 0.75)? - quantile(values, 0.25)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dataset: String,
    pub map_side: usize,
    pub variant: String,
    pub init_mode: String,
    pub param_name: String,
    pub param_value: f64,
    pub trials: usize,
    pub median_final_alfa: f64,
    pub iqr_final_alfa: f64,
    /// Reference A_t: median over crossing-free trials of the cell, or over all
    /// of its trials when crossings are unavailable or every trial crossed.
    pub baseline_alfa: f64,
    /// Fraction with `final_A > factor * baseline_alfa`.
    pub tangled_fraction: f64,
    /// Fraction with at least one lattice-edge crossing (2D only).
    pub crossing_fraction: Option<f64>,
}

/// Groups rows by cell (dataset, side, variant, init, parameter) in first-seen
/// order and summarizes each.
pub fn summarize(rows: &[ResultRow], factor: f64) -> Vec<CellSummary> {
    let mut order: Vec<(String, usize, String, String, String, u64)> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = (
            row.dataset.clone(),
            row.map_side,
            row.variant.clone(),
            row.init_mode.clone(),
            row.param_name.clone(),
            row.param_value.to_bits(),
        );
        let idx = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        groups.entry(idx).or_default().push(row);
    }

    groups
        .into_values()
        .map(|cell| {
            let first = cell[0];
            let alfas: Vec<f64> = cell.iter().map(|r| r.final_alfa).collect();
            let crossings: Option<Vec<u64>> = cell.iter().map(|r| r.edge_crossings).collect();
            let clean: Vec<f64> = match &crossings {
                Some(c) => cell
                    .iter()
                    .zip(c)
                    .filter(|(_, &x)| x == 0)
                    .map(|(r, _)| r.final_alfa)
                    .collect(),
                None => Vec::new(),
            };
            let baseline = median(if clean.is_empty() { &alfas } else { &clean }).unwrap_or(0.0);
            let tangled = alfas
                .iter()
                .filter(|&&a| matches!(classify_trial(a, baseline, factor), Ok(TangleClass::Tangled)))
                .count();
            CellSummary {
                dataset: first.dataset.clone(),
                map_side: first.map_side,
                variant: first.variant.clone(),
                init_mode: first.init_mode.clone(),
                param_name: first.param_name.clone(),
                param_value: first.param_value,
                trials: cell.len(),
                median_final_alfa: median(&alfas).unwrap_or(f64::NAN),
                iqr_final_alfa: interquartile_range(&alfas).unwrap_or(f64::NAN),
                baseline_alfa: baseline,
                tangled_fraction: tangled as f64 / cell.len() as f64,
                crossing_fraction: crossings.map(|c| c.iter().filter(|&&x| x > 0).count() as f64 / c.len() as f64),
            }
        })
        .collect()
}
