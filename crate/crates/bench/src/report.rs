//! Mean(std) summary tables over benchmark records, with best-in-row and
//! pairwise-significance marks.

use std::collections::BTreeMap;
use std::path::Path;

use crate::protocol::RunRecord;
use crate::stats::kruskal_wallis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryCell {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct Summary {
    /// First-appearance order from the records.
    pub datasets: Vec<String>,
    pub techniques: Vec<String>,
    pub cells: BTreeMap<(String, String), SummaryCell>,
}

fn push_unique(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|x| x == item) {
        list.push(item.to_string());
    }
}

/// Aggregate accuracies per dataset x technique. Means are plain arithmetic
/// means of the records; std is the sample standard deviation (n-1).
pub fn summarize(records: &[RunRecord]) -> Summary {
    let mut datasets = Vec::new();
    let mut techniques = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        push_unique(&mut datasets, &r.dataset);
        push_unique(&mut techniques, &r.technique);
        groups
            .entry((r.dataset.clone(), r.technique.clone()))
            .or_default()
            .push(r.accuracy);
    }
    let cells = groups
        .into_iter()
        .map(|(key, accs)| {
            let n = accs.len();
            let mean = accs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            (key, SummaryCell { mean, std, n })
        })
        .collect();
    Summary {
        datasets,
        techniques,
        cells,
    }
}

/// `"79.03(2.24)"`: percent accuracy, two decimals, sample std in brackets.
pub fn format_cell(cell: &SummaryCell) -> String {
    format!("{:.2}({:.2})", cell.mean * 100.0, cell.std * 100.0)
}

fn accuracies_of<'a>(
    records: &'a [RunRecord],
    dataset: &str,
    technique: &str,
) -> Vec<f64> {
    let mut rows: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.dataset == dataset && r.technique == technique)
        .map(|r| (r.replication, r.accuracy))
        .collect();
    rows.sort_by_key(|&(rep, _)| rep);
    rows.into_iter().map(|(_, a)| a).collect()
}

/// Best technique per row (the oracle upper bound is exempt) and whether it
/// is significantly better than every other technique.
fn row_marks(records: &[RunRecord], summary: &Summary, dataset: &str) -> (Option<String>, bool) {
    let candidates: Vec<&String> = summary
        .techniques
        .iter()
        .filter(|t| t.as_str() != "oracle")
        .filter(|t| summary.cells.contains_key(&(dataset.to_string(), (*t).clone())))
        .collect();
    let best = candidates
        .iter()
        .max_by(|a, b| {
            let ma = summary.cells[&(dataset.to_string(), (**a).clone())].mean;
            let mb = summary.cells[&(dataset.to_string(), (**b).clone())].mean;
            ma.partial_cmp(&mb).unwrap()
        })
        .map(|t| (*t).clone());
    let Some(best) = best else {
        return (None, false);
    };
    let best_accs = accuracies_of(records, dataset, &best);
    let mut all_significant = candidates.len() > 1;
    for other in &candidates {
        if **other == best {
            continue;
        }
        let other_accs = accuracies_of(records, dataset, other);
        match kruskal_wallis(&best_accs, &other_accs) {
            Ok(r) if r.significant => {}
            _ => {
                all_significant = false;
                break;
            }
        }
    }
    (Some(best), all_significant)
}

/// Plain-text table mirroring the usual accuracy-comparison layout: datasets
/// as rows, techniques as columns, `mean(std)` cells, the best per row
/// wrapped in `*`, a trailing `•` when that lead is pairwise significant.
pub fn render_text(records: &[RunRecord]) -> String {
    let summary = summarize(records);
    if summary.datasets.is_empty() {
        return String::from("(no records)\n");
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["dataset".to_string()];
    header.extend(summary.techniques.iter().cloned());
    rows.push(header);

    for dataset in &summary.datasets {
        let (best, significant) = row_marks(records, &summary, dataset);
        let mut row = vec![dataset.clone()];
        for technique in &summary.techniques {
            let key = (dataset.clone(), technique.clone());
            let text = match summary.cells.get(&key) {
                Some(cell) => {
                    let mut text = format_cell(cell);
                    if best.as_deref() == Some(technique.as_str()) {
                        text = format!("*{text}*");
                        if significant {
                            text.push('•');
                        }
                    }
                    text
                }
                None => "-".to_string(),
            };
            row.push(text);
        }
        rows.push(row);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out.push('\n');
    out.push_str(
        "cells: accuracy percent as mean(std), sample std (n-1); * best per row \
         (oracle exempt); • best is significantly better than every other technique \
         (two-group Kruskal-Wallis, p < 0.05, pairwise, no multiple-comparison \
         correction)\n",
    );
    out
}

/// Same table as CSV: one row per dataset, one column per technique.
pub fn write_summary_csv(records: &[RunRecord], path: impl AsRef<Path>) -> anyhow::Result<()> {
    let summary = summarize(records);
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["dataset".to_string()];
    header.extend(summary.techniques.iter().cloned());
    w.write_record(&header)?;
    for dataset in &summary.datasets {
        let mut row = vec![dataset.clone()];
        for technique in &summary.techniques {
            let key = (dataset.clone(), technique.clone());
            row.push(
                summary
                    .cells
                    .get(&key)
                    .map(format_cell)
                    .unwrap_or_else(|| "-".to_string()),
            );
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
