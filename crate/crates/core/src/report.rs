//! Text tables, confusion-matrix heatmaps and the JSON results file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, RunStats, SweepResult, TechniqueResult};
use crate::raster::Raster;

/// Rows of the technique comparison, in the order they are printed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub title: String,
    pub rows: Vec<TechniqueResult>,
}

/// Paths written by [`render_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReportArtifacts {
    pub table: PathBuf,
    pub results: PathBuf,
    pub heatmaps: Vec<PathBuf>,
}

/// Side length in pixels of one heatmap cell.
pub const HEATMAP_CELL: usize = 12;

const LOW: [f32; 3] = [1.0, 1.0, 1.0];
const HIGH: [f32; 3] = [0.03, 0.19, 0.42];

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn mean_std(s: &RunStats) -> String {
    format!("{} ± {}", pct(s.mean), pct(s.std))
}

fn pipe_table(header: &[&str], right_aligned: &[bool], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .zip(right_aligned)
            .map(|((c, &w), &right)| {
                let pad = " ".repeat(w - c.chars().count());
                if right {
                    format!("{pad}{c}")
                } else {
                    format!("{c}{pad}")
                }
            })
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    let rule: Vec<String> = widths
        .iter()
        .zip(right_aligned)
        .map(|(&w, &right)| {
            if right {
                format!("{}:", "-".repeat(w + 1))
            } else {
                "-".repeat(w + 2)
            }
        })
        .collect();
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// Technique comparison table: Augmentation, # of Samples, accuracy
/// μ ± σ, Min, Max, all in percent.
pub fn format_table(report: &ExperimentReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.technique.label(),
                r.train_samples.to_string(),
                mean_std(&r.accuracy),
                pct(r.accuracy.min),
                pct(r.accuracy.max),
            ]
        })
        .collect();
    let mut out = format!("{}\n\nAccuracy (%)\n\n", report.title);
    out.push_str(&pipe_table(
        &["Augmentation", "# of Samples", "μ ± σ", "Min", "Max"],
        &[false, true, true, true, true],
        &rows,
    ));
    out
}

/// GAN depth sweep table with accuracy and balanced-accuracy columns; the
/// baseline, when present, is the first row.
pub fn format_sweep_table(title: &str, sweep: &SweepResult) -> String {
    let stats_cells = |acc: &RunStats, bal: &RunStats| {
        vec![
            mean_std(acc),
            pct(acc.min),
            pct(acc.max),
            mean_std(bal),
            pct(bal.min),
            pct(bal.max),
        ]
    };
    let mut rows = Vec::new();
    if let Some(b) = &sweep.baseline {
        let mut row = vec!["No augmentation".to_string(), String::new(), b.train_samples.to_string()];
        row.extend(stats_cells(&b.accuracy, &b.balanced_accuracy));
        rows.push(row);
    }
    for c in &sweep.cells {
        let mut row = vec![c.n_d.to_string(), c.n_g.to_string(), c.train_samples.to_string()];
        row.extend(stats_cells(&c.accuracy, &c.balanced_accuracy));
        rows.push(row);
    }
    let mut out = format!("{title}\n\nConv layers, accuracy (%) and balanced accuracy (%)\n\n");
    out.push_str(&pipe_table(
        &[
            "Discriminator",
            "Generator",
            "Training Samples",
            "Accuracy μ ± σ",
            "Min",
            "Max",
            "Balanced Accuracy μ ± σ",
            "Min",
            "Max",
        ],
        &[false, false, true, true, true, true, true, true, true],
        &rows,
    ));
    out
}

/// Row-normalized confusion matrix as an image: cell (i, j) is shaded by
/// the fraction of class-i samples predicted as j, white (0) to dark blue (1).
pub fn heatmap(cm: &ConfusionMatrix) -> Raster {
    let k = cm.num_classes();
    let size = (k * HEATMAP_CELL).max(1);
    let fractions: Vec<Vec<f32>> = (0..k)
        .map(|i| {
            let total = cm.row_sum(i);
            (0..k)
                .map(|j| if total == 0 { 0.0 } else { cm.get(i, j) as f32 / total as f32 })
                .collect()
        })
        .collect();
    Raster::from_fn(size, size, |x, y| {
        if k == 0 {
            return LOW;
        }
        let t = fractions[y / HEATMAP_CELL][x / HEATMAP_CELL];
        std::array::from_fn(|c| LOW[c] + (HIGH[c] - LOW[c]) * t)
    })
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `table.md`, `results.json` and one `confusion_<technique>.png`
/// (median-accuracy run) per row into `out_dir`.
pub fn render_report(report: &ExperimentReport, out_dir: &Path) -> Result<ReportArtifacts> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let table = out_dir.join("table.md");
    write_text(&table, &format_table(report))?;
    let results = out_dir.join("results.json");
    write_text(&results, &(serde_json::to_string_pretty(report)? + "\n"))?;
    let mut heatmaps = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        let path = out_dir.join(format!("confusion_{}.png", file_stem(&row.technique.to_string())));
        heatmap(&row.median_run().confusion).save_png(&path)?;
        heatmaps.push(path);
    }
    Ok(ReportArtifacts {
        table,
        results,
        heatmaps,
    })
}

/// Writes `sweep_table.md` and `sweep_results.json` into `out_dir`.
pub fn render_sweep_report(title: &str, sweep: &SweepResult, out_dir: &Path) -> Result<ReportArtifacts> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let table = out_dir.join("sweep_table.md");
    write_text(&table, &format_sweep_table(title, sweep))?;
    let results = out_dir.join("sweep_results.json");
    write_text(&results, &(serde_json::to_string_pretty(sweep)? + "\n"))?;
    Ok(ReportArtifacts {
        table,
        results,
        heatmaps: Vec::new(),
    })
}
