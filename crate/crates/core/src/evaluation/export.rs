//! File exports: metrics CSV, experiment summary JSON and the ROC SVG plot.

use std::fmt::Write as _;
use std::path::Path;

use super::{EvalError, ExperimentResult, ThresholdMetrics};

fn write_file(path: &Path, contents: &str) -> Result<(), EvalError> {
    std::fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Renders one threshold table as CSV:
/// `threshold,tp,fp,tn,fn,accuracy,precision,recall,fall_out,trade_off`.
pub fn metrics_csv(table: &[ThresholdMetrics]) -> String {
    let mut out =
        String::from("threshold,tp,fp,tn,fn,accuracy,precision,recall,fall_out,trade_off\n");
    for row in table {
        let c = &row.counts;
        let m = &row.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.threshold,
            c.true_pos,
            c.false_pos,
            c.true_neg,
            c.false_neg,
            m.accuracy,
            m.precision,
            m.recall,
            m.fall_out,
            m.trade_off
        )
        .expect("in-memory write");
    }
    out
}

pub fn write_metrics_csv(path: &Path, table: &[ThresholdMetrics]) -> Result<(), EvalError> {
    write_file(path, &metrics_csv(table))
}

/// Machine-readable experiment summary with per-model and mean tables.
pub fn write_experiment_json(path: &Path, result: &ExperimentResult) -> Result<(), EvalError> {
    let json = serde_json::to_string_pretty(result).expect("result serializes");
    write_file(path, &(json + "\n"))
}

const SVG_SIZE: f64 = 440.0;
const SVG_MARGIN: f64 = 40.0;

fn svg_x(fall_out: f64) -> f64 {
    SVG_MARGIN + fall_out * (SVG_SIZE - 2.0 * SVG_MARGIN)
}

fn svg_y(recall: f64) -> f64 {
    SVG_SIZE - SVG_MARGIN - recall * (SVG_SIZE - 2.0 * SVG_MARGIN)
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
    let coords: Vec<String> = points
        .map(|(f, r)| format!("{:.2},{:.2}", svg_x(f), svg_y(r)))
        .collect();
    format!("  <polyline points=\"{}\" {} />\n", coords.join(" "), style)
}

/// Renders the experiment's ROC plot: one light polyline per fold model,
/// the mean curve in bold, and an X at the optimal threshold.
pub fn roc_svg(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
        SVG_SIZE
    ));
    out.push_str(&format!(
        "  <rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{w}\" fill=\"none\" stroke=\"#999\" />\n",
        m = SVG_MARGIN,
        w = SVG_SIZE - 2.0 * SVG_MARGIN
    ));
    // Chance diagonal.
    out.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ccc\" stroke-dasharray=\"4 4\" />\n",
        svg_x(0.0),
        svg_y(0.0),
        svg_x(1.0),
        svg_y(1.0)
    ));

    let closed = |pts: Vec<(f64, f64)>| {
        let mut all = vec![(0.0, 0.0)];
        all.extend(pts);
        all.push((1.0, 1.0));
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        all.into_iter()
    };

    for model in &result.models {
        let pts = model
            .table
            .iter()
            .map(|t| (t.metrics.fall_out, t.metrics.recall))
            .collect();
        out.push_str(&polyline(
            closed(pts),
            "fill=\"none\" stroke=\"#9bb8d4\" stroke-width=\"1\"",
        ));
    }
    let mean_pts = result
        .mean_curve
        .iter()
        .map(|p| (p.fall_out, p.recall))
        .collect();
    out.push_str(&polyline(
        closed(mean_pts),
        "fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\"",
    ));

    let opt = &result.mean_curve[result.optimal_index];
    let (cx, cy) = (svg_x(opt.fall_out), svg_y(opt.recall));
    for (dx, dy) in [(-5.0, -5.0), (-5.0, 5.0)] {
        out.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#c0392b\" stroke-width=\"2\" />\n",
            cx + dx,
            cy + dy,
            cx - dx,
            cy - dy
        ));
    }

    out.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">fall-out</text>\n",
        SVG_SIZE / 2.0 - 20.0,
        SVG_SIZE - 10.0
    ));
    out.push_str(&format!(
        "  <text x=\"12\" y=\"{:.0}\" font-size=\"12\" transform=\"rotate(-90 12 {:.0})\">recall</text>\n",
        SVG_SIZE / 2.0,
        SVG_SIZE / 2.0
    ));
    out.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">AUC {:.4}</text>\n",
        SVG_MARGIN + 8.0,
        SVG_MARGIN + 16.0,
        result.auc
    ));
    out.push_str("</svg>\n");
    out
}

pub fn write_roc_svg(path: &Path, result: &ExperimentResult) -> Result<(), EvalError> {
    write_file(path, &roc_svg(result))
}

#[cfg(test)]
mod tests {
    use super::super::{ConfusionCounts, metrics};
    use super::*;

    fn tiny_table() -> Vec<ThresholdMetrics> {
        [0.25, 0.5, 0.75]
            .iter()
            .map(|&t| {
                let counts = ConfusionCounts::new(8, 2, 6, 4);
                ThresholdMetrics {
                    threshold: t,
                    counts,
                    metrics: metrics(&counts),
                }
            })
            .collect()
    }

    #[test]
    fn csv_has_header_and_one_row_per_threshold() {
        let csv = metrics_csv(&tiny_table());
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("threshold,tp,fp,tn,fn,"));
        assert!(lines[1].starts_with("0.25,8,2,6,4,"));
    }

    #[test]
    fn csv_rows_match_library_metrics() {
        let table = tiny_table();
        let csv = metrics_csv(&table);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let m = &table[0].metrics;
        assert_eq!(row[5].parse::<f64>().unwrap(), m.accuracy);
        assert_eq!(row[6].parse::<f64>().unwrap(), m.precision);
        assert_eq!(row[7].parse::<f64>().unwrap(), m.recall);
        assert_eq!(row[8].parse::<f64>().unwrap(), m.fall_out);
        assert_eq!(row[9].parse::<f64>().unwrap(), m.trade_off);
    }
}
