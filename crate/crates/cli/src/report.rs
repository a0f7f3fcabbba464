//! Output files: learning-curve CSV, batch summary CSV, policy checkpoints,
//! trace logs, and SVG charts. Every writer has a matching reader.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use tltl_marl::game::TraceRecord;
use tltl_marl::learning::{Checkpoint, EpisodeMetric};

/// One learning-curve row. CSV schema, in column order:
/// `episode,normalized_reward,success,length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub normalized_reward: f64,
    pub success: bool,
    pub length: usize,
}

impl From<&EpisodeMetric<f64>> for CurveRow {
    fn from(m: &EpisodeMetric<f64>) -> Self {
        Self {
            episode: m.episode,
            normalized_reward: m.normalized_return,
            success: m.success,
            length: m.length,
        }
    }
}

pub fn write_curve_csv(path: &Path, metrics: &[EpisodeMetric<f64>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for metric in metrics {
        writer.serialize(CurveRow::from(metric))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// One batch-summary row per reward arm. CSV schema:
/// `arm,learner,seeds,converged,convergence_rate,best_route_length,optimal_route_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arm: String,
    pub learner: String,
    pub seeds: usize,
    pub converged: usize,
    pub convergence_rate: f64,
    pub best_route_length: Option<usize>,
    pub optimal_route_length: Option<usize>,
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint<f64>) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Line-delimited trace export: one JSON record per step.
pub fn write_trace_jsonl(path: &Path, records: &[TraceRecord<f64>]) -> Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    for record in records {
        serde_json::to_writer(&mut file, record)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace_jsonl(path: &Path) -> Result<Vec<TraceRecord<f64>>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

/// Trailing moving average with the window clipped at the series start.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i.min(window - 1) + 1) as f64);
    }
    out
}

/// A named series with an uncertainty band, drawn as an SVG line chart.
pub struct ChartSeries {
    pub name: String,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

const CHART_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders learning curves (x = episode, y = value in [-1, 1]) as SVG.
pub fn svg_line_chart(series: &[ChartSeries], title: &str) -> String {
    let width = 720.0;
    let height = 420.0;
    let margin = 50.0;
    let max_len = series.iter().map(|s| s.mean.len()).max().unwrap_or(1).max(2);
    let (y_min, y_max) = series
        .iter()
        .flat_map(|s| s.lower.iter().chain(s.upper.iter()).chain(s.mean.iter()))
        .fold((-0.1f64, 0.1f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let x = |i: usize| margin + (width - 2.0 * margin) * i as f64 / (max_len - 1) as f64;
    let y = |v: f64| height - margin - (height - 2.0 * margin) * (v - y_min) / (y_max - y_min);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>\n",
        width / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{h}\" x2=\"{w}\" y2=\"{h}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{h}\" stroke=\"black\"/>\n",
        m = margin,
        h = height - margin,
        w = width - margin,
    ));
    for (k, s) in series.iter().enumerate() {
        let color = CHART_COLORS[k % CHART_COLORS.len()];
        if !s.lower.is_empty() && s.lower.len() == s.upper.len() {
            let mut band = String::from("<polygon points=\"");
            for (i, v) in s.upper.iter().enumerate() {
                band.push_str(&format!("{:.1},{:.1} ", x(i), y(*v)));
            }
            for (i, v) in s.lower.iter().enumerate().rev() {
                band.push_str(&format!("{:.1},{:.1} ", x(i), y(*v)));
            }
            band.push_str(&format!("\" fill=\"{color}\" opacity=\"0.15\"/>\n"));
            svg.push_str(&band);
        }
        let mut line = String::from("<polyline fill=\"none\" points=\"");
        for (i, v) in s.mean.iter().enumerate() {
            line.push_str(&format!("{:.1},{:.1} ", x(i), y(*v)));
        }
        line.push_str(&format!("\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"));
        svg.push_str(&line);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            width - margin + 4.0,
            margin + 16.0 * k as f64,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
