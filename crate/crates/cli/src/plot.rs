//! Minimal static SVG plotter for the emitted CSV files.
//!
//! Renders one polyline per series (grouped by an optional column) on linear
//! or log-log axes. No external dependencies; output is a self-contained SVG.

use std::collections::BTreeMap;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Plot request: which CSV columns to draw.
pub struct PlotSpec<'a> {
    pub x_column: &'a str,
    pub y_column: &'a str,
    /// Optional column whose distinct values split the rows into series.
    pub group_column: Option<&'a str>,
    pub log_log: bool,
    pub title: &'a str,
}

/// Reads a CSV produced by this tool and writes an SVG plot.
pub fn plot_csv(csv_path: &Path, svg_path: &Path, spec: &PlotSpec) -> Result<(), String> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| format!("read csv: {e}"))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or("empty csv")?
        .split(',')
        .collect();
    let col = |name: &str| -> Result<usize, String> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| format!("column `{name}` not in header {header:?}"))
    };
    let xi = col(spec.x_column)?;
    let yi = col(spec.y_column)?;
    let gi = spec.group_column.map(col).transpose()?;

    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            continue;
        }
        let (Ok(x), Ok(y)) = (fields[xi].parse::<f64>(), fields[yi].parse::<f64>()) else {
            continue;
        };
        if spec.log_log && (x <= 0.0 || y <= 0.0) {
            continue;
        }
        let key = gi.map(|g| fields[g].to_string()).unwrap_or_default();
        series.entry(key).or_default().push((x, y));
    }
    if series.values().all(|s| s.is_empty()) {
        return Err("no plottable points".into());
    }

    let tf = |v: f64| if spec.log_log { v.ln() } else { v };
    let all: Vec<(f64, f64)> = series
        .values()
        .flatten()
        .map(|&(x, y)| (tf(x), tf(y)))
        .collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |v: f64| MARGIN + (tf(v) - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (tf(v) - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        spec.title
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    let axis_label = |v: f64| -> String {
        let raw = if spec.log_log { v.exp() } else { v };
        format!("{raw:.3}")
    };
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let px = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / 4.0;
        let py = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"10\">{}</text>\n",
            HEIGHT - MARGIN + 16.0,
            axis_label(fx)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{py}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"10\">{}</text>\n",
            MARGIN - 6.0,
            axis_label(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0,
        spec.x_column,
        if spec.log_log { " (log)" } else { "" }
    ));

    for (si, (name, points)) in series.iter_mut().enumerate() {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let color = COLORS[si % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in points.iter() {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        if !name.is_empty() {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 fill=\"{color}\">{name}</text>\n",
                WIDTH - MARGIN + 4.0,
                MARGIN + 14.0 * si as f64
            ));
        }
    }
    svg.push_str("</svg>\n");
    std::fs::write(svg_path, svg).map_err(|e| format!("write svg: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_a_loglog_plot() {
        let dir = std::env::temp_dir().join("emlab_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("data.csv");
        std::fs::write(
            &csv,
            "n,p,gamma,metric,value,stderr\n16,2,0.05,sup_lp,0.5,0.01\n32,2,0.05,sup_lp,0.25,0.01\n64,2,0.05,sup_lp,0.125,0.01\n",
        )
        .unwrap();
        let svg = dir.join("data.svg");
        plot_csv(
            &csv,
            &svg,
            &PlotSpec {
                x_column: "n",
                y_column: "value",
                group_column: Some("metric"),
                log_log: true,
                title: "rate",
            },
        )
        .unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("polyline"));
    }
}
