//! Static SVG rendering of excess risk against sample size: log-scale y,
//! one series per method, error bars of plus/minus one standard deviation.

use std::fs;
use std::path::Path;

use super::{AggregateRow, ExperimentError, Method};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 40.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

fn method_color(method: Method) -> &'static str {
    match method {
        Method::DpRgd => "#1f77b4",
        Method::DpPgd => "#d62728",
        Method::DpFm => "#2ca02c",
        Method::NonPrivate => "#7f7f7f",
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    log_y_min: f64,
    log_y_max: f64,
}

impl Frame {
    fn x(&self, n: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1.0);
        MARGIN_LEFT + (n - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, value: f64) -> f64 {
        let lv = value.max(1e-300).log10();
        let span = (self.log_y_max - self.log_y_min).max(1e-9);
        HEIGHT
            - MARGIN_BOTTOM
            - (lv - self.log_y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Renders the aggregate rows as an SVG file. Rows with non-finite or
/// non-positive means are skipped (the y axis is logarithmic).
pub fn plot_excess_risk_svg(
    aggregates: &[AggregateRow],
    title: &str,
    path: &Path,
) -> Result<(), ExperimentError> {
    let usable: Vec<&AggregateRow> = aggregates
        .iter()
        .filter(|a| a.mean.is_finite() && a.mean > 0.0)
        .collect();
    if usable.is_empty() {
        return Err(ExperimentError::Config(
            "no positive finite aggregate values to plot".into(),
        ));
    }

    let x_min = usable.iter().map(|a| a.n).min().unwrap() as f64;
    let x_max = usable.iter().map(|a| a.n).max().unwrap() as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in &usable {
        let low = (a.mean - a.std).max(a.mean * 1e-2);
        let high = a.mean + a.std;
        lo = lo.min(low);
        hi = hi.max(high);
    }
    let frame = Frame {
        x_min,
        x_max,
        log_y_min: lo.log10().floor(),
        log_y_max: hi.log10().ceil().max(lo.log10().floor() + 1.0),
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" font-size=\"18\" font-family=\"sans-serif\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));

    // Decade gridlines and labels on the log-y axis.
    let mut decade = frame.log_y_min as i64;
    while decade <= frame.log_y_max as i64 {
        let v = 10f64.powi(decade as i32);
        let y = frame.y(v);
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">1e{decade}</text>\n",
            x0 - 8.0,
            y + 4.0
        ));
        decade += 1;
    }

    // X ticks at the observed sample sizes.
    let mut ns: Vec<usize> = usable.iter().map(|a| a.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for n in &ns {
        let x = frame.x(*n as f64);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">{n}</text>\n",
            y0 + 22.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" font-family=\"sans-serif\" text-anchor=\"middle\">sample size n</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 18.0
    ));
    svg.push_str(&format!(
        "<text x=\"22\" y=\"{}\" font-size=\"14\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 22 {})\">excess risk</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    // Series per method.
    let mut methods: Vec<Method> = usable.iter().map(|a| a.method).collect();
    methods.sort();
    methods.dedup();
    for (series_idx, method) in methods.iter().enumerate() {
        let color = method_color(*method);
        let mut points: Vec<&AggregateRow> = usable
            .iter()
            .copied()
            .filter(|a| a.method == *method)
            .collect();
        points.sort_by_key(|a| a.n);
        let path_points: Vec<String> = points
            .iter()
            .map(|a| format!("{:.2},{:.2}", frame.x(a.n as f64), frame.y(a.mean)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path_points.join(" ")
        ));
        for a in &points {
            let x = frame.x(a.n as f64);
            let y = frame.y(a.mean);
            // Error bars clamped to stay on the logarithmic canvas.
            let upper = frame.y(a.mean + a.std);
            let lower = frame.y((a.mean - a.std).max(a.mean * 1e-2));
            svg.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{lower}\" x2=\"{x}\" y2=\"{upper}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
            ));
            svg.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"{color}\"/>\n"
            ));
        }
        // Legend.
        let ly = MARGIN_TOP + 18.0 * series_idx as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            x1 - 150.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" font-family=\"sans-serif\">{method}</text>\n",
            x1 - 132.0,
            ly + 11.0
        ));
    }

    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn renders_a_plot_file() {
        let aggs = vec![
            AggregateRow {
                experiment: ExperimentKind::Pca,
                method: Method::DpRgd,
                n: 1000,
                mean: 1e-3,
                std: 2e-4,
            },
            AggregateRow {
                experiment: ExperimentKind::Pca,
                method: Method::DpRgd,
                n: 2000,
                mean: 5e-4,
                std: 1e-4,
            },
            AggregateRow {
                experiment: ExperimentKind::Pca,
                method: Method::DpPgd,
                n: 1000,
                mean: 3e-3,
                std: 2e-4,
            },
        ];
        let dir = std::env::temp_dir().join("dp_riemopt_plot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("plot.svg");
        plot_excess_risk_svg(&aggs, "excess risk", &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("polyline"));
        assert!(text.contains("dp-rgd"));
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = std::env::temp_dir();
        assert!(plot_excess_risk_svg(&[], "x", &dir.join("nope.svg")).is_err());
    }
}
