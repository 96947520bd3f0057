use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not be carried out meaningfully, e.g. no clean scaling window.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Outcome of one check: a fitted slope or an empirical constant against its reference.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub check_id: String,
    pub params_json: String,
    pub measured: f64,
    pub predicted: f64,
    /// |measured - predicted| / |predicted|, or the absolute deviation when predicted = 0.
    pub rel_dev: f64,
    pub ensemble: usize,
    pub seed: Option<u64>,
    pub grid: String,
    pub verdict: Verdict,
    /// Fit window (t_lo, t_hi) for decay fits.
    pub window: Option<(f64, f64)>,
    /// (t, value) samples behind the measurement.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

impl RatioReport {
    pub fn new(check_id: impl Into<String>, measured: f64, predicted: f64) -> Self {
        Self {
            check_id: check_id.into(),
            params_json: "{}".into(),
            measured,
            predicted,
            rel_dev: deviation(measured, predicted),
            ensemble: 1,
            seed: None,
            grid: String::new(),
            verdict: Verdict::Inconclusive,
            window: None,
            samples: Vec::new(),
        }
    }

    /// PASS when rel_dev <= tol, FAIL otherwise (or when the measurement is not finite).
    pub fn judge(mut self, tol: f64) -> Self {
        self.verdict = if self.measured.is_finite() && self.rel_dev <= tol { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn with_params<T: Serialize>(mut self, params: &T) -> Self {
        self.params_json = serde_json::to_string(params).unwrap_or_else(|_| "{}".into());
        self
    }

    pub fn csv_row(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        format!(
            "{},{},{:e},{:e},{:e},{},{},{},{}",
            quote(&self.check_id),
            quote(&self.params_json),
            self.measured,
            self.predicted,
            self.rel_dev,
            self.ensemble,
            seed,
            quote(&self.grid),
            self.verdict
        )
    }
}

fn deviation(measured: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        measured.abs()
    } else {
        (measured - predicted).abs() / predicted.abs()
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_header() -> &'static str {
    "check_id,params_json,measured,predicted,rel_dev,ensemble,seed,grid,verdict"
}

pub fn write_csv(path: &Path, reports: &[RatioReport]) -> Result<()> {
    let mut s = String::from(csv_header());
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Log-log plot of the samples with the fitted line t -> c t^slope over the fit window.
pub fn write_svg_loglog(path: &Path, title: &str, samples: &[(f64, f64)], slope: f64, window: Option<(f64, f64)>) -> Result<()> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.log10(), p.1.log10())).collect();
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    let _ = writeln!(svg, "<text x=\"{pad}\" y=\"24\" font-family=\"monospace\" font-size=\"13\">{}</text>", xml_escape(title));
    if pts.len() >= 2 {
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * pad);
        let _ = writeln!(
            svg,
            "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let data: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"{}\"/>", data.join(" "));
        if let Some((lo, hi)) = window {
            let (lo, hi) = (lo.log10(), hi.log10());
            // anchor the fitted line at the sample nearest the window start
            let anchor = pts.iter().min_by(|a, b| (a.0 - lo).abs().total_cmp(&(b.0 - lo).abs())).copied().unwrap();
            let y = |x: f64| anchor.1 + slope * (x - anchor.0);
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\" points=\"{:.2},{:.2} {:.2},{:.2}\"/>",
                sx(lo),
                sy(y(lo)),
                sx(hi),
                sy(y(hi))
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{pad}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">log10 t in [{x0:.2}, {x1:.2}], log10 norm in [{y0:.2}, {y1:.2}], slope {slope:.4}</text>",
            h - 15.0
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
