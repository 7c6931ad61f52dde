//! Report bundle: machine-readable results, a text summary, a ROC scatter
//! with confidence bars, and the pairwise p-value table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::confusion::RunResult;
use super::stats::{anova_one_way, confidence_interval, pairwise_t_tests, AnovaResult};
use crate::error::{Error, Result};
use crate::media_io::artifact::{tag, Artifact, PayloadReader, PayloadWriter};

pub const TEST_NOTE: &str =
    "pairwise tests: two-sided Welch t-tests (unequal variances), unpaired across folds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Confidence level of the ROC error bars is `1 - alpha`.
    pub alpha: f64,
    /// Pairwise tests run only when the ANOVA p-value is below this.
    pub anova_gate: f64,
    /// p-values below this are marked significant.
    pub significance: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            alpha: 0.05,
            anova_gate: 0.05,
            significance: 0.05,
        }
    }
}

/// Everything needed to render a report; stored as an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub options: ReportOptions,
    pub results: Vec<RunResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationSummary {
    pub configuration_id: String,
    pub folds: usize,
    pub mean_tpr: Option<f64>,
    pub mean_fpr: Option<f64>,
    pub tpr_ci: Option<(f64, f64)>,
    pub fpr_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisTests {
    pub anova_f: Option<f64>,
    pub anova_p: Option<f64>,
    /// `None` when the ANOVA gate was not passed or the tests could not run.
    pub pairwise: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportStats {
    pub note: &'static str,
    pub configurations: Vec<ConfigurationSummary>,
    pub tpr: AxisTests,
    pub fpr: AxisTests,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub results_json: String,
    pub summary: String,
    pub roc_svg: String,
    pub pvalues_csv: String,
}

impl ReportBundle {
    pub const FILES: [&'static str; 4] = ["results.json", "summary.txt", "roc.svg", "pvalues.csv"];

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let contents = [&self.results_json, &self.summary, &self.roc_svg, &self.pvalues_csv];
        for (name, text) in Self::FILES.iter().zip(contents) {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn axis_tests(groups: Vec<Vec<f64>>, options: &ReportOptions) -> AxisTests {
    let anova: Option<AnovaResult> = anova_one_way(&groups).ok();
    let pairwise = match anova {
        Some(a) if a.p < options.anova_gate => pairwise_t_tests(&groups).ok(),
        _ => None,
    };
    AxisTests {
        anova_f: anova.map(|a| a.f),
        anova_p: anova.map(|a| a.p),
        pairwise,
    }
}

pub fn report_stats(report: &EvalReport) -> ReportStats {
    let opts = &report.options;
    let configurations = report
        .results
        .iter()
        .map(|r| {
            let (tprs, fprs) = (r.tprs(), r.fprs());
            ConfigurationSummary {
                configuration_id: r.configuration_id.clone(),
                folds: r.folds.len(),
                mean_tpr: mean(&tprs),
                mean_fpr: mean(&fprs),
                tpr_ci: confidence_interval(&tprs, opts.alpha).ok(),
                fpr_ci: confidence_interval(&fprs, opts.alpha).ok(),
            }
        })
        .collect();
    ReportStats {
        note: TEST_NOTE,
        configurations,
        tpr: axis_tests(report.results.iter().map(RunResult::tprs).collect(), opts),
        fpr: axis_tests(report.results.iter().map(RunResult::fprs).collect(), opts),
    }
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{:.1} %", 100.0 * v))
}

fn summary(report: &EvalReport, stats: &ReportStats) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", TEST_NOTE);
    let _ = writeln!(
        s,
        "# confidence intervals at alpha = {}; pairwise tests gated on ANOVA p < {}",
        report.options.alpha, report.options.anova_gate
    );
    for c in &stats.configurations {
        let _ = writeln!(s);
        let _ = writeln!(s, "configuration {} ({} folds)", c.configuration_id, c.folds);
        let _ = writeln!(s, "{:<20}{:>12}{:>12}", "", "positive", "negative");
        let _ = writeln!(
            s,
            "{:<20}{:>12}{:>12}",
            "actual positive",
            percent(c.mean_tpr),
            percent(c.mean_tpr.map(|t| 1.0 - t))
        );
        let _ = writeln!(
            s,
            "{:<20}{:>12}{:>12}",
            "actual negative",
            percent(c.mean_fpr),
            percent(c.mean_fpr.map(|f| 1.0 - f))
        );
        let ci = |x: Option<(f64, f64)>| x.map_or_else(|| "n/a".to_string(), |(a, b)| format!("[{a:.4}, {b:.4}]"));
        let _ = writeln!(s, "tpr CI {}  fpr CI {}", ci(c.tpr_ci), ci(c.fpr_ci));
    }
    let _ = writeln!(s);
    for (name, axis) in [("tpr", &stats.tpr), ("fpr", &stats.fpr)] {
        match (axis.anova_f, axis.anova_p) {
            (Some(f), Some(p)) => {
                let _ = writeln!(
                    s,
                    "ANOVA on {name}: F = {f:.4}, p = {p:.4e}{}",
                    if axis.pairwise.is_some() { "" } else { " (pairwise tests not run)" }
                );
            }
            _ => {
                let _ = writeln!(s, "ANOVA on {name}: not applicable (needs 2 configurations with 2 folds each)");
            }
        }
    }
    s
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 56.0;

fn svg(stats: &ReportStats) -> String {
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let px = |fpr: f64| SVG_MARGIN + fpr.clamp(0.0, 1.0) * span;
    let py = |tpr: f64| SVG_SIZE - SVG_MARGIN - tpr.clamp(0.0, 1.0) * span;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>"#);
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
            px(v),
            py(0.0),
            px(v),
            py(1.0)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="0.5"/>"##,
            px(0.0),
            py(v),
            px(1.0),
            py(v)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{v:.1}</text>"#,
            px(v),
            py(0.0) + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v:.1}</text>"#,
            px(0.0) - 4.0,
            py(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{SVG_MARGIN}" y="{SVG_MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">false positive rate</text>"#,
        SVG_SIZE / 2.0,
        SVG_SIZE - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">true positive rate</text>"#,
        SVG_SIZE / 2.0,
        SVG_SIZE / 2.0
    );
    for (i, c) in stats.configurations.iter().enumerate() {
        let (Some(t), Some(f)) = (c.mean_tpr, c.mean_fpr) else {
            continue;
        };
        let (x, y) = (px(f), py(t));
        if let Some((lo, hi)) = c.fpr_ci {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                px(lo),
                px(hi)
            );
        }
        if let Some((lo, hi)) = c.tpr_ci {
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                py(lo),
                py(hi)
            );
        }
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
            x + 5.0,
            y - 5.0,
            i + 1
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10">{} {}</text>"#,
            px(0.55),
            py(0.3) + 12.0 * i as f64,
            i + 1,
            xml_escape(&c.configuration_id)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn csv_cell(p: Option<f64>, significance: f64) -> String {
    match p {
        None => "-".into(),
        Some(p) => format!("{p:.4}{}", if p < significance { "*" } else { "" }),
    }
}

fn pvalues_csv(stats: &ReportStats, significance: f64) -> String {
    let n = stats.configurations.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["configuration".to_string()];
    for axis in ["tpr", "fpr"] {
        header.extend((1..=n).map(|j| format!("{axis} {j}")));
    }
    w.write_record(&header).expect("in-memory write");
    for (i, c) in stats.configurations.iter().enumerate() {
        let mut row = vec![format!("{} {}", i + 1, c.configuration_id)];
        for axis in [&stats.tpr, &stats.fpr] {
            for j in 0..n {
                row.push(match &axis.pairwise {
                    Some(m) => csv_cell(m[i][j], significance),
                    None => "not tested".into(),
                });
            }
        }
        w.write_record(&row).expect("in-memory write");
    }
    let mut last = vec!["model p-value".to_string()];
    for axis in [&stats.tpr, &stats.fpr] {
        last.push(axis.anova_p.map_or_else(|| "-".into(), |p| format!("{p:.4e}")));
        last.extend((1..n).map(|_| String::new()));
    }
    w.write_record(&last).expect("in-memory write");
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!("# {TEST_NOTE}; * marks p < {significance}\n{body}")
}

pub fn render_report(report: &EvalReport) -> Result<ReportBundle> {
    if report.results.is_empty() {
        return Err(Error::Contract("a report needs at least one result".into()));
    }
    let stats = report_stats(report);
    #[derive(Serialize)]
    struct Json<'a> {
        options: &'a ReportOptions,
        results: &'a [RunResult],
        stats: &'a ReportStats,
    }
    let results_json = serde_json::to_string_pretty(&Json {
        options: &report.options,
        results: &report.results,
        stats: &stats,
    })
    .map_err(|e| Error::Invariant(format!("report serialization: {e}")))?;
    Ok(ReportBundle {
        results_json,
        summary: summary(report, &stats),
        roc_svg: svg(&stats),
        pvalues_csv: pvalues_csv(&stats, report.options.significance),
    })
}

impl Artifact for EvalReport {
    const TAG: u32 = tag::EVAL_REPORT;
    const NAME: &'static str = "evaluation report";

    fn encode(&self, w: &mut PayloadWriter) {
        w.f64(self.options.alpha);
        w.f64(self.options.anova_gate);
        w.f64(self.options.significance);
        w.dim(self.results.len());
        for r in &self.results {
            w.str(&r.configuration_id);
            w.dim(r.folds.len());
            for cm in &r.folds {
                w.f64s(&[cm.tp, cm.fn_, cm.fp, cm.tn]);
            }
        }
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let options = ReportOptions {
            alpha: r.f64()?,
            anova_gate: r.f64()?,
            significance: r.f64()?,
        };
        let n = r.dim()?;
        let mut results = Vec::new();
        for _ in 0..n {
            let configuration_id = r.str()?;
            let k = r.dim()?;
            let mut folds = Vec::new();
            for _ in 0..k {
                let c = r.f64s(4)?;
                folds.push(super::ConfusionMatrix::new(c[0], c[1], c[2], c[3]).map_err(|e| Error::Corruption(e.to_string()))?);
            }
            results.push(RunResult { configuration_id, folds });
        }
        Ok(EvalReport { options, results })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ConfusionMatrix;
    use crate::media_io::artifact::{from_bytes, to_bytes};

    fn cm(tp: f64, fn_: f64, fp: f64, tn: f64) -> ConfusionMatrix {
        ConfusionMatrix::new(tp, fn_, fp, tn).unwrap()
    }

    #[test]
    fn single_run_single_fold() {
        let report = EvalReport {
            options: ReportOptions::default(),
            results: vec![RunResult {
                configuration_id: "stip".into(),
                folds: vec![cm(8.0, 2.0, 1.0, 9.0)],
            }],
        };
        let b = render_report(&report).unwrap();
        assert!(b.summary.contains("configuration stip (1 folds)"));
        assert!(b.summary.contains("80.0 %"));
        assert_eq!(b.roc_svg.matches("<circle").count(), 1);
        assert!(b.roc_svg.starts_with("<?xml") && b.roc_svg.contains(r#"version="1.1""#));
        assert!(b.pvalues_csv.contains("not tested"));
        let v: serde_json::Value = serde_json::from_str(&b.results_json).unwrap();
        assert_eq!(v["results"][0]["folds"][0]["fn"], 2.0);
    }

    #[test]
    fn table_proportions_render_as_percentages() {
        let report = EvalReport {
            options: ReportOptions::default(),
            results: vec![RunResult {
                configuration_id: "stip".into(),
                folds: vec![cm(365.2, 34.8, 30.0, 370.0); 5],
            }],
        };
        let s = render_report(&report).unwrap().summary;
        let positive = s.lines().find(|l| l.starts_with("actual positive")).unwrap();
        let negative = s.lines().find(|l| l.starts_with("actual negative")).unwrap();
        assert!(positive.contains("91.3 %") && positive.contains("8.7 %"), "{positive}");
        assert!(negative.contains("7.5 %") && negative.contains("92.5 %"), "{negative}");
    }

    #[test]
    fn eight_configurations_give_an_eight_by_eight_table() {
        let results: Vec<RunResult> = (0..8)
            .map(|c| RunResult {
                configuration_id: format!("config {c}"),
                folds: (0..5)
                    .map(|f| {
                        let tp = 10.0 + 3.0 * c as f64 + (f % 3) as f64;
                        cm(tp, 40.0 - tp, 12.0 - c as f64 + (f % 2) as f64, 30.0)
                    })
                    .collect(),
            })
            .collect();
        let report = EvalReport {
            options: ReportOptions::default(),
            results,
        };
        let stats = report_stats(&report);
        let m = stats.tpr.pairwise.as_ref().expect("ANOVA should pass the gate");
        assert_eq!((m.len(), m[0].len()), (8, 8));
        assert!((0..8).all(|i| m[i][i].is_none()));
        let csv = render_report(&report).unwrap().pvalues_csv;
        let mut lines = csv.lines().skip(1);
        assert_eq!(lines.next().unwrap().split(',').count(), 17);
        assert_eq!(csv.lines().count(), 1 + 1 + 8 + 1);
        assert!(csv.contains('*'));
        assert!(render_report(&report).unwrap().summary.contains("Welch"));
    }

    #[test]
    fn gate_blocks_pairwise_tests() {
        let same = |id: &str| RunResult {
            configuration_id: id.into(),
            folds: vec![cm(8.0, 2.0, 1.0, 9.0), cm(7.0, 3.0, 2.0, 8.0), cm(9.0, 1.0, 1.0, 9.0)],
        };
        let report = EvalReport {
            options: ReportOptions::default(),
            results: vec![same("a"), same("b")],
        };
        let stats = report_stats(&report);
        assert_eq!(stats.tpr.anova_p, Some(1.0));
        assert!(stats.tpr.pairwise.is_none());
    }

    #[test]
    fn report_round_trips() {
        let report = EvalReport {
            options: ReportOptions::default(),
            results: vec![RunResult {
                configuration_id: "x".into(),
                folds: vec![cm(365.2, 34.8, 30.0, 370.0), cm(1.0, 0.0, 0.0, 1.0)],
            }],
        };
        assert_eq!(from_bytes::<EvalReport>(&to_bytes(&report)).unwrap(), report);
    }
}
