//! Analysis of a metrics table: group summaries, the normality-branched
//! two-group tests and the improvement percentages, rendered as markdown
//! and CSV.

use std::fmt::Write as _;

use replisync_core::metrics::{percent_improvement, weighted_total, ErrorCounts, SessionMetrics};
use replisync_core::scenario::Condition;
use replisync_core::stats::{compare, mean_sd, Comparison, GroupSummary, Method, Sample, NORMALITY_ALPHA};

/// Significance level used to flag a difference in the report.
pub const REPORT_ALPHA: f64 = 0.05;
/// Stricter level, marked separately.
pub const STRICT_ALPHA: f64 = 0.01;

/// A numeric column of the metrics table.
#[derive(Debug, Clone, Copy)]
pub struct Measure {
    pub column: &'static str,
    pub label: &'static str,
    pub get: fn(&SessionMetrics) -> f64,
}

pub const MEASURES: [Measure; 7] = [
    Measure { column: "total_s", label: "Total time (s)", get: |m| m.total_s },
    Measure { column: "one_handed_s", label: "One-handed blocks (s)", get: |m| m.one_handed_s },
    Measure { column: "two_handed_s", label: "Two-handed blocks (s)", get: |m| m.two_handed_s },
    Measure { column: "simple", label: "Simple errors", get: |m| m.simple as f64 },
    Measure { column: "critical", label: "Critical errors", get: |m| m.critical as f64 },
    Measure { column: "repetition", label: "Repetitions", get: |m| m.repetition as f64 },
    Measure { column: "weighted_total", label: "Weighted errors", get: |m| m.weighted_total as f64 },
];

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub condition: Condition,
    pub sessions: usize,
    /// Mean and SD per entry of [`MEASURES`]; `None` below two sessions.
    pub summaries: Vec<Option<GroupSummary>>,
    pub errors: ErrorCounts,
    pub weighted: u64,
    pub average_weighted: f64,
}

impl GroupStats {
    fn summary(&self, column: &str) -> Option<GroupSummary> {
        MEASURES.iter().position(|m| m.column == column).and_then(|i| self.summaries[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestRow {
    pub measure: Measure,
    pub outcome: Result<Comparison, String>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.column == other.column
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub label: &'static str,
    pub baseline: f64,
    pub treatment: f64,
    /// Percent reduction of the HMD figure relative to the tablet figure.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub groups: Vec<GroupStats>,
    /// Empty unless both conditions are present.
    pub tests: Vec<TestRow>,
    pub improvements: Vec<Improvement>,
}

fn group(condition: Condition, rows: &[&SessionMetrics]) -> GroupStats {
    let summaries = MEASURES
        .iter()
        .map(|m| {
            let values: Vec<f64> = rows.iter().map(|r| (m.get)(r)).collect();
            Sample::new(m.column, values).ok().and_then(|s| mean_sd(&s).ok())
        })
        .collect();
    let errors = rows.iter().fold(ErrorCounts::default(), |acc, r| acc + r.counts());
    let weighted = weighted_total(&errors);
    GroupStats {
        condition,
        sessions: rows.len(),
        summaries,
        errors,
        weighted,
        average_weighted: weighted as f64 / rows.len() as f64,
    }
}

fn improvement(label: &'static str, baseline: f64, treatment: f64) -> Improvement {
    let percent = percent_improvement(baseline, treatment).ok().map(|f| 100.0 * f);
    Improvement { label, baseline, treatment, percent }
}

pub fn analyze(rows: &[SessionMetrics]) -> Report {
    let mut groups = Vec::new();
    for c in [Condition::Tablet, Condition::Hmd] {
        let members: Vec<&SessionMetrics> = rows.iter().filter(|r| r.condition == c).collect();
        if !members.is_empty() {
            groups.push(group(c, &members));
        }
    }
    let (mut tests, mut improvements) = (Vec::new(), Vec::new());
    if let [t, h] = groups.as_slice() {
        for m in MEASURES {
            let values = |c: Condition| -> Vec<f64> { rows.iter().filter(|r| r.condition == c).map(m.get).collect() };
            let outcome = Sample::new("tablet", values(Condition::Tablet))
                .and_then(|a| Sample::new("hmd", values(Condition::Hmd)).map(|b| (a, b)))
                .and_then(|(a, b)| compare(&a, &b, NORMALITY_ALPHA))
                .map_err(|e| e.to_string());
            tests.push(TestRow { measure: m, outcome });
        }
        let mean = |g: &GroupStats, col: &str| g.summary(col).map_or(f64::NAN, |s| s.mean);
        improvements.push(improvement("Total time", mean(t, "total_s"), mean(h, "total_s")));
        improvements.push(improvement("One-handed block time", mean(t, "one_handed_s"), mean(h, "one_handed_s")));
        improvements.push(improvement("Two-handed block time", mean(t, "two_handed_s"), mean(h, "two_handed_s")));
        improvements.push(improvement("Weighted errors per session", t.average_weighted, h.average_weighted));
        improvements.push(improvement("Simple errors", t.errors.simple as f64, h.errors.simple as f64));
        improvements.push(improvement("Critical errors", t.errors.critical as f64, h.errors.critical as f64));
    }
    Report { groups, tests, improvements }
}

impl Report {
    /// The between-group test for `column`, if it ran.
    pub fn test(&self, column: &str) -> Option<&Comparison> {
        self.tests.iter().find(|t| t.measure.column == column).and_then(|t| t.outcome.as_ref().ok())
    }
}

fn title(c: Condition) -> &'static str {
    match c {
        Condition::Tablet => "Tablet",
        Condition::Hmd => "HMD",
    }
}

fn fmt_p(p: f64) -> String {
    if p < 1e-6 {
        "< 1e-6".into()
    } else if p < 1e-3 {
        format!("{p:.1e}")
    } else {
        format!("{p:.4}")
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Anova => "ANOVA",
        Method::MannWhitney => "Mann-Whitney",
    }
}

fn stars(p: f64) -> &'static str {
    if p < STRICT_ALPHA {
        "**"
    } else if p < REPORT_ALPHA {
        "*"
    } else {
        ""
    }
}

/// Row label and how to fill its cell for one group.
type ErrorLine = (&'static str, fn(&GroupStats) -> String);

fn row(out: &mut String, cells: &[String]) {
    writeln!(out, "| {} |", cells.join(" | ")).unwrap();
}

pub fn markdown(report: &Report) -> String {
    let mut out = String::from("# Session analysis\n\n## Groups\n\n");
    let mut head = vec![String::new()];
    head.extend(report.groups.iter().map(|g| title(g.condition).to_string()));
    row(&mut out, &head);
    row(&mut out, &vec!["---".to_string(); head.len()]);
    let mut sessions = vec!["Sessions".to_string()];
    sessions.extend(report.groups.iter().map(|g| g.sessions.to_string()));
    row(&mut out, &sessions);
    for (i, m) in MEASURES.iter().enumerate().take(3) {
        let mut cells = vec![format!("{}, mean (SD)", m.label)];
        cells.extend(report.groups.iter().map(|g| match g.summaries[i] {
            Some(s) => format!("{:.2} ({:.2})", s.mean, s.sd),
            None => "n/a".into(),
        }));
        row(&mut out, &cells);
    }

    out.push_str("\n## Errors\n\n");
    row(&mut out, &head.iter().enumerate().map(|(i, h)| if i == 0 { "Errors".into() } else { h.clone() }).collect::<Vec<_>>());
    row(&mut out, &vec!["---".to_string(); head.len()]);
    let lines: [ErrorLine; 6] = [
        ("Simple", |g| g.errors.simple.to_string()),
        ("Critical", |g| g.errors.critical.to_string()),
        ("Repetition", |g| g.errors.repetition.to_string()),
        ("Total", |g| g.errors.raw_total().to_string()),
        ("Total with ponderation", |g| g.weighted.to_string()),
        ("Average with ponderation", |g| format!("{:.2}", g.average_weighted)),
    ];
    for (label, f) in lines {
        let mut cells = vec![label.to_string()];
        cells.extend(report.groups.iter().map(f));
        row(&mut out, &cells);
    }

    if report.tests.is_empty() {
        out.push_str("\nOnly one condition present; no between-group tests.\n");
        return out;
    }
    out.push_str("\n## Tests\n\n");
    out.push_str("Each measurement is checked for normality in both groups (Shapiro-Wilk, alpha 0.05). ");
    out.push_str("ANOVA is used when neither group rejects normality, Mann-Whitney otherwise. ");
    out.push_str("`*` marks p < 0.05 and `**` marks p < 0.01.\n\n");
    row(
        &mut out,
        &["Measurement", "SW p (Tablet)", "SW p (HMD)", "Test", "Statistic", "p", ""].map(String::from),
    );
    row(&mut out, &vec!["---".to_string(); 7]);
    for t in &report.tests {
        let cells = match &t.outcome {
            Ok(c) => {
                let sw = |r: &Option<replisync_core::stats::TestResult>| r.as_ref().map_or("n/a".into(), |r| fmt_p(r.p_value));
                let stat = match c.test.df {
                    Some((d1, d2)) => format!("{}({d1}, {d2}) = {:.3}", c.test.statistic_name.as_str(), c.test.statistic),
                    None => format!("{} = {:.1}", c.test.statistic_name.as_str(), c.test.statistic),
                };
                vec![
                    t.measure.label.to_string(),
                    sw(&c.normality_a),
                    sw(&c.normality_b),
                    method_name(c.method).to_string(),
                    stat,
                    fmt_p(c.test.p_value),
                    stars(c.test.p_value).to_string(),
                ]
            }
            Err(e) => vec![t.measure.label.to_string(), "n/a".into(), "n/a".into(), format!("not testable: {e}"), String::new(), String::new(), String::new()],
        };
        row(&mut out, &cells);
    }

    out.push_str("\n## Improvements (HMD relative to Tablet)\n\n");
    for i in &report.improvements {
        match i.percent {
            Some(p) => writeln!(out, "- {}: {:.2} % lower ({:.2} vs {:.2})", i.label, p, i.treatment, i.baseline).unwrap(),
            None => writeln!(out, "- {}: n/a (tablet baseline is zero)", i.label).unwrap(),
        }
    }
    out
}

/// One line per between-group test.
pub fn tests_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "measurement", "method", "statistic_name", "statistic", "df1", "df2", "p_value", "exact", "sw_w_tablet",
        "sw_p_tablet", "sw_w_hmd", "sw_p_hmd",
    ])
    .unwrap();
    let num = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for t in &report.tests {
        let Ok(c) = &t.outcome else {
            w.write_record([t.measure.column, "", "", "", "", "", "", "", "", "", "", ""]).unwrap();
            continue;
        };
        let rec = [
            t.measure.column.to_string(),
            method_name(c.method).to_string(),
            c.test.statistic_name.as_str().to_string(),
            c.test.statistic.to_string(),
            num(c.test.df.map(|d| d.0)),
            num(c.test.df.map(|d| d.1)),
            c.test.p_value.to_string(),
            c.test.exact.to_string(),
            num(c.normality_a.as_ref().map(|r| r.statistic)),
            num(c.normality_a.as_ref().map(|r| r.p_value)),
            num(c.normality_b.as_ref().map(|r| r.statistic)),
            num(c.normality_b.as_ref().map(|r| r.p_value)),
        ];
        w.write_record(&rec).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}
