//! The per-session metrics CSV.

use replisync_core::metrics::{weighted_total, SessionMetrics};

use crate::error::CliError;

pub const COLUMNS: [&str; 10] = [
    "session_id",
    "condition",
    "seed",
    "total_s",
    "one_handed_s",
    "two_handed_s",
    "simple",
    "critical",
    "repetition",
    "weighted_total",
];

pub fn write_metrics(rows: &[SessionMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("metrics rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is UTF-8")
}

/// Parses and validates a metrics CSV. Errors name the offending data row
/// (1-based, header excluded).
pub fn read_metrics(text: &str) -> Result<Vec<SessionMetrics>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::config(format!("metrics CSV header: {e}")))?;
    if headers.iter().ne(COLUMNS) {
        return Err(CliError::config(format!("metrics CSV header must be {}", COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize::<SessionMetrics>().enumerate() {
        let row = i + 1;
        let m = rec.map_err(|e| CliError::config(format!("metrics CSV row {row}: {e}")))?;
        let times = [m.total_s, m.one_handed_s, m.two_handed_s];
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(CliError::config(format!("metrics CSV row {row}: times must be finite and non-negative")));
        }
        if m.weighted_total != weighted_total(&m.counts()) {
            return Err(CliError::config(format!("metrics CSV row {row}: weighted_total does not match the counts")));
        }
        rows.push(m);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use replisync_core::scenario::Condition;

    fn row(id: &str) -> SessionMetrics {
        SessionMetrics {
            session_id: id.into(),
            condition: Condition::Tablet,
            seed: 3,
            total_s: 700.25,
            one_handed_s: 180.0,
            two_handed_s: 140.5,
            simple: 2,
            critical: 1,
            repetition: 0,
            weighted_total: 4,
        }
    }

    #[test]
    fn header_and_round_trip() {
        let text = write_metrics(&[row("a"), row("b")]);
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        assert_eq!(read_metrics(&text).unwrap(), vec![row("a"), row("b")]);
    }

    #[test]
    fn malformed_row_is_named() {
        let mut text = write_metrics(&[row("a")]);
        text.push_str("b,tablet,1,abc,0,0,0,0,0,0\n");
        let err = read_metrics(&text).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn inconsistent_weighting_is_rejected() {
        let mut r = row("a");
        r.weighted_total = 3;
        let err = read_metrics(&write_metrics(&[r])).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("weighted_total"), "{err}");
    }
}
