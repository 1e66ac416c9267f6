//! Event logs: `case_id,activity,timestamp,outcome` CSV with ISO-8601
//! timestamps.

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use indexmap::IndexMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub activity: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: String,
    /// Sorted by timestamp; ties keep file order.
    pub events: Vec<Event>,
    /// Terminal outcome in {0, 1}.
    pub outcome: f64,
}

impl Case {
    /// Position of the first occurrence of `activity`.
    pub fn first(&self, activity: &str) -> Option<usize> {
        self.events.iter().position(|e| e.activity == activity)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub cases: Vec<Case>,
    /// Set when the file had no `outcome` column and outcomes were
    /// defaulted.
    pub outcome_missing: bool,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// When a case has no outcome value, its outcome is 1 iff this activity
    /// occurs in it.
    pub accept_activity: Option<String>,
}

pub fn parse_timestamp(text: &str) -> Result<DateTime<Utc>> {
    let t = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(t) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(t, fmt) {
            return Ok(naive.and_utc());
        }
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(dt) = DateTime::parse_from_str(t, fmt) {
            return Ok(dt.with_timezone(&Utc));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
    }
    Err(Error::Timestamp(t.to_string()))
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn ingest_log(text: &str) -> Result<EventLog> {
    ingest_log_with(text, &IngestOptions::default())
}

pub fn ingest_log_with(text: &str, opts: &IngestOptions) -> Result<EventLog> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Format("event log has no header".into()));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Format(format!("event log header lacks `{name}`")))
    };
    let (c_case, c_act, c_ts) = (need("case_id")?, need("activity")?, need("timestamp")?);
    let c_out = col("outcome");

    struct Draft {
        events: Vec<Event>,
        outcome: Option<f64>,
    }
    let mut drafts: IndexMap<String, Draft> = IndexMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let field = |k: usize| record.get(k).unwrap_or("");
        let case_id = field(c_case).to_string();
        if case_id.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty case_id".into(),
            });
        }
        let timestamp = parse_timestamp(field(c_ts)).map_err(|_| Error::Parse {
            line,
            msg: format!("malformed timestamp `{}`", field(c_ts)),
        })?;
        let outcome = match c_out.map(field) {
            None | Some("") => None,
            Some("0") => Some(0.0),
            Some("1") => Some(1.0),
            Some(other) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("outcome must be 0, 1 or empty, got `{other}`"),
                })
            }
        };
        let draft = drafts.entry(case_id.clone()).or_insert(Draft {
            events: Vec::new(),
            outcome: None,
        });
        if let Some(o) = outcome {
            match draft.outcome {
                Some(prev) if prev != o => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("conflicting outcomes for case `{case_id}`"),
                    })
                }
                _ => draft.outcome = Some(o),
            }
        }
        draft.events.push(Event {
            activity: field(c_act).to_string(),
            timestamp,
        });
    }

    let cases = drafts
        .into_iter()
        .map(|(id, mut d)| {
            d.events.sort_by_key(|e| e.timestamp);
            let outcome = d.outcome.unwrap_or_else(|| match &opts.accept_activity {
                Some(acc) if d.events.iter().any(|e| &e.activity == acc) => 1.0,
                _ => 0.0,
            });
            Case {
                id,
                events: d.events,
                outcome,
            }
        })
        .collect();
    Ok(EventLog {
        cases,
        outcome_missing: c_out.is_none(),
    })
}

/// Writes the log with one row per event and the case outcome on every row.
pub fn write_log(log: &EventLog) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case_id", "activity", "timestamp", "outcome"])?;
    for case in &log.cases {
        let outcome = if case.outcome == 1.0 { "1" } else { "0" };
        for e in &case.events {
            w.write_record([
                case.id.as_str(),
                e.activity.as_str(),
                &format_timestamp(&e.timestamp),
                outcome,
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_with_header() {
        let log = ingest_log("case_id,activity,timestamp,outcome\n").unwrap();
        assert!(log.cases.is_empty());
        assert!(!log.outcome_missing);
    }

    #[test]
    fn single_case_sorted() {
        let text = "case_id,activity,timestamp,outcome\n\
                    c1,b,2020-01-01T02:00:00Z,1\n\
                    c1,a,2020-01-01T01:00:00Z,1\n\
                    c1,c,2020-01-01 03:00:00,1\n";
        let log = ingest_log(text).unwrap();
        assert_eq!(log.cases.len(), 1);
        let acts: Vec<&str> = log.cases[0].events.iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(acts, ["a", "b", "c"]);
        assert_eq!(log.cases[0].outcome, 1.0);
    }

    #[test]
    fn malformed_timestamp() {
        let text = "case_id,activity,timestamp,outcome\nc1,a,yesterday,0\n";
        assert!(matches!(ingest_log(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_outcome_column_defaults_to_zero() {
        let text = "case_id,activity,timestamp\nc1,a,2020-01-01,\n";
        let text = text.replace(",\n", "\n");
        let log = ingest_log(&text).unwrap();
        assert!(log.outcome_missing);
        assert_eq!(log.cases[0].outcome, 0.0);

        let opts = IngestOptions {
            accept_activity: Some("a".into()),
        };
        assert_eq!(ingest_log_with(&text, &opts).unwrap().cases[0].outcome, 1.0);
    }

    #[test]
    fn duplicate_rows_keep_file_order() {
        let text = "case_id,activity,timestamp,outcome\n\
                    c1,x,2020-01-01T00:00:00Z,\n\
                    c1,y,2020-01-01T00:00:00Z,\n\
                    c1,x,2020-01-01T00:00:00Z,\n";
        let log = ingest_log(text).unwrap();
        let acts: Vec<&str> = log.cases[0].events.iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(acts, ["x", "y", "x"]);
    }

    #[test]
    fn write_then_read() {
        let text = "case_id,activity,timestamp,outcome\n\
                    c2,a,2020-01-01T00:00:00.250Z,0\n\
                    c1,b,2020-01-02T00:00:00Z,1\n";
        let log = ingest_log(text).unwrap();
        let again = ingest_log(&write_log(&log).unwrap()).unwrap();
        assert_eq!(again, log);
    }

    #[test]
    fn missing_header_column() {
        assert!(matches!(
            ingest_log("case,activity,timestamp\n"),
            Err(Error::Format(_))
        ));
    }
}
