//! File ingestion for the two dataset formats.
//!
//! Cases file: comma-separated with header `region,date,confirmed`, dates
//! ISO-8601, counts non-negative integers. Actions file: header
//! `region,plan,start,end`; an empty or missing `end` means the plan is
//! still active.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// One day of confirmed cases for one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyRecord {
    pub region: String,
    pub date: NaiveDate,
    pub confirmed: u64,
}

/// A response plan active in `region` from `start` through `end`
/// (inclusive); `None` means still active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanInterval {
    pub region: String,
    pub plan_name: String,
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
}

impl PlanInterval {
    /// Whether the plan is active on `date` (both boundaries inclusive).
    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && self.end.map_or(true, |end| date <= end)
    }
}

fn parse_date(field: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(field.trim(), "%Y-%m-%d")
        .map_err(|_| Error::data(line, format!("invalid date '{}'", field.trim())))
}

/// Parses a cases file into records sorted by `(region, date)`.
///
/// Duplicate `(region, date)` rows keep the last occurrence in file order
/// (a warning is logged): published case tables routinely re-issue a day
/// with corrected counts.
pub fn ingest_cases(path: &Path) -> Result<Vec<DailyRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(None, format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data(1, "empty file, expected header 'region,date,confirmed'"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["region", "date", "confirmed"] {
        return Err(Error::data(
            1,
            format!("expected header 'region,date,confirmed', got '{header}'"),
        ));
    }

    let mut by_key: BTreeMap<(String, NaiveDate), u64> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::data(
                line,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let region = fields[0].trim();
        if region.is_empty() {
            return Err(Error::data(line, "empty region"));
        }
        let date = parse_date(fields[1], line)?;
        let confirmed: u64 = fields[2].trim().parse().map_err(|_| {
            Error::data(
                line,
                format!("invalid count '{}' (non-negative integer required)", fields[2].trim()),
            )
        })?;
        let key = (region.to_string(), date);
        if by_key.insert(key, confirmed).is_some() {
            log::warn!("{}: duplicate ({region}, {date}) at line {line}, keeping the later row", path.display());
        }
    }

    Ok(by_key
        .into_iter()
        .map(|((region, date), confirmed)| DailyRecord {
            region,
            date,
            confirmed,
        })
        .collect())
}

/// Parses an actions file. A missing or empty `end` field yields an open
/// interval; `end < start` is rejected.
pub fn ingest_actions(path: &Path) -> Result<Vec<PlanInterval>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(None, format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data(1, "empty file, expected header 'region,plan,start,end'"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["region", "plan", "start", "end"] {
        return Err(Error::data(
            1,
            format!("expected header 'region,plan,start,end', got '{header}'"),
        ));
    }

    let mut intervals = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::data(
                line,
                format!("expected 4 fields (end may be empty), got {}", fields.len()),
            ));
        }
        let region = fields[0].trim();
        let plan_name = fields[1].trim();
        if region.is_empty() || plan_name.is_empty() {
            return Err(Error::data(line, "empty region or plan name"));
        }
        let start = parse_date(fields[2], line)?;
        let end = match fields.get(3).map(|f| f.trim()) {
            None | Some("") => None,
            Some(f) => Some(parse_date(f, line)?),
        };
        if let Some(end) = end {
            if end < start {
                return Err(Error::data(
                    line,
                    format!("end {end} precedes start {start}"),
                ));
            }
        }
        intervals.push(PlanInterval {
            region: region.to_string(),
            plan_name: plan_name.to_string(),
            start,
            end,
        });
    }
    Ok(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_valid_rows_give_three_records() {
        let f = write_temp(
            "region,date,confirmed\nNV,2020-03-05,10\nNV,2020-03-06,12\nUT,2020-03-05,4\n",
        );
        let records = ingest_cases(f.path()).unwrap();
        assert_eq!(records.len(), 3);
        // Sorted by (region, date).
        assert_eq!(records[0].region, "NV");
        assert_eq!(records[2].region, "UT");
    }

    #[test]
    fn invalid_date_names_the_line() {
        let f = write_temp("region,date,confirmed\nNV,2020-03-05,10\nNV,2020-13-40,11\n");
        let err = ingest_cases(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("2020-13-40"), "{err}");
    }

    #[test]
    fn negative_count_names_the_line() {
        let f = write_temp("region,date,confirmed\nNV,2020-03-05,-4\n");
        let err = ingest_cases(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_rows_keep_the_last() {
        let f = write_temp(
            "region,date,confirmed\nNV,2020-03-05,10\nNV,2020-03-05,12\n",
        );
        let records = ingest_cases(f.path()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].confirmed, 12);
    }

    #[test]
    fn closed_interval_parses() {
        let f = write_temp("region,plan,start,end\nNV,mask policy,2020-04-01,2020-06-01\n");
        let intervals = ingest_actions(f.path()).unwrap();
        assert_eq!(intervals.len(), 1);
        assert_eq!(
            intervals[0].end,
            Some(NaiveDate::from_ymd_opt(2020, 6, 1).unwrap())
        );
    }

    #[test]
    fn missing_end_gives_open_interval() {
        let f = write_temp("region,plan,start,end\nNV,mask policy,2020-04-01,\n");
        let intervals = ingest_actions(f.path()).unwrap();
        assert_eq!(intervals[0].end, None);
        assert!(intervals[0].contains(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap()));
        assert!(!intervals[0].contains(NaiveDate::from_ymd_opt(2020, 3, 31).unwrap()));
    }

    #[test]
    fn end_before_start_is_rejected() {
        let f = write_temp("region,plan,start,end\nNV,mask policy,2020-04-01,2020-03-01\n");
        assert!(ingest_actions(f.path()).is_err());
    }
}
