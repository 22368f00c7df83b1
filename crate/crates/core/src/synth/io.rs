use std::fmt::Write as _;
use std::path::Path;

use super::BuyerWeekRecord;
use crate::{Error, Result};

pub const RECORDS_HEADER: &str = "buyer_id,week,genre,impressions_won,avg_price";

/// Render buyer-week records as delimited text with the canonical header.
pub fn serialize_records(records: &[BuyerWeekRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.11e}",
            r.buyer_id, r.week, r.genre, r.impressions_won, r.avg_price
        );
    }
    out
}

/// Parse buyer-week record text. Errors carry 1-based line numbers.
pub fn parse_records(text: &str) -> Result<Vec<BuyerWeekRecord>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != RECORDS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header '{header}'"),
        });
    }
    let mut records = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse = |value: &str, name: &str| -> Result<f64> {
            value.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {name}: '{value}'"),
            })
        };
        let record = BuyerWeekRecord {
            buyer_id: fields[0].trim().to_string(),
            week: parse(fields[1], "week")? as u32,
            genre: fields[2].trim().to_string(),
            impressions_won: parse(fields[3], "impressions_won")? as u64,
            avg_price: parse(fields[4], "avg_price")?,
        };
        if record.avg_price < 0.0 || !record.avg_price.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("avg_price must be finite and >= 0, got {}", record.avg_price),
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_records(path: &Path) -> Result<Vec<BuyerWeekRecord>> {
    parse_records(&std::fs::read_to_string(path)?)
}

pub fn write_records(path: &Path, records: &[BuyerWeekRecord]) -> Result<()> {
    std::fs::write(path, serialize_records(records))?;
    Ok(())
}
