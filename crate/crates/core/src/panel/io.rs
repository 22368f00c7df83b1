use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::econ::PanelObservation;
use crate::{Error, Result};

pub const PANEL_HEADER: &str =
    "site_id,week,year,cpm,supply,supply_millions,avg_daily_buyers_pre,monthly_ad_spend,partial_flag,full_flag,tags";

/// 12-significant-digit float text; the fixed width makes serialized
/// panels byte-stable across write/read/write cycles.
fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

/// Render a panel as delimited text with the canonical header.
pub fn serialize_panel(panel: &[PanelObservation]) -> String {
    let mut out = String::with_capacity(64 * (panel.len() + 1));
    out.push_str(PANEL_HEADER);
    out.push('\n');
    for obs in panel {
        let tags: Vec<&str> = obs.tags.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            obs.site_id,
            obs.week,
            obs.year16 as u8,
            fmt_real(obs.outcome),
            obs.weight as u64,
            fmt_real(obs.supply_millions),
            fmt_real(obs.avg_daily_buyers_pre),
            fmt_real(obs.monthly_ad_spend),
            obs.partial_flag as u8,
            obs.full_flag as u8,
            tags.join(";"),
        );
    }
    out
}

pub fn write_panel(path: &Path, panel: &[PanelObservation]) -> Result<()> {
    std::fs::write(path, serialize_panel(panel))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(value: &str, name: &str, line: usize) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name}: '{value}'"),
    })
}

fn parse_flag(value: &str, name: &str, line: usize) -> Result<bool> {
    match value.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line,
            message: format!("bad {name}: '{other}' (want 0 or 1)"),
        }),
    }
}

/// Parse panel text. Errors carry 1-based line numbers; duplicate
/// (site, week, year) keys and non-positive weights are rejected.
pub fn parse_panel(text: &str) -> Result<Vec<PanelObservation>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != PANEL_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header '{header}'"),
        });
    }

    let mut seen = BTreeSet::new();
    let mut panel = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Parse {
                line,
                message: format!("expected 11 fields, got {}", fields.len()),
            });
        }
        let obs = PanelObservation {
            site_id: fields[0].trim().to_string(),
            week: parse_field(fields[1], "week", line)?,
            year16: parse_flag(fields[2], "year", line)?,
            outcome: parse_field(fields[3], "cpm", line)?,
            weight: parse_field::<u64>(fields[4], "supply", line)? as f64,
            supply_millions: parse_field(fields[5], "supply_millions", line)?,
            avg_daily_buyers_pre: parse_field(fields[6], "avg_daily_buyers_pre", line)?,
            monthly_ad_spend: parse_field(fields[7], "monthly_ad_spend", line)?,
            partial_flag: parse_flag(fields[8], "partial_flag", line)?,
            full_flag: parse_flag(fields[9], "full_flag", line)?,
            tags: fields[10]
                .trim()
                .split(';')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect(),
        };
        if !(obs.weight > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("non-positive weight for site {}", obs.site_id),
            });
        }
        obs.validate().map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let key = (obs.site_id.clone(), obs.week, obs.year16);
        if !seen.insert(key.clone()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key {key:?}"),
            });
        }
        panel.push(obs);
    }
    Ok(panel)
}

pub fn load_panel(path: &Path) -> Result<Vec<PanelObservation>> {
    parse_panel(&std::fs::read_to_string(path)?)
}
