//! Bid-level auction CSV ingestion: one observation per bidder, min-max
//! normalized to the unit square.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::dist::{Dataset, UnitPoint};
use crate::error::{Error, Result};

pub const COLUMNS: [&str; 4] = ["auction_id", "bid", "bidder_id", "bidder_rating"];

#[derive(Debug, Clone, PartialEq)]
pub struct BidRecord {
    pub auction_id: String,
    pub bid: f64,
    pub bidder_id: String,
    pub bidder_rating: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub bidders_kept: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

pub fn ingest(path: impl AsRef<Path>, has_header: bool) -> Result<(Dataset, IngestReport)> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, has_header)
}

/// Reads bid records and keeps each bidder's highest bid together with the
/// rating on that row. Without a header the columns are taken in the order
/// of [`COLUMNS`].
pub fn ingest_reader<R: Read>(reader: R, has_header: bool) -> Result<(Dataset, IngestReport)> {
    let records = read_records(reader, has_header)?;
    let rows_read = records.len();
    // first row wins ties on the maximal bid
    let mut best: HashMap<&str, usize> = HashMap::new();
    let mut order = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match best.get(r.bidder_id.as_str()) {
            Some(&j) if records[j].bid >= r.bid => {}
            Some(_) => {
                best.insert(&r.bidder_id, i);
            }
            None => {
                best.insert(&r.bidder_id, i);
                order.push(r.bidder_id.as_str());
            }
        }
    }
    if order.is_empty() {
        return Err(Error::EmptyInput("no bid rows".into()));
    }
    let kept: Vec<&BidRecord> = order.iter().map(|id| &records[best[id]]).collect();
    let (y_min, y_max) = range(kept.iter().map(|r| r.bid));
    let (x_min, x_max) = range(kept.iter().map(|r| r.bidder_rating));
    let points = kept
        .iter()
        .map(|r| UnitPoint {
            y: normalize(r.bid, y_min, y_max),
            x: normalize(r.bidder_rating, x_min, x_max),
        })
        .collect();
    let report = IngestReport {
        rows_read,
        bidders_kept: kept.len(),
        y_min,
        y_max,
        x_min,
        x_max,
    };
    Ok((Dataset::new(points)?, report))
}

fn read_records<R: Read>(reader: R, has_header: bool) -> Result<Vec<BidRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let columns: Vec<usize> = if has_header {
        let headers = rdr.headers()?.clone();
        COLUMNS
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == *name)
                    .ok_or_else(|| Error::Format(format!("missing column '{name}'")))
            })
            .collect::<Result<_>>()?
    } else {
        vec![0, 1, 2, 3]
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<&str> {
            row.get(columns[k]).ok_or_else(|| Error::Row {
                line,
                message: format!("missing field '{}'", COLUMNS[k]),
            })
        };
        let number = |k: usize| -> Result<f64> {
            let raw = field(k)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Row {
                    line,
                    message: format!("{} '{raw}' is not a number", COLUMNS[k]),
                })
        };
        let bid = number(1)?;
        if bid < 0.0 {
            return Err(Error::Row {
                line,
                message: format!("negative bid {bid}"),
            });
        }
        out.push(BidRecord {
            auction_id: field(0)?.to_string(),
            bid,
            bidder_id: field(2)?.to_string(),
            bidder_rating: number(3)?,
        });
    }
    Ok(out)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}
