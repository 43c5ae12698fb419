use std::collections::BTreeMap;
use std::io::Read;

use super::SpreadingNetwork;
use crate::error::{Error, Result};

/// One row of a route table: passengers carried from `src` to `dst`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassengerRecord {
    pub src: String,
    pub dst: String,
    pub passengers: u64,
}

impl PassengerRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, passengers: u64) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            passengers,
        }
    }
}

/// Builds a directed network from route passenger counts.
///
/// Repeated `(src, dst)` rows are summed. Routes carrying less than
/// `keep_fraction` of the busiest route are dropped. Surviving routes get
/// `alpha = alpha_min * passengers / min_passengers`, so the lightest route
/// sits exactly at `alpha_min`. Node labels appear in first-appearance order
/// of the surviving routes.
pub fn from_passenger_records(
    records: &[PassengerRecord],
    alpha_min: f64,
    keep_fraction: f64,
) -> Result<SpreadingNetwork> {
    if records.is_empty() {
        return Err(Error::Invalid("empty passenger record set".into()));
    }
    if !(alpha_min > 0.0 && alpha_min < 1.0) {
        return Err(Error::Invalid(format!("alpha_min {alpha_min} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&keep_fraction) {
        return Err(Error::Invalid(format!(
            "keep_fraction {keep_fraction} outside [0, 1]"
        )));
    }

    // Aggregate while remembering first appearance for stable output order.
    let mut totals: BTreeMap<(String, String), (usize, u64)> = BTreeMap::new();
    for (row, r) in records.iter().enumerate() {
        if r.src == r.dst {
            return Err(Error::SelfLoop(r.src.clone()));
        }
        let entry = totals
            .entry((r.src.clone(), r.dst.clone()))
            .or_insert((row, 0));
        entry.1 += r.passengers;
    }
    let mut routes: Vec<(usize, String, String, u64)> = totals
        .into_iter()
        .map(|((s, d), (row, p))| (row, s, d, p))
        .collect();
    routes.sort_by_key(|r| r.0);

    let max = routes.iter().map(|r| r.3).max().unwrap_or(0);
    let threshold = keep_fraction * max as f64;
    routes.retain(|r| r.3 as f64 >= threshold);
    let min = routes.iter().map(|r| r.3).min().unwrap_or(0);
    if min == 0 {
        return Err(Error::Invalid(
            "a surviving route carries zero passengers; raise keep_fraction".into(),
        ));
    }
    let alpha_max = alpha_min * max as f64 / min as f64;
    if alpha_max >= 1.0 {
        return Err(Error::Invalid(format!(
            "busiest route would get alpha = {alpha_max:.4} >= 1; lower alpha_min below {:.3e}",
            min as f64 / max as f64
        )));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut edges = Vec::with_capacity(routes.len());
    for (_, s, d, p) in routes {
        let mut id = |l: String| {
            let next = labels.len();
            *index.entry(l.clone()).or_insert_with(|| {
                labels.push(l);
                next
            })
        };
        let si = id(s);
        let di = id(d);
        let alpha = if p == min {
            alpha_min
        } else {
            alpha_min * (p as f64 / min as f64)
        };
        edges.push((si, di, alpha));
    }
    SpreadingNetwork::new(labels, edges)
}

/// Reads a CSV route table with a header row. Recognized column names
/// (case-insensitive): `ORIGIN`/`src`, `DEST`/`dst`, `PASSENGERS`. Passenger
/// fields written as integral decimals (`1234.00`) are accepted.
pub fn read_passenger_csv<R: Read>(reader: R) -> Result<Vec<PassengerRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
            .ok_or_else(|| Error::Invalid(format!("route table lacks a {} column", names[0])))
    };
    let cs = find(&["ORIGIN", "src"])?;
    let cd = find(&["DEST", "dst"])?;
    let cp = find(&["PASSENGERS"])?;

    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let raw = field(cp);
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            line,
            message: format!("passenger count {raw:?} is not a number"),
        })?;
        if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("passenger count {raw:?} is not a nonnegative integer"),
            });
        }
        out.push(PassengerRecord::new(field(cs), field(cd), value as u64));
    }
    Ok(out)
}
