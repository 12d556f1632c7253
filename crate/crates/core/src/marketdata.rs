//! Spot-price series ingestion, validation and alignment.
//!
//! Time is measured in trading years: the t-coordinate of row k is
//! k/days_per_year. Gas (NBP) trades on a 252-day year; Powernext
//! electricity quotes every calendar day, hence 365. Calendar gaps inside a
//! series are tolerated — lags and trends are in observation units.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Commodity {
    Gas,
    Electricity,
}

impl fmt::Display for Commodity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Commodity::Gas => "gas",
            Commodity::Electricity => "electricity",
        })
    }
}

impl FromStr for Commodity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gas" => Ok(Commodity::Gas),
            "electricity" | "elec" => Ok(Commodity::Electricity),
            other => Err(Error::invalid(format!(
                "unknown commodity {other:?} (expected gas or electricity)"
            ))),
        }
    }
}

/// A validated daily spot series: strictly increasing dates, strictly
/// positive prices. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotSeries {
    pub commodity: Commodity,
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
    pub days_per_year: u32,
}

impl SpotSeries {
    pub fn new(
        commodity: Commodity,
        dates: Vec<NaiveDate>,
        prices: Vec<f64>,
        days_per_year: u32,
    ) -> Result<Self> {
        if days_per_year == 0 {
            return Err(Error::invalid("days_per_year must be positive"));
        }
        if dates.len() != prices.len() {
            return Err(Error::invalid(format!(
                "dates ({}) and prices ({}) differ in length",
                dates.len(),
                prices.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "dates must be strictly increasing ({} followed by {})",
                    w[0], w[1]
                )));
            }
        }
        for (d, &p) in dates.iter().zip(&prices) {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("non-positive price {p} on {d}")));
            }
        }
        Ok(SpotSeries {
            commodity,
            dates,
            prices,
            days_per_year,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Trading-time coordinate of row k, in years.
    pub fn t(&self, k: usize) -> f64 {
        k as f64 / self.days_per_year as f64
    }

    pub fn log_prices(&self) -> Vec<f64> {
        self.prices.iter().map(|p| p.ln()).collect()
    }

    /// Calibration entry points require a minimum history (default two
    /// years); callers pass their configured floor in years.
    pub fn require_history(&self, min_years: f64) -> Result<()> {
        let floor = (min_years * self.days_per_year as f64).ceil() as usize;
        if self.len() < floor {
            return Err(Error::invalid(format!(
                "series has {} observations, need at least {floor} ({min_years} years at {} days/year)",
                self.len(),
                self.days_per_year
            )));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("date,price\n");
        for (d, p) in self.dates.iter().zip(&self.prices) {
            out.push_str(&format!("{d},{p}\n"));
        }
        fs::write(path, out).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Load a `date,price` CSV (ISO-8601 dates, positive decimal prices).
/// Rows are sorted by date; malformed rows are reported with their line
/// number, duplicate dates rejected.
pub fn load_csv(path: &Path, commodity: Commodity, days_per_year: u32) -> Result<SpotSeries> {
    let raw = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let err_at = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = raw.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "date,price" => {}
        Some((_, header)) => {
            return Err(err_at(
                1,
                format!("expected header \"date,price\", found {header:?}"),
            ))
        }
        None => return Err(err_at(1, "empty file".into())),
    }
    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (ds, ps) = trimmed
            .split_once(',')
            .ok_or_else(|| err_at(line_no, format!("expected \"date,price\", found {trimmed:?}")))?;
        let date = NaiveDate::parse_from_str(ds.trim(), "%Y-%m-%d")
            .map_err(|e| err_at(line_no, format!("bad date {:?}: {e}", ds.trim())))?;
        let price: f64 = ps
            .trim()
            .parse()
            .map_err(|e| err_at(line_no, format!("bad price {:?}: {e}", ps.trim())))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(err_at(line_no, format!("price must be positive, got {price}")));
        }
        rows.push((date, price));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::invalid(format!(
                "duplicate date {} in {}",
                w[0].0,
                path.display()
            )));
        }
    }
    let (dates, prices) = rows.into_iter().unzip();
    SpotSeries::new(commodity, dates, prices, days_per_year)
}

/// Restrict both series to their common dates (order preserved).
pub fn align(a: &SpotSeries, b: &SpotSeries) -> Result<(SpotSeries, SpotSeries)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("cannot align an empty series"));
    }
    let in_b: HashSet<NaiveDate> = b.dates.iter().copied().collect();
    let keep: HashSet<NaiveDate> = a
        .dates
        .iter()
        .copied()
        .filter(|d| in_b.contains(d))
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("series have no dates in common"));
    }
    let restrict = |s: &SpotSeries| {
        let (dates, prices): (Vec<_>, Vec<_>) = s
            .dates
            .iter()
            .zip(&s.prices)
            .filter(|(d, _)| keep.contains(d))
            .map(|(d, p)| (*d, *p))
            .unzip();
        SpotSeries::new(s.commodity, dates, prices, s.days_per_year)
    };
    Ok((restrict(a)?, restrict(b)?))
}
