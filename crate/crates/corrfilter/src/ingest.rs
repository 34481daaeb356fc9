//! Price panel loading, log-returns, market-mode detrending and sector
//! taxonomies.
//!
//! Two CSV layouts are accepted: wide (`date,AAA,BBB,...`, one column per
//! ticker) and long (`date,ticker,close`, one row per observation). Both
//! produce the same [`PricePanel`]: tickers sorted lexicographically, dates
//! strictly increasing, and a dense price matrix with no gaps. Date
//! alignment is never taken silently; a ticker missing an observation that
//! other tickers have is an error.
//!
//! Detrending removes the market mode through the single-factor model
//! `r_i(t) = alpha_i + beta_i * I(t) + c_i(t)` where `I(t)` is the
//! equal-weighted average return over all tickers. The per-ticker
//! coefficients come from ordinary least squares, so the residuals are
//! orthogonal to the index by construction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use thiserror::Error;

/// Errors raised while loading or transforming panels and taxonomies.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected {expected:?}, got {got:?}")]
    HeaderMismatch { expected: String, got: String },
    #[error("unparsable date {value:?}")]
    UnparsableDate { value: String },
    #[error("non-positive price {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },
    #[error("missing observation for {ticker} on {date}")]
    MissingCell { ticker: String, date: NaiveDate },
    #[error("duplicate observation for {ticker} on {date}")]
    DuplicateEntry { ticker: String, date: NaiveDate },
    #[error("dates not strictly increasing at row {row}")]
    NonMonotonicDates { row: usize },
    #[error("duplicate ticker {0:?}")]
    DuplicateTicker(String),
    #[error("empty label for ticker {ticker:?}")]
    EmptyLabel { ticker: String },
    #[error("supersector {supersector:?} mapped to industries {industry_a:?} and {industry_b:?}")]
    InconsistentIndustry {
        supersector: String,
        industry_a: String,
        industry_b: String,
    },
    #[error("panel has no tickers")]
    EmptyPanel,
    #[error("need at least {needed} dates, got {got}")]
    TooFewDates { needed: usize, got: usize },
    #[error("market index has zero variance")]
    DegenerateMarketIndex,
    #[error("ticker {ticker:?} absent from taxonomy")]
    UnknownTicker { ticker: String },
}

/// CSV layout tag for [`load_prices`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// `date,TICKA,TICKB,...` with one row per date.
    Wide,
    /// `date,ticker,close` with one row per observation.
    Long,
}

/// Dense panel of closing prices, tickers by rows, dates by columns.
#[derive(Debug, Clone)]
pub struct PricePanel {
    /// Lexicographically sorted, unique tickers.
    pub tickers: Vec<String>,
    /// Strictly increasing observation dates.
    pub dates: Vec<NaiveDate>,
    /// Strictly positive prices, shape `(tickers.len(), dates.len())`.
    pub prices: Array2<f64>,
}

impl PricePanel {
    /// Builds a panel, checking every invariant the loaders guarantee.
    pub fn new(
        tickers: Vec<String>,
        dates: Vec<NaiveDate>,
        prices: Array2<f64>,
    ) -> Result<Self, IngestError> {
        if tickers.is_empty() {
            return Err(IngestError::EmptyPanel);
        }
        for pair in tickers.windows(2) {
            if pair[0] >= pair[1] {
                return Err(IngestError::DuplicateTicker(pair[1].clone()));
            }
        }
        for (row, pair) in dates.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(IngestError::NonMonotonicDates { row: row + 1 });
            }
        }
        assert_eq!(prices.dim(), (tickers.len(), dates.len()));
        for (i, ticker) in tickers.iter().enumerate() {
            for (j, date) in dates.iter().enumerate() {
                let value = prices[[i, j]];
                if !(value > 0.0) {
                    return Err(IngestError::NonPositivePrice {
                        ticker: ticker.clone(),
                        date: *date,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            tickers,
            dates,
            prices,
        })
    }

    /// Number of tickers.
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Number of observation dates.
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }
}

/// Panel of log-returns, tickers by rows, return dates by columns.
///
/// The date attached to each return is the later of the two prices that
/// produced it.
#[derive(Debug, Clone)]
pub struct ReturnsPanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Shape `(tickers.len(), dates.len())`.
    pub returns: Array2<f64>,
}

impl ReturnsPanel {
    /// Number of tickers.
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Number of return observations.
    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }

    /// Restricts the panel to the half-open column range `[start, end)`.
    pub fn window(&self, start: usize, end: usize) -> ReturnsPanel {
        assert!(start < end && end <= self.n_obs());
        ReturnsPanel {
            tickers: self.tickers.clone(),
            dates: self.dates[start..end].to_vec(),
            returns: self.returns.slice(ndarray::s![.., start..end]).to_owned(),
        }
    }
}

/// Per-ticker single-factor fit produced by [`detrend_market_mode`].
#[derive(Debug, Clone)]
pub struct FactorFit {
    /// Intercepts, one per ticker.
    pub alpha: Vec<f64>,
    /// Market loadings, one per ticker.
    pub beta: Vec<f64>,
    /// Equal-weighted market index `I(t)`, one entry per return date.
    pub index: Array1<f64>,
}

fn parse_date(value: &str) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d").map_err(|_| IngestError::UnparsableDate {
        value: value.to_string(),
    })
}

fn parse_price(value: &str, ticker: &str, date: NaiveDate) -> Result<f64, IngestError> {
    let parsed: f64 = value
        .trim()
        .parse()
        .map_err(|_| IngestError::MissingCell {
            ticker: ticker.to_string(),
            date,
        })?;
    if !(parsed > 0.0) || !parsed.is_finite() {
        return Err(IngestError::NonPositivePrice {
            ticker: ticker.to_string(),
            date,
            value: parsed,
        });
    }
    Ok(parsed)
}

/// Loads a price panel from a CSV file.
pub fn load_prices(path: &Path, layout: CsvLayout) -> Result<PricePanel, IngestError> {
    let file = std::fs::File::open(path)?;
    read_prices(file, layout)
}

/// Loads a price panel from any reader; see [`load_prices`].
pub fn read_prices<R: Read>(reader: R, layout: CsvLayout) -> Result<PricePanel, IngestError> {
    match layout {
        CsvLayout::Wide => read_wide(reader),
        CsvLayout::Long => read_long(reader),
    }
}

fn read_wide<R: Read>(reader: R) -> Result<PricePanel, IngestError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.len() < 2 {
        return Err(IngestError::EmptyPanel);
    }
    if headers.get(0).map(str::trim) != Some("date") {
        return Err(IngestError::HeaderMismatch {
            expected: "date".to_string(),
            got: headers.get(0).unwrap_or("").to_string(),
        });
    }
    let raw_tickers: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    // Column order in the file is arbitrary; the panel is always sorted.
    let mut order: Vec<usize> = (0..raw_tickers.len()).collect();
    order.sort_by(|&a, &b| raw_tickers[a].cmp(&raw_tickers[b]));
    for pair in order.windows(2) {
        if raw_tickers[pair[0]] == raw_tickers[pair[1]] {
            return Err(IngestError::DuplicateTicker(raw_tickers[pair[1]].clone()));
        }
    }
    let tickers: Vec<String> = order.iter().map(|&k| raw_tickers[k].clone()).collect();

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in csv.records().enumerate() {
        let record = record?;
        let date = parse_date(record.get(0).unwrap_or(""))?;
        if let Some(&last) = dates.last() {
            if date <= last {
                return Err(IngestError::NonMonotonicDates { row: row_idx + 1 });
            }
        }
        let mut row = Vec::with_capacity(tickers.len());
        for (slot, &k) in order.iter().enumerate() {
            let cell = record.get(k + 1).unwrap_or("");
            if cell.trim().is_empty() {
                return Err(IngestError::MissingCell {
                    ticker: tickers[slot].clone(),
                    date,
                });
            }
            row.push(parse_price(cell, &tickers[slot], date)?);
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(IngestError::TooFewDates { needed: 1, got: 0 });
    }
    let mut prices = Array2::zeros((tickers.len(), dates.len()));
    for (t, row) in rows.iter().enumerate() {
        for (i, &value) in row.iter().enumerate() {
            prices[[i, t]] = value;
        }
    }
    PricePanel::new(tickers, dates, prices)
}

fn read_long<R: Read>(reader: R) -> Result<PricePanel, IngestError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let expected = ["date", "ticker", "close"];
    for (k, want) in expected.iter().enumerate() {
        if headers.get(k).map(str::trim) != Some(*want) {
            return Err(IngestError::HeaderMismatch {
                expected: expected.join(","),
                got: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
    }
    // (ticker, date) -> price; BTreeMap keeps everything ordered.
    let mut cells: BTreeMap<(String, NaiveDate), f64> = BTreeMap::new();
    let mut date_set: BTreeSet<NaiveDate> = BTreeSet::new();
    for record in csv.records() {
        let record = record?;
        let date = parse_date(record.get(0).unwrap_or(""))?;
        let ticker = record.get(1).unwrap_or("").trim().to_string();
        if ticker.is_empty() {
            return Err(IngestError::EmptyLabel {
                ticker: String::new(),
            });
        }
        let price = parse_price(record.get(2).unwrap_or(""), &ticker, date)?;
        if cells.insert((ticker.clone(), date), price).is_some() {
            return Err(IngestError::DuplicateEntry { ticker, date });
        }
        date_set.insert(date);
    }
    if cells.is_empty() {
        return Err(IngestError::EmptyPanel);
    }
    let dates: Vec<NaiveDate> = date_set.into_iter().collect();
    let tickers: Vec<String> = cells
        .keys()
        .map(|(t, _)| t.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut prices = Array2::zeros((tickers.len(), dates.len()));
    for (i, ticker) in tickers.iter().enumerate() {
        for (t, date) in dates.iter().enumerate() {
            match cells.get(&(ticker.clone(), *date)) {
                Some(&value) => prices[[i, t]] = value,
                None => {
                    return Err(IngestError::MissingCell {
                        ticker: ticker.clone(),
                        date: *date,
                    })
                }
            }
        }
    }
    PricePanel::new(tickers, dates, prices)
}

/// Converts prices to log-returns `r(t) = ln(P(t+1) / P(t))`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnsPanel, IngestError> {
    if panel.n_dates() < 2 {
        return Err(IngestError::TooFewDates {
            needed: 2,
            got: panel.n_dates(),
        });
    }
    let n = panel.n_assets();
    let t_ret = panel.n_dates() - 1;
    let mut returns = Array2::zeros((n, t_ret));
    for i in 0..n {
        for t in 0..t_ret {
            returns[[i, t]] = (panel.prices[[i, t + 1]] / panel.prices[[i, t]]).ln();
        }
    }
    Ok(ReturnsPanel {
        tickers: panel.tickers.clone(),
        dates: panel.dates[1..].to_vec(),
        returns,
    })
}

/// Removes the market mode from a returns panel.
///
/// Fits `r_i(t) = alpha_i + beta_i * I(t) + c_i(t)` per ticker with
/// `I(t)` the equal-weighted average return, and returns the residual
/// panel together with the fitted coefficients. The residuals satisfy
/// `sum_t c_i(t) = 0` and `sum_t c_i(t) I(t) = 0` up to rounding.
pub fn detrend_market_mode(
    panel: &ReturnsPanel,
) -> Result<(ReturnsPanel, FactorFit), IngestError> {
    let n = panel.n_assets();
    let t_obs = panel.n_obs();
    if n == 0 {
        return Err(IngestError::EmptyPanel);
    }
    if t_obs < 2 {
        return Err(IngestError::TooFewDates {
            needed: 2,
            got: t_obs,
        });
    }
    let mut index = Array1::zeros(t_obs);
    for t in 0..t_obs {
        let mut sum = 0.0;
        for i in 0..n {
            sum += panel.returns[[i, t]];
        }
        index[t] = sum / n as f64;
    }
    let idx_mean = index.sum() / t_obs as f64;
    let mut idx_var = 0.0;
    for t in 0..t_obs {
        idx_var += (index[t] - idx_mean).powi(2);
    }
    let (mut idx_min, mut idx_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in index.iter() {
        idx_min = idx_min.min(v);
        idx_max = idx_max.max(v);
    }
    if idx_min == idx_max || idx_var <= 0.0 {
        return Err(IngestError::DegenerateMarketIndex);
    }
    // An index whose spread is pure rounding noise relative to the panel
    // (a residual panel fed back in, for instance) is a rank-deficient
    // regressor: use the minimum-norm solution, beta = 0, as a truncated
    // least squares would.
    let mut max_row_var = 0.0f64;
    for i in 0..n {
        let mut r_mean = 0.0;
        for t in 0..t_obs {
            r_mean += panel.returns[[i, t]];
        }
        r_mean /= t_obs as f64;
        let mut var = 0.0;
        for t in 0..t_obs {
            var += (panel.returns[[i, t]] - r_mean).powi(2);
        }
        max_row_var = max_row_var.max(var);
    }
    let degenerate_index = idx_var <= 1e-20 * max_row_var;

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut residuals = Array2::zeros((n, t_obs));
    for i in 0..n {
        let mut r_mean = 0.0;
        for t in 0..t_obs {
            r_mean += panel.returns[[i, t]];
        }
        r_mean /= t_obs as f64;
        if degenerate_index {
            beta[i] = 0.0;
        } else {
            let mut cov = 0.0;
            for t in 0..t_obs {
                cov += (panel.returns[[i, t]] - r_mean) * (index[t] - idx_mean);
            }
            beta[i] = cov / idx_var;
        }
        alpha[i] = r_mean - beta[i] * idx_mean;
        for t in 0..t_obs {
            residuals[[i, t]] = panel.returns[[i, t]] - alpha[i] - beta[i] * index[t];
        }
    }
    Ok((
        ReturnsPanel {
            tickers: panel.tickers.clone(),
            dates: panel.dates.clone(),
            returns: residuals,
        },
        FactorFit { alpha, beta, index },
    ))
}

/// Ticker to sector classification, two levels deep.
///
/// Each ticker carries a supersector and an industry label; every
/// supersector belongs to exactly one industry (several supersectors may
/// share an industry).
#[derive(Debug, Clone)]
pub struct Taxonomy {
    /// ticker -> (supersector, industry), ordered by ticker.
    map: BTreeMap<String, (String, String)>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(ticker, supersector, industry)` triples.
    pub fn from_rows<I, S>(rows: I) -> Result<Self, IngestError>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        let mut sector_industry: BTreeMap<String, String> = BTreeMap::new();
        for (ticker, supersector, industry) in rows {
            let ticker = ticker.into().trim().to_string();
            let supersector = supersector.into().trim().to_string();
            let industry = industry.into().trim().to_string();
            if ticker.is_empty() || supersector.is_empty() || industry.is_empty() {
                return Err(IngestError::EmptyLabel { ticker });
            }
            if let Some(prev) = sector_industry.get(&supersector) {
                if *prev != industry {
                    return Err(IngestError::InconsistentIndustry {
                        supersector,
                        industry_a: prev.clone(),
                        industry_b: industry,
                    });
                }
            } else {
                sector_industry.insert(supersector.clone(), industry.clone());
            }
            if map
                .insert(ticker.clone(), (supersector, industry))
                .is_some()
            {
                return Err(IngestError::DuplicateTicker(ticker));
            }
        }
        if map.is_empty() {
            return Err(IngestError::EmptyPanel);
        }
        Ok(Self { map })
    }

    /// Number of classified tickers.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// True when no tickers are classified.
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Supersector and industry for one ticker.
    pub fn get(&self, ticker: &str) -> Option<(&str, &str)> {
        self.map
            .get(ticker)
            .map(|(s, i)| (s.as_str(), i.as_str()))
    }

    /// Distinct supersector labels, sorted.
    pub fn supersectors(&self) -> Vec<String> {
        self.map
            .values()
            .map(|(s, _)| s.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Distinct industry labels, sorted.
    pub fn industries(&self) -> Vec<String> {
        self.map
            .values()
            .map(|(_, i)| i.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Checks that every ticker in `tickers` is classified.
    pub fn validate_against(&self, tickers: &[String]) -> Result<(), IngestError> {
        for ticker in tickers {
            if !self.map.contains_key(ticker) {
                return Err(IngestError::UnknownTicker {
                    ticker: ticker.clone(),
                });
            }
        }
        Ok(())
    }

    /// Partition of `tickers` by supersector label.
    ///
    /// Cluster ids follow the sorted order of the supersector labels that
    /// actually occur among `tickers`.
    pub fn supersector_partition(
        &self,
        tickers: &[String],
    ) -> Result<crate::linkage::Partition, IngestError> {
        self.validate_against(tickers)?;
        let present: BTreeSet<&str> = tickers
            .iter()
            .map(|t| self.map[t].0.as_str())
            .collect();
        let label_of: BTreeMap<&str, usize> = present
            .into_iter()
            .enumerate()
            .map(|(k, s)| (s, k))
            .collect();
        let labels: Vec<usize> = tickers
            .iter()
            .map(|t| label_of[self.map[t].0.as_str()])
            .collect();
        Ok(crate::linkage::Partition::from_labels(labels)
            .expect("labels are contiguous by construction"))
    }
}

/// Loads a taxonomy from a `ticker,supersector,industry` CSV file.
pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, IngestError> {
    let file = std::fs::File::open(path)?;
    read_taxonomy(file)
}

/// Loads a taxonomy from any reader; see [`load_taxonomy`].
pub fn read_taxonomy<R: Read>(reader: R) -> Result<Taxonomy, IngestError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let expected = ["ticker", "supersector", "industry"];
    for (k, want) in expected.iter().enumerate() {
        if headers.get(k).map(str::trim) != Some(*want) {
            return Err(IngestError::HeaderMismatch {
                expected: expected.join(","),
                got: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        rows.push((
            record.get(0).unwrap_or("").to_string(),
            record.get(1).unwrap_or("").to_string(),
            record.get(2).unwrap_or("").to_string(),
        ));
    }
    Taxonomy::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn panel_from_rows(tickers: &[&str], dates: &[&str], rows: &[&[f64]]) -> PricePanel {
        let n = tickers.len();
        let t = dates.len();
        let mut prices = Array2::zeros((n, t));
        for i in 0..n {
            for j in 0..t {
                prices[[i, j]] = rows[i][j];
            }
        }
        PricePanel::new(
            tickers.iter().map(|s| s.to_string()).collect(),
            dates.iter().map(|s| date(s)).collect(),
            prices,
        )
        .unwrap()
    }

    #[test]
    fn wide_layout_two_by_three() {
        let csv = "date,BBB,AAA\n\
                   2020-01-01,10.0,1.0\n\
                   2020-01-02,11.0,1.1\n\
                   2020-01-03,12.0,1.2\n";
        let panel = read_prices(csv.as_bytes(), CsvLayout::Wide).unwrap();
        assert_eq!(panel.tickers, vec!["AAA", "BBB"]);
        assert_eq!(panel.n_dates(), 3);
        // Columns are reordered to match the sorted tickers.
        assert_abs_diff_eq!(panel.prices[[0, 0]], 1.0);
        assert_abs_diff_eq!(panel.prices[[1, 2]], 12.0);
    }

    #[test]
    fn long_layout_matches_wide() {
        let long = "date,ticker,close\n\
                    2020-01-01,AAA,1.0\n\
                    2020-01-02,AAA,1.1\n\
                    2020-01-01,BBB,10.0\n\
                    2020-01-02,BBB,11.0\n";
        let panel = read_prices(long.as_bytes(), CsvLayout::Long).unwrap();
        assert_eq!(panel.tickers, vec!["AAA", "BBB"]);
        assert_eq!(panel.dates, vec![date("2020-01-01"), date("2020-01-02")]);
        assert_abs_diff_eq!(panel.prices[[1, 1]], 11.0);
    }

    #[test]
    fn zero_price_rejected() {
        let csv = "date,AAA\n2020-01-01,0.0\n";
        let err = read_prices(csv.as_bytes(), CsvLayout::Wide).unwrap_err();
        assert!(matches!(err, IngestError::NonPositivePrice { .. }));
    }

    #[test]
    fn long_layout_gap_rejected() {
        let long = "date,ticker,close\n\
                    2020-01-01,AAA,1.0\n\
                    2020-01-02,AAA,1.1\n\
                    2020-01-01,BBB,10.0\n";
        let err = read_prices(long.as_bytes(), CsvLayout::Long).unwrap_err();
        assert!(matches!(
            err,
            IngestError::MissingCell { ref ticker, date } if ticker == "BBB" && date == super::tests::date("2020-01-02")
        ));
    }

    #[test]
    fn garbage_date_rejected() {
        let csv = "date,AAA\nnot-a-date,1.0\n";
        let err = read_prices(csv.as_bytes(), CsvLayout::Wide).unwrap_err();
        assert!(matches!(err, IngestError::UnparsableDate { .. }));
    }

    #[test]
    fn unsorted_dates_rejected() {
        let csv = "date,AAA\n2020-01-02,1.0\n2020-01-01,1.1\n";
        let err = read_prices(csv.as_bytes(), CsvLayout::Wide).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotonicDates { .. }));
    }

    #[test]
    fn duplicate_long_entry_rejected() {
        let long = "date,ticker,close\n\
                    2020-01-01,AAA,1.0\n\
                    2020-01-01,AAA,2.0\n";
        let err = read_prices(long.as_bytes(), CsvLayout::Long).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateEntry { .. }));
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        let panel = panel_from_rows(
            &["AAA"],
            &["2020-01-01", "2020-01-02", "2020-01-03"],
            &[&[100.0, 100.0, 100.0]],
        );
        let returns = log_returns(&panel).unwrap();
        assert_eq!(returns.n_obs(), 2);
        assert_abs_diff_eq!(returns.returns[[0, 0]], 0.0);
        assert_abs_diff_eq!(returns.returns[[0, 1]], 0.0);
    }

    #[test]
    fn log_return_values() {
        let panel = panel_from_rows(
            &["AAA"],
            &["2020-01-01", "2020-01-02", "2020-01-03"],
            &[&[100.0, 110.0, 99.0]],
        );
        let returns = log_returns(&panel).unwrap();
        assert_abs_diff_eq!(
            returns.returns[[0, 0]],
            0.09531017980432486,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            returns.returns[[0, 1]],
            -0.10536051565782628,
            epsilon = 1e-15
        );
    }

    #[test]
    fn euler_growth_gives_unit_return() {
        let e = std::f64::consts::E;
        let panel = panel_from_rows(
            &["AAA"],
            &["2020-01-01", "2020-01-02"],
            &[&[100.0, 100.0 * e]],
        );
        let returns = log_returns(&panel).unwrap();
        assert_abs_diff_eq!(returns.returns[[0, 0]], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_date_panel_has_no_returns() {
        let panel = panel_from_rows(&["AAA"], &["2020-01-01"], &[&[100.0]]);
        let err = log_returns(&panel).unwrap_err();
        assert!(matches!(err, IngestError::TooFewDates { needed: 2, got: 1 }));
    }

    #[test]
    fn returns_scale_invariance() {
        // Multiplying any ticker's prices by a positive constant leaves
        // its log-returns untouched.
        let base = panel_from_rows(
            &["AAA", "BBB"],
            &["2020-01-01", "2020-01-02", "2020-01-03"],
            &[&[100.0, 104.0, 101.0], &[50.0, 49.0, 55.0]],
        );
        let mut scaled_prices = base.prices.clone();
        for t in 0..3 {
            scaled_prices[[0, t]] *= 7.5;
            scaled_prices[[1, t]] *= 0.003;
        }
        let scaled = PricePanel::new(
            base.tickers.clone(),
            base.dates.clone(),
            scaled_prices,
        )
        .unwrap();
        let r0 = log_returns(&base).unwrap();
        let r1 = log_returns(&scaled).unwrap();
        for i in 0..2 {
            for t in 0..2 {
                assert_abs_diff_eq!(
                    r0.returns[[i, t]],
                    r1.returns[[i, t]],
                    epsilon = 1e-12
                );
            }
        }
    }

    fn returns_panel(rows: &[&[f64]]) -> ReturnsPanel {
        let n = rows.len();
        let t = rows[0].len();
        let mut returns = Array2::zeros((n, t));
        for i in 0..n {
            for j in 0..t {
                returns[[i, j]] = rows[i][j];
            }
        }
        let start = date("2020-01-01");
        ReturnsPanel {
            tickers: (0..n).map(|i| format!("T{i:03}")).collect(),
            dates: (0..t)
                .map(|k| start + chrono::Duration::days(k as i64))
                .collect(),
            returns,
        }
    }

    #[test]
    fn identical_tickers_detrend_to_zero() {
        let series = [0.01, -0.02, 0.005, 0.03, -0.01];
        let panel = returns_panel(&[&series, &series]);
        let (resid, fit) = detrend_market_mode(&panel).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(fit.beta[i], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(fit.alpha[i], 0.0, epsilon = 1e-12);
            for t in 0..5 {
                assert_abs_diff_eq!(resid.returns[[i, t]], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_ticker_closed_form() {
        // One constant-zero ticker and one zero-mean ticker: the index is
        // half the second series, so both residual series vanish.
        let panel = returns_panel(&[&[0.0, 0.0, 0.0, 0.0], &[0.02, -0.01, 0.03, -0.04]]);
        let (resid, fit) = detrend_market_mode(&panel).unwrap();
        assert_abs_diff_eq!(fit.beta[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.beta[1], 2.0, epsilon = 1e-12);
        for i in 0..2 {
            for t in 0..4 {
                assert_abs_diff_eq!(resid.returns[[i, t]], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_index_rejected() {
        // Both series sum to the same value at each date, so I(t) is flat.
        let panel = returns_panel(&[&[0.01, 0.02, 0.03], &[0.03, 0.02, 0.01]]);
        let err = detrend_market_mode(&panel).unwrap_err();
        assert!(matches!(err, IngestError::DegenerateMarketIndex));
    }

    #[test]
    fn residuals_orthogonal_to_index() {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        // Deterministic pseudo-random panel; no RNG needed here.
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for _ in 0..7 {
            rows.push((0..60).map(|_| next() * 0.05).collect());
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let panel = returns_panel(&refs);
        let (resid, fit) = detrend_market_mode(&panel).unwrap();
        let t_obs = panel.n_obs() as f64;
        for i in 0..panel.n_assets() {
            let sum: f64 = (0..panel.n_obs()).map(|t| resid.returns[[i, t]]).sum();
            let dot: f64 = (0..panel.n_obs())
                .map(|t| resid.returns[[i, t]] * fit.index[t])
                .sum();
            assert!(sum.abs() <= 1e-9 * t_obs, "residual mean {sum}");
            assert!(dot.abs() <= 1e-9 * t_obs, "residual-index dot {dot}");
        }
    }

    #[test]
    fn detrending_residuals_is_idempotent() {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut state = 7u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for _ in 0..5 {
            rows.push((0..40).map(|_| next() * 0.02).collect());
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let panel = returns_panel(&refs);
        let (resid, _) = detrend_market_mode(&panel).unwrap();
        let (resid2, refit) = detrend_market_mode(&resid).unwrap();
        for &b in &refit.beta {
            assert!(b.abs() <= 1e-9, "beta after re-detrend {b}");
        }
        // With no market mode left, the second pass only re-centers rows
        // whose means are already rounding noise.
        for i in 0..resid.n_assets() {
            for t in 0..resid.n_obs() {
                let delta = (resid2.returns[[i, t]] - resid.returns[[i, t]]).abs();
                assert!(delta <= 1e-12, "residual moved by {delta}");
            }
        }
    }

    #[test]
    fn taxonomy_round_trip() {
        let csv = "ticker,supersector,industry\n\
                   AAA,Banks,Financials\n\
                   BBB,Insurance,Financials\n\
                   CCC,Chemicals,Basic Materials\n";
        let tax = read_taxonomy(csv.as_bytes()).unwrap();
        assert_eq!(tax.len(), 3);
        assert_eq!(tax.get("AAA"), Some(("Banks", "Financials")));
        assert_eq!(tax.supersectors(), vec!["Banks", "Chemicals", "Insurance"]);
        assert_eq!(tax.industries(), vec!["Basic Materials", "Financials"]);
    }

    #[test]
    fn duplicate_taxonomy_ticker_rejected() {
        let csv = "ticker,supersector,industry\n\
                   AAA,Banks,Financials\n\
                   AAA,Insurance,Financials\n";
        let err = read_taxonomy(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateTicker(ref t) if t == "AAA"));
    }

    #[test]
    fn inconsistent_industry_rejected() {
        let csv = "ticker,supersector,industry\n\
                   AAA,Banks,Financials\n\
                   BBB,Banks,Industrials\n";
        let err = read_taxonomy(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::InconsistentIndustry { .. }));
    }

    #[test]
    fn nineteen_supersectors_reported() {
        let mut rows = Vec::new();
        for k in 0..19 {
            rows.push((
                format!("T{k:03}"),
                format!("S{k:02}"),
                format!("I{:02}", k / 2),
            ));
        }
        let tax = Taxonomy::from_rows(rows).unwrap();
        assert_eq!(tax.supersectors().len(), 19);
    }

    #[test]
    fn missing_panel_ticker_flagged() {
        let tax = Taxonomy::from_rows(vec![("AAA", "Banks", "Financials")]).unwrap();
        let err = tax
            .validate_against(&["AAA".to_string(), "ZZZ".to_string()])
            .unwrap_err();
        assert!(matches!(err, IngestError::UnknownTicker { ref ticker } if ticker == "ZZZ"));
    }

    #[test]
    fn supersector_partition_orders_labels() {
        let tax = Taxonomy::from_rows(vec![
            ("AAA", "Banks", "Financials"),
            ("BBB", "Chemicals", "Basic Materials"),
            ("CCC", "Banks", "Financials"),
        ])
        .unwrap();
        let tickers: Vec<String> = ["AAA", "BBB", "CCC"].iter().map(|s| s.to_string()).collect();
        let partition = tax.supersector_partition(&tickers).unwrap();
        assert_eq!(partition.labels(), &[0, 1, 0]);
        assert_eq!(partition.n_clusters(), 2);
    }
}
