//! Option-chain ingestion, the option structure of one trading day, and
//! bid-ask calibration weights.
//!
//! Chain files are CSV with the header
//! `trade_date,expiry_date,strike,bid,ask,close,volume` (ISO dates, `volume`
//! may be empty). A JSON sidecar carries `spot`, `rate` and `day_count`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::descriptive::quantile;
use crate::error::{domain, Error, Result, RowIssue};
use crate::model::MarketEnv;
use crate::pricer::OptionSpec;

pub const CHAIN_HEADER: [&str; 7] = ["trade_date", "expiry_date", "strike", "bid", "ask", "close", "volume"];
const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DayCount {
    #[default]
    #[serde(rename = "ACT/365")]
    Act365,
    #[serde(rename = "ACT/360")]
    Act360,
}

impl DayCount {
    pub fn year_fraction(self, from: NaiveDate, to: NaiveDate) -> f64 {
        let days = (to - from).num_days() as f64;
        match self {
            DayCount::Act365 => days / 365.0,
            DayCount::Act360 => days / 360.0,
        }
    }
}

/// Sidecar market description of a chain file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketMeta {
    pub spot: f64,
    pub rate: f64,
    #[serde(default)]
    pub day_count: DayCount,
}

/// `g(spread)` applied to the bid-ask spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    #[default]
    InvSpreadSq,
    InvSpreadAbs,
    InvSpreadSqrt,
}

impl WeightRule {
    pub fn apply(self, spread: f64) -> f64 {
        let s = spread.abs();
        match self {
            WeightRule::InvSpreadSq => 1.0 / (s * s),
            WeightRule::InvSpreadAbs => 1.0 / s,
            WeightRule::InvSpreadSqrt => 1.0 / s.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    /// Years to expiry under the chain's day count.
    pub maturity: f64,
    pub expiry_date: NaiveDate,
    pub bid: f64,
    pub ask: f64,
    /// Market price used in the calibration objective.
    pub close: f64,
    pub volume: Option<u64>,
}

impl OptionQuote {
    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }

    pub fn spec(&self) -> OptionSpec {
        OptionSpec { strike: self.strike, maturity: self.maturity }
    }

    fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.strike > 0.0) {
            out.push(format!("strike {} must be positive", self.strike));
        }
        if !(self.maturity > 0.0) {
            out.push(format!("expiry {} is not after the trade date", self.expiry_date));
        }
        if !(self.bid >= 0.0) {
            out.push(format!("bid {} is negative", self.bid));
        }
        if !(self.bid <= self.ask) {
            out.push(format!("bid {} exceeds ask {}", self.bid, self.ask));
        }
        if !(self.close > 0.0) || !self.close.is_finite() {
            out.push(format!("close {} must be positive", self.close));
        }
        out
    }
}

/// Weights for every quote. Zero spreads would give infinite weights; those
/// are capped at the 99th percentile of the finite weights in the chain.
pub fn compute_weights(quotes: &[OptionQuote], rule: WeightRule) -> Vec<f64> {
    let raw: Vec<f64> = quotes.iter().map(|q| rule.apply(q.spread())).collect();
    let finite: Vec<f64> = raw.iter().copied().filter(|w| w.is_finite() && *w > 0.0).collect();
    if finite.len() == raw.len() {
        return raw;
    }
    let cap = if finite.is_empty() {
        log::warn!("no quote has a positive spread; using unit weights");
        1.0
    } else {
        quantile(&finite, 0.99)
    };
    let capped = raw.len() - finite.len();
    if !finite.is_empty() {
        log::warn!("{capped} quote(s) with zero spread; weight capped at {cap}");
    }
    raw.into_iter().map(|w| if w.is_finite() && w > 0.0 { w } else { cap }).collect()
}

/// All quotes of one trading day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionStructure {
    pub quotes: Vec<OptionQuote>,
    pub env: MarketEnv,
    pub trade_date: NaiveDate,
    pub day_count: DayCount,
    pub weights: Vec<f64>,
}

impl OptionStructure {
    pub fn new(
        quotes: Vec<OptionQuote>,
        env: MarketEnv,
        trade_date: NaiveDate,
        day_count: DayCount,
        rule: WeightRule,
    ) -> Result<Self> {
        if quotes.is_empty() {
            return domain("option structure is empty");
        }
        let rows: Vec<RowIssue> = quotes
            .iter()
            .enumerate()
            .flat_map(|(i, q)| q.issues().into_iter().map(move |reason| RowIssue { row: i + 1, reason }))
            .collect();
        if !rows.is_empty() {
            return Err(Error::InvalidRows { path: "<memory>".into(), rows });
        }
        let weights = compute_weights(&quotes, rule);
        Ok(Self { quotes, env, trade_date, day_count, weights })
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn specs(&self) -> Vec<OptionSpec> {
        self.quotes.iter().map(OptionQuote::spec).collect()
    }

    pub fn market_prices(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.close).collect()
    }

    pub fn with_weight_rule(&self, rule: WeightRule) -> Self {
        Self { weights: compute_weights(&self.quotes, rule), ..self.clone() }
    }

    /// Structure made of `quotes[indices[j]]`, weights carried along.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            quotes: indices.iter().map(|&i| self.quotes[i].clone()).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainRow {
    trade_date: String,
    expiry_date: String,
    strike: f64,
    bid: f64,
    ask: f64,
    close: f64,
    volume: Option<u64>,
}

fn read_meta(path: &Path) -> Result<MarketMeta> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let meta: MarketMeta =
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json { path: path.into(), source })?;
    MarketEnv::new(meta.spot, meta.rate)?;
    Ok(meta)
}

/// Reads a chain file and its sidecar, validating every row.
pub fn load_chain(csv_path: &Path, meta_path: &Path) -> Result<OptionStructure> {
    load_chain_with_rule(csv_path, meta_path, WeightRule::default())
}

pub fn load_chain_with_rule(csv_path: &Path, meta_path: &Path, rule: WeightRule) -> Result<OptionStructure> {
    let meta = read_meta(meta_path)?;
    let file = File::open(csv_path).map_err(|source| Error::Io { path: csv_path.into(), source })?;
    read_chain(BufReader::new(file), csv_path, meta, rule)
}

fn read_chain<R: Read>(reader: R, path: &Path, meta: MarketMeta, rule: WeightRule) -> Result<OptionStructure> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let missing: Vec<&str> = CHAIN_HEADER.iter().copied().filter(|c| !header.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        return Err(Error::MalformedChain { path: path.into(), reason: format!("missing column(s) {}", missing.join(", ")) });
    }

    let mut quotes = Vec::new();
    let mut issues = Vec::new();
    let mut trade_date: Option<NaiveDate> = None;
    for (i, rec) in rdr.deserialize::<ChainRow>().enumerate() {
        let row = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue { row, reason: e.to_string() });
                continue;
            }
        };
        let dates = (
            NaiveDate::parse_from_str(&rec.trade_date, DATE_FORMAT),
            NaiveDate::parse_from_str(&rec.expiry_date, DATE_FORMAT),
        );
        let (td, ed) = match dates {
            (Ok(td), Ok(ed)) => (td, ed),
            _ => {
                issues.push(RowIssue { row, reason: "dates must be YYYY-MM-DD".into() });
                continue;
            }
        };
        match trade_date {
            None => trade_date = Some(td),
            Some(d) if d != td => {
                issues.push(RowIssue { row, reason: format!("trade date {td} differs from {d}") });
                continue;
            }
            _ => {}
        }
        let quote = OptionQuote {
            strike: rec.strike,
            maturity: meta.day_count.year_fraction(td, ed),
            expiry_date: ed,
            bid: rec.bid,
            ask: rec.ask,
            close: rec.close,
            volume: rec.volume,
        };
        let bad = quote.issues();
        if bad.is_empty() {
            quotes.push(quote);
        } else {
            issues.extend(bad.into_iter().map(|reason| RowIssue { row, reason }));
        }
    }
    if !issues.is_empty() {
        return Err(Error::InvalidRows { path: path.into(), rows: issues });
    }
    let Some(trade_date) = trade_date else {
        return Err(Error::MalformedChain { path: path.into(), reason: "no data rows".into() });
    };
    let env = MarketEnv::new(meta.spot, meta.rate)?;
    OptionStructure::new(quotes, env, trade_date, meta.day_count, rule)
}

/// Writes the chain CSV.
pub fn write_chain_csv<W: Write>(structure: &OptionStructure, out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for q in &structure.quotes {
        wtr.serialize(ChainRow {
            trade_date: structure.trade_date.format(DATE_FORMAT).to_string(),
            expiry_date: q.expiry_date.format(DATE_FORMAT).to_string(),
            strike: q.strike,
            bid: q.bid,
            ask: q.ask,
            close: q.close,
            volume: q.volume,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn market_meta(structure: &OptionStructure) -> MarketMeta {
    MarketMeta { spot: structure.env.spot, rate: structure.env.rate, day_count: structure.day_count }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.into(), source }
}

/// Writes the chain CSV and its sidecar.
pub fn write_chain(structure: &OptionStructure, csv_path: &Path, meta_path: &Path) -> Result<()> {
    let file = File::create(csv_path).map_err(io(csv_path))?;
    write_chain_csv(structure, BufWriter::new(file)).map_err(|source| Error::Csv { path: csv_path.into(), source })?;
    let mut meta = BufWriter::new(File::create(meta_path).map_err(io(meta_path))?);
    serde_json::to_writer_pretty(&mut meta, &market_meta(structure))
        .map_err(|source| Error::Json { path: meta_path.into(), source })?;
    writeln!(meta).map_err(io(meta_path))?;
    meta.flush().map_err(io(meta_path))?;
    Ok(())
}
