use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};

use super::{LeverageBase, ShockError};

/// Sampling frequency of a [`PricePath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    Daily,
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Daily => "daily",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_lowercase().as_str() {
            "daily" | "d" => Some(Frequency::Daily),
            "monthly" | "m" => Some(Frequency::Monthly),
            "quarterly" | "q" => Some(Frequency::Quarterly),
            "annual" | "yearly" | "a" | "y" => Some(Frequency::Annual),
            _ => None,
        }
    }

    /// Whether `next` is the observation immediately following `prev`.
    fn is_next(self, prev: NaiveDate, next: NaiveDate) -> bool {
        let months = |d: NaiveDate| d.year() * 12 + d.month0() as i32;
        match self {
            Frequency::Daily => (next - prev).num_days() == 1,
            Frequency::Monthly => months(next) - months(prev) == 1,
            Frequency::Quarterly => months(next) - months(prev) == 3,
            Frequency::Annual => next.year() - prev.year() == 1,
        }
    }

    /// Guesses the frequency from the first two dates of a path.
    pub fn infer(prev: NaiveDate, next: NaiveDate) -> Result<Self, ShockError> {
        [Frequency::Daily, Frequency::Monthly, Frequency::Quarterly, Frequency::Annual]
            .into_iter()
            .find(|f| f.is_next(prev, next))
            .ok_or(ShockError::UnknownFrequency(prev, next))
    }
}

/// Dated, strictly positive, gap-free price or wage levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    frequency: Frequency,
    dates: Vec<NaiveDate>,
    levels: Vec<f64>,
}

impl PricePath {
    pub fn new(frequency: Frequency, points: Vec<(NaiveDate, f64)>) -> Result<Self, ShockError> {
        let (dates, levels): (Vec<_>, Vec<_>) = points.into_iter().unzip();
        for (index, &value) in levels.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ShockError::NonPositiveLevel { index, value });
            }
        }
        for index in 1..dates.len() {
            let (prev, next) = (dates[index - 1], dates[index]);
            if next <= prev {
                return Err(ShockError::DatesNotIncreasing { index });
            }
            if !frequency.is_next(prev, next) {
                return Err(ShockError::Gap { index, frequency: frequency.as_str(), prev, next });
            }
        }
        Ok(Self { frequency, dates, levels })
    }

    /// Builds a path whose frequency is inferred from its first two dates.
    pub fn with_inferred_frequency(points: Vec<(NaiveDate, f64)>) -> Result<Self, ShockError> {
        if points.len() < 2 {
            return Err(ShockError::InsufficientObservations { needed: 2, got: points.len() });
        }
        let frequency = Frequency::infer(points[0].0, points[1].0)?;
        Self::new(frequency, points)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Reads `date,level` CSV with ISO-8601 dates.
    pub fn read_csv<R: Read>(reader: R, frequency: Option<Frequency>) -> Result<Self, ShockError> {
        let points: Vec<(NaiveDate, f64)> =
            read_series_csv(reader, "level")?.into_iter().map(|d| (d.date, d.value)).collect();
        match frequency {
            Some(f) => Self::new(f, points),
            None => Self::with_inferred_frequency(points),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ShockError> {
        let series: Vec<DatedValue> =
            self.dates.iter().zip(&self.levels).map(|(&date, &value)| DatedValue { date, value }).collect();
        write_series_csv_with_header(&series, out, "level")
    }
}

/// One dated value of a derived series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatedValue {
    pub date: NaiveDate,
    pub value: f64,
}

/// Reads a two-column `date,<value_column>` CSV.
pub fn read_series_csv<R: Read>(reader: R, value_column: &str) -> Result<Vec<DatedValue>, ShockError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ShockError::Csv { line: 1, message: e.to_string() })?.clone();
    let position = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let date_idx = position("date").ok_or(ShockError::Csv { line: 1, message: "missing column date".into() })?;
    let value_idx = position(value_column)
        .ok_or_else(|| ShockError::Csv { line: 1, message: format!("missing column {value_column}") })?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| ShockError::Csv { line, message: e.to_string() })?;
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_idx), "%Y-%m-%d")
            .map_err(|e| ShockError::Csv { line, message: format!("date {:?}: {e}", field(date_idx)) })?;
        let value = field(value_idx)
            .parse::<f64>()
            .map_err(|_| ShockError::Csv { line, message: format!("{value_column} {:?} is not a number", field(value_idx)) })?;
        out.push(DatedValue { date, value });
    }
    Ok(out)
}

/// Reads `firm_id,liabilities,equity` balance sheets dated in `base_year`.
pub fn read_balance_sheets<R: Read>(reader: R, base_year: i32) -> Result<Vec<LeverageBase>, ShockError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ShockError::Csv { line: 1, message: e.to_string() })?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| ShockError::Csv { line: 1, message: format!("missing column {name}") })
    };
    let (id_idx, liab_idx, eq_idx) = (position("firm_id")?, position("liabilities")?, position("equity")?);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| ShockError::Csv { line, message: e.to_string() })?;
        let number = |idx: usize, name: &str| {
            let text = record.get(idx).unwrap_or("");
            text.parse::<f64>().map_err(|_| ShockError::Csv { line, message: format!("{name} {text:?} is not a number") })
        };
        let base = LeverageBase {
            firm_id: record.get(id_idx).unwrap_or("").to_string(),
            liabilities: number(liab_idx, "liabilities")?,
            equity: number(eq_idx, "equity")?,
            base_year,
        };
        base.leverage()?;
        out.push(base);
    }
    Ok(out)
}

/// Writes `date,value` CSV using the shortest round-trip float form.
pub fn write_series_csv<W: Write>(series: &[DatedValue], out: W) -> Result<(), ShockError> {
    write_series_csv_with_header(series, out, "value")
}

fn write_series_csv_with_header<W: Write>(series: &[DatedValue], out: W, column: &str) -> Result<(), ShockError> {
    let io = |e: csv::Error| ShockError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", column]).map_err(io)?;
    for d in series {
        w.write_record([d.date.format("%Y-%m-%d").to_string(), d.value.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| ShockError::Io(e.to_string()))
}
