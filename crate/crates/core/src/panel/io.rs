use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FirmYear, PanelError, ReturnObs};

pub const PANEL_COLUMNS: [&str; 13] = [
    "firm_id",
    "industry_id",
    "year",
    "leverage_1917",
    "log_employment_x100",
    "interest_share",
    "production_share",
    "size",
    "fixed_share",
    "fcf_assets",
    "margin",
    "tobins_q",
    "return",
];

pub const RETURN_COLUMNS: [&str; 5] = ["firm_id", "period", "leverage_lag", "market_return", "return"];

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        Self { index: headers.iter().enumerate().map(|(i, h)| (h.trim().to_ascii_lowercase(), i)).collect() }
    }

    fn require(&self, name: &'static str) -> Result<usize, PanelError> {
        self.index.get(name).copied().ok_or(PanelError::MissingColumn(name))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn csv_err(line: usize) -> impl Fn(csv::Error) -> PanelError {
    move |e| PanelError::Csv { line, message: e.to_string() }
}

fn field(record: &csv::StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

fn parse<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T, PanelError> {
    let raw = field(record, idx);
    raw.parse::<T>().map_err(|_| PanelError::Csv { line, message: format!("{name}: cannot parse {raw:?}") })
}

fn parse_opt(record: &csv::StringRecord, idx: Option<usize>, name: &str, line: usize) -> Result<Option<f64>, PanelError> {
    match idx {
        Some(i) if !field(record, i).is_empty() => parse::<f64>(record, i, name, line).map(Some),
        _ => Ok(None),
    }
}

fn unit_interval(value: Option<f64>, name: &str, line: usize) -> Result<(), PanelError> {
    match value {
        Some(v) if !(0.0..=1.0).contains(&v) => Err(PanelError::Csv { line, message: format!("{name} {v} outside [0, 1]") }),
        _ => Ok(()),
    }
}

/// Reads a firm-year panel; optional columns may be absent or empty.
pub fn read_panel<R: Read>(reader: R) -> Result<Vec<FirmYear>, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let cols = Columns::new(rdr.headers().map_err(csv_err(1))?);
    let firm = cols.require("firm_id")?;
    let industry = cols.require("industry_id")?;
    let year = cols.require("year")?;
    let lev = cols.require("leverage_1917")?;
    let emp = cols.require("log_employment_x100")?;
    let opt: Vec<Option<usize>> = PANEL_COLUMNS[5..].iter().map(|c| cols.optional(c)).collect();

    let mut seen = HashSet::new();
    let mut firm_leverage: HashMap<u64, f64> = HashMap::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(csv_err(line))?;
        let o = |k: usize| parse_opt(&record, opt[k], PANEL_COLUMNS[5 + k], line);
        let row = FirmYear {
            firm_id: parse(&record, firm, "firm_id", line)?,
            industry_id: parse(&record, industry, "industry_id", line)?,
            year: parse(&record, year, "year", line)?,
            leverage_1917: parse(&record, lev, "leverage_1917", line)?,
            log_employment_x100: parse(&record, emp, "log_employment_x100", line)?,
            interest_share: o(0)?,
            production_share: o(1)?,
            size: o(2)?,
            fixed_share: o(3)?,
            fcf_assets: o(4)?,
            margin: o(5)?,
            tobins_q: o(6)?,
            ret: o(7)?,
        };
        if !row.log_employment_x100.is_finite() {
            return Err(PanelError::Csv { line, message: "log_employment_x100 is not finite".into() });
        }
        unit_interval(Some(row.leverage_1917), "leverage_1917", line)?;
        unit_interval(row.interest_share, "interest_share", line)?;
        unit_interval(row.production_share, "production_share", line)?;
        if !seen.insert((row.firm_id, row.year)) {
            return Err(PanelError::DuplicateKey { line, firm_id: row.firm_id, what: "year", period: row.year });
        }
        let first = *firm_leverage.entry(row.firm_id).or_insert(row.leverage_1917);
        if first != row.leverage_1917 {
            return Err(PanelError::Csv { line, message: format!("leverage_1917 changes within firm {}", row.firm_id) });
        }
        rows.push(row);
    }
    Ok(rows)
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the panel with the shortest round-trip float representation.
pub fn write_panel<W: Write>(rows: &[FirmYear], out: W) -> Result<(), PanelError> {
    let io = |e: csv::Error| PanelError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PANEL_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.firm_id.to_string(),
            r.industry_id.to_string(),
            r.year.to_string(),
            r.leverage_1917.to_string(),
            r.log_employment_x100.to_string(),
            opt_str(r.interest_share),
            opt_str(r.production_share),
            opt_str(r.size),
            opt_str(r.fixed_share),
            opt_str(r.fcf_assets),
            opt_str(r.margin),
            opt_str(r.tobins_q),
            opt_str(r.ret),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| PanelError::Io(e.to_string()))
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<Vec<FirmYear>, PanelError> {
    let file = File::open(path.as_ref()).map_err(|e| PanelError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_panel(BufReader::new(file))
}

pub fn save_panel(rows: &[FirmYear], path: impl AsRef<Path>) -> Result<(), PanelError> {
    let file = File::create(path.as_ref()).map_err(|e| PanelError::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_panel(rows, BufWriter::new(file))
}

pub fn read_returns<R: Read>(reader: R) -> Result<Vec<ReturnObs>, PanelError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let cols = Columns::new(rdr.headers().map_err(csv_err(1))?);
    let idx: Vec<usize> = RETURN_COLUMNS.iter().map(|c| cols.require(c)).collect::<Result<_, _>>()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(csv_err(line))?;
        let obs = ReturnObs {
            firm_id: parse(&record, idx[0], "firm_id", line)?,
            period: parse(&record, idx[1], "period", line)?,
            leverage_lag: parse(&record, idx[2], "leverage_lag", line)?,
            market_return: parse(&record, idx[3], "market_return", line)?,
            ret: parse(&record, idx[4], "return", line)?,
        };
        if ![obs.leverage_lag, obs.market_return, obs.ret].iter().all(|v| v.is_finite()) {
            return Err(PanelError::Csv { line, message: "non-finite value".into() });
        }
        if !seen.insert((obs.firm_id, obs.period)) {
            return Err(PanelError::DuplicateKey { line, firm_id: obs.firm_id, what: "period", period: obs.period });
        }
        out.push(obs);
    }
    Ok(out)
}

pub fn write_returns<W: Write>(rows: &[ReturnObs], out: W) -> Result<(), PanelError> {
    let io = |e: csv::Error| PanelError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RETURN_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.firm_id.to_string(),
            r.period.to_string(),
            r.leverage_lag.to_string(),
            r.market_return.to_string(),
            r.ret.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| PanelError::Io(e.to_string()))
}

pub fn load_returns(path: impl AsRef<Path>) -> Result<Vec<ReturnObs>, PanelError> {
    let file = File::open(path.as_ref()).map_err(|e| PanelError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_returns(BufReader::new(file))
}

pub fn save_returns(rows: &[ReturnObs], path: impl AsRef<Path>) -> Result<(), PanelError> {
    let file = File::create(path.as_ref()).map_err(|e| PanelError::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_returns(rows, BufWriter::new(file))
}
