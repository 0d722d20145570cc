//! CSV reports.
//!
//! A report is a sequence of blocks. Each block starts with a comment line
//! `# scenario=<name> seed=<seed> version=<version> table=<kind>`, followed
//! by a CSV header and rows. Appending a second run adds another block.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub scenario: String,
    pub n: usize,
    pub law_x: String,
    pub law_y: String,
    pub samples: usize,
    pub ks: f64,
    pub w1: f64,
    pub fm_proxy: f64,
    pub tv_hist: f64,
    pub bins: usize,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub tensor_id: String,
    pub law_id: String,
    pub method: String,
    pub second: f64,
    pub fourth: f64,
    pub excess: f64,
    /// Standard error of `excess`; empty for exact methods.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub scenario: String,
    pub param: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub bound_holds: bool,
}

pub const DISTANCE_COLUMNS: [&str; 11] = [
    "scenario", "n", "law_x", "law_y", "samples", "ks", "w1", "fm_proxy", "tv_hist", "bins", "bin_width",
];
pub const MOMENT_COLUMNS: [&str; 7] = ["tensor_id", "law_id", "method", "second", "fourth", "excess", "stderr"];
pub const SCAN_COLUMNS: [&str; 7] = [
    "scenario", "param", "estimate", "stderr", "fitted_exponent", "fitted_constant", "bound_holds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Distance,
    Moment,
    Scan,
}

impl TableKind {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TableKind::Distance => &DISTANCE_COLUMNS,
            TableKind::Moment => &MOMENT_COLUMNS,
            TableKind::Scan => &SCAN_COLUMNS,
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableKind::Distance => "distance",
            TableKind::Moment => "moment",
            TableKind::Scan => "scan",
        })
    }
}

impl FromStr for TableKind {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(TableKind::Distance),
            "moment" => Ok(TableKind::Moment),
            "scan" => Ok(TableKind::Scan),
            other => Err(ReportError::Malformed(format!("unknown table kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Distance(Vec<DistanceRow>),
    Moment(Vec<MomentRow>),
    Scan(Vec<ScanRow>),
}

impl Table {
    pub fn kind(&self) -> TableKind {
        match self {
            Table::Distance(_) => TableKind::Distance,
            Table::Moment(_) => TableKind::Moment,
            Table::Scan(_) => TableKind::Scan,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Table::Distance(r) => r.is_empty(),
            Table::Moment(r) => r.is_empty(),
            Table::Scan(r) => r.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub scenario: String,
    pub seed: u64,
    pub version: String,
    pub table: Table,
}

impl Block {
    pub fn new(scenario: &str, seed: u64, table: Table) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            version: VERSION.to_string(),
            table,
        }
    }
}

fn serialize_rows<W: Write, R: Serialize>(w: &mut csv::Writer<W>, rows: &[R]) -> Result<(), ReportError> {
    for r in rows {
        w.serialize(r)?;
    }
    Ok(())
}

/// Writes blocks in order. Tables with no rows still get their comment and
/// header lines.
pub fn write_report<W: Write>(out: &mut W, blocks: &[Block]) -> Result<(), ReportError> {
    for b in blocks {
        if b.scenario.contains(char::is_whitespace) || b.scenario.is_empty() {
            return Err(ReportError::Malformed(format!("scenario name {:?} cannot be written", b.scenario)));
        }
        writeln!(
            out,
            "# scenario={} seed={} version={} table={}",
            b.scenario,
            b.seed,
            b.version,
            b.table.kind()
        )?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
        w.write_record(b.table.kind().columns())?;
        match &b.table {
            Table::Distance(r) => serialize_rows(&mut w, r)?,
            Table::Moment(r) => serialize_rows(&mut w, r)?,
            Table::Scan(r) => serialize_rows(&mut w, r)?,
        }
        w.flush()?;
    }
    Ok(())
}

pub fn report_to_string(blocks: &[Block]) -> Result<String, ReportError> {
    let mut buf = Vec::new();
    write_report(&mut buf, blocks)?;
    String::from_utf8(buf).map_err(|e| ReportError::Malformed(e.to_string()))
}

/// Writes to `path`, replacing it or appending to it.
pub fn write_report_file(path: &Path, blocks: &[Block], append: bool) -> Result<(), ReportError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)?;
    write_report(&mut file, blocks)?;
    file.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(String, u64, String, TableKind), ReportError> {
    let bad = || ReportError::Malformed(format!("bad block header {line:?}"));
    let body = line.strip_prefix('#').ok_or_else(bad)?;
    let (mut scenario, mut seed, mut version, mut table) = (None, None, None, None);
    for pair in body.split_whitespace() {
        let (k, v) = pair.split_once('=').ok_or_else(bad)?;
        match k {
            "scenario" => scenario = Some(v.to_string()),
            "seed" => seed = Some(v.parse().map_err(|_| bad())?),
            "version" => version = Some(v.to_string()),
            "table" => table = Some(v.parse()?),
            _ => return Err(bad()),
        }
    }
    Ok((
        scenario.ok_or_else(bad)?,
        seed.ok_or_else(bad)?,
        version.ok_or_else(bad)?,
        table.ok_or_else(bad)?,
    ))
}

fn parse_rows<R: for<'de> Deserialize<'de>>(text: &str, columns: &[&str]) -> Result<Vec<R>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?;
    if header.iter().ne(columns.iter().copied()) {
        return Err(ReportError::Malformed(format!("unexpected columns {header:?}")));
    }
    reader.deserialize().map(|r| r.map_err(ReportError::from)).collect()
}

/// Parses every block of a report.
pub fn read_report<R: BufRead>(input: R) -> Result<Vec<Block>, ReportError> {
    let mut raw: Vec<(String, String)> = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.starts_with('#') {
            raw.push((line, String::new()));
        } else if let Some((_, body)) = raw.last_mut() {
            body.push_str(&line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(ReportError::Malformed("rows before the first block header".into()));
        }
    }
    raw.into_iter()
        .map(|(header, body)| {
            let (scenario, seed, version, kind) = parse_header(&header)?;
            if body.trim().is_empty() {
                return Err(ReportError::Malformed("block without a column header".into()));
            }
            let table = match kind {
                TableKind::Distance => Table::Distance(parse_rows(&body, kind.columns())?),
                TableKind::Moment => Table::Moment(parse_rows(&body, kind.columns())?),
                TableKind::Scan => Table::Scan(parse_rows(&body, kind.columns())?),
            };
            Ok(Block { scenario, seed, version, table })
        })
        .collect()
}

pub fn read_report_str(text: &str) -> Result<Vec<Block>, ReportError> {
    read_report(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn distance(n: usize, tv: f64) -> DistanceRow {
        DistanceRow {
            scenario: "demo".into(),
            n,
            law_x: "rademacher".into(),
            law_y: "N(0,1)".into(),
            samples: 100,
            ks: 0.25,
            w1: 0.1,
            fm_proxy: 0.1,
            tv_hist: tv,
            bins: 50,
            bin_width: 0.24,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let text = report_to_string(&[Block::new("demo", 3, Table::Distance(vec![]))]).unwrap();
        assert_eq!(
            text,
            format!("# scenario=demo seed=3 version={VERSION} table=distance\nscenario,n,law_x,law_y,samples,ks,w1,fm_proxy,tv_hist,bins,bin_width\n")
        );
        let back = read_report_str(&text).unwrap();
        assert!(back[0].table.is_empty());
    }

    #[test]
    fn appended_runs_form_separate_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let a = Block::new("first", 1, Table::Distance(vec![distance(4, 0.5)]));
        let b = Block::new("second", 2, Table::Distance(vec![distance(8, 0.25)]));
        write_report_file(&path, std::slice::from_ref(&a), false).unwrap();
        write_report_file(&path, std::slice::from_ref(&b), true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
        assert_eq!(read_report_str(&text).unwrap(), vec![a.clone(), b]);
        write_report_file(&path, std::slice::from_ref(&a), false).unwrap();
        assert_eq!(read_report(std::fs::read_to_string(&path).unwrap().as_bytes()).unwrap(), vec![a]);
    }

    #[test]
    fn moment_stderr_may_be_empty() {
        let rows = vec![
            MomentRow {
                tensor_id: "dominant_pair:d=2:n=4".into(),
                law_id: "gaussian".into(),
                method: "wick_exact".into(),
                second: 1.0,
                fourth: 9.0,
                excess: 6.0,
                stderr: None,
            },
            MomentRow {
                tensor_id: "t".into(),
                law_id: "l".into(),
                method: "monte_carlo".into(),
                second: 1.0,
                fourth: 3.1,
                excess: 0.1,
                stderr: Some(0.05),
            },
        ];
        let text = report_to_string(&[Block::new("m", 0, Table::Moment(rows.clone()))]).unwrap();
        assert!(text.contains("dominant_pair:d=2:n=4,gaussian,wick_exact,1.0,9.0,6.0,\n"), "{text}");
        assert_eq!(read_report_str(&text).unwrap()[0].table, Table::Moment(rows));
    }

    #[test]
    fn rejects_malformed_reports() {
        for bad in [
            "1,2,3\n",
            "# scenario=a seed=x version=1 table=distance\n",
            "# scenario=a seed=1 version=1 table=pie\nx\n",
            "# scenario=a seed=1 version=1 table=scan\nscenario,param\n",
            "# scenario=a seed=1\nscenario\n",
        ] {
            assert!(read_report_str(bad).is_err(), "{bad:?}");
        }
        assert!(report_to_string(&[Block::new("two words", 0, Table::Scan(vec![]))]).is_err());
    }

    proptest! {
        #[test]
        fn scan_rows_roundtrip(rows in proptest::collection::vec(
            (any::<f64>(), -1e3f64..1e3, 0.0f64..1.0, any::<bool>()), 0..20)) {
            let rows: Vec<ScanRow> = rows
                .into_iter()
                .map(|(p, e, s, b)| ScanRow {
                    scenario: "cw".into(),
                    param: if p.is_finite() { p } else { 1.0 },
                    estimate: e,
                    stderr: s,
                    fitted_exponent: e / 3.0,
                    fitted_constant: s * 7.0,
                    bound_holds: b,
                })
                .collect();
            let blocks = vec![Block::new("cw", 9, Table::Scan(rows))];
            let text = report_to_string(&blocks).unwrap();
            prop_assert_eq!(read_report_str(&text).unwrap(), blocks);
        }

        #[test]
        fn distance_rows_roundtrip(tvs in proptest::collection::vec(0.0f64..1.0, 0..20)) {
            let rows: Vec<DistanceRow> = tvs.iter().enumerate().map(|(k, &t)| distance(k + 1, t)).collect();
            let blocks = vec![Block::new("d", u64::MAX, Table::Distance(rows))];
            let text = report_to_string(&blocks).unwrap();
            prop_assert_eq!(read_report_str(&text).unwrap(), blocks);
        }
    }
}
