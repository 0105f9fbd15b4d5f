//! File formats: sample records, symbol and assignment CSVs, packed bits and
//! JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bayesbin::{BinAssignment64, Channel, MeasurementRecord64, ModelKind};
use serde::{Deserialize, Serialize};

/// Reads a one-sample-per-line CSV record; `#` lines are comments.
pub fn read_record(path: &Path, kind: ModelKind) -> Result<MeasurementRecord64> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_record(file, kind).with_context(|| format!("reading {}", path.display()))
}

pub fn parse_record(input: impl std::io::Read, kind: ModelKind) -> Result<MeasurementRecord64> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut samples = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 1 {
            bail!("line {line}: expected one value, found {}", row.len());
        }
        let field = &row[0];
        let x: f64 = field
            .parse()
            .with_context(|| format!("line {line}: cannot parse {field:?} as a number"))?;
        if !x.is_finite() {
            bail!("line {line}: non-finite value {field}");
        }
        samples.push(x);
    }
    Ok(MeasurementRecord64::new(kind, samples))
}

pub fn format_record(record: &MeasurementRecord64) -> String {
    let mut out = format!(
        "# {} record, {} samples, units: {}\n",
        kind_name(record.kind),
        record.len(),
        record.kind.units()
    );
    for x in &record.samples {
        out.push_str(&format!("{x:e}\n"));
    }
    out
}

pub fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Toa => "toa",
        ModelKind::Homodyne => "homodyne",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolRow {
    pub index: usize,
    pub channel: String,
    pub symbol: u32,
}

/// Accepted symbols in emission order.
pub fn symbol_rows(assignments: &[BinAssignment64]) -> Vec<SymbolRow> {
    assignments
        .iter()
        .filter(|a| a.accepted)
        .enumerate()
        .map(|(index, a)| SymbolRow {
            index,
            channel: a.channel.as_str().to_owned(),
            symbol: a.bin_index,
        })
        .collect()
}

pub fn format_symbols(rows: &[SymbolRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["index", "channel", "symbol"])?;
    }
    Ok(w.into_inner()?)
}

pub fn read_symbols(path: &Path) -> Result<Vec<SymbolRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        let row: SymbolRow = row.with_context(|| format!("reading {}", path.display()))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn channel_from_str(s: &str) -> Option<Channel> {
    [Channel::Primary, Channel::Radius, Channel::Angle]
        .into_iter()
        .find(|c| c.as_str() == s)
}

#[derive(Serialize)]
struct AssignmentRow<'a> {
    measurement_index: usize,
    channel: &'a str,
    bin_index: u32,
    bin_probability: f64,
    accepted: bool,
}

pub fn format_assignments(assignments: &[BinAssignment64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if assignments.is_empty() {
        w.write_record(["measurement_index", "channel", "bin_index", "bin_probability", "accepted"])?;
    }
    for a in assignments {
        w.serialize(AssignmentRow {
            measurement_index: a.measurement_index,
            channel: a.channel.as_str(),
            bin_index: a.bin_index,
            bin_probability: a.bin_probability,
            accepted: a.accepted,
        })?;
    }
    Ok(w.into_inner()?)
}

pub fn format_json(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Files produced by one command. Unless [`OutputSet::commit`] is called,
/// everything written through the set is deleted when it is dropped.
#[derive(Debug, Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: impl AsRef<Path>, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = path.as_ref();
        self.written.push(path.to_path_buf());
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// `dir/stem.ext`-style sibling of a primary output path.
pub fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_owned());
    primary.with_file_name(format!("{stem}{suffix}"))
}
