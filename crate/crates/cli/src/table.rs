//! Plain CSV tables: an integer index column followed by float columns.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const MANIFEST_PREFIX: &str = "# manifest: ";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub index_name: String,
    pub index: Vec<usize>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(index_name: &str, index: Vec<usize>) -> Self {
        Self { index_name: index_name.into(), index, names: Vec::new(), columns: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) {
        debug_assert_eq!(column.len(), self.index.len());
        self.names.push(name.into());
        self.columns.push(column);
    }

    /// Writes the manifest comment, the header, then one row per index
    /// value with floats at 17 significant digits.
    pub fn write(&self, path: &Path, manifest_hash: &str) -> CliResult<()> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| CliError::io(path, e);
        writeln!(out, "{MANIFEST_PREFIX}{manifest_hash}").map_err(io)?;
        write!(out, "{}", self.index_name).map_err(io)?;
        for name in &self.names {
            write!(out, ",{name}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for (r, idx) in self.index.iter().enumerate() {
            write!(out, "{idx}").map_err(io)?;
            for col in &self.columns {
                write!(out, ",{:.16e}", col[r]).map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Reads a table written by [`Table::write`], returning it with the
    /// manifest hash.
    pub fn read(path: &Path) -> CliResult<(Self, String)> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let parse_err = |line: usize, message: String| CliError::Parse { path: path.to_path_buf(), line: line as u64 + 1, message };
        let mut next = |what: &str| -> CliResult<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i, l)),
                Some((_, Err(e))) => Err(CliError::io(path, e)),
                None => Err(parse_err(0, format!("missing {what}"))),
            }
        };
        let (i, first) = next("manifest line")?;
        let hash = first.strip_prefix(MANIFEST_PREFIX).ok_or_else(|| parse_err(i, "missing manifest comment".into()))?.to_string();
        let (_, header) = next("header")?;
        let mut fields = header.split(',');
        let index_name = fields.next().unwrap_or_default().to_string();
        let names: Vec<String> = fields.map(str::to_string).collect();
        let mut table = Table { index_name, index: Vec::new(), names, columns: Vec::new() };
        table.columns = vec![Vec::new(); table.names.len()];
        for (i, line) in lines {
            let line = line.map_err(|e| CliError::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let idx = fields.next().unwrap_or_default();
            table.index.push(idx.parse().map_err(|_| parse_err(i, format!("bad index `{idx}`")))?);
            let mut count = 0;
            for (c, f) in fields.enumerate() {
                let v: f64 = f.parse().map_err(|_| parse_err(i, format!("bad number `{f}`")))?;
                table.columns.get_mut(c).ok_or_else(|| parse_err(i, "too many fields".into()))?.push(v);
                count += 1;
            }
            if count != table.names.len() {
                return Err(parse_err(i, format!("expected {} values, found {count}", table.names.len())));
            }
        }
        Ok((table, hash))
    }
}
