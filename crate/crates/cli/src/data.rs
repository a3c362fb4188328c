//! Column-oriented CSV input. Lines starting with `#` are skipped.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .with_context(|| format!("row {}, column {:?}: not a number: {field:?}", line + 1, headers[j]))?;
                columns[j].push(v);
            }
        }
        if columns.first().is_none_or(|c| c.is_empty()) {
            bail!("{} has no data rows", path.display());
        }
        Ok(Self { headers, columns })
    }

    pub fn nrows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        match self.headers.iter().position(|h| h == name) {
            Some(j) => Ok(&self.columns[j]),
            None => bail!("no column named {name:?} (have {})", self.headers.join(", ")),
        }
    }
}
