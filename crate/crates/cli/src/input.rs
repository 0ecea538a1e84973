use std::path::Path;

use semisup_core::data::{read_results, Cell};
use semisup_core::{Error, Result};

/// Rows of a CSV split on a response column. A blank response marks an
/// unlabeled row; every other column is a numeric input.
pub struct SplitTable {
    pub inputs: Vec<String>,
    pub labeled: Vec<(Vec<f64>, f64)>,
    pub unlabeled: Vec<Vec<f64>>,
}

impl SplitTable {
    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    /// Labeled rows with a 0/1 response as booleans.
    pub fn binary_labels(&self) -> Result<Vec<(Vec<f64>, bool)>> {
        self.labeled
            .iter()
            .map(|(x, y)| {
                if *y == 0.0 || *y == 1.0 {
                    Ok((x.clone(), *y == 1.0))
                } else {
                    Err(Error::InvalidData(format!("label must be 0 or 1, found {y}")))
                }
            })
            .collect()
    }
}

pub fn read_split(path: &Path, response: &str) -> Result<SplitTable> {
    let table = read_results(path)?;
    let target = table
        .columns
        .iter()
        .position(|c| c == response)
        .ok_or_else(|| Error::InvalidData(format!("{} has no `{response}` column", path.display())))?;
    let inputs: Vec<String> =
        table.columns.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, c)| c.clone()).collect();
    if inputs.is_empty() {
        return Err(Error::InvalidData(format!("{} has no input columns", path.display())));
    }
    let mut out = SplitTable { inputs, labeled: Vec::new(), unlabeled: Vec::new() };
    for (r, row) in table.rows.iter().enumerate() {
        let mut x = Vec::with_capacity(out.dim());
        for (i, cell) in row.iter().enumerate() {
            if i == target {
                continue;
            }
            x.push(cell.as_f64().ok_or_else(|| {
                Error::InvalidData(format!("row {}: column `{}` is not numeric", r + 1, table.columns[i]))
            })?);
        }
        match &row[target] {
            Cell::Text(s) if s.trim().is_empty() => out.unlabeled.push(x),
            cell => {
                let y = cell.as_f64().ok_or_else(|| {
                    Error::InvalidData(format!("row {}: `{response}` is neither numeric nor blank", r + 1))
                })?;
                out.labeled.push((x, y));
            }
        }
    }
    if out.labeled.is_empty() {
        return Err(Error::InvalidData(format!("{} has no labeled rows", path.display())));
    }
    Ok(out)
}

/// Reads a CSV of numeric inputs, dropping a `label` column when present.
pub fn read_inputs(path: &Path) -> Result<Vec<Vec<f64>>> {
    let table = read_results(path)?;
    let skip = table.columns.iter().position(|c| c == "label");
    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(i, c)| {
                    c.as_f64().ok_or_else(|| {
                        Error::InvalidData(format!("row {}: column `{}` is not numeric", r + 1, table.columns[i]))
                    })
                })
                .collect()
        })
        .collect()
}
