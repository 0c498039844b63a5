//! A small column-oriented numeric table used to hand panel data to the
//! regression routines.

use std::collections::HashMap;

use thiserror::Error;

use crate::cohort::PanelRow;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("no column named '{0}'")]
    NoSuchColumn(String),
    #[error("column '{name}' has {len} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
}

/// Named numeric columns of equal length.
#[derive(Clone, Debug, Default)]
pub struct Table {
    names: Vec<String>,
    index: HashMap<String, usize>,
    cols: Vec<Vec<f64>>,
    n_rows: usize,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<(), TableError> {
        if self.index.contains_key(name) {
            return Err(TableError::DuplicateColumn(name.to_string()));
        }
        if !self.cols.is_empty() && values.len() != self.n_rows {
            return Err(TableError::LengthMismatch {
                name: name.to_string(),
                len: values.len(),
                expected: self.n_rows,
            });
        }
        if self.cols.is_empty() {
            self.n_rows = values.len();
        }
        self.index.insert(name.to_string(), self.cols.len());
        self.names.push(name.to_string());
        self.cols.push(values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64], TableError> {
        self.index
            .get(name)
            .map(|&i| self.cols[i].as_slice())
            .ok_or_else(|| TableError::NoSuchColumn(name.to_string()))
    }

    /// Keeps only the rows for which `keep` returns true (given the row index).
    pub fn filter<F: Fn(usize) -> bool>(&self, keep: F) -> Table {
        let rows: Vec<usize> = (0..self.n_rows).filter(|&i| keep(i)).collect();
        let mut out = Table::new();
        for (name, col) in self.names.iter().zip(&self.cols) {
            let values = rows.iter().map(|&i| col[i]).collect();
            out.push_column(name, values).expect("names already unique");
        }
        out
    }

    /// Builds the standard panel layout from simulated rows. The `employed`
    /// column is the complement of `exited_employment` among post-education
    /// ages and is what the regressions act on.
    pub fn from_panel(panel: &[PanelRow]) -> Table {
        let mut t = Table::new();
        let grab = |f: fn(&PanelRow) -> f64| panel.iter().map(f).collect::<Vec<f64>>();
        t.push_column("id", grab(|r| r.id as f64)).unwrap();
        t.push_column("birth_year", grab(|r| r.birth_year as f64))
            .unwrap();
        t.push_column("age", grab(|r| r.age as f64)).unwrap();
        t.push_column("year", grab(|r| r.year as f64)).unwrap();
        t.push_column(
            "exited_employment",
            grab(|r| if r.exited_employment { 1.0 } else { 0.0 }),
        )
        .unwrap();
        t.push_column(
            "employed",
            grab(|r| if r.exited_employment { 0.0 } else { 1.0 }),
        )
        .unwrap();
        t.push_column("displaced", grab(|r| if r.displaced { 1.0 } else { 0.0 }))
            .unwrap();
        t.push_column("injured", grab(|r| if r.injured { 1.0 } else { 0.0 }))
            .unwrap();
        t.push_column("pow", grab(|r| if r.pow { 1.0 } else { 0.0 }))
            .unwrap();
        t.push_column("female", grab(|r| if r.female { 1.0 } else { 0.0 }))
            .unwrap();
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_roundtrip() {
        let mut t = Table::new();
        t.push_column("a", vec![1.0, 2.0]).unwrap();
        t.push_column("b", vec![3.0, 4.0]).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column("b").unwrap(), &[3.0, 4.0]);
        assert!(t.column("c").is_err());
    }

    #[test]
    fn mismatched_length_rejected() {
        let mut t = Table::new();
        t.push_column("a", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            t.push_column("b", vec![1.0]),
            Err(TableError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut t = Table::new();
        t.push_column("a", vec![1.0]).unwrap();
        assert!(matches!(
            t.push_column("a", vec![2.0]),
            Err(TableError::DuplicateColumn(_))
        ));
    }

    #[test]
    fn filter_keeps_selected_rows() {
        let mut t = Table::new();
        t.push_column("a", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let even = t.filter(|i| i % 2 == 0);
        assert_eq!(even.column("a").unwrap(), &[1.0, 3.0]);
    }
}
