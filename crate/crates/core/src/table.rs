//! Plain-text tables rendered as TSV or as aligned columns.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Columns padded to width; first column left-aligned, the rest right-aligned.
    pub fn to_pretty(&self) -> String {
        let cols = std::iter::once(&self.header).chain(&self.rows).map(Vec::len).max().unwrap_or(0);
        let mut width = vec![0; cols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (i, cell) in row.iter().enumerate() {
                width[i] = width[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let pad = width[i] - cell.chars().count();
                if i == 0 {
                    let _ = write!(out, "{cell}{}", " ".repeat(pad));
                } else {
                    let _ = write!(out, "{}{cell}", " ".repeat(pad));
                }
            }
            let trimmed = out.trim_end().len();
            out.truncate(trimmed);
            out.push('\n');
        };
        line(&mut out, &self.header);
        let total: usize = width.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            line(&mut out, row);
        }
        out
    }
}

/// `num / den` as a percentage with two decimals; `0.00` when `den` is zero.
pub fn percent(num: usize, den: usize) -> String {
    if den == 0 {
        return "0.00".into();
    }
    format!("{:.2}", 100.0 * num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders() {
        let mut t = Table::new(["split", "n"]);
        t.push(["train", "12"]);
        t.push(["dev", "3"]);
        assert_eq!(t.to_tsv(), "split\tn\ntrain\t12\ndev\t3\n");
        assert_eq!(t.to_pretty(), "split   n\n---------\ntrain  12\ndev     3\n");
    }

    #[test]
    fn percentages() {
        assert_eq!(percent(30, 100), "30.00");
        assert_eq!(percent(1904, 7674), "24.81");
        assert_eq!(percent(0, 0), "0.00");
    }
}
