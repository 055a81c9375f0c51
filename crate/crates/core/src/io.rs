//! Plain CSV helpers. Floats are written with 17 significant digits so a
//! read-back reproduces the exact bit pattern.

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header and numeric columns of equal length.
pub fn columns_to_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let len = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..len {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a purely numeric CSV with one header row.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Domain("empty csv".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("row {}: {e}", k + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Domain(format!("row {} has {} fields", k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let xs = [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, -2.5e17];
        let ys = [1.0, f64::MIN_POSITIVE, 7.0, 1e-5];
        let text = columns_to_csv(&["x", "y"], &[&xs, &ys]);
        let (header, rows) = parse_numeric_csv(&text).unwrap();
        assert_eq!(header, vec!["x", "y"]);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0].to_bits(), xs[i].to_bits());
            assert_eq!(row[1].to_bits(), ys[i].to_bits());
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_numeric_csv("a,b\n1,2\n3\n").is_err());
    }
}
