//! Column layouts of every exported dataset, and a validator that the
//! plotting scripts (and tests) use to reject malformed inputs.

use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Spectrum,
    SpectrumSweep,
    MinSpacing,
    TransitionGrid,
    LevelCurves,
    MathieuCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Int,
    Float,
    /// Anything (high-precision decimal strings still parse as floats).
    Decimal,
}

pub const SPECTRUM: &[&str] = &["index", "eigenvalue", "log10_nearest_spacing"];
pub const SWEEP: &[&str] = &["sweep_value", "index", "eigenvalue", "log10_nearest_spacing"];
pub const MIN_SPACING: &[&str] = &[
    "n",
    "eps",
    "measured_min_spacing",
    "model_min_spacing",
    "log10_ratio",
    "lower_index",
];
pub const LEVEL_CURVES: &[&str] = &["p", "phi", "energy"];
pub const MATHIEU: &[&str] = &[
    "index",
    "harper_eigenvalue",
    "mathieu_scaled_eigenvalue",
    "difference",
    "harper_spacing",
    "mathieu_spacing",
];

/// Top-level keys of the drift report.
pub const DRIFT_KEYS: &[&str] = &[
    "params0",
    "params1",
    "duration_over_hbar",
    "steps",
    "amplitudes",
    "labels_init",
    "labels_final",
    "boundary_indices",
    "region_probs",
    "diagnostics",
];

pub const DIAGNOSTIC_KEYS: &[&str] = &[
    "beta_ad",
    "gamma_q_ad",
    "p_capture_raw",
    "p_capture",
    "alpha",
    "de_min_half",
    "omega0",
];

fn layout(kind: DataKind) -> Option<(&'static [&'static str], Vec<Cell>)> {
    use Cell::*;
    Some(match kind {
        DataKind::Spectrum => (SPECTRUM, vec![Int, Decimal, Float]),
        DataKind::SpectrumSweep => (SWEEP, vec![Float, Int, Decimal, Float]),
        DataKind::MinSpacing => (MIN_SPACING, vec![Int, Float, Float, Float, Float, Int]),
        DataKind::LevelCurves => (LEVEL_CURVES, vec![Float, Float, Float]),
        DataKind::MathieuCompare => (MATHIEU, vec![Int, Float, Float, Float, Float, Float]),
        DataKind::TransitionGrid => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub column: Option<String>,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.column {
            Some(c) => write!(f, "column `{c}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(column: Option<&str>, message: impl Into<String>) -> SchemaError {
    SchemaError {
        column: column.map(str::to_string),
        message: message.into(),
    }
}

/// Validate a CSV export; returns the number of data rows.
pub fn validate_csv(kind: DataKind, text: &str) -> Result<usize, SchemaError> {
    let (header, cells) = layout(kind).ok_or_else(|| err(None, "this kind is a JSON report"))?;
    if text.contains('\r') {
        return Err(err(None, "CR line endings"));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let got = rdr.headers().map_err(|e| err(None, e.to_string()))?.clone();
    if got.is_empty() {
        return Err(err(None, "empty file"));
    }
    for (i, want) in header.iter().enumerate() {
        match got.get(i) {
            Some(g) if g == *want => {}
            Some(g) => return Err(err(Some(want), format!("header has `{g}` in its place"))),
            None => return Err(err(Some(want), "missing from header")),
        }
    }
    if got.len() > header.len() {
        return Err(err(Some(&got[header.len()]), "unexpected column"));
    }
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(None, e.to_string()))?;
        rows += 1;
        for (i, kind) in cells.iter().enumerate() {
            let v = &rec[i];
            let ok = match kind {
                Cell::Int => v.parse::<u64>().is_ok(),
                Cell::Float | Cell::Decimal => v.parse::<f64>().is_ok(),
            };
            if !ok {
                return Err(err(Some(header[i]), format!("row {rows}: cannot parse `{v}`")));
            }
        }
    }
    if rows == 0 {
        return Err(err(None, "no data rows"));
    }
    Ok(rows)
}

/// Validate a drift report; returns the dimension.
pub fn validate_drift_json(text: &str) -> Result<usize, SchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| err(None, e.to_string()))?;
    for k in DRIFT_KEYS {
        if v.get(k).is_none() {
            return Err(err(Some(k), "missing key"));
        }
    }
    for k in DIAGNOSTIC_KEYS {
        if v["diagnostics"].get(k).is_none() {
            return Err(err(Some(k), "missing from diagnostics"));
        }
    }
    let rows = v["amplitudes"]
        .as_array()
        .ok_or_else(|| err(Some("amplitudes"), "not an array"))?;
    let n = rows.len();
    if n < 2 {
        return Err(err(Some("amplitudes"), "fewer than two rows"));
    }
    for (i, r) in rows.iter().enumerate() {
        let r = r
            .as_array()
            .ok_or_else(|| err(Some("amplitudes"), format!("row {i} not an array")))?;
        if r.len() != n || r.iter().any(|x| !x.is_f64() && !x.is_u64()) {
            return Err(err(Some("amplitudes"), format!("row {i} is not {n} numbers")));
        }
    }
    for k in ["labels_init", "labels_final"] {
        let ok = v[k].as_array().is_some_and(|a| {
            a.len() == n
                && a.iter()
                    .all(|s| matches!(s.as_str(), Some("librating_lower" | "circulating" | "librating_upper")))
        });
        if !ok {
            return Err(err(Some(k), format!("expected {n} region labels")));
        }
    }
    let probs_ok = v["region_probs"].as_array().is_some_and(|a| {
        a.len() == 3
            && a.iter()
                .all(|r| r.is_null() || r.as_array().is_some_and(|x| x.len() == 3))
    });
    if !probs_ok {
        return Err(err(Some("region_probs"), "expected 3 rows of 3 (or null)"));
    }
    Ok(n)
}

pub fn validate(kind: DataKind, text: &str) -> Result<usize, SchemaError> {
    match kind {
        DataKind::TransitionGrid => validate_drift_json(text),
        _ => validate_csv(kind, text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_well_formed_spectrum() {
        let t = "index,eigenvalue,log10_nearest_spacing\n0,-1,0\n1,0,-inf\n2,0,-inf\n3,1,0\n";
        assert_eq!(validate_csv(DataKind::Spectrum, t), Ok(4));
    }

    #[test]
    fn empty_file_rejected() {
        assert!(validate_csv(DataKind::Spectrum, "").is_err());
        assert!(validate_csv(DataKind::Spectrum, "index,eigenvalue,log10_nearest_spacing\n").is_err());
    }

    #[test]
    fn names_offending_column() {
        let t = "index,eigen,log10_nearest_spacing\n0,1,2\n";
        assert_eq!(
            validate_csv(DataKind::Spectrum, t).unwrap_err().column.as_deref(),
            Some("eigenvalue")
        );
        let t = "p,phi,energy\n0,x,1\n";
        assert_eq!(
            validate_csv(DataKind::LevelCurves, t).unwrap_err().column.as_deref(),
            Some("phi")
        );
    }

    #[test]
    fn rejects_crlf() {
        assert!(validate_csv(DataKind::LevelCurves, "p,phi,energy\r\n0,0,1\r\n").is_err());
    }

    #[test]
    fn drift_json_needs_keys() {
        let e = validate_drift_json("{}").unwrap_err();
        assert_eq!(e.column.as_deref(), Some("params0"));
    }
}
