use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

pub const OUTPUT_DIR_VAR: &str = "HARPER_OUTPUT_DIR";

/// Shortest round-trip decimal. Very small or very large magnitudes switch
/// to exponent form so columns stay readable; both forms parse back exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let m = x.abs();
    if (1e-5..1e16).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// log10 of a spacing; an exact zero becomes "-inf".
pub fn fmt_log10(x: f64) -> String {
    fmt_f64(x.log10())
}

/// Relative paths land under $HARPER_OUTPUT_DIR when it is set.
pub fn resolve_out(out: Option<PathBuf>) -> Option<PathBuf> {
    let p = out?;
    if p.is_absolute() {
        return Some(p);
    }
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if !dir.is_empty() => Some(Path::new(&dir).join(p)),
        _ => Some(p),
    }
}

fn open(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(io::BufWriter::new(fs::File::create(p)?))
        }
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_csv(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(open(out)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> io::Result<()> {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Run metadata next to the data file; the data file itself stays free of
/// anything that varies between identical invocations.
pub fn write_sidecar(out: Option<&Path>, command: &str, extra: serde_json::Value) -> io::Result<()> {
    let Some(out) = out else { return Ok(()) };
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "units": {"energy": "natural units of h (a = 1 convention)", "duration": "T/hbar, hbar = 2pi/n"},
        "data": out.file_name().map(|f| f.to_string_lossy().into_owned()),
        "details": extra,
    });
    let mut w = open(Some(&sidecar_path(out)))?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.write_all(b"\n")?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1.7e-14, 6.02e23, 1e-5, 123456.789, -2.5e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(1.7e-14), "1.7e-14");
    }

    #[test]
    fn zero_spacing_is_minus_inf() {
        assert_eq!(fmt_log10(0.0), "-inf");
        assert_eq!(fmt_log10(100.0), "2");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.meta.json"));
    }
}
