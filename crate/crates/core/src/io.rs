//! CSV/JSON output helpers.
//!
//! CSV uses `.` as decimal separator, `\n` line ends and 17 significant
//! digits so that values round-trip exactly.

use std::io::{self, Write};

use serde::Serialize;

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header line and rows of already formatted cells.
pub fn write_csv<W, I, R>(mut w: W, header: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.as_ref().join(","))?;
    }
    w.flush()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}
