//! CSV emission with a frozen number format.
//!
//! Every numeric cell uses 6 significant digits in scientific notation with
//! a signed two-digit exponent ("1.59300e-03"), so output files are byte
//! stable across platforms and runs.

use std::io;
use std::path::Path;

pub fn fmt_sci(v: f64) -> String {
    debug_assert!(v.is_finite(), "CSV cells must be finite, got {v}");
    if v == 0.0 {
        return "0.00000e+00".into();
    }
    // {:.5e} rounds the mantissa to 5 decimals (carrying into the exponent
    // when needed); only the exponent needs re-padding.
    let s = format!("{:.5e}", v);
    let (mantissa, exponent) = s.split_once('e').expect("{:.5e} always has an exponent");
    let exp: i32 = exponent.parse().expect("exponent is an integer");
    format!("{mantissa}e{exp:+03}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
}
