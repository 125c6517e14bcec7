//! Number formatting, CSV assembly and run manifests.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

/// Formats `v` with 12 significant digits and no trailing zeros.
///
/// Magnitudes in `[1e-5, 1e15)` print in plain decimal; others in
/// scientific notation so deep-shell values stay readable.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.11e}");
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim(mantissa))
    }
}

fn trim(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

pub fn point(coords: &[f64]) -> String {
    coords.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

/// Renders a header and rows as CSV text.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Side file describing how an output was produced.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub summary: serde_json::Value,
}

impl Manifest<'_> {
    pub fn write_next_to(&self, out: &Path) -> std::io::Result<()> {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(name, text + "\n")
    }
}

pub fn seconds(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.1 / 24.0), "0.00416666666667");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(12.0), "12");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123456.789), "123456.789");
        assert_eq!(num(2.5e-20), "2.5e-20");
        assert_eq!(num(1e300), "1e300");
        assert_eq!(point(&[0.25, 0.1 / 24.0, 0.0]), "0.25,0.00416666666667,0");
    }

    #[test]
    fn csv_rendering() {
        let text = csv_text(&["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(text, "a,b\n1,\"x,y\"\n");
    }
}
