//! CSV output for sweep results.
//!
//! Header:
//! `alpha,revenue,efficiency,relevance,revenue_norm,efficiency_norm,relevance_norm,auctions,seed`.
//! Floats carry 9 significant digits; lines end with `\n`.

use std::fs;
use std::io;
use std::path::Path;

use crate::experiment::{SweepResult, SweepRow};

pub const HEADER: &str =
    "alpha,revenue,efficiency,relevance,revenue_norm,efficiency_norm,relevance_norm,auctions,seed";

/// Renders `v` rounded to 9 significant digits, positional where that stays
/// short, with trailing zeros removed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in &result.rows {
        let fields = [
            format_sig9(r.alpha),
            format_sig9(r.total_revenue),
            format_sig9(r.total_efficiency),
            format_sig9(r.total_relevance),
            format_sig9(r.normalized_revenue),
            format_sig9(r.normalized_efficiency),
            format_sig9(r.normalized_relevance),
            r.auctions.to_string(),
            result.config.seed.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    fs::write(path, render_csv(result))
}

/// Parses rows written by [`render_csv`]; returns the rows and the seed.
pub fn parse_csv(text: &str) -> Result<(Vec<SweepRow>, Option<u64>), String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut rows = Vec::new();
    let mut seed = None;
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(format!("line {}: expected 9 columns, got {}", n + 2, cols.len()));
        }
        let f = |i: usize| {
            cols[i]
                .parse::<f64>()
                .map_err(|e| format!("line {}: column {}: {e}", n + 2, i + 1))
        };
        rows.push(SweepRow {
            alpha: f(0)?,
            total_revenue: f(1)?,
            total_efficiency: f(2)?,
            total_relevance: f(3)?,
            normalized_revenue: f(4)?,
            normalized_efficiency: f(5)?,
            normalized_relevance: f(6)?,
            auctions: cols[7].parse().map_err(|e| format!("line {}: {e}", n + 2))?,
        });
        seed = Some(cols[8].parse().map_err(|e| format!("line {}: {e}", n + 2))?);
    }
    Ok((rows, seed))
}

pub fn read_csv(path: &Path) -> io::Result<(Vec<SweepRow>, Option<u64>)> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_examples() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(-2.0), "-2");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(-1.7000000000000002), "-1.7");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(123456.7891234), "123456.789");
        assert_eq!(format_sig9(0.000123456789123), "0.000123456789");
        assert_eq!(format_sig9(987654321987.0), "987654322000");
        assert_eq!(format_sig9(1.5e-9), "1.5e-9");
        assert_eq!(format_sig9(2.5e20), "2.5e20");
    }

    proptest! {
        #[test]
        fn sig9_round_trips_to_nine_digits(v in prop_oneof![-1e6f64..1e6, 1e-8f64..1e-3, 1e10f64..1e18]) {
            let back: f64 = format_sig9(v).parse().unwrap();
            prop_assert!((back - v).abs() <= 5e-9 * v.abs(), "{} -> {}", v, back);
        }
    }

    #[test]
    fn parse_rejects_bad_header() {
        assert!(parse_csv("a,b\n").is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2\n")).is_err());
    }
}
