//! CSV artifact schema: serialization, parsing, and refitting.
//!
//! One fixed header, nine columns, no quoting. Every float is written with
//! 17 significant digits so parsing reproduces the exact f64 bit pattern;
//! `refit` therefore recomputes fits from a CSV bit-for-bit identical to the
//! fits the original run reported. Labels (experiment, body) are generated
//! comma-free by construction and validated here on write.

use latdisc_core::spectral::{decay_fit, ScalingFit};

use crate::experiments::Row;
use crate::{Error, Result};

/// Column layout of every artifact. `R` is the dilation (or frequency
/// magnitude for fourier rows, or 0 for identity rows); `p` is the norm
/// exponent, the regime code 0/1/2 for fourier rows, or 0 for identity
/// rows; `M` is the stratified sample count (0 when no sampling happened).
pub const CSV_HEADER: &str = "experiment,body,gamma,R,p,value,stderr,M,seed";

/// 17 significant digits: round-trips f64 exactly through from_str.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_label(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains(',') || s.contains('\n') {
        return Err(Error::Csv(format!(
            "{kind} label {s:?} must be nonempty and free of commas/newlines"
        )));
    }
    Ok(())
}

/// Serialize rows under the fixed header. Output ends with a newline.
pub fn to_csv(rows: &[Row]) -> Result<String> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        check_label("experiment", &row.experiment)?;
        check_label("body", &row.body)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.experiment,
            row.body,
            fmt_float(row.gamma),
            fmt_float(row.r),
            fmt_float(row.p),
            fmt_float(row.value),
            fmt_float(row.stderr),
            row.m,
            row.seed
        ));
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Csv(format!("line {line}: cannot parse {name} from {field:?}"))
    })
}

/// Parse a CSV artifact back into rows. Errors carry 1-based line numbers;
/// the header must match `CSV_HEADER` exactly.
pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Csv(format!(
                "line 1: header {header:?} does not match {CSV_HEADER:?}"
            )));
        }
        None => return Err(Error::Csv("empty input".into())),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Csv(format!(
                "line {n}: expected 9 fields, got {}",
                fields.len()
            )));
        }
        rows.push(Row {
            experiment: fields[0].to_string(),
            body: fields[1].to_string(),
            gamma: parse_field(fields[2], "gamma", n)?,
            r: parse_field(fields[3], "R", n)?,
            p: parse_field(fields[4], "p", n)?,
            value: parse_field(fields[5], "value", n)?,
            stderr: parse_field(fields[6], "stderr", n)?,
            m: parse_field(fields[7], "M", n)?,
            seed: parse_field(fields[8], "seed", n)?,
        });
    }
    Ok(rows)
}

/// Log-log slope fit over rows filtered by window and optional body/p
/// matches. Runs the same least-squares path the experiments use, so a
/// refit from a parsed artifact reproduces the original fit exactly.
pub fn fit_rows(
    rows: &[Row],
    window: (f64, f64),
    body: Option<&str>,
    p: Option<f64>,
) -> Result<ScalingFit> {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| body.is_none_or(|b| row.body == b))
        .filter(|row| p.is_none_or(|q| row.p == q))
        .map(|row| (row.r, row.value))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Csv(
            "no rows match the body/p filters; nothing to fit".into(),
        ));
    }
    Ok(decay_fit(&pairs, window)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<Row> {
        (0..10)
            .map(|i| {
                let r = 64.0 * 1.5f64.powi(i);
                Row {
                    experiment: "exponent_scan".into(),
                    body: "disk".into(),
                    gamma: 2.0,
                    r,
                    p: 2.0,
                    value: 0.3 * r.powf(0.5),
                    stderr: 1e-3,
                    m: 256,
                    seed: 7,
                }
            })
            .collect()
    }

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let rows = sample_rows();
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.ends_with('\n'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.experiment, b.experiment);
            assert_eq!(a.body, b.body);
            assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
            assert_eq!(a.r.to_bits(), b.r.to_bits());
            assert_eq!(a.p.to_bits(), b.p.to_bits());
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
            assert_eq!(a.m, b.m);
            assert_eq!(a.seed, b.seed);
        }
        // A second serialization of the parsed rows is byte-identical.
        assert_eq!(to_csv(&back).unwrap(), text);
    }

    #[test]
    fn awkward_floats_survive_the_round_trip() {
        let mut rows = sample_rows();
        rows[0].value = f64::MIN_POSITIVE;
        rows[1].value = 1.0 + f64::EPSILON;
        rows[2].value = -0.0;
        rows[3].value = 1e300;
        rows[4].gamma = f64::INFINITY;
        let back = parse_csv(&to_csv(&rows).unwrap()).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = format!("{CSV_HEADER}\na,b,notafloat,1,2,3,4,5,6\n");
        let err = parse_csv(&text).unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");
        assert!(err.to_string().contains("gamma"), "got: {err}");

        let text = format!("{CSV_HEADER}\na,b,1,1,2,3,4\n");
        let err = parse_csv(&text).unwrap_err();
        assert!(err.to_string().contains("9 fields"), "got: {err}");

        let err = parse_csv("wrong,header\n").unwrap_err();
        assert!(err.to_string().contains("header"), "got: {err}");
    }

    #[test]
    fn labels_with_commas_are_rejected_on_write() {
        let mut rows = sample_rows();
        rows[0].body = "gen_ellipse(4, rot)".into();
        let err = to_csv(&rows).unwrap_err();
        assert!(err.to_string().contains("body"), "got: {err}");
    }

    #[test]
    fn fit_rows_recovers_the_exact_slope_and_respects_filters() {
        let mut rows = sample_rows();
        // A second body whose rows would poison the fit if not filtered out.
        for i in 0..10 {
            let r = 64.0 * 1.5f64.powi(i);
            rows.push(Row {
                experiment: "exponent_scan".into(),
                body: "gen_ellipse4".into(),
                gamma: 4.0,
                r,
                p: 2.0,
                value: 0.2 * r.powf(0.75),
                stderr: 0.0,
                m: 256,
                seed: 7,
            });
        }
        let fit = fit_rows(&rows, (1.0, 1e9), Some("disk"), Some(2.0)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12, "slope {}", fit.exponent);
        let fit = fit_rows(&rows, (1.0, 1e9), Some("gen_ellipse4"), None).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-12, "slope {}", fit.exponent);
        let err = fit_rows(&rows, (1.0, 1e9), Some("absent"), None).unwrap_err();
        assert!(err.to_string().contains("filters"), "got: {err}");
    }
}
