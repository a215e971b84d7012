//! Trace CSV files.
//!
//! One header row, then one row per control tick:
//!
//! ```text
//! t, x0..x{n-1}, v0.., a0.., f0.., psi, psi_avg, flag, m0.., d0..,
//! tank_T, phi, gamma, p_d, p_m, adapting
//! ```
//!
//! Reals are written in plain decimal notation with at most 9 significant
//! digits, booleans as `0`/`1`, rows end in `\n`. The plotting scripts read
//! this layout.

use std::io::{Read, Write};
use std::path::Path;

use admittance_core::sim::{Trace, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed trace: {0}")]
    Schema(String),
}

const SIGNIFICANT: i32 = 9;

/// Formats `v` in decimal notation with at most 9 significant digits.
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT - 1 - exponent).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Column names for `n` DOFs.
pub fn header(n: usize) -> Vec<String> {
    let per_dof = |p: &'static str| (0..n).map(move |j| format!("{p}{j}"));
    let mut cols = vec!["t".to_string()];
    for p in ["x", "v", "a", "f"] {
        cols.extend(per_dof(p));
    }
    cols.extend(["psi", "psi_avg", "flag"].map(String::from));
    cols.extend(per_dof("m"));
    cols.extend(per_dof("d"));
    cols.extend(["tank_T", "phi", "gamma", "p_d", "p_m", "adapting"].map(String::from));
    cols
}

fn row(r: &TraceRecord) -> Vec<String> {
    let reals = |v: &[f64]| v.iter().map(|x| format_real(*x)).collect::<Vec<_>>();
    let mut out = vec![format_real(r.t)];
    out.extend(reals(&r.x));
    out.extend(reals(&r.v));
    out.extend(reals(&r.a_est));
    out.extend(reals(&r.f_ext));
    out.push(format_real(r.psi));
    out.push(format_real(r.psi_avg));
    out.push(flag(r.flag).to_string());
    out.extend(reals(&r.m));
    out.extend(reals(&r.d));
    out.push(format_real(r.tank_t));
    out.push(flag(r.phi).to_string());
    out.push(flag(r.gamma).to_string());
    out.push(format_real(r.p_d));
    out.push(format_real(r.p_m));
    out.push(flag(r.adapting).to_string());
    out
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(trace.dofs()))?;
    for r in &trace.records {
        w.write_record(row(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<(), CsvError> {
    let file = std::fs::File::create(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_trace(trace, std::io::BufWriter::new(file))
}

fn parse_real(s: &str, col: &str, line: usize) -> Result<f64, CsvError> {
    s.trim()
        .parse()
        .map_err(|_| CsvError::Schema(format!("line {line}, column {col}: not a number: {s:?}")))
}

fn parse_flag(s: &str, col: &str, line: usize) -> Result<bool, CsvError> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CsvError::Schema(format!(
            "line {line}, column {col}: expected 0 or 1, found {other:?}"
        ))),
    }
}

/// Reads a trace back. The velocity after the last row is not stored, so
/// `final_velocity` is `None`; `dt` is taken from the first two rows.
pub fn read_trace<R: Read>(input: R) -> Result<Trace, CsvError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let cols: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let n = cols.iter().filter(|c| c.starts_with('x')).count();
    let expected = header(n);
    if cols != expected {
        return Err(CsvError::Schema(format!(
            "header does not match the {n}-DOF layout"
        )));
    }
    let mut records = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != expected.len() {
            return Err(CsvError::Schema(format!(
                "line {line}: {} fields, expected {}",
                rec.len(),
                expected.len()
            )));
        }
        let mut at = 0;
        let mut reals = |count: usize| -> Result<Vec<f64>, CsvError> {
            let v = (at..at + count)
                .map(|c| parse_real(&rec[c], &expected[c], line))
                .collect();
            at += count;
            v
        };
        let t = reals(1)?[0];
        let x = reals(n)?;
        let v = reals(n)?;
        let a_est = reals(n)?;
        let f_ext = reals(n)?;
        let psi = reals(1)?[0];
        let psi_avg = reals(1)?[0];
        let flag_col = 1 + 4 * n + 2;
        let m_start = flag_col + 1;
        let m = (m_start..m_start + n)
            .map(|c| parse_real(&rec[c], &expected[c], line))
            .collect::<Result<Vec<_>, _>>()?;
        let d = (m_start + n..m_start + 2 * n)
            .map(|c| parse_real(&rec[c], &expected[c], line))
            .collect::<Result<Vec<_>, _>>()?;
        let tail = m_start + 2 * n;
        let real_at = |c: usize| parse_real(&rec[c], &expected[c], line);
        let flag_at = |c: usize| parse_flag(&rec[c], &expected[c], line);
        records.push(TraceRecord {
            t,
            x,
            v,
            a_est,
            f_ext,
            psi,
            psi_avg,
            flag: flag_at(flag_col)?,
            m,
            d,
            tank_t: real_at(tail)?,
            phi: flag_at(tail + 1)?,
            gamma: flag_at(tail + 2)?,
            p_d: real_at(tail + 3)?,
            p_m: real_at(tail + 4)?,
            adapting: flag_at(tail + 5)?,
        });
    }
    let dt = match records.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 0.001,
    };
    if !(dt > 0.0) {
        return Err(CsvError::Schema(
            "time column is not increasing".to_string(),
        ));
    }
    Ok(Trace {
        dt,
        records,
        final_velocity: None,
        ..Trace::default()
    })
}

pub fn read_trace_file(path: &Path) -> Result<Trace, CsvError> {
    let file = std::fs::File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_trace(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use admittance_core::sim::{run_scenario, Scenario};

    #[test]
    fn reals_use_nine_significant_digits() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.001), "0.001");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_real(123456.789123), "123456.789");
        assert_eq!(format_real(1.5e-7), "0.00000015");
        assert_eq!(format_real(1e10), "10000000000");
        assert!(!format_real(1.234e-12).contains('e'));
    }

    #[test]
    fn header_layout_for_two_dofs() {
        assert_eq!(
            header(2).join(","),
            "t,x0,x1,v0,v1,a0,a1,f0,f1,psi,psi_avg,flag,m0,m1,d0,d1,\
             tank_T,phi,gamma,p_d,p_m,adapting"
        );
    }

    #[test]
    fn round_trip_keeps_nine_digits() {
        let sc = Scenario {
            duration: 0.05,
            ..Scenario::default()
        };
        let trace = run_scenario(&sc).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), trace.len() + 1);
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back.len(), trace.len());
        assert!((back.dt - 0.001).abs() < 1e-12);
        for (a, b) in trace.records.iter().zip(&back.records) {
            assert_eq!(a.flag, b.flag);
            assert!((a.tank_t - b.tank_t).abs() <= 1e-8 * a.tank_t.abs().max(1.0));
            assert_eq!(a.m, b.m);
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_trace("t,x0,y0\n0,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::Schema(_)));
    }

    #[test]
    fn bad_boolean_is_rejected() {
        let mut line = vec!["0"; header(1).len()];
        line[header(1).iter().position(|c| c == "flag").unwrap()] = "2";
        let text = format!("{}\n{}\n", header(1).join(","), line.join(","));
        assert!(read_trace(text.as_bytes()).is_err());
    }
}
