//! Summary tables: CSV for plotting, JSON with the configuration echoed.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    aggregate, AggregateRow, ExperimentConfig, TrialRecord, CONFIG_FILE, CSV_FILE, JSON_FILE,
    PARTIAL_FILE, TRIALS_FILE,
};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "axis,method,mean_rsnr_db,success_rate,n_trials";

/// `printf("%.6g")`: six significant digits, shortest form, `.` decimal
/// point regardless of locale.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    // exponent after rounding to 6 significant digits
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn to_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_g6(r.axis_value),
            r.method,
            format_g6(r.mean_rsnr_db),
            format_g6(r.success_rate),
            r.n_trials
        ));
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let bad = |msg: String| Error::Config(format!("summary CSV: {msg}"));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("bad number `{s}`")))
    };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("expected 5 fields in `{line}`")));
            }
            Ok(AggregateRow {
                axis_value: num(f[0])?,
                method: f[1].to_string(),
                mean_rsnr_db: num(f[2])?,
                success_rate: num(f[3])?,
                n_trials: f[4]
                    .parse()
                    .map_err(|_| bad(format!("bad count `{}`", f[4])))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub rows: Vec<AggregateRow>,
}

/// Write `summary.csv` and `summary.json` into `dir`.
pub fn emit_report(cfg: &ExperimentConfig, rows: &[AggregateRow], dir: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows to report".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(CSV_FILE);
    fs::write(&csv, to_csv(rows)).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join(JSON_FILE);
    let summary = Summary {
        config: cfg.clone(),
        rows: rows.to_vec(),
    };
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::parse(&json, e.to_string()))?;
    fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Recompute the summary of a run directory from its persisted trials.
///
/// Uses `trials.jsonl`, or the partial stream of an interrupted run; in the
/// latter case rows count only the trials that finished.
pub fn reaggregate(dir: &Path) -> Result<(ExperimentConfig, Vec<AggregateRow>)> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let full = dir.join(TRIALS_FILE);
    let path = if full.exists() {
        full
    } else {
        dir.join(PARTIAL_FILE)
    };
    let records = read_records(&path)?;
    Ok((
        cfg.clone(),
        aggregate(&records, &cfg.axis_values(), &cfg.methods),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (20.0, "20"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-3.14159265, "-3.14159"),
            (158.40219, "158.402"),
            (300.0, "300"),
            (0.97, "0.97"),
            (1e100, "1e+100"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g6(x), s, "{x}");
        }
    }

    fn rows() -> Vec<AggregateRow> {
        vec![
            AggregateRow {
                axis_value: 20.0,
                method: "proposed".into(),
                mean_rsnr_db: 158.123456789,
                success_rate: 0.97,
                n_trials: 100,
            },
            AggregateRow {
                axis_value: 0.5,
                method: "fixed_grid".into(),
                mean_rsnr_db: -1.5e-7,
                success_rate: 0.0,
                n_trials: 3,
            },
        ]
    }

    #[test]
    fn csv_round_trip_to_six_digits() {
        let text = to_csv(&rows());
        assert!(text.starts_with("axis,method,mean_rsnr_db,success_rate,n_trials\n"));
        assert!(text.contains("20,proposed,158.123,0.97,100\n"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].mean_rsnr_db, 158.123);
        assert_eq!(back[1].mean_rsnr_db, -1.5e-7);
        assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::MSweep);
        emit_report(&cfg, &rows(), dir.path()).unwrap();
        let back = read_summary(&dir.path().join(JSON_FILE)).unwrap();
        assert_eq!(back.rows, rows());
        assert_eq!(back.config, cfg);
    }

    #[test]
    fn empty_report_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(ExperimentKind::MSweep);
        assert!(emit_report(&cfg, &[], dir.path()).is_err());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = read_summary(Path::new("/nonexistent/summary.json")).unwrap_err();
        assert!(
            err.to_string().contains("/nonexistent/summary.json"),
            "{err}"
        );
    }
}
