//! CSV and JSON emission of result rows.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact::Rational;
use crate::experiment::ResultRow;
use crate::incidence::BoundEntry;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<OutputFormat> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(LabError::Parse(format!("output format {s:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Decimal with 12 significant digits, shortest form.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn format_rational(r: &Rational) -> String {
    format_float(r.to_f64())
}

/// CSV header, in output order.
pub const CSV_COLUMNS: &[&str] = &[
    "index",
    "experiment",
    "field",
    "q",
    "d",
    "s",
    "u",
    "construction",
    "replicate",
    "seed",
    "status",
    "reason",
    "size",
    "attempts",
    "lambda4",
    "energy_constant",
    "fourier_constant",
    "regime",
    "spheres",
    "points",
    "objects",
    "incidences",
    "lifted_incidences",
    "expected",
    "discrepancy",
    "general_rhs",
    "klp_rhs",
    "salem_rhs",
    "us_rhs",
    "us_zero_offset_rhs",
    "sphere_us_rhs",
    "klp_weighted_rhs",
    "klp_l2_rhs",
    "general_ratio",
    "klp_ratio",
    "salem_ratio",
    "us_ratio",
    "us_zero_offset_ratio",
    "sphere_us_ratio",
    "klp_weighted_ratio",
    "klp_l2_ratio",
    "general_holds",
    "klp_case",
    "klp_size_condition",
    "salem_s_in_range",
    "improves_general",
    "improves_klp",
    "klp_window",
    "sharpness_ratio",
    "sharpness_in_band",
    "sp_a_size",
    "sp_sumset_size",
    "sp_d_squares_size",
    "sp_lower_bound",
    "sp_c1_required",
    "sp_c1_incidence",
    "sp_case1_c",
    "sp_case2_c",
    "sp_dominant_case",
    "sp_size_condition",
    "wall_ms",
];

fn opt<T>(v: Option<T>, f: impl FnOnce(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn csv_record(row: &ResultRow, timing: bool) -> Vec<String> {
    let recipe = row.recipe.as_ref();
    let salem = row.salem.as_ref();
    let inc = row.incidence.as_ref();
    let b = row.bounds.as_ref();
    let sh = row.sharpness.as_ref();
    let sp = row.sumproduct.as_ref();
    let rhs = |e: Option<&BoundEntry>| opt(e, |e| format_float(e.rhs));
    let ratio = |e: Option<&BoundEntry>| opt(e, |e| format_float(e.ratio));
    let entries = |b: &crate::incidence::BoundSheet| {
        [
            Some(b.general),
            Some(b.klp),
            Some(b.salem),
            b.us,
            b.us_zero_offset,
            b.sphere_us,
            Some(b.klp_weighted),
            Some(b.klp_l2),
        ]
    };
    let bound_entries = b.map(entries).unwrap_or([None; 8]);
    let mut rec = vec![
        row.index.to_string(),
        serde_json::to_value(row.experiment).expect("enum").as_str().unwrap_or_default().to_string(),
        row.field.clone(),
        row.q.to_string(),
        row.d.to_string(),
        row.s.to_string(),
        row.u.to_string(),
        row.construction.clone(),
        row.replicate.to_string(),
        row.seed.to_string(),
        serde_json::to_value(row.status).expect("enum").as_str().unwrap_or_default().to_string(),
        row.reason.clone().unwrap_or_default(),
        opt(recipe.and_then(|r| r.size).or(row.energy.as_ref().map(|e| e.set_size)), |v| v.to_string()),
        opt(recipe.and_then(|r| r.attempts), |v| v.to_string()),
        opt(row.energy.as_ref(), |e| e.lambda4.to_string()),
        opt(salem, |s| format_float(s.energy_constant)),
        opt(salem, |s| format_float(s.fourier_constant)),
        opt(salem, |s| {
            match s.regime {
                crate::energy::SalemRegime::StructuredTermDominates => "structured",
                crate::energy::SalemRegime::RandomTermDominates => "random",
            }
            .to_string()
        }),
        opt(inc, |i| i.spheres.clone()),
        opt(inc, |i| i.points.to_string()),
        opt(inc, |i| i.objects.to_string()),
        opt(inc, |i| i.count.to_string()),
        opt(inc.and_then(|i| i.lifted_count), |v| v.to_string()),
        opt(inc, |i| format_rational(&i.expected)),
        opt(inc, |i| format_rational(&i.discrepancy)),
    ];
    rec.extend(bound_entries.iter().map(|e| rhs(e.as_ref())));
    rec.extend(bound_entries.iter().map(|e| ratio(e.as_ref())));
    rec.extend([
        opt(b, |b| b.general_holds.to_string()),
        opt(b, |b| b.klp_case.as_str().to_string()),
        opt(b, |b| b.klp_size_condition.to_string()),
        opt(b, |b| b.salem_s_in_range.to_string()),
        opt(b, |b| b.improves_general.to_string()),
        opt(b, |b| b.improves_klp.to_string()),
        opt(b, |b| b.klp_window.to_string()),
        opt(sh, |s| format_float(s.ratio)),
        opt(sh, |s| s.ratio_in_band.to_string()),
        opt(sp, |s| s.a_size.to_string()),
        opt(sp, |s| s.sumset_size.to_string()),
        opt(sp, |s| s.d_squares_size.to_string()),
        opt(sp, |s| s.lower_bound.to_string()),
        opt(sp, |s| format_float(s.c1_required)),
        opt(sp, |s| format_float(s.c1_incidence)),
        opt(sp, |s| format_float(s.case1_c)),
        opt(sp, |s| format_float(s.case2_c)),
        opt(sp, |s| s.dominant_case.to_string()),
        opt(sp, |s| s.size_condition.to_string()),
    ]);
    if timing {
        rec.push(opt(row.wall_ms, |v| v.to_string()));
    }
    rec
}

fn io(e: impl fmt::Display) -> LabError {
    LabError::Io(e.to_string())
}

/// Rows as CSV. The `wall_ms` column is present only when some row carries a time.
pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    let timing = rows.iter().any(|r| r.wall_ms.is_some());
    let header = if timing { CSV_COLUMNS } else { &CSV_COLUMNS[..CSV_COLUMNS.len() - 1] };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(csv_record(row, timing)).map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(io)?).map_err(io)
}

/// Rows as a JSON array, with a trailing newline.
pub fn render_json(rows: &[ResultRow]) -> Result<String> {
    let mut text = serde_json::to_string_pretty(rows).map_err(io)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(text).map_err(|e| LabError::Parse(format!("result rows: {e}")))
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

/// Writes rows to `path`, or to stdout when no path is given.
pub fn emit_report(rows: &[ResultRow], format: OutputFormat, path: Option<&Path>, allow_empty: bool) -> Result<()> {
    if rows.is_empty() && !allow_empty {
        return Err(LabError::EmptyReport);
    }
    let text = render(rows, format)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| LabError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_sweep, SeedConfig, SweepConfig};
    use crate::exact::SValue;

    fn rows() -> Vec<ResultRow> {
        let cfg = SweepConfig {
            fields: vec!["5".into(), "13".into(), "7".into()],
            dims: vec![2],
            s_values: vec![SValue::half()],
            seeds: SeedConfig { master: 3, replicates: 2 },
            ..SweepConfig::default()
        };
        run_sweep(&cfg).unwrap()
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(123456789012345.0), "123456789012000");
    }

    #[test]
    fn csv_shape() {
        let rows = rows();
        assert_eq!(rows.len(), 6);
        let text = render_csv(&rows).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 7);
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().unwrap().clone();
        assert_eq!(header.len(), CSV_COLUMNS.len() - 1);
        let recs: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
        let status = header.iter().position(|h| h == "status").unwrap();
        let reason = header.iter().position(|h| h == "reason").unwrap();
        assert_eq!(&recs[4][status], "skipped");
        assert_eq!(&recs[4][reason], "UnsupportedRegime");
        assert!(recs.iter().all(|r| r.len() == header.len()));
    }

    #[test]
    fn json_round_trip() {
        let rows = rows();
        let text = render_json(&rows).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(parse_json(&text).unwrap(), rows);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v[0]["incidence"]["expected"].as_str().unwrap().contains('/'));
    }

    #[test]
    fn emission() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        assert!(matches!(emit_report(&[], OutputFormat::Csv, Some(&path), false), Err(LabError::EmptyReport)));
        emit_report(&[], OutputFormat::Csv, Some(&path), true).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
        let bad = dir.path().join("missing").join("out.csv");
        let err = emit_report(&rows(), OutputFormat::Json, Some(&bad), false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
    }
}
