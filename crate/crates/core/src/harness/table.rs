//! CSV / JSON-lines serialization of sweep rows.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! every value round-trips bitwise. Absent values are empty CSV fields and
//! JSON `null`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::OutputFormat;
use crate::harness::sweep::{SummaryRow, SweepRow};

/// Version 1 column order.
pub const CSV_HEADER: &str = "seed,replicate,n,p,d,sigma,family,bias_sq,variance,total,oracle_total,min_norm_total,excess_risk,j_star,eff_rank_d,lambda_hat_d,bound_classical,bound_highdim,reason";

pub const SUMMARY_HEADER: &str = "n,d,count,median_total,q10_total,q90_total,median_bias_sq,median_variance,median_oracle_total";

pub const COLUMNS: [&str; 19] = [
    "seed",
    "replicate",
    "n",
    "p",
    "d",
    "sigma",
    "family",
    "bias_sq",
    "variance",
    "total",
    "oracle_total",
    "min_norm_total",
    "excess_risk",
    "j_star",
    "eff_rank_d",
    "lambda_hat_d",
    "bound_classical",
    "bound_highdim",
    "reason",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn json_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_else(|| "null".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn row_fields(r: &SweepRow) -> [String; 19] {
    [
        r.seed.to_string(),
        r.replicate.to_string(),
        r.n.to_string(),
        r.p.to_string(),
        r.d.to_string(),
        float(r.sigma),
        csv_field(&r.family),
        opt_float(r.bias_sq),
        opt_float(r.variance),
        opt_float(r.total),
        opt_float(r.oracle_total),
        opt_float(r.min_norm_total),
        opt_float(r.excess_risk),
        r.j_star.map(|j| j.to_string()).unwrap_or_default(),
        opt_float(r.eff_rank_d),
        opt_float(r.lambda_hat_d),
        opt_float(r.bound_classical),
        opt_float(r.bound_highdim),
        csv_field(&r.reason),
    ]
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", row_fields(r).join(","))?;
    }
    Ok(())
}

fn json_row(r: &SweepRow) -> String {
    let mut s = String::from("{");
    let mut first = true;
    let mut put = |key: &str, value: String| {
        if !first {
            s.push(',');
        }
        first = false;
        let _ = write!(s, "\"{key}\":{value}");
    };
    let quoted = |v: &str| serde_json::to_string(v).expect("string serializes");
    put("seed", r.seed.to_string());
    put("replicate", r.replicate.to_string());
    put("n", r.n.to_string());
    put("p", r.p.to_string());
    put("d", r.d.to_string());
    put("sigma", float(r.sigma));
    put("family", quoted(&r.family));
    put("bias_sq", json_float(r.bias_sq));
    put("variance", json_float(r.variance));
    put("total", json_float(r.total));
    put("oracle_total", json_float(r.oracle_total));
    put("min_norm_total", json_float(r.min_norm_total));
    put("excess_risk", json_float(r.excess_risk));
    put("j_star", r.j_star.map(|j| j.to_string()).unwrap_or_else(|| "null".into()));
    put("eff_rank_d", json_float(r.eff_rank_d));
    put("lambda_hat_d", json_float(r.lambda_hat_d));
    put("bound_classical", json_float(r.bound_classical));
    put("bound_highdim", json_float(r.bound_highdim));
    put("reason", quoted(&r.reason));
    s.push('}');
    s
}

pub fn write_jsonl<W: Write>(rows: &[SweepRow], out: &mut W) -> std::io::Result<()> {
    for r in rows {
        writeln!(out, "{}", json_row(r))?;
    }
    Ok(())
}

pub fn write_rows<W: Write>(rows: &[SweepRow], format: OutputFormat, out: &mut W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_jsonl(rows, out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `rows` to `path`.
pub fn emit(rows: &[SweepRow], format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_rows(rows, format, &mut out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], format: OutputFormat, out: &mut W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{SUMMARY_HEADER}")?;
            for s in summary {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    s.n,
                    s.d,
                    s.count,
                    opt_float(s.median_total),
                    opt_float(s.q10_total),
                    opt_float(s.q90_total),
                    opt_float(s.median_bias_sq),
                    opt_float(s.median_variance),
                    opt_float(s.median_oracle_total)
                )?;
            }
        }
        OutputFormat::Json => {
            for s in summary {
                writeln!(
                    out,
                    "{{\"n\":{},\"d\":{},\"count\":{},\"median_total\":{},\"q10_total\":{},\"q90_total\":{},\"median_bias_sq\":{},\"median_variance\":{},\"median_oracle_total\":{}}}",
                    s.n,
                    s.d,
                    s.count,
                    json_float(s.median_total),
                    json_float(s.q10_total),
                    json_float(s.q90_total),
                    json_float(s.median_bias_sq),
                    json_float(s.median_variance),
                    json_float(s.median_oracle_total)
                )?;
            }
        }
    }
    Ok(())
}

pub fn emit_summary(summary: &[SummaryRow], format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_summary(summary, format, &mut out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Parse a version 1 CSV table; the header must match exactly.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| Error::Table(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Table(format!(
            "header mismatch: expected {CSV_HEADER:?}, got {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize::<SweepRow>()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Table(format!("row {}: {e}", i + 1))))
        .collect()
}

/// Parse JSON lines; blank lines are skipped.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Table(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: SweepRow = serde_json::from_str(&line).map_err(|e| Error::Table(format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}
