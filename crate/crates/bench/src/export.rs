//! CSV output with a fixed header and 12 significant digits.

use std::io::Write;
use std::path::Path;

use crate::aggregate::SummaryRow;
use crate::config::Method;
use crate::sweep::TrialRecord;
use crate::BenchError;

pub const RECORD_HEADER: [&str; 11] = [
    "method",
    "gamma_db",
    "sigma_e2",
    "trial",
    "feasible_start",
    "success",
    "total_power",
    "cycles",
    "bisection_steps",
    "integral_evals",
    "runtime_ms",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "method",
    "gamma_db",
    "sigma_e2",
    "n_trials",
    "success_pct",
    "avg_power_common",
    "median_cycles",
    "median_bisections",
];

pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// `x` as it reads back from [`format_float`].
pub fn round_sig(x: f64) -> f64 {
    format_float(x).parse().unwrap_or(x)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Csv { path: path.into(), message: e.to_string() }
}

pub fn write_records_to<W: Write>(out: W, records: &[TrialRecord]) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            format_float(r.gamma_db),
            format_float(r.sigma_e2),
            r.trial.to_string(),
            r.feasible_start.to_string(),
            r.success.to_string(),
            format_float(r.total_power),
            r.cycles.to_string(),
            r.bisection_steps.to_string(),
            r.integral_evals.to_string(),
            format_float(r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_bytes(records: &[TrialRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records_to(&mut buf, records).expect("writing to memory");
    buf
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<(), BenchError> {
    let file = std::fs::File::create(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    write_records_to(file, records).map_err(csv_err(path))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let file = std::fs::File::create(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    let mut w = writer(file);
    let err = csv_err(path);
    w.write_record(SUMMARY_HEADER).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            format_float(r.gamma_db),
            format_float(r.sigma_e2),
            r.n_trials.to_string(),
            format_float(r.success_pct),
            format_float(r.avg_power_common),
            format_float(r.median_cycles),
            format_float(r.median_bisections),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.into(), source })
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, BenchError> {
    let file = std::fs::File::open(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
    let mut rdr = csv::Reader::from_reader(file);
    let err = csv_err(path);
    let header = rdr.headers().map_err(&err)?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(BenchError::Parse { path: path.into(), line: 1, message: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(&err)?;
        let line = i + 2;
        let fail = |message: String| BenchError::Parse { path: path.into(), line, message };
        let f = |j: usize| row[j].parse::<f64>().map_err(|e| fail(format!("{}: {e}", RECORD_HEADER[j])));
        let u = |j: usize| row[j].parse::<usize>().map_err(|e| fail(format!("{}: {e}", RECORD_HEADER[j])));
        let b = |j: usize| row[j].parse::<bool>().map_err(|e| fail(format!("{}: {e}", RECORD_HEADER[j])));
        out.push(TrialRecord {
            method: Method::from_name(&row[0]).ok_or_else(|| fail(format!("unknown method {}", &row[0])))?,
            gamma_db: f(1)?,
            sigma_e2: f(2)?,
            trial: u(3)?,
            feasible_start: b(4)?,
            success: b(5)?,
            total_power: f(6)?,
            cycles: u(7)?,
            bisection_steps: u(8)?,
            integral_evals: u(9)?,
            runtime_ms: f(10)?,
        });
    }
    Ok(out)
}
