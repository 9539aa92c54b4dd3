//! Results CSV: one row per (scenario, arm, λ₁, class, metric).

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use routerq::scenario::{MetricsReport, ReportRow};
use routerq::stats::Estimate;

pub const HEADER: [&str; 9] = [
    "scenario",
    "arm",
    "lambda1",
    "class",
    "metric",
    "mean",
    "ci95_lo",
    "ci95_hi",
    "replications",
];

/// Nine significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_csv<W: Write>(report: &MetricsReport, out: W) -> Result<()> {
    let mut sorted = report.clone();
    sorted.sort_rows();
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    writer.write_record(HEADER)?;
    for row in &sorted.rows {
        writer.write_record([
            row.scenario.clone(),
            row.arm.clone(),
            format_number(row.lambda1),
            row.class.clone(),
            row.metric.name().to_string(),
            format_number(row.estimate.mean),
            format_number(row.estimate.ci95_lo),
            format_number(row.estimate.ci95_hi),
            row.estimate.replications.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn emit_csv(report: &MetricsReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(report, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(input: R) -> Result<MetricsReport> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        bail!("unexpected CSV header: {}", header.join(","));
    }
    let mut report = MetricsReport::default();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .with_context(|| format!("line {line}: bad number `{}` in column {}", &record[i], HEADER[i]))
        };
        let row = ReportRow {
            scenario: record[0].to_string(),
            arm: record[1].to_string(),
            lambda1: num(2)?,
            class: record[3].to_string(),
            metric: record[4].parse().with_context(|| format!("line {line}"))?,
            estimate: Estimate {
                mean: num(5)?,
                ci95_lo: num(6)?,
                ci95_hi: num(7)?,
                replications: record[8]
                    .parse()
                    .with_context(|| format!("line {line}: bad replication count"))?,
            },
        };
        if report.scenario.is_empty() {
            report.scenario = row.scenario.clone();
        }
        report.rows.push(row);
    }
    Ok(report)
}

pub fn load_csv(path: &Path) -> Result<MetricsReport> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use routerq::Metric;

    fn row(arm: &str, lambda1: f64, class: &str, metric: Metric, mean: f64) -> ReportRow {
        ReportRow {
            scenario: "A".into(),
            arm: arm.into(),
            lambda1,
            class: class.into(),
            metric,
            estimate: Estimate {
                mean,
                ci95_lo: mean * 0.9,
                ci95_hi: mean * 1.1,
                replications: 20,
            },
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&MetricsReport::default(), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,arm,lambda1,class,metric,mean,ci95_lo,ci95_hi,replications\n"
        );
    }

    #[test]
    fn rows_are_sorted_and_formatted() {
        let report = MetricsReport {
            scenario: "A".into(),
            rows: vec![
                row("HOL", 2e5, "VT", Metric::W, 6.3620123456e-7),
                row("FCFS", 2e5, "VT", Metric::W, 1.0),
                row("FCFS", 1e5, "total", Metric::Pl, 0.0),
                row("FCFS", 1e5, "FF", Metric::Util, 0.25),
            ],
            failures: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "A,FCFS,1.00000000e5,FF,UTIL,2.50000000e-1,2.25000000e-1,2.75000000e-1,20");
        assert!(lines[2].starts_with("A,FCFS,1.00000000e5,total,PL,0.00000000e0"));
        assert!(lines[3].starts_with("A,FCFS,2.00000000e5,VT,W,"));
        assert!(lines[4].starts_with("A,HOL,2.00000000e5,VT,W,6.36201235e-7"));

        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.rows.len(), 4);
        assert_eq!(back.scenario, "A");
        assert_eq!(back.rows[3].estimate.mean, 6.36201235e-7);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }
}
