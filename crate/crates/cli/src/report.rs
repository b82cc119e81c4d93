//! Report serialization and the ladder renderer.
//!
//! CSV columns, in order:
//!
//! ```text
//! stage,direction,n,c,h,w,precision,kchunk,c_slice,c_proxy,workers,repeats,
//! median_ns,min_ns,p90_ns,bytes_est,throughput_bps,seed
//! ```
//!
//! JSON is an array of objects with the same field names; both formats print
//! numbers with shortest-roundtrip formatting, so the numeric values parse
//! back identically from either. Aborted measurements are carried in JSON as
//! objects with an `error` field; the fixed-column CSV cannot express them,
//! so they are reported on stderr and skipped there.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::bench::{compare_stages, LadderRow, Measurement, SweepEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse_token(s: &str) -> Option<Self> {
        match s {
            "csv" | "CSV" => Some(ReportFormat::Csv),
            "json" | "JSON" => Some(ReportFormat::Json),
            _ => None,
        }
    }

    /// Infer from a path extension; CSV when in doubt.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// Streaming report writer: entries are flushed as they arrive so a partial
/// sweep still leaves a readable file.
pub struct ReportWriter {
    inner: Inner,
}

enum Inner {
    Csv(csv::Writer<BufWriter<File>>),
    Json {
        out: BufWriter<File>,
        wrote_any: bool,
    },
}

impl ReportWriter {
    pub fn create(path: &Path, format: ReportFormat) -> Result<Self> {
        let file = File::create(path)
            .with_context(|| format!("cannot create report file {}", path.display()))?;
        let buf = BufWriter::new(file);
        let inner = match format {
            ReportFormat::Csv => {
                // The header is written explicitly so even an empty sweep
                // leaves a well-formed file.
                let mut w = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_writer(buf);
                w.write_record(CSV_HEADER)?;
                w.flush()?;
                Inner::Csv(w)
            }
            ReportFormat::Json => {
                let mut out = buf;
                out.write_all(b"[")?;
                out.flush()?;
                Inner::Json {
                    out,
                    wrote_any: false,
                }
            }
        };
        Ok(Self { inner })
    }

    pub fn record(&mut self, entry: &SweepEntry) -> Result<()> {
        match &mut self.inner {
            Inner::Csv(w) => {
                if let SweepEntry::Ok(m) = entry {
                    w.serialize(m)?;
                    w.flush()?;
                }
            }
            Inner::Json { out, wrote_any } => {
                if *wrote_any {
                    out.write_all(b",")?;
                }
                out.write_all(b"\n  ")?;
                out.write_all(serde_json::to_string(entry)?.as_bytes())?;
                out.flush()?;
                *wrote_any = true;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        match self.inner {
            Inner::Csv(mut w) => {
                w.flush()?;
            }
            Inner::Json { mut out, .. } => {
                out.write_all(b"\n]\n")?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 18] = [
    "stage",
    "direction",
    "n",
    "c",
    "h",
    "w",
    "precision",
    "kchunk",
    "c_slice",
    "c_proxy",
    "workers",
    "repeats",
    "median_ns",
    "min_ns",
    "p90_ns",
    "bytes_est",
    "throughput_bps",
    "seed",
];

/// Write a complete sweep in one go (used when streaming is not needed).
pub fn write_report(entries: &[SweepEntry], format: ReportFormat, path: &Path) -> Result<()> {
    let mut w = ReportWriter::create(path, format)?;
    for e in entries {
        w.record(e)?;
    }
    w.finish()
}

/// Read measurements back from a CSV or JSON report. JSON error entries are
/// skipped. A malformed header or row is a schema error.
pub fn read_measurements(path: &Path) -> Result<Vec<Measurement>> {
    let mut text = String::new();
    File::open(path)
        .with_context(|| format!("cannot open report file {}", path.display()))?
        .read_to_string(&mut text)
        .with_context(|| format!("cannot read report file {}", path.display()))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(trimmed).context("malformed JSON report")?;
        let mut out = Vec::new();
        for v in values {
            if v.get("error").is_some() {
                continue;
            }
            out.push(
                serde_json::from_value::<Measurement>(v)
                    .context("JSON entry does not match the measurement schema")?,
            );
        }
        return Ok(out);
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    {
        let headers = reader.headers().context("missing CSV header")?;
        let got: Vec<&str> = headers.iter().collect();
        if got != CSV_HEADER {
            bail!(
                "CSV header does not match the report schema (got: {})",
                got.join(",")
            );
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let m: Measurement = row.context("CSV row does not match the report schema")?;
        out.push(m);
    }
    Ok(out)
}

/// Group measurements by configuration point and render a stage ladder per
/// group, ordered S0..S5 with cumulative and per-rung speedups.
pub fn render_ladders(measurements: &[Measurement], out: &mut dyn Write) -> Result<()> {
    let groups = group_measurements(measurements);
    for (key, group) in &groups {
        writeln!(out, "# {key}")?;
        writeln!(
            out,
            "{:<6} {:>14} {:>12} {:>12}",
            "stage", "median_ns", "vs_first", "vs_prev"
        )?;
        let rows = compare_stages(group)?;
        for row in &rows {
            writeln!(
                out,
                "{:<6} {:>14} {:>11.2}x {:>11.2}x",
                row.stage, row.median_ns, row.speedup_vs_first, row.speedup_vs_prev
            )?;
        }
    }
    Ok(())
}

/// Ladders as JSON: an array of `{config, rows}` objects.
pub fn ladders_json(measurements: &[Measurement]) -> Result<serde_json::Value> {
    let groups = group_measurements(measurements);
    let mut arr = Vec::new();
    for (key, group) in &groups {
        let rows: Vec<LadderRow> = compare_stages(group)?;
        arr.push(serde_json::json!({ "config": key, "ladder": rows }));
    }
    Ok(serde_json::Value::Array(arr))
}

fn group_measurements(measurements: &[Measurement]) -> Vec<(String, Vec<Measurement>)> {
    let mut groups: Vec<(String, Vec<Measurement>)> = Vec::new();
    for m in measurements {
        let key = format!(
            "{}x{}x{}x{} dir={} {} kchunk={} c_slice={} c_proxy={} workers={} seed={}",
            m.n,
            m.c,
            m.h,
            m.w,
            m.direction,
            m.precision,
            m.kchunk,
            m.c_slice,
            m.c_proxy,
            m.workers,
            m.seed
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(m.clone()),
            None => groups.push((key, vec![m.clone()])),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Measurement;

    fn sample(stage: &str, median: u64) -> Measurement {
        Measurement {
            stage: stage.into(),
            direction: "L2R".into(),
            n: 4,
            c: 8,
            h: 32,
            w: 32,
            precision: "f32".into(),
            kchunk: 0,
            c_slice: 4,
            c_proxy: 0,
            workers: 2,
            repeats: 5,
            median_ns: median,
            min_ns: median - 1,
            p90_ns: median + 1,
            bytes_est: 123456,
            throughput_bps: 123456.0 / (median as f64 / 1e9),
            seed: 7,
        }
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let entries = vec![
            SweepEntry::Ok(sample("S0", 1000)),
            SweepEntry::Ok(sample("S1", 500)),
        ];
        write_report(&entries, ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 3);
        let back = read_measurements(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], sample("S0", 1000));
    }

    #[test]
    fn empty_sweep_gives_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_report(&[], ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("stage,direction,"));
        assert!(text.ends_with('\n'));
        assert!(read_measurements(&path).unwrap().is_empty());
    }

    #[test]
    fn json_roundtrip_matches_csv_values() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("r.csv");
        let json_path = dir.path().join("r.json");
        let entries = vec![SweepEntry::Ok(sample("S2", 31415))];
        write_report(&entries, ReportFormat::Csv, &csv_path).unwrap();
        write_report(&entries, ReportFormat::Json, &json_path).unwrap();
        assert!(std::fs::read_to_string(&json_path).unwrap().ends_with('\n'));
        let a = read_measurements(&csv_path).unwrap();
        let b = read_measurements(&json_path).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_error_entries_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let entries = vec![
            SweepEntry::Ok(sample("S0", 1000)),
            SweepEntry::Failed {
                stage: "S1".into(),
                direction: "L2R".into(),
                dims: [4, 8, 32, 32],
                error: "stage output mismatch".into(),
            },
        ];
        write_report(&entries, ReportFormat::Json, &path).unwrap();
        let back = read_measurements(&path).unwrap();
        assert_eq!(back.len(), 1);
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "foo,bar\n1,2\n").unwrap();
        assert!(read_measurements(&path).is_err());
    }

    #[test]
    fn ladder_rendering() {
        let ms = vec![
            sample("S0", 100_000_000),
            sample("S1", 50_000_000),
            sample("S2", 10_000_000),
        ];
        let mut buf = Vec::new();
        render_ladders(&ms, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("S0"));
        assert!(text.contains("10.00x"));
        assert!(text.contains("5.00x"));
    }
}
