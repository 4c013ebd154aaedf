//! Measurement CSV: the wire format for raw throughput observations.
//!
//! Schema (bit-exact header, UTF-8, `.` decimal point, no thousands
//! separators):
//!
//! ```text
//! platform,operator,packet_size_bytes,throughput_pps,run_id
//! ```
//!
//! `run_id` may be blank. Throughput is written in Rust's shortest
//! round-trip decimal form, so emit → parse is value-exact.

use std::path::Path;

use crate::model::{validate_record, MeasurementRecord};

use super::IoError;

pub const CSV_HEADER: [&str; 5] = [
    "platform",
    "operator",
    "packet_size_bytes",
    "throughput_pps",
    "run_id",
];

/// Parses a measurement CSV, validating the header and every row. Malformed
/// rows are reported with their line number.
pub fn parse_measurements_csv(path: &Path) -> Result<Vec<MeasurementRecord>, IoError> {
    let display = path.display().to_string();
    let content = std::fs::read_to_string(path)?;
    if content.trim().is_empty() {
        return Err(IoError::EmptyFile { path: display });
    }
    parse_measurements_str(&content, &display)
}

/// [`parse_measurements_csv`] over an in-memory document.
pub fn parse_measurements_str(
    content: &str,
    source_name: &str,
) -> Result<Vec<MeasurementRecord>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(content.as_bytes());

    let expected = CSV_HEADER.join(",");
    let header_ok = match reader.headers() {
        Ok(headers) => {
            headers.len() == CSV_HEADER.len()
                && headers.iter().zip(CSV_HEADER).all(|(got, want)| got == want)
        }
        Err(_) => false,
    };
    if !header_ok {
        return Err(IoError::MissingHeader {
            path: source_name.to_string(),
            expected,
        });
    }

    let mut records = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let line = |r: &csv::StringRecord| {
            r.position().map_or(index as u64 + 2, |p| p.line())
        };
        let bad = |line: u64, reason: String| IoError::BadRow {
            path: source_name.to_string(),
            line,
            reason,
        };

        let row = row.map_err(|e| {
            let line = e
                .position()
                .map_or(index as u64 + 2, csv::Position::line);
            bad(line, e.to_string())
        })?;
        let line = line(&row);
        if row.len() != CSV_HEADER.len() {
            return Err(bad(
                line,
                format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
            ));
        }

        let packet_size: u32 = row[2]
            .trim()
            .parse()
            .map_err(|_| bad(line, format!("non-integer packet_size_bytes \"{}\"", &row[2])))?;
        let throughput_pps: f64 = row[3]
            .trim()
            .parse()
            .map_err(|_| bad(line, format!("non-numeric throughput_pps \"{}\"", &row[3])))?;
        let run_id = match row[4].trim() {
            "" => None,
            s => Some(
                s.parse::<u32>()
                    .map_err(|_| bad(line, format!("non-integer run_id \"{s}\"")))?,
            ),
        };

        let record = MeasurementRecord {
            platform: row[0].to_string(),
            operator: row[1].to_string(),
            packet_size,
            throughput_pps,
            run_id,
        };
        records.push(validate_record(record).map_err(|e| bad(line, e.to_string()))?);
    }
    Ok(records)
}

/// Serializes records in schema order. Deterministic: identical input
/// yields identical bytes.
pub fn emit_measurements_csv(records: &[MeasurementRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        writer
            .write_record([
                r.platform.as_str(),
                r.operator.as_str(),
                &r.packet_size.to_string(),
                &format!("{}", r.throughput_pps),
                &r.run_id.map_or_else(String::new, |id| id.to_string()),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_well_formed_file() {
        let f = write_temp(
            "platform,operator,packet_size_bytes,throughput_pps,run_id\n\
             arm,baseline,64,4500000,1\n\
             arm,CRC,64,1.2e7,\n\
             arm,CRC,128,900000.5,2\n",
        );
        let records = parse_measurements_csv(f.path()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].run_id, Some(1));
        assert_eq!(records[1].throughput_pps, 1.2e7);
        assert_eq!(records[1].run_id, None);
        assert_eq!(records[2].packet_size, 128);
    }

    #[test]
    fn rejects_non_numeric_throughput_with_line_number() {
        let f = write_temp(
            "platform,operator,packet_size_bytes,throughput_pps,run_id\n\
             arm,CRC,64,abc,\n",
        );
        match parse_measurements_csv(f.path()).unwrap_err() {
            IoError::BadRow { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("abc"), "{reason}");
            }
            other => panic!("expected BadRow, got {other}"),
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let f = write_temp("a,b,c,d,e\narm,CRC,64,1e6,\n");
        assert!(matches!(
            parse_measurements_csv(f.path()).unwrap_err(),
            IoError::MissingHeader { .. }
        ));
    }

    #[test]
    fn rejects_empty_file() {
        let f = write_temp("");
        assert!(matches!(
            parse_measurements_csv(f.path()).unwrap_err(),
            IoError::EmptyFile { .. }
        ));
    }

    #[test]
    fn header_only_file_yields_no_records() {
        let f = write_temp("platform,operator,packet_size_bytes,throughput_pps,run_id\n");
        assert!(parse_measurements_csv(f.path()).unwrap().is_empty());
    }

    #[test]
    fn rejects_invalid_record_values() {
        let f = write_temp(
            "platform,operator,packet_size_bytes,throughput_pps,run_id\n\
             arm,CRC,64,0,\n",
        );
        match parse_measurements_csv(f.path()).unwrap_err() {
            IoError::BadRow { line: 2, reason, .. } => {
                assert!(reason.contains("positive"), "{reason}")
            }
            other => panic!("expected BadRow, got {other}"),
        }
    }

    #[test]
    fn rejects_short_rows() {
        let f = write_temp(
            "platform,operator,packet_size_bytes,throughput_pps,run_id\n\
             arm,CRC,64,1e6\n",
        );
        match parse_measurements_csv(f.path()).unwrap_err() {
            IoError::BadRow { reason, .. } => assert!(reason.contains("fields"), "{reason}"),
            other => panic!("expected BadRow, got {other}"),
        }
    }

    #[test]
    fn emitted_header_is_bit_exact() {
        let csv = emit_measurements_csv(&[]);
        assert_eq!(
            csv,
            "platform,operator,packet_size_bytes,throughput_pps,run_id\n"
        );
    }

    proptest! {
        // emit → parse returns value-equal records.
        #[test]
        fn prop_csv_round_trip(
            rows in proptest::collection::vec(
                (1u32..65536, 1e-3f64..1e15, proptest::option::of(0u32..100)),
                0..20,
            ),
        ) {
            let records: Vec<MeasurementRecord> = rows
                .iter()
                .map(|&(size, pps, run)| MeasurementRecord {
                    platform: "p".into(),
                    operator: "op".into(),
                    packet_size: size,
                    throughput_pps: pps,
                    run_id: run,
                })
                .collect();
            let text = emit_measurements_csv(&records);
            let parsed = parse_measurements_str(&text, "mem").unwrap();
            prop_assert_eq!(parsed, records);
        }
    }
}
