//! Byte-stable CSV and JSONL result export.

use std::fs;
use std::path::Path;

use super::config::HarnessError;
use super::metrics::MetricsReport;

pub fn to_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(MetricsReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn to_jsonl(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Defense;

    fn report(seed: u64) -> MetricsReport {
        MetricsReport {
            scenario_id: "s".into(),
            seed,
            defense: Defense::UiTrust,
            sybil_ratio: 0.1,
            misdetection_rate: 0.0,
            false_positives: 0,
            false_negatives: 0,
            pdr: 0.95,
            detection_latency_s: Some(120.0),
            overhead_bytes: 1000,
            energy_j: 1.5,
            detection_ratio_timeseries: vec![],
            data_originated: 10,
            data_delivered: 9,
            pending_evictions: 0,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        assert_eq!(to_csv(&[]), format!("{}\n", MetricsReport::CSV_HEADER));
    }

    #[test]
    fn rows_appear_in_run_order() {
        let csv = to_csv(&[report(2), report(1)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("s,2,"));
        assert!(lines[2].starts_with("s,1,"));
    }

    #[test]
    fn identical_input_gives_identical_bytes() {
        let a = to_csv(&[report(1)]);
        let b = to_csv(&[report(1)]);
        assert_eq!(a, b);
        assert_eq!(to_jsonl(&[report(1)]), to_jsonl(&[report(1)]));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = write_file(Path::new("/proc/definitely/not/writable.csv"), "x").unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
