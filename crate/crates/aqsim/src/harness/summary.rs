//! Per-(n, scheme) median summaries of run records, and the plot-ready
//! `fig3.csv` artifact.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::stats::{median_ci, MIN_SAMPLES};

use super::records::{RunRecord, RunStatus};
use super::HarnessError;

/// One `fig3.csv` row: the median minimal runtime for a scheme at one
/// size, with its distribution-free 95% CI and censoring count.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub scheme: String,
    pub median_t: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Uncensored sample size entering the median.
    pub s: usize,
    /// Runtime-exceeded records: counted, never averaged in.
    pub censored: usize,
}

/// Group records and compute medians. Groups without enough uncensored
/// samples are skipped and explained in the returned warnings.
pub fn summarize(records: &[RunRecord]) -> (Vec<SummaryRow>, Vec<String>) {
    let mut groups: BTreeMap<(usize, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.scheme.clone())).or_default().push(r);
    }
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for ((n, scheme), group) in groups {
        let mut samples: Vec<f64> = Vec::new();
        let mut censored = 0usize;
        let mut failed = 0usize;
        for r in &group {
            match r.status {
                RunStatus::Ok => samples.push(r.t_min.expect("ok records carry t_min")),
                RunStatus::RuntimeExceeded => censored += 1,
                RunStatus::Failed => failed += 1,
            }
        }
        if failed > 0 {
            warnings.push(format!(
                "n={n} {scheme}: {failed} failed record(s) excluded"
            ));
        }
        if samples.len() < MIN_SAMPLES {
            warnings.push(format!(
                "n={n} {scheme}: skipped, only {} uncensored sample(s) \
                 (need {MIN_SAMPLES} for a 95% CI)",
                samples.len()
            ));
            continue;
        }
        let ci = median_ci(&samples).expect("size checked above");
        rows.push(SummaryRow {
            n,
            scheme,
            median_t: ci.median,
            ci_lo: ci.lo,
            ci_hi: ci.hi,
            s: ci.s,
            censored,
        });
    }
    (rows, warnings)
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Write `fig3.csv` with the fixed column order
/// `n,scheme,median_T,ci_lo,ci_hi,s,censored`.
pub fn write_fig3_csv(rows: &[SummaryRow], path: &Path) -> Result<(), HarnessError> {
    let mut text = String::from("n,scheme,median_T,ci_lo,ci_hi,s,censored\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            row.scheme,
            fmt(row.median_t),
            fmt(row.ci_lo),
            fmt(row.ci_hi),
            row.s,
            row.censored
        ));
    }
    let io_err = |source: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, scheme: &str, seed: u64, t: Option<f64>, status: RunStatus) -> RunRecord {
        RunRecord {
            n,
            instance_id: format!("n{n}-s{seed}"),
            instance_seed: seed,
            m: 4,
            scheme: scheme.to_string(),
            k: None,
            delta: None,
            status,
            t_min: t,
            fidelity: if status == RunStatus::Ok { 0.2 } else { 0.01 },
            fidelity_target: 0.125,
            norm_drift: 1e-9,
            sigma_z_drift: None,
            steps: 100,
            wall_secs: 0.0,
            error: None,
        }
    }

    #[test]
    fn censored_records_counted_not_averaged() {
        let mut records: Vec<RunRecord> = (0..99)
            .map(|i| record(9, "xy_ec3", i, Some(10.0 + i as f64), RunStatus::Ok))
            .collect();
        records.push(record(9, "xy_ec3", 99, None, RunStatus::RuntimeExceeded));
        let (rows, warnings) = summarize(&records);
        assert!(warnings.is_empty());
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].s, 99);
        assert_eq!(rows[0].censored, 1);
        assert_eq!(rows[0].median_t, 59.0);
    }

    #[test]
    fn cardinality_two_schemes_three_sizes() {
        let mut records = Vec::new();
        for n in [6usize, 9, 12] {
            for scheme in ["xy_ec3", "conventional"] {
                for i in 0..10 {
                    records.push(record(n, scheme, i, Some(5.0 + i as f64), RunStatus::Ok));
                }
            }
        }
        let (rows, warnings) = summarize(&records);
        assert_eq!(rows.len(), 6);
        assert!(warnings.is_empty());
        // deterministic ordering: by n, then scheme
        let order: Vec<(usize, &str)> = rows.iter().map(|r| (r.n, r.scheme.as_str())).collect();
        assert_eq!(
            order,
            vec![
                (6, "conventional"),
                (6, "xy_ec3"),
                (9, "conventional"),
                (9, "xy_ec3"),
                (12, "conventional"),
                (12, "xy_ec3"),
            ]
        );
    }

    #[test]
    fn small_groups_are_skipped_with_warning() {
        let records: Vec<RunRecord> = (0..5)
            .map(|i| record(6, "ising", i, Some(4.0), RunStatus::Ok))
            .collect();
        let (rows, warnings) = summarize(&records);
        assert!(rows.is_empty());
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("skipped"), "{}", warnings[0]);
    }

    #[test]
    fn csv_bytes_are_deterministic() {
        let records: Vec<RunRecord> = (0..10)
            .map(|i| record(6, "grover", i, Some(7.0 + (i % 3) as f64), RunStatus::Ok))
            .collect();
        let (rows, _) = summarize(&records);
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_fig3_csv(&rows, &a).unwrap();
        write_fig3_csv(&rows, &b).unwrap();
        let bytes = std::fs::read(&a).unwrap();
        assert_eq!(bytes, std::fs::read(&b).unwrap());
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "n,scheme,median_T,ci_lo,ci_hi,s,censored"
        );
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 7);
    }
}
