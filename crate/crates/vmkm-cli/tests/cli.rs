//! Behavior of the command-line surface: exit codes, file outputs,
//! determinism.

mod common;

use common::{data_file, read_dir_sorted, run};
use tempfile::tempdir;

#[test]
fn cluster_is_deterministic_across_invocations() {
    let out1 = tempdir().unwrap();
    let out2 = tempdir().unwrap();
    let input = data_file("blobs.csv");
    for out in [&out1, &out2] {
        let result = run(&[
            "cluster",
            "--algo",
            "vmkm",
            "--k",
            "3",
            "--seed",
            "7",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.path().to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{result:?}");
        let stdout = String::from_utf8(result.stdout).unwrap();
        assert!(stdout.contains("mse:"), "stdout: {stdout}");
        assert!(stdout.contains("termination_reason:"), "stdout: {stdout}");
    }
    assert_eq!(
        read_dir_sorted(out1.path()),
        read_dir_sorted(out2.path()),
        "outputs differ between identical runs"
    );
}

#[test]
fn alpha0_outside_sanctioned_range_is_a_usage_error() {
    let out = tempdir().unwrap();
    let result = run(&[
        "cluster",
        "--algo",
        "vmkm",
        "--k",
        "3",
        "--alpha0",
        "0.5",
        "--input",
        data_file("blobs.csv").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("alpha0"), "stderr: {stderr}");
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}

#[test]
fn missing_input_exits_3_without_partial_outputs() {
    let out = tempdir().unwrap();
    let result = run(&[
        "cluster",
        "--algo",
        "km",
        "--k",
        "2",
        "--input",
        "/nonexistent/nowhere.csv",
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}

#[test]
fn unimplemented_algorithm_is_a_usage_error_listing_supported() {
    let out = tempdir().unwrap();
    let result = run(&[
        "compare",
        "--algos",
        "vmkm,emkm1",
        "--k",
        "3",
        "--input",
        data_file("blobs.csv").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("emkm1"), "stderr: {stderr}");
    assert!(stderr.contains("vmkm, km, mkm, fcm, kernel"), "stderr: {stderr}");
}

#[test]
fn compare_writes_table_with_row_minimum() {
    let out = tempdir().unwrap();
    let result = run(&[
        "compare",
        "--algos",
        "vmkm,km",
        "--k",
        "3",
        "--seed",
        "13",
        "--input",
        data_file("blobs.csv").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let table = std::fs::read_to_string(out.path().join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "dataset,vmkm,km,min");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "blobs");
    assert!(fields[1].parse::<f64>().is_ok());
    assert!(["vmkm", "km"].contains(&fields[3]));
    assert!(out.path().join("blobs_vmkm_report.json").exists());
    assert!(out.path().join("blobs_km_report.json").exists());
}

#[test]
fn sensitivity_series_has_one_row_per_trial_and_is_reproducible() {
    let out1 = tempdir().unwrap();
    let out2 = tempdir().unwrap();
    for out in [&out1, &out2] {
        let result = run(&[
            "sensitivity",
            "--algos",
            "vmkm,km",
            "--k",
            "3",
            "--trials",
            "20",
            "--seed",
            "35000",
            "--input",
            data_file("blobs.csv").to_str().unwrap(),
            "--output-dir",
            out.path().to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{result:?}");
    }
    let series = std::fs::read_to_string(out1.path().join("sensitivity_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 21);
    assert!(series.starts_with("trial,seed,vmkm,km,min\n"));
    let summary = std::fs::read_to_string(out1.path().join("sensitivity_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert_eq!(read_dir_sorted(out1.path()), read_dir_sorted(out2.path()));
}

#[test]
fn sensitivity_single_trial_summary_equals_the_trial() {
    let out = tempdir().unwrap();
    let result = run(&[
        "sensitivity",
        "--algos",
        "km",
        "--k",
        "2",
        "--trials",
        "1",
        "--seed",
        "4",
        "--input",
        data_file("blobs.csv").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let series = std::fs::read_to_string(out.path().join("sensitivity_series.csv")).unwrap();
    let value: f64 = series
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let summary = std::fs::read_to_string(out.path().join("sensitivity_summary.csv")).unwrap();
    let fields: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    // algorithm,count,mean,std,min,q1,median,q3,max
    assert_eq!(fields[1], "1");
    assert_eq!(fields[2].parse::<f64>().unwrap(), value);
    assert_eq!(fields[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fields[6].parse::<f64>().unwrap(), value);
}

#[test]
fn segment_defaults_to_five_clusters() {
    let out = tempdir().unwrap();
    let result = run(&[
        "segment",
        "--input",
        data_file("random64.pgm").to_str().unwrap(),
        "--seed",
        "3",
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let report: serde_json::Value = serde_json::from_slice(
        &std::fs::read(out.path().join("random64_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["final_state"]["k"], 5);
}

#[test]
fn segment_preserves_image_dimensions() {
    let out = tempdir().unwrap();
    let result = run(&[
        "segment",
        "--input",
        data_file("quadrants.pgm").to_str().unwrap(),
        "--k",
        "2",
        "--seed",
        "0",
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let bytes = std::fs::read(out.path().join("quadrants_segmented.pgm")).unwrap();
    let header = String::from_utf8_lossy(&bytes[..15]);
    assert!(header.starts_with("P5\n64 64\n"), "header: {header}");
}

#[test]
fn segment_rejects_csv_input() {
    let out = tempdir().unwrap();
    let result = run(&[
        "segment",
        "--input",
        data_file("blobs.csv").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(4));
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}

#[test]
fn cluster_accepts_pgm_input() {
    let out = tempdir().unwrap();
    let result = run(&[
        "cluster",
        "--algo",
        "km",
        "--k",
        "4",
        "--seed",
        "1",
        "--input",
        data_file("quadrants.pgm").to_str().unwrap(),
        "--output-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let labels = std::fs::read_to_string(out.path().join("quadrants_km_labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 64 * 64 + 1);
}
