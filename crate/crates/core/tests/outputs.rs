mod common;

use std::fs;
use std::path::Path;

use common::*;
use sezsim::io::read_labeled_matrix;
use sezsim::pipeline::{stored_report, MANIFEST_FILE};
use sezsim::{
    parse_scenario, run_pipeline, verify_manifest, write_outputs, Error, Mode, PipelineResults,
};

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn empty_results_write_only_the_resolved_scenario() {
    let s = fixture();
    let dir = tempfile::tempdir().unwrap();
    let m = write_outputs(&PipelineResults::default(), &s, dir.path()).unwrap();
    assert!(!m.entries.is_empty());
    assert!(m.entries.iter().all(|e| e.path.starts_with("scenario")));
    let back = parse_scenario(&dir.path().join("scenario/scenario.toml")).unwrap();
    assert_eq!(back, s);
}

#[test]
fn compare_outputs_are_complete_and_verified() {
    let s = fixture();
    let dir = tempfile::tempdir().unwrap();
    let results = run_pipeline(&s, Mode::Compare).unwrap();
    let m = write_outputs(&results, &s, dir.path()).unwrap();
    for run in ["baseline", "sanctions"] {
        for f in [
            "zone_grp.csv",
            "events.csv",
            "run_summary.csv",
            "indicator_summary.csv",
        ] {
            assert!(m.get(&format!("{run}/{f}")).is_some(), "{run}/{f}");
        }
        for f in [
            "trajectory.csv",
            "plan.csv",
            "observations.csv",
            "accounts.csv",
            "surface.csv",
            "indicator.csv",
        ] {
            assert!(
                m.get(&format!("{run}/wood-resident/{f}")).is_some(),
                "{run}/{f}"
            );
        }
    }
    assert!(m.get("damage_report.csv").is_some());
    assert!(m.get("damage_report.txt").is_some());
    let paths: Vec<_> = m.entries.iter().map(|e| e.path.clone()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert_eq!(verify_manifest(dir.path()).unwrap(), m);

    let text = fs::read_to_string(dir.path().join("damage_report.txt")).unwrap();
    assert!(text.contains("loss") && text.contains("drop"), "{text}");
    let report = stored_report(dir.path()).unwrap();
    assert!(report.contains("verified"));

    let surface = read_csv(&dir.path().join("sanctions/wood-resident/surface.csv"));
    assert_eq!(surface[0], ["t", "s", "r"]);
    assert_eq!(surface.len(), 1 + 60 * 60);
    let g = read_csv(&dir.path().join("sanctions/wood-resident/indicator.csv"));
    assert_eq!(g[0], ["t", "G"]);
    assert_eq!(g.len(), 61);
    let events = read_csv(&dir.path().join("sanctions/events.csv"));
    assert!(events.iter().any(|r| r[2] == "technical_default"));
    assert!(!fs::read(dir.path().join(MANIFEST_FILE))
        .unwrap()
        .contains(&b'\r'));
}

#[test]
fn tampering_is_detected() {
    let s = fixture();
    let dir = tempfile::tempdir().unwrap();
    let results = run_pipeline(&s, Mode::Baseline).unwrap();
    write_outputs(&results, &s, dir.path()).unwrap();
    let p = dir.path().join("baseline/zone_grp.csv");
    let mut bytes = fs::read(&p).unwrap();
    bytes.push(b'\n');
    fs::write(&p, bytes).unwrap();
    assert!(matches!(
        verify_manifest(dir.path()),
        Err(Error::Checksum(_))
    ));
}

#[test]
fn baseline_twice_is_byte_identical() {
    let s = fixture();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_outputs(&run_pipeline(&s, Mode::Baseline).unwrap(), &s, d.path()).unwrap();
    }
    assert_eq!(tree_files(dirs[0].path()), tree_files(dirs[1].path()));
}

#[test]
fn measures_table_has_nine_controls_plus_channels() {
    let s = fixture();
    let results = run_pipeline(&s, Mode::Measures).unwrap();
    assert_eq!(results.measures.len(), 9 + s.measures.disturbances.len());
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&results, &s, dir.path()).unwrap();
    let rows = read_csv(&dir.path().join("measures.csv"));
    assert_eq!(
        rows[0],
        [
            "measure",
            "label",
            "delta",
            "annual_grp_pct",
            "annual_grp_bn"
        ]
    );
    assert_eq!(rows.len(), 1 + 9 + s.measures.disturbances.len());
    assert_eq!(rows[1][0], "u1");
    assert_eq!(rows[10][0], "v10");
}

#[test]
fn sanctions_mode_requires_a_regime() {
    let mut s = fixture();
    s.regimes.clear();
    assert!(matches!(
        run_pipeline(&s, Mode::Sanctions),
        Err(Error::Validation(_))
    ));
}

/// Loss recomputed from the exported trajectories with only H and plain sums.
#[test]
fn damage_matches_spreadsheet_recomputation() {
    let s = fixture();
    let dir = tempfile::tempdir().unwrap();
    let results = run_pipeline(&s, Mode::Compare).unwrap();
    write_outputs(&results, &s, dir.path()).unwrap();

    let h = read_labeled_matrix(&dir.path().join("scenario/wood-resident/H.csv")).unwrap();
    let total = |run: &str| -> f64 {
        let x = read_labeled_matrix(
            &dir.path()
                .join(format!("{run}/wood-resident/trajectory.csv")),
        )
        .unwrap();
        assert_eq!(x.row_labels, h.col_labels);
        let mut sum = 0.0;
        for t in 0..x.values.ncols() {
            for j in 0..x.values.nrows() {
                sum += h.values[(0, j)] * x.values[(j, t)];
            }
        }
        sum / 1e6
    };
    let (b, a) = (total("baseline"), total("sanctions"));
    let loss = (b - a) / b * 100.0;

    let report = read_csv(&dir.path().join("damage_report.csv"));
    let value = |key: &str| -> f64 {
        report.iter().find(|r| r[0] == key).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!((value("baseline_grp_bn") - b).abs() <= 1e-9 * b);
    assert!((value("sanctioned_grp_bn") - a).abs() <= 1e-9 * a);
    assert!((value("loss_pct") - loss).abs() <= 1e-9);
    assert!((results.damage.unwrap().loss_pct - loss).abs() <= 1e-9);
}

#[test]
fn exported_numbers_round_trip_bitwise() {
    let s = fixture();
    let dir = tempfile::tempdir().unwrap();
    let results = run_pipeline(&s, Mode::Sanctions).unwrap();
    write_outputs(&results, &s, dir.path()).unwrap();
    let x =
        read_labeled_matrix(&dir.path().join("sanctions/wood-resident/trajectory.csv")).unwrap();
    let original = results.runs[0].trajectory.enterprises[0].realized.values();
    for (a, b) in x.values.iter().zip(original.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
