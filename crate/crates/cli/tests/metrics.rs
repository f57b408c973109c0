mod common;

use std::fs;

use common::*;

fn one_hot(r: usize, c: usize) -> impl Fn(usize, usize) -> f32 {
    move |i, j| if (i, j) == (r, c) { 1.0 } else { 0.0 }
}

/// Marginal extent of cells `lo..hi` on a 10-cell axis with one unit of mass
/// at `peak`, after the per-entry floor: the oracle for the box ratios.
fn extent(lo: usize, hi: usize, peaks: &[usize]) -> f64 {
    let eps = 1e-8;
    let mass = |k: usize| peaks.iter().filter(|p| **p == k).count() as f64 + eps;
    let total: f64 = (0..10).map(mass).sum();
    let inside: f64 = (lo..hi).map(mass).sum();
    10.0 * inside / total
}

#[test]
fn corpus_report_matches_hand_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    write_map(&dir.path().join("hit.atw"), 10, 10, one_hot(5, 5));
    write_map(&dir.path().join("miss.atw"), 10, 10, one_hot(0, 0));
    write_map(&dir.path().join("tie.atw"), 10, 10, |i, j| {
        if (i, j) == (1, 1) || (i, j) == (9, 9) {
            3.0
        } else {
            0.0
        }
    });
    save_png(&pattern_image(10, 10, 1), &dir.path().join("hit.png"));
    let lines = [
        r#"{"image_path": "hit.png", "attention_path": "hit.atw", "boxes": [[4, 4, 8, 8]]}"#,
        r#"{"attention_path": "miss.atw", "boxes": [[4, 4, 8, 8]]}"#,
        "{ this is not json",
        r#"{"id": "tie", "attention_path": "tie.atw", "boxes": [[0, 0, 2, 2]]}"#,
        r#"{"attention_path": "nowhere.atw", "boxes": [[0, 0, 2, 2]]}"#,
        "",
    ];
    let ann = dir.path().join("ann.jsonl");
    fs::write(&ann, lines.join("\n")).unwrap();
    let out_dir = dir.path().join("report");
    let out = run(attwarp().args(["metrics", "--annotations"]).arg(&ann).arg("--out-dir").arg(&out_dir));
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped 2"));

    let report = read_json(&out_dir.join("metrics.json"));
    assert_eq!(report["skipped_lines"], 2);
    let samples = report["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 3);
    assert_eq!(samples[0]["id"], "hit.png");
    assert_eq!(samples[1]["id"], "line 2");
    assert_eq!(samples[2]["id"], "tie");

    let hits = [true, false, true];
    let props = [1.0, 0.0, 0.5];
    // per-box area ratios from the marginal extents of each map
    let ratios = [
        (extent(4, 8, &[5]) / 4.0).powi(2),
        (extent(4, 8, &[0]) / 4.0).powi(2),
        (extent(0, 2, &[1, 9]) / 2.0).powi(2),
    ];
    for (k, s) in samples.iter().enumerate() {
        assert_eq!(s["pointing_game_hit"], hits[k]);
        assert!((s["proportion"].as_f64().unwrap() - props[k]).abs() < 1e-12);
        let r = s["expansion_ratios"][0].as_f64().unwrap();
        assert!((r - ratios[k]).abs() < 1e-6 * ratios[k].max(1.0), "{r} vs {}", ratios[k]);
    }

    let summary = &report["summary"];
    assert_eq!(summary["samples"], 3);
    assert!((summary["pointing_game_rate"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((summary["mean_proportion"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(summary["boxes_measured"], 3);
    assert_eq!(summary["zero_area_boxes"], 0);
    let expanded = ratios.iter().filter(|r| **r > 1.0).count() as f64 / 3.0;
    let increase = ratios.iter().map(|r| r - 1.0).sum::<f64>() / 3.0;
    assert!((summary["fraction_expanded"].as_f64().unwrap() - expanded).abs() < 1e-12);
    assert!((summary["mean_area_increase"].as_f64().unwrap() - increase).abs() < 1e-6);

    let table = fs::read_to_string(out_dir.join("metrics.txt")).unwrap();
    assert!(table.contains("pointing game        0.6667"), "{table}");
    assert!(table.contains("skipped lines        2"));
    assert_eq!(report["provenance"]["command"], "metrics");
}

#[test]
fn zero_area_boxes_are_counted_apart() {
    let dir = tempfile::tempdir().unwrap();
    write_map(&dir.path().join("a.atw"), 10, 10, one_hot(3, 3));
    let ann = dir.path().join("ann.jsonl");
    fs::write(
        &ann,
        r#"{"attention_path": "a.atw", "boxes": [[2, 2, 5, 5], [3, 3, 3, 6]]}"#,
    )
    .unwrap();
    let out = run(attwarp().args(["metrics", "--annotations"]).arg(&ann).arg("--out-dir").arg(dir.path()));
    assert_eq!(code(&out), 0);
    let report = read_json(&dir.path().join("metrics.json"));
    assert_eq!(report["summary"]["boxes_measured"], 1);
    assert_eq!(report["summary"]["zero_area_boxes"], 1);
    assert_eq!(report["samples"][0]["proportion"], 1.0);
}

#[test]
fn nothing_usable_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("ann.jsonl");
    fs::write(&ann, "garbage\n{}\n").unwrap();
    let out = run(attwarp().args(["metrics", "--annotations"]).arg(&ann).arg("--out-dir").arg(dir.path()));
    assert_eq!(code(&out), 1);
}
