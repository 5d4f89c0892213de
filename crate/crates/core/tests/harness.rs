use cavityflux::dea::DeaConfig;
use cavityflux::harness::{
    compare, compare_tables, read_rows, run_sweep, Band, Bands, Expect, Method, SourceSpec,
    SweepSpec, CSV_HEADER,
};
use cavityflux::raytrace::RtConfig;
use cavityflux::Error;
use std::collections::HashSet;
use std::path::Path;

fn quick(scene: &str, out: &Path) -> SweepSpec {
    let mut spec = SweepSpec::new(scene, out);
    spec.alphas = vec![0.0, 0.1, 1.0];
    spec.sources = SourceSpec::parse_list("port:P1").unwrap();
    spec.rt = RtConfig {
        n_rays: 1000,
        ..RtConfig::default()
    };
    spec.dea = DeaConfig {
        element_length: Some(0.05),
        n_dir: 16,
        source_rays: 1 << 12,
        ..DeaConfig::default()
    };
    spec
}

/// CSV text with the runtime column blanked.
fn without_runtime(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let col = CSV_HEADER.iter().position(|c| *c == "runtime_ms").unwrap();
    text.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            fields[col] = "";
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_writes_the_documented_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&quick("fig1a", dir.path())).unwrap();
    let text = std::fs::read_to_string(&out.csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    // 3 methods × 3 alphas × 2 ports
    assert_eq!(out.rows.len(), 18);
    let keys: HashSet<_> = out.rows.iter().map(|r| r.key()).collect();
    assert_eq!(keys.len(), out.rows.len());
    for r in &out.rows {
        assert!(r.power >= 0.0 && r.power <= 1.0, "{r:?}");
        assert!(r.defect < 1e-9);
        assert!(r.runtime_ms >= 0.0);
        assert_eq!(r.source, "port:P1");
    }
    assert_eq!(read_rows(&out.csv_path).unwrap(), out.rows);
    let methods: Vec<&str> = out.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods.first(), Some(&"pwb"));
    assert_eq!(methods.last(), Some(&"dea"));
}

#[test]
fn reruns_are_identical_apart_from_runtime() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut spec = quick("fig1a", a.path());
    spec.heatmaps = true;
    spec.heatmap_resolution = 10;
    let first = run_sweep(&spec).unwrap();
    spec.out_dir = b.path().to_path_buf();
    let second = run_sweep(&spec).unwrap();
    assert_eq!(
        without_runtime(&first.csv_path),
        without_runtime(&second.csv_path)
    );
    assert_eq!(first.heatmaps.len(), second.heatmaps.len());
    for (x, y) in first.heatmaps.iter().zip(&second.heatmaps) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(
            std::fs::read(x).unwrap(),
            std::fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn heatmaps_follow_the_naming_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = quick("fig2", dir.path());
    spec.methods = vec![Method::Rt, Method::Dea];
    spec.alphas = vec![0.0];
    spec.sources = SourceSpec::parse_list("table1:all").unwrap();
    spec.heatmaps = true;
    spec.heatmap_resolution = 10;
    let out = run_sweep(&spec).unwrap();
    let names: HashSet<String> = out
        .heatmaps
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for n in 1..=7 {
        for method in ["rt", "dea"] {
            assert!(
                names.contains(&format!("heatmap_{method}_fig2_alpha0_table1-{n}.csv")),
                "{names:?}"
            );
            assert!(names.contains(&format!("heatmap_{method}_fig2_alpha0_table1-{n}.meta")));
        }
    }
    for opening in ["P1", "A"] {
        assert!(names.contains(&format!("heatmap_dea-adjoint-{opening}_fig2_alpha0.csv")));
    }
    // 7 sources × 2 methods + 2 adjoints, each a csv and a meta file.
    assert_eq!(names.len(), 2 * (14 + 2));

    let meta = std::fs::read_to_string(dir.path().join("heatmap_dea-adjoint-P1_fig2_alpha0.meta"))
        .unwrap();
    assert!(meta.contains("opening") && meta.contains("P1"));
    assert!(meta.contains("table1_sources"));
    let csv =
        std::fs::read_to_string(dir.path().join("heatmap_rt_fig2_alpha0_table1-1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().all(|l| l.split(',').count() == 10));
}

#[test]
fn failing_method_is_recorded_and_the_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = quick("fig3", dir.path());
    // Too coarse for fig3's narrow openings.
    spec.dea.element_length = Some(0.05);
    spec.alphas = vec![0.1];
    let out = run_sweep(&spec).unwrap();
    let dea: Vec<_> = out.rows.iter().filter(|r| r.method == "dea").collect();
    assert_eq!(dea.len(), 2);
    for r in &dea {
        assert!(r.power.is_nan() && r.defect.is_nan());
        assert!(r.resolution.starts_with("error: "), "{}", r.resolution);
    }
    assert!(out
        .rows
        .iter()
        .filter(|r| r.method != "dea")
        .all(|r| r.power.is_finite()));
    let back = read_rows(&out.csv_path).unwrap();
    assert!(back
        .iter()
        .filter(|r| r.method == "dea")
        .all(|r| r.power.is_nan()));
}

#[test]
fn invalid_specs_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = quick("fig1a", dir.path());
    spec.alphas = vec![-0.1];
    assert!(matches!(run_sweep(&spec), Err(Error::Validation { .. })));
    let mut spec = quick("fig1a", dir.path());
    spec.sources = SourceSpec::parse_list("port:P9").unwrap();
    assert!(run_sweep(&spec).is_err());
    let mut spec = quick("nowhere.json", dir.path());
    spec.methods = vec![Method::Pwb];
    assert!(run_sweep(&spec).is_err());
    let mut spec = quick("fig1a", dir.path());
    spec.methods.clear();
    assert!(run_sweep(&spec).is_err());
}

#[test]
fn table_compared_with_itself_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&quick("fig1a", dir.path())).unwrap();
    let report = compare(&[&out.csv_path, &out.csv_path], &Bands::default()).unwrap();
    assert_eq!(report.max_table_deviation(), 0.0);
    assert_eq!(report.table_deviations.len(), 18);
    assert!(report.success());
}

#[test]
fn expected_failure_band_is_reported_but_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&quick("fig1a", dir.path())).unwrap();
    let bands: Bands = toml::from_str(
        r#"
        [[band]]
        name = "high loss"
        methods = ["pwb", "rt"]
        alpha_min = 1.0
        alpha_max = 1.0
        tolerance = 0.1
        expect = "fail"

        [[band]]
        name = "lossless"
        methods = ["rt", "dea"]
        alpha_max = 0.0
        tolerance = 0.2
        "#,
    )
    .unwrap();
    let report = compare(&[&out.csv_path], &bands).unwrap();
    assert!(!report.bands[0].passed);
    assert_eq!(report.bands[0].count, 2);
    assert!(report.bands[1].passed, "{}", report.render());
    assert!(report.success());
    assert!(report.render().contains("flagged (expected)"));

    let strict = Bands {
        bands: vec![Band {
            expect: Expect::Pass,
            ..bands.bands[0].clone()
        }],
        ..Bands::default()
    };
    assert!(!compare(&[&out.csv_path], &strict).unwrap().success());
}

#[test]
fn mismatched_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&quick("fig1a", dir.path())).unwrap().rows;
    let mut fewer = rows.clone();
    let dropped = fewer.pop().unwrap();
    let err = compare_tables(
        &[("a".into(), rows), ("b".into(), fewer)],
        &Bands::default(),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::KeyMismatch(_)));
    assert!(
        msg.contains("only in a") && msg.contains(&dropped.port),
        "{msg}"
    );
}
