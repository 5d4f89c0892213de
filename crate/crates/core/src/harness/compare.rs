//! Cross-method and cross-run comparison of sweep tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{ComparisonRow, RowKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Pass,
    /// Known disagreement: reported, never fatal.
    Fail,
}

/// Tolerance on the relative difference between two methods over an alpha range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub name: String,
    pub methods: [String; 2],
    #[serde(default)]
    pub alpha_min: f64,
    #[serde(default = "one")]
    pub alpha_max: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub expect: Expect,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Bands {
    /// Allowed relative difference between tables for the same key.
    #[serde(default)]
    pub table_tolerance: f64,
    #[serde(default, rename = "band")]
    pub bands: Vec<Band>,
}

impl Bands {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Bands> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl Default for Band {
    fn default() -> Self {
        Band {
            name: String::new(),
            methods: [String::new(), String::new()],
            alpha_min: 0.0,
            alpha_max: 1.0,
            tolerance: 0.0,
            expect: Expect::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandOutcome {
    pub band: Band,
    pub table: String,
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// `(key, relative difference)` of every table against the first.
    pub table_deviations: Vec<(RowKey, f64)>,
    pub table_tolerance: f64,
    pub bands: Vec<BandOutcome>,
}

impl CompareReport {
    pub fn max_table_deviation(&self) -> f64 {
        self.table_deviations
            .iter()
            .map(|d| d.1)
            .fold(0.0, f64::max)
    }

    /// True when the tables agree and every band expected to pass does.
    pub fn success(&self) -> bool {
        self.max_table_deviation() <= self.table_tolerance
            && self
                .bands
                .iter()
                .all(|b| b.passed || b.band.expect == Expect::Fail)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if !self.table_deviations.is_empty() {
            let mean = self.table_deviations.iter().map(|d| d.1).sum::<f64>()
                / self.table_deviations.len() as f64;
            let _ = writeln!(
                s,
                "tables: {} shared keys, max deviation {:.3e}, mean {:.3e}, tolerance {:.3e}",
                self.table_deviations.len(),
                self.max_table_deviation(),
                mean,
                self.table_tolerance
            );
        }
        for b in &self.bands {
            let status = match (b.passed, b.band.expect) {
                (true, _) => "ok",
                (false, Expect::Fail) => "flagged (expected)",
                (false, Expect::Pass) => "FAILED",
            };
            let _ = writeln!(
                s,
                "{} [{}]: {} vs {} alpha in [{}, {}]: n={} max={:.3e} mean={:.3e} tol={} -> {}",
                b.band.name,
                b.table,
                b.band.methods[0],
                b.band.methods[1],
                b.band.alpha_min,
                b.band.alpha_max,
                b.count,
                b.max,
                b.mean,
                b.band.tolerance,
                status
            );
        }
        s
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish. Two failed (NaN) values agree; one
/// failed value against a number is an infinite deviation.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Compares tables key by key against the first, then applies every band to each table.
pub fn compare_tables(
    tables: &[(String, Vec<ComparisonRow>)],
    bands: &Bands,
) -> Result<CompareReport> {
    let maps: Vec<BTreeMap<RowKey, f64>> = tables
        .iter()
        .map(|(_, rows)| rows.iter().map(|r| (r.key(), r.power)).collect())
        .collect();

    let mut table_deviations = Vec::new();
    if let Some((first, rest)) = maps.split_first() {
        let mut diff = String::new();
        for (k, other) in rest.iter().enumerate() {
            let a: BTreeSet<&RowKey> = first.keys().collect();
            let b: BTreeSet<&RowKey> = other.keys().collect();
            for key in a.difference(&b) {
                let _ = writeln!(diff, "  only in {}: {key}", tables[0].0);
            }
            for key in b.difference(&a) {
                let _ = writeln!(diff, "  only in {}: {key}", tables[k + 1].0);
            }
        }
        if !diff.is_empty() {
            return Err(Error::KeyMismatch(diff));
        }
        for other in rest {
            for (key, a) in first {
                table_deviations.push((key.clone(), relative_difference(*a, other[key])));
            }
        }
    }

    let mut outcomes = Vec::new();
    for ((table, _), map) in tables.iter().zip(&maps) {
        for band in &bands.bands {
            let mut devs = Vec::new();
            for (key, a) in map {
                if key.method != band.methods[0]
                    || !(band.alpha_min..=band.alpha_max).contains(&key.alpha())
                {
                    continue;
                }
                let twin = RowKey {
                    method: band.methods[1].clone(),
                    ..key.clone()
                };
                if let Some(b) = map.get(&twin) {
                    devs.push(relative_difference(*a, *b));
                }
            }
            let max = devs.iter().copied().fold(0.0, f64::max);
            let mean = if devs.is_empty() {
                0.0
            } else {
                devs.iter().sum::<f64>() / devs.len() as f64
            };
            outcomes.push(BandOutcome {
                band: band.clone(),
                table: table.clone(),
                count: devs.len(),
                max,
                mean,
                passed: devs.iter().all(|d| *d <= band.tolerance),
            });
        }
    }

    Ok(CompareReport {
        table_deviations,
        table_tolerance: bands.table_tolerance,
        bands: outcomes,
    })
}

pub fn compare(paths: &[impl AsRef<Path>], bands: &Bands) -> Result<CompareReport> {
    let tables = paths
        .iter()
        .map(|p| Ok((p.as_ref().display().to_string(), read_rows(p)?)))
        .collect::<Result<Vec<_>>>()?;
    compare_tables(&tables, bands)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, alpha: f64, power: f64) -> ComparisonRow {
        ComparisonRow {
            scene: "s".into(),
            method: method.into(),
            alpha,
            source: "port:P1".into(),
            port: "P1".into(),
            power,
            defect: 0.0,
            runtime_ms: 1.0,
            resolution: String::new(),
        }
    }

    #[test]
    fn band_flags_large_deviation() {
        let rows = vec![
            row("rt", 0.1, 0.50),
            row("dea", 0.1, 0.51),
            row("rt", 1.0, 0.0),
            row("pwb", 1.0, 0.027),
        ];
        let bands = Bands {
            table_tolerance: 0.0,
            bands: vec![
                Band {
                    name: "low".into(),
                    methods: ["rt".into(), "dea".into()],
                    alpha_max: 0.1,
                    tolerance: 0.05,
                    ..Band::default()
                },
                Band {
                    name: "high".into(),
                    methods: ["pwb".into(), "rt".into()],
                    alpha_min: 1.0,
                    tolerance: 0.1,
                    expect: Expect::Fail,
                    ..Band::default()
                },
            ],
        };
        let report = compare_tables(&[("t".into(), rows)], &bands).unwrap();
        assert!(report.bands[0].passed);
        assert_eq!(report.bands[0].count, 1);
        assert!(!report.bands[1].passed);
        assert!(report.success());
    }

    #[test]
    fn missing_keys_are_listed() {
        let a = vec![row("rt", 0.1, 0.5), row("rt", 0.2, 0.4)];
        let b = vec![row("rt", 0.1, 0.5)];
        match compare_tables(&[("a".into(), a), ("b".into(), b)], &Bands::default()) {
            Err(Error::KeyMismatch(d)) => {
                assert!(d.contains("only in a") && d.contains("alpha=0.2"))
            }
            other => panic!("expected key mismatch, got {other:?}"),
        }
    }

    #[test]
    fn parses_band_file() {
        let text = r#"
            table_tolerance = 1e-12
            [[band]]
            name = "rt vs dea"
            methods = ["rt", "dea"]
            alpha_max = 0.1
            tolerance = 0.05
            [[band]]
            name = "high loss"
            methods = ["pwb", "rt"]
            alpha_min = 1.0
            tolerance = 0.1
            expect = "fail"
        "#;
        let bands: Bands = toml::from_str(text).unwrap();
        assert_eq!(bands.bands.len(), 2);
        assert_eq!(bands.bands[1].expect, Expect::Fail);
        assert_eq!(bands.bands[0].alpha_min, 0.0);
    }
}
