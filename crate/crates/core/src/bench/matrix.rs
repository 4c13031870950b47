use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::Deserialize;

use crate::formula::{parse_system_with, ConstraintSystem, EncodingMode};
use crate::nn::load_network;
use crate::props::{
    build_etcs_scenario, build_mnist_robustness, load_samples_csv, EtcsParams, MnistTarget, PropertySpec,
    DEFAULT_EPSILON,
};
use crate::solver::{solve, SolverConfig};

pub const CSV_HEADER: [&str; 7] = [
    "instance",
    "encoding",
    "verdict",
    "wall_s",
    "decisions",
    "propagations",
    "conflicts",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub encoding: String,
    /// `UNSAT`, `CANDIDATE`, `TIMEOUT`, `RESOURCE_OUT` or `error`.
    pub verdict: String,
    pub wall_s: f64,
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

impl BenchRow {
    fn record(&self) -> [String; 7] {
        [
            self.instance.clone(),
            self.encoding.clone(),
            self.verdict.clone(),
            format!("{:.6}", self.wall_s),
            self.decisions.to_string(),
            self.propagations.to_string(),
            self.conflicts.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Network { path: PathBuf, property: String },
    System(PathBuf),
}

/// One solver run of the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub instance: String,
    pub encoding: EncodingMode,
    pub source: Source,
}

impl Cell {
    pub fn build(&self) -> Result<ConstraintSystem, String> {
        match &self.source {
            Source::System(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                parse_system_with(&text, self.encoding).map_err(|e| format!("{}:{e}", path.display()))
            }
            Source::Network { path, property } => {
                let net = load_network(path).map_err(|e| format!("{}: {e}", path.display()))?;
                match property.parse::<PropertySpec>()? {
                    PropertySpec::Etcs(s) => {
                        build_etcs_scenario(s, &net, &EtcsParams::default(), self.encoding).map_err(|e| e.to_string())
                    }
                    PropertySpec::Mnist { csv, sample, rival } => {
                        let samples = load_samples_csv(&csv).map_err(|e| e.to_string())?;
                        let s = samples
                            .get(sample)
                            .ok_or_else(|| format!("{csv} has {} samples, index {sample} requested", samples.len()))?;
                        let target = MnistTarget {
                            sample: s.pixels.clone(),
                            label: s.label,
                            rival,
                            epsilon: DEFAULT_EPSILON,
                        };
                        build_mnist_robustness(&target, &net, self.encoding).map_err(|e| e.to_string())
                    }
                }
            }
        }
    }
}

/// Networks × properties × encodings, followed by standalone systems × encodings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matrix {
    pub networks: Vec<PathBuf>,
    pub properties: Vec<String>,
    pub systems: Vec<PathBuf>,
    pub encodings: Vec<EncodingMode>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Expands `mnist:<csv>:*:<rival>` and `mnist:<csv>:<idx>:*` over the
/// samples of the file; anything else is returned unchanged.
fn expand_property(p: &str) -> Vec<String> {
    let Some(rest) = p.strip_prefix("mnist:") else {
        return vec![p.to_string()];
    };
    let mut parts = rest.rsplitn(3, ':');
    let (Some(rival), Some(sample), Some(csv)) = (parts.next(), parts.next(), parts.next()) else {
        return vec![p.to_string()];
    };
    if rival != "*" && sample != "*" {
        return vec![p.to_string()];
    }
    let Ok(samples) = load_samples_csv(csv) else {
        return vec![p.to_string()];
    };
    let indices: Vec<usize> = if sample == "*" {
        (0..samples.len()).collect()
    } else {
        match sample.parse() {
            Ok(i) => vec![i],
            Err(_) => return vec![p.to_string()],
        }
    };
    let mut out = Vec::new();
    for i in indices {
        let label = samples.get(i).map(|s| s.label);
        if rival == "*" {
            out.extend((0..10).filter(|&r| Some(r) != label).map(|r| format!("mnist:{csv}:{i}:{r}")));
        } else {
            out.push(format!("mnist:{csv}:{i}:{rival}"));
        }
    }
    out
}

impl Matrix {
    pub fn cells(&self) -> Vec<Cell> {
        let properties: Vec<String> = self.properties.iter().flat_map(|p| expand_property(p)).collect();
        let mut out = Vec::new();
        for net in &self.networks {
            for prop in &properties {
                for &encoding in &self.encodings {
                    out.push(Cell {
                        instance: format!("{}/{prop}", stem(net)),
                        encoding,
                        source: Source::Network {
                            path: net.clone(),
                            property: prop.clone(),
                        },
                    });
                }
            }
        }
        for sys in &self.systems {
            for &encoding in &self.encodings {
                out.push(Cell {
                    instance: stem(sys),
                    encoding,
                    source: Source::System(sys.clone()),
                });
            }
        }
        out
    }
}

fn run_cell(cell: &Cell, config: &SolverConfig) -> BenchRow {
    let mut row = BenchRow {
        instance: cell.instance.clone(),
        encoding: cell.encoding.name().to_string(),
        verdict: "error".to_string(),
        wall_s: 0.0,
        decisions: 0,
        propagations: 0,
        conflicts: 0,
    };
    if let Ok(system) = cell.build() {
        let v = solve(&system, config);
        row.verdict = v.outcome.name().to_string();
        row.wall_s = v.stats.wall_time.as_secs_f64();
        row.decisions = v.stats.decisions;
        row.propagations = v.stats.propagations;
        row.conflicts = v.stats.conflicts;
    }
    row
}

/// Solves every cell with its own deadline and writes one CSV row per cell,
/// in cell order, flushing after each row. With `jobs > 1` cells run on
/// worker threads and finished rows wait in a reorder buffer.
pub fn run_matrix<W: Write>(cells: &[Cell], config: &SolverConfig, jobs: usize, out: W) -> csv::Result<Vec<BenchRow>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    w.flush()?;
    let mut rows = Vec::with_capacity(cells.len());

    if jobs <= 1 {
        for cell in cells {
            let row = run_cell(cell, config);
            w.write_record(row.record())?;
            w.flush()?;
            rows.push(row);
        }
        return Ok(rows);
    }

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, BenchRow)>();
    std::thread::scope(|scope| -> csv::Result<()> {
        for _ in 0..jobs.min(cells.len()) {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                if tx.send((i, run_cell(cell, config))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending: BTreeMap<usize, BenchRow> = BTreeMap::new();
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&rows.len()) {
                w.write_record(row.record())?;
                w.flush()?;
                rows.push(row);
            }
        }
        Ok(())
    })?;
    Ok(rows)
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {0}: {1}")]
    Io(String, std::io::Error),
    #[error("invalid TOML manifest: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid JSON manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn default_encodings() -> Vec<String> {
    vec!["dedicated".to_string()]
}

fn default_timeout() -> f64 {
    60.0
}

fn default_jobs() -> usize {
    1
}

fn default_approx_width() -> f64 {
    0.5
}

fn default_approx_range() -> (f64, f64) {
    (-8.0, 8.0)
}

/// Benchmark description, read from TOML or JSON:
///
/// ```toml
/// networks = ["nets/etcs_1.json"]
/// properties = ["etcs:A", "etcs:severe", "mnist:samples.csv:*:*"]
/// systems = ["sum_16.txt"]
/// encodings = ["dedicated", "compositional", "approx"]
/// timeout = 60
/// jobs = 4
/// ```
///
/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub networks: Vec<String>,
    #[serde(default)]
    pub properties: Vec<String>,
    #[serde(default)]
    pub systems: Vec<String>,
    #[serde(default = "default_encodings")]
    pub encodings: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    pub msw: Option<f64>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_approx_width")]
    pub approx_width: f64,
    #[serde(default = "default_approx_range")]
    pub approx_range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    base: PathBuf,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Manifest, ManifestError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json(text: &str) -> Result<Manifest, ManifestError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a manifest, as JSON when the extension is `.json` and TOML otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest, ManifestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io(path.display().to_string(), e))?;
        let mut m = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        m.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    fn resolve(&self, p: &str) -> PathBuf {
        self.base.join(p)
    }

    /// Resolves the sample file of an `mnist:` property.
    fn resolve_property(&self, p: &str) -> String {
        let Some(rest) = p.strip_prefix("mnist:") else {
            return p.to_string();
        };
        let mut parts = rest.rsplitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(rival), Some(idx), Some(csv)) => format!("mnist:{}:{idx}:{rival}", self.resolve(csv).display()),
            _ => p.to_string(),
        }
    }

    pub fn matrix(&self) -> Result<Matrix, ManifestError> {
        let (lo, hi) = self.approx_range;
        let encodings = self
            .encodings
            .iter()
            .map(|e| EncodingMode::from_name(e, self.approx_width, lo, hi))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ManifestError::Invalid)?;
        let properties = self.properties.iter().map(|p| self.resolve_property(p)).collect();
        Ok(Matrix {
            networks: self.networks.iter().map(|n| self.resolve(n)).collect(),
            properties,
            systems: self.systems.iter().map(|s| self.resolve(s)).collect(),
            encodings,
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ManifestError> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(ManifestError::Invalid(format!("timeout must be positive, got {}", self.timeout)));
        }
        let mut cfg = SolverConfig {
            timeout: Duration::from_secs_f64(self.timeout),
            seed: self.seed,
            ..SolverConfig::default()
        };
        if let Some(msw) = self.msw {
            if msw.is_nan() || msw <= 0.0 {
                return Err(ManifestError::Invalid(format!("msw must be positive, got {msw}")));
            }
            cfg.msw = msw;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_matrix_writes_header_only() {
        let mut buf = Vec::new();
        let rows = run_matrix(&[], &SolverConfig::default(), 1, &mut buf).unwrap();
        assert!(rows.is_empty());
        assert_eq!(String::from_utf8(buf).unwrap(), "instance,encoding,verdict,wall_s,decisions,propagations,conflicts\n");
    }

    #[test]
    fn manifest_defaults_and_product() {
        let m = Manifest::from_toml(
            "networks = [\"a.json\", \"b.json\"]\nproperties = [\"etcs:A\", \"etcs:B\", \"etcs:C\", \"etcs:D\"]\n",
        )
        .unwrap();
        assert_eq!(m.timeout, 60.0);
        let cells = m.matrix().unwrap().cells();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].instance, "a/etcs:A");
        assert_eq!(cells[7].instance, "b/etcs:D");

        let j = Manifest::from_json(r#"{"systems": ["s.txt"], "encodings": ["dedicated", "approx"]}"#).unwrap();
        assert_eq!(j.matrix().unwrap().cells().len(), 2);
        assert!(Manifest::from_toml("bogus = 1").is_err());
        assert!(Manifest::from_json(r#"{"encodings": ["relu"]}"#).unwrap().matrix().is_err());
    }

    #[test]
    fn missing_inputs_become_error_rows() {
        let matrix = Matrix {
            networks: vec![PathBuf::from("/nonexistent/net.json")],
            properties: vec!["etcs:A".into()],
            systems: vec![PathBuf::from("/nonexistent/sys.txt")],
            encodings: vec![EncodingMode::Dedicated],
        };
        for jobs in [1, 3] {
            let mut buf = Vec::new();
            let rows = run_matrix(&matrix.cells(), &SolverConfig::default(), jobs, &mut buf).unwrap();
            assert_eq!(rows.len(), 2);
            assert!(rows.iter().all(|r| r.verdict == "error"));
            assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        }
    }
}
