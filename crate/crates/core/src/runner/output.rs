//! CSV traces, run manifests and plot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::propagate::{Diagnostics, PopulationTrace};
use crate::{Error, Result};

use super::config::ScenarioConfig;

/// Round-trip decimal form (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A table read back from one of our CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Interprets a trace CSV: first column time, `p*` columns populations,
    /// `R, Q, W` Bloch data when present.
    pub fn to_trace(&self) -> Result<PopulationTrace> {
        let pcols: Vec<usize> = (0..self.header.len())
            .filter(|&k| self.header[k].starts_with('p') && self.header[k][1..].parse::<usize>().is_ok())
            .collect();
        if pcols.is_empty() {
            return Err(Error::Config("CSV has no population columns".into()));
        }
        let times = self.rows.iter().map(|r| r[0]).collect();
        let pops = self.rows.iter().map(|r| pcols.iter().map(|&k| r[k]).collect()).collect();
        let mut trace = PopulationTrace::from_rows(times, pops);
        if let (Some(r), Some(q), Some(w)) = (self.column("R"), self.column("Q"), self.column("W")) {
            trace.bloch = Some(r.into_iter().zip(q).zip(w).map(|((r, q), w)| [r, q, w]).collect());
        }
        Ok(trace)
    }
}

/// Renders a CSV table: `#` metadata lines, header, rows.
pub fn render_csv(metadata: &[String], header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = String::new();
    for m in metadata {
        let _ = writeln!(s, "# {m}");
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Trace as CSV with the time column scaled to `t√α`.
pub fn trace_csv(trace: &PopulationTrace, alpha: f64, metadata: &[String]) -> String {
    let dim = trace.dim();
    let mut header: Vec<String> = vec!["t_sqrt_alpha".into()];
    header.extend((1..=dim).map(|k| format!("p{k}")));
    if trace.bloch.is_some() {
        header.extend(["R", "Q", "W"].map(String::from));
    }
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let sa = alpha.sqrt();
    let rows = (0..trace.len()).map(|i| {
        let mut r = Vec::with_capacity(hdr.len());
        r.push(trace.times[i] * sa);
        r.extend_from_slice(&trace.populations[i]);
        if let Some(b) = &trace.bloch {
            r.extend_from_slice(&b[i]);
        }
        r
    });
    render_csv(metadata, &hdr, rows)
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut metadata = Vec::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(m) = line.strip_prefix('#') {
            metadata.push(m.trim().to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|h| h.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Config(format!("CSV line {}: {e}", ln + 1)))?;
        if row.len() != header.as_ref().map_or(0, Vec::len) {
            return Err(Error::Config(format!("CSV line {}: wrong number of fields", ln + 1)));
        }
        rows.push(row);
    }
    let header = header.ok_or_else(|| Error::Config("CSV has no header".into()))?;
    Ok(CsvTable { metadata, header, rows })
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Metadata lines for a scenario CSV.
pub fn scenario_metadata(cfg: &ScenarioConfig) -> Vec<String> {
    let mut m = vec![
        format!("preset: {}", cfg.scenario.name),
        format!("engine: {}", cfg.scenario.engine),
        format!("variant: {}", cfg.scenario.variant),
        format!("alpha = {}, D = {}", cfg.model.alpha, cfg.model.d_aniso),
    ];
    if cfg.drive.static_delta != 0.0 {
        m.push(format!("static_delta = {}", cfg.drive.static_delta));
    }
    for (k, h) in cfg.drive.harmonics.iter().enumerate() {
        m.push(format!("harmonic {}: amp = {}, freq = {}, phase = {}", k + 1, h.amp, h.freq, h.phase));
    }
    if let Some(c) = &cfg.couplings {
        m.push(format!("omega = {}", c.omega));
    }
    if let Some(c) = &cfg.chain {
        m.push(format!("regime: {}", c.regime.tag()));
    }
    m.push(format!(
        "window = [{}, {}], stride = {}",
        cfg.grid.t_start, cfg.grid.t_end, cfg.grid.output_stride
    ));
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorInfo {
    pub method: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

/// Everything needed to audit and reproduce one output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub command: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorInfo>,
    pub invariants: Diagnostics,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("bad manifest: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_toml()?)
    }
}

/// `<dir>/<stem>.<ext>`.
pub fn out_path(dir: &Path, stem: &str, ext: &str) -> PathBuf {
    dir.join(format!("{stem}.{ext}"))
}

/// A matplotlib script that plots every population column of `csv_name`.
pub fn plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r##"import csv
import matplotlib.pyplot as plt

rows = [r for r in csv.reader(l for l in open({csv_name:?}) if not l.startswith("#"))]
head, data = rows[0], [[float(x) for x in r] for r in rows[1:]]
t = [r[0] for r in data]
for k, name in enumerate(head[1:], start=1):
    if name.startswith("p"):
        plt.plot(t, [r[k] for r in data], label=name)
plt.xlabel("t sqrt(alpha)")
plt.ylabel("population")
plt.title({title:?})
plt.legend()
plt.savefig({png:?}, dpi=150)
"##,
        png = csv_name.replace(".csv", ".png")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
        }
    }

    #[test]
    fn csv_round_trip() {
        let tr = PopulationTrace::from_rows(vec![0.0, 0.5], vec![vec![1.0, 0.0], vec![0.25, 0.75]]);
        let text = trace_csv(&tr, 4.0, &["preset: x".into()]);
        assert!(text.starts_with("# preset: x\nt_sqrt_alpha,p1,p2\n"));
        assert!(!text.contains('\r'));
        let table = parse_csv(&text).unwrap();
        let back = table.to_trace().unwrap();
        assert_eq!(back.times, vec![0.0, 1.0]);
        assert_eq!(back.populations, tr.populations);
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("a,b\n1,2,3\n").is_err());
        assert!(parse_csv("# only\n").is_err());
        assert!(parse_csv("t,p1\n1,x\n").is_err());
    }
}
