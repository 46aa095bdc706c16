//! Flat INI configuration: `[section]` headers, `key = value` lines, `#` or `;` comments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use translab::media::FieldKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: [{section}] {key}: {message}")]
    Value { line: usize, section: String, key: String, message: String },
    #[error("line {line}: missing required section [{section}]")]
    MissingSection { line: usize, section: String },
    #[error("line {line}: [{section}] is missing required key `{key}`")]
    MissingKey { line: usize, section: String, key: String },
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Clone)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// Raw parsed document with line numbers retained for error messages.
#[derive(Debug, Clone)]
struct Document {
    sections: BTreeMap<String, Section>,
    last_line: usize,
}

fn parse_document(text: &str) -> Result<Document, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("unterminated section header `{content}`") })?
                .trim()
                .to_ascii_lowercase();
            if name.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty section name".into() });
            }
            if sections.contains_key(&name) {
                return Err(ConfigError::Syntax { line, message: format!("duplicate section [{name}]") });
            }
            sections.insert(name.clone(), Section { line, entries: BTreeMap::new() });
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, found `{content}`") })?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, message: "empty key".into() });
        }
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("key `{key}` appears before any section header") })?;
        let entries = &mut sections.get_mut(section).expect("section exists").entries;
        if entries.contains_key(&key) {
            return Err(ConfigError::Syntax { line, message: format!("duplicate key `{key}` in [{section}]") });
        }
        entries.insert(key, Entry { value: value.trim().to_string(), line, used: false });
    }
    Ok(Document { sections, last_line })
}

struct Reader<'a> {
    doc: &'a mut Document,
    section: &'static str,
}

impl Reader<'_> {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        let entry = self.doc.sections.get_mut(self.section)?.entries.get_mut(key)?;
        entry.used = true;
        Some((entry.value.clone(), entry.line))
    }

    fn fail(&self, line: usize, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value { line, section: self.section.into(), key: key.into(), message: message.into() }
    }

    fn missing(&self, key: &str) -> ConfigError {
        let line = self.doc.sections.get(self.section).map_or(self.doc.last_line, |s| s.line);
        ConfigError::MissingKey { line, section: self.section.into(), key: key.into() }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| self.fail(line, key, format!("cannot parse `{v}`"))),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let line = self.raw(key).map(|r| r.1);
        let value = self.parse::<f64>(key)?.unwrap_or(default);
        if !(value > 0.0 && value.is_finite()) {
            return Err(self.fail(line.unwrap_or(0), key, format!("must be positive and finite, got {value}")));
        }
        Ok(value)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let line = self.raw(key).map(|r| r.1);
        let value = self.parse::<usize>(key)?.unwrap_or(default);
        if value == 0 {
            return Err(self.fail(line.unwrap_or(0), key, "must be at least 1"));
        }
        Ok(value)
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((v, line)) = self.raw(key) else { return Ok(None) };
        v.split([',', ' ', '\t'])
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| self.fail(line, key, format!("cannot parse `{s}` as a number"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn fixed<const N: usize>(&mut self, key: &str) -> Result<Option<[f64; N]>, ConfigError> {
        let line = self.raw(key).map_or(0, |r| r.1);
        match self.floats(key)? {
            None => Ok(None),
            Some(v) => v.try_into().map(Some).map_err(|v: Vec<f64>| self.fail(line, key, format!("expected {N} numbers, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum Domain {
    Disk { level: u32 },
    MeshFile { path: PathBuf },
}

/// One coefficient field. `values` holds consecutive point values, each `a11 a12 a22` for a
/// matrix or a single number for a density: one value when constant, the coefficients of
/// powers of `|x|^2` when radial, one value per mesh vertex when tabulated.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub values: Vec<f64>,
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MediaConfig {
    pub a1: FieldSpec,
    pub sigma1: FieldSpec,
    pub a2: FieldSpec,
    pub sigma2: FieldSpec,
    /// Ellipticity bound.
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub t_max: f64,
    pub big_lambda0: f64,
    pub eps0: f64,
    pub rays: Vec<f64>,
    /// Explicit complex shifts `re im` pairs; empty selects the adaptive ladder.
    pub shifts: Vec<[f64; 2]>,
    pub residual_tol: f64,
    pub cluster_tol: f64,
    pub nev: usize,
    pub subspace: usize,
    pub max_restarts: usize,
    pub dense_cap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    pub ellipticity: bool,
    pub complementing: bool,
    pub jump: bool,
    pub weyl_window: [f64; 2],
    pub weyl_tolerance: f64,
    pub resolvent_t: [f64; 2],
    pub resolvent_points: usize,
    pub power_iterations: usize,
    pub power_restarts: usize,
    /// Allowed deviation of the fitted resolvent slopes from -1 and -1/2.
    pub slope_tolerance: f64,
    pub trace_t: f64,
    pub trace_tolerance: f64,
    pub oracle_k_max: f64,
    pub oracle_modes: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub domain: Domain,
    pub media: MediaConfig,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn parse_bool(reader: &mut Reader, key: &str, default: bool) -> Result<bool, ConfigError> {
    match reader.raw(key) {
        None => Ok(default),
        Some((v, line)) => match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(reader.fail(line, key, format!("expected a boolean, got `{v}`"))),
        },
    }
}

fn window(reader: &mut Reader, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
    let line = reader.raw(key).map_or(0, |r| r.1);
    let w = reader.fixed::<2>(key)?.unwrap_or(default);
    if !(w[0] > 0.0 && w[1] > w[0]) {
        return Err(reader.fail(line, key, format!("expected `lo hi` with 0 < lo < hi, got {} {}", w[0], w[1])));
    }
    Ok(w)
}

fn read_table(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        for token in content.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let v = token.parse::<f64>().map_err(|_| format!("{}:{}: cannot parse `{token}`", path.display(), i + 1))?;
            values.push(v);
        }
    }
    Ok(values)
}

/// Reads `<key>_kind` and `<key>`; `width` is the number of reals per point value.
fn field(r: &mut Reader, base: &Path, key: &str, width: usize, default: Option<Vec<f64>>) -> Result<FieldSpec, ConfigError> {
    let kind_key = format!("{key}_kind");
    let kind = match r.raw(&kind_key) {
        None => FieldKind::Constant,
        Some((v, line)) => match v.to_ascii_lowercase().as_str() {
            "constant" => FieldKind::Constant,
            "radial" => FieldKind::Radial,
            "table" => FieldKind::Table,
            _ => return Err(r.fail(line, &kind_key, format!("expected constant, radial or table, got `{v}`"))),
        },
    };
    let line = r.raw(key).map(|e| e.1);
    let (values, source) = match kind {
        FieldKind::Table => {
            let (path, line) = r.raw(key).ok_or_else(|| r.missing(key))?;
            let path = base.join(path);
            (read_table(&path).map_err(|m| r.fail(line, key, m))?, Some(path))
        }
        _ => match (r.floats(key)?, default) {
            (Some(v), _) => (v, None),
            (None, Some(d)) if kind == FieldKind::Constant => (d, None),
            _ => return Err(r.missing(key)),
        },
    };
    let line = line.unwrap_or(0);
    let points = values.len() / width;
    if values.is_empty() || values.len() % width != 0 {
        return Err(r.fail(line, key, format!("expected groups of {width} numbers, got {}", values.len())));
    }
    if kind == FieldKind::Constant && points != 1 {
        return Err(r.fail(line, key, format!("a constant field takes {width} numbers, got {}", values.len())));
    }
    Ok(FieldSpec { kind, values, source })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative mesh paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut doc = parse_document(text)?;
        for required in ["domain", "media"] {
            if !doc.sections.contains_key(required) {
                return Err(ConfigError::MissingSection { line: doc.last_line, section: required.into() });
            }
        }
        for (name, section) in &doc.sections {
            if !["domain", "media", "solver", "analysis", "output"].contains(&name.as_str()) {
                return Err(ConfigError::Syntax { line: section.line, message: format!("unknown section [{name}]") });
            }
        }

        let mut r = Reader { doc: &mut doc, section: "domain" };
        let level = r.parse::<u32>("disk_level")?;
        let mesh = r.raw("mesh");
        let domain = match (level, mesh) {
            (Some(level), None) => Domain::Disk { level },
            (None, Some((p, _))) => Domain::MeshFile { path: base.join(p) },
            (Some(_), Some((_, line))) => return Err(r.fail(line, "mesh", "give either disk_level or mesh, not both")),
            (None, None) => return Err(r.missing("disk_level")),
        };

        let mut r = Reader { doc: &mut doc, section: "media" };
        let identity = || Some(vec![1.0, 0.0, 1.0]);
        let a1 = field(&mut r, base, "a1", 3, identity())?;
        let sigma1 = field(&mut r, base, "sigma1", 1, None)?;
        let a2 = field(&mut r, base, "a2", 3, identity())?;
        let sigma2 = field(&mut r, base, "sigma2", 1, None)?;
        let lambda = r.positive("lambda", 10.0)?;
        let media = MediaConfig { a1, sigma1, a2, sigma2, lambda };

        let mut r = Reader { doc: &mut doc, section: "solver" };
        let shift_line = r.raw("shifts").map_or(0, |s| s.1);
        let flat = r.floats("shifts")?.unwrap_or_default();
        if flat.len() % 2 != 0 {
            return Err(r.fail(shift_line, "shifts", "expected `re im` pairs"));
        }
        let solver = SolverConfig {
            t_max: r.positive("t_max", 100.0)?,
            big_lambda0: r.positive("lambda0", 10.0)?,
            eps0: r.positive("eps0", PI / 8.0)?,
            rays: r.floats("rays")?.unwrap_or_else(|| vec![PI / 2.0]),
            shifts: flat.chunks(2).map(|c| [c[0], c[1]]).collect(),
            residual_tol: r.positive("residual_tol", 1e-8)?,
            cluster_tol: r.positive("cluster_tol", 1e-6)?,
            nev: r.count("nev", 40)?,
            subspace: r.count("subspace", 100)?,
            max_restarts: r.count("max_restarts", 80)?,
            dense_cap: r.count("dense_cap", 400)?,
        };
        if solver.subspace <= solver.nev {
            return Err(r.fail(r.doc.last_line, "subspace", "must exceed nev"));
        }

        let mut r = Reader { doc: &mut doc, section: "analysis" };
        let analysis = AnalysisConfig {
            ellipticity: parse_bool(&mut r, "ellipticity", true)?,
            complementing: parse_bool(&mut r, "complementing", true)?,
            jump: parse_bool(&mut r, "jump", true)?,
            weyl_window: window(&mut r, "weyl_window", [0.2, 0.9])?,
            weyl_tolerance: r.positive("weyl_tolerance", 0.15)?,
            resolvent_t: window(&mut r, "resolvent_t", [10.0, 1000.0])?,
            resolvent_points: r.count("resolvent_points", 12)?,
            power_iterations: r.count("power_iterations", 30)?,
            power_restarts: r.count("power_restarts", 3)?,
            slope_tolerance: r.positive("slope_tolerance", 0.15)?,
            trace_t: r.positive("trace_t", 100.0)?,
            trace_tolerance: r.positive("trace_tolerance", 1e-8)?,
            oracle_k_max: r.positive("oracle_k_max", 20.0)?,
            oracle_modes: r.parse::<u32>("oracle_modes")?.unwrap_or(20),
        };

        let mut r = Reader { doc: &mut doc, section: "output" };
        let output_dir = r.raw("dir").map_or_else(|| PathBuf::from("out"), |(d, _)| PathBuf::from(d));
        let seed = r.parse::<u64>("seed")?.unwrap_or(1);

        for (name, section) in &doc.sections {
            if let Some((key, entry)) = section.entries.iter().find(|(_, e)| !e.used) {
                return Err(ConfigError::Syntax { line: entry.line, message: format!("unknown key `{key}` in [{name}]") });
            }
        }
        Ok(RunConfig { domain, media, solver, analysis, output_dir, seed })
    }
}
