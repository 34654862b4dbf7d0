//! Kernel corpus on disk: `corpus/<name>/{kernel.neura, meta.txt, inputs/}`.
//!
//! `meta.txt` holds `key = value` lines:
//!
//! ```text
//! description = Sum of the first n words starting at a.
//! features = single_loop, dynamic_bound
//! args = n 0..=12, a 0..=4
//! mem_size = 20
//! mem_values = -1000..=1000
//! ```

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::interp::{parse_args, Memory, Payload};
use crate::ir::Function;
use crate::text::parse_module;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelCase {
    pub name: String,
    pub dir: PathBuf,
    pub source: String,
    pub description: String,
    pub features: Vec<String>,
    /// Parameter name and inclusive range of random values.
    pub args: Vec<(String, RangeInclusive<i64>)>,
    pub mem_size: usize,
    pub mem_values: RangeInclusive<i64>,
}

/// A concrete input: arguments plus initial memory.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelInput {
    pub args: Vec<Payload>,
    pub memory: Memory,
}

impl KernelCase {
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let read = |p: PathBuf| fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p, source });
        let source = read(dir.join("kernel.neura"))?;
        let meta_path = dir.join("meta.txt");
        let meta = read(meta_path.clone())?;
        let bad = |message: String| CorpusError::Malformed { path: meta_path.clone(), message };
        let name = dir.file_name().and_then(|s| s.to_str()).unwrap_or("kernel").to_string();
        let mut case = KernelCase {
            name,
            dir: dir.to_path_buf(),
            source,
            description: String::new(),
            features: Vec::new(),
            args: Vec::new(),
            mem_size: 0,
            mem_values: 0..=0,
        };
        for line in meta.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected 'key = value', got '{}'", line)))?;
            let v = v.trim();
            match k.trim() {
                "description" => case.description = v.to_string(),
                "features" => case.features = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
                "args" => {
                    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let (n, r) = part.split_once(' ').ok_or_else(|| bad(format!("bad argument spec '{}'", part)))?;
                        case.args.push((n.to_string(), parse_range(r.trim()).ok_or_else(|| bad(format!("bad range '{}'", r)))?));
                    }
                }
                "mem_size" => case.mem_size = v.parse().map_err(|_| bad(format!("bad mem_size '{}'", v)))?,
                "mem_values" => case.mem_values = parse_range(v).ok_or_else(|| bad(format!("bad range '{}'", v)))?,
                other => return Err(bad(format!("unknown key '{}'", other))),
            }
        }
        Ok(case)
    }

    pub fn function(&self) -> Result<Function, String> {
        let mut m = parse_module(&self.source).map_err(|e| format!("{}: {}", self.name, e))?;
        if m.functions.len() != 1 {
            return Err(format!("{}: expected one function", self.name));
        }
        Ok(m.functions.remove(0))
    }

    pub fn has_feature(&self, tag: &str) -> bool {
        self.features.iter().any(|f| f == tag)
    }

    pub fn random_input(&self, rng: &mut impl Rng) -> KernelInput {
        let args = self.args.iter().map(|(_, r)| Payload::Int(rng.gen_range(r.clone()))).collect();
        let mut memory = Memory::new(self.mem_size);
        for c in memory.cells.iter_mut() {
            *c = rng.gen_range(self.mem_values.clone());
        }
        KernelInput { args, memory }
    }

    /// Inputs stored under `inputs/`: each `<stem>.mem` with its `<stem>.args`.
    pub fn sample_inputs(&self) -> Result<Vec<(String, KernelInput)>, CorpusError> {
        let dir = self.dir.join("inputs");
        let mut out = Vec::new();
        let Ok(entries) = fs::read_dir(&dir) else { return Ok(out) };
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths.into_iter().filter(|p| p.extension().is_some_and(|x| x == "mem")) {
            let text = fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p.clone(), source })?;
            let bad = |message: String| CorpusError::Malformed { path: p.clone(), message };
            let memory = Memory::parse(&text).map_err(|e| bad(e.to_string()))?;
            let args_path = p.with_extension("args");
            let args = match fs::read_to_string(&args_path) {
                Ok(t) => parse_args(t.trim()).map_err(|e| bad(e.to_string()))?,
                Err(_) => Vec::new(),
            };
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string();
            out.push((stem, KernelInput { args, memory }));
        }
        Ok(out)
    }
}

fn parse_range(s: &str) -> Option<RangeInclusive<i64>> {
    let (a, b) = s.split_once("..=")?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some(a..=b)
}

/// Every kernel directory under `root`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<Vec<KernelCase>, CorpusError> {
    let entries = fs::read_dir(root).map_err(|source| CorpusError::Io { path: root.to_path_buf(), source })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("kernel.neura").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| KernelCase::load(d)).collect()
}

/// The corpus shipped with this crate.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}
