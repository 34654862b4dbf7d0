//! Named pass registry and pipeline driver.

use crate::ir::{verify, Form, Function, Module};
use crate::passes::{self, PassError};

pub const DEFAULT_PIPELINE: [&str; 6] = [
    "promote-func-args",
    "canonicalize-cast",
    "fold-constant",
    "canonicalize-live-in",
    "leverage-predicated-value",
    "transform-ctrl-to-data-flow",
];

pub const ALL_PASSES: [&str; 10] = [
    "promote-func-args",
    "canonicalize-cast",
    "fold-constant",
    "canonicalize-live-in",
    "leverage-predicated-value",
    "transform-ctrl-to-data-flow",
    "fuse-pattern",
    "fuse-loop-control",
    "dce",
    "verify",
];

/// Fusion patterns understood by `fuse-pattern`.
pub const FUSION_PATTERNS: [&str; 2] = ["load_indexed", "muladd"];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub passes: Vec<String>,
    pub index_width: u32,
    /// Patterns applied by `fuse-pattern`.
    pub patterns: Vec<String>,
    /// Capability tags of the target. When set, fusions whose tag is missing
    /// are skipped.
    pub capabilities: Option<Vec<String>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            passes: DEFAULT_PIPELINE.iter().map(|s| s.to_string()).collect(),
            index_width: 64,
            patterns: FUSION_PATTERNS.iter().map(|s| s.to_string()).collect(),
            capabilities: None,
        }
    }
}

impl PipelineConfig {
    pub fn with_passes(passes: &[&str]) -> Self {
        PipelineConfig { passes: passes.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    /// Default pipeline followed by both fusion passes.
    pub fn optimized() -> Self {
        let mut c = Self::default();
        c.passes.push("fuse-pattern".into());
        c.passes.push("fuse-loop-control".into());
        c
    }

    fn allows(&self, tag: &str) -> bool {
        self.capabilities.as_ref().is_none_or(|c| c.iter().any(|t| t == tag))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("unknown pass '{0}'")]
    UnknownPass(String),
    #[error("unknown fusion pattern '{0}'")]
    UnknownPattern(String),
    #[error("pass {pass} on @{function}: {error}")]
    Pass { pass: String, function: String, error: PassError },
}

/// Applies one pass by name.
pub fn run_pass(f: &mut Function, name: &str, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let fname = f.name.clone();
    let wrap = |error: PassError| PipelineError::Pass { pass: name.to_string(), function: fname.clone(), error };
    let current = f.form;
    let need = |form: Form| -> Result<(), PipelineError> {
        if current != form {
            let which = if form == Form::Dataflow { "dataflow" } else { "cdfg" };
            return Err(wrap(PassError::WrongForm(format!("{} runs on {} form", name, which))));
        }
        Ok(())
    };
    match name {
        "promote-func-args" => {
            need(Form::Cdfg)?;
            passes::promote_function_arguments(f);
        }
        "canonicalize-cast" => passes::canonicalize_cast(f, cfg.index_width).map_err(wrap)?,
        "fold-constant" => passes::fold_constant(f),
        "canonicalize-live-in" => {
            need(Form::Cdfg)?;
            passes::canonicalize_live_in(f).map_err(wrap)?;
        }
        "leverage-predicated-value" => passes::apply_data_predication(f).map_err(wrap)?,
        "transform-ctrl-to-data-flow" => {
            passes::flatten_to_dataflow(f).map_err(wrap)?;
        }
        "fuse-pattern" => {
            need(Form::Dataflow)?;
            for p in &cfg.patterns {
                if !cfg.allows(p) {
                    continue;
                }
                match p.as_str() {
                    "load_indexed" => passes::fuse_load_indexed(f),
                    "muladd" => passes::fuse_muladd(f),
                    other => return Err(PipelineError::UnknownPattern(other.to_string())),
                }
            }
        }
        "fuse-loop-control" => {
            need(Form::Dataflow)?;
            if cfg.allows("loop_control") {
                passes::fuse_loop_control(f);
            }
        }
        "dce" => {
            passes::dce(f);
        }
        "verify" => {}
        other => return Err(PipelineError::UnknownPass(other.to_string())),
    }
    let violations = verify(f);
    if !violations.is_empty() {
        return Err(wrap(PassError::Verify { pass: name.to_string(), violations }));
    }
    Ok(())
}

pub fn run_pipeline(f: &mut Function, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    for p in &cfg.passes {
        run_pass(f, p, cfg)?;
    }
    Ok(())
}

pub fn run_pipeline_module(m: &mut Module, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    for f in &mut m.functions {
        run_pipeline(f, cfg)?;
    }
    Ok(())
}
