//! Config file loading and `--set key=value` overrides.
//!
//! Layering, lowest first: defaults, the JSON config file, `--set`
//! overrides in order, then the dedicated flags (`--seed`, `--mock`,
//! `--synth-mode`).

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use cothinker_core::styles::StyleInventory;
use cothinker_core::{validate_config, BackendDescriptor, EngineConfig, RawConfig, SynthMode, Task};

use crate::AppError;

/// Built-in copy of `data/style_inventory.json`.
pub const STYLE_INVENTORY_JSON: &str = include_str!("../data/style_inventory.json");

#[derive(Debug, Clone, Default)]
pub struct ConfigOptions {
    pub config_path: Option<PathBuf>,
    pub sets: Vec<String>,
    pub seed: Option<u64>,
    pub mock: bool,
    pub synth_mode: Option<SynthMode>,
}

/// Short names accepted by `--set`.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "M" | "m" => "agent_count",
        "N" | "n" => "reference_count",
        "beta" | "β" => "exploration_rate",
        "T" | "t" => "round_count",
        "seed" => "rng_seed",
        "synth_mode" | "synth-mode" => "synthesizer_mode",
        other => other,
    }
}

/// Applies one `key=value` override. The value is read as JSON when it
/// parses as JSON and as a plain string otherwise. Dotted keys address
/// nested fields, e.g. `chat_backend.model=gpt-4o-mini`.
pub fn apply_set(doc: &mut Map<String, Value>, assignment: &str) -> Result<(), AppError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| AppError::Usage(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut parts = key.trim().split('.');
    let head = canonical_key(parts.next().unwrap_or_default());
    let rest: Vec<&str> = parts.collect();
    if head.is_empty() || rest.iter().any(|p| p.is_empty()) {
        return Err(AppError::Usage(format!("--set: bad key `{key}`")));
    }
    let Some((last, middle)) = rest.split_last() else {
        doc.insert(head.to_string(), value);
        return Ok(());
    };
    let backend = head.ends_with("_backend");
    let mut node = doc.entry(head.to_string()).or_insert_with(|| {
        if backend {
            serde_json::json!({ "kind": "openai" })
        } else {
            Value::Object(Map::new())
        }
    });
    for part in middle {
        node = as_object(node, key)?.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    as_object(node, key)?.insert(last.to_string(), value);
    Ok(())
}

fn as_object<'a>(v: &'a mut Value, key: &str) -> Result<&'a mut Map<String, Value>, AppError> {
    v.as_object_mut().ok_or_else(|| AppError::Config(format!("--set {key}: parent is not an object")))
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(AppError::Config(format!("{}: top level must be a JSON object", path.display()))),
        Err(e) => Err(AppError::Config(format!("{}: {e}", path.display()))),
    }
}

pub fn build_config(opts: &ConfigOptions) -> Result<EngineConfig, AppError> {
    let mut doc = match &opts.config_path {
        Some(p) => read_config_file(p)?,
        None => Map::new(),
    };
    for s in &opts.sets {
        apply_set(&mut doc, s)?;
    }
    let mut raw: RawConfig = serde_json::from_value(Value::Object(doc)).map_err(|e| AppError::Config(e.to_string()))?;
    if let Some(seed) = opts.seed {
        raw.rng_seed = Some(seed);
    }
    if opts.mock {
        raw.chat_backend = Some(BackendDescriptor::Mock);
        raw.embedding_backend = Some(BackendDescriptor::Mock);
    }
    if let Some(mode) = opts.synth_mode {
        raw.synthesizer_mode = Some(mode);
    }
    Ok(validate_config(&raw)?)
}

/// Reads a task file. `.json` files hold a full task record; anything else
/// is taken as the task description, with the file stem as its id.
pub fn load_task(path: &Path) -> Result<Task, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let task = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<Task>(&text).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?
    } else {
        let id = path.file_stem().map_or_else(|| "task".to_string(), |s| s.to_string_lossy().into_owned());
        Task { id, description: text.trim_end().to_string(), metadata: Default::default() }
    };
    task.validate()?;
    Ok(task)
}

pub fn load_inventory(path: Option<&Path>) -> Result<StyleInventory, AppError> {
    let (text, origin) = match path {
        Some(p) => (std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?, p.display().to_string()),
        None => (STYLE_INVENTORY_JSON.to_string(), "built-in inventory".to_string()),
    };
    let inv: StyleInventory = serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{origin}: {e}")))?;
    Ok(StyleInventory::new(inv.profiles)?)
}
