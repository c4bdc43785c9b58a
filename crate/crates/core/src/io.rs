//! JSON instance files.
//!
//! ```json
//! {
//!   "vertices": [{"reward": 0, "penalty": 0}, ...],
//!   "edges": [{"from": 0, "to": 1, "bands": [
//!       {"start": 0, "dist": {"type": "gamma", "shape": 3, "scale": 2}},
//!       {"start": 24, "dist": {"type": "discrete", "outcomes": [{"time": 5, "prob": 1}]}}
//!   ]}],
//!   "start": 0,
//!   "exit": 1
//! }
//! ```

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{DsopError, Result};
use crate::model::{validate_instance, Instance, TimeDependentEdge, Vertex, VertexId};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    vertices: Vec<Vertex>,
    edges: Vec<TimeDependentEdge>,
    start: VertexId,
    exit: VertexId,
}

/// Parses and validates an instance document.
pub fn load_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| DsopError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let instance = Instance::new(file.vertices, file.edges, file.start, file.exit);
    let violations = validate_instance(&instance);
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(DsopError::Invalid(violations))
    }
}

pub fn save_instance(instance: &Instance) -> String {
    let file = InstanceFile {
        vertices: instance.vertices().to_vec(),
        edges: instance.edges().to_vec(),
        start: instance.start(),
        exit: instance.exit(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
    text.push('\n');
    text
}

pub fn read_instance_file(path: impl AsRef<FsPath>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DsopError::Parse {
        line: 0,
        column: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    load_instance(&text)
}
