//! Typed tool binding: signatures, the call grammar, validation, the
//! registry that executes calls, and the observation envelope.

mod grammar;
mod manifest;
mod payload;
mod prompt;
mod registry;
mod signature;
mod validate;

pub use grammar::{parse_call, ParsedEmission, ToolCall, CALL_FENCE};
pub use manifest::{ManifestEntry, ToolManifest, MANIFEST_VERSION};
pub use payload::*;
pub use prompt::{prompt_sections, render_tool_prompt, render_tool_prompt_for, render_tool_prompt_where};
pub use registry::{RegistryBuilder, ToolExecutor, ToolRegistry, DEFAULT_TIMEOUT};
pub use signature::{is_identifier, ParamSpec, ParamType, ReturnKind, ToolCategory, ToolSignature};
pub use validate::{validate_call, ArgIssue, ArgValue, TypedArgs, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum ToolkitError {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("tool `{0}` registered twice")]
    DuplicateTool(String),
    #[error("manifest: {0}")]
    Manifest(String),
}
