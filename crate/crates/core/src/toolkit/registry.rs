use std::collections::BTreeMap;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use super::payload::{FailureCode, Observation, Payload, ToolFailure};
use super::signature::ToolSignature;
use super::validate::{validate_call, TypedArgs, Verdict};
use super::{ToolCall, ToolCategory, ToolkitError};
use crate::canon::UnitTable;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Runs one tool. Implementations must tolerate concurrent calls.
pub trait ToolExecutor: Send + Sync {
    fn execute(&self, args: &TypedArgs) -> Result<Payload, ToolFailure>;
}

impl<F> ToolExecutor for F
where
    F: Fn(&TypedArgs) -> Result<Payload, ToolFailure> + Send + Sync,
{
    fn execute(&self, args: &TypedArgs) -> Result<Payload, ToolFailure> {
        self(args)
    }
}

#[derive(Clone)]
struct Binding {
    signature: ToolSignature,
    executor: Arc<dyn ToolExecutor>,
    timeout: Duration,
}

/// Immutable set of tools with one executor each.
#[derive(Clone)]
pub struct ToolRegistry {
    tools: BTreeMap<String, Binding>,
    units: Arc<UnitTable>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.tools.keys().collect::<Vec<_>>()).finish()
    }
}

#[derive(Default)]
pub struct RegistryBuilder {
    tools: BTreeMap<String, Binding>,
    units: Option<Arc<UnitTable>>,
}

impl RegistryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn units(mut self, units: Arc<UnitTable>) -> Self {
        self.units = Some(units);
        self
    }

    pub fn register(
        &mut self,
        signature: ToolSignature,
        executor: Arc<dyn ToolExecutor>,
        timeout: Option<Duration>,
    ) -> Result<&mut Self, ToolkitError> {
        if self.tools.contains_key(&signature.name) {
            return Err(ToolkitError::DuplicateTool(signature.name));
        }
        let name = signature.name.clone();
        self.tools.insert(name, Binding { signature, executor, timeout: timeout.unwrap_or(DEFAULT_TIMEOUT) });
        Ok(self)
    }

    pub fn build(self) -> ToolRegistry {
        ToolRegistry { tools: self.tools, units: self.units.unwrap_or_else(|| Arc::new(UnitTable::builtin().clone())) }
    }
}

impl ToolRegistry {
    pub fn builder() -> RegistryBuilder {
        RegistryBuilder::new()
    }

    pub fn signature(&self, name: &str) -> Option<&ToolSignature> {
        self.tools.get(name).map(|b| &b.signature)
    }

    /// Signatures in name order.
    pub fn signatures(&self) -> impl Iterator<Item = &ToolSignature> {
        self.tools.values().map(|b| &b.signature)
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn category_of(&self, name: &str) -> Option<ToolCategory> {
        self.signature(name).map(|s| s.category)
    }

    pub fn units(&self) -> &UnitTable {
        &self.units
    }

    pub fn validate(&self, call: &ToolCall) -> Verdict {
        validate_call(call, self)
    }

    /// Validates, runs under the tool's timeout, normalizes units and wraps
    /// the result. Failures of any kind come back as error observations.
    pub fn execute(&self, call: &ToolCall) -> Observation {
        let args = match self.validate(call) {
            Verdict::Ok(args) => args,
            other => {
                let failure = other.to_failure().expect("non-ok verdict has a failure");
                return Observation::error(&call.tool, failure);
            }
        };
        let binding = &self.tools[&call.tool];
        match run_with_timeout(binding, args) {
            Ok(payload) => self.envelope(&binding.signature, payload),
            Err(failure) => Observation::error(&call.tool, failure),
        }
    }

    fn envelope(&self, sig: &ToolSignature, payload: Payload) -> Observation {
        if payload.kind() != sig.returns {
            return Observation::error(
                &sig.name,
                ToolFailure::new(
                    FailureCode::ReturnTypeMismatch,
                    format!("expected {}, executor returned {}", sig.returns, payload.kind()),
                ),
            );
        }
        match payload.normalize(&self.units) {
            Ok(p) => Observation::ok(&sig.name, p),
            Err(e) => Observation::error(&sig.name, ToolFailure::new(FailureCode::Normalization, e.to_string())),
        }
    }
}

fn run_with_timeout(binding: &Binding, args: TypedArgs) -> Result<Payload, ToolFailure> {
    let (tx, rx) = mpsc::channel();
    let executor = Arc::clone(&binding.executor);
    let handle = std::thread::Builder::new()
        .name(format!("tool-{}", binding.signature.name))
        .spawn(move || {
            let _ = tx.send(executor.execute(&args));
        })
        .map_err(|e| ToolFailure::new(FailureCode::Internal, e.to_string()))?;
    match rx.recv_timeout(binding.timeout) {
        Ok(result) => {
            let _ = handle.join();
            result
        }
        Err(mpsc::RecvTimeoutError::Timeout) => Err(ToolFailure::new(
            FailureCode::Timeout,
            format!("{} exceeded {:?}", binding.signature.name, binding.timeout),
        )),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(ToolFailure::new(FailureCode::Internal, "executor panicked")),
    }
}
