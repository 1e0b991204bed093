//! OpenQASM 3 to mock control-system payload compiler.
//!
//! The pipeline runs `frontend` → `irgen` → `passes` → `target` → `payload`,
//! driven by `compile`. All intermediate programs share the [`ir`] module
//! and the op registry in [`dialects`].

pub mod compile;
pub mod diagnostics;
pub mod dialects;
pub mod frontend;
pub mod ir;
pub mod irgen;
pub mod passes;
pub mod payload;
pub mod target;

pub use diagnostics::{Category, Code, Diagnostic, Severity, SourceSpan};
pub use compile::{compile, CompileOptions, CompileOutput, CompileResult, Emit};
pub use ir::{parse_module, print_module, IrModule};
pub use payload::{link, Payload};
pub use target::{Target, TargetConfig, TargetNode};
