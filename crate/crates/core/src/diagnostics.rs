//! Diagnostic records shared by every compilation phase.
//!
//! Each failure mode in the compiler has a [`Code`]; every code maps to
//! exactly one user-facing [`Category`]. Callers either read the structured
//! records directly or render them as text / line-delimited JSON.

use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Category {
    #[serde(rename = "QASMParseFailure")]
    QasmParseFailure,
    UnsupportedInput,
    TypeMismatch,
    UnknownSymbol,
    MissingCalibration,
    ScheduleError,
    ConfigError,
    LinkError,
    InternalError,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::QasmParseFailure => "QASMParseFailure",
            Category::UnsupportedInput => "UnsupportedInput",
            Category::TypeMismatch => "TypeMismatch",
            Category::UnknownSymbol => "UnknownSymbol",
            Category::MissingCalibration => "MissingCalibration",
            Category::ScheduleError => "ScheduleError",
            Category::ConfigError => "ConfigError",
            Category::LinkError => "LinkError",
            Category::InternalError => "InternalError",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every distinct failure mode the compiler can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    // lexing / parsing of OpenQASM
    InvalidCharacter,
    MalformedLiteral,
    SyntaxError,
    UnbalancedBraces,
    MissingVersion,
    UnsupportedVersion,
    UnsupportedConstruct,
    VirtualQubit,
    // IR generation
    UndeclaredIdentifier,
    DuplicateSymbol,
    TypeMismatch,
    // textual IR and verification
    IrSyntax,
    UnknownOperation,
    SignatureMismatch,
    UseBeforeDef,
    MultipleDefinition,
    StructuralViolation,
    UnresolvedSymbol,
    // passes
    UnknownVariable,
    MissingCalibration,
    NegativeDuration,
    UnknownWaveformLength,
    UnmappedPort,
    // targets
    ConfigParse,
    MissingCalibrationFile,
    PortCollision,
    UnsupportedOpForRole,
    // payload / linking
    DuplicateEntry,
    UnknownParameter,
    ParameterTypeMismatch,
    CorruptPayload,
    // compiler bugs
    PassVerifyFailure,
}

impl Code {
    pub const ALL: &'static [Code] = &[
        Code::InvalidCharacter,
        Code::MalformedLiteral,
        Code::SyntaxError,
        Code::UnbalancedBraces,
        Code::MissingVersion,
        Code::UnsupportedVersion,
        Code::UnsupportedConstruct,
        Code::VirtualQubit,
        Code::UndeclaredIdentifier,
        Code::DuplicateSymbol,
        Code::TypeMismatch,
        Code::IrSyntax,
        Code::UnknownOperation,
        Code::SignatureMismatch,
        Code::UseBeforeDef,
        Code::MultipleDefinition,
        Code::StructuralViolation,
        Code::UnresolvedSymbol,
        Code::UnknownVariable,
        Code::MissingCalibration,
        Code::NegativeDuration,
        Code::UnknownWaveformLength,
        Code::UnmappedPort,
        Code::ConfigParse,
        Code::MissingCalibrationFile,
        Code::PortCollision,
        Code::UnsupportedOpForRole,
        Code::DuplicateEntry,
        Code::UnknownParameter,
        Code::ParameterTypeMismatch,
        Code::CorruptPayload,
        Code::PassVerifyFailure,
    ];

    pub fn category(self) -> Category {
        use Code::*;
        match self {
            InvalidCharacter | MalformedLiteral | SyntaxError | UnbalancedBraces | MissingVersion
            | IrSyntax => Category::QasmParseFailure,
            UnsupportedVersion | UnsupportedConstruct | VirtualQubit | UnknownOperation
            | StructuralViolation | UnsupportedOpForRole => Category::UnsupportedInput,
            TypeMismatch | SignatureMismatch | UseBeforeDef | MultipleDefinition => {
                Category::TypeMismatch
            }
            UndeclaredIdentifier | DuplicateSymbol | UnresolvedSymbol | UnknownVariable => {
                Category::UnknownSymbol
            }
            MissingCalibration => Category::MissingCalibration,
            NegativeDuration | UnknownWaveformLength => Category::ScheduleError,
            UnmappedPort | ConfigParse | MissingCalibrationFile | PortCollision => {
                Category::ConfigError
            }
            UnknownParameter | ParameterTypeMismatch | CorruptPayload => Category::LinkError,
            DuplicateEntry | PassVerifyFailure => Category::InternalError,
        }
    }
}

/// Byte range plus 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        SourceSpan { start, end, line, col }
    }

    /// Smallest span covering both `self` and `other`, keeping the earlier position.
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        let (first, _) = if self.start <= other.start { (self, other) } else { (other, self) };
        SourceSpan {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: first.line,
            col: first.col,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Option<SourceSpan>,
    pub phase: String,
}

impl Diagnostic {
    pub fn new(severity: Severity, code: Code, phase: &str, message: impl Into<String>) -> Self {
        Diagnostic { severity, code, message: message.into(), span: None, phase: phase.to_string() }
    }

    pub fn error(code: Code, phase: &str, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, code, phase, message)
    }

    pub fn warning(code: Code, phase: &str, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, code, phase, message)
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn category(&self) -> Category {
        self.code.category()
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// One JSON object (no trailing newline) with the fields
    /// `severity, category, message, line, col, phase` plus `code`.
    pub fn to_json(&self) -> String {
        let record = JsonRecord {
            severity: self.severity,
            category: self.category().as_str(),
            code: format!("{:?}", self.code),
            message: &self.message,
            line: self.span.map(|s| s.line),
            col: self.span.map(|s| s.col),
            phase: &self.phase,
        };
        serde_json::to_string(&record).expect("diagnostic record serializes")
    }
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    severity: Severity,
    category: &'static str,
    code: String,
    message: &'a str,
    line: Option<u32>,
    col: Option<u32>,
    phase: &'a str,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(span) => write!(
                f,
                "{}:{}: {} [{}] ({}): {}",
                span.line,
                span.col,
                self.severity,
                self.category(),
                self.phase,
                self.message
            ),
            None => write!(
                f,
                "{} [{}] ({}): {}",
                self.severity,
                self.category(),
                self.phase,
                self.message
            ),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Phase diagnostics followed by every target node's diagnostics in
/// pre-order traversal of the target tree.
pub fn collect(root: &crate::target::TargetNode, phase_diags: &[Diagnostic]) -> Vec<Diagnostic> {
    let mut out = phase_diags.to_vec();
    root.walk_preorder(&mut |node| out.extend(node.diagnostics()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_code_has_one_category() {
        let mut seen = std::collections::HashSet::new();
        for code in Code::ALL {
            assert!(seen.insert(*code), "{code:?} listed twice");
            let _ = code.category();
        }
        assert_eq!(seen.len(), Code::ALL.len());
    }

    #[test]
    fn json_record_fields() {
        let d = Diagnostic::error(Code::VirtualQubit, "parse", "physical qubits required")
            .with_span(SourceSpan::new(0, 9, 1, 1));
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(v["severity"], "error");
        assert_eq!(v["category"], "UnsupportedInput");
        assert_eq!(v["line"], 1);
        assert_eq!(v["col"], 1);
        assert_eq!(v["phase"], "parse");
    }

    #[test]
    fn span_union() {
        let a = SourceSpan::new(4, 6, 1, 5);
        let b = SourceSpan::new(0, 2, 1, 1);
        assert_eq!(a.to(b), SourceSpan::new(0, 6, 1, 1));
    }
}
