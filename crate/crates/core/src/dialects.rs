//! Op signatures for the `oq3`, `quir`, `qcs` and `pulse` dialects plus the
//! handful of `func`, `scf` and `builtin` ops the pipeline relies on.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::ir::{AttrKind, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trait {
    QuantumOp,
    ClassicalOp,
    ControlFlowOp,
    SymbolDef,
    SymbolUse,
    Terminator,
}

/// Constraint on a single operand or result type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TyC {
    Any,
    Qubit,
    Cbit,
    Angle,
    /// Any `iN` or `!quir.cbit<N>`.
    IntLike,
    I1,
    F64,
    Duration,
    Frame,
    Port,
    MixedFrame,
    Waveform,
}

impl TyC {
    pub fn accepts(self, t: Type) -> bool {
        match self {
            TyC::Any => true,
            TyC::Qubit => t == Type::Qubit,
            TyC::Cbit => matches!(t, Type::Cbit(_)),
            TyC::Angle => matches!(t, Type::Angle(_)),
            TyC::IntLike => matches!(t, Type::Int(_) | Type::Cbit(_)),
            TyC::I1 => t == Type::I1,
            TyC::F64 => t == Type::F64,
            TyC::Duration => matches!(t, Type::Duration(_)),
            TyC::Frame => t == Type::Frame,
            TyC::Port => t == Type::Port,
            TyC::MixedFrame => t == Type::MixedFrame,
            TyC::Waveform => t == Type::Waveform,
        }
    }
}

/// A fixed prefix of constraints optionally followed by any number of
/// values matching `rest`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arity {
    pub fixed: &'static [TyC],
    pub rest: Option<TyC>,
}

impl Arity {
    const fn fixed(fixed: &'static [TyC]) -> Arity {
        Arity { fixed, rest: None }
    }

    const fn variadic(fixed: &'static [TyC], rest: TyC) -> Arity {
        Arity { fixed, rest: Some(rest) }
    }

    fn check(&self, what: &str, types: &[Type]) -> Result<(), String> {
        let ok_len = match self.rest {
            None => types.len() == self.fixed.len(),
            Some(_) => types.len() >= self.fixed.len(),
        };
        if !ok_len {
            return Err(format!(
                "expected {}{} {what}, got {}",
                if self.rest.is_some() { "at least " } else { "" },
                self.fixed.len(),
                types.len()
            ));
        }
        for (i, t) in types.iter().enumerate() {
            let c = self.fixed.get(i).copied().or(self.rest).expect("length checked");
            if !c.accepts(*t) {
                return Err(format!("{what} #{i} has type {t}, expected {c:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OpSignature {
    pub name: &'static str,
    pub operands: Arity,
    pub results: Arity,
    /// Attributes that must be present, with their kinds.
    pub required_attrs: &'static [(&'static str, AttrKind)],
    pub regions: usize,
    pub traits: &'static [Trait],
}

impl OpSignature {
    pub fn has_trait(&self, t: Trait) -> bool {
        self.traits.contains(&t)
    }

    pub fn dialect(&self) -> &'static str {
        self.name.split_once('.').map(|(d, _)| d).unwrap_or("")
    }

    pub fn check_types(&self, operands: &[Type], results: &[Type]) -> Result<(), String> {
        self.operands.check("operand(s)", operands)?;
        self.results.check("result(s)", results)
    }
}

use Trait::*;
use TyC::*;

const NONE: Arity = Arity::fixed(&[]);

macro_rules! sig {
    ($name:literal, $ops:expr, $res:expr, [$($attr:expr),*], $regions:expr, [$($tr:expr),*]) => {
        OpSignature {
            name: $name,
            operands: $ops,
            results: $res,
            required_attrs: &[$($attr),*],
            regions: $regions,
            traits: &[$($tr),*],
        }
    };
}

fn build_registry() -> Vec<OpSignature> {
    const SYM: (&str, AttrKind) = ("sym_name", AttrKind::Symbol);
    const USE: (&str, AttrKind) = ("symbol", AttrKind::Symbol);
    const CALLEE: (&str, AttrKind) = ("callee", AttrKind::Symbol);
    const TYPE: (&str, AttrKind) = ("type", AttrKind::Type);
    const INDEX: (&str, AttrKind) = ("index", AttrKind::Int);
    vec![
        // oq3
        sig!("oq3.declare_variable", NONE, NONE, [SYM, TYPE], 0, [ClassicalOp, SymbolDef]),
        sig!("oq3.variable_assign", Arity::fixed(&[Any]), NONE, [USE], 0, [ClassicalOp, SymbolUse]),
        sig!("oq3.variable_load", NONE, Arity::fixed(&[Any]), [USE], 0, [ClassicalOp, SymbolUse]),
        sig!("oq3.cast", Arity::fixed(&[Any]), Arity::fixed(&[Any]), [], 0, [ClassicalOp]),
        sig!("oq3.cbit_assign_bit", Arity::fixed(&[I1]), NONE, [USE, INDEX], 0, [ClassicalOp, SymbolUse]),
        sig!("oq3.cbit_extract_bit", Arity::fixed(&[Cbit]), Arity::fixed(&[I1]), [INDEX], 0, [ClassicalOp]),
        sig!("oq3.and", Arity::fixed(&[IntLike, IntLike]), Arity::fixed(&[IntLike]), [], 0, [ClassicalOp]),
        sig!("oq3.or", Arity::fixed(&[IntLike, IntLike]), Arity::fixed(&[IntLike]), [], 0, [ClassicalOp]),
        sig!("oq3.xor", Arity::fixed(&[IntLike, IntLike]), Arity::fixed(&[IntLike]), [], 0, [ClassicalOp]),
        sig!("oq3.shl", Arity::fixed(&[IntLike]), Arity::fixed(&[IntLike]), [("amount", AttrKind::Int)], 0, [ClassicalOp]),
        // quir
        sig!("quir.declare_qubit", NONE, Arity::fixed(&[Qubit]), [("id", AttrKind::Int)], 0, [ClassicalOp]),
        sig!("quir.builtin_U", Arity::fixed(&[Qubit, Angle, Angle, Angle]), NONE, [], 0, [QuantumOp]),
        sig!("quir.builtin_CX", Arity::fixed(&[Qubit, Qubit]), NONE, [], 0, [QuantumOp]),
        sig!("quir.reset", Arity::fixed(&[Qubit]), NONE, [], 0, [QuantumOp]),
        sig!("quir.measure", Arity::fixed(&[Qubit]), Arity::fixed(&[I1]), [], 0, [QuantumOp]),
        sig!("quir.barrier", Arity::variadic(&[], Qubit), NONE, [], 0, [QuantumOp]),
        sig!("quir.delay", Arity::variadic(&[Duration], Qubit), NONE, [], 0, [QuantumOp]),
        sig!("quir.call_gate", Arity::variadic(&[], Any), NONE, [CALLEE], 0, [QuantumOp, SymbolUse]),
        sig!("quir.constant", NONE, Arity::fixed(&[Any]), [("value", AttrKind::Any)], 0, [ClassicalOp]),
        sig!("quir.circuit", NONE, NONE, [SYM], 1, [ControlFlowOp, SymbolDef]),
        sig!("quir.call_circuit", Arity::variadic(&[], Any), Arity::variadic(&[], Any), [CALLEE], 0, [ControlFlowOp, SymbolUse]),
        // qcs
        sig!("qcs.init", NONE, NONE, [], 0, [ClassicalOp]),
        sig!("qcs.finalize", NONE, NONE, [], 0, [ClassicalOp]),
        sig!("qcs.shot_init", NONE, NONE, [("qcs.num_shots", AttrKind::Int)], 0, [ClassicalOp]),
        sig!("qcs.synchronize", Arity::variadic(&[], Any), NONE, [], 0, [ClassicalOp]),
        sig!("qcs.broadcast", Arity::fixed(&[Any]), NONE, [], 0, [ClassicalOp]),
        sig!("qcs.send", Arity::fixed(&[Any]), NONE, [("to", AttrKind::Str)], 0, [ClassicalOp]),
        sig!("qcs.recv", NONE, Arity::fixed(&[Any]), [("from", AttrKind::Str)], 0, [ClassicalOp]),
        sig!("qcs.parallel_control_flow", NONE, NONE, [], 1, [ControlFlowOp]),
        sig!("qcs.declare_parameter", NONE, NONE, [SYM, TYPE, ("default", AttrKind::Any)], 0, [ClassicalOp, SymbolDef]),
        sig!("qcs.parameter_load", NONE, Arity::fixed(&[Any]), [USE], 0, [ClassicalOp, SymbolUse]),
        // pulse
        sig!("pulse.frame", NONE, Arity::fixed(&[Frame]), [("uid", AttrKind::Str), ("frequency", AttrKind::Float), ("phase", AttrKind::Float)], 0, [ClassicalOp]),
        sig!("pulse.port", NONE, Arity::fixed(&[Port]), [("uid", AttrKind::Str)], 0, [ClassicalOp]),
        sig!("pulse.mix_frame", Arity::fixed(&[Port, Frame]), Arity::fixed(&[MixedFrame]), [], 0, [ClassicalOp]),
        sig!("pulse.shift_phase", Arity::fixed(&[MixedFrame, F64]), NONE, [], 0, [QuantumOp]),
        sig!("pulse.set_phase", Arity::fixed(&[MixedFrame, F64]), NONE, [], 0, [QuantumOp]),
        sig!("pulse.shift_frequency", Arity::fixed(&[MixedFrame, F64]), NONE, [], 0, [QuantumOp]),
        sig!("pulse.set_frequency", Arity::fixed(&[MixedFrame, F64]), NONE, [], 0, [QuantumOp]),
        sig!("pulse.create_waveform", NONE, Arity::fixed(&[Waveform]), [("samples", AttrKind::Samples)], 0, [ClassicalOp]),
        sig!("pulse.play", Arity::fixed(&[MixedFrame, Waveform]), NONE, [], 0, [QuantumOp]),
        sig!("pulse.capture", Arity::fixed(&[MixedFrame]), Arity::fixed(&[I1]), [("duration", AttrKind::Int)], 0, [QuantumOp]),
        sig!("pulse.barrier", Arity::variadic(&[], MixedFrame), NONE, [], 0, [QuantumOp]),
        sig!("pulse.delay", Arity::variadic(&[Duration], MixedFrame), NONE, [], 0, [QuantumOp]),
        sig!("pulse.constant", NONE, Arity::fixed(&[Any]), [("value", AttrKind::Any)], 0, [ClassicalOp]),
        sig!("pulse.sequence", NONE, NONE, [SYM], 1, [ControlFlowOp, SymbolDef]),
        sig!("pulse.call_sequence", Arity::variadic(&[], Any), Arity::variadic(&[], Any), [CALLEE], 0, [ControlFlowOp, SymbolUse]),
        // func
        sig!("func.func", NONE, NONE, [SYM], 1, [ControlFlowOp, SymbolDef]),
        sig!("func.call", Arity::variadic(&[], Any), Arity::variadic(&[], Any), [CALLEE], 0, [ControlFlowOp, SymbolUse]),
        sig!("func.return", Arity::variadic(&[], Any), NONE, [], 0, [ControlFlowOp, Terminator]),
        // scf
        sig!("scf.if", Arity::fixed(&[I1]), NONE, [], 2, [ControlFlowOp]),
        sig!("scf.for", NONE, NONE, [("lower", AttrKind::Int), ("upper", AttrKind::Int), ("step", AttrKind::Int)], 1, [ControlFlowOp]),
        // builtin
        sig!("builtin.module", NONE, NONE, [], 1, [ControlFlowOp]),
        sig!("builtin.global_memory", NONE, NONE, [SYM, TYPE, ("initial", AttrKind::Int)], 0, [ClassicalOp, SymbolDef]),
        sig!("builtin.memory_store", Arity::fixed(&[Any]), NONE, [USE], 0, [ClassicalOp, SymbolUse]),
        sig!("builtin.memory_load", NONE, Arity::fixed(&[Any]), [USE], 0, [ClassicalOp, SymbolUse]),
    ]
}

/// The immutable op registry, keyed by `dialect.opname`.
pub fn registry() -> &'static BTreeMap<&'static str, OpSignature> {
    static REGISTRY: OnceLock<BTreeMap<&'static str, OpSignature>> = OnceLock::new();
    REGISTRY.get_or_init(|| build_registry().into_iter().map(|s| (s.name, s)).collect())
}

pub fn lookup(name: &str) -> Option<&'static OpSignature> {
    registry().get(name)
}

/// Trait query that treats unregistered ops as having no traits.
pub fn has_trait(name: &str, t: Trait) -> bool {
    lookup(name).is_some_and(|s| s.has_trait(t))
}

pub fn is_quantum(name: &str) -> bool {
    has_trait(name, Trait::QuantumOp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_u_signature() {
        let s = lookup("quir.builtin_U").unwrap();
        assert_eq!(s.operands.fixed, &[Qubit, Angle, Angle, Angle]);
        assert!(s.results.fixed.is_empty() && s.results.rest.is_none());
        assert!(s.has_trait(QuantumOp));
    }

    #[test]
    fn parallel_control_flow_signature() {
        let s = lookup("qcs.parallel_control_flow").unwrap();
        assert!(s.operands.fixed.is_empty() && s.operands.rest.is_none());
        assert_eq!(s.regions, 1);
    }

    #[test]
    fn mix_frame_signature() {
        let s = lookup("pulse.mix_frame").unwrap();
        assert_eq!(s.operands.fixed, &[Port, Frame]);
        assert_eq!(s.results.fixed, &[MixedFrame]);
    }

    #[test]
    fn inventory_is_complete() {
        let expected = [
            "oq3.declare_variable", "oq3.variable_assign", "oq3.variable_load", "oq3.cast",
            "oq3.cbit_assign_bit", "oq3.cbit_extract_bit",
            "quir.declare_qubit", "quir.builtin_U", "quir.builtin_CX", "quir.reset", "quir.measure",
            "quir.barrier", "quir.delay", "quir.call_gate", "quir.constant", "quir.circuit",
            "quir.call_circuit",
            "qcs.init", "qcs.finalize", "qcs.shot_init", "qcs.synchronize", "qcs.broadcast",
            "qcs.send", "qcs.recv", "qcs.parallel_control_flow", "qcs.declare_parameter",
            "qcs.parameter_load",
            "pulse.frame", "pulse.port", "pulse.mix_frame", "pulse.shift_phase", "pulse.set_phase",
            "pulse.shift_frequency", "pulse.set_frequency", "pulse.create_waveform", "pulse.play",
            "pulse.capture", "pulse.barrier", "pulse.delay", "pulse.sequence", "pulse.call_sequence",
            "func.func", "func.call", "func.return", "scf.if", "scf.for",
            "builtin.module", "builtin.global_memory", "builtin.memory_store", "builtin.memory_load",
        ];
        for name in expected {
            assert!(lookup(name).is_some(), "{name} missing from registry");
        }
    }

    #[test]
    fn trait_partition_is_total() {
        for (name, s) in registry() {
            let n = [QuantumOp, ClassicalOp, ControlFlowOp].iter().filter(|t| s.has_trait(**t)).count();
            assert_eq!(n, 1, "{name} must carry exactly one of Quantum/Classical/ControlFlow");
            assert!(["oq3", "quir", "qcs", "pulse", "scf", "func", "builtin"].contains(&s.dialect()));
        }
    }

    #[test]
    fn arity_checks() {
        let s = lookup("quir.builtin_U").unwrap();
        assert!(s.check_types(&[Type::Qubit, Type::Angle(64), Type::Angle(64)], &[]).is_err());
        assert!(s.check_types(&[Type::Qubit, Type::Angle(64), Type::Angle(64), Type::Angle(64)], &[]).is_ok());
        let d = lookup("quir.delay").unwrap();
        assert!(d.check_types(&[Type::Duration(crate::ir::TimeUnit::Ms)], &[]).is_ok());
        assert!(d.check_types(&[], &[]).is_err());
    }
}
