//! Structural verifier: SSA dominance (lexical order), op signatures,
//! symbol resolution, and dialect-specific region rules.

use std::collections::{HashMap, HashSet};

use super::attr::{Attr, AttrKind};
use super::module::{IrModule, Operation, Region, ValueId};
use super::types::Type;
use crate::diagnostics::{Code, Diagnostic};
use crate::dialects::{self, Trait};

const PHASE: &str = "verify";

pub fn verify(m: &IrModule) -> Vec<Diagnostic> {
    let mut v = Verifier { m, diags: Vec::new(), defined: HashSet::new(), symbols: HashMap::new() };
    v.collect_symbols();
    let mut scope = vec![HashSet::new()];
    v.region(&m.body, &mut scope, None, true);
    v.diags
}

struct Verifier<'a> {
    m: &'a IrModule,
    diags: Vec<Diagnostic>,
    defined: HashSet<ValueId>,
    symbols: HashMap<&'a str, &'a Operation>,
}

impl<'a> Verifier<'a> {
    fn report(&mut self, code: Code, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, PHASE, msg));
    }

    fn collect_symbols(&mut self) {
        for op in &self.m.body.ops {
            if let Some(name) = op.sym_name() {
                if self.symbols.insert(name, op).is_some() {
                    self.report(Code::MultipleDefinition, format!("symbol @{name} defined more than once"));
                }
            }
        }
    }

    fn define(&mut self, v: ValueId, scope: &mut [HashSet<ValueId>]) {
        if !self.m.has_value(v) {
            self.report(Code::StructuralViolation, format!("value #{} has no type entry", v.0));
            return;
        }
        if !self.defined.insert(v) {
            self.report(Code::MultipleDefinition, format!("value #{} defined more than once", v.0));
        }
        scope.last_mut().expect("scope").insert(v);
    }

    /// `parent` is the op owning this region (None for the module body).
    fn region(
        &mut self,
        r: &'a Region,
        scope: &mut Vec<HashSet<ValueId>>,
        parent: Option<&'a Operation>,
        top: bool,
    ) {
        // Function-like definitions are isolated from the enclosing scope.
        let isolated = parent.is_some_and(|p| dialects::has_trait(&p.name, Trait::SymbolDef));
        let saved = if isolated { Some(std::mem::replace(scope, vec![HashSet::new()])) } else { None };
        scope.push(HashSet::new());
        for a in &r.args {
            self.define(*a, scope);
        }
        for op in &r.ops {
            self.op(op, scope, top);
        }
        scope.pop();
        if let Some(s) = saved {
            *scope = s;
        }
        if let Some(p) = parent {
            self.region_rules(p, r);
        }
    }

    fn op(&mut self, op: &'a Operation, scope: &mut Vec<HashSet<ValueId>>, top: bool) {
        for v in &op.operands {
            if !scope.iter().any(|s| s.contains(v)) {
                self.report(Code::UseBeforeDef, format!("{}: operand #{} used before its definition or out of scope", op.name, v.0));
            }
        }
        let Some(sig) = dialects::lookup(&op.name) else {
            self.report(Code::UnknownOperation, format!("unknown operation '{}'", op.name));
            return;
        };
        let operand_tys: Vec<Type> = op.operands.iter().filter(|v| self.m.has_value(**v)).map(|v| self.m.value_type(*v)).collect();
        let result_tys: Vec<Type> = op.results.iter().filter(|v| self.m.has_value(**v)).map(|v| self.m.value_type(*v)).collect();
        if let Err(msg) = sig.check_types(&operand_tys, &result_tys) {
            self.report(Code::SignatureMismatch, format!("{}: {msg}", op.name));
        }
        for t in operand_tys.iter().chain(&result_tys) {
            if !t.is_well_formed() {
                self.report(Code::SignatureMismatch, format!("{}: malformed type {t}", op.name));
            }
        }
        for (key, kind) in sig.required_attrs {
            match op.attr(key) {
                None => self.report(Code::SignatureMismatch, format!("{}: missing attribute '{key}'", op.name)),
                Some(a) if *kind != AttrKind::Any && a.kind() != *kind && !(a.kind() == AttrKind::Int && *kind == AttrKind::Float) => {
                    self.report(Code::SignatureMismatch, format!("{}: attribute '{key}' should be {kind:?}", op.name))
                }
                _ => {}
            }
        }
        for (key, a) in &op.attrs {
            if !a.is_finite() {
                self.report(Code::SignatureMismatch, format!("{}: attribute '{key}' is not finite", op.name));
            }
        }
        if op.regions.len() != sig.regions {
            self.report(Code::SignatureMismatch, format!("{}: expected {} region(s), found {}", op.name, sig.regions, op.regions.len()));
        }
        if sig.has_trait(Trait::SymbolDef) && !top {
            self.report(Code::StructuralViolation, format!("{}: symbol definitions must be at module scope", op.name));
        }
        self.op_rules(op);
        if sig.has_trait(Trait::SymbolUse) {
            self.symbol_use(op);
        }
        for r in &op.regions {
            self.region(r, scope, Some(op), false);
        }
        for r in &op.results {
            self.define(*r, scope);
        }
    }

    fn op_rules(&mut self, op: &Operation) {
        match op.name.as_str() {
            "pulse.create_waveform" => {
                if matches!(op.attr("samples"), Some(Attr::Samples(s)) if s.is_empty()) {
                    self.report(Code::StructuralViolation, "pulse.create_waveform: waveform must have at least one sample");
                }
            }
            "quir.constant" | "pulse.constant" => {
                let ty = op.results.first().map(|r| self.m.value_type(*r));
                let ok = match (op.attr("value"), ty) {
                    (Some(Attr::Angle(_)), Some(Type::Angle(_))) => true,
                    (Some(Attr::Duration(_, u)), Some(Type::Duration(tu))) => *u == tu,
                    (Some(Attr::Int(_)), Some(Type::Int(_) | Type::Cbit(_))) => true,
                    (Some(Attr::Float(_)), Some(Type::F64)) => true,
                    _ => false,
                };
                if !ok {
                    self.report(Code::SignatureMismatch, format!("{}: value attribute does not match result type", op.name));
                }
            }
            "oq3.cbit_assign_bit" | "oq3.cbit_extract_bit" => {
                let width = match op.name.as_str() {
                    "oq3.cbit_extract_bit" => match op.operands.first().map(|v| self.m.value_type(*v)) {
                        Some(Type::Cbit(w)) => Some(w),
                        _ => None,
                    },
                    _ => op.symbol_ref().and_then(|s| self.symbols.get(s)).and_then(|d| match d.attr("type") {
                        Some(Attr::Type(Type::Cbit(w))) => Some(*w),
                        _ => None,
                    }),
                };
                if let (Some(w), Some(i)) = (width, op.int_attr("index")) {
                    if i < 0 || i >= w as i64 {
                        self.report(Code::SignatureMismatch, format!("{}: bit index {i} out of range for width {w}", op.name));
                    }
                }
            }
            _ => {}
        }
    }

    fn symbol_use(&mut self, op: &Operation) {
        let Some(name) = op.symbol_ref() else {
            self.report(Code::SignatureMismatch, format!("{}: missing symbol reference", op.name));
            return;
        };
        let Some(def) = self.symbols.get(name).copied() else {
            self.report(Code::UnresolvedSymbol, format!("{}: unresolved symbol @{name}", op.name));
            return;
        };
        let expected_def = match op.name.as_str() {
            "quir.call_gate" | "func.call" => "func.func",
            "quir.call_circuit" => "quir.circuit",
            "pulse.call_sequence" => "pulse.sequence",
            "oq3.variable_assign" | "oq3.variable_load" | "oq3.cbit_assign_bit" => "oq3.declare_variable",
            "qcs.parameter_load" => "qcs.declare_parameter",
            "builtin.memory_store" | "builtin.memory_load" => "builtin.global_memory",
            _ => return,
        };
        // Gate definitions become circuits once quantum ops are extracted.
        let gate_circuit = op.is("quir.call_gate") && def.is("quir.circuit");
        let expected_def = if gate_circuit { "quir.circuit" } else { expected_def };
        if def.name != expected_def {
            self.report(Code::UnresolvedSymbol, format!("{}: @{name} is a {}, expected {expected_def}", op.name, def.name));
            return;
        }
        let ty_of = |vs: &[ValueId]| vs.iter().map(|v| self.m.value_type(*v)).collect::<Vec<_>>();
        match expected_def {
            "func.func" | "quir.circuit" | "pulse.sequence" => {
                let Some(body) = def.regions.first() else { return };
                let params = ty_of(&body.args);
                if params != ty_of(&op.operands) {
                    self.report(Code::SignatureMismatch, format!("{}: arguments do not match @{name}", op.name));
                }
                let returned = body.ops.last().filter(|o| o.is("func.return")).map(|o| ty_of(&o.operands)).unwrap_or_default();
                if returned != ty_of(&op.results) {
                    self.report(Code::SignatureMismatch, format!("{}: results do not match @{name}", op.name));
                }
            }
            _ => {
                let declared = def.attr("type").and_then(Attr::as_type);
                let value_ty = op.operands.first().or(op.results.first()).map(|v| self.m.value_type(*v));
                if op.name != "oq3.cbit_assign_bit" && declared.is_some() && value_ty != declared {
                    self.report(Code::TypeMismatch, format!("{}: value type does not match declared type of @{name}", op.name));
                }
            }
        }
    }

    fn region_rules(&mut self, parent: &Operation, r: &Region) {
        let terminated = r.ops.last().is_some_and(|o| o.is("func.return"));
        for (i, op) in r.ops.iter().enumerate() {
            if op.is("func.return") && i + 1 != r.ops.len() {
                self.report(Code::StructuralViolation, format!("{}: func.return must be the last op", parent.name));
            }
        }
        match parent.name.as_str() {
            "func.func" | "quir.circuit" | "pulse.sequence" if !terminated => {
                self.report(Code::StructuralViolation, format!("{} @{}: body must end with func.return", parent.name, parent.sym_name().unwrap_or("?")));
            }
            _ => {}
        }
        if !matches!(parent.name.as_str(), "func.func" | "quir.circuit" | "pulse.sequence") && r.ops.iter().any(|o| o.is("func.return")) {
            self.report(Code::StructuralViolation, format!("{}: func.return outside a function body", parent.name));
        }
        match parent.name.as_str() {
            "quir.circuit" => {
                for op in &r.ops {
                    let ok = dialects::is_quantum(&op.name) || op.is("quir.constant") || op.is("func.return");
                    if !ok {
                        self.report(Code::StructuralViolation, format!("quir.circuit @{}: '{}' is not a quantum op", parent.sym_name().unwrap_or("?"), op.name));
                    }
                    if op.is("func.return") && op.operands.iter().any(|v| self.m.value_type(*v) != Type::I1) {
                        self.report(Code::StructuralViolation, "quir.circuit may only return measurement bits");
                    }
                }
            }
            "pulse.sequence" => {
                for op in &r.ops {
                    if op.dialect() != "pulse" && !op.is("func.return") {
                        self.report(Code::StructuralViolation, format!("pulse.sequence @{}: '{}' is not a pulse op", parent.sym_name().unwrap_or("?"), op.name));
                    }
                }
            }
            "qcs.parallel_control_flow" => {
                for op in &r.ops {
                    if op.dialect() != "scf" {
                        self.report(Code::StructuralViolation, format!("qcs.parallel_control_flow: '{}' is not an scf op", op.name));
                    }
                }
            }
            _ => {}
        }
    }
}
