//! AST → high-level IR (`oq3`/`quir`/`qcs`/`scf`/`func`).

use std::collections::{BTreeMap, HashMap};

use crate::diagnostics::{Code, Diagnostic, SourceSpan};
use crate::frontend::ast::*;
use crate::ir::{Attr, IrModule, Operation, Region, TimeUnit, Type, ValueId};

const PHASE: &str = "ir-gen";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    pub num_shots: u64,
    /// Delay at the head of every shot.
    pub shot_delay: (f64, TimeUnit),
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { num_shots: 1000, shot_delay: (1.0, TimeUnit::Ms) }
    }
}

pub fn generate_ir(ast: &Program, opts: &GenOptions) -> (IrModule, Vec<Diagnostic>) {
    let mut g = Gen {
        m: IrModule::new(),
        diags: Vec::new(),
        vars: HashMap::new(),
        params: HashMap::new(),
        gates: HashMap::new(),
        qubits: BTreeMap::new(),
    };
    g.run(ast, opts);
    (g.m, g.diags)
}

struct GateInfo {
    params: usize,
    qubits: usize,
}

/// Values visible while generating a gate body.
#[derive(Default)]
struct Locals {
    qubits: HashMap<String, ValueId>,
    angles: HashMap<String, ValueId>,
}

struct Gen {
    m: IrModule,
    diags: Vec<Diagnostic>,
    /// Bit variables and their widths.
    vars: HashMap<String, u32>,
    params: HashMap<String, IoType>,
    gates: HashMap<String, GateInfo>,
    qubits: BTreeMap<u32, ValueId>,
}

type GResult<T> = Result<T, Diagnostic>;

fn err(code: Code, span: SourceSpan, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, PHASE, msg).with_span(span)
}

fn sym(name: &str) -> Attr {
    Attr::Symbol(name.to_string())
}

impl Gen {
    fn run(&mut self, ast: &Program, opts: &GenOptions) {
        let mut taken: HashMap<String, ()> = HashMap::new();
        taken.insert("main".into(), ());
        let mut claim = |g: &mut Gen, name: &str, span: SourceSpan| -> bool {
            if taken.insert(name.to_string(), ()).is_some() {
                g.diags.push(err(Code::DuplicateSymbol, span, format!("'{name}' is already declared")));
                false
            } else {
                true
            }
        };

        // Globals first, in source order: bit variables, then parameters.
        let mut globals = Vec::new();
        for s in &ast.stmts {
            match &s.kind {
                StmtKind::BitDecl { name, width, .. } => {
                    if claim(self, name, s.span) {
                        let w = width.unwrap_or(1);
                        self.vars.insert(name.clone(), w);
                        globals.push(self.m.op(
                            "oq3.declare_variable",
                            &[],
                            &[],
                            vec![("sym_name", sym(name)), ("type", Attr::Type(Type::Cbit(w)))],
                        ));
                    }
                }
                StmtKind::Output { ty, name } if claim(self, name, s.span) => {
                    let t = match ty {
                        IoType::Bit => {
                            self.vars.insert(name.clone(), 1);
                            Type::Cbit(1)
                        }
                        IoType::Angle => Type::Angle(64),
                    };
                    globals.push(self.m.op(
                        "oq3.declare_variable",
                        &[],
                        &[],
                        vec![("sym_name", sym(name)), ("type", Attr::Type(t)), ("output", Attr::Unit)],
                    ));
                }
                _ => {}
            }
        }
        for s in &ast.stmts {
            if let StmtKind::Input { ty, name } = &s.kind {
                if claim(self, name, s.span) {
                    self.params.insert(name.clone(), *ty);
                    let (t, default) = match ty {
                        IoType::Angle => (Type::Angle(64), Attr::Float(0.0)),
                        IoType::Bit => (Type::Cbit(1), Attr::Int(0)),
                    };
                    globals.push(self.m.op(
                        "qcs.declare_parameter",
                        &[],
                        &[],
                        vec![("sym_name", sym(name)), ("type", Attr::Type(t)), ("default", default)],
                    ));
                }
            }
        }
        for op in globals {
            self.m.push(op);
        }

        for s in &ast.stmts {
            if let StmtKind::GateDecl { name, params, qubits, body } = &s.kind {
                if claim(self, name, s.span) {
                    if let Err(d) = self.gate_decl(name, params, qubits, body) {
                        self.diags.push(d);
                    }
                }
            }
        }

        let main = self.main(ast, opts);
        self.m.push(main);
    }

    fn gate_decl(&mut self, name: &str, params: &[String], qubits: &[String], body: &[Stmt]) -> GResult<()> {
        let mut types = vec![Type::Qubit; qubits.len()];
        types.extend(std::iter::repeat_n(Type::Angle(64), params.len()));
        let mut region = self.m.region(&types);
        let mut locals = Locals::default();
        for (i, q) in qubits.iter().enumerate() {
            locals.qubits.insert(q.clone(), region.args[i]);
        }
        for (i, p) in params.iter().enumerate() {
            locals.angles.insert(p.clone(), region.args[qubits.len() + i]);
        }
        for s in body {
            if let Err(d) = self.stmt(s, &mut region, Some(&locals)) {
                self.diags.push(d);
            }
        }
        region.push(self.m.op("func.return", &[], &[], vec![]));
        let mut f = self.m.op("func.func", &[], &[], vec![("sym_name", sym(name))]);
        f.regions.push(region);
        self.m.push(f);
        self.gates.insert(name.to_string(), GateInfo { params: params.len(), qubits: qubits.len() });
        Ok(())
    }

    fn main(&mut self, ast: &Program, opts: &GenOptions) -> Operation {
        let mut body = Region::default();
        let (dv, du) = opts.shot_delay;
        let delay = self.m.op("quir.constant", &[], &[Type::Duration(du)], vec![("value", Attr::Duration(dv, du))]);
        let delay_v = delay.result();
        body.push(delay);
        body.push(self.m.op("qcs.init", &[], &[], vec![]));

        let mut shot = Region::default();
        shot.push(self.m.op("quir.delay", &[delay_v], &[], vec![]));
        shot.push(self.m.op("qcs.shot_init", &[], &[], vec![("qcs.num_shots", Attr::Int(opts.num_shots as i64))]));
        for s in &ast.stmts {
            if let Err(d) = self.stmt(s, &mut shot, None) {
                self.diags.push(d);
            }
        }
        let mut for_op = self.m.op(
            "scf.for",
            &[],
            &[],
            vec![
                ("lower", Attr::Int(0)),
                ("upper", Attr::Int(opts.num_shots as i64)),
                ("step", Attr::Int(1)),
                ("qcs.shot_loop", Attr::Unit),
            ],
        );
        for_op.regions.push(shot);
        body.push(for_op);
        body.push(self.m.op("qcs.finalize", &[], &[], vec![]));
        let zero = self.m.op("quir.constant", &[], &[Type::Int(32)], vec![("value", Attr::Int(0))]);
        let zv = zero.result();
        body.push(zero);
        body.push(self.m.op("func.return", &[zv], &[], vec![]));
        let mut main = self.m.op("func.func", &[], &[], vec![("sym_name", sym("main"))]);
        main.regions.push(body);
        main
    }

    fn qubit(&self, q: &Operand, locals: Option<&Locals>, span: SourceSpan) -> GResult<ValueId> {
        match (q, locals) {
            (Operand::Physical(id), None) => self
                .qubits
                .get(id)
                .copied()
                .ok_or_else(|| err(Code::UndeclaredIdentifier, span, format!("qubit ${id} is not declared"))),
            (Operand::Name(n), Some(l)) => l
                .qubits
                .get(n)
                .copied()
                .ok_or_else(|| err(Code::UndeclaredIdentifier, span, format!("'{n}' is not a qubit argument of this gate"))),
            (Operand::Name(n), None) => {
                Err(err(Code::VirtualQubit, span, format!("physical qubits required; '{n}' is not a hardware qubit")))
            }
            (Operand::Physical(id), Some(_)) => {
                Err(err(Code::UnsupportedConstruct, span, format!("gate bodies cannot reference hardware qubit ${id}")))
            }
        }
    }

    fn qubits(&self, qs: &[Operand], locals: Option<&Locals>, span: SourceSpan) -> GResult<Vec<ValueId>> {
        let vs = qs.iter().map(|q| self.qubit(q, locals, span)).collect::<GResult<Vec<_>>>()?;
        for (i, v) in vs.iter().enumerate() {
            if vs[..i].contains(v) {
                return Err(err(Code::TypeMismatch, span, "the same qubit is used twice in one operation"));
            }
        }
        Ok(vs)
    }

    fn angle(&mut self, e: &Expr, locals: Option<&Locals>, region: &mut Region, span: SourceSpan) -> GResult<ValueId> {
        if let Some(v) = e.fold() {
            if !v.is_finite() {
                return Err(err(Code::TypeMismatch, span, "angle expression is not finite"));
            }
            let c = self.m.op("quir.constant", &[], &[Type::Angle(64)], vec![("value", Attr::Angle(v))]);
            let r = c.result();
            region.push(c);
            return Ok(r);
        }
        let Expr::Ident(name) = e else {
            return Err(err(Code::UnsupportedConstruct, span, "angle expressions over parameters are not supported"));
        };
        if let Some(v) = locals.and_then(|l| l.angles.get(name)) {
            return Ok(*v);
        }
        match (self.params.get(name), locals) {
            (Some(IoType::Angle), None) => {
                let load = self.m.op("qcs.parameter_load", &[], &[Type::Angle(64)], vec![("symbol", sym(name))]);
                let r = load.result();
                region.push(load);
                Ok(r)
            }
            (Some(IoType::Bit), _) => Err(err(Code::TypeMismatch, span, format!("'{name}' is a bit, not an angle"))),
            _ => Err(err(Code::UndeclaredIdentifier, span, format!("'{name}' is not declared"))),
        }
    }

    fn var_width(&self, b: &BitRef, span: SourceSpan) -> GResult<u32> {
        let Some(w) = self.vars.get(&b.name).copied() else {
            return Err(err(Code::UndeclaredIdentifier, span, format!("bit '{}' is not declared", b.name)));
        };
        if let Some(i) = b.index {
            if i >= w {
                return Err(err(Code::TypeMismatch, span, format!("index {i} out of range for bit[{w}] {}", b.name)));
            }
        }
        Ok(w)
    }

    /// Stores an i1 value into a bit (whole width-1 variable or one indexed bit).
    fn store_bit(&mut self, target: &BitRef, bit: ValueId, region: &mut Region, span: SourceSpan) -> GResult<()> {
        let w = self.var_width(target, span)?;
        match target.index {
            Some(i) => {
                region.push(self.m.op(
                    "oq3.cbit_assign_bit",
                    &[bit],
                    &[],
                    vec![("symbol", sym(&target.name)), ("index", Attr::Int(i as i64))],
                ));
            }
            None if w == 1 => {
                let cast = self.m.op("oq3.cast", &[bit], &[Type::Cbit(1)], vec![]);
                let c = cast.result();
                region.push(cast);
                region.push(self.m.op("oq3.variable_assign", &[c], &[], vec![("symbol", sym(&target.name))]));
            }
            None => {
                return Err(err(
                    Code::TypeMismatch,
                    span,
                    format!("cannot store a single measurement into bit[{w}] {}; use an index", target.name),
                ))
            }
        }
        Ok(())
    }

    fn assign_const(&mut self, name: &str, width: u32, value: i64, region: &mut Region) {
        let c = self.m.op("quir.constant", &[], &[Type::Cbit(width)], vec![("value", Attr::Int(value))]);
        let v = c.result();
        region.push(c);
        region.push(self.m.op("oq3.variable_assign", &[v], &[], vec![("symbol", sym(name))]));
    }

    fn condition(&mut self, cond: &Cond, region: &mut Region, span: SourceSpan) -> GResult<ValueId> {
        let b = &cond.bit;
        if let Some(ty) = self.params.get(&b.name) {
            if *ty != IoType::Bit || b.index.is_some() {
                return Err(err(Code::TypeMismatch, span, format!("'{}' is not a single bit", b.name)));
            }
            let load = self.m.op("qcs.parameter_load", &[], &[Type::Cbit(1)], vec![("symbol", sym(&b.name))]);
            let lv = load.result();
            region.push(load);
            let cast = self.m.op("oq3.cast", &[lv], &[Type::I1], vec![]);
            let r = cast.result();
            region.push(cast);
            return Ok(r);
        }
        let w = self.var_width(b, span)?;
        let load = self.m.op("oq3.variable_load", &[], &[Type::Cbit(w)], vec![("symbol", sym(&b.name))]);
        let lv = load.result();
        region.push(load);
        let bit = match b.index {
            Some(i) => self.m.op("oq3.cbit_extract_bit", &[lv], &[Type::I1], vec![("index", Attr::Int(i as i64))]),
            None if w == 1 => self.m.op("oq3.cast", &[lv], &[Type::I1], vec![]),
            None => {
                return Err(err(Code::TypeMismatch, span, format!("condition on bit[{w}] {} needs an index", b.name)))
            }
        };
        let r = bit.result();
        region.push(bit);
        Ok(r)
    }

    fn stmt(&mut self, s: &Stmt, region: &mut Region, locals: Option<&Locals>) -> GResult<()> {
        let span = s.span;
        let in_gate = locals.is_some();
        match &s.kind {
            StmtKind::GateDecl { .. } | StmtKind::Input { .. } => {}
            StmtKind::Output { ty: IoType::Bit, name } => self.assign_const(name, 1, 0, region),
            StmtKind::Output { .. } => {}
            StmtKind::QubitDecl { id } => {
                if self.qubits.contains_key(id) {
                    return Err(err(Code::DuplicateSymbol, span, format!("qubit ${id} declared twice")));
                }
                let q = self.m.op("quir.declare_qubit", &[], &[Type::Qubit], vec![("id", Attr::Int(*id as i64))]);
                self.qubits.insert(*id, q.result());
                region.push(q);
            }
            StmtKind::BitDecl { name, width, init } => {
                let w = width.unwrap_or(1);
                if !self.vars.contains_key(name) {
                    // Lost to a duplicate-symbol error during global collection.
                    return Ok(());
                }
                match init {
                    Some(q) => {
                        let qv = self.qubit(q, None, span)?;
                        let m = self.m.op("quir.measure", &[qv], &[Type::I1], vec![]);
                        let bit = m.result();
                        region.push(m);
                        self.store_bit(&BitRef { name: name.clone(), index: None }, bit, region, span)?;
                    }
                    None => self.assign_const(name, w, 0, region),
                }
            }
            StmtKind::GateCall { name, args, qubits } => {
                let Some(info) = self.gates.get(name) else {
                    return Err(err(Code::UndeclaredIdentifier, span, format!("gate '{name}' is not declared")));
                };
                if info.params != args.len() || info.qubits != qubits.len() {
                    let msg = format!(
                        "gate '{name}' takes {} angle(s) and {} qubit(s), got {} and {}",
                        info.params,
                        info.qubits,
                        args.len(),
                        qubits.len()
                    );
                    return Err(err(Code::TypeMismatch, span, msg));
                }
                let mut operands = self.qubits(qubits, locals, span)?;
                for a in args {
                    operands.push(self.angle(a, locals, region, span)?);
                }
                region.push(self.m.op("quir.call_gate", &operands, &[], vec![("callee", sym(name))]));
            }
            StmtKind::BuiltinU { theta, phi, lambda, qubit } => {
                let q = self.qubit(qubit, locals, span)?;
                let mut operands = vec![q];
                for a in [theta, phi, lambda] {
                    operands.push(self.angle(a, locals, region, span)?);
                }
                region.push(self.m.op("quir.builtin_U", &operands, &[], vec![]));
            }
            StmtKind::BuiltinCX { control, target } => {
                let qs = self.qubits(&[control.clone(), target.clone()], locals, span)?;
                region.push(self.m.op("quir.builtin_CX", &qs, &[], vec![]));
            }
            StmtKind::Reset(q) => {
                if in_gate {
                    return Err(err(Code::UnsupportedConstruct, span, "reset is not allowed in gate bodies"));
                }
                let qv = self.qubit(q, locals, span)?;
                region.push(self.m.op("quir.reset", &[qv], &[], vec![]));
            }
            StmtKind::Barrier(qs) => {
                let vs = if qs.is_empty() && !in_gate {
                    self.qubits.values().copied().collect()
                } else {
                    self.qubits(qs, locals, span)?
                };
                region.push(self.m.op("quir.barrier", &vs, &[], vec![]));
            }
            StmtKind::Delay { duration, qubits } => {
                if !duration.value.is_finite() || duration.value < 0.0 {
                    return Err(err(Code::TypeMismatch, span, "delay duration must be a non-negative finite number"));
                }
                let vs = self.qubits(qubits, locals, span)?;
                let c = self.m.op(
                    "quir.constant",
                    &[],
                    &[Type::Duration(duration.unit)],
                    vec![("value", Attr::Duration(duration.value, duration.unit))],
                );
                let mut operands = vec![c.result()];
                region.push(c);
                operands.extend(vs);
                region.push(self.m.op("quir.delay", &operands, &[], vec![]));
            }
            StmtKind::Measure { qubit, target } => {
                let qv = self.qubit(qubit, locals, span)?;
                if let Some(t) = target {
                    self.var_width(t, span)?;
                }
                let m = self.m.op("quir.measure", &[qv], &[Type::I1], vec![]);
                let bit = m.result();
                region.push(m);
                if let Some(t) = target {
                    self.store_bit(t, bit, region, span)?;
                }
            }
            StmtKind::AssignInt { target, value } => {
                let w = self.var_width(target, span)?;
                match target.index {
                    Some(i) => {
                        if !(0..=1).contains(value) {
                            return Err(err(Code::TypeMismatch, span, "a single bit can only be assigned 0 or 1"));
                        }
                        let c = self.m.op("quir.constant", &[], &[Type::I1], vec![("value", Attr::Int(*value))]);
                        let v = c.result();
                        region.push(c);
                        region.push(self.m.op(
                            "oq3.cbit_assign_bit",
                            &[v],
                            &[],
                            vec![("symbol", sym(&target.name)), ("index", Attr::Int(i as i64))],
                        ));
                    }
                    None => {
                        if *value < 0 || (w < 63 && *value >= 1i64 << w) {
                            return Err(err(Code::TypeMismatch, span, format!("{value} does not fit in bit[{w}]")));
                        }
                        self.assign_const(&target.name, w, *value, region);
                    }
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                let c = self.condition(cond, region, span)?;
                let (a, b) = if cond.negated { (else_body, then_body) } else { (then_body, else_body) };
                let mut op = self.m.op("scf.if", &[c], &[], vec![]);
                for branch in [a, b] {
                    let mut r = Region::default();
                    for s in branch {
                        if matches!(
                            s.kind,
                            StmtKind::QubitDecl { .. }
                                | StmtKind::BitDecl { .. }
                                | StmtKind::Input { .. }
                                | StmtKind::Output { .. }
                                | StmtKind::GateDecl { .. }
                        ) {
                            self.diags.push(err(Code::UnsupportedConstruct, s.span, "declarations must be at top level"));
                            continue;
                        }
                        if let Err(d) = self.stmt(s, &mut r, locals) {
                            self.diags.push(d);
                        }
                    }
                    op.regions.push(r);
                }
                region.push(op);
            }
        }
        Ok(())
    }
}
