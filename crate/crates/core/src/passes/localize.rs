//! Splits the scheduled system module into one module per instrument.
//!
//! Every module keeps the control skeleton (init, shot loop, branches,
//! sequence calls) so all instruments walk the same program. Sequences are
//! filtered down to the ops on each instrument's ports; ops keep their
//! `start_time` and sequences their `duration`, so timing is preserved
//! without cross-module references. Classical computation lives on the hub:
//! acquire instruments `qcs.send` consumed measurement bits to it, and it
//! `qcs.broadcast`s every branch condition, which the others `qcs.recv`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::diagnostics::{Code, Diagnostic};
use crate::ir::{Attr, IrModule, Operation, Region, Type, ValueId};
use crate::target::{Role, TargetNode};

const PHASE: &str = "localize";

#[derive(Debug, Clone)]
pub struct LocalModule {
    pub uid: String,
    pub role: Role,
    pub module: IrModule,
}

/// Ops that may be recomputed on any instrument.
fn is_pure(op: &Operation) -> bool {
    matches!(op.name.as_str(), "quir.constant" | "pulse.constant" | "oq3.cast" | "qcs.parameter_load")
}

struct Plan<'a> {
    src: &'a IrModule,
    hub: String,
    defs: HashMap<ValueId, &'a Operation>,
    /// Consumed measurement results → global bit id.
    bit_ids: HashMap<ValueId, i64>,
    /// Instrument producing each consumed measurement result.
    bit_owner: HashMap<ValueId, String>,
    /// Branch conditions → broadcast id.
    cond_ids: HashMap<ValueId, i64>,
}

pub fn localize(m: &IrModule, root: &TargetNode) -> (Vec<LocalModule>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let Some(hub) = root.hub() else {
        diags.push(Diagnostic::error(Code::ConfigParse, PHASE, "target has no hub instrument"));
        return (Vec::new(), diags);
    };
    let mut port_owner = HashMap::new();
    for inst in root.instruments() {
        for p in &inst.ports {
            port_owner.insert(p.clone(), inst.uid.clone());
        }
    }
    let mut sequences = HashMap::new();
    let mut reported = BTreeSet::new();
    for op in &m.body.ops {
        if op.is("pulse.sequence") {
            sequences.insert(op.sym_name().unwrap_or_default(), op);
            for inner in &op.regions[0].ops {
                if let Some(uid) = inner.str_attr("uid").filter(|_| inner.is("pulse.port")) {
                    if !port_owner.contains_key(uid) && reported.insert(uid.to_string()) {
                        diags.push(Diagnostic::error(Code::UnmappedPort, PHASE, format!("port '{uid}' is not assigned to any instrument")));
                    }
                }
            }
        }
    }
    if !diags.is_empty() {
        return (Vec::new(), diags);
    }

    let uses = m.use_counts();
    let mut defs = HashMap::new();
    let mut calls = Vec::new();
    let mut cond_ids = HashMap::new();
    m.walk(&mut |op| {
        for r in &op.results {
            defs.insert(*r, op);
        }
        if op.is("pulse.call_sequence") {
            calls.push(op);
        }
        if op.is("scf.if") && !cond_ids.contains_key(&op.operands[0]) {
            let k = cond_ids.len() as i64;
            cond_ids.insert(op.operands[0], k);
        }
    });
    let mut bit_ids = HashMap::new();
    let mut bit_owner = HashMap::new();
    for call in calls {
        let Some(seq) = call.symbol_ref().and_then(|s| sequences.get(s)) else { continue };
        let ports = mixed_frame_ports(seq);
        let ret = seq.regions[0].ops.last().expect("sequence ends with return");
        let seq_defs: HashMap<ValueId, &Operation> =
            seq.regions[0].ops.iter().flat_map(|o| o.results.iter().map(move |r| (*r, o))).collect();
        for (r, inner) in call.results.iter().zip(&ret.operands) {
            if uses.get(r).copied().unwrap_or(0) == 0 {
                continue;
            }
            let owner = seq_defs
                .get(inner)
                .and_then(|d| ports.get(&d.operands[0]))
                .and_then(|p| port_owner.get(p))
                .cloned()
                .unwrap_or_else(|| hub.uid.clone());
            bit_ids.insert(*r, bit_ids.len() as i64);
            bit_owner.insert(*r, owner);
        }
    }

    let plan = Plan { src: m, hub: hub.uid.clone(), defs, bit_ids, bit_owner, cond_ids };
    let mut out = Vec::new();
    for inst in root.instruments() {
        let role = inst.role().expect("instrument");
        let mut l = Local::new(&plan, inst);
        let module = l.build();
        diags.extend(l.diags);
        out.push(LocalModule { uid: inst.uid.clone(), role, module });
    }
    (out, diags)
}

/// Mixed frame → port uid within one sequence.
fn mixed_frame_ports(seq: &Operation) -> HashMap<ValueId, String> {
    let mut port_uid = HashMap::new();
    let mut out = HashMap::new();
    for op in &seq.regions[0].ops {
        if op.is("pulse.port") {
            port_uid.insert(op.result(), op.str_attr("uid").unwrap_or_default().to_string());
        } else if op.is("pulse.mix_frame") {
            if let Some(p) = port_uid.get(&op.operands[0]) {
                out.insert(op.result(), p.clone());
            }
        }
    }
    out
}

struct Local<'a> {
    plan: &'a Plan<'a>,
    uid: String,
    is_hub: bool,
    ports: BTreeSet<String>,
    m: IrModule,
    map: HashMap<ValueId, ValueId>,
    /// Sequence name → positions of the original results it still returns.
    kept_results: HashMap<String, Vec<usize>>,
    diags: Vec<Diagnostic>,
}

fn make(m: &mut IrModule, name: &str, operands: Vec<ValueId>, result_types: &[Type], attrs: BTreeMap<String, Attr>) -> Operation {
    let mut op = m.op(name, &operands, result_types, vec![]);
    op.attrs = attrs;
    op
}

fn attrs(pairs: &[(&str, Attr)]) -> BTreeMap<String, Attr> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

impl<'a> Local<'a> {
    fn new(plan: &'a Plan<'a>, inst: &TargetNode) -> Self {
        Local {
            plan,
            uid: inst.uid.clone(),
            is_hub: inst.role() == Some(Role::Hub),
            ports: inst.ports.iter().cloned().collect(),
            m: IrModule::new(),
            map: HashMap::new(),
            kept_results: HashMap::new(),
            diags: Vec::new(),
        }
    }

    fn build(&mut self) -> IrModule {
        let src = self.plan.src;
        let mut globals = Vec::new();
        let mut sequences = Vec::new();
        let mut main = None;
        for op in &src.body.ops {
            match op.name.as_str() {
                "pulse.sequence" => sequences.push(self.filter_sequence(op)),
                "func.func" if op.sym_name() == Some("main") => main = Some(op),
                _ if self.is_hub => {
                    let mut map = HashMap::new();
                    globals.push(self.m.import_op(src, op, &mut map));
                }
                "qcs.declare_parameter" => {
                    let mut map = HashMap::new();
                    globals.push(self.m.import_op(src, op, &mut map));
                }
                _ => {}
            }
        }
        let main = main.map(|f| {
            let body = self.block(&f.regions[0], false);
            let mut op = make(&mut self.m, "func.func", vec![], &[], f.attrs.clone());
            op.regions.push(body);
            op
        });
        if !self.is_hub {
            // Only parameters this instrument actually reads.
            let mut used = BTreeSet::new();
            if let Some(f) = &main {
                f.walk(&mut |o| {
                    if o.is("qcs.parameter_load") {
                        used.insert(o.symbol_ref().unwrap_or_default().to_string());
                    }
                });
            }
            globals.retain(|g| g.sym_name().is_some_and(|s| used.contains(s)));
        }
        let mut module = std::mem::take(&mut self.m);
        module.body.ops = globals;
        module.body.ops.extend(sequences);
        module.body.ops.extend(main);
        module
    }

    fn filter_sequence(&mut self, seq: &Operation) -> Operation {
        let ports = mixed_frame_ports(seq);
        let mine = |f: &ValueId| ports.get(f).is_some_and(|p| self.ports.contains(p));
        let body = &seq.regions[0];
        let mut timed: Vec<(usize, Operation)> = Vec::new();
        for (idx, op) in body.ops.iter().enumerate() {
            match op.name.as_str() {
                "pulse.play" | "pulse.capture" | "pulse.shift_phase" | "pulse.set_phase" | "pulse.shift_frequency"
                | "pulse.set_frequency" => {
                    if mine(&op.operands[0]) {
                        timed.push((idx, op.clone()));
                    }
                }
                "pulse.delay" | "pulse.barrier" => {
                    let skip = usize::from(op.is("pulse.delay"));
                    let frames = &op.operands[skip..];
                    let kept: Vec<ValueId> = frames.iter().copied().filter(|f| mine(f)).collect();
                    if frames.is_empty() || !kept.is_empty() {
                        let mut o = op.clone();
                        o.operands.truncate(skip);
                        o.operands.extend(kept);
                        timed.push((idx, o));
                    }
                }
                _ => {}
            }
        }
        // Keep the resources and constants the surviving ops need.
        let mut needed: BTreeSet<ValueId> = timed.iter().flat_map(|(_, o)| o.operands.iter().copied()).collect();
        for op in body.ops.iter().rev() {
            if op.results.iter().any(|r| needed.contains(r)) {
                needed.extend(op.operands.iter().copied());
            }
        }
        let kept_defs: BTreeSet<ValueId> = timed.iter().flat_map(|(_, o)| o.results.iter().copied()).collect();
        let ret = body.ops.last().expect("sequence ends with return");
        let positions: Vec<usize> =
            ret.operands.iter().enumerate().filter(|(_, v)| kept_defs.contains(v)).map(|(i, _)| i).collect();
        let name = seq.sym_name().unwrap_or_default().to_string();

        // Global bit ids of returned captures, from any call of this sequence.
        let mut bit_at: HashMap<usize, i64> = HashMap::new();
        self.plan.src.walk(&mut |op| {
            if op.is("pulse.call_sequence") && op.symbol_ref() == Some(&name) {
                for (i, r) in op.results.iter().enumerate() {
                    if let Some(b) = self.plan.bit_ids.get(r) {
                        bit_at.insert(i, *b);
                    }
                }
            }
        });
        let bit_of: HashMap<ValueId, i64> =
            ret.operands.iter().enumerate().filter_map(|(i, v)| bit_at.get(&i).map(|b| (*v, *b))).collect();

        let mut filtered = Region::new(body.args.clone());
        let mut timed: HashMap<usize, Operation> = timed.into_iter().collect();
        for (idx, op) in body.ops.iter().enumerate() {
            if op.is("func.return") {
                break;
            }
            if let Some(mut t) = timed.remove(&idx) {
                if let Some(b) = t.results.first().and_then(|r| bit_of.get(r)) {
                    t.set_attr("bit", Attr::Int(*b));
                }
                filtered.push(t);
            } else if !op.results.is_empty() && op.results.iter().any(|r| needed.contains(r)) {
                filtered.push(op.clone());
            }
        }
        let mut ret = ret.clone();
        ret.operands = positions.iter().map(|i| ret.operands[*i]).collect();
        filtered.push(ret);
        let mut s = seq.clone();
        s.regions = vec![filtered];
        self.kept_results.insert(name, positions);
        let mut map = HashMap::new();
        self.m.import_op(self.plan.src, &s, &mut map)
    }

    /// Local value for `v`, recomputing pure definitions where needed.
    fn operand(&mut self, v: ValueId, out: &mut Vec<Operation>) -> ValueId {
        if let Some(def) = self.plan.defs.get(&v).copied() {
            if !self.is_hub && is_pure(def) {
                let operands: Vec<ValueId> = def.operands.iter().map(|o| self.operand(*o, out)).collect();
                let types: Vec<Type> = def.results.iter().map(|r| self.plan.src.value_type(*r)).collect();
                let op = make(&mut self.m, &def.name, operands, &types, def.attrs.clone());
                let pos = def.results.iter().position(|r| *r == v).unwrap_or(0);
                let r = op.results[pos];
                out.push(op);
                return r;
            }
        }
        match self.map.get(&v) {
            Some(n) => *n,
            None => {
                self.diags.push(Diagnostic::error(
                    Code::PassVerifyFailure,
                    PHASE,
                    format!("value needed by instrument '{}' is computed elsewhere", self.uid),
                ));
                let ty = self.plan.src.value_type(v);
                self.m.new_value(ty)
            }
        }
    }

    fn clone_mapped(&mut self, op: &Operation, out: &mut Vec<Operation>) -> Operation {
        let operands = op.operands.iter().map(|v| self.operand(*v, out)).collect();
        let types: Vec<Type> = op.results.iter().map(|r| self.plan.src.value_type(*r)).collect();
        let new = make(&mut self.m, &op.name, operands, &types, op.attrs.clone());
        for (a, b) in op.results.iter().zip(&new.results) {
            self.map.insert(*a, *b);
        }
        new
    }

    /// `conds_handled`: branch conditions were already exchanged by the parent.
    fn block(&mut self, r: &Region, conds_handled: bool) -> Region {
        let mut out = Vec::new();
        for op in &r.ops {
            if !op.regions.is_empty() {
                let conds: Vec<ValueId> = match op.name.as_str() {
                    "scf.if" if !conds_handled => vec![op.operands[0]],
                    "qcs.parallel_control_flow" => {
                        op.regions[0].ops.iter().filter(|o| o.is("scf.if")).map(|o| o.operands[0]).collect()
                    }
                    _ => Vec::new(),
                };
                for c in conds {
                    let k = self.plan.cond_ids[&c];
                    if self.is_hub {
                        let v = self.operand(c, &mut out);
                        let b = make(&mut self.m, "qcs.broadcast", vec![v], &[], attrs(&[("cond", Attr::Int(k))]));
                        out.push(b);
                    } else {
                        let recv = make(
                            &mut self.m,
                            "qcs.recv",
                            vec![],
                            &[Type::I1],
                            attrs(&[("from", Attr::Str(self.plan.hub.clone())), ("cond", Attr::Int(k))]),
                        );
                        self.map.insert(c, recv.result());
                        out.push(recv);
                    }
                }
                let nested_handled = op.is("qcs.parallel_control_flow");
                let operands = op.operands.iter().map(|v| *self.map.get(v).unwrap_or(v)).collect();
                let regions = op.regions.iter().map(|sub| self.block(sub, nested_handled)).collect();
                let mut new = make(&mut self.m, &op.name, operands, &[], op.attrs.clone());
                new.regions = regions;
                out.push(new);
                continue;
            }
            match op.name.as_str() {
                "pulse.call_sequence" => self.call(op, &mut out),
                "qcs.init" | "qcs.finalize" | "qcs.shot_init" | "func.return" => {
                    let new = self.clone_mapped(op, &mut out);
                    out.push(new);
                }
                _ if self.is_hub => {
                    let new = self.clone_mapped(op, &mut out);
                    out.push(new);
                }
                _ => {}
            }
        }
        Region { args: Vec::new(), ops: out }
    }

    fn call(&mut self, op: &Operation, out: &mut Vec<Operation>) {
        let callee = op.symbol_ref().unwrap_or_default().to_string();
        let kept = self.kept_results.get(&callee).cloned().unwrap_or_default();
        let operands = op.operands.iter().map(|v| self.operand(*v, out)).collect();
        let types: Vec<Type> = kept.iter().map(|i| self.plan.src.value_type(op.results[*i])).collect();
        let new = make(&mut self.m, &op.name, operands, &types, op.attrs.clone());
        for (i, r) in kept.iter().zip(&new.results) {
            self.map.insert(op.results[*i], *r);
        }
        out.push(new);
        for (i, r) in op.results.iter().enumerate() {
            let Some(b) = self.plan.bit_ids.get(r).copied() else { continue };
            let owner = &self.plan.bit_owner[r];
            let local = kept.contains(&i);
            if local && !self.is_hub {
                let v = self.map[r];
                out.push(make(
                    &mut self.m,
                    "qcs.send",
                    vec![v],
                    &[],
                    attrs(&[("to", Attr::Str(self.plan.hub.clone())), ("bit", Attr::Int(b))]),
                ));
            } else if !local && self.is_hub {
                let recv = make(
                    &mut self.m,
                    "qcs.recv",
                    vec![],
                    &[Type::I1],
                    attrs(&[("from", Attr::Str(owner.clone())), ("bit", Attr::Int(b))]),
                );
                self.map.insert(*r, recv.result());
                out.push(recv);
            }
        }
    }
}
