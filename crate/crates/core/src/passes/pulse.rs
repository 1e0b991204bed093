use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{insert_before_main, remove_dead_constants, Names};
use crate::diagnostics::{Code, Diagnostic};
use crate::ir::{Attr, IrModule, Operation, Region, Type, ValueId};

const PHASE: &str = "lower-to-pulse";

/// Ports wired to one physical qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitPorts {
    pub drive: String,
    /// Readout stimulus port.
    pub measure: String,
    pub acquire: String,
}

impl QubitPorts {
    pub fn all(&self) -> [&str; 3] {
        [&self.drive, &self.measure, &self.acquire]
    }
}

/// Pulse-level implementations of gates on specific qubits.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    /// Seconds per sample.
    pub dt: f64,
    /// Module holding the `pulse.sequence` definitions.
    pub module: IrModule,
    /// `(gate, qubit ids)` → sequence symbol. Gate names include `U`, `CX`,
    /// `measure` and `reset`.
    pub map: BTreeMap<(String, Vec<u32>), String>,
    pub qubits: BTreeMap<u32, QubitPorts>,
}

impl CalibrationSet {
    pub fn lookup(&self, gate: &str, qubits: &[u32]) -> Option<&Operation> {
        let sym = self.map.get(&(gate.to_string(), qubits.to_vec()))?;
        self.module.lookup_symbol(sym).filter(|o| o.is("pulse.sequence"))
    }
}

/// Replaces every circuit call with a call to a `pulse.sequence` built by
/// inlining calibrations for each gate, then drops circuits and qubits.
pub fn lower_to_pulse(m: &mut IrModule, cals: &CalibrationSet) -> Vec<Diagnostic> {
    let mut qubit_ids = HashMap::new();
    let mut circuits = HashMap::new();
    m.walk(&mut |op| {
        if op.is("quir.declare_qubit") {
            qubit_ids.insert(op.result(), op.int_attr("id").unwrap_or(0) as u32);
        }
    });
    for op in &m.body.ops {
        if op.is("quir.circuit") {
            circuits.insert(op.sym_name().unwrap_or_default().to_string(), op.clone());
        }
    }
    m.body.ops.retain(|o| !o.is("quir.circuit") && !(o.is("func.func") && o.sym_name() != Some("main")));
    let mut names = Names::new(m);
    let mut l = Lowerer { cals, circuits, qubit_ids, names: &mut names, sequences: Vec::new(), diags: Vec::new() };
    let mut body = std::mem::take(&mut m.body);
    for op in &mut body.ops {
        if op.is("func.func") {
            for r in &mut op.regions {
                l.block(m, r);
            }
        }
    }
    m.body = body;
    let (sequences, diags) = (std::mem::take(&mut l.sequences), std::mem::take(&mut l.diags));
    insert_before_main(m, sequences);
    remove_dead_qubits(m);
    remove_dead_constants(m);
    diags
}

fn remove_dead_qubits(m: &mut IrModule) {
    let uses = m.use_counts();
    crate::ir::visit_regions_mut(&mut m.body, &mut |r: &mut Region| {
        r.ops.retain(|o| !(o.is("quir.declare_qubit") && !uses.contains_key(&o.result())));
    });
}

/// What a circuit-level value stands for inside the sequence being built.
#[derive(Debug, Clone, Copy)]
enum Val {
    Qubit(u32),
    /// An f64 (angle or duration) or i1 value in the sequence.
    Seq(ValueId),
}

enum Item {
    Op(Operation),
    Barrier(Vec<u32>),
    Delay(ValueId, Vec<u32>),
}

struct Lowerer<'a> {
    cals: &'a CalibrationSet,
    circuits: HashMap<String, Operation>,
    qubit_ids: HashMap<ValueId, u32>,
    names: &'a mut Names,
    sequences: Vec<Operation>,
    diags: Vec<Diagnostic>,
}

impl Lowerer<'_> {
    fn block(&mut self, m: &mut IrModule, r: &mut Region) {
        let ops = std::mem::take(&mut r.ops);
        for mut op in ops {
            for sub in &mut op.regions {
                self.block(m, sub);
            }
            if !op.is("quir.call_circuit") {
                r.ops.push(op);
                continue;
            }
            let callee = op.symbol_ref().unwrap_or_default().to_string();
            let Some(circuit) = self.circuits.get(&callee).cloned() else {
                self.diags.push(Diagnostic::error(Code::UnresolvedSymbol, PHASE, format!("no circuit @{callee}")));
                r.ops.push(op);
                continue;
            };
            r.ops.extend(self.lower_call(m, &op, &circuit));
        }
    }

    fn lower_call(&mut self, m: &mut IrModule, call: &Operation, circuit: &Operation) -> Vec<Operation> {
        let mut out = Vec::new();
        let mut seq = SeqBuilder::default();
        let mut env = HashMap::new();
        let mut call_args = Vec::new();
        let body = &circuit.regions[0];
        for (arg, operand) in body.args.iter().zip(&call.operands) {
            match m.value_type(*operand) {
                Type::Qubit => {
                    let id = self.qubit_ids.get(operand).copied().unwrap_or(0);
                    env.insert(*arg, Val::Qubit(id));
                }
                ty => {
                    let v = if matches!(ty, Type::Angle(_)) {
                        let cast = m.op("oq3.cast", &[*operand], &[Type::F64], vec![]);
                        let v = cast.result();
                        out.push(cast);
                        v
                    } else {
                        *operand
                    };
                    let ty = m.value_type(v);
                    let a = m.new_value(ty);
                    seq.args.push(a);
                    call_args.push(v);
                    env.insert(*arg, Val::Seq(a));
                }
            }
        }
        let results = self.expand(m, &mut seq, body, &mut env);
        let name = self.names.fresh(circuit.sym_name().unwrap_or("sequence"));
        let def = seq.finish(m, self.cals, &name, &results);
        self.sequences.push(def);
        out.push(Operation {
            name: "pulse.call_sequence".into(),
            operands: call_args,
            results: call.results.clone(),
            attrs: [("callee".to_string(), Attr::Symbol(name))].into_iter().collect(),
            regions: Vec::new(),
        });
        out
    }

    /// Lowers the ops of a circuit (or gate) body; returns what it returns.
    fn expand(&mut self, m: &mut IrModule, seq: &mut SeqBuilder, body: &Region, env: &mut HashMap<ValueId, Val>) -> Vec<ValueId> {
        let mut returned = Vec::new();
        for op in &body.ops {
            let qubits: Vec<u32> = op
                .operands
                .iter()
                .filter_map(|v| match env.get(v) {
                    Some(Val::Qubit(q)) => Some(*q),
                    _ => None,
                })
                .collect();
            let seq_args: Vec<ValueId> = op
                .operands
                .iter()
                .filter_map(|v| match env.get(v) {
                    Some(Val::Seq(s)) => Some(*s),
                    _ => None,
                })
                .collect();
            match op.name.as_str() {
                "quir.constant" => {
                    let (value, ty) = match op.attr("value") {
                        Some(Attr::Angle(a)) => (Attr::Float(*a), Type::F64),
                        Some(Attr::Duration(v, u)) => (Attr::Duration(*v, *u), Type::Duration(*u)),
                        Some(other) => (other.clone(), m.value_type(op.result())),
                        None => continue,
                    };
                    let c = m.op("pulse.constant", &[], &[ty], vec![("value", value)]);
                    env.insert(op.result(), Val::Seq(c.result()));
                    seq.items.push(Item::Op(c));
                }
                "quir.builtin_U" => {
                    self.calibrated(m, seq, "U", &qubits, &seq_args);
                }
                "quir.builtin_CX" => {
                    self.calibrated(m, seq, "CX", &qubits, &seq_args);
                }
                "quir.reset" => {
                    self.calibrated(m, seq, "reset", &qubits, &seq_args);
                }
                "quir.measure" => {
                    if let Some(r) = self.calibrated(m, seq, "measure", &qubits, &seq_args).and_then(|r| r.first().copied()) {
                        env.insert(op.result(), Val::Seq(r));
                    }
                }
                "quir.call_gate" => {
                    let gate = op.symbol_ref().unwrap_or_default().to_string();
                    if self.cals.lookup(&gate, &qubits).is_some() {
                        self.calibrated(m, seq, &gate, &qubits, &seq_args);
                    } else if let Some(def) = self.circuits.get(&gate).cloned() {
                        let mut inner: HashMap<ValueId, Val> = HashMap::new();
                        for (a, v) in def.regions[0].args.iter().zip(&op.operands) {
                            if let Some(val) = env.get(v) {
                                inner.insert(*a, *val);
                            }
                        }
                        self.expand(m, seq, &def.regions[0], &mut inner);
                    } else {
                        self.missing(&gate, &qubits);
                    }
                }
                "quir.barrier" => {
                    seq.touched.retain(|q| !qubits.contains(q));
                    seq.items.push(Item::Barrier(qubits));
                }
                "quir.delay" => {
                    if let Some(d) = seq_args.first() {
                        seq.order_after_earlier(&qubits);
                        seq.items.push(Item::Delay(*d, qubits));
                    }
                }
                "func.return" => {
                    returned = op
                        .operands
                        .iter()
                        .filter_map(|v| match env.get(v) {
                            Some(Val::Seq(s)) => Some(*s),
                            _ => None,
                        })
                        .collect();
                }
                other => self.diags.push(Diagnostic::error(
                    Code::StructuralViolation,
                    PHASE,
                    format!("cannot lower '{other}' to pulses"),
                )),
            }
        }
        returned
    }

    fn missing(&mut self, gate: &str, qubits: &[u32]) {
        let ids: Vec<String> = qubits.iter().map(|q| format!("${q}")).collect();
        self.diags.push(Diagnostic::error(
            Code::MissingCalibration,
            PHASE,
            format!("no calibration for {gate} on {}", ids.join(", ")),
        ));
    }

    fn calibrated(&mut self, m: &mut IrModule, seq: &mut SeqBuilder, gate: &str, qubits: &[u32], args: &[ValueId]) -> Option<Vec<ValueId>> {
        let Some(cal) = self.cals.lookup(gate, qubits) else {
            self.missing(gate, qubits);
            return None;
        };
        let body = &cal.regions[0];
        if body.args.len() != args.len() {
            self.diags.push(Diagnostic::error(
                Code::SignatureMismatch,
                PHASE,
                format!("calibration @{} takes {} argument(s), {gate} supplies {}", cal.sym_name().unwrap_or("?"), body.args.len(), args.len()),
            ));
            return None;
        }
        seq.order_after_earlier(qubits);
        Some(seq.inline(m, &self.cals.module, body, args))
    }
}

/// Accumulates one output sequence. Ports, frames, mixed frames and
/// waveforms are deduplicated and hoisted to the top.
#[derive(Default)]
struct SeqBuilder {
    args: Vec<ValueId>,
    resources: Vec<Operation>,
    ports: BTreeMap<String, ValueId>,
    frames: BTreeMap<String, ValueId>,
    /// (port uid, frame uid) → mixed frame, in creation order.
    mixed: Vec<((String, String), ValueId)>,
    waveforms: Vec<(Vec<(u64, u64)>, ValueId)>,
    uid_of: HashMap<ValueId, String>,
    items: Vec<Item>,
    /// Qubits used by a gate or delay since their last barrier.
    touched: BTreeSet<u32>,
}

impl SeqBuilder {
    /// Calibrations on different ports of one qubit share no clock, so a
    /// barrier keeps a gate behind earlier work on the same qubits.
    fn order_after_earlier(&mut self, qubits: &[u32]) {
        if qubits.iter().any(|q| self.touched.contains(q)) {
            self.items.push(Item::Barrier(qubits.to_vec()));
        }
        self.touched.extend(qubits.iter().copied());
    }

    fn inline(&mut self, m: &mut IrModule, src: &IrModule, body: &Region, args: &[ValueId]) -> Vec<ValueId> {
        let mut map: HashMap<ValueId, ValueId> = body.args.iter().copied().zip(args.iter().copied()).collect();
        let mut results = Vec::new();
        for op in &body.ops {
            match op.name.as_str() {
                "pulse.port" | "pulse.frame" => {
                    let uid = op.str_attr("uid").unwrap_or_default().to_string();
                    let table = if op.is("pulse.port") { &mut self.ports } else { &mut self.frames };
                    let v = match table.get(&uid) {
                        Some(v) => *v,
                        None => {
                            let cloned = m.import_op(src, op, &mut map);
                            let v = cloned.result();
                            table.insert(uid.clone(), v);
                            self.resources.push(cloned);
                            v
                        }
                    };
                    self.uid_of.insert(v, uid);
                    map.insert(op.result(), v);
                }
                "pulse.mix_frame" => {
                    let p = map[&op.operands[0]];
                    let f = map[&op.operands[1]];
                    let v = self.mix(m, p, f);
                    map.insert(op.result(), v);
                }
                "pulse.create_waveform" => {
                    let key = waveform_key(op);
                    let v = match self.waveforms.iter().find(|(k, _)| *k == key) {
                        Some((_, v)) => *v,
                        None => {
                            let cloned = m.import_op(src, op, &mut map);
                            let v = cloned.result();
                            self.waveforms.push((key, v));
                            self.resources.push(cloned);
                            v
                        }
                    };
                    map.insert(op.result(), v);
                }
                "func.return" => results = op.operands.iter().map(|v| map[v]).collect(),
                _ => {
                    let cloned = m.import_op(src, op, &mut map);
                    self.items.push(Item::Op(cloned));
                }
            }
        }
        results
    }

    fn mix(&mut self, m: &mut IrModule, port: ValueId, frame: ValueId) -> ValueId {
        let key = (self.uid_of[&port].clone(), self.uid_of[&frame].clone());
        if let Some((_, v)) = self.mixed.iter().find(|(k, _)| *k == key) {
            return *v;
        }
        let op = m.op("pulse.mix_frame", &[port, frame], &[Type::MixedFrame], vec![]);
        let v = op.result();
        self.resources.push(op);
        self.mixed.push((key, v));
        v
    }

    /// Mixed frames on any port of `q`, creating an idle one if there are none.
    fn qubit_frames(&mut self, m: &mut IrModule, ports: &QubitPorts) -> Vec<ValueId> {
        let found: Vec<ValueId> =
            self.mixed.iter().filter(|((p, _), _)| ports.all().contains(&p.as_str())).map(|(_, v)| *v).collect();
        if !found.is_empty() {
            return found;
        }
        let port = match self.ports.get(&ports.drive) {
            Some(v) => *v,
            None => {
                let op = m.op("pulse.port", &[], &[Type::Port], vec![("uid", Attr::Str(ports.drive.clone()))]);
                let v = op.result();
                self.resources.push(op);
                self.ports.insert(ports.drive.clone(), v);
                self.uid_of.insert(v, ports.drive.clone());
                v
            }
        };
        let frame_uid = format!("{}.idle", ports.drive);
        let frame = match self.frames.get(&frame_uid) {
            Some(v) => *v,
            None => {
                let op = m.op(
                    "pulse.frame",
                    &[],
                    &[Type::Frame],
                    vec![
                        ("uid", Attr::Str(frame_uid.clone())),
                        ("frequency", Attr::Float(0.0)),
                        ("phase", Attr::Float(0.0)),
                    ],
                );
                let v = op.result();
                self.resources.push(op);
                self.frames.insert(frame_uid.clone(), v);
                self.uid_of.insert(v, frame_uid);
                v
            }
        };
        vec![self.mix(m, port, frame)]
    }

    fn finish(mut self, m: &mut IrModule, cals: &CalibrationSet, name: &str, results: &[ValueId]) -> Operation {
        let items = std::mem::take(&mut self.items);
        let mut ops = Vec::new();
        for item in items {
            match item {
                Item::Op(op) => ops.push(op),
                Item::Barrier(qs) => {
                    let frames = self.frames_for(m, cals, &qs);
                    ops.push(m.op("pulse.barrier", &frames, &[], vec![]));
                }
                Item::Delay(d, qs) => {
                    let mut operands = vec![d];
                    operands.extend(self.frames_for(m, cals, &qs));
                    ops.push(m.op("pulse.delay", &operands, &[], vec![]));
                }
            }
        }
        let mut region = Region::new(self.args.clone());
        region.ops = std::mem::take(&mut self.resources);
        region.ops.extend(ops);
        region.push(m.op("func.return", results, &[], vec![]));
        let mut seq = m.op("pulse.sequence", &[], &[], vec![("sym_name", Attr::Symbol(name.into()))]);
        seq.regions.push(region);
        seq
    }

    fn frames_for(&mut self, m: &mut IrModule, cals: &CalibrationSet, qs: &[u32]) -> Vec<ValueId> {
        let mut out = Vec::new();
        // Qubits without configured ports contribute no frames.
        for ports in qs.iter().filter_map(|q| cals.qubits.get(q)) {
            for f in self.qubit_frames(m, ports) {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }
}

fn waveform_key(op: &Operation) -> Vec<(u64, u64)> {
    match op.attr("samples") {
        Some(Attr::Samples(s)) => s.iter().map(|(re, im)| (re.to_bits(), im.to_bits())).collect(),
        _ => Vec::new(),
    }
}
