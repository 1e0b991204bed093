//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use qe_forge_core::frontend::parse;
use qe_forge_core::ir::{Attr, IrModule, Operation, Region, TimeUnit, Type, ValueId};
use qe_forge_core::irgen::{generate_ir, GenOptions};
use qe_forge_core::passes::{localize, phase1, PassContext};
use qe_forge_core::Target;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn mock_target() -> Target {
    Target::load(&fixtures().join("mock3q.cfg")).expect("mock target loads")
}

/// `(file stem, source)` for every program in the corpus, by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixtures().join("corpus"))
        .expect("corpus dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

/// Hand-written IR modules in `fixtures/ir` plus the mock calibrations.
pub fn ir_fixtures() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixtures().join("ir"))
        .expect("ir dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.push(("mock3q.cal.qeir".into(), read_fixture("mock3q.cal.qeir")));
    out.sort();
    out
}

pub fn initial_ir(src: &str) -> IrModule {
    let (ast, d) = parse(src);
    assert!(!qe_forge_core::diagnostics::has_errors(&d), "{d:?}");
    let (m, d) = generate_ir(&ast, &GenOptions::default());
    assert!(!qe_forge_core::diagnostics::has_errors(&d), "{d:?}");
    m
}

/// Every intermediate module for `src`: the initial IR, the result of each
/// phase-1 pass, and each instrument's local module.
pub fn stages(src: &str, target: &Target) -> Vec<(String, IrModule)> {
    let mut m = initial_ir(src);
    let mut out = vec![("ir-initial".to_string(), m.clone())];
    let ctx = PassContext { cals: Some(&target.cals) };
    for p in phase1() {
        let d = (p.run)(&mut m, &ctx);
        assert!(!qe_forge_core::diagnostics::has_errors(&d), "{}: {d:?}", p.name);
        out.push((p.name.to_string(), m.clone()));
    }
    let (locals, d) = localize(&m, &target.root);
    assert!(d.is_empty(), "{d:?}");
    out.extend(locals.into_iter().map(|l| (format!("local:{}", l.uid), l.module)));
    out
}

pub fn run_until(src: &str, target: &Target, last: &str) -> IrModule {
    stages(src, target).into_iter().find(|(n, _)| n == last).map(|(_, m)| m).expect("stage exists")
}

/// Counts every op name occurring anywhere in `m`.
pub fn count_ops(m: &IrModule, counts: &mut BTreeMap<String, usize>) {
    m.walk(&mut |op| *counts.entry(op.name.clone()).or_default() += 1);
}

/// Ops that act on qubits before pulse lowering.
pub const QUANTUM: &[&str] =
    &["quir.builtin_U", "quir.builtin_CX", "quir.reset", "quir.measure", "quir.barrier", "quir.delay", "quir.call_gate"];

/// Quantum ops found outside any `quir.circuit` body.
pub fn quantum_outside_circuits(m: &IrModule) -> Vec<String> {
    fn scan(r: &Region, out: &mut Vec<String>) {
        for op in &r.ops {
            if QUANTUM.contains(&op.name.as_str()) {
                out.push(op.name.clone());
            }
            if op.name != "quir.circuit" {
                for sub in &op.regions {
                    scan(sub, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    scan(&m.body, &mut out);
    out
}

fn unit_seconds(u: TimeUnit) -> Option<f64> {
    match u {
        TimeUnit::Ns => Some(1e-9),
        TimeUnit::Us => Some(1e-6),
        TimeUnit::Ms => Some(1e-3),
        TimeUnit::Dt => None,
    }
}

/// Checks every scheduled sequence: resources (ports and frames) are never
/// busy twice at once and nothing ends after the sequence does. Returns a
/// description of each violation.
pub fn interval_violations(m: &IrModule, dt: f64) -> Vec<String> {
    let mut out = Vec::new();
    for seq in m.body.ops.iter().filter(|o| o.name == "pulse.sequence") {
        let name = seq.sym_name().unwrap_or("?");
        let defs: HashMap<ValueId, &Operation> =
            seq.regions[0].ops.iter().flat_map(|o| o.results.iter().map(move |r| (*r, o))).collect();
        let uid = |v: &ValueId| defs.get(v).and_then(|o| o.str_attr("uid")).unwrap_or("?").to_string();
        let resources = |mf: &ValueId| -> Vec<String> {
            match defs.get(mf) {
                Some(mix) => vec![format!("port {}", uid(&mix.operands[0])), format!("frame {}", uid(&mix.operands[1]))],
                None => vec![format!("value {mf:?}")],
            }
        };
        let mut busy: BTreeMap<String, Vec<(i64, i64)>> = BTreeMap::new();
        let total = seq.int_attr("duration").unwrap_or(-1);
        for op in &seq.regions[0].ops {
            let Some(start) = op.int_attr("start_time") else {
                out.push(format!("@{name}: {} has no start_time", op.name));
                continue;
            };
            let (len, frames): (i64, &[ValueId]) = match op.name.as_str() {
                "pulse.play" => {
                    let n = match defs.get(&op.operands[1]).and_then(|w| w.attr("samples")) {
                        Some(Attr::Samples(s)) => s.len() as i64,
                        _ => -1,
                    };
                    (n, &op.operands[..1])
                }
                "pulse.capture" => (op.int_attr("duration").unwrap_or(-1), &op.operands[..1]),
                "pulse.delay" => {
                    let n = match defs.get(&op.operands[0]).and_then(|c| c.attr("value")) {
                        Some(Attr::Duration(v, u)) => match unit_seconds(*u) {
                            Some(s) => (v * s / dt).round() as i64,
                            None => v.round() as i64,
                        },
                        _ => -1,
                    };
                    (n, &op.operands[1..])
                }
                _ => continue,
            };
            if len < 0 {
                out.push(format!("@{name}: cannot size {}", op.name));
                continue;
            }
            if start + len > total {
                out.push(format!("@{name}: {} ends at {} after duration {total}", op.name, start + len));
            }
            if len == 0 {
                continue;
            }
            // One op spanning several frames on a port occupies it once.
            let held: BTreeSet<String> = frames.iter().flat_map(resources).collect();
            for r in held {
                busy.entry(r).or_default().push((start, start + len));
            }
        }
        for (r, mut iv) in busy {
            iv.sort();
            for w in iv.windows(2) {
                if w[1].0 < w[0].1 {
                    out.push(format!("@{name}: {r} busy {:?} and {:?}", w[0], w[1]));
                }
            }
        }
    }
    out
}

/// Replays a `.bin` timeline: within each `SEQ` block, instructions issue
/// at the running `WAIT` total. Reports overlapping PLAY/ACQ on one port or
/// frame and blocks whose WAITs do not add up to the declared duration.
/// Open SEQ block: name, declared duration, elapsed WAITs, busy intervals.
type Block = (String, i64, i64, BTreeMap<String, Vec<(i64, i64)>>);

pub fn bin_timeline_violations(bin: &str, waveforms_json: Option<&str>) -> Vec<String> {
    let doc: serde_json::Value = waveforms_json.map(|t| serde_json::from_str(t).expect("waveforms json")).unwrap_or_default();
    let wf_len = |id: usize| doc["waveforms"][id]["samples"].as_array().map(|a| a.len() as i64).unwrap_or(-1);
    let frame_keys = |id: usize| -> Vec<String> {
        let f = &doc["frames"][id];
        vec![format!("port {}", f["port"]), format!("frame {}", f["frame"])]
    };
    let mut out = Vec::new();
    let mut block: Option<Block> = None;
    let close = |block: &mut Option<Block>, out: &mut Vec<String>| {
        if let Some((name, dur, t, busy)) = block.take() {
            if t != dur {
                out.push(format!("{name}: WAITs total {t}, duration {dur}"));
            }
            for (r, mut iv) in busy {
                iv.sort();
                for w in iv.windows(2) {
                    if w[1].0 < w[0].1 {
                        out.push(format!("{name}: {r} busy {:?} and {:?}", w[0], w[1]));
                    }
                }
            }
        }
    };
    for line in bin.lines() {
        let Some((_, ins)) = line.split_once(": ") else { continue };
        let w: Vec<&str> = ins.split(' ').collect();
        match w[0] {
            "SEQ" => {
                close(&mut block, &mut out);
                block = Some((w[1].to_string(), w[2].parse().unwrap(), 0, BTreeMap::new()));
            }
            "WAIT" => {
                if let Some(b) = block.as_mut() {
                    b.2 += w[1].parse::<i64>().unwrap();
                }
            }
            "PLAY" | "ACQ" => {
                let Some(b) = block.as_mut() else {
                    out.push(format!("{ins} outside a sequence"));
                    continue;
                };
                let (fr, len) = if w[0] == "PLAY" {
                    (w[2].parse().unwrap(), wf_len(w[1].parse().unwrap()))
                } else {
                    (w[1].parse().unwrap(), w[3].parse().unwrap())
                };
                for k in frame_keys(fr) {
                    b.3.entry(k).or_default().push((b.2, b.2 + len));
                }
            }
            "DELAY" | "BARRIER" | "SHIFT_PHASE" | "SET_PHASE" | "SHIFT_FREQ" | "SET_FREQ" => {}
            _ => close(&mut block, &mut out),
        }
    }
    close(&mut block, &mut out);
    out
}

/// A small interpreter for the classical part of a module. Measurements
/// (inside or outside circuits) take their outcomes from a script.
pub struct Interp<'a> {
    m: &'a IrModule,
    vals: HashMap<ValueId, i64>,
    pub mem: BTreeMap<String, i64>,
    outcomes: VecDeque<i64>,
}

fn width(t: Type) -> u32 {
    match t {
        Type::Cbit(w) | Type::Int(w) => w,
        _ => 64,
    }
}

fn mask(v: i64, w: u32) -> i64 {
    if w >= 64 {
        v
    } else {
        v & ((1i64 << w) - 1)
    }
}

impl<'a> Interp<'a> {
    pub fn run(m: &'a IrModule, outcomes: &[i64]) -> BTreeMap<String, i64> {
        let (mem, unused) = Self::run_script(m, outcomes);
        assert_eq!(unused, 0, "unused outcomes");
        mem
    }

    /// Like `run`, also returning how many scripted outcomes went unused.
    pub fn run_script(m: &'a IrModule, outcomes: &[i64]) -> (BTreeMap<String, i64>, usize) {
        let mut it = Interp { m, vals: HashMap::new(), mem: BTreeMap::new(), outcomes: outcomes.iter().copied().collect() };
        for op in &m.body.ops {
            match op.name.as_str() {
                "oq3.declare_variable" => _ = it.mem.insert(op.sym_name().unwrap().into(), 0),
                "builtin.global_memory" => _ = it.mem.insert(op.sym_name().unwrap().into(), op.int_attr("initial").unwrap()),
                _ => {}
            }
        }
        let main = m.lookup_symbol("main").expect("main");
        it.region(&main.regions[0]);
        (it.mem, it.outcomes.len())
    }

    fn get(&self, v: ValueId) -> i64 {
        *self.vals.get(&v).unwrap_or_else(|| panic!("{v:?} has no value"))
    }

    fn set(&mut self, v: ValueId, x: i64) {
        let w = width(self.m.value_type(v));
        self.vals.insert(v, mask(x, w));
    }

    fn region(&mut self, r: &Region) -> Vec<i64> {
        for op in &r.ops {
            if op.name == "func.return" {
                return op.operands.iter().map(|v| self.vals.get(v).copied().unwrap_or(0)).collect();
            }
            self.op(op);
        }
        Vec::new()
    }

    fn op(&mut self, op: &Operation) {
        let sym = || op.symbol_ref().unwrap().to_string();
        match op.name.as_str() {
            "quir.constant" | "pulse.constant" => {
                let v = match op.attr("value") {
                    Some(Attr::Int(i)) => *i,
                    _ => 0,
                };
                self.set(op.result(), v);
            }
            "oq3.cast" => {
                let v = self.get(op.operands[0]);
                self.set(op.result(), v);
            }
            "oq3.variable_assign" | "builtin.memory_store" => {
                let v = self.get(op.operands[0]);
                self.mem.insert(sym(), v);
            }
            "oq3.variable_load" | "builtin.memory_load" => {
                let v = self.mem[&sym()];
                self.set(op.result(), v);
            }
            "oq3.cbit_assign_bit" => {
                let i = op.int_attr("index").unwrap();
                let bit = self.get(op.operands[0]) & 1;
                let old = self.mem[&sym()];
                self.mem.insert(sym(), (old & !(1 << i)) | (bit << i));
            }
            "oq3.cbit_extract_bit" => {
                let v = (self.get(op.operands[0]) >> op.int_attr("index").unwrap()) & 1;
                self.set(op.result(), v);
            }
            "oq3.and" | "oq3.or" | "oq3.xor" => {
                let (a, b) = (self.get(op.operands[0]), self.get(op.operands[1]));
                let v = match op.name.as_str() {
                    "oq3.and" => a & b,
                    "oq3.or" => a | b,
                    _ => a ^ b,
                };
                self.set(op.result(), v);
            }
            "oq3.shl" => {
                let v = self.get(op.operands[0]) << op.int_attr("amount").unwrap();
                self.set(op.result(), v);
            }
            "quir.measure" => {
                let v = self.outcomes.pop_front().expect("scripted outcome");
                self.set(op.result(), v);
            }
            "quir.call_circuit" | "quir.call_gate" => {
                let callee = self.m.lookup_symbol(&sym()).expect("callee");
                let mut inner = Interp { m: self.m, vals: HashMap::new(), mem: BTreeMap::new(), outcomes: std::mem::take(&mut self.outcomes) };
                let rets = inner.region(&callee.regions[0]);
                self.outcomes = inner.outcomes;
                for (r, v) in op.results.iter().zip(rets) {
                    self.set(*r, v);
                }
            }
            "scf.if" => {
                let taken = if self.get(op.operands[0]) != 0 { 0 } else { 1 };
                if let Some(r) = op.regions.get(taken) {
                    self.region(r);
                }
            }
            // One shot is enough: every iteration runs the same program.
            "scf.for" => _ = self.region(&op.regions[0]),
            "qcs.parallel_control_flow" => _ = self.region(&op.regions[0]),
            _ => {}
        }
    }
}
