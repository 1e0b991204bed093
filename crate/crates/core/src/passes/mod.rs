//! System-level (phase 1) transformations.

use std::collections::{HashMap, HashSet};

use crate::diagnostics::Diagnostic;
use crate::ir::{Attr, IrModule, Operation, Region, ValueId};

mod extract;
mod localize;
mod pulse;
mod resets;
mod schedule;
mod variables;

pub use extract::extract_circuits;
pub use localize::{localize, LocalModule};
pub use pulse::{lower_to_pulse, CalibrationSet, QubitPorts};
pub use resets::parallelize_resets;
pub use schedule::{duration_to_samples, schedule};
pub use variables::{is_lowered, lower_variables};

/// Inputs shared by passes that need target information.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassContext<'a> {
    pub cals: Option<&'a CalibrationSet>,
}

pub type PassFn = fn(&mut IrModule, &PassContext<'_>) -> Vec<Diagnostic>;

#[derive(Clone, Copy)]
pub struct Pass {
    pub name: &'static str,
    pub run: PassFn,
}

impl std::fmt::Debug for Pass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

/// The phase-1 pipeline up to (not including) localization.
pub fn phase1() -> Vec<Pass> {
    vec![
        Pass { name: "extract-circuits", run: |m, _| extract_circuits(m) },
        Pass { name: "lower-variables", run: |m, _| lower_variables(m) },
        Pass { name: "parallelize-resets", run: |m, _| parallelize_resets(m) },
        Pass {
            name: "lower-to-pulse",
            run: |m, ctx| match ctx.cals {
                Some(c) => lower_to_pulse(m, c),
                None => Vec::new(),
            },
        },
        Pass {
            name: "schedule",
            run: |m, ctx| match ctx.cals {
                Some(c) => schedule(m, c.dt),
                None => Vec::new(),
            },
        },
    ]
}

/// Allocates symbol names not already used in the module.
pub(crate) struct Names {
    taken: HashSet<String>,
}

impl Names {
    pub fn new(m: &IrModule) -> Self {
        Names { taken: m.symbols().into_iter().map(|(n, _)| n.to_string()).collect() }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Moves `ops` into a new `quir.circuit @name` and returns it with the
/// `quir.call_circuit` that replaces them. Values from outside become
/// circuit arguments, except constants listed in `consts`, which are cloned
/// into the body. Results for which `escapes` holds are returned; the call
/// reuses their value ids so uses after the call need no rewriting.
pub(crate) fn outline(
    m: &mut IrModule,
    name: &str,
    ops: Vec<Operation>,
    escapes: impl Fn(ValueId) -> bool,
    consts: &HashMap<ValueId, Operation>,
) -> (Operation, Operation) {
    let defined: HashSet<ValueId> = ops.iter().flat_map(|o| o.results.iter().copied()).collect();
    let mut inputs = Vec::new();
    for op in &ops {
        for v in &op.operands {
            if !defined.contains(v) && !consts.contains_key(v) && !inputs.contains(v) {
                inputs.push(*v);
            }
        }
    }
    let types: Vec<_> = inputs.iter().map(|v| m.value_type(*v)).collect();
    let mut body = m.region(&types);
    let mut map: HashMap<ValueId, ValueId> = inputs.iter().copied().zip(body.args.iter().copied()).collect();
    let mut outs = Vec::new();
    for op in &ops {
        for v in &op.operands {
            if let (Some(c), false) = (consts.get(v), map.contains_key(v)) {
                let cloned = m.clone_op(c, &mut map);
                body.push(cloned);
            }
        }
        let cloned = m.clone_op(op, &mut map);
        body.push(cloned);
        outs.extend(op.results.iter().copied().filter(|r| escapes(*r)));
    }
    let ret_operands: Vec<_> = outs.iter().map(|v| map[v]).collect();
    body.push(Operation {
        name: "func.return".into(),
        operands: ret_operands,
        results: Vec::new(),
        attrs: Default::default(),
        regions: Vec::new(),
    });
    let mut circuit = m.op("quir.circuit", &[], &[], vec![("sym_name", Attr::Symbol(name.into()))]);
    circuit.regions.push(body);
    let call = Operation {
        name: "quir.call_circuit".into(),
        operands: inputs,
        results: outs,
        attrs: [("callee".to_string(), Attr::Symbol(name.into()))].into_iter().collect(),
        regions: Vec::new(),
    };
    (circuit, call)
}

/// Inserts new top-level definitions just before `@main`.
pub(crate) fn insert_before_main(m: &mut IrModule, defs: Vec<Operation>) {
    let at = m
        .body
        .ops
        .iter()
        .position(|o| o.sym_name() == Some("main"))
        .unwrap_or(m.body.ops.len());
    m.body.ops.splice(at..at, defs);
}

/// Removes pure constant ops whose results are never used.
pub(crate) fn remove_dead_constants(m: &mut IrModule) {
    loop {
        let uses = m.use_counts();
        let mut removed = false;
        crate::ir::visit_regions_mut(&mut m.body, &mut |r: &mut Region| {
            let before = r.ops.len();
            r.ops.retain(|o| {
                !(matches!(o.name.as_str(), "quir.constant" | "pulse.constant")
                    && o.results.iter().all(|v| !uses.contains_key(v)))
            });
            removed |= r.ops.len() != before;
        });
        if !removed {
            return;
        }
    }
}
