use std::collections::HashMap;

use super::{insert_before_main, outline, remove_dead_constants, Names};
use crate::diagnostics::Diagnostic;
use crate::dialects::{self, Trait};
use crate::ir::{Attr, IrModule, Operation, Region, ValueId};

/// Outlines maximal runs of quantum ops into `quir.circuit` definitions.
///
/// Classical ops inside a run that do not depend on it are hoisted in front
/// of the call; those that do (and everything after them) follow it. Gate
/// definitions, whose bodies are purely quantum, become circuits marked
/// `quir.gate`.
pub fn extract_circuits(m: &mut IrModule) -> Vec<Diagnostic> {
    for op in &mut m.body.ops {
        if op.is("func.func") && op.sym_name() != Some("main") && is_quantum_body(&op.regions[0]) {
            op.name = "quir.circuit".into();
            op.set_attr("quir.gate", Attr::Unit);
        }
    }
    let uses = m.use_counts();
    let mut consts = HashMap::new();
    m.walk(&mut |op| {
        if op.is("quir.constant") {
            consts.insert(op.result(), op.clone());
        }
    });
    let mut names = Names::new(m);
    let mut x = Extractor { uses, consts, names: &mut names, counter: 0, circuits: Vec::new() };
    let mut body = std::mem::take(&mut m.body);
    for op in &mut body.ops {
        if op.is("func.func") {
            for r in &mut op.regions {
                x.block(m, r);
            }
        }
    }
    m.body = body;
    let circuits = std::mem::take(&mut x.circuits);
    insert_before_main(m, circuits);
    remove_dead_constants(m);
    Vec::new()
}

fn is_quantum_body(r: &Region) -> bool {
    r.ops.iter().all(|o| dialects::is_quantum(&o.name) || o.is("quir.constant") || o.is("func.return"))
}

struct Extractor<'a> {
    uses: HashMap<ValueId, usize>,
    consts: HashMap<ValueId, Operation>,
    names: &'a mut Names,
    counter: usize,
    circuits: Vec<Operation>,
}

impl Extractor<'_> {
    fn block(&mut self, m: &mut IrModule, region: &mut Region) {
        let ops = std::mem::take(&mut region.ops);
        let mut out = Vec::with_capacity(ops.len());
        let mut it = ops.into_iter().peekable();
        while let Some(mut op) = it.next() {
            if !dialects::is_quantum(&op.name) {
                for r in &mut op.regions {
                    self.block(m, r);
                }
                out.push(op);
                continue;
            }
            let mut run = vec![op];
            let mut hoisted = Vec::new();
            let mut deferred: Vec<Operation> = Vec::new();
            let mut run_defs: Vec<ValueId> = run[0].results.clone();
            let mut deferred_defs: Vec<ValueId> = Vec::new();
            while let Some(next) = it.peek() {
                let quantum = dialects::is_quantum(&next.name);
                let classical = dialects::has_trait(&next.name, Trait::ClassicalOp) && next.regions.is_empty();
                if quantum {
                    if next.operands.iter().any(|v| deferred_defs.contains(v)) {
                        break;
                    }
                    let o = it.next().expect("peeked");
                    run_defs.extend(o.results.iter().copied());
                    run.push(o);
                } else if classical {
                    let o = it.next().expect("peeked");
                    let depends = o.operands.iter().any(|v| run_defs.contains(v) || deferred_defs.contains(v));
                    if !depends && deferred.is_empty() {
                        hoisted.push(o);
                    } else {
                        deferred_defs.extend(o.results.iter().copied());
                        deferred.push(o);
                    }
                } else {
                    break;
                }
            }
            let name = self.names.fresh(&format!("circuit_{}", self.counter));
            self.counter += 1;
            let mut internal: HashMap<ValueId, usize> = HashMap::new();
            for o in &run {
                for v in &o.operands {
                    *internal.entry(*v).or_insert(0) += 1;
                }
            }
            let uses = &self.uses;
            let escapes = |v: ValueId| uses.get(&v).copied().unwrap_or(0) > internal.get(&v).copied().unwrap_or(0);
            let (circuit, call) = outline(m, &name, run, escapes, &self.consts);
            self.circuits.push(circuit);
            out.extend(hoisted);
            out.push(call);
            out.extend(deferred);
        }
        region.ops = out;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::ir::verify;
    use crate::irgen::{generate_ir, GenOptions};

    fn extracted(src: &str) -> IrModule {
        let (ast, _) = parse(src);
        let (mut m, d) = generate_ir(&ast, &GenOptions::default());
        assert!(d.is_empty(), "{d:?}");
        extract_circuits(&mut m);
        let v = verify(&m);
        assert!(v.is_empty(), "{v:?}\n{}", crate::ir::print_module(&m));
        m
    }

    fn circuits(m: &IrModule) -> Vec<String> {
        m.body
            .ops
            .iter()
            .filter(|o| o.is("quir.circuit") && o.attr("quir.gate").is_none())
            .map(|o| o.sym_name().unwrap().to_string())
            .collect()
    }

    #[test]
    fn single_reset() {
        let m = extracted("OPENQASM 3; qubit $0; reset $0;");
        assert_eq!(circuits(&m), vec!["circuit_0"]);
    }

    #[test]
    fn hoists_independent_classical_ops() {
        // The shot delay, the reset and the measure end up in one circuit.
        let m = extracted("OPENQASM 3; qubit $0; reset $0; bit c = measure $0;");
        assert_eq!(circuits(&m).len(), 1);
        let c = m.lookup_symbol("circuit_0").unwrap();
        let names: Vec<_> = c.regions[0].ops.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["quir.constant", "quir.delay", "quir.reset", "quir.measure", "func.return"]);
    }
}
