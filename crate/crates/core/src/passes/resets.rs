use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use super::{insert_before_main, outline, Names};
use crate::diagnostics::Diagnostic;
use crate::ir::{Attr, IrModule, Operation, Region, Type, ValueId};

/// Expands resets inside circuits into measure-and-conditionally-flip.
///
/// Each maximal run of consecutive resets on distinct qubits becomes one
/// circuit measuring all of them, followed by a `qcs.parallel_control_flow`
/// holding one `scf.if` per qubit that calls an X circuit. The surrounding
/// ops of the original circuit are re-outlined as separate circuits.
pub fn parallelize_resets(m: &mut IrModule) -> Vec<Diagnostic> {
    let mut targets = HashMap::new();
    for op in &m.body.ops {
        if op.is("quir.circuit")
            && op.attr("quir.gate").is_none()
            && op.regions[0].ops.iter().any(|o| o.is("quir.reset"))
        {
            targets.insert(op.sym_name().unwrap_or_default().to_string(), op.clone());
        }
    }
    if targets.is_empty() {
        return Vec::new();
    }
    let mut names = Names::new(m);
    m.body.ops.retain(|o| !o.sym_name().is_some_and(|n| targets.contains_key(n)));
    let mut qubit_ids = HashMap::new();
    m.walk(&mut |op| {
        if op.is("quir.declare_qubit") {
            qubit_ids.insert(op.result(), op.int_attr("id").unwrap_or(0));
        }
    });
    let mut x = Expander { targets, names: &mut names, qubit_ids, defs: Vec::new() };
    let mut body = std::mem::take(&mut m.body);
    for op in &mut body.ops {
        if op.is("func.func") {
            for r in &mut op.regions {
                x.block(m, r);
            }
        }
    }
    m.body = body;
    let defs = std::mem::take(&mut x.defs);
    insert_before_main(m, defs);
    Vec::new()
}

enum Piece {
    Ops(Vec<Operation>),
    Resets(Vec<ValueId>),
}

struct Expander<'a> {
    targets: HashMap<String, Operation>,
    names: &'a mut Names,
    qubit_ids: HashMap<ValueId, i64>,
    defs: Vec<Operation>,
}

impl Expander<'_> {
    fn block(&mut self, m: &mut IrModule, r: &mut Region) {
        let ops = std::mem::take(&mut r.ops);
        for mut op in ops {
            for sub in &mut op.regions {
                self.block(m, sub);
            }
            let target = op
                .is("quir.call_circuit")
                .then(|| op.symbol_ref().and_then(|n| self.targets.get(n)).cloned())
                .flatten();
            match target {
                Some(c) => {
                    let expanded = self.expand(m, &op, &c);
                    r.ops.extend(expanded);
                }
                None => r.ops.push(op),
            }
        }
    }

    fn expand(&mut self, m: &mut IrModule, call: &Operation, circuit: &Operation) -> Vec<Operation> {
        let base = circuit.sym_name().unwrap_or("circuit").to_string();
        let body = &circuit.regions[0];
        let mut map: HashMap<ValueId, ValueId> = body.args.iter().copied().zip(call.operands.iter().copied()).collect();
        let mut inlined = Vec::new();
        for op in &body.ops[..body.ops.len() - 1] {
            inlined.push(m.clone_op(op, &mut map));
        }
        // Give the returned values the call's result ids so later uses stay valid.
        let ret = body.ops.last().expect("circuit ends with return");
        let rename: HashMap<ValueId, ValueId> =
            ret.operands.iter().map(|v| map[v]).zip(call.results.iter().copied()).collect();
        for op in &mut inlined {
            for v in op.results.iter_mut().chain(op.operands.iter_mut()) {
                if let Some(n) = rename.get(v) {
                    *v = *n;
                }
            }
        }
        let returned: HashSet<ValueId> = call.results.iter().copied().collect();

        let mut consts = HashMap::new();
        let mut pieces: Vec<Piece> = Vec::new();
        for op in inlined {
            if op.is("quir.constant") {
                consts.insert(op.result(), op);
                continue;
            }
            if op.is("quir.reset") {
                let q = op.operands[0];
                match pieces.last_mut() {
                    Some(Piece::Resets(qs)) if !qs.contains(&q) => qs.push(q),
                    _ => pieces.push(Piece::Resets(vec![q])),
                }
            } else {
                match pieces.last_mut() {
                    Some(Piece::Ops(ops)) => ops.push(op),
                    _ => pieces.push(Piece::Ops(vec![op])),
                }
            }
        }

        // Values each piece's successors read.
        let mut later: Vec<HashSet<ValueId>> = vec![HashSet::new(); pieces.len()];
        let mut acc = returned;
        for (i, p) in pieces.iter().enumerate().rev() {
            later[i] = acc.clone();
            if let Piece::Ops(ops) = p {
                acc.extend(ops.iter().flat_map(|o| o.operands.iter().copied()));
            }
        }

        let mut out = Vec::new();
        let (mut seg, mut group) = (0, 0);
        for (i, piece) in pieces.into_iter().enumerate() {
            match piece {
                Piece::Ops(ops) => {
                    let name = self.names.fresh(&format!("{base}_s{seg}"));
                    seg += 1;
                    let later = &later[i];
                    let (c, call) = outline(m, &name, ops, |v| later.contains(&v), &consts);
                    self.defs.push(c);
                    out.push(call);
                }
                Piece::Resets(qubits) => {
                    out.extend(self.reset_group(m, &base, group, &qubits));
                    group += 1;
                }
            }
        }
        out
    }

    fn reset_group(&mut self, m: &mut IrModule, base: &str, k: usize, qubits: &[ValueId]) -> Vec<Operation> {
        let measures: Vec<Operation> = qubits.iter().map(|q| m.op("quir.measure", &[*q], &[Type::I1], vec![])).collect();
        let bits: Vec<ValueId> = measures.iter().map(|o| o.result()).collect();
        let name = self.names.fresh(&format!("{base}_reset_measure_{k}"));
        let (c, measure_call) = outline(m, &name, measures, |_| true, &HashMap::new());
        self.defs.push(c);

        let mut pcf = m.op("qcs.parallel_control_flow", &[], &[], vec![]);
        let mut members = Region::default();
        for (j, (q, bit)) in qubits.iter().zip(&bits).enumerate() {
            let id = self.qubit_ids.get(q).map(|i| i.to_string()).unwrap_or_else(|| j.to_string());
            let mut ops = Vec::new();
            let mut angle = |v: f64| {
                let c = m.op("quir.constant", &[], &[Type::Angle(64)], vec![("value", Attr::Angle(v))]);
                let r = c.result();
                ops.push(c);
                r
            };
            let (theta, phi, lambda) = (angle(PI), angle(0.0), angle(PI));
            ops.push(m.op("quir.builtin_U", &[*q, theta, phi, lambda], &[], vec![]));
            let name = self.names.fresh(&format!("{base}_reset_flip_{k}_{id}"));
            let (c, flip_call) = outline(m, &name, ops, |_| false, &HashMap::new());
            self.defs.push(c);
            let mut branch = m.op("scf.if", &[*bit], &[], vec![]);
            branch.regions.push(Region { args: Vec::new(), ops: vec![flip_call] });
            branch.regions.push(Region::default());
            members.push(branch);
        }
        pcf.regions.push(members);
        vec![measure_call, pcf]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::ir::verify;
    use crate::irgen::{generate_ir, GenOptions};
    use crate::passes::extract_circuits;

    fn lowered(src: &str) -> IrModule {
        let (ast, _) = parse(src);
        let (mut m, _) = generate_ir(&ast, &GenOptions::default());
        extract_circuits(&mut m);
        parallelize_resets(&mut m);
        let v = verify(&m);
        assert!(v.is_empty(), "{v:?}\n{}", crate::ir::print_module(&m));
        m
    }

    fn pcf_sizes(m: &IrModule) -> Vec<usize> {
        let mut out = Vec::new();
        m.walk(&mut |op| {
            if op.is("qcs.parallel_control_flow") {
                out.push(op.regions[0].ops.len());
            }
        });
        out
    }

    #[test]
    fn three_resets_one_wrapper() {
        let m = lowered("OPENQASM 3; qubit $0; qubit $1; qubit $2; reset $0; reset $1; reset $2;");
        assert_eq!(pcf_sizes(&m), vec![3]);
    }

    #[test]
    fn single_reset_still_wrapped() {
        assert_eq!(pcf_sizes(&lowered("OPENQASM 3; qubit $0; reset $0;")), vec![1]);
    }

    #[test]
    fn dependent_resets_split() {
        let src = "OPENQASM 3; gate h q { U(1.5, 0, 3.1) q; } qubit $0; reset $0; h $0; reset $0;";
        assert_eq!(pcf_sizes(&lowered(src)), vec![1, 1]);
        assert_eq!(pcf_sizes(&lowered("OPENQASM 3; qubit $0; reset $0; reset $0;")), vec![1, 1]);
    }
}
