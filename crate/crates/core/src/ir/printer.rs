//! Canonical generic-form printer.
//!
//! ```text
//! module {
//!   %0 = quir.declare_qubit() {id = 2} : () -> (!quir.qubit<1>)
//!   func.func() {sym_name = @h} : () -> () {
//!   ^(%1: !quir.qubit<1>):
//!     quir.reset(%1) : (!quir.qubit<1>) -> ()
//!   }
//! }
//! ```
//!
//! Values are renumbered densely in order of appearance, attributes are
//! sorted by key, and nested regions indent by two spaces.

use std::collections::HashMap;
use std::fmt::Write;

use super::attr::Attr;
use super::module::{IrModule, Operation, Region, ValueId};

/// Canonical number of every value defined in `m`, in textual definition order.
pub fn value_numbering(m: &IrModule) -> HashMap<ValueId, usize> {
    fn number_region(r: &Region, map: &mut HashMap<ValueId, usize>) {
        for a in &r.args {
            let n = map.len();
            map.insert(*a, n);
        }
        for op in &r.ops {
            number_op(op, map);
        }
    }
    fn number_op(op: &Operation, map: &mut HashMap<ValueId, usize>) {
        for r in &op.results {
            let n = map.len();
            map.insert(*r, n);
        }
        for r in &op.regions {
            number_region(r, map);
        }
    }
    let mut map = HashMap::new();
    for op in &m.body.ops {
        number_op(op, &mut map);
    }
    map
}

pub fn print_module(m: &IrModule) -> String {
    let mut p = Printer { m, names: value_numbering(m), out: String::new() };
    p.out.push_str("module {\n");
    for op in &m.body.ops {
        p.op(op, 1);
    }
    p.out.push_str("}\n");
    p.out
}

/// Prints a single op (and its regions) at depth 0 using the module's numbering.
pub fn print_op(m: &IrModule, op: &Operation) -> String {
    let mut p = Printer { m, names: value_numbering(m), out: String::new() };
    p.op(op, 0);
    p.out
}

struct Printer<'a> {
    m: &'a IrModule,
    names: HashMap<ValueId, usize>,
    out: String,
}

impl Printer<'_> {
    fn name(&self, v: ValueId) -> String {
        match self.names.get(&v) {
            Some(n) => format!("%{n}"),
            // Only reachable for unverified modules; keeps printing total.
            None => format!("%<undef{}>", v.0),
        }
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn op(&mut self, op: &Operation, depth: usize) {
        self.indent(depth);
        if !op.results.is_empty() {
            let rs: Vec<_> = op.results.iter().map(|r| self.name(*r)).collect();
            self.out.push_str(&rs.join(", "));
            self.out.push_str(" = ");
        }
        self.out.push_str(&op.name);
        self.out.push('(');
        let args: Vec<_> = op.operands.iter().map(|v| self.name(*v)).collect();
        self.out.push_str(&args.join(", "));
        self.out.push(')');
        if !op.attrs.is_empty() {
            self.out.push_str(" {");
            for (i, (k, v)) in op.attrs.iter().enumerate() {
                if i > 0 {
                    self.out.push_str(", ");
                }
                self.out.push_str(k);
                if !matches!(v, Attr::Unit) {
                    let _ = write!(self.out, " = {v}");
                }
            }
            self.out.push('}');
        }
        let tys = |vs: &[ValueId]| {
            vs.iter().map(|v| self.m.value_type(*v).to_string()).collect::<Vec<_>>().join(", ")
        };
        let sig = format!(" : ({}) -> ({})", tys(&op.operands), tys(&op.results));
        self.out.push_str(&sig);
        for region in &op.regions {
            self.out.push_str(" {\n");
            if !region.args.is_empty() {
                self.indent(depth);
                let args: Vec<_> = region
                    .args
                    .iter()
                    .map(|a| format!("{}: {}", self.name(*a), self.m.value_type(*a)))
                    .collect();
                let _ = writeln!(self.out, "^({}):", args.join(", "));
            }
            for inner in &region.ops {
                self.op(inner, depth + 1);
            }
            self.indent(depth);
            self.out.push('}');
        }
        self.out.push('\n');
    }
}
