use std::collections::HashMap;

use crate::diagnostics::{Code, Diagnostic};
use crate::ir::{Attr, IrModule, Operation, Region, Type};

/// Rewrites `oq3` variables into `builtin` global memory.
///
/// Indexed bit assignment becomes a read-modify-write:
/// `mem = (mem & !(1 << i)) | (bit << i)`.
pub fn lower_variables(m: &mut IrModule) -> Vec<Diagnostic> {
    let mut widths: HashMap<String, u32> = HashMap::new();
    for op in &mut m.body.ops {
        if op.is("oq3.declare_variable") {
            let ty = op.attr("type").and_then(Attr::as_type).unwrap_or(Type::Cbit(1));
            if let (Some(name), Type::Cbit(w)) = (op.sym_name(), ty) {
                widths.insert(name.to_string(), w);
            }
            op.name = "builtin.global_memory".into();
            op.set_attr("initial", Attr::Int(0));
        }
    }
    let mut diags = Vec::new();
    let mut body = std::mem::take(&mut m.body);
    rewrite(m, &mut body, &widths, &mut diags);
    m.body = body;
    diags
}

fn rewrite(m: &mut IrModule, r: &mut Region, widths: &HashMap<String, u32>, diags: &mut Vec<Diagnostic>) {
    let ops = std::mem::take(&mut r.ops);
    for mut op in ops {
        for sub in &mut op.regions {
            rewrite(m, sub, widths, diags);
        }
        match op.name.as_str() {
            "oq3.variable_assign" => op.name = "builtin.memory_store".into(),
            "oq3.variable_load" => op.name = "builtin.memory_load".into(),
            "oq3.cbit_assign_bit" => {
                let sym = op.symbol_ref().unwrap_or_default().to_string();
                let Some(&w) = widths.get(&sym) else {
                    diags.push(Diagnostic::error(
                        Code::UnknownVariable,
                        "lower-variables",
                        format!("assignment to undeclared variable @{sym}"),
                    ));
                    r.ops.push(op);
                    continue;
                };
                let index = op.int_attr("index").unwrap_or(0);
                let bit = op.operands[0];
                let symbol = || Attr::Symbol(sym.clone());
                let cbit = Type::Cbit(w);
                let load = m.op("builtin.memory_load", &[], &[cbit], vec![("symbol", symbol())]);
                let mask_value = !(1i64 << index) & width_mask(w);
                let mask = m.op("quir.constant", &[], &[cbit], vec![("value", Attr::Int(mask_value))]);
                let cleared = m.op("oq3.and", &[load.result(), mask.result()], &[cbit], vec![]);
                let widened = m.op("oq3.cast", &[bit], &[cbit], vec![]);
                let shifted = m.op("oq3.shl", &[widened.result()], &[cbit], vec![("amount", Attr::Int(index))]);
                let merged = m.op("oq3.or", &[cleared.result(), shifted.result()], &[cbit], vec![]);
                let store = m.op("builtin.memory_store", &[merged.result()], &[], vec![("symbol", symbol())]);
                r.ops.extend([load, mask, cleared, widened, shifted, merged, store]);
                continue;
            }
            _ => {}
        }
        if op.name.starts_with("builtin.memory_") {
            let sym = op.symbol_ref().unwrap_or_default();
            if !widths.contains_key(sym) {
                diags.push(Diagnostic::error(
                    Code::UnknownVariable,
                    "lower-variables",
                    format!("access to undeclared variable @{sym}"),
                ));
            }
        }
        r.ops.push(op);
    }
}

fn width_mask(w: u32) -> i64 {
    if w >= 64 {
        -1
    } else {
        (1i64 << w) - 1
    }
}

/// True if no `oq3` variable op remains anywhere in `m`.
pub fn is_lowered(m: &IrModule) -> bool {
    let mut ok = true;
    m.walk(&mut |op: &Operation| {
        ok &= !matches!(
            op.name.as_str(),
            "oq3.declare_variable" | "oq3.variable_assign" | "oq3.variable_load" | "oq3.cbit_assign_bit"
        );
    });
    ok
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_variable() {
        let mut m = IrModule::new();
        let c = m.op("quir.constant", &[], &[Type::I1], vec![("value", Attr::Int(1))]);
        let a = m.op(
            "oq3.cbit_assign_bit",
            &[c.result()],
            &[],
            vec![("symbol", Attr::Symbol("ghost".into())), ("index", Attr::Int(0))],
        );
        m.push(c);
        m.push(a);
        let d = lower_variables(&mut m);
        assert_eq!(d[0].code, Code::UnknownVariable);
        assert_eq!(d[0].category(), crate::diagnostics::Category::UnknownSymbol);
    }
}
