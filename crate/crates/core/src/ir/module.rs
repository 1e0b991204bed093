use std::collections::{BTreeMap, HashMap};

use super::attr::Attr;
use super::types::Type;

/// Index of an SSA value within the module that owns it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

/// A single-block region. Block arguments come first, then the operations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Region {
    pub args: Vec<ValueId>,
    pub ops: Vec<Operation>,
}

impl Region {
    pub fn new(args: Vec<ValueId>) -> Self {
        Region { args, ops: Vec::new() }
    }

    pub fn push(&mut self, op: Operation) {
        self.ops.push(op);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    /// `dialect.opname`
    pub name: String,
    pub operands: Vec<ValueId>,
    pub results: Vec<ValueId>,
    pub attrs: BTreeMap<String, Attr>,
    pub regions: Vec<Region>,
}

impl Operation {
    pub fn dialect(&self) -> &str {
        self.name.split_once('.').map(|(d, _)| d).unwrap_or("")
    }

    pub fn is(&self, name: &str) -> bool {
        self.name == name
    }

    pub fn attr(&self, key: &str) -> Option<&Attr> {
        self.attrs.get(key)
    }

    pub fn set_attr(&mut self, key: &str, value: Attr) {
        self.attrs.insert(key.to_string(), value);
    }

    pub fn int_attr(&self, key: &str) -> Option<i64> {
        self.attr(key).and_then(Attr::as_int)
    }

    pub fn float_attr(&self, key: &str) -> Option<f64> {
        self.attr(key).and_then(Attr::as_float)
    }

    pub fn str_attr(&self, key: &str) -> Option<&str> {
        self.attr(key).and_then(Attr::as_str)
    }

    /// Name defined by this op (`sym_name`), if any.
    pub fn sym_name(&self) -> Option<&str> {
        match self.attr("sym_name") {
            Some(Attr::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    /// Symbol this op refers to (`callee` or `symbol`), if any.
    pub fn symbol_ref(&self) -> Option<&str> {
        match self.attr("callee").or_else(|| self.attr("symbol")) {
            Some(Attr::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn result(&self) -> ValueId {
        self.results[0]
    }

    pub fn region(&self, i: usize) -> &Region {
        &self.regions[i]
    }

    pub fn region_mut(&mut self, i: usize) -> &mut Region {
        &mut self.regions[i]
    }

    /// Pre-order walk over this op and all nested ops.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Operation)) {
        f(self);
        for r in &self.regions {
            for op in &r.ops {
                op.walk(f);
            }
        }
    }
}

/// A compilation unit: one top-level block plus the value type table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IrModule {
    pub body: Region,
    values: Vec<Type>,
}

impl IrModule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_value(&mut self, ty: Type) -> ValueId {
        self.values.push(ty);
        ValueId(self.values.len() as u32 - 1)
    }

    pub fn value_type(&self, v: ValueId) -> Type {
        self.values[v.0 as usize]
    }

    pub fn has_value(&self, v: ValueId) -> bool {
        (v.0 as usize) < self.values.len()
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    /// Creates an op, allocating fresh result values of the given types.
    pub fn op(
        &mut self,
        name: &str,
        operands: &[ValueId],
        result_types: &[Type],
        attrs: Vec<(&str, Attr)>,
    ) -> Operation {
        let results = result_types.iter().map(|t| self.new_value(*t)).collect();
        Operation {
            name: name.to_string(),
            operands: operands.to_vec(),
            results,
            attrs: attrs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            regions: Vec::new(),
        }
    }

    pub fn region(&mut self, arg_types: &[Type]) -> Region {
        Region::new(arg_types.iter().map(|t| self.new_value(*t)).collect())
    }

    pub fn push(&mut self, op: Operation) {
        self.body.ops.push(op);
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Operation)) {
        for op in &self.body.ops {
            op.walk(f);
        }
    }

    pub fn lookup_symbol(&self, name: &str) -> Option<&Operation> {
        self.body.ops.iter().find(|op| op.sym_name() == Some(name))
    }

    pub fn lookup_symbol_mut(&mut self, name: &str) -> Option<&mut Operation> {
        self.body.ops.iter_mut().find(|op| op.sym_name() == Some(name))
    }

    /// Symbol table of top-level definitions, in definition order.
    pub fn symbols(&self) -> Vec<(&str, &Operation)> {
        self.body.ops.iter().filter_map(|op| op.sym_name().map(|n| (n, op))).collect()
    }

    /// Number of uses of every value across the whole module.
    pub fn use_counts(&self) -> HashMap<ValueId, usize> {
        let mut counts = HashMap::new();
        self.walk(&mut |op| {
            for v in &op.operands {
                *counts.entry(*v).or_insert(0) += 1;
            }
        });
        counts
    }

    /// Map from each op result to (a clone of) its defining op.
    pub fn defining_ops(&self) -> HashMap<ValueId, &Operation> {
        let mut defs = HashMap::new();
        self.walk(&mut |op| {
            for r in &op.results {
                defs.insert(*r, op);
            }
        });
        defs
    }

    /// Copies `op` (recursively) from `src` into this module, remapping
    /// values through `map`. Operands missing from `map` are an error.
    pub fn import_op(
        &mut self,
        src: &IrModule,
        op: &Operation,
        map: &mut HashMap<ValueId, ValueId>,
    ) -> Operation {
        let operands = op
            .operands
            .iter()
            .map(|v| *map.get(v).unwrap_or_else(|| panic!("import of {} with unmapped operand", op.name)))
            .collect();
        let results = op
            .results
            .iter()
            .map(|r| {
                let nv = self.new_value(src.value_type(*r));
                map.insert(*r, nv);
                nv
            })
            .collect();
        let regions = op.regions.iter().map(|r| self.import_region(src, r, map)).collect();
        Operation { name: op.name.clone(), operands, results, attrs: op.attrs.clone(), regions }
    }

    pub fn import_region(
        &mut self,
        src: &IrModule,
        region: &Region,
        map: &mut HashMap<ValueId, ValueId>,
    ) -> Region {
        let args = region
            .args
            .iter()
            .map(|a| {
                let nv = self.new_value(src.value_type(*a));
                map.insert(*a, nv);
                nv
            })
            .collect();
        let ops = region.ops.iter().map(|o| self.import_op(src, o, map)).collect();
        Region { args, ops }
    }

    /// Clones `op` within this module. Operands found in `map` are renamed,
    /// others kept; every result and region argument gets a fresh value.
    pub fn clone_op(&mut self, op: &Operation, map: &mut HashMap<ValueId, ValueId>) -> Operation {
        let operands = op.operands.iter().map(|v| *map.get(v).unwrap_or(v)).collect();
        let results = op
            .results
            .iter()
            .map(|r| {
                let nv = self.new_value(self.value_type(*r));
                map.insert(*r, nv);
                nv
            })
            .collect();
        let regions = op
            .regions
            .iter()
            .map(|r| {
                let args = r
                    .args
                    .iter()
                    .map(|a| {
                        let nv = self.new_value(self.value_type(*a));
                        map.insert(*a, nv);
                        nv
                    })
                    .collect();
                let ops = r.ops.iter().map(|o| self.clone_op(o, map)).collect();
                Region { args, ops }
            })
            .collect();
        Operation { name: op.name.clone(), operands, results, attrs: op.attrs.clone(), regions }
    }

    /// Replaces every use of `from` with `to` throughout the module.
    pub fn replace_all_uses(&mut self, from: ValueId, to: ValueId) {
        fn visit(r: &mut Region, from: ValueId, to: ValueId) {
            for op in &mut r.ops {
                for v in &mut op.operands {
                    if *v == from {
                        *v = to;
                    }
                }
                for sub in &mut op.regions {
                    visit(sub, from, to);
                }
            }
        }
        visit(&mut self.body, from, to);
    }
}

/// Mutable pre-order visit of every region reachable from `region`
/// (including `region` itself).
pub fn visit_regions_mut(region: &mut Region, f: &mut impl FnMut(&mut Region)) {
    f(region);
    for op in &mut region.ops {
        for r in &mut op.regions {
            visit_regions_mut(r, f);
        }
    }
}
