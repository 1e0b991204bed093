//! Drives a source program through every phase and packages the result.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::diagnostics::{self, Code, Diagnostic};
use crate::frontend::parse;
use crate::ir::{print_module, verify, Attr, IrModule};
use crate::irgen::{generate_ir, GenOptions};
use crate::passes::{localize, phase1, LocalModule, PassContext};
use crate::payload::{attr_json, param_type_name, parse_binding, Manifest, ManifestInstrument, ManifestParameter, Payload, Site, MANIFEST, MANIFEST_VERSION};
use crate::target::emit::{run_pipeline, Artifacts};
use crate::target::Target;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Ast,
    IrInitial,
    IrScheduled,
    Payload,
}

impl Emit {
    pub fn parse(s: &str) -> Option<Emit> {
        match s {
            "ast" => Some(Emit::Ast),
            "ir-initial" => Some(Emit::IrInitial),
            "ir-scheduled" => Some(Emit::IrScheduled),
            "payload" => Some(Emit::Payload),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub emit: Emit,
    /// Worker threads for per-instrument pipelines; 0 means one per CPU.
    pub jobs: usize,
    pub num_shots: u64,
    /// Compile-time parameter values, as `-P name=value` text.
    pub params: BTreeMap<String, String>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { emit: Emit::Payload, jobs: 0, num_shots: GenOptions::default().num_shots, params: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileOutput {
    Text(String),
    Payload(Vec<u8>),
}

#[derive(Debug, Default)]
pub struct CompileResult {
    pub output: Option<CompileOutput>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileResult {
    fn fail(diagnostics: Vec<Diagnostic>) -> Self {
        CompileResult { output: None, diagnostics }
    }
}

/// Sets declared parameter defaults from `-P` bindings.
fn bind_params(m: &mut IrModule, params: &BTreeMap<String, String>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (name, text) in params {
        let Some(decl) = m.lookup_symbol_mut(name).filter(|o| o.is("qcs.declare_parameter")) else {
            diags.push(Diagnostic::error(Code::UnknownParameter, "params", format!("program has no input '{name}'")));
            continue;
        };
        let ty = match decl.attr("type") {
            Some(Attr::Type(t)) => param_type_name(t),
            _ => "bit",
        };
        match parse_binding(name, ty, text) {
            Ok(v) => decl.set_attr("default", v),
            Err(d) => diags.push(d),
        }
    }
    diags
}

fn verify_after(m: &IrModule, phase: &str) -> Vec<Diagnostic> {
    verify(m)
        .into_iter()
        .map(|d| Diagnostic::error(Code::PassVerifyFailure, phase, format!("IR invalid after {phase}: [{:?}] {}", d.code, d.message)))
        .collect()
}

pub fn compile(src: &str, target: Option<&Target>, opts: &CompileOptions) -> CompileResult {
    let (ast, mut diags) = parse(src);
    if diagnostics::has_errors(&diags) {
        return CompileResult::fail(diags);
    }
    if opts.emit == Emit::Ast {
        return CompileResult { output: Some(CompileOutput::Text(format!("{ast:#?}\n"))), diagnostics: diags };
    }

    let gen = GenOptions { num_shots: opts.num_shots, ..GenOptions::default() };
    let (mut m, d) = generate_ir(&ast, &gen);
    diags.extend(d);
    diags.extend(bind_params(&mut m, &opts.params));
    if diagnostics::has_errors(&diags) {
        return CompileResult::fail(diags);
    }
    diags.extend(verify_after(&m, "irgen"));
    if diagnostics::has_errors(&diags) {
        return CompileResult::fail(diags);
    }
    if opts.emit == Emit::IrInitial {
        return CompileResult { output: Some(CompileOutput::Text(print_module(&m))), diagnostics: diags };
    }

    let Some(target) = target else {
        diags.push(Diagnostic::error(Code::ConfigParse, "target", "this output needs a target (--target)"));
        return CompileResult::fail(diags);
    };
    let ctx = PassContext { cals: Some(&target.cals) };
    for pass in phase1() {
        diags.extend((pass.run)(&mut m, &ctx));
        if diagnostics::has_errors(&diags) {
            return CompileResult::fail(diags);
        }
        diags.extend(verify_after(&m, pass.name));
        if diagnostics::has_errors(&diags) {
            return CompileResult::fail(diags);
        }
    }
    if opts.emit == Emit::IrScheduled {
        return CompileResult { output: Some(CompileOutput::Text(print_module(&m))), diagnostics: diags };
    }

    let (locals, d) = localize(&m, &target.root);
    diags.extend(d);
    if diagnostics::has_errors(&diags) {
        return CompileResult::fail(diags);
    }
    match package(&m, target, locals, opts.jobs) {
        Ok(bytes) => {
            let diags = diagnostics::collect(&target.root, &diags);
            CompileResult { output: Some(CompileOutput::Payload(bytes)), diagnostics: diags }
        }
        Err(()) => CompileResult::fail(diagnostics::collect(&target.root, &diags)),
    }
}

/// Runs instrument pipelines on a worker pool and assembles the archive.
/// Failures are recorded on the target nodes.
fn package(m: &IrModule, target: &Target, locals: Vec<LocalModule>, jobs: usize) -> Result<Vec<u8>, ()> {
    let root = &target.root;
    root.walk_preorder(&mut |n| n.clear_diagnostics());
    let instruments = root.instruments();
    let mut by_uid: BTreeMap<String, LocalModule> = locals.into_iter().map(|l| (l.uid.clone(), l)).collect();
    let work: Vec<_> = instruments.iter().map(|n| (*n, by_uid.remove(&n.uid))).collect();
    let jobs = match jobs {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        j => j,
    }
    .min(work.len().max(1));

    let payload = Payload::new();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Artifacts>>> = Mutex::new(vec![None; work.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((node, local)) = work.get(i) else { break };
                let Some(local) = local else {
                    node.add_diagnostic(Diagnostic::error(Code::StructuralViolation, "localize", format!("no module for instrument '{}'", node.uid)));
                    continue;
                };
                match run_pipeline(node, local) {
                    Ok(a) => {
                        for (name, bytes) in &a.files {
                            if let Err(d) = payload.add(name, bytes.clone()) {
                                node.add_diagnostic(d);
                            }
                        }
                        results.lock().expect("results lock")[i] = Some(a);
                    }
                    Err(ds) => ds.into_iter().for_each(|d| node.add_diagnostic(d)),
                }
            });
        }
    });
    let failed = instruments.iter().any(|n| diagnostics::has_errors(&n.diagnostics()));
    let results = results.into_inner().expect("results lock");
    if failed || results.iter().any(Option::is_none) {
        return Err(());
    }

    let mut parameters = BTreeMap::new();
    for op in &m.body.ops {
        if op.is("qcs.declare_parameter") {
            let ty = match op.attr("type") {
                Some(Attr::Type(t)) => param_type_name(t),
                _ => "bit",
            };
            let default = attr_json(op.attr("default").unwrap_or(&Attr::Int(0)));
            parameters.insert(op.sym_name().unwrap_or_default().to_string(), ManifestParameter { ty: ty.into(), default, sites: Vec::new() });
        }
    }
    let mut manifest_instruments = Vec::new();
    for (node, a) in instruments.iter().zip(results.iter().flatten()) {
        let mut files: Vec<String> = a.files.iter().map(|(n, _)| n.clone()).collect();
        files.sort();
        manifest_instruments.push(ManifestInstrument { uid: node.uid.clone(), role: node.role().map(|r| r.as_str()).unwrap_or("").into(), files });
        for s in &a.sites {
            if let Some(p) = parameters.get_mut(&s.param) {
                p.sites.push(Site { file: s.file.clone(), line: s.line, arg: s.arg });
            }
        }
    }
    for p in parameters.values_mut() {
        p.sites.sort();
    }
    payload.add(MANIFEST, Vec::new()).map_err(|d| root.add_diagnostic(d))?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        target: target.config.name.clone(),
        instruments: manifest_instruments,
        parameters,
        files: payload.archive_order(),
    };
    payload.set_manifest(&manifest);
    Ok(payload.to_zip())
}
