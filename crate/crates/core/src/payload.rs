//! The `.qem` container and the parameter linker.
//!
//! A payload is a stored (uncompressed) zip whose first entry is
//! `manifest.json`; the rest follow in name order with zeroed timestamps,
//! so equal contents always give equal bytes.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::diagnostics::{Code, Diagnostic};
use crate::ir::{parse_module, print_module, Attr, Type};
use crate::target::emit::{encode_arg, BIN_HEADER};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
const PHASE: &str = "payload";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub target: String,
    pub instruments: Vec<ManifestInstrument>,
    pub parameters: BTreeMap<String, ManifestParameter>,
    /// Every entry in the archive, in archive order.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestInstrument {
    pub uid: String,
    pub role: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParameter {
    /// `angle` or `bit`.
    #[serde(rename = "type")]
    pub ty: String,
    pub default: serde_json::Value,
    pub sites: Vec<Site>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub file: String,
    pub line: usize,
    pub arg: usize,
}

/// Manifest type name for a parameter's IR type.
pub fn param_type_name(ty: &Type) -> &'static str {
    match ty {
        Type::Angle(_) => "angle",
        _ => "bit",
    }
}

/// Parses a `-P name=value` style binding for a parameter of type `ty`.
pub fn parse_binding(name: &str, ty: &str, text: &str) -> Result<Attr, Diagnostic> {
    let bad = || Diagnostic::error(Code::ParameterTypeMismatch, PHASE, format!("'{text}' is not a valid {ty} value for parameter '{name}'"));
    match ty {
        "angle" => text.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(Attr::Float).ok_or_else(bad),
        _ => match text.trim() {
            "0" => Ok(Attr::Int(0)),
            "1" => Ok(Attr::Int(1)),
            _ => Err(bad()),
        },
    }
}

pub(crate) fn attr_json(v: &Attr) -> serde_json::Value {
    match v {
        Attr::Int(i) => (*i).into(),
        Attr::Float(f) | Attr::Angle(f) => (*f).into(),
        _ => serde_json::Value::Null,
    }
}

fn corrupt(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(Code::CorruptPayload, PHASE, msg)
}

/// Named entries collected from concurrent instrument pipelines.
#[derive(Debug, Default)]
pub struct Payload {
    entries: Mutex<BTreeMap<String, Vec<u8>>>,
}

impl Payload {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, name: &str, bytes: Vec<u8>) -> Result<(), Diagnostic> {
        let mut entries = self.entries.lock().expect("payload lock");
        if entries.contains_key(name) {
            return Err(Diagnostic::error(Code::DuplicateEntry, PHASE, format!("payload entry '{name}' written twice")));
        }
        entries.insert(name.to_string(), bytes);
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.lock().expect("payload lock").keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<Vec<u8>> {
        self.entries.lock().expect("payload lock").get(name).cloned()
    }

    fn replace(&self, name: &str, bytes: Vec<u8>) {
        self.entries.lock().expect("payload lock").insert(name.to_string(), bytes);
    }

    /// Archive order: the manifest, then everything else by name.
    pub fn archive_order(&self) -> Vec<String> {
        let names = self.names();
        let mut out: Vec<String> = names.iter().filter(|n| *n == MANIFEST).cloned().collect();
        out.extend(names.into_iter().filter(|n| n != MANIFEST));
        out
    }

    pub fn to_zip(&self) -> Vec<u8> {
        let entries = self.entries.lock().expect("payload lock");
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default()
            .compression_method(CompressionMethod::Stored)
            .last_modified_time(DateTime::default())
            .unix_permissions(0o644);
        let order = std::iter::once(MANIFEST).filter(|m| entries.contains_key(*m)).chain(entries.keys().map(String::as_str).filter(|n| *n != MANIFEST));
        for name in order {
            zip.start_file(name, opts).expect("in-memory zip");
            zip.write_all(&entries[name]).expect("in-memory zip");
        }
        zip.finish().expect("in-memory zip").into_inner()
    }

    pub fn from_zip(bytes: &[u8]) -> Result<Payload, Diagnostic> {
        let mut archive = ZipArchive::new(Cursor::new(bytes)).map_err(|e| corrupt(format!("not a payload archive: {e}")))?;
        let payload = Payload::new();
        for i in 0..archive.len() {
            let mut file = archive.by_index(i).map_err(|e| corrupt(format!("unreadable entry {i}: {e}")))?;
            let name = file.name().map_err(|e| corrupt(format!("bad entry name: {e}")))?.to_string();
            if name.starts_with('/') || name.starts_with('\\') || name.contains(':') || name.split(['/', '\\']).any(|c| c == "..") {
                return Err(corrupt(format!("entry '{name}' escapes the payload")));
            }
            let mut buf = Vec::new();
            file.read_to_end(&mut buf).map_err(|e| corrupt(format!("unreadable entry '{name}': {e}")))?;
            payload.add(&name, buf).map_err(|d| corrupt(d.message))?;
        }
        Ok(payload)
    }

    pub fn manifest(&self) -> Result<Manifest, Diagnostic> {
        let bytes = self.get(MANIFEST).ok_or_else(|| corrupt("payload has no manifest.json"))?;
        serde_json::from_slice(&bytes).map_err(|e| corrupt(format!("manifest.json is invalid: {e}")))
    }

    pub fn set_manifest(&self, m: &Manifest) {
        let mut text = serde_json::to_string_pretty(m).expect("manifest json");
        text.push('\n');
        self.replace(MANIFEST, text.into_bytes());
    }
}

/// Rewrites argument `arg` of instruction `line` in a `.bin` text.
fn patch_bin(text: &str, line: usize, arg: usize, value: &Attr) -> Result<String, Diagnostic> {
    if !text.starts_with(BIN_HEADER) {
        return Err(corrupt("binary has no QEMOCK header"));
    }
    let prefix = format!("{line}: ");
    let mut found = false;
    let mut out = String::with_capacity(text.len());
    for l in text.lines() {
        match l.strip_prefix(&prefix) {
            Some(rest) if !found => {
                let mut words: Vec<String> = rest.split(' ').map(str::to_string).collect();
                if arg == 0 || arg >= words.len() {
                    return Err(corrupt(format!("instruction {line} has no argument {arg}")));
                }
                words[arg] = encode_arg(&words[0], value);
                out.push_str(&prefix);
                out.push_str(&words.join(" "));
                found = true;
            }
            _ => out.push_str(l),
        }
        out.push('\n');
    }
    if !found {
        return Err(corrupt(format!("no instruction {line}")));
    }
    Ok(out)
}

/// Sets the default of `@name` in every `.qeir` entry that declares it.
fn patch_qeir(payload: &Payload, name: &str, value: &Attr) -> Result<(), Diagnostic> {
    for file in payload.names().into_iter().filter(|n| n.ends_with(".qeir")) {
        let text = String::from_utf8(payload.get(&file).unwrap_or_default()).map_err(|_| corrupt(format!("{file} is not UTF-8")))?;
        let mut m = parse_module(&text).map_err(|d| corrupt(format!("{file}: {}", d.message)))?;
        if let Some(decl) = m.lookup_symbol_mut(name).filter(|o| o.is("qcs.declare_parameter")) {
            decl.set_attr("default", value.clone());
            payload.replace(&file, print_module(&m).into_bytes());
        }
    }
    Ok(())
}

/// Binds parameter values into an existing payload without recompiling.
/// Binding nothing returns the input unchanged.
pub fn link(bytes: &[u8], bindings: &BTreeMap<String, String>) -> Result<Vec<u8>, Vec<Diagnostic>> {
    if bindings.is_empty() {
        Payload::from_zip(bytes).and_then(|p| p.manifest()).map_err(|d| vec![d])?;
        return Ok(bytes.to_vec());
    }
    let payload = Payload::from_zip(bytes).map_err(|d| vec![d])?;
    let mut manifest = payload.manifest().map_err(|d| vec![d])?;
    let mut values = BTreeMap::new();
    let mut diags = Vec::new();
    for (name, text) in bindings {
        match manifest.parameters.get(name) {
            None => diags.push(Diagnostic::error(Code::UnknownParameter, PHASE, format!("payload has no parameter '{name}'"))),
            Some(p) => match parse_binding(name, &p.ty, text) {
                Ok(v) => _ = values.insert(name.clone(), v),
                Err(d) => diags.push(d),
            },
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let fail = |d: Diagnostic| vec![d];
    for (name, value) in &values {
        let param = manifest.parameters.get_mut(name).expect("checked above");
        for site in &param.sites {
            let text = payload.get(&site.file).ok_or_else(|| corrupt(format!("site names missing file {}", site.file))).map_err(fail)?;
            let text = String::from_utf8(text).map_err(|_| fail(corrupt(format!("{} is not UTF-8", site.file))))?;
            payload.replace(&site.file, patch_bin(&text, site.line, site.arg, value).map_err(fail)?.into_bytes());
        }
        param.default = attr_json(value);
        patch_qeir(&payload, name, value).map_err(fail)?;
    }
    payload.set_manifest(&manifest);
    Ok(payload.to_zip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zip_is_deterministic_and_manifest_first() {
        let build = |order: &[&str]| {
            let p = Payload::new();
            for n in order {
                p.add(n, n.as_bytes().to_vec()).unwrap();
            }
            p.to_zip()
        };
        let a = build(&["b.bin", MANIFEST, "a.qeir"]);
        let b = build(&["a.qeir", "b.bin", MANIFEST]);
        assert_eq!(a, b);
        let back = Payload::from_zip(&a).unwrap();
        assert_eq!(back.archive_order(), [MANIFEST, "a.qeir", "b.bin"]);
    }

    #[test]
    fn duplicate_entry() {
        let p = Payload::new();
        p.add("x", vec![]).unwrap();
        assert_eq!(p.add("x", vec![1]).unwrap_err().code, Code::DuplicateEntry);
    }

    #[test]
    fn rejects_escaping_names() {
        for bad in ["../evil", "/abs", "a/../../b"] {
            let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
            zip.start_file(bad, SimpleFileOptions::default().compression_method(CompressionMethod::Stored)).unwrap();
            zip.write_all(b"x").unwrap();
            let bytes = zip.finish().unwrap().into_inner();
            assert_eq!(Payload::from_zip(&bytes).unwrap_err().code, Code::CorruptPayload, "{bad}");
        }
        assert_eq!(Payload::from_zip(b"not a zip").unwrap_err().code, Code::CorruptPayload);
    }

    #[test]
    fn patch_rewrites_one_argument() {
        let bin = format!("{BIN_HEADER}\n0: INIT\n1: SHIFT_PHASE 2 0\n2: MOV r3 #0.0\nPATCH t 1 2\n");
        let out = patch_bin(&bin, 1, 2, &Attr::Float(1.0)).unwrap();
        assert!(out.contains("1: SHIFT_PHASE 2 1000\n"));
        let out = patch_bin(&out, 2, 2, &Attr::Float(0.25)).unwrap();
        assert!(out.contains("2: MOV r3 #0.25\n"));
        assert!(patch_bin(&bin, 9, 1, &Attr::Float(1.0)).is_err());
    }

    #[test]
    fn binding_types() {
        assert_eq!(parse_binding("t", "angle", "0.5").unwrap(), Attr::Float(0.5));
        assert_eq!(parse_binding("b", "bit", "1").unwrap(), Attr::Int(1));
        assert_eq!(parse_binding("b", "bit", "2").unwrap_err().code, Code::ParameterTypeMismatch);
        assert_eq!(parse_binding("t", "angle", "nan").unwrap_err().code, Code::ParameterTypeMismatch);
    }
}
