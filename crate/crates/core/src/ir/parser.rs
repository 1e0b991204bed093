//! Reader for the canonical textual IR form produced by [`print_module`].
//!
//! [`print_module`]: super::printer::print_module

use std::collections::HashMap;

use super::attr::Attr;
use super::module::{IrModule, Operation, Region, ValueId};
use super::types::{TimeUnit, Type};
use crate::diagnostics::{Code, Diagnostic, SourceSpan};
use crate::dialects;

const PHASE: &str = "ir-parse";

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Value(String),
    Symbol(String),
    /// `!dialect.type`
    Bang(String),
    /// `#dialect.attr`
    Hash(String),
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn err(code: Code, span: SourceSpan, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, PHASE, msg).with_span(span)
}

fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let ident_char = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || c == b'$';
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let (sl, sc) = (line, col);
        let span_to = |end: usize| SourceSpan::new(start, end, sl, sc);
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let tok = match c {
            b'%' | b'@' | b'!' | b'#' => {
                i += 1;
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                let body = text[start + 1..i].to_string();
                if body.is_empty() {
                    return Err(err(Code::IrSyntax, span_to(i), format!("dangling '{}'", c as char)));
                }
                match c {
                    b'%' => Tok::Value(body),
                    b'@' => Tok::Symbol(body),
                    b'!' => Tok::Bang(body),
                    _ => Tok::Hash(body),
                }
            }
            b'"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(&b) = bytes.get(i) else {
                        return Err(err(Code::IrSyntax, span_to(i), "unterminated string"));
                    };
                    match b {
                        b'"' => {
                            i += 1;
                            break;
                        }
                        b'\\' => {
                            let esc = bytes.get(i + 1).copied();
                            i += 2;
                            match esc {
                                Some(b'"') => s.push('"'),
                                Some(b'\\') => s.push('\\'),
                                Some(b'n') => s.push('\n'),
                                Some(b't') => s.push('\t'),
                                Some(b'u') => {
                                    let close = text[i..].find('}').map(|p| i + p);
                                    let code = close
                                        .filter(|_| bytes.get(i) == Some(&b'{'))
                                        .and_then(|e| u32::from_str_radix(&text[i + 1..e], 16).ok())
                                        .and_then(char::from_u32);
                                    match (code, close) {
                                        (Some(ch), Some(e)) => {
                                            s.push(ch);
                                            i = e + 1;
                                        }
                                        _ => return Err(err(Code::IrSyntax, span_to(i), "bad escape")),
                                    }
                                }
                                _ => return Err(err(Code::IrSyntax, span_to(i), "bad escape")),
                            }
                        }
                        _ => {
                            let ch = text[i..].chars().next().unwrap_or('\u{fffd}');
                            if ch == '\n' {
                                return Err(err(Code::IrSyntax, span_to(i), "newline in string"));
                            }
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                Tok::Str(s)
            }
            b'0'..=b'9' | b'-' if c != b'-' || bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                i += 1;
                let mut is_float = false;
                while i < bytes.len() {
                    let d = bytes[i];
                    if d.is_ascii_digit() {
                        i += 1;
                    } else if d == b'.' || d == b'e' || d == b'E' {
                        is_float = true;
                        i += 1;
                        if (d == b'e' || d == b'E') && matches!(bytes.get(i), Some(b'-') | Some(b'+')) {
                            i += 1;
                        }
                    } else {
                        break;
                    }
                }
                let s = &text[start..i];
                if is_float {
                    Tok::Float(s.parse().map_err(|_| err(Code::IrSyntax, span_to(i), format!("bad float '{s}'")))?)
                } else {
                    Tok::Int(s.parse().map_err(|_| err(Code::IrSyntax, span_to(i), format!("bad integer '{s}'")))?)
                }
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Punct("->")
            }
            b'(' | b')' | b'{' | b'}' | b'[' | b']' | b'<' | b'>' | b'=' | b':' | b',' | b'^' => {
                i += 1;
                Tok::Punct(match c {
                    b'(' => "(",
                    b')' => ")",
                    b'{' => "{",
                    b'}' => "}",
                    b'[' => "[",
                    b']' => "]",
                    b'<' => "<",
                    b'>' => ">",
                    b'=' => "=",
                    b':' => ":",
                    b',' => ",",
                    _ => "^",
                })
            }
            c if c.is_ascii_alphabetic() || c == b'_' || (c == b'-' && text[i..].starts_with("-inf")) => {
                i += 1;
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                match &text[start..i] {
                    "inf" => Tok::Float(f64::INFINITY),
                    "-inf" => Tok::Float(f64::NEG_INFINITY),
                    "NaN" => Tok::Float(f64::NAN),
                    s => Tok::Ident(s.to_string()),
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(Code::IrSyntax, span_to(i + 1), format!("unexpected character '{ch}'")));
            }
        };
        // Tokens never span lines, so column advances by byte length.
        col += (i - start) as u32;
        toks.push(Token { tok, span: span_to(i) });
    }
    let end = SourceSpan::new(text.len(), text.len(), line, col);
    toks.push(Token { tok: Tok::Eof, span: end });
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    module: IrModule,
    /// Lexical scopes of value names; inner scopes are pushed per region.
    scopes: Vec<HashMap<String, ValueId>>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, what: &str) -> PResult<T> {
        Err(err(Code::IrSyntax, self.span(), format!("expected {what}, found {:?}", self.peek())))
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.syntax(&format!("'{p}'"))
        }
    }

    fn int(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.syntax("integer"),
        }
    }

    fn float(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Float(v) => {
                self.bump();
                Ok(v)
            }
            Tok::Int(v) => {
                self.bump();
                Ok(v as f64)
            }
            _ => self.syntax("number"),
        }
    }

    fn width(&mut self) -> PResult<u32> {
        self.expect("<")?;
        let span = self.span();
        let w = self.int()?;
        self.expect(">")?;
        u32::try_from(w).map_err(|_| err(Code::IrSyntax, span, "width out of range"))
    }

    fn unit(&mut self) -> PResult<TimeUnit> {
        let span = self.span();
        match self.bump().tok {
            Tok::Ident(u) => TimeUnit::parse(&u).ok_or_else(|| err(Code::IrSyntax, span, format!("unknown time unit '{u}'"))),
            _ => Err(err(Code::IrSyntax, span, "expected time unit")),
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        let span = self.span();
        let t = match self.bump().tok {
            Tok::Bang(name) => match name.as_str() {
                "quir.qubit" => {
                    let w = self.width()?;
                    if w != 1 {
                        return Err(err(Code::IrSyntax, span, "qubit width must be 1"));
                    }
                    Type::Qubit
                }
                "quir.cbit" => Type::Cbit(self.width()?),
                "quir.angle" => Type::Angle(self.width()?),
                "quir.duration" => {
                    self.expect("<")?;
                    let u = self.unit()?;
                    self.expect(">")?;
                    Type::Duration(u)
                }
                "quir.stretch" => Type::Stretch,
                "pulse.frame" => Type::Frame,
                "pulse.port" => Type::Port,
                "pulse.mixed_frame" => Type::MixedFrame,
                "pulse.waveform" => Type::Waveform,
                _ => return Err(err(Code::IrSyntax, span, format!("unknown type '!{name}'"))),
            },
            Tok::Ident(name) => match name.as_str() {
                "f64" => Type::F64,
                "none" => Type::None,
                _ => match name.strip_prefix('i').and_then(|w| w.parse::<u32>().ok()) {
                    Some(w) => Type::Int(w),
                    None => return Err(err(Code::IrSyntax, span, format!("unknown type '{name}'"))),
                },
            },
            _ => return Err(err(Code::IrSyntax, span, "expected type")),
        };
        if !t.is_well_formed() {
            return Err(err(Code::IrSyntax, span, format!("malformed type {t}")));
        }
        Ok(t)
    }

    fn type_list(&mut self) -> PResult<Vec<Type>> {
        self.expect("(")?;
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(self.ty()?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn attr_value(&mut self) -> PResult<Attr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Attr::Int(v))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Attr::Float(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Attr::Str(s))
            }
            Tok::Symbol(s) => {
                self.bump();
                Ok(Attr::Symbol(s))
            }
            Tok::Bang(_) | Tok::Ident(_) => Ok(Attr::Type(self.ty()?)),
            Tok::Hash(name) => {
                self.bump();
                self.expect("<")?;
                let v = self.float()?;
                let a = match name.as_str() {
                    "quir.angle" => Attr::Angle(v),
                    "quir.duration" => {
                        self.expect(",")?;
                        Attr::Duration(v, self.unit()?)
                    }
                    _ => return Err(err(Code::IrSyntax, span, format!("unknown attribute '#{name}'"))),
                };
                self.expect(">")?;
                Ok(a)
            }
            Tok::Punct("[") => {
                self.bump();
                if self.eat("]") {
                    return Ok(Attr::IntList(Vec::new()));
                }
                if matches!(self.peek(), Tok::Punct("(")) {
                    let mut samples = Vec::new();
                    loop {
                        self.expect("(")?;
                        let re = self.float()?;
                        self.expect(",")?;
                        let im = self.float()?;
                        self.expect(")")?;
                        samples.push((re, im));
                        if self.eat("]") {
                            return Ok(Attr::Samples(samples));
                        }
                        self.expect(",")?;
                    }
                }
                let mut ints = Vec::new();
                loop {
                    ints.push(self.int()?);
                    if self.eat("]") {
                        return Ok(Attr::IntList(ints));
                    }
                    self.expect(",")?;
                }
            }
            _ => self.syntax("attribute value"),
        }
    }

    fn lookup(&self, name: &str) -> Option<ValueId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn define(&mut self, name: String, ty: Type, span: SourceSpan) -> PResult<ValueId> {
        if self.lookup(&name).is_some() {
            return Err(err(Code::MultipleDefinition, span, format!("value %{name} defined twice")));
        }
        let v = self.module.new_value(ty);
        self.scopes.last_mut().expect("scope").insert(name, v);
        Ok(v)
    }

    fn region(&mut self) -> PResult<Region> {
        self.expect("{")?;
        self.scopes.push(HashMap::new());
        let mut region = Region::default();
        if self.eat("^") {
            self.expect("(")?;
            if !self.eat(")") {
                loop {
                    let span = self.span();
                    let Tok::Value(name) = self.bump().tok else {
                        return Err(err(Code::IrSyntax, span, "expected block argument"));
                    };
                    self.expect(":")?;
                    let ty = self.ty()?;
                    let v = self.define(name, ty, span)?;
                    region.args.push(v);
                    if self.eat(")") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            self.expect(":")?;
        }
        while !self.eat("}") {
            if matches!(self.peek(), Tok::Eof) {
                self.scopes.pop();
                return self.syntax("'}'");
            }
            let op = self.operation()?;
            region.ops.push(op);
        }
        self.scopes.pop();
        Ok(region)
    }

    fn operation(&mut self) -> PResult<Operation> {
        let start = self.span();
        let mut result_names = Vec::new();
        if matches!(self.peek(), Tok::Value(_)) {
            loop {
                let span = self.span();
                let Tok::Value(name) = self.bump().tok else {
                    return Err(err(Code::IrSyntax, span, "expected result name"));
                };
                result_names.push((name, span));
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("=")?;
        }
        let name_span = self.span();
        let name = match self.bump().tok {
            Tok::Ident(n) => n,
            _ => return Err(err(Code::IrSyntax, name_span, "expected operation name")),
        };
        let Some(sig) = dialects::lookup(&name) else {
            return Err(err(Code::UnknownOperation, name_span, format!("unknown operation '{name}'")));
        };
        self.expect("(")?;
        let mut operands = Vec::new();
        if !self.eat(")") {
            loop {
                let span = self.span();
                let Tok::Value(v) = self.bump().tok else {
                    return Err(err(Code::IrSyntax, span, "expected operand"));
                };
                let id = self
                    .lookup(&v)
                    .ok_or_else(|| err(Code::UseBeforeDef, span, format!("%{v} used before its definition")))?;
                operands.push(id);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let mut attrs = std::collections::BTreeMap::new();
        if self.eat("{") {
            loop {
                let span = self.span();
                let key = match self.bump().tok {
                    Tok::Ident(k) => k,
                    _ => return Err(err(Code::IrSyntax, span, "expected attribute name")),
                };
                let value = if self.eat("=") { self.attr_value()? } else { Attr::Unit };
                if attrs.insert(key.clone(), value).is_some() {
                    return Err(err(Code::IrSyntax, span, format!("duplicate attribute '{key}'")));
                }
                if self.eat("}") {
                    break;
                }
                self.expect(",")?;
            }
        }
        self.expect(":")?;
        let sig_span = self.span();
        let operand_types = self.type_list()?;
        self.expect("->")?;
        let result_types = self.type_list()?;
        if operand_types.len() != operands.len() {
            return Err(err(Code::SignatureMismatch, sig_span, format!("{name}: {} operands but {} operand types", operands.len(), operand_types.len())));
        }
        for (v, t) in operands.iter().zip(&operand_types) {
            let actual = self.module.value_type(*v);
            if actual != *t {
                return Err(err(Code::TypeMismatch, sig_span, format!("{name}: operand declared as {t} but value has type {actual}")));
            }
        }
        if result_types.len() != result_names.len() {
            return Err(err(Code::SignatureMismatch, sig_span, format!("{name}: {} results named but {} result types", result_names.len(), result_types.len())));
        }
        if let Err(msg) = sig.check_types(&operand_types, &result_types) {
            return Err(err(Code::TypeMismatch, start, format!("{name}: {msg}")));
        }
        let mut results = Vec::new();
        for ((rn, span), t) in result_names.into_iter().zip(&result_types) {
            results.push(self.define(rn, *t, span)?);
        }
        let mut regions = Vec::new();
        while matches!(self.peek(), Tok::Punct("{")) {
            regions.push(self.region()?);
        }
        Ok(Operation { name, operands, results, attrs, regions })
    }
}

/// Parses canonical IR text. Aborts at the first error, whose diagnostic
/// carries the line/column of the offending token.
pub fn parse_module(text: &str) -> Result<IrModule, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, module: IrModule::new(), scopes: vec![HashMap::new()] };
    match p.bump().tok {
        Tok::Ident(k) if k == "module" => {}
        _ => return Err(err(Code::IrSyntax, p.toks[0].span, "expected 'module'")),
    }
    let body = p.region()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.syntax("end of input");
    }
    if !body.args.is_empty() {
        return Err(err(Code::IrSyntax, p.toks[0].span, "module body takes no arguments"));
    }
    p.module.body = body;
    Ok(p.module)
}
