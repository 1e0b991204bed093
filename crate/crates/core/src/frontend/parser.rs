//! Recursive-descent parser for the supported OpenQASM 3 subset.

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use crate::diagnostics::{Code, Diagnostic, SourceSpan};
use crate::ir::TimeUnit;

const PHASE: &str = "parse";

/// Parses `src` into a program. Statements with errors are dropped and
/// reported; the returned program holds everything else.
pub fn parse(src: &str) -> (Program, Vec<Diagnostic>) {
    let (tokens, mut diags) = lex(src);
    let mut p = Parser { toks: tokens, pos: 0, diags: Vec::new(), braces_reported: false };
    p.check_braces();
    let program = p.program();
    diags.extend(p.diags);
    (program, diags)
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    diags: Vec<Diagnostic>,
    braces_reported: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Token<'a> {
        self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> Token<'a> {
        self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.peek();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn err(&self, code: Code, span: SourceSpan, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(code, PHASE, msg).with_span(span)
    }

    fn syntax(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        let found = if t.kind == TokenKind::Eof { "end of input".to_string() } else { format!("'{}'", t.text) };
        self.err(Code::SyntaxError, t.span, format!("expected {expected}, found {found}"))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token<'a>> {
        if self.peek().is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.syntax(&format!("'{p}'")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.bump().text.to_string())
        } else {
            Err(self.syntax("an identifier"))
        }
    }

    fn int(&mut self) -> PResult<u32> {
        let t = self.peek();
        if t.kind != TokenKind::IntegerLiteral {
            return Err(self.syntax("an integer"));
        }
        self.bump();
        t.text
            .replace('_', "")
            .parse()
            .map_err(|_| self.err(Code::MalformedLiteral, t.span, format!("integer '{}' out of range", t.text)))
    }

    fn check_braces(&mut self) {
        let mut depth = 0i64;
        for t in &self.toks {
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                depth -= 1;
                if depth < 0 {
                    break;
                }
            }
        }
        if depth != 0 {
            let span = if depth < 0 {
                self.toks.iter().filter(|t| t.is_punct("}")).map(|t| t.span).next_back()
            } else {
                self.toks.iter().filter(|t| t.is_punct("{")).map(|t| t.span).next_back()
            };
            let d = Diagnostic::error(Code::UnbalancedBraces, PHASE, "unbalanced braces");
            self.diags.push(match span {
                Some(s) => d.with_span(s),
                None => d,
            });
            self.braces_reported = true;
        }
    }

    fn unbalanced(&mut self, span: SourceSpan) {
        if !self.braces_reported {
            self.braces_reported = true;
            self.diags.push(self.err(Code::UnbalancedBraces, span, "unbalanced braces"));
        }
    }

    fn program(&mut self) -> Program {
        let mut program = Program::default();
        if self.peek().is_kw("OPENQASM") {
            let start = self.bump().span;
            match self.version() {
                Ok(v) => {
                    if v.0 != 3 {
                        self.diags.push(self.err(
                            Code::UnsupportedVersion,
                            start.to(self.prev_span()),
                            format!("unsupported OpenQASM version {}.{}", v.0, v.1),
                        ));
                    }
                    program.version = Some(v);
                }
                Err(d) => {
                    self.diags.push(d);
                    self.recover(self.pos - 1);
                }
            }
        } else {
            self.diags.push(
                Diagnostic::warning(Code::MissingVersion, PHASE, "missing OPENQASM version header; assuming 3.0")
                    .with_span(self.peek().span),
            );
        }
        while self.peek().kind != TokenKind::Eof {
            if self.peek().is_punct("}") {
                let s = self.bump().span;
                self.unbalanced(s);
                continue;
            }
            if let Some(s) = self.statement(true) {
                program.stmts.push(s);
            }
        }
        program
    }

    fn version(&mut self) -> PResult<(u32, u32)> {
        let t = self.peek();
        let v = match t.kind {
            TokenKind::IntegerLiteral => (t.text.parse().ok(), Some(0)),
            TokenKind::FloatLiteral => match t.text.split_once('.') {
                Some((a, b)) => (a.parse().ok(), if b.is_empty() { Some(0) } else { b.parse().ok() }),
                None => (None, None),
            },
            _ => return Err(self.syntax("a version number")),
        };
        self.bump();
        let (Some(major), Some(minor)) = v else {
            return Err(self.err(Code::MalformedLiteral, t.span, format!("malformed version '{}'", t.text)));
        };
        self.expect_punct(";")?;
        Ok((major, minor))
    }

    /// Parses one statement, recovering on error. Returns `None` for
    /// dropped statements.
    fn statement(&mut self, top: bool) -> Option<Stmt> {
        let start = self.pos;
        let first = self.peek().span;
        match self.statement_inner(top) {
            Ok(kind) => Some(Stmt { kind, span: first.to(self.prev_span()) }),
            Err(d) => {
                self.diags.push(d);
                self.recover(start);
                None
            }
        }
    }

    /// Skips the rest of a bad statement: up to and including the next `;`
    /// at nesting depth zero, or the `}` that closes a block it opened.
    fn recover(&mut self, start: usize) {
        self.pos = start;
        let mut depth = 0usize;
        loop {
            let t = self.peek();
            if t.kind == TokenKind::Eof {
                return;
            }
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                if depth == 0 {
                    // Belongs to the enclosing block; only consume if we made no progress.
                    if self.pos == start {
                        self.bump();
                    }
                    return;
                }
                depth -= 1;
                if depth == 0 {
                    self.bump();
                    if !self.peek().is_kw("else") {
                        return;
                    }
                    continue;
                }
            } else if t.is_punct(";") && depth == 0 {
                self.bump();
                return;
            }
            self.bump();
        }
    }

    fn statement_inner(&mut self, top: bool) -> PResult<StmtKind> {
        let t = self.peek();
        match t.kind {
            TokenKind::Keyword => match t.text {
                "gate" if top => self.gate_decl(),
                "qubit" if top => self.qubit_decl(),
                "bit" if top => self.bit_decl(),
                "input" | "output" if top => self.io_decl(),
                "reset" => {
                    self.bump();
                    let q = self.operand()?;
                    self.expect_punct(";")?;
                    Ok(StmtKind::Reset(q))
                }
                "barrier" => {
                    self.bump();
                    let qs = self.operand_list(true)?;
                    self.expect_punct(";")?;
                    Ok(StmtKind::Barrier(qs))
                }
                "delay" => self.delay(),
                "measure" if top => {
                    self.bump();
                    let q = self.operand()?;
                    self.expect_punct(";")?;
                    Ok(StmtKind::Measure { qubit: q, target: None })
                }
                "if" if top => self.if_stmt(),
                "OPENQASM" => Err(self.err(Code::SyntaxError, t.span, "version header must be the first statement")),
                _ => Err(self.unsupported(t)),
            },
            TokenKind::Identifier => {
                let next = self.peek_at(1);
                if top && (next.is_punct("=") || next.is_punct("[")) {
                    self.assignment()
                } else {
                    self.gate_call()
                }
            }
            _ => Err(self.syntax("a statement")),
        }
    }

    fn unsupported(&self, t: Token<'_>) -> Diagnostic {
        self.err(Code::UnsupportedConstruct, t.span, format!("'{}' is not supported here", t.text))
    }

    fn gate_decl(&mut self) -> PResult<StmtKind> {
        self.bump();
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_punct("(") {
            if !self.peek().is_punct(")") {
                loop {
                    params.push(self.ident()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }
        let mut qubits = vec![self.ident()?];
        while self.eat_punct(",") {
            qubits.push(self.ident()?);
        }
        let body = self.block(false)?;
        Ok(StmtKind::GateDecl { name, params, qubits, body })
    }

    /// `{ stmt* }`. Statements inside are recovered individually.
    fn block(&mut self, top: bool) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        loop {
            let t = self.peek();
            if t.is_punct("}") {
                self.bump();
                return Ok(out);
            }
            if t.kind == TokenKind::Eof {
                self.unbalanced(t.span);
                return Ok(out);
            }
            if let Some(s) = self.statement(top) {
                out.push(s);
            }
        }
    }

    fn qubit_decl(&mut self) -> PResult<StmtKind> {
        let kw = self.bump();
        let t = self.peek();
        match t.kind {
            TokenKind::HardwareQubit => {
                self.bump();
                let id = self.hw_index(t)?;
                self.expect_punct(";")?;
                Ok(StmtKind::QubitDecl { id })
            }
            TokenKind::Identifier | TokenKind::Punctuation if !t.is_punct(";") => {
                // Skip to the end so the diagnostic covers the declaration.
                while !self.peek().is_punct(";") && self.peek().kind != TokenKind::Eof {
                    self.bump();
                }
                let span = kw.span.to(self.peek().span);
                Err(self.err(Code::VirtualQubit, span, "physical qubits required (declare hardware qubits as `qubit $n;`)"))
            }
            _ => Err(self.syntax("a hardware qubit")),
        }
    }

    fn hw_index(&self, t: Token<'_>) -> PResult<u32> {
        t.text[1..]
            .parse()
            .map_err(|_| self.err(Code::MalformedLiteral, t.span, format!("qubit index '{}' out of range", t.text)))
    }

    fn bit_decl(&mut self) -> PResult<StmtKind> {
        self.bump();
        let mut width = None;
        if self.eat_punct("[") {
            let t = self.peek();
            let w = self.int()?;
            if w == 0 || w > 64 {
                return Err(self.err(Code::UnsupportedConstruct, t.span, "bit width must be between 1 and 64"));
            }
            width = Some(w);
            self.expect_punct("]")?;
        }
        let name = self.ident()?;
        let mut init = None;
        if self.eat_punct("=") {
            if !self.peek().is_kw("measure") {
                return Err(self.syntax("'measure'"));
            }
            self.bump();
            init = Some(self.operand()?);
        }
        self.expect_punct(";")?;
        Ok(StmtKind::BitDecl { name, width, init })
    }

    fn io_decl(&mut self) -> PResult<StmtKind> {
        let is_input = self.bump().text == "input";
        let t = self.peek();
        let ty = if t.is_kw("angle") {
            IoType::Angle
        } else if t.is_kw("bit") {
            IoType::Bit
        } else if t.kind == TokenKind::Keyword {
            return Err(self.unsupported(t));
        } else {
            return Err(self.syntax("'angle' or 'bit'"));
        };
        self.bump();
        if self.peek().is_punct("[") {
            // `angle[64]` is the default width; other widths are not modelled.
            self.bump();
            let t = self.peek();
            let w = self.int()?;
            if ty != IoType::Angle || w != 64 {
                return Err(self.err(Code::UnsupportedConstruct, t.span, "only angle[64] and bit are supported for input/output"));
            }
            self.expect_punct("]")?;
        }
        let name = self.ident()?;
        self.expect_punct(";")?;
        Ok(if is_input { StmtKind::Input { ty, name } } else { StmtKind::Output { ty, name } })
    }

    fn operand(&mut self) -> PResult<Operand> {
        let t = self.peek();
        match t.kind {
            TokenKind::HardwareQubit => {
                self.bump();
                Ok(Operand::Physical(self.hw_index(t)?))
            }
            TokenKind::Identifier => {
                self.bump();
                if self.peek().is_punct("[") {
                    return Err(self.err(Code::UnsupportedConstruct, self.peek().span, "qubit registers are not supported"));
                }
                Ok(Operand::Name(t.text.to_string()))
            }
            _ => Err(self.syntax("a qubit")),
        }
    }

    fn operand_list(&mut self, allow_empty: bool) -> PResult<Vec<Operand>> {
        let mut out = Vec::new();
        if allow_empty && self.peek().is_punct(";") {
            return Ok(out);
        }
        out.push(self.operand()?);
        while self.eat_punct(",") {
            out.push(self.operand()?);
        }
        Ok(out)
    }

    fn delay(&mut self) -> PResult<StmtKind> {
        self.bump();
        self.expect_punct("[")?;
        let num = self.peek();
        if !matches!(num.kind, TokenKind::IntegerLiteral | TokenKind::FloatLiteral) {
            return Err(self.syntax("a duration literal"));
        }
        self.bump();
        let unit_tok = self.peek();
        let unit = if unit_tok.kind == TokenKind::Identifier && unit_tok.span.start == num.span.end {
            TimeUnit::parse(unit_tok.text)
        } else {
            None
        };
        let Some(unit) = unit else {
            return Err(self.err(Code::MalformedLiteral, num.span, "duration needs a unit suffix (dt, ns, us, ms)"));
        };
        self.bump();
        let value: f64 = num
            .text
            .replace('_', "")
            .parse()
            .map_err(|_| self.err(Code::MalformedLiteral, num.span, "malformed duration"))?;
        self.expect_punct("]")?;
        let qubits = self.operand_list(true)?;
        self.expect_punct(";")?;
        Ok(StmtKind::Delay { duration: DurationLit { value, unit }, qubits })
    }

    fn gate_call(&mut self) -> PResult<StmtKind> {
        let name_tok = self.bump();
        let name = name_tok.text.to_string();
        let mut args = Vec::new();
        if self.eat_punct("(") {
            if !self.peek().is_punct(")") {
                loop {
                    args.push(self.expr()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }
        let qubits = self.operand_list(false)?;
        self.expect_punct(";")?;
        let span = name_tok.span.to(self.prev_span());
        match name.as_str() {
            "U" => {
                if args.len() != 3 || qubits.len() != 1 {
                    return Err(self.err(Code::TypeMismatch, span, "U takes 3 angles and 1 qubit"));
                }
                let mut a = args.into_iter();
                let (theta, phi, lambda) = (a.next().unwrap(), a.next().unwrap(), a.next().unwrap());
                Ok(StmtKind::BuiltinU { theta, phi, lambda, qubit: qubits.into_iter().next().unwrap() })
            }
            "CX" => {
                if !args.is_empty() || qubits.len() != 2 {
                    return Err(self.err(Code::TypeMismatch, span, "CX takes no angles and 2 qubits"));
                }
                let mut q = qubits.into_iter();
                Ok(StmtKind::BuiltinCX { control: q.next().unwrap(), target: q.next().unwrap() })
            }
            _ => Ok(StmtKind::GateCall { name, args, qubits }),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek().is_punct("+") {
                BinOp::Add
            } else if self.peek().is_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek().is_punct("*") {
                BinOp::Mul
            } else if self.peek().is_punct("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        let t = self.peek();
        match t.kind {
            TokenKind::IntegerLiteral | TokenKind::FloatLiteral => {
                self.bump();
                let v: f64 = t
                    .text
                    .replace('_', "")
                    .parse()
                    .map_err(|_| self.err(Code::MalformedLiteral, t.span, "malformed number"))?;
                Ok(Expr::Number(v))
            }
            TokenKind::Keyword if t.text == "pi" || t.text == "π" => {
                self.bump();
                Ok(Expr::Pi)
            }
            TokenKind::Identifier => {
                self.bump();
                Ok(Expr::Ident(t.text.to_string()))
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => Err(self.syntax("an expression")),
        }
    }

    fn bit_ref(&mut self) -> PResult<BitRef> {
        let name = self.ident()?;
        let mut index = None;
        if self.eat_punct("[") {
            index = Some(self.int()?);
            self.expect_punct("]")?;
        }
        Ok(BitRef { name, index })
    }

    fn assignment(&mut self) -> PResult<StmtKind> {
        let target = self.bit_ref()?;
        self.expect_punct("=")?;
        let t = self.peek();
        if t.is_kw("measure") {
            self.bump();
            let q = self.operand()?;
            self.expect_punct(";")?;
            return Ok(StmtKind::Measure { qubit: q, target: Some(target) });
        }
        let negative = self.eat_punct("-");
        let t = self.peek();
        if t.kind != TokenKind::IntegerLiteral {
            return Err(self.err(Code::UnsupportedConstruct, t.span, "only measurements and integer literals can be assigned"));
        }
        self.bump();
        let mut value: i64 = t
            .text
            .replace('_', "")
            .parse()
            .map_err(|_| self.err(Code::MalformedLiteral, t.span, format!("integer '{}' out of range", t.text)))?;
        if negative {
            value = -value;
        }
        self.expect_punct(";")?;
        Ok(StmtKind::AssignInt { target, value })
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.bump();
        self.expect_punct("(")?;
        let negated = self.eat_punct("!");
        let bit = self.bit_ref()?;
        if !self.peek().is_punct(")") {
            return Err(self.err(Code::UnsupportedConstruct, self.peek().span, "conditions must be a bit or a negated bit"));
        }
        self.bump();
        let then_body = self.branch()?;
        let else_body = if self.peek().is_kw("else") {
            self.bump();
            self.branch()?
        } else {
            Vec::new()
        };
        Ok(StmtKind::If { cond: Cond { bit, negated }, then_body, else_body })
    }

    fn branch(&mut self) -> PResult<Vec<Stmt>> {
        if self.peek().is_punct("{") {
            self.block(true)
        } else {
            Ok(self.statement(true).into_iter().collect())
        }
    }
}
