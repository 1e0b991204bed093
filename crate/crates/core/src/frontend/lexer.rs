use crate::diagnostics::{Code, Diagnostic, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    /// `$n`
    HardwareQubit,
    IntegerLiteral,
    FloatLiteral,
    Punctuation,
    String,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    /// Exact slice of the source this token covers.
    pub text: &'a str,
    pub span: SourceSpan,
}

impl Token<'_> {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punctuation, text)
    }

    pub fn is_kw(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }
}

pub const KEYWORDS: &[&str] = &[
    "OPENQASM", "include", "qubit", "bit", "gate", "reset", "measure", "barrier", "delay", "if",
    "else", "input", "output", "angle", "int", "uint", "float", "bool", "duration", "stretch",
    "complex", "array", "for", "while", "in", "def", "defcal", "cal", "return", "const", "let",
    "box", "break", "continue", "extern", "switch", "case", "default", "end", "qreg", "creg",
    "opaque", "gphase", "ctrl", "negctrl", "inv", "pow", "durationof", "pi", "true", "false",
];

/// Two-character operators recognised as a single punctuation token.
const DOUBLE_PUNCT: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "++", "+=", "-=", "*=", "/=", "->", "**",
];

const SINGLE_PUNCT: &str = ";,()[]{}=+-*/%!<>&|^~:.@";

/// Tokenizes `src`. Never fails: unknown characters and malformed numbers
/// are reported and skipped. The last token is always `Eof`.
pub fn lex(src: &str) -> (Vec<Token<'_>>, Vec<Diagnostic>) {
    Lexer { src, pos: 0, line: 1, col: 1, tokens: Vec::new(), diags: Vec::new() }.run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token<'a>>,
    diags: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32, col: u32) {
        self.tokens.push(Token {
            kind,
            text: &self.src[start..self.pos],
            span: SourceSpan::new(start, self.pos, line, col),
        });
    }

    fn run(mut self) -> (Vec<Token<'a>>, Vec<Diagnostic>) {
        while let Some(c) = self.peek() {
            let (start, line, col) = (self.pos, self.line, self.col);
            if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek2() == Some('/') {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let kind = if KEYWORDS.contains(&&self.src[start..self.pos]) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start, line, col);
            } else if c == 'π' {
                self.bump();
                self.push(TokenKind::Keyword, start, line, col);
            } else if c == '$' {
                self.bump();
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                    }
                    self.push(TokenKind::HardwareQubit, start, line, col);
                } else {
                    self.error(Code::InvalidCharacter, start, line, col, "'$' must be followed by a qubit index");
                }
            } else if c.is_ascii_digit() || (c == '.' && self.peek2().is_some_and(|d| d.is_ascii_digit())) {
                self.number(start, line, col);
            } else if c == '"' {
                self.bump();
                while self.peek().is_some_and(|c| c != '"' && c != '\n') {
                    self.bump();
                }
                if self.peek() == Some('"') {
                    self.bump();
                    self.push(TokenKind::String, start, line, col);
                } else {
                    self.error(Code::MalformedLiteral, start, line, col, "unterminated string literal");
                }
            } else {
                let rest = &self.src[self.pos..];
                if let Some(p) = DOUBLE_PUNCT.iter().find(|p| rest.starts_with(**p)) {
                    self.bump();
                    self.bump();
                    debug_assert_eq!(&self.src[start..self.pos], *p);
                    self.push(TokenKind::Punctuation, start, line, col);
                } else if SINGLE_PUNCT.contains(c) {
                    self.bump();
                    self.push(TokenKind::Punctuation, start, line, col);
                } else {
                    self.bump();
                    self.error(Code::InvalidCharacter, start, line, col, format!("invalid character {c:?}"));
                }
            }
        }
        let end = self.src.len();
        self.tokens.push(Token {
            kind: TokenKind::Eof,
            text: "",
            span: SourceSpan::new(end, end, self.line, self.col),
        });
        (self.tokens, self.diags)
    }

    fn error(&mut self, code: Code, start: usize, line: u32, col: u32, msg: impl Into<String>) {
        self.diags.push(
            Diagnostic::error(code, "lex", msg).with_span(SourceSpan::new(start, self.pos, line, col)),
        );
    }

    fn digits(&mut self) -> usize {
        let mut n = 0;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            self.bump();
            n += 1;
        }
        n
    }

    fn number(&mut self, start: usize, line: u32, col: u32) {
        let mut float = false;
        let mut malformed = false;
        self.digits();
        if self.peek() == Some('.') {
            float = true;
            self.bump();
            self.digits();
        }
        if matches!(self.peek(), Some('e' | 'E'))
            && (self.peek2().is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-'))
        {
            float = true;
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if self.digits() == 0 {
                malformed = true;
            }
        }
        // `1.2.3`, `1e5.0`: swallow the rest so the error is reported once.
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            malformed = true;
            while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                self.bump();
            }
        }
        if malformed {
            self.error(Code::MalformedLiteral, start, line, col, format!("malformed number '{}'", &self.src[start..self.pos]));
            return;
        }
        let kind = if float { TokenKind::FloatLiteral } else { TokenKind::IntegerLiteral };
        self.push(kind, start, line, col);
    }
}
