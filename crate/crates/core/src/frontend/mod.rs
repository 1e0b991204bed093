//! OpenQASM 3 subset: tokens, syntax tree, and parser.

pub mod ast;
mod lexer;
mod parser;

pub use lexer::{lex, Token, TokenKind, KEYWORDS};
pub use parser::parse;
