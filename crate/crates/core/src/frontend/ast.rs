use crate::diagnostics::SourceSpan;
use crate::ir::TimeUnit;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    /// `(major, minor)` from the `OPENQASM` header, if present.
    pub version: Option<(u32, u32)>,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    GateDecl { name: String, params: Vec<String>, qubits: Vec<String>, body: Vec<Stmt> },
    QubitDecl { id: u32 },
    /// `bit c;`, `bit[n] c;`, or `bit c = measure $q;`
    BitDecl { name: String, width: Option<u32>, init: Option<Operand> },
    Input { ty: IoType, name: String },
    Output { ty: IoType, name: String },
    GateCall { name: String, args: Vec<Expr>, qubits: Vec<Operand> },
    BuiltinU { theta: Expr, phi: Expr, lambda: Expr, qubit: Operand },
    BuiltinCX { control: Operand, target: Operand },
    Reset(Operand),
    Barrier(Vec<Operand>),
    Delay { duration: DurationLit, qubits: Vec<Operand> },
    Measure { qubit: Operand, target: Option<BitRef> },
    /// `c = <int>;`
    AssignInt { target: BitRef, value: i64 },
    If { cond: Cond, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoType {
    Angle,
    Bit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Physical(u32),
    /// A gate-local qubit argument.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRef {
    pub name: String,
    pub index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cond {
    pub bit: BitRef,
    pub negated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationLit {
    pub value: f64,
    pub unit: TimeUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Value of an expression built only from literals and `pi`.
    pub fn fold(&self) -> Option<f64> {
        match self {
            Expr::Number(v) => Some(*v),
            Expr::Pi => Some(std::f64::consts::PI),
            Expr::Ident(_) => None,
            Expr::Neg(e) => e.fold().map(|v| -v),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.fold()?, b.fold()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                })
            }
        }
    }
}
