use std::fmt;

use super::types::{TimeUnit, Type};

/// Attribute payloads attached to operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Attr {
    Int(i64),
    Float(f64),
    Str(String),
    Symbol(String),
    Type(Type),
    /// Angle constant in radians.
    Angle(f64),
    Duration(f64, TimeUnit),
    /// Complex waveform samples as (re, im).
    Samples(Vec<(f64, f64)>),
    IntList(Vec<i64>),
    /// Presence-only marker.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    Int,
    Float,
    Str,
    Symbol,
    Type,
    Angle,
    Duration,
    Samples,
    IntList,
    Unit,
    /// Any kind is accepted.
    Any,
}

impl Attr {
    pub fn kind(&self) -> AttrKind {
        match self {
            Attr::Int(_) => AttrKind::Int,
            Attr::Float(_) => AttrKind::Float,
            Attr::Str(_) => AttrKind::Str,
            Attr::Symbol(_) => AttrKind::Symbol,
            Attr::Type(_) => AttrKind::Type,
            Attr::Angle(_) => AttrKind::Angle,
            Attr::Duration(..) => AttrKind::Duration,
            Attr::Samples(_) => AttrKind::Samples,
            Attr::IntList(_) => AttrKind::IntList,
            Attr::Unit => AttrKind::Unit,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Attr::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Attr::Float(v) | Attr::Angle(v) => Some(*v),
            Attr::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Attr::Str(s) | Attr::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_type(&self) -> Option<Type> {
        match self {
            Attr::Type(t) => Some(*t),
            _ => None,
        }
    }

    /// True when every float inside is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            Attr::Float(v) | Attr::Angle(v) | Attr::Duration(v, _) => v.is_finite(),
            Attr::Samples(s) => s.iter().all(|(a, b)| a.is_finite() && b.is_finite()),
            _ => true,
        }
    }
}

/// Shortest round-trip float text that always reads back as a float.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attr::Int(v) => write!(f, "{v}"),
            Attr::Float(v) => f.write_str(&fmt_f64(*v)),
            Attr::Str(s) => f.write_str(&escape_str(s)),
            Attr::Symbol(s) => write!(f, "@{s}"),
            Attr::Type(t) => write!(f, "{t}"),
            Attr::Angle(v) => write!(f, "#quir.angle<{}>", fmt_f64(*v)),
            Attr::Duration(v, u) => write!(f, "#quir.duration<{}, {}>", fmt_f64(*v), u.as_str()),
            Attr::Samples(s) => {
                f.write_str("[")?;
                for (i, (re, im)) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({}, {})", fmt_f64(*re), fmt_f64(*im))?;
                }
                f.write_str("]")
            }
            Attr::IntList(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Attr::Unit => Ok(()),
        }
    }
}
