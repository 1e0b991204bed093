use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeUnit {
    Dt,
    Ns,
    Us,
    Ms,
}

impl TimeUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Dt => "dt",
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
        }
    }

    pub fn parse(s: &str) -> Option<TimeUnit> {
        Some(match s {
            "dt" => TimeUnit::Dt,
            "ns" => TimeUnit::Ns,
            "us" => TimeUnit::Us,
            "ms" => TimeUnit::Ms,
            _ => return None,
        })
    }

    /// Seconds per unit; `None` for `dt`, which depends on the target.
    pub fn seconds(self) -> Option<f64> {
        match self {
            TimeUnit::Dt => None,
            TimeUnit::Ns => Some(1e-9),
            TimeUnit::Us => Some(1e-6),
            TimeUnit::Ms => Some(1e-3),
        }
    }
}

/// Value types across all dialects. Compared structurally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Qubit,
    Cbit(u32),
    Angle(u32),
    /// Signless integer; `Int(1)` is the `i1` boolean.
    Int(u32),
    F64,
    Duration(TimeUnit),
    Stretch,
    Frame,
    Port,
    MixedFrame,
    Waveform,
    None,
}

impl Type {
    pub const I1: Type = Type::Int(1);

    /// Checks the width invariants (cbit >= 1, angle in 1..=64, int >= 1).
    pub fn is_well_formed(&self) -> bool {
        match *self {
            Type::Cbit(w) => w >= 1,
            Type::Angle(w) => (1..=64).contains(&w),
            Type::Int(w) => (1..=64).contains(&w),
            _ => true,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Qubit => f.write_str("!quir.qubit<1>"),
            Type::Cbit(w) => write!(f, "!quir.cbit<{w}>"),
            Type::Angle(w) => write!(f, "!quir.angle<{w}>"),
            Type::Int(w) => write!(f, "i{w}"),
            Type::F64 => f.write_str("f64"),
            Type::Duration(u) => write!(f, "!quir.duration<{}>", u.as_str()),
            Type::Stretch => f.write_str("!quir.stretch"),
            Type::Frame => f.write_str("!pulse.frame"),
            Type::Port => f.write_str("!pulse.port"),
            Type::MixedFrame => f.write_str("!pulse.mixed_frame"),
            Type::Waveform => f.write_str("!pulse.waveform"),
            Type::None => f.write_str("none"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality() {
        assert_eq!(Type::Angle(64), Type::Angle(64));
        assert_ne!(Type::Angle(64), Type::Angle(32));
        assert_eq!(Type::I1, Type::Int(1));
    }

    #[test]
    fn width_invariants() {
        assert!(!Type::Cbit(0).is_well_formed());
        assert!(!Type::Angle(65).is_well_formed());
        assert!(Type::Angle(64).is_well_formed());
    }
}
