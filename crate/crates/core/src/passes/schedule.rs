use std::collections::HashMap;

use crate::diagnostics::{Code, Diagnostic};
use crate::ir::{Attr, IrModule, Operation, TimeUnit, ValueId};

const PHASE: &str = "schedule";

/// Converts a duration to samples: `round(seconds / dt)`, half away from zero.
pub fn duration_to_samples(value: f64, unit: TimeUnit, dt: f64) -> Result<i64, Diagnostic> {
    let samples = match unit.seconds() {
        Some(s) => (value * s / dt).round(),
        None => value.round(),
    };
    if samples < 0.0 || !samples.is_finite() {
        return Err(Diagnostic::error(Code::NegativeDuration, PHASE, format!("duration {value} {} is negative or invalid", unit.as_str())));
    }
    Ok(samples as i64)
}

/// ASAP list scheduling of every `pulse.sequence`. Annotates each op with
/// `start_time` and each sequence and delay with `duration`, all in samples.
pub fn schedule(m: &mut IrModule, dt: f64) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for op in &mut m.body.ops {
        if op.is("pulse.sequence") {
            if let Err(d) = schedule_sequence(op, dt) {
                diags.push(d);
            }
        }
    }
    diags
}

/// Clocks per port and per frame plus a floor that global syncs raise. A
/// mixed frame is busy while either its port or its frame is.
#[derive(Default)]
struct Clocks {
    parts: HashMap<ValueId, [ValueId; 2]>,
    busy: HashMap<ValueId, i64>,
    floor: i64,
}

impl Clocks {
    fn parts(&self, f: ValueId) -> [ValueId; 2] {
        self.parts.get(&f).copied().unwrap_or([f, f])
    }

    fn at(&self, f: ValueId) -> i64 {
        self.parts(f).iter().map(|r| self.busy.get(r).copied().unwrap_or(0)).fold(self.floor, i64::max)
    }

    fn set(&mut self, f: ValueId, t: i64) {
        for r in self.parts(f) {
            self.busy.insert(r, t);
        }
    }

    fn latest(&self) -> i64 {
        self.busy.values().copied().fold(self.floor, i64::max)
    }

    fn sync_all(&mut self, t: i64) {
        self.floor = t;
        for v in self.busy.values_mut() {
            *v = t;
        }
    }
}

fn schedule_sequence(seq: &mut Operation, dt: f64) -> Result<(), Diagnostic> {
    let name = seq.sym_name().unwrap_or("?").to_string();
    let mut wf_len: HashMap<ValueId, i64> = HashMap::new();
    let mut durations: HashMap<ValueId, i64> = HashMap::new();
    let mut clocks = Clocks::default();
    let region = &mut seq.regions[0];
    for op in &mut region.ops {
        let start = match op.name.as_str() {
            "pulse.create_waveform" => {
                if let Some(Attr::Samples(s)) = op.attr("samples") {
                    wf_len.insert(op.result(), s.len() as i64);
                }
                0
            }
            "pulse.mix_frame" => {
                clocks.parts.insert(op.result(), [op.operands[0], op.operands[1]]);
                0
            }
            "pulse.constant" => {
                if let Some(Attr::Duration(v, u)) = op.attr("value") {
                    durations.insert(op.result(), duration_to_samples(*v, *u, dt)?);
                }
                0
            }
            "pulse.play" | "pulse.capture" => {
                let f = op.operands[0];
                let len = if op.is("pulse.play") {
                    *wf_len.get(&op.operands[1]).ok_or_else(|| {
                        Diagnostic::error(Code::UnknownWaveformLength, PHASE, format!("@{name}: waveform length is not known statically"))
                    })?
                } else {
                    op.int_attr("duration").unwrap_or(0)
                };
                if len < 0 {
                    return Err(Diagnostic::error(Code::NegativeDuration, PHASE, format!("@{name}: capture duration {len} is negative")));
                }
                let start = clocks.at(f);
                clocks.set(f, start + len);
                start
            }
            "pulse.delay" => {
                let d = *durations.get(&op.operands[0]).ok_or_else(|| {
                    Diagnostic::error(Code::UnknownWaveformLength, PHASE, format!("@{name}: delay duration is not known statically"))
                })?;
                op.set_attr("duration", Attr::Int(d));
                let frames = &op.operands[1..];
                if frames.is_empty() {
                    let start = clocks.latest();
                    clocks.sync_all(start + d);
                    start
                } else {
                    let start = frames.iter().map(|f| clocks.at(*f)).max().unwrap_or(0);
                    for f in frames {
                        clocks.set(*f, start + d);
                    }
                    start
                }
            }
            "pulse.barrier" => {
                if op.operands.is_empty() {
                    let t = clocks.latest();
                    clocks.sync_all(t);
                    t
                } else {
                    let t = op.operands.iter().map(|f| clocks.at(*f)).max().unwrap_or(0);
                    for f in &op.operands {
                        clocks.set(*f, t);
                    }
                    t
                }
            }
            "pulse.shift_phase" | "pulse.set_phase" | "pulse.shift_frequency" | "pulse.set_frequency" => {
                clocks.at(op.operands[0])
            }
            "func.return" => clocks.latest(),
            _ => 0,
        };
        op.set_attr("start_time", Attr::Int(start));
    }
    seq.set_attr("duration", Attr::Int(clocks.latest()));
    Ok(())
}
