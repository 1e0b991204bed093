mod common;

use std::collections::BTreeMap;
use std::fmt::Write;

use proptest::prelude::*;
use qe_forge_core::frontend::parse;
use qe_forge_core::ir::{verify, TimeUnit};
use qe_forge_core::passes::duration_to_samples;
use qe_forge_core::target::emit::phase_millirad;
use qe_forge_core::{compile, link, parse_module, print_module, CompileOptions, CompileOutput};

use common::*;

const QUBITS: u32 = 3;

#[derive(Debug, Clone)]
enum Stmt {
    U(u32, f64, f64, f64),
    Cx(u32, u32),
    Reset(u32),
    Barrier(Vec<u32>),
    Delay(u32, u32),
    Measure(u32),
    If(Vec<Stmt>, Vec<Stmt>),
}

fn leaf() -> impl Strategy<Value = Stmt> {
    let q = 0..QUBITS;
    let angle = -7.0..7.0f64;
    prop_oneof![
        4 => (q.clone(), angle.clone(), angle.clone(), angle).prop_map(|(q, a, b, c)| Stmt::U(q, a, b, c)),
        2 => (0..QUBITS - 1, any::<bool>()).prop_map(|(c, rev)| if rev { Stmt::Cx(c + 1, c) } else { Stmt::Cx(c, c + 1) }),
        1 => q.clone().prop_map(Stmt::Reset),
        1 => prop::collection::btree_set(q.clone(), 1..=3).prop_map(|s| Stmt::Barrier(s.into_iter().collect())),
        1 => (q.clone(), 1..400u32).prop_map(|(q, ns)| Stmt::Delay(q, ns)),
        2 => q.prop_map(Stmt::Measure),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    leaf().prop_recursive(2, 16, 4, |inner| {
        (prop::collection::vec(inner.clone(), 1..4), prop::collection::vec(inner, 0..3)).prop_map(|(t, e)| Stmt::If(t, e))
    })
}

struct Writer {
    out: String,
    bits: usize,
}

impl Writer {
    fn stmt(&mut self, s: &Stmt, depth: usize) {
        let pad = "  ".repeat(depth);
        match s {
            Stmt::U(q, a, b, c) => _ = writeln!(self.out, "{pad}U({a}, {b}, {c}) ${q};"),
            Stmt::Cx(c, t) => _ = writeln!(self.out, "{pad}CX ${c}, ${t};"),
            Stmt::Reset(q) => _ = writeln!(self.out, "{pad}reset ${q};"),
            Stmt::Barrier(qs) => {
                let qs: Vec<String> = qs.iter().map(|q| format!("${q}")).collect();
                _ = writeln!(self.out, "{pad}barrier {};", qs.join(", "));
            }
            Stmt::Delay(q, ns) => _ = writeln!(self.out, "{pad}delay[{ns}ns] ${q};"),
            Stmt::Measure(q) => {
                _ = writeln!(self.out, "{pad}m[{}] = measure ${q};", self.bits % 8);
                self.bits += 1;
            }
            Stmt::If(t, e) => {
                _ = writeln!(self.out, "{pad}if (m[{}]) {{", self.bits.saturating_sub(1) % 8);
                t.iter().for_each(|s| self.stmt(s, depth + 1));
                if e.is_empty() {
                    _ = writeln!(self.out, "{pad}}}");
                } else {
                    _ = writeln!(self.out, "{pad}}} else {{");
                    e.iter().for_each(|s| self.stmt(s, depth + 1));
                    _ = writeln!(self.out, "{pad}}}");
                }
            }
        }
    }
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(stmt(), 1..12).prop_map(|body| {
        let mut w = Writer { out: String::from("OPENQASM 3.0;\nqubit $0; qubit $1; qubit $2;\nbit[8] m;\n"), bits: 0 };
        body.iter().for_each(|s| w.stmt(s, 0));
        w.out
    })
}

fn compile_payload(src: &str, jobs: usize, params: &[(&str, &str)]) -> Vec<u8> {
    let target = mock_target();
    let opts = CompileOptions {
        jobs,
        params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..CompileOptions::default()
    };
    match compile(src, Some(&target), &opts).output {
        Some(CompileOutput::Payload(b)) => b,
        other => panic!("no payload: {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_stage_verifies_and_round_trips(src in program()) {
        let target = mock_target();
        for (stage, m) in stages(&src, &target) {
            let errs = verify(&m);
            prop_assert!(errs.is_empty(), "{stage}: {errs:?}\n{src}");
            let text = print_module(&m);
            let back = parse_module(&text).map_err(|d| TestCaseError::fail(format!("{stage}: {d}")))?;
            prop_assert_eq!(print_module(&back), text, "{}", stage);
        }
    }

    #[test]
    fn schedules_never_overlap(src in program()) {
        let target = mock_target();
        let m = run_until(&src, &target, "schedule");
        let v = interval_violations(&m, target.cals.dt);
        prop_assert!(v.is_empty(), "{v:?}\n{src}");
    }

    #[test]
    fn extraction_leaves_no_quantum_ops_in_main(src in program()) {
        let m = run_until(&src, &mock_target(), "extract-circuits");
        let stray = quantum_outside_circuits(&m);
        prop_assert!(stray.is_empty(), "{stray:?}\n{src}");
    }

    #[test]
    fn variable_lowering_preserves_memory(src in program(), outcomes in prop::collection::vec(0..2i64, 64)) {
        let all = stages(&src, &mock_target());
        let at = |n: &str| &all.iter().find(|(s, _)| s == n).expect(n).1;
        let (before, left_before) = Interp::run_script(at("ir-initial"), &outcomes);
        let (after, left_after) = Interp::run_script(at("lower-variables"), &outcomes);
        prop_assert_eq!(left_before, left_after);
        for (k, v) in &before {
            prop_assert_eq!(after.get(k), Some(v), "{}\n{}", k, src);
        }
    }

    #[test]
    fn payload_independent_of_jobs(src in program()) {
        prop_assert!(compile_payload(&src, 1, &[]) == compile_payload(&src, 4, &[]));
    }
}

const PARAM_SRC: &str = "OPENQASM 3.0;
input angle[64] a;
input bit go;
qubit $0; qubit $1;
U(a, 0, a) $0;
if (go) { U(pi, 0, pi) $1; }
bit b = measure $0;
";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn link_matches_direct_compile(a in -50.0..50.0f64, go in 0..2u8) {
        let (a, go) = (a.to_string(), go.to_string());
        let direct = compile_payload(PARAM_SRC, 0, &[("a", &a), ("go", &go)]);
        let base = compile_payload(PARAM_SRC, 0, &[]);
        let binding = BTreeMap::from([("a".to_string(), a), ("go".to_string(), go)]);
        prop_assert!(link(&base, &binding).expect("link") == direct);
    }
}

proptest! {
    #[test]
    fn whole_nanoseconds_map_exactly_at_1ns(ns in 0..10_000_000i64) {
        prop_assert_eq!(duration_to_samples(ns as f64, TimeUnit::Ns, 1e-9).unwrap(), ns);
        prop_assert_eq!(duration_to_samples(ns as f64, TimeUnit::Dt, 1e-9).unwrap(), ns);
    }

    #[test]
    fn durations_round_half_away_from_zero(samples in 0..1_000_000i64, frac in 0.0..1.0f64) {
        // dt = 2ns; half a sample is 1ns.
        let ns = 2.0 * (samples as f64 + frac);
        let got = duration_to_samples(ns, TimeUnit::Ns, 2e-9).unwrap();
        let want = if frac < 0.499_999 { samples } else if frac > 0.500_001 { samples + 1 } else { got };
        prop_assert_eq!(got, want);
    }

    #[test]
    fn negative_durations_rejected(ns in 0.6..1e6f64) {
        prop_assert!(duration_to_samples(-ns, TimeUnit::Ns, 1e-9).is_err());
    }

    #[test]
    fn phases_wrap_into_one_turn(v in -1e4..1e4f64) {
        let mrad = phase_millirad(v);
        prop_assert!((0..=6283).contains(&mrad), "{mrad}");
        let turns = (v - mrad as f64 / 1000.0) / std::f64::consts::TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-3, "{v} -> {mrad}");
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,200}") {
        let _ = parse(&s);
        let _ = parse_module(&s);
    }

    #[test]
    fn qasm_like_text_never_panics(s in "[a-zA-Z0-9_$;,()\\[\\]{}=+\\-*/ \n]{0,200}") {
        let _ = parse(&format!("OPENQASM 3.0;\n{s}"));
    }
}
