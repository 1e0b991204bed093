use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qe_forge_core::target::mock;
use qe_forge_core::{compile, link, parse_module, print_module, CompileOptions, CompileOutput, Emit, Target};

const LISTING: &str = include_str!("../../../fixtures/corpus/listing1.qasm");
const PARAMS: &str = include_str!("../../../fixtures/corpus/params.qasm");

fn target() -> Target {
    let (cfg, cal) = mock::generate_texts(3);
    Target::from_texts(&cfg, &cal).expect("mock target")
}

fn payload(src: &str, t: &Target, jobs: usize) -> Vec<u8> {
    match compile(src, Some(t), &CompileOptions { jobs, ..CompileOptions::default() }).output {
        Some(CompileOutput::Payload(b)) => b,
        _ => panic!("compile failed"),
    }
}

fn pipeline(c: &mut Criterion) {
    let t = target();
    let initial = CompileOptions { emit: Emit::IrInitial, ..CompileOptions::default() };
    c.bench_function("ir-initial", |b| b.iter(|| compile(black_box(LISTING), None, &initial)));
    for jobs in [1, 4] {
        c.bench_function(&format!("payload jobs={jobs}"), |b| b.iter(|| payload(black_box(LISTING), &t, jobs)));
    }

    let scheduled = match compile(LISTING, Some(&t), &CompileOptions { emit: Emit::IrScheduled, ..CompileOptions::default() }).output {
        Some(CompileOutput::Text(s)) => s,
        _ => panic!("schedule failed"),
    };
    c.bench_function("parse+print scheduled IR", |b| b.iter(|| print_module(&parse_module(black_box(&scheduled)).unwrap())));

    let base = payload(PARAMS, &t, 0);
    let binding = BTreeMap::from([("theta".to_string(), "0.5".to_string())]);
    c.bench_function("link", |b| b.iter(|| link(black_box(&base), &binding).unwrap()));
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
