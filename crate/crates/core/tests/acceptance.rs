//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::io::{Cursor, Read};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qe_forge_core::frontend::parse;
use qe_forge_core::passes::schedule;
use qe_forge_core::payload::Manifest;
use qe_forge_core::{compile, dialects, link, parse_module, print_module, CompileOptions, CompileOutput, Emit, Target};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const FUZZ_INPUTS: usize = 10_000;
const FUZZ_BUDGET: Duration = Duration::from_millis(100);
const LINK_ANGLES: usize = 20;
const MIN_CORPUS: usize = 10;

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn payload(src: &str, target: &Target, jobs: usize, params: &[(&str, String)]) -> Vec<u8> {
    let opts = CompileOptions {
        jobs,
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        ..CompileOptions::default()
    };
    let r = compile(src, Some(target), &opts);
    match r.output {
        Some(CompileOutput::Payload(b)) => b,
        _ => panic!("compile failed: {:?}", r.diagnostics),
    }
}

fn zip_entries(bytes: &[u8]) -> Vec<(String, Vec<u8>)> {
    let mut z = zip::ZipArchive::new(Cursor::new(bytes)).expect("zip");
    (0..z.len())
        .map(|i| {
            let mut f = z.by_index(i).unwrap();
            let name = f.name().unwrap().to_string();
            let mut buf = Vec::new();
            f.read_to_end(&mut buf).unwrap();
            (name, buf)
        })
        .collect()
}

fn c1_golden() -> Outcome {
    let src = read_fixture("corpus/listing1.qasm");
    let golden = read_fixture("listing1.ir-initial.qeir");
    let t = Instant::now();
    let r = compile(&src, None, &CompileOptions { emit: Emit::IrInitial, ..CompileOptions::default() });
    let took = t.elapsed();
    match r.output {
        Some(CompileOutput::Text(text)) if text == golden && took < GOLDEN_BUDGET => Ok(format!("matches golden in {took:?}")),
        Some(CompileOutput::Text(text)) if text == golden => Err(format!("matches but took {took:?}")),
        Some(_) => Err("output differs from golden".into()),
        None => Err(format!("{:?}", r.diagnostics)),
    }
}

fn c2_payload_layout(target: &Target) -> Outcome {
    let bytes = payload(&read_fixture("corpus/listing1.qasm"), target, 0, &[]);
    let entries = zip_entries(&bytes);
    let names: Vec<String> = entries.iter().map(|(n, _)| n.clone()).collect();
    let manifest: Manifest = serde_json::from_slice(&entries.iter().find(|(n, _)| n == "manifest.json").ok_or("no manifest")?.1)
        .map_err(|e| e.to_string())?;
    let count = |ext: &str| names.iter().filter(|n| n.ends_with(ext)).count();
    let (bins, qeirs, wfs) = (count(".bin"), count(".qeir"), count(".waveforms.json"));
    if names.first().map(String::as_str) != Some("manifest.json") {
        return Err(format!("first entry is {:?}", names.first()));
    }
    if manifest.files != names {
        return Err(format!("manifest lists {:?}, archive has {names:?}", manifest.files));
    }
    if bins != 4 || qeirs != 4 || wfs == 0 {
        return Err(format!("{bins} .bin, {qeirs} .qeir, {wfs} waveform files"));
    }
    Ok(format!("{} entries: 4 .bin, 4 .qeir, {wfs} waveform files; listing == manifest", names.len()))
}

fn c3_roundtrip(target: &Target) -> Outcome {
    let corpus = corpus();
    let mut counts = BTreeMap::new();
    let mut modules = 0;
    let mut check = |label: &str, text: &str| -> Result<(), String> {
        let m = parse_module(text).map_err(|d| format!("{label}: {d}"))?;
        let again = print_module(&m);
        let m2 = parse_module(&again).map_err(|d| format!("{label} reparse: {d}"))?;
        if print_module(&m2) != again {
            return Err(format!("{label}: print/parse/print not stable"));
        }
        count_ops(&m, &mut counts);
        modules += 1;
        Ok(())
    };
    for (name, src) in &corpus {
        for (stage, m) in stages(src, target) {
            check(&format!("{name}/{stage}"), &print_module(&m))?;
        }
    }
    for (name, text) in ir_fixtures() {
        check(&name, &text)?;
    }
    let missing: Vec<&str> = dialects::registry().keys().copied().filter(|k| !counts.contains_key(*k)).collect();
    if corpus.len() < MIN_CORPUS {
        return Err(format!("corpus has {} programs", corpus.len()));
    }
    if !missing.is_empty() {
        return Err(format!("ops never exercised: {missing:?}"));
    }
    Ok(format!("{} programs, {modules} modules, {} ops covered", corpus.len(), counts.len()))
}

fn c4_extraction(target: &Target) -> Outcome {
    let mut total = 0;
    for (name, src) in corpus() {
        let m = run_until(&src, target, "extract-circuits");
        let stray = quantum_outside_circuits(&m);
        if !stray.is_empty() {
            return Err(format!("{name}: {stray:?} outside circuits"));
        }
        total += 1;
    }
    Ok(format!("no quantum ops outside circuits in {total} programs"))
}

fn c5_intervals(target: &Target) -> Outcome {
    let mut sequences = 0;
    for (name, src) in corpus() {
        let m = run_until(&src, target, "schedule");
        sequences += m.body.ops.iter().filter(|o| o.name == "pulse.sequence").count();
        let v = interval_violations(&m, target.cals.dt);
        if !v.is_empty() {
            return Err(format!("{name}: {v:?}"));
        }
        let entries = zip_entries(&payload(&src, target, 1, &[]));
        for (file, bytes) in entries.iter().filter(|(n, _)| n.ends_with(".bin")) {
            let side = file.replace(".bin", ".waveforms.json");
            let wf = entries.iter().find(|(n, _)| *n == side).map(|(_, b)| String::from_utf8_lossy(b).into_owned());
            let v = bin_timeline_violations(&String::from_utf8_lossy(bytes), wf.as_deref());
            if !v.is_empty() {
                return Err(format!("{name}/{file}: {v:?}"));
            }
        }
    }
    let mut m = parse_module(&read_fixture("ir/two_play.qeir")).map_err(|d| d.to_string())?;
    let d = schedule(&mut m, target.cals.dt);
    let dur = m.lookup_symbol("two_play").and_then(|s| s.int_attr("duration"));
    if !d.is_empty() || dur != Some(320) {
        return Err(format!("two-play fixture duration {dur:?}, diagnostics {d:?}"));
    }
    Ok(format!("0 overlaps in {sequences} sequences and their binaries; two-play duration 320"))
}

fn c6_jobs(target: &Target) -> Outcome {
    let corpus = corpus();
    for (name, src) in &corpus {
        let reference = payload(src, target, 1, &[]);
        for jobs in [2, 8] {
            if payload(src, target, jobs, &[]) != reference {
                return Err(format!("{name}: jobs={jobs} differs from jobs=1"));
            }
        }
    }
    Ok(format!("{} programs byte-identical for jobs 1, 2, 8", corpus.len()))
}

fn c7_link(target: &Target) -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let cases = [("params", "theta"), ("cond_bit_index", "phi")];
    let corpus: BTreeMap<String, String> = corpus().into_iter().collect();
    for (prog, param) in cases {
        let src = &corpus[prog];
        let base = payload(src, target, 0, &[]);
        for _ in 0..LINK_ANGLES {
            let v: f64 = rng.random_range(-20.0..20.0);
            let text = format!("{v}");
            let direct = payload(src, target, 0, &[(param, text.clone())]);
            let linked = link(&base, &BTreeMap::from([(param.to_string(), text.clone())])).map_err(|d| format!("{d:?}"))?;
            if linked != direct {
                return Err(format!("{prog}: {param}={text} linked payload differs from direct compile"));
            }
        }
    }
    Ok(format!("{} angles across {} programs", LINK_ANGLES * cases.len(), cases.len()))
}

fn c8_variables(target: &Target) -> Outcome {
    let src = read_fixture("corpus/listing1.qasm");
    let all = stages(&src, target);
    let pick = |n: &str| &all.iter().find(|(s, _)| s == n).unwrap().1;
    for b0 in 0..2 {
        for b1 in 0..2 {
            let expected = b0 | (b1 << 1);
            for mid in 0..2 {
                let script = [mid, b0, b1];
                for stage in ["ir-initial", "extract-circuits", "lower-variables"] {
                    let mem = catch_unwind(AssertUnwindSafe(|| Interp::run(pick(stage), &script))).map_err(|_| format!("{stage}: interpreter failed"))?;
                    if mem.get("fin") != Some(&expected) || mem.get("mid") != Some(&mid) {
                        return Err(format!("{stage}: outcomes {script:?} gave {mem:?}, want fin={expected}"));
                    }
                }
            }
        }
    }
    Ok("fin matches for all 4 combinations at every stage".into())
}

fn c9_fuzz() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xf22);
    let seeds: Vec<Vec<u8>> = corpus().into_iter().map(|(_, s)| s.into_bytes()).chain(ir_fixtures().into_iter().map(|(_, s)| s.into_bytes())).collect();
    let mut slowest = Duration::ZERO;
    for i in 0..FUZZ_INPUTS {
        let input: Vec<u8> = if i % 2 == 0 {
            let n = rng.random_range(0..512);
            (0..n).map(|_| rng.random()).collect()
        } else {
            // Mutated real inputs reach deeper into both parsers.
            let mut s = seeds[rng.random_range(0..seeds.len())].clone();
            for _ in 0..rng.random_range(1..8) {
                if s.is_empty() {
                    break;
                }
                let at = rng.random_range(0..s.len());
                match rng.random_range(0..3) {
                    0 => s[at] = rng.random(),
                    1 => _ = s.remove(at),
                    _ => s.insert(at, b"{}();,[]%@=:"[rng.random_range(0..12)]),
                }
            }
            s
        };
        let text = String::from_utf8_lossy(&input);
        let t = Instant::now();
        let ok = catch_unwind(|| {
            let _ = parse(&text);
            let _ = parse_module(&text);
        });
        let took = t.elapsed();
        slowest = slowest.max(took);
        if ok.is_err() {
            return Err(format!("panic on input #{i}: {:?}", text));
        }
        if took > FUZZ_BUDGET {
            return Err(format!("input #{i} took {took:?}"));
        }
    }
    Ok(format!("{FUZZ_INPUTS} inputs, slowest {slowest:?}"))
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let target = mock_target();
    let checks: Vec<Check> = vec![
        ("listing 1 ir-initial matches golden within 1s", Box::new(c1_golden)),
        ("listing 1 payload layout", Box::new(|| c2_payload_layout(&target))),
        ("IR round-trip corpus with full op coverage", Box::new(|| c3_roundtrip(&target))),
        ("no quantum ops outside circuits after extraction", Box::new(|| c4_extraction(&target))),
        ("interval-overlap oracle", Box::new(|| c5_intervals(&target))),
        ("deterministic payloads across job counts", Box::new(|| c6_jobs(&target))),
        ("linker equivalence", Box::new(|| c7_link(&target))),
        ("variable lowering interpreter oracle", Box::new(|| c8_variables(&target))),
        ("parser fuzzing", Box::new(c9_fuzz)),
    ];
    let mut failed = 0;
    for (i, (what, check)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {what} ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {what} ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
