use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qe_forge_core::{compile, link, CompileOptions, CompileOutput, Diagnostic, Emit, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmitArg {
    Ast,
    IrInitial,
    IrScheduled,
    Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagFormat {
    Human,
    Json,
}

/// Compile OpenQASM 3 programs into mock control-system payloads.
#[derive(Debug, Parser)]
#[command(name = "qe-forge", version)]
struct Cli {
    /// Source file, or `-` for stdin. With --link, an existing payload.
    input: String,

    /// Target configuration file.
    #[arg(long)]
    target: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "payload")]
    emit: EmitArg,

    /// Output path, or `-` for stdout. Text output defaults to stdout;
    /// payloads default to `<input>.qem`.
    #[arg(short = 'o', long)]
    output: Option<String>,

    #[arg(long, default_value_t = 1000)]
    num_shots: u64,

    /// Worker threads for instrument pipelines (0 = one per CPU).
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Parameter binding `name=value`; may repeat.
    #[arg(short = 'P', value_name = "NAME=VALUE")]
    params: Vec<String>,

    #[arg(long, value_enum, default_value = "human")]
    diagnostics: DiagFormat,

    /// Bind -P values into an existing payload instead of compiling.
    #[arg(long)]
    link: bool,
}

/// Exit status for usage and I/O problems; diagnostics exit with 1.
const USAGE: u8 = 2;

fn report(diags: &[Diagnostic], format: DiagFormat) {
    let mut err = std::io::stderr().lock();
    for d in diags {
        let _ = match format {
            DiagFormat::Human => writeln!(err, "{d}"),
            DiagFormat::Json => writeln!(err, "{}", d.to_json()),
        };
    }
}

fn read_input(input: &str) -> std::io::Result<Vec<u8>> {
    if input == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read(input)
    }
}

/// Writes via a temporary sibling and a rename, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

fn write_output(dest: &str, bytes: &[u8]) -> std::io::Result<()> {
    if dest == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(bytes)?;
        out.flush()
    } else {
        write_atomic(Path::new(dest), bytes)
    }
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for p in raw {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("-P expects NAME=VALUE, got '{p}'"))?;
        if out.insert(k.trim().to_string(), v.to_string()).is_some() {
            return Err(format!("parameter '{k}' bound twice"));
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let params = parse_params(&cli.params)?;
    let input = read_input(&cli.input).map_err(|e| format!("cannot read {}: {e}", cli.input))?;

    if cli.link {
        let dest = cli.output.clone().unwrap_or_else(|| "-".into());
        return match link(&input, &params) {
            Ok(bytes) => {
                write_output(&dest, &bytes).map_err(|e| format!("cannot write {dest}: {e}"))?;
                Ok(ExitCode::SUCCESS)
            }
            Err(diags) => {
                report(&diags, cli.diagnostics);
                Ok(ExitCode::from(1))
            }
        };
    }

    let src = String::from_utf8(input).map_err(|_| format!("{} is not UTF-8", cli.input))?;
    let target = match &cli.target {
        Some(path) => match Target::load(path) {
            Ok(t) => Some(t),
            Err(d) => {
                report(&[d], cli.diagnostics);
                return Ok(ExitCode::from(1));
            }
        },
        None => None,
    };
    let emit = match cli.emit {
        EmitArg::Ast => Emit::Ast,
        EmitArg::IrInitial => Emit::IrInitial,
        EmitArg::IrScheduled => Emit::IrScheduled,
        EmitArg::Payload => Emit::Payload,
    };
    let opts = CompileOptions { emit, jobs: cli.jobs, num_shots: cli.num_shots, params };
    let result = compile(&src, target.as_ref(), &opts);
    report(&result.diagnostics, cli.diagnostics);
    let Some(output) = result.output else {
        return Ok(ExitCode::from(1));
    };
    let (bytes, default_dest) = match output {
        CompileOutput::Text(t) => (t.into_bytes(), "-".to_string()),
        CompileOutput::Payload(b) => {
            let dest = match cli.input.as_str() {
                "-" => "-".to_string(),
                path => Path::new(path).with_extension("qem").to_string_lossy().into_owned(),
            };
            (b, dest)
        }
    };
    let dest = cli.output.unwrap_or(default_dest);
    write_output(&dest, &bytes).map_err(|e| format!("cannot write {dest}: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("qe-forge: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
