//! Writes `mock<n>q.cfg` and `mock<n>q.cal.qeir` into a directory.
//!
//! cargo run -p qe-forge-core --example gen_mock -- 3 fixtures

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().and_then(|a| a.parse().ok()).expect("usage: gen_mock <qubits> <dir>");
    let dir = PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let (cfg, cal) = qe_forge_core::target::mock::generate_texts(n);
    std::fs::write(dir.join(format!("mock{n}q.cfg")), cfg).unwrap();
    std::fs::write(dir.join(format!("mock{n}q.cal.qeir")), cal).unwrap();
}
