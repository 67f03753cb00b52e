#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nlvg_cli::config::TrajectoryKind;
use nlvg_cli::{commands, RunConfig};
use sha2::{Digest, Sha256};

pub const GOLDEN_KINDS: [TrajectoryKind; 3] = [
    TrajectoryKind::Step,
    TrajectoryKind::Storm,
    TrajectoryKind::Lissajous,
];

/// Rows kept verbatim from each log next to the checksums.
const HEAD_LINES: usize = 4;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Sorted `(name, bytes)` of every CSV in `dir`.
pub fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn manifest(files: &[(String, Vec<u8>)]) -> String {
    let mut s = String::new();
    for (name, bytes) in files {
        let _ = writeln!(s, "{}  {name}", sha256_hex(bytes));
    }
    s
}

fn heads(files: &[(String, Vec<u8>)]) -> String {
    let mut s = String::new();
    for (name, bytes) in files {
        let _ = writeln!(s, "== {name}");
        for line in String::from_utf8_lossy(bytes).lines().take(HEAD_LINES) {
            let _ = writeln!(s, "{line}");
        }
    }
    s
}

/// Runs the shipped-defaults experiment for `kind` and checks it against
/// the pinned files. `UPDATE_GOLDEN=1` rewrites them instead.
pub fn check_golden(kind: TrajectoryKind) -> Result<(), String> {
    let tmp = tempfile::tempdir().unwrap();
    commands::experiment(&RunConfig::paper_defaults(), kind, tmp.path())
        .map_err(|e| e.to_string())?;
    let files = csv_files(tmp.path());
    let (sums, head) = (manifest(&files), heads(&files));
    let dir = golden_dir();
    let sum_path = dir.join(format!("{}.sha256", kind.name()));
    let head_path = dir.join(format!("{}.head", kind.name()));
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        fs::create_dir_all(&dir).unwrap();
        fs::write(&sum_path, &sums).unwrap();
        fs::write(&head_path, &head).unwrap();
        return Ok(());
    }
    let want_head =
        fs::read_to_string(&head_path).map_err(|e| format!("{}: {e}", head_path.display()))?;
    if want_head != head {
        return Err(format!("{}: leading rows differ", kind.name()));
    }
    let want = fs::read_to_string(&sum_path).map_err(|e| format!("{}: {e}", sum_path.display()))?;
    if want != sums {
        return Err(format!(
            "{}: checksums differ\nwant:\n{want}got:\n{sums}",
            kind.name()
        ));
    }
    Ok(())
}

/// Runs `simulate` on `cfg` twice and returns the first CSV that differs.
pub fn simulate_twice(cfg: &RunConfig) -> Result<usize, String> {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    commands::simulate(cfg, a.path()).map_err(|e| e.to_string())?;
    commands::simulate(cfg, b.path()).map_err(|e| e.to_string())?;
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    if fa.len() != fb.len() || fa.is_empty() {
        return Err(format!("file sets differ: {} vs {}", fa.len(), fb.len()));
    }
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        if na != nb || ba != bb {
            return Err(format!("{na} differs between runs"));
        }
    }
    Ok(fa.len())
}

/// Runs `tune` into `out` and returns the trace files.
pub fn tune_into(cfg: &RunConfig, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    commands::tune(cfg, out).map_err(|e| e.to_string())?;
    Ok(csv_files(out)
        .into_iter()
        .filter(|(n, _)| n.starts_with("trace_"))
        .collect())
}

/// The shipped defaults with inline schedules replaced by a tuned fragment.
pub fn with_fragment(fragment: &Path) -> RunConfig {
    let mut cfg = RunConfig::paper_defaults();
    cfg.controller.nlvg = Default::default();
    cfg.controller.nlvg_file = Some(fragment.to_path_buf());
    cfg
}
