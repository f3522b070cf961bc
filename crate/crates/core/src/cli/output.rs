//! `diagnostics.csv`, `snapshot_<step>.grid` and `summary.txt`.
//!
//! Floating-point values are written with 17 significant digits, which
//! round-trips every `f64` exactly, so the files are byte-identical whenever
//! the computed values are.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, COLUMNS};
use crate::discretization::{Discretization, P_COMPONENTS};
use crate::error::{Error, Result};
use crate::state::SimState;

pub fn csv_header() -> String {
    let mut s = COLUMNS.join(",");
    s.push('\n');
    s
}

pub fn csv_row(rec: &DiagnosticsRecord) -> String {
    let mut s = rec.step.to_string();
    for v in &rec.values()[1..] {
        write!(s, ",{v:.16e}").unwrap();
    }
    s.push('\n');
    s
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = csv_header();
    for r in records {
        s.push_str(&csv_row(r));
    }
    s
}

/// Per-node field names of a snapshot, in file order.
pub fn snapshot_fields() -> Vec<String> {
    let mut names = Vec::new();
    for var in ["y", "v"] {
        for c in 1..=2 {
            for k in ["", "_x", "_y", "_xy"] {
                names.push(format!("{var}{c}{k}"));
            }
        }
    }
    names.extend(["P11", "P12", "P21", "P22", "vartheta"].map(String::from));
    names
}

/// Text grid of all nodal dofs: a header, then one block of `ny + 1` rows of
/// `nx + 1` values per field.
pub fn snapshot_grid(disc: &Discretization, state: &SimState) -> String {
    let m = &disc.mesh;
    let mut s = String::new();
    writeln!(s, "nx {}", m.nx).unwrap();
    writeln!(s, "ny {}", m.ny).unwrap();
    writeln!(s, "Lx {:.16e}", m.lx).unwrap();
    writeln!(s, "Ly {:.16e}", m.ly).unwrap();
    writeln!(s, "t {:.16e}", state.t).unwrap();
    writeln!(s, "step {}", state.step).unwrap();
    let fields = snapshot_fields();
    writeln!(s, "fields {}", fields.join(" ")).unwrap();
    for (f, name) in fields.iter().enumerate() {
        writeln!(s, "# {name}").unwrap();
        for j in 0..=m.ny {
            let row: Vec<String> = (0..=m.nx)
                .map(|i| format!("{:.16e}", snapshot_value(disc, state, f, m.node_index(i, j))))
                .collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
    }
    s
}

fn snapshot_value(disc: &Discretization, state: &SimState, f: usize, node: usize) -> f64 {
    match f {
        0..=7 => state.y[(f / 4) * disc.ns + 4 * node + f % 4],
        8..=15 => state.v[((f - 8) / 4) * disc.ns + 4 * node + f % 4],
        16..=19 => state.p[P_COMPONENTS * node + f - 16],
        _ => state.vartheta[node],
    }
}

/// Parsed snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub state: SimState,
}

pub fn read_snapshot(text: &str) -> Result<Snapshot> {
    let bad = |msg: &str| Error::config("snapshot", msg.to_string());
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let mut header = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad("truncated header"))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(&format!("expected '{key}'")))
    };
    let parse_u = |s: String| s.parse::<usize>().map_err(|_| bad("bad integer"));
    let parse_f = |s: String| s.parse::<f64>().map_err(|_| bad("bad number"));
    let nx = parse_u(header("nx")?)?;
    let ny = parse_u(header("ny")?)?;
    let lx = parse_f(header("Lx")?)?;
    let ly = parse_f(header("Ly")?)?;
    let t = parse_f(header("t")?)?;
    let step = parse_u(header("step")?)?;
    let fields: Vec<String> = header("fields")?.split_whitespace().map(String::from).collect();
    if fields != snapshot_fields() {
        return Err(bad("unexpected field list"));
    }
    let nn = (nx + 1) * (ny + 1);
    let ns = 4 * nn;
    let mut state = SimState {
        t,
        step,
        y: vec![0.0; 2 * ns],
        v: vec![0.0; 2 * ns],
        p: vec![0.0; P_COMPONENTS * nn],
        vartheta: vec![0.0; nn],
    };
    let mut values = lines.flat_map(str::split_whitespace).map(|s| s.parse::<f64>());
    for f in 0..fields.len() {
        for node in 0..nn {
            let v = values
                .next()
                .ok_or_else(|| bad("truncated data"))?
                .map_err(|_| bad("bad number"))?;
            match f {
                0..=7 => state.y[(f / 4) * ns + 4 * node + f % 4] = v,
                8..=15 => state.v[((f - 8) / 4) * ns + 4 * node + f % 4] = v,
                16..=19 => state.p[P_COMPONENTS * node + f - 16] = v,
                _ => state.vartheta[node] = v,
            }
        }
    }
    if values.next().is_some() {
        return Err(bad("trailing data"));
    }
    Ok(Snapshot { nx, ny, lx, ly, state })
}

/// One `key = value` line per entry.
pub fn summary_text(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the CSV, one grid per snapshot and the summary into `dir`.
pub fn write_outputs(
    dir: &Path,
    disc: &Discretization,
    records: &[DiagnosticsRecord],
    snapshots: &[SimState],
    summary: &[(String, String)],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("diagnostics.csv"), &diagnostics_csv(records))?;
    for s in snapshots {
        write_file(&dir.join(format!("snapshot_{}.grid", s.step)), &snapshot_grid(disc, s))?;
    }
    write_file(&dir.join("summary.txt"), &summary_text(summary))
}
