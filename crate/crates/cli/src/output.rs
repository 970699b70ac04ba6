//! Plain-text artifacts.
//!
//! A `level_<l>.grid` file reads
//!
//! ```text
//! # mlvms grid
//! dim 2
//! axis 0 41 0 0.5 1 ...
//! axis 1 41 0 0.5 1 ...
//! values 1681
//! 0.0012
//! ...
//! ```
//!
//! with values in lexicographic node order (last axis fastest). Fields of
//! moving-source problems are on reference-frame coordinates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mlvms::chidenn::ShapeFunctions;
use mlvms::mlvms::LevelState;
use serde::Serialize;

use crate::study::ConvergenceRow;
use crate::CliError;

pub const CSV_HEADER: &str = "h1,dofs,err_l2,err_energy,time_s,iters,storage_bytes";

pub fn csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{:e},{:e},{:.6},{},{}", r.h1, r.dofs, r.err_l2, r.err_energy, r.time_s, r.iters, r.storage_bytes).unwrap();
    }
    s
}

pub fn write_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    fs::write(path, csv(rows))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn grid(state: &LevelState<f64>, offset: f64) -> String {
    let mesh = state.basis.mesh();
    let mut s = String::from("# mlvms grid\n");
    writeln!(s, "dim {}", mesh.dim()).unwrap();
    for d in 0..mesh.dim() {
        let nodes = mesh.axis(d).nodes();
        write!(s, "axis {d} {}", nodes.len()).unwrap();
        for x in nodes {
            write!(s, " {x}").unwrap();
        }
        s.push('\n');
    }
    let values = state.nodal();
    writeln!(s, "values {}", values.len()).unwrap();
    for v in values {
        writeln!(s, "{}", v + offset).unwrap();
    }
    s
}

pub fn write_grids(dir: &Path, states: &[LevelState<f64>], offset: f64) -> Result<(), CliError> {
    for st in states {
        fs::write(dir.join(format!("level_{}.grid", st.level + 1)), grid(st, offset))?;
    }
    Ok(())
}

/// Parsed grid file: axis coordinates and values.
pub fn read_grid(text: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>), CliError> {
    let bad = |m: &str| CliError::Config(format!("grid: {m}"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let dim: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("dim "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("missing dim"))?;
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let line = lines.next().ok_or_else(|| bad("missing axis"))?;
        let nums: Vec<f64> = line.split_whitespace().skip(3).map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("axis"))?;
        axes.push(nums);
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("values "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("missing values"))?;
    let values: Vec<f64> = lines.map(|l| l.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad("value"))?;
    if values.len() != n || axes.iter().map(Vec::len).product::<usize>() != n {
        return Err(bad("value count"));
    }
    Ok((axes, values))
}
