//! Text file formats.
//!
//! Every float is written in scientific notation with 17 significant digits,
//! which reads back to the identical `f64`.
//!
//! **Trajectory** (`save_trajectory`): `# key = value` lines for `system`,
//! `s`, `dt`, `n_steps`, `seed` and `dim`, a header row `u0,u1,…`, then the
//! `N + 2` midpoint states `u_{-1/2} … u_{N+1/2}`, one per row.
//!
//! **L_H dump** (`write_lh`): `# block_size = n` and `# num_blocks = m`,
//! then for every nonzero block a line `i j` (block row, block column,
//! zero-based) followed by `n` lines of `n` space-separated entries.
//!
//! **Sensitivity results** (`write_results`): header [`RESULT_HEADER`], one
//! row per result. Boundary vectors are `;`-separated inside their field.

use std::fs;
use std::io::Write;
use std::path::Path;

use lss_core::{BlockTridiagonalMatrix, Mat, SensitivityResult, TimeGrid, Trajectory};

use crate::error::{Error, Result};

pub const RESULT_HEADER: [&str; 13] = [
    "system",
    "method",
    "djds",
    "jbar",
    "T",
    "dt",
    "n_steps",
    "alpha2",
    "scheme",
    "bc0",
    "bc_t",
    "seed",
    "lambda_min",
];

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(";")
}

pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let io = |e| Error::io("<trajectory>", e);
    writeln!(w, "# system = {}", traj.system_name()).map_err(io)?;
    writeln!(w, "# s = {}", sci(traj.param())).map_err(io)?;
    writeln!(w, "# dt = {}", sci(traj.dt())).map_err(io)?;
    writeln!(w, "# n_steps = {}", traj.n_steps()).map_err(io)?;
    writeln!(w, "# seed = {}", traj.seed()).map_err(io)?;
    writeln!(w, "# dim = {}", traj.dim()).map_err(io)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record((0..traj.dim()).map(|d| format!("u{d}")))?;
    for row in traj.states().chunks(traj.dim()) {
        csv.write_record(row.iter().map(|&x| sci(x)))?;
    }
    csv.flush().map_err(io)?;
    Ok(())
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(std::io::BufWriter::new(file), traj)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

/// Parses the trajectory format; `path` only labels error messages.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Trajectory> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut system = None;
    let (mut s, mut dt, mut n_steps, mut seed, mut dim) = (None, None, None, None, None);
    let mut header_lines = 0;
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.strip_prefix('#') else {
            break;
        };
        header_lines = i + 1;
        let Some((key, value)) = meta.split_once('=') else {
            continue;
        };
        let value = value.trim();
        let bad = || err(i + 1, format!("invalid value `{value}`"));
        match key.trim() {
            "system" => system = Some(value.to_string()),
            "s" => s = Some(value.parse::<f64>().map_err(|_| bad())?),
            "dt" => dt = Some(value.parse::<f64>().map_err(|_| bad())?),
            "n_steps" => n_steps = Some(value.parse::<usize>().map_err(|_| bad())?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
            "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad())?),
            _ => {}
        }
    }
    let missing = |key: &str| err(header_lines, format!("missing `{key}` in header"));
    let system = system.ok_or_else(|| missing("system"))?;
    let s = s.ok_or_else(|| missing("s"))?;
    let dt = dt.ok_or_else(|| missing("dt"))?;
    let n_steps = n_steps.ok_or_else(|| missing("n_steps"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let dim = dim.ok_or_else(|| missing("dim"))?;

    let body: String = text
        .lines()
        .skip(header_lines)
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let mut states = Vec::with_capacity((n_steps + 2) * dim);
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let line = header_lines + r + 2;
        if record.len() != dim {
            return Err(err(
                line,
                format!("expected {dim} columns, found {}", record.len()),
            ));
        }
        for field in &record {
            let x = field
                .trim()
                .parse::<f64>()
                .map_err(|_| err(line, format!("invalid number `{field}`")))?;
            states.push(x);
        }
    }
    let grid = TimeGrid::new(dt, n_steps)?;
    Ok(Trajectory::from_midpoints(
        system, s, seed, grid, dim, states,
    )?)
}

fn write_block<W: Write>(w: &mut W, i: usize, j: usize, b: &Mat) -> std::io::Result<()> {
    writeln!(w, "{i} {j}")?;
    for r in 0..b.rows() {
        let row: Vec<String> = (0..b.cols()).map(|c| sci(b[(r, c)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_lh<W: Write>(mut w: W, m: &BlockTridiagonalMatrix) -> Result<()> {
    let run = |w: &mut W| -> std::io::Result<()> {
        writeln!(w, "# block_size = {}", m.block_size())?;
        writeln!(w, "# num_blocks = {}", m.num_blocks())?;
        for i in 0..m.num_blocks() {
            if i > 0 {
                write_block(w, i, i - 1, &m.sub()[i - 1])?;
            }
            write_block(w, i, i, &m.diag()[i])?;
            if i + 1 < m.num_blocks() {
                write_block(w, i, i + 1, &m.sub()[i].transpose())?;
            }
        }
        w.flush()
    };
    run(&mut w).map_err(|e| Error::io("<L_H dump>", e))
}

/// Reads a dump written by [`write_lh`]. Blocks above the diagonal are
/// skipped; the matrix is rebuilt from the diagonal and lower blocks.
pub fn parse_lh(text: &str, path: &Path) -> Result<BlockTridiagonalMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut n = None;
    let mut m = None;
    let mut lines = text.lines().enumerate().peekable();
    while let Some((i, line)) = lines.peek().copied() {
        let Some(meta) = line.strip_prefix('#') else {
            break;
        };
        lines.next();
        if let Some((key, value)) = meta.split_once('=') {
            let v = value
                .trim()
                .parse::<usize>()
                .map_err(|_| err(i + 1, format!("invalid value `{}`", value.trim())))?;
            match key.trim() {
                "block_size" => n = Some(v),
                "num_blocks" => m = Some(v),
                _ => {}
            }
        }
    }
    let (n, m) = match (n, m) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(err(1, "missing block_size or num_blocks".into())),
    };
    let mut diag = vec![None; m];
    let mut sub = vec![None; m.saturating_sub(1)];
    while let Some((i, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(i + 1, format!("invalid block position `{line}`")))?;
        let &[bi, bj] = idx.as_slice() else {
            return Err(err(i + 1, format!("invalid block position `{line}`")));
        };
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let (k, row) = lines
                .next()
                .ok_or_else(|| err(i + 1, "truncated block".into()))?;
            for t in row.split_whitespace() {
                data.push(
                    t.parse::<f64>()
                        .map_err(|_| err(k + 1, format!("invalid number `{t}`")))?,
                );
            }
        }
        if data.len() != n * n {
            return Err(err(
                i + 1,
                format!("block ({bi}, {bj}) has {} entries", data.len()),
            ));
        }
        let block = Mat::from_row_slice(n, n, &data);
        match (bi, bj) {
            _ if bi >= m || bj >= m => {
                return Err(err(i + 1, format!("block ({bi}, {bj}) out of range")))
            }
            _ if bi == bj => diag[bi] = Some(block),
            _ if bi == bj + 1 => sub[bj] = Some(block),
            _ if bj == bi + 1 => {}
            _ => return Err(err(i + 1, format!("block ({bi}, {bj}) outside the band"))),
        }
    }
    let diag: Option<Vec<Mat>> = diag.into_iter().collect();
    let sub: Option<Vec<Mat>> = sub.into_iter().collect();
    match (diag, sub) {
        (Some(diag), Some(sub)) => Ok(BlockTridiagonalMatrix::new(diag, sub)?),
        _ => Err(err(text.lines().count(), "missing blocks".into())),
    }
}

pub fn write_results<W: Write>(w: W, results: &[SensitivityResult]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULT_HEADER)?;
    for r in results {
        csv.write_record([
            r.system.clone(),
            r.method.as_str().to_string(),
            sci(r.djds),
            sci(r.jbar),
            sci(r.horizon),
            sci(r.dt),
            r.n_steps.to_string(),
            sci(r.alpha2),
            r.scheme.as_str().to_string(),
            joined(&r.bc0),
            joined(&r.bc_t),
            r.seed.to_string(),
            r.lambda_min.map(sci).unwrap_or_default(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}
