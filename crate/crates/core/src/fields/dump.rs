//! Plain-text matrix field dumps.
//!
//! ```text
//! n=2 dims=5,5 h=2.5000000000000000e-1 origin=0.0000000000000000e0,0.0000000000000000e0 mask=full_box
//! 0 0 1.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0 1.0000000000000000e0
//! ...
//! ```
//!
//! One line per node in storage order (axis 0 fastest): integer indices, then
//! the row-major matrix entries with 17 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{make_grid, Grid, Mask, MatrixField};
use crate::error::{Error, Result};

fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn mask_token(grid: &Grid) -> String {
    match grid.mask() {
        Mask::FullBox => "full_box".to_string(),
        Mask::Ball { center, radius } => {
            format!("ball({};{radius:.16e})", fmt_list(&center[..grid.dim()]))
        }
    }
}

pub fn write_dump<W: Write>(field: &MatrixField, mut out: W) -> Result<()> {
    let grid = field.grid();
    let n = grid.dim();
    let dims = grid.dims();
    let header = format!(
        "n={} dims={} h={:.16e} origin={} mask={}",
        n,
        dims[..n]
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(","),
        grid.h(),
        fmt_list(&grid.origin()[..n]),
        mask_token(grid)
    );
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for node in 0..grid.node_count() {
        line.clear();
        let idx = grid.index_of(node);
        for i in &idx[..n] {
            let _ = write!(line, "{i} ");
        }
        for (k, v) in field.node_slice(node).iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v:.16e}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn dump_to_string(field: &MatrixField) -> String {
    let mut buf = Vec::new();
    write_dump(field, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("field dump: {}", msg.into()))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number '{t}'")))
        })
        .collect()
}

fn parse_mask(s: &str, dim: usize) -> Result<Mask> {
    if s == "full_box" {
        return Ok(Mask::FullBox);
    }
    let inner = s
        .strip_prefix("ball(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad(format!("unknown mask '{s}'")))?;
    let (c, r) = inner
        .split_once(';')
        .ok_or_else(|| bad("ball mask needs 'center;radius'"))?;
    let c = parse_list(c)?;
    if c.len() != dim {
        return Err(bad("ball center has the wrong dimension"));
    }
    let mut center = [0.0; 3];
    center[..dim].copy_from_slice(&c);
    let radius = r.parse::<f64>().map_err(|_| bad("bad ball radius"))?;
    Ok(Mask::Ball { center, radius })
}

pub fn read_dump<R: BufRead>(input: R) -> Result<MatrixField> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))??;
    let mut n = None;
    let mut dims = None;
    let mut h = None;
    let mut origin = None;
    let mut mask = None;
    for tok in header.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("bad header token '{tok}'")))?;
        match k {
            "n" => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
            "dims" => {
                dims = Some(
                    v.split(',')
                        .map(|d| d.parse::<usize>().map_err(|_| bad("bad dims")))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "h" => h = Some(v.parse::<f64>().map_err(|_| bad("bad h"))?),
            "origin" => origin = Some(parse_list(v)?),
            "mask" => mask = Some(v.to_string()),
            other => return Err(bad(format!("unknown header key '{other}'"))),
        }
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let dims = dims.ok_or_else(|| bad("missing dims"))?;
    let h = h.ok_or_else(|| bad("missing h"))?;
    let origin = origin.ok_or_else(|| bad("missing origin"))?;
    let mask = parse_mask(&mask.ok_or_else(|| bad("missing mask"))?, n)?;
    if dims.len() != n || origin.len() != n {
        return Err(bad("header dimensions disagree"));
    }
    let lengths: Vec<f64> = dims.iter().map(|&d| (d.max(1) - 1) as f64 * h).collect();
    let grid = make_grid(&origin, &lengths, h, mask)?;
    if grid.dims()[..n] != dims[..] {
        return Err(bad("dims do not reproduce the grid"));
    }

    let k = n * n;
    let mut values = Vec::with_capacity(grid.node_count() * k);
    for node in 0..grid.node_count() {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing line for node {node}")))??;
        let mut toks = line.split_whitespace();
        let idx = grid.index_of(node);
        for a in 0..n {
            let t = toks.next().ok_or_else(|| bad("short line"))?;
            if t.parse::<usize>().ok() != Some(idx[a]) {
                return Err(bad(format!("node {node}: unexpected index '{t}'")));
            }
        }
        for _ in 0..k {
            let t = toks.next().ok_or_else(|| bad("short line"))?;
            values.push(
                t.parse::<f64>()
                    .map_err(|_| bad(format!("bad entry '{t}'")))?,
            );
        }
        if toks.next().is_some() {
            return Err(bad(format!("node {node}: trailing tokens")));
        }
    }
    MatrixField::new(grid, n, values)
}
