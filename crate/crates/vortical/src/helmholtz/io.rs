//! Grid field files.
//!
//! Two formats:
//! * plain CSV with header `x,y,Fx,Fy`, one node per row, row-major with
//!   `x` varying fastest — geometry is inferred from the coordinates;
//! * a compact form whose first line is a JSON geometry header followed by
//!   `Fx,Fy` rows in the same order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GridError, GridField, GridGeometry};
use crate::dynamics::fmt_f64;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    #[serde(flatten)]
    geometry: GridGeometry,
}

pub fn write_field_csv<W: Write>(f: &GridField, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "x,y,Fx,Fy")?;
    let g = f.geometry;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let idx = g.idx(ix, iy);
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(g.x(ix)),
                fmt_f64(g.y(iy)),
                fmt_f64(f.fx[idx]),
                fmt_f64(f.fy[idx])
            )?;
        }
    }
    Ok(())
}

pub fn write_field_with_header<W: Write>(f: &GridField, out: &mut W) -> std::io::Result<()> {
    let header = Header { version: 1, geometry: f.geometry };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for i in 0..f.fx.len() {
        writeln!(out, "{},{}", fmt_f64(f.fx[i]), fmt_f64(f.fy[i]))?;
    }
    Ok(())
}

pub fn write_scalar_csv<W: Write>(
    g: &super::GridScalar,
    column: &str,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "x,y,{column}")?;
    let geom = g.geometry;
    for iy in 0..geom.ny {
        for ix in 0..geom.nx {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(geom.x(ix)),
                fmt_f64(geom.y(iy)),
                fmt_f64(g.values[geom.idx(ix, iy)])
            )?;
        }
    }
    Ok(())
}

/// Reads either format, sniffing the JSON header on the first line. Plain
/// CSV cannot express periodicity, so the caller supplies it.
pub fn read_field<R: BufRead>(reader: R, periodic: bool) -> Result<GridField, GridError> {
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(Ok(line)) => line,
        _ => return Err(GridError::Malformed("empty input".to_string())),
    };
    if first.trim_start().starts_with('{') {
        let header: Header = serde_json::from_str(&first)
            .map_err(|e| GridError::Malformed(format!("bad JSON header: {e}")))?;
        if header.version != 1 {
            return Err(GridError::Malformed(format!(
                "unsupported grid file version {}",
                header.version
            )));
        }
        let g = header.geometry;
        let mut fx = Vec::with_capacity(g.len());
        let mut fy = Vec::with_capacity(g.len());
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| GridError::Malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cells = split_floats(&line, 2, lineno + 2)?;
            fx.push(cells[0]);
            fy.push(cells[1]);
        }
        if fx.len() != g.len() {
            return Err(GridError::Malformed(format!(
                "expected {} samples, found {}",
                g.len(),
                fx.len()
            )));
        }
        return GridField::new(g, fx, fy);
    }

    // Plain CSV; the first line must be the x,y,Fx,Fy header.
    if first.replace(' ', "") != "x,y,Fx,Fy" {
        return Err(GridError::Malformed(format!(
            "expected header 'x,y,Fx,Fy', found {first:?}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| GridError::Malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells = split_floats(&line, 4, lineno + 2)?;
        xs.push(cells[0]);
        ys.push(cells[1]);
        fx.push(cells[2]);
        fy.push(cells[3]);
    }
    let geometry = infer_geometry(&xs, &ys, periodic)?;
    GridField::new(geometry, fx, fy)
}

pub fn read_field_csv<R: BufRead>(reader: R, periodic: bool) -> Result<GridField, GridError> {
    read_field(reader, periodic)
}

fn split_floats(line: &str, want: usize, lineno: usize) -> Result<Vec<f64>, GridError> {
    let cells: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
    match cells {
        Ok(v) if v.len() == want => Ok(v),
        Ok(v) => Err(GridError::Malformed(format!(
            "line {lineno}: expected {want} columns, found {}",
            v.len()
        ))),
        Err(e) => Err(GridError::Malformed(format!("line {lineno}: {e}"))),
    }
}

fn infer_geometry(xs: &[f64], ys: &[f64], periodic: bool) -> Result<GridGeometry, GridError> {
    if xs.len() < 64 {
        return Err(GridError::Malformed(
            "grid needs at least 8 x 8 nodes".to_string(),
        ));
    }
    let x0 = xs[0];
    let scale = xs.iter().chain(ys).fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;
    // Row-major with x fastest: nx is where x wraps back to x0.
    let nx = xs
        .iter()
        .skip(1)
        .position(|&x| (x - x0).abs() <= tol)
        .map(|p| p + 1)
        .ok_or_else(|| GridError::Malformed("could not infer row length".to_string()))?;
    if !xs.len().is_multiple_of(nx) {
        return Err(GridError::Malformed(format!(
            "ragged grid: {} samples do not tile rows of {nx}",
            xs.len()
        )));
    }
    let ny = xs.len() / nx;
    if nx < 2 || ny < 2 {
        return Err(GridError::Malformed("degenerate grid".to_string()));
    }
    let dx = xs[1] - xs[0];
    let dy = ys[nx] - ys[0];
    if dx <= 0.0 || dy <= 0.0 {
        return Err(GridError::Malformed(
            "grid must be row-major with increasing coordinates".to_string(),
        ));
    }
    for iy in 0..ny {
        for ix in 0..nx {
            let idx = iy * nx + ix;
            if (xs[idx] - (x0 + ix as f64 * dx)).abs() > tol
                || (ys[idx] - (ys[0] + iy as f64 * dy)).abs() > tol
            {
                return Err(GridError::Malformed(format!(
                    "node {idx} breaks the uniform row-major layout"
                )));
            }
        }
    }
    let (x_max, y_max) = if periodic {
        (x0 + nx as f64 * dx, ys[0] + ny as f64 * dy)
    } else {
        (x0 + (nx - 1) as f64 * dx, ys[0] + (ny - 1) as f64 * dy)
    };
    Ok(GridGeometry {
        x_min: x0,
        x_max,
        y_min: ys[0],
        y_max,
        nx,
        ny,
        periodic,
    })
}
