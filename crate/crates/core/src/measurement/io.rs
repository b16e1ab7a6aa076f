//! Plain-text measurement format.
//!
//! ```text
//! mece-measurement 1
//! flavor pointwise          # or l2_region, h1_region
//! weight 1.0
//! length_scale 0.07         # optional, h1_region only
//! points 2                  # pointwise: `x [y] value...` per line
//! 0.25 0.001
//! 0.75 -0.002
//! ```
//!
//! Region flavors list elements, then nodal values (one value per
//! displacement component; nodes not listed are zero):
//!
//! ```text
//! elements 3
//! 0 1 2
//! values 2
//! 0 0.0
//! 1 0.013
//! ```

use std::io::{BufRead, Write};

use super::{Flavor, MeasurementSet, Region};
use crate::error::{Error, Result};
use crate::fem::Mesh;

pub fn write_measurements<W: Write>(ms: &MeasurementSet, mesh: &Mesh, mut out: W) -> Result<()> {
    let d = mesh.dofs_per_node();
    writeln!(out, "mece-measurement 1")?;
    writeln!(out, "flavor {}", ms.flavor.name())?;
    writeln!(out, "weight {}", ms.weight)?;
    if let Some(l) = ms.length_scale {
        writeln!(out, "length_scale {l}")?;
    }
    match &ms.region {
        Region::Points(pts) => {
            writeln!(out, "points {}", pts.len())?;
            for (k, p) in pts.iter().enumerate() {
                let mut fields: Vec<String> = p[..mesh.dim()].iter().map(|x| x.to_string()).collect();
                fields.extend(ms.values[k * d..(k + 1) * d].iter().map(|v| v.to_string()));
                writeln!(out, "{}", fields.join(" "))?;
            }
        }
        Region::Elements(els) => {
            writeln!(out, "elements {}", els.len())?;
            let ids: Vec<String> = els.iter().map(|e| e.to_string()).collect();
            for chunk in ids.chunks(20) {
                writeln!(out, "{}", chunk.join(" "))?;
            }
            writeln!(out, "values {}", mesh.n_nodes())?;
            for n in 0..mesh.n_nodes() {
                let vals: Vec<String> = ms.values[n * d..(n + 1) * d].iter().map(|v| v.to_string()).collect();
                writeln!(out, "{n} {}", vals.join(" "))?;
            }
        }
    }
    Ok(())
}

pub fn read_measurements<R: BufRead>(input: R, mesh: &Mesh) -> Result<MeasurementSet> {
    let mut tokens: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, l) in input.lines().enumerate() {
        let l = l?;
        let t = l.split('#').next().unwrap_or("").trim();
        if !t.is_empty() {
            tokens.push((i + 1, t.split_whitespace().map(str::to_string).collect()));
        }
    }
    let mut it = tokens.into_iter().peekable();
    let err = |line: usize, m: &str| Error::Parse { line, message: m.to_string() };
    let num =
        |line: usize, s: &str| -> Result<f64> { s.parse().map_err(|_| err(line, &format!("cannot parse `{s}`"))) };
    let count =
        |line: usize, s: &str| -> Result<usize> { s.parse().map_err(|_| err(line, &format!("cannot parse `{s}`"))) };

    let (l, t) = it.next().ok_or_else(|| err(0, "empty file"))?;
    if t != ["mece-measurement", "1"] {
        return Err(err(l, "expected `mece-measurement 1`"));
    }
    let mut flavor = None;
    let mut weight = 1.0;
    let mut length_scale = None;
    let d = mesh.dofs_per_node();
    while let Some((l, t)) = it.next() {
        match t[0].as_str() {
            "flavor" if t.len() == 2 => {
                flavor = Some(Flavor::parse(&t[1]).ok_or_else(|| err(l, "unknown flavor"))?);
            }
            "weight" if t.len() == 2 => weight = num(l, &t[1])?,
            "length_scale" if t.len() == 2 => length_scale = Some(num(l, &t[1])?),
            "points" if t.len() == 2 => {
                let n = count(l, &t[1])?;
                let mut pts = Vec::with_capacity(n);
                let mut values = Vec::with_capacity(n * d);
                for _ in 0..n {
                    let (l, t) = it.next().ok_or_else(|| err(l, "missing point lines"))?;
                    if t.len() != mesh.dim() + d {
                        return Err(err(l, "point line needs coordinates and one value per component"));
                    }
                    let x = num(l, &t[0])?;
                    let y = if mesh.dim() == 2 { num(l, &t[1])? } else { 0.0 };
                    pts.push([x, y]);
                    for s in &t[mesh.dim()..] {
                        values.push(num(l, s)?);
                    }
                }
                let mut ms = MeasurementSet::pointwise(pts, values);
                ms.flavor = flavor.ok_or_else(|| err(l, "flavor must precede the data"))?;
                ms.weight = weight;
                ms.length_scale = length_scale;
                finish(&mut it)?;
                ms.validate(mesh)?;
                return Ok(ms);
            }
            "elements" if t.len() == 2 => {
                let n = count(l, &t[1])?;
                let mut els = Vec::with_capacity(n);
                while els.len() < n {
                    let (l, t) = it.next().ok_or_else(|| err(l, "missing element ids"))?;
                    for s in &t {
                        els.push(count(l, s)?);
                    }
                }
                if els.len() != n {
                    return Err(err(l, "element count mismatch"));
                }
                let (l, t) = it.next().ok_or_else(|| err(l, "missing values table"))?;
                if t.len() != 2 || t[0] != "values" {
                    return Err(err(l, "expected `values <count>`"));
                }
                let nv = count(l, &t[1])?;
                let mut values = vec![0.0; mesh.n_dofs()];
                for _ in 0..nv {
                    let (l, t) = it.next().ok_or_else(|| err(l, "missing value lines"))?;
                    if t.len() != 1 + d {
                        return Err(err(l, "value line needs a node id and one value per component"));
                    }
                    let node = count(l, &t[0])?;
                    if node >= mesh.n_nodes() {
                        return Err(err(l, "node id out of range"));
                    }
                    for c in 0..d {
                        values[node * d + c] = num(l, &t[1 + c])?;
                    }
                }
                let fl = flavor.ok_or_else(|| err(l, "flavor must precede the data"))?;
                let mut ms = MeasurementSet::region(fl, els, values);
                ms.weight = weight;
                ms.length_scale = length_scale;
                finish(&mut it)?;
                ms.validate(mesh)?;
                return Ok(ms);
            }
            _ => return Err(err(l, &format!("unexpected `{}`", t.join(" ")))),
        }
    }
    Err(err(0, "no measurement data"))
}

fn finish(it: &mut impl Iterator<Item = (usize, Vec<String>)>) -> Result<()> {
    match it.next() {
        Some((l, _)) => Err(Error::Parse { line: l, message: "trailing content".into() }),
        None => Ok(()),
    }
}

pub fn load_measurements(path: &std::path::Path, mesh: &Mesh) -> Result<MeasurementSet> {
    let f = std::fs::File::open(path)?;
    read_measurements(std::io::BufReader::new(f), mesh)
}

pub fn save_measurements(ms: &MeasurementSet, mesh: &Mesh, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_measurements(ms, mesh, &mut w)?;
    w.flush()?;
    Ok(())
}
