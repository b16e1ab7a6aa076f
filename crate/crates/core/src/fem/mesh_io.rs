//! Plain-text mesh format.
//!
//! ```text
//! # comment lines start with '#'
//! mece-mesh 1
//! dimension 2
//! nodes 4
//! 0 0.0 0.0
//! 1 1.0 0.0
//! 2 1.0 1.0
//! 3 0.0 1.0
//! elements 1
//! 0 0 1 2 3
//! tags 1
//! 0 1 dirichlet
//! ```
//!
//! Node lines are `id x [y]`, element lines `id n0 n1 [n2 n3]` (quads
//! counter-clockwise), tag lines name a boundary facet by its node(s) then one
//! of `dirichlet`, `neumann`, `free_unknown`. Untagged boundary facets are
//! `free_unknown`. Ids must run 0, 1, 2, ... in order.

use std::io::{BufRead, Write};

use super::mesh::{BoundaryTag, Facet, Mesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "mece-mesh 1")?;
    writeln!(out, "dimension {}", mesh.dim())?;
    writeln!(out, "nodes {}", mesh.n_nodes())?;
    for (i, p) in mesh.coords().iter().enumerate() {
        if mesh.dim() == 1 {
            writeln!(out, "{i} {}", p[0])?;
        } else {
            writeln!(out, "{i} {} {}", p[0], p[1])?;
        }
    }
    writeln!(out, "elements {}", mesh.n_elements())?;
    for e in 0..mesh.n_elements() {
        let nodes: Vec<String> = mesh.element(e).iter().map(|n| n.to_string()).collect();
        writeln!(out, "{e} {}", nodes.join(" "))?;
    }
    let tags: Vec<(Facet, BoundaryTag)> = mesh.explicit_tags().collect();
    writeln!(out, "tags {}", tags.len())?;
    for (f, t) in tags {
        let nodes: Vec<String> = f.nodes().iter().map(|n| n.to_string()).collect();
        writeln!(out, "{} {}", nodes.join(" "), t.name())?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_data(&mut self) -> Result<Option<Vec<String>>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some(t.split_whitespace().map(str::to_string).collect()));
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<Vec<String>> {
        self.next_data()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, message: String) -> Error {
        Error::Parse { line: self.line, message }
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let t = self.expect(key)?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(format!("expected `{key} <count>`")));
        }
        self.num(&t[1])
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = Lines { inner: input.lines(), line: 0 };
    let magic = lines.expect("header")?;
    if magic != ["mece-mesh", "1"] {
        return Err(lines.err("expected `mece-mesh 1`".into()));
    }
    let dim = lines.header("dimension")?;
    if dim != 1 && dim != 2 {
        return Err(lines.err(format!("dimension must be 1 or 2, got {dim}")));
    }
    let n_nodes = lines.header("nodes")?;
    let mut coords = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let t = lines.expect("node line")?;
        if t.len() != dim + 1 || lines.num::<usize>(&t[0])? != i {
            return Err(lines.err(format!("expected node {i} with {dim} coordinate(s)")));
        }
        let x = lines.num(&t[1])?;
        let y = if dim == 2 { lines.num(&t[2])? } else { 0.0 };
        coords.push([x, y]);
    }
    let n_el = lines.header("elements")?;
    let npe = if dim == 1 { 2 } else { 4 };
    let mut conn = Vec::with_capacity(n_el * npe);
    for e in 0..n_el {
        let t = lines.expect("element line")?;
        if t.len() != npe + 1 || lines.num::<usize>(&t[0])? != e {
            return Err(lines.err(format!("expected element {e} with {npe} nodes")));
        }
        for s in &t[1..] {
            conn.push(lines.num(s)?);
        }
    }
    let n_tags = lines.header("tags")?;
    let mut tags = Vec::with_capacity(n_tags);
    for _ in 0..n_tags {
        let t = lines.expect("tag line")?;
        if t.len() != dim + 1 {
            return Err(lines.err(format!("tag line needs {dim} node(s) and a tag")));
        }
        let tag = BoundaryTag::parse(&t[dim]).ok_or_else(|| lines.err(format!("unknown tag `{}`", t[dim])))?;
        let facet =
            if dim == 1 { Facet::point(lines.num(&t[0])?) } else { Facet::edge(lines.num(&t[0])?, lines.num(&t[1])?) };
        tags.push((facet, tag));
    }
    if lines.next_data()?.is_some() {
        return Err(lines.err("trailing content after tag table".into()));
    }
    Mesh::new(dim, coords, conn, tags)
}

pub fn load_mesh(path: &std::path::Path) -> Result<Mesh> {
    let f = std::fs::File::open(path)?;
    read_mesh(std::io::BufReader::new(f))
}

pub fn save_mesh(mesh: &Mesh, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}
