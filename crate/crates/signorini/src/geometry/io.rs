//! Plain-text mesh files.
//!
//! ```text
//! # comment
//! nodes 4
//! 0 0 0
//! 1 0 0
//! 0 1 0
//! 0 0 1
//! tets 1
//! 0 1 2 3
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use super::mesh::Mesh;
use crate::error::{LabError, Result};

/// Non-empty, comment-stripped lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub(crate) fn parse_numbers<T: FromStr>(line: usize, fields: &[&str], count: usize) -> Result<Vec<T>> {
    if fields.len() != count {
        return Err(LabError::Parse { line, msg: format!("expected {count} values, found {}", fields.len()) });
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| LabError::Parse { line, msg: format!("cannot parse '{f}'") }))
        .collect()
}

pub(crate) fn parse_header(line: usize, text: &str, keyword: &str) -> Result<usize> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != keyword {
        return Err(LabError::Parse { line, msg: format!("expected '{keyword} <count>'") });
    }
    fields[1].parse().map_err(|_| LabError::Parse { line, msg: format!("bad count '{}'", fields[1]) })
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = content_lines(text);
    let eof = |what: &str| LabError::Parse { line: 0, msg: format!("unexpected end of file while reading {what}") };

    let (ln, header) = lines.next().ok_or_else(|| eof("nodes header"))?;
    let n = parse_header(ln, header, "nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| eof("nodes"))?;
        let v: Vec<f64> = parse_numbers(ln, &l.split_whitespace().collect::<Vec<_>>(), 3)?;
        nodes.push(Vector3::new(v[0], v[1], v[2]));
    }
    let (ln, header) = lines.next().ok_or_else(|| eof("tets header"))?;
    let m = parse_header(ln, header, "tets")?;
    let mut tets = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or_else(|| eof("tets"))?;
        let v: Vec<usize> = parse_numbers(ln, &l.split_whitespace().collect::<Vec<_>>(), 4)?;
        tets.push([v[0], v[1], v[2], v[3]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(LabError::Parse { line: ln, msg: "trailing content after tets".into() });
    }
    Mesh::new(nodes, tets)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "tets {}", mesh.num_elements());
    for t in mesh.tets() {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, format_mesh(mesh))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::build_unit_cube_mesh;

    #[test]
    fn round_trip() {
        let m = build_unit_cube_mesh(2).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.tets(), m.tets());
    }

    #[test]
    fn comments_and_errors() {
        let text = "# a single tet\nnodes 4\n0 0 0\n1 0 0 # corner\n0 1 0\n0 0 1\ntets 1\n0 1 2 3\n";
        assert_eq!(parse_mesh(text).unwrap().num_elements(), 1);
        let bad = "nodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 x\ntets 1\n0 1 2 3\n";
        assert!(matches!(parse_mesh(bad), Err(LabError::Parse { line: 5, .. })));
        assert!(parse_mesh("nodes 2\n0 0 0\n").is_err());
    }
}
