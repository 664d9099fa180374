//! Nodal field files: `field N` followed by `N` lines `ux uy uz`, index-aligned
//! with the mesh nodes. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{LabError, Result};
use crate::geometry::{content_lines, parse_header, parse_numbers};

pub fn parse_field(text: &str) -> Result<Vec<Vector3<f64>>> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or(LabError::Parse { line: 0, msg: "empty field file".into() })?;
    let n = parse_header(ln, header, "field")?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or(LabError::Parse { line: 0, msg: "field ended early".into() })?;
        let v: Vec<f64> = parse_numbers(ln, &l.split_whitespace().collect::<Vec<_>>(), 3)?;
        out.push(Vector3::new(v[0], v[1], v[2]));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(LabError::Parse { line: ln, msg: "trailing content after field".into() });
    }
    Ok(out)
}

pub fn read_field(path: &Path) -> Result<Vec<Vector3<f64>>> {
    parse_field(&std::fs::read_to_string(path)?)
}

pub fn format_field(values: &[Vector3<f64>]) -> String {
    let mut out = format!("field {}\n", values.len());
    for v in values {
        let _ = writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    out
}

pub fn write_field(values: &[Vector3<f64>], path: &Path) -> Result<()> {
    Ok(std::fs::write(path, format_field(values))?)
}
