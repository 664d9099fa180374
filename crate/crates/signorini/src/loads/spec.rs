//! Load descriptors and the load file format.
//!
//! ```text
//! f constant 0 0 -1
//! f affine 0.5 0 0  0 0.5 0  0 0 0   -0.25 -0.25 0
//! g region=top constant 0 0 0.6
//! ```
//!
//! Several `f` lines add up; `g` lines are kept per region.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{LabError, Result};
use crate::geometry::{content_lines, parse_numbers, Region};

/// Volume force density `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeForce {
    Zero,
    Constant(Vector3<f64>),
    /// `f(x) = A x + b`.
    Affine {
        a: Matrix3<f64>,
        b: Vector3<f64>,
    },
    /// Nodal values, integrated with the centroid rule.
    Tabulated(Vec<Vector3<f64>>),
}

impl VolumeForce {
    /// Value at `x` for closed-form descriptors.
    pub fn eval(&self, x: &Vector3<f64>) -> Option<Vector3<f64>> {
        match self {
            VolumeForce::Zero => Some(Vector3::zeros()),
            VolumeForce::Constant(c) => Some(*c),
            VolumeForce::Affine { a, b } => Some(a * x + b),
            VolumeForce::Tabulated(_) => None,
        }
    }

    fn as_affine(&self) -> Option<(Matrix3<f64>, Vector3<f64>)> {
        match self {
            VolumeForce::Zero => Some((Matrix3::zeros(), Vector3::zeros())),
            VolumeForce::Constant(c) => Some((Matrix3::zeros(), *c)),
            VolumeForce::Affine { a, b } => Some((*a, *b)),
            VolumeForce::Tabulated(_) => None,
        }
    }
}

/// Constant surface traction `g` on a boundary region.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceForce {
    pub region: Region,
    pub value: Vector3<f64>,
}

/// Dead load: volume density plus surface tractions.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub volume: VolumeForce,
    pub surface: Vec<SurfaceForce>,
}

impl Default for LoadSpec {
    fn default() -> Self {
        LoadSpec::zero()
    }
}

impl LoadSpec {
    pub fn zero() -> LoadSpec {
        LoadSpec { volume: VolumeForce::Zero, surface: Vec::new() }
    }

    pub fn constant(f: Vector3<f64>) -> LoadSpec {
        LoadSpec { volume: VolumeForce::Constant(f), surface: Vec::new() }
    }

    pub fn affine(a: Matrix3<f64>, b: Vector3<f64>) -> LoadSpec {
        LoadSpec { volume: VolumeForce::Affine { a, b }, surface: Vec::new() }
    }

    pub fn with_traction(mut self, region: Region, value: Vector3<f64>) -> LoadSpec {
        self.surface.push(SurfaceForce { region, value });
        self
    }

    /// Multiplies every density by `lambda`.
    pub fn scaled(&self, lambda: f64) -> LoadSpec {
        let volume = match &self.volume {
            VolumeForce::Zero => VolumeForce::Zero,
            VolumeForce::Constant(c) => VolumeForce::Constant(c * lambda),
            VolumeForce::Affine { a, b } => VolumeForce::Affine { a: a * lambda, b: b * lambda },
            VolumeForce::Tabulated(v) => VolumeForce::Tabulated(v.iter().map(|x| x * lambda).collect()),
        };
        let surface =
            self.surface.iter().map(|s| SurfaceForce { region: s.region.clone(), value: s.value * lambda }).collect();
        LoadSpec { volume, surface }
    }

    /// Parses one directive; returns `false` if the line is not a load directive.
    pub(crate) fn apply_directive(&mut self, line: usize, fields: &[&str]) -> Result<bool> {
        let err = |msg: &str| LabError::Parse { line, msg: msg.to_string() };
        match fields.first().copied() {
            Some("f") => {
                let (mut a, mut b) =
                    self.volume.as_affine().ok_or_else(|| err("cannot combine a tabulated force with directives"))?;
                match fields.get(1).copied() {
                    Some("constant") => {
                        let v: Vec<f64> = parse_numbers(line, &fields[2..], 3)?;
                        b += Vector3::new(v[0], v[1], v[2]);
                    }
                    Some("affine") => {
                        let v: Vec<f64> = parse_numbers(line, &fields[2..], 12)?;
                        a += Matrix3::from_row_slice(&v[..9]);
                        b += Vector3::new(v[9], v[10], v[11]);
                    }
                    _ => return Err(err("expected 'f constant ...' or 'f affine ...'")),
                }
                self.volume = if a == Matrix3::zeros() {
                    if b == Vector3::zeros() {
                        VolumeForce::Zero
                    } else {
                        VolumeForce::Constant(b)
                    }
                } else {
                    VolumeForce::Affine { a, b }
                };
                Ok(true)
            }
            Some("g") => {
                let name = fields
                    .get(1)
                    .and_then(|f| f.strip_prefix("region="))
                    .ok_or_else(|| err("expected 'g region=<name> constant cx cy cz'"))?;
                let region = Region::parse(name).ok_or_else(|| err(&format!("unknown region '{name}'")))?;
                if fields.get(2).copied() != Some("constant") {
                    return Err(err("only constant tractions are supported"));
                }
                let v: Vec<f64> = parse_numbers(line, &fields[3..], 3)?;
                self.surface.push(SurfaceForce { region, value: Vector3::new(v[0], v[1], v[2]) });
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

pub fn parse_load(text: &str) -> Result<LoadSpec> {
    let mut spec = LoadSpec::zero();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if !spec.apply_directive(line, &fields)? {
            return Err(LabError::Parse { line, msg: format!("unknown load directive '{}'", fields[0]) });
        }
    }
    Ok(spec)
}

pub fn read_load(path: &Path) -> Result<LoadSpec> {
    parse_load(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxFace;

    #[test]
    fn parses_all_directives() {
        let text =
            "# ballast\nf constant 0 0 -1\nf affine 1 0 0 0 1 0 0 0 0 -0.5 -0.5 0\ng region=top constant 0 0 0.6\n";
        let spec = parse_load(text).unwrap();
        match spec.volume {
            VolumeForce::Affine { a, b } => {
                assert_eq!(a, Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0));
                assert_eq!(b, Vector3::new(-0.5, -0.5, -1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            spec.surface,
            vec![SurfaceForce { region: Region::Face(BoxFace::Top), value: Vector3::new(0.0, 0.0, 0.6) }]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_load("f constant 0 0").is_err());
        assert!(parse_load("g region=side constant 0 0 1").is_err());
        assert!(parse_load("g top constant 0 0 1").is_err());
        assert!(parse_load("h constant 0 0 1").is_err());
    }

    #[test]
    fn scaling() {
        let spec = LoadSpec::constant(Vector3::new(0.0, 0.0, -1.0)).with_traction(Region::All, Vector3::x());
        let s = spec.scaled(2.0);
        assert_eq!(s.volume, VolumeForce::Constant(Vector3::new(0.0, 0.0, -2.0)));
        assert_eq!(s.surface[0].value, Vector3::new(2.0, 0.0, 0.0));
    }
}
