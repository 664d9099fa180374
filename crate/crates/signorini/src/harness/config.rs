//! Line-oriented experiment configuration.
//!
//! ```text
//! # Ballast on the unit cube
//! mesh cube 2
//! f constant 0 0 -1
//! g region=top constant 0 0 0.6
//! material yeoh 1 0.2 0.1
//! h 0.2 0.1 0.05 0.025
//! solver 5000 1e-8
//! continuation 100 10 3
//! multistart 7 2
//! recovery 0.25 32 64
//! output out/ballast
//! seed 7
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use crate::error::{LabError, Result};
use crate::geometry::{build_box_mesh, build_unit_cube_mesh, content_lines, parse_numbers, read_mesh, Mesh};
use crate::loads::{read_load, LoadSpec, DEFAULT_BUDGET};
use crate::material::MaterialModel;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    UnitCube(usize),
    Box { min: Vector3<f64>, max: Vector3<f64>, cells: [usize; 3] },
    File(PathBuf),
}

impl DomainSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            DomainSpec::UnitCube(n) => build_unit_cube_mesh(*n),
            DomainSpec::Box { min, max, cells } => build_box_mesh(*min, *max, *cells),
            DomainSpec::File(path) => read_mesh(path),
        }
    }
}

/// `(κ0, factor, stages)` of a penalty continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub kappa0: f64,
    pub factor: f64,
    pub stages: usize,
}

/// What to do when the load fails the global admissibility test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissibilityMode {
    /// Abort with the violated condition.
    Strict,
    /// Record the violations and minimize on the branch reached from the
    /// reference configuration.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig {
    pub gamma: f64,
    pub steps_per_h: usize,
    pub ledger_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub load: LoadSpec,
    pub material: [f64; 3],
    /// Continuation for the limit problems.
    pub penalty: Option<Continuation>,
    /// Continuation for `G_h^I`.
    pub continuation: Option<Continuation>,
    pub h_list: Vec<f64>,
    pub max_iter: usize,
    pub solver_tol: f64,
    pub multistart_seed: Option<u64>,
    pub noisy_starts: usize,
    pub recovery: Option<RecoveryConfig>,
    /// Step sizes for the recovery sequence; defaults to `h_list`.
    pub recovery_h: Option<Vec<f64>>,
    pub output: PathBuf,
    pub seed: u64,
    /// Final-gap threshold; `None` means `5e-3 (1 + |min G̃^I|)`.
    pub tolerance: Option<f64>,
    pub admissibility: AdmissibilityMode,
    pub admissibility_budget: usize,
    pub threads: usize,
}

impl ExperimentConfig {
    /// Unit cube `n = 2`, Yeoh `(1, 0.2, 0.1)`, `h ∈ {0.2, 0.1, 0.05, 0.025}`, no load.
    pub fn new(domain: DomainSpec, load: LoadSpec) -> ExperimentConfig {
        ExperimentConfig {
            domain,
            load,
            material: [1.0, 0.2, 0.1],
            penalty: None,
            continuation: None,
            h_list: vec![0.2, 0.1, 0.05, 0.025],
            max_iter: 5000,
            solver_tol: 1e-8,
            multistart_seed: None,
            noisy_starts: 2,
            recovery: None,
            recovery_h: None,
            output: PathBuf::from("out"),
            seed: 0,
            tolerance: None,
            admissibility: AdmissibilityMode::Strict,
            admissibility_budget: DEFAULT_BUDGET,
            threads: 1,
        }
    }

    pub fn material_model(&self) -> Result<MaterialModel> {
        let [c1, c2, c3] = self.material;
        MaterialModel::yeoh(c1, c2, c3)
    }

    pub fn validate(&self) -> Result<()> {
        check_h_list(&self.h_list)?;
        if let Some(h) = &self.recovery_h {
            check_h_list(h)?;
        }
        if self.threads == 0 {
            return Err(LabError::InvalidInput("threads must be at least 1".into()));
        }
        if let DomainSpec::File(path) = &self.domain {
            if !path.is_file() {
                return Err(LabError::InvalidInput(format!("mesh file {} does not exist", path.display())));
            }
        }
        Ok(())
    }
}

fn check_h_list(h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(LabError::InvalidInput("h list is empty".into()));
    }
    if let Some(bad) = h.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
        return Err(LabError::InvalidInput(format!("h must lie in (0, 1), got {bad}")));
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidInput("h values must be strictly decreasing".into()));
    }
    Ok(())
}

pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut domain = None;
    let mut inline_load = LoadSpec::zero();
    let mut load_file = None;
    let mut has_inline = false;
    let mut cfg = ExperimentConfig::new(DomainSpec::UnitCube(2), LoadSpec::zero());
    let resolve = |p: &str| if Path::new(p).is_absolute() { PathBuf::from(p) } else { base.join(p) };

    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| LabError::Parse { line, msg };
        let args = &fields[1..];
        match fields[0] {
            "mesh" => {
                domain = Some(match args.first().copied() {
                    Some("cube") if args.len() == 2 => {
                        DomainSpec::UnitCube(parse_numbers::<usize>(line, &args[1..], 1)?[0])
                    }
                    Some("box") if args.len() == 10 => {
                        let v: Vec<f64> = parse_numbers(line, &args[1..7], 6)?;
                        let n: Vec<usize> = parse_numbers(line, &args[7..], 3)?;
                        DomainSpec::Box {
                            min: Vector3::new(v[0], v[1], v[2]),
                            max: Vector3::new(v[3], v[4], v[5]),
                            cells: [n[0], n[1], n[2]],
                        }
                    }
                    Some("file") if args.len() == 2 => DomainSpec::File(resolve(args[1])),
                    _ => {
                        return Err(err(
                            "expected 'mesh cube n', 'mesh box x0 y0 z0 x1 y1 z1 nx ny nz' or 'mesh file <path>'"
                                .into(),
                        ))
                    }
                });
            }
            "load" => {
                let [path] = args else { return Err(err("expected 'load <path>'".into())) };
                load_file = Some(resolve(path));
            }
            "f" | "g" => {
                has_inline = true;
                inline_load.apply_directive(line, &fields)?;
            }
            "material" => {
                if args.first().copied() != Some("yeoh") {
                    return Err(err("expected 'material yeoh c1 c2 c3'".into()));
                }
                let c: Vec<f64> = parse_numbers(line, &args[1..], 3)?;
                cfg.material = [c[0], c[1], c[2]];
            }
            "penalty" => cfg.penalty = Some(continuation(line, args)?),
            "continuation" => cfg.continuation = Some(continuation(line, args)?),
            "h" => cfg.h_list = parse_numbers(line, args, args.len())?,
            "recovery_h" => cfg.recovery_h = Some(parse_numbers(line, args, args.len())?),
            "solver" => {
                let [iter, tol] = args else { return Err(err("expected 'solver maxiter tol'".into())) };
                cfg.max_iter = parse_numbers::<usize>(line, &[iter], 1)?[0];
                cfg.solver_tol = parse_numbers::<f64>(line, &[tol], 1)?[0];
            }
            "multistart" => {
                let v: Vec<u64> = parse_numbers(line, args, 2)?;
                cfg.multistart_seed = Some(v[0]);
                cfg.noisy_starts = v[1] as usize;
            }
            "recovery" => {
                let [gamma, steps, samples] = args else {
                    return Err(err("expected 'recovery gamma steps_per_h ledger_samples'".into()));
                };
                let gamma = parse_numbers::<f64>(line, &[gamma], 1)?[0];
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(err(format!("gamma must lie in (0, 1), got {gamma}")));
                }
                let n: Vec<usize> = parse_numbers(line, &[steps, samples], 2)?;
                if n[0] == 0 {
                    return Err(err("steps_per_h must be positive".into()));
                }
                cfg.recovery = Some(RecoveryConfig { gamma, steps_per_h: n[0], ledger_samples: n[1] });
            }
            "output" => {
                let [dir] = args else { return Err(err("expected 'output <dir>'".into())) };
                cfg.output = resolve(dir);
            }
            "seed" => cfg.seed = parse_numbers::<u64>(line, args, 1)?[0],
            "tolerance" => cfg.tolerance = Some(parse_numbers::<f64>(line, args, 1)?[0]),
            "threads" => cfg.threads = parse_numbers::<usize>(line, args, 1)?[0],
            "admissibility" => {
                cfg.admissibility = match args.first().copied() {
                    Some("strict") => AdmissibilityMode::Strict,
                    Some("reference") => AdmissibilityMode::Reference,
                    _ => return Err(err("expected 'admissibility strict|reference [budget]'".into())),
                };
                if args.len() > 1 {
                    cfg.admissibility_budget = parse_numbers::<usize>(line, &args[1..], 1)?[0];
                }
            }
            other => return Err(err(format!("unknown directive '{other}'"))),
        }
    }

    cfg.domain = domain.ok_or_else(|| LabError::InvalidInput("config has no 'mesh' line".into()))?;
    cfg.load = match (load_file, has_inline) {
        (Some(_), true) => {
            return Err(LabError::InvalidInput("give the load either inline or as a file, not both".into()))
        }
        (Some(path), false) => read_load(&path)?,
        (None, _) => inline_load,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn continuation(line: usize, args: &[&str]) -> Result<Continuation> {
    let v: Vec<f64> = parse_numbers(line, args, 3)?;
    if !(v[0] > 0.0 && v[1] >= 1.0 && v[2] >= 1.0 && v[2].fract() == 0.0) {
        return Err(LabError::Parse {
            line,
            msg: "expected kappa0 > 0, factor >= 1 and a positive stage count".into(),
        });
    }
    Ok(Continuation { kappa0: v[0], factor: v[1], stages: v[2] as usize })
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loads::VolumeForce;

    #[test]
    fn parses_the_documented_example() {
        let text = "mesh cube 2\nf constant 0 0 -1\ng region=top constant 0 0 0.6\nmaterial yeoh 1 0.2 0.1\n\
                    h 0.2 0.1\nsolver 100 1e-6\ncontinuation 100 10 3\nmultistart 7 2\nrecovery 0.25 32 64\n\
                    output out/x\nseed 7\nadmissibility reference 500\nthreads 2\n";
        let cfg = parse_config(text, Path::new("/tmp/base")).unwrap();
        assert_eq!(cfg.domain, DomainSpec::UnitCube(2));
        assert_eq!(cfg.load.volume, VolumeForce::Constant(Vector3::new(0.0, 0.0, -1.0)));
        assert_eq!(cfg.load.surface.len(), 1);
        assert_eq!(cfg.h_list, vec![0.2, 0.1]);
        assert_eq!((cfg.max_iter, cfg.solver_tol), (100, 1e-6));
        assert_eq!(cfg.continuation, Some(Continuation { kappa0: 100.0, factor: 10.0, stages: 3 }));
        assert_eq!((cfg.multistart_seed, cfg.noisy_starts), (Some(7), 2));
        assert_eq!(cfg.recovery, Some(RecoveryConfig { gamma: 0.25, steps_per_h: 32, ledger_samples: 64 }));
        assert_eq!(cfg.output, PathBuf::from("/tmp/base/out/x"));
        assert_eq!(
            (cfg.seed, cfg.admissibility, cfg.admissibility_budget, cfg.threads),
            (7, AdmissibilityMode::Reference, 500, 2)
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let base = Path::new(".");
        assert!(parse_config("f constant 0 0 -1\n", base).is_err());
        assert!(parse_config("mesh cube 2\nh 0.1 0.2\n", base).is_err());
        assert!(parse_config("mesh cube 2\nh 0.5 1.5\n", base).is_err());
        assert!(parse_config("mesh cube 2\nwidth 3\n", base).is_err());
        assert!(parse_config("mesh file /nonexistent/mesh.txt\n", base).is_err());
        assert!(parse_config("mesh cube 2\nrecovery 1.5 32 64\n", base).is_err());
    }
}
