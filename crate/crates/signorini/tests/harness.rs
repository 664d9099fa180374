mod common;

use std::path::Path;

use signorini::geometry::{BoxFace, Region};
use signorini::harness::{
    check_load, format_csv, prepare, read_config, run_experiment, run_limit, solve_limits, AdmissibilityMode,
    DomainSpec, ExperimentConfig, CSV_HEADER,
};
use signorini::kinematics::read_field;
use signorini::loads::{KernelClass, LoadSpec};
use signorini::LabError;

use common::*;

fn small(load: LoadSpec, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(DomainSpec::UnitCube(1), load);
    cfg.h_list = vec![0.2, 0.1];
    cfg.output = out.to_path_buf();
    cfg
}

#[test]
fn config_file_with_a_load_file_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ballast.load"), "f constant 0 0 -1\ng region=top constant 0 0 0.6\n").unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# small ballast run\nmesh cube 1\nload ballast.load\nh 0.2 0.1\noutput results\nseed 3\n",
    )
    .unwrap();
    let cfg = read_config(&dir.path().join("run.cfg")).unwrap();
    assert_eq!(cfg.domain, DomainSpec::UnitCube(1));
    assert_eq!(cfg.load, ballast());
    assert_eq!(cfg.output, dir.path().join("results"));
    assert_eq!(cfg.seed, 3);

    std::fs::write(dir.path().join("both.cfg"), "mesh cube 1\nload ballast.load\nf constant 0 0 -1\n").unwrap();
    assert!(read_config(&dir.path().join("both.cfg")).is_err());
}

#[test]
fn sweep_output_is_deterministic() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = run_experiment(&small(ballast(), first.path())).unwrap();
    let b = run_experiment(&small(ballast(), second.path())).unwrap();
    let csv_a = std::fs::read(first.path().join("sweep.csv")).unwrap();
    let csv_b = std::fs::read(second.path().join("sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(
        std::fs::read(first.path().join("report.txt")).unwrap(),
        std::fs::read(second.path().join("report.txt")).unwrap()
    );
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(a.records(), b.records());
    assert!(a.sandwich.ordered && a.sandwich.limits_agree);
}

#[test]
fn threads_do_not_change_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let serial = run_experiment(&small(ballast(), dir.path())).unwrap();
    let mut cfg = small(ballast(), dir.path());
    cfg.threads = 2;
    let parallel = run_experiment(&cfg).unwrap();
    assert_eq!(format_csv(&serial.records()).unwrap(), format_csv(&parallel.records()).unwrap());
}

#[test]
fn upward_load_is_rejected_in_every_mode() {
    let dir = tempfile::tempdir().unwrap();
    for mode in [AdmissibilityMode::Strict, AdmissibilityMode::Reference] {
        let mut cfg = small(LoadSpec::constant(up(1.0)), dir.path());
        cfg.admissibility = mode;
        match prepare(&cfg) {
            Err(LabError::Inadmissible(msg)) => assert!(msg.contains("L(e₃)"), "{msg}"),
            other => panic!("expected an admissibility failure, got {other:?}"),
        }
    }
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn pure_gravity_needs_reference_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(LoadSpec::constant(down(1.0)), dir.path());
    assert!(matches!(prepare(&cfg), Err(LabError::Inadmissible(_))));
    let (setup, text) = check_load(&cfg).unwrap();
    assert!(!setup.admissibility.is_admissible());
    assert!(text.contains("verdict: FAIL"));
    let (setup, text) = check_load(&small(ballast(), dir.path())).unwrap();
    assert_eq!(setup.kernel.class, KernelClass::RotationsAboutE3);
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn zero_load_is_degenerate_with_zero_minima() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(LoadSpec::zero(), dir.path());
    cfg.admissibility = AdmissibilityMode::Reference;
    let setup = prepare(&cfg).unwrap();
    assert!(setup.degenerate);
    let limits = solve_limits(&setup, &cfg).unwrap();
    for m in [limits.min_e(), limits.min_g(), limits.min_gtilde()] {
        assert!(m.abs() < 1e-10, "{m}");
    }
}

#[test]
fn identity_only_kernel_makes_the_limits_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(tensioned(-0.3), dir.path());
    cfg.admissibility = AdmissibilityMode::Reference;
    let setup = prepare(&cfg).unwrap();
    assert_eq!(setup.kernel.class, KernelClass::IdentityOnly);
    let limits = solve_limits(&setup, &cfg).unwrap();
    assert!((limits.min_gtilde() - limits.min_e()).abs() <= 1e-8);
    assert!((limits.min_g() - limits.min_e()).abs() <= 1e-8);
}

#[test]
fn limit_command_writes_a_readable_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(gravity_with_lift(), dir.path());
    let (setup, limits, text) = run_limit(&cfg).unwrap();
    assert!(limits.ordered());
    assert!(text.contains("verdict: PASS"));
    let field = read_field(&dir.path().join("limit.field")).unwrap();
    assert_eq!(field.len(), setup.mesh.num_nodes());
    assert!(dir.path().join("limit.txt").is_file());
}

#[test]
fn side_tractions_reach_the_load() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ballast().with_traction(Region::Face(BoxFace::XMax), nalgebra::Vector3::new(0.0, 0.0, -0.1));
    let setup = prepare(&small(spec, dir.path())).unwrap();
    let plain = prepare(&small(ballast(), dir.path())).unwrap();
    assert!(setup.load.norm_estimate() > plain.load.norm_estimate());
}

#[test]
fn formatting_nothing_is_an_error() {
    assert!(format_csv(&[]).is_err());
}
