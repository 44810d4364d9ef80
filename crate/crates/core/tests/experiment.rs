use exterior_spectra::assembly::assemble_neumann;
use exterior_spectra::comparison::Verdict;
use exterior_spectra::experiment::PRESETS;
use exterior_spectra::experiment::{parse_config, run, ExperimentConfig};
use exterior_spectra::fields::{OperatorField, PotentialSpec};
use exterior_spectra::geometry::{build_mesh, parse_mesh, tag_boundary, write_mesh, BoundarySpec, DomainSpec};
use exterior_spectra::spectral::Pencil;
use exterior_spectra::Error;
use proptest::prelude::*;

fn quick(name: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::load(name).unwrap();
    c.levels = vec![0, 1];
    c
}

#[test]
fn every_preset_parses_and_validates() {
    for p in PRESETS {
        let c = ExperimentConfig::load(p.name).unwrap();
        c.validate().unwrap();
        assert_eq!(c.name, p.name);
        assert!(!c.levels.is_empty());
    }
}

#[test]
fn zero_potential_is_vacuous() {
    let out = run(&quick("zero-potential")).unwrap();
    assert!(out.passed());
    assert!(out.runs[0].certificate.nothing_to_compare());
    assert!(out.verdicts.iter().all(|(_, v)| *v == Verdict::Vacuous));
}

#[test]
fn two_runs_produce_identical_artifacts() {
    let c = quick("mixed-robin-halfcircle");
    let a = run(&c).unwrap().artifacts();
    let b = run(&c).unwrap().artifacts();
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|(n, _)| *n).collect();
    for wanted in ["gaps.csv", "counting.csv", "trace.csv", "refinement.csv"] {
        assert!(names.contains(&wanted), "{names:?}");
    }
}

#[test]
fn artifacts_are_written_to_disk() {
    let dir = std::env::temp_dir().join(format!("exterior-spectra-test-{}", std::process::id()));
    let out = run(&quick("zero-potential")).unwrap();
    out.write_to(&dir).unwrap();
    for (name, body) in out.artifacts() {
        assert_eq!(std::fs::read_to_string(dir.join(name)).unwrap(), body);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_carry_line_numbers() {
    let err = parse_config("name = x\nbogus = 1\n").unwrap_err();
    assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    assert!(err.to_string().contains("line 2"));
}

#[test]
fn witness_outside_bump_is_rejected_before_solving() {
    let text = exterior_spectra::experiment::find_preset("coefficient-potential-bump").unwrap().config;
    let moved = text.replace("strict.ball = 1.5, 0, 0.3", "strict.ball = 5, 0, 0.3");
    assert_ne!(moved, text, "preset layout changed");
    let err = run(&parse_config(&moved).unwrap()).unwrap_err();
    assert!(err.to_string().contains("strict-ordering ball rejected"), "{err}");
}

fn well_pencil_counts(level: u32, mus: &[f64]) -> Vec<usize> {
    let spec = DomainSpec::disk(1.0, 12.0).with_grading(2.0).with_align_radii(vec![2.0]).with_level(level);
    let mesh = tag_boundary(&build_mesh(&spec).unwrap(), &BoundarySpec::neumann()).unwrap();
    let sys = assemble_neumann(&mesh, &OperatorField::schrodinger(PotentialSpec::radial_well(8.0, 1.0, 2.0))).unwrap();
    let p = Pencil::new(&sys.a, &sys.m).unwrap();
    mus.iter().map(|&mu| p.count_below(mu).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_are_monotone_in_mu(mut mus in prop::collection::vec(-8.0f64..0.0, 2..6)) {
        mus.sort_by(f64::total_cmp);
        let counts = well_pencil_counts(0, &mus);
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?} {:?}", mus, counts);
    }

    #[test]
    fn mesh_text_round_trip(level in 0u32..2, grading in 1.0f64..3.0, radius in 4.0f64..20.0) {
        let spec = DomainSpec::disk(1.0, radius).with_grading(grading).with_level(level);
        let mesh = build_mesh(&spec).unwrap();
        let back = parse_mesh(&write_mesh(&mesh), mesh.obstacle.clone(), mesh.trunc_radius).unwrap();
        prop_assert_eq!(back, mesh);
    }
}
