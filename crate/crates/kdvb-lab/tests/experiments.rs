//! Configuration handling and report contents of the experiment layer.

use std::path::Path;

use kdvb_lab::evolution::evolve;
use kdvb_lab::experiment::{self, content_hash, random_smooth_state, Command, ExperimentConfig};
use kdvb_lab::{build_operator, Error, Grid, OperatorKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simulate_config(initial: &str, n: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        "name = \"sim\"\ncommand = \"simulate\"\ninitial = \"{initial}\"\nseed = 5\n[grid]\nL = 1.0\nn = {n}\n[time]\nT = 0.5\nnt = 64\n"
    ))
    .unwrap()
}

#[test]
fn reference_configurations_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let files = experiment::config_files(&dir).unwrap();
    assert_eq!(files.len(), 5);
    for f in files {
        let cfg = ExperimentConfig::load(&f).unwrap();
        cfg.validate().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.canonical().unwrap()).unwrap();
        assert_eq!(again, cfg, "{}", f.display());
    }
}

#[test]
fn zero_data_gives_an_all_zero_norm_table() {
    let report = experiment::run(&simulate_config("zero", 32)).unwrap();
    let norms = report.table("norms").unwrap();
    assert_eq!(norms.rows.len(), 65);
    assert!(norms.column("l2").unwrap().iter().all(|&v| v == 0.0));
    assert!(norms.column("h1").unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn norm_table_matches_a_direct_evolution_bitwise() {
    let cfg = simulate_config("random", 32);
    let report = experiment::run(&cfg).unwrap();
    let g = Grid::symmetric(1.0, 32).unwrap();
    let u0 = random_smooth_state(&g, &mut ChaCha8Rng::seed_from_u64(cfg.seed), 8);
    let traj = evolve(
        &build_operator(&g, OperatorKind::Forward).unwrap(),
        &u0,
        0.0,
        0.5,
        64,
    )
    .unwrap();
    assert_eq!(
        report.table("norms").unwrap().column("l2").unwrap(),
        traj.norms()
    );
    assert_eq!(report.command, Command::Simulate);
}

#[test]
fn the_hash_tracks_the_configuration() {
    let a = experiment::run(&simulate_config("zero", 16)).unwrap();
    let mut cfg = simulate_config("zero", 16);
    cfg.seed = 6;
    let b = experiment::run(&cfg).unwrap();
    assert_ne!(a.input_hash, b.input_hash);
    assert_eq!(
        a.input_hash,
        content_hash(simulate_config("zero", 16).canonical().unwrap().as_bytes())
    );
}

#[test]
fn validation_names_the_offending_field() {
    let field = |text: &str| match ExperimentConfig::from_toml(text).and_then(|c| c.validate()) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a configuration error, got {other:?}"),
    };
    let base = "name = \"x\"\ncommand = \"observability\"\nseed = 1\n[time]\nT = 1.0\nnt = 8\n";
    assert_eq!(
        field(&format!("{base}[grid]\nL = 1.0\nn = 2\n[omega]\nl = 0.5\n")),
        "grid.n"
    );
    assert_eq!(field(&format!("{base}[grid]\nL = 1.0\nn = 16\n")), "omega");
    assert!(
        ExperimentConfig::from_toml(&format!("{base}[grid]\nL = 1.0\nn = 16\nbogus = 1\n"))
            .is_err()
    );
}

#[test]
fn report_files_are_written_with_lf_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = experiment::run(&simulate_config("first-mode", 16)).unwrap();
    report.write(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    assert!(csv.starts_with("t,l2,h1\n"));
    assert!(!csv.contains('\r'));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["name"], "sim");
    assert!(json.get("wall_clock_seconds").is_none());
    assert!(dir.path().join("timing.json").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_text_round_trips(n in 8usize..4096, nt in 1usize..10_000, l in 0.1f64..10.0, seed in any::<u64>()) {
        let mut cfg = simulate_config("random", n);
        cfg.grid.half_length = l;
        cfg.time.nt = nt;
        cfg.seed = seed;
        let text = cfg.canonical().unwrap();
        prop_assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg.clone());
        prop_assert_eq!(text, cfg.canonical().unwrap());
    }
}
