use std::fs;
use std::path::Path;

use jjtunnel::harness::{
    config_hash, emit_results, run_experiment, run_ramp, run_sweep, ExperimentResult, ExperimentSpec, Mode, SweepAxis,
};
use proptest::prelude::*;

fn short_ramp(mode: Mode, dir: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(mode);
    spec.bias.i0 = 0.97;
    spec.bias.di_dt = 1e-4;
    spec.stop.t_max = Some(300.0);
    spec.output.stride = 20;
    spec.output.dir = dir.to_string_lossy().into_owned();
    spec
}

fn sweep_spec(dir: &Path, workers: usize) -> ExperimentSpec {
    let mut spec = short_ramp(Mode::Sweep, dir);
    spec.sweep.workers = workers;
    spec.sweep.axis = vec![
        SweepAxis {
            name: "eta".into(),
            values: vec![0.0, 0.01],
        },
        SweepAxis {
            name: "omega_mw_rel".into(),
            values: vec![0.45, 0.5],
        },
    ];
    spec
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "manifest.json" {
                let name = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((name, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    let spec_one = sweep_spec(one.path(), 1);
    let spec_many = sweep_spec(many.path(), 4);
    let a = run_sweep(&spec_one).unwrap();
    let b = run_sweep(&spec_many).unwrap();
    assert_eq!(a.cells, b.cells);

    emit_results(&ExperimentResult::Sweep(a.clone()), &spec_one, 0.0).unwrap();
    emit_results(&ExperimentResult::Sweep(b), &spec_many, 0.0).unwrap();
    let tree_a = read_tree(&one.path().join("sweep"));
    let tree_b = read_tree(&many.path().join("sweep"));
    let (names_a, names_b): (Vec<_>, Vec<_>) = (
        tree_a.iter().map(|(n, _)| n.clone()).collect(),
        tree_b.iter().map(|(n, _)| n.clone()).collect(),
    );
    assert_eq!(names_a, names_b);
    for ((name, x), (_, y)) in tree_a.iter().zip(&tree_b) {
        if name != "config.toml" {
            assert!(x == y, "{name} differs");
        }
    }

    let cell_dirs = fs::read_dir(one.path().join("sweep"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .count();
    assert_eq!(cell_dirs, a.cells.len());
    assert_eq!(a.cells.len(), 4);
}

#[test]
fn single_cell_sweep_equals_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut sweep = sweep_spec(dir.path(), 1);
    sweep.sweep.axis = vec![SweepAxis {
        name: "eta".into(),
        values: vec![0.01],
    }];
    let mut single = short_ramp(Mode::Ramp, dir.path());
    single.drive.eta = 0.01;
    let cell = run_sweep(&sweep).unwrap().cells.remove(0);
    assert_eq!(cell.params, vec![("eta".to_string(), 0.01)]);
    assert_eq!(cell.outcome.unwrap(), run_ramp(&single).unwrap());
}

#[test]
fn failing_cell_is_recorded_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = sweep_spec(dir.path(), 2);
    // The fixed grid starts too close to the low-bias well for its ground state.
    spec.grid.phi_lo = Some(0.0);
    spec.grid.phi_hi = Some(48.0);
    spec.sweep.axis = vec![SweepAxis {
        name: "I0".into(),
        values: vec![0.97, 0.5],
    }];
    let (result, wall) = run_experiment(&spec).unwrap();
    assert_eq!(result.exit_code(), 3);
    let manifest = emit_results(&result, &spec, wall).unwrap();
    assert_eq!(manifest.cells.len(), 2);
    assert!(manifest.cells[0].error.is_none() && manifest.cells[0].summary.is_some());
    assert!(manifest.cells[1].error.as_deref().unwrap().contains("grid"));
    let cell = fs::read_to_string(dir.path().join("sweep/I0=0.5/cell.json")).unwrap();
    assert!(cell.contains("\"error\""));
}

#[test]
fn ramp_outputs_have_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let spec = short_ramp(Mode::Ramp, dir.path());
    let (result, wall) = run_experiment(&spec).unwrap();
    assert_eq!(result.exit_code(), 0);
    let manifest = emit_results(&result, &spec, wall).unwrap();
    let run_dir = dir.path().join("ramp/I0=0.97_dIdt=0.0001_eta=0_omega_mw_rel=0");
    let trajectory = fs::read_to_string(run_dir.join("trajectory.csv")).unwrap();
    assert_eq!(
        trajectory.lines().next().unwrap(),
        "t,I,norm2,gamma_t,phi_mean,tunnel_loss,friction_loss"
    );
    let distribution = fs::read_to_string(run_dir.join("distribution.csv")).unwrap();
    assert_eq!(distribution.lines().next().unwrap(), "axis,density");
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("distribution.json")).unwrap()).unwrap();
    for key in ["kind", "total_mass", "peak", "fwhm"] {
        assert!(sidecar.get(key).is_some(), "missing {key}");
    }
    let first_row = trajectory.lines().nth(1).unwrap();
    let digits = first_row.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(digits.chars().filter(char::is_ascii_digit).count(), 17);
    assert_eq!(manifest.files.len(), 4);
    let on_disk: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ramp/manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk["config_hash"], manifest.config_hash);
}

#[test]
fn rerun_reproduces_hash_and_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = short_ramp(Mode::CompareCl, dir.path());
    let text = spec.to_toml();
    let reloaded = ExperimentSpec::from_toml(&text).unwrap();
    assert_eq!(config_hash(&spec), config_hash(&reloaded));
    let (first, _) = run_experiment(&spec).unwrap();
    emit_results(&first, &spec, 0.0).unwrap();
    let before = read_tree(&dir.path().join("compare_cl"));
    let (second, _) = run_experiment(&reloaded).unwrap();
    let manifest = emit_results(&second, &reloaded, 0.0).unwrap();
    assert_eq!(manifest.config_hash, config_hash(&spec));
    assert_eq!(before, read_tree(&dir.path().join("compare_cl")));
}

#[test]
fn calibration_without_plateau_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Mode::Calibrate);
    spec.output.dir = dir.path().to_string_lossy().into_owned();
    spec.calibrate.beta_lo = 1e-9;
    spec.calibrate.beta_hi = 1e-8;
    spec.calibrate.per_decade = 1;
    spec.calibrate.duration = 300.0;
    let (result, wall) = run_experiment(&spec).unwrap();
    assert_eq!(result.exit_code(), 2);
    let manifest = emit_results(&result, &spec, wall).unwrap();
    let table = fs::read_to_string(dir.path().join("calibrate/I_ref=0.98/calibration.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "beta,fitted_rate,cl_ratio");
    assert_eq!(table.lines().count(), 3);
    assert!(!manifest.files.iter().any(|f| f.ends_with("calibration.json")));
}

#[test]
fn minimal_file_is_echoed_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "mode = \"ramp\"\n[junction]\nomega0 = 0.02\n").unwrap();
    let spec = jjtunnel::harness::load_config(&path).unwrap();
    assert_eq!(spec.junction.omega0, 0.02);
    assert_eq!(spec, ExperimentSpec::from_toml(&spec.to_toml()).unwrap());
    fs::write(&path, "mode = \"ramp\"\n[bias]\nI0 = 1.2\n").unwrap();
    let err = jjtunnel::harness::load_config(&path).unwrap_err();
    assert!(err.to_string().contains("I0 ∈ (0,1)"));
    assert_eq!(err.exit_code(), 1);
}

fn any_mode() -> impl Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::Ramp),
        Just(Mode::ConstantBias),
        Just(Mode::GroundState),
        Just(Mode::CompareCl),
        Just(Mode::Calibrate),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn resolved_config_round_trips(
        mode in any_mode(),
        omega0 in 1e-3f64..0.1,
        zeta in 0.0f64..1e-2,
        beta in 1e-8f64..1.0,
        i0 in 0.5f64..0.97,
        di_dt in 1e-7f64..1e-3,
        eta in 0.0f64..0.05,
        omega_mw_rel in 0.01f64..1.0,
        dt in 0.01f64..0.5,
        stride in 1usize..500,
        t_max in prop::option::of(1.0f64..1e6),
    ) {
        prop_assume!(mode != Mode::ConstantBias || t_max.is_some());
        let mut spec = ExperimentSpec::new(mode);
        spec.junction.omega0 = omega0;
        spec.junction.zeta = zeta;
        spec.junction.beta = beta;
        spec.bias.i0 = i0;
        spec.bias.di_dt = di_dt;
        spec.drive.eta = eta;
        spec.drive.omega_mw_rel = omega_mw_rel;
        spec.numerics.dt = dt;
        spec.output.stride = stride;
        spec.stop.t_max = t_max;
        let reloaded = ExperimentSpec::from_toml(&spec.to_toml()).unwrap();
        prop_assert_eq!(&reloaded, &spec);
        prop_assert_eq!(config_hash(&reloaded), config_hash(&spec));
    }
}
