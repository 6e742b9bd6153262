use std::path::PathBuf;

use metawave::config::{parse_config, RunConfig};
use metawave::output::read_snapshot_csv;
use metawave::{run_scenario, BoundaryKind, Medium, Pairing, Source};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn every_scenario_file_is_valid() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg =
                RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let mesh = cfg.mesh().unwrap();
            assert!(cfg.material(&mesh).unwrap().validate().is_valid());
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn slab_file_reproduces_experiment_parameters() {
    let cfg = RunConfig::from_file(&scenarios().join("slab_mu18.json")).unwrap();
    assert_eq!(cfg.domain, [0.0, 0.0, 2.0, 2.0]);
    assert_eq!(cfg.n, 50);
    assert_eq!(cfg.pairing, Pairing::Rtn1);
    assert_eq!(cfg.time_step(), 0.002);
    assert_eq!(cfg.time_grid().unwrap().n_steps(), 200);
    assert_eq!(cfg.material.omega_rho, 40.0);
    assert_eq!(cfg.material.omega_kappa, 40.0);
    assert_eq!(cfg.material.regions.len(), 1);
    let slab = &cfg.material.regions[0];
    assert_eq!(slab.rect, [0.6, 0.0, 0.8, 2.0]);
    assert_eq!((slab.cap_omega_rho, slab.cap_omega_kappa), (80.0, 80.0));
    assert_eq!(cfg.boundary.len(), 1);
    assert_eq!(cfg.boundary[0].kind, BoundaryKind::Dirichlet);
    assert_eq!(
        cfg.boundary[0].source.source().unwrap(),
        Source::CornerPlane { mu_f: 18.0 }
    );
    assert_eq!(cfg.snapshot_steps().unwrap(), vec![100, 200]);

    let mesh = cfg.mesh().unwrap();
    let mat = cfg.material(&mesh).unwrap();
    for c in 0..mesh.num_cells() {
        let x = mesh.cell_centroid(c);
        let inside = (0.6..=0.8).contains(&x[0]);
        assert_eq!(mat.medium(c) == Medium::Nim, inside, "cell {c} at {x:?}");
    }
}

const TINY: &str = r#"{
  "domain": [0, 0, 1, 1], "n": 4, "pairing": "bdm1", "t_final": 0.05, "dt": 0.0125,
  "material": {"omega_rho": 2, "omega_kappa": 3, "gamma": 0.1,
               "regions": [{"name": "s", "rect": [0.25, 0, 0.75, 1], "cap_omega_rho": 2, "cap_omega_kappa": 1}]},
  "boundary": [{"name": "left", "sides": ["left"], "source": {"name": "left_gaussian"}},
               {"name": "wall", "kind": "neumann", "sides": ["top", "bottom"]},
               {"name": "open"}],
  "output": {"snapshot_times": [0.025, 0.05], "formats": ["vtk", "csv"], "velocity": true}
}"#;

#[test]
fn identical_config_gives_identical_bytes() {
    let cfg = parse_config(TINY).unwrap();
    let base = std::env::temp_dir().join(format!("metawave-determinism-{}", std::process::id()));
    let (a, b) = (base.join("a"), base.join("b"));
    let ra = run_scenario(&cfg, Some(&a)).unwrap();
    run_scenario(&cfg, Some(&b)).unwrap();
    assert_eq!(ra.snapshots.len(), 4);
    for p in &ra.snapshots {
        let name = p.file_name().unwrap();
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
    let csv = std::fs::read(a.join("snapshot_000004.csv")).unwrap();
    let p = read_snapshot_csv(&csv[..]).unwrap();
    assert_eq!(p.len(), 32);
    assert!(p.iter().any(|v| *v != 0.0));
    std::fs::remove_dir_all(&base).unwrap();
}

#[test]
fn runs_without_output_directory() {
    let cfg = parse_config(TINY).unwrap();
    let r = run_scenario(&cfg, None).unwrap();
    assert!(r.snapshots.is_empty());
    assert_eq!(r.steps, 4);
}
