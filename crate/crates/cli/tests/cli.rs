use std::path::Path;
use std::process::{Command, Output};

use parafd_cli::dump::parse_field_dump;
use parafd_cli::study::CSV_HEADER;

fn parafd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parafd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn csv_rows(dir: &Path) -> Vec<Vec<String>> {
    let text = read(&dir.join("convergence.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

fn without_wall_clock(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn space_extrapolation_recipe_reproduces_reference_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = parafd(&[
        "--scheme",
        "cds",
        "--re",
        "space",
        "--mesh",
        "8x8x16",
        "--mesh",
        "16x16x64",
        "--out",
        dir.path().to_str().unwrap(),
        "--deterministic",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(dir.path());
    assert_eq!(rows.len(), 20);
    let worst_fine = rows
        .iter()
        .filter(|r| r[3] == "16")
        .map(|r| r[7].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((worst_fine / 2.216e-5 - 1.0).abs() < 0.03, "{worst_fine}");
    assert!(rows[0][8].is_empty() && rows[0][9].is_empty());
    let order: f64 = rows[10][9].parse().unwrap();
    assert!((order - 4.0).abs() < 0.05, "{order}");
    let meta = read(&dir.path().join("metadata.txt"));
    assert!(meta.contains("re=space\n") && meta.contains("git_revision="));
    assert_eq!(std::fs::read_dir(dir.path().join("fields")).unwrap().count(), 2);
}

#[test]
fn deterministic_runs_are_identical_apart_from_wall_clock() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = parafd(&[
            "--scheme",
            "cfds",
            "--mesh",
            "4x4x4",
            "--mesh",
            "8x8x16",
            "--deterministic",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv = |d: &tempfile::TempDir| without_wall_clock(&read(&d.path().join("convergence.csv")));
    assert_eq!(csv(&a), csv(&b));
    let probes = |d: &tempfile::TempDir| read(&d.path().join("probes.csv"));
    assert_eq!(probes(&a), probes(&b));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# coarse airpollution study\nproblem=airpollution\nscheme=cfds\nmesh=4x4x8,8x8x8\nprobe=sixth\nout={}\n",
            dir.path().join("ignored").display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = parafd(&[
        "--config",
        cfg.to_str().unwrap(),
        "--scheme",
        "cds",
        "--mesh",
        "6x6x8",
        "--mesh",
        "12x12x8",
        "--out",
        out_dir.to_str().unwrap(),
        "--no-dumps",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("ignored").exists());
    assert!(!out_dir.join("fields").exists());
    let rows = csv_rows(&out_dir);
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[0] == "airpollution" && r[1] == "cds"));
    // The last mesh is the reference for problems without a closed form.
    assert!(rows[..10].iter().all(|r| !r[7].is_empty()));
    assert!(rows[10..].iter().all(|r| r[7].is_empty() && r[8].is_empty()));
    let probes = read(&out_dir.join("probes.csv"));
    assert_eq!(probes.lines().count(), 21);
    let meta = read(&out_dir.join("metadata.txt"));
    assert!(meta.contains("probe=sixth\n") && meta.contains("mesh=6x6x8,12x12x8\n"));
}

#[test]
fn airpollution_dump_has_plateau_and_bounded_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = parafd(&[
        "--problem",
        "airpollution",
        "--mesh",
        "32x32x32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = parse_field_dump(&read(&dir.path().join("fields/cds_none_32x32x32.txt"))).unwrap();
    assert_eq!(dump.t, 1440.0);
    assert_eq!(dump.species.len(), 10);
    let u1 = &dump.species[0];
    assert_eq!(u1.len(), 33 * 33);
    let on_boundary = |x: f64, y: f64| x == 0.0 || y == 0.0 || x == 500.0 || y == 500.0;
    let const_1 = 500.0;
    for &(x, y, v) in u1 {
        if on_boundary(x, y) {
            assert!(v > 0.0 && v <= 3.0 * const_1 + 1e-9, "boundary value {v} at ({x}, {y})");
        }
    }
    let centre = u1.iter().find(|r| r.0 == 250.0 && r.1 == 250.0).unwrap().2;
    assert!(centre > 0.5 * 1000.0 && centre < 3.0 * 1000.0, "{centre}");
}

#[test]
fn invalid_configurations_fail_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    for (args, field) in [
        (vec!["--out", o], "mesh"),
        (vec!["--mesh", "4x4x4", "--scheme", "upwind", "--out", o], "scheme"),
        (vec!["--mesh", "4x4x4", "--theta", "2", "--out", o], "theta"),
        (vec!["--mesh", "4x4x4", "--cos-theta", "0", "--out", o], "cos_theta"),
        (vec!["--mesh", "4x4x4", "--probe", "sixth", "--out", o], "probe"),
        (vec!["--mesh", "4x4x4", "--re", "time", "--out", o], "re"),
    ] {
        let out = parafd(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("`{field}`")), "{args:?}: {err}");
    }
    assert!(!dir.path().join("convergence.csv").exists());
}

#[test]
fn solver_failure_reports_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = parafd(&[
        "--mesh",
        "8x8x4",
        "--newton-tol",
        "1e-300",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("time step 1"), "{err}");
}
