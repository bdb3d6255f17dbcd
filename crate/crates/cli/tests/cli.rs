use std::path::Path;
use std::process::{Command, Output};

use hypermetric::closed_forms::{radial_density, RadialMetricFamily};
use hypermetric::{Complex64, Grid};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypermetric"))
        .args(args)
        .env("HYPERMETRIC_THREADS", "1")
        .output()
        .expect("spawn hypermetric")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn load(csv: &Path, header: &Path) -> Grid {
    let header = std::fs::File::open(header).unwrap();
    let csv = std::io::BufReader::new(std::fs::File::open(csv).unwrap());
    Grid::read(header, csv).unwrap()
}

#[test]
fn agard_at_minus_one() {
    let out = run(&["agard", "--point", "-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 0.228_473_290_5).abs() < 1e-9, "{v}");

    let out = run(&["agard", "--grid", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let row = stdout(&out)
        .lines()
        .find(|l| l.starts_with("-1.0000000000000000e0,0.0000000000000000e0,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .unwrap();
    assert!((row - v.ln()).abs() < 1e-12);
}

#[test]
fn solve_disk_center_value() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, header, report) = (dir.path().join("u.csv"), dir.path().join("u.json"), dir.path().join("r.json"));
    let out = run(&[
        "solve-disk",
        "--constant-boundary",
        "0.6931",
        "--spacing",
        "0.0078125",
        "--out",
        path(&csv),
        "--header",
        path(&header),
        "--report",
        path(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let grid = load(&csv, &header);
    let (i, j) = grid.nearest_node(Complex64::new(0.0, 0.0)).unwrap();
    // radial solution 2R/(R^2 - |z|^2) with 2R/(R^2 - 1) = e^0.6931
    let e = 0.6931f64.exp();
    let r = (1.0 + (1.0 + e * e).sqrt()) / e;
    let exact = (2.0 / r).ln();
    assert!((grid.value(i, j) - exact).abs() < 1e-4, "{} vs {exact}", grid.value(i, j));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
}

#[test]
fn annulus_grid_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, header) = (dir.path().join("a.csv"), dir.path().join("a.json"));
    let out = run(&[
        "density", "--family", "annulus", "--r", "0.2", "--R", "1", "--grid", "256", "--out", path(&csv),
        "--header", path(&header),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y,value\n"));

    let grid = load(&csv, &header);
    let (i, j) = grid.nearest_node(Complex64::new(0.447, 0.0)).unwrap();
    let z = grid.point(i, j);
    let exact = radial_density(RadialMetricFamily::Annulus { inner: 0.2, outer: 1.0 })
        .unwrap()
        .eval(z)
        .unwrap();
    assert!((grid.value(i, j) - exact).abs() <= 1e-12 * exact);
}

#[test]
fn emitted_grid_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, header) = (dir.path().join("d.csv"), dir.path().join("d.json"));
    let out = run(&[
        "density", "--family", "disk", "--R", "1", "--grid", "32", "--out", path(&csv), "--header", path(&header),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let grid = load(&csv, &header);
    let exact = radial_density(RadialMetricFamily::Disk { radius: 1.0 }).unwrap();
    let density = grid.clone().into_density(exact.domain().clone(), "reloaded");
    let mut checked = 0;
    for k in 0..grid.len() {
        if grid.mask()[k] == hypermetric::NodeKind::Outside {
            continue;
        }
        let z = grid.point_at(k);
        assert_eq!(density.eval(z).unwrap(), grid.values()[k]);
        assert_eq!(grid.values()[k], exact.eval(z).unwrap());
        checked += 1;
    }
    assert!(checked > 3000);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = vec![];
    for k in 0..2 {
        let (csv, state) = (dir.path().join(format!("p{k}.csv")), dir.path().join(format!("s{k}.json")));
        let out = run(&[
            "perron", "--annulus", "0.3", "1", "--spacing", "0.0625", "--tol", "1e-3", "--out", path(&csv),
            "--state", path(&state),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(&state).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let a = stdout(&run(&["curvature", "--family", "agard", "--random", "5", "--bbox", "-2,-2,2,2"]));
    let b = stdout(&run(&["curvature", "--family", "agard", "--random", "5", "--bbox", "-2,-2,2,2", "--seed", "1"]));
    let c = stdout(&run(&["curvature", "--family", "agard", "--random", "5", "--bbox", "-2,-2,2,2", "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn perron_snapshots_are_written_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = dir.path().join("snaps");
    let state = dir.path().join("state.json");
    let out = run(&[
        "perron", "--hole", "0.2,0.1,0.2", "--spacing", "0.0625", "--tol", "1e-3", "--out",
        path(&dir.path().join("p.csv")), "--state", path(&state), "--snapshots", path(&snaps),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let state: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&state).unwrap()).unwrap();
    let sweeps = state["sweep_count"].as_u64().unwrap() as usize;
    assert_eq!(std::fs::read_dir(&snaps).unwrap().count(), sweeps);
}

#[test]
fn exit_codes() {
    // validation: bad domain parameters, clap errors, unbounded sampling
    assert_eq!(run(&["density", "--family", "annulus", "--r", "2", "--R", "1", "--point", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["density", "--family", "nonsense", "--point", "0"]).status.code(), Some(2));
    assert_eq!(run(&["density", "--family", "agard", "--grid", "8"]).status.code(), Some(2));
    assert_eq!(run(&["agard", "--point", "1"]).status.code(), Some(2));
    // non-convergence
    let out = run(&["perron", "--annulus", "0.2", "1", "--spacing", "0.0625", "--tol", "1e-12", "--max-sweeps", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["solve-disk", "--constant-boundary", "0", "--spacing", "0.0625", "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
    // io
    let out = run(&["density", "--family", "disk", "--grid", "8", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
