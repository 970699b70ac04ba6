use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlvms_cli::output::read_grid;
use mlvms_cli::study::{run, ConvergenceRow};
use mlvms_cli::{estimate_optimal_ratio, fit_error_coefficients, CliError, FitRow, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/configs").join(name)
}

fn mlvms(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlvms"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn metrics(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

#[test]
fn optimal_ratio_formula() {
    for h_c in [1.0, 0.3, 0.01] {
        assert_eq!(estimate_optimal_ratio(1.0, 81.0, 4, 4, h_c), 3);
        assert_eq!(estimate_optimal_ratio(2.0, 50.0, 3, 3, h_c), estimate_optimal_ratio(2.0, 50.0, 3, 3, 1.0));
    }
    let mut h = 1.0;
    let mut last = usize::MAX;
    for _ in 0..8 {
        let n = estimate_optimal_ratio(1.0, 1e4, 3, 5, h);
        assert!(n <= last);
        last = n;
        h /= 2.0;
    }
    assert_eq!(last, 1);
    // (C_f/C_c)^{1/p_f} h_c^{(p_f-p_c)/p_f} = 10^{4/5} 0.5^{2/5} = 4.78
    assert_eq!(estimate_optimal_ratio(1.0, 1e4, 3, 5, 0.5), 5);
}

fn synthetic(c_c: f64, c_f: f64, noise: f64, seed: u64) -> Vec<FitRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for h_c in [0.5f64, 0.25, 0.125] {
        for n in [1.0, 2.0, 4.0, 8.0] {
            let h_f = h_c / n;
            let e = c_c * h_c.powi(2) + c_f * h_f.powi(4);
            rows.push(FitRow { h_c, h_f, err: e * (1.0 + noise * rng.gen_range(-1.0..1.0)) });
        }
    }
    rows
}

#[test]
fn fit_recovers_synthetic_coefficients() {
    for seed in 0..5 {
        let fit = fit_error_coefficients(&synthetic(2.0, 50.0, 0.01, seed), 2, 4).unwrap();
        assert!((fit.c_c - 2.0).abs() < 0.2 && (fit.c_f - 50.0).abs() < 5.0, "{fit:?}");
        assert!(fit.residual < 0.02);
    }
    let exact = fit_error_coefficients(&synthetic(2.0, 50.0, 0.0, 0), 2, 4).unwrap();
    assert!((exact.c_c - 2.0).abs() < 1e-10 && (exact.c_f - 50.0).abs() < 1e-8 && exact.residual < 1e-12);
}

#[test]
fn fit_stays_nonnegative() {
    let rows: Vec<FitRow> = synthetic(3.0, 0.0, 0.0, 0).into_iter().map(|r| FitRow { err: r.err * (1.0 - 0.1 * r.h_f), ..r }).collect();
    let fit = fit_error_coefficients(&rows, 2, 4).unwrap();
    assert!(fit.c_c > 0.0 && fit.c_f >= 0.0);
}

#[test]
fn fit_rejects_degenerate_rows() {
    let one_ratio: Vec<FitRow> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| FitRow { h_c: h, h_f: h / 2.0, err: h * h }).collect();
    assert!(matches!(fit_error_coefficients(&one_ratio, 2, 2), Err(CliError::Solver(_))));
    assert!(matches!(fit_error_coefficients(&one_ratio[..3], 2, 4), Err(CliError::Config(_))));
}

#[test]
fn config_rejects_bad_input() {
    let base = std::fs::read_to_string(config("poisson2l.toml")).unwrap();
    assert!(RunConfig::from_toml(&base).is_ok());
    let cases = [
        (base.replace("poisson2d", "wave"), 2),
        (base.replace("h = [0.5, 0.5]", "h = [0.5]"), 2),
        (base.replace("factors = [1, 2, 4]", "factors = [1, 2]"), 2),
        (base.replace("s = 3\np = 3\n\n[ladder]", "s = 1\np = 3\n\n[ladder]"), 3),
        (base.replace("upper = [14.0, 14.0]", "upper = [24.0, 14.0]"), 3),
        (base.replace("problem = \"poisson2d\"", "problem = \"poisson2d\"\nsolver = \"td\""), 2),
    ];
    for (text, code) in cases {
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert_eq!(err.exit_code(), code, "{err}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "problem = 3").unwrap();
    assert_eq!(mlvms(&["solve", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(mlvms(&["solve", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(5));
    let text = std::fs::read_to_string(config("heat1d.toml")).unwrap().replace("modes = 4", "modes = 2");
    let td = dir.path().join("td.toml");
    std::fs::write(&td, text).unwrap();
    let out = mlvms(&["solve", "--config", td.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let coarse = std::fs::read_to_string(config("heat1d.toml")).unwrap().replace("h = [0.125, 0.5]", "h = [0.125, 1.0]");
    let mesh = dir.path().join("mesh.toml");
    std::fs::write(&mesh, coarse).unwrap();
    assert_eq!(mlvms(&["solve", "--config", mesh.to_str().unwrap()], dir.path()).status.code(), Some(3));
    assert_eq!(mlvms(&["lpbf", "--scale", "paper"], dir.path()).status.code(), Some(2));
}

#[test]
fn solve_writes_metrics_and_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlvms(&["solve", "--config", config("poisson2l.toml").to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = metrics(dir.path());
    let energy = m["errors"]["energy"].as_f64().unwrap();
    assert!(energy > 0.0 && energy.is_finite());
    assert_eq!(m["storage_bytes"].as_u64().unwrap(), 8 * m["dofs"].as_u64().unwrap());

    let cfg = RunConfig::load(&config("poisson2l.toml")).unwrap();
    let run = run(&cfg).unwrap();
    assert_eq!(run.norms.unwrap().energy, energy);
    for st in &run.states {
        let text = std::fs::read_to_string(dir.path().join(format!("level_{}.grid", st.level + 1))).unwrap();
        let (axes, values) = read_grid(&text).unwrap();
        assert_eq!(axes.len(), 2);
        assert_eq!(axes[0], st.basis.axis_basis(0).axis().nodes());
        assert_eq!(values, st.nodal());
    }
}

fn strip_time(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(4);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn converge_csv_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let path = config("heat1d.toml");
    let run_a = mlvms(&["converge", "--config", path.to_str().unwrap(), "--seed", "7"], a.path());
    mlvms(&["converge", "--config", path.to_str().unwrap(), "--seed", "7"], b.path());
    assert!(run_a.status.success());
    let stdout = String::from_utf8_lossy(&run_a.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("slope ")), "{stdout}");
    let ca = std::fs::read_to_string(a.path().join("convergence.csv")).unwrap();
    let cb = std::fs::read_to_string(b.path().join("convergence.csv")).unwrap();
    assert_eq!(ca.lines().next().unwrap(), "h1,dofs,err_l2,err_energy,time_s,iters,storage_bytes");
    assert!(ca.lines().count() >= 4);
    assert_eq!(strip_time(&ca), strip_time(&cb));
    let m = metrics(a.path());
    assert!(m["slope_l2"].as_f64().unwrap() > 2.5);
}

#[test]
fn reduced_order_rows_follow_dof_identity() {
    let cfg = RunConfig::load(&config("heat1d.toml")).unwrap();
    let out = run(&cfg).unwrap();
    let row = ConvergenceRow::from_outcome(&cfg, &out).unwrap();
    let expect: usize = cfg
        .levels
        .iter()
        .map(|l| {
            let nodes: usize = (0..2).map(|d| ((l.upper[d] - l.lower[d]) / l.h[d]).round() as usize + 1).sum();
            l.modes.unwrap() * nodes
        })
        .sum();
    assert_eq!(row.dofs, expect);
    assert_eq!(row.storage_bytes, 8 * expect);
    assert!(row.err_l2 >= 0.0 && row.err_energy >= 0.0);
}

#[test]
fn lpbf_heats_the_track_centre() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlvms(&["lpbf", "--config", config("track.toml").to_str().unwrap(), "--scale", "desk"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = metrics(dir.path());
    assert!(m["centre"].as_f64().unwrap() > 298.15);
    assert!(m["peak"].as_f64().unwrap() >= m["centre"].as_f64().unwrap());
    assert!(dir.path().join("level_1.grid").exists());
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlvms(&["verify"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}
