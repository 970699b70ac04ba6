use mlvms::mesh::{HyperParams, LevelSpec, MultilevelMesh};
use mlvms::mlvms::{composite_eval, solve_m_level, solve_two_level, Backend, SolveSettings};
use mlvms::problems::{AxisFn, ManufacturedProblem, SepTerm, SeparatedFn};
use mlvms::td::TdSettings;

#[path = "support/linear_fe.rs"]
mod linear_fe;

use linear_fe::{poly_problem, reference_two_level, Grid};

fn constant_problem(c: f64) -> ManufacturedProblem<f64> {
    let mut p = poly_problem();
    p.exact = Some(SeparatedFn { terms: vec![SepTerm { coef: c, factors: vec![AxisFn::constant(1.0); 2] }] });
    p.source = SeparatedFn { terms: vec![SepTerm { coef: 0.0, factors: vec![AxisFn::constant(1.0); 2] }] };
    p
}

fn spec(lo: [f64; 2], hi: [f64; 2], h: f64, hyper: HyperParams<f64>) -> LevelSpec<f64> {
    LevelSpec { lower: lo.to_vec(), upper: hi.to_vec(), h: vec![h, h], hyper, modes: None }
}

fn tight() -> SolveSettings {
    SolveSettings { tol: 1e-13, max_iter: 200, ..SolveSettings::default() }
}

#[test]
fn linear_two_level_matches_reference() {
    let p = poly_problem();
    for (ratio, lo, hi) in [(2usize, [0.25, 0.25], [0.75, 0.5]), (3, [0.125, 0.375], [0.5, 0.875])] {
        let hc = 0.125;
        let hf = hc / ratio as f64;
        let lin = HyperParams::linear();
        let mh = MultilevelMesh::new(vec![spec([0.0, 0.0], [1.0, 1.0], hc, lin), spec(lo, hi, hf, lin)]).unwrap();
        let (states, rep) = solve_two_level(&p, &mh, &tight()).unwrap();
        assert!(rep.converged);
        let coarse = Grid { lo: [0.0, 0.0], h: hc, n: [8, 8] };
        let nf = [((hi[0] - lo[0]) / hf).round() as usize, ((hi[1] - lo[1]) / hf).round() as usize];
        let fine = Grid { lo, h: hf, n: nf };
        let (uc, uf) = reference_two_level(&p, coarse, fine, 1e-13);
        for (got, want) in [(states[0].nodal(), uc), (states[1].nodal(), uf)] {
            let err = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-9, "ratio {ratio}: max nodal difference {err:e}");
        }
    }
}

#[test]
fn m_equal_two_matches_two_level_bitwise() {
    let p = poly_problem();
    let hyper = HyperParams::new(5.0, 2, 3).unwrap();
    let mh = MultilevelMesh::new(vec![
        spec([0.0, 0.0], [1.0, 1.0], 1.0 / 16.0, hyper),
        spec([0.25, 0.25], [0.75, 0.75], 1.0 / 32.0, hyper),
    ])
    .unwrap();
    let s = SolveSettings::default();
    let (a, ra) = solve_two_level(&p, &mh, &s).unwrap();
    let (b, rb) = solve_m_level(&p, &mh, &s).unwrap();
    assert_eq!(ra, rb);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.field, y.field);
    }
    let three = MultilevelMesh::new(vec![
        spec([0.0, 0.0], [1.0, 1.0], 0.25, hyper),
        spec([0.0, 0.0], [0.5, 0.5], 0.125, hyper),
        spec([0.125, 0.125], [0.375, 0.375], 0.0625, hyper),
    ])
    .unwrap();
    assert!(solve_two_level(&p, &three, &s).is_err());
}

#[test]
fn linear_ratio_one_equals_single_level() {
    let p = poly_problem();
    let lin = HyperParams::linear();
    let h = 0.0625;
    let single = MultilevelMesh::new(vec![spec([0.0, 0.0], [1.0, 1.0], h, lin)]).unwrap();
    let two = MultilevelMesh::new(vec![spec([0.0, 0.0], [1.0, 1.0], h, lin), spec([0.25, 0.5], [0.75, 0.875], h, lin)]).unwrap();
    let (one, _) = solve_m_level(&p, &single, &SolveSettings::default()).unwrap();
    let (both, rep) = solve_m_level(&p, &two, &tight()).unwrap();
    assert!(rep.converged);
    for k in 0..40 {
        let x = [0.013 + 0.97 * ((k * 7) % 40) as f64 / 40.0, 0.02 + 0.96 * k as f64 / 40.0];
        let a = one[0].eval(&x).unwrap();
        let b = composite_eval(&both, &x).unwrap();
        assert!((a - b).abs() < 1e-11, "at {x:?}: {a} vs {b}");
    }
}

#[test]
fn zero_data_gives_zero() {
    let p = constant_problem(0.0);
    let hyper = HyperParams::new(5.0, 2, 3).unwrap();
    let mh = MultilevelMesh::new(vec![
        spec([0.0, 0.0], [1.0, 1.0], 0.125, hyper),
        spec([0.25, 0.25], [0.75, 0.75], 0.0625, hyper),
    ])
    .unwrap();
    let (st, _) = solve_m_level(&p, &mh, &SolveSettings::default()).unwrap();
    assert!(st.iter().all(|s| s.nodal().iter().all(|&v| v == 0.0)));
}

#[test]
fn constant_data_reproduced() {
    let p = constant_problem(2.5);
    let hyper = HyperParams::new(5.0, 2, 3).unwrap();
    let mh = MultilevelMesh::new(vec![
        spec([0.0, 0.0], [1.0, 1.0], 0.125, hyper),
        spec([0.25, 0.25], [0.75, 0.75], 0.0625, hyper),
        spec([0.375, 0.375], [0.625, 0.5], 0.03125, hyper),
    ])
    .unwrap();
    let (st, rep) = solve_m_level(&p, &mh, &SolveSettings::default()).unwrap();
    assert!(rep.converged);
    for s in &st {
        assert!(s.nodal().iter().all(|&v| (v - 2.5).abs() < 1e-10));
    }
    assert!((composite_eval(&st, &[0.41, 0.47]).unwrap() - 2.5).abs() < 1e-10);
}

#[test]
fn quadratic_solution_is_exact_on_every_level() {
    // p = 3 reproduces the quadratic exact solution on each level
    let p = poly_problem();
    let hyper = HyperParams::new(5.0, 2, 3).unwrap();
    let mh = MultilevelMesh::new(vec![
        spec([0.0, 0.0], [1.0, 1.0], 0.125, hyper),
        spec([0.25, 0.25], [0.75, 0.75], 0.0625, hyper),
    ])
    .unwrap();
    for backend in [Backend::Full, Backend::Td(TdSettings::default())] {
        let mut mh = mh.clone();
        if matches!(backend, Backend::Td(_)) {
            let mut specs: Vec<_> = mh.levels().iter().map(|l| l.spec.clone()).collect();
            specs[0].modes = Some(1);
            specs[1].modes = Some(3);
            mh = MultilevelMesh::new(specs).unwrap();
        }
        let s = SolveSettings { backend, tol: 1e-10, ..SolveSettings::default() };
        let (st, _) = solve_m_level(&p, &mh, &s).unwrap();
        for k in 0..25 {
            let x = [0.03 + 0.94 * ((k * 3) % 25) as f64 / 25.0, 0.01 + 0.97 * k as f64 / 25.0];
            let want = p.exact_at(&x).unwrap();
            assert!((composite_eval(&st, &x).unwrap() - want).abs() < 1e-7);
        }
    }
}
