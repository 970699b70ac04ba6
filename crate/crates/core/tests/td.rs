use mlvms::mesh::{HyperParams, LevelSpec, MultilevelMesh};
use mlvms::mlvms::{MlvmsError, Plan, SolveSettings};
use mlvms::problems::{poisson2d_gaussians, AxisFn, BoundaryKind, ManufacturedProblem, SepTerm, SeparatedFn};
use mlvms::td::{als_solve, error_decomposition_check, random_modes, solve_pgd, solve_td, td_eval, TdError, TdSettings};

/// `u = x(1−x) y(1−y)` with homogeneous Dirichlet data.
fn bubble() -> ManufacturedProblem<f64> {
    let b = || AxisFn::new(|x: f64| x * (1.0 - x), |x| 1.0 - 2.0 * x, |_| -2.0);
    let one = AxisFn::constant(1.0);
    ManufacturedProblem {
        name: "bubble".into(),
        domain: vec![(0.0, 1.0); 2],
        time_dependent: false,
        rho_c: 1.0,
        k: 1.0,
        boundary: vec![[BoundaryKind::Dirichlet; 2]; 2],
        exact: Some(SeparatedFn { terms: vec![SepTerm { coef: 1.0, factors: vec![b(), b()] }] }),
        source: SeparatedFn {
            terms: vec![
                SepTerm { coef: 2.0, factors: vec![one.clone(), b()] },
                SepTerm { coef: 2.0, factors: vec![b(), one] },
            ],
        },
        map: None,
        offset: 0.0,
    }
}

fn level(lo: [f64; 2], hi: [f64; 2], h: f64, q: usize) -> LevelSpec<f64> {
    LevelSpec { lower: lo.to_vec(), upper: hi.to_vec(), h: vec![h, h], hyper: HyperParams::new(5.0, 2, 3).unwrap(), modes: Some(q) }
}

#[test]
fn rank_one_solution_reproduced_with_one_mode() {
    let p = bubble();
    let mh = MultilevelMesh::new(vec![level([0.0, 0.0], [1.0, 1.0], 0.1, 1)]).unwrap();
    let (sol, _) = solve_td(&p, &mh, 1e-8, 1, TdSettings::default()).unwrap();
    assert_eq!(sol.mode_counts(), vec![1]);
    for k in 0..30 {
        let x = [0.01 + 0.98 * ((k * 11) % 30) as f64 / 30.0, 0.005 + 0.99 * k as f64 / 30.0];
        assert!((td_eval(&sol, &x).unwrap() - p.exact_at(&x).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn sweeps_never_raise_the_energy() {
    let p = poisson2d_gaussians::<f64>();
    let mh = MultilevelMesh::new(vec![LevelSpec {
        lower: vec![0.0, 0.0],
        upper: vec![20.0, 20.0],
        h: vec![0.5, 0.5],
        hyper: HyperParams::new(5.0, 3, 3).unwrap(),
        modes: Some(3),
    }])
    .unwrap();
    let plan = Plan::new(&p, &mh, &SolveSettings::default()).unwrap();
    let sys = &plan.levels[0];
    let mut modes = random_modes(3, &sys.shape, &sys.free, 4);
    let settings = TdSettings { track_energy: true, ..TdSettings::default() };
    let rep = als_solve(&sys.op, &sys.load, &sys.free, &mut modes, &settings).unwrap();
    assert!(rep.energy.len() > 2);
    let scale = rep.energy.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    for w in rep.energy.windows(2) {
        assert!(w[1] <= w[0] + 1e-10 * scale, "energy rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn greedy_enrichment_stops_after_second_mode() {
    let p = bubble();
    let mh = MultilevelMesh::new(vec![level([0.0, 0.0], [1.0, 1.0], 0.1, 1)]).unwrap();
    let (sol, rep) = solve_pgd(&p, &mh, 1e-6, 6, TdSettings::default()).unwrap();
    assert_eq!(rep.chosen, Some(2));
    assert_eq!(sol.mode_counts(), vec![2]);
    assert!(rep.enrichment_norms[1] < 1e-6 * rep.enrichment_norms[0]);
}

#[test]
fn mode_counts_must_increase() {
    let p = bubble();
    let mh = MultilevelMesh::new(vec![
        level([0.0, 0.0], [1.0, 1.0], 0.1, 3),
        level([0.2, 0.2], [0.6, 0.6], 0.05, 3),
    ])
    .unwrap();
    let err = solve_td(&p, &mh, 1e-6, 10, TdSettings::default()).unwrap_err();
    assert!(matches!(err, MlvmsError::Td(TdError::ModeOrdering(_))));
}

#[test]
fn dof_accounting_identity() {
    let p = bubble();
    let mh = MultilevelMesh::new(vec![
        level([0.0, 0.0], [1.0, 1.0], 0.1, 2),
        level([0.2, 0.3], [0.6, 0.5], 0.05, 4),
    ])
    .unwrap();
    let (sol, rep) = solve_td(&p, &mh, 1e-6, 30, TdSettings::default()).unwrap();
    assert!(rep.converged);
    // Q_l times the summed axis node counts of each level
    let want = 2 * (11 + 11) + 4 * (9 + 5);
    assert_eq!(sol.dofs(), want);
    assert_eq!(sol.storage_bytes(), want * 8);
    let x = [0.41, 0.37];
    assert!((td_eval(&sol, &x).unwrap() - p.exact_at(&x).unwrap()).abs() < 1e-6);
}

#[test]
fn error_splits_into_full_error_and_deviation() {
    let p = poisson2d_gaussians::<f64>();
    let mh = MultilevelMesh::new(vec![LevelSpec {
        lower: vec![0.0, 0.0],
        upper: vec![20.0, 20.0],
        h: vec![1.0 / 3.0, 1.0 / 3.0],
        hyper: HyperParams::new(5.0, 3, 3).unwrap(),
        modes: None,
    }])
    .unwrap();
    for q in [2, 3, 4] {
        let d = error_decomposition_check(&p, &mh, q, TdSettings::default()).unwrap();
        assert!(d.e_td >= d.e_full);
        assert!(d.relative_residual() < 1e-3, "Q={q}: residual {:e}", d.relative_residual());
    }
}
