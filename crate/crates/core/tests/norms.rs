use std::f64::consts::PI;

use mlvms::chidenn::TensorBasis;
use mlvms::mesh::{Axis, HyperParams, LevelSpec, MultilevelMesh, TensorMesh};
use mlvms::mlvms::{composite_eval, solve_m_level, Field, LevelState, SolveSettings};
use mlvms::norms::{composite_errors, partition_errors, region_errors};
use mlvms::problems::{heat1d, poisson2d_gaussians, AxisFn, BoundaryKind, ManufacturedProblem, SepTerm, SeparatedFn};
use mlvms::quadrature::QuadRule;

fn quadratic() -> ManufacturedProblem<f64> {
    let q = || AxisFn::new(|x: f64| 1.0 + x - 3.0 * x * x, |x| 1.0 - 6.0 * x, |_| -6.0);
    let one = AxisFn::constant(1.0);
    ManufacturedProblem {
        name: "quadratic".into(),
        domain: vec![(0.0, 1.0); 2],
        time_dependent: false,
        rho_c: 1.0,
        k: 2.0,
        boundary: vec![[BoundaryKind::Dirichlet; 2]; 2],
        exact: Some(SeparatedFn { terms: vec![SepTerm { coef: 1.0, factors: vec![q(), q()] }] }),
        source: SeparatedFn {
            terms: vec![
                SepTerm { coef: 12.0, factors: vec![one.clone(), q()] },
                SepTerm { coef: 12.0, factors: vec![q(), one] },
            ],
        },
        map: None,
        offset: 0.0,
    }
}

fn spec(lo: [f64; 2], hi: [f64; 2], h: f64) -> LevelSpec<f64> {
    LevelSpec { lower: lo.to_vec(), upper: hi.to_vec(), h: vec![h, h], hyper: HyperParams::new(5.0, 2, 3).unwrap(), modes: None }
}

#[test]
fn reproduced_solution_has_zero_error() {
    let p = quadratic();
    let mh = MultilevelMesh::new(vec![spec([0.0, 0.0], [1.0, 1.0], 0.125), spec([0.25, 0.5], [0.75, 1.0], 0.0625)]).unwrap();
    let (st, _) = solve_m_level(&p, &mh, &SolveSettings::default()).unwrap();
    let e = composite_errors(&p, &st, None).unwrap();
    assert!(e.l2 < 1e-10 && e.h1 < 1e-10 && e.energy < 1e-10, "{e:?}");
    assert!(e.u_l2 > 0.1);
}

#[test]
fn zero_field_error_is_the_exact_norm() {
    let p = poisson2d_gaussians::<f64>();
    let mesh = TensorMesh::new(vec![Axis::new(0.0, 20.0, 40).unwrap(); 2]).unwrap();
    let n = mesh.n_nodes();
    let state = LevelState {
        level: 0,
        basis: TensorBasis::new(mesh, HyperParams::new(5.0, 3, 3).unwrap()).unwrap(),
        lower: vec![0.0; 2],
        upper: vec![20.0; 2],
        field: Field::Nodal(vec![0.0; n]),
        interface: Vec::new(),
    };
    let e = region_errors(&p, &state, None, None).unwrap().sqrt();
    // Gaussians far from the boundary integrate in closed form
    let c: Vec<f64> = (1..=7).map(|k| 8.2 + 0.2 * k as f64).collect();
    let (mut l2, mut h1) = (0.0, 0.0);
    for &cj in &c {
        for &ck in &c {
            let d = (cj - ck) / 2.0;
            let b = (-2.0 * PI * d * d).exp() / 2f64.sqrt();
            let a = 4.0 * PI * PI * (-2.0 * PI * d * d).exp() * (1.0 / (4.0 * PI) - d * d) / 2f64.sqrt();
            l2 += b * b;
            h1 += 2.0 * a * b;
        }
    }
    assert!((e.l2 - l2.sqrt()).abs() < 1e-10 * l2.sqrt(), "{} vs {}", e.l2, l2.sqrt());
    assert!((e.h1 - h1.sqrt()).abs() < 1e-10 * h1.sqrt());
    assert_eq!(e.l2, e.u_l2);
    assert!((e.rel_energy() - 1.0).abs() < 1e-14);
}

/// `∫ (u_h − u)²` by brute-force Gauss quadrature of the composite
/// evaluator on cells of size `h`.
fn brute_l2(p: &ManufacturedProblem<f64>, st: &[LevelState<f64>], lo: [f64; 2], hi: [f64; 2], h: [f64; 2]) -> f64 {
    let rule = QuadRule::<f64>::gauss(8);
    let n = [((hi[0] - lo[0]) / h[0]).round() as usize, ((hi[1] - lo[1]) / h[1]).round() as usize];
    let mut total = 0.0;
    for i in 0..n[0] {
        let xa = lo[0] + i as f64 * h[0];
        for j in 0..n[1] {
            let ya = lo[1] + j as f64 * h[1];
            for (x, wx) in rule.on_interval(xa, xa + h[0]) {
                for (y, wy) in rule.on_interval(ya, ya + h[1]) {
                    let e = composite_eval(st, &[x, y]).unwrap() - p.exact_at(&[x, y]).unwrap();
                    total += wx * wy * e * e;
                }
            }
        }
    }
    total
}

#[test]
fn composite_norm_matches_brute_force() {
    let p = heat1d::<f64>();
    let hyper = HyperParams::new(5.0, 3, 3).unwrap();
    let mh = MultilevelMesh::new(vec![
        LevelSpec { lower: vec![-1.0, 0.0], upper: vec![1.0, 4.0], h: vec![1.0 / 16.0, 0.5], hyper, modes: None },
        LevelSpec { lower: vec![-0.125, 0.0], upper: vec![0.125, 4.0], h: vec![1.0 / 32.0, 0.25], hyper, modes: None },
    ])
    .unwrap();
    let (st, _) = solve_m_level(&p, &mh, &SolveSettings::default()).unwrap();
    let e = composite_errors(&p, &st, None).unwrap();
    let parts = partition_errors(&p, &st, None).unwrap();
    let brute = brute_l2(&p, &st, [-1.0, 0.0], [1.0, 4.0], [1.0 / 32.0, 0.25]);
    assert!((e.l2 * e.l2 - brute).abs() < 1e-6 * brute, "{} vs {brute}", e.l2 * e.l2);
    let fine = brute_l2(&p, &st, [-0.125, 0.0], [0.125, 4.0], [1.0 / 32.0, 0.25]);
    assert!((parts[1].l2 - fine).abs() < 1e-6 * fine);
    assert!(parts.iter().all(|q| q.l2 >= 0.0 && q.energy >= 0.0));
    let sum: f64 = parts.iter().map(|q| q.energy).sum();
    assert!((sum - e.energy * e.energy).abs() < 1e-12 * sum);
}
