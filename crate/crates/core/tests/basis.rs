use mlvms::chidenn::{PatchBasis, RadialBasis, ShapeFunctions, TensorBasis};
use mlvms::mesh::{Axis, HyperParams, TensorMesh};
use proptest::prelude::*;

fn combo() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![
        Just((1, 1)),
        Just((2, 1)),
        Just((1, 2)),
        Just((2, 2)),
        Just((3, 2)),
        Just((1, 3)),
        Just((2, 3)),
        Just((3, 3)),
        Just((5, 3)),
    ]
}

fn mesh(dim: usize, lo: f64, len: f64, n: usize) -> TensorMesh<f64> {
    let axes = (0..dim).map(|d| Axis::new(lo + d as f64, lo + d as f64 + len * (1.0 + 0.3 * d as f64), n + d).unwrap()).collect();
    TensorMesh::new(axes).unwrap()
}

/// Node values of the tensor monomial `Π x_d^{e_d}`.
fn monomial_field(m: &TensorMesh<f64>, e: &[usize]) -> Vec<f64> {
    (0..m.n_nodes()).map(|id| m.node_coords(id).iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product()).collect()
}

fn point(m: &TensorMesh<f64>, t: &[f64]) -> Vec<f64> {
    m.axes().iter().zip(t).map(|(a, &s)| a.lo + s * (a.hi - a.lo)).collect()
}

fn check_basis<B: ShapeFunctions<f64>>(b: &B, p: usize, ts: &[Vec<f64>]) -> Result<(), TestCaseError> {
    let m = b.mesh();
    let dim = m.dim();
    for id in 0..m.n_nodes() {
        let x = m.node_coords(id);
        let ev = b.eval_point(&x).unwrap();
        for (k, &node) in ev.nodes.iter().enumerate() {
            let want = if node == id { 1.0 } else { 0.0 };
            prop_assert!((ev.values[k] - want).abs() < 1e-9, "delta at node {id}");
        }
    }
    let extent: f64 = m.axes().iter().map(|a| a.hi.abs().max(a.lo.abs())).fold(1.0, f64::max);
    let exps: Vec<Vec<usize>> = (0..(p + 1).pow(dim as u32))
        .map(|k| (0..dim).map(|d| (k / (p + 1).pow(d as u32)) % (p + 1)).collect())
        .collect();
    let fields: Vec<Vec<f64>> = exps.iter().map(|e| monomial_field(m, e)).collect();
    for t in ts {
        let x = point(m, t);
        let ev = b.eval_point(&x).unwrap();
        let sum: f64 = ev.values.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-10, "partition of unity {sum}");
        for d in 0..dim {
            let g: f64 = (0..ev.nodes.len()).map(|k| ev.grad(k)[d]).sum();
            prop_assert!(g.abs() < 1e-9 * (p as f64 + 1.0) / m.axis(d).h(), "gradient sum {g}");
        }
        for (e, f) in exps.iter().zip(&fields) {
            let want: f64 = x.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product();
            let got: f64 = ev.nodes.iter().zip(&ev.values).map(|(&i, &v)| v * f[i]).sum();
            let scale = extent.powi(e.iter().sum::<usize>() as i32);
            prop_assert!((got - want).abs() < 1e-8 * scale, "monomial {e:?}: {got} vs {want}");
        }
    }
    Ok(())
}

fn check_gradients<B: ShapeFunctions<f64>>(b: &B, ts: &[Vec<f64>]) -> Result<(), TestCaseError> {
    let m = b.mesh();
    for t in ts {
        let x = point(m, &t.iter().map(|v| 0.05 + 0.9 * v).collect::<Vec<_>>());
        let ev = b.eval_point(&x).unwrap();
        for d in 0..m.dim() {
            let step = 1e-6 * m.axis(d).h();
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[d] += step;
            xm[d] -= step;
            let (ep, em) = (b.eval_shape(ev.element, &xp).unwrap(), b.eval_shape(ev.element, &xm).unwrap());
            for k in 0..ev.nodes.len() {
                let fd = (ep.values[k] - em.values[k]) / (2.0 * step);
                let g = ev.grad(k)[d];
                prop_assert!((g - fd).abs() <= 1e-5 * g.abs().max(1.0 / m.axis(d).h()), "gradient {g} vs {fd}");
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tensor_basis_1d((p, s) in combo(), extra in 0usize..6, lo in -2.0f64..2.0, len in 0.5f64..3.0, a in 2.0f64..6.0,
                       ts in prop::collection::vec(0.0f64..=1.0, 20)) {
        let m = mesh(1, lo, len, 2 * s + extra);
        let b = TensorBasis::new(m, HyperParams::new(a, s, p).unwrap()).unwrap();
        let pts: Vec<Vec<f64>> = ts.into_iter().map(|t| vec![t]).collect();
        check_basis(&b, p, &pts)?;
        check_gradients(&b, &pts)?;
    }

    #[test]
    fn tensor_basis_2d((p, s) in combo(), extra in 0usize..3, lo in -1.0f64..1.0, len in 0.5f64..2.0, a in 2.0f64..6.0,
                       ts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 8)) {
        let m = mesh(2, lo, len, 2 * s + extra);
        let b = TensorBasis::new(m, HyperParams::new(a, s, p).unwrap()).unwrap();
        let pts: Vec<Vec<f64>> = ts.into_iter().map(|(u, v)| vec![u, v]).collect();
        check_basis(&b, p, &pts)?;
        check_gradients(&b, &pts)?;
    }

    #[test]
    fn radial_basis_2d((p, s) in combo(), lo in -1.0f64..1.0, len in 0.5f64..2.0, a in 2.0f64..6.0,
                       ts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 6)) {
        let m = mesh(2, lo, len, 2 * s);
        let b = RadialBasis::new(m, HyperParams::new(a, s, p).unwrap()).unwrap();
        let pts: Vec<Vec<f64>> = ts.into_iter().map(|(u, v)| vec![u, v]).collect();
        check_basis(&b, p, &pts)?;
        check_gradients(&b, &pts)?;
    }

    #[test]
    fn patch_kronecker((p, s) in combo(), node in 0usize..40, a in 2.0f64..6.0) {
        let m = mesh(2, 0.0, 1.0, 2 * s + 2);
        let node = node % m.n_nodes();
        let pb = PatchBasis::new(&m, node, HyperParams::new(a, s, p).unwrap()).unwrap();
        for (j, &id) in pb.nodes.iter().enumerate() {
            let (w, _) = pb.eval(&m.node_coords(id));
            for (k, &v) in w.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                prop_assert!((v - want).abs() < 1e-9, "W_{} at node {}", k, j);
            }
        }
    }
}

#[test]
fn invalid_patch_sizes_rejected() {
    for (p, s) in [(3, 1), (5, 1), (5, 2)] {
        assert!(HyperParams::new(3.0, s, p).is_err());
    }
}

#[test]
fn lagrange_degeneration_when_patch_matches_polynomial_space() {
    // n_s = m: s = 1 with p = 2 in 1D and 2D
    for dim in [1, 2] {
        let m = mesh(dim, 0.0, 1.0, 5);
        let hyper = HyperParams::new(3.0, 1, 2).unwrap();
        let centre = m.n_nodes() / 2;
        let pb = PatchBasis::new(&m, centre, hyper).unwrap();
        assert!(pb.a_mat.max_abs() < 1e-12);
        let coords: Vec<Vec<f64>> = pb.nodes.iter().map(|&id| m.node_coords(id)).collect();
        for t in [0.31, 0.47, 0.62] {
            let x: Vec<f64> = coords[0].iter().zip(coords.last().unwrap()).map(|(a, b)| a + t * (b - a)).collect();
            let (w, _) = pb.eval(&x);
            for (k, ck) in coords.iter().enumerate() {
                let lag: f64 = (0..dim)
                    .map(|d| {
                        let mut axis: Vec<f64> = coords.iter().map(|c| c[d]).collect();
                        axis.sort_by(f64::total_cmp);
                        axis.dedup();
                        axis.iter().filter(|&&v| v != ck[d]).map(|&v| (x[d] - v) / (ck[d] - v)).product::<f64>()
                    })
                    .product();
                assert!((w[k] - lag).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn excess_order_residual_converges_at_order_p_plus_one() {
    for (p, s) in [(2, 1), (3, 2), (5, 3)] {
        let hyper = HyperParams::new(5.0, s, p).unwrap();
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let m = TensorMesh::new(vec![Axis::new(0.0, 1.0, n).unwrap()]).unwrap();
                let b = TensorBasis::new(m.clone(), hyper).unwrap();
                let f = monomial_field(&m, &[p + 1]);
                (0..200)
                    .map(|k| {
                        let x = (k as f64 + 0.5) / 200.0;
                        (b.interpolate(&f, &[x]).unwrap() - x.powi(p as i32 + 1)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let rate = (errs[1] / errs[2]).log2();
        assert!(errs[2] > 0.0 && (rate - (p + 1) as f64).abs() < 0.3, "p={p}: rate {rate} from {errs:?}");
    }
}
