use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rotcurl::fields::*;
use rotcurl::smallmat::{levi_civita, SquareMatrix};
use rotcurl::Error;
use serde_json::json;

fn cube(h: f64) -> Grid {
    make_grid(&[0.0; 3], &[1.0; 3], h, Mask::FullBox).unwrap()
}

fn square(h: f64) -> Grid {
    make_grid(&[0.0; 2], &[1.0; 2], h, Mask::FullBox).unwrap()
}

fn max_tensor_error(a: &ThirdOrderField, b: &ThirdOrderField, nodes: &[usize]) -> f64 {
    nodes
        .iter()
        .flat_map(|&n| a.at(n).iter().zip(b.at(n)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn make_grid_examples() {
    assert_eq!(square(0.25).node_count(), 25);
    assert!(matches!(
        make_grid(&[0.0, 0.0], &[0.0, 1.0], 0.25, Mask::FullBox),
        Err(Error::Config(_))
    ));
}

#[test]
fn sample_catalog_examples() {
    let g = make_grid(
        &[-1.0, -1.0],
        &[2.0, 2.0],
        0.25,
        Mask::Ball {
            center: [0.0; 3],
            radius: 1.0,
        },
    )
    .unwrap();
    let f = sample_catalog_field("f_eps", &json!({"eps": 0.3}), &g).unwrap();
    let node = g.node_at([8, 4, 0]);
    assert_eq!(g.position(node), [1.0, 0.0, 0.0]);
    assert_eq!(
        f.at(node),
        SquareMatrix::from_rows(&[[1.0, 0.3], [-0.3, 1.0]]).unwrap()
    );

    let c = sample_catalog_field(
        "constant_rotation",
        &json!({"rotation": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}),
        &cube(0.25),
    )
    .unwrap();
    assert!(c
        .values()
        .chunks(9)
        .all(|v| v == SquareMatrix::identity(3).as_slice()));

    assert!(matches!(
        sample_catalog_field("spiral", &json!({}), &g),
        Err(Error::Config(_))
    ));
}

#[test]
fn gradient_of_linear_entry_is_exact() {
    let g = cube(0.125);
    let f = MatrixField::from_fn(g, 3, |x| {
        let mut m = SquareMatrix::zeros(3);
        m[(1, 2)] = x[0];
        m
    });
    let grad = fd_gradient(&f);
    for n in 0..g.node_count() {
        for p in 0..3 {
            for l in 0..3 {
                for i in 0..3 {
                    let expected = if (p, l, i) == (1, 2, 0) { 1.0 } else { 0.0 };
                    assert!((grad.get(n, p, l, i) - expected).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn planar_rotation_gradient_converges_at_second_order() {
    let field = CatalogField::PlanarRotation {
        theta: AngleProfile::linear(0, 3.0),
    };
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = square(h);
        let fd = fd_gradient(&field.sample(&g).unwrap());
        let exact = field.analytic_gradient(&g).unwrap();
        let all: Vec<usize> = (0..g.node_count()).collect();
        errs.push(max_tensor_error(&fd, &exact, &all));
    }
    let rate = convergence_rate(errs[0], 2.0, errs[1], 1.0);
    assert!((rate - 2.0).abs() <= 0.2, "rate {rate}");
}

#[test]
fn axis_rotation_about_e3_has_zero_divergence() {
    let field = CatalogField::AxisRotation {
        axis: [0.0, 0.0, 1.0],
        theta: AngleProfile {
            waves: vec![Wave {
                amplitude: 0.7,
                wavevector: [0.0, 0.0, 2.0],
                phase: 0.3,
            }],
            ..Default::default()
        },
    };
    let g = cube(0.125);
    let d = div_rowwise(&field.sample(&g).unwrap()).unwrap();
    assert!(d.values().iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn f_eps_curl_is_constant() {
    let eps = 0.37;
    let g = make_grid(
        &[-1.0, -1.0],
        &[2.0, 2.0],
        1.0 / 16.0,
        Mask::Ball {
            center: [0.0; 3],
            radius: 1.0,
        },
    )
    .unwrap();
    let c = curl_rowwise(&CatalogField::FEps { eps }.sample(&g).unwrap()).unwrap();
    let v = c.as_planar().unwrap();
    for n in 0..g.node_count() {
        assert!((v.at(n)[0] - eps).abs() < 1e-13);
        assert!(v.at(n)[1].abs() < 1e-13);
    }
}

#[test]
fn planar_rotation_curl_matches_symbolic() {
    // θ = ωx₁, R = [[cos θ, sin θ], [-sin θ, cos θ]]: curl R = (ω cos θ, -ω sin θ).
    let omega = 2.5;
    let field = CatalogField::PlanarRotation {
        theta: AngleProfile::linear(0, omega),
    };
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = square(h);
        let c = curl_rowwise(&field.sample(&g).unwrap()).unwrap();
        let c = c.as_planar().unwrap();
        let err = (0..g.node_count())
            .map(|n| {
                let x = g.position(n)[0];
                let t = omega * x;
                (c.at(n)[0] - omega * t.cos())
                    .abs()
                    .max((c.at(n)[1] + omega * t.sin()).abs())
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    let rate = convergence_rate(errs[0], 2.0, errs[1], 1.0);
    assert!((rate - 2.0).abs() <= 0.3, "rate {rate}");
}

#[test]
fn general_curl_is_reindexed_rowwise_curl() {
    let g = cube(0.125);
    let f = CatalogField::RandomSmooth { seed: 5, dim: 3 }
        .sample(&g)
        .unwrap();
    let general = curl_general(&f).unwrap();
    let rowwise = curl_rowwise(&f).unwrap();
    let rowwise = rowwise.as_spatial().unwrap();
    let mut worst = 0.0_f64;
    for node in 0..g.node_count() {
        let c = rowwise.at(node);
        for q in 0..3 {
            for r in 0..3 {
                for s in 0..3 {
                    let mut re = 0.0;
                    for n in 0..3 {
                        re += levi_civita(n, r, s).unwrap() as f64 * c[(q, n)];
                    }
                    worst = worst.max((general.get(node, q, r, s) - re).abs());
                    assert_eq!(general.get(node, q, r, s), -general.get(node, q, s, r));
                }
            }
        }
    }
    assert!(worst <= 1e-13, "{worst}");
}

#[test]
fn gradient_fields_are_curl_free_to_second_order() {
    for field in [
        CatalogField::GradientField {
            deformation: Deformation::random(21, 3),
        },
        CatalogField::GradientField {
            deformation: Deformation::bending(2, 0.8),
        },
    ] {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let g = if field.dim() == 3 { cube(h) } else { square(h) };
            let c = curl_general(&field.sample(&g).unwrap()).unwrap();
            errs.push(c.values().iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
        let rate = convergence_rate(errs[0], 2.0, errs[1], 1.0);
        assert!((rate - 2.0).abs() <= 0.3, "{}: rate {rate}", field.id());
    }
}

#[test]
fn laplacian_of_quadratic_and_of_sine() {
    let g = square(0.125);
    let q = MatrixField::from_fn(g, 2, |x| SquareMatrix::diag(&[x[0] * x[0], 1.0]));
    let lq = q.laplacian();
    for n in 0..g.node_count() {
        assert!((lq.at(n)[(0, 0)] - 2.0).abs() < 1e-10);
    }

    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = square(h);
        let s = ScalarField::from_fn(g, |x| x[0].sin());
        let l = s.laplacian();
        let nodes = g.interior_nodes(STATS_MARGIN);
        errs.push(
            nodes
                .iter()
                .map(|&n| (l.at(n) + g.position(n)[0].sin()).abs())
                .fold(0.0, f64::max),
        );
    }
    let rate = convergence_rate(errs[0], 2.0, errs[1], 1.0);
    assert!((rate - 2.0).abs() <= 0.3, "rate {rate}");
}

#[test]
fn every_catalog_gradient_converges() {
    let fields = [
        CatalogField::RandomSmooth { seed: 1, dim: 2 },
        CatalogField::RandomSmooth { seed: 2, dim: 3 },
        CatalogField::GradientField {
            deformation: Deformation::random(3, 3),
        },
        CatalogField::GradientField {
            deformation: Deformation::bending(2, 1.2),
        },
        CatalogField::AxisRotation {
            axis: [1.0, -1.0, 0.5],
            theta: AngleProfile::random(&mut ChaCha8Rng::seed_from_u64(7), 3),
        },
    ];
    for f in &fields {
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let g = if f.dim() == 3 { cube(h) } else { square(h) };
            let fd = fd_gradient(&f.sample(&g).unwrap());
            let exact = f.analytic_gradient(&g).unwrap();
            errs.push(max_tensor_error(&fd, &exact, &g.interior_nodes(0)));
        }
        let rate = convergence_rate(errs[0], 2.0, errs[1], 1.0);
        assert!((rate - 2.0).abs() <= 0.3, "{}: rate {rate}", f.id());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stencils_exact_on_quadratics(c in prop::array::uniform10(-2.0f64..2.0)) {
        let g = cube(0.25);
        let p = |x: [f64; 3]| {
            c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2]
                + c[4] * x[0] * x[0] + c[5] * x[1] * x[1] + c[6] * x[2] * x[2]
                + c[7] * x[0] * x[1] + c[8] * x[1] * x[2] + c[9] * x[0] * x[2]
        };
        let f = ScalarField::from_fn(g, p);
        let lap = f.laplacian();
        let grad = scalar_gradient(&f);
        let expected_lap = 2.0 * (c[4] + c[5] + c[6]);
        for n in 0..g.node_count() {
            let x = g.position(n);
            prop_assert!((lap.at(n) - expected_lap).abs() < 1e-10);
            let gx = c[1] + 2.0 * c[4] * x[0] + c[7] * x[1] + c[9] * x[2];
            prop_assert!((grad.at(n)[0] - gx).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_round_trip(seed in 0u64..1000, h in prop::sample::select(vec![0.25, 0.2, 0.125])) {
        let g = square(h);
        let f = CatalogField::RandomSmooth { seed, dim: 2 }.sample(&g).unwrap();
        let back = read_dump(dump_to_string(&f).as_bytes()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn general_curl_antisymmetric(seed in 0u64..1000) {
        let g = square(0.125);
        let f = CatalogField::GradientField { deformation: Deformation::random(seed, 2) }.sample(&g).unwrap();
        let c = curl_general(&f).unwrap();
        for n in 0..g.node_count() {
            for q in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        prop_assert_eq!(c.get(n, q, r, s), -c.get(n, q, s, r));
                    }
                }
            }
        }
    }
}
