//! Cone validation, projection, constants, dual rays, twisted-rectangle
//! membership and zonotope volumes.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use tubeharm::cone::{PolyhedralCone, TwistedRectangleQuery};
use tubeharm::Error;

const TOL: f64 = 1e-12;

fn diagonal_pair() -> PolyhedralCone {
    PolyhedralCone::new(vec![vec![1.0, 0.0], vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]]).unwrap()
}

fn query(x: &[f64], t: &[f64], beta: f64) -> TwistedRectangleQuery {
    TwistedRectangleQuery {
        x: x.to_vec(),
        t: t.to_vec(),
        beta,
    }
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

/// Whether `rays` equals `expected` as a set, up to `tol`.
fn same_rays(rays: &[Vec<f64>], expected: &[[f64; 2]], tol: f64) -> bool {
    rays.len() == expected.len()
        && expected.iter().all(|e| {
            rays.iter()
                .any(|r| r.iter().zip(e).all(|(a, b)| (a - b).abs() < tol))
        })
}

#[test]
fn axis_cone_is_valid() {
    let c = PolyhedralCone::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert_eq!((c.n, c.m), (2, 2));
    assert_eq!(c, PolyhedralCone::axis(2));
}

#[test]
fn repeated_generator_is_degenerate() {
    let err = PolyhedralCone::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap_err();
    assert!(matches!(err, Error::DegenerateSubset { .. }), "{err}");
}

#[test]
fn cone_b_is_valid() {
    let c = PolyhedralCone::new(vec![
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    ])
    .unwrap();
    assert_eq!((c.n, c.m), (2, 3));
    assert_eq!(c, PolyhedralCone::cone_b());
}

#[test]
fn near_unit_generators_are_normalized_and_far_ones_rejected() {
    let c = PolyhedralCone::new(vec![vec![1.0 + 5e-7, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!((c.generators[0][0] - 1.0).abs() < TOL);
    let err = PolyhedralCone::new(vec![vec![1.01, 0.0], vec![0.0, 1.0]]).unwrap_err();
    assert!(matches!(err, Error::NotUnit { index: 0, .. }), "{err}");
}

#[test]
fn bad_shapes_are_rejected() {
    assert!(matches!(
        PolyhedralCone::new(vec![vec![1.0, 0.0]]),
        Err(Error::BadShape(_))
    ));
    assert!(matches!(
        PolyhedralCone::new(vec![vec![1.0, 0.0], vec![1.0]]),
        Err(Error::BadShape(_))
    ));
    assert!(matches!(
        PolyhedralCone::new(vec![]),
        Err(Error::BadShape(_))
    ));
}

#[test]
fn cone_json_round_trip() {
    let c = PolyhedralCone::cone_b();
    let back = PolyhedralCone::from_json_str(&c.to_json_string()).unwrap();
    assert_eq!(back, c);
    assert!(PolyhedralCone::from_json_str(r#"{"n":2,"m":2,"generators":[[1,0],[1,0]]}"#).is_err());
}

#[test]
fn projection_examples() {
    let b = PolyhedralCone::cone_b();
    assert_close(&b.project(&[0.0; 3]).unwrap(), &[0.0, 0.0], TOL);
    assert_close(
        &PolyhedralCone::axis(2).project(&[0.3, -1.7]).unwrap(),
        &[0.3, -1.7],
        TOL,
    );
    assert_close(&b.project(&[1.0, 1.0, SQRT_2]).unwrap(), &[2.0, 2.0], TOL);
    assert!(matches!(
        b.project(&[1.0, 1.0]),
        Err(Error::LengthMismatch {
            expected: 3,
            got: 2
        })
    ));
}

#[test]
fn projection_is_linear() {
    let b = PolyhedralCone::cone_b();
    let mut rng = SplitMix64::seed_from_u64(7);
    for _ in 0..100 {
        let s: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (al, be) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let comb: Vec<f64> = s.iter().zip(&t).map(|(a, b)| al * a + be * b).collect();
        let lhs = b.project(&comb).unwrap();
        let (ps, pt) = (b.project(&s).unwrap(), b.project(&t).unwrap());
        let rhs: Vec<f64> = ps.iter().zip(&pt).map(|(a, b)| al * a + be * b).collect();
        assert_close(&lhs, &rhs, TOL);
    }
}

#[test]
fn axis_constants() {
    let k = PolyhedralCone::axis(2).constants();
    assert_eq!(k.a_const, 0.0);
    assert_eq!(k.gamma_tilde0, 1.0);
    assert_eq!(k.gamma0, 1.0);
}

#[test]
fn cone_b_constants() {
    let k = PolyhedralCone::cone_b().constants();
    assert!((k.a_const - (2.0 + 3.0 * SQRT_2)).abs() < 1e-12);
    assert!((k.gamma_tilde0 - 0.13807).abs() < 1e-5);
    assert_eq!(k.gamma0, k.gamma_tilde0 * k.gamma_tilde0);
    // One coefficient vector per (subset, outside index): three subsets.
    assert_eq!(k.subset_coeffs.len(), 3);
}

#[test]
fn gamma0_is_square_of_gamma_tilde0_for_random_cones() {
    let mut rng = SplitMix64::seed_from_u64(11);
    for _ in 0..20 {
        let gens: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let a = 0.1 + 1.3 * (k as f64) / 3.0 + rng.gen_range(-0.05..0.05);
                vec![a.cos(), a.sin()]
            })
            .collect();
        let k = PolyhedralCone::new(gens).unwrap().constants();
        assert_eq!(k.gamma0, k.gamma_tilde0 * k.gamma_tilde0);
        assert!(k.a_const > 0.0);
    }
}

#[test]
fn dual_ray_examples() {
    let expect = [[1.0, 0.0], [0.0, 1.0]];
    assert!(same_rays(
        &PolyhedralCone::axis(2).dual().unwrap().rays,
        &expect,
        1e-12
    ));
    assert!(same_rays(
        &PolyhedralCone::cone_b().dual().unwrap().rays,
        &expect,
        1e-12
    ));
    let rays = diagonal_pair().dual().unwrap().rays;
    assert!(
        same_rays(&rays, &[[0.0, 1.0], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]], 1e-12),
        "{rays:?}"
    );
}

#[test]
fn dual_rays_satisfy_every_constraint() {
    for cone in [
        PolyhedralCone::cone_b(),
        diagonal_pair(),
        PolyhedralCone::axis(3),
    ] {
        let dual = cone.dual().unwrap();
        for r in &dual.rays {
            for e in &cone.generators {
                let d: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
                assert!(d >= -1e-9);
            }
        }
    }
}

#[test]
fn dual_rejects_dimension_above_four() {
    let err = PolyhedralCone::axis(5).dual().unwrap_err();
    assert!(matches!(err, Error::UnsupportedDimension(5)));
}

#[test]
fn rect_contains_centre() {
    let b = PolyhedralCone::cone_b();
    let x = [0.4, -1.2];
    assert!(b
        .rect_contains(&query(&x, &[0.1, 0.2, 0.3], 1.0), &x)
        .unwrap());
}

#[test]
fn axis_rectangle_is_a_box() {
    let a = PolyhedralCone::axis(2);
    let q = query(&[0.0, 0.0], &[1.0, 1.0], 1.0);
    assert!(a.rect_contains(&q, &[0.5, -0.5]).unwrap());
    assert!(!a.rect_contains(&q, &[1.5, 0.0]).unwrap());
}

/// Brute-force enumeration of `λ ∈ [−1,1]³` at step `1e−3`: the target is
/// reachable when the residual of the best `λ` is within two grid steps.
fn brute_force_reachable(cone: &PolyhedralCone, target: &[f64]) -> bool {
    let step: f64 = 1e-3;
    let n = (2.0 / step).round() as i64;
    let e = &cone.generators;
    // For each (λ₁, λ₂) solve for the λ₃ closest to the target and keep the best residual.
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let l1 = -1.0 + i as f64 * step;
        for j in 0..=n {
            let l2 = -1.0 + j as f64 * step;
            let r = [
                target[0] - l1 * e[0][0] - l2 * e[1][0],
                target[1] - l1 * e[0][1] - l2 * e[1][1],
            ];
            let l3 = ((r[0] * e[2][0] + r[1] * e[2][1]) / step).round() * step;
            let l3 = l3.clamp(-1.0, 1.0);
            let res = ((r[0] - l3 * e[2][0]).powi(2) + (r[1] - l3 * e[2][1]).powi(2)).sqrt();
            best = best.min(res);
        }
    }
    best <= 2.0 * step
}

#[test]
fn cone_b_rectangle_matches_brute_force() {
    let b = PolyhedralCone::cone_b();
    let q = query(&[0.0, 0.0], &[1.0, 1.0, 1.0], 1.0);
    // The zonotope R(0,(1,1,1)) has the vertex (1+√2/2, 1+√2/2); points well
    // inside and well outside are decided unambiguously by both methods.
    for p in [
        [1.9, 0.1],
        [1.6, 1.6],
        [1.0, -0.9],
        [1.9, -0.5],
        [0.0, 2.0],
        [-1.2, 1.2],
    ] {
        assert_eq!(
            b.rect_contains(&q, &p).unwrap(),
            brute_force_reachable(&b, &p),
            "{p:?}"
        );
    }
}

#[test]
fn parallelohedron_matches_rectangle_on_axis_cone() {
    let a = PolyhedralCone::axis(2);
    let mut rng = SplitMix64::seed_from_u64(3);
    for _ in 0..500 {
        let t = [rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)];
        let p = [rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
        let q = query(&[0.0, 0.0], &t, 1.0);
        assert_eq!(
            a.parallelohedron_contains(&[0, 1], &[0.0, 0.0], &t, &p)
                .unwrap(),
            a.rect_contains(&q, &p).unwrap()
        );
    }
}

#[test]
fn parallelohedron_matches_direct_solve() {
    let b = PolyhedralCone::cone_b();
    let x = [0.3, -0.2];
    let r = [0.7, 1.1, 0.9];
    assert!(b.parallelohedron_contains(&[0, 1], &x, &r, &x).unwrap());
    let mut rng = SplitMix64::seed_from_u64(5);
    for _ in 0..500 {
        let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        // e₁, e₂ are the coordinate axes: λ = x′ − x componentwise.
        let inside = (p[0] - x[0]).abs() < r[0] && (p[1] - x[1]).abs() < r[1];
        assert_eq!(
            b.parallelohedron_contains(&[0, 1], &x, &r, &p).unwrap(),
            inside
        );
    }
    // {1,3}: λ₃ = √2 d₂, λ₁ = d₁ − d₂.
    for _ in 0..500 {
        let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let d = [p[0] - x[0], p[1] - x[1]];
        let inside = (d[0] - d[1]).abs() < r[0] && (SQRT_2 * d[1]).abs() < r[2];
        assert_eq!(
            b.parallelohedron_contains(&[0, 2], &x, &r, &p).unwrap(),
            inside
        );
    }
}

#[test]
fn singular_subset_is_reported() {
    let b = PolyhedralCone::cone_b();
    let err = b
        .parallelohedron_contains(&[0, 0], &[0.0, 0.0], &[1.0; 3], &[0.0, 0.0])
        .unwrap_err();
    assert!(matches!(err, Error::SingularSubset(_)), "{err}");
}

#[test]
fn zonotope_volume_examples() {
    let a = PolyhedralCone::axis(2);
    assert!((a.zonotope_volume(&[0.5, 3.0]) - 6.0).abs() < TOL);
    let b = PolyhedralCone::cone_b();
    assert!((b.zonotope_volume(&[1.0; 3]) - 4.0 * (1.0 + SQRT_2)).abs() < TOL);
    let t = [0.3, 1.7, 0.9];
    let t2: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
    assert!((b.zonotope_volume(&t2) - 4.0 * b.zonotope_volume(&t)).abs() < TOL);
}

#[test]
fn zonotope_volume_dominates_every_parallelohedron() {
    let b = PolyhedralCone::cone_b();
    let mut rng = SplitMix64::seed_from_u64(9);
    for _ in 0..200 {
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..3.0)).collect();
        let vol = b.zonotope_volume(&t);
        for s in [[0, 1], [0, 2], [1, 2]] {
            assert!(vol >= b.parallelohedron_volume(&s, &t));
        }
    }
}

#[test]
fn zonotope_volume_matches_monte_carlo() {
    let b = PolyhedralCone::cone_b();
    let q = query(&[0.0, 0.0], &[1.0; 3], 1.0);
    let half = 1.0 + FRAC_1_SQRT_2;
    let mut rng = SplitMix64::seed_from_u64(21);
    let samples = 200_000;
    let hits = (0..samples)
        .filter(|_| {
            b.rect_contains(
                &q,
                &[rng.gen_range(-half..half), rng.gen_range(-half..half)],
            )
            .unwrap()
        })
        .count();
    let box_vol = 4.0 * half * half;
    let p = hits as f64 / samples as f64;
    let sigma = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
    assert!((p * box_vol - b.zonotope_volume(&[1.0; 3])).abs() < 3.0 * sigma);
}

#[test]
fn nontangential_examples() {
    let b = PolyhedralCone::cone_b();
    let x = [0.1, 0.2];
    assert!(b
        .nontangential_contains(&x, 0.5, &x, &[0.3, 0.1, 0.2])
        .unwrap());
    let a = PolyhedralCone::axis(2);
    assert!(a
        .nontangential_contains(&[0.0, 0.0], 1.0, &[0.99, 0.99], &[1.0, 1.0])
        .unwrap());
}

#[test]
fn nontangential_regions_grow_with_aperture() {
    let b = PolyhedralCone::cone_b();
    let mut rng = SplitMix64::seed_from_u64(13);
    let x = [0.0, 0.0];
    let mut inside = 0;
    for _ in 0..1000 {
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
        let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        if b.nontangential_contains(&x, 1.0, &p, &t).unwrap() {
            inside += 1;
            assert!(b.nontangential_contains(&x, 2.0, &p, &t).unwrap());
        }
    }
    assert!(inside > 50);
}

#[test]
fn rectangle_is_centrally_symmetric() {
    let b = PolyhedralCone::cone_b();
    let mut rng = SplitMix64::seed_from_u64(17);
    let x = [0.5, -0.25];
    for _ in 0..1000 {
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.5)).collect();
        let p = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let mirror = [2.0 * x[0] - p[0], 2.0 * x[1] - p[1]];
        let q = query(&x, &t, 1.0);
        assert_eq!(
            b.rect_contains(&q, &p).unwrap(),
            b.rect_contains(&q, &mirror).unwrap()
        );
    }
}

#[test]
fn inclusion_chain_holds() {
    let b = PolyhedralCone::cone_b();
    let inv = 1.0 / b.constants().gamma_tilde0;
    let mut rng = SplitMix64::seed_from_u64(19);
    let x = [0.0, 0.0];
    for _ in 0..10_000 {
        let t: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..2.0)).collect();
        let p = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let l = b.largest_subset(&t);
        let outer: Vec<f64> = t.iter().map(|v| v * inv).collect();
        let inner = b.parallelohedron_contains(&l, &x, &t, &p).unwrap();
        let rect = b.rect_contains(&query(&x, &t, 1.0), &p).unwrap();
        assert!(!inner || rect);
        assert!(!rect || b.parallelohedron_contains(&l, &x, &outer, &p).unwrap());
    }
}

proptest::proptest! {
    #[test]
    fn zonotope_volume_is_homogeneous(t in proptest::collection::vec(0.01f64..5.0, 3), lambda in 0.1f64..10.0) {
        let cone = PolyhedralCone::cone_b();
        let scaled: Vec<f64> = t.iter().map(|v| v * lambda).collect();
        let (v, vs) = (cone.zonotope_volume(&t), cone.zonotope_volume(&scaled));
        proptest::prop_assert!((vs - lambda * lambda * v).abs() <= 1e-10 * vs);
    }

    #[test]
    fn twisted_rectangles_are_centrally_symmetric(
        d in proptest::collection::vec(-3.0f64..3.0, 2),
        t in proptest::collection::vec(0.1f64..2.0, 3),
    ) {
        let cone = PolyhedralCone::cone_b();
        let q = query(&[0.0, 0.0], &t, 1.0);
        let minus: Vec<f64> = d.iter().map(|v| -v).collect();
        proptest::prop_assert_eq!(cone.rect_contains(&q, &d).unwrap(), cone.rect_contains(&q, &minus).unwrap());
    }

    #[test]
    fn projection_is_additive(a in proptest::collection::vec(0.0f64..4.0, 3), b in proptest::collection::vec(0.0f64..4.0, 3)) {
        let cone = PolyhedralCone::cone_b();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (pa, pb, ps) = (cone.project(&a).unwrap(), cone.project(&b).unwrap(), cone.project(&sum).unwrap());
        for k in 0..2 {
            proptest::prop_assert!((ps[k] - pa[k] - pb[k]).abs() < 1e-12);
        }
    }
}
