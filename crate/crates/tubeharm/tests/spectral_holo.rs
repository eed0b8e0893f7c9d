//! Holomorphic test functions from dual-cone spectra: quadrature, boundary
//! values, lifts, Hardy norms and the Cauchy–Szegő kernel.

use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};
use tubeharm::cone::PolyhedralCone;
use tubeharm::grid::{GridSpec, Norm};
use tubeharm::poisson::{iterated_poisson, TLattice, DEFAULT_SAMPLE_BUDGET};
use tubeharm::spectral::{
    cauchy_szego, hardy_norm, lift_field, make_bump_psi, make_bump_psi_with, slice_norm,
    SpectralTestFunction, DEFAULT_NODES_PER_AXIS,
};
use tubeharm::Error;

const CENTER: [f64; 2] = [0.75, 0.75];
const RADIUS: f64 = 0.5;
const REPRODUCING_TOL: f64 = 1e-3;

fn cone() -> PolyhedralCone {
    PolyhedralCone::cone_b()
}

fn stf() -> SpectralTestFunction {
    make_bump_psi(&cone().dual().unwrap(), &CENTER, RADIUS, 1.0).unwrap()
}

fn spec() -> GridSpec {
    GridSpec::cube(2, 128, 8.0).unwrap()
}

#[test]
fn bump_inside_dual_cone_is_valid() {
    let s = stf();
    assert!(s.support_check);
    assert_eq!(
        s.nodes.len(),
        DEFAULT_NODES_PER_AXIS * DEFAULT_NODES_PER_AXIS
    );
    assert!(s.weights.iter().all(|&w| w > 0.0));
    for xi in &s.nodes {
        assert!(cone()
            .generators
            .iter()
            .all(|e| e[0] * xi[0] + e[1] * xi[1] >= 0.0));
    }
}

#[test]
fn bump_on_boundary_ray_escapes() {
    let dual = cone().dual().unwrap();
    let err = make_bump_psi(&dual, &[1.0, 0.0], 0.25, 1.0).unwrap_err();
    assert!(matches!(err, Error::SupportEscapesDualCone { .. }), "{err}");
}

#[test]
fn bump_integral_matches_finer_quadrature() {
    let dual = cone().dual().unwrap();
    let coarse = stf().integral();
    let fine = make_bump_psi_with(&dual, &CENTER, RADIUS, 1.0, 10 * DEFAULT_NODES_PER_AXIS)
        .unwrap()
        .integral();
    assert!(
        (coarse - fine).norm() < 1e-8 * fine.norm(),
        "{coarse} vs {fine}"
    );
}

#[test]
fn value_at_origin_is_integral() {
    let s = stf();
    let f0 = s.eval(&[0.0, 0.0], &[0.0, 0.0]);
    assert!((f0 - s.integral()).norm() < 1e-14 * f0.norm());
    assert!(f0.im.abs() < 1e-14 * f0.re);
}

#[test]
fn modulus_is_bounded_by_weighted_mass() {
    let s = stf();
    let bound = s.modulus_bound();
    for (x, t) in [
        ([0.0, 0.0], [0.0; 3]),
        ([1.3, -2.0], [0.1, 0.0, 0.3]),
        ([-4.0, 7.5], [1.0, 2.0, 0.5]),
    ] {
        assert!(s.eval_lifted(&cone(), &x, &t).unwrap().norm() <= bound);
    }
}

#[test]
fn spatial_decay_is_at_least_quartic() {
    let s = stf();
    let y = cone().project(&[0.05; 3]).unwrap();
    // Largest |F| on a circle of radius ρ.
    let ring = |rho: f64| {
        (0..720)
            .map(|k| {
                let a = k as f64 * PI / 360.0;
                s.eval(&[rho * a.cos(), rho * a.sin()], &y).norm()
            })
            .fold(0.0, f64::max)
    };
    let c = ring(5.0) * 5f64.powi(4);
    for rho in [10.0, 20.0] {
        assert!(ring(rho) * rho.powi(4) <= 1.1 * c, "ρ = {rho}");
    }
}

#[test]
fn cauchy_riemann_along_generators() {
    let dual = cone().dual().unwrap();
    let s = make_bump_psi(&dual, &[0.3, 0.3], 0.15, 1.0).unwrap();
    let step = 1e-4;
    let x = [0.2, -0.1];
    let y = cone().project(&[0.1, 0.2, 0.3]).unwrap();
    for e in &cone().generators {
        let at = |ds: f64, dt: f64| {
            let xs = [x[0] + ds * e[0], x[1] + ds * e[1]];
            let ys = [y[0] + dt * e[0], y[1] + dt * e[1]];
            s.eval(&xs, &ys)
        };
        let d_s = (at(step, 0.0) - at(-step, 0.0)) / (2.0 * step);
        let d_t = (at(0.0, step) - at(0.0, -step)) / (2.0 * step);
        let residual = (d_s + Complex64::i() * d_t).norm();
        assert!(residual < 1e-6 * at(0.0, 0.0).norm(), "{residual}");
    }
}

#[test]
fn boundary_grid_matches_pointwise_evaluation() {
    let s = stf();
    let spec = spec();
    let b = s.boundary_grid(&spec).unwrap();
    let scale = s.modulus_bound();
    for flat in (0..spec.len()).step_by(97) {
        let direct = s.eval(&spec.point(flat), &[0.0, 0.0]);
        assert!((b.values[flat] - direct).norm() < 1e-14 * scale);
    }
}

#[test]
fn boundary_l1_norm_is_stable_under_box_doubling() {
    // Unit-radius bump: F^b lives on the spatial scale 1/r = 1, and its L¹
    // tail beyond |x| = 16 is below 1e−3 of the total. The quadrature order
    // keeps the spectral sum accurate over the doubled box.
    let dual = cone().dual().unwrap();
    let s = make_bump_psi_with(&dual, &[1.5, 1.5], 1.0, 1.0, 256).unwrap();
    let spec = GridSpec::cube(2, 256, 16.0).unwrap();
    let a = s.boundary_grid(&spec).unwrap().lp_norm(Norm::L1);
    let b = s.boundary_grid(&spec.doubled()).unwrap().lp_norm(Norm::L1);
    assert!(a.is_finite() && ((a - b) / b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn boundary_spectrum_concentrates_on_the_support() {
    let s = stf();
    let spec = spec();
    let g = s.boundary_grid(&spec).unwrap().fourier_forward().unwrap();
    let dxi = 1.0 / (2.0 * spec.box_half[0]);
    let pad = RADIUS + 2.0 * dxi;
    let (mut inside, mut total) = (0.0, 0.0);
    for (flat, v) in g.values.iter().enumerate() {
        let k = [(flat / 128) as f64 - 64.0, (flat % 128) as f64 - 64.0];
        let xi = [k[0] * dxi, k[1] * dxi];
        let e = v.norm_sqr();
        total += e;
        if (xi[0] - CENTER[0]).abs() <= pad && (xi[1] - CENTER[1]).abs() <= pad {
            inside += e;
        }
    }
    assert!(inside > 0.999 * total, "{}", inside / total);
}

#[test]
fn lifted_field_reproduces_poisson_extension() {
    let s = stf();
    let spec = spec();
    let lattice = TLattice::new(3, 2.0 * spec.h(), 2.0, 2).unwrap();
    let field = lift_field(&s, &cone(), &lattice, &spec, DEFAULT_SAMPLE_BUDGET).unwrap();
    let fb = s.boundary_grid(&spec).unwrap();
    let top = fb.lp_norm(Norm::Inf);
    for (t, u) in lattice.nodes.iter().zip(&field.values) {
        for flat in (0..spec.len()).step_by(331) {
            let direct = s.eval_lifted(&cone(), &spec.point(flat), t).unwrap();
            assert!((u.values[flat] - direct).norm() < 1e-14 * s.modulus_bound());
        }
        let poisson = iterated_poisson(&fb, &cone(), t).unwrap();
        assert!(u.max_abs_diff(&poisson) < REPRODUCING_TOL * top);
    }
}

#[test]
fn lifts_with_equal_projection_coincide() {
    let s = stf();
    let spec = spec();
    let c = cone();
    let (t, tp) = ([0.5, 0.5, 0.0], [0.0, 0.0, 0.5 * SQRT_2]);
    let a = s.lifted_derivative_grid(&c, &spec, &t, &[]).unwrap();
    let b = s.lifted_derivative_grid(&c, &spec, &tp, &[]).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-14 * s.modulus_bound());
}

#[test]
fn slice_l1_norm_decreases_into_the_cone() {
    let s = stf();
    let spec = spec();
    let norms: Vec<f64> = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8]
        .iter()
        .map(|&v| slice_norm(&s, &spec, &cone().project(&[v; 3]).unwrap(), 1.0).unwrap())
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn hardy_supremum_sits_at_the_smallest_probe() {
    let s = stf();
    let spec = spec();
    let coarse = TLattice::new(3, 0.01, 2.0, 3).unwrap();
    let fine = TLattice::new(3, 0.01, 2f64.powf(0.25), 9).unwrap();
    let a = hardy_norm(&s, &cone(), 1, &coarse, &spec).unwrap();
    let b = hardy_norm(&s, &cone(), 1, &fine, &spec).unwrap();
    assert_eq!(a.t_max, vec![0.01; 3]);
    assert_eq!(b.t_max, vec![0.01; 3]);
    assert!((a.norm - b.norm).abs() <= 1e-12 * a.norm);
    assert!(matches!(
        hardy_norm(&s, &cone(), 3, &coarse, &spec),
        Err(Error::ConfigInvalid(_))
    ));
}

#[test]
fn l2_slice_norm_matches_plancherel() {
    let s = stf();
    let spec = spec();
    for v in [0.0, 0.1, 0.3] {
        let y = cone().project(&[v; 3]).unwrap();
        let grid = slice_norm(&s, &spec, &y, 2.0).unwrap();
        let plancherel = s.plancherel_slice_norm(&y);
        assert!(((grid - plancherel) / plancherel).abs() < 1e-3);
    }
}

#[test]
fn spectral_json_round_trip() {
    let s = make_bump_psi_with(&cone().dual().unwrap(), &CENTER, RADIUS, 0.5, 8).unwrap();
    let back = SpectralTestFunction::from_json_str(&s.to_json_string().unwrap()).unwrap();
    assert_eq!(back.nodes, s.nodes);
    assert_eq!(back.psi, s.psi);
    assert!(SpectralTestFunction::from_json_str(
        r#"{"nodes":[[1,1]],"weights":[1,2],"psi":[[1,0]]}"#
    )
    .is_err());
}

#[test]
fn axis_cauchy_szego_closed_form() {
    let i = Complex64::i();
    let c = cauchy_szego(&PolyhedralCone::axis(2), &[i, i]).unwrap();
    assert!((c - Complex64::new(1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-15);
    let c3 = cauchy_szego(&PolyhedralCone::axis(3), &[i, i, i]).unwrap();
    assert!((c3 - Complex64::new((2.0 * PI).powi(-3), 0.0)).norm() < 1e-15);
}

/// Composite Simpson quadrature of `e^{2πiz·ξ}` over `[0, R]²`.
fn truncated_quadrature(z: &[Complex64; 2], r: f64, intervals: usize) -> Complex64 {
    let h = r / intervals as f64;
    let weight = |k: usize| match k {
        0 => 1.0,
        k if k == intervals => 1.0,
        k if k % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..=intervals {
        for b in 0..=intervals {
            let xi = [a as f64 * h, b as f64 * h];
            let phase = Complex64::new(0.0, 2.0 * PI) * (z[0] * xi[0] + z[1] * xi[1]);
            acc += weight(a) * weight(b) * phase.exp();
        }
    }
    acc * (h / 3.0).powi(2)
}

#[test]
fn cauchy_szego_matches_truncated_quadrature() {
    let i = Complex64::i();
    for z in [
        [i, 2.0 * i],
        [Complex64::new(0.3, 1.0), Complex64::new(-0.2, 2.0)],
    ] {
        for c in [PolyhedralCone::axis(2), cone()] {
            let exact = cauchy_szego(&c, &z).unwrap();
            let quad = truncated_quadrature(&z, 40.0, 2000);
            assert!(
                (exact - quad).norm() < 1e-4 * exact.norm(),
                "{exact} vs {quad}"
            );
        }
    }
}

#[test]
fn cauchy_szego_is_homogeneous() {
    let c = cone();
    let z = [Complex64::new(0.4, 0.7), Complex64::new(-1.1, 0.9)];
    let base = cauchy_szego(&c, &z).unwrap();
    for lambda in [0.5, 2.0, 7.3] {
        let scaled = cauchy_szego(&c, &z.map(|v| v * lambda)).unwrap();
        assert!(
            (scaled - base / (lambda * lambda)).norm() < 1e-12 * base.norm() / (lambda * lambda)
        );
    }
}

#[test]
fn cauchy_szego_rejects_boundary_and_high_dimension() {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    assert!(matches!(
        cauchy_szego(&cone(), &[i, one]),
        Err(Error::BoundaryY)
    ));
    assert!(matches!(
        cauchy_szego(&cone(), &[-i, i]),
        Err(Error::BoundaryY)
    ));
    assert!(matches!(
        cauchy_szego(&PolyhedralCone::axis(5), &[i; 5]),
        Err(Error::UnsupportedDimension(5))
    ));
}
