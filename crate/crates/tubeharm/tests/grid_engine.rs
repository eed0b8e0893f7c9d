//! Fourier transforms, multipliers, norms, derivatives and the TGF1 format.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::f64::consts::PI;
use tubeharm::grid::tgf::{read_tgf, read_tgf_data, write_csv, write_tgf, write_tgf_channels};
use tubeharm::grid::{
    apply_multiplier, directional_fd, directional_fd_stencil, Domain, GridFunction, GridSpec, Norm,
};
use tubeharm::Error;

const ROUND_TRIP_TOL: f64 = 1e-12;
const GAUSSIAN_TOL: f64 = 1e-8;

fn random_function(spec: &GridSpec, seed: u64) -> GridFunction {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let values = (0..spec.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::from_values(spec, values, Domain::Space).unwrap()
}

fn bump(spec: &GridSpec) -> GridFunction {
    GridFunction::from_real_fn(spec, |x| {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp() * (1.0 + 0.3 * x[0])
    })
}

#[test]
fn grid_spec_validation() {
    assert!(GridSpec::new(vec![8, 8], vec![1.0, 1.0]).is_err());
    assert!(GridSpec::new(vec![48, 64], vec![1.0, 1.0]).is_err());
    assert!(GridSpec::new(vec![64, 64], vec![1.0, 2.0]).is_err());
    assert!(GridSpec::new(vec![64, 64], vec![0.0, 0.0]).is_err());
    let s = GridSpec::cube(2, 64, 4.0).unwrap();
    assert_eq!(s.h(), 0.125);
    assert_eq!(s.len(), 4096);
}

#[test]
fn constant_transforms_to_delta() {
    let spec = GridSpec::cube(2, 32, 3.0).unwrap();
    let f = GridFunction::from_real_fn(&spec, |_| 1.0)
        .fourier_forward()
        .unwrap();
    let centre = 16 * 32 + 16;
    assert!((f.values[centre] - Complex64::new(36.0, 0.0)).norm() < 1e-10);
    let rest = f
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != centre)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    assert!(rest < 1e-10);
}

#[test]
fn round_trip_is_identity() {
    for spec in [
        GridSpec::cube(1, 256, 5.0).unwrap(),
        GridSpec::cube(2, 64, 8.0).unwrap(),
        GridSpec::cube(3, 16, 2.0).unwrap(),
    ] {
        let f = random_function(&spec, 1);
        let back = f.fourier_forward().unwrap().fourier_inverse().unwrap();
        assert!(f.max_abs_diff(&back) < ROUND_TRIP_TOL);
    }
}

#[test]
fn transforms_check_domain() {
    let spec = GridSpec::cube(1, 16, 1.0).unwrap();
    let f = GridFunction::zeros(&spec);
    assert!(matches!(f.fourier_inverse(), Err(Error::ShapeMismatch(_))));
    let g = f.fourier_forward().unwrap();
    assert!(matches!(g.fourier_forward(), Err(Error::ShapeMismatch(_))));
}

#[test]
fn gaussian_is_self_dual() {
    let spec = GridSpec::cube(2, 128, 8.0).unwrap();
    let f = GridFunction::from_real_fn(&spec, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp());
    let g = f.fourier_forward().unwrap();
    let k = |i: usize| (i as f64 - 64.0) / 16.0;
    for (flat, v) in g.values.iter().enumerate() {
        let (xi1, xi2) = (k(flat / 128), k(flat % 128));
        let exact = (-PI * (xi1 * xi1 + xi2 * xi2)).exp();
        assert!((v - Complex64::new(exact, 0.0)).norm() < GAUSSIAN_TOL);
    }
}

#[test]
fn parseval() {
    let spec = GridSpec::cube(2, 64, 4.0).unwrap();
    let f = random_function(&spec, 2);
    let g = f.fourier_forward().unwrap();
    let space: f64 = spec.cell_volume() * f.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let freq: f64 = (1.0 / 64.0) * g.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    assert!((space - freq).abs() < 1e-10 * space);
}

#[test]
fn unit_multiplier_is_identity() {
    let spec = GridSpec::cube(2, 32, 2.0).unwrap();
    let f = random_function(&spec, 3);
    let g = apply_multiplier(&f, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    assert!(f.max_abs_diff(&g) < ROUND_TRIP_TOL);
}

#[test]
fn multipliers_commute_and_compose() {
    let spec = GridSpec::cube(2, 32, 2.0).unwrap();
    let f = random_function(&spec, 4);
    let m1 = |xi: &[f64], _: bool| Complex64::new((-xi[0].abs()).exp(), 0.0);
    let m2 = |xi: &[f64], _: bool| Complex64::new(0.0, xi[1]).exp();
    let a = apply_multiplier(&apply_multiplier(&f, m1).unwrap(), m2).unwrap();
    let b = apply_multiplier(&apply_multiplier(&f, m2).unwrap(), m1).unwrap();
    let c = apply_multiplier(&f, |xi, nyq| m1(xi, nyq) * m2(xi, nyq)).unwrap();
    assert!(a.max_abs_diff(&b) < ROUND_TRIP_TOL);
    assert!(a.max_abs_diff(&c) < ROUND_TRIP_TOL);
}

#[test]
fn poisson_multiplier_matches_trapezoid_convolution() {
    // Axis data f(x₁) = e^{−x₁²}, constant in x₂.
    let spec = GridSpec::new(vec![2048, 16], vec![128.0, 1.0]).unwrap();
    let t = 0.5;
    let f = GridFunction::from_real_fn(&spec, |x| (-x[0] * x[0]).exp());
    let u = apply_multiplier(&f, |xi, _| {
        Complex64::new((-2.0 * PI * t * xi[0].abs()).exp(), 0.0)
    })
    .unwrap();
    let fine = 0.005;
    let oracle = |x: f64| {
        let n = (20.0 / fine) as i64;
        (-n..=n)
            .map(|k| {
                let y = k as f64 * fine;
                let w = if k.abs() == n { 0.5 } else { 1.0 };
                w * fine * (t / PI) / ((x - y).powi(2) + t * t) * (-y * y).exp()
            })
            .sum::<f64>()
    };
    for i in (896..1152).step_by(16) {
        let x = spec.coord(0, i);
        let got = u.values[i * 16].re;
        // The trapezoid oracle truncates at |y| ≤ 20, where e^{−y²} is negligible.
        assert!(
            (got - oracle(x)).abs() < 1e-4,
            "x = {x}: {got} vs {}",
            oracle(x)
        );
    }
}

#[test]
fn l1_norm_of_constant() {
    let spec = GridSpec::cube(2, 32, 3.0).unwrap();
    let f = GridFunction::from_real_fn(&spec, |_| -2.5);
    assert!((f.lp_norm(Norm::L1) - 2.5 * 36.0).abs() < 1e-10);
    assert!((f.lp_norm(Norm::Inf) - 2.5).abs() < 1e-15);
    assert!((f.lp_norm(Norm::L2) - 2.5 * 6.0).abs() < 1e-10);
}

#[test]
fn spectral_derivative_of_sine() {
    let l = 4.0;
    let spec = GridSpec::cube(2, 64, l).unwrap();
    let w = 2.0 * PI / l;
    let f = GridFunction::from_real_fn(&spec, |x| (w * x[0]).sin());
    let d = directional_fd(&f, &[1.0, 0.0], 1).unwrap();
    for (flat, v) in d.values.iter().enumerate() {
        let x = spec.point(flat);
        assert!((v - Complex64::new(w * (w * x[0]).cos(), 0.0)).norm() < 1e-8);
    }
}

#[test]
fn second_derivative_matches_stencil_at_second_order() {
    let v = [0.6, 0.8];
    let err = |size: usize| {
        let spec = GridSpec::cube(2, size, 6.0).unwrap();
        let f = bump(&spec);
        directional_fd(&f, &v, 2)
            .unwrap()
            .max_abs_diff(&directional_fd_stencil(&f, &v, 2).unwrap())
    };
    let (coarse, fine) = (err(64), err(128));
    // Halving h divides the stencil error by about four.
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.2, "observed order {order}");
}

#[test]
fn axis_direction_is_axis_derivative() {
    let spec = GridSpec::cube(2, 32, 4.0).unwrap();
    let f = bump(&spec);
    let d = directional_fd(&f, &[0.0, 1.0], 1).unwrap();
    let axis = apply_multiplier(&f, |xi, nyq| {
        if nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * xi[1])
        }
    })
    .unwrap();
    assert_eq!(d, axis);
    assert!(matches!(
        directional_fd(&f, &[1.0], 1),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn tgf_round_trip() {
    let spec = GridSpec::new(vec![16, 32], vec![2.0, 4.0]).unwrap();
    let f = random_function(&spec, 5);
    let mut buf = Vec::new();
    write_tgf(&mut buf, &f).unwrap();
    assert_eq!(&buf[..4], b"TGF1");
    assert_eq!(read_tgf(&mut buf.as_slice()).unwrap(), f);

    let values: Vec<Complex64> = f.values.iter().flat_map(|&v| [v, v * 2.0, -v]).collect();
    let mut buf = Vec::new();
    write_tgf_channels(&mut buf, &spec, Domain::Frequency, 3, &values).unwrap();
    let data = read_tgf_data(&mut buf.as_slice()).unwrap();
    assert_eq!((data.channels, data.domain), (3, Domain::Frequency));
    assert_eq!(data.values, values);
}

#[test]
fn tgf_rejects_garbage() {
    assert!(read_tgf(&mut &b"NOPE\0\0\0\0"[..]).is_err());
    let spec = GridSpec::cube(1, 16, 1.0).unwrap();
    let mut buf = Vec::new();
    write_tgf(&mut buf, &GridFunction::zeros(&spec)).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(read_tgf(&mut buf.as_slice()).is_err());
}

#[test]
fn csv_has_one_row_per_point() {
    let spec = GridSpec::cube(2, 16, 1.0).unwrap();
    let f = bump(&spec);
    let mut buf = Vec::new();
    write_csv(&mut buf, &f).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(|c: char| c.is_alphabetic()))
        .collect();
    assert_eq!(rows.len(), 256);
    assert_eq!(rows[0].split(',').count(), 4);
}

proptest::proptest! {
    #[test]
    fn round_trip_holds_for_arbitrary_data(
        exp in 4u32..10,
        half in 0.5f64..20.0,
        seed in proptest::prelude::any::<u64>(),
    ) {
        let spec = GridSpec::cube(1, 1 << exp, half).unwrap();
        let f = random_function(&spec, seed);
        let back = f.fourier_forward().unwrap().fourier_inverse().unwrap();
        proptest::prop_assert!(f.max_abs_diff(&back) < ROUND_TRIP_TOL);
    }
}
