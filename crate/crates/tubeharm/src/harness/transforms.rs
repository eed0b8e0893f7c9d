//! Experiments on the Poisson extension and the holomorphic lift:
//! reproducing formula, harmonicity, Green-type identity, decay and
//! subharmonic majorization.

use super::{
    bump_family, default_bump, Check, ExperimentConfig, Family, FittedConstant, Recorder,
    FAMILY_SIZE,
};
use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Norm, Spectrum};
use crate::numerics::{composite_gauss_legendre, dot, geometric_grid, linear_fit, KahanSum};
use crate::poisson::{iterated_poisson, poisson_symbol, TLattice, DEFAULT_SAMPLE_BUDGET};
use crate::spectral::{cauchy_szego_with, hardy_norm, lift_field};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

/// Reproducing-formula tolerance (input-relative sup norm).
pub const REPRODUCING_TOL: f64 = 1e-3;
/// Hidden-parameter agreement.
pub const HIDDEN_PARAMETER_TOL: f64 = 1e-14;
/// Harmonicity residual relative to `‖f‖_∞`.
pub const HARMONICITY_TOL: f64 = 1e-6;
/// Relative gap of the Green-type identity.
pub const GREEN_TOL: f64 = 1e-2;
/// Additive slack of the subharmonic majorization.
pub const SUBHARMONIC_SLACK: f64 = 1e-6;
/// Tolerance on log-log decay slopes.
pub const SLOPE_TOL: f64 = 0.05;
/// Relative stability of fitted constants under grid refinement.
pub const REFINEMENT_TOL: f64 = 0.2;

/// Spectral magnitude of the default bump on the `L = 8`, 128² grid.
const DEFAULT_MAGNITUDE: f64 = 2.0 * SQRT_2;

fn main_grid(cfg: &ExperimentConfig, size: usize, half: f64) -> Result<GridSpec> {
    cfg.grid(cfg.cone.n, size, half)
}

/// Lift vs boundary convolution on every lattice node, plus two lifts with
/// the same projection.
pub(crate) fn reproducing(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    let spec = main_grid(cfg, 128, 8.0)?;
    let lattice = TLattice::for_grid(&spec, cone.m, cfg.t_levels_or(6))?;
    let stf = default_bump(cone, DEFAULT_MAGNITUDE)?.build(&cone.dual()?)?;
    let boundary = stf.boundary_grid(&spec)?;
    let scale = boundary.lp_norm(Norm::Inf);
    let field = lift_field(&stf, cone, &lattice, &spec, DEFAULT_SAMPLE_BUDGET)?;
    let spectrum = Spectrum::of(&boundary)?;
    let residuals: Vec<f64> = lattice
        .nodes
        .par_iter()
        .zip(&field.values)
        .map(|(t, lifted)| {
            let conv = spectrum.apply(|xi, _| Complex64::new(poisson_symbol(cone, t, xi), 0.0));
            lifted.max_abs_diff(&conv) / scale
        })
        .collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    rec.measure("nodes", lattice.len() as f64);
    rec.measure("boundary_sup", scale);
    rec.check(Check::below("reproducing_residual", worst, REPRODUCING_TOL));

    if let Some(null) = null_vector(cone) {
        // t′ = t + δv keeps π(t′) = π(t) and all coordinates positive.
        let t = lattice.nodes[lattice.len() / 2].clone();
        let delta = 0.5
            * t.iter()
                .zip(&null)
                .filter(|(_, v)| **v < 0.0)
                .map(|(tk, v)| tk / v.abs())
                .fold(f64::INFINITY, f64::min);
        let t2: Vec<f64> = t.iter().zip(&null).map(|(a, v)| a + delta * v).collect();
        let a = stf.lifted_derivative_grid(cone, &spec, &t, &[])?;
        let b = stf.lifted_derivative_grid(cone, &spec, &t2, &[])?;
        rec.measure("hidden_shift", delta);
        rec.check(Check::at_most(
            "hidden_parameter_difference",
            a.max_abs_diff(&b) / scale,
            HIDDEN_PARAMETER_TOL,
        ));
    }
    Ok(())
}

/// A vector `v ≠ 0` with `Σ v_μ e_μ = 0`, when `m > n`.
fn null_vector(cone: &PolyhedralCone) -> Option<Vec<f64>> {
    if cone.m <= cone.n {
        return None;
    }
    let cols: Vec<&[f64]> = cone.generators[..cone.n]
        .iter()
        .map(|g| g.as_slice())
        .collect();
    let a = crate::numerics::solve_columns(&cols, &cone.generators[cone.n])?;
    let mut v = vec![0.0; cone.m];
    v[..cone.n].copy_from_slice(&a);
    v[cone.n] = -1.0;
    Some(v)
}

/// `Δ_μ = X_μ² + ∂²_{t_μ}` on directional and iterated Poisson fields.
pub(crate) fn harmonicity(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    let spec = main_grid(cfg, 128, 8.0)?;
    let lattice = TLattice::for_grid(&spec, cone.m, cfg.t_levels_or(6))?;
    let f = default_bump(cone, DEFAULT_MAGNITUDE)?
        .build(&cone.dual()?)?
        .boundary_grid(&spec)?;
    let sup = f.lp_norm(Norm::Inf);
    let spectrum = Spectrum::of(&f)?;
    let laplacian_residual = |t: &[f64], mu: usize, iterated: bool| -> f64 {
        let e = &cone.generators[mu];
        let base = |xi: &[f64]| {
            if iterated {
                poisson_symbol(cone, t, xi)
            } else {
                (-2.0 * PI * t[mu] * dot(e, xi).abs()).exp()
            }
        };
        // X² and ∂_t² are applied as separate fields and summed in space.
        let xx = spectrum.apply(|xi, _| {
            let x = Complex64::new(0.0, 2.0 * PI * dot(e, xi));
            x * x * base(xi)
        });
        let tt = spectrum.apply(|xi, _| {
            let d = -2.0 * PI * dot(e, xi).abs();
            Complex64::new(d * d * base(xi), 0.0)
        });
        xx.values
            .iter()
            .zip(&tt.values)
            .map(|(a, b)| (a + b).norm())
            .fold(0.0, f64::max)
            / sup
    };
    let levels: Vec<f64> = (0..lattice.levels)
        .map(|k| lattice.t_min * lattice.ratio.powi(k as i32))
        .collect();
    let mut directional: f64 = 0.0;
    for mu in 0..cone.m {
        for &tm in &levels {
            let mut t = vec![1.0; cone.m];
            t[mu] = tm;
            directional = directional.max(laplacian_residual(&t, mu, false));
        }
    }
    let iterated = lattice
        .nodes
        .par_iter()
        .map(|t| {
            (0..cone.m)
                .map(|mu| laplacian_residual(t, mu, true))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    rec.check(Check::below(
        "directional_laplacian_residual",
        directional,
        HARMONICITY_TOL,
    ));
    rec.check(Check::below(
        "iterated_laplacian_residual",
        iterated,
        HARMONICITY_TOL,
    ));
    Ok(())
}

/// `∫∫ Δ_μ|u|² t dt dx` over three decades of `t` vs `∫|f_ε|²`.
pub(crate) fn green(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    let spec = main_grid(cfg, 128, 8.0)?;
    let stf = default_bump(cone, DEFAULT_MAGNITUDE)?.build(&cone.dual()?)?;
    let eps = vec![4.0 * spec.h(); cone.m];
    let f_eps = stf.slice_grid(&spec, &cone.project(&eps)?)?;
    let hv = spec.cell_volume();
    let rhs = hv * KahanSum::sum_iter(f_eps.values.iter().map(|z| z.norm_sqr()));
    let spectrum = Spectrum::of(&f_eps)?;
    let (t_lo, t_hi): (f64, f64) = (1e-3, 1.0);
    let (lt, w) = composite_gauss_legendre(12, 8, t_lo.ln(), t_hi.ln());
    let mut worst: f64 = 0.0;
    for mu in 0..cone.m {
        let e = &cone.generators[mu];
        let layer = |t: f64| -> f64 {
            let field = |factor: &dyn Fn(f64) -> Complex64| {
                spectrum.apply(|xi, nyq| {
                    let s = dot(e, xi);
                    let f = factor(s);
                    // Odd powers of the X symbol vanish at the Nyquist frequency.
                    let f = if nyq && f.im != 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        f
                    };
                    f * (-2.0 * PI * t * s.abs()).exp()
                })
            };
            let u = field(&|_| Complex64::new(1.0, 0.0));
            let xu = field(&|s| Complex64::new(0.0, 2.0 * PI * s));
            let tu = field(&|s| Complex64::new(-2.0 * PI * s.abs(), 0.0));
            let lap =
                field(&|s| Complex64::new(-(2.0 * PI * s).powi(2) + (2.0 * PI * s).powi(2), 0.0));
            // Δ|u|² = 2 Re(ū Δu) + 2|X u|² + 2|∂_t u|².
            hv * KahanSum::sum_iter((0..u.values.len()).map(|i| {
                2.0 * (u.values[i].conj() * lap.values[i]).re
                    + 2.0 * xu.values[i].norm_sqr()
                    + 2.0 * tu.values[i].norm_sqr()
            }))
        };
        let lhs = KahanSum::sum_iter(
            lt.par_iter()
                .zip(&w)
                .map(|(l, wk)| {
                    let t = l.exp();
                    wk * layer(t) * t * t
                })
                .collect::<Vec<_>>(),
        );
        let gap = (lhs - rhs).abs() / rhs;
        rec.measure(format!("lhs_mu{mu}"), lhs);
        worst = worst.max(gap);
    }
    rec.measure("rhs", rhs);
    rec.check(Check::below("green_relative_gap", worst, GREEN_TOL));
    Ok(())
}

/// `|F(x+iπ(t+ε))|^q ≤ (|f_ε|^q * P_t)(x) + slack` on every node.
pub(crate) fn subharmonic(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    let spec = main_grid(cfg, 128, 8.0)?;
    let lattice = TLattice::for_grid(&spec, cone.m, cfg.t_levels_or(6))?;
    let bump = default_bump(cone, DEFAULT_MAGNITUDE)?;
    let dual = cone.dual()?;
    let eps = vec![4.0 * spec.h(); cone.m];
    let y_eps = cone.project(&eps)?;
    // Both sides are homogeneous of degree q: normalize sup|f_ε| = 1 so the
    // additive slack is measured against unit-size data.
    let raw = bump
        .build(&dual)?
        .slice_grid(&spec, &y_eps)?
        .lp_norm(Norm::Inf);
    let stf = crate::spectral::make_bump_psi(&dual, &bump.center, bump.radius, 1.0 / raw)?;
    let f_eps = stf.slice_grid(&spec, &y_eps)?;
    rec.measure("slice_sup", f_eps.lp_norm(Norm::Inf));
    for (q, name) in [(0.5, "half"), (1.0, "one")] {
        let powered = f_eps.map(|z| Complex64::new(z.norm().powf(q), 0.0));
        let spectrum = Spectrum::of(&powered)?;
        let worst = lattice
            .nodes
            .par_iter()
            .map(|t| -> Result<f64> {
                let shifted: Vec<f64> = t.iter().zip(&eps).map(|(a, b)| a + b).collect();
                let lhs = stf.lifted_derivative_grid(cone, &spec, &shifted, &[])?;
                let rhs = spectrum.apply(|xi, _| Complex64::new(poisson_symbol(cone, t, xi), 0.0));
                Ok(lhs
                    .values
                    .iter()
                    .zip(&rhs.values)
                    .map(|(a, b)| a.norm().powf(q) - b.re)
                    .fold(f64::NEG_INFINITY, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        rec.check(Check::at_most(
            format!("subharmonic_excess_q_{name}"),
            worst,
            SUBHARMONIC_SLACK,
        ));
    }
    Ok(())
}

/// Decay of `sup|f * P_t|` and of the extremal `H²` family against `|R(0,t)|`.
pub(crate) fn decay(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    // p = 1: unit-mass Gaussian, isotropic sweep t = s·(1,…,1) over one decade.
    let spec = main_grid(cfg, 1024, 128.0)?;
    let scales = geometric_grid(1.0, 10.0, 9);
    let (slope, c_fine) = l1_decay(cone, &spec, &scales)?;
    let (_, c_coarse) = l1_decay(
        cone,
        &GridSpec::cube(cone.n, spec.sizes[0] / 2, spec.box_half[0])?,
        &scales,
    )?;
    rec.measure("l1_decay_constant", c_fine);
    rec.measure("l1_decay_constant_coarse", c_coarse);
    rec.check(Check::within("l1_decay_slope", slope, -1.0, SLOPE_TOL));
    rec.check(Check::at_most(
        "l1_decay_constant_refinement_change",
        (c_fine - c_coarse).abs() / c_fine,
        REFINEMENT_TOL,
    ));

    // p = 2, extremal family F_r = C(· + iπ(r)) / ‖C(· + iπ(r))‖_{H²}:
    // sup_x |F_r(x + iπ(r))| = |C(2iπ(r))| / ‖C(· + iπ(r))‖₂.
    let spec2 = main_grid(cfg, 512, 32.0)?;
    let dual = cone.dual()?;
    let fan = dual.simplicial_fan();
    let sweep = geometric_grid(0.5, 5.0, 9);
    let mut logs_v = Vec::new();
    let mut logs_s = Vec::new();
    for &s in &sweep {
        let r = vec![s; cone.m];
        let y = cone.project(&r)?;
        let kernel = |x: &[f64], scale: f64| -> Result<Complex64> {
            let z: Vec<Complex64> = x
                .iter()
                .zip(&y)
                .map(|(a, b)| Complex64::new(*a, scale * b))
                .collect();
            cauchy_szego_with(&dual, &fan, &z)
        };
        let values = (0..spec2.len())
            .into_par_iter()
            .map(|i| kernel(&spec2.point(i), 1.0).map(|c| c.norm_sqr()))
            .collect::<Result<Vec<f64>>>()?;
        let l2 = (spec2.cell_volume() * KahanSum::sum_iter(values)).sqrt();
        let peak = (0..spec2.len())
            .into_par_iter()
            .map(|i| kernel(&spec2.point(i), 2.0).map(|c| c.norm()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        logs_v.push(cone.zonotope_volume(&r).ln());
        logs_s.push((peak / l2).ln());
    }
    let (slope2, _) = linear_fit(&logs_v, &logs_s);
    rec.check(Check::within("h2_extremal_slope", slope2, -0.5, SLOPE_TOL));

    // Boundary growth bound for the bump family over five decades of r.
    let spec3 = main_grid(cfg, 128, 8.0)?;
    let probe = TLattice::new(cone.m, 1e-3, 2.0, 4)?;
    let sweep = geometric_grid(1e-4, 10.0, 11);
    let ratios = |family: Family| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for p in bump_family(
            cone,
            cfg.seed,
            family,
            FAMILY_SIZE,
            DEFAULT_MAGNITUDE * 0.85,
        )? {
            let stf = p.build(&dual)?;
            let norm = hardy_norm(&stf, cone, 2, &probe, &spec3)?.norm;
            let mut worst: f64 = 0.0;
            for &s in &sweep {
                let r = vec![s; cone.m];
                let sup = stf
                    .slice_grid(&spec3, &cone.project(&r)?)?
                    .lp_norm(Norm::Inf);
                worst = worst.max(sup * cone.zonotope_volume(&r).sqrt() / norm);
            }
            out.push(worst);
        }
        Ok(out)
    };
    rec.fitted(FittedConstant::fit(
        "hardy_growth_constant",
        &ratios(Family::Calibration)?,
        &ratios(Family::HeldOut)?,
    ));
    Ok(())
}

/// Log-log slope of `sup|f*P_t|` against `|R(0,t)|` and the largest
/// `sup|f*P_t|·|R(0,t)|/‖f‖₁`.
fn l1_decay(cone: &PolyhedralCone, spec: &GridSpec, scales: &[f64]) -> Result<(f64, f64)> {
    let sigma: f64 = 0.5;
    let norm = (2.0 * PI * sigma * sigma).powf(spec.n() as f64 / 2.0);
    let f = GridFunction::from_real_fn(spec, |x| (-dot(x, x) / (2.0 * sigma * sigma)).exp() / norm);
    let l1 = f.lp_norm(Norm::L1);
    if !(l1 > 0.0) {
        return Err(Error::ConfigInvalid(
            "decay probe vanished on the grid".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut c: f64 = 0.0;
    for &s in scales {
        let t = vec![s; cone.m];
        let sup = iterated_poisson(&f, cone, &t)?.lp_norm(Norm::Inf);
        let vol = cone.zonotope_volume(&t);
        xs.push(vol.ln());
        ys.push(sup.ln());
        c = c.max(sup * vol / l1);
    }
    Ok((linear_fit(&xs, &ys).0, c))
}
