//! The one-dimensional Hilbert-valued machinery: continuous and discrete
//! Calderón reproducing formulas, the Plancherel–Pólya inequality and the
//! size/smoothness/cancellation conditions of the remainder kernel.
//!
//! Inputs are mean-zero (derivatives of Gaussians), since `φ̂(0) = 0` makes
//! only such functions reproducible.

use super::{Check, ExperimentConfig, Family, FittedConstant, Recorder, FAMILY_SIZE};
use crate::error::Result;
use crate::grid::{GridSpec, Norm};
use crate::wavelet::{
    calderon_reconstruct, kernel_spot_check, make_phi, plancherel_polya_check, remainder_kernel,
    wavelet_decompose, DyadicGrid, HValuedGridFunction1D, DEFAULT_ALPHA,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Relative `L²` error of the continuous reconstruction.
pub const CALDERON_TOL: f64 = 1e-3;
/// Absolute bound on `|∫ k|` for the remainder kernel.
pub const KERNEL_CANCELLATION_TOL: f64 = 1e-6;
/// Upper bound on the first-order synthesis residual at `N = 6`.
pub const SYNTHESIS_RESIDUAL_MAX: f64 = 0.2;
/// Random `(x, u)` pairs per kernel family.
pub const KERNEL_PAIRS: usize = 100;

const SAMPLES: usize = 4096;
/// The remainder kernel is sampled finer so that the smallest scale
/// `t = 0.01` spans ten samples.
const KERNEL_SAMPLES: usize = 1 << 16;
const BOX_HALF: f64 = 32.0;
/// Scale range of the continuous reconstruction and its quadrature order.
const CALDERON_RANGE: (f64, f64) = (0.005, 200.0);
const CALDERON_LEVELS: usize = 64;
/// Scale range of the dyadic decompositions.
const DYADIC_RANGE: (f64, f64) = (0.01, 40.0);
/// Enlargement of the cells on the sup side of Plancherel–Pólya.
const PP_C0: f64 = 2.0;
/// Gaussian-derivative bumps per member of the Plancherel–Pólya family.
const BUMPS_PER_MEMBER: usize = 3;

/// The signal grid; box doublings apply here but not to the kernel grid,
/// whose extent defines the probed separation range.
fn spec(cfg: &ExperimentConfig) -> Result<GridSpec> {
    let mut spec = GridSpec::new(vec![SAMPLES], vec![BOX_HALF])?;
    for _ in 0..cfg.box_doublings {
        spec = spec.doubled();
    }
    Ok(spec)
}

fn rng(cfg: &ExperimentConfig, family: Family) -> SplitMix64 {
    let stream: u64 = match family {
        Family::Calibration => 0xA,
        Family::HeldOut => 0xB,
    };
    SplitMix64::seed_from_u64(cfg.seed ^ (stream << 56) ^ 0x1D)
}

/// Two channels: `−x e^{−x²/2}` and `(−(x−1)e^{−(x−1)²}, 0.3(1−2x²)e^{−x²})`.
pub fn reference_input(spec: &GridSpec) -> Result<HValuedGridFunction1D> {
    let xs = spec.axis_coords().remove(0);
    let values = xs
        .iter()
        .flat_map(|&x| {
            let g = (-x * x / 2.0).exp();
            let y = x - 1.0;
            [
                Complex64::new(-x * g, 0.0),
                Complex64::new(
                    -y * (-y * y).exp(),
                    0.3 * (1.0 - 2.0 * x * x) * (-x * x).exp(),
                ),
            ]
        })
        .collect();
    HValuedGridFunction1D::new(spec, 2, values)
}

/// Sum of seeded Gaussian-derivative bumps in two channels.
fn multi_bump(spec: &GridSpec, rng: &mut SplitMix64) -> Result<HValuedGridFunction1D> {
    let bumps: Vec<(f64, f64, [f64; 2])> = (0..BUMPS_PER_MEMBER)
        .map(|_| {
            (
                rng.gen_range(-8.0..=8.0),
                rng.gen_range(0.5..=1.5),
                [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)],
            )
        })
        .collect();
    let xs = spec.axis_coords().remove(0);
    let values = xs
        .iter()
        .flat_map(|&x| {
            let mut v = [0.0; 2];
            for &(c, w, a) in &bumps {
                let s = (x - c) / w;
                let d = -s * (-0.5 * s * s).exp();
                v[0] += a[0] * d;
                v[1] += a[1] * d;
            }
            v.map(|r| Complex64::new(r, 0.0))
        })
        .collect();
    HValuedGridFunction1D::new(spec, 2, values)
}

/// `(x, u)` pairs with `x` uniform in `[−L/4, L/4]` and `|x − u|`
/// stratified log-uniformly over `separation` (one jittered draw per
/// stratum, random sign): the kernel conditions are scale-invariant, so
/// every scale of the kernel is probed equally.
fn kernel_pairs(rng: &mut SplitMix64, separation: (f64, f64)) -> Vec<(f64, f64)> {
    let (lo, hi) = (separation.0.ln(), separation.1.ln());
    let width = (hi - lo) / KERNEL_PAIRS as f64;
    (0..KERNEL_PAIRS)
        .map(|k| {
            let x = rng.gen_range(-0.25 * BOX_HALF..=0.25 * BOX_HALF);
            let s = (lo + width * (k as f64 + rng.gen_range(0.0..1.0))).exp();
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (x, x - sign * s)
        })
        .collect()
}

pub(crate) fn wavelet(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let spec = spec(cfg)?;
    let pair = make_phi()?;
    let f = reference_input(&spec)?;

    let rebuilt = calderon_reconstruct(&f, &pair, CALDERON_RANGE, CALDERON_LEVELS)?;
    let err = f.combine(1.0, &rebuilt, -1.0)?.norm(Norm::L2) / f.norm(Norm::L2);
    rec.check(Check::below(
        "calderon_reconstruction_error",
        err,
        CALDERON_TOL,
    ));

    let residuals = [3u32, 6, 9]
        .iter()
        .map(|&n| {
            let grid = DyadicGrid::covering(DEFAULT_ALPHA, n, DYADIC_RANGE.0, DYADIC_RANGE.1)?;
            let r = wavelet_decompose(&f, &pair, &grid)?.residual;
            rec.measure(format!("synthesis_residual_n{n}"), r);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    rec.check(Check::below(
        "synthesis_residual_n6_minus_n3",
        residuals[1] - residuals[0],
        0.0,
    ));
    rec.check(Check::below(
        "synthesis_residual_n9_minus_n6",
        residuals[2] - residuals[1],
        0.0,
    ));
    rec.check(Check::below(
        "synthesis_residual_n6",
        residuals[1],
        SYNTHESIS_RESIDUAL_MAX,
    ));

    let grid = DyadicGrid::covering(DEFAULT_ALPHA, 6, DYADIC_RANGE.0, DYADIC_RANGE.1)?;
    let pp = |family: Family| -> Result<Vec<f64>> {
        let mut r = rng(cfg, family);
        (0..FAMILY_SIZE)
            .map(|_| {
                Ok(plancherel_polya_check(&multi_bump(&spec, &mut r)?, &pair, &grid, PP_C0)?.ratio)
            })
            .collect()
    };
    rec.fitted(FittedConstant::fit(
        "plancherel_polya_ratio",
        &pp(Family::Calibration)?,
        &pp(Family::HeldOut)?,
    ));

    let kernel_spec = GridSpec::new(vec![KERNEL_SAMPLES], vec![BOX_HALF])?;
    let kernel = remainder_kernel(&pair, &grid, &kernel_spec)?;
    let separation = (4.0 * kernel_spec.h(), 0.5 * BOX_HALF);
    let checks = [Family::Calibration, Family::HeldOut].map(|family| {
        let mut r = rng(cfg, family);
        kernel_spot_check(&kernel, &kernel_pairs(&mut r, separation))
    });
    let [a, b] = &checks;
    rec.fitted(FittedConstant::fit(
        "kernel_size_constant",
        &[a.size],
        &[b.size],
    ));
    rec.fitted(FittedConstant::fit(
        "kernel_smoothness_constant",
        &[a.smoothness],
        &[b.smoothness],
    ));
    rec.fitted(FittedConstant::fit(
        "kernel_mixed_constant",
        &[a.mixed],
        &[b.mixed],
    ));
    rec.check(Check::below(
        "kernel_cancellation",
        a.cancellation,
        KERNEL_CANCELLATION_TOL,
    ));
    Ok(())
}
