//! Geometry of twisted rectangles: the inclusion chain through
//! parallelohedra, the exact zonotope volume and the constant `𝒜`.

use super::{Check, ExperimentConfig, Recorder};
use crate::cone::{PolyhedralCone, TwistedRectangleQuery};
use crate::error::Result;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Random probes of the inclusion chain.
pub const INCLUSION_PROBES: usize = 10_000;
/// Monte-Carlo samples for the volume check.
pub const VOLUME_SAMPLES: usize = 1_000_000;
/// Allowed deviation of the Monte-Carlo estimate, in standard errors.
pub const VOLUME_SIGMAS: f64 = 3.0;
/// Tolerance on `𝒜(CONE_B) = 2 + 3√2`.
pub const A_CONST_TOL: f64 = 1e-10;

/// Half-widths of the bounding box of `R(0, r)`.
fn bounding_box(cone: &PolyhedralCone, r: &[f64]) -> Vec<f64> {
    (0..cone.n)
        .map(|a| {
            cone.generators
                .iter()
                .zip(r)
                .map(|(e, ri)| ri * e[a].abs())
                .sum()
        })
        .collect()
}

fn sample_in(rng: &mut SplitMix64, half: &[f64]) -> Vec<f64> {
    half.iter().map(|h| rng.gen_range(-h..=*h)).collect()
}

pub(crate) fn rect_inclusion(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let cone = &cfg.cone;
    let constants = cone.constants();
    let inv = 1.0 / constants.gamma_tilde0;
    let mut rng = SplitMix64::seed_from_u64(cfg.seed ^ 0x0C0E);
    let origin = vec![0.0; cone.n];
    let (mut violations, mut asymmetric) = (0usize, 0usize);
    let (mut in_inner, mut in_rect, mut in_outer) = (0usize, 0usize, 0usize);
    for k in 0..INCLUSION_PROBES {
        let t: Vec<f64> = (0..cone.m)
            .map(|_| 10f64.powf(rng.gen_range(-0.7..=0.3)))
            .collect();
        let subset = cone.largest_subset(&t);
        let outer: Vec<f64> = t.iter().map(|v| v * inv).collect();
        // Alternate between the inner and the outer bounding box.
        let half = bounding_box(cone, if k % 2 == 0 { &t } else { &outer });
        let xp = sample_in(&mut rng, &half);
        let q = TwistedRectangleQuery {
            x: origin.clone(),
            t: t.clone(),
            beta: 1.0,
        };
        let inner = cone.parallelohedron_contains(&subset, &origin, &t, &xp)?;
        let rect = cone.rect_contains(&q, &xp)?;
        let outer_in = cone.parallelohedron_contains(&subset, &origin, &outer, &xp)?;
        if (inner && !rect) || (rect && !outer_in) {
            violations += 1;
        }
        let mirrored: Vec<f64> = xp.iter().map(|v| -v).collect();
        if cone.rect_contains(&q, &mirrored)? != rect {
            asymmetric += 1;
        }
        in_inner += inner as usize;
        in_rect += rect as usize;
        in_outer += outer_in as usize;
    }
    rec.measure("probes_in_parallelohedron", in_inner as f64);
    rec.measure("probes_in_rectangle", in_rect as f64);
    rec.measure("probes_in_enlarged_parallelohedron", in_outer as f64);
    rec.check(Check::at_most(
        "inclusion_violations",
        violations as f64,
        0.0,
    ));
    rec.check(Check::at_most(
        "central_symmetry_violations",
        asymmetric as f64,
        0.0,
    ));

    // Monte-Carlo volume of R(0, (1,…,1)) with the linear-program oracle.
    let t = vec![1.0; cone.m];
    let half = bounding_box(cone, &t);
    let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let q = TwistedRectangleQuery {
        x: origin.clone(),
        t: t.clone(),
        beta: 1.0,
    };
    let mut hits = 0usize;
    for _ in 0..VOLUME_SAMPLES {
        let xp = sample_in(&mut rng, &half);
        hits += cone.rect_contains(&q, &xp)? as usize;
    }
    let p = hits as f64 / VOLUME_SAMPLES as f64;
    let estimate = p * box_vol;
    let sigma = box_vol * (p * (1.0 - p) / VOLUME_SAMPLES as f64).sqrt();
    let exact = cone.zonotope_volume(&t);
    rec.measure("zonotope_volume", exact);
    rec.measure("monte_carlo_volume", estimate);
    rec.check(Check::at_most(
        "volume_deviation_sigmas",
        (estimate - exact).abs() / sigma,
        VOLUME_SIGMAS,
    ));

    rec.measure("a_const", constants.a_const);
    rec.check(Check::at_most(
        "gamma0_identity",
        (constants.gamma0 - constants.gamma_tilde0.powi(2)).abs(),
        0.0,
    ));
    if *cone == PolyhedralCone::cone_b() {
        let expected = 2.0 + 3.0 * std::f64::consts::SQRT_2;
        rec.check(Check::below(
            "a_const_error",
            (constants.a_const - expected).abs(),
            A_CONST_TOL,
        ));
    }
    Ok(())
}
