//! Operator inequalities checked with the fitted-constant protocol:
//! twisted vs iterated maximal functions, the good-λ inequality, the
//! domination chain `‖f‖₁ ≲ ‖g‖₁`, `g ≲ S`, `‖S‖₁ ≲ ‖N^β‖₁`, and the
//! equivalence of the four holomorphic quantities.
//!
//! All experiments run on the boundary values `f = F^b` (or the lift `F`)
//! of the seeded spectral-bump families. The bump scale keeps the spectra
//! below the Nyquist frequency `N/(4L)` of the working grid.

use super::{bump_family, Check, ExperimentConfig, Family, FittedConstant, Recorder, FAMILY_SIZE};
use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Norm};
use crate::numerics::{geometric_grid, KahanSum};
use crate::operators::{
    area_function, full_energy, g_function, holo_operators, iterated_max, nontangential_max,
    twisted_max, OperatorConfig, DEFAULT_BETA,
};
use crate::poisson::{build_field, iterated_poisson, TLattice, DEFAULT_RATIO};
use crate::spectral::{hardy_norm, SpectralTestFunction};

/// Aperture of the non-tangential maximal function in the good-λ experiments.
pub const GOODLAMBDA_BETA: f64 = 8.0;
/// Number of λ levels.
pub const LAMBDA_LEVELS: usize = 20;
/// Relative stability of fitted constants under grid refinement.
pub const REFINEMENT_TOL: f64 = 0.2;
/// Largest admissible pairwise factor in the norm chain.
pub const CHAIN_FACTOR_MAX: f64 = 50.0;
/// Relative spread of each norm-chain ratio around its family median.
pub const CHAIN_SPREAD_TOL: f64 = 0.25;
/// Points where `S < NOISE_FLOOR · sup S` are excluded from pointwise ratios.
pub const NOISE_FLOOR: f64 = 1e-3;

/// Spectral magnitude of the test family (Nyquist of the 64², L = 8 grid is 2).
const FAMILY_SCALE: f64 = 1.0;
/// Quadrature order of the family bumps: relative error ≈ 2e−7 against a
/// 128-node reference over the whole 64², L = 8 box.
const FAMILY_NODES: usize = 48;
const GRID_SIZE: usize = 64;
const BOX_HALF: f64 = 8.0;
/// Lattice: `t ∈ [1/16, 1/16·√2^{K−1}]`, around the energy peak `t ≈ 1/(2π|ξ|)`.
const T_MIN: f64 = 0.0625;
const T_LEVELS: usize = 8;

struct Setup {
    cone: PolyhedralCone,
    spec: GridSpec,
    lattice: TLattice,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let cone = cfg.cone.clone();
        let spec = cfg.grid(cone.n, GRID_SIZE, BOX_HALF)?;
        let lattice = TLattice::new(cone.m, T_MIN, DEFAULT_RATIO, cfg.t_levels_or(T_LEVELS))?;
        Ok(Self {
            cone,
            spec,
            lattice,
        })
    }

    fn operator_config(&self, beta: f64) -> Result<OperatorConfig> {
        OperatorConfig::new(beta, self.lattice.clone())
    }

    fn family(&self, cfg: &ExperimentConfig, family: Family) -> Result<Vec<SpectralTestFunction>> {
        let dual = self.cone.dual()?;
        bump_family(&self.cone, cfg.seed, family, FAMILY_SIZE, FAMILY_SCALE)?
            .iter()
            .map(|p| p.build_with(&dual, FAMILY_NODES))
            .collect()
    }

    /// Fits `name` from `ratio` evaluated on both families.
    fn fit<F>(&self, cfg: &ExperimentConfig, name: &str, mut ratio: F) -> Result<FittedConstant>
    where
        F: FnMut(&SpectralTestFunction) -> Result<f64>,
    {
        let a = self
            .family(cfg, Family::Calibration)?
            .iter()
            .map(&mut ratio)
            .collect::<Result<Vec<_>>>()?;
        let b = self
            .family(cfg, Family::HeldOut)?
            .iter()
            .map(&mut ratio)
            .collect::<Result<Vec<_>>>()?;
        Ok(FittedConstant::fit(name, &a, &b))
    }
}

/// Indices with `|x|_∞ ≤ L/2`, away from the periodic seam.
fn interior(spec: &GridSpec) -> Vec<usize> {
    let quarter = 0.5 * spec.box_half[0];
    (0..spec.len())
        .filter(|&i| spec.point(i).iter().all(|x| x.abs() <= quarter))
        .collect()
}

fn real_parts(g: &GridFunction) -> Vec<f64> {
    g.values.iter().map(|z| z.re).collect()
}

/// Two-sided constant `max(sup M_t/M_it, sup M_it/M_t)` over the interior.
fn maximal_constant(
    stf: &SpectralTestFunction,
    cone: &PolyhedralCone,
    spec: &GridSpec,
) -> Result<f64> {
    let f = stf.boundary_grid(spec)?;
    let mt = real_parts(&twisted_max(&f, cone)?);
    let mit = real_parts(&iterated_max(&f, cone)?);
    let mut c: f64 = 1.0;
    for i in interior(spec) {
        if !(mt[i] > 0.0 && mit[i] > 0.0) {
            return Err(Error::ConfigInvalid(
                "maximal function vanished on the interior".into(),
            ));
        }
        c = c.max(mt[i] / mit[i]).max(mit[i] / mt[i]);
    }
    Ok(c)
}

pub(crate) fn maximal_equiv(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let fine = setup.spec.refined();
    let coarse_fit = setup.fit(cfg, "maximal_equivalence_constant", |stf| {
        maximal_constant(stf, &setup.cone, &setup.spec)
    })?;
    let fine_fit = setup.fit(cfg, "maximal_equivalence_constant_refined", |stf| {
        maximal_constant(stf, &setup.cone, &fine)
    })?;
    let coarse = coarse_fit.calibrated.max(coarse_fit.held_out);
    let refined = fine_fit.calibrated.max(fine_fit.held_out);
    rec.measure("maximal_constant_coarse", coarse);
    rec.measure("maximal_constant_fine", refined);
    rec.check(Check::at_most(
        "maximal_constant_refinement_change",
        (refined - coarse).abs() / coarse,
        REFINEMENT_TOL,
    ));
    rec.fitted(coarse_fit);
    rec.fitted(fine_fit);
    Ok(())
}

/// `S f` (aperture 1) and `N^β f` for the boundary values of `stf`.
fn area_and_nontangential(
    setup: &Setup,
    stf: &SpectralTestFunction,
    beta: f64,
) -> Result<(GridFunction, GridFunction)> {
    let f = stf.boundary_grid(&setup.spec)?;
    let s_cfg = setup.operator_config(DEFAULT_BETA)?;
    let n_cfg = setup.operator_config(beta)?;
    let s = area_function(&full_energy(&f, &setup.cone, &s_cfg)?, &setup.cone, &s_cfg)?;
    let field = build_field(&f, &setup.cone, &setup.lattice, None, n_cfg.budget)?;
    let n = nontangential_max(&field, &setup.cone, &n_cfg)?;
    Ok((s, n))
}

/// Largest good-λ ratio `|{S>λ}| / (|{N>λ}| + λ⁻²∫_{N≤λ} N²)` over the λ grid.
fn goodlambda_ratio(s: &GridFunction, n: &GridFunction) -> f64 {
    let hv = s.spec.cell_volume();
    let s = real_parts(s);
    let n = real_parts(n);
    let top = s.iter().chain(&n).copied().fold(0.0, f64::max);
    geometric_grid(1e-2 * top, top, LAMBDA_LEVELS)
        .into_iter()
        .map(|lambda| {
            let lhs = hv * s.iter().filter(|&&v| v > lambda).count() as f64;
            let above = hv * n.iter().filter(|&&v| v > lambda).count() as f64;
            let below = hv * KahanSum::sum_iter(n.iter().filter(|&&v| v <= lambda).map(|v| v * v));
            let rhs = above + below / (lambda * lambda);
            if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn goodlambda(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let beta = cfg.beta_or(GOODLAMBDA_BETA);
    rec.measure("beta", beta);
    rec.fitted(setup.fit(cfg, "goodlambda_constant", |stf| {
        let (s, n) = area_and_nontangential(&setup, stf, beta)?;
        Ok(goodlambda_ratio(&s, &n))
    })?);
    Ok(())
}

pub(crate) fn s_le_n(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let beta = cfg.beta_or(GOODLAMBDA_BETA);
    rec.measure("beta", beta);
    rec.fitted(setup.fit(cfg, "area_over_nontangential_l1", |stf| {
        let (s, n) = area_and_nontangential(&setup, stf, beta)?;
        Ok(s.lp_norm(Norm::L1) / n.lp_norm(Norm::L1))
    })?);
    Ok(())
}

/// Largest pointwise ratio `a/b` where `b ≥ NOISE_FLOOR · sup b`.
fn pointwise_ratio(a: &GridFunction, b: &GridFunction) -> f64 {
    let b = real_parts(b);
    let floor = NOISE_FLOOR * b.iter().copied().fold(0.0, f64::max);
    a.values
        .iter()
        .zip(&b)
        .filter(|(_, &bv)| bv >= floor && bv > 0.0)
        .map(|(av, bv)| av.re / bv)
        .fold(0.0, f64::max)
}

pub(crate) fn g_le_s(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let op = setup.operator_config(cfg.beta_or(DEFAULT_BETA))?;
    rec.fitted(setup.fit(cfg, "g_over_area_pointwise", |stf| {
        let f = stf.boundary_grid(&setup.spec)?;
        let energy = full_energy(&f, &setup.cone, &op)?;
        Ok(pointwise_ratio(
            &g_function(&energy)?,
            &area_function(&energy, &setup.cone, &op)?,
        ))
    })?);
    rec.fitted(setup.fit(cfg, "holomorphic_g_over_area_pointwise", |stf| {
        let h = holo_operators(stf, &setup.cone, &setup.spec, &op)?;
        Ok(pointwise_ratio(&h.g, &h.s))
    })?);
    Ok(())
}

pub(crate) fn l1_le_g(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let op = setup.operator_config(DEFAULT_BETA)?;
    let mut sup_ratios = (Vec::new(), Vec::new());
    let l1_ratio = |family: Family, sink: &mut Vec<f64>| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for stf in setup.family(cfg, family)? {
            let f = stf.boundary_grid(&setup.spec)?;
            let g = g_function(&full_energy(&f, &setup.cone, &op)?)?.lp_norm(Norm::L1);
            out.push(f.lp_norm(Norm::L1) / g);
            let mut sup: f64 = 0.0;
            for t in &setup.lattice.nodes {
                sup = sup.max(iterated_poisson(&f, &setup.cone, t)?.lp_norm(Norm::L1));
            }
            sink.push(sup / g);
        }
        Ok(out)
    };
    let a = l1_ratio(Family::Calibration, &mut sup_ratios.0)?;
    let b = l1_ratio(Family::HeldOut, &mut sup_ratios.1)?;
    rec.fitted(FittedConstant::fit("l1_over_g", &a, &b));
    rec.fitted(FittedConstant::fit(
        "sup_t_poisson_l1_over_g",
        &sup_ratios.0,
        &sup_ratios.1,
    ));
    Ok(())
}

/// Names of the four norm-chain quantities.
const CHAIN: [&str; 4] = ["hardy_h1", "nontangential_l1", "area_l1", "g_l1"];

pub(crate) fn norm_chain(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let op = setup.operator_config(cfg.beta_or(DEFAULT_BETA))?;
    let probe = TLattice::new(setup.cone.m, 1e-3, 2.0, 4)?;
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for family in [Family::Calibration, Family::HeldOut] {
        for stf in setup.family(cfg, family)? {
            let h1 = hardy_norm(&stf, &setup.cone, 1, &probe, &setup.spec)?.norm;
            let h = holo_operators(&stf, &setup.cone, &setup.spec, &op)?;
            rows.push([
                h1,
                h.n.lp_norm(Norm::L1),
                h.s.lp_norm(Norm::L1),
                h.g.lp_norm(Norm::L1),
            ]);
        }
    }
    let mut worst_factor: f64 = 1.0;
    let mut worst_spread: f64 = 0.0;
    for i in 0..CHAIN.len() {
        for j in i + 1..CHAIN.len() {
            let ratios: Vec<f64> = rows.iter().map(|r| r[i] / r[j]).collect();
            let mut sorted = ratios.clone();
            sorted.sort_by(f64::total_cmp);
            let k = sorted.len();
            let median = if k % 2 == 1 {
                sorted[k / 2]
            } else {
                0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
            };
            let spread = ratios
                .iter()
                .map(|r| (r / median - 1.0).abs())
                .fold(0.0, f64::max);
            let factor = ratios.iter().map(|&r| r.max(1.0 / r)).fold(0.0, f64::max);
            rec.measure(format!("{}_over_{}_median", CHAIN[i], CHAIN[j]), median);
            rec.measure(format!("{}_over_{}_spread", CHAIN[i], CHAIN[j]), spread);
            worst_factor = worst_factor.max(factor);
            worst_spread = worst_spread.max(spread);
        }
    }
    rec.check(Check::at_most(
        "chain_pairwise_factor",
        worst_factor,
        CHAIN_FACTOR_MAX,
    ));
    rec.check(Check::at_most(
        "chain_ratio_spread",
        worst_spread,
        CHAIN_SPREAD_TOL,
    ));
    Ok(())
}
