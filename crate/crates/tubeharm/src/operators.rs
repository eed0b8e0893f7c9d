//! Multi-parameter maximal and square functions on grids.
//!
//! * Non-tangential maximal function
//!   `N^β f(x) = sup_{(x′,t) ∈ Γ_β(x)} |f * P_t(x′)|`, where
//!   `Γ_β(x) = {(x′, t) : x′ ∈ R(x, βt)}` and `R(x, r) = x + π(Π(−r_μ, r_μ))`
//!   is the twisted rectangle (a zonotope).
//! * Iterated maximal function `M_it = M_m ∘ ⋯ ∘ M_1` of one-dimensional
//!   Hardy–Littlewood maxima along the generators, and the twisted maximal
//!   function `M_t f(x) = sup_r |R(x,r)|⁻¹ ∫_{R(x,r)} |f|`.
//! * Lusin area function
//!   `S f(x)² = ∫∫_{Γ(x)} |∇₁⋯∇_m (f * P_t)(x′)|² dx′ t dt / |R(0,t)|`,
//!   the g-function `g f(x)² = ∫ |∇₁⋯∇_m (f * P_t)(x)|² t dt` and its
//!   partial variants `g_𝔧`.
//!
//! Regions are rasterized into [`RegionStencil`]s: for every offset of the
//! leading axes, one contiguous interval of offsets along the last axis
//! (zonotopes are convex). Offsets are clipped to one period of the torus
//! so that no sample is visited twice. Range maxima along the last axis use
//! sparse tables, range sums use prefix sums; every query is therefore
//! `O(rows)` per output point.
//!
//! Twisted averages are normalized by the number of samples in the
//! rasterized region (`hⁿ · count`), so constants are exact for constants
//! and refinement-stable; the area function keeps the continuous
//! normalization `|R(0,t)|` from the defining formula.

use crate::cone::{gauge_inside, PolyhedralCone, ZonotopeFacets};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec, Norm};
use crate::numerics::{geometric_grid, KahanSum};
use crate::poisson::{gradient_energy, OperatorField, TLattice, DEFAULT_SAMPLE_BUDGET};
use crate::spectral::{lift_energy, lift_field, SpectralTestFunction};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Default aperture.
pub const DEFAULT_BETA: f64 = 1.0;
/// Number of radii in the one-dimensional maximal functions.
pub const MAX_RADII: usize = 24;
/// Default number of per-axis radii in the twisted probe set.
pub const DEFAULT_TWISTED_LEVELS: usize = 8;

/// Operator parameters.
#[derive(Debug, Clone)]
pub struct OperatorConfig {
    pub beta: f64,
    pub lattice: TLattice,
    /// Subsampling of leading-axis offsets inside regions (1 = exact).
    pub region_probe_stride: usize,
    pub budget: usize,
}

impl OperatorConfig {
    pub fn new(beta: f64, lattice: TLattice) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "aperture must be positive, got {beta}"
            )));
        }
        Ok(Self {
            beta,
            lattice,
            region_probe_stride: 1,
            budget: DEFAULT_SAMPLE_BUDGET,
        })
    }
}

/// Rasterized symmetric region: rows of last-axis offset intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStencil {
    /// `(leading offsets, lo, hi)` with inclusive last-axis bounds.
    pub rows: Vec<(Vec<isize>, isize, isize)>,
    pub count: usize,
}

fn axis_clip(size: usize) -> (isize, isize) {
    let half = (size / 2) as isize;
    (-half, half - 1)
}

/// Grid offsets `δ` with `δh ∈ R(0, r)` (closed-open relaxation with margin).
pub fn region_stencil(
    spec: &GridSpec,
    facets: &ZonotopeFacets,
    generators: &[Vec<f64>],
    r: &[f64],
) -> RegionStencil {
    let n = spec.n();
    let h = spec.h();
    let bounds: Vec<(isize, isize)> = (0..n)
        .map(|a| {
            let support: f64 = generators
                .iter()
                .zip(r)
                .map(|(e, ri)| ri * e[a].abs())
                .sum();
            let b = (support / h).floor() as isize;
            let (lo, hi) = axis_clip(spec.sizes[a]);
            ((-b).max(lo), b.min(hi))
        })
        .collect();
    let mut rows = Vec::new();
    let mut count = 0;
    let mut prefix: Vec<isize> = bounds[..n - 1].iter().map(|b| b.0).collect();
    let mut d = vec![0.0; n];
    'outer: loop {
        if prefix.iter().zip(&bounds).all(|(p, b)| *p <= b.1) {
            for (a, &p) in prefix.iter().enumerate() {
                d[a] = p as f64 * h;
            }
            let mut lo = None;
            let mut hi = 0;
            for k in bounds[n - 1].0..=bounds[n - 1].1 {
                d[n - 1] = k as f64 * h;
                if gauge_inside(facets.gauge(&d, r)) {
                    if lo.is_none() {
                        lo = Some(k);
                    }
                    hi = k;
                }
            }
            if let Some(lo) = lo {
                count += (hi - lo + 1) as usize;
                rows.push((prefix.clone(), lo, hi));
            }
        }
        let mut a = n - 1;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            prefix[a] += 1;
            if prefix[a] <= bounds[a].1 {
                break;
            }
            prefix[a] = bounds[a].0;
        }
    }
    RegionStencil { rows, count }
}

impl RegionStencil {
    /// Keeps only rows whose leading offsets are multiples of `stride`.
    fn subsampled(&self, stride: usize) -> Self {
        if stride <= 1 {
            return self.clone();
        }
        let s = stride as isize;
        let rows: Vec<_> = self
            .rows
            .iter()
            .filter(|(p, _, _)| p.iter().all(|v| v.rem_euclid(s) == 0))
            .cloned()
            .collect();
        let count = rows.iter().map(|(_, lo, hi)| (hi - lo + 1) as usize).sum();
        Self { rows, count }
    }
}

/// Lines along the last axis, doubled for periodic wrap-around.
struct Lines {
    len: usize,
    lead_sizes: Vec<usize>,
}

impl Lines {
    fn new(spec: &GridSpec) -> Self {
        let n = spec.n();
        Self {
            len: spec.sizes[n - 1],
            lead_sizes: spec.sizes[..n - 1].to_vec(),
        }
    }

    fn count(&self) -> usize {
        self.lead_sizes.iter().product()
    }

    /// Line index of the leading multi-index `base + offset` (wrapped).
    #[inline]
    fn line_of(&self, base: &[usize], offset: &[isize]) -> usize {
        let mut l = 0;
        for ((&b, &o), &s) in base.iter().zip(offset).zip(&self.lead_sizes) {
            l = l * s + (b as isize + o).rem_euclid(s as isize) as usize;
        }
        l
    }
}

/// Sparse tables for range maxima on every (doubled) line.
struct RangeMax {
    len: usize,
    levels: Vec<Vec<f64>>,
}

impl RangeMax {
    fn new(values: &[f64], lines: &Lines) -> Self {
        let len = lines.len;
        let dl = 2 * len;
        let mut base = vec![0.0; lines.count() * dl];
        for (l, chunk) in base.chunks_mut(dl).enumerate() {
            let src = &values[l * len..(l + 1) * len];
            chunk[..len].copy_from_slice(src);
            chunk[len..].copy_from_slice(src);
        }
        let mut levels = vec![base];
        let mut width = 1;
        while 2 * width <= dl {
            let prev = levels.last().expect("level exists");
            let mut next = vec![0.0; prev.len()];
            for (line_next, line_prev) in next.chunks_mut(dl).zip(prev.chunks(dl)) {
                for i in 0..=dl - 2 * width {
                    line_next[i] = line_prev[i].max(line_prev[i + width]);
                }
            }
            levels.push(next);
            width *= 2;
        }
        Self { len, levels }
    }

    /// Maximum over `line[start ..= start + count − 1]` (periodic).
    #[inline]
    fn query(&self, line: usize, start: isize, count: usize) -> f64 {
        let count = count.min(self.len);
        let s = start.rem_euclid(self.len as isize) as usize;
        let k = usize::BITS - 1 - count.leading_zeros();
        let width = 1usize << k;
        let row = &self.levels[k as usize][line * 2 * self.len..(line + 1) * 2 * self.len];
        row[s].max(row[s + count - width])
    }
}

/// Prefix sums on every (doubled) line.
struct RangeSum {
    len: usize,
    prefix: Vec<f64>,
}

impl RangeSum {
    fn new(values: &[f64], lines: &Lines) -> Self {
        let len = lines.len;
        let stride = 2 * len + 1;
        let mut prefix = vec![0.0; lines.count() * stride];
        for (l, chunk) in prefix.chunks_mut(stride).enumerate() {
            let src = &values[l * len..(l + 1) * len];
            let mut acc = KahanSum::new();
            for i in 0..2 * len {
                acc.add(src[i % len]);
                chunk[i + 1] = acc.value();
            }
        }
        Self { len, prefix }
    }

    #[inline]
    fn query(&self, line: usize, start: isize, count: usize) -> f64 {
        let count = count.min(self.len);
        let s = start.rem_euclid(self.len as isize) as usize;
        let row = &self.prefix[line * (2 * self.len + 1)..];
        row[s + count] - row[s]
    }
}

/// Per-point reduction over a stencil: `(leading index, last index) → value`.
fn stencil_reduce<Q: Fn(usize, isize, usize) -> f64 + Sync>(
    spec: &GridSpec,
    stencil: &RegionStencil,
    combine_max: bool,
    query: Q,
) -> Vec<f64> {
    let n = spec.n();
    let lines = Lines::new(spec);
    (0..spec.len())
        .into_par_iter()
        .map(|flat| {
            let idx = spec.multi_index(flat);
            let (lead, last) = idx.split_at(n - 1);
            let mut acc = KahanSum::new();
            let mut best = 0.0f64;
            for (offset, lo, hi) in &stencil.rows {
                let line = lines.line_of(lead, offset);
                let v = query(line, last[0] as isize + lo, (hi - lo + 1) as usize);
                if combine_max {
                    best = best.max(v);
                } else {
                    acc.add(v);
                }
            }
            if combine_max {
                best
            } else {
                acc.value()
            }
        })
        .collect()
}

fn real_grid(spec: &GridSpec, values: Vec<f64>) -> GridFunction {
    GridFunction {
        spec: spec.clone(),
        values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        domain: Domain::Space,
    }
}

fn check_field(field: &OperatorField, cone: &PolyhedralCone) -> Result<()> {
    if field.values.len() != field.lattice.len() {
        return Err(Error::ShapeMismatch(
            "field and lattice sizes differ".into(),
        ));
    }
    if field.values.iter().any(|g| g.spec != field.spec) {
        return Err(Error::ShapeMismatch("field grids differ".into()));
    }
    if field.spec.n() != cone.n {
        return Err(Error::ShapeMismatch(
            "field and cone dimensions differ".into(),
        ));
    }
    if field.params.iter().any(|&mu| mu >= cone.m) || field.params.len() != field.lattice.m {
        return Err(Error::ShapeMismatch(
            "field parameters do not match the cone".into(),
        ));
    }
    Ok(())
}

/// Full radius vector `β·t` (zero in slots absent from `params`).
fn radii(cone: &PolyhedralCone, params: &[usize], t: &[f64], beta: f64) -> Vec<f64> {
    let mut r = vec![0.0; cone.m];
    for (&mu, &v) in params.iter().zip(t) {
        r[mu] = beta * v;
    }
    r
}

/// `N^β`: maximum of `|u(x′, t)|` over `(x′, t) ∈ Γ_β(x)`.
pub fn nontangential_max(
    field: &OperatorField,
    cone: &PolyhedralCone,
    cfg: &OperatorConfig,
) -> Result<GridFunction> {
    check_field(field, cone)?;
    if field.lattice.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let spec = &field.spec;
    let facets = cone.zonotope_facets();
    let lines = Lines::new(spec);
    let mut out = vec![0.0f64; spec.len()];
    for (t, u) in field.lattice.nodes.iter().zip(&field.values) {
        let r = radii(cone, &field.params, t, cfg.beta);
        let stencil =
            region_stencil(spec, &facets, &cone.generators, &r).subsampled(cfg.region_probe_stride);
        if stencil.rows.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let table = RangeMax::new(&u.abs(), &lines);
        let node_max = stencil_reduce(spec, &stencil, true, |line, s, c| table.query(line, s, c));
        for (o, v) in out.iter_mut().zip(node_max) {
            *o = o.max(v);
        }
    }
    Ok(real_grid(spec, out))
}

/// Area function from a scalar energy field `|∇(f * P_t)|²` (real parts).
pub fn area_function(
    energy: &OperatorField,
    cone: &PolyhedralCone,
    cfg: &OperatorConfig,
) -> Result<GridFunction> {
    check_field(energy, cone)?;
    let spec = &energy.spec;
    let facets = cone.zonotope_facets();
    let lines = Lines::new(spec);
    let hv = spec.cell_volume();
    let stride_scale = (cfg.region_probe_stride.max(1) as f64).powi(spec.n() as i32 - 1);
    let mut acc = vec![KahanSum::new(); spec.len()];
    for ((t, e), w) in energy
        .lattice
        .nodes
        .iter()
        .zip(&energy.values)
        .zip(&energy.lattice.weights)
    {
        let r = radii(cone, &energy.params, t, cfg.beta);
        let stencil =
            region_stencil(spec, &facets, &cone.generators, &r).subsampled(cfg.region_probe_stride);
        if stencil.rows.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let vol = cone.zonotope_volume(&radii(cone, &energy.params, t, 1.0));
        let sums = RangeSum::new(&e.values.iter().map(|z| z.re).collect::<Vec<_>>(), &lines);
        let node = stencil_reduce(spec, &stencil, false, |line, s, c| sums.query(line, s, c));
        let scale = w * hv * stride_scale / vol;
        for (a, v) in acc.iter_mut().zip(node) {
            a.add(scale * v);
        }
    }
    Ok(real_grid(
        spec,
        acc.iter().map(|a| a.value().max(0.0).sqrt()).collect(),
    ))
}

/// g-function from a scalar energy field: `(Σ_t E(x,t) w_t)^{1/2}`.
pub fn g_function(energy: &OperatorField) -> Result<GridFunction> {
    if energy.values.len() != energy.lattice.len() {
        return Err(Error::ShapeMismatch(
            "field and lattice sizes differ".into(),
        ));
    }
    let spec = &energy.spec;
    let mut acc = vec![KahanSum::new(); spec.len()];
    for (e, w) in energy.values.iter().zip(&energy.lattice.weights) {
        for (a, v) in acc.iter_mut().zip(&e.values) {
            a.add(w * v.re);
        }
    }
    Ok(real_grid(
        spec,
        acc.iter().map(|a| a.value().max(0.0).sqrt()).collect(),
    ))
}

/// Partial g-function `g_𝔧(f)`: derivatives and `t`-integration on `subset` only.
///
/// `cfg.lattice` supplies `t_min`, ratio and level count; it is re-dimensioned
/// to `|𝔧|` parameters.
pub fn partial_g(
    f: &GridFunction,
    cone: &PolyhedralCone,
    subset: &[usize],
    cfg: &OperatorConfig,
) -> Result<GridFunction> {
    if subset.is_empty() {
        return Err(Error::EmptySelector);
    }
    let lat = TLattice::new(
        subset.len(),
        cfg.lattice.t_min,
        cfg.lattice.ratio,
        cfg.lattice.levels,
    )?;
    g_function(&gradient_energy(f, cone, subset, &lat, cfg.budget)?)
}

/// Full-gradient energy field of `f` over `cfg.lattice`.
pub fn full_energy(
    f: &GridFunction,
    cone: &PolyhedralCone,
    cfg: &OperatorConfig,
) -> Result<OperatorField> {
    let all: Vec<usize> = (0..cone.m).collect();
    gradient_energy(f, cone, &all, &cfg.lattice, cfg.budget)
}

/// Mean-value average of `|f|` along `x + s e` over `s ∈ [−R, R]`, for each radius.
struct LineSampler<'a> {
    spec: &'a GridSpec,
    values: &'a [f64],
    strides: Vec<usize>,
}

impl<'a> LineSampler<'a> {
    /// Periodic multilinear interpolation at physical point `p`.
    fn interp(&self, p: &[f64]) -> f64 {
        let n = self.spec.n();
        let h = self.spec.h();
        let mut base = [0isize; 8];
        let mut frac = [0.0f64; 8];
        for a in 0..n {
            let u = (p[a] + self.spec.box_half[a]) / h;
            let fl = u.floor();
            base[a] = fl as isize;
            frac[a] = u - fl;
        }
        let mut total = 0.0;
        for corner in 0..1usize << n {
            let mut w = 1.0;
            let mut flat = 0;
            for a in 0..n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                if w == 0.0 {
                    break;
                }
                let s = self.spec.sizes[a] as isize;
                flat += (base[a] + bit as isize).rem_euclid(s) as usize * self.strides[a];
            }
            if w != 0.0 {
                total += w * self.values[flat];
            }
        }
        total
    }
}

/// Radii `h … L/2` used by the one-dimensional maximal functions.
pub fn maximal_radii(spec: &GridSpec) -> Vec<f64> {
    geometric_grid(spec.h(), 0.5 * spec.box_half[0], MAX_RADII)
}

/// One-dimensional Hardy–Littlewood maximal function along direction `e`.
pub fn directional_max(values: &[f64], spec: &GridSpec, e: &[f64]) -> Vec<f64> {
    let radii = maximal_radii(spec);
    let r_max = *radii.last().expect("radii nonempty");
    let step = 0.5 * spec.h();
    let half_count = (r_max / step).ceil() as usize;
    let sampler = LineSampler {
        spec,
        values,
        strides: spec.strides(),
    };
    (0..spec.len())
        .into_par_iter()
        .map(|flat| {
            let x = spec.point(flat);
            let samples: Vec<f64> = (0..=2 * half_count)
                .map(|k| {
                    let s = (k as f64 - half_count as f64) * step;
                    let p: Vec<f64> = x.iter().zip(e).map(|(xi, ei)| xi + s * ei).collect();
                    sampler.interp(&p)
                })
                .collect();
            // Cumulative trapezoid integral from −R.
            let mut cum = vec![0.0; samples.len()];
            for k in 1..samples.len() {
                cum[k] = cum[k - 1] + 0.5 * step * (samples[k - 1] + samples[k]);
            }
            let at = |s: f64| {
                let u = s / step + half_count as f64;
                let k = (u.floor() as usize).min(samples.len() - 2);
                let fr = u - k as f64;
                // Integral of the linear interpolant over [k, k+fr].
                let v0 = samples[k];
                let v1 = samples[k + 1];
                cum[k] + step * (v0 * fr + 0.5 * (v1 - v0) * fr * fr)
            };
            radii
                .iter()
                .map(|&r| (at(r) - at(-r)) / (2.0 * r))
                .fold(samples[half_count], f64::max)
        })
        .collect()
}

/// Iterated maximal function `M_m ∘ ⋯ ∘ M_1 |f|`.
pub fn iterated_max(f: &GridFunction, cone: &PolyhedralCone) -> Result<GridFunction> {
    if f.spec.n() != cone.n {
        return Err(Error::ShapeMismatch(
            "grid and cone dimensions differ".into(),
        ));
    }
    let mut v = f.abs();
    for e in &cone.generators {
        v = directional_max(&v, &f.spec, e);
    }
    Ok(real_grid(&f.spec, v))
}

/// Twisted maximal function over `R(x, r)`, `r` in the product probe set.
pub fn twisted_max(f: &GridFunction, cone: &PolyhedralCone) -> Result<GridFunction> {
    twisted_max_with(f, cone, DEFAULT_TWISTED_LEVELS)
}

/// Per-axis twisted probe radii: geometric from `h` to `L/2`.
pub fn twisted_radii(spec: &GridSpec, levels: usize) -> Vec<f64> {
    geometric_grid(spec.h(), 0.5 * spec.box_half[0], levels)
}

/// [`twisted_max`] with an explicit number of radii per generator.
pub fn twisted_max_with(
    f: &GridFunction,
    cone: &PolyhedralCone,
    levels: usize,
) -> Result<GridFunction> {
    if f.spec.n() != cone.n {
        return Err(Error::ShapeMismatch(
            "grid and cone dimensions differ".into(),
        ));
    }
    let spec = &f.spec;
    let probe = twisted_radii(spec, levels);
    let facets = cone.zonotope_facets();
    let lines = Lines::new(spec);
    let sums = RangeSum::new(&f.abs(), &lines);
    let mut out = vec![0.0f64; spec.len()];
    let mut idx = vec![0usize; cone.m];
    let total = levels.pow(cone.m as u32);
    for _ in 0..total {
        let r: Vec<f64> = idx.iter().map(|&k| probe[k]).collect();
        let stencil = region_stencil(spec, &facets, &cone.generators, &r);
        let count = stencil.count as f64;
        let node = stencil_reduce(spec, &stencil, false, |line, s, c| sums.query(line, s, c));
        for (o, v) in out.iter_mut().zip(node) {
            *o = o.max(v / count);
        }
        for a in (0..cone.m).rev() {
            idx[a] += 1;
            if idx[a] < levels {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(real_grid(spec, out))
}

/// Holomorphic operators `ℕ^β(F)`, `𝕊(F)`, `𝔾(F)`.
#[derive(Debug, Clone)]
pub struct HoloOperators {
    pub n: GridFunction,
    pub s: GridFunction,
    pub g: GridFunction,
}

/// Builds lifted fields of `F` and applies the three operators.
pub fn holo_operators(
    stf: &SpectralTestFunction,
    cone: &PolyhedralCone,
    spec: &GridSpec,
    cfg: &OperatorConfig,
) -> Result<HoloOperators> {
    let field = lift_field(stf, cone, &cfg.lattice, spec, cfg.budget)?;
    let all: Vec<usize> = (0..cone.m).collect();
    let energy = lift_energy(stf, cone, &all, &cfg.lattice, spec, cfg.budget)?;
    Ok(HoloOperators {
        n: nontangential_max(&field, cone, cfg)?,
        s: area_function(&energy, cone, cfg)?,
        g: g_function(&energy)?,
    })
}

/// JSON summary emitted next to every operator output.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub op: String,
    pub params: serde_json::Value,
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
    pub fitted_constants: serde_json::Map<String, serde_json::Value>,
}

impl OperatorSummary {
    pub fn new(op: &str, params: serde_json::Value, g: &GridFunction) -> Self {
        Self {
            op: op.to_string(),
            params,
            l1: g.lp_norm(Norm::L1),
            l2: g.lp_norm(Norm::L2),
            sup: g.lp_norm(Norm::Inf),
            fitted_constants: serde_json::Map::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_of_axis_square() {
        let spec = GridSpec::cube(2, 16, 1.0).unwrap();
        let cone = PolyhedralCone::axis(2);
        let st = region_stencil(
            &spec,
            &cone.zonotope_facets(),
            &cone.generators,
            &[0.3, 0.3],
        );
        // h = 0.125: offsets |δ| ≤ 2 lie strictly inside (−0.3, 0.3).
        assert_eq!(st.count, 25);
        let tiny = region_stencil(
            &spec,
            &cone.zonotope_facets(),
            &cone.generators,
            &[1e-9, 1e-9],
        );
        assert_eq!(tiny.count, 1);
        let huge = region_stencil(
            &spec,
            &cone.zonotope_facets(),
            &cone.generators,
            &[50.0, 50.0],
        );
        assert_eq!(huge.count, 256);
    }

    #[test]
    fn range_queries_wrap() {
        let spec = GridSpec::cube(1, 16, 1.0).unwrap();
        let vals: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let lines = Lines::new(&spec);
        let rm = RangeMax::new(&vals, &lines);
        assert_eq!(rm.query(0, -2, 3), 15.0);
        assert_eq!(rm.query(0, 3, 4), 6.0);
        let rs = RangeSum::new(&vals, &lines);
        assert_eq!(rs.query(0, -1, 2), 15.0);
        assert_eq!(rs.query(0, 0, 40), 120.0);
    }
}
