//! Directional and iterated Poisson integrals on the lifting space.
//!
//! The one-dimensional Poisson kernel `P_t(s) = t / (π (t² + s²))` acting
//! along a generator `e_μ` has Fourier multiplier `e^{−2πt|e_μ·ξ|}`; the
//! iterated Poisson integral `f * P_t` over `t ∈ (ℝ₊)^m` multiplies these
//! symbols. Everything here is computed in frequency, which makes the
//! semigroup law, commutativity of partial convolutions and the partial
//! harmonicity `Δ_μ (f *_μ P_{t_μ}) = 0` exact up to rounding.
//!
//! Mixed gradients `∇_1 ⋯ ∇_m` pick for every parameter either the
//! spatial derivative `X_μ = e_μ·∇` (symbol `2πi e_μ·ξ`) or `∂_{t_μ}`
//! (symbol `−2π|e_μ·ξ|`). Fields over a finite geometric lattice of
//! parameters ([`TLattice`]) feed the square and maximal functions.

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::grid::{tgf, GridFunction, GridSpec, Spectrum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

/// Default ratio between consecutive lattice levels.
pub const DEFAULT_RATIO: f64 = SQRT_2;
/// Default number of levels per parameter axis.
pub const DEFAULT_LEVELS: usize = 8;
/// Hard cap on the number of lattice nodes.
pub const NODE_CAP: usize = 4096;
/// Default cap on `nodes × grid samples` for materialized fields.
pub const DEFAULT_SAMPLE_BUDGET: usize = 1 << 26;

/// Geometric lattice of multi-parameters with `∫ t dt` cell weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TLattice {
    pub m: usize,
    pub t_min: f64,
    pub ratio: f64,
    pub levels: usize,
    /// Node coordinates, lexicographic in level indices (last fastest).
    pub nodes: Vec<Vec<f64>>,
    /// Level indices of each node.
    pub indices: Vec<Vec<usize>>,
    /// Product over axes of `½(t_hi² − t_lo²)` with geometric-midpoint edges.
    pub weights: Vec<f64>,
}

impl TLattice {
    /// Builds the `levels^m` lattice starting at `t_min`.
    pub fn new(m: usize, t_min: f64, ratio: f64, levels: usize) -> Result<Self> {
        if m == 0 || levels == 0 {
            return Err(Error::ConfigInvalid(
                "lattice needs m ≥ 1 and at least one level".into(),
            ));
        }
        if !(t_min > 0.0) || !t_min.is_finite() {
            return Err(Error::NonpositiveT(t_min));
        }
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "lattice ratio must exceed 1, got {ratio}"
            )));
        }
        let count = (levels as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if count > NODE_CAP as u128 {
            return Err(Error::OutOfMemoryBudget {
                requested: count.min(usize::MAX as u128) as usize,
                cap: NODE_CAP,
            });
        }
        let axis_t: Vec<f64> = (0..levels).map(|k| t_min * ratio.powi(k as i32)).collect();
        let axis_w: Vec<f64> = axis_t
            .iter()
            .map(|t| 0.5 * t * t * (ratio - 1.0 / ratio))
            .collect();
        let mut nodes = Vec::with_capacity(count as usize);
        let mut indices = Vec::with_capacity(count as usize);
        let mut weights = Vec::with_capacity(count as usize);
        let mut idx = vec![0usize; m];
        loop {
            nodes.push(idx.iter().map(|&k| axis_t[k]).collect());
            weights.push(idx.iter().map(|&k| axis_w[k]).product());
            indices.push(idx.clone());
            let mut a = m;
            loop {
                if a == 0 {
                    return Ok(Self {
                        m,
                        t_min,
                        ratio,
                        levels,
                        nodes,
                        indices,
                        weights,
                    });
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < levels {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Default lattice for a grid: `t_min = 2h`, ratio √2.
    pub fn for_grid(spec: &GridSpec, m: usize, levels: usize) -> Result<Self> {
        Self::new(m, 2.0 * spec.h(), DEFAULT_RATIO, levels)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest per-axis parameter value.
    pub fn t_max(&self) -> f64 {
        self.t_min * self.ratio.powi(self.levels as i32 - 1)
    }

    /// File stem of a node, e.g. `t_03_05_01`.
    pub fn node_name(&self, node: usize) -> String {
        let parts: Vec<String> = self.indices[node]
            .iter()
            .map(|k| format!("{k:02}"))
            .collect();
        format!("t_{}", parts.join("_"))
    }
}

/// Symbol of the iterated Poisson integral, `Π_μ e^{−2π t_μ |e_μ·ξ|}`.
#[inline]
pub fn poisson_symbol(cone: &PolyhedralCone, t: &[f64], xi: &[f64]) -> f64 {
    let mut s = 0.0;
    for (tm, e) in t.iter().zip(&cone.generators) {
        let c: f64 = e.iter().zip(xi).map(|(a, b)| a * b).sum();
        s += tm * c.abs();
    }
    (-2.0 * PI * s).exp()
}

fn check_t(cone: &PolyhedralCone, t: &[f64]) -> Result<()> {
    if t.len() != cone.m {
        return Err(Error::LengthMismatch {
            expected: cone.m,
            got: t.len(),
        });
    }
    if let Some(&bad) = t.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::NonpositiveT(bad));
    }
    Ok(())
}

/// `f *_μ P_{t_μ}`: Poisson convolution along the generator `e_μ`.
pub fn directional_poisson(
    f: &GridFunction,
    cone: &PolyhedralCone,
    mu: usize,
    t_mu: f64,
) -> Result<GridFunction> {
    if mu >= cone.m {
        return Err(Error::LengthMismatch {
            expected: cone.m,
            got: mu + 1,
        });
    }
    if !(t_mu > 0.0) {
        return Err(Error::NonpositiveT(t_mu));
    }
    let e = &cone.generators[mu];
    let spectrum = Spectrum::of(f)?;
    Ok(spectrum.apply(|xi, _| {
        let c: f64 = e.iter().zip(xi).map(|(a, b)| a * b).sum();
        Complex64::new((-2.0 * PI * t_mu * c.abs()).exp(), 0.0)
    }))
}

/// Iterated Poisson integral `f * P_t` (one multiplier pass).
pub fn iterated_poisson(
    f: &GridFunction,
    cone: &PolyhedralCone,
    t: &[f64],
) -> Result<GridFunction> {
    check_t(cone, t)?;
    let spectrum = Spectrum::of(f)?;
    Ok(spectrum.apply(|xi, _| Complex64::new(poisson_symbol(cone, t, xi), 0.0)))
}

/// Derivative choice for one parameter of a mixed gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deriv {
    /// Spatial derivative along the generator, `X_μ = e_μ·∇`.
    X,
    /// Derivative in the Poisson parameter, `∂_{t_μ}`.
    T,
}

/// Per-parameter derivative choices (`None`: no derivative in that slot).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientSelector {
    pub choices: Vec<Option<Deriv>>,
}

impl GradientSelector {
    /// Parses a string such as `"XT-"` (one character per parameter).
    pub fn parse(s: &str) -> Result<Self> {
        let choices = s
            .chars()
            .map(|c| match c {
                'X' | 'x' => Ok(Some(Deriv::X)),
                'T' | 't' => Ok(Some(Deriv::T)),
                '-' | '_' => Ok(None),
                other => Err(Error::ConfigInvalid(format!(
                    "bad selector character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { choices })
    }

    /// Renders as the string accepted by [`GradientSelector::parse`].
    pub fn render(&self) -> String {
        self.choices
            .iter()
            .map(|c| match c {
                Some(Deriv::X) => 'X',
                Some(Deriv::T) => 'T',
                None => '-',
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.iter().all(Option::is_none)
    }

    /// All `2^|𝔧|` selectors with derivatives exactly on `subset`.
    pub fn components(m: usize, subset: &[usize]) -> Vec<Self> {
        let k = subset.len();
        (0..1usize << k)
            .map(|mask| {
                let mut choices = vec![None; m];
                for (bit, &mu) in subset.iter().enumerate() {
                    choices[mu] = Some(if mask >> (k - 1 - bit) & 1 == 0 {
                        Deriv::X
                    } else {
                        Deriv::T
                    });
                }
                Self { choices }
            })
            .collect()
    }

    /// Symbol of the derivative factors at `ξ` given couplings `e_μ·ξ`.
    pub fn symbol(&self, couplings: &[f64], nyquist: bool) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        let mut odd = false;
        for (choice, &s) in self.choices.iter().zip(couplings) {
            match choice {
                Some(Deriv::X) => {
                    z *= Complex64::new(0.0, 2.0 * PI * s);
                    odd = !odd;
                }
                Some(Deriv::T) => z *= -2.0 * PI * s.abs(),
                None => {}
            }
        }
        if odd && nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            z
        }
    }
}

/// Expands a sub-lattice node (parameters in `subset`) to a full `t` with
/// zeros in the absent slots.
fn expand(m: usize, subset: &[usize], t_sub: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; m];
    for (&mu, &v) in subset.iter().zip(t_sub) {
        t[mu] = v;
    }
    t
}

fn mixed_symbol(
    cone: &PolyhedralCone,
    t: &[f64],
    sel: Option<&GradientSelector>,
    xi: &[f64],
    nyq: bool,
) -> Complex64 {
    let couplings = cone.couplings(xi);
    let mut s = 0.0;
    for (tm, c) in t.iter().zip(&couplings) {
        s += tm * c.abs();
    }
    let p = (-2.0 * PI * s).exp();
    match sel {
        Some(sel) => sel.symbol(&couplings, nyq) * p,
        None => Complex64::new(p, 0.0),
    }
}

/// Mixed gradient `∇_𝔧 (f * P_t)` for the selected components.
pub fn mixed_gradient(
    f: &GridFunction,
    cone: &PolyhedralCone,
    t: &[f64],
    sel: &GradientSelector,
) -> Result<GridFunction> {
    check_t(cone, t)?;
    if sel.choices.len() != cone.m {
        return Err(Error::LengthMismatch {
            expected: cone.m,
            got: sel.choices.len(),
        });
    }
    if sel.is_empty() {
        return Err(Error::EmptySelector);
    }
    let spectrum = Spectrum::of(f)?;
    Ok(spectrum.apply(|xi, nyq| mixed_symbol(cone, t, Some(sel), xi, nyq)))
}

/// Values `u(·, t)` (or a mixed gradient) at every lattice node.
#[derive(Debug, Clone)]
pub struct OperatorField {
    pub lattice: TLattice,
    pub spec: GridSpec,
    /// Which parameters the lattice coordinates refer to (all by default).
    pub params: Vec<usize>,
    pub selector: Option<GradientSelector>,
    pub values: Vec<GridFunction>,
}

fn check_budget(lattice: &TLattice, spec: &GridSpec, budget: usize) -> Result<()> {
    let requested = lattice.len().saturating_mul(spec.len());
    if requested > budget {
        return Err(Error::OutOfMemoryBudget {
            requested,
            cap: budget,
        });
    }
    Ok(())
}

/// Materializes `f * P_t` (or `∇_sel (f * P_t)`) on every lattice node.
pub fn build_field(
    f: &GridFunction,
    cone: &PolyhedralCone,
    lattice: &TLattice,
    sel: Option<&GradientSelector>,
    budget: usize,
) -> Result<OperatorField> {
    if lattice.m != cone.m {
        return Err(Error::LengthMismatch {
            expected: cone.m,
            got: lattice.m,
        });
    }
    if let Some(s) = sel {
        if s.choices.len() != cone.m {
            return Err(Error::LengthMismatch {
                expected: cone.m,
                got: s.choices.len(),
            });
        }
        if s.is_empty() {
            return Err(Error::EmptySelector);
        }
    }
    check_budget(lattice, &f.spec, budget)?;
    let spectrum = Spectrum::of(f)?;
    let values = lattice
        .nodes
        .par_iter()
        .map(|t| spectrum.apply(|xi, nyq| mixed_symbol(cone, t, sel, xi, nyq)))
        .collect();
    Ok(OperatorField {
        lattice: lattice.clone(),
        spec: f.spec.clone(),
        params: (0..cone.m).collect(),
        selector: sel.cloned(),
        values,
    })
}

/// Scalar field `Σ_components |∇_𝔧 (f *_𝔧 P_{t_𝔧})|²` per node.
///
/// `lattice` ranges over the parameters in `subset` only (the others are
/// absent, i.e. no smoothing along those generators). The result stores
/// the energy in the real part of each sample.
pub fn gradient_energy(
    f: &GridFunction,
    cone: &PolyhedralCone,
    subset: &[usize],
    lattice: &TLattice,
    budget: usize,
) -> Result<OperatorField> {
    if subset.is_empty() {
        return Err(Error::EmptySelector);
    }
    if lattice.m != subset.len() || subset.iter().any(|&mu| mu >= cone.m) {
        return Err(Error::LengthMismatch {
            expected: subset.len(),
            got: lattice.m,
        });
    }
    check_budget(lattice, &f.spec, budget)?;
    let spectrum = Spectrum::of(f)?;
    let components = GradientSelector::components(cone.m, subset);
    let values = lattice
        .nodes
        .par_iter()
        .map(|t_sub| {
            let t = expand(cone.m, subset, t_sub);
            let mut energy = vec![0.0; f.spec.len()];
            for sel in &components {
                let g = spectrum.apply(|xi, nyq| mixed_symbol(cone, &t, Some(sel), xi, nyq));
                for (e, v) in energy.iter_mut().zip(&g.values) {
                    *e += v.norm_sqr();
                }
            }
            GridFunction {
                spec: f.spec.clone(),
                values: energy.into_iter().map(|e| Complex64::new(e, 0.0)).collect(),
                domain: crate::grid::Domain::Space,
            }
        })
        .collect();
    Ok(OperatorField {
        lattice: lattice.clone(),
        spec: f.spec.clone(),
        params: subset.to_vec(),
        selector: None,
        values,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    lattice: TLattice,
    spec: GridSpec,
    params: Vec<usize>,
    selector: Option<String>,
    files: Vec<String>,
}

impl OperatorField {
    /// Writes `manifest.json` plus one TGF1 file per node into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.lattice.len());
        for (node, g) in self.values.iter().enumerate() {
            let name = format!("{}.tgf", self.lattice.node_name(node));
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
            tgf::write_tgf(&mut w, g)?;
            files.push(name);
        }
        let manifest = Manifest {
            lattice: self.lattice.clone(),
            spec: self.spec.clone(),
            params: self.params.clone(),
            selector: self.selector.as_ref().map(GradientSelector::render),
            files,
        };
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(())
    }

    /// Reads a field written by [`OperatorField::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.files.len() != manifest.lattice.len() {
            return Err(Error::Format(
                "manifest file list does not match the lattice".into(),
            ));
        }
        let mut values = Vec::with_capacity(manifest.files.len());
        for name in &manifest.files {
            if name.contains('/') || name.contains("..") {
                return Err(Error::Format(format!("illegal node file name {name:?}")));
            }
            let mut r = std::io::BufReader::new(std::fs::File::open(dir.join(name))?);
            let g = tgf::read_tgf(&mut r)?;
            if g.spec != manifest.spec {
                return Err(Error::Format(format!(
                    "node file {name} has a different grid"
                )));
            }
            values.push(g);
        }
        let selector = manifest
            .selector
            .as_deref()
            .map(GradientSelector::parse)
            .transpose()?;
        Ok(Self {
            lattice: manifest.lattice,
            spec: manifest.spec,
            params: manifest.params,
            selector,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_weights_and_names() {
        let lat = TLattice::new(3, 0.25, SQRT_2, 4).unwrap();
        assert_eq!(lat.len(), 64);
        assert_eq!(lat.node_name(1), "t_00_00_01");
        let w0 = 0.5 * 0.25f64.powi(2) * (SQRT_2 - 1.0 / SQRT_2);
        assert!((lat.weights[0] - w0.powi(3)).abs() < 1e-18);
        assert!(TLattice::new(3, 0.25, SQRT_2, 17).is_err());
    }

    #[test]
    fn selector_components_enumerate_all_choices() {
        let c = GradientSelector::components(3, &[0, 2]);
        let names: Vec<String> = c.iter().map(GradientSelector::render).collect();
        assert_eq!(names, vec!["X-X", "X-T", "T-X", "T-T"]);
        assert_eq!(GradientSelector::parse("X-T").unwrap().render(), "X-T");
        assert!(GradientSelector::parse("XQ").is_err());
    }
}
