//! Holomorphic test functions on the tube `ℝⁿ + iΩ` built from spectra
//! supported in the dual cone.
//!
//! For `ψ` supported in a bounded subset of `Ω*`,
//!
//! ```text
//! F(x + iy) = ∫_{Ω*} e^{2πi(x+iy)·ξ} ψ(ξ) dξ
//! ```
//!
//! is holomorphic on the tube and lies in every `H^p`. A
//! [`SpectralTestFunction`] stores a quadrature of this integral; evaluation
//! is a finite exponential sum, so holomorphy, the reproducing formula
//! `F(x + iπ(t)) = F^b * P_t(x)` and the hidden-parameter identity (two
//! lifts with equal projection give equal fields) hold up to quadrature
//! and rounding only.
//!
//! Grid evaluation exploits tensor-product nodes: the exponential factors
//! per axis, so a full grid is obtained by contracting one axis at a time
//! (cost `O(N q (N + q))` in 2-D instead of `O(N² q²)`).
//!
//! The Cauchy–Szegő kernel `C(z) = ∫_{Ω*} e^{2πiz·ξ} dξ` is evaluated in
//! closed form on a simplicial fan of the dual cone: a simplicial cone with
//! ray matrix `V` contributes `|det V| Π_j 1/(−2πi z·v_j)`.

use crate::cone::{DualCone, PolyhedralCone};
use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec};
use crate::numerics::{det_columns, dot, gauss_legendre, ComplexKahan, KahanSum};
use crate::poisson::{OperatorField, TLattice};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default Gauss–Legendre nodes per axis for bump spectra.
pub const DEFAULT_NODES_PER_AXIS: usize = 96;
/// Relative tolerance when recognizing tensor-product node sets.
const TENSOR_TOL: f64 = 1e-13;
/// Required margin of `y·v` over the dual rays for interior points.
const INTERIOR_TOL: f64 = 1e-12;

/// Per-axis node coordinates of a tensor-product quadrature.
#[derive(Debug, Clone, PartialEq)]
struct TensorAxes {
    axes: Vec<Vec<f64>>,
}

/// Quadrature representation of a spectrum `ψ` on the dual cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTestFunction {
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub psi: Vec<Complex64>,
    /// Every node satisfies `ξ·e_j ≥ 0` for the cone it was built for.
    pub support_check: bool,
    tensor: Option<TensorAxes>,
}

#[derive(Serialize, Deserialize)]
struct StfFile {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    psi: Vec<[f64; 2]>,
}

/// The smooth bump `exp(−1/(1−s²))` for `s < 1`, zero otherwise.
#[inline]
pub fn bump(s2: f64) -> f64 {
    if s2 < 1.0 {
        (-1.0 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

/// Recognizes row-major tensor-product node sets.
fn detect_tensor(n: usize, nodes: &[Vec<f64>]) -> Option<TensorAxes> {
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut stride = nodes.len();
    for a in 0..n {
        let mut axis: Vec<f64> = Vec::new();
        for node in nodes {
            let v = node[a];
            if !axis
                .iter()
                .any(|&u| (u - v).abs() <= TENSOR_TOL * (1.0 + v.abs()))
            {
                axis.push(v);
            }
        }
        if axis.is_empty() || !stride.is_multiple_of(axis.len()) {
            return None;
        }
        stride /= axis.len();
        axes.push(axis);
    }
    if stride != 1 {
        return None;
    }
    // Verify row-major ordering against the collected axes.
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    for (k, node) in nodes.iter().enumerate() {
        let mut rem = k;
        for a in (0..n).rev() {
            let i = rem % sizes[a];
            rem /= sizes[a];
            if (axes[a][i] - node[a]).abs() > TENSOR_TOL * (1.0 + node[a].abs()) {
                return None;
            }
        }
    }
    Some(TensorAxes { axes })
}

/// Contracts axis `axis` of a row-major array against `table[out][q]`.
fn contract_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    table: &[Vec<Complex64>],
) -> Vec<Complex64> {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let q = shape[axis];
    let out_len = table.len();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * out_len * inner];
    out.par_chunks_mut(out_len * inner)
        .enumerate()
        .for_each(|(o, block)| {
            let src = &data[o * q * inner..(o + 1) * q * inner];
            // Fixed summation order over `b`, so results are reproducible; the
            // sums are short (one term per quadrature node) and need no compensation.
            for (row, dst) in table.iter().zip(block.chunks_mut(inner)) {
                for (b, e) in row.iter().enumerate() {
                    for (d, v) in dst.iter_mut().zip(&src[b * inner..(b + 1) * inner]) {
                        *d += v * e;
                    }
                }
            }
        });
    out
}

impl SpectralTestFunction {
    /// Builds from explicit nodes, weights and values.
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>, psi: Vec<Complex64>) -> Result<Self> {
        let n = nodes.first().map_or(0, Vec::len);
        if n == 0 || nodes.iter().any(|v| v.len() != n) {
            return Err(Error::BadShape(
                "spectral nodes must share a positive dimension".into(),
            ));
        }
        if weights.len() != nodes.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if psi.len() != nodes.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: psi.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::BadShape(
                "quadrature weights must be positive and finite".into(),
            ));
        }
        if nodes.iter().flatten().any(|v| !v.is_finite()) || psi.iter().any(|z| !z.is_finite()) {
            return Err(Error::BadShape("non-finite spectral data".into()));
        }
        let tensor = detect_tensor(n, &nodes);
        Ok(Self {
            n,
            nodes,
            weights,
            psi,
            support_check: false,
            tensor,
        })
    }

    /// Marks whether all nodes lie in the dual cone of `cone`.
    pub fn check_support(&mut self, cone: &PolyhedralCone) -> bool {
        self.support_check = self
            .nodes
            .iter()
            .all(|xi| cone.generators.iter().all(|e| dot(e, xi) >= 0.0));
        self.support_check
    }

    /// `Σ w_k ψ_k ≈ ∫ψ`.
    pub fn integral(&self) -> Complex64 {
        let mut acc = ComplexKahan::new();
        for (w, p) in self.weights.iter().zip(&self.psi) {
            acc.add(p * *w);
        }
        acc.value()
    }

    /// `Σ w_k |ψ_k|`, a bound for `|F|` on the closed tube.
    pub fn modulus_bound(&self) -> f64 {
        KahanSum::sum_iter(
            self.weights
                .iter()
                .zip(&self.psi)
                .map(|(w, p)| w * p.norm()),
        )
    }

    /// `true` if the nodes form a row-major tensor product.
    pub fn is_tensor(&self) -> bool {
        self.tensor.is_some()
    }

    /// `F(x + iy)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let mut acc = ComplexKahan::new();
        for ((xi, w), p) in self.nodes.iter().zip(&self.weights).zip(&self.psi) {
            let phase = 2.0 * PI * dot(x, xi);
            let damp = (-2.0 * PI * dot(y, xi)).exp();
            acc.add(p * Complex64::from_polar(w * damp, phase));
        }
        acc.value()
    }

    /// `F(z)` for a complex point `z = x + iy`.
    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        let x: Vec<f64> = z.iter().map(|c| c.re).collect();
        let y: Vec<f64> = z.iter().map(|c| c.im).collect();
        self.eval(&x, &y)
    }

    /// `F(x + iπ(t))` (boundary value when `t = 0`).
    pub fn eval_lifted(&self, cone: &PolyhedralCone, x: &[f64], t: &[f64]) -> Result<Complex64> {
        if let Some(&bad) = t.iter().find(|&&v| v < 0.0) {
            return Err(Error::NonpositiveT(bad));
        }
        Ok(self.eval(x, &cone.project(t)?))
    }

    /// Coefficients `w_k ψ_k e^{−2πy·ξ_k} Π_{μ∈𝔡} (−2π e_μ·ξ_k)`.
    fn coefficients(
        &self,
        y: &[f64],
        deriv: Option<(&PolyhedralCone, &[usize])>,
    ) -> Vec<Complex64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.psi)
            .map(|((xi, w), p)| {
                let mut c = p * (w * (-2.0 * PI * dot(y, xi)).exp());
                if let Some((cone, subset)) = deriv {
                    for &mu in subset {
                        c *= -2.0 * PI * dot(&cone.generators[mu], xi);
                    }
                }
                c
            })
            .collect()
    }

    /// Samples `Σ c_k e^{2πi x·ξ_k}` over the grid.
    fn synthesize(&self, spec: &GridSpec, coeffs: &[Complex64]) -> GridFunction {
        let coords = spec.axis_coords();
        let values = match &self.tensor {
            Some(t) => {
                let mut shape: Vec<usize> = t.axes.iter().map(Vec::len).collect();
                let mut data = coeffs.to_vec();
                for a in (0..self.n).rev() {
                    let table: Vec<Vec<Complex64>> = coords[a]
                        .iter()
                        .map(|&x| {
                            t.axes[a]
                                .iter()
                                .map(|&xi| Complex64::from_polar(1.0, 2.0 * PI * x * xi))
                                .collect()
                        })
                        .collect();
                    data = contract_axis(&data, &shape, a, &table);
                    shape[a] = coords[a].len();
                }
                data
            }
            None => (0..spec.len())
                .into_par_iter()
                .map(|flat| {
                    let x = spec.point(flat);
                    let mut acc = ComplexKahan::new();
                    for (xi, c) in self.nodes.iter().zip(coeffs) {
                        acc.add(c * Complex64::from_polar(1.0, 2.0 * PI * dot(&x, xi)));
                    }
                    acc.value()
                })
                .collect(),
        };
        GridFunction {
            spec: spec.clone(),
            values,
            domain: Domain::Space,
        }
    }

    fn check_dim(&self, spec: &GridSpec) -> Result<()> {
        if spec.n() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "grid is {}-D, spectrum is {}-D",
                spec.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// The slice `x ↦ F(x + iy)` on a grid.
    pub fn slice_grid(&self, spec: &GridSpec, y: &[f64]) -> Result<GridFunction> {
        self.check_dim(spec)?;
        if y.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        Ok(self.synthesize(spec, &self.coefficients(y, None)))
    }

    /// Boundary values `F^b` on a grid.
    pub fn boundary_grid(&self, spec: &GridSpec) -> Result<GridFunction> {
        self.slice_grid(spec, &vec![0.0; self.n])
    }

    /// `∂_{t_𝔧} F(x + iπ(t))` on a grid (`subset` empty: `F` itself).
    pub fn lifted_derivative_grid(
        &self,
        cone: &PolyhedralCone,
        spec: &GridSpec,
        t: &[f64],
        subset: &[usize],
    ) -> Result<GridFunction> {
        self.check_dim(spec)?;
        if cone.n != self.n {
            return Err(Error::ShapeMismatch(
                "cone and spectrum dimensions differ".into(),
            ));
        }
        if let Some(&bad) = t.iter().find(|&&v| v < 0.0) {
            return Err(Error::NonpositiveT(bad));
        }
        let y = cone.project(t)?;
        Ok(self.synthesize(spec, &self.coefficients(&y, Some((cone, subset)))))
    }

    /// `L²` norm of the slice at `y` by Plancherel: `(Σ w |ψ|² e^{−4πy·ξ})^{1/2}`.
    ///
    /// Uses the quadrature as a sampling of `|ψ|²`, which is exact when the
    /// quadrature integrates `|ψ|²` exactly.
    pub fn plancherel_slice_norm(&self, y: &[f64]) -> f64 {
        KahanSum::sum_iter(
            self.nodes
                .iter()
                .zip(&self.weights)
                .zip(&self.psi)
                .map(|((xi, w), p)| w * p.norm_sqr() * (-4.0 * PI * dot(y, xi)).exp()),
        )
        .sqrt()
    }

    /// Parses the JSON exchange format.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: StfFile = serde_json::from_str(s)?;
        let psi = file
            .psi
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        Self::new(file.nodes, file.weights, psi)
    }

    /// Serializes to the JSON exchange format.
    pub fn to_json_string(&self) -> Result<String> {
        let file = StfFile {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            psi: self.psi.iter().map(|z| [z.re, z.im]).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }
}

/// Bump spectrum `a·exp(−1/(1−|ξ−ξ₀|²/r²))` on `B(ξ₀, r) ⊂ Ω*`.
pub fn make_bump_psi(
    dual: &DualCone,
    center: &[f64],
    radius: f64,
    amplitude: f64,
) -> Result<SpectralTestFunction> {
    make_bump_psi_with(dual, center, radius, amplitude, DEFAULT_NODES_PER_AXIS)
}

/// [`make_bump_psi`] with an explicit number of nodes per axis.
pub fn make_bump_psi_with(
    dual: &DualCone,
    center: &[f64],
    radius: f64,
    amplitude: f64,
    nodes_per_axis: usize,
) -> Result<SpectralTestFunction> {
    let n = dual.n;
    if center.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: center.len(),
        });
    }
    if !(radius > 0.0) || !radius.is_finite() || !amplitude.is_finite() {
        return Err(Error::BadShape(
            "bump radius must be positive and finite".into(),
        ));
    }
    for (j, e) in dual.halfspaces.iter().enumerate() {
        let margin = dot(e, center) - radius;
        if margin < 0.0 {
            return Err(Error::SupportEscapesDualCone {
                constraint: j,
                margin,
            });
        }
    }
    let axes: Vec<(Vec<f64>, Vec<f64>)> = center
        .iter()
        .map(|&c| gauss_legendre(nodes_per_axis, c - radius, c + radius))
        .collect();
    let total = nodes_per_axis.pow(n as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut psi = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let xi: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axes[a].0[i]).collect();
        let w: f64 = idx.iter().enumerate().map(|(a, &i)| axes[a].1[i]).product();
        let s2: f64 = xi
            .iter()
            .zip(center)
            .map(|(u, c)| (u - c) * (u - c))
            .sum::<f64>()
            / (radius * radius);
        psi.push(Complex64::new(amplitude * bump(s2), 0.0));
        nodes.push(xi);
        weights.push(w);
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < nodes_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    let tensor = Some(TensorAxes {
        axes: axes.into_iter().map(|(x, _)| x).collect(),
    });
    Ok(SpectralTestFunction {
        n,
        nodes,
        weights,
        psi,
        support_check: true,
        tensor,
    })
}

/// Materializes `u(x, t) = F(x + iπ(t))` over a lattice.
pub fn lift_field(
    stf: &SpectralTestFunction,
    cone: &PolyhedralCone,
    lattice: &TLattice,
    spec: &GridSpec,
    budget: usize,
) -> Result<OperatorField> {
    if lattice.m != cone.m {
        return Err(Error::LengthMismatch {
            expected: cone.m,
            got: lattice.m,
        });
    }
    let requested = lattice.len().saturating_mul(spec.len());
    if requested > budget {
        return Err(Error::OutOfMemoryBudget {
            requested,
            cap: budget,
        });
    }
    let values = lattice
        .nodes
        .par_iter()
        .map(|t| stf.lifted_derivative_grid(cone, spec, t, &[]))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorField {
        lattice: lattice.clone(),
        spec: spec.clone(),
        params: (0..cone.m).collect(),
        selector: None,
        values,
    })
}

/// Holomorphic gradient energy `|∇_𝔧 F(x + iπ(t))|²` over a lattice on `subset`.
///
/// For holomorphic `F`, `X_μ F = −i ∂_{t_μ} F`, so all `2^{|𝔧|}` mixed
/// components share the modulus `|∂_{t_𝔧} F|` and the energy is
/// `2^{|𝔧|} |∂_{t_𝔧} F|²` (stored in the real part). Parameters outside
/// `subset` are set to zero.
pub fn lift_energy(
    stf: &SpectralTestFunction,
    cone: &PolyhedralCone,
    subset: &[usize],
    lattice: &TLattice,
    spec: &GridSpec,
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
    let requested = lattice.len().saturating_mul(spec.len());
    if requested > budget {
        return Err(Error::OutOfMemoryBudget {
            requested,
            cap: budget,
        });
    }
    let scale = 2f64.powi(subset.len() as i32);
    let values = lattice
        .nodes
        .par_iter()
        .map(|t_sub| {
            let mut t = vec![0.0; cone.m];
            for (&mu, &v) in subset.iter().zip(t_sub) {
                t[mu] = v;
            }
            let g = stf.lifted_derivative_grid(cone, spec, &t, subset)?;
            Ok(g.map(|z| Complex64::new(scale * z.norm_sqr(), 0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorField {
        lattice: lattice.clone(),
        spec: spec.clone(),
        params: subset.to_vec(),
        selector: None,
        values,
    })
}

/// Result of a Hardy-norm probe.
#[derive(Debug, Clone, Serialize)]
pub struct HardyEstimate {
    pub norm: f64,
    /// Lattice parameter attaining the maximal slice norm.
    pub t_max: Vec<f64>,
    /// Slice norms in lattice order.
    pub slice_norms: Vec<f64>,
}

/// Slice norm `(hⁿ Σ |F(x + iy)|^p)^{1/p}` on the grid.
pub fn slice_norm(stf: &SpectralTestFunction, spec: &GridSpec, y: &[f64], p: f64) -> Result<f64> {
    let g = stf.slice_grid(spec, y)?;
    let s = KahanSum::sum_iter(g.values.iter().map(|z| z.norm().powf(p)));
    Ok((spec.cell_volume() * s).powf(1.0 / p))
}

/// `‖F‖_{H^p}` estimated as the largest slice norm over `y = π(t)`, `t` in the probe lattice.
pub fn hardy_norm(
    stf: &SpectralTestFunction,
    cone: &PolyhedralCone,
    p: u32,
    probe: &TLattice,
    spec: &GridSpec,
) -> Result<HardyEstimate> {
    if p != 1 && p != 2 {
        return Err(Error::ConfigInvalid(format!(
            "Hardy norm exponent must be 1 or 2, got {p}"
        )));
    }
    let slice_norms = probe
        .nodes
        .iter()
        .map(|t| slice_norm(stf, spec, &cone.project(t)?, p as f64))
        .collect::<Result<Vec<_>>>()?;
    let (best, norm) =
        slice_norms
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    Ok(HardyEstimate {
        norm,
        t_max: probe.nodes[best].clone(),
        slice_norms,
    })
}

/// Cauchy–Szegő kernel `C(z) = ∫_{Ω*} e^{2πiz·ξ} dξ` in closed form.
pub fn cauchy_szego(cone: &PolyhedralCone, z: &[Complex64]) -> Result<Complex64> {
    let dual = cone.dual()?;
    cauchy_szego_with(&dual, &dual.simplicial_fan(), z)
}

/// [`cauchy_szego`] with a precomputed dual cone and fan.
pub fn cauchy_szego_with(
    dual: &DualCone,
    fan: &[Vec<usize>],
    z: &[Complex64],
) -> Result<Complex64> {
    if z.len() != dual.n {
        return Err(Error::LengthMismatch {
            expected: dual.n,
            got: z.len(),
        });
    }
    if dual.n > 4 {
        return Err(Error::UnsupportedDimension(dual.n));
    }
    let y: Vec<f64> = z.iter().map(|c| c.im).collect();
    let scale = y
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    if dual.rays.iter().any(|v| dot(v, &y) <= INTERIOR_TOL * scale) {
        return Err(Error::BoundaryY);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for simplex in fan {
        let cols: Vec<&[f64]> = simplex.iter().map(|&r| dual.rays[r].as_slice()).collect();
        let mut term = Complex64::new(det_columns(&cols).abs(), 0.0);
        for v in &cols {
            let zv: Complex64 = z.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            term /= Complex64::new(0.0, -2.0 * PI) * zv;
        }
        total += term;
    }
    Ok(total)
}
