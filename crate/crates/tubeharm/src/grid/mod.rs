//! Uniform periodic grids on boxes `[−L, L)ⁿ`, their discrete Fourier
//! transforms and Fourier multipliers.
//!
//! Convention: `f̂(ξ) = ∫ f(x) e^{−2πi x·ξ} dx`. With samples
//! `x_j = −L + j h` and reciprocal lattice `ξ_k = k/(2L)`, the forward
//! transform is `hⁿ Σ_j f(x_j) e^{−2πi x_j·ξ_k}` and the inverse is
//! `(2L)^{−n} Σ_k f̂(ξ_k) e^{2πi x_j·ξ_k}`; these are exact inverses of
//! each other. Multipliers never need the phase factors, so they are
//! applied directly to the raw FFT coefficients ([`Spectrum`]).
//!
//! Multipliers that are odd in ξ (an odd number of `2πi v·ξ` factors)
//! are set to zero on Nyquist modes, where the symmetric lattice cannot
//! represent an odd function; this keeps real inputs real.

pub mod tgf;

use crate::error::{Error, Result};
use crate::numerics::KahanSum;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative tolerance for the isotropic-spacing check.
const SPACING_TOL: f64 = 1e-12;
/// Smallest admissible per-axis sample count.
pub const MIN_SIZE: usize = 16;

/// Shape and extent of a periodic box grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub sizes: Vec<usize>,
    pub box_half: Vec<f64>,
}

/// Whether samples live in physical space or on the reciprocal lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    Frequency,
}

/// Complex samples on a grid, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
    pub domain: Domain,
}

/// Norm selector for [`GridFunction::lp_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl GridSpec {
    /// Validates sizes (powers of two, ≥ 16) and isotropic spacing.
    pub fn new(sizes: Vec<usize>, box_half: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != box_half.len() {
            return Err(Error::ShapeMismatch(
                "sizes and box_half must be nonempty and equally long".into(),
            ));
        }
        for &s in &sizes {
            if s < MIN_SIZE || !s.is_power_of_two() {
                return Err(Error::ShapeMismatch(format!(
                    "axis size {s} is not a power of two ≥ {MIN_SIZE}"
                )));
            }
        }
        if box_half.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::ShapeMismatch(
                "box half-widths must be positive".into(),
            ));
        }
        let h0 = 2.0 * box_half[0] / sizes[0] as f64;
        for (s, l) in sizes.iter().zip(&box_half) {
            let h = 2.0 * l / *s as f64;
            if ((h - h0) / h0).abs() > SPACING_TOL {
                return Err(Error::ShapeMismatch(
                    "grid spacing must be isotropic".into(),
                ));
            }
        }
        Ok(Self { sizes, box_half })
    }

    /// Cube grid with `size` samples per axis on `[−L, L)ⁿ`.
    pub fn cube(n: usize, size: usize, half: f64) -> Result<Self> {
        Self::new(vec![size; n], vec![half; n])
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid spacing `h = 2L/size`.
    pub fn h(&self) -> f64 {
        2.0 * self.box_half[0] / self.sizes[0] as f64
    }

    /// Cell volume `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n() as i32)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.n();
        let mut s = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.sizes[a + 1];
        }
        s
    }

    /// Coordinate of sample `i` on `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -self.box_half[axis] + i as f64 * self.h()
    }

    /// Per-axis coordinate arrays.
    pub fn axis_coords(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|a| (0..self.sizes[a]).map(|i| self.coord(a, i)).collect())
            .collect()
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n()];
        for a in (0..self.n()).rev() {
            idx[a] = flat % self.sizes[a];
            flat /= self.sizes[a];
        }
        idx
    }

    /// Flat index of a (periodically wrapped) signed multi-index.
    pub fn flat_wrapped(&self, idx: &[isize]) -> usize {
        let mut flat = 0;
        for (a, &i) in idx.iter().enumerate() {
            let s = self.sizes[a] as isize;
            flat = flat * self.sizes[a] + i.rem_euclid(s) as usize;
        }
        flat
    }

    /// Physical coordinates of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    /// Signed wavenumber of FFT-order index `i` on `axis`.
    #[inline]
    pub fn wavenumber(&self, axis: usize, i: usize) -> isize {
        let n = self.sizes[axis];
        if i < n / 2 {
            i as isize
        } else {
            i as isize - n as isize
        }
    }

    /// Per-axis frequencies `k/(2L)` in FFT order.
    pub fn axis_frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|a| {
                (0..self.sizes[a])
                    .map(|i| self.wavenumber(a, i) as f64 / (2.0 * self.box_half[a]))
                    .collect()
            })
            .collect()
    }

    /// Calls `visit(flat, ξ, nyquist)` for every frequency in FFT order.
    pub fn for_each_frequency<F: FnMut(usize, &[f64], bool)>(&self, mut visit: F) {
        let freqs = self.axis_frequencies();
        let n = self.n();
        let mut idx = vec![0usize; n];
        let mut xi: Vec<f64> = freqs.iter().map(|f| f[0]).collect();
        for flat in 0..self.len() {
            let nyq = idx.iter().zip(&self.sizes).any(|(&i, &s)| i == s / 2);
            visit(flat, &xi, nyq);
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < self.sizes[a] {
                    xi[a] = freqs[a][idx[a]];
                    break;
                }
                idx[a] = 0;
                xi[a] = freqs[a][0];
            }
        }
    }

    /// Same box, twice the samples per axis.
    pub fn refined(&self) -> Self {
        Self {
            sizes: self.sizes.iter().map(|s| 2 * s).collect(),
            box_half: self.box_half.clone(),
        }
    }

    /// Twice the box and twice the samples (same spacing).
    pub fn doubled(&self) -> Self {
        Self {
            sizes: self.sizes.iter().map(|s| 2 * s).collect(),
            box_half: self.box_half.iter().map(|l| 2.0 * l).collect(),
        }
    }
}

/// Raw (unnormalized) FFT coefficients of a spatial grid function, used to
/// apply many multipliers to the same input.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub spec: GridSpec,
    pub coeffs: Vec<Complex64>,
}

/// Multidimensional FFT in place (row-major), unnormalized.
pub fn fft_nd(values: &mut [Complex64], sizes: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let n = sizes.len();
    let total: usize = sizes.iter().product();
    for axis in 0..n {
        let len = sizes[axis];
        let fft: Arc<dyn Fft<f64>> = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let stride: usize = sizes[axis + 1..].iter().product();
        if stride == 1 {
            fft.process(values);
            continue;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let block = len * stride;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = values[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    values[base + k * stride] = *v;
                }
            }
        }
    }
}

impl Spectrum {
    /// Raw FFT of `f` (must be spatial).
    pub fn of(f: &GridFunction) -> Result<Self> {
        if f.domain != Domain::Space {
            return Err(Error::ShapeMismatch(
                "expected a spatial grid function".into(),
            ));
        }
        let mut coeffs = f.values.clone();
        fft_nd(&mut coeffs, &f.spec.sizes, false);
        Ok(Self {
            spec: f.spec.clone(),
            coeffs,
        })
    }

    /// Multiplier values `M(ξ_k)` in FFT order.
    pub fn multiplier_values<M: Fn(&[f64], bool) -> Complex64>(&self, m: M) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        self.spec
            .for_each_frequency(|flat, xi, nyq| out[flat] = m(xi, nyq));
        out
    }

    /// Inverse transform of `M · f̂` with precomputed multiplier values.
    pub fn apply_values(&self, mult: &[Complex64]) -> GridFunction {
        let mut v: Vec<Complex64> = self.coeffs.iter().zip(mult).map(|(c, m)| c * m).collect();
        fft_nd(&mut v, &self.spec.sizes, true);
        let scale = 1.0 / self.spec.len() as f64;
        for x in v.iter_mut() {
            *x *= scale;
        }
        GridFunction {
            spec: self.spec.clone(),
            values: v,
            domain: Domain::Space,
        }
    }

    /// Inverse transform of `M · f̂`; `m(ξ, is_nyquist)`.
    pub fn apply<M: Fn(&[f64], bool) -> Complex64>(&self, m: M) -> GridFunction {
        let mult = self.multiplier_values(m);
        self.apply_values(&mult)
    }
}

impl GridFunction {
    /// All-zero spatial function.
    pub fn zeros(spec: &GridSpec) -> Self {
        Self {
            spec: spec.clone(),
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
            domain: Domain::Space,
        }
    }

    /// Samples a complex function of position.
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(spec: &GridSpec, f: F) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        Self {
            spec: spec.clone(),
            values,
            domain: Domain::Space,
        }
    }

    /// Samples a real function of position.
    pub fn from_real_fn<F: Fn(&[f64]) -> f64>(spec: &GridSpec, f: F) -> Self {
        Self::from_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    /// Wraps raw values (length must match).
    pub fn from_values(spec: &GridSpec, values: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} samples",
                values.len(),
                spec.len()
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            values,
            domain,
        })
    }

    /// Pointwise moduli.
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Pointwise map into a new function on the same grid.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain,
        }
    }

    /// `(hⁿ Σ |f|ᵖ)^{1/p}` or the sup norm.
    pub fn lp_norm(&self, p: Norm) -> f64 {
        let hv = self.spec.cell_volume();
        match p {
            Norm::L1 => hv * KahanSum::sum_iter(self.values.iter().map(|v| v.norm())),
            Norm::L2 => (hv * KahanSum::sum_iter(self.values.iter().map(|v| v.norm_sqr()))).sqrt(),
            Norm::Inf => self.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Largest pointwise difference modulus.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Discretized continuous Fourier transform (centered frequency order).
    pub fn fourier_forward(&self) -> Result<Self> {
        if self.domain != Domain::Space {
            return Err(Error::ShapeMismatch(
                "forward transform needs a spatial function".into(),
            ));
        }
        let mut v = self.values.clone();
        fft_nd(&mut v, &self.spec.sizes, false);
        let hv = self.spec.cell_volume();
        let out = self.recenter(&v, |k_sum_parity| if k_sum_parity { -hv } else { hv }, true);
        Ok(Self {
            spec: self.spec.clone(),
            values: out,
            domain: Domain::Frequency,
        })
    }

    /// Inverse of [`GridFunction::fourier_forward`].
    pub fn fourier_inverse(&self) -> Result<Self> {
        if self.domain != Domain::Frequency {
            return Err(Error::ShapeMismatch(
                "inverse transform needs a frequency-domain function".into(),
            ));
        }
        let hv = self.spec.cell_volume();
        let mut v = self.recenter(
            &self.values,
            |parity| if parity { -1.0 / hv } else { 1.0 / hv },
            false,
        );
        fft_nd(&mut v, &self.spec.sizes, true);
        let scale = 1.0 / self.spec.len() as f64;
        for x in v.iter_mut() {
            *x *= scale;
        }
        Ok(Self {
            spec: self.spec.clone(),
            values: v,
            domain: Domain::Space,
        })
    }

    /// Reorders between FFT order and centered order, scaling each entry
    /// by `factor(Σk odd)`. `to_centered` selects the direction.
    fn recenter<F: Fn(bool) -> f64>(
        &self,
        src: &[Complex64],
        factor: F,
        to_centered: bool,
    ) -> Vec<Complex64> {
        let spec = &self.spec;
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for (fft_flat, _) in src.iter().enumerate() {
            let idx = spec.multi_index(fft_flat);
            let mut centered = 0;
            let mut ksum: isize = 0;
            for (a, &i) in idx.iter().enumerate() {
                let k = spec.wavenumber(a, i);
                ksum += k;
                centered = centered * spec.sizes[a] + (k + spec.sizes[a] as isize / 2) as usize;
            }
            let f = factor(ksum.rem_euclid(2) == 1);
            if to_centered {
                out[centered] = src[fft_flat] * f;
            } else {
                out[fft_flat] = src[centered] * f;
            }
        }
        out
    }
}

/// `inverse(M · forward(f))` for a multiplier `M(ξ, is_nyquist)`.
pub fn apply_multiplier<M: Fn(&[f64], bool) -> Complex64>(
    f: &GridFunction,
    m: M,
) -> Result<GridFunction> {
    Ok(Spectrum::of(f)?.apply(m))
}

/// Spectral directional derivative `(v·∇)^order f` via `(2πi v·ξ)^order`.
pub fn directional_fd(f: &GridFunction, v: &[f64], order: u32) -> Result<GridFunction> {
    if v.len() != f.spec.n() {
        return Err(Error::LengthMismatch {
            expected: f.spec.n(),
            got: v.len(),
        });
    }
    apply_multiplier(f, |xi, nyq| {
        if nyq && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        let s: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum();
        Complex64::new(0.0, 2.0 * PI * s).powu(order)
    })
}

/// Second-order central finite-difference directional derivative, built
/// from axis stencils (`order` 1 or 2). Cross-validation path.
pub fn directional_fd_stencil(f: &GridFunction, v: &[f64], order: u32) -> Result<GridFunction> {
    let spec = &f.spec;
    let n = spec.n();
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let h = spec.h();
    let at = |idx: &[isize]| f.values[spec.flat_wrapped(idx)];
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (flat, o) in out.iter_mut().enumerate() {
        let base: Vec<isize> = spec.multi_index(flat).iter().map(|&i| i as isize).collect();
        let shifted = |pairs: &[(usize, isize)]| {
            let mut idx = base.clone();
            for &(a, d) in pairs {
                idx[a] += d;
            }
            at(&idx)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        match order {
            1 => {
                for a in 0..n {
                    acc += v[a] * (shifted(&[(a, 1)]) - shifted(&[(a, -1)])) / (2.0 * h);
                }
            }
            2 => {
                let c = at(&base);
                for a in 0..n {
                    acc += v[a] * v[a] * (shifted(&[(a, 1)]) - 2.0 * c + shifted(&[(a, -1)]))
                        / (h * h);
                    for b in a + 1..n {
                        let mixed = shifted(&[(a, 1), (b, 1)])
                            - shifted(&[(a, 1), (b, -1)])
                            - shifted(&[(a, -1), (b, 1)])
                            + shifted(&[(a, -1), (b, -1)]);
                        acc += 2.0 * v[a] * v[b] * mixed / (4.0 * h * h);
                    }
                }
            }
            _ => {
                return Err(Error::ConfigInvalid(format!(
                    "stencil order {order} not supported"
                )))
            }
        }
        *o = acc;
    }
    GridFunction::from_values(spec, out, Domain::Space)
}
