//! Hilbert-space-valued Littlewood–Paley theory on the line.
//!
//! The Hilbert space `ℌ` is realized as `ℂ^d`; an ℌ-valued function is a
//! [`HValuedGridFunction1D`] with `d` channels and `|𝔣(x)|_ℌ` the Euclidean
//! norm across channels.
//!
//! With `ρ_t = t ∂_t P_t` (multiplier `−2πt|ξ| e^{−2πt|ξ|}`) and a compactly
//! supported even `φ` whose moments of order 0, 1, 2 vanish, the Calderón
//! integrand is constant:
//!
//! ```text
//! ∫₀^∞ φ̂(tξ) ρ̂_t(ξ) dt/t = −2π ∫₀^∞ φ̂(u) e^{−2πu} du = −∫ φ(s) / (1 + s²) ds,
//! ```
//!
//! so rescaling `φ` makes `𝔣 = ∫₀^∞ φ_t * ρ_t * 𝔣 dt/t`.
//!
//! Splitting `t` into scales `[2^{−αj}, 2^{−α(j−1)}]` and sampling the
//! averaged kernel `ρ̃_j = c_α⁻¹ ∫ ρ_t dt/t` at anchors of intervals of
//! length `2^{−α(j+N)}` gives the first-order wavelet synthesis
//!
//! ```text
//! 𝒯𝔣(x) = c_α Σ_j Σ_I (∫_I φ̃_j(x − x′) dx′) ρ̃_j * 𝔣(x_I),   c_α = α ln 2,
//! ```
//!
//! evaluated here in closed form through antiderivatives of `φ̃_j`. The
//! residual `𝔣 − 𝒯𝔣` is what the Neumann series for `𝒯⁻¹` would have to
//! remove; it shrinks as `N` grows.

use crate::error::{Error, Result};
use crate::grid::{tgf, Domain, GridFunction, GridSpec, Norm, Spectrum};
use crate::numerics::{composite_gauss_legendre, gauss_legendre, KahanSum};
use crate::spectral::bump;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

/// Largest tolerated moment of `φ` (orders 0, 1, 2).
pub const MOMENT_TOL: f64 = 1e-10;
/// Largest tolerated deviation of the Calderón integrand from 1.
pub const FLATNESS_TOL: f64 = 1e-3;
/// Required fraction of `g_P` energy inside a finite scale range.
pub const COVERAGE_MIN: f64 = 0.999;
/// Default scale ratio exponent.
pub const DEFAULT_ALPHA: f64 = 0.25;
/// Default interval refinement.
pub const DEFAULT_N: u32 = 6;
/// Maximum channel count.
pub const MAX_CHANNELS: usize = 16;
/// Gauss–Legendre nodes in `ln t` per dyadic scale.
const SCALE_NODES: usize = 8;
/// Composite rule for `φ` on `[−1, 1]`: panels × order.
const PHI_PANELS: usize = 64;
const PHI_ORDER: usize = 16;
/// Cells of the antiderivative table on `[−1, 1]`.
const ANTIDERIVATIVE_CELLS: usize = 4096;
/// Table spacing and extent for `φ̂`.
const PHI_HAT_STEP: f64 = 0.005;
const PHI_HAT_MAX: f64 = 200.0;

/// ℌ-valued samples on a one-dimensional grid (`values[i·d + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct HValuedGridFunction1D {
    pub spec: GridSpec,
    pub d: usize,
    pub values: Vec<Complex64>,
}

impl HValuedGridFunction1D {
    pub fn new(spec: &GridSpec, d: usize, values: Vec<Complex64>) -> Result<Self> {
        if spec.n() != 1 {
            return Err(Error::ShapeMismatch(
                "ℌ-valued functions live on a 1-D grid".into(),
            ));
        }
        if d == 0 || d > MAX_CHANNELS {
            return Err(Error::BadShape(format!(
                "channel count must be in 1..={MAX_CHANNELS}, got {d}"
            )));
        }
        if values.len() != spec.len() * d {
            return Err(Error::LengthMismatch {
                expected: spec.len() * d,
                got: values.len(),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            d,
            values,
        })
    }

    /// Zero function with `d` channels.
    pub fn zeros(spec: &GridSpec, d: usize) -> Result<Self> {
        Self::new(spec, d, vec![Complex64::new(0.0, 0.0); spec.len() * d])
    }

    /// Interleaves scalar channels.
    pub fn from_channels(channels: &[GridFunction]) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::BadShape("no channels".into()))?;
        let spec = &first.spec;
        if channels.iter().any(|c| c.spec != *spec) {
            return Err(Error::ShapeMismatch("channels on different grids".into()));
        }
        let d = channels.len();
        let mut values = vec![Complex64::new(0.0, 0.0); spec.len() * d];
        for (c, ch) in channels.iter().enumerate() {
            for (i, v) in ch.values.iter().enumerate() {
                values[i * d + c] = *v;
            }
        }
        Self::new(spec, d, values)
    }

    /// One channel as a scalar grid function.
    pub fn channel(&self, c: usize) -> GridFunction {
        let values = (0..self.spec.len())
            .map(|i| self.values[i * self.d + c])
            .collect();
        GridFunction {
            spec: self.spec.clone(),
            values,
            domain: Domain::Space,
        }
    }

    pub fn channels(&self) -> Vec<GridFunction> {
        (0..self.d).map(|c| self.channel(c)).collect()
    }

    /// Pointwise `|𝔣(x)|_ℌ`.
    pub fn hnorm(&self) -> Vec<f64> {
        self.values
            .chunks(self.d)
            .map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// `‖𝔣‖_{L^p(ℝ, ℌ)}` for `p ∈ {1, 2, ∞}`.
    pub fn norm(&self, p: Norm) -> f64 {
        let h = self.spec.h();
        let pointwise = self.hnorm();
        match p {
            Norm::L1 => h * KahanSum::sum_iter(pointwise),
            Norm::L2 => (h * KahanSum::sum_iter(pointwise.iter().map(|v| v * v))).sqrt(),
            Norm::Inf => pointwise.into_iter().fold(0.0, f64::max),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.spec != other.spec || self.d != other.d {
            return Err(Error::ShapeMismatch(
                "combining functions of different shape".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Self::new(&self.spec, self.d, values)
    }

    /// `∫ 𝔣 dx` per channel.
    pub fn integral(&self) -> Vec<Complex64> {
        let h = self.spec.h();
        (0..self.d)
            .map(|c| {
                let re =
                    KahanSum::sum_iter(self.values.iter().skip(c).step_by(self.d).map(|z| z.re));
                let im =
                    KahanSum::sum_iter(self.values.iter().skip(c).step_by(self.d).map(|z| z.im));
                Complex64::new(re, im) * h
            })
            .collect()
    }

    /// Writes TGF1 (multi-channel extension).
    pub fn write_tgf<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        tgf::write_tgf_channels(w, &self.spec, Domain::Space, self.d, &self.values)
    }

    /// Reads TGF1 (any channel count).
    pub fn read_tgf<R: std::io::Read>(r: &mut R) -> Result<Self> {
        let data = tgf::read_tgf_data(r)?;
        Self::new(&data.spec, data.channels, data.values)
    }

    /// Applies a real multiplier `m(|ξ|)` channelwise (spectra precomputed).
    fn spectra(&self) -> Result<Vec<Spectrum>> {
        self.channels().iter().map(Spectrum::of).collect()
    }
}

fn apply_channels(
    spec: &GridSpec,
    spectra: &[Spectrum],
    mult: &[Complex64],
) -> HValuedGridFunction1D {
    let chans: Vec<GridFunction> = spectra.iter().map(|s| s.apply_values(mult)).collect();
    HValuedGridFunction1D::from_channels(&chans).unwrap_or_else(|_| HValuedGridFunction1D {
        spec: spec.clone(),
        d: 0,
        values: Vec::new(),
    })
}

/// `|ξ|` for every frequency of a 1-D grid, FFT order.
fn abs_frequencies(spec: &GridSpec) -> Vec<f64> {
    spec.axis_frequencies()[0].iter().map(|v| v.abs()).collect()
}

/// Symbol of `ρ_t`: `−2πt|ξ| e^{−2πt|ξ|}`.
#[inline]
pub fn rho_hat(t: f64, xi_abs: f64) -> f64 {
    let u = 2.0 * PI * t * xi_abs;
    -u * (-u).exp()
}

/// Symbol of the averaged kernel `ρ̃_j` over `[t_a, t_b]`.
#[inline]
pub fn rho_tilde_hat(t_a: f64, t_b: f64, xi_abs: f64) -> f64 {
    let c_alpha = (t_b / t_a).ln();
    ((-2.0 * PI * t_b * xi_abs).exp() - (-2.0 * PI * t_a * xi_abs).exp()) / c_alpha
}

/// `∫_a^b (2πu)² e^{−4πu} du/u` in closed form.
fn gp_energy(a: f64, b: f64) -> f64 {
    let prim = |u: f64| {
        if u.is_infinite() {
            0.0
        } else {
            (PI * u + 0.25) * (-4.0 * PI * u).exp()
        }
    };
    prim(a) - prim(b)
}

/// Compactly supported `φ` with vanishing moments and normalized Calderón integrand.
#[derive(Debug, Clone)]
pub struct CalderonPair {
    /// Coefficients of `p(s) = c₀ + c₂s² + c₄s⁴ + c₆s⁶` (normalization included).
    pub coeffs: [f64; 4],
    /// Moments of order 0, 1, 2 of the normalized `φ`.
    pub moments: [f64; 3],
    /// Largest `|I(ξ) − 1|` over the flatness probe.
    pub flatness: f64,
    /// `true` when `flatness ≤ FLATNESS_TOL`.
    pub flat: bool,
    quad_s: Vec<f64>,
    quad_w: Vec<f64>,
    antideriv: Vec<f64>,
    phi_hat_table: Vec<f64>,
    phi_hat_deriv: Vec<f64>,
}

impl CalderonPair {
    /// `φ(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        let s2 = s * s;
        let [c0, c2, c4, c6] = self.coeffs;
        (c0 + s2 * (c2 + s2 * (c4 + s2 * c6))) * bump(s2)
    }

    /// `φ̂(u) = ∫ φ(s) cos(2πsu) ds` by direct quadrature.
    pub fn phi_hat_direct(&self, u: f64) -> f64 {
        let mut acc = KahanSum::new();
        for (s, w) in self.quad_s.iter().zip(&self.quad_w) {
            acc.add(w * self.phi(*s) * (2.0 * PI * s * u).cos());
        }
        acc.value()
    }

    /// `φ̂(u)` from the Hermite table (zero beyond the table).
    pub fn phi_hat(&self, u: f64) -> f64 {
        let u = u.abs();
        let x = u / PHI_HAT_STEP;
        let k = x.floor() as usize;
        if k + 1 >= self.phi_hat_table.len() {
            return 0.0;
        }
        hermite(
            x - k as f64,
            self.phi_hat_table[k],
            self.phi_hat_table[k + 1],
            self.phi_hat_deriv[k] * PHI_HAT_STEP,
            self.phi_hat_deriv[k + 1] * PHI_HAT_STEP,
        )
    }

    /// `Φ(u) = ∫_{−1}^u φ`; zero outside `(−1, 1)`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        if u <= -1.0 || u >= 1.0 {
            return 0.0;
        }
        let step = 2.0 / ANTIDERIVATIVE_CELLS as f64;
        let x = (u + 1.0) / step;
        let k = (x.floor() as usize).min(ANTIDERIVATIVE_CELLS - 1);
        let s0 = -1.0 + k as f64 * step;
        hermite(
            x - k as f64,
            self.antideriv[k],
            self.antideriv[k + 1],
            self.phi(s0) * step,
            self.phi(s0 + step) * step,
        )
    }

    /// Calderón integrand `∫ φ̂(tξ) ρ̂_t(ξ) dt/t` by log-grid quadrature.
    pub fn calderon_integrand(&self, xi: f64) -> f64 {
        let (lt, w) = composite_gauss_legendre(48, 16, (1e-4f64).ln(), (1e3f64).ln());
        KahanSum::sum_iter(lt.iter().zip(&w).map(|(l, w)| {
            let t = l.exp();
            w * self.phi_hat_direct(t * xi) * rho_hat(t, xi)
        }))
    }
}

/// Cubic Hermite interpolation on the unit cell.
#[inline]
fn hermite(x: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0
        + (x3 - 2.0 * x2 + x) * d0
        + (-2.0 * x3 + 3.0 * x2) * y1
        + (x3 - x2) * d1
}

/// Builds `φ = p · bump`, solving for vanishing moments and normalizing.
pub fn make_phi() -> Result<CalderonPair> {
    let (quad_s, quad_w) = composite_gauss_legendre(PHI_PANELS, PHI_ORDER, -1.0, 1.0);
    let moment = |k: i32| {
        KahanSum::sum_iter(
            quad_s
                .iter()
                .zip(&quad_w)
                .map(|(s, w)| w * s.powi(k) * bump(s * s)),
        )
    };
    let (m0, m2, m4, m6) = (moment(0), moment(2), moment(4), moment(6));
    // c₀ = 1, c₆ = 0; c₂, c₄ kill the moments of order 0 and 2.
    let det = m2 * m6 - m4 * m4;
    if det.abs() < 1e-300 {
        return Err(Error::NormalizationDegenerate(det));
    }
    let c2 = (-m0 * m6 + m2 * m4) / det;
    let c4 = (-m2 * m2 + m0 * m4) / det;
    let raw = CalderonPair {
        coeffs: [1.0, c2, c4, 0.0],
        moments: [0.0; 3],
        flatness: 0.0,
        flat: false,
        quad_s: quad_s.clone(),
        quad_w: quad_w.clone(),
        antideriv: Vec::new(),
        phi_hat_table: Vec::new(),
        phi_hat_deriv: Vec::new(),
    };
    let integrand = -KahanSum::sum_iter(
        quad_s
            .iter()
            .zip(&quad_w)
            .map(|(s, w)| w * raw.phi(*s) / (1.0 + s * s)),
    );
    if integrand.abs() < 1e-12 {
        return Err(Error::NormalizationDegenerate(integrand));
    }
    let kappa = 1.0 / integrand;
    let mut pair = CalderonPair {
        coeffs: [kappa, kappa * c2, kappa * c4, 0.0],
        ..raw
    };
    let m = |k: i32| {
        KahanSum::sum_iter(
            quad_s
                .iter()
                .zip(&quad_w)
                .map(|(s, w)| w * s.powi(k) * pair.phi(*s)),
        )
    };
    pair.moments = [m(0), m(1), m(2)];
    // Antiderivative table.
    let step = 2.0 / ANTIDERIVATIVE_CELLS as f64;
    let (gx, gw) = gauss_legendre(8, 0.0, step);
    let mut antideriv = vec![0.0; ANTIDERIVATIVE_CELLS + 1];
    let mut acc = KahanSum::new();
    for k in 0..ANTIDERIVATIVE_CELLS {
        let s0 = -1.0 + k as f64 * step;
        for (x, w) in gx.iter().zip(&gw) {
            acc.add(w * pair.phi(s0 + x));
        }
        antideriv[k + 1] = acc.value();
    }
    pair.antideriv = antideriv;
    // φ̂ table with derivatives (φ is even: fold the quadrature).
    let half: Vec<(f64, f64)> = quad_s
        .iter()
        .zip(&quad_w)
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, w)| (*s, 2.0 * w * pair.phi(*s)))
        .collect();
    let cells = (PHI_HAT_MAX / PHI_HAT_STEP) as usize;
    let (table, deriv): (Vec<f64>, Vec<f64>) = (0..=cells)
        .into_par_iter()
        .map(|k| {
            let u = k as f64 * PHI_HAT_STEP;
            let mut v = KahanSum::new();
            let mut dv = KahanSum::new();
            for &(s, ws) in &half {
                let (sin, cos) = (2.0 * PI * s * u).sin_cos();
                v.add(ws * cos);
                dv.add(-ws * 2.0 * PI * s * sin);
            }
            (v.value(), dv.value())
        })
        .unzip();
    pair.phi_hat_table = table;
    pair.phi_hat_deriv = deriv;
    let probe: Vec<f64> = crate::numerics::geometric_grid(0.1, 10.0, 41);
    pair.flatness = probe
        .iter()
        .map(|&xi| (pair.calderon_integrand(xi) - 1.0).abs())
        .fold(0.0, f64::max);
    pair.flat = pair.flatness <= FLATNESS_TOL;
    Ok(pair)
}

/// `∫_{t_lo}^{t_hi} φ_t * ρ_t * 𝔣 dt/t` with `levels` Gauss–Legendre nodes in `ln t`.
pub fn calderon_reconstruct(
    f: &HValuedGridFunction1D,
    pair: &CalderonPair,
    t_range: (f64, f64),
    levels: usize,
) -> Result<HValuedGridFunction1D> {
    let (t_lo, t_hi) = t_range;
    if !(t_lo > 0.0) || !(t_hi > t_lo) {
        return Err(Error::NonpositiveT(t_lo));
    }
    let (lt, w) = gauss_legendre(levels, t_lo.ln(), t_hi.ln());
    let xis = abs_frequencies(&f.spec);
    let mult: Vec<Complex64> = xis
        .iter()
        .map(|&xi| {
            let v = KahanSum::sum_iter(lt.iter().zip(&w).map(|(l, w)| {
                let t = l.exp();
                w * pair.phi_hat(t * xi) * rho_hat(t, xi)
            }));
            Complex64::new(v, 0.0)
        })
        .collect();
    Ok(apply_channels(&f.spec, &f.spectra()?, &mult))
}

/// Dyadic scales `[2^{−αj}, 2^{−α(j−1)}]`, `j_min ≤ j ≤ j_max`, with
/// intervals of length `2^{−α(j+N)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicGrid {
    pub alpha: f64,
    pub n: u32,
    pub j_min: i32,
    pub j_max: i32,
}

impl DyadicGrid {
    /// Smallest scale range covering `[t_lo, t_hi]`.
    pub fn covering(alpha: f64, n: u32, t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(t_lo > 0.0) || !(t_hi > t_lo) {
            return Err(Error::ConfigInvalid(
                "dyadic grid needs α > 0 and 0 < t_lo < t_hi".into(),
            ));
        }
        let j_min = (1.0 - t_hi.log2() / alpha).floor() as i32;
        let j_max = (-t_lo.log2() / alpha).ceil() as i32;
        Ok(Self {
            alpha,
            n,
            j_min,
            j_max,
        })
    }

    pub fn c_alpha(&self) -> f64 {
        self.alpha * LN_2
    }

    /// `(t_a, t_b) = (2^{−αj}, 2^{−α(j−1)})`.
    pub fn scale(&self, j: i32) -> (f64, f64) {
        (
            2f64.powf(-self.alpha * j as f64),
            2f64.powf(-self.alpha * (j - 1) as f64),
        )
    }

    /// Interval length `2^{−α(j+N)}`.
    pub fn ell(&self, j: i32) -> f64 {
        2f64.powf(-self.alpha * (j + self.n as i32) as f64)
    }

    /// Anchor `x_I`: the midpoint of `I = (lℓ, (l+1)ℓ]`. Midpoint sampling
    /// makes the synthesis second order in `ℓ/t`; an endpoint anchor shifts
    /// every scale by `ℓ/2` and only decays like `2^{−αN}`.
    pub fn anchor(&self, j: i32, l: i64) -> f64 {
        (l as f64 + 0.5) * self.ell(j)
    }

    /// Interval indices `l` with `(lℓ, (l+1)ℓ]` meeting the box `[−L, L)`.
    pub fn interval_range(&self, j: i32, box_half: f64) -> (i64, i64) {
        let ell = self.ell(j);
        (
            (-box_half / ell).floor() as i64 - 1,
            (box_half / ell).ceil() as i64,
        )
    }

    pub fn scales(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }
}

/// Periodic 8-point Lagrange interpolation of grid samples at `x`.
fn lagrange8<T>(values: &[T], spec: &GridSpec, x: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let h = spec.h();
    let n = values.len() as i64;
    let u = (x + spec.box_half[0]) / h;
    let base = u.floor() as i64 - 3;
    let mut acc: Option<T> = None;
    for k in 0..8i64 {
        let mut w = 1.0;
        for m in 0..8i64 {
            if m != k {
                w *= (u - (base + m) as f64) / (k - m) as f64;
            }
        }
        let v = values[(base + k).rem_euclid(n) as usize] * w;
        acc = Some(match acc {
            Some(a) => a + v,
            None => v,
        });
    }
    acc.expect("eight terms")
}

/// Interpolates every channel of `f` at `x`.
fn interp_channels(spec: &GridSpec, chans: &[Vec<Complex64>], x: f64) -> Vec<Complex64> {
    chans.iter().map(|c| lagrange8(c, spec, x)).collect()
}

/// Fraction of `∫∫ |ρ_t * 𝔣|² dt/t dx` carried by `t ∈ [t_lo, t_hi]`.
pub fn gp_coverage(f: &HValuedGridFunction1D, t_lo: f64, t_hi: f64) -> Result<f64> {
    let xis = abs_frequencies(&f.spec);
    let mut inside = KahanSum::new();
    let mut total = KahanSum::new();
    for s in f.spectra()? {
        for (c, &xi) in s.coeffs.iter().zip(&xis) {
            let e = c.norm_sqr();
            if xi > 0.0 {
                total.add(e * 0.25);
                inside.add(e * gp_energy(t_lo * xi, t_hi * xi));
            }
        }
    }
    let total = total.value();
    Ok(if total > 0.0 {
        inside.value() / total
    } else {
        1.0
    })
}

/// One wavelet coefficient `𝔣_{j;I} = c_α ℓ(I) |ρ̃_j * 𝔣(x_I)|_ℌ`.
#[derive(Debug, Clone, Serialize)]
pub struct WaveletCoefficient {
    pub j: i32,
    pub l: i64,
    pub anchor: f64,
    pub value: f64,
}

/// Coefficients, first-order synthesis and its relative `L²` residual.
#[derive(Debug, Clone)]
pub struct WaveletDecomposition {
    pub coefficients: Vec<WaveletCoefficient>,
    pub synthesis: HValuedGridFunction1D,
    pub residual: f64,
    pub coverage: f64,
}

/// Gauss–Legendre nodes and weights in `ln t` over one scale.
fn scale_rule(t_a: f64, t_b: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let (l, w) = gauss_legendre(count, t_a.ln(), t_b.ln());
    (l.iter().map(|v| v.exp()).collect(), w)
}

/// `ρ̃_j * 𝔣` on the grid, one vector per channel.
fn rho_tilde_channels(
    spectra: &[Spectrum],
    xis: &[f64],
    t_a: f64,
    t_b: f64,
) -> Vec<Vec<Complex64>> {
    let mult: Vec<Complex64> = xis
        .iter()
        .map(|&xi| Complex64::new(rho_tilde_hat(t_a, t_b, xi), 0.0))
        .collect();
    spectra
        .iter()
        .map(|s| s.apply_values(&mult).values)
        .collect()
}

/// Wavelet coefficients of `𝔣` and the first-order synthesis `𝒯𝔣`.
pub fn wavelet_decompose(
    f: &HValuedGridFunction1D,
    pair: &CalderonPair,
    grid: &DyadicGrid,
) -> Result<WaveletDecomposition> {
    let (t_lo, _) = grid.scale(grid.j_max);
    let (_, t_hi) = grid.scale(grid.j_min);
    let coverage = gp_coverage(f, t_lo, t_hi)?;
    if coverage < COVERAGE_MIN {
        return Err(Error::RangeTooNarrow(coverage));
    }
    let spec = &f.spec;
    let half = spec.box_half[0];
    let xis = abs_frequencies(spec);
    let spectra = f.spectra()?;
    let c_alpha = grid.c_alpha();
    let coords = spec.axis_coords().remove(0);
    let mut coefficients = Vec::new();
    let mut synth = vec![Complex64::new(0.0, 0.0); f.values.len()];
    for j in grid.scales() {
        let (t_a, t_b) = grid.scale(j);
        let ell = grid.ell(j);
        let chans = rho_tilde_channels(&spectra, &xis, t_a, t_b);
        let (l_lo, l_hi) = grid.interval_range(j, half);
        let anchors: Vec<Vec<Complex64>> = (l_lo..=l_hi)
            .into_par_iter()
            .map(|l| interp_channels(spec, &chans, grid.anchor(j, l)))
            .collect();
        for (k, v) in anchors.iter().enumerate() {
            let l = l_lo + k as i64;
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            coefficients.push(WaveletCoefficient {
                j,
                l,
                anchor: grid.anchor(j, l),
                value: c_alpha * ell * norm,
            });
        }
        // Ψ_j(s) = c_α Φ_j(s) = Σ_q w_q Φ(s / t_q).
        let (tq, wq) = scale_rule(t_a, t_b, SCALE_NODES);
        let psi_j = |s: f64| -> f64 {
            if s.abs() >= t_b {
                return 0.0;
            }
            tq.iter()
                .zip(&wq)
                .map(|(t, w)| w * pair.antiderivative(s / t))
                .sum()
        };
        let d = f.d;
        let contrib: Vec<Vec<Complex64>> = coords
            .par_iter()
            .map(|&x| {
                let lo = (((x - t_b - ell) / ell).floor() as i64).max(l_lo);
                let hi = (((x + t_b) / ell).ceil() as i64).min(l_hi);
                let mut acc = vec![Complex64::new(0.0, 0.0); d];
                if lo > hi {
                    return acc;
                }
                let mut left = psi_j(x - lo as f64 * ell);
                for l in lo..=hi {
                    let right = psi_j(x - (l + 1) as f64 * ell);
                    let weight = left - right;
                    if weight != 0.0 {
                        for (a, v) in acc.iter_mut().zip(&anchors[(l - l_lo) as usize]) {
                            *a += v * weight;
                        }
                    }
                    left = right;
                }
                acc
            })
            .collect();
        for (i, c) in contrib.iter().enumerate() {
            for (ch, v) in c.iter().enumerate() {
                synth[i * d + ch] += v;
            }
        }
    }
    let synthesis = HValuedGridFunction1D::new(spec, f.d, synth)?;
    let fnorm = f.norm(Norm::L2);
    let residual = if fnorm > 0.0 {
        f.combine(1.0, &synthesis, -1.0)?.norm(Norm::L2) / fnorm
    } else {
        0.0
    };
    Ok(WaveletDecomposition {
        coefficients,
        synthesis,
        residual,
        coverage,
    })
}

/// `g_P(𝔣)(x) = (∫ |ρ_t * 𝔣(x)|²_ℌ dt/t)^{1/2}` over `[t_lo, t_hi]`.
pub fn g_p(f: &HValuedGridFunction1D, t_range: (f64, f64), levels: usize) -> Result<GridFunction> {
    let (lt, w) = gauss_legendre(levels, t_range.0.ln(), t_range.1.ln());
    let xis = abs_frequencies(&f.spec);
    let spectra = f.spectra()?;
    let mut acc = vec![KahanSum::new(); f.spec.len()];
    for (l, wt) in lt.iter().zip(&w) {
        let t = l.exp();
        let mult: Vec<Complex64> = xis
            .iter()
            .map(|&xi| Complex64::new(rho_hat(t, xi), 0.0))
            .collect();
        let g = apply_channels(&f.spec, &spectra, &mult);
        for (a, v) in acc.iter_mut().zip(g.hnorm()) {
            a.add(wt * v * v);
        }
    }
    Ok(real_line(
        &f.spec,
        acc.iter().map(|a| a.value().max(0.0).sqrt()).collect(),
    ))
}

/// `S_ψ(𝔣)(x) = (∫∫_{|x−x′|<t} |ψ_t * 𝔣(x′)|²_ℌ dx′ dt/t²)^{1/2}` with `ψ = φ`.
pub fn s_psi(
    f: &HValuedGridFunction1D,
    pair: &CalderonPair,
    t_range: (f64, f64),
    levels: usize,
) -> Result<GridFunction> {
    let spec = &f.spec;
    let h = spec.h();
    let len = spec.len();
    let (lt, w) = gauss_legendre(levels, t_range.0.ln(), t_range.1.ln());
    let xis = abs_frequencies(spec);
    let spectra = f.spectra()?;
    let mut acc = vec![KahanSum::new(); len];
    for (l, wt) in lt.iter().zip(&w) {
        let t = l.exp();
        let mult: Vec<Complex64> = xis
            .iter()
            .map(|&xi| Complex64::new(pair.phi_hat(t * xi), 0.0))
            .collect();
        let e: Vec<f64> = apply_channels(spec, &spectra, &mult)
            .hnorm()
            .iter()
            .map(|v| v * v)
            .collect();
        // Offsets |δ|h < t, clipped to one period.
        let reach = (((t / h).ceil() as i64) - 1).clamp(0, len as i64 / 2 - 1);
        let count = (2 * reach + 1) as usize;
        let mut prefix = vec![0.0; 2 * len + 1];
        let mut run = KahanSum::new();
        for i in 0..2 * len {
            run.add(e[i % len]);
            prefix[i + 1] = run.value();
        }
        for (i, a) in acc.iter_mut().enumerate() {
            let s = (i as i64 - reach).rem_euclid(len as i64) as usize;
            a.add(wt * h / t * (prefix[s + count] - prefix[s]));
        }
    }
    Ok(real_line(
        spec,
        acc.iter().map(|a| a.value().max(0.0).sqrt()).collect(),
    ))
}

fn real_line(spec: &GridSpec, v: Vec<f64>) -> GridFunction {
    GridFunction {
        spec: spec.clone(),
        values: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        domain: Domain::Space,
    }
}

/// Both sides of the Plancherel–Pólya inequality.
#[derive(Debug, Clone, Serialize)]
pub struct PlancherelPolyaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Samples of an interval `[c − a, c + a]` at resolution `≤ h` (at least 5).
fn interval_samples(center: f64, half_len: f64, h: f64) -> impl Iterator<Item = f64> {
    let count = ((2.0 * half_len / h).ceil() as usize + 1).max(5);
    (0..count).map(move |k| center - half_len + 2.0 * half_len * k as f64 / (count - 1) as f64)
}

/// Evaluates the cellwise sup (`ψ_t = φ_t`, enlarged cells `C₀I`) and the
/// cellwise inf (`ρ_t`) sides of the Plancherel–Pólya inequality.
pub fn plancherel_polya_check(
    f: &HValuedGridFunction1D,
    pair: &CalderonPair,
    grid: &DyadicGrid,
    c0: f64,
) -> Result<PlancherelPolyaReport> {
    if !(c0 > 0.0) {
        return Err(Error::ConfigInvalid("C₀ must be positive".into()));
    }
    let (t_lo, _) = grid.scale(grid.j_max);
    let (_, t_hi) = grid.scale(grid.j_min);
    let coverage = gp_coverage(f, t_lo, t_hi)?;
    if coverage < COVERAGE_MIN {
        return Err(Error::RangeTooNarrow(coverage));
    }
    let spec = &f.spec;
    let h = spec.h();
    let half = spec.box_half[0];
    let xis = abs_frequencies(spec);
    let spectra = f.spectra()?;
    let coords = spec.axis_coords().remove(0);
    let mut lhs_acc = vec![0.0; spec.len()];
    let mut rhs_acc = vec![0.0; spec.len()];
    for j in grid.scales() {
        let (t_a, t_b) = grid.scale(j);
        let ell = grid.ell(j);
        let (tq, wq) = scale_rule(t_a, t_b, 3);
        let psi_f: Vec<Vec<Vec<Complex64>>> = tq
            .iter()
            .map(|&t| {
                let m: Vec<Complex64> = xis
                    .iter()
                    .map(|&xi| Complex64::new(pair.phi_hat(t * xi), 0.0))
                    .collect();
                spectra.iter().map(|s| s.apply_values(&m).values).collect()
            })
            .collect();
        let rho_f: Vec<Vec<Vec<Complex64>>> = tq
            .iter()
            .map(|&t| {
                let m: Vec<Complex64> = xis
                    .iter()
                    .map(|&xi| Complex64::new(rho_hat(t, xi), 0.0))
                    .collect();
                spectra.iter().map(|s| s.apply_values(&m).values).collect()
            })
            .collect();
        let sq = |chans: &[Vec<Complex64>], u: f64| -> f64 {
            chans.iter().map(|c| lagrange8(c, spec, u).norm_sqr()).sum()
        };
        let (l_lo, l_hi) = grid.interval_range(j, half);
        let cells: Vec<(f64, f64)> = (l_lo..=l_hi)
            .into_par_iter()
            .map(|l| {
                let center = (l as f64 + 0.5) * ell;
                let lhs: f64 = tq
                    .iter()
                    .enumerate()
                    .map(|(q, _)| {
                        let sup = interval_samples(center, 0.5 * c0 * ell, h)
                            .map(|u| sq(&psi_f[q], u))
                            .fold(0.0, f64::max);
                        wq[q] * sup
                    })
                    .sum();
                let rhs = interval_samples(center, 0.5 * ell, h)
                    .map(|u| (0..tq.len()).map(|q| wq[q] * sq(&rho_f[q], u)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                (lhs, rhs)
            })
            .collect();
        for (i, &x) in coords.iter().enumerate() {
            let l = (x / ell).ceil() as i64 - 1;
            let (a, b) = cells[(l - l_lo) as usize];
            lhs_acc[i] += a;
            rhs_acc[i] += b;
        }
    }
    let lhs = h * KahanSum::sum_iter(lhs_acc.iter().map(|v| v.sqrt()));
    let rhs = h * KahanSum::sum_iter(rhs_acc.iter().map(|v| v.sqrt()));
    Ok(PlancherelPolyaReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Parameters of the molecule class `ℳ(β, γ, r, x₀; ℌ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestClassParams {
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
    pub x0: f64,
}

/// Cancellation threshold relative to `‖𝔣‖₁`.
const CANCELLATION_TOL: f64 = 1e-8;

/// Smallest `C` for the size and Hölder bounds of `ℳ(β, γ, r, x₀; ℌ)` on
/// grid pairs; `+∞` when `∫𝔣` does not vanish.
pub fn test_class_norm(f: &HValuedGridFunction1D, p: &TestClassParams) -> Result<f64> {
    if !(p.beta > 0.0 && p.beta < 1.0) || !(p.gamma > 0.0) || !(p.r > 0.0) {
        return Err(Error::ConfigInvalid(
            "molecule parameters need 0<β<1, γ>0, r>0".into(),
        ));
    }
    let l1 = f.norm(Norm::L1);
    let cancel = f
        .integral()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if cancel > CANCELLATION_TOL * l1 {
        return Ok(f64::INFINITY);
    }
    let spec = &f.spec;
    let h = spec.h();
    let coords = spec.axis_coords().remove(0);
    let d = f.d;
    let size = |x: f64| {
        let rho = p.r + (x - p.x0).abs();
        p.r.powf(p.gamma) / rho.powf(1.0 + p.gamma)
    };
    let c = (0..coords.len())
        .into_par_iter()
        .map(|i| {
            let x = coords[i];
            let vi = &f.values[i * d..(i + 1) * d];
            let norm_i = vi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let env = size(x);
            let mut best = norm_i / env;
            let rho = p.r + (x - p.x0).abs();
            let reach = ((0.5 * rho / h).floor() as usize).min(coords.len() - 1);
            for k in 1..=reach {
                for j in [i as i64 - k as i64, (i + k) as i64] {
                    if j < 0 || j >= coords.len() as i64 {
                        continue;
                    }
                    let vj = &f.values[j as usize * d..(j as usize + 1) * d];
                    let diff = vi
                        .iter()
                        .zip(vj)
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    let dist = k as f64 * h;
                    best = best.max(diff / ((dist / rho).powf(p.beta) * env));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(c)
}

/// The assembled kernel `k = Σ_j φ̃_j * ρ̃_j` sampled on `spec` (centered at 0).
pub fn remainder_kernel(
    pair: &CalderonPair,
    grid: &DyadicGrid,
    spec: &GridSpec,
) -> Result<GridFunction> {
    if spec.n() != 1 {
        return Err(Error::ShapeMismatch("kernel lives on a 1-D grid".into()));
    }
    let xis = abs_frequencies(spec);
    let c_alpha = grid.c_alpha();
    let mult: Vec<Complex64> = xis
        .iter()
        .map(|&xi| {
            let mut acc = KahanSum::new();
            for j in grid.scales() {
                let (t_a, t_b) = grid.scale(j);
                let (tq, wq) = scale_rule(t_a, t_b, SCALE_NODES);
                let phi_tilde: f64 = tq
                    .iter()
                    .zip(&wq)
                    .map(|(t, w)| w * pair.phi_hat(t * xi))
                    .sum::<f64>()
                    / c_alpha;
                acc.add(phi_tilde * rho_tilde_hat(t_a, t_b, xi));
            }
            Complex64::new(acc.value(), 0.0)
        })
        .collect();
    let mut delta = GridFunction::zeros(spec);
    delta.values[spec.sizes[0] / 2] = Complex64::new(1.0 / spec.h(), 0.0);
    Ok(Spectrum::of(&delta)?.apply_values(&mult))
}

/// Constants observed for the kernel conditions at a set of pairs.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    /// `max |x−u| |k(x−u)|`.
    pub size: f64,
    /// `max |k(s) − k(s′)| |s|² / |s − s′|` with `|s − s′| ≤ |s|/2`.
    pub smoothness: f64,
    /// `max |Δ_{δ₁}Δ_{δ₂} k(s)| |s|³ / (δ₁δ₂)`.
    pub mixed: f64,
    /// `|∫ k|`.
    pub cancellation: f64,
}

/// Evaluates the size, smoothness and mixed-difference constants of a
/// convolution kernel at the given `(x, u)` pairs.
pub fn kernel_spot_check(kernel: &GridFunction, pairs: &[(f64, f64)]) -> KernelCheck {
    let spec = &kernel.spec;
    let vals: Vec<f64> = kernel.values.iter().map(|z| z.re).collect();
    let k = |s: f64| lagrange8(&vals, spec, s);
    let mut size: f64 = 0.0;
    let mut smooth: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    for &(x, u) in pairs {
        let s = x - u;
        let a = s.abs();
        size = size.max(a * k(s).abs());
        // Displacements of x (d1) and u (d2) within |x − u|/2, in every
        // orientation; k depends on x − u only.
        for d1 in [0.25 * a, -0.25 * a] {
            smooth = smooth.max((k(s) - k(s + d1)).abs() * a * a / d1.abs());
            for d2 in [0.2 * a, -0.2 * a] {
                mixed = mixed.max(
                    (k(s) - k(s + d1) - k(s - d2) + k(s + d1 - d2)).abs() * a.powi(3)
                        / (d1 * d2).abs(),
                );
            }
        }
    }
    let cancellation = (spec.h() * KahanSum::sum_iter(vals.iter().copied())).abs();
    KernelCheck {
        size,
        smoothness: smooth,
        mixed,
        cancellation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_has_vanishing_moments_and_flat_integrand() {
        let pair = make_phi().unwrap();
        for m in pair.moments {
            assert!(m.abs() < MOMENT_TOL, "moment {m}");
        }
        assert!(pair.flat, "flatness {}", pair.flatness);
        assert!((pair.phi_hat(0.37) - pair.phi_hat_direct(0.37)).abs() < 1e-8);
        assert!(pair.antiderivative(0.999_999).abs() < 1e-12);
    }

    #[test]
    fn gp_energy_total_is_a_quarter() {
        assert!((gp_energy(0.0, f64::INFINITY) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dyadic_grid_covers_range() {
        let g = DyadicGrid::covering(0.25, 6, 0.01, 20.0).unwrap();
        assert!(g.scale(g.j_max).0 <= 0.01 && g.scale(g.j_min).1 >= 20.0);
        assert!((g.ell(0) - 2f64.powf(-1.5)).abs() < 1e-15);
    }
}
