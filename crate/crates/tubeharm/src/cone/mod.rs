//! Polyhedral cone geometry.
//!
//! A cone Ω ⊂ ℝⁿ is the interior of the conic hull of `m ≥ n` unit
//! generators `e_1, …, e_m`, any `n` of which are linearly independent.
//! The multi-parameter theory lives on the lifting space `(ℝ₊)^m` and is
//! pushed down to Ω by the projection `π(t) = Σ t_μ e_μ`. Its basic
//! geometric objects are the *twisted rectangles*
//!
//! ```text
//! R(x, t) = { x + Σ λ_μ e_μ : |λ_μ| < t_μ },
//! ```
//!
//! which are zonotopes (Minkowski sums of segments), and the
//! parallelohedra `R_𝔩(x, t)` spanned by an `n`-subset 𝔩 of generators.
//!
//! Membership in `R(x, t)` is decided through the zonotope *gauge*
//! `g(d) = min { max_μ |λ_μ|/t_μ : Σ λ_μ e_μ = d }`, which is a small
//! linear program solved by [`lp`] (Bland-rule simplex). A second,
//! closed-form route evaluates the same gauge from the zonotope's facet
//! normals ([`ZonotopeFacets`]); the bulk region stencils in
//! [`crate::operators`] use that route, and the tests cross-validate both.

mod lp;

use crate::error::{Error, Result};
use crate::numerics::{cross_product, det_columns, dot, norm, rank, solve_columns, subsets};
use serde::{Deserialize, Serialize};

/// Smallest admissible `|det|` of an `n`-subset of generators.
pub const RANK_TOL: f64 = 1e-9;
/// Generators within this distance of unit length are renormalized.
pub const UNIT_ACCEPT_TOL: f64 = 1e-6;
/// Relative margin that turns the open twisted rectangle into a closed test.
pub const MEMBERSHIP_MARGIN: f64 = 1e-12;
/// Pivoting / feasibility tolerance of the membership LP.
pub const LP_TOL: f64 = 1e-10;
/// Tolerance for deduplicating and validating dual rays.
pub const RAY_TOL: f64 = 1e-9;

/// Validated polyhedral cone with unit generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralCone {
    pub n: usize,
    pub m: usize,
    pub generators: Vec<Vec<f64>>,
}

/// Constants derived from the generator configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ConeConstants {
    /// `𝒜 = Σ_𝔩 Σ_{μ∉𝔩} Σ_j |A^𝔩_{μj}|`.
    pub a_const: f64,
    /// `γ̃₀ = (1+𝒜)⁻¹`.
    pub gamma_tilde0: f64,
    /// `γ₀ = (1+𝒜)⁻²`.
    pub gamma0: f64,
    /// `(𝔩, μ, [A^𝔩_{μ1}, …, A^𝔩_{μn}])` for every subset and outside index.
    pub subset_coeffs: Vec<(Vec<usize>, usize, Vec<f64>)>,
}

/// The dual cone `Ω* = { ξ : ξ·e_j ≥ 0 ∀j }` with its extreme rays.
#[derive(Debug, Clone, Serialize)]
pub struct DualCone {
    pub n: usize,
    /// Inward normals of the halfspaces (the generators).
    pub halfspaces: Vec<Vec<f64>>,
    /// Unit extreme rays in enumeration order.
    pub rays: Vec<Vec<f64>>,
}

/// A twisted-rectangle membership query `x′ ∈ R(x, β·t)`.
#[derive(Debug, Clone)]
pub struct TwistedRectangleQuery {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub beta: f64,
}

/// Facet normals of the zonotopes `R(0, r)` generated by a cone.
///
/// For every `(n−1)`-subset of generators the unit normal `ν` gives the
/// support value `Σ_μ r_μ |ν·e_μ|`; the gauge of `d` is the largest ratio
/// `|ν·d| / Σ_μ r_μ |ν·e_μ|`.
#[derive(Debug, Clone)]
pub struct ZonotopeFacets {
    pub normals: Vec<Vec<f64>>,
    /// `|ν_k · e_μ|` for facet `k` and generator `μ`.
    pub coupling: Vec<Vec<f64>>,
}

impl ZonotopeFacets {
    /// Gauge of the displacement `d` with respect to `R(0, r)`.
    pub fn gauge(&self, d: &[f64], r: &[f64]) -> f64 {
        let mut g: f64 = 0.0;
        for (nu, c) in self.normals.iter().zip(&self.coupling) {
            let support: f64 = c.iter().zip(r).map(|(ci, ri)| ci * ri).sum();
            g = g.max(dot(nu, d).abs() / support);
        }
        g
    }

    /// Support values `h_k(r) = Σ_μ r_μ |ν_k·e_μ|`.
    pub fn supports(&self, r: &[f64]) -> Vec<f64> {
        self.coupling
            .iter()
            .map(|c| c.iter().zip(r).map(|(ci, ri)| ci * ri).sum())
            .collect()
    }
}

/// Inside-test for a gauge value (open set, closed relaxation with margin).
#[inline]
pub fn gauge_inside(g: f64) -> bool {
    g <= 1.0 - MEMBERSHIP_MARGIN
}

impl PolyhedralCone {
    /// Validates generators (rows) and normalizes near-unit vectors.
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let m = generators.len();
        if m == 0 {
            return Err(Error::BadShape("no generators".into()));
        }
        let n = generators[0].len();
        if n == 0 {
            return Err(Error::BadShape("zero-dimensional generators".into()));
        }
        if generators.iter().any(|g| g.len() != n) {
            return Err(Error::BadShape("ragged generator matrix".into()));
        }
        if m < n {
            return Err(Error::BadShape(format!("m = {m} < n = {n}")));
        }
        if generators.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BadShape("non-finite generator entry".into()));
        }
        let mut gens = generators;
        for (index, g) in gens.iter_mut().enumerate() {
            let nrm = norm(g);
            if (nrm - 1.0).abs() > UNIT_ACCEPT_TOL {
                return Err(Error::NotUnit { index, norm: nrm });
            }
            for v in g.iter_mut() {
                *v /= nrm;
            }
        }
        for subset in subsets(m, n) {
            let cols: Vec<&[f64]> = subset.iter().map(|&i| gens[i].as_slice()).collect();
            let det = det_columns(&cols);
            if det.abs() <= RANK_TOL {
                return Err(Error::DegenerateSubset { subset, det });
            }
        }
        Ok(Self {
            n,
            m,
            generators: gens,
        })
    }

    /// Coordinate-axis cone in ℝⁿ (the positive orthant).
    pub fn axis(n: usize) -> Self {
        let gens = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(gens).expect("axis generators are valid")
    }

    /// The planar three-generator cone `(1,0), (0,1), (√2/2, √2/2)`.
    pub fn cone_b() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![s, s]]).expect("valid")
    }

    /// Parses the JSON description `{"n", "m", "generators"}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            m: usize,
            generators: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        if raw.generators.len() != raw.m || raw.generators.iter().any(|g| g.len() != raw.n) {
            return Err(Error::BadShape(
                "generator matrix disagrees with n/m".into(),
            ));
        }
        Self::new(raw.generators)
    }

    /// Serializes to the JSON description.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("cone serializes")
    }

    fn check_len(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.m {
            return Err(Error::LengthMismatch {
                expected: self.m,
                got: t.len(),
            });
        }
        Ok(())
    }

    /// Lifting projection `π(t) = Σ t_μ e_μ`.
    pub fn project(&self, t: &[f64]) -> Result<Vec<f64>> {
        self.check_len(t)?;
        let mut y = vec![0.0; self.n];
        for (tm, e) in t.iter().zip(&self.generators) {
            for (yi, ei) in y.iter_mut().zip(e) {
                *yi += tm * ei;
            }
        }
        Ok(y)
    }

    /// `e_μ · ξ` for every generator.
    pub fn couplings(&self, xi: &[f64]) -> Vec<f64> {
        self.generators.iter().map(|e| dot(e, xi)).collect()
    }

    /// Computes 𝒜, γ̃₀, γ₀ and the per-subset coefficients.
    pub fn constants(&self) -> ConeConstants {
        let mut a_const = 0.0;
        let mut subset_coeffs = Vec::new();
        for subset in subsets(self.m, self.n) {
            let cols: Vec<&[f64]> = subset
                .iter()
                .map(|&i| self.generators[i].as_slice())
                .collect();
            for mu in (0..self.m).filter(|mu| !subset.contains(mu)) {
                let coeffs =
                    solve_columns(&cols, &self.generators[mu]).expect("subsets are nonsingular");
                a_const += coeffs.iter().map(|c| c.abs()).sum::<f64>();
                subset_coeffs.push((subset.clone(), mu, coeffs));
            }
        }
        let gamma_tilde0 = 1.0 / (1.0 + a_const);
        ConeConstants {
            a_const,
            gamma_tilde0,
            gamma0: gamma_tilde0 * gamma_tilde0,
            subset_coeffs,
        }
    }

    /// Enumerates the extreme rays of the dual cone (n ≤ 4).
    pub fn dual(&self) -> Result<DualCone> {
        let n = self.n;
        if n > 4 {
            return Err(Error::UnsupportedDimension(n));
        }
        let mut rays: Vec<Vec<f64>> = Vec::new();
        for subset in subsets(self.m, n - 1) {
            let vecs: Vec<&[f64]> = subset
                .iter()
                .map(|&i| self.generators[i].as_slice())
                .collect();
            let c = cross_product(&vecs, n);
            let nrm = norm(&c);
            if nrm <= RAY_TOL {
                continue;
            }
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = c.iter().map(|v| sign * v / nrm).collect();
                let admissible = self.generators.iter().all(|e| dot(e, &cand) >= -RAY_TOL);
                let duplicate = rays
                    .iter()
                    .any(|r| r.iter().zip(&cand).all(|(a, b)| (a - b).abs() <= RAY_TOL));
                if admissible && !duplicate {
                    rays.push(cand);
                }
            }
        }
        Ok(DualCone {
            n,
            halfspaces: self.generators.clone(),
            rays,
        })
    }

    /// Indices of the `n` largest radii (ties: smallest indices), sorted.
    pub fn largest_subset(&self, r: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.m).collect();
        idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
        let mut sel: Vec<usize> = idx[..self.n].to_vec();
        sel.sort_unstable();
        sel
    }

    /// Zonotope gauge of `d` for radii `r`, computed by the simplex solver.
    pub fn rect_gauge(&self, d: &[f64], r: &[f64]) -> Result<f64> {
        let (n, m) = (self.n, self.m);
        if d.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: d.len(),
            });
        }
        self.check_len(r)?;
        // Variables: λ⁺ (m), λ⁻ (m), s, slack σ (m).
        let q = 3 * m + 1;
        let s_col = 2 * m;
        let mut a = Vec::with_capacity(n + m);
        let mut b = Vec::with_capacity(n + m);
        for i in 0..n {
            let mut row = vec![0.0; q];
            for mu in 0..m {
                row[mu] = self.generators[mu][i];
                row[m + mu] = -self.generators[mu][i];
            }
            a.push(row);
            b.push(d[i]);
        }
        for mu in 0..m {
            let mut row = vec![0.0; q];
            row[mu] = 1.0;
            row[m + mu] = 1.0;
            row[s_col] = -r[mu];
            row[s_col + 1 + mu] = 1.0;
            a.push(row);
            b.push(0.0);
        }
        let mut c = vec![0.0; q];
        c[s_col] = 1.0;
        let cap = 10 * m * n;
        match lp::minimize(&a, &b, &c, LP_TOL, cap)? {
            lp::LpStatus::Optimal { x } => Ok(x[s_col].max(0.0)),
            lp::LpStatus::Infeasible { residual } => Err(Error::Format(format!(
                "gauge program infeasible (residual {residual:e})"
            ))),
        }
    }

    /// `x′ ∈ R(x, β·t)` decided by the linear program.
    pub fn rect_contains(&self, q: &TwistedRectangleQuery, xp: &[f64]) -> Result<bool> {
        self.check_len(&q.t)?;
        if q.t.iter().any(|&v| !(v > 0.0)) || !(q.beta > 0.0) {
            return Err(Error::NonpositiveT(
                q.t.iter().copied().fold(q.beta, f64::min),
            ));
        }
        if xp.len() != self.n || q.x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: xp.len().min(q.x.len()),
            });
        }
        let d: Vec<f64> = xp.iter().zip(&q.x).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = q.t.iter().map(|v| q.beta * v).collect();
        Ok(gauge_inside(self.rect_gauge(&d, &r)?))
    }

    /// `x′ ∈ R_𝔩(x, r)` by an exact `n×n` solve.
    pub fn parallelohedron_contains(
        &self,
        subset: &[usize],
        x: &[f64],
        r: &[f64],
        xp: &[f64],
    ) -> Result<bool> {
        self.check_len(r)?;
        if subset.len() != self.n || subset.iter().any(|&i| i >= self.m) {
            return Err(Error::SingularSubset(subset.to_vec()));
        }
        let cols: Vec<&[f64]> = subset
            .iter()
            .map(|&i| self.generators[i].as_slice())
            .collect();
        let d: Vec<f64> = xp.iter().zip(x).map(|(a, b)| a - b).collect();
        let lam = solve_columns(&cols, &d).ok_or_else(|| Error::SingularSubset(subset.to_vec()))?;
        Ok(lam
            .iter()
            .zip(subset)
            .all(|(l, &i)| gauge_inside(l.abs() / r[i])))
    }

    /// Exact volume of `R(0, t)` (Shephard's zonotope formula).
    pub fn zonotope_volume(&self, t: &[f64]) -> f64 {
        let mut vol = 0.0;
        for subset in subsets(self.m, self.n) {
            let cols: Vec<&[f64]> = subset
                .iter()
                .map(|&i| self.generators[i].as_slice())
                .collect();
            let prod: f64 = subset.iter().map(|&i| t[i]).product();
            vol += prod * det_columns(&cols).abs();
        }
        vol * 2f64.powi(self.n as i32)
    }

    /// Volume of the parallelohedron `R_𝔩(0, t)`.
    pub fn parallelohedron_volume(&self, subset: &[usize], t: &[f64]) -> f64 {
        let cols: Vec<&[f64]> = subset
            .iter()
            .map(|&i| self.generators[i].as_slice())
            .collect();
        let prod: f64 = subset.iter().map(|&i| t[i]).product();
        2f64.powi(self.n as i32) * prod * det_columns(&cols).abs()
    }

    /// `(x′, t) ∈ Γ_β(x)`, i.e. `x′ ∈ R(x, β·t)`.
    pub fn nontangential_contains(
        &self,
        x: &[f64],
        beta: f64,
        xp: &[f64],
        t: &[f64],
    ) -> Result<bool> {
        self.rect_contains(
            &TwistedRectangleQuery {
                x: x.to_vec(),
                t: t.to_vec(),
                beta,
            },
            xp,
        )
    }

    /// Facet normals of the generated zonotopes.
    pub fn zonotope_facets(&self) -> ZonotopeFacets {
        let n = self.n;
        let mut normals = Vec::new();
        for subset in subsets(self.m, n - 1) {
            let vecs: Vec<&[f64]> = subset
                .iter()
                .map(|&i| self.generators[i].as_slice())
                .collect();
            let c = cross_product(&vecs, n);
            let nrm = norm(&c);
            if nrm > RAY_TOL {
                normals.push(c.iter().map(|v| v / nrm).collect::<Vec<f64>>());
            }
        }
        let coupling = normals
            .iter()
            .map(|nu| self.generators.iter().map(|e| dot(nu, e).abs()).collect())
            .collect();
        ZonotopeFacets { normals, coupling }
    }
}

impl DualCone {
    /// Triangulates the dual cone into simplicial cones.
    ///
    /// Rays are placed in lexicographic order; each face is coned from its
    /// lexicographically first ray over the facets not containing it
    /// (a pulling triangulation). Returns ray-index tuples.
    pub fn simplicial_fan(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.rays.len()).collect();
        order.sort_by(|&a, &b| {
            self.rays[a]
                .iter()
                .zip(&self.rays[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        self.pull(order, self.n)
    }

    fn pull(&self, face: Vec<usize>, dim: usize) -> Vec<Vec<usize>> {
        if face.len() == dim {
            return vec![face];
        }
        let apex = face[0];
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut out = Vec::new();
        for h in &self.halfspaces {
            let sub: Vec<usize> = face
                .iter()
                .copied()
                .filter(|&r| dot(&self.rays[r], h).abs() <= RAY_TOL)
                .collect();
            if sub.len() == face.len() || sub.contains(&apex) || seen.contains(&sub) {
                continue;
            }
            let vecs: Vec<&[f64]> = sub.iter().map(|&r| self.rays[r].as_slice()).collect();
            if rank(&vecs, 1e-9) != dim - 1 {
                continue;
            }
            seen.push(sub.clone());
            for mut simplex in self.pull(sub, dim - 1) {
                simplex.insert(0, apex);
                out.push(simplex);
            }
        }
        out
    }

    /// `true` if `ξ` satisfies every halfspace constraint with margin.
    pub fn contains(&self, xi: &[f64], margin: f64) -> bool {
        self.halfspaces.iter().all(|e| dot(e, xi) >= margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_of_axis_cone() {
        let c = PolyhedralCone::axis(2).constants();
        assert_eq!(c.a_const, 0.0);
        assert_eq!(c.gamma_tilde0, 1.0);
        assert_eq!(c.gamma0, 1.0);
    }

    #[test]
    fn gauge_routes_agree_on_cone_b() {
        let cone = PolyhedralCone::cone_b();
        let facets = cone.zonotope_facets();
        let r = [0.7, 1.3, 0.4];
        for k in 0..200 {
            let a = k as f64 * 0.37;
            let d = [2.0 * a.sin(), 1.7 * (1.3 * a).cos()];
            let lp = cone.rect_gauge(&d, &r).unwrap();
            let fc = facets.gauge(&d, &r);
            assert!((lp - fc).abs() < 1e-12 * (1.0 + fc), "{lp} vs {fc}");
        }
    }

    #[test]
    fn fan_of_three_dimensional_cone_covers_volume() {
        // Four generators around the z-axis; dual cone has four rays.
        let g = |x: f64, y: f64| {
            let v = [x, y, 1.0];
            let s = norm(&v);
            v.iter().map(|c| c / s).collect::<Vec<f64>>()
        };
        let cone = PolyhedralCone::new(vec![g(0.3, 0.0), g(0.0, 0.3), g(-0.3, 0.0), g(0.0, -0.3)])
            .unwrap();
        let dual = cone.dual().unwrap();
        assert_eq!(dual.rays.len(), 4);
        let fan = dual.simplicial_fan();
        assert_eq!(fan.len(), 2);
    }
}
