//! Named experiments binding the library to the identities and
//! inequalities of the theory, with machine-readable verdicts.
//!
//! Every experiment records raw numbers as [`Check`]s (value, tolerance,
//! relation) and its verdict is the conjunction of those checks — nothing
//! else decides `pass`. Inequalities written with an implicit constant
//! (`A ≲ B`) use a two-phase protocol: the constant is fitted on a
//! calibration family A of seeded spectral bumps and must then hold, with
//! 10% slack, on a fresh family B ([`FittedConstant`]).
//!
//! All numbers are reproducible: families come from a SplitMix64 stream
//! seeded by the configuration, and every reduction in the library has a
//! fixed order, so verdicts are bit-identical across worker counts.

mod geometry;
mod hilbert;
mod inequalities;
mod transforms;

use crate::cone::{DualCone, PolyhedralCone};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::numerics::dot;
use crate::spectral::{make_bump_psi, make_bump_psi_with, SpectralTestFunction};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

/// Default seed of the test families.
pub const DEFAULT_SEED: u64 = 0x7475_6265_6861_726d;
/// Slack applied to constants fitted on the calibration family.
pub const FIT_SLACK: f64 = 1.1;
/// Members per test family.
pub const FAMILY_SIZE: usize = 5;

/// Experiment configuration shared by the whole registry.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub cone: PolyhedralCone,
    pub seed: u64,
    /// Per-axis sample count override for the experiment's main grid.
    pub grid_size: Option<usize>,
    /// Box half-width override.
    pub box_half: Option<f64>,
    /// Levels per lattice axis override.
    pub t_levels: Option<usize>,
    /// Aperture override.
    pub beta: Option<f64>,
    /// How often the test-function grids are doubled (twice the box, same
    /// spacing) after overrides are applied; measures truncation error.
    pub box_doublings: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cone: PolyhedralCone::cone_b(),
            seed: DEFAULT_SEED,
            grid_size: None,
            box_half: None,
            t_levels: None,
            beta: None,
            box_doublings: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn with_cone(cone: PolyhedralCone) -> Self {
        Self {
            cone,
            ..Self::default()
        }
    }

    pub(crate) fn grid_size_or(&self, default: usize) -> usize {
        self.grid_size.unwrap_or(default)
    }

    pub(crate) fn box_half_or(&self, default: f64) -> f64 {
        self.box_half.unwrap_or(default)
    }

    /// A cube grid of `size` samples on `[−half, half)ⁿ`, after overrides
    /// and box doublings.
    pub(crate) fn grid(&self, n: usize, size: usize, half: f64) -> Result<GridSpec> {
        let mut spec = GridSpec::cube(n, self.grid_size_or(size), self.box_half_or(half))?;
        for _ in 0..self.box_doublings {
            spec = spec.doubled();
        }
        Ok(spec)
    }

    pub(crate) fn t_levels_or(&self, default: usize) -> usize {
        self.t_levels.unwrap_or(default)
    }

    pub(crate) fn beta_or(&self, default: f64) -> f64 {
        self.beta.unwrap_or(default)
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value < tolerance`.
    Below,
    /// `value ≤ tolerance`.
    AtMost,
    /// `value ≥ tolerance`.
    AtLeast,
    /// `|value − target| ≤ tolerance`, with `target` stored in the check.
    Within,
}

/// One recorded quantity with its acceptance rule.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn below(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(
            quantity,
            value,
            tolerance,
            Relation::Below,
            None,
            value < tolerance,
        )
    }

    pub fn at_most(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(
            quantity,
            value,
            tolerance,
            Relation::AtMost,
            None,
            value <= tolerance,
        )
    }

    pub fn at_least(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(
            quantity,
            value,
            tolerance,
            Relation::AtLeast,
            None,
            value >= tolerance,
        )
    }

    pub fn within(quantity: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(
            quantity,
            value,
            tolerance,
            Relation::Within,
            Some(target),
            (value - target).abs() <= tolerance,
        )
    }

    fn new(
        quantity: impl Into<String>,
        value: f64,
        tolerance: f64,
        relation: Relation,
        target: Option<f64>,
        pass: bool,
    ) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            tolerance,
            relation,
            target,
            pass: pass && value.is_finite(),
        }
    }
}

/// Result of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: String,
    pub target: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Informational numbers (not part of the pass decision).
    pub measured: Vec<(String, f64)>,
    pub fitted_constants: Vec<FittedConstant>,
    pub seed: u64,
    pub runtime_s: f64,
}

impl Verdict {
    /// All numbers that must be bit-identical across worker counts.
    pub fn numbers(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.checks.iter().map(|c| c.value).collect();
        v.extend(self.measured.iter().map(|(_, x)| *x));
        for f in &self.fitted_constants {
            v.extend([f.calibrated, f.held_out]);
        }
        v
    }

    pub fn check(&self, quantity: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.quantity == quantity)
    }

    /// One JSON line.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Rows `experiment,quantity,value,tolerance,pass`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{},{},{:e},{:e},{}",
                    self.id, c.quantity, c.value, c.tolerance, c.pass
                )
            })
            .collect()
    }
}

/// Collects checks while an experiment runs.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    checks: Vec<Check>,
    measured: Vec<(String, f64)>,
    fitted: Vec<FittedConstant>,
}

impl Recorder {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measured.push((name.into(), value));
    }

    pub fn fitted(&mut self, f: FittedConstant) {
        self.checks.push(f.check());
        self.fitted.push(f);
    }
}

/// Constant of `A ≤ C·B` fitted on family A and verified on family B.
#[derive(Debug, Clone, Serialize)]
pub struct FittedConstant {
    pub name: String,
    /// Largest ratio over the calibration family.
    pub calibrated: f64,
    /// Largest ratio over the held-out family.
    pub held_out: f64,
    pub slack: f64,
    pub pass: bool,
}

impl FittedConstant {
    /// Fits from the ratios observed on each family.
    pub fn fit(name: impl Into<String>, family_a: &[f64], family_b: &[f64]) -> Self {
        let calibrated = family_a.iter().copied().fold(0.0, f64::max);
        let held_out = family_b.iter().copied().fold(0.0, f64::max);
        let finite = family_a.iter().chain(family_b).all(|v| v.is_finite());
        Self {
            name: name.into(),
            calibrated,
            held_out,
            slack: FIT_SLACK,
            pass: finite && held_out <= FIT_SLACK * calibrated,
        }
    }

    fn check(&self) -> Check {
        Check::at_most(
            format!("{}_held_out", self.name),
            self.held_out,
            self.slack * self.calibrated,
        )
    }
}

/// Which seeded family a member belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Calibration,
    HeldOut,
}

/// Parameters of one spectral bump `ψ = exp(−1/(1 − |ξ−ξ₀|²/r²))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpParams {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpParams {
    pub fn build(&self, dual: &DualCone) -> Result<SpectralTestFunction> {
        make_bump_psi(dual, &self.center, self.radius, 1.0)
    }

    /// As [`BumpParams::build`] with an explicit quadrature order per axis.
    pub fn build_with(
        &self,
        dual: &DualCone,
        nodes_per_axis: usize,
    ) -> Result<SpectralTestFunction> {
        make_bump_psi_with(dual, &self.center, self.radius, 1.0, nodes_per_axis)
    }
}

/// Seeded random bumps inside the dual cone.
///
/// The center direction is a random positive combination of the dual rays
/// (weights in `[0.75, 1]`), its length `scale·U[0.92, 1.08]`; the radius is
/// `U[0.55, 0.7]` times the smallest constraint value `e_j·ξ₀`, so the ball
/// stays strictly inside the dual cone.
pub fn bump_family(
    cone: &PolyhedralCone,
    seed: u64,
    family: Family,
    count: usize,
    scale: f64,
) -> Result<Vec<BumpParams>> {
    let dual = cone.dual()?;
    let stream = match family {
        Family::Calibration => 0xA,
        Family::HeldOut => 0xB,
    };
    let mut rng = SplitMix64::seed_from_u64(seed ^ (stream << 56));
    (0..count)
        .map(|_| {
            let mut dir = vec![0.0; cone.n];
            for ray in &dual.rays {
                let a: f64 = rng.gen_range(0.75..=1.0);
                for (d, r) in dir.iter_mut().zip(ray) {
                    *d += a * r;
                }
            }
            let len = dot(&dir, &dir).sqrt();
            let magnitude = scale * rng.gen_range(0.92..=1.08);
            let center: Vec<f64> = dir.iter().map(|d| d / len * magnitude).collect();
            let min_c = cone
                .generators
                .iter()
                .map(|e| dot(e, &center))
                .fold(f64::INFINITY, f64::min);
            let radius = rng.gen_range(0.55..=0.7) * min_c;
            if !(radius > 0.0) {
                return Err(Error::ConfigInvalid(
                    "dual cone too thin for the bump family".into(),
                ));
            }
            Ok(BumpParams { center, radius })
        })
        .collect()
}

/// Deterministic bump along the mean dual-ray direction: length
/// `magnitude`, radius `0.75·min_j e_j·ξ₀` (CONE_B and the axis cone with
/// magnitude `2√2` give center `(2, 2)`, radius 1.5).
pub fn default_bump(cone: &PolyhedralCone, magnitude: f64) -> Result<BumpParams> {
    let dual = cone.dual()?;
    let mut dir = vec![0.0; cone.n];
    for ray in &dual.rays {
        for (d, r) in dir.iter_mut().zip(ray) {
            *d += r;
        }
    }
    let len = dot(&dir, &dir).sqrt();
    let center: Vec<f64> = dir.iter().map(|d| d / len * magnitude).collect();
    let min_c = cone
        .generators
        .iter()
        .map(|e| dot(e, &center))
        .fold(f64::INFINITY, f64::min);
    if !(min_c > 0.0) {
        return Err(Error::ConfigInvalid(
            "dual cone too thin for the default bump".into(),
        ));
    }
    Ok(BumpParams {
        center,
        radius: 0.75 * min_c,
    })
}

type Runner = fn(&ExperimentConfig, &mut Recorder) -> Result<()>;

/// A registered experiment and the statement it targets.
pub struct Experiment {
    pub id: &'static str,
    pub target: &'static str,
    run: Runner,
}

/// The registry, one entry per verified statement.
pub static REGISTRY: &[Experiment] = &[
    Experiment {
        id: "exp_reproducing",
        target: "reproducing formula F(x+iπ(t)) = F^b*P_t(x); hidden-parameter consistency",
        run: transforms::reproducing,
    },
    Experiment {
        id: "exp_green",
        target: "Green-type formula ∫₀^∞∫ Δ_μU t_μ dt_μ dx = ∫U(x,0)dx for U = |f_ε *_μ P_{t_μ}|²",
        run: transforms::green,
    },
    Experiment { id: "exp_harmonicity", target: "harmonicity Δ_μ[f *_μ P_{t_μ}] = 0", run: transforms::harmonicity },
    Experiment {
        id: "exp_rect_inclusion",
        target: "twisted-rectangle inclusion R_𝔩(x,t) ⊂ R(x,t) ⊂ R_𝔩(x,γ̃₀⁻¹t); exact zonotope volume; 𝒜",
        run: geometry::rect_inclusion,
    },
    Experiment { id: "exp_maximal_equiv", target: "twisted vs iterated maximal functions M_t(f) ≈ M_it(f)", run: inequalities::maximal_equiv },
    Experiment {
        id: "exp_decay",
        target: "decay |f*P_t| ≲ ‖f‖₁/|R(0,t)| and Hardy boundary growth |F(x+iπ(r))| ≲ ‖F‖_{H²}/|R(0,r)|^{1/2}",
        run: transforms::decay,
    },
    Experiment {
        id: "exp_subharmonic",
        target: "subharmonic majorization |F(x+iπ(t+ε))|^q ≤ (|f_ε|^q * P_t)(x)",
        run: transforms::subharmonic,
    },
    Experiment { id: "exp_goodlambda", target: "good-λ inequality between S(f) and N^β(f)", run: inequalities::goodlambda },
    Experiment { id: "exp_S_le_N", target: "‖S(f)‖₁ ≲ ‖N^β(f)‖₁", run: inequalities::s_le_n },
    Experiment { id: "exp_g_le_S", target: "pointwise g(f) ≲ S(f) and 𝔾(F) ≲ 𝕊(F)", run: inequalities::g_le_s },
    Experiment { id: "exp_L1_le_g", target: "‖f‖₁ ≲ ‖g(f)‖₁ and sup_t ‖f*P_t‖₁ ≲ ‖g(f)‖₁", run: inequalities::l1_le_g },
    Experiment {
        id: "exp_norm_chain",
        target: "equivalence of ‖F‖_{H¹}, ‖ℕ^β(F)‖₁, ‖𝕊(F)‖₁, ‖𝔾(F)‖₁",
        run: inequalities::norm_chain,
    },
    Experiment {
        id: "exp_wavelet",
        target: "Calderón reproducing formula, discrete wavelet contraction, Plancherel–Pólya, kernel conditions",
        run: hilbert::wavelet,
    },
];

/// Looks up a registry entry.
pub fn find(id: &str) -> Result<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::ConfigInvalid(format!("unknown experiment id '{id}'")))
}

/// Runs one experiment.
pub fn run(id: &str, cfg: &ExperimentConfig) -> Result<Verdict> {
    let exp = find(id)?;
    let start = Instant::now();
    let mut rec = Recorder::default();
    (exp.run)(cfg, &mut rec)?;
    let pass = !rec.checks.is_empty() && rec.checks.iter().all(|c| c.pass);
    Ok(Verdict {
        id: exp.id.to_string(),
        target: exp.target.to_string(),
        pass,
        checks: rec.checks,
        measured: rec.measured,
        fitted_constants: rec.fitted,
        seed: cfg.seed,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs one experiment on a dedicated pool of `threads` workers.
pub fn run_with_threads(id: &str, cfg: &ExperimentConfig, threads: usize) -> Result<Verdict> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    pool.install(|| run(id, cfg))
}

/// Header of the aggregate CSV.
pub const CSV_HEADER: &str = "experiment,quantity,value,tolerance,pass";

/// Writes verdicts as an aggregate CSV.
pub fn write_csv<W: Write>(w: &mut W, verdicts: &[Verdict]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for v in verdicts {
        for row in v.csv_rows() {
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}

/// Parses verdict JSON lines (as written by [`Verdict::to_json_line`]) into CSV rows.
pub fn csv_from_json_lines(text: &str) -> Result<Vec<String>> {
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line)?;
        let id = v["id"]
            .as_str()
            .ok_or_else(|| Error::Format(format!("line {}: missing id", k + 1)))?;
        let checks = v["checks"]
            .as_array()
            .ok_or_else(|| Error::Format(format!("line {}: missing checks", k + 1)))?;
        for c in checks {
            // Non-finite values serialize as JSON null.
            let num = |key: &str| -> Result<f64> {
                match &c[key] {
                    serde_json::Value::Null => Ok(f64::NAN),
                    v => v.as_f64().ok_or_else(|| {
                        Error::Format(format!(
                            "line {}: check field '{key}' is not a number",
                            k + 1
                        ))
                    }),
                }
            };
            let quantity = c["quantity"]
                .as_str()
                .ok_or_else(|| Error::Format(format!("line {}: check without quantity", k + 1)))?;
            let pass = c["pass"]
                .as_bool()
                .ok_or_else(|| Error::Format(format!("line {}: check without pass", k + 1)))?;
            rows.push(format!(
                "{id},{quantity},{:e},{:e},{pass}",
                num("value")?,
                num("tolerance")?
            ));
        }
    }
    Ok(rows)
}
