//! Admissible parameter box and bisection in the reference density for the
//! stress-free boundary condition `g'(y(1)) = 0`.
//!
//! For fixed `μ` the fixed point `ζ^{(ρ̄, μ)}` exists for every `ρ̄` in
//! `[ρ̄₋(μ), ρ̄₊]`, and `g'(y(1))` is negative at the lower end and positive at
//! the upper end. Monotonicity in between is not known, so bisection returns
//! one root of the mismatch, not necessarily the only one.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::constitutive::{source_bound_k, source_epsilon, ValidatedModel};
use crate::error::{Result, SolverError};
use crate::fixed_point::{picard_solve, Parameters, PicardDiagnostics, DEFAULT_MAX_ITER, DEFAULT_PICARD_TOL};
use crate::radial_ops::{reconstruct_geometry, y_dev_at_boundary, GeometryProfile, RadialGrid, ZetaProfile};
use crate::verify::{residual_report, ResidualReport};

/// `μ₀` is this fraction of the largest value allowed by the box conditions.
pub const MU0_SAFETY: f64 = 0.99;
/// Lower bracket floor, relative to `ρ̄₊`, used when `ρ̄₋(μ)` is zero or tiny.
pub const RHO_FLOOR_FRACTION: f64 = 1e-6;
pub const DEFAULT_TOL_BC: f64 = 1e-10;
pub const DEFAULT_TOL_BRHO: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;
const BOX_SLACK: f64 = 1e-12;

/// The `(μ, ρ̄)` region on which the contraction and bracketing estimates hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBox {
    pub gravity: f64,
    pub mu0: f64,
    /// Solves `(4π/3) G ρ̄₊^{2/3} = 10`.
    pub rho_plus: f64,
    /// `min(ρ̄₊^{1/3}/2, (8π/3) G ρ̄₊)`.
    pub mu_bound_box: f64,
    /// Largest `|μ|` with `K(ρ̄₋(μ), μ) ≤ 1/20`.
    pub mu_bound_small_k: f64,
}

impl ParameterBox {
    pub fn new(_model: &ValidatedModel, gravity: f64) -> Result<Self> {
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "G must be positive, got {gravity}"
            )));
        }
        let four_thirds_pi_g = 4.0 * PI / 3.0 * gravity;
        let eight_thirds_pi_g = 2.0 * four_thirds_pi_g;
        let rho_plus = (10.0 / four_thirds_pi_g).powf(1.5);
        let mu_bound_box = (0.5 * rho_plus.cbrt()).min(eight_thirds_pi_g * rho_plus);
        // K(ρ̄₋(μ), μ) = (3/2) |μ|^{2/3} ((8π/3) G)^{1/3} = 1/20
        let mu_bound_small_k = 30f64.powf(-1.5) / eight_thirds_pi_g.sqrt();
        let mu0 = MU0_SAFETY * mu_bound_box.min(mu_bound_small_k);
        Ok(ParameterBox {
            gravity,
            mu0,
            rho_plus,
            mu_bound_box,
            mu_bound_small_k,
        })
    }

    /// `ρ̄₋(μ) = |μ| / ((8π/3) G)`, the minimizer of `K(·, μ)`.
    pub fn rho_minus(&self, mu: f64) -> f64 {
        mu.abs() / (8.0 * PI / 3.0 * self.gravity)
    }

    pub fn rho_floor(&self) -> f64 {
        RHO_FLOOR_FRACTION * self.rho_plus
    }

    /// Lower bracket endpoint `max(ρ̄₋(μ), ρ̄_floor)`.
    pub fn rho_lower(&self, mu: f64) -> f64 {
        self.rho_minus(mu).max(self.rho_floor())
    }

    pub fn k_plus(&self, mu: f64) -> f64 {
        source_bound_k(self.rho_plus, mu, self.gravity)
    }

    /// `K(ρ̄₋(μ), μ)`; at `μ = 0` this is the limit value 0.
    pub fn k_minus(&self, mu: f64) -> f64 {
        if mu == 0.0 {
            return 0.0;
        }
        source_bound_k(self.rho_minus(mu), mu, self.gravity)
    }

    pub fn epsilon_plus(&self, mu: f64) -> f64 {
        source_epsilon(self.rho_plus, mu, self.gravity)
    }

    /// The four box inequalities at a given `μ`.
    pub fn conditions_hold(&self, mu: f64) -> bool {
        self.rho_minus(mu) < self.rho_plus
            && self.k_minus(mu) < 1.0 / 20.0
            && self.k_plus(mu) < 10.5
            && self.epsilon_plus(mu) > 9.5
    }

    /// Checks the box inequalities at `μ = ±μ₀`, where they are tightest.
    pub fn verify(&self) -> bool {
        self.conditions_hold(self.mu0) && self.conditions_hold(-self.mu0) && self.conditions_hold(0.0)
    }

    pub fn check_mu(&self, mu: f64) -> Result<()> {
        if !(mu.abs() <= self.mu0) {
            return Err(SolverError::MuOutOfRange { mu, mu0: self.mu0 });
        }
        Ok(())
    }

    pub fn check_density(&self, brho: f64, mu: f64) -> Result<()> {
        let lo = self.rho_lower(mu);
        let hi = self.rho_plus;
        if !(brho >= lo * (1.0 - BOX_SLACK) && brho <= hi * (1.0 + BOX_SLACK)) {
            return Err(SolverError::DensityOutOfRange { brho, lo, hi });
        }
        Ok(())
    }
}

pub fn build_parameter_box(model: &ValidatedModel, gravity: f64) -> Result<ParameterBox> {
    ParameterBox::new(model, gravity)
}

/// Tolerances for a separable solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub tol_picard: f64,
    pub tol_bc: f64,
    pub tol_brho: f64,
    pub max_iter: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            tol_picard: DEFAULT_PICARD_TOL,
            tol_bc: DEFAULT_TOL_BC,
            tol_brho: DEFAULT_TOL_BRHO,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Result of one shot: the boundary value `g'(y(1))` and the fixed point behind it.
#[derive(Debug, Clone)]
pub struct BoundaryMismatch {
    pub brho: f64,
    /// `g'(y(1))`.
    pub mismatch: f64,
    /// `y(1) - 1`.
    pub y1_dev: f64,
    pub zeta: ZetaProfile,
    pub picard: PicardDiagnostics,
}

pub fn boundary_mismatch(
    model: &ValidatedModel,
    params: &Parameters,
    grid: RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<BoundaryMismatch> {
    let (zeta, picard) = picard_solve(model, params, grid, tol, max_iter)?;
    let y1_dev = y_dev_at_boundary(&zeta);
    Ok(BoundaryMismatch {
        brho: params.brho,
        mismatch: model.dg_at_offset(y1_dev),
        y1_dev,
        zeta,
        picard,
    })
}

/// Converged separable profile.
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub model: ValidatedModel,
    pub params: Parameters,
    pub grid: RadialGrid,
    pub zeta: ZetaProfile,
    pub geometry: GeometryProfile,
    /// `g'(y(1))`.
    pub boundary_residual: f64,
    pub picard: PicardDiagnostics,
    pub bisection_iterations: usize,
    /// Initial bracket `(ρ̄_lo, ρ̄₊)`.
    pub bracket: (f64, f64),
    pub settings: SolveSettings,
    pub residuals: Option<ResidualReport>,
}

impl SolutionProfile {
    /// Assembles a profile from a fixed point without running the shooting loop.
    pub fn from_zeta(
        model: ValidatedModel,
        params: Parameters,
        zeta: ZetaProfile,
        picard: PicardDiagnostics,
        settings: SolveSettings,
    ) -> Result<Self> {
        let geometry = reconstruct_geometry(&zeta)?;
        let n = zeta.grid.intervals();
        let boundary_residual = model.dg_at_offset(geometry.y_dev[n]);
        Ok(SolutionProfile {
            grid: zeta.grid,
            bracket: (params.brho, params.brho),
            model,
            params,
            zeta,
            geometry,
            boundary_residual,
            picard,
            bisection_iterations: 0,
            settings,
            residuals: None,
        })
    }

    pub fn rho0(&self) -> f64 {
        self.params.brho
    }

    pub fn y1(&self) -> f64 {
        self.geometry.y[self.grid.intervals()]
    }

    pub fn y1_dev(&self) -> f64 {
        self.geometry.y_dev[self.grid.intervals()]
    }
}

/// Finds `ρ̄₀(μ)` with `g'(y(1)) = 0` by bisection on `[max(ρ̄₋(μ), ρ̄_floor), ρ̄₊]`.
pub fn solve_separable(
    model: &ValidatedModel,
    mu: f64,
    gravity: f64,
    grid: RadialGrid,
    settings: &SolveSettings,
) -> Result<SolutionProfile> {
    let pbox = ParameterBox::new(model, gravity)?;
    pbox.check_mu(mu)?;
    let shoot = |brho: f64| {
        boundary_mismatch(
            model,
            &Parameters::new(brho, mu, gravity),
            grid,
            settings.tol_picard,
            settings.max_iter,
        )
    };

    let (lo0, hi0) = (pbox.rho_lower(mu), pbox.rho_plus);
    let at_lo = shoot(lo0)?;
    let at_hi = shoot(hi0)?;
    if !(at_lo.mismatch < 0.0 && at_hi.mismatch > 0.0) {
        return Err(SolverError::BracketFailure {
            at_lo: at_lo.mismatch,
            at_hi: at_hi.mismatch,
        });
    }

    let (mut lo, mut hi) = (lo0, hi0);
    let mut best = if at_lo.mismatch.abs() < at_hi.mismatch.abs() { at_lo } else { at_hi };
    let mut iterations = 0;
    while best.mismatch.abs() >= settings.tol_bc
        && (hi - lo) / hi >= settings.tol_brho
        && iterations < MAX_BISECTIONS
    {
        let mid = 0.5 * (lo + hi);
        let shot = shoot(mid)?;
        iterations += 1;
        if shot.mismatch < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if shot.mismatch.abs() <= best.mismatch.abs() {
            best = shot;
        }
    }

    let params = Parameters::new(best.brho, mu, gravity);
    let mut profile = SolutionProfile::from_zeta(model.clone(), params, best.zeta, best.picard, *settings)?;
    profile.bisection_iterations = iterations;
    profile.bracket = (lo0, hi0);
    profile.residuals = Some(residual_report(model, &profile)?);
    Ok(profile)
}

/// Summary columns of one sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub brho0: f64,
    pub y1: f64,
    pub fprime0: f64,
    pub zeta_norm: f64,
    pub iterations: usize,
    pub picard_iterations: usize,
    pub bc_residual: f64,
}

impl SweepSummary {
    pub fn from_profile(p: &SolutionProfile) -> Self {
        SweepSummary {
            brho0: p.rho0(),
            y1: p.y1(),
            fprime0: p.geometry.fprime0,
            zeta_norm: p.zeta.sup_norm(),
            iterations: p.bisection_iterations,
            picard_iterations: p.picard.iterations,
            bc_residual: p.boundary_residual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub mu: f64,
    pub outcome: std::result::Result<SweepSummary, SolverError>,
}

/// Solves each `μ` independently on up to `jobs` threads; rows keep input order.
pub fn sweep(
    model: &ValidatedModel,
    gravity: f64,
    mu_values: &[f64],
    grid: RadialGrid,
    settings: &SolveSettings,
    jobs: usize,
) -> Vec<SweepRow> {
    let row = |&mu: &f64| SweepRow {
        mu,
        outcome: solve_separable(model, mu, gravity, grid, settings).map(|p| SweepSummary::from_profile(&p)),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| mu_values.par_iter().map(row).collect()),
        Err(_) => mu_values.iter().map(row).collect(),
    }
}

/// `steps` equispaced values from `lo` to `hi` inclusive.
pub fn mu_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| {
                let t = i as f64 / (steps - 1) as f64;
                lo * (1.0 - t) + hi * t
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> ValidatedModel {
        ValidatedModel::builtin(3100.0).unwrap()
    }

    #[test]
    fn box_for_unit_gravity() {
        let b = ParameterBox::new(&model(), 1.0).unwrap();
        assert_relative_eq!(b.rho_plus, (30.0 / (4.0 * PI)).powf(1.5), max_relative = 1e-14);
        assert!((b.rho_plus - 3.688_647).abs() < 1e-6);
        // bisection oracle for (4π/3) ρ^{2/3} = 10
        let (mut lo, mut hi) = (1.0_f64, 10.0_f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 4.0 * PI / 3.0 * mid.powf(2.0 / 3.0) < 10.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(b.rho_plus, lo, max_relative = 1e-13);
        assert!((4.0 * PI / 3.0 * b.rho_plus.powf(2.0 / 3.0) - 10.0).abs() < 1e-12);
        assert!((b.mu_bound_small_k - 2.10e-3).abs() < 1e-5);
        assert!((b.mu_bound_box - 0.7726).abs() < 1e-4);
        assert_relative_eq!(b.mu0, 0.99 * b.mu_bound_small_k, max_relative = 1e-15);
        assert_eq!(b.rho_minus(0.0), 0.0);
        assert!(b.verify());
    }

    #[test]
    fn small_k_bound_matches_numerical_minimum() {
        let b = ParameterBox::new(&model(), 1.0).unwrap();
        let mu = b.mu_bound_small_k;
        let kmin = (1..200_000)
            .map(|i| source_bound_k(i as f64 * 1e-8, mu, 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!((kmin - 0.05).abs() < 1e-6, "K min {kmin}");
    }

    #[test]
    fn box_conditions_across_mu() {
        let b = ParameterBox::new(&model(), 2.5).unwrap();
        for i in 0..=20 {
            let mu = -b.mu0 + 2.0 * b.mu0 * i as f64 / 20.0;
            assert!(b.conditions_hold(mu));
            // K(·, μ) nondecreasing on [ρ̄₋(μ), ρ̄₊]
            let lo = b.rho_minus(mu).max(1e-12);
            let mut prev = 0.0;
            for j in 0..=100 {
                let r = lo + (b.rho_plus - lo) * j as f64 / 100.0;
                let k = source_bound_k(r, mu, 2.5);
                assert!(k >= prev - 1e-15);
                prev = k;
            }
        }
        assert!(b.check_mu(2.0 * b.mu0).is_err());
        assert!(ParameterBox::new(&model(), 0.0).is_err());
    }

    #[test]
    fn mismatch_signs_at_bracket_ends() {
        let m = model();
        let b = ParameterBox::new(&m, 1.0).unwrap();
        let grid = RadialGrid::new(128).unwrap();
        let d = m.delta();
        for mu in [-0.5 * b.mu0, 0.0, 0.5 * b.mu0] {
            let hi = boundary_mismatch(&m, &Parameters::new(b.rho_plus, mu, 1.0), grid, 1e-13, 50).unwrap();
            assert!(hi.mismatch > 0.0 && hi.y1_dev > d / 27.0);
            let lo = boundary_mismatch(&m, &Parameters::new(b.rho_lower(mu), mu, 1.0), grid, 1e-13, 50).unwrap();
            assert!(lo.mismatch < 0.0 && lo.y1_dev < d / 33.0);
        }
    }

    #[test]
    fn sign_structure_of_dg_on_interval() {
        let m = model();
        let d = m.delta();
        for i in 0..=400 {
            let s = -d + (d / 33.0 + d) * i as f64 / 400.0 * 0.999;
            assert!(m.dg(1.0 + s) < 0.0);
            let s = d / 27.0 * 1.001 + (d - d / 27.0 * 1.001) * i as f64 / 400.0;
            assert!(m.dg(1.0 + s) > 0.0);
        }
    }

    #[test]
    fn solve_at_zero_mu() {
        let m = model();
        let grid = RadialGrid::new(128).unwrap();
        let settings = SolveSettings::default();
        let p = solve_separable(&m, 0.0, 1.0, grid, &settings).unwrap();
        let d = m.delta();
        assert!(p.boundary_residual.abs() < 1e-10);
        assert!(p.y1_dev() >= d / 33.0 && p.y1_dev() <= d / 27.0);
        assert!(p.rho0() > p.bracket.0 && p.rho0() < p.bracket.1);
        assert!((p.geometry.f[128] - 1.0).abs() <= 1e-12);
        assert!(p.zeta.sup_norm() <= d);
        let width = (p.bracket.1 - p.bracket.0) / (settings.tol_brho * p.rho0());
        assert!(p.bisection_iterations <= width.log2().ceil() as usize + 2);
    }

    #[test]
    fn solve_rejects_large_mu() {
        let m = model();
        let b = ParameterBox::new(&m, 1.0).unwrap();
        let grid = RadialGrid::new(32).unwrap();
        let err = solve_separable(&m, 2.0 * b.mu0, 1.0, grid, &SolveSettings::default()).unwrap_err();
        assert!(err.to_string().contains("mu outside proven range"));
    }

    #[test]
    fn mu_grid_values() {
        assert!(mu_grid(-1e-3, 1e-3, 0).is_empty());
        assert_eq!(mu_grid(0.5, 1.0, 1), vec![0.5]);
        let g = mu_grid(-1e-3, 1e-3, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[2], 0.0);
        assert_eq!(g[0], -1e-3);
        assert_eq!(g[4], 1e-3);
    }

    #[test]
    fn sweep_keeps_order_and_captures_errors() {
        let m = model();
        let grid = RadialGrid::new(32).unwrap();
        let b = ParameterBox::new(&m, 1.0).unwrap();
        let settings = SolveSettings::default();
        let rows = sweep(&m, 1.0, &[0.0, 5.0 * b.mu0, -0.25 * b.mu0], grid, &settings, 2);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].mu, 5.0 * b.mu0);
        assert!(rows[0].outcome.is_ok());
        assert!(matches!(rows[1].outcome, Err(SolverError::MuOutOfRange { .. })));
        assert!(rows[2].outcome.is_ok());
        let single = solve_separable(&m, 0.0, 1.0, grid, &settings).unwrap();
        assert_eq!(rows[0].outcome.as_ref().unwrap(), &SweepSummary::from_profile(&single));
        assert!(sweep(&m, 1.0, &[], grid, &settings, 1).is_empty());
    }
}
