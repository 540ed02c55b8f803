//! Residual checks of solved profiles against both forms of the profile
//! equation, derivative cross-checks for `g`, and Piola–Kirchhoff stresses.
//!
//! Derivatives here come from fourth-order finite differences of nodal
//! values, independent of the integral route the solver takes. Nodes with
//! `R < 2h` are excluded: both equation forms carry removable `1/R` factors
//! at the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constitutive::{exact_step, ConstitutiveModel};
use crate::error::{Result, SolverError};
use crate::fixed_point::Parameters;
use crate::radial_ops::{GeometryProfile, RadialGrid};
use crate::shooting::SolutionProfile;

pub const STENCIL_ORDER: usize = 4;

/// First node included in residual sups.
const FIRST_NODE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Sup over `R ≥ 2h` of the separated-form residual.
    pub residual_separated: f64,
    /// Sup over `R ≥ 2h` of the reformulated residual.
    pub residual_reformulation: f64,
    /// Sup of `|r_ref · R g''(y) - r_sep|`.
    pub equivalence_discrepancy: f64,
    /// `equivalence_discrepancy / (1 + residual_separated)`.
    pub equivalence_relative: f64,
    /// `g'(y(1))`.
    pub boundary_residual: f64,
    /// `|φ(1) - 1|`.
    pub normalization_error: f64,
    pub grid_size: usize,
    pub stencil_order: usize,
}

/// Fourth-order first derivative at every node; one-sided at the two ends.
pub fn derivative4(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "need at least five nodes");
    let v = values;
    let d = 12.0 * h;
    (0..n)
        .map(|i| match i {
            0 => (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / d,
            1 => (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / d,
            _ if i == n - 2 => {
                (-v[n - 5] + 6.0 * v[n - 4] - 18.0 * v[n - 3] + 10.0 * v[n - 2] + 3.0 * v[n - 1]) / d
            }
            _ if i == n - 1 => {
                (3.0 * v[n - 5] - 16.0 * v[n - 4] + 36.0 * v[n - 3] - 48.0 * v[n - 2] + 25.0 * v[n - 1]) / d
            }
            _ => (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / d,
        })
        .collect()
}

fn gravity_factor(params: &Parameters, lambda: f64) -> f64 {
    (4.0 * PI / 3.0 * params.gravity * params.brho + params.mu * lambda.powi(3)) / params.brho.cbrt()
}

/// Signed residual of `(φ²/R⁵) ∂_R(R⁴ g'(y)/φ) + φ g(y)/R² - ((4π/3)Gρ̄ + μλ³) ρ̄^{-1/3} φ`.
///
/// The flux is written as `R³ ψ` with `ψ = g'(y)/λ`; the `R³` factor is
/// differentiated exactly and `ψ` by stencil, which keeps the stencil error
/// from being amplified by `R⁻⁵` near the origin. Entries below `2h` are zero.
pub fn separated_residuals(
    model: &ConstitutiveModel,
    geo: &GeometryProfile,
    params: &Parameters,
) -> Vec<f64> {
    let grid = geo.grid;
    let psi: Vec<f64> = (0..grid.len())
        .map(|i| model.dg_at_offset(geo.y_dev[i]) / geo.lambda[i])
        .collect();
    let dpsi = derivative4(&psi, grid.spacing());
    (0..grid.len())
        .map(|i| {
            if i < FIRST_NODE {
                return 0.0;
            }
            let r = grid.node(i);
            let lambda = geo.lambda[i];
            let s = geo.y_dev[i];
            let lhs = lambda * (3.0 * model.dg_at_offset(s) + model.g_at_offset(s)) / r + lambda * lambda * dpsi[i];
            lhs - gravity_factor(params, lambda) * geo.f[i]
        })
        .collect()
}

/// Signed residual of the reformulated equation
/// `(1/R)(φ'' + (2/R)(φ' - λ)) + (φ' - λ) U(y)/R² - λ ρ̄^{-1/3}((4π/3)Gρ̄ + μλ³)/g''(y)`.
pub fn reformulation_residuals(
    model: &ConstitutiveModel,
    geo: &GeometryProfile,
    params: &Parameters,
) -> Result<Vec<f64>> {
    let grid = geo.grid;
    for i in 0..grid.len() {
        let d2g = model.d2g(geo.y[i]);
        if !(d2g > 0.0) {
            return Err(SolverError::NonconvexModel { node: i, y: geo.y[i], d2g });
        }
    }
    let fpp = derivative4(&geo.fprime_dev, grid.spacing());
    Ok((0..grid.len())
        .map(|i| {
            if i < FIRST_NODE {
                return 0.0;
            }
            let r = grid.node(i);
            let gap = geo.stretch_gap(i);
            let lambda = geo.lambda[i];
            let lhs = (fpp[i] + 2.0 * gap / r) / r;
            let rhs = -gap * model.u_at_offset(geo.y_dev[i]) / (r * r)
                + lambda * gravity_factor(params, lambda) / model.d2g(geo.y[i]);
            lhs - rhs
        })
        .collect())
}

fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Sup over nodes `R ≥ 2h` of the separated-form residual.
pub fn residual_separated(model: &ConstitutiveModel, profile: &SolutionProfile) -> f64 {
    sup_abs(&separated_residuals(model, &profile.geometry, &profile.params))
}

/// Sup over nodes `R ≥ 2h` of the reformulated residual.
pub fn residual_reformulation(model: &ConstitutiveModel, profile: &SolutionProfile) -> Result<f64> {
    Ok(sup_abs(&reformulation_residuals(model, &profile.geometry, &profile.params)?))
}

/// Both residuals, their pointwise agreement, and the boundary conditions.
pub fn residual_report_for(
    model: &ConstitutiveModel,
    geo: &GeometryProfile,
    params: &Parameters,
) -> Result<ResidualReport> {
    let sep = separated_residuals(model, geo, params);
    let refo = reformulation_residuals(model, geo, params)?;
    let grid = geo.grid;
    let discrepancy = (FIRST_NODE..grid.len())
        .map(|i| (refo[i] * grid.node(i) * model.d2g(geo.y[i]) - sep[i]).abs())
        .fold(0.0_f64, f64::max);
    let residual_separated = sup_abs(&sep);
    let n = grid.intervals();
    Ok(ResidualReport {
        residual_separated,
        residual_reformulation: sup_abs(&refo),
        equivalence_discrepancy: discrepancy,
        equivalence_relative: discrepancy / (1.0 + residual_separated),
        boundary_residual: model.dg_at_offset(geo.y_dev[n]),
        normalization_error: (geo.f[n] - 1.0).abs(),
        grid_size: n,
        stencil_order: STENCIL_ORDER,
    })
}

pub fn residual_report(model: &ConstitutiveModel, profile: &SolutionProfile) -> Result<ResidualReport> {
    residual_report_for(model, &profile.geometry, &profile.params)
}

/// Grid-level bound on the residuals of a converged solution, `C h² + floor`.
pub fn residual_tolerance(grid: &RadialGrid) -> f64 {
    RESIDUAL_CONSTANT * grid.spacing().powi(2) + RESIDUAL_FLOOR
}

/// Measured `residual_separated · N²` is about `1.3e-5` for the built-in model.
pub const RESIDUAL_CONSTANT: f64 = 1e-4;
/// Roundoff allowance for fine grids.
pub const RESIDUAL_FLOOR: f64 = 1e-11;
/// Bound on `equivalence_relative`.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub dg: f64,
    pub d2g: f64,
    pub d3g: f64,
}

impl DerivativeCheck {
    pub fn max(&self) -> f64 {
        self.dg.max(self.d2g).max(self.d3g)
    }
}

/// Largest mismatch of `g'`, `g''`, `g'''` against central differences of the
/// next lower derivative (step `1e-5`) on `[1/2, 3/2]`, relative to `max(|exact|, 1)`.
pub fn check_derivatives(model: &ConstitutiveModel) -> DerivativeCheck {
    const STEP: f64 = 1e-5;
    const SAMPLES: usize = 1001;
    let mut out = DerivativeCheck { dg: 0.0, d2g: 0.0, d3g: 0.0 };
    let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
    for i in 0..SAMPLES {
        let y = 0.5 + i as f64 / (SAMPLES - 1) as f64;
        let h = exact_step(y, STEP);
        let diff = |f: &dyn Fn(f64) -> f64| (f(y + h) - f(y - h)) / (2.0 * h);
        out.dg = out.dg.max(rel(diff(&|t| model.g(t)), model.dg(y)));
        out.d2g = out.d2g.max(rel(diff(&|t| model.dg(t)), model.d2g(y)));
        out.d3g = out.d3g.max(rel(diff(&|t| model.d2g(t)), model.d3g(y)));
    }
    out
}

/// Radial and tangential Piola–Kirchhoff stresses at strain ratio `y = 1 + y_dev`.
pub fn pk_stress(model: &ConstitutiveModel, brho: f64, y_dev: f64, lambda: f64) -> (f64, f64) {
    let scale = brho.powf(4.0 / 3.0) / (lambda * lambda);
    let dg = model.dg_at_offset(y_dev);
    (scale * dg, -0.5 * scale * ((1.0 + y_dev) * dg + model.g_at_offset(y_dev)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressProfiles {
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
}

pub fn stress_profiles(profile: &SolutionProfile) -> StressProfiles {
    let geo = &profile.geometry;
    let (radial, tangential) = (0..geo.grid.len())
        .map(|i| pk_stress(&profile.model, profile.params.brho, geo.y_dev[i], geo.lambda[i]))
        .unzip();
    StressProfiles { radial, tangential }
}
