//! Picard iteration for `ζ = L⁻¹ F[ζ]` on the ball `N(δ) = {‖ζ‖∞ ≤ δ}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::{source_bound_k, source_v, ValidatedModel};
use crate::error::{Result, SolverError};
use crate::radial_ops::{
    apply_l_inverse, moment_integral, reconstruct_geometry, sup_distance, RadialGrid, ZetaProfile,
};
use crate::shooting::ParameterBox;

pub const DEFAULT_PICARD_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Physical parameters of one profile problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Reference density `ρ̄`.
    pub brho: f64,
    /// Separation constant `μ`.
    pub mu: f64,
    /// Gravitational constant `G`.
    pub gravity: f64,
}

impl Parameters {
    pub fn new(brho: f64, mu: f64, gravity: f64) -> Self {
        Parameters { brho, mu, gravity }
    }

    /// `K(ρ̄, μ)`.
    pub fn k(&self) -> f64 {
        source_bound_k(self.brho, self.mu, self.gravity)
    }

    pub fn v(&self, lambda: f64) -> f64 {
        source_v(self.brho, self.mu, self.gravity, lambda)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// `‖ζ_{k+1} - ζ_k‖∞` for every iteration.
    pub updates: Vec<f64>,
    /// Quotients of successive nonzero updates, from the second iteration on.
    pub ratios: Vec<f64>,
    pub final_norm: f64,
    pub k_value: f64,
}

impl PicardDiagnostics {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn last_update(&self) -> f64 {
        self.updates.last().copied().unwrap_or(0.0)
    }
}

/// `F[ζ] = -(φ' - λ) U(y)/R² + V(λ)/g''(y)` at every node.
pub fn apply_f(model: &ValidatedModel, params: &Parameters, zeta: &ZetaProfile) -> Result<ZetaProfile> {
    let grid = zeta.grid;
    let delta = model.delta();
    let geo = reconstruct_geometry(zeta)?;
    let m2 = moment_integral(&grid, &zeta.values, 2);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s = geo.y_dev[i];
        if !(s.abs() <= delta) {
            return Err(SolverError::DomainExit { y: geo.y[i], delta });
        }
        let lambda = geo.lambda[i];
        let source = params.v(lambda) / model.d2g(geo.y[i]);
        if i == 0 {
            values.push(source);
            continue;
        }
        let r = grid.node(i);
        // (φ' - λ)/R² = R⁻³ ∫_0^R τ² ζ dτ
        let gap = m2[i] / (r * r * r);
        values.push(-gap * model.u_at_offset(s) + source);
    }
    Ok(ZetaProfile { grid, values })
}

/// One application of `ζ ↦ L⁻¹ F[ζ]`.
pub fn picard_map(model: &ValidatedModel, params: &Parameters, zeta: &ZetaProfile) -> Result<ZetaProfile> {
    Ok(apply_l_inverse(&apply_f(model, params, zeta)?))
}

fn check_box(model: &ValidatedModel, params: &Parameters) -> Result<()> {
    if !(params.gravity > 0.0 && params.gravity.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "G must be positive, got {}",
            params.gravity
        )));
    }
    let pbox = ParameterBox::new(model, params.gravity)?;
    pbox.check_mu(params.mu)?;
    pbox.check_density(params.brho, params.mu)
}

/// Iterates `ζ_{k+1} = L⁻¹ F[ζ_k]` from `ζ_0 = 0` until the sup-norm update drops below `tol`.
pub fn picard_solve(
    model: &ValidatedModel,
    params: &Parameters,
    grid: RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<(ZetaProfile, PicardDiagnostics)> {
    check_box(model, params)?;
    let delta = model.delta();
    let mut zeta = ZetaProfile::zeros(grid);
    let mut diag = PicardDiagnostics {
        iterations: 0,
        updates: Vec::new(),
        ratios: Vec::new(),
        final_norm: 0.0,
        k_value: params.k(),
    };
    let mut above_one = 0usize;
    for it in 1..=max_iter {
        let next = picard_map(model, params, &zeta)?;
        let norm = next.sup_norm();
        if norm > delta {
            return Err(SolverError::LeftBall { norm, delta });
        }
        let update = sup_distance(&next.values, &zeta.values);
        if let Some(&prev) = diag.updates.last() {
            if prev > 0.0 && update > 0.0 {
                let ratio = update / prev;
                diag.ratios.push(ratio);
                if ratio >= 1.0 {
                    above_one += 1;
                    if above_one >= 2 {
                        return Err(SolverError::NotContracting {
                            iteration: it,
                            prev: diag.ratios[diag.ratios.len() - 2],
                            last: ratio,
                        });
                    }
                } else {
                    above_one = 0;
                }
            }
        }
        diag.updates.push(update);
        diag.iterations = it;
        zeta = next;
        if update < tol {
            diag.final_norm = zeta.sup_norm();
            return Ok((zeta, diag));
        }
    }
    Err(SolverError::MaxIterExceeded {
        max_iter,
        last_update: diag.last_update(),
    })
}

/// `‖T ζ - T ζ̃‖∞ / ‖ζ - ζ̃‖∞` for `T = L⁻¹F`; `None` when `ζ = ζ̃`.
pub fn lipschitz_quotient(
    model: &ValidatedModel,
    params: &Parameters,
    a: &ZetaProfile,
    b: &ZetaProfile,
) -> Result<Option<f64>> {
    let denom = sup_distance(&a.values, &b.values);
    if denom == 0.0 {
        return Ok(None);
    }
    let ta = picard_map(model, params, a)?;
    let tb = picard_map(model, params, b)?;
    Ok(Some(sup_distance(&ta.values, &tb.values) / denom))
}

/// Largest Lipschitz quotient of `L⁻¹F` over random pairs with node values uniform in `[-δ, δ]`.
pub fn lipschitz_probe(
    model: &ValidatedModel,
    params: &Parameters,
    grid: RadialGrid,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_box(model, params)?;
    let delta = model.delta();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| ZetaProfile {
        grid,
        values: (0..grid.len()).map(|_| rng.gen_range(-delta..=delta)).collect(),
    };
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if let Some(q) = lipschitz_quotient(model, params, &a, &b)? {
            worst = worst.max(q);
        }
    }
    Ok(worst)
}
