//! The reduced constitutive function `g` and the scalar functions built from it.
//!
//! `g(y)` is the strain energy restricted to uniaxial distortions
//! `I + (y - 1) w⊗w`, scaled by `ρ̄^{-1/3}`. Everything the profile solver
//! needs from the material enters through `g`, `g'`, `g''` and `g'''`:
//!
//! * `h(y) = 3y g'(y) + g(y)` and the removable quotient
//!   `E(y) = (h(y) - h(1))/(y - 1) - h'(y)`,
//! * the damping factor `U(y) = 2(y - 1) + E(y)/g''(y)` on `I(δ) = [1 - δ, 1 + δ]`,
//! * the gravity/eigenvalue source `V(λ)` and its bound `K(ρ̄, μ)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolverError};

/// Below this distance from `y = 1` the quotient `E` switches to its Taylor form.
pub const E_TAYLOR_SWITCH: f64 = 1e-4;

/// Step used to difference `g'''` when `h'''(1)` is needed.
const D4G_STEP: f64 = 1e-4;

/// Uniform sample count used for `sup |g'''|` over `[1/2, 3/2]`.
pub const VALIDATION_SAMPLES: usize = 10_001;

/// Required relative margin of `g''(1)` over the sampled largeness threshold.
pub const VALIDATION_MARGIN: f64 = 0.01;

const NORMALIZATION_ERROR_TOL: f64 = 1e-9;
const NORMALIZATION_FLAG_TOL: f64 = 1e-12;

/// Scalar reduction of a strain energy, with analytic derivatives up to third order.
pub trait StrainFunction: Send + Sync + fmt::Debug {
    fn g(&self, y: f64) -> f64;
    fn dg(&self, y: f64) -> f64;
    fn d2g(&self, y: f64) -> f64;
    fn d3g(&self, y: f64) -> f64;
    /// `g(1 + s)`; override when `s` carries more precision than `1 + s`.
    fn g_at_offset(&self, s: f64) -> f64 {
        self.g(1.0 + s)
    }
    /// `g'(1 + s)`; override when `s` carries more precision than `1 + s`.
    fn dg_at_offset(&self, s: f64) -> f64 {
        self.dg(1.0 + s)
    }
    /// Model specification string, e.g. `builtin:kappa=3100`.
    fn label(&self) -> String;
}

/// `g(y) = y^{-1/3} + (κ/2)(y - 1)²`.
///
/// `κ = 0` is the mass-critical gas law. The quadratic term leaves `g(1)` and
/// `g'(1)` untouched and adds `κ` to `g''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinStrain {
    pub kappa: f64,
}

impl StrainFunction for BuiltinStrain {
    fn g(&self, y: f64) -> f64 {
        let s = y - 1.0;
        y.powf(-1.0 / 3.0) + 0.5 * self.kappa * s * s
    }

    fn dg(&self, y: f64) -> f64 {
        -y.powf(-4.0 / 3.0) / 3.0 + self.kappa * (y - 1.0)
    }

    fn d2g(&self, y: f64) -> f64 {
        4.0 / 9.0 * y.powf(-7.0 / 3.0) + self.kappa
    }

    fn d3g(&self, y: f64) -> f64 {
        -28.0 / 27.0 * y.powf(-10.0 / 3.0)
    }

    fn g_at_offset(&self, s: f64) -> f64 {
        (1.0 + s).powf(-1.0 / 3.0) + 0.5 * self.kappa * s * s
    }

    fn dg_at_offset(&self, s: f64) -> f64 {
        -(1.0 + s).powf(-4.0 / 3.0) / 3.0 + self.kappa * s
    }

    fn label(&self) -> String {
        format!("builtin:kappa={}", self.kappa)
    }
}

/// Evaluator for `g` and its derived quantities.
#[derive(Clone, Debug)]
pub struct ConstitutiveModel {
    inner: Arc<dyn StrainFunction>,
}

/// Built-in model with stiffness `kappa`.
pub fn make_builtin_model(kappa: f64) -> Result<ConstitutiveModel> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "kappa must be finite and >= 0, got {kappa}"
        )));
    }
    Ok(ConstitutiveModel::new(BuiltinStrain { kappa }))
}

impl ConstitutiveModel {
    pub fn new<S: StrainFunction + 'static>(strain: S) -> Self {
        ConstitutiveModel {
            inner: Arc::new(strain),
        }
    }

    /// Parses a model specification. Only `builtin:kappa=<float>` is recognised.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || {
            SolverError::InvalidParameter(format!(
                "unrecognised model '{spec}', expected builtin:kappa=<float>"
            ))
        };
        let rest = spec.trim().strip_prefix("builtin:").ok_or_else(bad)?;
        let value = rest.strip_prefix("kappa=").ok_or_else(bad)?;
        let kappa: f64 = value.trim().parse().map_err(|_| bad())?;
        make_builtin_model(kappa)
    }

    pub fn label(&self) -> String {
        self.inner.label()
    }

    #[inline]
    pub fn g(&self, y: f64) -> f64 {
        self.inner.g(y)
    }
    #[inline]
    pub fn dg(&self, y: f64) -> f64 {
        self.inner.dg(y)
    }
    #[inline]
    pub fn g_at_offset(&self, s: f64) -> f64 {
        self.inner.g_at_offset(s)
    }
    #[inline]
    pub fn dg_at_offset(&self, s: f64) -> f64 {
        self.inner.dg_at_offset(s)
    }
    #[inline]
    pub fn d2g(&self, y: f64) -> f64 {
        self.inner.d2g(y)
    }
    #[inline]
    pub fn d3g(&self, y: f64) -> f64 {
        self.inner.d3g(y)
    }

    /// Fourth derivative of `g` by central differencing `g'''`.
    fn d4g_numeric(&self, y: f64) -> f64 {
        let step = exact_step(y, D4G_STEP);
        (self.d3g(y + step) - self.d3g(y - step)) / (2.0 * step)
    }

    /// `h(y) = 3y g'(y) + g(y)`.
    pub fn h(&self, y: f64) -> f64 {
        3.0 * y * self.dg(y) + self.g(y)
    }

    /// `h'(y) = 4g'(y) + 3y g''(y)`.
    pub fn dh(&self, y: f64) -> f64 {
        4.0 * self.dg(y) + 3.0 * y * self.d2g(y)
    }

    /// `h''(y) = 7g''(y) + 3y g'''(y)`.
    pub fn d2h(&self, y: f64) -> f64 {
        7.0 * self.d2g(y) + 3.0 * y * self.d3g(y)
    }

    /// `h'''(y) = 10g'''(y) + 3y g''''(y)`, with `g''''` differenced from `g'''`.
    pub fn d3h(&self, y: f64) -> f64 {
        10.0 * self.d3g(y) + 3.0 * y * self.d4g_numeric(y)
    }

    /// `E(y)`; zero at `y = 1`.
    pub fn e(&self, y: f64) -> f64 {
        self.e_at_offset(y - 1.0)
    }

    /// `E(1 + s)`, evaluated from the offset so small strains keep full precision.
    pub fn e_at_offset(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if s.abs() < E_TAYLOR_SWITCH {
            return self.e_taylor(s);
        }
        let y = 1.0 + s;
        (self.h(y) - self.h(1.0)) / s - self.dh(y)
    }

    /// Second-order Taylor form `-h''(1)s/2 - h'''(1)s²/3`.
    pub fn e_taylor(&self, s: f64) -> f64 {
        -0.5 * self.d2h(1.0) * s - self.d3h(1.0) * s * s / 3.0
    }

    /// `U(1 + s)` without a domain check. Requires `g''(1 + s) > 0`.
    pub fn u_at_offset(&self, s: f64) -> f64 {
        2.0 * s + self.e_at_offset(s) / self.d2g(1.0 + s)
    }

    /// `U(y)` on `I(δ)`; `DomainExit` outside it.
    pub fn u(&self, y: f64, delta: f64) -> Result<f64> {
        let s = y - 1.0;
        if !(s.abs() <= delta) {
            return Err(SolverError::DomainExit { y, delta });
        }
        Ok(self.u_at_offset(s))
    }

    /// Sideris's `f(y) = y^{1/3} g(y)`.
    pub fn sideris_f(&self, y: f64) -> f64 {
        y.cbrt() * self.g(y)
    }
}

/// Largeness radius `δ = 10/g''(1)`.
pub fn delta(model: &ConstitutiveModel) -> f64 {
    10.0 / model.d2g(1.0)
}

/// `V(λ) = λ ρ̄^{-1/3} ((4π/3) G ρ̄ + μ λ³)`.
pub fn source_v(brho: f64, mu: f64, g_const: f64, lambda: f64) -> f64 {
    lambda / brho.cbrt() * (4.0 * PI / 3.0 * g_const * brho + mu * lambda.powi(3))
}

/// `K(ρ̄, μ) = ρ̄^{-1/3} ((4π/3) G ρ̄ + |μ|)`.
pub fn source_bound_k(brho: f64, mu: f64, g_const: f64) -> f64 {
    (4.0 * PI / 3.0 * g_const * brho + mu.abs()) / brho.cbrt()
}

/// `ε(ρ̄, μ) = V(1)`.
pub fn source_epsilon(brho: f64, mu: f64, g_const: f64) -> f64 {
    source_v(brho, mu, g_const, 1.0)
}

/// Residual pressure of the undeformed reference state, `ρ̄^{4/3}/3`.
pub fn residual_pressure(brho: f64) -> f64 {
    brho.powf(4.0 / 3.0) / 3.0
}

/// Returns a step close to `step` such that `y ± step` are exact in floating point.
pub(crate) fn exact_step(y: f64, step: f64) -> f64 {
    let up = y + step;
    up - y
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub normalization_ok: bool,
    /// `g''(1) ≥ 50 (50 + sup |g'''|)` with the sampled sup.
    pub hypothesis_ok: bool,
    /// Relative margin over the threshold exceeds [`VALIDATION_MARGIN`].
    pub margin_ok: bool,
    /// `g''(1) ≥ 2400 (1 + M²)`.
    pub modified_ok: bool,
    pub g1: f64,
    pub dg1: f64,
    pub d2g1: f64,
    /// Sampled sup of `|g'''|` on `[1/2, 3/2]`; a lower bound on the true sup.
    pub sup_d3g: f64,
    pub m: f64,
    pub delta: f64,
    pub threshold: f64,
    /// `g''(1) - threshold`.
    pub margin: f64,
    pub samples: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.normalization_ok && self.hypothesis_ok && self.margin_ok
    }

    /// `HypothesisFailed` unless the report passes.
    pub fn require(&self) -> Result<()> {
        if self.passes() {
            Ok(())
        } else {
            Err(SolverError::HypothesisFailed {
                d2g1: self.d2g1,
                threshold: self.threshold * (1.0 + VALIDATION_MARGIN),
            })
        }
    }
}

/// Checks normalization and the largeness hypothesis on `g''(1)`.
///
/// A normalization error larger than `1e-9` is returned as an error; a failed
/// largeness check is reported through the flags.
pub fn validate_model(model: &ConstitutiveModel) -> Result<ValidationReport> {
    let g1 = model.g(1.0);
    let dg1 = model.dg(1.0);
    let g_err = (g1 - 1.0).abs();
    let dg_err = (dg1 + 1.0 / 3.0).abs();
    if !(g_err <= NORMALIZATION_ERROR_TOL && dg_err <= NORMALIZATION_ERROR_TOL) {
        return Err(SolverError::NormalizationViolated { g1, dg1 });
    }
    let d2g1 = model.d2g(1.0);

    let n = VALIDATION_SAMPLES;
    let sup_d3g = (0..n)
        .map(|i| {
            let y = 0.5 + i as f64 / (n - 1) as f64;
            model.d3g(y).abs()
        })
        .fold(0.0_f64, f64::max);

    let threshold = 50.0 * (50.0 + sup_d3g);
    let m = sup_d3g / d2g1;
    Ok(ValidationReport {
        normalization_ok: g_err <= NORMALIZATION_FLAG_TOL && dg_err <= NORMALIZATION_FLAG_TOL,
        hypothesis_ok: d2g1 >= threshold,
        margin_ok: d2g1 - threshold > VALIDATION_MARGIN * threshold,
        modified_ok: d2g1 >= 2400.0 * (1.0 + m * m),
        g1,
        dg1,
        d2g1,
        sup_d3g,
        m,
        delta: 10.0 / d2g1,
        threshold,
        margin: d2g1 - threshold,
        samples: n,
    })
}

/// A model that has passed [`validate_model`], with its `δ` cached.
#[derive(Clone, Debug)]
pub struct ValidatedModel {
    model: ConstitutiveModel,
    report: ValidationReport,
}

impl ValidatedModel {
    pub fn new(model: ConstitutiveModel) -> Result<Self> {
        let report = validate_model(&model)?;
        report.require()?;
        Ok(ValidatedModel { model, report })
    }

    pub fn builtin(kappa: f64) -> Result<Self> {
        Self::new(make_builtin_model(kappa)?)
    }

    pub fn model(&self) -> &ConstitutiveModel {
        &self.model
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn delta(&self) -> f64 {
        self.report.delta
    }

    pub fn d2g1(&self) -> f64 {
        self.report.d2g1
    }

    pub fn u(&self, y: f64) -> Result<f64> {
        self.model.u(y, self.delta())
    }
}

impl std::ops::Deref for ValidatedModel {
    type Target = ConstitutiveModel;

    fn deref(&self) -> &ConstitutiveModel {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[derive(Debug)]
    struct Shifted;

    impl StrainFunction for Shifted {
        fn g(&self, y: f64) -> f64 {
            1.0 + y.powf(-1.0 / 3.0)
        }
        fn dg(&self, y: f64) -> f64 {
            -y.powf(-4.0 / 3.0) / 3.0
        }
        fn d2g(&self, _y: f64) -> f64 {
            1.0
        }
        fn d3g(&self, _y: f64) -> f64 {
            0.0
        }
        fn label(&self) -> String {
            "shifted".into()
        }
    }

    fn central(f: impl Fn(f64) -> f64, y: f64, h: f64) -> f64 {
        let h = exact_step(y, h);
        (f(y + h) - f(y - h)) / (2.0 * h)
    }

    #[test]
    fn builtin_normalization_is_exact() {
        let m = make_builtin_model(3100.0).unwrap();
        assert_eq!(m.g(1.0), 1.0);
        assert_eq!(m.dg(1.0), -1.0 / 3.0);
        assert_relative_eq!(m.d2g(1.0), 3100.0 + 4.0 / 9.0, max_relative = 1e-15);
        let fd = central(|y| m.dg(y), 1.0, 1e-5);
        assert_relative_eq!(fd, m.d2g(1.0), max_relative = 1e-8);
    }

    #[test]
    fn gas_law_power() {
        let m = make_builtin_model(0.0).unwrap();
        assert_relative_eq!(m.g(2.0), 2f64.powf(-1.0 / 3.0), max_relative = 1e-15);
        assert_relative_eq!(m.g(2.0), 0.793_700_525_984_099_7, max_relative = 1e-15);
    }

    #[test]
    fn negative_kappa_rejected() {
        assert!(make_builtin_model(-1.0).is_err());
        assert!(make_builtin_model(f64::NAN).is_err());
    }

    #[test]
    fn parse_model_spec() {
        let m = ConstitutiveModel::parse("builtin:kappa=3100").unwrap();
        assert_eq!(m.label(), "builtin:kappa=3100");
        assert!(ConstitutiveModel::parse("table:foo").is_err());
        assert!(ConstitutiveModel::parse("builtin:kappa=abc").is_err());
        assert!(ConstitutiveModel::parse("builtin:kappa=-2").is_err());
    }

    #[test]
    fn validation_builtin_passes() {
        let m = make_builtin_model(3100.0).unwrap();
        let r = validate_model(&m).unwrap();
        let sup = 28.0 / 27.0 * 2f64.powf(10.0 / 3.0);
        assert_relative_eq!(r.sup_d3g, sup, max_relative = 1e-14);
        assert_relative_eq!(r.threshold, 50.0 * (50.0 + sup), max_relative = 1e-14);
        assert!((r.threshold - 3022.6).abs() < 0.1);
        assert!(r.passes());
        assert!(r.modified_ok);
        assert!(r.samples >= 10_000);
        assert_relative_eq!(r.delta, 10.0 / 3100.444_444_444_444_4, max_relative = 1e-14);
    }

    #[test]
    fn validation_gas_fails_hypothesis() {
        let m = make_builtin_model(0.0).unwrap();
        let r = validate_model(&m).unwrap();
        assert!(r.normalization_ok);
        assert!(!r.hypothesis_ok);
        assert!(matches!(r.require(), Err(SolverError::HypothesisFailed { .. })));
        assert!(ValidatedModel::new(m).is_err());
    }

    #[test]
    fn validation_rejects_bad_normalization() {
        let m = ConstitutiveModel::new(Shifted);
        assert!(matches!(
            validate_model(&m),
            Err(SolverError::NormalizationViolated { .. })
        ));
    }

    #[test]
    fn validation_is_deterministic() {
        let m = make_builtin_model(3500.0).unwrap();
        assert_eq!(validate_model(&m).unwrap(), validate_model(&m).unwrap());
    }

    #[test]
    fn h_vanishes_at_one_and_for_gas() {
        let m = make_builtin_model(3100.0).unwrap();
        assert_eq!(m.h(1.0), 0.0);
        let gas = make_builtin_model(0.0).unwrap();
        for y in [0.5, 1.5, 2.0] {
            assert!(gas.h(y).abs() < 1e-15, "h({y}) = {}", gas.h(y));
        }
    }

    #[test]
    fn h_builtin_closed_form() {
        // h(y) = κ (y - 1)(3y + (y - 1)/2) for the built-in family
        let m = make_builtin_model(3100.0).unwrap();
        assert_relative_eq!(m.h(2.0), 20150.0, max_relative = 1e-13);
        for y in [0.7, 1.2, 1.6] {
            let s: f64 = y - 1.0;
            let closed = 3100.0 * s * (3.0 * y + 0.5 * s);
            assert_relative_eq!(m.h(y), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn h_derivatives_match_differences() {
        let m = make_builtin_model(3100.0).unwrap();
        for y in [0.6, 0.9, 1.0, 1.3] {
            assert_relative_eq!(central(|t| m.h(t), y, 1e-5), m.dh(y), max_relative = 1e-7);
            assert_relative_eq!(central(|t| m.dh(t), y, 1e-5), m.d2h(y), max_relative = 1e-7);
        }
        // h''' = 0 identically for the built-in family
        assert!(m.d3h(1.0).abs() < 1e-6);
    }

    #[test]
    fn e_zero_at_one_and_for_gas() {
        let m = make_builtin_model(3100.0).unwrap();
        assert_eq!(m.e(1.0), 0.0);
        let gas = make_builtin_model(0.0).unwrap();
        assert!(gas.e(1.3).abs() < 1e-13);
        assert!(gas.e(1.0 + 1e-5).abs() < 1e-13);
    }

    #[test]
    fn e_matches_closed_form_near_one() {
        // h = κ s (3y + s/2) gives E(y) = -7κ s / 2 with no cancellation.
        let kappa = 3100.0;
        let m = make_builtin_model(kappa).unwrap();
        for s in [1e-3, -1e-3, 5e-5, -5e-5, 2e-2] {
            let exact = -3.5 * kappa * s;
            assert_relative_eq!(m.e_at_offset(s), exact, max_relative = 1e-8);
        }
        assert_relative_eq!(m.e(1.001), -3.5 * kappa * (1.001 - 1.0), max_relative = 1e-8);
    }

    #[test]
    fn e_continuous_across_switch() {
        let m = make_builtin_model(3100.0).unwrap();
        let tol = 1e-8 * (1.0 + m.d2h(1.0).abs());
        for sign in [1.0, -1.0] {
            let inside = sign * E_TAYLOR_SWITCH * (1.0 - 1e-3);
            let outside = sign * E_TAYLOR_SWITCH * (1.0 + 1e-3);
            assert!((m.e_at_offset(inside) - m.e_taylor(inside)).abs() <= tol);
            assert!((m.e_at_offset(outside) - m.e_taylor(outside)).abs() <= tol);
        }
    }

    #[test]
    fn u_at_one_and_domain() {
        let vm = ValidatedModel::builtin(3100.0).unwrap();
        assert_eq!(vm.u(1.0).unwrap(), 0.0);
        let d = vm.delta();
        assert!(vm.u(1.0 + 0.5 * d).is_ok());
        assert!(matches!(
            vm.u(1.0 + 2.0 * d),
            Err(SolverError::DomainExit { .. })
        ));
    }

    #[test]
    fn u_gas_with_widened_domain() {
        let gas = make_builtin_model(0.0).unwrap();
        assert_relative_eq!(gas.u(1.2, 0.5).unwrap(), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn u_derivative_bound() {
        let vm = ValidatedModel::builtin(3100.0).unwrap();
        let d = vm.delta();
        let m = vm.report().m;
        let bound = 22.0 * (1.0 + m * m);
        let n = 2001;
        let step = 1e-7;
        let mut sup = 0.0_f64;
        for i in 0..n {
            let s = -d + step + (2.0 * (d - step)) * i as f64 / (n - 1) as f64;
            let du = (vm.u_at_offset(s + step) - vm.u_at_offset(s - step)) / (2.0 * step);
            sup = sup.max(du.abs());
        }
        assert!(sup <= bound, "sup|U'| = {sup} > {bound}");
    }

    #[test]
    fn v_and_k_values() {
        assert_relative_eq!(source_v(1.0, 0.0, 1.0, 1.0), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_eq!(source_v(2.0, 0.3, 1.0, 0.0), 0.0);
        let (brho, mu): (f64, f64) = (2.5, -1e-3);
        let eps = 4.0 * PI / 3.0 * brho.powf(2.0 / 3.0) + mu * brho.powf(-1.0 / 3.0);
        assert_relative_eq!(source_epsilon(brho, mu, 1.0), eps, max_relative = 1e-14);
        let k0 = source_bound_k(0.3, 0.0, 1.0);
        assert_relative_eq!(k0, 4.0 * PI / 3.0 * 0.3f64.powf(2.0 / 3.0), max_relative = 1e-14);
        assert!(source_bound_k(0.31, 0.0, 1.0) > k0);
    }

    #[test]
    fn k_minimizer_matches_golden_section() {
        let (mu, g) = (-0.001_f64, 1.0);
        let k = |r: f64| source_bound_k(r, mu, g);
        let (mut a, mut b) = (1e-9, 1.0);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if k(c) < k(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let argmin = 0.5 * (a + b);
        let rho_minus = mu.abs() / (8.0 * PI / 3.0 * g);
        assert_relative_eq!(argmin, rho_minus, max_relative = 1e-6);
        let kmin = 1.5 * mu.abs().powf(2.0 / 3.0) * (8.0 * PI / 3.0 * g).cbrt();
        assert_relative_eq!(k(rho_minus), kmin, max_relative = 1e-13);
    }

    #[test]
    fn delta_and_sandwich() {
        let vm = ValidatedModel::builtin(3100.0).unwrap();
        assert_relative_eq!(vm.delta(), 3.225_344_04e-3, max_relative = 1e-8);
        let d = vm.delta();
        let g1 = vm.d2g1();
        for i in 0..=1000 {
            let y = 1.0 - d + 2.0 * d * i as f64 / 1000.0;
            let r = vm.d2g(y) / g1;
            assert!((0.9..=1.1).contains(&r));
        }
        #[derive(Debug)]
        struct Stiff;
        impl StrainFunction for Stiff {
            fn g(&self, y: f64) -> f64 {
                y.powf(-1.0 / 3.0) + (100.0 - 4.0 / 9.0) / 2.0 * (y - 1.0).powi(2)
            }
            fn dg(&self, y: f64) -> f64 {
                -y.powf(-4.0 / 3.0) / 3.0 + (100.0 - 4.0 / 9.0) * (y - 1.0)
            }
            fn d2g(&self, y: f64) -> f64 {
                4.0 / 9.0 * y.powf(-7.0 / 3.0) + 100.0 - 4.0 / 9.0
            }
            fn d3g(&self, y: f64) -> f64 {
                -28.0 / 27.0 * y.powf(-10.0 / 3.0)
            }
            fn label(&self) -> String {
                "stiff".into()
            }
        }
        assert_relative_eq!(delta(&ConstitutiveModel::new(Stiff)), 0.1, max_relative = 1e-14);
    }

    #[test]
    fn sideris_f_values() {
        let m = make_builtin_model(3100.0).unwrap();
        assert_eq!(m.sideris_f(1.0), 1.0);
        assert!(central(|y| m.sideris_f(y), 1.0, 1e-5).abs() < 1e-6);
        let gas = make_builtin_model(0.0).unwrap();
        for y in [0.5, 1.0, 2.0] {
            assert_relative_eq!(gas.sideris_f(y), 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn residual_pressure_values() {
        assert_relative_eq!(residual_pressure(1.0), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(residual_pressure(8.0), 16.0 / 3.0, max_relative = 1e-14);
    }
}
