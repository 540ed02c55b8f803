//! The amplitude equation `q² q̈ = μ`, `q(0) = 1`, and assembly of the full
//! motion `x = q(t) φ(R)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::shooting::SolutionProfile;

/// Threshold on `|e_eff|` below which the energy counts as zero.
pub const E_EFF_ZERO_TOL: f64 = 1e-14;
pub const Q_MIN_STOP: f64 = 1e-6;
/// Substep as a fraction of the local time scale `min(q/|q̇|, (q³/|μ|)^{1/2})`.
pub const ADAPTIVE_FACTOR: f64 = 1e-3;
pub const COLLAPSE_THRESHOLDS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Passage levels for the exponent fit.
const FIT_LEVELS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LinearExpanding,
    SelfSimilarExpanding,
    Stationary,
    Collapsing,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::LinearExpanding => "linear-expanding",
            Regime::SelfSimilarExpanding => "self-similar-expanding",
            Regime::Stationary => "stationary",
            Regime::Collapsing => "collapsing",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the samples were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `q = 1 + q̇(0) t`.
    FreeMotion,
    /// `q = (1 + 3/2 q̇(0) t)^{2/3}`.
    SelfSimilar,
    Rk4,
}

pub fn effective_energy(mu: f64, qdot0: f64) -> f64 {
    0.5 * qdot0 * qdot0 + mu
}

pub fn energy(mu: f64, q: f64, qdot: f64) -> f64 {
    0.5 * qdot * qdot + mu / q
}

pub fn classify(mu: f64, qdot0: f64) -> Regime {
    let e = effective_energy(mu, qdot0);
    if e.abs() <= E_EFF_ZERO_TOL {
        if qdot0 > 0.0 {
            Regime::SelfSimilarExpanding
        } else if qdot0 == 0.0 {
            Regime::Stationary
        } else {
            Regime::Collapsing
        }
    } else if e > 0.0 {
        Regime::LinearExpanding
    } else {
        Regime::Collapsing
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub q_min_stop: f64,
    /// Defaults to `1e-8 (1 + |e_eff|)`.
    pub energy_tol: Option<f64>,
    /// Use `f64::INFINITY` for fixed steps of `dt`.
    pub adaptive_factor: f64,
    /// Use closed forms where available.
    pub closed_forms: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            q_min_stop: Q_MIN_STOP,
            energy_tol: None,
            adaptive_factor: ADAPTIVE_FACTOR,
            closed_forms: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSolution {
    pub mu: f64,
    pub qdot0: f64,
    pub e_eff: f64,
    pub regime: Regime,
    pub method: Method,
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// `½q̇² + μ/q - e_eff` at each sample.
    pub energy_drift: Vec<f64>,
    pub max_drift: f64,
    /// True when the run ended at `q < q_min_stop` before `t_end`.
    pub stopped_at_min: bool,
    /// Filled in by callers that run [`collapse_time`].
    pub collapse_time: Option<f64>,
}

impl TemporalSolution {
    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("at least one sample")
    }

    /// `(q, q̇)` at `t`: exact for closed forms, cubic Hermite between samples otherwise.
    pub fn state_at(&self, t: f64) -> Result<(f64, f64)> {
        let t_max = self.t_max();
        if !(t >= 0.0 && t <= t_max) {
            return Err(SolverError::OutOfRange { t, t_min: 0.0, t_max });
        }
        match self.method {
            Method::FreeMotion => Ok((1.0 + self.qdot0 * t, self.qdot0)),
            Method::SelfSimilar => Ok(self_similar(self.qdot0, t)),
            Method::Rk4 => {
                let j = self.t.partition_point(|&s| s <= t).clamp(1, self.t.len() - 1);
                let (t0, t1) = (self.t[j - 1], self.t[j]);
                if t1 == t0 {
                    return Ok((self.q[j], self.qdot[j]));
                }
                let h = t1 - t0;
                let s = (t - t0) / h;
                let (q0, q1) = (self.q[j - 1], self.q[j]);
                let (m0, m1) = (self.qdot[j - 1] * h, self.qdot[j] * h);
                let s2 = s * s;
                let s3 = s2 * s;
                let q = (2.0 * s3 - 3.0 * s2 + 1.0) * q0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * q1
                    + (s3 - s2) * m1;
                let dq = ((6.0 * s2 - 6.0 * s) * q0
                    + (3.0 * s2 - 4.0 * s + 1.0) * m0
                    + (-6.0 * s2 + 6.0 * s) * q1
                    + (3.0 * s2 - 2.0 * s) * m1)
                    / h;
                Ok((q, dq))
            }
        }
    }
}

fn self_similar(qdot0: f64, t: f64) -> (f64, f64) {
    let base = 1.0 + 1.5 * qdot0 * t;
    (base.powf(2.0 / 3.0), qdot0 / base.cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    q: f64,
    v: f64,
}

fn rk4_step(mu: f64, s: State, h: f64) -> State {
    let acc = |q: f64| mu / (q * q);
    let (k1q, k1v) = (s.v, acc(s.q));
    let (k2q, k2v) = (s.v + 0.5 * h * k1v, acc(s.q + 0.5 * h * k1q));
    let (k3q, k3v) = (s.v + 0.5 * h * k2v, acc(s.q + 0.5 * h * k2q));
    let (k4q, k4v) = (s.v + h * k3v, acc(s.q + h * k3q));
    State {
        q: s.q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        v: s.v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    }
}

fn local_scale(mu: f64, s: State) -> f64 {
    let drift = if s.v != 0.0 { s.q / s.v.abs() } else { f64::INFINITY };
    let fall = if mu != 0.0 { (s.q.powi(3) / mu.abs()).sqrt() } else { f64::INFINITY };
    drift.min(fall)
}

/// Fixed-step classical RK4 from `(1, q̇(0))` to `t_end`; returns `(q, q̇)`.
pub fn integrate_rk4(mu: f64, qdot0: f64, t_end: f64, dt: f64) -> (f64, f64) {
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut s = State { q: 1.0, v: qdot0 };
    for _ in 0..steps {
        s = rk4_step(mu, s, h);
    }
    (s.q, s.v)
}

pub fn evolve_q(mu: f64, qdot0: f64, t_end: f64, dt: f64) -> Result<TemporalSolution> {
    evolve_q_with(mu, qdot0, t_end, dt, &EvolveOptions::default())
}

pub fn evolve_q_with(
    mu: f64,
    qdot0: f64,
    t_end: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<TemporalSolution> {
    for (name, v) in [("dt", dt), ("t_end", t_end)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(mu.is_finite() && qdot0.is_finite()) {
        return Err(SolverError::InvalidParameter("mu and qdot0 must be finite".into()));
    }
    let e_eff = effective_energy(mu, qdot0);
    let regime = classify(mu, qdot0);
    let tol = opts.energy_tol.unwrap_or(1e-8 * (1.0 + e_eff.abs()));
    let method = if !opts.closed_forms {
        Method::Rk4
    } else if mu == 0.0 {
        Method::FreeMotion
    } else if e_eff.abs() <= E_EFF_ZERO_TOL {
        Method::SelfSimilar
    } else {
        Method::Rk4
    };

    let steps = (t_end / dt).ceil() as usize;
    let mut sol = TemporalSolution {
        mu,
        qdot0,
        e_eff,
        regime,
        method,
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        qdot: Vec::with_capacity(steps + 1),
        energy_drift: Vec::with_capacity(steps + 1),
        max_drift: 0.0,
        stopped_at_min: false,
        collapse_time: None,
    };
    let record = |sol: &mut TemporalSolution, t: f64, s: State| -> Result<()> {
        let drift = energy(mu, s.q, s.v) - e_eff;
        sol.t.push(t);
        sol.q.push(s.q);
        sol.qdot.push(s.v);
        sol.energy_drift.push(drift);
        sol.max_drift = sol.max_drift.max(drift.abs());
        if drift.abs() > tol {
            return Err(SolverError::StepSizeTooLarge { drift, tolerance: tol, t });
        }
        Ok(())
    };

    let mut s = State { q: 1.0, v: qdot0 };
    let mut t = 0.0;
    record(&mut sol, t, s)?;
    for j in 1..=steps {
        let target = (j as f64 * dt).min(t_end);
        match method {
            Method::FreeMotion => {
                s = State { q: 1.0 + qdot0 * target, v: qdot0 };
                t = target;
            }
            Method::SelfSimilar => {
                let base = 1.0 + 1.5 * qdot0 * target;
                if base <= 0.0 {
                    // past the collapse instant
                    s.q = 0.0;
                } else {
                    let (q, v) = self_similar(qdot0, target);
                    s = State { q, v };
                    t = target;
                }
            }
            Method::Rk4 => {
                while t < target && s.q >= opts.q_min_stop {
                    let h = (target - t).min(opts.adaptive_factor * local_scale(mu, s));
                    let next = rk4_step(mu, s, h);
                    if !(next.q > 0.0) {
                        return Err(SolverError::StepSizeTooLarge {
                            drift: f64::INFINITY,
                            tolerance: tol,
                            t,
                        });
                    }
                    s = next;
                    t = if target - t <= h { target } else { t + h };
                }
            }
        }
        if s.q < opts.q_min_stop {
            sol.stopped_at_min = true;
            if s.q > 0.0 && t > *sol.t.last().unwrap() {
                record(&mut sol, t, s)?;
            }
            break;
        }
        record(&mut sol, t, s)?;
    }
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseEstimate {
    /// Extrapolated collapse time `T`.
    pub time: f64,
    /// Fitted `α` in `q ≈ c (T - t)^α`.
    pub exponent: f64,
    /// Fitted `c`; diagnostic only.
    pub prefactor: f64,
    /// First-passage times at [`COLLAPSE_THRESHOLDS`].
    pub passage_times: Vec<f64>,
}

/// Integrates with shrinking steps until each level in `levels` (decreasing)
/// is crossed and returns the first-passage times.
fn passage_times(mu: f64, qdot0: f64, dt: f64, levels: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(levels.len());
    let mut s = State { q: 1.0, v: qdot0 };
    let mut t = 0.0;
    let mut steps: u64 = 0;
    for &level in levels {
        loop {
            let h = dt.min(ADAPTIVE_FACTOR * local_scale(mu, s));
            let next = rk4_step(mu, s, h);
            steps += 1;
            if steps > 100_000_000 {
                return Err(SolverError::InvalidParameter("collapse not reached".into()));
            }
            if next.q <= level {
                // bisect the step length that lands on the level
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if rk4_step(mu, s, mid).q > level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(t + 0.5 * (lo + hi));
                // continue from the landing point
                s = rk4_step(mu, s, lo);
                t += lo;
                break;
            }
            s = next;
            t += h;
        }
    }
    Ok(out)
}

/// Collapse time by extrapolation of first-passage times and the local rate
/// exponent fitted over `q ∈ [1e-4, 1e-3]`.
pub fn collapse_time(mu: f64, qdot0: f64, dt: f64) -> Result<CollapseEstimate> {
    let e_eff = effective_energy(mu, qdot0);
    if classify(mu, qdot0) != Regime::Collapsing {
        return Err(SolverError::NotCollapsing { e_eff, qdot0 });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut levels: Vec<f64> = COLLAPSE_THRESHOLDS[..1].to_vec();
    let fit_levels: Vec<f64> = (0..FIT_LEVELS)
        .map(|k| 10f64.powf(-3.0 - k as f64 / (FIT_LEVELS - 1) as f64))
        .collect();
    levels.extend_from_slice(&fit_levels);
    let times = passage_times(mu, qdot0, dt, &levels)?;
    let at = |q: f64| {
        let k = levels.iter().position(|&l| l == q).expect("level present");
        times[k]
    };
    let passage: Vec<f64> = COLLAPSE_THRESHOLDS.iter().map(|&q| at(q)).collect();

    // t = T - a x - b x^{5/3} with x = q^{3/2}
    let rows: Vec<[f64; 4]> = COLLAPSE_THRESHOLDS
        .iter()
        .zip(&passage)
        .map(|(&q, &t)| {
            let x = q.powf(1.5);
            [1.0, -x, -x.powf(5.0 / 3.0), t]
        })
        .collect();
    let time = solve3(&rows)[0];

    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let n = fit_levels.len() as f64;
    for (k, &q) in fit_levels.iter().enumerate() {
        let x = (time - times[k + 1]).ln();
        let y = q.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let prefactor = ((sy - exponent * sx) / n).exp();
    Ok(CollapseEstimate { time, exponent, prefactor, passage_times: passage })
}

/// Gaussian elimination with partial pivoting on a 3×3 augmented system.
fn solve3(rows: &[[f64; 4]]) -> [f64; 3] {
    let mut m = [rows[0], rows[1], rows[2]];
    for c in 0..3 {
        let p = (c..3)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        m.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let mut v = m[c][3];
        for k in c + 1..3 {
            v -= m[c][k] * x[k];
        }
        x[c] = v / m[c][c];
    }
    x
}

/// Eulerian fields of the motion at one instant, indexed by reference node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFields {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    /// Deformed radius `q φ(R)`.
    pub phi: Vec<f64>,
    /// Radial velocity `q̇ φ(R)`.
    pub u: Vec<f64>,
    /// Density `ρ̄ / (q³ φ' λ²)`.
    pub rho: Vec<f64>,
}

pub fn assemble_motion(
    solution: &SolutionProfile,
    temporal: &TemporalSolution,
    t: f64,
) -> Result<RadialFields> {
    let (q, qdot) = temporal.state_at(t)?;
    if !(q > 0.0) {
        return Err(SolverError::OutOfRange { t, t_min: 0.0, t_max: temporal.t_max() });
    }
    let geo = &solution.geometry;
    let brho = solution.params.brho;
    let q3 = q.powi(3);
    Ok(RadialFields {
        t,
        q,
        qdot,
        phi: geo.f.iter().map(|f| q * f).collect(),
        u: geo.f.iter().map(|f| qdot * f).collect(),
        rho: geo
            .fprime
            .iter()
            .zip(&geo.lambda)
            .map(|(fp, l)| brho / (q3 * fp * l * l))
            .collect(),
    })
}

/// `∫ ρ 4π r² dr` over the deformed ball, by Simpson's rule in reference coordinates.
pub fn total_mass(solution: &SolutionProfile, fields: &RadialFields) -> f64 {
    let grid = solution.grid;
    let geo = &solution.geometry;
    let n = grid.intervals();
    let integrand = |i: usize| {
        let r = fields.phi[i];
        fields.rho[i] * 4.0 * PI * r * r * fields.q * geo.fprime[i]
    };
    let mut sum = integrand(0) + integrand(n);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i);
    }
    sum * grid.spacing() / 3.0
}
