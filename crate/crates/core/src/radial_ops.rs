//! Radial grid, weighted cumulative integrals, the operator `L` and its
//! inverse, and reconstruction of the deformation profile from `ζ = φ''/R`.
//!
//! Cumulative integrals use product integration: `v` is interpolated linearly
//! on each cell and the weight `τ^p` is integrated exactly against it. This is
//! second-order accurate like the trapezoid rule, but it is exact for constant
//! and linear `v` at every node, including the nodes next to the origin where
//! the `R^{-3}` and `R^{-5}` prefactors of `L` and `L⁻¹` would otherwise
//! amplify the quadrature error.

use crate::error::{Result, SolverError};

/// Uniform grid `R_i = i/N` on `[0, 1]`, `N` even and at least 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadialGrid {
    intervals: usize,
}

pub const MIN_INTERVALS: usize = 16;
pub const DEFAULT_INTERVALS: usize = 512;

impl RadialGrid {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS || !intervals.is_multiple_of(2) {
            return Err(SolverError::InvalidParameter(format!(
                "grid size N must be even and >= {MIN_INTERVALS}, got {intervals}"
            )));
        }
        Ok(RadialGrid { intervals })
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes `N + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.intervals as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.intervals as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

/// Nodal values of `ζ` (or of any profile living on the same grid).
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaProfile {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl ZetaProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SolverError::InvalidParameter(format!(
                "profile has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::InvalidParameter(format!(
                "non-finite profile value at node {i}"
            )));
        }
        Ok(ZetaProfile { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        ZetaProfile {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        ZetaProfile {
            grid,
            values: grid.sample(f),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// `‖ζ‖∞ ≤ δ`.
    pub fn is_admissible(&self, delta: f64) -> bool {
        self.sup_norm() <= delta
    }
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Cumulative `m_i = ∫_0^{R_i} τ^p v(τ) dτ` with `v` linear on each cell.
pub fn moment_integral(grid: &RadialGrid, values: &[f64], p: u32) -> Vec<f64> {
    assert_eq!(values.len(), grid.len(), "values must match the grid");
    let h = grid.spacing();
    let scale = h.powi(p as i32 + 1);
    // ∫_i^{i+1} t^p (i+1-t) dt and ∫_i^{i+1} t^p (t-i) dt, expanded around t = i.
    // Every term is nonnegative, so there is no cancellation at large i.
    let binom: Vec<f64> = binomial_row(p);
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..grid.intervals() {
        let base = i as f64;
        let (mut wl, mut wr) = (0.0, 0.0);
        for (k, c) in binom.iter().enumerate() {
            let pow = base.powi((p as usize - k) as i32);
            let kf = k as f64;
            wl += c * pow / ((kf + 1.0) * (kf + 2.0));
            wr += c * pow / (kf + 2.0);
        }
        acc += scale * (wl * values[i] + wr * values[i + 1]);
        out.push(acc);
    }
    out
}

fn binomial_row(p: u32) -> Vec<f64> {
    let mut row = vec![1.0_f64];
    for k in 1..=p as usize {
        let prev = row[k - 1];
        row.push(prev * (p as usize + 1 - k) as f64 / k as f64);
    }
    row
}

/// `(Lζ)(R) = ζ(R) + (2/R³) ∫_0^R τ² ζ dτ`, with `(Lζ)(0) = (5/3) ζ(0)`.
pub fn apply_l(zeta: &ZetaProfile) -> ZetaProfile {
    let grid = zeta.grid;
    let m2 = moment_integral(&grid, &zeta.values, 2);
    let values = (0..grid.len())
        .map(|i| {
            if i == 0 {
                5.0 / 3.0 * zeta.values[0]
            } else {
                let r = grid.node(i);
                zeta.values[i] + 2.0 * m2[i] / (r * r * r)
            }
        })
        .collect();
    ZetaProfile { grid, values }
}

/// `(L⁻¹η)(R) = η(R) - (2/R⁵) ∫_0^R τ⁴ η dτ`, with `(L⁻¹η)(0) = (3/5) η(0)`.
pub fn apply_l_inverse(eta: &ZetaProfile) -> ZetaProfile {
    let grid = eta.grid;
    let m4 = moment_integral(&grid, &eta.values, 4);
    let values = (0..grid.len())
        .map(|i| {
            if i == 0 {
                0.6 * eta.values[0]
            } else {
                let r = grid.node(i);
                eta.values[i] - 2.0 * m4[i] / r.powi(5)
            }
        })
        .collect();
    ZetaProfile { grid, values }
}

/// Deformation profile `φ`, its derivative, `λ = φ/R` and `y = φ'/λ` at the nodes.
///
/// The `*_dev` fields hold the offsets from the reference state (`φ = R`,
/// `φ' = λ = y = 1`) computed directly from the moments, so they keep full
/// relative precision when `ζ` is small.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryProfile {
    pub grid: RadialGrid,
    pub f: Vec<f64>,
    pub fprime: Vec<f64>,
    pub lambda: Vec<f64>,
    pub y: Vec<f64>,
    pub f_dev: Vec<f64>,
    pub fprime_dev: Vec<f64>,
    pub lambda_dev: Vec<f64>,
    pub y_dev: Vec<f64>,
    /// `φ'(0)`.
    pub fprime0: f64,
}

impl GeometryProfile {
    /// Builds a profile from full values; offsets are recomputed by subtraction.
    pub fn from_values(
        grid: RadialGrid,
        f: Vec<f64>,
        fprime: Vec<f64>,
        lambda: Vec<f64>,
        y: Vec<f64>,
    ) -> Result<Self> {
        for v in [&f, &fprime, &lambda, &y] {
            if v.len() != grid.len() {
                return Err(SolverError::InvalidParameter(
                    "geometry columns must match the grid".into(),
                ));
            }
        }
        let f_dev = f.iter().enumerate().map(|(i, v)| v - grid.node(i)).collect();
        let fprime_dev = fprime.iter().map(|v| v - 1.0).collect();
        let lambda_dev = lambda.iter().map(|v| v - 1.0).collect();
        let y_dev = y.iter().map(|v| v - 1.0).collect();
        let fprime0 = fprime[0];
        Ok(GeometryProfile {
            grid,
            f,
            fprime,
            lambda,
            y,
            f_dev,
            fprime_dev,
            lambda_dev,
            y_dev,
            fprime0,
        })
    }

    /// `φ' - λ = λ (y - 1)`.
    pub fn stretch_gap(&self, i: usize) -> f64 {
        self.lambda[i] * self.y_dev[i]
    }
}

/// Recovers `φ` from `ζ` with `φ(0) = 0` and `φ(1) = 1`.
pub fn reconstruct_geometry(zeta: &ZetaProfile) -> Result<GeometryProfile> {
    let grid = zeta.grid;
    let n = grid.len();
    let m1 = moment_integral(&grid, &zeta.values, 1);
    let m2 = moment_integral(&grid, &zeta.values, 2);
    // φ'(0) - 1 = -∫_0^1 (1 - τ) τ ζ dτ
    let fp0_dev = -(m1[n - 1] - m2[n - 1]);
    let fprime0 = 1.0 + fp0_dev;

    let mut geo = GeometryProfile {
        grid,
        f: Vec::with_capacity(n),
        fprime: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        f_dev: Vec::with_capacity(n),
        fprime_dev: Vec::with_capacity(n),
        lambda_dev: Vec::with_capacity(n),
        y_dev: Vec::with_capacity(n),
        fprime0,
    };
    for i in 0..n {
        let r = grid.node(i);
        let fprime_dev = fp0_dev + m1[i];
        let (f_dev, lambda_dev, y_dev) = if i == 0 {
            (0.0, fp0_dev, 0.0)
        } else {
            let lambda_dev = fp0_dev + m1[i] - m2[i] / r;
            let lambda = 1.0 + lambda_dev;
            (r * lambda_dev, lambda_dev, m2[i] / (lambda * r))
        };
        let fprime = 1.0 + fprime_dev;
        let lambda = 1.0 + lambda_dev;
        if !(fprime > 0.0 && lambda > 0.0) {
            return Err(SolverError::DegenerateGeometry {
                node: i,
                fprime,
                lambda,
            });
        }
        let f = if i == n - 1 { 1.0 + f_dev } else { r + f_dev };
        geo.f.push(f);
        geo.fprime.push(fprime);
        geo.lambda.push(lambda);
        geo.y.push(1.0 + y_dev);
        geo.f_dev.push(f_dev);
        geo.fprime_dev.push(fprime_dev);
        geo.lambda_dev.push(lambda_dev);
        geo.y_dev.push(y_dev);
    }
    Ok(geo)
}

/// `y(1) = 1 + ∫_0^1 τ² ζ dτ`.
pub fn y_at_boundary(zeta: &ZetaProfile) -> f64 {
    1.0 + y_dev_at_boundary(zeta)
}

/// `y(1) - 1`.
pub fn y_dev_at_boundary(zeta: &ZetaProfile) -> f64 {
    let m2 = moment_integral(&zeta.grid, &zeta.values, 2);
    m2[zeta.grid.intervals()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> RadialGrid {
        RadialGrid::new(n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(15).is_err());
        assert!(RadialGrid::new(14).is_err());
        assert!(RadialGrid::new(17).is_err());
        let g = grid(16);
        assert_eq!(g.len(), 17);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(16), 1.0);
        assert_eq!(g.spacing(), 1.0 / 16.0);
    }

    #[test]
    fn profile_rejects_nan() {
        let g = grid(16);
        let mut v = vec![0.0; 17];
        v[3] = f64::NAN;
        assert!(ZetaProfile::new(g, v).is_err());
        assert!(ZetaProfile::new(g, vec![0.0; 5]).is_err());
    }

    #[test]
    fn moments_of_simple_functions() {
        let g = grid(64);
        let ones = vec![1.0; g.len()];
        let m2 = moment_integral(&g, &ones, 2);
        assert_eq!(m2[0], 0.0);
        assert_relative_eq!(m2[64], 1.0 / 3.0, max_relative = 1e-14);
        let lin = g.sample(|r| r);
        assert_relative_eq!(moment_integral(&g, &lin, 2)[64], 0.25, max_relative = 1e-14);
        let m4 = moment_integral(&g, &ones, 4);
        assert_relative_eq!(m4[32], 0.5f64.powi(5) / 5.0, max_relative = 1e-14);
    }

    #[test]
    fn moments_second_order_for_curved_integrand() {
        // ∫_0^1 τ² cos τ dτ = 2 cos 1 - sin 1
        let exact = 2.0 * 1f64.cos() - 1f64.sin();
        let err = |n: usize| {
            let g = grid(n);
            let v = g.sample(f64::cos);
            (moment_integral(&g, &v, 2)[n] - exact).abs()
        };
        let order = (err(64) / err(128)).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }

    #[test]
    fn l_of_constant() {
        let g = grid(512);
        let lz = apply_l(&ZetaProfile::from_fn(g, |_| 1.0));
        for v in &lz.values {
            assert!((v - 5.0 / 3.0).abs() < 1e-13);
        }
        let zero = apply_l(&ZetaProfile::zeros(g));
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn l_of_monomial() {
        let g = grid(512);
        let lz = apply_l(&ZetaProfile::from_fn(g, |r| r * r));
        assert!((lz.values[512] - 1.4).abs() < 5.0 * g.spacing().powi(2));
    }

    #[test]
    fn l_inverse_of_constant() {
        let g = grid(512);
        let li = apply_l_inverse(&ZetaProfile::from_fn(g, |_| 1.0));
        for v in &li.values {
            assert!((v - 0.6).abs() <= 1e-12);
        }
    }

    #[test]
    fn l_inverse_norm_family() {
        let g = grid(512);
        let eta = ZetaProfile::from_fn(g, |r| -1.0 + 2.0 * r.powi(20));
        let li = apply_l_inverse(&eta);
        let exact = -0.6 + 2.0 * 23.0 / 25.0;
        assert_relative_eq!(exact, 1.24, max_relative = 1e-15);
        assert!((li.values[512] - exact).abs() < 1e-3);
        let eta200 = ZetaProfile::from_fn(g, |r| -1.0 + 2.0 * r.powi(200));
        let ratio = apply_l_inverse(&eta200).sup_norm() / eta200.sup_norm();
        assert!(ratio >= 1.35 && ratio <= 1.4 + 10.0 * g.spacing(), "ratio {ratio}");
    }

    #[test]
    fn l_inverse_composes_to_identity() {
        let g = grid(512);
        let h2 = g.spacing().powi(2);
        let z = ZetaProfile::from_fn(g, |r| r * r);
        let back = apply_l_inverse(&apply_l(&z));
        assert!(sup_distance(&back.values, &z.values) <= 5.0 * h2);
    }

    #[test]
    fn geometry_of_zero() {
        let g = grid(64);
        let geo = reconstruct_geometry(&ZetaProfile::zeros(g)).unwrap();
        for i in 0..g.len() {
            assert_eq!(geo.f[i], g.node(i));
            assert_eq!(geo.lambda[i], 1.0);
            assert_eq!(geo.y[i], 1.0);
        }
        assert_eq!(geo.fprime0, 1.0);
    }

    #[test]
    fn geometry_of_constant() {
        let g = grid(128);
        let c = 0.03;
        let geo = reconstruct_geometry(&ZetaProfile::from_fn(g, |_| c)).unwrap();
        assert_relative_eq!(geo.fprime0, 1.0 - c / 6.0, max_relative = 1e-14);
        assert_relative_eq!(geo.y[128], 1.0 + c / 3.0, max_relative = 1e-14);
        assert_eq!(geo.f[128], 1.0);
        assert_eq!(geo.y[0], 1.0);
        assert_eq!(geo.lambda[0], geo.fprime0);
        // f = R f'(0) + c R³/6 exactly for constant ζ
        for i in 0..g.len() {
            let r = g.node(i);
            assert!((geo.f[i] - (r * (1.0 - c / 6.0) + c * r.powi(3) / 6.0)).abs() < 1e-15);
            assert!((geo.y[i] - geo.fprime[i] / geo.lambda[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_strain() {
        let g = grid(256);
        assert_eq!(y_at_boundary(&ZetaProfile::zeros(g)), 1.0);
        assert_relative_eq!(
            y_at_boundary(&ZetaProfile::from_fn(g, |_| 0.3)),
            1.1,
            max_relative = 1e-14
        );
        assert!((y_at_boundary(&ZetaProfile::from_fn(g, |r| r)) - 1.25).abs() < 1e-14);
        let z = ZetaProfile::from_fn(g, |r| 0.002 * (1.0 + r * r).sin());
        let geo = reconstruct_geometry(&z).unwrap();
        assert!((y_at_boundary(&z) - geo.y[256]).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_geometry_detected() {
        let g = grid(64);
        let err = reconstruct_geometry(&ZetaProfile::from_fn(g, |_| 30.0)).unwrap_err();
        assert!(matches!(err, SolverError::DegenerateGeometry { .. }));
    }
}
