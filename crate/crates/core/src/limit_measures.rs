//! Deterministic limit laws of the empirical eigenvalue distributions.
//!
//! * Gaussian: `ρ_c(x) = e^{-x²/2} / (√(2π) |f̂_c(x)|²)` with
//!   `f̂_c(x) = √(c/Γ(c)) ∫_0^∞ t^{c-1} e^{-t²/2 + ixt} dt`, evaluated by
//!   quadrature. The same measure is the spectral measure of the
//!   associated-Hermite matrix (`a_i = 0`, `b_j = √(c+j)`), which gives an
//!   independent route through the continued fraction.
//! * Laguerre: `ρ_{α,c}` is the spectral measure of `B·Bᵀ` where `B` is lower
//!   bidiagonal with diagonal `√(α+c+k)` and subdiagonal `√(c+k+1)`.
//! * Jacobi: no closed form is used; `ρ_{a,b,c}` is estimated as the mean of
//!   spectral measures of the truncated limit matrix.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::ensembles::jacobi_limit;
use crate::error::{invalid, Error, Result};
use crate::measures::{grid_points, merge_atoms, DensityGrid, DiscreteMeasure, TabulatedCdf};
use crate::quadrature::GaussRule;
use crate::sampling::RngStream;
use crate::tridiag::{density_from_cf, spectral_measure, CfTail, TridiagonalMatrix};

/// Quadrature for `f̂_c`.
///
/// `[0, δ]` with `δ = min(1, c)` uses a Gauss–Jacobi rule carrying the weight
/// `t^{c-1}`; `[δ, t_max]` uses Gauss–Legendre panels of width at most
/// `π / (4 max(1, |x|))`. `t_max` is the first point past which
/// `t^{c-1} e^{-t²/2}` stays below `1e-18` of its maximum.
#[derive(Debug, Clone)]
pub struct RhoCEvaluator {
    c: f64,
    delta: f64,
    t_max: f64,
    log_prefactor: f64,
    singular: GaussRule,
    singular_fine: GaussRule,
    panel: GaussRule,
    panel_fine: GaussRule,
    tolerance: f64,
}

const SINGULAR_NODES: usize = 40;
const PANEL_NODES: usize = 12;

impl RhoCEvaluator {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("c must be positive, got {c}"));
        }
        let delta = c.min(1.0);
        let log_peak = if c > 1.0 {
            let t = (c - 1.0).sqrt();
            (c - 1.0) * t.ln() - 0.5 * t * t
        } else {
            (c - 1.0) * delta.ln() - 0.5 * delta * delta
        };
        let cutoff = log_peak + (1e-18f64).ln();
        let mut t_max = delta.max((c - 1.0).max(0.0).sqrt()) + 1.0;
        while (c - 1.0) * t_max.ln() - 0.5 * t_max * t_max > cutoff {
            t_max += 0.25;
        }
        Ok(RhoCEvaluator {
            c,
            delta,
            t_max,
            log_prefactor: 0.5 * (c.ln() - ln_gamma(c)),
            singular: GaussRule::jacobi(SINGULAR_NODES, 0.0, c - 1.0)?,
            singular_fine: GaussRule::jacobi(SINGULAR_NODES + 16, 0.0, c - 1.0)?,
            panel: GaussRule::legendre(PANEL_NODES)?,
            panel_fine: GaussRule::legendre(PANEL_NODES + 6)?,
            tolerance: 1e-9,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn raw_integral(&self, x: f64, singular: &GaussRule, panel: &GaussRule) -> Complex64 {
        let integrand = |t: f64| Complex64::from_polar((-0.5 * t * t).exp(), x * t);
        // [0, δ]: ∫ t^{c-1} g(t) dt = (δ/2)^c ∫ (1+s)^{c-1} g(δ(1+s)/2) ds.
        let half = 0.5 * self.delta;
        let mut head = Complex64::new(0.0, 0.0);
        for (s, w) in singular.nodes.iter().zip(&singular.weights) {
            head += *w * integrand(half * (1.0 + s));
        }
        head *= half.powf(self.c);

        let width_cap = std::f64::consts::PI / (4.0 * x.abs().max(1.0));
        let span = self.t_max - self.delta;
        let panels = (span / width_cap).ceil().max(1.0) as usize;
        let h = span / panels as f64;
        let mut tail = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let lo = self.delta + p as f64 * h;
            let mid = lo + 0.5 * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, w) in panel.nodes.iter().zip(&panel.weights) {
                let t = mid + 0.5 * h * s;
                acc += *w * t.powf(self.c - 1.0) * integrand(t);
            }
            tail += acc * (0.5 * h);
        }
        head + tail
    }

    /// `f̂_c(x)` with an error estimate from a refined rule.
    pub fn f_hat_with_error(&self, x: f64) -> (Complex64, f64) {
        let coarse = self.raw_integral(x, &self.singular, &self.panel);
        let fine = self.raw_integral(x, &self.singular_fine, &self.panel_fine);
        let pre = self.log_prefactor.exp();
        (fine * pre, (fine - coarse).norm() * pre)
    }

    pub fn f_hat(&self, x: f64) -> Result<Complex64> {
        let (value, err) = self.f_hat_with_error(x);
        let tol = self.tolerance * value.norm().max(1e-300);
        if !(err <= tol) {
            return Err(Error::Accuracy { estimate: err, tolerance: tol });
        }
        Ok(value)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        let f = self.f_hat(x)?;
        Ok((-0.5 * x * x).exp() / ((2.0 * std::f64::consts::PI).sqrt() * f.norm_sqr()))
    }

    /// Tabulate `ρ_c` on a uniform grid.
    pub fn grid(&self, x_min: f64, x_max: f64, n_points: usize) -> Result<DensityGrid> {
        let xs: Vec<f64> = grid_points(x_min, x_max, n_points).collect();
        let values = xs.par_iter().map(|&x| self.density(x)).collect::<Result<Vec<_>>>()?;
        DensityGrid::new(x_min, x_max, values)
    }
}

pub fn f_hat_c(x: f64, c: f64) -> Result<Complex64> {
    RhoCEvaluator::new(c)?.f_hat(x)
}

pub fn rho_c_density(x: f64, c: f64) -> Result<f64> {
    RhoCEvaluator::new(c)?.density(x)
}

/// Grid range carrying all but a negligible part of `ρ_c`.
pub fn rho_c_support(c: f64) -> (f64, f64) {
    let r = 12.0 + 2.0 * c.sqrt();
    (-r, r)
}

/// `ρ_c` tabulated over [`rho_c_support`] with spacing close to `step`.
pub fn rho_c_grid(c: f64, step: f64) -> Result<DensityGrid> {
    let (lo, hi) = rho_c_support(c);
    RhoCEvaluator::new(c)?.grid(lo, hi, points_for(hi - lo, step)?)
}

pub fn rho_c_cdf(c: f64, step: f64) -> Result<TabulatedCdf> {
    TabulatedCdf::from_density(&rho_c_grid(c, step)?)
}

fn points_for(span: f64, step: f64) -> Result<usize> {
    if !(step > 0.0 && step < span) {
        return invalid(format!("grid step must lie in (0, {span}), got {step}"));
    }
    Ok((span / step).round() as usize + 1)
}

/// Associated-Hermite Jacobi matrix: `a_i = 0`, `b_j = √(c+j)`.
pub fn assoc_hermite_matrix(c: f64, depth: usize) -> Result<TridiagonalMatrix> {
    if !(c > 0.0) || depth == 0 {
        return invalid("assoc_hermite_matrix needs c > 0 and depth >= 1");
    }
    TridiagonalMatrix::new(vec![0.0; depth], (1..depth).map(|j| (c + j as f64).sqrt()).collect())
}

/// Associated-Laguerre (Model II) matrix `B·Bᵀ`, truncated.
pub fn assoc_laguerre_matrix(alpha: f64, c: f64, depth: usize) -> Result<TridiagonalMatrix> {
    if !(alpha > 0.0 && c > 0.0) || depth == 0 {
        return invalid("assoc_laguerre_matrix needs alpha, c > 0 and depth >= 1");
    }
    let d: Vec<f64> = (0..depth).map(|k| (alpha + c + k as f64).sqrt()).collect();
    let e: Vec<f64> = (1..depth).map(|k| (c + k as f64).sqrt()).collect();
    TridiagonalMatrix::from_lower_bidiagonal(&d, &e)
}

/// Continued-fraction density of a deterministic matrix with the
/// self-consistent tail taken from its last entries.
pub fn cf_density(j: &TridiagonalMatrix, x_min: f64, x_max: f64, n_points: usize, epsilon: f64) -> Result<DensityGrid> {
    density_from_cf(j, (x_min, x_max, n_points), epsilon, CfTail::from_last_entries(j))
}

/// Default truncation depth for the deterministic matrices.
pub const DEFAULT_DEPTH: usize = 400;

/// Upper end of the grid used for `ρ_{α,c}`.
pub fn laguerre_support_max(alpha: f64, c: f64) -> f64 {
    40.0 + 4.0 * (alpha + c)
}

/// Piecewise-linear CDF through the midpoints of the jumps of an atomic
/// measure, pinned to 0 at `lo` and 1 just past the last atom. For a Gauss
/// rule of a measure with a density, the true CDF at each node lies inside
/// the jump, so the error is at most half the local weight.
pub fn midpoint_cdf(m: &DiscreteMeasure, lo: f64) -> Result<TabulatedCdf> {
    if !(lo < m.min_location()) {
        return invalid("lower end must lie below every atom");
    }
    let mut xs = vec![lo];
    let mut cdf = vec![0.0];
    let mut below = 0.0;
    for (x, w) in m.atoms() {
        xs.push(x);
        cdf.push(below + 0.5 * w);
        below += w;
    }
    let last = m.max_location();
    xs.push(last + last.abs().max(1.0) * 1e-9);
    cdf.push(1.0);
    TabulatedCdf::new(xs, cdf)
}

/// Gauss rule of the Model II matrix at depth 2000.
pub const LAGUERRE_RULE_DEPTH: usize = 2000;

/// `ρ_{α,c}` as a CDF table, from the Gauss rule of the Model II matrix.
pub fn rho_alpha_c_cdf(alpha: f64, c: f64) -> Result<TabulatedCdf> {
    let sp = spectral_measure(&assoc_laguerre_matrix(alpha, c, LAGUERRE_RULE_DEPTH)?)?;
    midpoint_cdf(&sp, 0.0)
}

/// Density of a CDF table on a uniform grid, by differencing the table
/// across each grid cell.
pub fn density_on_grid(table: &TabulatedCdf, lo: f64, hi: f64, n_points: usize) -> Result<DensityGrid> {
    if n_points < 2 || !(lo < hi) {
        return invalid("density grid needs lo < hi and at least two points");
    }
    let h = (hi - lo) / (n_points - 1) as f64;
    let values = grid_points(lo, hi, n_points)
        .map(|x| {
            let (l, r) = ((x - 0.5 * h).max(lo), (x + 0.5 * h).min(hi));
            (table.cdf(r) - table.cdf(l)) / (r - l)
        })
        .collect();
    DensityGrid::new(lo, hi, values)
}

/// [`rho_alpha_c_cdf`] as a density on `[0, laguerre_support_max]`.
pub fn rho_alpha_c_grid(alpha: f64, c: f64, step: f64) -> Result<DensityGrid> {
    let hi = laguerre_support_max(alpha, c);
    density_on_grid(&rho_alpha_c_cdf(alpha, c)?, 0.0, hi, points_for(hi, step)?)
}

/// Monte Carlo estimate of `ρ_{a,b,c}` as the mean of spectral measures of
/// truncated `J_{a,b,c}` matrices.
#[derive(Debug, Clone)]
pub struct RhoAbcEstimate {
    /// Equal-weight mixture of the sampled spectral measures.
    pub measure: DiscreteMeasure,
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub cdf_se: Vec<f64>,
    pub mean: f64,
    pub mean_se: f64,
    pub trials: usize,
}

impl RhoAbcEstimate {
    /// Central-difference density from the averaged CDF on the grid.
    pub fn density(&self) -> Result<DensityGrid> {
        let n = self.grid.len();
        let h = self.grid[1] - self.grid[0];
        let values = (0..n)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
                ((self.cdf[hi] - self.cdf[lo]) / ((hi - lo) as f64 * h)).max(0.0)
            })
            .collect();
        DensityGrid::new(self.grid[0], self.grid[n - 1], values)
    }

    pub fn cdf_table(&self) -> Result<TabulatedCdf> {
        TabulatedCdf::new(self.grid.clone(), self.cdf.clone())
    }
}

pub fn rho_abc_estimate(
    rng: &RngStream,
    a: f64,
    b: f64,
    c: f64,
    depth: usize,
    trials: usize,
    grid_points_count: usize,
) -> Result<RhoAbcEstimate> {
    if trials < 100 {
        return invalid("rho_abc_estimate needs at least 100 trials");
    }
    if grid_points_count < 2 {
        return invalid("CDF grid needs at least two points");
    }
    let measures = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.split(t);
            spectral_measure(&jacobi_limit(&mut r, a, b, c, depth)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let grid: Vec<f64> = grid_points(0.0, 1.0, grid_points_count).collect();
    let per_trial: Vec<Vec<f64>> = measures
        .par_iter()
        .map(|m| grid.iter().map(|&x| m.cdf(x)).collect())
        .collect();
    let tn = trials as f64;
    let mut cdf = vec![0.0; grid.len()];
    let mut cdf_se = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let mean = per_trial.iter().map(|row| row[i]).sum::<f64>() / tn;
        let var = per_trial.iter().map(|row| (row[i] - mean).powi(2)).sum::<f64>() / (tn - 1.0);
        cdf[i] = mean;
        cdf_se[i] = (var / tn).sqrt();
    }
    let means: Vec<f64> = measures.iter().map(|m| m.mean()).collect();
    let mean = means.iter().sum::<f64>() / tn;
    let mean_se = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (tn - 1.0) / tn).sqrt();

    let pooled = merge_atoms(
        measures
            .iter()
            .flat_map(|m| m.atoms().map(move |(x, w)| (x, w / tn))),
    )?;
    Ok(RhoAbcEstimate {
        measure: pooled,
        grid,
        cdf,
        cdf_se,
        mean,
        mean_se,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::integrate_density;
    use crate::tridiag::moment;

    #[test]
    fn f_hat_symmetry_and_value() {
        let v = f_hat_c(0.0, 1.0).unwrap();
        assert!((v.re - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-14);
        for c in [0.3, 1.0, 2.7] {
            for x in [0.5, 2.0, 7.0] {
                let p = f_hat_c(x, c).unwrap();
                let m = f_hat_c(-x, c).unwrap();
                assert!((p.conj() - m).norm() < 1e-12 * p.norm());
            }
        }
    }

    #[test]
    fn rejects_bad_c() {
        assert!(f_hat_c(0.0, 0.0).is_err());
        assert!(RhoCEvaluator::new(-1.0).is_err());
    }

    #[test]
    fn rho_c_even_and_normalized() {
        let ev = RhoCEvaluator::new(1.0).unwrap();
        for x in [0.3, 1.7, 4.0] {
            let (p, m) = (ev.density(x).unwrap(), ev.density(-x).unwrap());
            assert!((p - m).abs() < 1e-14 * p);
        }
        let g = ev.grid(-10.0, 10.0, 2001).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-5, "mass {}", g.mass());
        assert!((integrate_density(&g, |x| x * x).unwrap() - 2.0).abs() < 1e-4);
        assert!((integrate_density(&g, |x| x.powi(4)).unwrap() - 10.0).abs() < 1e-3);
    }

    #[test]
    fn rho_c_matches_cf_route_at_one() {
        let ev = RhoCEvaluator::new(1.0).unwrap();
        let j = assoc_hermite_matrix(1.0, 400).unwrap();
        let cf = cf_density(&j, 1.0, 2.0, 2, 1e-5).unwrap();
        let (a, b) = (ev.density(1.0).unwrap(), cf.values[0]);
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn deterministic_matrices() {
        let h = assoc_hermite_matrix(1.0, 5).unwrap();
        assert!((h.offdiag()[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((h.offdiag()[1] - 3f64.sqrt()).abs() < 1e-15);
        assert!((moment(&h, 2) - 2.0).abs() < 1e-14);

        let l = assoc_laguerre_matrix(1.0, 1.0, 200).unwrap();
        assert!((l.diag()[0] - 2.0).abs() < 1e-14);
        assert!((l.diag()[1] - 5.0).abs() < 1e-14);
        assert!((l.offdiag()[0] - 2.0).abs() < 1e-14);
        let sp = spectral_measure(&l).unwrap();
        assert!((sp.mean() - 2.0).abs() < 1e-8);
        assert!(sp.min_location() > -1e-10);

        let table = rho_alpha_c_cdf(1.0, 1.0).unwrap();
        let coarse = midpoint_cdf(&spectral_measure(&assoc_laguerre_matrix(1.0, 1.0, 500).unwrap()).unwrap(), 0.0).unwrap();
        for x in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            assert!((table.cdf(x) - coarse.cdf(x)).abs() < 5e-3, "{x}");
        }
        let g = rho_alpha_c_grid(1.0, 1.0, 0.01).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-3, "{}", g.mass());
    }

    #[test]
    fn rho_abc_estimate_basic() {
        let rng = RngStream::new(3);
        let est = rho_abc_estimate(&rng, 1.0, 1.0, 1.0, 50, 400, 101).unwrap();
        assert!((est.cdf[100] - 1.0).abs() < 1e-12);
        assert!((est.mean - 0.5).abs() < 3.0 * est.mean_se, "{} ± {}", est.mean, est.mean_se);
        let total: f64 = est.measure.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(rho_abc_estimate(&rng, 1.0, 1.0, 1.0, 50, 99, 101).is_err());
    }
}
