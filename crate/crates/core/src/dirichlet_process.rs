//! Dirichlet processes by stick-breaking, Dirichlet-weighted spectral
//! measures, and both sides of the Markov–Krein relation
//! `E[(z - ⟨P,f⟩)^{-c}] = exp(-c ∫ Log(z - f(u)) dα(u))`.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measures::{integrate_density, merge_atoms, neumaier_sum, DensityGrid, DiscreteMeasure, TabulatedCdf};
use crate::sampling::{sample_dirichlet, sample_dirichlet_symmetric, RngStream};

/// Default leftover mass below which stick-breaking stops.
pub const DEFAULT_MASS_TOL: f64 = 1e-8;

/// Base distribution of a Dirichlet process.
#[derive(Debug, Clone)]
pub enum Base {
    Atoms { measure: DiscreteMeasure, cumulative: Vec<f64> },
    Density { grid: DensityGrid, table: TabulatedCdf },
}

impl Base {
    pub fn atoms(measure: DiscreteMeasure) -> Base {
        let mut acc = 0.0;
        let cumulative = measure
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Base::Atoms { measure, cumulative }
    }

    pub fn density(grid: DensityGrid) -> Result<Base> {
        let table = TabulatedCdf::from_density(&grid)?;
        Ok(Base::Density { grid, table })
    }

    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            Base::Atoms { measure, cumulative } => {
                let u = rng.uniform() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                measure.locations()[i]
            }
            Base::Density { table, .. } => table.quantile(rng.uniform_open()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Base::Atoms { measure, .. } => measure.cdf(x),
            Base::Density { table, .. } => table.cdf(x),
        }
    }

    /// `∫ g dα` by atom sum or normalized trapezoid rule.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        match self {
            Base::Atoms { measure, .. } => Ok(measure.integrate(g)),
            Base::Density { grid, .. } => Ok(integrate_density(grid, g)? / grid.mass()),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Base::Atoms { .. })
    }
}

/// Registered test functions. Only `Identity` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Arctan,
    /// `x / (1 + x²)`.
    Rational,
    /// Logistic step `1 / (1 + e^{-(x - center)/width})`.
    Step { center: f64, width: f64 },
    /// Identity clamped to `[lo, hi]`.
    Clip { lo: f64, hi: f64 },
    Identity,
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Arctan => x.atan(),
            TestFunction::Rational => x / (1.0 + x * x),
            TestFunction::Step { center, width } => 0.5 * (1.0 + (0.5 * (x - center) / width).tanh()),
            TestFunction::Clip { lo, hi } => x.clamp(lo, hi),
            TestFunction::Identity => x,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, TestFunction::Identity)
    }

    pub fn name(&self) -> String {
        match *self {
            TestFunction::Arctan => "arctan".into(),
            TestFunction::Rational => "rational".into(),
            TestFunction::Step { center, width } => format!("step:{center}:{width}"),
            TestFunction::Clip { lo, hi } => format!("clip:{lo}:{hi}"),
            TestFunction::Identity => "id".into(),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `arctan`, `rational`, `step[:center:width]`, `clip[:lo:hi]`, `id`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let args = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{p}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let pair = |default: (f64, f64)| match args.len() {
            0 => Ok(default),
            2 => Ok((args[0], args[1])),
            _ => invalid(format!("`{s}` takes zero or two parameters")),
        };
        let f = match head {
            "arctan" => TestFunction::Arctan,
            "rational" => TestFunction::Rational,
            "step" => {
                let (center, width) = pair((0.0, 0.1))?;
                if !(width > 0.0) {
                    return invalid("step width must be positive");
                }
                TestFunction::Step { center, width }
            }
            "clip" => {
                let (lo, hi) = pair((-1.0, 1.0))?;
                if !(lo < hi) {
                    return invalid("clip needs lo < hi");
                }
                TestFunction::Clip { lo, hi }
            }
            "id" | "identity" => TestFunction::Identity,
            other => return invalid(format!("unknown test function `{other}`")),
        };
        if matches!(f, TestFunction::Arctan | TestFunction::Rational | TestFunction::Identity) && !args.is_empty() {
            return invalid(format!("`{head}` takes no parameters"));
        }
        Ok(f)
    }
}

/// Evaluation point, parameter and test function of the relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MkrQuery {
    pub z: Complex64,
    pub c: f64,
    pub f: TestFunction,
}

impl MkrQuery {
    /// Real `z` is accepted here and rejected later unless it lies above
    /// every value of `f` on an atomic base.
    pub fn new(z: Complex64, c: f64, f: TestFunction) -> Result<Self> {
        if !z.is_finite() {
            return invalid(format!("z must be finite, got {z}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("c must be positive, got {c}"));
        }
        Ok(MkrQuery { z, c, f })
    }
}

/// `w^{-c}` on the principal branch.
pub fn principal_power(w: Complex64, c: f64) -> Complex64 {
    (-c * w.ln()).exp()
}

/// Unbounded functions are admitted for atomic bases, where the
/// integrability condition holds trivially, or when explicitly allowed.
pub fn check_admissible(f: &TestFunction, base: &Base, allow_unbounded: bool) -> Result<()> {
    if f.is_bounded() || base.is_atomic() || allow_unbounded {
        Ok(())
    } else {
        invalid(format!(
            "test function `{}` is unbounded; pass the unbounded flag to accept the integrability condition",
            f.name()
        ))
    }
}

#[derive(Debug, Clone)]
pub struct DpSample {
    pub measure: DiscreteMeasure,
    /// Stick mass that was lumped onto the final atom.
    pub truncation_mass_error: f64,
}

fn check_dp_args(c: f64, mass_tol: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("c must be positive, got {c}"));
    }
    if !(mass_tol > 0.0 && mass_tol < 1.0) {
        return invalid(format!("mass tolerance must lie in (0, 1), got {mass_tol}"));
    }
    Ok(())
}

/// Sticks `V_i ~ Beta(1, c)` by inversion, calling `visit(weight)` for each
/// stick and once more for the leftover mass, which is returned.
fn stick_breaking(rng: &mut RngStream, c: f64, mass_tol: f64, mut visit: impl FnMut(&mut RngStream, f64)) -> f64 {
    let mut remaining = 1.0f64;
    while remaining >= mass_tol {
        let log_keep = rng.uniform_open().ln() / c;
        visit(rng, -remaining * log_keep.exp_m1());
        remaining *= log_keep.exp();
    }
    visit(rng, remaining);
    remaining
}

/// Truncated stick-breaking draw of `DP(base, c)`.
pub fn dp_sample(rng: &mut RngStream, base: &Base, c: f64, mass_tol: f64) -> Result<DpSample> {
    check_dp_args(c, mass_tol)?;
    let mut atoms = Vec::new();
    let leftover = stick_breaking(rng, c, mass_tol, |r, w| atoms.push((base.draw(r), w)));
    Ok(DpSample {
        measure: merge_atoms(atoms)?,
        truncation_mass_error: leftover,
    })
}

/// `⟨P, f⟩` for one draw `P ~ DP(base, c)` without building the measure.
pub fn dp_functional(rng: &mut RngStream, base: &Base, c: f64, mass_tol: f64, f: &TestFunction) -> Result<f64> {
    check_dp_args(c, mass_tol)?;
    let mut acc = 0.0;
    stick_breaking(rng, c, mass_tol, |r, w| acc += w * f.eval(base.draw(r)));
    Ok(acc)
}

/// `Σ w_i δ_{λ_i}` with `w ~ Dir(c/N, …, c/N)` drawn independently of `λ`.
pub fn assemble_spectral_measure(rng: &mut RngStream, eigenvalues: &[f64], c: f64) -> Result<DiscreteMeasure> {
    if eigenvalues.is_empty() {
        return invalid("need at least one eigenvalue");
    }
    if !(c > 0.0) {
        return invalid(format!("c must be positive, got {c}"));
    }
    let w = sample_dirichlet_symmetric(rng, eigenvalues.len(), c / eigenvalues.len() as f64)?;
    merge_atoms(eigenvalues.iter().copied().zip(w))
}

/// Monte Carlo mean with componentwise standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

const CHUNK: u64 = 1024;

/// Estimates `E[(z - X)^{-c}]` for every `z` in `zs`, where `X` is produced
/// by `functional`. Draw `t` lives in chunk `t / 1024`, which owns substream
/// `rng.split(t / 1024)`; chunk sums are combined in chunk order, so the
/// result does not depend on the number of worker threads.
pub fn mkr_lhs_many<F>(rng: &RngStream, functional: F, c: f64, zs: &[Complex64], m: usize) -> Result<Vec<ComplexEstimate>>
where
    F: Fn(&mut RngStream) -> Result<f64> + Sync,
{
    if m < 2 {
        return invalid("need at least two Monte Carlo draws");
    }
    let k = zs.len();
    let chunks = (m as u64).div_ceil(CHUNK);
    // Per chunk and z: sums of re, im, re², im².
    let partial = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut r = rng.split(ci);
            let count = CHUNK.min(m as u64 - ci * CHUNK);
            let mut acc = vec![[0.0f64; 4]; k];
            for _ in 0..count {
                let x = functional(&mut r)?;
                for (a, &z) in acc.iter_mut().zip(zs) {
                    let v = principal_power(z - x, c);
                    a[0] += v.re;
                    a[1] += v.im;
                    a[2] += v.re * v.re;
                    a[3] += v.im * v.im;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mf = m as f64;
    Ok((0..k)
        .map(|zi| {
            let s = |j: usize| neumaier_sum(partial.iter().map(|p| p[zi][j]));
            let (mre, mim) = (s(0) / mf, s(1) / mf);
            let var = |sq: f64, mean: f64| ((sq / mf - mean * mean).max(0.0) * mf / (mf - 1.0)) / mf;
            ComplexEstimate {
                value: Complex64::new(mre, mim),
                se_re: var(s(2), mre).sqrt(),
                se_im: var(s(3), mim).sqrt(),
            }
        })
        .collect())
}

pub fn mkr_lhs<F>(rng: &RngStream, functional: F, q: &MkrQuery, m: usize) -> Result<ComplexEstimate>
where
    F: Fn(&mut RngStream) -> Result<f64> + Sync,
{
    Ok(mkr_lhs_many(rng, functional, q.c, &[q.z], m)?[0])
}

fn check_z(z: Complex64, base: &Base, f: &TestFunction) -> Result<()> {
    if z.im != 0.0 {
        return Ok(());
    }
    match base {
        Base::Atoms { measure, .. } if measure.locations().iter().all(|&x| f.eval(x) < z.re) => Ok(()),
        _ => invalid(format!("z = {} is real and not above the range of the test function", z.re)),
    }
}

/// `exp(-c ∫ Log(z - f(u)) dα(u))`.
pub fn mkr_rhs(base: &Base, q: &MkrQuery) -> Result<Complex64> {
    check_z(q.z, base, &q.f)?;
    let re = base.integrate(|u| (q.z - q.f.eval(u)).ln().re)?;
    let im = base.integrate(|u| (q.z - q.f.eval(u)).ln().im)?;
    Ok((-q.c * Complex64::new(re, im)).exp())
}

/// Finite Dirichlet form `∏ (z - f(a_i))^{-τ_i}`.
pub fn dirichlet_rhs(locations: &[f64], tau: &[f64], z: Complex64, f: &TestFunction) -> Complex64 {
    let log: Complex64 = locations.iter().zip(tau).map(|(&a, &t)| t * (z - f.eval(a)).ln()).sum();
    (-log).exp()
}

/// Random measure whose transform is checked.
#[derive(Debug, Clone)]
pub enum MkrSetup {
    /// `Σ w_i δ_{λ_i}` with `w ~ Dir(c/N, …)`.
    Finite { eigenvalues: Vec<f64> },
    /// `Σ w_i δ_{a_i}` with `w ~ Dir(τ)`; the parameter is `Σ τ_i`.
    Dirichlet { locations: Vec<f64>, tau: Vec<f64> },
    Dp { base: Base, mass_tol: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct MkrRow {
    pub z_re: f64,
    pub z_im: f64,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    /// Discrepancies in standard-error units; `None` when the SE is zero.
    pub z_score_re: Option<f64>,
    pub z_score_im: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MkrReport {
    pub c: f64,
    pub f: String,
    pub draws: usize,
    pub se_multiple: f64,
    pub rows: Vec<MkrRow>,
    pub pass: bool,
}

fn component_pass(diff: f64, se: f64, k: f64, scale: f64) -> (bool, Option<f64>) {
    // A zero SE means every draw was identical; only rounding may separate
    // the two sides.
    if se > 0.0 {
        (diff.abs() <= k * se, Some(diff / se))
    } else {
        (diff.abs() <= 1e-12 * scale.max(1.0), None)
    }
}

/// Compares Monte Carlo left sides with exact right sides at each `z`.
/// `c` is ignored for the `Dirichlet` setup, which carries its own parameter.
#[allow(clippy::too_many_arguments)]
pub fn mkr_check(
    rng: &RngStream,
    setup: &MkrSetup,
    c: f64,
    f: TestFunction,
    zs: &[Complex64],
    m: usize,
    se_multiple: f64,
    allow_unbounded: bool,
) -> Result<MkrReport> {
    if zs.is_empty() {
        return invalid("need at least one z");
    }
    let (c, estimates, rhs) = match setup {
        MkrSetup::Finite { eigenvalues } => {
            let n = eigenvalues.len();
            if n == 0 {
                return invalid("need at least one eigenvalue");
            }
            let tau = vec![c / n as f64; n];
            let vals: Vec<f64> = eigenvalues.iter().map(|&x| f.eval(x)).collect();
            let est = mkr_lhs_many(rng, |r| weighted(r, &tau, &vals), c, zs, m)?;
            let base = Base::atoms(DiscreteMeasure::empirical(eigenvalues)?);
            let rhs = rhs_all(&base, c, f, zs)?;
            (c, est, rhs)
        }
        MkrSetup::Dirichlet { locations, tau } => {
            if locations.len() != tau.len() || tau.is_empty() || tau.iter().any(|t| !(*t > 0.0)) {
                return invalid("Dirichlet setup needs matching locations and positive parameters");
            }
            let total: f64 = tau.iter().sum();
            let vals: Vec<f64> = locations.iter().map(|&x| f.eval(x)).collect();
            let est = mkr_lhs_many(rng, |r| weighted(r, tau, &vals), total, zs, m)?;
            let atoms = Base::atoms(DiscreteMeasure::empirical(locations)?);
            for &z in zs {
                check_z(z, &atoms, &f)?;
            }
            let rhs = zs.iter().map(|&z| dirichlet_rhs(locations, tau, z, &f)).collect();
            (total, est, rhs)
        }
        MkrSetup::Dp { base, mass_tol } => {
            check_admissible(&f, base, allow_unbounded)?;
            let est = mkr_lhs_many(rng, |r| dp_functional(r, base, c, *mass_tol, &f), c, zs, m)?;
            (c, est, rhs_all(base, c, f, zs)?)
        }
    };
    let rows: Vec<MkrRow> = zs
        .iter()
        .zip(estimates.iter().zip(&rhs))
        .map(|(z, (e, r))| {
            let scale = r.norm();
            let (p_re, s_re) = component_pass(e.value.re - r.re, e.se_re, se_multiple, scale);
            let (p_im, s_im) = component_pass(e.value.im - r.im, e.se_im, se_multiple, scale);
            MkrRow {
                z_re: z.re,
                z_im: z.im,
                lhs_re: e.value.re,
                lhs_im: e.value.im,
                se_re: e.se_re,
                se_im: e.se_im,
                rhs_re: r.re,
                rhs_im: r.im,
                z_score_re: s_re,
                z_score_im: s_im,
                pass: p_re && p_im,
            }
        })
        .collect();
    Ok(MkrReport {
        c,
        f: f.name(),
        draws: m,
        se_multiple,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

fn weighted(rng: &mut RngStream, tau: &[f64], vals: &[f64]) -> Result<f64> {
    let w = sample_dirichlet(rng, tau)?;
    Ok(w.iter().zip(vals).map(|(w, v)| w * v).sum())
}

fn rhs_all(base: &Base, c: f64, f: TestFunction, zs: &[Complex64]) -> Result<Vec<Complex64>> {
    zs.iter().map(|&z| mkr_rhs(base, &MkrQuery::new(z, c, f)?)).collect()
}
