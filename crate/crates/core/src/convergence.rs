//! Distances between distributions and Monte Carlo experiments that check the
//! limit theorems at finite size.
//!
//! Every experiment is deterministic given its root stream: trial `t` of a
//! sample uses a fixed substream and results are gathered in trial order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::dirichlet_process::{check_admissible, dp_functional, mkr_check, Base, MkrReport, MkrSetup, TestFunction};
use crate::ensembles::{entry_convergence_check, sample, Coupling, EnsembleKind, EnsembleParams, Entry};
use crate::error::{invalid, Result};
use crate::limit_measures::{rho_abc_estimate, rho_alpha_c_grid, rho_c_grid};
use crate::measures::{neumaier_sum, DiscreteMeasure, MomentVector, TabulatedCdf};
use crate::sampling::RngStream;
use crate::tridiag::{eigen_first_row, log_spectral_weight, spectral_measure};

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return invalid("KS distance needs a nonempty sample");
    }
    if xs.iter().any(|x| x.is_nan()) {
        return invalid("sample contains NaN");
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample statistic against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let s = sorted(sample)?;
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// Sup distance between an atomic measure and a continuous CDF.
pub fn ks_measure_cdf(m: &DiscreteMeasure, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut below = 0.0;
    let mut d = 0.0f64;
    for (x, w) in m.atoms() {
        let f = cdf(x);
        d = d.max((f - below).abs());
        below += w;
        d = d.max((below - f).abs());
    }
    d
}

/// Sup distance between the CDFs of two atomic measures.
pub fn ks_measures(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    merged_cdfs(m1, m2).fold(0.0, |d, (_, f1, f2)| d.max((f1 - f2).abs()))
}

/// `∫ |F1 - F2| dx`, exact for atomic measures.
pub fn wasserstein1(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    let pts: Vec<(f64, f64, f64)> = merged_cdfs(m1, m2).collect();
    neumaier_sum(pts.windows(2).map(|p| (p[0].1 - p[0].2).abs() * (p[1].0 - p[0].0)))
}

/// `(x, F1(x), F2(x))` at every atom of either measure, ascending.
fn merged_cdfs<'a>(m1: &'a DiscreteMeasure, m2: &'a DiscreteMeasure) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
    let (l1, w1, l2, w2) = (m1.locations(), m1.weights(), m2.locations(), m2.weights());
    let (mut i, mut j, mut f1, mut f2) = (0usize, 0usize, 0.0, 0.0);
    std::iter::from_fn(move || {
        if i >= l1.len() && j >= l2.len() {
            return None;
        }
        let x = match (l1.get(i), l2.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if i < l1.len() && l1[i] == x {
            f1 += w1[i];
            i += 1;
        }
        if j < l2.len() && l2[j] == x {
            f2 += w2[j];
            j += 1;
        }
        Some((x, f1, f2))
    })
}

/// Regularized incomplete beta function taking `ln x`, so that arguments
/// below the double range still get a relative-accurate value.
pub fn beta_cdf_log(p: f64, q: f64, ln_x: f64) -> f64 {
    if ln_x >= 0.0 {
        return 1.0;
    }
    if ln_x < -40.0 {
        (p * ln_x - p.ln() - ln_beta(p, q)).exp()
    } else {
        beta_reg(p, q, ln_x.exp())
    }
}

/// Pre-registered pass/fail thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Mean comparisons pass within this many standard errors.
    pub se_multiple: f64,
    /// Two-sample KS bound for the Dirichlet-process limit checks.
    pub ks_dp: f64,
    /// Averaged KS bound between empirical eigenvalue laws and their limit.
    pub ks_empirical: f64,
    /// One-sample KS bound for the spectral-weight law.
    pub ks_weights: f64,
    /// Correlation bound is this multiple of `1/√M`.
    pub corr_multiple: f64,
    /// Two-sample KS bound for entry laws.
    pub ks_entries: f64,
    /// Allowed change of a statistic when the truncation depth doubles.
    pub truncation_stability: f64,
    /// Slack, in standard errors of the difference, for the averaged-KS
    /// monotonicity check.
    pub monotone_slack_se: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            se_multiple: 4.0,
            ks_dp: 0.03,
            ks_empirical: 0.02,
            ks_weights: 0.02,
            corr_multiple: 4.0,
            ks_entries: 0.03,
            truncation_stability: 1e-3,
            monotone_slack_se: 1.0,
        }
    }
}

/// One reported number. `se` is `None` only for exact quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub label: String,
    pub n: Option<usize>,
    pub value: f64,
    pub se: Option<f64>,
    pub exact: bool,
    pub reference: Option<f64>,
}

impl Stat {
    fn estimate(label: impl Into<String>, n: Option<usize>, value: f64, se: f64, reference: Option<f64>) -> Stat {
        Stat {
            label: label.into(),
            n,
            value,
            se: Some(se),
            exact: false,
            reference,
        }
    }

    fn computed(label: impl Into<String>, n: Option<usize>, value: f64) -> Stat {
        Stat {
            label: label.into(),
            n,
            value,
            se: None,
            exact: true,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Check {
        Check {
            name: name.into(),
            pass,
            detail,
        }
    }
}

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub name: String,
    pub parameters: serde_json::Value,
    pub thresholds: Thresholds,
    pub stats: Vec<Stat>,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Filled in by callers that time the run; omitted otherwise so that
    /// reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl ExperimentReport {
    fn new(name: &str, parameters: serde_json::Value, thresholds: Thresholds, stats: Vec<Stat>, checks: Vec<Check>) -> Self {
        ExperimentReport {
            schema: REPORT_SCHEMA,
            name: name.into(),
            parameters,
            thresholds,
            pass: checks.iter().all(|c| c.pass),
            stats,
            checks,
            wall_clock_seconds: None,
        }
    }

    /// Value of the first statistic with this label and size.
    pub fn stat(&self, label: &str, n: Option<usize>) -> Option<&Stat> {
        self.stats.iter().find(|s| s.label == label && s.n == n)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Mean and standard error with a fixed summation order.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, _) = mean_se(x);
    let (my, _) = mean_se(y);
    let sxy = neumaier_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = neumaier_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = neumaier_sum(y.iter().map(|b| (b - my) * (b - my)));
    sxy / (sxx * syy).sqrt()
}

fn par_trials<T: Send>(root: &RngStream, m: usize, f: impl Fn(&mut RngStream) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..m as u64)
        .into_par_iter()
        .map(|t| f(&mut root.split(t)))
        .collect()
}

/// Monte Carlo means of `⟨sp, x^k⟩` for `k ≤ k_max` against limit moments.
pub fn moment_convergence_check<F>(
    rng: &RngStream,
    sampler: F,
    limit_moments: &MomentVector,
    k_max: usize,
    m: usize,
    thresholds: Thresholds,
) -> Result<ExperimentReport>
where
    F: Fn(&mut RngStream) -> Result<DiscreteMeasure> + Sync,
{
    if k_max >= limit_moments.len() {
        return invalid(format!("only {} limit moments available for k_max = {k_max}", limit_moments.len()));
    }
    if m < 2 {
        return invalid("need at least two draws");
    }
    let rows = par_trials(rng, m, |r| {
        let sp = sampler(r)?;
        Ok((1..=k_max as u32).map(|k| sp.moment(k)).collect::<Vec<_>>())
    })?;
    let mut stats = vec![Stat {
        reference: Some(1.0),
        ..Stat::computed("moment", Some(0), 1.0)
    }];
    let mut checks = vec![Check::new("moment 0", true, "total mass is 1 by construction".into())];
    for k in 1..=k_max {
        let (mean, se) = mean_se(&rows.iter().map(|r| r[k - 1]).collect::<Vec<_>>());
        let target = limit_moments.as_slice()[k];
        let pass = if se > 0.0 {
            (mean - target).abs() <= thresholds.se_multiple * se
        } else {
            (mean - target).abs() <= 1e-12 * target.abs().max(1.0)
        };
        stats.push(Stat::estimate("moment", Some(k), mean, se, Some(target)));
        checks.push(Check::new(
            &format!("moment {k}"),
            pass,
            format!("mean {mean:.6} vs limit {target:.6}, se {se:.2e}"),
        ));
    }
    Ok(ExperimentReport::new(
        "moments",
        serde_json::json!({ "k_max": k_max, "draws": m }),
        thresholds,
        stats,
        checks,
    ))
}

/// Smallest size allowed in the empirical-distribution experiment.
pub const MIN_EMPIRICAL_N: usize = 25;

/// Averaged KS distance between the empirical eigenvalue distribution and a
/// limit CDF for each size in `n_list`.
pub fn empirical_to_rho_check(
    rng: &RngStream,
    params: &EnsembleParams,
    n_list: &[usize],
    trials: usize,
    limit_cdf: &TabulatedCdf,
    thresholds: Thresholds,
) -> Result<ExperimentReport> {
    if n_list.is_empty() || n_list.iter().any(|&n| n < MIN_EMPIRICAL_N) {
        return invalid(format!("every N must be at least {MIN_EMPIRICAL_N}"));
    }
    if trials < 2 {
        return invalid("need at least two trials");
    }
    let mut stats = Vec::new();
    let mut series = Vec::new();
    for &n in n_list {
        let p = params.with_n(n)?;
        let runs = par_trials(rng, trials, |r| {
            let (lambda, _) = eigen_first_row(&sample(r, &p)?)?;
            Ok((ks_one_sample(&lambda, |x| limit_cdf.cdf(x))?, lambda))
        })?;
        let ks: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let pooled: Vec<f64> = runs.into_iter().flat_map(|r| r.1).collect();
        let (mean, se) = mean_se(&ks);
        stats.push(Stat::estimate("mean_ks", Some(n), mean, se, None));
        // Distance of the trial-averaged empirical law, for diagnosis only.
        stats.push(Stat::computed("pooled_ks", Some(n), ks_one_sample(&pooled, |x| limit_cdf.cdf(x))?));
        series.push((n, mean, se));
    }
    let mut checks = vec![monotone_check(&series, thresholds.monotone_slack_se)];
    let &(n_last, last, _) = series.last().unwrap();
    checks.push(Check::new(
        "final below threshold",
        last < thresholds.ks_empirical,
        format!("N = {n_last}: {last:.5} vs {}", thresholds.ks_empirical),
    ));
    Ok(ExperimentReport::new(
        "empirical",
        serde_json::json!({ "params": params, "n_list": n_list, "trials": trials }),
        thresholds,
        stats,
        checks,
    ))
}

/// Nonincreasing within `slack` standard errors of each successive difference.
fn monotone_check(series: &[(usize, f64, f64)], slack: f64) -> Check {
    let bad: Vec<String> = series
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 + slack * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt())
        .map(|w| format!("N = {} -> {}: {:.5} -> {:.5}", w[0].0, w[1].0, w[0].1, w[1].1))
        .collect();
    Check::new(
        "nonincreasing",
        bad.is_empty(),
        if bad.is_empty() { "ok".into() } else { bad.join("; ") },
    )
}

fn strictly_decreasing_check(series: &[(usize, f64)]) -> Check {
    let bad: Vec<String> = series
        .windows(2)
        .filter(|w| !(w[1].1 < w[0].1))
        .map(|w| format!("N = {} -> {}: {:.5} -> {:.5}", w[0].0, w[1].0, w[0].1, w[1].1))
        .collect();
    Check::new(
        "decreasing",
        bad.is_empty(),
        if bad.is_empty() { "ok".into() } else { bad.join("; ") },
    )
}

/// Law of `⟨sp_N, f⟩` against the law of `⟨P, f⟩`, `P ~ DP(base, c)`.
///
/// Draw `t` of the finite model uses substream `(0, t)` for every `N`, so the
/// distances along `n_list` share their sampling noise; the Dirichlet-process
/// sample uses substreams `(1, t)`.
pub fn dp_limit_check(
    rng: &RngStream,
    params: &EnsembleParams,
    f: TestFunction,
    n_list: &[usize],
    m: usize,
    base: &Base,
    thresholds: Thresholds,
) -> Result<ExperimentReport> {
    check_admissible(&f, base, false)?;
    if n_list.is_empty() || m < 2 {
        return invalid("need a nonempty N list and at least two draws");
    }
    let c = params.c;
    let dp = par_trials(&rng.split(1), m, |r| dp_functional(r, base, c, crate::dirichlet_process::DEFAULT_MASS_TOL, &f))?;
    let mut stats = Vec::new();
    let mut series = Vec::new();
    for &n in n_list {
        let p = params.with_n(n)?;
        let finite = par_trials(&rng.split(0), m, |r| Ok(spectral_measure(&sample(r, &p)?)?.integrate(|x| f.eval(x))))?;
        let ks = ks_two_sample(&finite, &dp)?;
        stats.push(Stat::computed("ks", Some(n), ks));
        series.push((n, ks));
    }
    let &(n_last, last) = series.last().unwrap();
    let checks = vec![
        strictly_decreasing_check(&series),
        Check::new(
            "final below threshold",
            last < thresholds.ks_dp,
            format!("N = {n_last}: {last:.5} vs {}", thresholds.ks_dp),
        ),
    ];
    Ok(ExperimentReport::new(
        "dp-limit",
        serde_json::json!({ "params": params, "f": f.name(), "n_list": n_list, "draws": m }),
        thresholds,
        stats,
        checks,
    ))
}

/// Weight of the smallest eigenvalue against `Beta(β/2, (N-1)β/2)` and its
/// correlation with the eigenvalue range.
pub fn weights_law_check(rng: &RngStream, params: &EnsembleParams, m: usize, thresholds: Thresholds) -> Result<ExperimentReport> {
    let Some(beta) = params.beta() else {
        return invalid("the weight law applies to finite models");
    };
    let n = params.n;
    if n < 2 || m < 2 {
        return invalid("need N >= 2 and at least two draws");
    }
    let rows = par_trials(rng, m, |r| {
        let j = sample(r, params)?;
        let (lambda, _) = eigen_first_row(&j)?;
        let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((log_spectral_weight(&j, lo), hi - lo))
    })?;
    let (p, q) = (0.5 * beta, 0.5 * beta * (n - 1) as f64);
    let u: Vec<f64> = rows.iter().map(|&(lw, _)| beta_cdf_log(p, q, lw)).collect();
    let ks = ks_one_sample(&u, |x| x.clamp(0.0, 1.0))?;
    let w: Vec<f64> = rows.iter().map(|&(lw, _)| lw.exp()).collect();
    let range: Vec<f64> = rows.iter().map(|&(_, r)| r).collect();
    let corr = pearson(&w, &range);
    let corr_bound = thresholds.corr_multiple / (m as f64).sqrt();
    let stats = vec![Stat::computed("ks", Some(n), ks), Stat::computed("corr", Some(n), corr)];
    let checks = vec![
        Check::new("weight law", ks < thresholds.ks_weights, format!("KS {ks:.5} vs {}", thresholds.ks_weights)),
        Check::new("independence", corr.abs() < corr_bound, format!("|r| = {:.5} vs {corr_bound:.5}", corr.abs())),
    ];
    Ok(ExperimentReport::new(
        "weights",
        serde_json::json!({ "params": params, "draws": m, "beta_params": [p, q] }),
        thresholds,
        stats,
        checks,
    ))
}

/// Law of `⟨ν, f⟩` for the truncated limit matrix against `DP(base, c)`.
///
/// The same substreams are used at `depth` and `2·depth`, and the rows a
/// shallow matrix shares with its deep counterpart are identical, so the
/// change in the statistic isolates the truncation effect.
pub fn limit_spectral_vs_dp_check(
    rng: &RngStream,
    params: &EnsembleParams,
    f: TestFunction,
    depth: usize,
    m: usize,
    base: &Base,
    thresholds: Thresholds,
) -> Result<ExperimentReport> {
    check_admissible(&f, base, false)?;
    if m < 2 {
        return invalid("need at least two draws");
    }
    let c = params.c;
    let draw = |d: usize| -> Result<Vec<f64>> {
        let p = params.limit(d)?;
        par_trials(&rng.split(0), m, |r| Ok(spectral_measure(&sample(r, &p)?)?.integrate(|x| f.eval(x))))
    };
    let shallow = draw(depth)?;
    let deep = draw(2 * depth)?;
    let dp = par_trials(&rng.split(1), m, |r| dp_functional(r, base, c, crate::dirichlet_process::DEFAULT_MASS_TOL, &f))?;
    let ks = ks_two_sample(&shallow, &dp)?;
    let ks_deep = ks_two_sample(&deep, &dp)?;
    let shift = (ks - ks_deep).abs();
    let (mean, se) = mean_se(&shallow);
    let target = base.integrate(|x| f.eval(x))?;

    let stats = vec![
        Stat::computed("ks", Some(depth), ks),
        Stat::computed("ks", Some(2 * depth), ks_deep),
        Stat::estimate("mean", Some(depth), mean, se, Some(target)),
    ];
    let checks = vec![
        Check::new(
            "truncation stable",
            shift < thresholds.truncation_stability,
            format!("KS changes by {shift:.2e} when the depth doubles"),
        ),
        Check::new("below threshold", ks < thresholds.ks_dp, format!("KS {ks:.5} vs {}", thresholds.ks_dp)),
        Check::new(
            "mean matches base",
            (mean - target).abs() <= thresholds.se_multiple * se,
            format!("{mean:.6} vs {target:.6}, se {se:.2e}"),
        ),
    ];
    Ok(ExperimentReport::new(
        "limit-dp",
        serde_json::json!({ "params": params, "f": f.name(), "depth": depth, "draws": m }),
        thresholds,
        stats,
        checks,
    ))
}

/// Entry-law distances along `n_list` with a strict-decrease check.
pub fn entries_check(
    rng: &RngStream,
    params: &EnsembleParams,
    entry: Entry,
    n_list: &[usize],
    m: usize,
    coupling: Coupling,
    thresholds: Thresholds,
) -> Result<ExperimentReport> {
    let dist = entry_convergence_check(rng, params, entry, n_list, m, coupling)?;
    let series: Vec<(usize, f64)> = dist.iter().map(|d| (d.n, d.ks)).collect();
    let stats = series.iter().map(|&(n, ks)| Stat::computed("ks", Some(n), ks)).collect();
    let &(n_last, last) = series.last().ok_or_else(|| crate::Error::InvalidInput("empty N list".into()))?;
    let checks = vec![
        strictly_decreasing_check(&series),
        Check::new(
            "final below threshold",
            last < thresholds.ks_entries,
            format!("N = {n_last}: {last:.5} vs {}", thresholds.ks_entries),
        ),
    ];
    Ok(ExperimentReport::new(
        "entries",
        serde_json::json!({ "params": params, "entry": entry, "n_list": n_list, "draws": m, "coupling": coupling }),
        thresholds,
        stats,
        checks,
    ))
}

/// Wraps a Markov–Krein table as an experiment report.
pub fn mkr_experiment(
    rng: &RngStream,
    setup: &MkrSetup,
    c: f64,
    f: TestFunction,
    zs: &[Complex64],
    m: usize,
    thresholds: Thresholds,
) -> Result<(ExperimentReport, MkrReport)> {
    let rep = mkr_check(rng, setup, c, f, zs, m, thresholds.se_multiple, false)?;
    let mut stats = Vec::new();
    let mut checks = Vec::new();
    for row in &rep.rows {
        let tag = format!("z = {}{:+}i", row.z_re, row.z_im);
        stats.push(Stat {
            label: format!("re {tag}"),
            ..Stat::estimate("", None, row.lhs_re, row.se_re, Some(row.rhs_re))
        });
        stats.push(Stat {
            label: format!("im {tag}"),
            ..Stat::estimate("", None, row.lhs_im, row.se_im, Some(row.rhs_im))
        });
        checks.push(Check::new(&tag, row.pass, format!("z-scores {:?} / {:?}", row.z_score_re, row.z_score_im)));
    }
    let report = ExperimentReport::new(
        "mkr",
        serde_json::json!({ "c": rep.c, "f": rep.f, "draws": m }),
        thresholds,
        stats,
        checks,
    );
    Ok((report, rep))
}

/// Grid spacing used for tabulated limit densities.
const LIMIT_GRID_STEP: f64 = 0.005;

/// Depth and trial count for the Monte Carlo Jacobi limit estimate.
pub const JACOBI_BASE_DEPTH: usize = 80;
pub const JACOBI_BASE_TRIALS: usize = 20_000;

/// Limit law `ρ` for `params` as a Dirichlet-process base. The Jacobi case is
/// estimated by Monte Carlo from `rng`.
pub fn limit_base(rng: &RngStream, params: &EnsembleParams) -> Result<Base> {
    let c = params.c;
    match params.kind {
        EnsembleKind::Gaussian => Base::density(rho_c_grid(c, LIMIT_GRID_STEP)?),
        EnsembleKind::Laguerre => Base::density(rho_alpha_c_grid(params.alpha.unwrap_or(0.0), c, LIMIT_GRID_STEP)?),
        EnsembleKind::Jacobi => {
            let (a, b) = (params.a.unwrap_or(0.0), params.b.unwrap_or(0.0));
            let est = rho_abc_estimate(rng, a, b, c, JACOBI_BASE_DEPTH, JACOBI_BASE_TRIALS, 201)?;
            Ok(Base::atoms(est.measure))
        }
    }
}

/// Limit CDF for `params`; see [`limit_base`].
pub fn limit_cdf(rng: &RngStream, params: &EnsembleParams) -> Result<TabulatedCdf> {
    match limit_base(rng, params)? {
        Base::Density { table, .. } => Ok(table),
        Base::Atoms { measure, .. } => {
            let xs: Vec<f64> = crate::measures::grid_points(0.0, 1.0, 2001).collect();
            let cdf = xs.iter().map(|&x| measure.cdf(x)).collect();
            TabulatedCdf::new(xs, cdf)
        }
    }
}
