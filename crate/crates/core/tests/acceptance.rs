//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.
//!
//! Monte Carlo checks use one fixed seed chosen before the first run.

use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use spectral_dp::convergence::{
    dp_limit_check, empirical_to_rho_check, entries_check, limit_base, limit_cdf, limit_spectral_vs_dp_check,
    weights_law_check, ExperimentReport, Thresholds,
};
use spectral_dp::dirichlet_process::{mkr_check, Base, MkrSetup, TestFunction, DEFAULT_MASS_TOL};
use spectral_dp::ensembles::{Coupling, EnsembleParams, Entry};
use spectral_dp::limit_measures::{assoc_hermite_matrix, cf_density, rho_c_grid, RhoCEvaluator};
use spectral_dp::measures::{integrate_density, DiscreteMeasure, MomentVector};
use spectral_dp::sampling::RngStream;
use spectral_dp::tridiag::{moments, moments_to_jacobi, spectral_measure, TridiagonalMatrix};

const SEED: u64 = 20261015;

/// Runs the checks one at a time so their timings are not inflated by each other.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name}: {detail} ({:.1} s)", elapsed.as_secs_f64());
    assert!(pass, "{name} failed: {detail}");
}

fn report_detail(reports: &[&ExperimentReport]) -> String {
    reports
        .iter()
        .flat_map(|r| r.checks.iter().map(move |c| format!("{}/{}: {} [{}]", r.name, c.name, c.detail, if c.pass { "ok" } else { "fail" })))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Dense `(Jⁿ)_{11}` by repeated full matrix-vector products.
fn dense_moments(j: &TridiagonalMatrix, n_max: usize) -> Vec<f64> {
    let n = j.size();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        dense[i][i] = j.diag()[i];
        if i + 1 < n {
            dense[i][i + 1] = j.offdiag()[i];
            dense[i + 1][i] = j.offdiag()[i];
        }
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    let mut out = vec![1.0];
    for _ in 0..n_max {
        v = (0..n).map(|r| (0..n).map(|c| dense[r][c] * v[c]).sum()).collect();
        out.push(v[0]);
    }
    out
}

fn random_matrix(rng: &mut RngStream, size: usize) -> TridiagonalMatrix {
    let a = (0..size).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let b = (1..size).map(|_| 0.5 + rng.uniform()).collect();
    TridiagonalMatrix::new(a, b).unwrap()
}

#[test]
fn moment_identity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut rng = RngStream::new(SEED);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let size = 2 + t % 49;
        let j = random_matrix(&mut rng, size);
        let sp = spectral_measure(&j).unwrap();
        let exact = dense_moments(&j, 12);
        for (n, &m) in exact.iter().enumerate() {
            let err = (m - sp.moment(n as u32)).abs() / m.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(10);
    verdict("moment identity", pass, &format!("max relative error {worst:.2e} over 200 matrices, n <= 12"), elapsed);
}

#[test]
fn rho_c_two_routes() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let formula = RhoCEvaluator::new(c).unwrap().grid(-4.0, 4.0, 161).unwrap();
        let cf = cf_density(&assoc_hermite_matrix(c, 400).unwrap(), -4.0, 4.0, 161, 1e-5).unwrap();
        let gap = formula.values.iter().zip(&cf.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

        let full = rho_c_grid(c, 0.005).unwrap();
        let mass = full.mass();
        let m2 = integrate_density(&full, |x| x * x).unwrap();
        let m4 = integrate_density(&full, |x| x.powi(4)).unwrap();
        // Moments of the associated-Hermite matrix, b_1² = c+1, b_2² = c+2.
        let (e2, e4) = (c + 1.0, (c + 1.0) * (c + 1.0) + (c + 1.0) * (c + 2.0));
        let ok = gap <= 5e-3 && (mass - 1.0).abs() <= 1e-5 && (m2 - e2).abs() <= 1e-4 && (m4 - e4).abs() <= 1e-3;
        pass &= ok;
        details.push(format!(
            "c={c}: gap {gap:.2e}, mass-1 {:.1e}, m2 err {:.1e}, m4 err {:.1e}",
            mass - 1.0,
            m2 - e2,
            m4 - e4
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    verdict("rho_c formula vs continued fraction", pass, &details.join("; "), elapsed);
}

/// `∏ (z - λ_i)^{-c/N}` with principal logarithms.
fn product_form(eigenvalues: &[f64], c: f64, z: Complex64) -> Complex64 {
    let tau = c / eigenvalues.len() as f64;
    let log: Complex64 = eigenvalues.iter().map(|&l| (z - l).ln() * tau).sum();
    (-log).exp()
}

#[test]
fn finite_markov_krein() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let zs: Vec<Complex64> = [(0.0, 2.0), (1.0, 1.0), (3.0, 1.0), (-1.0, -0.5), (0.5, -2.0), (-2.0, 0.5)]
        .iter()
        .map(|&(r, i)| Complex64::new(r, i))
        .collect();
    let sets: Vec<Vec<f64>> = vec![
        vec![-1.0, 1.5],
        vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        (0..20).map(|i| -3.0 + 6.0 * i as f64 / 19.0).collect(),
    ];
    let root = RngStream::new(SEED);
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut idx = 0;
    for eig in &sets {
        for c in [0.5, 1.0, 2.0] {
            let setup = MkrSetup::Finite { eigenvalues: eig.clone() };
            let rep = mkr_check(&root.split(idx), &setup, c, TestFunction::Identity, &zs, 1_000_000, 4.0, false).unwrap();
            idx += 1;
            for (row, &z) in rep.rows.iter().zip(&zs) {
                let exact = product_form(eig, c, z);
                let dr = (row.lhs_re - exact.re).abs() / row.se_re;
                let di = (row.lhs_im - exact.im).abs() / row.se_im;
                worst = worst.max(dr).max(di);
                pass &= dr <= 4.0 && di <= 4.0;
            }
        }
    }
    let base = Base::atoms(DiscreteMeasure::empirical(&[0.0, 1.0]).unwrap());
    let setup = MkrSetup::Dp { base, mass_tol: DEFAULT_MASS_TOL };
    let z = Complex64::new(2.0, 0.0);
    let rep = mkr_check(&root.split(idx), &setup, 1.0, TestFunction::Identity, &[z], 1_000_000, 4.0, false).unwrap();
    let arcsine = 1.0 / (z * (z - 1.0)).sqrt();
    let row = &rep.rows[0];
    let d_arc = (row.lhs_re - arcsine.re).abs() / row.se_re;
    pass &= d_arc <= 4.0 && row.lhs_im.abs() <= 4.0 * row.se_im.max(1e-15);
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    verdict(
        "finite Markov-Krein identity",
        pass,
        &format!(
            "worst discrepancy {worst:.2} SE over 54 cases; arcsine {:.5} vs {:.5} ({d_arc:.2} SE)",
            row.lhs_re, arcsine.re
        ),
        elapsed,
    );
}

#[test]
fn finite_spectral_measure_to_dp() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rng = RngStream::new(SEED);
    let p = EnsembleParams::gaussian(50, 1.0).unwrap();
    let base = limit_base(&rng.split(u64::MAX), &p).unwrap();
    let rep = dp_limit_check(&rng, &p, TestFunction::Arctan, &[50, 100, 200], 5000, &base, Thresholds::default()).unwrap();
    let elapsed = start.elapsed();
    let ks: Vec<String> = rep.stats.iter().map(|s| format!("N={}: {:.4}", s.n.unwrap(), s.value)).collect();
    let pass = rep.pass && elapsed < Duration::from_secs(300);
    verdict("finite spectral measure vs DP", pass, &format!("{} | {}", ks.join(", "), report_detail(&[&rep])), elapsed);
}

#[test]
fn limit_spectral_measure_is_dp() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rng = RngStream::new(SEED);
    let cases = [
        (EnsembleParams::gaussian(1, 1.0).unwrap(), TestFunction::Arctan),
        (EnsembleParams::laguerre(1, 1.0, 1.0).unwrap(), TestFunction::Arctan),
        (EnsembleParams::jacobi(1, 1.0, 1.0, 1.0).unwrap(), TestFunction::Clip { lo: 0.0, hi: 1.0 }),
    ];
    let mut reports = Vec::new();
    for (p, f) in cases {
        let base = limit_base(&rng.split(u64::MAX), &p).unwrap();
        reports.push(limit_spectral_vs_dp_check(&rng, &p, f, 200, 5000, &base, Thresholds::default()).unwrap());
    }
    let elapsed = start.elapsed();
    let pass = reports.iter().all(|r| r.pass) && elapsed < Duration::from_secs(600);
    let refs: Vec<&ExperimentReport> = reports.iter().collect();
    verdict("limit spectral measure vs DP", pass, &report_detail(&refs), elapsed);
}

#[test]
fn spectral_weight_law() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let p = EnsembleParams::gaussian(100, 1.0).unwrap();
    let rep = weights_law_check(&RngStream::new(SEED), &p, 10_000, Thresholds::default()).unwrap();
    verdict("spectral weight law", rep.pass, &report_detail(&[&rep]), start.elapsed());
}

#[test]
fn empirical_distribution_convergence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rng = RngStream::new(SEED);
    let mut reports = Vec::new();
    for p in [EnsembleParams::gaussian(50, 1.0).unwrap(), EnsembleParams::laguerre(50, 1.0, 1.0).unwrap()] {
        let cdf = limit_cdf(&rng.split(u64::MAX), &p).unwrap();
        reports.push(empirical_to_rho_check(&rng, &p, &[50, 100, 200, 400], 200, &cdf, Thresholds::default()).unwrap());
    }
    let summary: Vec<String> = reports
        .iter()
        .map(|r| {
            let means: Vec<String> = r
                .stats
                .iter()
                .filter(|s| s.label == "mean_ks")
                .map(|s| format!("{:.4}±{:.4}", s.value, s.se.unwrap()))
                .collect();
            let pooled = r.stat("pooled_ks", Some(400)).unwrap().value;
            format!("{} [pooled at 400: {pooled:.4}]", means.join(" "))
        })
        .collect();
    let refs: Vec<&ExperimentReport> = reports.iter().collect();
    verdict(
        "empirical distribution convergence",
        reports.iter().all(|r| r.pass),
        &format!("{} | {}", summary.join("; "), report_detail(&refs)),
        start.elapsed(),
    );
}

#[test]
fn entry_convergence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rng = RngStream::new(SEED);
    let th = Thresholds::default();
    let g = entries_check(&rng, &EnsembleParams::gaussian(25, 1.0).unwrap(), Entry::Offdiag(1), &[25, 100, 400], 10_000, Coupling::Common, th).unwrap();
    let l = entries_check(&rng, &EnsembleParams::laguerre(25, 1.0, 1.0).unwrap(), Entry::Diag(1), &[25, 100, 400], 10_000, Coupling::Common, th).unwrap();
    let ks = |r: &ExperimentReport| r.stats.iter().map(|s| format!("{:.4}", s.value)).collect::<Vec<_>>().join(" ");
    verdict(
        "entry convergence",
        g.pass && l.pass,
        &format!("gaussian offdiag_1: {}; laguerre diag_1: {}", ks(&g), ks(&l)),
        start.elapsed(),
    );
}

fn catalan(k: usize) -> f64 {
    (0..k).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
}

#[test]
fn moment_recovery_roundtrip() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut rng = RngStream::new(SEED);
    let mut worst = 0.0f64;
    for t in 0..200 {
        let size = 1 + t % 8;
        let j = random_matrix(&mut rng, size);
        let m = MomentVector::new(dense_moments(&j, 2 * size)).unwrap();
        let rec = moments_to_jacobi(&m).unwrap();
        for (x, y) in rec.a().iter().zip(j.diag()).chain(rec.b().iter().zip(j.offdiag())) {
            worst = worst.max((x - y).abs());
        }
    }
    let semicircle: Vec<f64> = (0..=16).map(|k| if k % 2 == 0 { catalan(k / 2) } else { 0.0 }).collect();
    let rec = moments_to_jacobi(&MomentVector::new(semicircle).unwrap()).unwrap();
    let free_err = rec
        .a()
        .iter()
        .map(|a| a.abs())
        .chain(rec.b().iter().map(|b| (b - 1.0).abs()))
        .fold(0.0, f64::max);
    assert_eq!(moments(&spectral_dp::tridiag::free_matrix(9), 4), vec![1.0, 0.0, 1.0, 0.0, 2.0]);
    verdict(
        "moments to Jacobi coefficients",
        worst <= 1e-8 && free_err <= 1e-8 && rec.len() == 8,
        &format!("random max error {worst:.2e}; semicircle max error {free_err:.2e}"),
        start.elapsed(),
    );
}

fn run_cli(args: &[&str], threads: usize, out: &std::path::Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_spectral-dp"))
        .args(args)
        .args(["--seed", "7", "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .env_remove("SPECTRAL_DP_SEED")
        .status()
        .unwrap();
    assert!(status.code() == Some(0) || status.code() == Some(3), "{args:?} exited with {status}");
    std::fs::read(out).unwrap()
}

#[test]
fn cli_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.csv");
    run_cli(&["sample-ensemble", "--kind", "gaussian", "--N", "12", "--c", "1"], 1, &matrix);
    let measure = dir.path().join("measure.csv");
    run_cli(&["spectral-measure", "--input", matrix.to_str().unwrap()], 1, &measure);
    let m = matrix.to_str().unwrap();
    let sp = measure.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["sample-ensemble", "--kind", "gaussian", "--N", "50", "--c", "1"],
        vec!["sample-ensemble", "--kind", "laguerre", "--N", "30", "--c", "0.5", "--alpha", "1.5"],
        vec!["sample-ensemble", "--kind", "jacobi", "--limit", "--depth", "40", "--c", "1", "--a", "1", "--b", "2"],
        vec!["spectral-measure", "--input", m],
        vec!["limit-density", "--kind", "gauss", "--c", "1", "--xmin", "-6", "--xmax", "6", "--points", "601"],
        vec!["limit-density", "--kind", "gauss", "--route", "cf", "--c", "2", "--points", "201"],
        vec!["limit-density", "--kind", "laguerre", "--c", "1", "--alpha", "1", "--points", "401"],
        vec!["limit-density", "--kind", "jacobi-mc", "--c", "1", "--a", "1", "--b", "1", "--trials", "300", "--depth", "40"],
        vec!["dp-sample", "--kind", "gaussian", "--c", "1"],
        vec!["dp-sample", "--base-measure", sp, "--c", "2"],
        vec!["mkr-check", "--mode", "finite", "--c", "1", "--z", "3,1", "--z", "-1,-2", "--M", "20000"],
        vec!["mkr-check", "--mode", "dp", "--c", "1", "--z", "0,1", "--M", "5000"],
        vec!["converge-test", "--experiment", "empirical", "--n-list", "25,50", "--trials", "40"],
        vec!["converge-test", "--experiment", "dp-limit", "--n-list", "25,50", "--trials", "500"],
        vec!["converge-test", "--experiment", "weights", "--N", "20", "--trials", "500"],
        vec!["converge-test", "--experiment", "limit-dp", "--depth", "30", "--trials", "500"],
        vec!["converge-test", "--experiment", "moments", "--trials", "2000"],
        vec!["converge-test", "--experiment", "entries", "--kind", "laguerre", "--alpha", "1", "--trials", "500"],
        vec!["converge-test", "--experiment", "mkr", "--N", "4", "--trials", "5000"],
        vec!["moments", "--input", m, "--k-max", "10"],
        vec!["moments", "--input", m, "--k-max", "9", "--recover"],
    ];
    let mut diffs = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let one = run_cli(args, 1, &dir.path().join(format!("{i}-1.out")));
        let eight = run_cli(args, 8, &dir.path().join(format!("{i}-8.out")));
        let again = run_cli(args, 8, &dir.path().join(format!("{i}-8b.out")));
        if one != eight || eight != again || one.is_empty() {
            diffs.push(args.join(" "));
        }
    }
    verdict(
        "CLI determinism",
        diffs.is_empty(),
        &if diffs.is_empty() {
            format!("{} commands byte-identical with 1 and 8 threads", runs.len())
        } else {
            format!("differing outputs: {}", diffs.join(" | "))
        },
        start.elapsed(),
    );
}
