//! Tridiagonal models of the Gaussian, Laguerre and Jacobi beta ensembles with
//! `β = 2c/N`, and their semi-infinite limits truncated at a given depth.
//!
//! Each finite model and its limit share one sampling routine with the
//! distribution parameters injected per index, so the two differ only in
//! those parameters: with the same stream, entry `k` of the finite matrix and
//! entry `k` of the limit matrix are drawn from the same random inputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::convergence::ks_two_sample;
use crate::error::{invalid, Result};
use crate::sampling::{sample_beta_pair, sample_chi_tilde, sample_normal, RngStream};
use crate::tridiag::TridiagonalMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gaussian,
    Laguerre,
    Jacobi,
}

impl std::str::FromStr for EnsembleKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gauss" => Ok(EnsembleKind::Gaussian),
            "laguerre" => Ok(EnsembleKind::Laguerre),
            "jacobi" => Ok(EnsembleKind::Jacobi),
            other => invalid(format!("unknown ensemble kind `{other}`")),
        }
    }
}

/// Regime parameters. `n == 0` selects the limit matrix truncated at `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub kind: EnsembleKind,
    pub n: usize,
    pub c: f64,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub depth: usize,
}

impl EnsembleParams {
    pub fn gaussian(n: usize, c: f64) -> Result<Self> {
        Self {
            kind: EnsembleKind::Gaussian,
            n,
            c,
            alpha: None,
            a: None,
            b: None,
            depth: n,
        }
        .validated()
    }

    pub fn laguerre(n: usize, alpha: f64, c: f64) -> Result<Self> {
        Self {
            kind: EnsembleKind::Laguerre,
            n,
            c,
            alpha: Some(alpha),
            a: None,
            b: None,
            depth: n,
        }
        .validated()
    }

    pub fn jacobi(n: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        Self {
            kind: EnsembleKind::Jacobi,
            n,
            c,
            alpha: None,
            a: Some(a),
            b: Some(b),
            depth: n,
        }
        .validated()
    }

    /// Same parameters, limit matrix truncated at `depth`.
    pub fn limit(self, depth: usize) -> Result<Self> {
        Self { n: 0, depth, ..self }.validated()
    }

    /// Same parameters at system size `n`.
    pub fn with_n(self, n: usize) -> Result<Self> {
        Self { n, depth: n, ..self }.validated()
    }

    pub fn is_limit(&self) -> bool {
        self.n == 0
    }

    /// `β = 2c/N`; `None` for the limit matrix.
    pub fn beta(&self) -> Option<f64> {
        (self.n > 0).then(|| 2.0 * self.c / self.n as f64)
    }

    pub fn size(&self) -> usize {
        if self.is_limit() {
            self.depth
        } else {
            self.n
        }
    }

    fn validated(self) -> Result<Self> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invalid(format!("c must be positive, got {}", self.c));
        }
        if self.n == 0 && self.depth == 0 {
            return invalid("limit matrices need depth >= 1");
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if x > 0.0 && x.is_finite() => Ok(()),
            Some(x) => invalid(format!("{name} must be positive, got {x}")),
            None => invalid(format!("{name} is required for {:?}", self.kind)),
        };
        let absent = |name: &str, v: Option<f64>| match v {
            None => Ok(()),
            Some(_) => invalid(format!("{name} does not apply to {:?}", self.kind)),
        };
        match self.kind {
            EnsembleKind::Gaussian => {
                absent("alpha", self.alpha)?;
                absent("a", self.a)?;
                absent("b", self.b)?;
            }
            EnsembleKind::Laguerre => {
                positive("alpha", self.alpha)?;
                absent("a", self.a)?;
                absent("b", self.b)?;
            }
            EnsembleKind::Jacobi => {
                absent("alpha", self.alpha)?;
                positive("a", self.a)?;
                positive("b", self.b)?;
            }
        }
        Ok(self)
    }
}

/// Draw a matrix for `params` (finite model or truncated limit).
pub fn sample(rng: &mut RngStream, params: &EnsembleParams) -> Result<TridiagonalMatrix> {
    let c = params.c;
    match (params.kind, params.is_limit()) {
        (EnsembleKind::Gaussian, false) => gaussian_model(rng, params.n, c),
        (EnsembleKind::Gaussian, true) => gaussian_limit(rng, c, params.depth),
        (EnsembleKind::Laguerre, false) => laguerre_model(rng, params.n, params.alpha.unwrap(), c),
        (EnsembleKind::Laguerre, true) => laguerre_limit(rng, params.alpha.unwrap(), c, params.depth),
        (EnsembleKind::Jacobi, false) => jacobi_model(rng, params.n, params.a.unwrap(), params.b.unwrap(), c),
        (EnsembleKind::Jacobi, true) => {
            jacobi_limit(rng, params.a.unwrap(), params.b.unwrap(), c, params.depth)
        }
    }
}

fn check_size(n: usize, c: f64) -> Result<()> {
    if n == 0 {
        return invalid("matrix size must be at least 1");
    }
    if !(c > 0.0) {
        return invalid(format!("c must be positive, got {c}"));
    }
    Ok(())
}

/// Gaussian-type matrix: `a_i ~ N(0,1)` and `b_j ~ χ̃_{dof(j)}` (1-based `j`),
/// drawn in the order `a_1, b_1, a_2, b_2, …`.
pub fn gaussian_from_degrees(
    rng: &mut RngStream,
    size: usize,
    dof: impl Fn(usize) -> f64,
) -> Result<TridiagonalMatrix> {
    let mut diag = Vec::with_capacity(size);
    let mut off = Vec::with_capacity(size.saturating_sub(1));
    for i in 1..=size {
        diag.push(sample_normal(rng));
        if i < size {
            off.push(sample_chi_tilde(rng, dof(i))?);
        }
    }
    TridiagonalMatrix::new(diag, off)
}

/// `H_N`: diagonal `N(0,1)`, off-diagonal `b_j ~ χ̃_{(N-j)β}`.
pub fn gaussian_model(rng: &mut RngStream, n: usize, c: f64) -> Result<TridiagonalMatrix> {
    check_size(n, c)?;
    let beta = 2.0 * c / n as f64;
    gaussian_from_degrees(rng, n, |j| (n - j) as f64 * beta)
}

/// `H_c` truncated: i.i.d. `N(0,1)` diagonal and `χ̃_{2c}` off-diagonal.
pub fn gaussian_limit(rng: &mut RngStream, c: f64, depth: usize) -> Result<TridiagonalMatrix> {
    check_size(depth, c)?;
    gaussian_from_degrees(rng, depth, |_| 2.0 * c)
}

/// `B·Bᵀ` for lower bidiagonal `B` with `d_i ~ χ̃_{diag_dof(i)}` and
/// `e_i ~ χ̃_{sub_dof(i)}`, drawn as `d_1, e_1, d_2, e_2, …`.
pub fn laguerre_from_degrees(
    rng: &mut RngStream,
    size: usize,
    diag_dof: impl Fn(usize) -> f64,
    sub_dof: impl Fn(usize) -> f64,
) -> Result<TridiagonalMatrix> {
    let mut d = Vec::with_capacity(size);
    let mut e = Vec::with_capacity(size.saturating_sub(1));
    for i in 1..=size {
        d.push(sample_chi_tilde(rng, diag_dof(i))?);
        if i < size {
            e.push(sample_chi_tilde(rng, sub_dof(i))?);
        }
    }
    TridiagonalMatrix::from_lower_bidiagonal(&d, &e)
}

/// `J_N^{(L)} = B_N B_Nᵀ` with `d_i ~ χ̃_{2α+β(N-i)}`, `e_i ~ χ̃_{β(N-i)}`.
pub fn laguerre_model(rng: &mut RngStream, n: usize, alpha: f64, c: f64) -> Result<TridiagonalMatrix> {
    check_size(n, c)?;
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let beta = 2.0 * c / n as f64;
    laguerre_from_degrees(
        rng,
        n,
        |i| 2.0 * alpha + beta * (n - i) as f64,
        |i| beta * (n - i) as f64,
    )
}

/// `J_{α,c} = B_{α,c} B_{α,c}ᵀ` truncated: `d_i ~ χ̃_{2(α+c)}`, `e_i ~ χ̃_{2c}`.
pub fn laguerre_limit(rng: &mut RngStream, alpha: f64, c: f64, depth: usize) -> Result<TridiagonalMatrix> {
    check_size(depth, c)?;
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    laguerre_from_degrees(rng, depth, |_| 2.0 * (alpha + c), |_| 2.0 * c)
}

/// Killip–Nenciu-type product `L·Lᵀ` with `p_n ~ Beta(p_params(n))`,
/// `q_n ~ Beta(q_params(n))`, `s_n = √(p_n(1 - q_{n-1}))` (`q_0 = 0`) and
/// `t_n = √(q_n(1 - p_n))`. Draw order: `p_1, q_1, p_2, q_2, …`.
pub fn jacobi_from_params(
    rng: &mut RngStream,
    size: usize,
    p_params: impl Fn(usize) -> (f64, f64),
    q_params: impl Fn(usize) -> (f64, f64),
) -> Result<TridiagonalMatrix> {
    let mut s = Vec::with_capacity(size);
    let mut t = Vec::with_capacity(size.saturating_sub(1));
    let mut one_minus_q_prev = 1.0;
    for n in 1..=size {
        let (pa, pb) = p_params(n);
        let (p, one_minus_p) = sample_beta_pair(rng, pa, pb)?;
        s.push((p * one_minus_q_prev).sqrt());
        if n < size {
            let (qa, qb) = q_params(n);
            let (q, one_minus_q) = sample_beta_pair(rng, qa, qb)?;
            t.push((q * one_minus_p).sqrt().max(f64::MIN_POSITIVE));
            one_minus_q_prev = one_minus_q;
        }
    }
    TridiagonalMatrix::from_lower_bidiagonal(&s, &t)
}

pub fn jacobi_model(rng: &mut RngStream, n: usize, a: f64, b: f64, c: f64) -> Result<TridiagonalMatrix> {
    check_size(n, c)?;
    if !(a > 0.0 && b > 0.0) {
        return invalid(format!("a and b must be positive, got ({a}, {b})"));
    }
    let half_beta = c / n as f64;
    jacobi_from_params(
        rng,
        n,
        |k| {
            let m = (n - k) as f64 * half_beta;
            (m + a, m + b)
        },
        |k| {
            let q1 = (n - k) as f64 * half_beta;
            let q2 = (n - k - 1) as f64 * half_beta + a + b;
            assert!(q1 > 0.0 && q2 > 0.0, "beta parameter must stay positive");
            (q1, q2)
        },
    )
}

/// `J_{a,b,c}` truncated: `p_n ~ Beta(c+a, c+b)`, `q_n ~ Beta(c, c+a+b)`.
pub fn jacobi_limit(rng: &mut RngStream, a: f64, b: f64, c: f64, depth: usize) -> Result<TridiagonalMatrix> {
    check_size(depth, c)?;
    if !(a > 0.0 && b > 0.0) {
        return invalid(format!("a and b must be positive, got ({a}, {b})"));
    }
    jacobi_from_params(rng, depth, |_| (c + a, c + b), |_| (c, c + a + b))
}

/// Matrix entry addressed with 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Entry {
    Diag(usize),
    Offdiag(usize),
}

impl Entry {
    pub fn read(&self, j: &TridiagonalMatrix) -> f64 {
        match *self {
            Entry::Diag(i) => j.diag()[i - 1],
            Entry::Offdiag(i) => j.offdiag()[i - 1],
        }
    }

    fn rows_needed(&self) -> usize {
        match *self {
            Entry::Diag(i) => i,
            Entry::Offdiag(i) => i + 1,
        }
    }
}

/// How the finite-model and limit-model samples relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Draw `t` of both samples uses the same substream; the statistic then
    /// tracks the distance between the two laws with little sampling noise.
    Common,
    /// Independent substreams; the statistic has the usual two-sample noise
    /// floor of order `1/√M`.
    Independent,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryDistance {
    pub n: usize,
    pub ks: f64,
}

/// Two-sample KS distance between `m` draws of `entry` from the finite model
/// at each `N` in `n_list` and `m` draws of the same entry from the limit.
pub fn entry_convergence_check(
    rng: &RngStream,
    params: &EnsembleParams,
    entry: Entry,
    n_list: &[usize],
    m: usize,
    coupling: Coupling,
) -> Result<Vec<EntryDistance>> {
    if m == 0 {
        return invalid("need at least one draw per sample");
    }
    let depth = entry.rows_needed();
    let limit_params = params.limit(depth)?;
    let limit_root = match coupling {
        Coupling::Common => rng.split(0),
        Coupling::Independent => rng.split(1),
    };
    let limit_sample = draw_entries(&limit_root, &limit_params, entry, m)?;
    n_list
        .iter()
        .map(|&n| {
            if n < depth {
                return invalid(format!("N = {n} is too small for entry {entry:?}"));
            }
            let finite = draw_entries(&rng.split(0), &params.with_n(n)?, entry, m)?;
            Ok(EntryDistance {
                n,
                ks: ks_two_sample(&finite, &limit_sample)?,
            })
        })
        .collect()
}

fn draw_entries(root: &RngStream, params: &EnsembleParams, entry: Entry, m: usize) -> Result<Vec<f64>> {
    (0..m as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.split(t);
            Ok(entry.read(&sample(&mut rng, params)?))
        })
        .collect()
}
