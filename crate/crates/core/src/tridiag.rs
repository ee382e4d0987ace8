//! Jacobi-matrix numerics.
//!
//! A Jacobi matrix is symmetric tridiagonal with diagonal `a_1..a_n` and
//! strictly positive off-diagonal `b_1..b_{n-1}`. Its spectral measure at the
//! first coordinate has moments `J^k(1,1)`; for a finite matrix it is the
//! atomic measure on the eigenvalues with weights equal to the squared first
//! eigenvector components, which is what [`spectral_measure`] computes with an
//! implicit-shift QL iteration that tracks only the first row of the
//! eigenvector matrix.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::measures::{fmt17, grid_points, merge_atoms, parse_f64, DensityGrid, DiscreteMeasure, MomentVector};

/// Finite symmetric tridiagonal matrix with positive off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return invalid("tridiagonal matrix must have at least one row");
        }
        if offdiag.len() + 1 != diag.len() {
            return invalid(format!(
                "off-diagonal length {} does not match diagonal length {}",
                offdiag.len(),
                diag.len()
            ));
        }
        if let Some(a) = diag.iter().find(|a| !a.is_finite()) {
            return invalid(format!("non-finite diagonal entry {a}"));
        }
        if let Some((j, b)) = offdiag.iter().enumerate().find(|(_, b)| !(**b > 0.0) || !b.is_finite()) {
            return invalid(format!("off-diagonal entry b_{} = {b} is not strictly positive", j + 1));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    /// `L·Lᵀ` for the lower bidiagonal `L` with diagonal `d` and subdiagonal `e`.
    pub fn from_lower_bidiagonal(d: &[f64], e: &[f64]) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return invalid("bidiagonal factor has inconsistent lengths");
        }
        let n = d.len();
        let mut diag = Vec::with_capacity(n);
        let mut offdiag = Vec::with_capacity(n - 1);
        for i in 0..n {
            let below = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
            diag.push(d[i] * d[i] + below);
            if i + 1 < n {
                offdiag.push(d[i] * e[i]);
            }
        }
        Self::new(diag, offdiag)
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Leading `depth × depth` block.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.size() {
            return invalid(format!("cannot truncate size {} to {depth}", self.size()));
        }
        Ok(TridiagonalMatrix {
            diag: self.diag[..depth].to_vec(),
            offdiag: self.offdiag[..depth - 1].to_vec(),
        })
    }

    /// Partial sum of `1/b_j`; divergence of the full series guarantees a
    /// determinate moment problem. Only a heuristic for a finite prefix.
    pub fn carleman_partial_sum(&self) -> f64 {
        self.offdiag.iter().map(|b| 1.0 / b).sum()
    }

    /// `y = J x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.size();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "a,b")?;
        for (i, a) in self.diag.iter().enumerate() {
            match self.offdiag.get(i) {
                Some(b) => writeln!(out, "{},{}", fmt17(*a), fmt17(*b))?,
                None => writeln!(out, "{},", fmt17(*a))?,
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "a" || &headers[1] != "b" {
            return Err(Error::Parse("expected header `a,b`".into()));
        }
        let mut diag = Vec::new();
        let mut off = Vec::new();
        for record in reader.records() {
            let record = record?;
            diag.push(parse_f64(record.get(0).unwrap_or(""))?);
            if let Some(s) = record.get(1).filter(|s| !s.is_empty()) {
                off.push(parse_f64(s)?);
            }
        }
        if !off.is_empty() && off.len() == diag.len() {
            return Err(Error::Parse("last row must leave `b` empty".into()));
        }
        Self::new(diag, off)
    }
}

/// Recurrence coefficients of a measure, stored in Jacobi-matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCoefficients(TridiagonalMatrix);

impl JacobiCoefficients {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        TridiagonalMatrix::new(a, b).map(JacobiCoefficients)
    }

    pub fn a(&self) -> &[f64] {
        self.0.diag()
    }

    pub fn b(&self) -> &[f64] {
        self.0.offdiag()
    }

    pub fn len(&self) -> usize {
        self.0.size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> &TridiagonalMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> TridiagonalMatrix {
        self.0
    }
}

impl From<TridiagonalMatrix> for JacobiCoefficients {
    fn from(m: TridiagonalMatrix) -> Self {
        JacobiCoefficients(m)
    }
}

/// `J^n(1,1)` by repeated products with `e_1`.
///
/// Only the first `min(n, size-1) + 1` components can be nonzero after `n`
/// steps, which keeps the cost at `O(n · min(n, size))`.
pub fn moment(j: &TridiagonalMatrix, n: usize) -> f64 {
    let size = j.size();
    let a = j.diag();
    let b = j.offdiag();
    let mut x = vec![0.0; size];
    let mut y = vec![0.0; size];
    x[0] = 1.0;
    for step in 0..n {
        let active = (step + 2).min(size);
        for i in 0..active {
            let mut acc = a[i] * x[i];
            if i > 0 {
                acc += b[i - 1] * x[i - 1];
            }
            if i + 1 < size {
                acc += b[i] * x[i + 1];
            }
            y[i] = acc;
        }
        std::mem::swap(&mut x, &mut y);
    }
    x[0]
}

/// Moment of the infinite matrix whose leading block is `j`: the walk count
/// `J^n(1,1)` only sees rows `1..=n/2 + 1`, so the block must be larger than
/// `n / 2`.
pub fn truncation_moment(j: &TridiagonalMatrix, n: usize) -> Result<f64> {
    if j.size() <= n / 2 {
        return invalid(format!(
            "moment {n} of a truncation needs size > {}, got {}",
            n / 2,
            j.size()
        ));
    }
    Ok(moment(j, n))
}

/// Moments `0..=k_max` of a matrix.
pub fn moments(j: &TridiagonalMatrix, k_max: usize) -> Vec<f64> {
    let size = j.size();
    let mut x = vec![0.0; size];
    let mut y = vec![0.0; size];
    x[0] = 1.0;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(1.0);
    for _ in 0..k_max {
        j.mul_vec(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        out.push(x[0]);
    }
    out
}

/// Eigenvalues and squared first eigenvector components, in QL output order.
pub fn eigen_first_row(j: &TridiagonalMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = j.size();
    let mut d = j.diag().to_vec();
    let mut e = j.offdiag().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    let budget = 30 * n.max(1);
    let mut iterations = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > budget {
                return Err(Error::NoConvergence { size: n, iterations });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let w = z.into_iter().map(|v| v * v).collect();
    Ok((d, w))
}

/// Spectral measure of `j` at the first coordinate.
pub fn spectral_measure(j: &TridiagonalMatrix) -> Result<DiscreteMeasure> {
    let (lambda, w) = eigen_first_row(j)?;
    merge_atoms(lambda.into_iter().zip(w))
}

/// Eigenvalues of `j`, ascending.
pub fn eigenvalues(j: &TridiagonalMatrix) -> Result<Vec<f64>> {
    let (mut lambda, _) = eigen_first_row(j)?;
    lambda.sort_by(f64::total_cmp);
    Ok(lambda)
}

/// Natural log of the spectral weight of the eigenvalue `lambda`.
///
/// The eigenvector is built from a twisted factorization of `j - λ`, so
/// weights far below machine precision keep their relative accuracy as long
/// as `lambda` is accurate and separated from the rest of the spectrum.
pub fn log_spectral_weight(j: &TridiagonalMatrix, lambda: f64) -> f64 {
    let (a, b) = (j.diag(), j.offdiag());
    let n = a.len();
    let guard = |x: f64, scale: f64| if x == 0.0 { f64::EPSILON * scale.max(f64::MIN_POSITIVE) } else { x };
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    plus[0] = guard(a[0] - lambda, lambda.abs());
    for i in 1..n {
        plus[i] = guard(a[i] - lambda - b[i - 1] * b[i - 1] / plus[i - 1], b[i - 1]);
    }
    minus[n - 1] = guard(a[n - 1] - lambda, lambda.abs());
    for i in (0..n - 1).rev() {
        minus[i] = guard(a[i] - lambda - b[i] * b[i] / minus[i + 1], b[i]);
    }
    let twist = (0..n)
        .min_by(|&p, &q| {
            let g = |r: usize| (plus[r] + minus[r] - (a[r] - lambda)).abs();
            g(p).total_cmp(&g(q))
        })
        .unwrap_or(0);
    let mut logs = vec![0.0; n];
    for i in (0..twist).rev() {
        logs[i] = logs[i + 1] + b[i].ln() - plus[i].abs().ln();
    }
    for i in twist + 1..n {
        logs[i] = logs[i - 1] + b[i - 1].ln() - minus[i].abs().ln();
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = top + 0.5 * logs.iter().map(|l| (2.0 * (l - top)).exp()).sum::<f64>().ln();
    2.0 * (logs[0] - norm)
}

/// `P_k(x)` from the three-term recurrence `P_{n+1} = (x - a_{n+1}) P_n - b_n² P_{n-1}`.
pub fn eval_orthopoly(coeffs: &JacobiCoefficients, k: usize, x: f64) -> Result<f64> {
    if k > coeffs.len() {
        return invalid(format!("P_{k} needs {k} recurrence levels, only {} available", coeffs.len()));
    }
    let a = coeffs.a();
    let b = coeffs.b();
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..k {
        let b2 = if n == 0 { 0.0 } else { b[n - 1] * b[n - 1] };
        let next = (x - a[n]) * cur - b2 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Remainder substituted below the last row of a truncated continued fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfTail {
    Zero,
    Value(Complex64),
    /// Solve `t = b² / (z - a - t)`, i.e. continue the matrix with constant
    /// entries `a`, `b`.
    SelfConsistent { a: f64, b: f64 },
}

impl CfTail {
    /// Self-consistent tail using the last diagonal and off-diagonal entries.
    pub fn from_last_entries(j: &TridiagonalMatrix) -> CfTail {
        let a = *j.diag().last().unwrap();
        let b = j.offdiag().last().copied().unwrap_or(0.0);
        CfTail::SelfConsistent { a, b }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        match *self {
            CfTail::Zero => Complex64::new(0.0, 0.0),
            CfTail::Value(t) => t,
            CfTail::SelfConsistent { a, b } => self_consistent_tail(z, a, b),
        }
    }
}

/// Root of `t² - (z - a) t + b² = 0` with `Im t` of opposite sign to `Im z`
/// (the branch of `b² ∫ dσ(x)/(z - x)` for the semicircle σ of radius `2b`).
pub fn self_consistent_tail(z: Complex64, a: f64, b: f64) -> Complex64 {
    let w = z - a;
    let disc = (w * w - 4.0 * b * b).sqrt();
    let t1 = (w - disc) * 0.5;
    let t2 = (w + disc) * 0.5;
    let pick = |t: Complex64| {
        if z.im > 0.0 {
            t.im <= 0.0
        } else if z.im < 0.0 {
            t.im >= 0.0
        } else {
            true
        }
    };
    match (pick(t1), pick(t2)) {
        (true, false) => t1,
        (false, true) => t2,
        _ => {
            if t1.norm() <= t2.norm() {
                t1
            } else {
                t2
            }
        }
    }
}

/// `∫ dμ(x)/(z - x)` by the finite continued fraction of `j`, with `tail`
/// substituted below the last level.
pub fn stieltjes_cf(j: &TridiagonalMatrix, z: Complex64, tail: Complex64) -> Result<Complex64> {
    let a = j.diag();
    let b = j.offdiag();
    let n = a.len();
    let mut t = tail;
    for k in (0..n).rev() {
        let denom = z - a[k] - t;
        let mag = denom.norm();
        if !(mag >= 1e-300) {
            return Err(Error::IllConditioned { level: k + 1, magnitude: mag });
        }
        if k == 0 {
            return Ok(denom.inv());
        }
        t = b[k - 1] * b[k - 1] / denom;
    }
    unreachable!("matrix has at least one row")
}

/// Density `-(1/π) Im ∫ dμ(t)/(x + iε - t)` on a uniform grid, clipped at zero.
pub fn density_from_cf(
    j: &TridiagonalMatrix,
    grid: (f64, f64, usize),
    epsilon: f64,
    tail: CfTail,
) -> Result<DensityGrid> {
    let (x_min, x_max, n_points) = grid;
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    let xs: Vec<f64> = grid_points(x_min, x_max, n_points).collect();
    let values = xs
        .par_iter()
        .map(|&x| {
            let z = Complex64::new(x, epsilon);
            let g = stieltjes_cf(j, z, tail.value(z))?;
            Ok((-g.im / std::f64::consts::PI).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    DensityGrid::new(x_min, x_max, values)
}

/// Double-double arithmetic for the Hankel recursion.
mod dd {
    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

        pub fn from(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let (s, e) = quick_two_sum(s, e + t);
            let (hi, lo) = quick_two_sum(s, e + f);
            Dd { hi, lo }
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = self.hi * o.hi;
            let e = self.hi.mul_add(o.hi, -p);
            let e = e + (self.hi * o.lo + self.lo * o.hi);
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.sub(o.mul(Dd::from(q1)));
            let q2 = r.hi / o.hi;
            let r = r.sub(o.mul(Dd::from(q2)));
            let q3 = r.hi / o.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo }.add(Dd::from(q3))
        }
    }
}

/// Recover Jacobi coefficients from raw moments (Chebyshev's algorithm).
///
/// With `m[0..2k]` available, returns `a_1..a_k` and `b_1..b_{k-1}`. The
/// recursion runs in double-double arithmetic; it stops with
/// [`Error::HankelSingular`] when the measure has fewer support points than
/// the requested depth.
pub fn moments_to_jacobi(m: &MomentVector) -> Result<JacobiCoefficients> {
    moments_to_jacobi_depth(m, m.len() / 2)
}

pub fn moments_to_jacobi_depth(m: &MomentVector, depth: usize) -> Result<JacobiCoefficients> {
    use dd::Dd;
    let mom = m.as_slice();
    if depth == 0 {
        return invalid("recovery depth must be at least 1");
    }
    if mom.len() < 2 * depth {
        return invalid(format!(
            "depth {depth} needs {} moments, got {}",
            2 * depth,
            mom.len()
        ));
    }
    let len = 2 * depth;
    // sigma rows: previous (k-2), current (k-1), indexed by l.
    let mut prev = vec![Dd::ZERO; len];
    let mut cur: Vec<Dd> = mom[..len].iter().map(|&v| Dd::from(v)).collect();
    let mut alpha = vec![cur[1].div(cur[0])];
    let mut beta = vec![cur[0]];
    let mut scale = (alpha[0].to_f64().abs()).max(1e-300);

    for k in 1..depth {
        let mut next = vec![Dd::ZERO; len];
        for l in k..(len - k) {
            next[l] = cur[l + 1]
                .sub(alpha[k - 1].mul(cur[l]))
                .sub(beta[k - 1].mul(prev[l]));
        }
        let skk = next[k];
        let skm = cur[k - 1];
        let b = skk.div(skm);
        if !(b.to_f64() > 1e-13 * scale * scale) {
            return Err(Error::HankelSingular { achieved: k, requested: depth });
        }
        let a = next[k + 1].div(skk).sub(cur[k].div(skm));
        scale = scale.max(a.to_f64().abs()).max(b.to_f64().sqrt());
        alpha.push(a);
        beta.push(b);
        prev = cur;
        cur = next;
    }
    let a: Vec<f64> = alpha.iter().map(|v| v.to_f64()).collect();
    let b: Vec<f64> = beta[1..].iter().map(|v| v.to_f64().sqrt()).collect();
    JacobiCoefficients::new(a, b)
}

/// Jacobi matrix with constant entries `a = 0`, `b = 1`, truncated.
pub fn free_matrix(depth: usize) -> TridiagonalMatrix {
    TridiagonalMatrix::new(vec![0.0; depth], vec![1.0; depth.saturating_sub(1)])
        .expect("free matrix is valid")
}
