//! Measure and density value types shared across the crate.
//!
//! `DiscreteMeasure` is a finite atomic probability measure with strictly
//! increasing atom locations. `DensityGrid` tabulates a continuous density on
//! a uniform grid and integrates with the trapezoid rule. Both serialize to
//! two-column CSV at 17 significant digits.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

pub use num_complex::Complex64 as ComplexValue;

/// Tolerance on total mass after normalization.
pub const MASS_TOL: f64 = 1e-12;

/// Finite atomic probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Dirac mass at `x`.
    pub fn dirac(x: f64) -> Self {
        DiscreteMeasure {
            locations: vec![x],
            weights: vec![1.0],
        }
    }

    /// Uniform measure on the given points (the empirical distribution).
    pub fn empirical(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        merge_atoms(points.iter().map(|&x| (x, w)))
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// `∫ f dμ` as a compensated atom sum.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        neumaier_sum(self.atoms().map(|(x, w)| w * f(x)))
    }

    /// Raw moment `∫ x^k dμ`.
    pub fn moment(&self, k: u32) -> f64 {
        self.integrate(|x| x.powi(k as i32))
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        cdf_at(self, x)
    }

    pub fn min_location(&self) -> f64 {
        self.locations[0]
    }

    pub fn max_location(&self) -> f64 {
        self.locations[self.locations.len() - 1]
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "location,weight")?;
        for (x, w) in self.atoms() {
            writeln!(out, "{},{}", fmt17(x), fmt17(w))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let rows = read_two_columns(input, ("location", "weight"))?;
        let (locations, weights) = rows
            .into_iter()
            .map(|(x, w)| w.map(|w| (x, w)).ok_or_else(|| Error::Parse("missing weight".into())))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Self::from_sorted(locations, weights)
    }

    /// Validating constructor that keeps the given weights bit-for-bit.
    pub fn from_sorted(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.is_empty() || locations.len() != weights.len() {
            return invalid("measure needs matching nonempty location and weight lists");
        }
        if locations.windows(2).any(|p| !(p[0] < p[1])) || locations.iter().any(|x| !x.is_finite()) {
            return invalid("locations must be finite and strictly increasing");
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return invalid("weights must be finite and nonnegative");
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        Ok(DiscreteMeasure { locations, weights })
    }
}

/// Sort, merge bit-identical locations, and renormalize to unit mass.
pub fn merge_atoms<I>(raw: I) -> Result<DiscreteMeasure>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut atoms: Vec<(f64, f64)> = raw.into_iter().collect();
    if atoms.is_empty() {
        return invalid("merge_atoms: empty input");
    }
    for &(x, w) in &atoms {
        if !x.is_finite() {
            return invalid(format!("merge_atoms: non-finite location {x}"));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return invalid(format!("merge_atoms: invalid weight {w}"));
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut locations = Vec::with_capacity(atoms.len());
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match locations.last() {
            Some(&last) if last == x => *weights.last_mut().unwrap() += w,
            _ => {
                locations.push(x);
                weights.push(w);
            }
        }
    }
    let total = neumaier_sum(weights.iter().copied());
    if !(total > 0.0) {
        return invalid("merge_atoms: total weight is zero");
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(DiscreteMeasure { locations, weights })
}

/// Sum of weights of atoms located at or below `x`.
pub fn cdf_at(m: &DiscreteMeasure, x: f64) -> f64 {
    let idx = m.locations.partition_point(|&loc| loc <= x);
    if idx == m.len() {
        return 1.0;
    }
    neumaier_sum(m.weights[..idx].iter().copied()).min(1.0)
}

/// Tabulated density on a uniform grid over `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return invalid("DensityGrid needs at least two points");
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return invalid(format!("DensityGrid: bad range [{x_min}, {x_max}]"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return invalid(format!("DensityGrid: value {v} is not a finite nonnegative number"));
        }
        Ok(DensityGrid {
            x_min,
            x_max,
            n_points: values.len(),
            values,
        })
    }

    /// Tabulate `f` on `n_points` uniform nodes.
    pub fn tabulate<F: Fn(f64) -> f64>(x_min: f64, x_max: f64, n_points: usize, f: F) -> Result<Self> {
        let values = grid_points(x_min, x_max, n_points).map(f).collect();
        Self::new(x_min, x_max, values)
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.step()
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Trapezoid mass.
    pub fn mass(&self) -> f64 {
        integrate_density(self, |_| 1.0).expect("constant integrand is finite")
    }

    /// Checks the trapezoid mass against a declared target.
    pub fn check_mass(&self, target: f64, tol: f64) -> Result<()> {
        let mass = self.mass();
        if (mass - target).abs() > tol {
            return invalid(format!("density mass {mass} differs from {target} by more than {tol}"));
        }
        Ok(())
    }

    /// Cumulative trapezoid integral at every node (starting at 0).
    pub fn cumulative(&self) -> Vec<f64> {
        let h = self.step();
        let mut out = Vec::with_capacity(self.n_points);
        let mut acc = 0.0;
        let mut comp = 0.0;
        out.push(0.0);
        for pair in self.values.windows(2) {
            let y = 0.5 * h * (pair[0] + pair[1]) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            out.push(acc);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "x,density")?;
        for (x, v) in self.xs().zip(&self.values) {
            writeln!(out, "{},{}", fmt17(x), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let rows = read_two_columns(input, ("x", "density"))?;
        if rows.len() < 2 {
            return invalid("density CSV needs at least two rows");
        }
        let x_min = rows[0].0;
        let x_max = rows[rows.len() - 1].0;
        let values = rows
            .into_iter()
            .map(|(_, v)| v.ok_or_else(|| Error::Parse("missing density value".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(x_min, x_max, values)
    }
}

/// Piecewise-linear distribution function through tabulated points.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    /// `xs` strictly increasing, `cdf` nondecreasing from about 0 to about 1;
    /// values are rescaled so the table ends exactly at 1.
    pub fn new(xs: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != cdf.len() {
            return invalid("CDF table needs at least two matching points");
        }
        if xs.windows(2).any(|p| !(p[0] < p[1])) {
            return invalid("CDF table abscissae must be strictly increasing");
        }
        if cdf.windows(2).any(|p| p[1] < p[0]) || cdf.iter().any(|v| !v.is_finite()) {
            return invalid("CDF table values must be finite and nondecreasing");
        }
        let (lo, hi) = (cdf[0], cdf[cdf.len() - 1]);
        if !(hi > lo) {
            return invalid("CDF table has no mass");
        }
        let cdf = cdf.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
        Ok(TabulatedCdf { xs, cdf })
    }

    /// Normalized cumulative trapezoid integral of a density grid.
    pub fn from_density(g: &DensityGrid) -> Result<Self> {
        Self::new(g.xs().collect(), g.cumulative())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let i = self.xs.partition_point(|&p| p <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Smallest `x` with `cdf(x) >= u`, linear inside each cell.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.xs.len();
        let i = self.cdf.partition_point(|&v| v < u);
        if i == 0 {
            return self.xs[0];
        }
        if i >= n {
            return self.xs[n - 1];
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }
}

/// Trapezoid approximation of `∫ f(x) g(x) dx` over the grid range.
pub fn integrate_density<F: Fn(f64) -> f64>(g: &DensityGrid, f: F) -> Result<f64> {
    let h = g.step();
    let n = g.n_points;
    let mut terms = Vec::with_capacity(n);
    for (i, (x, v)) in g.xs().zip(&g.values).enumerate() {
        let fx = f(x);
        if !fx.is_finite() {
            return invalid(format!("integrand not finite at x = {x}"));
        }
        let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        terms.push(end * fx * v);
    }
    Ok(h * neumaier_sum(terms))
}

/// Raw moments `m[0..=K]` of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    m: Vec<f64>,
}

impl MomentVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return invalid("moment vector is empty");
        }
        if (m[0] - 1.0).abs() > 1e-12 {
            return invalid(format!("m[0] must be 1, got {}", m[0]));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return invalid("moment vector has non-finite entries");
        }
        if m.len() >= 3 && m[0] * m[2] - m[1] * m[1] < -1e-10 {
            return invalid("moment vector violates Hankel positivity (m0*m2 - m1^2 < 0)");
        }
        Ok(MomentVector { m })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.m.get(k).copied()
    }
}

pub(crate) fn grid_points(x_min: f64, x_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = if n > 1 { (x_max - x_min) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { x_max } else { x_min + i as f64 * h })
}

/// Neumaier-compensated sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn read_two_columns<R: BufRead>(input: R, names: (&str, &str)) -> Result<Vec<(f64, Option<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != names.0 || &headers[1] != names.1 {
        return Err(Error::Parse(format!(
            "expected header `{},{}`, got `{}`",
            names.0,
            names.1,
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let first = parse_f64(record.get(0).unwrap_or(""))?;
        let second = match record.get(1) {
            Some(s) if !s.is_empty() => Some(parse_f64(s)?),
            _ => None,
        };
        rows.push((first, second));
    }
    Ok(rows)
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}
