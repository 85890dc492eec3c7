//! Concentric-circle grids inside the unit disk, extremal scans over them,
//! winding numbers along circles, and composite Simpson quadrature.
//!
//! Strict inequalities on the open disk are checked on a finite grid: a
//! verdict holds when its minimum slack exceeds `-margin_tol`, and the raw
//! slack is always reported alongside it.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ANGLES: usize = 720;
pub const DEFAULT_R_MAX: f64 = 0.95;
pub const DEFAULT_MARGIN_TOL: f64 = 1e-9;
pub const DEFAULT_QUADRATURE_STEPS: usize = 1024;
pub const MIN_ANGLES: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn norm(self) -> f64 {
        self.to_complex().norm()
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexPoint> for Complex64 {
    fn from(z: ComplexPoint) -> Self {
        z.to_complex()
    }
}

impl fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    pub radii: Vec<f64>,
    pub angles_per_circle: usize,
    pub r_max: f64,
    pub margin_tol: f64,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        let mut radii: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
        radii.push(DEFAULT_R_MAX);
        Self {
            radii,
            angles_per_circle: DEFAULT_ANGLES,
            r_max: DEFAULT_R_MAX,
            margin_tol: DEFAULT_MARGIN_TOL,
        }
    }
}

impl SamplingPolicy {
    /// The default radii clipped to `r_max`, with `r_max` itself as the outer circle.
    pub fn with_r_max(r_max: f64) -> Self {
        let mut radii: Vec<f64> = Self::default().radii.into_iter().filter(|&r| r < r_max).collect();
        radii.push(r_max);
        Self { radii, r_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPolicy(msg));
        if !(self.r_max > 0.0 && self.r_max < 1.0) {
            return bad(format!("r_max = {} must lie in (0, 1)", self.r_max));
        }
        if self.radii.is_empty() {
            return bad("no radii".into());
        }
        if let Some(r) = self.radii.iter().find(|&&r| !(r > 0.0 && r <= self.r_max)) {
            return bad(format!("radius {r} outside (0, r_max = {}]", self.r_max));
        }
        if self.angles_per_circle < MIN_ANGLES {
            return bad(format!(
                "angles_per_circle = {} is below {MIN_ANGLES}",
                self.angles_per_circle
            ));
        }
        if !(self.margin_tol > 0.0 && self.margin_tol.is_finite()) {
            return bad(format!("margin_tol = {} must be positive", self.margin_tol));
        }
        Ok(())
    }

    /// Radius of the outermost sampled circle.
    pub fn outer_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }
}

/// Verdict of a strict inequality sampled over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub holds: bool,
    pub min_margin: f64,
    pub witness: ComplexPoint,
    pub checked_points: usize,
}

impl MembershipReport {
    /// Builds the report from per-point slacks (same order as `grid`).
    pub fn from_margins(margins: &[f64], grid: &[ComplexPoint], tol: f64) -> Result<Self> {
        let (min_margin, idx) = argmin(margins, grid)?;
        Ok(Self {
            holds: min_margin > -tol,
            min_margin,
            witness: grid[idx],
            checked_points: grid.len(),
        })
    }
}

/// Points `r e^{2 pi i j / M}` for each radius, radius-major.
pub fn make_grid(policy: &SamplingPolicy) -> Result<Vec<ComplexPoint>> {
    policy.validate()?;
    Ok(policy
        .radii
        .iter()
        .flat_map(|&r| circle(r, policy.angles_per_circle))
        .map(ComplexPoint::from)
        .collect())
}

/// `m` equispaced points on the circle of radius `r`, starting on the positive axis.
pub fn circle(r: f64, m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|j| Complex64::from_polar(r, TAU * j as f64 / m as f64))
        .collect()
}

/// Minimum of a precomputed slice with its first argmin; non-finite entries are errors.
pub fn argmin(values: &[f64], grid: &[ComplexPoint]) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue(grid[i]));
        }
        if v < best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// Minimum of `Re q` over the grid and where it occurs.
pub fn grid_min_real<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
where
    F: Fn(Complex64) -> Complex64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parallel::grid_min_real(q, grid)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::grid_min_real(q, grid)
    }
}

/// Maximum of `|q|` over the grid and where it occurs.
pub fn grid_max_modulus<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
where
    F: Fn(Complex64) -> Complex64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parallel::grid_max_modulus(q, grid)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::grid_max_modulus(q, grid)
    }
}

/// Evaluates `q` at every grid point, preserving grid order.
pub fn evaluate_on_grid<F>(q: F, grid: &[ComplexPoint]) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Sync + Send,
{
    crate::par::map(grid, |z| q(z.to_complex()))
}

// Ties resolve to the lowest index so both scan flavours agree bit for bit.
#[derive(Clone, Copy)]
enum Scan {
    Best(f64, usize),
    Bad(usize),
}

fn better(a: Scan, b: Scan, minimize: bool) -> Scan {
    match (a, b) {
        (Scan::Bad(i), Scan::Bad(j)) => Scan::Bad(i.min(j)),
        (bad @ Scan::Bad(_), _) | (_, bad @ Scan::Bad(_)) => bad,
        (Scan::Best(va, ia), Scan::Best(vb, ib)) => {
            let a_wins = if va == vb {
                ia < ib
            } else if minimize {
                va < vb
            } else {
                va > vb
            };
            if a_wins { a } else { b }
        }
    }
}

fn score(value: f64, i: usize) -> Scan {
    if value.is_finite() { Scan::Best(value, i) } else { Scan::Bad(i) }
}

fn finish(scan: Option<Scan>, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)> {
    match scan {
        None => Err(Error::InvalidPolicy("empty grid".into())),
        Some(Scan::Bad(i)) => Err(Error::NonFiniteValue(grid[i])),
        Some(Scan::Best(v, i)) => Ok((v, grid[i])),
    }
}

/// Single-threaded scans, always available.
pub mod sequential {
    use super::*;

    fn scan<F, S>(q: F, grid: &[ComplexPoint], value: S, minimize: bool) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64,
        S: Fn(Complex64) -> f64,
    {
        let best = grid
            .iter()
            .enumerate()
            .map(|(i, z)| score(value(q(z.to_complex())), i))
            .reduce(|a, b| better(a, b, minimize));
        finish(best, grid)
    }

    pub fn grid_min_real<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64,
    {
        scan(q, grid, |w| w.re, true)
    }

    pub fn grid_max_modulus<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64,
    {
        scan(q, grid, |w| w.norm(), false)
    }
}

/// Rayon scans with the same tie-breaking as [`sequential`].
#[cfg(feature = "parallel")]
pub mod parallel {
    use super::*;
    use rayon::prelude::*;

    fn scan<F, S>(q: F, grid: &[ComplexPoint], value: S, minimize: bool) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64 + Sync + Send,
        S: Fn(Complex64) -> f64 + Sync + Send,
    {
        let best = grid
            .par_iter()
            .enumerate()
            .map(|(i, z)| score(value(q(z.to_complex())), i))
            .reduce_with(|a, b| better(a, b, minimize));
        finish(best, grid)
    }

    pub fn grid_min_real<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64 + Sync + Send,
    {
        scan(q, grid, |w| w.re, true)
    }

    pub fn grid_max_modulus<F>(q: F, grid: &[ComplexPoint]) -> Result<(f64, ComplexPoint)>
    where
        F: Fn(Complex64) -> Complex64 + Sync + Send,
    {
        scan(q, grid, |w| w.norm(), false)
    }
}

/// Composite Simpson rule for `h` on `[0, r]`.
pub fn simpson_integrate<H>(h: H, r: f64, steps: usize) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    if steps < 2 || !steps.is_multiple_of(2) {
        return Err(Error::InvalidSteps(steps));
    }
    let dx = r / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let t = dx * i as f64;
        let v = h(t);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand(t));
        }
        let w = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * v;
    }
    Ok(sum * dx / 3.0)
}

/// Closed curve `theta -> F(r e^{i theta})` sampled on `base` equispaced
/// angles, with an interval bisected while `too_coarse(left, right)` says so
/// (at most `max_depth` times).
pub fn adaptive_loop<T, F, C>(r: f64, base: usize, eval: F, too_coarse: C, max_depth: u32) -> Vec<T>
where
    T: Clone,
    F: Fn(Complex64) -> T,
    C: Fn(&T, &T) -> bool,
{
    let at = |theta: f64| eval(Complex64::from_polar(r, theta));
    let step = TAU / base as f64;
    let mut out = Vec::with_capacity(base);
    let first = at(0.0);
    let mut left = first.clone();
    for j in 0..base {
        let t0 = step * j as f64;
        let t1 = step * (j + 1) as f64;
        let right = if j + 1 == base { first.clone() } else { at(t1) };
        // depth-first bisection, emitting each left endpoint once
        let mut stack = vec![(t0, left.clone(), t1, right.clone(), 0u32)];
        while let Some((a, va, b, vb, depth)) = stack.pop() {
            if depth < max_depth && too_coarse(&va, &vb) {
                let m = 0.5 * (a + b);
                let vm = at(m);
                stack.push((m, vm.clone(), b, vb, depth + 1));
                stack.push((a, va, m, vm, depth + 1));
            } else {
                out.push(va);
            }
        }
        left = right;
    }
    out
}

/// Winding number of the closed polygon through `values` around `center`.
pub fn winding_number<I>(values: I, center: Complex64) -> i64
where
    I: IntoIterator<Item = Complex64>,
{
    let mut iter = values.into_iter();
    let Some(first) = iter.next() else { return 0 };
    let mut prev = first - center;
    let mut total = 0.0;
    for v in iter.chain(std::iter::once(first)) {
        let cur = v - center;
        total += (cur / prev).arg();
        prev = cur;
    }
    (total / TAU).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(re: f64, im: f64) -> ComplexPoint {
        ComplexPoint::new(re, im)
    }

    fn close(a: ComplexPoint, b: ComplexPoint) -> bool {
        (a.to_complex() - b.to_complex()).norm() < 1e-12
    }

    #[test]
    fn default_policy_is_valid() {
        let p = SamplingPolicy::default();
        p.validate().unwrap();
        assert_eq!(p.radii.len(), 10);
        assert_eq!(p.outer_radius(), 0.95);
        assert_eq!(make_grid(&p).unwrap().len(), 7200);
    }

    #[test]
    fn grid_examples() {
        let policy = SamplingPolicy { radii: vec![0.5], angles_per_circle: 4, ..Default::default() };
        let grid = make_grid(&policy).unwrap();
        let expected = [pt(0.5, 0.0), pt(0.0, 0.5), pt(-0.5, 0.0), pt(0.0, -0.5)];
        assert_eq!(grid.len(), 4);
        for (a, b) in grid.iter().zip(expected) {
            assert!(close(*a, b));
        }

        let two = SamplingPolicy { radii: vec![0.1, 0.2], angles_per_circle: 4, ..Default::default() };
        assert_eq!(make_grid(&two).unwrap().len(), 8);

        let three = SamplingPolicy { angles_per_circle: 3, ..Default::default() };
        assert!(matches!(make_grid(&three), Err(Error::InvalidPolicy(_))));
    }

    #[test]
    fn policy_rejections() {
        let mut p = SamplingPolicy::default();
        p.radii.push(0.97);
        assert!(p.validate().is_err());
        let p = SamplingPolicy { r_max: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = SamplingPolicy { margin_tol: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = SamplingPolicy { radii: vec![], ..Default::default() };
        assert!(p.validate().is_err());
        let clipped = SamplingPolicy::with_r_max(0.9);
        clipped.validate().unwrap();
        assert_eq!(clipped.outer_radius(), 0.9);
    }

    #[test]
    fn min_real_examples() {
        let grid = make_grid(&SamplingPolicy::default()).unwrap();
        let (v, at) = grid_min_real(|_| Complex64::new(1.0, 0.0), &grid).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(at, grid[0]);

        let (v, at) = grid_min_real(|z| (Complex64::new(1.0, 0.0) - z).inv(), &grid).unwrap();
        assert!((v - 1.0 / 1.95).abs() < 1e-12);
        assert!(close(at, pt(-0.95, 0.0)));

        let half = make_grid(&SamplingPolicy { radii: vec![0.5], ..Default::default() }).unwrap();
        let (v, at) = grid_min_real(|z| z, &half).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
        assert!(close(at, pt(-0.5, 0.0)));
    }

    #[test]
    fn max_modulus_examples() {
        let grid = make_grid(&SamplingPolicy::default()).unwrap();
        let (v, at) = grid_max_modulus(|_| Complex64::new(0.0, 0.0), &grid).unwrap();
        assert_eq!((v, at), (0.0, grid[0]));

        let (v, at) = grid_max_modulus(|z| z, &grid).unwrap();
        assert!((v - 0.95).abs() < 1e-15);
        assert!((at.norm() - 0.95).abs() < 1e-15);

        let (v, at) = grid_max_modulus(|z| z / (Complex64::new(1.0, 0.0) - z), &grid).unwrap();
        assert!((v - 19.0).abs() < 1e-9);
        assert!(close(at, pt(0.95, 0.0)));
    }

    #[test]
    fn scan_reports_offending_point() {
        let grid = vec![pt(0.1, 0.0), pt(0.0, 0.0), pt(0.2, 0.0)];
        let err = grid_min_real(|z| z.inv(), &grid).unwrap_err();
        assert_eq!(err, Error::NonFiniteValue(pt(0.0, 0.0)));
        let err = sequential::grid_max_modulus(|z| z.inv(), &grid).unwrap_err();
        assert_eq!(err, Error::NonFiniteValue(pt(0.0, 0.0)));
    }

    #[test]
    fn simpson_examples() {
        assert!((simpson_integrate(|_| 1.0, 0.5, 1024).unwrap() - 0.5).abs() < 1e-15);
        let up = simpson_integrate(|t| (1.0 + t) / (1.0 - t).powi(3), 0.5, 1024).unwrap();
        assert!((up - 2.0).abs() < 1e-8);
        let down = simpson_integrate(|t| (1.0 - t) / (1.0 + t).powi(3), 0.5, 1024).unwrap();
        assert!((down - 2.0 / 9.0).abs() < 1e-8);

        assert_eq!(simpson_integrate(|_| 1.0, 1.0, 7), Err(Error::InvalidSteps(7)));
        assert_eq!(simpson_integrate(|_| 1.0, 1.0, 0), Err(Error::InvalidSteps(0)));
        assert_eq!(simpson_integrate(|t| 1.0 / t, 1.0, 4), Err(Error::NonFiniteIntegrand(0.0)));
    }

    #[test]
    fn winding_numbers() {
        let loop_pts = circle(0.9, 64);
        assert_eq!(winding_number(loop_pts.iter().copied(), Complex64::new(0.0, 0.0)), 1);
        assert_eq!(winding_number(loop_pts.iter().copied(), Complex64::new(2.0, 0.0)), 0);
        let squared = loop_pts.iter().map(|z| z * z);
        assert_eq!(winding_number(squared, Complex64::new(0.0, 0.0)), 2);
    }

    #[test]
    fn adaptive_loop_refines_fast_curves() {
        // z^40 on r = 0.99 turns 40 times; 7 base samples alias it away
        let f = |z: Complex64| z.powi(40);
        let coarse = adaptive_loop(0.99, 7, f, |_, _| false, 0);
        assert_eq!(coarse.len(), 7);
        assert_ne!(winding_number(coarse, Complex64::new(0.0, 0.0)), 40);
        let fine = adaptive_loop(0.99, 7, f, |a: &Complex64, b: &Complex64| (a - b).norm() > 0.1, 12);
        assert_eq!(winding_number(fine, Complex64::new(0.0, 0.0)), 40);
    }
}
