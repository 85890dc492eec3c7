//! Seeded producers of starlike comparison functions, Schwarz functions and
//! certified class members.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64`, so a seed fixes every
//! output on every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{build_gk, reduce_gk, starlike_report, ClassParams, ORIGIN_TOL};
use crate::error::{Error, Result};
use crate::sampling::{circle, grid_max_modulus, make_grid, SamplingPolicy};
use crate::series::TruncatedSeries;

/// Samples on `|z| = 1` used to normalize a random Schwarz polynomial.
pub const SCHWARZ_SAMPLES: usize = 720;
/// Fraction of `beta` the sampled maximum of a random Schwarz function is scaled to.
pub const SCHWARZ_SAFETY: f64 = 0.99;
/// Upper limit for [`adequate_degree`].
pub const MAX_ADEQUATE_DEGREE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSeed {
    pub seed: u64,
    /// Degree of the random polynomial `q` in `w = z q`.
    pub degree: usize,
    /// Cap on `|w|`.
    pub beta: f64,
}

impl GeneratorSeed {
    pub fn new(seed: u64, degree: usize, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!("beta = {beta} must lie in [0, 1]")));
        }
        Ok(Self { seed, degree, beta })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// `z^p (1 - z)^{-2p/k}`, starlike of order `(k-1)p/k`.
pub fn extremal_starlike(params: &ClassParams, n: usize) -> Result<TruncatedSeries> {
    if n == 0 {
        return Err(Error::InvalidParams("truncation degree must be at least 1".into()));
    }
    let m = 2.0 * params.p_f64() / f64::from(params.k());
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut c = 1.0;
    coeffs.push(c);
    for j in 1..=n {
        c *= (m + j as f64 - 1.0) / j as f64;
        coeffs.push(c);
    }
    TruncatedSeries::from_real(i64::from(params.p()), &coeffs)
}

/// `w = z q` for a random polynomial `q` scaled so that its sampled maximum on
/// the unit circle is `0.99 beta`.
pub fn random_schwarz(gen: &GeneratorSeed) -> Result<TruncatedSeries> {
    let gen = GeneratorSeed::new(gen.seed, gen.degree, gen.beta)?;
    let mut rng = gen.rng();
    let q: Vec<Complex64> = (0..=gen.degree)
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect();
    let q = TruncatedSeries::new(1, q)?;
    let max = circle(1.0, SCHWARZ_SAMPLES)
        .into_iter()
        .map(|z| q.evaluate(z).norm())
        .fold(0.0, f64::max);
    if max == 0.0 || gen.beta == 0.0 {
        return TruncatedSeries::from_real(1, &vec![0.0; gen.degree + 1]);
    }
    Ok(q.scale(Complex64::new(SCHWARZ_SAFETY * gen.beta / max, 0.0)))
}

fn require_schwarz_origin(w: &TruncatedSeries) -> Result<TruncatedSeries> {
    w.factor_out_z(ORIGIN_TOL).map_err(|_| Error::NotSchwarz("w(0) != 0".into()))
}

/// The `g` with `z g'/g = (p + (p - 2a) w)/(1 - w)` and `a = (k-1)p/k`,
/// truncated at degree `n`. It is starlike of that order whenever `|w| < 1`.
pub fn starlike_from_schwarz(params: &ClassParams, w: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    let w = require_schwarz_origin(w)?;
    let p = params.p_f64();
    let order = params.starlike_order();
    let w = TruncatedSeries::new(0, {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        for (j, slot) in c.iter_mut().enumerate() {
            *slot = w.coeff_of_power(j as i64);
        }
        c
    })?;
    let one_minus = (-&w).add_constant(Complex64::new(1.0, 0.0));
    // r = Q - p = 2(p - a) w / (1 - w)
    let r = w.scale(Complex64::new(2.0 * (p - order), 0.0)).divide(&one_minus)?;
    let r = r.coeffs();
    let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for j in 1..=n {
        let s: Complex64 = (1..=j).map(|i| r[i] * e[j - i]).sum();
        e[j] = s / j as f64;
    }
    TruncatedSeries::new(i64::from(params.p()), e)
}

/// Builds `f` with `z^{(k-1)p+1} f'/g_k = (p + (p - 2 gamma) w)/(1 - w)`,
/// truncated at degree `n`.
pub fn synthesize_member(
    g: &TruncatedSeries,
    params: &ClassParams,
    w: &TruncatedSeries,
    n: usize,
    policy: &SamplingPolicy,
) -> Result<TruncatedSeries> {
    let starlike = starlike_report(g, params.starlike_order(), params.p(), policy)?;
    if !starlike.holds {
        return Err(Error::NotStarlike {
            order: params.starlike_order(),
            margin: starlike.min_margin,
            witness: starlike.witness,
        });
    }
    let w = require_schwarz_origin(w)?;
    let grid = make_grid(policy)?;
    let (max, at) = grid_max_modulus(|z| w.evaluate(z), &grid)?;
    if max >= 1.0 {
        return Err(Error::NotSchwarz(format!("|w| reaches {max} at {at}")));
    }
    synthesize_unchecked(g, params, &w, n)
}

pub(crate) fn synthesize_unchecked(
    g: &TruncatedSeries,
    params: &ClassParams,
    w: &TruncatedSeries,
    n: usize,
) -> Result<TruncatedSeries> {
    let p = params.p_f64();
    let gamma = params.gamma();
    let big_gk = reduce_gk(&build_gk(&g.with_degree(n), params)?, params)?;
    let w = w.with_degree(n);
    let num = w
        .scale(Complex64::new(p - 2.0 * gamma, 0.0))
        .add_constant(Complex64::new(p, 0.0));
    let den = (-&w).add_constant(Complex64::new(1.0, 0.0));
    let h = num.divide(&den)?;
    let fprime = big_gk.multiply(&h).downshift(1)?;
    fprime.integrate_primitive(params.p())
}

/// Smallest degree whose omitted tail of the coefficient majorant of `f'`,
/// `z^{p-1} (1 - z)^{-2p} (p + 2(p - gamma) z/(1 - z))`, is below `tol` at `r`.
/// Capped at [`MAX_ADEQUATE_DEGREE`].
pub fn adequate_degree(params: &ClassParams, r: f64, tol: f64) -> usize {
    let p = params.p_f64();
    let two_p = 2.0 * p;
    // binomial coefficients of (1 - z)^{-2p} and their prefix sums give the
    // coefficients of (1 - z)^{-2p-1}
    let mut binom = 1.0;
    let mut prefix = 1.0;
    let mut majorant = Vec::with_capacity(MAX_ADEQUATE_DEGREE + 1);
    majorant.push(p);
    for n in 1..=MAX_ADEQUATE_DEGREE {
        binom *= (two_p + n as f64 - 1.0) / n as f64;
        // coefficient of z^n in (1-z)^{-2p} p + 2(p-gamma) z (1-z)^{-2p-1}
        majorant.push(p * binom + 2.0 * (p - params.gamma()) * prefix);
        prefix += binom;
    }
    let terms: Vec<f64> = majorant
        .iter()
        .enumerate()
        .map(|(n, m)| m * r.powi(params.p() as i32 - 1 + n as i32))
        .collect();
    // the terms decay geometrically past the peak; bound the rest by a ratio
    let last = terms[MAX_ADEQUATE_DEGREE];
    let mut tail = if last == 0.0 {
        0.0
    } else {
        let ratio = last / terms[MAX_ADEQUATE_DEGREE - 1];
        if ratio.is_nan() || ratio >= 1.0 {
            return MAX_ADEQUATE_DEGREE;
        }
        last * ratio / (1.0 - ratio)
    };
    for n in (1..=MAX_ADEQUATE_DEGREE).rev() {
        if tail + terms[n] > tol {
            return n.max(crate::series::DEFAULT_DEGREE);
        }
        tail += terms[n];
    }
    crate::series::DEFAULT_DEGREE
}

/// A comparison function with its Schwarz function and the member built from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthesized {
    pub params: ClassParams,
    pub f: TruncatedSeries,
    pub g: TruncatedSeries,
    pub w: TruncatedSeries,
}

/// Which comparison function a seeded draw uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Extremal,
    Perturbed,
}

/// Draws a member from one seed: `g` is extremal or built from a second random
/// Schwarz function, `w` is random with cap `gen.beta`.
pub fn seeded_member(
    params: &ClassParams,
    gen: &GeneratorSeed,
    base: BaseKind,
    n: usize,
    policy: &SamplingPolicy,
) -> Result<Synthesized> {
    let g = match base {
        BaseKind::Extremal => extremal_starlike(params, n)?,
        BaseKind::Perturbed => {
            let mut rng = gen.rng();
            let g_seed = GeneratorSeed::new(rng.random(), gen.degree, rng.random_range(0.2..=0.8))?;
            starlike_from_schwarz(params, &random_schwarz(&g_seed)?, n)?
        }
    };
    let w = random_schwarz(gen)?;
    let f = synthesize_member(&g, params, &w, n, policy)?;
    Ok(Synthesized { params: *params, f, g, w })
}

/// Draws `(f, g)` whose coefficient condition holds with a positive margin:
/// `g` comes from a small random Schwarz function (or is `z^p` when that leaves
/// no room), and the coefficients of `f` are random and scaled to use a random
/// fraction of the remaining budget.
pub fn sufficient_draw(params: &ClassParams, gen: &GeneratorSeed, n: usize) -> Result<(TruncatedSeries, TruncatedSeries)> {
    let mut rng = gen.rng();
    let p = params.p_f64();
    let gamma = params.gamma();
    let weight = (p - 2.0 * gamma).abs() + p;
    let budget = 2.0 * (p - gamma);
    let g_seed = GeneratorSeed::new(rng.random(), gen.degree, rng.random_range(0.0..=0.1))?;
    let mut g = starlike_from_schwarz(params, &random_schwarz(&g_seed)?, n)?;
    let gk_sum = |g: &TruncatedSeries| -> Result<f64> {
        let big = reduce_gk(&build_gk(g, params)?, params)?;
        Ok(big.coeffs().iter().skip(1).map(|c| c.norm()).sum())
    };
    let mut left = budget - weight * gk_sum(&g)?;
    if left <= 0.0 {
        g = TruncatedSeries::monomial(params.p(), n);
        left = budget;
    }
    let decay: f64 = rng.random_range(0.3..0.9);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    for (j, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) * decay.powi(j as i32);
    }
    let used: f64 = coeffs.iter().enumerate().skip(1).map(|(j, c)| 2.0 * (j as f64 + p) * c.norm()).sum();
    let target = rng.random_range(0.05..0.95) * left;
    if used > 0.0 {
        for c in coeffs.iter_mut().skip(1) {
            *c *= target / used;
        }
    }
    Ok((TruncatedSeries::new(i64::from(params.p()), coeffs)?, g))
}
