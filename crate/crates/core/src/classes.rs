//! The symmetrized products `g_k`, `G_k`, starlikeness and class membership
//! checks, Schwarz-function recovery and the Möbius / half-plane criteria.
//!
//! For `f, g` normalized `p`-valent and `eps = e^{2 pi i / k}`:
//!
//! ```text
//! g_k(z) = prod_{nu=0}^{k-1} eps^{-nu p} g(eps^nu z)      G_k = g_k / z^{(k-1)p}
//! H(z)   = z^{(k-1)p+1} f'(z) / g_k(z) = z f'(z) / G_k(z)
//! ```
//!
//! `f` belongs to the class for this `g` when `g` is starlike of order
//! `(k-1)p/k` and `Re H > gamma` on the disk.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{
    self, adaptive_loop, circle, evaluate_on_grid, make_grid, winding_number, ComplexPoint, MembershipReport,
    SamplingPolicy,
};
use crate::series::{TruncatedSeries, DEFAULT_DEGREE};

/// Tolerance on constant terms that must vanish structurally.
pub const ORIGIN_TOL: f64 = 1e-10;
pub const DEFAULT_ZETA_SAMPLES: usize = 360;
const CONTAINMENT_TOL: f64 = 1e-12;
const LOOP_MAX_DEPTH: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ClassParams {
    p: u32,
    k: u32,
    gamma: f64,
    epsilon: Complex64,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    p: u32,
    k: u32,
    gamma: f64,
}

impl TryFrom<ParamsRepr> for ClassParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        ClassParams::new(r.p, r.k, r.gamma)
    }
}

impl From<ClassParams> for ParamsRepr {
    fn from(c: ClassParams) -> Self {
        ParamsRepr { p: c.p, k: c.k, gamma: c.gamma }
    }
}

impl ClassParams {
    pub fn new(p: u32, k: u32, gamma: f64) -> Result<Self> {
        if p == 0 || k == 0 {
            return Err(Error::InvalidParams(format!("p = {p} and k = {k} must be positive")));
        }
        if !(gamma >= 0.0 && gamma < f64::from(p)) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must lie in [0, {p})")));
        }
        let epsilon = Complex64::from_polar(1.0, TAU / f64::from(k));
        Ok(Self { p, k, gamma, epsilon })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> Complex64 {
        self.epsilon
    }

    pub fn p_f64(&self) -> f64 {
        f64::from(self.p)
    }

    /// Order `(k-1)p/k` of starlikeness required of `g`.
    pub fn starlike_order(&self) -> f64 {
        f64::from((self.k - 1) * self.p) / f64::from(self.k)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.p, self.k, gamma)
    }
}

/// A recovered Schwarz-type function with its sampled modulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwarzWitness {
    pub w: TruncatedSeries,
    pub max_modulus: f64,
    pub witness: ComplexPoint,
    pub vanishes_at_origin: bool,
    /// `max_modulus` is below the bound the construction requires.
    pub certified: bool,
}

/// Outcome of the class membership check for one `(f, g, params)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KskReport {
    pub params: ClassParams,
    pub degree: usize,
    /// `g` starlike of order `(k-1)p/k`.
    pub starlike: MembershipReport,
    /// Slack of `Re H > gamma`.
    pub real_part: MembershipReport,
    /// Slack of `|H - p| < |H + p - 2 gamma|`, scaled by `1 / (4 (p - gamma))`
    /// so it matches `real_part` in exact arithmetic.
    pub modulus: MembershipReport,
    pub min_re_h: f64,
    /// Grid points where the two forms return different verdicts.
    pub disagreements: usize,
}

impl KskReport {
    pub fn holds(&self) -> bool {
        self.real_part.holds
    }

    pub fn margin(&self) -> f64 {
        self.real_part.min_margin
    }
}

/// Truncation degree for a group of inputs: the largest input degree, never
/// below [`DEFAULT_DEGREE`]. Shorter inputs are zero-extended, i.e. treated as
/// exact polynomials.
pub fn working_degree(series: &[&TruncatedSeries]) -> usize {
    series.iter().map(|s| s.degree()).fold(DEFAULT_DEGREE, usize::max)
}

fn require_normalized(s: &TruncatedSeries, p: u32, what: &'static str) -> Result<()> {
    if s.is_normalized(p) {
        Ok(())
    } else {
        Err(Error::NotNormalized { what, p })
    }
}

/// `g_k = prod_nu eps^{-nu p} g(eps^nu z)`.
pub fn build_gk(g: &TruncatedSeries, params: &ClassParams) -> Result<TruncatedSeries> {
    require_normalized(g, params.p, "g")?;
    let p = params.p_f64();
    let mut acc = g.clone();
    for nu in 1..params.k {
        let t = TAU * f64::from(nu) / f64::from(params.k);
        let factor = g.rotate(t).scale(Complex64::from_polar(1.0, -t * p));
        acc = acc.multiply(&factor);
    }
    Ok(acc)
}

/// `G_k = g_k / z^{(k-1)p}`.
pub fn reduce_gk(gk: &TruncatedSeries, params: &ClassParams) -> Result<TruncatedSeries> {
    let expected = i64::from(params.k * params.p);
    if gk.lead() != expected {
        return Err(Error::InconsistentInput(format!(
            "g_k has leading exponent {}, expected {expected}",
            gk.lead()
        )));
    }
    gk.downshift(i64::from((params.k - 1) * params.p))
}

/// Series of `z g'(z) / g(z)`.
pub fn log_derivative(g: &TruncatedSeries) -> Result<TruncatedSeries> {
    g.differentiate().shift(1).divide(g)
}

fn ensure_nonvanishing(s: &TruncatedSeries, grid: &[ComplexPoint], what: &'static str) -> Result<()> {
    // strip z^lead so small radii do not look like zeros
    let body = s.shift(-s.lead());
    let values = evaluate_on_grid(|z| body.evaluate(z), grid);
    match values.iter().position(|v| !(v.norm() > 0.0 && v.norm().is_finite())) {
        Some(i) => Err(Error::VanishesAt { what, at: grid[i] }),
        None => Ok(()),
    }
}

/// `Re(z g'/g) - order` over the grid.
pub fn starlike_report(
    g: &TruncatedSeries,
    order: f64,
    p: u32,
    policy: &SamplingPolicy,
) -> Result<MembershipReport> {
    if !(order >= 0.0 && order < f64::from(p)) {
        return Err(Error::InvalidParams(format!("order {order} outside [0, {p})")));
    }
    require_normalized(g, p, "g")?;
    let grid = make_grid(policy)?;
    starlike_on_grid(g, order, &grid, policy.margin_tol)
}

fn starlike_on_grid(
    g: &TruncatedSeries,
    order: f64,
    grid: &[ComplexPoint],
    tol: f64,
) -> Result<MembershipReport> {
    ensure_nonvanishing(g, grid, "g")?;
    let q = log_derivative(g)?;
    let margins: Vec<f64> = evaluate_on_grid(|z| q.evaluate(z), grid)
        .into_iter()
        .map(|v| v.re - order)
        .collect();
    MembershipReport::from_margins(&margins, grid, tol)
}

/// An `(f, g)` pair at a common truncation degree with the derived series.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub params: ClassParams,
    pub f: TruncatedSeries,
    pub g: TruncatedSeries,
    pub gk: TruncatedSeries,
    pub big_gk: TruncatedSeries,
    /// `H = z^{(k-1)p+1} f' / g_k`.
    pub h: TruncatedSeries,
}

impl Candidate {
    pub fn new(f: &TruncatedSeries, g: &TruncatedSeries, params: &ClassParams) -> Result<Self> {
        require_normalized(f, params.p, "f")?;
        require_normalized(g, params.p, "g")?;
        let degree = working_degree(&[f, g]);
        let f = f.with_degree(degree);
        let g = g.with_degree(degree);
        let gk = build_gk(&g, params)?;
        let big_gk = reduce_gk(&gk, params)?;
        let shift = i64::from((params.k - 1) * params.p + 1);
        let h = f.differentiate().shift(shift).divide(&gk)?;
        Ok(Self { params: *params, f, g, gk, big_gk, h })
    }

    pub fn degree(&self) -> usize {
        self.f.degree()
    }

    pub fn membership(&self, policy: &SamplingPolicy) -> Result<KskReport> {
        let grid = make_grid(policy)?;
        let tol = policy.margin_tol;
        let order = self.params.starlike_order();
        let starlike = starlike_on_grid(&self.g, order, &grid, tol)?;
        if !starlike.holds {
            return Err(Error::NotStarlike {
                order,
                margin: starlike.min_margin,
                witness: starlike.witness,
            });
        }

        let p = self.params.p_f64();
        let gamma = self.params.gamma;
        let values = evaluate_on_grid(|z| self.h.evaluate(z), &grid);
        let re_margins: Vec<f64> = values.iter().map(|h| h.re - gamma).collect();
        let mod_margins: Vec<f64> = values
            .iter()
            .map(|h| ((h + p - 2.0 * gamma).norm_sqr() - (h - p).norm_sqr()) / (4.0 * (p - gamma)))
            .collect();
        let real_part = MembershipReport::from_margins(&re_margins, &grid, tol)?;
        let modulus = MembershipReport::from_margins(&mod_margins, &grid, tol)?;
        let disagreements = re_margins
            .iter()
            .zip(&mod_margins)
            .filter(|(a, b)| (**a > -tol) != (**b > -tol))
            .count();
        let (min_re_h, _) = sampling::argmin(&values.iter().map(|h| h.re).collect::<Vec<_>>(), &grid)?;
        Ok(KskReport {
            params: self.params,
            degree: self.degree(),
            starlike,
            real_part,
            modulus,
            min_re_h,
            disagreements,
        })
    }

    /// `w = (H - p) / (H + p - 2 gamma)`, the Schwarz function of the subordination.
    pub fn schwarz(&self, policy: &SamplingPolicy) -> Result<SchwarzWitness> {
        let grid = make_grid(policy)?;
        let p = self.params.p_f64();
        let gamma = self.params.gamma;
        let den = self.h.add_constant(Complex64::new(p - 2.0 * gamma, 0.0));
        if den.coeff_of_power(0).norm() <= ORIGIN_TOL {
            return Err(Error::InconsistentInput("H + p - 2 gamma vanishes at the origin".into()));
        }
        let num = self.h.add_constant(Complex64::new(-p, 0.0));
        let w = num.divide(&den)?.factor_out_z(ORIGIN_TOL)?;
        let (max_modulus, witness) = sampling::grid_max_modulus(|z| w.evaluate(z), &grid)?;
        Ok(SchwarzWitness {
            vanishes_at_origin: w.lead() >= 1,
            certified: max_modulus < 1.0 - policy.margin_tol,
            w,
            max_modulus,
            witness,
        })
    }
}

pub fn ksk_membership_report(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
) -> Result<KskReport> {
    Candidate::new(f, g, params)?.membership(policy)
}

/// Recovers the Schwarz function `w` with `H = (p + (p - 2 gamma) w) / (1 - w)`.
pub fn recover_schwarz(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
) -> Result<SchwarzWitness> {
    Candidate::new(f, g, params)?.schwarz(policy)
}

/// `H = (p - (p - 2 gamma) z phi) / (1 + z phi)` truncated at `degree`.
pub fn lemma2_forward(
    phi: &TruncatedSeries,
    beta: f64,
    params: &ClassParams,
    policy: &SamplingPolicy,
    degree: usize,
) -> Result<TruncatedSeries> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParams(format!("beta = {beta} must lie in (0, 1]")));
    }
    if phi.lead() != 0 {
        return Err(Error::InconsistentInput("phi must start at z^0".into()));
    }
    let grid = make_grid(policy)?;
    let (max, at) = sampling::grid_max_modulus(|z| phi.evaluate(z), &grid)?;
    if max > beta + policy.margin_tol {
        return Err(Error::BoundExceeded { max, beta, at });
    }
    let p = params.p_f64();
    let c = p - 2.0 * params.gamma;
    let zphi = phi.with_degree(degree.saturating_sub(1)).shift(1);
    let num = zphi.scale(Complex64::new(-c, 0.0)).add_constant(Complex64::new(p, 0.0));
    let den = zphi.add_constant(Complex64::new(1.0, 0.0));
    Ok(num.divide(&den)?.with_degree(degree))
}

/// Inverts [`lemma2_forward`]: `h = (p - H) / ((p - 2 gamma) + H) = z phi`.
/// The returned witness carries `phi` and its sampled maximum modulus.
pub fn lemma2_backward(
    h_series: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
) -> Result<SchwarzWitness> {
    let p = params.p_f64();
    if h_series.lead() != 0 {
        return Err(Error::InconsistentInput("H must start at z^0".into()));
    }
    let den = h_series.add_constant(Complex64::new(p - 2.0 * params.gamma, 0.0));
    if den.coeff_of_power(0).norm() <= ORIGIN_TOL {
        return Err(Error::InconsistentInput("(p - 2 gamma) + H vanishes at the origin".into()));
    }
    let num = (-h_series).add_constant(Complex64::new(p, 0.0));
    let h = num.divide(&den)?.factor_out_z(ORIGIN_TOL)?;
    let phi = h.downshift(1)?;
    let grid = make_grid(policy)?;
    let (max_modulus, witness) = sampling::grid_max_modulus(|z| phi.evaluate(z), &grid)?;
    Ok(SchwarzWitness {
        vanishes_at_origin: phi.lead() >= 1,
        certified: max_modulus <= 1.0 + policy.margin_tol,
        w: phi,
        max_modulus,
        witness,
    })
}

/// Largest sampled `|z G_k'/G_k - (sum_nu (z g'/g)(eps^nu z) - (k-1)p)|`.
pub fn logderiv_identity_residual(
    g: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
) -> Result<f64> {
    require_normalized(g, params.p, "g")?;
    let g = g.with_degree(working_degree(&[g]));
    let grid = make_grid(policy)?;
    let lhs = log_derivative(&reduce_gk(&build_gk(&g, params)?, params)?)?;
    let mut rhs = TruncatedSeries::constant(
        Complex64::new(-f64::from((params.k - 1) * params.p), 0.0),
        g.degree(),
    );
    for nu in 0..params.k {
        let rotated = g.rotate(TAU * f64::from(nu) / f64::from(params.k));
        rhs = &rhs + &log_derivative(&rotated)?;
    }
    let residual = &lhs - &rhs;
    let (max, _) = sampling::grid_max_modulus(|z| residual.evaluate(z), &grid)?;
    Ok(max)
}

/// Image of the unit disk under `z -> (1 + a z) / (1 + b z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MobiusImage {
    Disk { center: f64, radius: f64 },
    HalfPlane { re_min: f64 },
}

pub fn mobius(a: f64, b: f64, z: Complex64) -> Complex64 {
    (1.0 + a * z) / (1.0 + b * z)
}

impl MobiusImage {
    pub fn of(a: f64, b: f64) -> Result<Self> {
        if !(a.abs() <= 1.0 && b.abs() <= 1.0) || a == b {
            return Err(Error::InvalidParams(format!("need |A|, |B| <= 1 and A != B, got ({a}, {b})")));
        }
        let denom = 1.0 - b * b;
        if denom == 0.0 {
            // the boundary circle maps onto the line Re w = (1 + a b) / 2
            return Ok(MobiusImage::HalfPlane { re_min: 0.5 * (1.0 + a * b) });
        }
        Ok(MobiusImage::Disk {
            center: (1.0 - a * b) / denom,
            radius: (a - b).abs() / denom,
        })
    }

    /// Whether `w` lies in the closure of the image.
    pub fn contains_point(&self, w: Complex64, tol: f64) -> bool {
        match *self {
            MobiusImage::Disk { center, radius } => (w - center).norm() <= radius + tol,
            MobiusImage::HalfPlane { re_min } => w.re >= re_min - tol,
        }
    }

    /// Whether `inner` is contained in `self`.
    pub fn contains(&self, inner: &MobiusImage, tol: f64) -> bool {
        match (*self, *inner) {
            (MobiusImage::Disk { center, radius }, MobiusImage::Disk { center: c, radius: r }) => {
                (c - center).abs() + r <= radius + tol
            }
            (MobiusImage::HalfPlane { re_min }, MobiusImage::Disk { center, radius }) => {
                center - radius >= re_min - tol
            }
            (MobiusImage::HalfPlane { re_min }, MobiusImage::HalfPlane { re_min: inner_min }) => {
                inner_min >= re_min - tol
            }
            (MobiusImage::Disk { .. }, MobiusImage::HalfPlane { .. }) => false,
        }
    }
}

/// Decides `(1 + A1 z)/(1 + B1 z) ≺ (1 + A2 z)/(1 + B2 z)` by image containment,
/// for `-1 <= B2 <= B1 < A1 <= A2 <= 1`.
pub fn lemma3_check(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<bool> {
    let ordered = -1.0 <= b2 && b2 <= b1 && b1 < a1 && a1 <= a2 && a2 <= 1.0;
    if !ordered {
        return Err(Error::Ordering(format!(
            "need -1 <= B2 <= B1 < A1 <= A2 <= 1, got A1={a1} B1={b1} A2={a2} B2={b2}"
        )));
    }
    let inner = MobiusImage::of(a1, b1)?;
    let outer = MobiusImage::of(a2, b2)?;
    Ok(outer.contains(&inner, CONTAINMENT_TOL))
}

/// Samples the boundary of the inner image and tests each point against the
/// outer map by inverting it: `w` is covered when `|T^{-1}(w)| <= 1`.
pub fn sampled_subordination(a1: f64, b1: f64, a2: f64, b2: f64, samples: usize) -> bool {
    circle(1.0, samples).into_iter().all(|z| {
        let w = mobius(a1, b1, z);
        if !w.is_finite() {
            return true;
        }
        let pre = (w - 1.0) / (a2 - b2 * w);
        pre.is_finite() && pre.norm() <= 1.0 + 1e-9
    })
}

/// `n` equispaced unimodular points with `-1` left out.
pub fn zeta_samples(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / n as f64))
        .filter(|z| (z + 1.0).norm() > 1e-12)
        .collect()
}

/// Result of the positivity / avoidance comparison for a function `1 + p_1 z + ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    /// `Re p > 0` on the grid.
    pub positivity: MembershipReport,
    /// No sampled `(zeta - 1)/(zeta + 1)` is attained inside the outer circle.
    pub avoids: bool,
    /// Sampled excluded values enclosed by the image of the outer circle.
    pub enclosed_samples: usize,
    /// Closest approach of a grid value to a sampled excluded value.
    pub min_distance: f64,
}

impl AvoidanceReport {
    pub fn verdicts(&self) -> (bool, bool) {
        (self.positivity.holds, self.avoids)
    }

    pub fn confirmed(&self) -> bool {
        self.positivity.holds == self.avoids
    }
}

/// Compares `Re p > 0` with `p(z) != (zeta - 1)/(zeta + 1)` on sampled `zeta`.
/// Attained values are detected by the winding number of `p - e` along the
/// outer circle, which counts the solutions of `p(z) = e` inside it.
pub fn lemma4_avoidance_check(
    pfun: &TruncatedSeries,
    policy: &SamplingPolicy,
    zeta_samples_count: usize,
) -> Result<AvoidanceReport> {
    if pfun.lead() != 0 || (pfun.coeffs()[0] - 1.0).norm() > ORIGIN_TOL {
        return Err(Error::InconsistentInput("p must satisfy p(0) = 1".into()));
    }
    let grid = make_grid(policy)?;
    let values = evaluate_on_grid(|z| pfun.evaluate(z), &grid);
    let margins: Vec<f64> = values.iter().map(|v| v.re).collect();
    let positivity = MembershipReport::from_margins(&margins, &grid, policy.margin_tol)?;

    let excluded: Vec<Complex64> = zeta_samples(zeta_samples_count)
        .into_iter()
        .map(|zeta| (zeta - 1.0) / (zeta + 1.0))
        .collect();
    // the excluded set is the imaginary axis, so |Re| bounds the distance to it
    let loop_values = adaptive_loop(
        policy.outer_radius(),
        policy.angles_per_circle,
        |z| pfun.evaluate(z),
        |a: &Complex64, b: &Complex64| {
            let gap = a.re.abs().min(b.re.abs()).max(1e-9 * (1.0 + a.norm()));
            (a - b).norm() > 0.5 * gap
        },
        LOOP_MAX_DEPTH,
    );
    let enclosed_samples = excluded
        .iter()
        .filter(|&&e| winding_number(loop_values.iter().copied(), e) != 0)
        .count();
    let min_distance = crate::par::map(&values, |v| {
        excluded.iter().map(|e| (v - e).norm()).fold(f64::INFINITY, f64::min)
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Ok(AvoidanceReport {
        positivity,
        avoids: enclosed_samples == 0 && min_distance > policy.margin_tol,
        enclosed_samples,
        min_distance,
    })
}
