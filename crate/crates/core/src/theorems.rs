//! Verifiers for the coefficient condition, the coefficient inequality, the
//! distortion / growth sandwiches, the inclusions and the nonvanishing
//! criterion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classes::{working_degree, zeta_samples, Candidate, ClassParams, KskReport};
use crate::error::{Error, Result};
use crate::par;
use crate::sampling::{
    adaptive_loop, circle, evaluate_on_grid, make_grid, simpson_integrate, winding_number, ComplexPoint,
    MembershipReport, SamplingPolicy, DEFAULT_QUADRATURE_STEPS,
};
use crate::series::TruncatedSeries;

/// Allowed violation of a distortion sandwich.
pub const BOUND_TOL: f64 = 1e-6;
/// Tolerance of the margin identity between two values of `gamma`.
pub const IDENTITY_TOL: f64 = 1e-12;
const LOOP_MAX_DEPTH: u32 = 10;

/// Lower and upper bounds on `|f'|`, `|f|`, `|G_k|` and `|z f'/G_k|` on `|z| = r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub r: f64,
    pub deriv_lower: f64,
    pub deriv_upper: f64,
    pub growth_lower: f64,
    pub growth_upper: f64,
    pub gk_lower: f64,
    pub gk_upper: f64,
    pub psi_lower: f64,
    pub psi_upper: f64,
}

fn deriv_bounds(p: f64, gamma: f64, r: f64) -> (f64, f64) {
    let c = p - 2.0 * gamma;
    let rp = r.powi(p as i32 - 1);
    let e = 2 * p as i32 + 1;
    ((p - c * r) * rp / (1.0 + r).powi(e), (p + c * r) * rp / (1.0 - r).powi(e))
}

pub fn bounds(params: &ClassParams, r: f64, steps: usize) -> Result<BoundSet> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::RadiusOutOfRange(r));
    }
    let p = params.p_f64();
    let gamma = params.gamma();
    let c = p - 2.0 * gamma;
    let (deriv_lower, deriv_upper) = deriv_bounds(p, gamma, r);
    let growth_lower = simpson_integrate(|t| deriv_bounds(p, gamma, t).0, r, steps)?;
    let growth_upper = simpson_integrate(|t| deriv_bounds(p, gamma, t).1, r, steps)?;
    let rp = r.powi(p as i32);
    let e = 2 * p as i32;
    Ok(BoundSet {
        r,
        deriv_lower,
        deriv_upper,
        growth_lower,
        growth_upper,
        gk_lower: rp / (1.0 + r).powi(e),
        gk_upper: rp / (1.0 - r).powi(e),
        psi_lower: (p - c * r) / (1.0 + r),
        psi_upper: (p + c * r) / (1.0 - r),
    })
}

fn coeff(s: &TruncatedSeries, power: i64) -> Complex64 {
    s.coeff_of_power(power)
}

fn common_degree(
    f: &TruncatedSeries,
    big_gk: &TruncatedSeries,
    params: &ClassParams,
) -> Result<(TruncatedSeries, TruncatedSeries)> {
    for (s, what) in [(f, "f"), (big_gk, "G_k")] {
        if !s.is_normalized(params.p()) {
            return Err(Error::NotNormalized { what, p: params.p() });
        }
    }
    let n = working_degree(&[f, big_gk]);
    Ok((f.with_degree(n), big_gk.with_degree(n)))
}

/// Slack of the coefficient condition summed up to the truncation degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientCondition {
    pub margin: f64,
    /// Last summed index `n`.
    pub horizon: usize,
    /// Size of the final summand; a large value means the omitted tail matters.
    pub last_term: f64,
}

impl SufficientCondition {
    /// A positive margin certifies membership; a negative one is inconclusive.
    pub fn certifies(&self) -> bool {
        self.margin > 0.0
    }
}

/// `2(p - gamma) - [2 sum (n+p)|a_{n+p}| + (|p - 2 gamma| + p) sum |B_{n+p}|]`.
/// Inputs of different degree are zero-extended to a common one.
pub fn sufficient_condition_margin(
    f: &TruncatedSeries,
    big_gk: &TruncatedSeries,
    params: &ClassParams,
) -> Result<SufficientCondition> {
    let (f, big_gk) = common_degree(f, big_gk, params)?;
    let p = params.p_f64();
    let gamma = params.gamma();
    let weight = (p - 2.0 * gamma).abs() + p;
    let horizon = f.degree();
    let lead = i64::from(params.p());
    let terms: Vec<f64> = (1..=horizon as i64)
        .map(|n| {
            2.0 * (n as f64 + p) * coeff(&f, n + lead).norm() + weight * coeff(&big_gk, n + lead).norm()
        })
        .collect();
    Ok(SufficientCondition {
        margin: 2.0 * (p - gamma) - terms.iter().sum::<f64>(),
        horizon,
        last_term: terms.last().copied().unwrap_or(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffCheckResult {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// For `n = 1..=n_max`: `|(n+p) a_{n+p} - p B_{n+p}|^2 - 4(p - gamma)^2` against
/// `2(p - gamma) sum_{m=p+1}^{n+p-1} [2m |a_m B_m| + (|p - 2 gamma| + p) |B_m|^2]`.
pub fn coefficient_inequality_check(
    f: &TruncatedSeries,
    big_gk: &TruncatedSeries,
    params: &ClassParams,
    n_max: usize,
    tol: f64,
) -> Result<Vec<CoeffCheckResult>> {
    let (f, big_gk) = common_degree(f, big_gk, params)?;
    if n_max > f.degree() {
        return Err(Error::DegreeExceeded { requested: n_max, available: f.degree() });
    }
    let p = params.p_f64();
    let gamma = params.gamma();
    let lead = i64::from(params.p());
    let weight = (p - 2.0 * gamma).abs() + p;
    let mut partial = 0.0;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n >= 2 {
            let m = lead + n as i64 - 1;
            let (a, b) = (coeff(&f, m).norm(), coeff(&big_gk, m).norm());
            partial += 2.0 * m as f64 * a * b + weight * b * b;
        }
        let m = lead + n as i64;
        let lhs = ((n as f64 + p) * coeff(&f, m) - p * coeff(&big_gk, m)).norm_sqr()
            - 4.0 * (p - gamma).powi(2);
        let rhs = 2.0 * (p - gamma) * partial;
        out.push(CoeffCheckResult { n, lhs, rhs, satisfied: lhs <= rhs + tol });
    }
    Ok(out)
}

/// Worst slack of one sandwich over all radii: `min(sampled) - lower` and
/// `upper - max(sampled)`, with the sample point attaining each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichSlack {
    pub lower: f64,
    pub upper: f64,
    pub lower_at: ComplexPoint,
    pub upper_at: ComplexPoint,
}

impl SandwichSlack {
    fn empty() -> Self {
        let origin = ComplexPoint::new(0.0, 0.0);
        Self { lower: f64::INFINITY, upper: f64::INFINITY, lower_at: origin, upper_at: origin }
    }

    fn update(&mut self, range: &ModulusRange, lower: f64, upper: f64) {
        if range.min - lower < self.lower {
            self.lower = range.min - lower;
            self.lower_at = range.min_at;
        }
        if upper - range.max < self.upper {
            self.upper = upper - range.max;
            self.upper_at = range.max_at;
        }
    }

    pub fn worst(&self) -> f64 {
        self.lower.min(self.upper)
    }

    pub fn worst_at(&self) -> ComplexPoint {
        if self.lower <= self.upper { self.lower_at } else { self.upper_at }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub holds: bool,
    pub deriv: SandwichSlack,
    pub growth: SandwichSlack,
    pub gk: SandwichSlack,
    pub psi: SandwichSlack,
}

impl DistortionReport {
    fn families(&self) -> [SandwichSlack; 4] {
        [self.deriv, self.growth, self.gk, self.psi]
    }

    pub fn worst(&self) -> f64 {
        self.families().iter().map(SandwichSlack::worst).fold(f64::INFINITY, f64::min)
    }

    /// Sample point of the smallest slack.
    pub fn worst_at(&self) -> ComplexPoint {
        let fams = self.families();
        let i = (0..4).fold(0, |b, i| if fams[i].worst() < fams[b].worst() { i } else { b });
        fams[i].worst_at()
    }
}

fn require_member(cand: &Candidate, policy: &SamplingPolicy) -> Result<KskReport> {
    let report = cand.membership(policy)?;
    if !report.holds() {
        return Err(Error::NotAMember { margin: report.margin(), witness: report.real_part.witness });
    }
    Ok(report)
}

struct ModulusRange {
    min: f64,
    max: f64,
    min_at: ComplexPoint,
    max_at: ComplexPoint,
}

fn modulus_range(s: &TruncatedSeries, points: &[Complex64]) -> Result<ModulusRange> {
    let origin = ComplexPoint::new(0.0, 0.0);
    let mut range = ModulusRange { min: f64::INFINITY, max: f64::NEG_INFINITY, min_at: origin, max_at: origin };
    for &z in points {
        let v = s.evaluate(z).norm();
        if !v.is_finite() {
            return Err(Error::NonFiniteValue(z.into()));
        }
        if v < range.min {
            range.min = v;
            range.min_at = z.into();
        }
        if v > range.max {
            range.max = v;
            range.max_at = z.into();
        }
    }
    Ok(range)
}

/// Samples `|f'|, |f|, |G_k|, |z f'/G_k|` on every policy circle against [`bounds`].
pub fn verify_distortion(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
    steps: usize,
) -> Result<DistortionReport> {
    let cand = Candidate::new(f, g, params)?;
    require_member(&cand, policy)?;
    distortion_of(&cand, policy, steps)
}

pub(crate) fn distortion_of(cand: &Candidate, policy: &SamplingPolicy, steps: usize) -> Result<DistortionReport> {
    let fprime = cand.f.differentiate();
    let per_radius = par::map(&policy.radii, |&r| -> Result<_> {
        let pts = circle(r, policy.angles_per_circle);
        Ok((
            bounds(&cand.params, r, steps)?,
            modulus_range(&fprime, &pts)?,
            modulus_range(&cand.f, &pts)?,
            modulus_range(&cand.big_gk, &pts)?,
            modulus_range(&cand.h, &pts)?,
        ))
    });
    let mut report = DistortionReport {
        holds: true,
        deriv: SandwichSlack::empty(),
        growth: SandwichSlack::empty(),
        gk: SandwichSlack::empty(),
        psi: SandwichSlack::empty(),
    };
    for row in per_radius {
        let (b, d, f, gk, psi) = row?;
        report.deriv.update(&d, b.deriv_lower, b.deriv_upper);
        report.growth.update(&f, b.growth_lower, b.growth_upper);
        report.gk.update(&gk, b.gk_lower, b.gk_upper);
        report.psi.update(&psi, b.psi_lower, b.psi_upper);
    }
    report.holds = report.worst() >= -BOUND_TOL;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub gamma_high: f64,
    pub gamma_low: f64,
    pub margin_high: f64,
    pub margin_low: f64,
    pub member_high: bool,
    pub member_low: bool,
    /// `|margin_low - margin_high - (gamma_high - gamma_low)|`.
    pub identity_residual: f64,
    pub holds: bool,
}

/// Membership at `params.gamma()` must imply membership at `gamma_low <= gamma`,
/// with the margins differing by exactly `gamma - gamma_low`.
pub fn verify_inclusion_gamma(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    params: &ClassParams,
    gamma_low: f64,
    policy: &SamplingPolicy,
) -> Result<InclusionReport> {
    let gamma_high = params.gamma();
    if !(gamma_low >= 0.0 && gamma_low <= gamma_high) {
        return Err(Error::Ordering(format!("need 0 <= {gamma_low} <= {gamma_high}")));
    }
    let high = Candidate::new(f, g, params)?;
    inclusion_of(&high, gamma_low, policy)
}

pub(crate) fn inclusion_of(high: &Candidate, gamma_low: f64, policy: &SamplingPolicy) -> Result<InclusionReport> {
    let gamma_high = high.params.gamma();
    let low = Candidate { params: high.params.with_gamma(gamma_low)?, ..high.clone() };
    let rh = high.membership(policy)?;
    let rl = low.membership(policy)?;
    let identity_residual = ((rl.margin() - rh.margin()) - (gamma_high - gamma_low)).abs();
    Ok(InclusionReport {
        gamma_high,
        gamma_low,
        margin_high: rh.margin(),
        margin_low: rl.margin(),
        member_high: rh.holds(),
        member_low: rl.holds(),
        identity_residual,
        holds: (!rh.holds() || rl.holds()) && identity_residual <= IDENTITY_TOL,
    })
}

/// `Re(z f'/G_k) > 0` on the grid, computed from `f` and `G_k` directly.
pub fn verify_kp_inclusion(
    f: &TruncatedSeries,
    g: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
) -> Result<MembershipReport> {
    let cand = Candidate::new(f, g, params)?;
    require_member(&cand, policy)?;
    kp_of(&cand, policy)
}

pub(crate) fn kp_of(cand: &Candidate, policy: &SamplingPolicy) -> Result<MembershipReport> {
    let psi = cand.f.differentiate().shift(1).divide(&cand.big_gk)?;
    let grid = make_grid(policy)?;
    let margins: Vec<f64> = evaluate_on_grid(|z| psi.evaluate(z), &grid).iter().map(|v| v.re).collect();
    MembershipReport::from_margins(&margins, &grid, policy.margin_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingReport {
    pub nonvanishing: bool,
    pub min_modulus: f64,
    pub witness: ComplexPoint,
    pub zeta: ComplexPoint,
    /// Sampled `zeta` whose series has a zero inside the outer circle.
    pub vanishing_zetas: usize,
    pub zeta_count: usize,
}

/// Splits `1 + sum A_{n+p}(zeta) z^n` as `U + zeta V`.
pub fn nonvanishing_parts(
    f: &TruncatedSeries,
    big_gk: &TruncatedSeries,
    params: &ClassParams,
) -> Result<(TruncatedSeries, TruncatedSeries)> {
    let (f, big_gk) = common_degree(f, big_gk, params)?;
    let p = params.p_f64();
    let gamma = params.gamma();
    let scale = 1.0 / (2.0 * (p - gamma));
    let lead = i64::from(params.p());
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for n in 0..=f.degree() as i64 {
        let a = (n as f64 + p) * coeff(&f, n + lead);
        let b = coeff(&big_gk, n + lead);
        u.push((a + (p - 2.0 * gamma) * b) * scale);
        v.push((a - p * b) * scale);
    }
    Ok((TruncatedSeries::new(0, u)?, TruncatedSeries::new(0, v)?))
}

/// Checks that `1 + sum A_{n+p} z^n` has no zero in the sampled disk for every
/// sampled unimodular `zeta`. Zeros between grid points are caught by the
/// winding number along the outer circle.
pub fn lemma5_nonvanishing(
    f: &TruncatedSeries,
    big_gk: &TruncatedSeries,
    params: &ClassParams,
    policy: &SamplingPolicy,
    zeta_count: usize,
) -> Result<NonvanishingReport> {
    let (u, v) = nonvanishing_parts(f, big_gk, params)?;
    let grid = make_grid(policy)?;
    let zetas = zeta_samples(zeta_count);
    let pairs = par::map(&grid, |z| {
        let z = z.to_complex();
        (u.evaluate(z), v.evaluate(z))
    });
    if let Some(i) = pairs.iter().position(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::NonFiniteValue(grid[i]));
    }
    // min over zeta for each point, then over the grid; ties keep the first
    let per_point = par::map(&pairs, |&(a, b)| {
        zetas
            .iter()
            .enumerate()
            .map(|(j, zeta)| ((a + zeta * b).norm(), j))
            .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
    });
    let (mut min_modulus, mut at, mut zeta_at) = (f64::INFINITY, 0, 0);
    for (i, &(m, j)) in per_point.iter().enumerate() {
        if m < min_modulus {
            (min_modulus, at, zeta_at) = (m, i, j);
        }
    }

    let loop_pairs = adaptive_loop(
        policy.outer_radius(),
        policy.angles_per_circle,
        |z| (u.evaluate(z), v.evaluate(z)),
        |x: &(Complex64, Complex64), y: &(Complex64, Complex64)| {
            let gap = |(a, b): &(Complex64, Complex64)| (a.norm() - b.norm()).abs();
            let floor = 1e-9 * (1.0 + x.0.norm() + x.1.norm());
            (x.0 - y.0).norm() + (x.1 - y.1).norm() > 0.5 * gap(x).min(gap(y)).max(floor)
        },
        LOOP_MAX_DEPTH,
    );
    let vanishing_zetas = par::map(&zetas, |zeta| {
        winding_number(loop_pairs.iter().map(|(a, b)| a + zeta * b), Complex64::new(0.0, 0.0)) != 0
    })
    .into_iter()
    .filter(|&w| w)
    .count();

    Ok(NonvanishingReport {
        nonvanishing: vanishing_zetas == 0 && min_modulus > policy.margin_tol,
        min_modulus,
        witness: grid[at],
        zeta: zetas.get(zeta_at).copied().unwrap_or_default().into(),
        vanishing_zetas,
        zeta_count: zetas.len(),
    })
}

/// Growth bounds with the default quadrature resolution.
pub fn default_bounds(params: &ClassParams, r: f64) -> Result<BoundSet> {
    bounds(params, r, DEFAULT_QUADRATURE_STEPS)
}
