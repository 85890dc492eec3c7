//! The full verification sweep: every checker over seeded members across a
//! grid of class parameters.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{
    lemma2_backward, lemma2_forward, lemma3_check, lemma4_avoidance_check, logderiv_identity_residual,
    sampled_subordination, starlike_report, Candidate, ClassParams, DEFAULT_ZETA_SAMPLES,
};
use crate::error::Result;
use crate::generators::{
    adequate_degree, seeded_member, sufficient_draw, BaseKind, GeneratorSeed, Synthesized,
};
use crate::par;
use crate::sampling::{grid_max_modulus, make_grid, ComplexPoint, SamplingPolicy, DEFAULT_QUADRATURE_STEPS};
use crate::series::{TruncatedSeries, DEFAULT_DEGREE};
use crate::theorems::{
    coefficient_inequality_check, distortion_of, inclusion_of, kp_of, lemma5_nonvanishing,
    sufficient_condition_margin, IDENTITY_TOL,
};

/// Maximum grid error allowed when recovering a Schwarz function.
pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const IDENTITY_RESIDUAL_TOL: f64 = 1e-6;
pub const COEFF_CHECK_MAX: usize = 16;
/// Perturbation added to the first free coefficient of `f` by the mutation run.
pub const CORRUPTION: f64 = 0.5;
const MOBIUS_SAMPLES: usize = 720;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seeds_per_cell: usize,
    pub base_seed: u64,
    /// Truncation degree for members built on a perturbed comparison function.
    pub degree: usize,
    /// Degree of the random Schwarz polynomials.
    pub schwarz_degree: usize,
    pub beta: f64,
    pub zeta_samples: usize,
    pub steps: usize,
    /// Perturb every member so that the sweep must report failures.
    pub corrupt: bool,
    pub policy: SamplingPolicy,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds_per_cell: 2,
            base_seed: 0,
            degree: DEFAULT_DEGREE,
            schwarz_degree: 4,
            beta: 0.9,
            zeta_samples: DEFAULT_ZETA_SAMPLES,
            steps: DEFAULT_QUADRATURE_STEPS,
            corrupt: false,
            policy: SamplingPolicy::default(),
        }
    }
}

/// `p` in {1, 2, 3}, `k` in {1, 2, 3}, `gamma` in {0, p/4, p/2}.
pub fn default_grid() -> Vec<ClassParams> {
    let mut out = Vec::new();
    for p in 1..=3u32 {
        for k in 1..=3u32 {
            for frac in [0.0, 0.25, 0.5] {
                out.push(ClassParams::new(p, k, f64::from(p) * frac).expect("grid parameters are valid"));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Generation,
    Membership,
    ModulusForm,
    SchwarzRoundTrip,
    SchwarzCharacterization,
    SymmetrizedStarlike,
    LogDerivIdentity,
    SufficientCondition,
    CoefficientInequality,
    Distortion,
    GammaInclusion,
    CloseToConvex,
    Nonvanishing,
    HalfPlaneAvoidance,
    MobiusSubordination,
}

impl Check {
    pub const ALL: [Check; 15] = [
        Check::Generation,
        Check::Membership,
        Check::ModulusForm,
        Check::SchwarzRoundTrip,
        Check::SchwarzCharacterization,
        Check::SymmetrizedStarlike,
        Check::LogDerivIdentity,
        Check::SufficientCondition,
        Check::CoefficientInequality,
        Check::Distortion,
        Check::GammaInclusion,
        Check::CloseToConvex,
        Check::Nonvanishing,
        Check::HalfPlaneAvoidance,
        Check::MobiusSubordination,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    /// Slack of the check; negative means violated.
    pub margin: f64,
    pub witness: Option<ComplexPoint>,
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn new(check: Check, passed: bool, margin: f64, witness: Option<ComplexPoint>) -> Self {
        Self { check, passed, margin, witness, detail: None }
    }

    fn error(check: Check, err: impl ToString) -> Self {
        Self { check, passed: false, margin: f64::NEG_INFINITY, witness: None, detail: Some(err.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub params: ClassParams,
    pub seed: u64,
    pub base: BaseKind,
    pub degree: usize,
    pub corrupted: bool,
    pub outcomes: Vec<CheckOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: Check,
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: Option<f64>,
    pub worst_cell: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub cell: usize,
    pub params: ClassParams,
    pub seed: u64,
    pub check: Check,
    pub margin: f64,
    pub witness: Option<ComplexPoint>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub all_passed: bool,
    pub summary: Vec<CheckSummary>,
    pub failures: Vec<Failure>,
    pub cells: Vec<CellReport>,
}

/// One `(params, seed)` unit of work.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub params: ClassParams,
    pub seed: u64,
    pub base: BaseKind,
}

pub fn cells(grid: &[ClassParams], config: &SweepConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for (i, params) in grid.iter().enumerate() {
        for s in 0..config.seeds_per_cell {
            let index = out.len();
            let mut rng = ChaCha8Rng::seed_from_u64(config.base_seed ^ ((i as u64) << 32 | s as u64));
            out.push(Cell {
                index,
                params: *params,
                seed: rng.random(),
                base: if (i + s) % 2 == 0 { BaseKind::Perturbed } else { BaseKind::Extremal },
            });
        }
    }
    out
}

/// Runs every cell on the worker pool; results come back in cell order.
pub fn verify_all(grid: &[ClassParams], config: &SweepConfig) -> SweepReport {
    let work = cells(grid, config);
    summarize(par::map(&work, |cell| run_cell(cell, config)))
}

/// Same as [`verify_all`] with the cells processed one after another.
pub fn verify_all_sequential(grid: &[ClassParams], config: &SweepConfig) -> SweepReport {
    let work = cells(grid, config);
    summarize(work.iter().map(|cell| run_cell(cell, config)).collect())
}

fn summarize(cells: Vec<CellReport>) -> SweepReport {
    let mut failures = Vec::new();
    let mut summary: Vec<CheckSummary> = Check::ALL
        .iter()
        .map(|&check| CheckSummary { check, passed: 0, failed: 0, worst_margin: None, worst_cell: None })
        .collect();
    for cell in &cells {
        for o in &cell.outcomes {
            let s = summary.iter_mut().find(|s| s.check == o.check).expect("every check is listed");
            if o.passed {
                s.passed += 1;
            } else {
                s.failed += 1;
                failures.push(Failure {
                    cell: cell.index,
                    params: cell.params,
                    seed: cell.seed,
                    check: o.check,
                    margin: o.margin,
                    witness: o.witness,
                    detail: o.detail.clone(),
                });
            }
            if s.worst_margin.is_none_or(|m| o.margin < m) {
                s.worst_margin = Some(o.margin);
                s.worst_cell = Some(cell.index);
            }
        }
    }
    SweepReport { all_passed: failures.is_empty(), summary, failures, cells }
}

pub fn member_degree(params: &ClassParams, base: BaseKind, config: &SweepConfig) -> usize {
    match base {
        BaseKind::Perturbed => config.degree,
        BaseKind::Extremal => adequate_degree(params, config.policy.outer_radius(), 1e-10).max(config.degree),
    }
}

/// Adds [`CORRUPTION`] to the coefficient of `z^{p+1}`.
pub fn corrupt(f: &TruncatedSeries) -> TruncatedSeries {
    let mut coeffs = f.coeffs().to_vec();
    if coeffs.len() > 1 {
        coeffs[1] += CORRUPTION;
    }
    TruncatedSeries::new(f.lead(), coeffs).expect("perturbing a valid series keeps it valid")
}

pub fn run_cell(cell: &Cell, config: &SweepConfig) -> CellReport {
    let degree = member_degree(&cell.params, cell.base, config);
    let mut report = CellReport {
        index: cell.index,
        params: cell.params,
        seed: cell.seed,
        base: cell.base,
        degree,
        corrupted: config.corrupt,
        outcomes: Vec::new(),
    };
    let member = GeneratorSeed::new(cell.seed, config.schwarz_degree, config.beta)
        .and_then(|gen| seeded_member(&cell.params, &gen, cell.base, degree, &config.policy));
    let mut member = match member {
        Ok(m) => m,
        Err(e) => {
            report.outcomes.push(CheckOutcome::error(Check::Generation, e));
            return report;
        }
    };
    report.outcomes.push(CheckOutcome::new(Check::Generation, true, 0.0, None));
    if config.corrupt {
        member.f = corrupt(&member.f);
    }
    report.outcomes.extend(member_checks(&member, cell, config));
    report
}

fn outcome(check: Check, r: Result<CheckOutcome>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome::error(check, e))
}

fn member_checks(m: &Synthesized, cell: &Cell, config: &SweepConfig) -> Vec<CheckOutcome> {
    let policy = &config.policy;
    let mut out = Vec::new();
    let cand = match Candidate::new(&m.f, &m.g, &m.params) {
        Ok(c) => c,
        Err(e) => return vec![CheckOutcome::error(Check::Membership, e)],
    };
    let report = match cand.membership(policy) {
        Ok(r) => r,
        Err(e) => return vec![CheckOutcome::error(Check::Membership, e)],
    };
    let member = report.holds();
    out.push(CheckOutcome::new(Check::Membership, member, report.margin(), Some(report.real_part.witness)));
    out.push(CheckOutcome::new(
        Check::ModulusForm,
        report.disagreements == 0 && report.modulus.holds == member,
        -(report.disagreements as f64),
        Some(report.modulus.witness),
    ));

    // verdict-agreement checks apply to members and non-members alike
    out.push(outcome(Check::Nonvanishing, (|| {
        let nv = lemma5_nonvanishing(&m.f, &cand.big_gk, &m.params, policy, config.zeta_samples)?;
        Ok(CheckOutcome::new(Check::Nonvanishing, nv.nonvanishing == member, nv.min_modulus, Some(nv.witness)))
    })()));
    out.push(outcome(Check::HalfPlaneAvoidance, (|| {
        let p = m.params.p_f64();
        let gamma = m.params.gamma();
        let normalized = cand
            .h
            .add_constant(Complex64::new(-gamma, 0.0))
            .scale(Complex64::new(1.0 / (p - gamma), 0.0));
        let r = lemma4_avoidance_check(&normalized, policy, config.zeta_samples)?;
        Ok(CheckOutcome::new(
            Check::HalfPlaneAvoidance,
            r.confirmed() && r.positivity.holds == member,
            r.positivity.min_margin,
            Some(r.positivity.witness),
        ))
    })()));
    out.push(outcome(Check::SymmetrizedStarlike, (|| {
        let r = starlike_report(&cand.big_gk, 0.0, m.params.p(), policy)?;
        Ok(CheckOutcome::new(Check::SymmetrizedStarlike, r.holds && r.min_margin > 0.0, r.min_margin, Some(r.witness)))
    })()));
    out.push(outcome(Check::LogDerivIdentity, (|| {
        let r = logderiv_identity_residual(&m.g, &m.params, policy)?;
        Ok(CheckOutcome::new(Check::LogDerivIdentity, r < IDENTITY_RESIDUAL_TOL, IDENTITY_RESIDUAL_TOL - r, None))
    })()));
    out.push(outcome(Check::SufficientCondition, sufficient_check(cell, config)));
    out.push(outcome(Check::MobiusSubordination, Ok(mobius_check(cell.seed))));
    out.push(outcome(Check::GammaInclusion, (|| {
        let r = inclusion_of(&cand, 0.0, policy)?;
        Ok(CheckOutcome::new(Check::GammaInclusion, r.holds, IDENTITY_TOL - r.identity_residual, None))
    })()));

    if !member {
        return out;
    }
    out.push(outcome(Check::SchwarzRoundTrip, (|| {
        let w = cand.schwarz(policy)?;
        let grid = make_grid(policy)?;
        let (err, at) = grid_max_modulus(|z| w.w.evaluate(z) - m.w.evaluate(z), &grid)?;
        let tol = ROUND_TRIP_TOL.max(schwarz_rounding_floor(&cand, policy)?);
        let mut o = CheckOutcome::new(
            Check::SchwarzRoundTrip,
            w.certified && err < tol,
            (tol - err).min(1.0 - w.max_modulus),
            Some(at),
        );
        o.detail = Some(format!("error {err:e}, tolerance {tol:e}"));
        Ok(o)
    })()));
    out.push(outcome(Check::SchwarzCharacterization, (|| {
        let back = lemma2_backward(&cand.h, &m.params, policy)?;
        let h = lemma2_forward(&back.w, 1.0, &m.params, policy, cand.h.degree())?;
        let grid = make_grid(policy)?;
        let (err, at) = grid_max_modulus(|z| h.evaluate(z) - cand.h.evaluate(z), &grid)?;
        Ok(CheckOutcome::new(
            Check::SchwarzCharacterization,
            back.certified && err < ROUND_TRIP_TOL,
            (1.0 - back.max_modulus).min(ROUND_TRIP_TOL - err),
            Some(at),
        ))
    })()));
    out.push(outcome(Check::CoefficientInequality, (|| {
        let rows = coefficient_inequality_check(&m.f, &cand.big_gk, &m.params, COEFF_CHECK_MAX, policy.margin_tol)?;
        let worst = rows.iter().map(|r| r.rhs - r.lhs).fold(f64::INFINITY, f64::min);
        Ok(CheckOutcome::new(Check::CoefficientInequality, rows.iter().all(|r| r.satisfied), worst, None))
    })()));
    out.push(outcome(Check::Distortion, (|| {
        let r = distortion_of(&cand, policy, config.steps)?;
        Ok(CheckOutcome::new(Check::Distortion, r.holds, r.worst(), Some(r.worst_at())))
    })()));
    out.push(outcome(Check::CloseToConvex, (|| {
        let r = kp_of(&cand, policy)?;
        Ok(CheckOutcome::new(Check::CloseToConvex, r.min_margin > 0.0, r.min_margin, Some(r.witness)))
    })()));
    out
}

/// Grid bound on the error of the recovered Schwarz function caused by
/// rounding the coefficients of `f` to f64: `|dH| <= eps sum n |a_n| r^n / |G_k|`
/// and `dw/dH = 2(p - gamma)/(H + p - 2 gamma)^2`.
pub fn schwarz_rounding_floor(cand: &Candidate, policy: &SamplingPolicy) -> Result<f64> {
    let p = cand.params.p_f64();
    let gamma = cand.params.gamma();
    let lead = cand.f.lead();
    let weights: Vec<f64> = cand
        .f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| (lead + j as i64) as f64 * c.norm())
        .collect();
    let per_radius = par::map(&policy.radii, |&r| {
        let d = weights.iter().rev().fold(0.0, |acc, w| acc * r + w) * r.powi(lead as i32);
        crate::sampling::circle(r, policy.angles_per_circle)
            .into_iter()
            .map(|z| {
                let shifted = cand.h.evaluate(z) + (p - 2.0 * gamma);
                d * 2.0 * (p - gamma) / (cand.big_gk.evaluate(z).norm() * shifted.norm_sqr())
            })
            .fold(0.0, f64::max)
    });
    Ok(f64::EPSILON * per_radius.into_iter().fold(0.0, f64::max))
}

fn sufficient_check(cell: &Cell, config: &SweepConfig) -> Result<CheckOutcome> {
    let gen = GeneratorSeed::new(cell.seed.wrapping_add(1), config.schwarz_degree, 0.1)?;
    let (f, g) = sufficient_draw(&cell.params, &gen, config.degree)?;
    let cand = Candidate::new(&f, &g, &cell.params)?;
    let condition = sufficient_condition_margin(&f, &cand.big_gk, &cell.params)?;
    let r = cand.membership(&config.policy)?;
    Ok(CheckOutcome::new(
        Check::SufficientCondition,
        !condition.certifies() || r.holds(),
        r.margin(),
        Some(r.real_part.witness),
    ))
}

/// A random ordered tuple `-1 <= B2 <= B1 < A1 <= A2 <= 1` drawn from `seed`.
pub fn mobius_tuple(seed: u64) -> (f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
    v.sort_by(f64::total_cmp);
    if v[1] == v[2] {
        v[2] = (v[2] + v[3]) / 2.0;
    }
    (v[2], v[1], v[3], v[0])
}

fn mobius_check(seed: u64) -> CheckOutcome {
    let (a1, b1, a2, b2) = mobius_tuple(seed);
    match lemma3_check(a1, b1, a2, b2) {
        Ok(decided) => {
            let sampled = sampled_subordination(a1, b1, a2, b2, MOBIUS_SAMPLES);
            CheckOutcome::new(Check::MobiusSubordination, decided == sampled, 0.0, None)
        }
        Err(e) => CheckOutcome::error(Check::MobiusSubordination, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig { seeds_per_cell: 1, ..SweepConfig::default() }
    }

    #[test]
    fn grid_has_27_cells() {
        let g = default_grid();
        assert_eq!(g.len(), 27);
        assert!(g.iter().all(|c| c.gamma() <= c.p_f64() / 2.0));
        let cs = cells(&g, &SweepConfig::default());
        assert_eq!(cs.len(), 54);
        assert_eq!(cs, cells(&g, &SweepConfig::default()));
    }

    #[test]
    fn mobius_tuples_are_ordered() {
        for seed in 0..200 {
            let (a1, b1, a2, b2) = mobius_tuple(seed);
            assert!(-1.0 <= b2 && b2 <= b1 && b1 < a1 && a1 <= a2 && a2 <= 1.0);
            assert!(mobius_check(seed).passed);
        }
    }

    #[test]
    fn specialization_cells_pass() {
        let grid = [ClassParams::new(1, 2, 0.0).unwrap(), ClassParams::new(2, 3, 0.5).unwrap()];
        let report = verify_all(&grid, &small());
        assert!(report.all_passed, "{:#?}", report.failures);
        assert_eq!(report.cells.len(), 2);
        assert!(report.cells.iter().all(|c| c.outcomes.len() == Check::ALL.len()));
    }

    #[test]
    fn corruption_is_reported() {
        let grid = [ClassParams::new(1, 2, 0.0).unwrap()];
        let report = verify_all(&grid, &SweepConfig { corrupt: true, ..small() });
        assert!(!report.all_passed);
        let f = report
            .failures
            .iter()
            .find(|f| matches!(f.check, Check::Membership | Check::Distortion))
            .expect("the perturbation breaks membership or a distortion bound");
        assert!(f.witness.is_some() && f.margin < 0.0);
    }
}
