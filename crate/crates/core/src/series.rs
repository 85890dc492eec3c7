//! Truncated complex power series `z^lead * (c_0 + c_1 z + ... + c_N z^N)`.
//!
//! A series knows its coefficients up to the power `lead + N` (its *reach*).
//! Binary operations keep only what both operands determine, so the result of
//! any chain of operations is exact in its first `N + 1` coefficients up to
//! floating-point rounding.

use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation degree used when callers do not ask for one.
pub const DEFAULT_DEGREE: usize = 64;

/// Tolerance for the leading coefficient of a normalized series.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct TruncatedSeries {
    lead: i64,
    coeffs: Vec<Complex64>,
}

/// Wire format: `{"lead": int, "coeffs": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    lead: i64,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<SeriesRepr> for TruncatedSeries {
    type Error = Error;

    fn try_from(repr: SeriesRepr) -> Result<Self> {
        let coeffs = repr
            .coeffs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        TruncatedSeries::new(repr.lead, coeffs)
    }
}

impl From<TruncatedSeries> for SeriesRepr {
    fn from(s: TruncatedSeries) -> Self {
        SeriesRepr {
            lead: s.lead,
            coeffs: s.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TruncatedSeries {
    /// Builds a series from its leading exponent and coefficients, as given.
    pub fn new(lead: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        if lead < 0 {
            return Err(Error::NegativeLead(lead));
        }
        if coeffs.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        if let Some(i) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFiniteCoefficient(i));
        }
        Ok(Self { lead, coeffs })
    }

    pub fn from_real(lead: i64, coeffs: &[f64]) -> Result<Self> {
        Self::new(lead, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Internal constructor; the lead may be negative (intermediate quotients).
    pub(crate) fn from_parts(lead: i64, mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { lead, coeffs }
    }

    /// `z^lead`, known to `degree` further powers (all zero).
    pub fn monomial(lead: u32, degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[0] = Complex64::new(1.0, 0.0);
        Self::from_parts(i64::from(lead), coeffs)
    }

    pub fn constant(c: Complex64, degree: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[0] = c;
        Self::from_parts(0, coeffs)
    }

    pub fn lead(&self) -> i64 {
        self.lead
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Truncation degree `N` (number of coefficients minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest power of `z` the series determines.
    pub fn reach(&self) -> i64 {
        self.lead + self.degree() as i64
    }

    /// Coefficient of `z^power`; zero outside `[lead, reach]`.
    pub fn coeff_of_power(&self, power: i64) -> Complex64 {
        let idx = power - self.lead;
        if idx < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(idx as usize).copied().unwrap_or_default()
    }

    /// Zero-extends or truncates to exactly `degree`.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, Complex64::new(0.0, 0.0));
        Self::from_parts(self.lead, coeffs)
    }

    /// True for `z^p + ...` with leading coefficient 1 within [`NORMALIZATION_TOL`].
    pub fn is_normalized(&self, p: u32) -> bool {
        self.lead == i64::from(p) && (self.coeffs[0] - 1.0).norm() <= NORMALIZATION_TOL
    }

    /// Multiplies by `z^m` for any integer `m`.
    pub fn shift(&self, m: i64) -> Self {
        Self::from_parts(self.lead + m, self.coeffs.clone())
    }

    /// Divides by `z^m`, refusing to create a pole.
    pub fn downshift(&self, m: i64) -> Result<Self> {
        if self.lead < m {
            return Err(Error::Pole { lead: self.lead, shift: m });
        }
        Ok(self.shift(-m))
    }

    /// Re-expresses the series with a smaller leading exponent by prepending zeros.
    fn lowered_to(&self, lead: i64) -> Self {
        debug_assert!(lead <= self.lead);
        let pad = (self.lead - lead) as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); pad];
        coeffs.extend_from_slice(&self.coeffs);
        Self::from_parts(lead, coeffs)
    }

    /// Drops a vanishing constant term: `h = c_0 + c_1 z + ...` with
    /// `|c_0| <= tol` becomes `z (c_1 + c_2 z + ...)`.
    pub fn factor_out_z(&self, tol: f64) -> Result<Self> {
        if self.lead >= 1 {
            return Ok(self.clone());
        }
        let c0 = self.coeff_of_power(0);
        if c0.norm() > tol {
            return Err(Error::NonVanishingConstant(c0.norm()));
        }
        let skip = (-self.lead) as usize + 1;
        let rest: Vec<_> = self.coeffs.iter().skip(skip).copied().collect();
        Ok(Self::from_parts(1, rest))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_parts(self.lead, self.coeffs.iter().map(|&x| x * c).collect())
    }

    pub fn add_constant(&self, c: Complex64) -> Self {
        let mut out = if self.lead > 0 { self.lowered_to(0) } else { self.clone() };
        let idx = (-out.lead) as usize;
        if idx < out.coeffs.len() {
            out.coeffs[idx] += c;
        }
        out
    }

    /// Cauchy product, truncated to the shorter operand's degree.
    pub fn multiply(&self, other: &Self) -> Self {
        let len = self.coeffs.len().min(other.coeffs.len());
        let a = &self.coeffs[..len];
        let b = &other.coeffs[..len];
        let coeffs = (0..len)
            .map(|n| (0..=n).map(|j| a[j] * b[n - j]).sum())
            .collect();
        Self::from_parts(self.lead + other.lead, coeffs)
    }

    /// Quotient by forward substitution; the divisor's leading coefficient must be nonzero.
    pub fn divide(&self, divisor: &Self) -> Result<Self> {
        let b0 = divisor.coeffs[0];
        if b0.norm() == 0.0 || !b0.norm().is_finite() {
            return Err(Error::SingularDivision);
        }
        let len = self.coeffs.len().min(divisor.coeffs.len());
        let b = &divisor.coeffs[..len];
        let inv = b0.inv();
        let mut q: Vec<Complex64> = Vec::with_capacity(len);
        for n in 0..len {
            let acc: Complex64 = (1..=n).map(|j| b[j] * q[n - j]).sum();
            q.push((self.coeffs[n] - acc) * inv);
        }
        Ok(Self::from_parts(self.lead - divisor.lead, q))
    }

    /// Term-wise derivative. A constant term is dropped.
    pub fn differentiate(&self) -> Self {
        if self.lead == 0 {
            let coeffs = self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect();
            return Self::from_parts(0, coeffs);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * (self.lead + j as i64) as f64)
            .collect();
        Self::from_parts(self.lead - 1, coeffs)
    }

    /// Antiderivative vanishing at the origin of a derivative `p z^{p-1} + ...`,
    /// producing a normalized `z^p + ...`.
    pub fn integrate_primitive(&self, p: u32) -> Result<Self> {
        let p_f = f64::from(p);
        if p == 0
            || self.lead != i64::from(p) - 1
            || (self.coeffs[0] - p_f).norm() > NORMALIZATION_TOL * p_f
        {
            return Err(Error::InconsistentPrimitive {
                lead: self.lead,
                coeff: format!("{}", self.coeffs[0]),
                p,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c / (p_f + j as f64))
            .collect();
        Ok(Self::from_parts(i64::from(p), coeffs))
    }

    /// Series of `z -> f(e^{it} z)`.
    pub fn rotate(&self, t: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * Complex64::from_polar(1.0, t * (self.lead + j as i64) as f64))
            .collect();
        Self::from_parts(self.lead, coeffs)
    }

    /// Horner evaluation of the polynomial part times `z^lead`.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let poly = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        match self.lead {
            0 => poly,
            lead => poly * z.powi(lead as i32),
        }
    }

    /// Largest coefficient-wise distance over the common reach of both series.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let lo = self.lead.min(other.lead);
        let hi = self.reach().min(other.reach());
        (lo..=hi)
            .map(|k| (self.coeff_of_power(k) - other.coeff_of_power(k)).norm())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let lead = self.lead.min(other.lead);
        let reach = self.reach().min(other.reach()).max(lead);
        let coeffs = (lead..=reach)
            .map(|k| self.coeff_of_power(k) + other.coeff_of_power(k) * sign)
            .collect();
        Self::from_parts(lead, coeffs)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: Self) -> TruncatedSeries {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(lead: i64, coeffs: &[f64]) -> TruncatedSeries {
        TruncatedSeries::from_real(lead, coeffs).unwrap()
    }

    fn assert_coeffs(s: &TruncatedSeries, lead: i64, expected: &[Complex64]) {
        assert_eq!(s.lead(), lead);
        assert_eq!(s.coeffs().len(), expected.len(), "{s:?}");
        for (a, b) in s.coeffs().iter().zip(expected) {
            assert!((a - b).norm() < 1e-10, "{s:?} vs {expected:?}");
        }
    }

    #[test]
    fn construction() {
        let s = real(1, &[1.0, 0.25]);
        assert_eq!(s.lead(), 1);
        assert_eq!(s.degree(), 1);
        assert_eq!(real(2, &[1.0]).reach(), 2);
        assert_eq!(real(0, &[1.0, 1.0, 1.0]).coeff_of_power(2), c(1.0));
        assert_eq!(TruncatedSeries::from_real(-1, &[1.0]), Err(Error::NegativeLead(-1)));
        assert_eq!(TruncatedSeries::new(0, vec![]), Err(Error::EmptyCoefficients));
        assert!(TruncatedSeries::from_real(0, &[f64::NAN]).is_err());
    }

    #[test]
    fn multiply_examples() {
        assert_coeffs(&real(1, &[1.0, 1.0]).multiply(&real(1, &[1.0, 0.0])), 2, &[c(1.0), c(1.0)]);
        let one_minus_z2 = real(0, &[1.0, 1.0, 0.0]).multiply(&real(0, &[1.0, -1.0, 0.0]));
        assert_coeffs(&one_minus_z2, 0, &[c(1.0), c(0.0), c(-1.0)]);

        let a = real(1, &[1.0, 1.0, 1.0, 0.0, 0.0]);
        let b = real(1, &[1.0, -1.0, 0.0, 0.0, 0.0]);
        // z^2 - z^5 by hand
        assert_coeffs(&a.multiply(&b), 2, &[c(1.0), c(0.0), c(0.0), c(-1.0), c(0.0)]);
        // truncation to the shorter operand
        assert_coeffs(&real(1, &[1.0, 1.0, 1.0]).multiply(&real(1, &[1.0, -1.0])), 2, &[c(1.0), c(0.0)]);
    }

    #[test]
    fn divide_examples() {
        let num = TruncatedSeries::monomial(2, 8);
        let den = real(1, &[1.0, -1.0]).with_degree(8);
        let q = num.divide(&den).unwrap();
        assert_coeffs(&q, 1, &[c(1.0); 9]);
        assert!(q.multiply(&den).max_coeff_distance(&num) < 1e-14);

        let f = real(3, &[1.0, 0.5, -2.0, 0.25]);
        assert_coeffs(&f.divide(&f).unwrap(), 0, &[c(1.0), c(0.0), c(0.0), c(0.0)]);

        let s = real(1, &[1.0, 0.0, 1.0 / 3.0]);
        assert_coeffs(&s.divide(&real(1, &[1.0, 0.0, 0.0])).unwrap(), 0, &[c(1.0), c(0.0), c(1.0 / 3.0)]);

        assert_eq!(f.divide(&real(1, &[0.0, 1.0])), Err(Error::SingularDivision));
    }

    #[test]
    fn calculus_examples() {
        assert_coeffs(&real(1, &[1.0, 0.0, 1.0 / 3.0]).differentiate(), 0, &[c(1.0), c(0.0), c(1.0)]);
        assert_coeffs(&real(2, &[1.0]).differentiate(), 1, &[c(2.0)]);
        assert_coeffs(&real(0, &[5.0]).differentiate(), 0, &[c(0.0)]);

        assert_coeffs(
            &real(0, &[1.0, 0.0, 1.0]).integrate_primitive(1).unwrap(),
            1,
            &[c(1.0), c(0.0), c(1.0 / 3.0)],
        );
        assert_coeffs(&real(1, &[2.0]).integrate_primitive(2).unwrap(), 2, &[c(1.0)]);
        assert_coeffs(&real(0, &[1.0, 1.0]).integrate_primitive(1).unwrap(), 1, &[c(1.0), c(0.5)]);
        assert!(real(0, &[2.0, 1.0]).integrate_primitive(1).is_err());
        assert!(real(1, &[1.0]).integrate_primitive(1).is_err());
    }

    #[test]
    fn rotate_examples() {
        assert_coeffs(&real(1, &[1.0]).rotate(PI), 1, &[c(-1.0)]);
        assert_coeffs(&real(2, &[1.0]).rotate(PI), 2, &[c(1.0)]);

        let s = real(1, &[1.0, 1.0]);
        let t = 2.0 * PI / 3.0;
        let rotated = s.rotate(t);
        for z in [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.6)] {
            let direct = s.evaluate(Complex64::from_polar(1.0, t) * z);
            assert!((rotated.evaluate(z) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn downshift_examples() {
        assert_coeffs(&real(3, &[1.0]).downshift(2).unwrap(), 1, &[c(1.0)]);
        assert_coeffs(&real(2, &[1.0]).downshift(2).unwrap(), 0, &[c(1.0)]);
        assert_eq!(real(1, &[1.0]).downshift(2), Err(Error::Pole { lead: 1, shift: 2 }));
    }

    #[test]
    fn evaluate_examples() {
        assert!((real(1, &[1.0, 1.0]).evaluate(c(0.5)) - 0.75).norm() < 1e-15);
        assert_eq!(real(2, &[1.0, 3.0]).evaluate(c(0.0)), c(0.0));
        let geometric = TruncatedSeries::monomial(1, 64).divide(&real(0, &[1.0, -1.0]).with_degree(64)).unwrap();
        // 0.5/(1-0.5) minus the tail 0.5^66/0.5
        assert!((geometric.evaluate(c(0.5)) - 1.0).norm() < 1e-18 + 2f64.powi(-64));
    }

    #[test]
    fn addition_aligns_leads() {
        let s = &real(1, &[1.0, 2.0]) + &real(0, &[3.0, 0.0, 5.0]);
        assert_coeffs(&s, 0, &[c(3.0), c(1.0), c(7.0)]);
        let d = &real(1, &[1.0, 2.0, 7.0]) - &real(1, &[1.0, 0.0]);
        assert_coeffs(&d, 1, &[c(0.0), c(2.0)]);
        let h = real(1, &[2.0, 1.0]).add_constant(c(1.0));
        assert_coeffs(&h, 0, &[c(1.0), c(2.0), c(1.0)]);
    }

    #[test]
    fn factor_out_z() {
        let h = real(0, &[1e-14, 2.0, 3.0]).factor_out_z(1e-10).unwrap();
        assert_coeffs(&h, 1, &[c(2.0), c(3.0)]);
        assert!(real(0, &[0.1, 2.0]).factor_out_z(1e-10).is_err());
    }

    #[test]
    fn json_format() {
        let s = TruncatedSeries::new(1, vec![c(1.0), Complex64::new(0.25, -1.0)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"lead":1,"coeffs":[[1.0,0.0],[0.25,-1.0]]}"#);
        let back: TruncatedSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TruncatedSeries>(r#"{"lead":-2,"coeffs":[[1,0]]}"#).is_err());
        assert!(serde_json::from_str::<TruncatedSeries>(r#"{"lead":0,"coeffs":[]}"#).is_err());
    }
}
