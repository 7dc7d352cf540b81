//! Truncated Novikov series `Σ aᵢ T^{λᵢ}` with rational exponents and
//! complex coefficients.
//!
//! Every series carries an exclusive truncation bound (`cutoff`): terms at
//! or beyond it are unknown and never stored. Exact series (closed-form
//! coefficients built from polytope data) use an infinite cutoff.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rational::{Rational, Valuation};

/// Relative order kept when a computation needs a finite truncation and the
/// inputs do not supply one.
pub const DEFAULT_ORDER: i64 = 4;
/// Coefficients smaller than this fraction of the largest lower-order
/// coefficient, or of the terms that cancelled into them, are dropped.
pub const ZERO_TOL_REL: f64 = 1e-12;
pub const ZERO_TOL_ABS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NovikovError {
    #[error("series has no terms")]
    ZeroSeries,
    #[error("exponential needs nonnegative valuation, found exponent {0}")]
    NegativeValuation(Rational),
    #[error("evaluation point t = {0} outside (0, 1)")]
    OutOfRange(f64),
    #[error("malformed series literal: {0}")]
    Parse(String),
    #[error("coefficient overflow below exponent {0}")]
    Overflow(Rational),
}

#[derive(Clone, PartialEq, Debug)]
pub struct NovikovSeries {
    terms: Vec<(Rational, Complex64)>,
    cutoff: Valuation,
}

impl NovikovSeries {
    pub fn zero() -> Self {
        NovikovSeries {
            terms: Vec::new(),
            cutoff: Valuation::Infinite,
        }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, Rational::ZERO)
    }

    /// The exact series `c·T^e`.
    pub fn monomial(c: Complex64, e: Rational) -> Self {
        Self::from_terms(vec![(e, c)], Valuation::Infinite)
    }

    /// `T^e`.
    pub fn t_pow(e: Rational) -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), e)
    }

    /// Normalizes arbitrary terms: sorts, merges equal exponents, drops
    /// terms at or past the cutoff and coefficients below tolerance.
    /// Non-finite coefficients are kept.
    pub fn from_terms(terms: Vec<(Rational, Complex64)>, cutoff: Valuation) -> Self {
        let mut terms = terms;
        terms.sort_by_key(|a| a.0);
        // (exponent, sum, largest summand)
        let mut merged: Vec<(Rational, Complex64, f64)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            if Valuation::Finite(e) >= cutoff {
                continue;
            }
            match merged.last_mut() {
                Some((le, lc, ls)) if *le == e => {
                    *lc += c;
                    *ls = ls.max(c.norm());
                }
                _ => merged.push((e, c, c.norm())),
            }
        }
        let mut running: f64 = 0.0;
        let mut kept = Vec::with_capacity(merged.len());
        for (e, c, summands) in merged {
            if !c.is_finite() {
                kept.push((e, c));
                continue;
            }
            let scale = running.max(summands);
            if c.norm() > (scale * ZERO_TOL_REL).max(ZERO_TOL_ABS) {
                running = running.max(c.norm());
                kept.push((e, c));
            }
        }
        NovikovSeries {
            terms: kept,
            cutoff,
        }
    }

    /// Like [`from_terms`](Self::from_terms) with the default cutoff
    /// `leading exponent + 4`.
    pub fn with_default_cutoff(terms: Vec<(Rational, Complex64)>) -> Self {
        let exact = Self::from_terms(terms, Valuation::Infinite);
        match exact.valuation() {
            Valuation::Finite(v) => {
                let c = v + Rational::integer(DEFAULT_ORDER);
                exact.truncate(c)
            }
            Valuation::Infinite => exact,
        }
    }

    pub fn terms(&self) -> &[(Rational, Complex64)] {
        &self.terms
    }

    pub fn cutoff(&self) -> Valuation {
        self.cutoff
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.cutoff.is_infinite()
    }

    /// Smallest exponent with a nonzero coefficient; `+∞` for zero.
    pub fn valuation(&self) -> Valuation {
        self.terms
            .first()
            .map_or(Valuation::Infinite, |(e, _)| Valuation::Finite(*e))
    }

    pub fn leading(&self) -> Option<(Rational, Complex64)> {
        self.terms.first().copied()
    }

    pub fn coefficient(&self, e: Rational) -> Complex64 {
        self.terms
            .iter()
            .find(|(x, _)| *x == e)
            .map_or(Complex64::new(0.0, 0.0), |(_, c)| *c)
    }

    /// Lowers the cutoff to `min(cutoff, bound)`.
    pub fn truncate(&self, bound: Rational) -> Self {
        let cutoff = self.cutoff.min(Valuation::Finite(bound));
        NovikovSeries {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|(e, _)| Valuation::Finite(*e) < cutoff)
                .collect(),
            cutoff,
        }
    }

    pub fn with_cutoff(&self, cutoff: Valuation) -> Self {
        Self::from_terms(self.terms.clone(), cutoff)
    }

    /// Removes coefficients with magnitude at most `abs_tol`.
    pub fn chop(&self, abs_tol: f64) -> Self {
        NovikovSeries {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|(_, c)| c.norm() > abs_tol)
                .collect(),
            cutoff: self.cutoff,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(
            self.terms.iter().map(|&(e, c)| (e, c * s)).collect(),
            self.cutoff,
        )
    }

    /// Multiplies by `T^e`, shifting every exponent and the cutoff.
    pub fn shift(&self, e: Rational) -> Self {
        NovikovSeries {
            terms: self.terms.iter().map(|&(x, c)| (x + e, c)).collect(),
            cutoff: self.cutoff + e,
        }
    }

    /// Errors on an infinite or NaN coefficient; exponents are reported
    /// shifted by `shift`.
    fn check_finite(&self, shift: Rational) -> Result<(), NovikovError> {
        match self.terms.iter().find(|(_, c)| !c.is_finite()) {
            Some(&(e, _)) => Err(NovikovError::Overflow(e + shift)),
            None => Ok(()),
        }
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        let cutoff = self.cutoff.min(other.cutoff);
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms, cutoff)
    }

    pub fn neg(&self) -> Self {
        NovikovSeries {
            terms: self.terms.iter().map(|&(e, c)| (e, -c)).collect(),
            cutoff: self.cutoff,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Cauchy product, truncated where the factors stop being known:
    /// `min(cutoff_a + v(b), cutoff_b + v(a))`.
    pub fn mul(&self, other: &Self) -> Self {
        let cutoff = (self.cutoff + other.valuation()).min(other.cutoff + self.valuation());
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &other.terms {
                let e = ea + eb;
                if Valuation::Finite(e) < cutoff {
                    terms.push((e, ca * cb));
                }
            }
        }
        Self::from_terms(terms, cutoff)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = NovikovSeries::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiplicative inverse, known to the precision the input supports:
    /// cutoff `cutoff(a) − 2v(a)`, or `−v(a) + 4` for exact input.
    pub fn inv(&self) -> Result<Self, NovikovError> {
        let (lead_e, _) = self.leading().ok_or(NovikovError::ZeroSeries)?;
        let target = match self.cutoff {
            Valuation::Finite(c) => c - lead_e - lead_e,
            Valuation::Infinite => -lead_e + Rational::integer(DEFAULT_ORDER),
        };
        self.inv_to(target)
    }

    /// Inverse truncated at `min(cutoff, natural precision)`.
    pub fn inv_to(&self, cutoff: Rational) -> Result<Self, NovikovError> {
        let (lead_e, lead_c) = self.leading().ok_or(NovikovError::ZeroSeries)?;
        let natural = match self.cutoff {
            Valuation::Finite(c) => Valuation::Finite(c - lead_e - lead_e),
            Valuation::Infinite => Valuation::Infinite,
        };
        let target = natural.min(Valuation::Finite(cutoff));
        let Valuation::Finite(target) = target else {
            unreachable!()
        };
        // a = c T^λ (1 + r), relative precision p = target + λ
        let p = target + lead_e;
        let inv_c = lead_c.inv();
        let r = NovikovSeries::from_terms(
            self.terms[1..]
                .iter()
                .map(|&(e, c)| (e - lead_e, c * inv_c))
                .collect(),
            self.cutoff + (-lead_e),
        )
        .truncate(p);
        let minus_r = r.neg();
        let mut sum = NovikovSeries::one().truncate(p);
        let mut power = NovikovSeries::one().truncate(p);
        while !power.is_zero() {
            power = power.mul(&minus_r).truncate(p);
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power);
            sum.check_finite(-lead_e)?;
        }
        Ok(sum.scale(inv_c).shift(-lead_e))
    }

    /// `exp(a)` for `v(a) ≥ 0`: `e^c · Σ a₊ᵏ/k!` with `c` the constant term.
    pub fn exp(&self) -> Result<Self, NovikovError> {
        if let Some((e, _)) = self.terms.iter().find(|(e, _)| e.is_negative()) {
            return Err(NovikovError::NegativeValuation(*e));
        }
        let c = self.coefficient(Rational::ZERO);
        let plus = NovikovSeries {
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|(e, _)| e.is_positive())
                .collect(),
            cutoff: self.cutoff,
        };
        if plus.is_zero() {
            return Ok(NovikovSeries::from_terms(
                vec![(Rational::ZERO, c.exp())],
                self.cutoff,
            ));
        }
        let bound = match self.cutoff {
            Valuation::Finite(b) => b,
            Valuation::Infinite => Rational::integer(DEFAULT_ORDER),
        };
        let plus = plus.truncate(bound);
        let mut sum = NovikovSeries::one().truncate(bound);
        let mut power = NovikovSeries::one().truncate(bound);
        let mut k = 1.0;
        loop {
            power = power.mul(&plus).truncate(bound).scale(Complex64::new(1.0 / k, 0.0));
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power);
            sum.check_finite(Rational::ZERO)?;
            k += 1.0;
        }
        Ok(sum.scale(c.exp()))
    }

    /// Numeric specialization `Σ aᵢ tᵏ` at a real `t ∈ (0, 1)`.
    pub fn eval(&self, t: f64) -> Result<Complex64, NovikovError> {
        if !(t > 0.0 && t < 1.0) {
            return Err(NovikovError::OutOfRange(t));
        }
        Ok(self.eval_unchecked(t))
    }

    /// Evaluation without the range check; `t` must be positive.
    pub fn eval_unchecked(&self, t: f64) -> Complex64 {
        let lt = t.ln();
        self.terms
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &(e, c)| {
                acc + c * (e.to_f64() * lt).exp()
            })
    }
}

impl Add for &NovikovSeries {
    type Output = NovikovSeries;
    fn add(self, rhs: &NovikovSeries) -> NovikovSeries {
        NovikovSeries::add(self, rhs)
    }
}

impl Sub for &NovikovSeries {
    type Output = NovikovSeries;
    fn sub(self, rhs: &NovikovSeries) -> NovikovSeries {
        NovikovSeries::sub(self, rhs)
    }
}

impl Mul for &NovikovSeries {
    type Output = NovikovSeries;
    fn mul(self, rhs: &NovikovSeries) -> NovikovSeries {
        NovikovSeries::mul(self, rhs)
    }
}

impl Neg for &NovikovSeries {
    type Output = NovikovSeries;
    fn neg(self) -> NovikovSeries {
        NovikovSeries::neg(self)
    }
}

fn fmt_exponent(e: Rational) -> String {
    if e.denom() == 1 {
        format!("{}", e.numer())
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

impl fmt::Display for NovikovSeries {
    /// `(re,im)*T^(p/q) + …`; the exponent factor is omitted for `T^0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({},{})", c.re, c.im)?;
            if !e.is_zero() {
                write!(f, "*T^({})", fmt_exponent(*e))?;
            }
        }
        Ok(())
    }
}

/// Splits on `+` outside parentheses.
fn split_terms(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_t_power(s: &str) -> Result<Rational, NovikovError> {
    let err = || NovikovError::Parse(s.to_string());
    let s = s.trim();
    if s == "T" {
        return Ok(Rational::ONE);
    }
    let rest = s.strip_prefix("T^").ok_or_else(err)?;
    rest.parse::<Rational>().map_err(|_| err())
}

fn parse_coefficient(s: &str) -> Result<Complex64, NovikovError> {
    let err = || NovikovError::Parse(s.to_string());
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (re, im) = inner.split_once(',').ok_or_else(err)?;
        let re: f64 = re.trim().parse().map_err(|_| err())?;
        let im: f64 = im.trim().parse().map_err(|_| err())?;
        Ok(Complex64::new(re, im))
    } else {
        s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| err())
    }
}

impl FromStr for NovikovSeries {
    type Err = NovikovError;

    /// Parses `(re,im)*T^(p/q) + …`. A trailing `O(T^(p/q))` term sets the
    /// cutoff; without it the default `leading + 4` applies.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(NovikovError::Parse(s.to_string()));
        }
        let mut terms = Vec::new();
        let mut cutoff = None;
        for raw in split_terms(s) {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(NovikovError::Parse(s.to_string()));
            }
            if let Some(inner) = raw.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
                cutoff = Some(parse_t_power(inner)?);
                continue;
            }
            if raw == "0" {
                continue;
            }
            if raw.starts_with('T') {
                terms.push((parse_t_power(raw)?, Complex64::new(1.0, 0.0)));
                continue;
            }
            match raw.split_once("*T") {
                Some((coef, pow)) => {
                    let e = parse_t_power(&format!("T{pow}"))?;
                    terms.push((e, parse_coefficient(coef)?));
                }
                None => terms.push((Rational::ZERO, parse_coefficient(raw)?)),
            }
        }
        Ok(match cutoff {
            Some(c) => NovikovSeries::from_terms(terms, Valuation::Finite(c)),
            None => NovikovSeries::with_default_cutoff(terms),
        })
    }
}

impl Serialize for NovikovSeries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NovikovSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
