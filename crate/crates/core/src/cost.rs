//! Latent cost functions mapping a period's average bid to the amount spent.
//!
//! The pacing loop never sees these formulas directly; it only observes the
//! cost they produce. They exist so that simulations and analyses can stand in
//! for the hidden pricing mechanism of an ad exchange.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod expr;

pub use expr::{parse_cost, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("bid {bid} is outside the cost function domain: {reason}")]
    Domain { bid: f64, reason: &'static str },
    #[error("term {term} ({coefficient}*b^{exponent}) is not finite at bid {bid}")]
    NonFinite {
        term: usize,
        coefficient: f64,
        exponent: f64,
        bid: f64,
    },
    #[error("cost {cost} at bid {bid} is negative")]
    Negative { bid: f64, cost: f64 },
    #[error("invalid cost function: {0}")]
    Invalid(String),
}

/// `C * b^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomialCost {
    pub coefficient: f64,
    pub exponent: f64,
}

impl MonomialCost {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self, CostError> {
        if !(coefficient > 0.0 && coefficient.is_finite()) {
            return Err(CostError::Invalid(format!(
                "monomial coefficient must be positive and finite, got {coefficient}"
            )));
        }
        if !exponent.is_finite() {
            return Err(CostError::Invalid(format!(
                "monomial exponent must be finite, got {exponent}"
            )));
        }
        Ok(Self { coefficient, exponent })
    }

    pub fn evaluate(&self, bid: f64) -> Result<f64, CostError> {
        eval_terms(&[Term::from(*self)], bid)
    }
}

/// One `c * b^k` summand of a polynomial. Unlike [`MonomialCost`] the
/// coefficient may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
}

impl From<MonomialCost> for Term {
    fn from(m: MonomialCost) -> Self {
        Term {
            coefficient: m.coefficient,
            exponent: m.exponent,
        }
    }
}

/// `c_1 b^{k_1} + ... + c_m b^{k_m}` with `k_1 > ... > k_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct PolynomialCost {
    terms: Vec<Term>,
}

impl PolynomialCost {
    /// Builds a polynomial, sorting terms by decreasing exponent. Repeated
    /// exponents are rejected rather than merged.
    pub fn new(mut terms: Vec<Term>) -> Result<Self, CostError> {
        if terms.is_empty() {
            return Err(CostError::Invalid("polynomial has no terms".into()));
        }
        for t in &terms {
            if !t.coefficient.is_finite() || !t.exponent.is_finite() {
                return Err(CostError::Invalid(format!(
                    "polynomial term {}*b^{} is not finite",
                    t.coefficient, t.exponent
                )));
            }
        }
        terms.sort_by(|a, b| b.exponent.total_cmp(&a.exponent));
        if terms.windows(2).any(|w| w[0].exponent == w[1].exponent) {
            return Err(CostError::Invalid("polynomial exponents must be distinct".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn leading(&self) -> Term {
        self.terms[0]
    }

    pub fn trailing(&self) -> Term {
        self.terms[self.terms.len() - 1]
    }

    /// Sum of absolute coefficients.
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    pub fn evaluate(&self, bid: f64) -> Result<f64, CostError> {
        eval_terms(&self.terms, bid)
    }
}

impl TryFrom<Vec<Term>> for PolynomialCost {
    type Error = CostError;

    fn try_from(terms: Vec<Term>) -> Result<Self, Self::Error> {
        PolynomialCost::new(terms)
    }
}

impl From<PolynomialCost> for Vec<Term> {
    fn from(p: PolynomialCost) -> Self {
        p.terms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    /// `min(f(b), M)`: spend never exceeds the cap.
    Above,
    /// `max(f(b), M)`: spend never falls below the cap.
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCost {
    Monomial(MonomialCost),
    Polynomial(PolynomialCost),
}

impl BaseCost {
    pub fn evaluate(&self, bid: f64) -> Result<f64, CostError> {
        match self {
            BaseCost::Monomial(m) => m.evaluate(bid),
            BaseCost::Polynomial(p) => p.evaluate(bid),
        }
    }
}

/// A cost function with a supplier-imposed guard rail on per-period spend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardedCost {
    pub inner: BaseCost,
    pub cap: f64,
    pub mode: CapMode,
}

impl GuardedCost {
    pub fn new(inner: BaseCost, cap: f64, mode: CapMode) -> Result<Self, CostError> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(CostError::Invalid(format!(
                "guard rail must be positive and finite, got {cap}"
            )));
        }
        Ok(Self { inner, cap, mode })
    }

    pub fn evaluate(&self, bid: f64) -> Result<f64, CostError> {
        let raw = self.inner.evaluate(bid)?;
        Ok(match self.mode {
            CapMode::Above => raw.min(self.cap),
            CapMode::Below => raw.max(self.cap),
        })
    }
}

/// Any closed-form latent cost function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFn {
    Monomial(MonomialCost),
    Polynomial(PolynomialCost),
    Guarded(GuardedCost),
}

impl CostFn {
    pub fn monomial(coefficient: f64, exponent: f64) -> Result<Self, CostError> {
        MonomialCost::new(coefficient, exponent).map(CostFn::Monomial)
    }

    /// `min(C b^k, M)`, the guard-railed family used throughout the bid
    /// dynamics experiments.
    pub fn capped_monomial(coefficient: f64, exponent: f64, cap: f64) -> Result<Self, CostError> {
        let inner = BaseCost::Monomial(MonomialCost::new(coefficient, exponent)?);
        GuardedCost::new(inner, cap, CapMode::Above).map(CostFn::Guarded)
    }

    pub fn evaluate(&self, bid: f64) -> Result<f64, CostError> {
        match self {
            CostFn::Monomial(m) => m.evaluate(bid),
            CostFn::Polynomial(p) => p.evaluate(bid),
            CostFn::Guarded(g) => g.evaluate(bid),
        }
    }

    /// The monomial `C b^k` underneath this function, if there is one, along
    /// with an upper guard rail when present. Closed-form analysis only
    /// applies to this shape.
    pub fn as_capped_monomial(&self) -> Option<(MonomialCost, Option<f64>)> {
        match self {
            CostFn::Monomial(m) => Some((*m, None)),
            CostFn::Guarded(GuardedCost {
                inner: BaseCost::Monomial(m),
                cap,
                mode: CapMode::Above,
            }) => Some((*m, Some(*cap))),
            _ => None,
        }
    }
}

impl std::str::FromStr for CostFn {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cost(s)
    }
}

fn eval_terms(terms: &[Term], bid: f64) -> Result<f64, CostError> {
    if bid.is_nan() || bid < 0.0 {
        return Err(CostError::Domain {
            bid,
            reason: "bids must be non-negative",
        });
    }
    let mut total = 0.0;
    for (i, t) in terms.iter().enumerate() {
        if bid == 0.0 && t.exponent <= 0.0 {
            return Err(CostError::Domain {
                bid,
                reason: "zero bid with a non-positive exponent is a singularity",
            });
        }
        let v = t.coefficient * bid.powf(t.exponent);
        if !v.is_finite() {
            return Err(CostError::NonFinite {
                term: i,
                coefficient: t.coefficient,
                exponent: t.exponent,
                bid,
            });
        }
        total += v;
    }
    if !total.is_finite() {
        return Err(CostError::NonFinite {
            term: terms.len() - 1,
            coefficient: terms[terms.len() - 1].coefficient,
            exponent: terms[terms.len() - 1].exponent,
            bid,
        });
    }
    if total < 0.0 {
        return Err(CostError::Negative { bid, cost: total });
    }
    Ok(total)
}

/// Which side of `b = 1` a monomial envelope is valid on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeRegime {
    /// `0 < b < 1`: the smallest exponent dominates.
    BelowOne,
    /// `b >= 1`: the largest exponent dominates.
    AtLeastOne,
}

impl EnvelopeRegime {
    pub fn of(bid: f64) -> Self {
        if bid < 1.0 {
            EnvelopeRegime::BelowOne
        } else {
            EnvelopeRegime::AtLeastOne
        }
    }

    pub fn contains(self, bid: f64) -> bool {
        match self {
            EnvelopeRegime::BelowOne => bid > 0.0 && bid < 1.0,
            EnvelopeRegime::AtLeastOne => bid >= 1.0,
        }
    }
}

/// Pair of monomials sandwiching a polynomial on one side of `b = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomialEnvelope {
    pub lower: MonomialCost,
    pub upper: MonomialCost,
    pub regime: EnvelopeRegime,
}

/// Brackets a polynomial with positive coefficients between two monomials
/// sharing the dominant exponent of the regime.
///
/// For `b >= 1` the bracket is `c_1 b^{k_1} <= s(b) <= C̃ b^{k_1}`; for
/// `0 < b < 1` it is `c_m b^{k_m} <= s(b) <= C̃ b^{k_m}`, with `C̃ = Σ|c_i|`.
/// Polynomials with any non-positive coefficient are rejected.
pub fn monomial_envelope(poly: &PolynomialCost, regime: EnvelopeRegime) -> Result<MonomialEnvelope, CostError> {
    if let Some(bad) = poly.terms().iter().find(|t| t.coefficient <= 0.0) {
        return Err(CostError::Invalid(format!(
            "monomial envelope needs positive coefficients, found {}",
            bad.coefficient
        )));
    }
    let mass = poly.coefficient_mass();
    let dominant = match regime {
        EnvelopeRegime::AtLeastOne => poly.leading(),
        EnvelopeRegime::BelowOne => poly.trailing(),
    };
    Ok(MonomialEnvelope {
        lower: MonomialCost::new(dominant.coefficient, dominant.exponent)?,
        upper: MonomialCost::new(mass, dominant.exponent)?,
        regime,
    })
}

fn fmt_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str("+")?;
        }
        write!(f, "{}*b^{}", t.coefficient, t.exponent)?;
    }
    Ok(())
}

impl fmt::Display for BaseCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseCost::Monomial(m) => fmt_terms(f, &[Term::from(*m)]),
            BaseCost::Polynomial(p) => fmt_terms(f, p.terms()),
        }
    }
}

/// Prints in the same grammar [`parse_cost`] accepts.
impl fmt::Display for CostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFn::Monomial(m) => fmt_terms(f, &[Term::from(*m)]),
            CostFn::Polynomial(p) => fmt_terms(f, p.terms()),
            CostFn::Guarded(g) => {
                let name = match g.mode {
                    CapMode::Above => "min",
                    CapMode::Below => "max",
                };
                write!(f, "{name}({},{})", g.inner, g.cap)
            }
        }
    }
}
