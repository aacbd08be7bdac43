//! Exact algebra and analysis for increasing homeomorphisms of an interval.
//!
//! Elements are affine maps over the rationals (carrier: the whole line),
//! power maps on the open unit interval, words of same-carrier factors, and
//! conjugates through a named transfer map. Affine paths are exact; power
//! maps are exact when the rational root exists and certified-numeric
//! otherwise; conjugates are certified-numeric.
//!
//! Numeric answers carry the absolute tolerance [`NUMERIC_TOL`] and are never
//! used where an exactness contract is stated.

use crate::rational::Rational;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Absolute tolerance for certified-numeric evaluation paths.
pub const NUMERIC_TOL: f64 = 1e-12;

/// Iteration cap for orbit walks and witness searches.
pub const ORBIT_CAP: usize = 1_000_000;

/// Probe count for pointwise identity detection; exceeds the degrees of
/// freedom of every built-in element kind.
const IDENTITY_PROBES: usize = 17;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("carrier mismatch: {0} vs {1}")]
    CarrierMismatch(Interval, Interval),
    #[error("input {x} outside carrier {carrier}")]
    OutsideCarrier { x: String, carrier: Interval },
    #[error("exact evaluation unavailable: {0}")]
    NotExact(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Bound {
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Bound::Finite(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::Finite(r) => write!(f, "{}", r),
            Bound::PosInf => write!(f, "+inf"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "-inf" => Ok(Bound::NegInf),
            "+inf" | "inf" => Ok(Bound::PosInf),
            other => other
                .parse()
                .map(Bound::Finite)
                .map_err(|e| de::Error::custom(format!("bad bound {other:?}: {e}"))),
        }
    }
}

/// Open interval of reals with rational or infinite endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Bound,
    pub upper: Bound,
}

impl Interval {
    pub fn new(lower: Bound, upper: Bound) -> Self {
        let iv = Interval { lower, upper };
        assert!(iv.is_nonempty(), "interval endpoints out of order");
        iv
    }

    pub fn real_line() -> Self {
        Interval {
            lower: Bound::NegInf,
            upper: Bound::PosInf,
        }
    }

    pub fn unit() -> Self {
        Interval {
            lower: Bound::Finite(Rational::zero()),
            upper: Bound::Finite(Rational::one()),
        }
    }

    fn is_nonempty(&self) -> bool {
        match (&self.lower, &self.upper) {
            (Bound::Finite(a), Bound::Finite(b)) => a < b,
            (Bound::NegInf, Bound::NegInf) | (Bound::PosInf, Bound::PosInf) => false,
            (Bound::PosInf, _) | (_, Bound::NegInf) => false,
            _ => true,
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = match &self.lower {
            Bound::NegInf => true,
            Bound::Finite(a) => a < x,
            Bound::PosInf => false,
        };
        let below = match &self.upper {
            Bound::PosInf => true,
            Bound::Finite(b) => x < b,
            Bound::NegInf => false,
        };
        above && below
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        let above = match &self.lower {
            Bound::NegInf => true,
            Bound::Finite(a) => a.to_f64() < x,
            Bound::PosInf => false,
        };
        let below = match &self.upper {
            Bound::PosInf => true,
            Bound::Finite(b) => x < b.to_f64(),
            Bound::NegInf => false,
        };
        above && below
    }

    /// Canonical probe grid inside the interval, used for pointwise identity
    /// detection and default fixed-point searches.
    pub fn probe_grid(&self, count: usize) -> Vec<Rational> {
        let n = count.max(2) as i64;
        match (&self.lower, &self.upper) {
            (Bound::NegInf, Bound::PosInf) => {
                (0..n).map(|i| Rational::new(i - n / 2, 2)).collect()
            }
            (Bound::Finite(a), Bound::Finite(b)) => {
                let width = b - a;
                (0..n)
                    .map(|i| a + &(&width * &Rational::new(i + 1, n + 1)))
                    .collect()
            }
            (Bound::Finite(a), Bound::PosInf) => {
                (0..n).map(|i| a + &Rational::new(i + 1, 2)).collect()
            }
            (Bound::NegInf, Bound::Finite(b)) => {
                (0..n).map(|i| b - &Rational::new(i + 1, 2)).collect()
            }
            _ => unreachable!("empty interval"),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// Named invertible transfer map between intervals, evaluated numerically
/// within [`NUMERIC_TOL`] in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierMap {
    /// (0,1) -> R, x |-> ln(x / (1-x)).
    Logit,
    /// R -> (0,1), the inverse of `Logit`.
    Sigmoid,
}

impl CarrierMap {
    pub fn source(&self) -> Interval {
        match self {
            CarrierMap::Logit => Interval::unit(),
            CarrierMap::Sigmoid => Interval::real_line(),
        }
    }

    pub fn target(&self) -> Interval {
        match self {
            CarrierMap::Logit => Interval::real_line(),
            CarrierMap::Sigmoid => Interval::unit(),
        }
    }

    pub fn inverse(&self) -> CarrierMap {
        match self {
            CarrierMap::Logit => CarrierMap::Sigmoid,
            CarrierMap::Sigmoid => CarrierMap::Logit,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CarrierMap::Logit => (x / (1.0 - x)).ln(),
            CarrierMap::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn eval_inverse(&self, y: f64) -> f64 {
        self.inverse().eval(y)
    }
}

/// Exact or certified-numeric scalar value.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(Rational),
    Approx(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    /// Total comparison: exact when both sides are exact, otherwise numeric
    /// with equality inside [`NUMERIC_TOL`].
    pub fn compare(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                if (a - b).abs() <= NUMERIC_TOL {
                    Ordering::Equal
                } else if a < b {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    pub fn eq_within_tol(&self, other: &Scalar) -> bool {
        self.compare(other) == Ordering::Equal
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Exact(r)
    }
}

/// Increasing affine map `x -> a x + b` with positive rational slope; the
/// group `U` of the step-function universe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub a: Rational,
    pub b: Rational,
}

impl Affine {
    pub fn new(a: Rational, b: Rational) -> Self {
        assert!(a.is_positive(), "affine slope must be positive");
        Affine { a, b }
    }

    pub fn identity() -> Self {
        Affine {
            a: Rational::one(),
            b: Rational::zero(),
        }
    }

    pub fn shift(c: Rational) -> Self {
        Affine {
            a: Rational::one(),
            b: c,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &(&self.a * x) + &self.b
    }

    pub fn inverse(&self) -> Affine {
        let a = self.a.recip();
        let b = -&(&self.b * &a);
        Affine { a, b }
    }

    /// `self` after `other`: (self.compose(other))(x) = self(other(x)).
    pub fn compose(&self, other: &Affine) -> Affine {
        Affine {
            a: &self.a * &other.a,
            b: &(&self.a * &other.b) + &self.b,
        }
    }

    /// The unique increasing affine map sending `x1 -> y1` and `x2 -> y2`;
    /// `None` when the slope would not be positive.
    pub fn map_points(
        x1: &Rational,
        y1: &Rational,
        x2: &Rational,
        y2: &Rational,
    ) -> Option<Affine> {
        if x1 == x2 {
            return None;
        }
        let a = &(y2 - y1) / &(x2 - x1);
        if !a.is_positive() {
            return None;
        }
        let b = y1 - &(&a * x1);
        Some(Affine { a, b })
    }
}

impl From<Affine> for GroupElement {
    fn from(m: Affine) -> Self {
        GroupElement::Affine { a: m.a, b: m.b }
    }
}

/// Element of the homeomorphism group, tagged by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupElement {
    /// `x -> a x + b` on the whole line, `a > 0`.
    Affine { a: Rational, b: Rational },
    /// `x -> x^alpha` on (0,1), `alpha > 0`.
    Power { alpha: Rational },
    /// Composition `factors[0] o factors[1] o ...` over one carrier.
    Word { factors: Vec<GroupElement> },
    /// `via o base o via^{-1}` on the target interval of `via`.
    Conjugate {
        base: Box<GroupElement>,
        via: CarrierMap,
    },
}

/// Fixed-point set of a group element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixedPointReport {
    None,
    Singleton { point: String, exact: bool },
    IdentityEverywhere,
    /// Best-effort grid isolation for words; certified within [`NUMERIC_TOL`].
    FiniteSet { points: Vec<String>, exact: Vec<bool> },
}

impl FixedPointReport {
    fn singleton(s: Scalar) -> Self {
        match s {
            Scalar::Exact(r) => FixedPointReport::Singleton {
                point: r.to_string(),
                exact: true,
            },
            Scalar::Approx(x) => FixedPointReport::Singleton {
                point: format!("{x:.15e}"),
                exact: false,
            },
        }
    }

    /// All fixed points as exact rationals, when the report is exact and
    /// finite; used by the amalgamation builder.
    pub fn rational_points(&self) -> Option<Vec<Rational>> {
        match self {
            FixedPointReport::None => Some(Vec::new()),
            FixedPointReport::Singleton { point, exact: true } => Some(vec![point.parse().ok()?]),
            FixedPointReport::FiniteSet { points, exact } if exact.iter().all(|e| *e) => {
                points.iter().map(|p| p.parse().ok()).collect()
            }
            _ => None,
        }
    }
}

impl GroupElement {
    pub fn affine(a: i64, b: i64) -> Self {
        assert!(a > 0);
        GroupElement::Affine {
            a: Rational::integer(a),
            b: Rational::integer(b),
        }
    }

    pub fn affine_rat(a: Rational, b: Rational) -> Self {
        assert!(a.is_positive(), "affine slope must be positive");
        GroupElement::Affine { a, b }
    }

    pub fn power(alpha: Rational) -> Self {
        assert!(alpha.is_positive(), "power exponent must be positive");
        GroupElement::Power { alpha }
    }

    pub fn identity() -> Self {
        Affine::identity().into()
    }

    pub fn identity_on(carrier: &Interval) -> Self {
        if *carrier == Interval::unit() {
            GroupElement::Power {
                alpha: Rational::one(),
            }
        } else {
            GroupElement::identity()
        }
    }

    pub fn carrier(&self) -> Interval {
        match self {
            GroupElement::Affine { .. } => Interval::real_line(),
            GroupElement::Power { .. } => Interval::unit(),
            GroupElement::Word { factors } => factors
                .first()
                .map(|f| f.carrier())
                .unwrap_or_else(Interval::real_line),
            GroupElement::Conjugate { via, .. } => via.target(),
        }
    }

    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            GroupElement::Affine { a, .. } => {
                if a.is_positive() {
                    Ok(())
                } else {
                    Err(GroupError::Contract("affine slope must be positive".into()))
                }
            }
            GroupElement::Power { alpha } => {
                if alpha.is_positive() {
                    Ok(())
                } else {
                    Err(GroupError::Contract(
                        "power exponent must be positive".into(),
                    ))
                }
            }
            GroupElement::Word { factors } => {
                if factors.is_empty() {
                    return Err(GroupError::Contract("empty word".into()));
                }
                let carrier = factors[0].carrier();
                for f in factors {
                    f.validate()?;
                    if f.carrier() != carrier {
                        return Err(GroupError::CarrierMismatch(carrier, f.carrier()));
                    }
                }
                Ok(())
            }
            GroupElement::Conjugate { base, via } => {
                base.validate()?;
                if base.carrier() != via.source() {
                    return Err(GroupError::CarrierMismatch(base.carrier(), via.source()));
                }
                Ok(())
            }
        }
    }

    pub fn as_affine(&self) -> Option<Affine> {
        match self.simplify() {
            GroupElement::Affine { a, b } => Some(Affine { a, b }),
            _ => None,
        }
    }

    /// Evaluate at an exact rational; errors when the result cannot be
    /// certified exact (conjugates, power maps without rational roots).
    pub fn apply_exact(&self, x: &Rational) -> Result<Rational, GroupError> {
        if !self.carrier().contains(x) {
            return Err(GroupError::OutsideCarrier {
                x: x.to_string(),
                carrier: self.carrier(),
            });
        }
        match self {
            GroupElement::Affine { a, b } => Ok(&(a * x) + b),
            GroupElement::Power { alpha } => power_apply_exact(alpha, x).ok_or_else(|| {
                GroupError::NotExact(format!("{x}^{alpha} has no exact rational value"))
            }),
            GroupElement::Word { factors } => {
                let mut cur = x.clone();
                for f in factors.iter().rev() {
                    cur = f.apply_exact(&cur)?;
                }
                Ok(cur)
            }
            GroupElement::Conjugate { .. } => Err(GroupError::NotExact(
                "conjugate elements evaluate numerically".into(),
            )),
        }
    }

    pub fn apply_f64(&self, x: f64) -> Result<f64, GroupError> {
        if !self.carrier().contains_f64(x) {
            return Err(GroupError::OutsideCarrier {
                x: format!("{x}"),
                carrier: self.carrier(),
            });
        }
        Ok(self.apply_f64_unchecked(x))
    }

    fn apply_f64_unchecked(&self, x: f64) -> f64 {
        match self {
            GroupElement::Affine { a, b } => a.to_f64() * x + b.to_f64(),
            GroupElement::Power { alpha } => x.powf(alpha.to_f64()),
            GroupElement::Word { factors } => factors
                .iter()
                .rev()
                .fold(x, |cur, f| f.apply_f64_unchecked(cur)),
            GroupElement::Conjugate { base, via } => {
                via.eval(base.apply_f64_unchecked(via.eval_inverse(x)))
            }
        }
    }

    /// Evaluate, staying exact whenever the element and input permit.
    pub fn apply(&self, x: &Scalar) -> Result<Scalar, GroupError> {
        match x {
            Scalar::Exact(r) => match self.apply_exact(r) {
                Ok(v) => Ok(Scalar::Exact(v)),
                Err(GroupError::NotExact(_)) => self.apply_f64(r.to_f64()).map(Scalar::Approx),
                Err(e) => Err(e),
            },
            Scalar::Approx(v) => self.apply_f64(*v).map(Scalar::Approx),
        }
    }

    /// `self o other`; affine and power pairs simplify in kind, mixed kinds
    /// form a word over the common carrier.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        if self.carrier() != other.carrier() {
            return Err(GroupError::CarrierMismatch(self.carrier(), other.carrier()));
        }
        let mut factors = Vec::new();
        flatten_into(self, &mut factors);
        flatten_into(other, &mut factors);
        Ok(normalize_word(factors, &self.carrier()))
    }

    pub fn invert(&self) -> GroupElement {
        match self {
            GroupElement::Affine { a, b } => Affine {
                a: a.clone(),
                b: b.clone(),
            }
            .inverse()
            .into(),
            GroupElement::Power { alpha } => GroupElement::Power {
                alpha: alpha.recip(),
            },
            GroupElement::Word { factors } => {
                let inverted: Vec<GroupElement> = factors.iter().rev().map(|f| f.invert()).collect();
                normalize_word(inverted, &self.carrier())
            }
            GroupElement::Conjugate { base, via } => GroupElement::Conjugate {
                base: Box::new(base.invert()),
                via: *via,
            },
        }
    }

    /// Flatten nested words, drop identity factors, and fold single-kind
    /// words; mixed-kind words are left as words.
    pub fn simplify(&self) -> GroupElement {
        match self {
            GroupElement::Word { factors } => {
                let mut flat = Vec::new();
                for f in factors {
                    flatten_into(&f.simplify(), &mut flat);
                }
                normalize_word(flat, &self.carrier())
            }
            GroupElement::Conjugate { base, via } => {
                let base = base.simplify();
                if base == GroupElement::identity_on(&via.source()) {
                    GroupElement::identity_on(&via.target())
                } else {
                    GroupElement::Conjugate {
                        base: Box::new(base),
                        via: *via,
                    }
                }
            }
            other => other.clone(),
        }
    }

    /// Identity test: exact for affine and power kinds, pointwise on the
    /// canonical probe grid for mixed words and conjugates.
    pub fn is_identity(&self) -> bool {
        match self.simplify() {
            GroupElement::Affine { a, b } => a.is_one() && b.is_zero(),
            GroupElement::Power { alpha } => alpha.is_one(),
            g => {
                let carrier = g.carrier();
                carrier
                    .probe_grid(IDENTITY_PROBES)
                    .iter()
                    .all(|x| match g.apply_exact(x) {
                        Ok(v) => v == *x,
                        Err(_) => match g.apply_f64(x.to_f64()) {
                            Ok(v) => (v - x.to_f64()).abs() <= NUMERIC_TOL,
                            Err(_) => false,
                        },
                    })
            }
        }
    }

    /// Fixed-point set; exact for affine and power kinds, structural for
    /// conjugates, grid-plus-bisection (best effort) for mixed words.
    pub fn fixed_points(&self) -> FixedPointReport {
        let grid = self.carrier().probe_grid(33);
        self.fixed_points_on_grid(&grid)
    }

    pub fn fixed_points_on_grid(&self, grid: &[Rational]) -> FixedPointReport {
        match self.simplify() {
            GroupElement::Affine { a, b } => {
                if a.is_one() {
                    if b.is_zero() {
                        FixedPointReport::IdentityEverywhere
                    } else {
                        FixedPointReport::None
                    }
                } else {
                    let p = &b / &(&Rational::one() - &a);
                    FixedPointReport::singleton(Scalar::Exact(p))
                }
            }
            GroupElement::Power { alpha } => {
                if alpha.is_one() {
                    FixedPointReport::IdentityEverywhere
                } else {
                    FixedPointReport::None
                }
            }
            GroupElement::Conjugate { base, via } => match base.fixed_points() {
                FixedPointReport::None => FixedPointReport::None,
                FixedPointReport::IdentityEverywhere => FixedPointReport::IdentityEverywhere,
                FixedPointReport::Singleton { point, .. } => {
                    let y = via.eval(parse_point(&point));
                    FixedPointReport::singleton(Scalar::Approx(y))
                }
                FixedPointReport::FiniteSet { points, .. } => {
                    let mapped: Vec<String> = points
                        .iter()
                        .map(|p| format!("{:.15e}", via.eval(parse_point(p))))
                        .collect();
                    let exact = vec![false; mapped.len()];
                    FixedPointReport::FiniteSet {
                        points: mapped,
                        exact,
                    }
                }
            },
            g => {
                if g.is_identity() {
                    return FixedPointReport::IdentityEverywhere;
                }
                word_fixed_points(&g, grid)
            }
        }
    }
}

fn parse_point(s: &str) -> f64 {
    s.parse::<Rational>()
        .map(|r| r.to_f64())
        .unwrap_or_else(|_| s.parse().unwrap_or(f64::NAN))
}

fn power_apply_exact(alpha: &Rational, x: &Rational) -> Option<Rational> {
    use num_traits::ToPrimitive;
    let p = alpha.numer().to_u32()?;
    let q = alpha.denom().to_u32()?;
    if p > 1024 || q > 64 {
        return None;
    }
    x.pow(p as i32).nth_root_exact(q)
}

fn flatten_into(g: &GroupElement, out: &mut Vec<GroupElement>) {
    match g {
        GroupElement::Word { factors } => {
            for f in factors {
                flatten_into(f, out);
            }
        }
        other => out.push(other.clone()),
    }
}

fn is_trivial_factor(g: &GroupElement) -> bool {
    match g {
        GroupElement::Affine { a, b } => a.is_one() && b.is_zero(),
        GroupElement::Power { alpha } => alpha.is_one(),
        _ => false,
    }
}

/// Word normalization: identities dropped, single-kind words folded,
/// singletons unwrapped. Mixed-kind words are preserved as written.
fn normalize_word(factors: Vec<GroupElement>, carrier: &Interval) -> GroupElement {
    let factors: Vec<GroupElement> = factors
        .into_iter()
        .filter(|f| !is_trivial_factor(f))
        .collect();
    if factors.is_empty() {
        return GroupElement::identity_on(carrier);
    }
    if factors.len() == 1 {
        return factors.into_iter().next().unwrap();
    }
    if factors
        .iter()
        .all(|f| matches!(f, GroupElement::Affine { .. }))
    {
        let folded = factors
            .iter()
            .rev()
            .fold(Affine::identity(), |acc, f| match f {
                GroupElement::Affine { a, b } => Affine {
                    a: a.clone(),
                    b: b.clone(),
                }
                .compose(&acc),
                _ => unreachable!(),
            });
        return folded.into();
    }
    if factors
        .iter()
        .all(|f| matches!(f, GroupElement::Power { .. }))
    {
        let alpha = factors.iter().fold(Rational::one(), |acc, f| match f {
            GroupElement::Power { alpha } => &acc * alpha,
            _ => unreachable!(),
        });
        return GroupElement::Power { alpha };
    }
    GroupElement::Word { factors }
}

fn word_fixed_points(g: &GroupElement, grid: &[Rational]) -> FixedPointReport {
    let mut points: Vec<Scalar> = Vec::new();
    let mut values: Vec<(f64, f64)> = Vec::new();
    for x in grid {
        // Exact hit when the whole word evaluates exactly.
        if let Ok(v) = g.apply_exact(x) {
            if v == *x {
                points.push(Scalar::Exact(x.clone()));
            }
        }
        if let Ok(v) = g.apply_f64(x.to_f64()) {
            values.push((x.to_f64(), v - x.to_f64()));
        }
    }
    for pair in values.windows(2) {
        let (x0, d0) = pair[0];
        let (x1, d1) = pair[1];
        if d0 == 0.0 || d1 == 0.0 {
            continue; // grid roots were collected in the exact pass
        }
        if d0.signum() != d1.signum() {
            if let Some(root) = bisect_root(g, x0, x1) {
                points.push(Scalar::Approx(root));
            }
        }
    }
    points.sort_by(|a, b| a.to_f64().partial_cmp(&b.to_f64()).unwrap());
    points.dedup_by(|a, b| (a.to_f64() - b.to_f64()).abs() <= 1e-9);
    match points.len() {
        0 => FixedPointReport::None,
        1 => FixedPointReport::singleton(points.pop().unwrap()),
        _ => {
            let exact = points.iter().map(|p| p.as_exact().is_some()).collect();
            let rendered = points
                .iter()
                .map(|p| match p {
                    Scalar::Exact(r) => r.to_string(),
                    Scalar::Approx(x) => format!("{x:.15e}"),
                })
                .collect();
            FixedPointReport::FiniteSet {
                points: rendered,
                exact,
            }
        }
    }
}

fn bisect_root(g: &GroupElement, mut lo: f64, mut hi: f64) -> Option<f64> {
    let f = |x: f64| g.apply_f64(x).map(|v| v - x).unwrap_or(f64::NAN);
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= NUMERIC_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if !fmid.is_finite() {
            return None;
        }
        if fmid == 0.0 {
            return Some(mid);
        }
        if flo.signum() == fmid.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `g o h o g^{-1} o h^{-1}`; for affine inputs the result is affine with
/// slope exactly one.
pub fn commutator(g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
    let left = g.compose(h)?;
    let right = g.invert().compose(&h.invert())?;
    left.compose(&right)
}

/// One-point comparison of `g` and `h` at `x0`. For families acting freely
/// this does not depend on the basepoint; for other families the caller is
/// expected to surface the one-point caveat.
pub fn holder_compare(
    g: &GroupElement,
    h: &GroupElement,
    x0: &Rational,
) -> Result<Ordering, GroupError> {
    let gv = g.apply(&Scalar::Exact(x0.clone()))?;
    let hv = h.apply(&Scalar::Exact(x0.clone()))?;
    Ok(gv.compare(&hv))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ArchimedeanResult {
    Found(u32),
    Exhausted,
}

/// Least `n <= max_n` with `psi(x0) < phi^n(x0)`, witnessing the Archimedean
/// property along the orbit of `x0`. Requires `x0 < phi(x0)` and
/// `x0 < psi(x0)`.
pub fn archimedean_witness(
    phi: &GroupElement,
    psi: &GroupElement,
    x0: &Rational,
    max_n: u32,
) -> Result<ArchimedeanResult, GroupError> {
    let x0s = Scalar::Exact(x0.clone());
    let phix = phi.apply(&x0s)?;
    if phix.compare(&x0s) != Ordering::Greater {
        return Err(GroupError::Contract(
            "archimedean witness needs identity < phi at x0".into(),
        ));
    }
    let psix = psi.apply(&x0s)?;
    if psix.compare(&x0s) != Ordering::Greater {
        return Err(GroupError::Contract(
            "archimedean witness needs identity < psi at x0".into(),
        ));
    }
    let mut cur = x0s;
    for n in 1..=max_n {
        cur = phi.apply(&cur)?;
        if psix.compare(&cur) == Ordering::Less {
            return Ok(ArchimedeanResult::Found(n));
        }
    }
    Ok(ArchimedeanResult::Exhausted)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FreeActionReport {
    Ok,
    Counterexample { index: usize, point: Rational },
}

/// Checks that no non-identity member of `family` fixes any sampled point.
pub fn verify_free_action(family: &[GroupElement], sample: &[Rational]) -> FreeActionReport {
    for (index, g) in family.iter().enumerate() {
        if g.is_identity() {
            continue;
        }
        let carrier = g.carrier();
        for p in sample {
            if !carrier.contains(p) {
                continue;
            }
            let fixed = match g.apply_exact(p) {
                Ok(v) => v == *p,
                Err(_) => match g.apply_f64(p.to_f64()) {
                    Ok(v) => (v - p.to_f64()).abs() <= NUMERIC_TOL,
                    Err(_) => false,
                },
            };
            if fixed {
                return FreeActionReport::Counterexample {
                    index,
                    point: p.clone(),
                };
            }
        }
    }
    FreeActionReport::Ok
}

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("tau fixes the starting point; tau(x1) must differ from x1")]
    DegenerateTau,
    #[error("hypothesis fails at index {index}: {reason}")]
    HypothesisFailed { index: usize, reason: String },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Exact fixed-point propagation core over closures; see
/// [`fixed_point_propagation`] for the group-element wrapper.
pub fn propagate_fixed_points_with<P, T>(
    phi: P,
    tau: T,
    x1: &Rational,
    steps: usize,
) -> Result<Vec<Rational>, PropagationError>
where
    P: Fn(&Rational) -> Result<Rational, GroupError>,
    T: Fn(&Rational) -> Result<Rational, GroupError>,
{
    let x2 = tau(x1)?;
    if x2 == *x1 {
        return Err(PropagationError::DegenerateTau);
    }
    let mut points = vec![x1.clone()];
    let mut cur = x1.clone();
    for index in 0..=steps {
        if index > 0 {
            cur = tau(&cur)?;
            points.push(cur.clone());
        }
        let image = phi(&cur)?;
        if image != cur {
            return Err(PropagationError::HypothesisFailed {
                index,
                reason: format!("phi({cur}) = {image} is not fixed"),
            });
        }
    }
    points.truncate(steps + 1);
    Ok(points)
}

/// Propagates the fixed points of `phi` along the orbit of `tau`, certifying
/// each generated point exactly: with `phi` and `tau` commuting and `phi`
/// fixing `x1` and `tau(x1)`, every `tau^n(x1)` is again fixed — the
/// finite-depth shadow of the infinite-fixed-point contradiction.
pub fn fixed_point_propagation(
    phi: &GroupElement,
    tau: &GroupElement,
    x1: &Rational,
    steps: usize,
) -> Result<Vec<Rational>, PropagationError> {
    if phi.carrier() != tau.carrier() {
        return Err(GroupError::CarrierMismatch(phi.carrier(), tau.carrier()).into());
    }
    let comm = commutator(tau, phi)?;
    if !comm.is_identity() {
        return Err(PropagationError::HypothesisFailed {
            index: 0,
            reason: "commutator(tau, phi) is not the identity on the probe grid".into(),
        });
    }
    propagate_fixed_points_with(|x| phi.apply_exact(x), |x| tau.apply_exact(x), x1, steps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum IterateFixedPointsReport {
    Ok,
    Counterexample { point: Rational },
}

/// `phi^n` by repeated composition; `n` may be negative.
pub fn element_pow(phi: &GroupElement, n: i32) -> Result<GroupElement, GroupError> {
    let base = if n >= 0 { phi.clone() } else { phi.invert() };
    let mut acc = GroupElement::identity_on(&phi.carrier());
    for _ in 0..n.unsigned_abs() {
        acc = acc.compose(&base)?;
    }
    Ok(acc)
}

/// Checks on the sample that `phi^n` fixes a point iff `phi` does.
pub fn iterate_fixed_points_equal(
    phi: &GroupElement,
    n: i32,
    sample: &[Rational],
) -> Result<IterateFixedPointsReport, GroupError> {
    if n == 0 {
        return Err(GroupError::Contract(
            "iterate exponent must be nonzero".into(),
        ));
    }
    let pow = element_pow(phi, n)?;
    let fixes = |g: &GroupElement, x: &Rational| -> Result<bool, GroupError> {
        match g.apply_exact(x) {
            Ok(v) => Ok(v == *x),
            Err(GroupError::NotExact(_)) => {
                Ok((g.apply_f64(x.to_f64())? - x.to_f64()).abs() <= NUMERIC_TOL)
            }
            Err(e) => Err(e),
        }
    };
    for x in sample {
        if !phi.carrier().contains(x) {
            continue;
        }
        if fixes(phi, x)? != fixes(&pow, x)? {
            return Ok(IterateFixedPointsReport::Counterexample { point: x.clone() });
        }
    }
    Ok(IterateFixedPointsReport::Ok)
}

/// Transfer `g` through `via`: the element `via o g o via^{-1}` on the target
/// interval. The identity conjugates to the identity.
pub fn conjugate(g: &GroupElement, via: CarrierMap) -> Result<GroupElement, GroupError> {
    if g.carrier() != via.source() {
        return Err(GroupError::CarrierMismatch(g.carrier(), via.source()));
    }
    if g.is_identity() {
        return Ok(GroupElement::identity_on(&via.target()));
    }
    Ok(GroupElement::Conjugate {
        base: Box::new(g.clone()),
        via,
    })
}

/// Compact element syntax used by the CLI: `affine:a,b` and `power:alpha`
/// with rational literals; other kinds travel as JSON.
pub fn parse_compact(s: &str) -> Option<GroupElement> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("affine:") {
        let (a, b) = rest.split_once(',')?;
        let a: Rational = a.trim().parse().ok()?;
        let b: Rational = b.trim().parse().ok()?;
        if !a.is_positive() {
            return None;
        }
        return Some(GroupElement::Affine { a, b });
    }
    if let Some(rest) = s.strip_prefix("power:") {
        let alpha: Rational = rest.trim().parse().ok()?;
        if !alpha.is_positive() {
            return None;
        }
        return Some(GroupElement::Power { alpha });
    }
    None
}

pub fn to_compact(g: &GroupElement) -> Option<String> {
    fn short(r: &Rational) -> String {
        if r.is_integer() {
            r.numer().to_string()
        } else {
            r.to_string()
        }
    }
    match g {
        GroupElement::Affine { a, b } => Some(format!("affine:{},{}", short(a), short(b))),
        GroupElement::Power { alpha } => Some(format!("power:{}", short(alpha))),
        _ => None,
    }
}
